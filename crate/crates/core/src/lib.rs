//! Frequency-domain image fusion with adaptive ring-shaped Gaussian masks.
//!
//! The library enhances a reference image by blending it with
//! detail-enhanced variants in the Fourier domain. A bank of ring-shaped
//! Gaussian basis masks partitions the frequency plane into smooth radial
//! bands; per-source coefficients combine the bands into softmax-normalized
//! masks that pick, bin by bin, how much of each source's spectrum enters
//! the fused result. The coefficients are chosen by direct gradient-based
//! minimization of a composite objective that trades reconstruction
//! fidelity against a set of differentiable sharpness proxies.
//!
//! Modules follow the pipeline:
//!
//! - [`image`] / [`spectrum`]: real images and their unitary 2-D DFTs
//! - [`masks`]: distance grid, basis bank, coefficients, mask composition
//! - [`mixup`]: frequency-domain fusion and per-source decomposition
//! - [`variants`]: bicubic multi-scale detail-enhanced variant generation
//! - [`objective`]: reconstruction loss, sharpness proxies, analytic
//!   coefficient gradients
//! - [`optim`]: per-image adaptive-moment coefficient optimization and
//!   coefficient file persistence
//! - [`metrics`]: PSNR, SSIM, per-band spectral energy
//! - [`corpus`]: deterministic synthetic test images
//! - [`reference`]: naive direct-summation implementations for cross-checks

pub mod corpus;
pub mod error;
pub mod image;
pub mod masks;
pub mod metrics;
pub mod mixup;
pub mod objective;
pub mod optim;
pub mod reference;
pub mod spectrum;
pub mod variants;

pub use error::{Error, Result};
pub use image::Image;
pub use masks::{
    compose_masks, frequency_distance_grid, make_basis_bank, BasisBank, Coefficients,
    DistanceGrid, MaskSet,
};
pub use mixup::{decompose_contributions, frequency_mixup};
pub use objective::{
    composite_loss, loss_gradient_wrt_coeffs, perceptual_loss, perceptual_proxy_score,
    recon_loss, CoeffGradient, LossReport, ProxySpec,
};
pub use optim::{
    lambda_sweep, optimize_coefficients, CoefficientFile, OptimizationTrace, OptimizerConfig,
};
pub use spectrum::{forward_spectrum, inverse_spectrum, FftEngine, Spectrum};
pub use variants::{make_variant_set, resample_bicubic, unsharp_mask, Enhancer, VariantConfig};
