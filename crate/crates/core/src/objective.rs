//! Composite objective: reconstruction loss, sharpness-proxy perceptual
//! loss, and the analytic gradient of their blend with respect to the mask
//! coefficients.
//!
//! The perceptual term substitutes native differentiable proxies for learned
//! no-reference quality models: a high-frequency spectral energy ratio, the
//! Tenengrad measure (mean squared Sobel gradient magnitude), and the
//! variance of the 3x3 Laplacian response. Each proxy is affinely rescaled
//! so typical textured images score roughly in [0, 1], and the perceptual
//! loss is the negated weighted sum, so lower means sharper.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::masks::{
    compose_scores_into, frequency_distance_grid, softmax_rows_in_place, BasisBank, Coefficients,
};
use crate::spectrum::{FftEngine, Spectrum};

/// Fraction of `d_max` above which a bin counts as high-frequency.
pub const HF_RADIUS_FRACTION: f64 = 0.25;

/// Default rescaling constants: each proxy is normalized by its theoretical
/// maximum over unit-range images, so every normalized score lies in [0, 1]
/// with 1 meaning extremal sharpness. The energy ratio is bounded by 1 by
/// construction; squared Sobel magnitude is bounded by 16 + 16 = 32; the
/// 4-neighbour Laplacian response is bounded by 8, its variance by 16.
pub const HF_RATIO_SCALE: f64 = 1.0;
pub const TENENGRAD_SCALE: f64 = 1.0 / 32.0;
pub const LAPLACIAN_VARIANCE_SCALE: f64 = 1.0 / 16.0;

/// Built-in sharpness proxies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxyKind {
    /// Fraction of spectral energy beyond `HF_RADIUS_FRACTION * d_max`.
    HighFrequencyEnergyRatio,
    /// Mean squared Sobel gradient magnitude over the valid interior.
    Tenengrad,
    /// Variance of the 4-neighbour Laplacian response over the interior.
    LaplacianVariance,
}

impl ProxyKind {
    pub fn id(&self) -> &'static str {
        match self {
            ProxyKind::HighFrequencyEnergyRatio => "hf-energy-ratio",
            ProxyKind::Tenengrad => "tenengrad",
            ProxyKind::LaplacianVariance => "laplacian-variance",
        }
    }
}

/// One weighted proxy with its affine normalization:
/// `normalized = (raw - offset) * scale`.
#[derive(Debug, Clone)]
pub struct ProxyTerm {
    pub kind: ProxyKind,
    pub weight: f64,
    pub offset: f64,
    pub scale: f64,
}

/// Weighted set of sharpness proxies entering the perceptual loss.
#[derive(Debug, Clone)]
pub struct ProxySpec {
    terms: Vec<ProxyTerm>,
}

impl ProxySpec {
    pub fn new(terms: Vec<ProxyTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("proxy list is empty".into()));
        }
        for t in &terms {
            if !t.weight.is_finite() || t.weight < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "proxy weight must be finite and non-negative, got {}",
                    t.weight
                )));
            }
            if !t.offset.is_finite() || !t.scale.is_finite() {
                return Err(Error::InvalidParameter(
                    "proxy normalization constants must be finite".into(),
                ));
            }
        }
        if !terms.iter().any(|t| t.weight > 0.0) {
            return Err(Error::InvalidParameter(
                "at least one proxy weight must be positive".into(),
            ));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[ProxyTerm] {
        &self.terms
    }

    fn uses(&self, kind: ProxyKind) -> bool {
        self.terms.iter().any(|t| t.kind == kind && t.weight != 0.0)
    }
}

impl Default for ProxySpec {
    fn default() -> Self {
        Self {
            terms: vec![
                ProxyTerm {
                    kind: ProxyKind::HighFrequencyEnergyRatio,
                    weight: 1.0,
                    offset: 0.0,
                    scale: HF_RATIO_SCALE,
                },
                ProxyTerm {
                    kind: ProxyKind::Tenengrad,
                    weight: 1.0,
                    offset: 0.0,
                    scale: TENENGRAD_SCALE,
                },
                ProxyTerm {
                    kind: ProxyKind::LaplacianVariance,
                    weight: 1.0,
                    offset: 0.0,
                    scale: LAPLACIAN_VARIANCE_SCALE,
                },
            ],
        }
    }
}

/// Loss values for one fused image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub recon: f64,
    pub percep: f64,
    pub composite: f64,
    pub lambda: f64,
}

/// Gradient of the composite loss with respect to every coefficient.
#[derive(Debug, Clone)]
pub struct CoeffGradient {
    n_sources: usize,
    bands: usize,
    g: Vec<f64>,
}

impl CoeffGradient {
    pub fn zeros(n_sources: usize, bands: usize) -> Self {
        Self {
            n_sources,
            bands,
            g: vec![0.0; n_sources * bands],
        }
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.g[i * self.bands..(i + 1) * self.bands]
    }

    pub fn entries(&self) -> &[f64] {
        &self.g
    }

    pub fn get(&self, i: usize, b: usize) -> f64 {
        self.g[i * self.bands + b]
    }

    pub fn max_abs(&self) -> f64 {
        self.g.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Mean squared error over all pixels and channels.
pub fn recon_loss(fused: &Image, original: &Image) -> Result<f64> {
    if !fused.same_shape(original) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            fused.height(),
            fused.width(),
            fused.channels(),
            original.height(),
            original.width(),
            original.channels()
        )));
    }
    Ok(mse(fused.data(), original.data()))
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    sum / a.len() as f64
}

/// Weighted sum of normalized proxy scores; higher means sharper. The image
/// is clamped to `[0, 1]` before evaluation.
pub fn perceptual_proxy_score(img: &Image, spec: &ProxySpec) -> Result<f64> {
    if spec.terms.is_empty() {
        return Err(Error::InvalidParameter("proxy list is empty".into()));
    }
    let u = img.clamped();
    let u_spec = if spec.uses(ProxyKind::HighFrequencyEnergyRatio) {
        Some(crate::spectrum::forward_spectrum(&u))
    } else {
        None
    };
    let indicator = if u_spec.is_some() {
        Some(hf_indicator(img.height(), img.width())?)
    } else {
        None
    };
    let mut score = 0.0;
    for t in &spec.terms {
        let raw = match t.kind {
            ProxyKind::HighFrequencyEnergyRatio => {
                hf_ratio(u_spec.as_ref().unwrap(), indicator.as_ref().unwrap()).2
            }
            ProxyKind::Tenengrad => tenengrad_raw(&u),
            ProxyKind::LaplacianVariance => laplacian_variance_raw(&u).0,
        };
        score += t.weight * (raw - t.offset) * t.scale;
    }
    Ok(score)
}

/// Negated proxy score (Lower is sharper), the perceptual loss term.
pub fn perceptual_loss(img: &Image, spec: &ProxySpec) -> Result<f64> {
    Ok(-perceptual_proxy_score(img, spec)?)
}

/// Blended loss `(1 - lambda) * recon + lambda * percep`.
pub fn composite_loss(
    fused: &Image,
    original: &Image,
    lambda: f64,
    spec: &ProxySpec,
) -> Result<LossReport> {
    validate_lambda(lambda)?;
    let recon = recon_loss(fused, original)?;
    let percep = perceptual_loss(fused, spec)?;
    Ok(LossReport {
        recon,
        percep,
        composite: (1.0 - lambda) * recon + lambda * percep,
        lambda,
    })
}

pub(crate) fn validate_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Analytic gradient of the composite loss with respect to the mask
/// coefficients, assembled by the chain rule through the inverse transform,
/// the per-bin softmax, and the basis contraction.
pub fn loss_gradient_wrt_coeffs(
    images: &[Image],
    coeffs: &Coefficients,
    bank: &BasisBank,
    lambda: f64,
    spec: &ProxySpec,
) -> Result<CoeffGradient> {
    let mut objective = Objective::new(images, bank, lambda, spec)?;
    let mut grad = CoeffGradient::zeros(coeffs.n_sources(), coeffs.bands());
    objective.eval(coeffs, Some(&mut grad))?;
    Ok(grad)
}

/// Indicator plane: 1.0 where the radial frequency exceeds
/// `HF_RADIUS_FRACTION * d_max`.
fn hf_indicator(height: usize, width: usize) -> Result<Vec<f64>> {
    let grid = frequency_distance_grid(height, width)?;
    let threshold = HF_RADIUS_FRACTION * grid.d_max();
    Ok(grid
        .values()
        .iter()
        .map(|&d| if d > threshold { 1.0 } else { 0.0 })
        .collect())
}

/// Returns `(total energy, high-band energy, ratio)` summed over channels.
fn hf_ratio(spec: &Spectrum, indicator: &[f64]) -> (f64, f64, f64) {
    let n = spec.plane_len();
    let mut total = 0.0;
    let mut high = 0.0;
    for c in 0..spec.channels() {
        for (z, &ind) in spec.channel(c).iter().zip(&indicator[..n]) {
            let e = z.norm_sqr();
            total += e;
            high += ind * e;
        }
    }
    let ratio = if total > 0.0 { high / total } else { 0.0 };
    (total, high, ratio)
}

/// Dot product with four independent accumulators so the reduction
/// vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut chunks_a = a.chunks_exact(4);
    let mut chunks_b = b.chunks_exact(4);
    for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (&x, &y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn interior(img: &Image) -> Option<(usize, usize)> {
    if img.height() < 3 || img.width() < 3 {
        None
    } else {
        Some((img.height() - 2, img.width() - 2))
    }
}

#[inline]
fn sobel_at(r0: &[f64], r1: &[f64], r2: &[f64], q: usize) -> (f64, f64) {
    let gx = (r0[q + 2] - r0[q]) + 2.0 * (r1[q + 2] - r1[q]) + (r2[q + 2] - r2[q]);
    let gy = (r2[q] + 2.0 * r2[q + 1] + r2[q + 2]) - (r0[q] + 2.0 * r0[q + 1] + r0[q + 2]);
    (gx, gy)
}

#[inline]
fn laplacian_at(r0: &[f64], r1: &[f64], r2: &[f64], q: usize) -> f64 {
    r1[q] + r0[q + 1] + r1[q + 2] + r2[q + 1] - 4.0 * r1[q + 1]
}

/// Mean squared Sobel gradient magnitude over the valid interior; images
/// thinner than 3 pixels score 0.
fn tenengrad_raw(u: &Image) -> f64 {
    let Some((ih, iw)) = interior(u) else {
        return 0.0;
    };
    let w = u.width();
    let count = (ih * iw * u.channels()) as f64;
    let mut sum = 0.0;
    for c in 0..u.channels() {
        let plane = u.channel(c);
        for r in 0..ih {
            let r0 = &plane[r * w..r * w + w];
            let r1 = &plane[(r + 1) * w..(r + 1) * w + w];
            let r2 = &plane[(r + 2) * w..(r + 2) * w + w];
            for q in 0..iw {
                let (gx, gy) = sobel_at(r0, r1, r2, q);
                sum += gx * gx + gy * gy;
            }
        }
    }
    sum / count
}

/// Adds `factor * d(tenengrad)/du` into `acc` (planar layout of `u`).
fn tenengrad_backprop(u: &Image, factor: f64, acc: &mut [f64]) {
    let Some((ih, iw)) = interior(u) else {
        return;
    };
    let w = u.width();
    let n = u.plane_len();
    let coef = factor * 2.0 / (ih * iw * u.channels()) as f64;
    for c in 0..u.channels() {
        let plane = u.channel(c);
        let out = &mut acc[c * n..(c + 1) * n];
        for r in 0..ih {
            let r0 = &plane[r * w..r * w + w];
            let r1 = &plane[(r + 1) * w..(r + 1) * w + w];
            let r2 = &plane[(r + 2) * w..(r + 2) * w + w];
            for q in 0..iw {
                let (gx, gy) = sobel_at(r0, r1, r2, q);
                let cx = coef * gx;
                let cy = coef * gy;
                // transpose of the two stencils, row by row
                out[r * w + q] += -cx - cy;
                out[r * w + q + 1] += -2.0 * cy;
                out[r * w + q + 2] += cx - cy;
                out[(r + 1) * w + q] += -2.0 * cx;
                out[(r + 1) * w + q + 2] += 2.0 * cx;
                out[(r + 2) * w + q] += -cx + cy;
                out[(r + 2) * w + q + 1] += 2.0 * cy;
                out[(r + 2) * w + q + 2] += cx + cy;
            }
        }
    }
}

/// Returns `(variance, mean)` of the Laplacian response pooled over the
/// interior of all channels.
fn laplacian_variance_raw(u: &Image) -> (f64, f64) {
    let Some((ih, iw)) = interior(u) else {
        return (0.0, 0.0);
    };
    let w = u.width();
    let count = (ih * iw * u.channels()) as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for c in 0..u.channels() {
        let plane = u.channel(c);
        for r in 0..ih {
            let r0 = &plane[r * w..r * w + w];
            let r1 = &plane[(r + 1) * w..(r + 1) * w + w];
            let r2 = &plane[(r + 2) * w..(r + 2) * w + w];
            for q in 0..iw {
                let resp = laplacian_at(r0, r1, r2, q);
                sum += resp;
                sum_sq += resp * resp;
            }
        }
    }
    let mean = sum / count;
    (sum_sq / count - mean * mean, mean)
}

/// Adds `factor * d(laplacian variance)/du` into `acc`; `mean` is the
/// response mean already computed by [`laplacian_variance_raw`].
fn laplacian_variance_backprop(u: &Image, mean: f64, factor: f64, acc: &mut [f64]) {
    let Some((ih, iw)) = interior(u) else {
        return;
    };
    let w = u.width();
    let n = u.plane_len();
    let coef = factor * 2.0 / (ih * iw * u.channels()) as f64;
    for c in 0..u.channels() {
        let plane = u.channel(c);
        let out = &mut acc[c * n..(c + 1) * n];
        for r in 0..ih {
            let r0 = &plane[r * w..r * w + w];
            let r1 = &plane[(r + 1) * w..(r + 1) * w + w];
            let r2 = &plane[(r + 2) * w..(r + 2) * w + w];
            for q in 0..iw {
                let t = coef * (laplacian_at(r0, r1, r2, q) - mean);
                out[r * w + q + 1] += t;
                out[(r + 1) * w + q] += t;
                out[(r + 1) * w + q + 1] += -4.0 * t;
                out[(r + 1) * w + q + 2] += t;
                out[(r + 2) * w + q + 1] += t;
            }
        }
    }
}

/// Reusable loss-and-gradient evaluator over a fixed image set.
///
/// Source spectra, FFT plans, the high-frequency indicator, and all
/// per-step work buffers are cached so the optimizer pays only for the
/// coefficient-dependent arithmetic each step.
pub(crate) struct Objective<'a> {
    images: &'a [Image],
    bank: &'a BasisBank,
    lambda: f64,
    proxy: &'a ProxySpec,
    engine: FftEngine,
    spectra: Vec<Spectrum>,
    hf_ind: Vec<f64>,
    // scratch, sized at construction
    masks: Vec<f64>,
    mask_adj: Vec<f64>,
    g_y: Vec<Complex64>,
    spatial: Vec<f64>,
    plane_buf: Vec<Complex64>,
    fused_spec: Spectrum,
}

impl<'a> Objective<'a> {
    pub fn new(
        images: &'a [Image],
        bank: &'a BasisBank,
        lambda: f64,
        proxy: &'a ProxySpec,
    ) -> Result<Self> {
        validate_lambda(lambda)?;
        let first = images
            .first()
            .ok_or_else(|| Error::InvalidParameter("objective needs at least one image".into()))?;
        for img in images {
            if !img.same_shape(first) {
                return Err(Error::ShapeMismatch(
                    "all source images must share dimensions".into(),
                ));
            }
        }
        if bank.height() != first.height() || bank.width() != first.width() {
            return Err(Error::ShapeMismatch(format!(
                "basis bank is {}x{} but images are {}x{}",
                bank.height(),
                bank.width(),
                first.height(),
                first.width()
            )));
        }
        if proxy.terms.is_empty() {
            return Err(Error::InvalidParameter("proxy list is empty".into()));
        }
        let mut engine = FftEngine::new(first.height(), first.width());
        let spectra: Vec<Spectrum> =
            images.iter().map(|img| engine.forward_image(img)).collect();
        let hf_ind = hf_indicator(first.height(), first.width())?;
        let n = first.plane_len();
        let (sources, channels) = (images.len(), first.channels());
        Ok(Self {
            images,
            bank,
            lambda,
            proxy,
            engine,
            spectra,
            hf_ind,
            masks: vec![0.0; sources * n],
            mask_adj: vec![0.0; sources * n],
            g_y: vec![Complex64::default(); channels * n],
            spatial: vec![0.0; channels * n],
            plane_buf: vec![Complex64::default(); n],
            fused_spec: Spectrum::new(
                first.height(),
                first.width(),
                channels,
                vec![Complex64::default(); channels * n],
            )?,
        })
    }

    /// Evaluates the composite loss at `coeffs`; when `grad` is given, also
    /// fills it with the analytic gradient.
    pub fn eval(
        &mut self,
        coeffs: &Coefficients,
        grad: Option<&mut CoeffGradient>,
    ) -> Result<LossReport> {
        if coeffs.n_sources() != self.images.len() {
            return Err(Error::ShapeMismatch(format!(
                "coefficients have {} rows but {} images were supplied",
                coeffs.n_sources(),
                self.images.len()
            )));
        }
        if coeffs.bands() != self.bank.bands() {
            return Err(Error::InvalidParameter(format!(
                "coefficient bands ({}) do not match basis bank bands ({})",
                coeffs.bands(),
                self.bank.bands()
            )));
        }

        let n = self.images[0].plane_len();
        let channels = self.images[0].channels();
        let sources = self.images.len();
        let lambda = self.lambda;
        let Self {
            images,
            bank,
            proxy,
            engine,
            spectra,
            hf_ind,
            masks,
            mask_adj,
            g_y,
            spatial,
            plane_buf,
            fused_spec,
            ..
        } = self;

        let timing = std::env::var_os("FREQMIX_TIMING").is_some();
        let mut t = std::time::Instant::now();
        let mut stamp = |label: &str, t: &mut std::time::Instant| {
            if timing {
                eprintln!("  {label}: {:.2} ms", t.elapsed().as_secs_f64() * 1e3);
                *t = std::time::Instant::now();
            }
        };
        // Masks: scores then per-bin softmax, in place.
        compose_scores_into(coeffs, bank, masks);
        stamp("compose", &mut t);
        softmax_rows_in_place(masks, sources, n);
        stamp("softmax", &mut t);

        // Fused spectrum and spatial image.
        fused_spectrum_flat_into(spectra, masks, fused_spec);
        let fused_spec: &Spectrum = fused_spec;
        stamp("fuse", &mut t);
        let fused = engine.inverse_image_unchecked(fused_spec);
        stamp("inverse_fft", &mut t);

        let recon = mse(fused.data(), images[0].data());

        // Sharpness proxies are evaluated on the clamped image; the clamp is
        // treated as identity inside [0, 1] and zero-gradient outside. When
        // nothing clips, the fused image and its spectrum serve directly.
        let clamp_active = fused
            .data()
            .iter()
            .any(|&v| !(0.0..=1.0).contains(&v));
        let u_owned;
        let u: &Image = if clamp_active {
            u_owned = fused.clamped();
            &u_owned
        } else {
            &fused
        };
        let needs_hf = proxy.uses(ProxyKind::HighFrequencyEnergyRatio);
        let u_spec_owned = if needs_hf && clamp_active {
            Some(engine.forward_image(u))
        } else {
            None
        };
        let u_spec: Option<&Spectrum> = if needs_hf {
            Some(u_spec_owned.as_ref().unwrap_or(&fused_spec))
        } else {
            None
        };

        let mut score = 0.0;
        let mut hf_parts = None;
        let mut lap_parts = None;
        for t in &proxy.terms {
            let raw = match t.kind {
                ProxyKind::HighFrequencyEnergyRatio => {
                    let parts = hf_ratio(u_spec.unwrap(), hf_ind);
                    hf_parts = Some(parts);
                    parts.2
                }
                ProxyKind::Tenengrad => tenengrad_raw(u),
                ProxyKind::LaplacianVariance => {
                    let parts = laplacian_variance_raw(u);
                    lap_parts = Some(parts);
                    parts.0
                }
            };
            score += t.weight * (raw - t.offset) * t.scale;
        }
        stamp("proxies_raw", &mut t);
        let percep = -score;
        let composite = (1.0 - lambda) * recon + lambda * percep;
        let report = LossReport {
            recon,
            percep,
            composite,
            lambda,
        };

        let Some(grad_out) = grad else {
            return Ok(report);
        };

        // Adjoint with respect to the fused spectrum, assembled in the
        // frequency domain wherever the chain allows it.
        g_y.fill(Complex64::default());
        stamp("gy_fill", &mut t);

        if lambda < 1.0 {
            let w = (1.0 - lambda) * 2.0 / (n * channels) as f64;
            let x0 = &spectra[0];
            for c in 0..channels {
                let y = fused_spec.channel(c);
                let x = x0.channel(c);
                for ((g, &yv), &xv) in g_y[c * n..(c + 1) * n].iter_mut().zip(y).zip(x) {
                    *g += w * (yv - xv);
                }
            }
        }

        if lambda > 0.0 {
            spatial.fill(0.0);
            let mut spatial_used = false;
            for t in &proxy.terms {
                let factor = -lambda * t.weight * t.scale;
                if factor == 0.0 {
                    continue;
                }
                match t.kind {
                    ProxyKind::Tenengrad => {
                        tenengrad_backprop(u, factor, spatial);
                        spatial_used = true;
                    }
                    ProxyKind::LaplacianVariance => {
                        let (_, mean) = lap_parts.expect("laplacian parts computed above");
                        laplacian_variance_backprop(u, mean, factor, spatial);
                        spatial_used = true;
                    }
                    ProxyKind::HighFrequencyEnergyRatio => {
                        let (total, _, ratio) = hf_parts.expect("hf parts computed above");
                        if total <= 0.0 {
                            continue;
                        }
                        let spec = u_spec.unwrap();
                        let coef = factor * 2.0 / total;
                        if clamp_active {
                            // Spatial route: d(ratio)/du =
                            // 2/E (F^-1(H . U) - ratio * u), masked by the clamp.
                            for c in 0..channels {
                                for ((b, &z), &ind) in
                                    plane_buf.iter_mut().zip(spec.channel(c)).zip(&*hf_ind)
                                {
                                    *b = z * ind;
                                }
                                engine.inverse_plane(plane_buf);
                                let uc = u.channel(c);
                                let out = &mut spatial[c * n..(c + 1) * n];
                                for ((o, z), &uv) in out.iter_mut().zip(&*plane_buf).zip(uc) {
                                    *o += coef * (z.re - ratio * uv);
                                }
                            }
                            spatial_used = true;
                        } else {
                            // Unclamped: U = Y, so the whole term stays in
                            // the frequency domain.
                            for c in 0..channels {
                                let y = fused_spec.channel(c);
                                let out = &mut g_y[c * n..(c + 1) * n];
                                for ((g, &yv), &ind) in out.iter_mut().zip(y).zip(&*hf_ind) {
                                    *g += coef * (ind - ratio) * yv;
                                }
                            }
                        }
                    }
                }
            }
            if spatial_used {
                if clamp_active {
                    for (s, &v) in spatial.iter_mut().zip(fused.data()) {
                        if !(0.0..=1.0).contains(&v) {
                            *s = 0.0;
                        }
                    }
                }
                for c in 0..channels {
                    for (b, &s) in plane_buf.iter_mut().zip(&spatial[c * n..(c + 1) * n]) {
                        *b = Complex64::new(s, 0.0);
                    }
                    engine.forward_plane(plane_buf);
                    for (g, &z) in g_y[c * n..(c + 1) * n].iter_mut().zip(&*plane_buf) {
                        *g += z;
                    }
                }
            }
        }

        stamp("percep_grad", &mut t);
        // Per-bin adjoint with respect to each mask: the real part of the
        // inner product of the spectral adjoint with each source spectrum.
        mask_adj.fill(0.0);
        for (i, spec) in spectra.iter().enumerate() {
            let row = &mut mask_adj[i * n..(i + 1) * n];
            for c in 0..channels {
                let x = spec.channel(c);
                let g = &g_y[c * n..(c + 1) * n];
                for ((a, &xv), &gv) in row.iter_mut().zip(x).zip(g) {
                    *a += gv.re * xv.re + gv.im * xv.im;
                }
            }
        }

        stamp("mask_adj", &mut t);
        // Softmax Jacobian per bin: b_i = m_i (a_i - sum_j a_j m_j).
        for p in 0..n {
            let mut dot = 0.0;
            for i in 0..sources {
                dot += mask_adj[i * n + p] * masks[i * n + p];
            }
            for i in 0..sources {
                let idx = i * n + p;
                mask_adj[idx] = masks[idx] * (mask_adj[idx] - dot);
            }
        }

        stamp("jacobian", &mut t);
        // Contract against the basis masks, bin-blocked so the adjoint rows
        // stay cache-resident while the bank streams through once.
        debug_assert_eq!(grad_out.n_sources, sources);
        debug_assert_eq!(grad_out.bands, bank.bands());
        let bands = bank.bands();
        grad_out.g.fill(0.0);
        for start in (0..n).step_by(crate::masks::BIN_CHUNK) {
            let end = (start + crate::masks::BIN_CHUNK).min(n);
            for b in 0..bands {
                let basis = &bank.mask(b)[start..end];
                for i in 0..sources {
                    let row = &mask_adj[i * n + start..i * n + end];
                    grad_out.g[i * bands + b] += dot(row, basis);
                }
            }
        }

        stamp("contraction", &mut t);
        Ok(report)
    }
}

/// `sum_i M_i * F(I_i)` with masks given as flat source-major planes,
/// accumulated into a caller-owned spectrum of matching shape.
pub(crate) fn fused_spectrum_flat_into(spectra: &[Spectrum], masks: &[f64], out: &mut Spectrum) {
    let n = spectra[0].plane_len();
    let channels = spectra[0].channels();
    out.data_mut().fill(Complex64::default());
    for (i, spec) in spectra.iter().enumerate() {
        let mask = &masks[i * n..(i + 1) * n];
        for c in 0..channels {
            let plane = spec.channel(c);
            let dst = &mut out.channel_mut(c)[..n];
            for ((o, &z), &m) in dst.iter_mut().zip(plane).zip(mask) {
                *o += z * m;
            }
        }
    }
}
