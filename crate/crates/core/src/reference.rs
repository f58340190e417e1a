//! Naive reference implementations used to cross-check the optimized paths.
//!
//! Everything here is computed by direct summation — O((HW)^2) transforms,
//! sliding-window convolutions — and shares no code with the FFT-based
//! pipeline. Intended for verification on small inputs only.

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::image::Image;
use crate::masks::{compose_masks, BasisBank, Coefficients, MaskSet};
use crate::mixup::frequency_mixup;
use crate::objective::{composite_loss, ProxySpec};

/// Direct unitary 2-D DFT of one real plane by explicit double summation.
pub fn dft2d_direct(plane: &[f64], height: usize, width: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); height * width];
    let norm = 1.0 / ((height * width) as f64).sqrt();
    for kh in 0..height {
        for kw in 0..width {
            let mut acc = Complex64::default();
            for h in 0..height {
                for w in 0..width {
                    let angle = -2.0
                        * std::f64::consts::PI
                        * ((kh * h) as f64 / height as f64 + (kw * w) as f64 / width as f64);
                    acc += plane[h * width + w] * Complex64::new(angle.cos(), angle.sin());
                }
            }
            out[kh * width + kw] = acc * norm;
        }
    }
    out
}

/// Direct unitary inverse 2-D DFT by explicit double summation.
pub fn idft2d_direct(spec: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); height * width];
    let norm = 1.0 / ((height * width) as f64).sqrt();
    for h in 0..height {
        for w in 0..width {
            let mut acc = Complex64::default();
            for kh in 0..height {
                for kw in 0..width {
                    let angle = 2.0
                        * std::f64::consts::PI
                        * ((kh * h) as f64 / height as f64 + (kw * w) as f64 / width as f64);
                    acc += spec[kh * width + kw] * Complex64::new(angle.cos(), angle.sin());
                }
            }
            out[h * width + w] = acc * norm;
        }
    }
    out
}

/// Frequency-domain fusion computed entirely with direct DFT sums.
pub fn fuse_direct(images: &[Image], masks: &MaskSet) -> Image {
    let (h, w, channels) = (
        images[0].height(),
        images[0].width(),
        images[0].channels(),
    );
    let n = h * w;
    let mut out = vec![0.0; n * channels];
    for c in 0..channels {
        let mut fused = vec![Complex64::default(); n];
        for (i, img) in images.iter().enumerate() {
            let spec = dft2d_direct(img.channel(c), h, w);
            for (f, (&z, &m)) in fused.iter_mut().zip(spec.iter().zip(masks.mask(i))) {
                *f += z * m;
            }
        }
        let spatial = idft2d_direct(&fused, h, w);
        for (o, z) in out[c * n..(c + 1) * n].iter_mut().zip(&spatial) {
            *o = z.re;
        }
    }
    Image::new(h, w, channels, out).expect("direct fusion of finite inputs is finite")
}

/// Sobel response by direct correlation over the valid interior.
/// Returns `(gx, gy)` with dimensions `(height-2) x (width-2)`.
pub fn sobel_direct(plane: &[f64], height: usize, width: usize) -> (Vec<f64>, Vec<f64>) {
    let kx: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (ih, iw) = (height - 2, width - 2);
    let mut gx = vec![0.0; ih * iw];
    let mut gy = vec![0.0; ih * iw];
    for r in 0..ih {
        for c in 0..iw {
            let mut ax = 0.0;
            let mut ay = 0.0;
            for (dy, (rx, ry)) in kx.iter().zip(&ky).enumerate() {
                for dx in 0..3 {
                    let v = plane[(r + dy) * width + (c + dx)];
                    ax += rx[dx] * v;
                    ay += ry[dx] * v;
                }
            }
            gx[r * iw + c] = ax;
            gy[r * iw + c] = ay;
        }
    }
    (gx, gy)
}

/// Central finite differences of the composite loss with respect to every
/// coefficient, evaluated through the public mask/mixup/loss path. The
/// independent route for checking the analytic gradient.
pub fn finite_difference_gradient(
    images: &[Image],
    coeffs: &Coefficients,
    bank: &BasisBank,
    lambda: f64,
    proxy: &ProxySpec,
    step: f64,
) -> Result<Vec<f64>> {
    let eval = |c: &Coefficients| -> Result<f64> {
        let masks = compose_masks(c, bank)?;
        let fused = frequency_mixup(images, &masks)?;
        Ok(composite_loss(&fused, &images[0], lambda, proxy)?.composite)
    };
    let mut grad = vec![0.0; coeffs.n_sources() * coeffs.bands()];
    for i in 0..coeffs.n_sources() {
        for b in 0..coeffs.bands() {
            let mut plus = coeffs.clone();
            plus.set(i, b, coeffs.get(i, b) + step);
            let mut minus = coeffs.clone();
            minus.set(i, b, coeffs.get(i, b) - step);
            grad[i * coeffs.bands() + b] = (eval(&plus)? - eval(&minus)?) / (2.0 * step);
        }
    }
    Ok(grad)
}

/// PSNR by direct evaluation of the defining formula (no cap handling
/// beyond the zero-MSE case).
pub fn psnr_direct(a: &Image, b: &Image) -> f64 {
    let mut sum = 0.0;
    for (x, y) in a.data().iter().zip(b.data()) {
        sum += (x - y) * (x - y);
    }
    let mse = sum / a.data().len() as f64;
    if mse == 0.0 {
        crate::metrics::PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(crate::metrics::PSNR_CAP_DB)
    }
}

/// Mean SSIM by direct 2-D sliding-window evaluation with an 11x11
/// Gaussian window (sigma 1.5), independent of the separable path.
pub fn ssim_direct(a: &Image, b: &Image) -> f64 {
    const WIN: usize = 11;
    let mut weights = [0.0f64; WIN * WIN];
    let mut total = 0.0;
    for r in 0..WIN {
        for c in 0..WIN {
            let dy = r as f64 - 5.0;
            let dx = c as f64 - 5.0;
            let v = (-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5)).exp();
            weights[r * WIN + c] = v;
            total += v;
        }
    }
    for v in &mut weights {
        *v /= total;
    }
    let c1 = 0.01f64 * 0.01;
    let c2 = 0.03f64 * 0.03;
    let (h, w) = (a.height(), a.width());
    let mut channel_mean = 0.0;
    for ch in 0..a.channels() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r0 in 0..=(h - WIN) {
            for c0 in 0..=(w - WIN) {
                let (mut ma, mut mb, mut eaa, mut ebb, mut eab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for r in 0..WIN {
                    for c in 0..WIN {
                        let wgt = weights[r * WIN + c];
                        let va = a.get(ch, r0 + r, c0 + c);
                        let vb = b.get(ch, r0 + r, c0 + c);
                        ma += wgt * va;
                        mb += wgt * vb;
                        eaa += wgt * va * va;
                        ebb += wgt * vb * vb;
                        eab += wgt * va * vb;
                    }
                }
                let var_a = eaa - ma * ma;
                let var_b = ebb - mb * mb;
                let cov = eab - ma * mb;
                sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
                count += 1;
            }
        }
        channel_mean += sum / count as f64;
    }
    channel_mean / a.channels() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_dft_round_trips() {
        let plane: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).cos()).collect();
        let spec = dft2d_direct(&plane, 4, 5);
        let back = idft2d_direct(&spec, 4, 5);
        for (a, b) in plane.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-12);
            assert!(b.im.abs() < 1e-12);
        }
    }
}
