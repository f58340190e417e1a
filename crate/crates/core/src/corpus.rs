//! Deterministic synthetic images used by the test suite, the acceptance
//! checks, and the proxy calibration: gratings, blobs, plaids, rings, bars
//! and filtered noise, all reproducible from a seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::Image;

/// Rescales samples into `[lo, hi]`; degenerate (constant) planes collapse
/// to the midpoint.
fn normalize_to(data: &mut [f64], lo: f64, hi: f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in data.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    if max - min < 1e-12 {
        let mid = 0.5 * (lo + hi);
        for v in data.iter_mut() {
            *v = mid;
        }
        return;
    }
    let scale = (hi - lo) / (max - min);
    for v in data.iter_mut() {
        *v = lo + (*v - min) * scale;
    }
}

fn grating(h: usize, w: usize, fr: f64, fc: f64, phase: f64) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    (0..h * w)
        .map(|i| {
            let r = (i / w) as f64;
            let c = (i % w) as f64;
            (tau * (fr * r / h as f64 + fc * c / w as f64) + phase).sin()
        })
        .collect()
}

fn blobs(h: usize, w: usize, rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let centers: Vec<(f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.gen_range(0.0..h as f64),
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.04..0.18) * h.min(w) as f64,
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    (0..h * w)
        .map(|i| {
            let r = (i / w) as f64;
            let c = (i % w) as f64;
            centers
                .iter()
                .map(|&(cy, cx, sigma, amp)| {
                    let d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
                    amp * (-d2 / (2.0 * sigma * sigma)).exp()
                })
                .sum()
        })
        .collect()
}

fn rings(h: usize, w: usize, freq: f64, cy: f64, cx: f64) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    (0..h * w)
        .map(|i| {
            let r = (i / w) as f64 - cy;
            let c = (i % w) as f64 - cx;
            (tau * freq * (r * r + c * c).sqrt() / h as f64).sin()
        })
        .collect()
}

fn tiles(h: usize, w: usize, block: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bw = w.div_ceil(block);
    let bh = h.div_ceil(block);
    let levels: Vec<f64> = (0..bw * bh).map(|_| rng.gen_range(0.0..1.0)).collect();
    (0..h * w)
        .map(|i| {
            let r = i / w / block;
            let c = i % w / block;
            levels[r * bw + c]
        })
        .collect()
}

fn speckle(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Separable 1-2-1 binomial smoothing, `passes` times.
fn binomial_smooth(data: &mut [f64], h: usize, w: usize, passes: usize) {
    let mut tmp = vec![0.0; h * w];
    for _ in 0..passes {
        for r in 0..h {
            for c in 0..w {
                let l = data[r * w + c.saturating_sub(1)];
                let m = data[r * w + c];
                let rt = data[r * w + (c + 1).min(w - 1)];
                tmp[r * w + c] = 0.25 * l + 0.5 * m + 0.25 * rt;
            }
        }
        for c in 0..w {
            for r in 0..h {
                let u = tmp[r.saturating_sub(1) * w + c];
                let m = tmp[r * w + c];
                let d = tmp[(r + 1).min(h - 1) * w + c];
                data[r * w + c] = 0.25 * u + 0.5 * m + 0.25 * d;
            }
        }
    }
}

/// White noise pushed through a few binomial smoothing passes: band-limited
/// texture concentrated at mid frequencies, where the multi-scale detail
/// enhancers act most strongly.
fn mid_noise(h: usize, w: usize, rng: &mut ChaCha8Rng, passes: usize) -> Vec<f64> {
    let mut data = speckle(h, w, rng);
    binomial_smooth(&mut data, h, w, passes);
    data
}

fn bars(h: usize, w: usize, freq: f64, angle: f64) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let (sa, ca) = angle.sin_cos();
    (0..h * w)
        .map(|i| {
            let r = (i / w) as f64;
            let c = (i % w) as f64;
            let t = (tau * freq * (r * ca + c * sa) / h as f64).sin();
            if t >= 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn add_scaled(acc: &mut [f64], src: &[f64], scale: f64) {
    for (a, &s) in acc.iter_mut().zip(src) {
        *a += scale * s;
    }
}

/// One synthetic plane; `kind` cycles through ten texture families. Every
/// family carries a fine-detail layer so detail enhancers have something
/// to act on at every image of the corpus.
fn plane(h: usize, w: usize, kind: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    match kind % 10 {
        0 => {
            add_scaled(&mut out, &grating(h, w, rng.gen_range(2.0..5.0), rng.gen_range(2.0..5.0), rng.gen_range(0.0..3.0)), 1.0);
            add_scaled(&mut out, &grating(h, w, rng.gen_range(8.0..14.0), rng.gen_range(8.0..14.0), rng.gen_range(0.0..3.0)), 0.5);
            add_scaled(&mut out, &mid_noise(h, w, rng, 2), 0.5);
            add_scaled(&mut out, &speckle(h, w, rng), 0.15);
        }
        1 => {
            add_scaled(&mut out, &blobs(h, w, rng, 14), 1.0);
            add_scaled(&mut out, &mid_noise(h, w, rng, 2), 0.7);
            add_scaled(&mut out, &speckle(h, w, rng), 0.08);
        }
        2 => {
            let mut mosaic = tiles(h, w, (h / 12).max(2), rng);
            binomial_smooth(&mut mosaic, h, w, 1);
            add_scaled(&mut out, &mosaic, 1.0);
            add_scaled(&mut out, &mid_noise(h, w, rng, 3), 0.7);
            add_scaled(&mut out, &speckle(h, w, rng), 0.08);
        }
        3 => {
            add_scaled(&mut out, &rings(h, w, rng.gen_range(6.0..11.0), h as f64 * rng.gen_range(0.3..0.7), w as f64 * rng.gen_range(0.3..0.7)), 1.0);
            add_scaled(&mut out, &mid_noise(h, w, rng, 2), 0.6);
            add_scaled(&mut out, &speckle(h, w, rng), 0.18);
        }
        4 => {
            for _ in 0..5 {
                add_scaled(&mut out, &grating(h, w, rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0), rng.gen_range(0.0..6.0)), rng.gen_range(0.2..0.6));
            }
            add_scaled(&mut out, &grating(h, w, rng.gen_range(10.0..16.0), rng.gen_range(10.0..16.0), 0.3), 0.4);
            add_scaled(&mut out, &mid_noise(h, w, rng, 3), 0.5);
            add_scaled(&mut out, &speckle(h, w, rng), 0.15);
        }
        5 => {
            let mut stripes = bars(h, w, rng.gen_range(5.0..9.0), rng.gen_range(0.0..1.5));
            binomial_smooth(&mut stripes, h, w, 1);
            add_scaled(&mut out, &stripes, 1.0);
            add_scaled(&mut out, &mid_noise(h, w, rng, 2), 0.55);
            add_scaled(&mut out, &speckle(h, w, rng), 0.08);
        }
        6 => {
            add_scaled(&mut out, &grating(h, w, rng.gen_range(4.0..8.0), 0.0, 0.2), 0.7);
            add_scaled(&mut out, &grating(h, w, 0.0, rng.gen_range(4.0..8.0), 1.1), 0.7);
            add_scaled(&mut out, &tiles(h, w, 3, rng), 0.35);
            add_scaled(&mut out, &mid_noise(h, w, rng, 2), 0.5);
            add_scaled(&mut out, &speckle(h, w, rng), 0.15);
        }
        7 => {
            add_scaled(&mut out, &blobs(h, w, rng, 4), 0.8);
            add_scaled(&mut out, &rings(h, w, rng.gen_range(10.0..15.0), h as f64 / 2.0, w as f64 / 2.0), 0.5);
            add_scaled(&mut out, &mid_noise(h, w, rng, 3), 0.65);
            add_scaled(&mut out, &speckle(h, w, rng), 0.08);
        }
        8 => {
            let ramp: Vec<f64> = (0..h * w)
                .map(|i| ((i / w) as f64 / h as f64 + (i % w) as f64 / w as f64) * 0.5)
                .collect();
            add_scaled(&mut out, &ramp, 1.0);
            add_scaled(&mut out, &mid_noise(h, w, rng, 2), 0.8);
            add_scaled(&mut out, &speckle(h, w, rng), 0.08);
        }
        _ => {
            add_scaled(&mut out, &blobs(h, w, rng, 8), 0.7);
            add_scaled(&mut out, &grating(h, w, rng.gen_range(8.0..14.0), rng.gen_range(8.0..14.0), 0.9), 0.5);
            add_scaled(&mut out, &mid_noise(h, w, rng, 2), 0.6);
            add_scaled(&mut out, &speckle(h, w, rng), 0.18);
        }
    }
    out
}

/// `count` deterministic textured images of `height x width x channels`.
/// Image `i` uses texture family `i % 10`; channels share the family with
/// independently drawn parameters.
pub fn synthetic_corpus(
    count: usize,
    height: usize,
    width: usize,
    channels: usize,
    seed: u64,
) -> Vec<Image> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e3779b9));
            let mut data = Vec::with_capacity(height * width * channels);
            let base = plane(height, width, i, &mut rng);
            for _c in 0..channels {
                let mut p = base.clone();
                // modest per-channel variation keeps channels correlated
                let extra = plane(height, width, i, &mut rng);
                add_scaled(&mut p, &extra, 0.25);
                normalize_to(&mut p, 0.08, 0.92);
                data.extend_from_slice(&p);
            }
            Image::new(height, width, channels, data).expect("synthetic image is valid")
        })
        .collect()
}

/// The bundled ten-image 128x128 RGB corpus used by the acceptance suite.
pub fn bundled_corpus() -> Vec<Image> {
    synthetic_corpus(10, 128, 128, 3, 0xF00D)
}

/// Band-limited smooth random field with margin from the clamp boundaries,
/// handy for finite-difference checks.
pub fn smooth_field(height: usize, width: usize, channels: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(height * width * channels);
    for _ in 0..channels {
        let mut p = vec![0.0; height * width];
        for _ in 0..6 {
            add_scaled(
                &mut p,
                &grating(
                    height,
                    width,
                    rng.gen_range(0.5..3.0),
                    rng.gen_range(0.5..3.0),
                    rng.gen_range(0.0..6.0),
                ),
                rng.gen_range(0.2..0.5),
            );
        }
        normalize_to(&mut p, 0.2, 0.8);
        data.extend_from_slice(&p);
    }
    Image::new(height, width, channels, data).expect("smooth field is valid")
}
