//! Finite-difference validation of the analytic coefficient gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use freqmix::corpus::smooth_field;
use freqmix::masks::{frequency_distance_grid, make_basis_bank, BasisBank, Coefficients};
use freqmix::objective::{loss_gradient_wrt_coeffs, ProxySpec};
use freqmix::reference::finite_difference_gradient;
use freqmix::variants::unsharp_mask;
use freqmix::Image;

const FD_STEP: f64 = 1e-4;
const REL_TOL: f64 = 1e-5;
const ABS_FLOOR: f64 = 1e-8;

struct Instance {
    images: Vec<Image>,
    coeffs: Coefficients,
    bank: BasisBank,
}

/// Random smooth-field instance with margin from the clamp boundaries so
/// the loss is differentiable at the evaluation point.
fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = rng.gen_range(5..=16);
    let w = rng.gen_range(5..=16);
    let channels = if rng.gen_bool(0.5) { 1 } else { 3 };
    let n_variants = rng.gen_range(1..=3usize);
    let bands = rng.gen_range(2..=5);

    let original = smooth_field(h, w, channels, seed.wrapping_mul(31).wrapping_add(1));
    let mut images = vec![original.clone()];
    for v in 0..n_variants {
        if v % 2 == 0 {
            let radius = rng.gen_range(0.8..2.0);
            let amount = rng.gen_range(0.3..1.0);
            images.push(unsharp_mask(&original, radius, amount).unwrap());
        } else {
            images.push(smooth_field(
                h,
                w,
                channels,
                seed.wrapping_mul(131).wrapping_add(v as u64),
            ));
        }
    }

    let grid = frequency_distance_grid(h, w).unwrap();
    let bank = make_basis_bank(&grid, bands).unwrap();
    let mut coeffs = Coefficients::zeros(images.len(), bands);
    for i in 0..images.len() {
        for b in 0..bands {
            let bias = if i == 0 { 0.5 } else { 0.0 };
            coeffs.set(i, b, bias + rng.gen_range(-1.0..1.0));
        }
    }
    Instance {
        images,
        coeffs,
        bank,
    }
}

/// Worst per-element deviation: relative where either side is above the
/// floor, absolute otherwise.
fn max_gradient_error(analytic: &[f64], fd: &[f64]) -> (f64, f64) {
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for (&a, &f) in analytic.iter().zip(fd) {
        let diff = (a - f).abs();
        if a.abs() < ABS_FLOOR && f.abs() < ABS_FLOOR {
            worst_abs = worst_abs.max(diff);
        } else {
            worst_rel = worst_rel.max(diff / a.abs().max(f.abs()));
        }
    }
    (worst_rel, worst_abs)
}

fn check_instance(seed: u64, lambda: f64) {
    let inst = instance(seed);
    let proxy = ProxySpec::default();
    let analytic =
        loss_gradient_wrt_coeffs(&inst.images, &inst.coeffs, &inst.bank, lambda, &proxy).unwrap();
    let fd = finite_difference_gradient(
        &inst.images,
        &inst.coeffs,
        &inst.bank,
        lambda,
        &proxy,
        FD_STEP,
    )
    .unwrap();
    let (rel, abs) = max_gradient_error(analytic.entries(), &fd);
    assert!(
        rel < REL_TOL && abs < ABS_FLOOR,
        "seed {seed} lambda {lambda}: rel {rel:.3e}, abs {abs:.3e}"
    );
}

#[test]
fn gradient_matches_finite_differences_recon_only() {
    for seed in 0..6 {
        check_instance(seed, 0.0);
    }
}

#[test]
fn gradient_matches_finite_differences_blended() {
    for seed in 6..12 {
        check_instance(seed, 0.3);
    }
}

#[test]
fn gradient_matches_finite_differences_percep_only() {
    for seed in 12..18 {
        check_instance(seed, 1.0);
    }
}

#[test]
fn gradient_is_finite_on_saturated_masks() {
    let inst = instance(99);
    let mut coeffs = inst.coeffs.clone();
    for b in 0..coeffs.bands() {
        coeffs.set(0, b, 200.0);
    }
    let grad = loss_gradient_wrt_coeffs(
        &inst.images,
        &coeffs,
        &inst.bank,
        0.3,
        &ProxySpec::default(),
    )
    .unwrap();
    assert!(grad.entries().iter().all(|g| g.is_finite()));
}
