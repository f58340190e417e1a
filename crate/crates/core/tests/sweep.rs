//! Trade-off behavior of the lambda sweep on a textured image.

use freqmix::corpus::synthetic_corpus;
use freqmix::masks::{compose_masks, frequency_distance_grid, make_basis_bank};
use freqmix::mixup::frequency_mixup;
use freqmix::objective::{perceptual_proxy_score, ProxySpec};
use freqmix::optim::{lambda_sweep, OptimizerConfig};
use freqmix::variants::{make_variant_set, VariantConfig};

#[test]
fn sweep_trades_reconstruction_for_sharpness() {
    let img = synthetic_corpus(1, 48, 48, 1, 77).remove(0);
    let variants = make_variant_set(&img, &VariantConfig::default()).unwrap();
    let grid = frequency_distance_grid(48, 48).unwrap();
    let bank = make_basis_bank(&grid, 12).unwrap();
    let cfg = OptimizerConfig {
        steps: 200,
        ..OptimizerConfig::default()
    };
    let lambdas = [0.1, 0.3, 0.5, 0.7, 0.9];
    let results = lambda_sweep(&img, &variants, &bank, &lambdas, &cfg).unwrap();
    assert_eq!(results.len(), 5);

    let mut images = vec![img.clone()];
    images.extend(variants.iter().cloned());
    let spec = ProxySpec::default();
    let scores: Vec<f64> = results
        .iter()
        .map(|(_, _, coeffs)| {
            let masks = compose_masks(coeffs, &bank).unwrap();
            let fused = frequency_mixup(&images, &masks).unwrap();
            perceptual_proxy_score(&fused, &spec).unwrap()
        })
        .collect();

    for k in 1..5 {
        let prev = results[k - 1].1.recon;
        let next = results[k].1.recon;
        assert!(
            next >= prev - 0.05 * prev.abs() - 1e-12,
            "recon fell from {prev:.3e} to {next:.3e} between lambda {} and {}",
            lambdas[k - 1],
            lambdas[k]
        );
        assert!(
            scores[k] >= scores[k - 1] - 0.05 * scores[k - 1].abs(),
            "score fell from {:.4} to {:.4} between lambda {} and {}",
            scores[k - 1],
            scores[k],
            lambdas[k - 1],
            lambdas[k]
        );
    }
}
