//! Property tests for the spectral fusion invariants.

use proptest::prelude::*;

use freqmix::masks::{compose_masks, frequency_distance_grid, make_basis_bank, Coefficients};
use freqmix::mixup::{frequency_mixup, fused_spectrum};
use freqmix::optim::CoefficientFile;
use freqmix::spectrum::{forward_spectrum, FftEngine};
use freqmix::Image;

fn image_strategy(h: usize, w: usize, channels: usize) -> impl Strategy<Value = Image> {
    proptest::collection::vec(0.0f64..1.0, h * w * channels)
        .prop_map(move |data| Image::new(h, w, channels, data).unwrap())
}

fn coeff_strategy(sources: usize, bands: usize) -> impl Strategy<Value = Coefficients> {
    proptest::collection::vec(-20.0f64..20.0, sources * bands)
        .prop_map(move |c| Coefficients::new(sources, bands, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Masks sum to one at every bin for arbitrary coefficients, including
    /// odd dimensions.
    #[test]
    fn masks_partition_unity(
        (h, w) in (2usize..=17, 2usize..=17),
        sources in 2usize..=4,
        bands in 2usize..=6,
        seed in any::<u64>(),
    ) {
        let grid = frequency_distance_grid(h, w).unwrap();
        let bank = make_basis_bank(&grid, bands).unwrap();
        let mut c = Vec::with_capacity(sources * bands);
        let mut state = seed | 1;
        for _ in 0..sources * bands {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            c.push(((state >> 33) as f64 / (1u64 << 31) as f64 - 1.0) * 15.0);
        }
        let coeffs = Coefficients::new(sources, bands, c).unwrap();
        let masks = compose_masks(&coeffs, &bank).unwrap();
        for p in 0..masks.plane_len() {
            let total: f64 = (0..sources).map(|i| masks.mask(i)[p]).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    /// Fusing identical inputs returns the input for any coefficients.
    #[test]
    fn identity_fusion(
        img in image_strategy(7, 9, 1),
        coeffs in coeff_strategy(3, 4),
    ) {
        let grid = frequency_distance_grid(7, 9).unwrap();
        let bank = make_basis_bank(&grid, 4).unwrap();
        let masks = compose_masks(&coeffs, &bank).unwrap();
        let images = vec![img.clone(), img.clone(), img.clone()];
        let fused = frequency_mixup(&images, &masks).unwrap();
        prop_assert!(fused.max_abs_diff(&img).unwrap() < 1e-10);
    }

    /// The pipeline is linear in the images for fixed masks.
    #[test]
    fn mixup_linearity(
        a0 in image_strategy(6, 8, 1),
        a1 in image_strategy(6, 8, 1),
        b0 in image_strategy(6, 8, 1),
        b1 in image_strategy(6, 8, 1),
        coeffs in coeff_strategy(2, 3),
        alpha in 0.1f64..2.0,
        beta in -1.0f64..1.0,
    ) {
        let grid = frequency_distance_grid(6, 8).unwrap();
        let bank = make_basis_bank(&grid, 3).unwrap();
        let masks = compose_masks(&coeffs, &bank).unwrap();

        // combined values may leave [0, 1]; Image only requires finiteness
        let combine = |x: &Image, y: &Image| {
            let data: Vec<f64> = x.data().iter().zip(y.data())
                .map(|(&u, &v)| alpha * u + beta * v)
                .collect();
            Image::new(6, 8, 1, data).unwrap()
        };
        let fused_a = frequency_mixup(&[a0.clone(), a1.clone()], &masks).unwrap();
        let fused_b = frequency_mixup(&[b0.clone(), b1.clone()], &masks).unwrap();
        let fused_mix = frequency_mixup(
            &[combine(&a0, &b0), combine(&a1, &b1)],
            &masks,
        ).unwrap();
        let expected = combine(&fused_a, &fused_b);
        prop_assert!(fused_mix.max_abs_diff(&expected).unwrap() < 1e-9);
    }

    /// Symmetric masks keep the fused spectrum Hermitian, so the inverse
    /// transform's imaginary part is negligible even for odd sizes.
    #[test]
    fn fused_inverse_is_real(
        (h, w) in (2usize..=13, 2usize..=13),
        seed in any::<u64>(),
    ) {
        let mut state = seed | 1;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let images: Vec<Image> = (0..2)
            .map(|_| {
                let data: Vec<f64> = (0..h * w).map(|_| next()).collect();
                Image::new(h, w, 1, data).unwrap()
            })
            .collect();
        let grid = frequency_distance_grid(h, w).unwrap();
        let bank = make_basis_bank(&grid, 3).unwrap();
        let c: Vec<f64> = (0..6).map(|_| next() * 8.0 - 4.0).collect();
        let coeffs = Coefficients::new(2, 3, c).unwrap();
        let masks = compose_masks(&coeffs, &bank).unwrap();

        let spectra: Vec<_> = images.iter().map(forward_spectrum).collect();
        let fused = fused_spectrum(&spectra, &masks);
        let mut engine = FftEngine::new(h, w);
        let mut plane = fused.channel(0).to_vec();
        engine.inverse_plane(&mut plane);
        let residual = plane.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        prop_assert!(residual < 1e-9, "imaginary residual {residual:.3e}");
    }

    /// Coefficient files round-trip every entry bit-exactly.
    #[test]
    fn coefficient_file_round_trip(
        entries in proptest::collection::vec(
            prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(0.0)],
            8,
        ),
        lambda in 0.0f64..=1.0,
    ) {
        let coeffs = Coefficients::new(2, 4, entries).unwrap();
        let dir = std::env::temp_dir().join(format!(
            "freqmix-prop-{}-{:x}",
            std::process::id(),
            coeffs.entries().iter().fold(0u64, |acc, v| acc ^ v.to_bits()),
        ));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.coeffs");
        let file = CoefficientFile {
            coefficients: coeffs.clone(),
            lambda,
            height: 8,
            width: 8,
        };
        file.save(&path).unwrap();
        let back = CoefficientFile::load(&path).unwrap();
        std::fs::remove_dir_all(&dir).ok();
        for (a, b) in coeffs.entries().iter().zip(back.coefficients.entries()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back.lambda.to_bits(), lambda.to_bits());
    }
}
