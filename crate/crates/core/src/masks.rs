use crate::error::{Error, Result};

/// Nominal spread of the first basis mask.
pub const SIGMA_SCHEDULE_START: f64 = 0.05;
/// Nominal spread of the last basis mask.
pub const SIGMA_SCHEDULE_END: f64 = 0.55;

/// Radial frequency distance of every DFT bin from the DC component.
///
/// Distances are computed on signed DFT frequencies (`f = k` for
/// `k <= floor(n/2)`, else `k - n`), which makes the grid exactly invariant
/// under frequency negation for both even and odd dimensions.
#[derive(Debug, Clone)]
pub struct DistanceGrid {
    height: usize,
    width: usize,
    d: Vec<f64>,
    d_max: f64,
}

impl DistanceGrid {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Row-major H x W distances, unshifted index order.
    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.d[row * self.width + col]
    }

    /// Half-diagonal of the frequency plane, `sqrt(H^2 + W^2) / 2`.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }
}

/// Signed DFT frequency for index `k` of an axis of length `n`.
fn signed_frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Radial distance grid for an `height x width` spectrum.
pub fn frequency_distance_grid(height: usize, width: usize) -> Result<DistanceGrid> {
    if height < 2 || width < 2 {
        return Err(Error::InvalidDimension(format!(
            "distance grid must be at least 2x2, got {height}x{width}"
        )));
    }
    let mut d = vec![0.0; height * width];
    for row in 0..height {
        let fh = signed_frequency(row, height);
        for col in 0..width {
            let fw = signed_frequency(col, width);
            d[row * width + col] = (fh * fh + fw * fw).sqrt();
        }
    }
    let d_max = ((height * height + width * width) as f64).sqrt() / 2.0;
    Ok(DistanceGrid {
        height,
        width,
        d,
        d_max,
    })
}

/// Bank of ring-shaped Gaussian basis masks over the frequency plane.
///
/// Mask `b` peaks at radius `mu[b]` and falls off with effective spread
/// `sigma[b] * d_max`; the nominal `sigma` schedule runs from 0.05 to 0.55
/// as a fraction of `d_max`, giving narrow rings near DC and broad rings at
/// high frequencies. Peak positions are spaced quadratically so coverage is
/// denser in the low-frequency region.
#[derive(Debug, Clone)]
pub struct BasisBank {
    height: usize,
    width: usize,
    bands: usize,
    masks: Vec<f64>, // bands planes of H*W, row-major
    mus: Vec<f64>,
    sigmas: Vec<f64>, // nominal (dimensionless) spreads
    d_max: f64,
}

impl BasisBank {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn mask(&self, b: usize) -> &[f64] {
        let n = self.plane_len();
        &self.masks[b * n..(b + 1) * n]
    }

    /// Radial peak positions, in frequency-bin units.
    pub fn mus(&self) -> &[f64] {
        &self.mus
    }

    /// Nominal spread schedule (fractions of `d_max`).
    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }
}

/// Builds `bands` ring-shaped Gaussian basis masks on the given grid.
///
/// `mu[b] = d_max * ((b-1)/(B-1))^2` and the nominal spread schedule is
/// `0.05 + 0.50 * ((b-1)/(B-1))^2`, both endpoint-exact.
pub fn make_basis_bank(grid: &DistanceGrid, bands: usize) -> Result<BasisBank> {
    if bands < 2 {
        return Err(Error::InvalidParameter(format!(
            "basis bank needs at least 2 bands, got {bands}"
        )));
    }
    let d_max = grid.d_max();
    let n = grid.values().len();
    let mut mus = Vec::with_capacity(bands);
    let mut sigmas = Vec::with_capacity(bands);
    let mut masks = vec![0.0; bands * n];
    for b in 0..bands {
        let t = b as f64 / (bands - 1) as f64;
        let mu = d_max * t * t;
        let sigma = SIGMA_SCHEDULE_START + (SIGMA_SCHEDULE_END - SIGMA_SCHEDULE_START) * t * t;
        let sigma_eff = sigma * d_max;
        let inv_two_var = 1.0 / (2.0 * sigma_eff * sigma_eff);
        for (m, &d) in masks[b * n..(b + 1) * n].iter_mut().zip(grid.values()) {
            let delta = d - mu;
            *m = (-delta * delta * inv_two_var).exp();
        }
        mus.push(mu);
        sigmas.push(sigma);
    }
    Ok(BasisBank {
        height: grid.height(),
        width: grid.width(),
        bands,
        masks,
        mus,
        sigmas,
        d_max,
    })
}

/// Per-source, per-band mixing coefficients. Row 0 belongs to the original
/// image; rows 1..N to its variants. Entries are unconstrained reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    n_sources: usize,
    bands: usize,
    c: Vec<f64>, // row-major n_sources x bands
}

impl Coefficients {
    pub fn new(n_sources: usize, bands: usize, c: Vec<f64>) -> Result<Self> {
        if n_sources < 1 || bands < 1 {
            return Err(Error::InvalidParameter(format!(
                "coefficients need at least one source and one band, got {n_sources}x{bands}"
            )));
        }
        if c.len() != n_sources * bands {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients for {n_sources}x{bands}, got {}",
                n_sources * bands,
                c.len()
            )));
        }
        if !c.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "coefficients contain non-finite entries".into(),
            ));
        }
        Ok(Self { n_sources, bands, c })
    }

    pub fn zeros(n_sources: usize, bands: usize) -> Self {
        Self {
            n_sources,
            bands,
            c: vec![0.0; n_sources * bands],
        }
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.c[i * self.bands..(i + 1) * self.bands]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.c[i * self.bands..(i + 1) * self.bands]
    }

    pub fn entries(&self) -> &[f64] {
        &self.c
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    pub fn get(&self, i: usize, b: usize) -> f64 {
        self.c[i * self.bands + b]
    }

    pub fn set(&mut self, i: usize, b: usize, v: f64) {
        self.c[i * self.bands + b] = v;
    }
}

/// Per-source frequency masks forming a partition of unity at every bin.
#[derive(Debug, Clone)]
pub struct MaskSet {
    height: usize,
    width: usize,
    n_sources: usize,
    masks: Vec<f64>, // n_sources planes of H*W
}

impl MaskSet {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn mask(&self, i: usize) -> &[f64] {
        let n = self.plane_len();
        &self.masks[i * n..(i + 1) * n]
    }
}

/// Combines basis masks with coefficient rows and applies a per-bin softmax
/// across sources, so the resulting masks sum to one at every bin.
///
/// The softmax subtracts the per-bin maximum score before exponentiation;
/// coefficients are unconstrained and would otherwise overflow.
pub fn compose_masks(coeffs: &Coefficients, bank: &BasisBank) -> Result<MaskSet> {
    if coeffs.bands() != bank.bands() {
        return Err(Error::InvalidParameter(format!(
            "coefficient bands ({}) do not match basis bank bands ({})",
            coeffs.bands(),
            bank.bands()
        )));
    }
    let n = bank.plane_len();
    let n_sources = coeffs.n_sources();
    let mut scores = compose_scores(coeffs, bank);
    softmax_rows_in_place(&mut scores, n_sources, n);
    Ok(MaskSet {
        height: bank.height(),
        width: bank.width(),
        n_sources,
        masks: scores,
    })
}

/// Per-bin scores `s_i = sum_b c[i][b] * R_b`, returned as n_sources planes.
pub(crate) fn compose_scores(coeffs: &Coefficients, bank: &BasisBank) -> Vec<f64> {
    let mut scores = vec![0.0; coeffs.n_sources() * bank.plane_len()];
    compose_scores_into(coeffs, bank, &mut scores);
    scores
}

/// Bin-block size for the band loops: keeps the per-source score chunks
/// cache-resident while every basis mask streams through once.
pub(crate) const BIN_CHUNK: usize = 4096;

/// [`compose_scores`] writing into a caller-owned buffer.
pub(crate) fn compose_scores_into(coeffs: &Coefficients, bank: &BasisBank, scores: &mut [f64]) {
    let n = bank.plane_len();
    let n_sources = coeffs.n_sources();
    debug_assert_eq!(scores.len(), n_sources * n);
    scores.fill(0.0);
    for start in (0..n).step_by(BIN_CHUNK) {
        let end = (start + BIN_CHUNK).min(n);
        for b in 0..bank.bands() {
            let basis = &bank.mask(b)[start..end];
            for i in 0..n_sources {
                let w = coeffs.get(i, b);
                if w == 0.0 {
                    continue;
                }
                let row = &mut scores[i * n + start..i * n + end];
                for (s, &r) in row.iter_mut().zip(basis) {
                    *s += w * r;
                }
            }
        }
    }
}

/// In-place per-bin softmax across the source axis, max-stabilized.
pub(crate) fn softmax_rows_in_place(scores: &mut [f64], n_sources: usize, plane: usize) {
    for p in 0..plane {
        let mut max = f64::NEG_INFINITY;
        for i in 0..n_sources {
            max = max.max(scores[i * plane + p]);
        }
        let mut sum = 0.0;
        for i in 0..n_sources {
            let s = scores[i * plane + p];
            // exp(0) = 1 exactly; the max entry needs no call
            let e = if s == max { 1.0 } else { (s - max).exp() };
            scores[i * plane + p] = e;
            sum += e;
        }
        let inv = 1.0 / sum;
        for i in 0..n_sources {
            scores[i * plane + p] *= inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_dc_and_nyquist() {
        let g = frequency_distance_grid(8, 8).unwrap();
        assert_eq!(g.get(0, 0), 0.0);
        let nyquist = g.get(4, 4);
        assert!((nyquist - 32.0f64.sqrt()).abs() < 1e-12);
        assert!((nyquist - g.d_max()).abs() < 1e-12);
        assert_eq!(g.get(1, 0), 1.0);
        assert_eq!(g.get(7, 0), 1.0);
    }

    #[test]
    fn grid_negation_symmetry_exact_odd_and_even() {
        for (h, w) in [(8, 8), (7, 10), (9, 5)] {
            let g = frequency_distance_grid(h, w).unwrap();
            for row in 0..h {
                for col in 0..w {
                    let a = g.get(row, col);
                    let b = g.get((h - row) % h, (w - col) % w);
                    assert_eq!(a.to_bits(), b.to_bits(), "asymmetry at ({row},{col})");
                }
            }
            for &d in g.values() {
                assert!((0.0..=g.d_max()).contains(&d));
            }
        }
    }

    #[test]
    fn grid_rejects_degenerate_sizes() {
        assert!(frequency_distance_grid(1, 8).is_err());
        assert!(frequency_distance_grid(8, 0).is_err());
    }

    #[test]
    fn bank_schedule_endpoints() {
        let g = frequency_distance_grid(16, 16).unwrap();
        let bank = make_basis_bank(&g, 25).unwrap();
        assert_eq!(bank.mus()[0], 0.0);
        assert_eq!(bank.sigmas()[0], 0.05);
        assert!((bank.mus()[24] - g.d_max()).abs() < 1e-12);
        assert!((bank.sigmas()[24] - 0.55).abs() < 1e-12);
        for b in 1..25 {
            assert!(bank.mus()[b] > bank.mus()[b - 1]);
        }
    }

    #[test]
    fn bank_two_band_values() {
        // mu = [0, d_max], nominal sigma = [0.05, 0.55]; R_2 at DC follows
        // from direct evaluation of the Gaussian.
        let g = frequency_distance_grid(8, 8).unwrap();
        let bank = make_basis_bank(&g, 2).unwrap();
        let d_max = 32.0f64.sqrt();
        assert_eq!(bank.mus(), &[0.0, d_max]);
        assert_eq!(bank.sigmas(), &[0.05, 0.55]);
        let expected = (-(d_max * d_max) / (2.0 * (0.55 * d_max).powi(2))).exp();
        assert!((bank.mask(1)[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn bank_peak_is_one_where_d_equals_mu() {
        let g = frequency_distance_grid(8, 8).unwrap();
        let bank = make_basis_bank(&g, 3).unwrap();
        // mu_1 = 0 and the DC bin has d = 0 exactly.
        assert_eq!(bank.mask(0)[0], 1.0);
        // every mask's maximum sits on the bin nearest its mu
        for b in 0..bank.bands() {
            let mu = bank.mus()[b];
            let (mut best_bin, mut best_gap) = (0, f64::INFINITY);
            for (p, &d) in g.values().iter().enumerate() {
                if (d - mu).abs() < best_gap {
                    best_gap = (d - mu).abs();
                    best_bin = p;
                }
            }
            let peak = bank
                .mask(b)
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(bank.mask(b)[best_bin], peak);
        }
    }

    #[test]
    fn bank_inherits_grid_symmetry_exactly() {
        let g = frequency_distance_grid(7, 10).unwrap();
        let bank = make_basis_bank(&g, 5).unwrap();
        for b in 0..5 {
            let m = bank.mask(b);
            for row in 0..7 {
                for col in 0..10 {
                    let a = m[row * 10 + col];
                    let s = m[((7 - row) % 7) * 10 + (10 - col) % 10];
                    assert_eq!(a.to_bits(), s.to_bits());
                }
            }
        }
    }

    #[test]
    fn bank_full_coverage() {
        let g = frequency_distance_grid(17, 31).unwrap();
        let bank = make_basis_bank(&g, 25).unwrap();
        let n = bank.plane_len();
        for p in 0..n {
            let total: f64 = (0..25).map(|b| bank.mask(b)[p]).sum();
            assert!(total > 0.0, "no coverage at bin {p}");
        }
    }

    #[test]
    fn bank_rejects_single_band() {
        let g = frequency_distance_grid(8, 8).unwrap();
        assert!(make_basis_bank(&g, 1).is_err());
    }

    #[test]
    fn uniform_masks_from_zero_coefficients() {
        let g = frequency_distance_grid(8, 8).unwrap();
        let bank = make_basis_bank(&g, 4).unwrap();
        let coeffs = Coefficients::zeros(4, 4);
        let masks = compose_masks(&coeffs, &bank).unwrap();
        for i in 0..4 {
            for &m in masks.mask(i) {
                assert!((m - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn saturated_row_dominates() {
        // With sum_b R_b >= 1 everywhere (B = 25), a +50 row drives its mask
        // above 0.999 at every bin.
        let g = frequency_distance_grid(8, 8).unwrap();
        let bank = make_basis_bank(&g, 25).unwrap();
        let n = bank.plane_len();
        for p in 0..n {
            let total: f64 = (0..25).map(|b| bank.mask(b)[p]).sum();
            assert!(total >= 1.0, "basis sum {total} < 1 at bin {p}");
        }
        let mut coeffs = Coefficients::zeros(3, 25);
        for b in 0..25 {
            coeffs.set(0, b, 50.0);
        }
        let masks = compose_masks(&coeffs, &bank).unwrap();
        for &m in masks.mask(0) {
            assert!(m > 0.999);
        }
    }

    #[test]
    fn partition_of_unity() {
        let g = frequency_distance_grid(17, 31).unwrap();
        let bank = make_basis_bank(&g, 7).unwrap();
        let c: Vec<f64> = (0..3 * 7).map(|i| ((i * 31 % 17) as f64 - 8.0) * 3.7).collect();
        let coeffs = Coefficients::new(3, 7, c).unwrap();
        let masks = compose_masks(&coeffs, &bank).unwrap();
        for p in 0..masks.plane_len() {
            let total: f64 = (0..3).map(|i| masks.mask(i)[p]).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_coefficients_do_not_overflow() {
        let g = frequency_distance_grid(8, 8).unwrap();
        let bank = make_basis_bank(&g, 3).unwrap();
        let mut coeffs = Coefficients::zeros(2, 3);
        for b in 0..3 {
            coeffs.set(0, b, 400.0);
            coeffs.set(1, b, -400.0);
        }
        let masks = compose_masks(&coeffs, &bank).unwrap();
        for i in 0..2 {
            for &m in masks.mask(i) {
                assert!(m.is_finite());
            }
        }
    }

    #[test]
    fn compose_rejects_band_mismatch() {
        let g = frequency_distance_grid(8, 8).unwrap();
        let bank = make_basis_bank(&g, 4).unwrap();
        let coeffs = Coefficients::zeros(2, 5);
        assert!(compose_masks(&coeffs, &bank).is_err());
    }
}
