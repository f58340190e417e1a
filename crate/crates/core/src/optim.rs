//! Per-image optimization of the mask coefficients against the composite
//! loss, plus persistence of coefficient matrices.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::masks::{BasisBank, Coefficients};
use crate::objective::{CoeffGradient, LossReport, Objective, ProxySpec};

/// Adaptive-moment descent settings for one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub steps: usize,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Added to coefficient row 0 at initialization so the starting point
    /// favors the original image.
    pub init_bias: f64,
    pub seed: u64,
    /// Early stop once the composite-loss improvement over a 10-step window
    /// falls below this; 0 disables early stopping.
    pub convergence_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            steps: 300,
            step_size: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init_bias: 2.0,
            seed: 0,
            convergence_tol: 0.0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !self.init_bias.is_finite() {
            return Err(Error::InvalidParameter("init_bias must be finite".into()));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "convergence_tol must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Loss history and final state of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    /// Per-step losses, recorded after each update.
    pub history: Vec<LossReport>,
    pub coefficients: Coefficients,
    pub steps_run: usize,
    pub wall_time: std::time::Duration,
}

impl OptimizationTrace {
    pub fn final_loss(&self) -> &LossReport {
        self.history.last().expect("trace has at least one step")
    }
}

/// Minimizes the composite loss over the coefficient matrix with
/// adaptive-moment gradient descent (bias-corrected first and second
/// moments). Coefficients start at zero with `init_bias` added to row 0.
///
/// The run is deterministic: identical inputs and config produce a
/// bit-identical trace.
pub fn optimize_coefficients(
    original: &Image,
    variants: &[Image],
    bank: &BasisBank,
    lambda: f64,
    cfg: &OptimizerConfig,
) -> Result<OptimizationTrace> {
    if variants.is_empty() {
        return Err(Error::InvalidParameter(
            "optimization needs at least one variant".into(),
        ));
    }
    cfg.validate()?;
    let proxy = ProxySpec::default();
    let mut images = Vec::with_capacity(variants.len() + 1);
    images.push(original.clone());
    images.extend(variants.iter().cloned());
    let start = Instant::now();
    let mut objective = Objective::new(&images, bank, lambda, &proxy)?;

    let sources = images.len();
    let bands = bank.bands();
    let mut coeffs = Coefficients::zeros(sources, bands);
    for b in 0..bands {
        coeffs.set(0, b, cfg.init_bias);
    }

    let mut grad = CoeffGradient::zeros(sources, bands);
    let mut m = vec![0.0f64; sources * bands];
    let mut v = vec![0.0f64; sources * bands];
    let mut beta1_t = 1.0;
    let mut beta2_t = 1.0;
    let mut history: Vec<LossReport> = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let report = objective.eval(&coeffs, Some(&mut grad))?;
        if !report.composite.is_finite() {
            return Err(Error::Divergence { step });
        }

        beta1_t *= cfg.beta1;
        beta2_t *= cfg.beta2;
        let entries = coeffs.entries_mut();
        for (idx, &g) in grad.entries().iter().enumerate() {
            m[idx] = cfg.beta1 * m[idx] + (1.0 - cfg.beta1) * g;
            v[idx] = cfg.beta2 * v[idx] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[idx] / (1.0 - beta1_t);
            let v_hat = v[idx] / (1.0 - beta2_t);
            entries[idx] -= cfg.step_size * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        history.push(report);

        if cfg.convergence_tol > 0.0 && history.len() > 10 {
            let win = history.len() - 11;
            let improvement = history[win].composite - report.composite;
            if improvement < cfg.convergence_tol {
                break;
            }
        }
    }

    // The recorded losses are pre-update; re-evaluate at the final
    // coefficients so the trace ends at the state actually returned.
    let final_report = objective.eval(&coeffs, None)?;
    if !final_report.composite.is_finite() {
        return Err(Error::Divergence { step: history.len() });
    }
    history.push(final_report);

    let steps_run = history.len() - 1;
    Ok(OptimizationTrace {
        history,
        coefficients: coeffs,
        steps_run,
        wall_time: start.elapsed(),
    })
}

/// Runs one independent optimization per lambda (identical initialization
/// and seed) and returns the results sorted by lambda.
pub fn lambda_sweep(
    original: &Image,
    variants: &[Image],
    bank: &BasisBank,
    lambdas: &[f64],
    cfg: &OptimizerConfig,
) -> Result<Vec<(f64, LossReport, Coefficients)>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("lambda list is empty".into()));
    }
    for &l in lambdas {
        crate::objective::validate_lambda(l)?;
    }
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[a].partial_cmp(&lambdas[b]).expect("finite lambdas"));
    let mut out = Vec::with_capacity(lambdas.len());
    for idx in order {
        let lambda = lambdas[idx];
        let trace = optimize_coefficients(original, variants, bank, lambda, cfg)?;
        out.push((lambda, *trace.final_loss(), trace.coefficients));
    }
    Ok(out)
}

const COEFF_MAGIC: &str = "freqmix-coefficients";
const COEFF_VERSION: u32 = 1;

/// A coefficient matrix together with the run metadata persisted alongside
/// it. The text format is self-describing and round-trips every entry
/// bit-exactly (shortest round-trip decimal representation).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFile {
    pub coefficients: Coefficients,
    pub lambda: f64,
    pub height: usize,
    pub width: usize,
}

impl CoefficientFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        let c = &self.coefficients;
        writeln!(text, "{COEFF_MAGIC} v{COEFF_VERSION}").unwrap();
        writeln!(text, "n_sources {}", c.n_sources()).unwrap();
        writeln!(text, "bands {}", c.bands()).unwrap();
        writeln!(text, "lambda {}", self.lambda).unwrap();
        writeln!(text, "height {}", self.height).unwrap();
        writeln!(text, "width {}", self.width).unwrap();
        for i in 0..c.n_sources() {
            let row: Vec<String> = c.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(text, "{}", row.join(" ")).unwrap();
        }
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let parse_err = |message: String| Error::Parse {
            path: path.display().to_string(),
            message,
        };
        let schema_err = |message: String| Error::Schema {
            path: path.display().to_string(),
            message,
        };

        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err("empty file".into()))?;
        if header.trim() != format!("{COEFF_MAGIC} v{COEFF_VERSION}") {
            return Err(parse_err(format!("unrecognized header '{header}'")));
        }

        let mut n_sources: Option<usize> = None;
        let mut bands: Option<usize> = None;
        let mut lambda: Option<f64> = None;
        let mut height: Option<usize> = None;
        let mut width: Option<usize> = None;
        for _ in 0..5 {
            let line = lines
                .next()
                .ok_or_else(|| parse_err("truncated header".into()))?;
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| parse_err(format!("malformed header line '{line}'")))?;
            match key {
                "n_sources" => {
                    n_sources = Some(value.parse().map_err(|_| {
                        parse_err(format!("field n_sources: invalid count '{value}'"))
                    })?)
                }
                "bands" => {
                    bands = Some(value.parse().map_err(|_| {
                        parse_err(format!("field bands: invalid count '{value}'"))
                    })?)
                }
                "lambda" => {
                    lambda = Some(value.parse().map_err(|_| {
                        parse_err(format!("field lambda: invalid number '{value}'"))
                    })?)
                }
                "height" => {
                    height = Some(value.parse().map_err(|_| {
                        parse_err(format!("field height: invalid count '{value}'"))
                    })?)
                }
                "width" => {
                    width = Some(value.parse().map_err(|_| {
                        parse_err(format!("field width: invalid count '{value}'"))
                    })?)
                }
                other => return Err(parse_err(format!("unexpected header field '{other}'"))),
            }
        }
        let n_sources = n_sources.ok_or_else(|| parse_err("missing field n_sources".into()))?;
        let bands = bands.ok_or_else(|| parse_err("missing field bands".into()))?;
        let lambda = lambda.ok_or_else(|| parse_err("missing field lambda".into()))?;
        let height = height.ok_or_else(|| parse_err("missing field height".into()))?;
        let width = width.ok_or_else(|| parse_err("missing field width".into()))?;

        let mut entries = Vec::with_capacity(n_sources * bands);
        for i in 0..n_sources {
            let line = lines
                .next()
                .ok_or_else(|| schema_err(format!("expected {n_sources} rows, found {i}")))?;
            let row: Vec<&str> = line.split_whitespace().collect();
            if row.len() != bands {
                return Err(schema_err(format!(
                    "row {i} has {} entries but the header declares bands {bands}",
                    row.len()
                )));
            }
            for (b, tok) in row.iter().enumerate() {
                let v: f64 = tok.parse().map_err(|_| {
                    parse_err(format!("row {i} column {b}: invalid number '{tok}'"))
                })?;
                entries.push(v);
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(schema_err(format!(
                "more than {n_sources} coefficient rows present"
            )));
        }
        let coefficients = Coefficients::new(n_sources, bands, entries)
            .map_err(|e| schema_err(e.to_string()))?;
        Ok(Self {
            coefficients,
            lambda,
            height,
            width,
        })
    }
}

/// Writes a coefficient matrix with its run metadata.
pub fn save_coefficients(
    coeffs: &Coefficients,
    lambda: f64,
    height: usize,
    width: usize,
    path: &Path,
) -> Result<()> {
    CoefficientFile {
        coefficients: coeffs.clone(),
        lambda,
        height,
        width,
    }
    .save(path)
}

/// Reads back just the coefficient matrix.
pub fn load_coefficients(path: &Path) -> Result<Coefficients> {
    Ok(CoefficientFile::load(path)?.coefficients)
}
