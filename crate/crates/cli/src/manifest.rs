//! Run manifests and the dataset index format: versioned line-delimited
//! text, written atomically and diffable in tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use freqmix::optim::OptimizerConfig;
use freqmix::variants::{Enhancer, VariantConfig};

use crate::error::{CliError, Result};
use crate::io::write_text_atomic;

const MANIFEST_MAGIC: &str = "freqmix-manifest v1";
const INDEX_MAGIC: &str = "freqmix-dataset-index v1";

/// Where the fusion variants come from.
#[derive(Debug, Clone, PartialEq)]
pub enum VariantSource {
    Generated(VariantConfig),
    External(Vec<PathBuf>),
}

/// Everything one enhancement run needs, validated before any compute.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub original: PathBuf,
    pub lambda: f64,
    pub bands: usize,
    pub optimizer: OptimizerConfig,
    pub variants: VariantSource,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(CliError::Manifest(format!(
                "lambda must be in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.bands < 2 {
            return Err(CliError::Manifest(format!(
                "bands must be at least 2, got {}",
                self.bands
            )));
        }
        if self.optimizer.steps < 1 {
            return Err(CliError::Manifest("steps must be at least 1".into()));
        }
        if !self.original.is_file() {
            return Err(CliError::Manifest(format!(
                "original image not found: {}",
                self.original.display()
            )));
        }
        match &self.variants {
            VariantSource::Generated(cfg) => {
                cfg.validate().map_err(|e| CliError::Manifest(e.to_string()))?;
                if cfg.enhancer == Enhancer::External {
                    return Err(CliError::Manifest(
                        "enhancer 'external' requires --variants paths".into(),
                    ));
                }
            }
            VariantSource::External(paths) => {
                if paths.is_empty() {
                    return Err(CliError::Manifest(
                        "external variant list is empty".into(),
                    ));
                }
                for p in paths {
                    if !p.is_file() {
                        return Err(CliError::Manifest(format!(
                            "variant image not found: {}",
                            p.display()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MANIFEST_MAGIC}").unwrap();
        writeln!(s, "original {}", self.original.display()).unwrap();
        writeln!(s, "lambda {}", self.lambda).unwrap();
        writeln!(s, "bands {}", self.bands).unwrap();
        writeln!(s, "steps {}", self.optimizer.steps).unwrap();
        writeln!(s, "step_size {}", self.optimizer.step_size).unwrap();
        writeln!(s, "seed {}", self.optimizer.seed).unwrap();
        match &self.variants {
            VariantSource::Generated(cfg) => {
                writeln!(s, "variants generated").unwrap();
                let scales: Vec<String> = cfg.scales.iter().map(|v| v.to_string()).collect();
                writeln!(s, "scales {}", scales.join(",")).unwrap();
                match cfg.enhancer {
                    Enhancer::Unsharp { radius, amount } => {
                        writeln!(s, "enhancer unsharp").unwrap();
                        writeln!(s, "unsharp_radius {radius}").unwrap();
                        writeln!(s, "unsharp_amount {amount}").unwrap();
                    }
                    Enhancer::None => writeln!(s, "enhancer none").unwrap(),
                    Enhancer::External => unreachable!("validated"),
                }
            }
            VariantSource::External(paths) => {
                writeln!(s, "variants external").unwrap();
                for p in paths {
                    writeln!(s, "variant_path {}", p.display()).unwrap();
                }
            }
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text_atomic(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let err = |msg: String| CliError::Manifest(format!("{}: {msg}", path.display()));
        let mut lines = text.lines();
        if lines.next() != Some(MANIFEST_MAGIC) {
            return Err(err("unrecognized manifest header".into()));
        }
        let mut original = None;
        let mut lambda = None;
        let mut bands = None;
        let mut steps = None;
        let mut step_size = None;
        let mut seed = None;
        let mut variants_kind = None;
        let mut scales: Vec<u32> = Vec::new();
        let mut enhancer_id = None;
        let mut radius = None;
        let mut amount = None;
        let mut variant_paths = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| err(format!("malformed line '{line}'")))?;
            match key {
                "original" => original = Some(PathBuf::from(value)),
                "lambda" => {
                    lambda = Some(value.parse().map_err(|_| err("invalid lambda".into()))?)
                }
                "bands" => bands = Some(value.parse().map_err(|_| err("invalid bands".into()))?),
                "steps" => steps = Some(value.parse().map_err(|_| err("invalid steps".into()))?),
                "step_size" => {
                    step_size =
                        Some(value.parse().map_err(|_| err("invalid step_size".into()))?)
                }
                "seed" => seed = Some(value.parse().map_err(|_| err("invalid seed".into()))?),
                "variants" => variants_kind = Some(value.to_string()),
                "scales" => {
                    for tok in value.split(',') {
                        scales.push(tok.parse().map_err(|_| err("invalid scale".into()))?);
                    }
                }
                "enhancer" => enhancer_id = Some(value.to_string()),
                "unsharp_radius" => {
                    radius = Some(value.parse().map_err(|_| err("invalid radius".into()))?)
                }
                "unsharp_amount" => {
                    amount = Some(value.parse().map_err(|_| err("invalid amount".into()))?)
                }
                "variant_path" => variant_paths.push(PathBuf::from(value)),
                other => return Err(err(format!("unexpected field '{other}'"))),
            }
        }
        let variants = match variants_kind.as_deref() {
            Some("generated") => {
                let enhancer = match enhancer_id.as_deref() {
                    Some("unsharp") => Enhancer::Unsharp {
                        radius: radius.ok_or_else(|| err("missing unsharp_radius".into()))?,
                        amount: amount.ok_or_else(|| err("missing unsharp_amount".into()))?,
                    },
                    Some("none") => Enhancer::None,
                    other => return Err(err(format!("unexpected enhancer {other:?}"))),
                };
                VariantSource::Generated(VariantConfig { scales, enhancer })
            }
            Some("external") => VariantSource::External(variant_paths),
            other => return Err(err(format!("unexpected variants kind {other:?}"))),
        };
        Ok(RunManifest {
            original: original.ok_or_else(|| err("missing original".into()))?,
            lambda: lambda.ok_or_else(|| err("missing lambda".into()))?,
            bands: bands.ok_or_else(|| err("missing bands".into()))?,
            optimizer: OptimizerConfig {
                steps: steps.ok_or_else(|| err("missing steps".into()))?,
                step_size: step_size.ok_or_else(|| err("missing step_size".into()))?,
                seed: seed.ok_or_else(|| err("missing seed".into()))?,
                ..OptimizerConfig::default()
            },
            variants,
        })
    }
}

/// One exported training pair, or the error that prevented it.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexEntry {
    Record {
        original: PathBuf,
        enhanced: PathBuf,
        lambda: f64,
        coefficients: PathBuf,
        sha_original: String,
        sha_enhanced: String,
        sha_coefficients: String,
    },
    Error {
        original: PathBuf,
        lambda: f64,
        message: String,
    },
}

pub fn index_to_text(entries: &[IndexEntry]) -> String {
    let mut s = String::new();
    writeln!(s, "{INDEX_MAGIC}").unwrap();
    for e in entries {
        match e {
            IndexEntry::Record {
                original,
                enhanced,
                lambda,
                coefficients,
                sha_original,
                sha_enhanced,
                sha_coefficients,
            } => {
                writeln!(
                    s,
                    "record\t{}\t{}\t{lambda}\t{}\t{sha_original}\t{sha_enhanced}\t{sha_coefficients}",
                    original.display(),
                    enhanced.display(),
                    coefficients.display(),
                )
                .unwrap();
            }
            IndexEntry::Error {
                original,
                lambda,
                message,
            } => {
                writeln!(
                    s,
                    "error\t{}\t{lambda}\t{}",
                    original.display(),
                    message.replace(['\t', '\n'], " "),
                )
                .unwrap();
            }
        }
    }
    s
}

pub fn parse_index(text: &str) -> Result<Vec<IndexEntry>> {
    let err = |msg: &str| CliError::Manifest(format!("dataset index: {msg}"));
    let mut lines = text.lines();
    if lines.next() != Some(INDEX_MAGIC) {
        return Err(err("unrecognized header"));
    }
    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.first() {
            Some(&"record") if fields.len() == 8 => out.push(IndexEntry::Record {
                original: PathBuf::from(fields[1]),
                enhanced: PathBuf::from(fields[2]),
                lambda: fields[3].parse().map_err(|_| err("invalid lambda"))?,
                coefficients: PathBuf::from(fields[4]),
                sha_original: fields[5].to_string(),
                sha_enhanced: fields[6].to_string(),
                sha_coefficients: fields[7].to_string(),
            }),
            Some(&"error") if fields.len() == 4 => out.push(IndexEntry::Error {
                original: PathBuf::from(fields[1]),
                lambda: fields[2].parse().map_err(|_| err("invalid lambda"))?,
                message: fields[3].to_string(),
            }),
            _ => return Err(err(&format!("malformed line '{line}'"))),
        }
    }
    Ok(out)
}
