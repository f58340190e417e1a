use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use freqmix::optim::OptimizerConfig;
use freqmix::variants::{Enhancer, VariantConfig};
use freqmix_cli::commands::{
    cmd_decompose, cmd_enhance, cmd_export_dataset, cmd_gen_variants, cmd_stats, cmd_sweep,
    write_demo_corpus, LambdaSpec,
};
use freqmix_cli::manifest::{IndexEntry, RunManifest, VariantSource};
use freqmix_cli::{CliError, Result};

/// Enhances a reference image by fusing it with detail-enhanced variants in
/// the frequency domain, using adaptive ring-shaped Gaussian masks whose
/// coefficients are optimized per image.
#[derive(Parser)]
#[command(name = "freqmix", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnhancerArg {
    Unsharp,
    None,
    External,
}

#[derive(Args)]
struct VariantArgs {
    /// Externally produced variant images (implies --enhancer external)
    #[arg(long = "variants", num_args = 1.., value_name = "PNG")]
    variants: Vec<PathBuf>,
    /// Detail operator applied at each upsampled scale
    #[arg(long, value_enum, default_value_t = EnhancerArg::Unsharp)]
    enhancer: EnhancerArg,
    /// Upsampling scale factors for generated variants
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    scales: Vec<u32>,
    /// Gaussian sigma of the unsharp blur, in pixels
    #[arg(long, default_value_t = 1.5)]
    unsharp_radius: f64,
    /// Strength of the unsharp detail boost
    #[arg(long, default_value_t = 0.8)]
    unsharp_amount: f64,
}

impl VariantArgs {
    fn source(&self) -> Result<VariantSource> {
        if !self.variants.is_empty() {
            if self.enhancer != EnhancerArg::External && self.enhancer != EnhancerArg::Unsharp {
                return Err(CliError::Usage(
                    "--variants conflicts with --enhancer none; drop one".into(),
                ));
            }
            return Ok(VariantSource::External(self.variants.clone()));
        }
        let enhancer = match self.enhancer {
            EnhancerArg::Unsharp => Enhancer::Unsharp {
                radius: self.unsharp_radius,
                amount: self.unsharp_amount,
            },
            EnhancerArg::None => Enhancer::None,
            EnhancerArg::External => {
                return Err(CliError::Usage(
                    "--enhancer external requires --variants paths".into(),
                ))
            }
        };
        Ok(VariantSource::Generated(VariantConfig {
            scales: self.scales.clone(),
            enhancer,
        }))
    }
}

#[derive(Args)]
struct OptimizerArgs {
    /// Trade-off between fidelity (0) and sharpness (1)
    #[arg(long, default_value_t = 0.3)]
    lambda: f64,
    /// Number of ring-shaped basis masks
    #[arg(long, default_value_t = 25)]
    bands: usize,
    /// Optimizer step budget
    #[arg(long, default_value_t = 300)]
    steps: usize,
    /// Optimizer step size
    #[arg(long, default_value_t = 0.05)]
    step_size: f64,
    /// Seed recorded in the manifest and used for any sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            steps: self.steps,
            step_size: self.step_size,
            seed: self.seed,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize mask coefficients and write the enhanced image
    Enhance {
        /// Reference image (PNG, 8- or 16-bit, grayscale or RGB)
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        variants: VariantArgs,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Split an enhance run into per-source spectral components
    Decompose {
        /// Directory produced by `enhance`
        #[arg(long)]
        run_dir: PathBuf,
        /// Coefficient file overriding the run's own
        #[arg(long)]
        coefficients: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run independent optimizations over a list of lambda values
    Sweep {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated lambda values
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[command(flatten)]
        variants: VariantArgs,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write the generated variant set without optimizing
    GenVariants {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        variants: VariantArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Enhance a corpus into training pairs plus an index
    ExportDataset {
        /// Corpus of reference images
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Fixed lambda list (mutually exclusive with --sample-count)
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        /// Draw this many lambda values uniformly from [0, 1] instead
        #[arg(long, conflicts_with = "lambdas")]
        sample_count: Option<usize>,
        #[command(flatten)]
        variants: VariantArgs,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        /// Bounded worker pool size
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print proxy scores, band energies, and optional reference metrics
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 25)]
        bands: usize,
    },
    /// Write the bundled synthetic corpus as PNG files
    DemoCorpus {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn build_manifest(
    input: PathBuf,
    variants: &VariantArgs,
    optimizer: &OptimizerArgs,
) -> Result<RunManifest> {
    Ok(RunManifest {
        original: input,
        lambda: optimizer.lambda,
        bands: optimizer.bands,
        optimizer: optimizer.config(),
        variants: variants.source()?,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Enhance {
            input,
            variants,
            optimizer,
            out_dir,
        } => {
            let manifest = build_manifest(input, &variants, &optimizer)?;
            let outcome = cmd_enhance(&manifest, &out_dir)?;
            println!(
                "enhanced {} (lambda {}, {} steps): psnr {:.2} dB, proxy score {:.4}",
                outcome.enhanced_path.display(),
                manifest.lambda,
                outcome.steps_run,
                outcome.psnr_db,
                outcome.proxy_score,
            );
        }
        Command::Decompose {
            run_dir,
            coefficients,
            out_dir,
        } => {
            let outcome = cmd_decompose(&run_dir, coefficients.as_deref(), out_dir.as_deref())?;
            println!(
                "wrote {} components; re-sum max abs error {:.3e} (verified: {})",
                outcome.component_paths.len(),
                outcome.resum_max_abs_error,
                outcome.verified,
            );
        }
        Command::Sweep {
            input,
            lambdas,
            variants,
            optimizer,
            out_dir,
        } => {
            let manifest = build_manifest(input, &variants, &optimizer)?;
            let rows = cmd_sweep(&manifest, &lambdas, &out_dir)?;
            for row in &rows {
                println!(
                    "lambda {}: recon {:.3e}, proxy score {:.4}, psnr {:.2} dB",
                    row.lambda, row.report.recon, row.proxy_score, row.psnr_db,
                );
            }
            println!("report: {}", out_dir.join("sweep_report.tsv").display());
        }
        Command::GenVariants {
            input,
            variants,
            out_dir,
        } => {
            let optimizer = OptimizerArgs {
                lambda: 0.3,
                bands: 25,
                steps: 1,
                step_size: 0.05,
                seed: 0,
            };
            let manifest = build_manifest(input, &variants, &optimizer)?;
            for path in cmd_gen_variants(&manifest, &out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::ExportDataset {
            inputs,
            lambdas,
            sample_count,
            variants,
            optimizer,
            workers,
            out_dir,
        } => {
            let spec = match sample_count {
                Some(count) => LambdaSpec::Uniform {
                    count,
                    seed: optimizer.seed,
                },
                None if lambdas.is_empty() => LambdaSpec::Fixed(vec![optimizer.lambda]),
                None => LambdaSpec::Fixed(lambdas),
            };
            let template = build_manifest(inputs[0].clone(), &variants, &optimizer)?;
            let entries = cmd_export_dataset(&inputs, &spec, &template, workers, &out_dir)?;
            let errors = entries
                .iter()
                .filter(|e| matches!(e, IndexEntry::Error { .. }))
                .count();
            println!(
                "exported {} records ({errors} errors) to {}",
                entries.len() - errors,
                out_dir.join("index.txt").display(),
            );
        }
        Command::Stats {
            input,
            reference,
            bands,
        } => {
            print!("{}", cmd_stats(&input, reference.as_deref(), bands)?);
        }
        Command::DemoCorpus { out_dir } => {
            for path in write_demo_corpus(&out_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
