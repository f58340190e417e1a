//! The pipeline behind each CLI subcommand. Everything is a library
//! function so the test suites drive the exact code the binary runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use freqmix::corpus;
use freqmix::masks::{compose_masks, frequency_distance_grid, make_basis_bank, BasisBank};
use freqmix::metrics::{band_energy_profile, psnr, ssim};
use freqmix::mixup::{decompose_contributions, frequency_mixup};
use freqmix::objective::{
    perceptual_proxy_score, LossReport, ProxyKind, ProxySpec, ProxyTerm,
};
use freqmix::optim::{optimize_coefficients, CoefficientFile, OptimizationTrace};
use freqmix::variants::make_variant_set;
use freqmix::Image;

use crate::error::{CliError, Result};
use crate::io::{read_image, sha256_hex, write_image, write_text_atomic, BitDepth};
use crate::manifest::{index_to_text, IndexEntry, RunManifest, VariantSource};

const SUMMARY_MAGIC: &str = "freqmix-summary v1";
const DECOMPOSE_MAGIC: &str = "freqmix-decompose v1";
const SWEEP_MAGIC: &str = "freqmix-sweep v1";
const STATS_MAGIC: &str = "freqmix-stats v1";

/// Result of one enhancement run, mirrored by `summary.txt`.
#[derive(Debug, Clone)]
pub struct EnhanceOutcome {
    pub report: LossReport,
    pub steps_run: usize,
    pub proxy_score: f64,
    pub psnr_db: f64,
    pub ssim_value: Option<f64>,
    pub enhanced_path: PathBuf,
    pub coefficients_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Loads the original and its variants per the manifest; generated variants
/// are recomputed deterministically from the config.
pub fn load_sources(manifest: &RunManifest) -> Result<(Image, Vec<Image>)> {
    let original = read_image(&manifest.original)?;
    let variants = match &manifest.variants {
        VariantSource::Generated(cfg) => make_variant_set(&original, cfg)?,
        VariantSource::External(paths) => {
            let mut out = Vec::with_capacity(paths.len());
            for p in paths {
                let v = read_image(p)?;
                if !v.same_shape(&original) {
                    return Err(CliError::Manifest(format!(
                        "variant {} is {}x{}x{} but the original is {}x{}x{}",
                        p.display(),
                        v.height(),
                        v.width(),
                        v.channels(),
                        original.height(),
                        original.width(),
                        original.channels()
                    )));
                }
                out.push(v);
            }
            out
        }
    };
    Ok((original, variants))
}

fn optimize(
    manifest: &RunManifest,
    original: &Image,
    variants: &[Image],
) -> Result<(BasisBank, OptimizationTrace)> {
    let grid = frequency_distance_grid(original.height(), original.width())?;
    let bank = make_basis_bank(&grid, manifest.bands)?;
    let trace = optimize_coefficients(
        original,
        variants,
        &bank,
        manifest.lambda,
        &manifest.optimizer,
    )?;
    Ok((bank, trace))
}

/// DC-centered copy of an unshifted frequency plane, for human viewing.
fn center_dc(plane: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            out[((r + h / 2) % h) * w + (c + w / 2) % w] = plane[r * w + c];
        }
    }
    out
}

fn format_summary(
    manifest: &RunManifest,
    n_variants: usize,
    outcome: &EnhanceOutcome,
) -> String {
    let mut s = String::new();
    writeln!(s, "{SUMMARY_MAGIC}").unwrap();
    writeln!(s, "original {}", manifest.original.display()).unwrap();
    writeln!(s, "lambda {}", manifest.lambda).unwrap();
    writeln!(s, "bands {}", manifest.bands).unwrap();
    writeln!(s, "variants {n_variants}").unwrap();
    writeln!(s, "steps_run {}", outcome.steps_run).unwrap();
    writeln!(s, "recon_loss {}", outcome.report.recon).unwrap();
    writeln!(s, "percep_loss {}", outcome.report.percep).unwrap();
    writeln!(s, "composite_loss {}", outcome.report.composite).unwrap();
    writeln!(s, "proxy_score {}", outcome.proxy_score).unwrap();
    writeln!(s, "psnr_to_original {}", outcome.psnr_db).unwrap();
    match outcome.ssim_value {
        Some(v) => writeln!(s, "ssim_to_original {v}").unwrap(),
        None => writeln!(s, "ssim_to_original n/a").unwrap(),
    }
    writeln!(s, "enhanced enhanced.png").unwrap();
    writeln!(s, "coefficients coefficients.txt").unwrap();
    s
}

/// Runs the full enhancement pipeline and writes the artifact set:
/// manifest, coefficient file, enhanced image, raw and DC-centered mask
/// renderings, the per-step loss trace, and a machine-readable summary.
///
/// Artifacts are staged in a hidden directory and renamed into place only
/// after every write succeeded, the summary last.
pub fn cmd_enhance(manifest: &RunManifest, out_dir: &Path) -> Result<EnhanceOutcome> {
    manifest.validate()?;
    let (original, variants) = load_sources(manifest)?;
    let (bank, trace) = optimize(manifest, &original, &variants)?;

    let mut images = Vec::with_capacity(variants.len() + 1);
    images.push(original.clone());
    images.extend(variants.iter().cloned());
    let masks = compose_masks(&trace.coefficients, &bank)?;
    let fused = frequency_mixup(&images, &masks)?;
    let display = fused.clamped();

    let proxy_score = perceptual_proxy_score(&fused, &ProxySpec::default())?;
    let psnr_db = psnr(&display, &original)?;
    let ssim_value = if original.height() >= 11 && original.width() >= 11 {
        Some(ssim(&display, &original)?)
    } else {
        None
    };

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let stage = out_dir.join(format!(".stage-{}", std::process::id()));
    if stage.exists() {
        std::fs::remove_dir_all(&stage).map_err(|e| CliError::io(&stage, e))?;
    }
    std::fs::create_dir_all(&stage).map_err(|e| CliError::io(&stage, e))?;

    let result = (|| -> Result<Vec<String>> {
        let mut staged = Vec::new();
        manifest.save(&stage.join("manifest.txt"))?;
        staged.push("manifest.txt".to_string());

        CoefficientFile {
            coefficients: trace.coefficients.clone(),
            lambda: manifest.lambda,
            height: original.height(),
            width: original.width(),
        }
        .save(&stage.join("coefficients.txt"))?;
        staged.push("coefficients.txt".to_string());

        write_image(&display, &stage.join("enhanced.png"), BitDepth::Sixteen)?;
        staged.push("enhanced.png".to_string());

        let (h, w) = (masks.height(), masks.width());
        for i in 0..masks.n_sources() {
            let raw = Image::new(h, w, 1, masks.mask(i).to_vec())?;
            let name_raw = format!("mask_{i:02}_raw.png");
            write_image(&raw, &stage.join(&name_raw), BitDepth::Eight)?;
            staged.push(name_raw);
            let centered = Image::new(h, w, 1, center_dc(masks.mask(i), h, w))?;
            let name_centered = format!("mask_{i:02}_centered.png");
            write_image(&centered, &stage.join(&name_centered), BitDepth::Eight)?;
            staged.push(name_centered);
        }

        let mut tsv = String::from("step\trecon\tpercep\tcomposite\n");
        for (step, r) in trace.history.iter().enumerate() {
            writeln!(tsv, "{step}\t{}\t{}\t{}", r.recon, r.percep, r.composite).unwrap();
        }
        write_text_atomic(&stage.join("trace.tsv"), &tsv)?;
        staged.push("trace.tsv".to_string());

        Ok(staged)
    })();

    let staged = match result {
        Ok(staged) => staged,
        Err(e) => {
            std::fs::remove_dir_all(&stage).ok();
            return Err(e);
        }
    };

    let outcome = EnhanceOutcome {
        report: *trace.final_loss(),
        steps_run: trace.steps_run,
        proxy_score,
        psnr_db,
        ssim_value,
        enhanced_path: out_dir.join("enhanced.png"),
        coefficients_path: out_dir.join("coefficients.txt"),
        summary_path: out_dir.join("summary.txt"),
    };
    let summary = format_summary(manifest, variants.len(), &outcome);
    if let Err(e) = write_text_atomic(&stage.join("summary.txt"), &summary) {
        std::fs::remove_dir_all(&stage).ok();
        return Err(e);
    }

    // All artifacts staged; move them into place, the summary last.
    for name in &staged {
        std::fs::rename(stage.join(name), out_dir.join(name))
            .map_err(|e| CliError::io(out_dir, e))?;
    }
    std::fs::rename(stage.join("summary.txt"), out_dir.join("summary.txt"))
        .map_err(|e| CliError::io(out_dir, e))?;
    std::fs::remove_dir_all(&stage).ok();
    Ok(outcome)
}

/// Outcome of a decompose run, mirrored by `decompose_summary.txt`.
#[derive(Debug, Clone)]
pub struct DecomposeOutcome {
    pub component_paths: Vec<PathBuf>,
    pub resum_max_abs_error: f64,
    pub verified: bool,
}

/// Splits the fused result of an earlier enhance run into per-source
/// spectral components and verifies they re-sum to the fused image.
pub fn cmd_decompose(
    run_dir: &Path,
    coefficients: Option<&Path>,
    out_dir: Option<&Path>,
) -> Result<DecomposeOutcome> {
    let manifest = RunManifest::load(&run_dir.join("manifest.txt"))?;
    manifest.validate()?;
    let coeff_path = coefficients
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run_dir.join("coefficients.txt"));
    let file = CoefficientFile::load(&coeff_path)?;
    let out_dir = out_dir.unwrap_or(run_dir);

    let (original, variants) = load_sources(&manifest)?;
    let schema_err = |message: String| {
        CliError::Core(freqmix::Error::Schema {
            path: coeff_path.display().to_string(),
            message,
        })
    };
    if file.coefficients.bands() != manifest.bands {
        return Err(schema_err(format!(
            "coefficient file has {} bands but the manifest declares {}",
            file.coefficients.bands(),
            manifest.bands
        )));
    }
    if file.coefficients.n_sources() != variants.len() + 1 {
        return Err(schema_err(format!(
            "coefficient file has {} sources but the run uses {}",
            file.coefficients.n_sources(),
            variants.len() + 1
        )));
    }
    if (file.height, file.width) != (original.height(), original.width()) {
        return Err(schema_err(format!(
            "coefficient file was written for {}x{} but the original is {}x{}",
            file.height,
            file.width,
            original.height(),
            original.width()
        )));
    }

    let grid = frequency_distance_grid(original.height(), original.width())?;
    let bank = make_basis_bank(&grid, manifest.bands)?;
    let masks = compose_masks(&file.coefficients, &bank)?;
    let mut images = Vec::with_capacity(variants.len() + 1);
    images.push(original);
    images.extend(variants);
    let components = decompose_contributions(&images, &masks)?;
    let fused = frequency_mixup(&images, &masks)?;

    let mut resum = Image::zeros(fused.height(), fused.width(), fused.channels())?;
    for part in &components {
        for (s, &p) in resum.data_mut().iter_mut().zip(part.data()) {
            *s += p;
        }
    }
    let resum_max_abs_error = resum.max_abs_diff(&fused)?;
    let verified = resum_max_abs_error < 1e-6;

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut component_paths = Vec::new();
    for (i, part) in components.iter().enumerate() {
        let path = out_dir.join(format!("component_{i:02}.png"));
        write_image(&part.clamped(), &path, BitDepth::Sixteen)?;
        component_paths.push(path);
    }
    let mut s = String::new();
    writeln!(s, "{DECOMPOSE_MAGIC}").unwrap();
    writeln!(s, "components {}", components.len()).unwrap();
    writeln!(s, "resum_max_abs_error {resum_max_abs_error}").unwrap();
    writeln!(s, "verified {verified}").unwrap();
    write_text_atomic(&out_dir.join("decompose_summary.txt"), &s)?;

    Ok(DecomposeOutcome {
        component_paths,
        resum_max_abs_error,
        verified,
    })
}

/// One row of the sweep report.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub lambda: f64,
    pub report: LossReport,
    pub proxy_score: f64,
    pub psnr_db: f64,
    pub ssim_value: Option<f64>,
    pub enhanced_path: PathBuf,
    pub coefficients_path: PathBuf,
}

/// Independent optimizations per lambda; writes one enhanced image and
/// coefficient file per value plus a tab-delimited report.
pub fn cmd_sweep(
    manifest: &RunManifest,
    lambdas: &[f64],
    out_dir: &Path,
) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(CliError::Usage("sweep needs at least one lambda".into()));
    }
    manifest.validate()?;
    for &l in lambdas {
        if !(0.0..=1.0).contains(&l) {
            return Err(CliError::Usage(format!(
                "lambda must be in [0, 1], got {l}"
            )));
        }
    }
    let (original, variants) = load_sources(manifest)?;
    let grid = frequency_distance_grid(original.height(), original.width())?;
    let bank = make_basis_bank(&grid, manifest.bands)?;
    let mut images = Vec::with_capacity(variants.len() + 1);
    images.push(original.clone());
    images.extend(variants.iter().cloned());

    let mut sorted: Vec<f64> = lambdas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite lambdas"));

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let proxy = ProxySpec::default();
    let mut rows = Vec::with_capacity(sorted.len());
    for (k, &lambda) in sorted.iter().enumerate() {
        let trace =
            optimize_coefficients(&original, &variants, &bank, lambda, &manifest.optimizer)?;
        let masks = compose_masks(&trace.coefficients, &bank)?;
        let fused = frequency_mixup(&images, &masks)?;
        let display = fused.clamped();
        let enhanced_path = out_dir.join(format!("enhanced_{k:02}_lambda_{lambda}.png"));
        let coefficients_path = out_dir.join(format!("coefficients_{k:02}_lambda_{lambda}.txt"));
        write_image(&display, &enhanced_path, BitDepth::Sixteen)?;
        CoefficientFile {
            coefficients: trace.coefficients.clone(),
            lambda,
            height: original.height(),
            width: original.width(),
        }
        .save(&coefficients_path)?;
        rows.push(SweepRow {
            lambda,
            report: *trace.final_loss(),
            proxy_score: perceptual_proxy_score(&fused, &proxy)?,
            psnr_db: psnr(&display, &original)?,
            ssim_value: if original.height() >= 11 && original.width() >= 11 {
                Some(ssim(&display, &original)?)
            } else {
                None
            },
            enhanced_path,
            coefficients_path,
        });
    }

    let mut tsv = String::new();
    writeln!(tsv, "{SWEEP_MAGIC}").unwrap();
    writeln!(
        tsv,
        "lambda\trecon\tpercep\tcomposite\tproxy_score\tpsnr\tssim\tenhanced\tcoefficients"
    )
    .unwrap();
    for row in &rows {
        writeln!(
            tsv,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            row.lambda,
            row.report.recon,
            row.report.percep,
            row.report.composite,
            row.proxy_score,
            row.psnr_db,
            row.ssim_value
                .map(|v| v.to_string())
                .unwrap_or_else(|| "n/a".into()),
            row.enhanced_path.file_name().unwrap().to_string_lossy(),
            row.coefficients_path
                .file_name()
                .unwrap()
                .to_string_lossy(),
        )
        .unwrap();
    }
    write_text_atomic(&out_dir.join("sweep_report.tsv"), &tsv)?;
    Ok(rows)
}

/// Writes the generated variant set for inspection.
pub fn cmd_gen_variants(manifest: &RunManifest, out_dir: &Path) -> Result<Vec<PathBuf>> {
    manifest.validate()?;
    let VariantSource::Generated(cfg) = &manifest.variants else {
        return Err(CliError::Usage(
            "gen-variants generates variants; drop --variants".into(),
        ));
    };
    let original = read_image(&manifest.original)?;
    let variants = make_variant_set(&original, cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut paths = Vec::new();
    for (v, &scale) in variants.iter().zip(&cfg.scales) {
        let path = out_dir.join(format!("variant_x{scale}.png"));
        write_image(v, &path, BitDepth::Sixteen)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Lambda schedule for dataset export.
#[derive(Debug, Clone)]
pub enum LambdaSpec {
    Fixed(Vec<f64>),
    Uniform { count: usize, seed: u64 },
}

impl LambdaSpec {
    /// The concrete lambda list; uniform draws come from a seeded generator
    /// and are shared by every corpus image.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            LambdaSpec::Fixed(list) => {
                if list.is_empty() {
                    return Err(CliError::Usage("lambda list is empty".into()));
                }
                for &l in list {
                    if !(0.0..=1.0).contains(&l) {
                        return Err(CliError::Usage(format!(
                            "lambda must be in [0, 1], got {l}"
                        )));
                    }
                }
                Ok(list.clone())
            }
            LambdaSpec::Uniform { count, seed } => {
                if *count == 0 {
                    return Err(CliError::Usage("sample count must be positive".into()));
                }
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count).map(|_| rng.gen_range(0.0..=1.0)).collect())
            }
        }
    }
}

/// Enhances every (image, lambda) pair with a bounded worker pool and
/// writes the training pairs plus a line-delimited index. Per-image
/// failures become error entries; the export continues.
pub fn cmd_export_dataset(
    inputs: &[PathBuf],
    spec: &LambdaSpec,
    template: &RunManifest,
    workers: usize,
    out_dir: &Path,
) -> Result<Vec<IndexEntry>> {
    if inputs.is_empty() {
        return Err(CliError::Usage("export needs at least one input".into()));
    }
    if workers == 0 {
        return Err(CliError::Usage("workers must be at least 1".into()));
    }
    let lambdas = spec.resolve()?;
    let pairs_dir = out_dir.join("pairs");
    std::fs::create_dir_all(&pairs_dir).map_err(|e| CliError::io(&pairs_dir, e))?;

    let mut jobs = Vec::new();
    for input in inputs {
        for (k, &lambda) in lambdas.iter().enumerate() {
            jobs.push((input.clone(), k, lambda));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
    let entries: Vec<IndexEntry> = pool.install(|| {
        jobs.par_iter()
            .map(|(input, k, lambda)| {
                export_one(input, *k, *lambda, template, &pairs_dir)
                    .unwrap_or_else(|e| IndexEntry::Error {
                        original: input.clone(),
                        lambda: *lambda,
                        message: e.to_string(),
                    })
            })
            .collect()
    });

    write_text_atomic(&out_dir.join("index.txt"), &index_to_text(&entries))?;
    Ok(entries)
}

fn export_one(
    input: &Path,
    k: usize,
    lambda: f64,
    template: &RunManifest,
    pairs_dir: &Path,
) -> Result<IndexEntry> {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "image".into());
    let enhanced_path = pairs_dir.join(format!("{stem}__{k:02}.png"));
    let coeff_path = pairs_dir.join(format!("{stem}__{k:02}.coeffs"));

    let original = read_image(input)?;
    let variants = match &template.variants {
        VariantSource::Generated(cfg) => make_variant_set(&original, cfg)?,
        VariantSource::External(_) => {
            return Err(CliError::Usage(
                "dataset export generates variants per image; external variants are not supported here".into(),
            ))
        }
    };
    let grid = frequency_distance_grid(original.height(), original.width())?;
    let bank = make_basis_bank(&grid, template.bands)?;
    let trace = optimize_coefficients(&original, &variants, &bank, lambda, &template.optimizer)?;
    let masks = compose_masks(&trace.coefficients, &bank)?;
    let mut images = Vec::with_capacity(variants.len() + 1);
    images.push(original);
    images.extend(variants);
    let fused = frequency_mixup(&images, &masks)?;

    write_image(&fused.clamped(), &enhanced_path, BitDepth::Sixteen)?;
    CoefficientFile {
        coefficients: trace.coefficients.clone(),
        lambda,
        height: images[0].height(),
        width: images[0].width(),
    }
    .save(&coeff_path)?;

    Ok(IndexEntry::Record {
        original: input.to_path_buf(),
        enhanced: enhanced_path.clone(),
        lambda,
        coefficients: coeff_path.clone(),
        sha_original: sha256_hex(input)?,
        sha_enhanced: sha256_hex(&enhanced_path)?,
        sha_coefficients: sha256_hex(&coeff_path)?,
    })
}

/// Proxy scores, band energies, and optional reference metrics for one
/// image, as versioned line-delimited text.
pub fn cmd_stats(input: &Path, reference: Option<&Path>, bands: usize) -> Result<String> {
    let img = read_image(input)?;
    let raw = |kind: ProxyKind| -> Result<f64> {
        let spec = ProxySpec::new(vec![ProxyTerm {
            kind,
            weight: 1.0,
            offset: 0.0,
            scale: 1.0,
        }])?;
        Ok(perceptual_proxy_score(&img, &spec)?)
    };

    let mut s = String::new();
    writeln!(s, "{STATS_MAGIC}").unwrap();
    writeln!(s, "input {}", input.display()).unwrap();
    writeln!(s, "height {}", img.height()).unwrap();
    writeln!(s, "width {}", img.width()).unwrap();
    writeln!(s, "channels {}", img.channels()).unwrap();
    for kind in [
        ProxyKind::HighFrequencyEnergyRatio,
        ProxyKind::Tenengrad,
        ProxyKind::LaplacianVariance,
    ] {
        writeln!(s, "proxy_raw {} {}", kind.id(), raw(kind)?).unwrap();
    }
    writeln!(
        s,
        "proxy_score {}",
        perceptual_proxy_score(&img, &ProxySpec::default())?
    )
    .unwrap();

    let grid = frequency_distance_grid(img.height(), img.width())?;
    let bank = make_basis_bank(&grid, bands)?;
    let profile = band_energy_profile(&img, &bank)?;
    for (b, e) in profile.energies().iter().enumerate() {
        writeln!(s, "band_energy {b} {e}").unwrap();
    }

    if let Some(ref_path) = reference {
        let reference = read_image(ref_path)?;
        writeln!(s, "reference {}", ref_path.display()).unwrap();
        writeln!(s, "psnr {}", psnr(&img, &reference)?).unwrap();
        if img.height() >= 11 && img.width() >= 11 {
            writeln!(s, "ssim {}", ssim(&img, &reference)?).unwrap();
        } else {
            writeln!(s, "ssim n/a").unwrap();
        }
    }
    Ok(s)
}

/// Writes the bundled synthetic corpus as PNG files; a convenience for
/// exercising the pipeline without external data.
pub fn write_demo_corpus(out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut paths = Vec::new();
    for (i, img) in corpus::bundled_corpus().iter().enumerate() {
        let path = out_dir.join(format!("corpus_{i:02}.png"));
        write_image(img, &path, BitDepth::Sixteen)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Helper shared by tests: a manifest with generated default variants.
pub fn default_manifest(original: PathBuf, lambda: f64) -> RunManifest {
    RunManifest {
        original,
        lambda,
        bands: 25,
        optimizer: freqmix::optim::OptimizerConfig::default(),
        variants: VariantSource::Generated(freqmix::variants::VariantConfig::default()),
    }
}

/// Convenience used by the determinism and speedup checks: enhances every
/// input into its own subdirectory with a given worker count.
pub fn enhance_corpus(
    inputs: &[PathBuf],
    lambda: f64,
    workers: usize,
    out_root: &Path,
) -> Result<Vec<EnhanceOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<EnhanceOutcome>> = pool.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, input)| {
                let manifest = default_manifest(input.clone(), lambda);
                cmd_enhance(&manifest, &out_root.join(format!("run_{i:02}")))
            })
            .collect()
    });
    results.into_iter().collect()
}
