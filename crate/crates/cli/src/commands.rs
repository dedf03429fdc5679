use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crease_core::augment::{apply_augmentation, find_augmentation, list_augmentations};
use crease_core::bridge::monte_carlo_check;
use crease_core::dataset::{
    dataset_ssim, generate_dataset, pixel_diversity, verify_manifest, DatasetConfig,
    DatasetManifest, Variant,
};
use crease_core::edgeproc::{extract_edges_dir, list_pngs, EdgePipelineConfig};
use crease_core::metrics::{
    det_curve, diversity, eer, frechet_distance, gaussian_stats, ssim, tmr_at_fmr, write_det_csv,
    FeatureSet, GaussianStats, ScoreSet,
};
use crease_core::seed::derive_rng;
use crease_core::ImageGray;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::error::CliError;

fn emit<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        // A closed pipe (`| head`) is the reader's choice, not a failure.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{}: no such file",
            path.display()
        )))
    }
}

fn require_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{}: no such directory",
            path.display()
        )))
    }
}

fn resolve_seed(flag: Option<u64>, env: Option<String>) -> Result<u64, CliError> {
    if let Some(raw) = env {
        return raw
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{SEED_ENV}={raw:?} is not a 64-bit seed")));
    }
    flag.ok_or_else(|| CliError::Validation(format!("--seed is required (or set {SEED_ENV})")))
}

fn seed_from(flag: Option<u64>) -> Result<u64, CliError> {
    resolve_seed(flag, std::env::var(SEED_ENV).ok())
}

fn parse_canvas(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Validation(format!("--canvas {spec:?}: expected WxH"));
    let (w, h) = spec
        .to_ascii_lowercase()
        .split_once('x')
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .ok_or_else(bad)?;
    Ok((
        w.trim().parse().map_err(|_| bad())?,
        h.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Edges(a) => edges(a),
        Command::Augment(a) => augment(a),
        Command::Metrics(m) => metrics(m),
        Command::BridgeCheck(a) => bridge_check(a),
        Command::Verify(a) => verify(a),
    }
}

fn generate(a: GenerateArgs) -> Result<(), CliError> {
    let seed = seed_from(a.seed)?;
    let variant = match a.variant {
        VariantArg::Fc => Variant::Fc,
        VariantArg::Cpd => Variant::Cpd,
        VariantArg::Vpd => Variant::Vpd,
    };
    let mut cfg = DatasetConfig::new(variant, a.ids, seed);
    let (w, h) = parse_canvas(&a.canvas)?;
    cfg.canvas.width = w;
    cfg.canvas.height = h;
    cfg.canvas.margin = a.margin;
    cfg.canvas.stroke_thickness = a.thickness;
    cfg.cpd_magnitude = a.cpd_magnitude;
    if let Some(name) = a.name {
        cfg.name = name;
    }
    cfg.validate()?;
    let start = std::time::Instant::now();
    let manifest = generate_dataset(&cfg, &a.out)?;
    emit(&json!({
        "out": a.out,
        "variant": manifest.variant,
        "identities": manifest.n_identities,
        "images": manifest.entries.len(),
        "seed": seed,
        "seconds": start.elapsed().as_secs_f64(),
    }))
}

fn edges(a: EdgesArgs) -> Result<(), CliError> {
    require_dir(&a.input)?;
    let cfg = EdgePipelineConfig {
        blur_kernel: a.blur_kernel,
        blur_sigma: a.blur_sigma,
        dilate_kernel: a.dilate_kernel,
        dilate_iterations: a.dilate_iters,
        quotient_epsilon: a.epsilon,
    };
    cfg.validate()?;
    let written = extract_edges_dir(&a.input, &a.out, &cfg)?;
    emit(&json!({ "out": a.out, "processed": written.len(), "config": cfg }))
}

fn augment(a: AugmentArgs) -> Result<(), CliError> {
    let seed = seed_from(a.seed)?;
    require_dir(&a.input)?;
    let registry = if a.only.is_empty() {
        list_augmentations()
    } else {
        a.only
            .iter()
            .map(|n| find_augmentation(n.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    let files = list_pngs(&a.input)?;
    let inputs = files
        .iter()
        .map(|p| {
            let img = ImageGray::read_png(p)?;
            if !img.is_binary() {
                return Err(CliError::Validation(format!(
                    "{}: not a binary image",
                    p.display()
                )));
            }
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((stem, img))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    fs::create_dir_all(&a.out)?;
    let jobs: Vec<(usize, usize)> = (0..inputs.len())
        .flat_map(|i| (0..registry.len()).map(move |k| (i, k)))
        .collect();
    let written = jobs
        .par_iter()
        .map(|&(i, k)| {
            let (stem, img) = &inputs[i];
            let spec = &registry[k];
            let mut rng = derive_rng(seed, &["augment", stem, &spec.name]);
            let out = apply_augmentation(img, spec, &mut rng)?;
            let path = a.out.join(format!("{stem}_{}.png", spec.name));
            out.write_png(&path)?;
            Ok(path)
        })
        .collect::<Result<Vec<PathBuf>, CliError>>()?;
    let names: Vec<&str> = registry.iter().map(|s| s.name.as_str()).collect();
    let dump =
        serde_json::to_string_pretty(&registry).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(a.out.join("registry.json"), dump)?;
    emit(
        &json!({ "out": a.out, "inputs": inputs.len(), "written": written.len(), "augmentations": names, "seed": seed }),
    )
}

fn read_manifest(path: &Path) -> Result<(DatasetManifest, PathBuf), CliError> {
    require_file(path)?;
    let manifest = DatasetManifest::read(path)?;
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((manifest, root))
}

fn read_stats(path: &Path) -> Result<GaussianStats, CliError> {
    require_file(path)?;
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_scores(path: &Path) -> Result<ScoreSet, CliError> {
    require_file(path)?;
    Ok(ScoreSet::read_csv(path)?)
}

fn metrics(m: MetricsCommand) -> Result<(), CliError> {
    match m {
        MetricsCommand::Ssim(a) => match (a.a, a.b, a.manifest) {
            (Some(pa), Some(pb), _) => {
                require_file(&pa)?;
                require_file(&pb)?;
                let value = ssim(&ImageGray::read_png(&pa)?, &ImageGray::read_png(&pb)?)?;
                emit(&json!({ "metric": "ssim", "value": value }))
            }
            (_, _, Some(path)) => {
                let (manifest, root) = read_manifest(&path)?;
                emit(&dataset_ssim(&manifest, &root)?)
            }
            _ => Err(CliError::Validation(
                "give --a and --b, or --manifest".into(),
            )),
        },
        MetricsCommand::Diversity(a) => {
            if let Some(path) = a.features {
                require_file(&path)?;
                emit(&diversity(&FeatureSet::read_csv(&path)?)?)
            } else if let Some(path) = a.manifest {
                if a.pool == 0 {
                    return Err(CliError::Validation("--pool must be at least 1".into()));
                }
                let (manifest, root) = read_manifest(&path)?;
                let mut report = pixel_diversity(&manifest, &root, a.pool)?;
                report.metric = format!("pixel_diversity_pool{}", a.pool);
                emit(&report)
            } else {
                Err(CliError::Validation("give --features or --manifest".into()))
            }
        }
        MetricsCommand::Fid(a) => {
            let (s1, s2) = match (a.features_a, a.features_b, a.stats_a, a.stats_b) {
                (Some(fa), Some(fb), _, _) => {
                    require_file(&fa)?;
                    require_file(&fb)?;
                    (
                        gaussian_stats(&FeatureSet::read_csv(&fa)?)?,
                        gaussian_stats(&FeatureSet::read_csv(&fb)?)?,
                    )
                }
                (_, _, Some(sa), Some(sb)) => (read_stats(&sa)?, read_stats(&sb)?),
                _ => {
                    return Err(CliError::Validation(
                        "give two feature files or two stats files".into(),
                    ))
                }
            };
            let value = frechet_distance(&s1, &s2)?;
            emit(
                &json!({ "metric": "fid", "value": value, "dim": s1.dim(), "n_a": s1.n, "n_b": s2.n }),
            )
        }
        MetricsCommand::Eer(a) => {
            let scores = read_scores(&a.scores)?;
            let r = eer(&scores)?;
            emit(&json!({
                "metric": "eer",
                "eer": r.eer,
                "threshold": r.threshold,
                "genuine": scores.genuine.len(),
                "impostor": scores.impostor.len(),
            }))
        }
        MetricsCommand::Tmr(a) => {
            let scores = read_scores(&a.scores)?;
            let points = a
                .fmr
                .iter()
                .map(|&t| Ok(json!({ "fmr_target": t, "tmr": tmr_at_fmr(&scores, t)? })))
                .collect::<Result<Vec<_>, CliError>>()?;
            emit(&json!({ "metric": "tmr", "points": points }))
        }
        MetricsCommand::Det(a) => {
            let scores = read_scores(&a.scores)?;
            let curve = det_curve(&scores, a.points)?;
            match a.out {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        fs::create_dir_all(dir)?;
                    }
                    write_det_csv(&curve, fs::File::create(&path)?)?;
                    emit(&json!({ "metric": "det", "points": curve.len(), "out": path }))
                }
                None => Ok(write_det_csv(&curve, std::io::stdout().lock())?),
            }
        }
    }
}

fn bridge_check(a: BridgeArgs) -> Result<(), CliError> {
    let seed = match (a.seed, std::env::var(SEED_ENV).ok()) {
        (None, None) => 0,
        (flag, env) => resolve_seed(flag, env)?,
    };
    let report = monte_carlo_check(a.max_step, a.samples, seed)?;
    emit(&report)?;
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Runtime(format!(
            "bridge checks failed: {}",
            failed.join("; ")
        )))
    }
}

fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let (manifest, root) = read_manifest(&a.manifest)?;
    let report = verify_manifest(&manifest, &root);
    emit(&report)?;
    if report.ok() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} manifest mismatch(es)",
            report.mismatches.len()
        )))
    }
}
