//! End-to-end dataset builds with on-disk manifests.
//!
//! Layout: `out/<identity>/identity.json`, `out/<identity>/<index>_<tag>.png`
//! and `out/manifest.json`, written last.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{apply_augmentation, list_augmentations, AugmentError, AugmentationSpec};
use crate::geometry::{GeometryError, IdentityConfig, IdentityRecord, GENERATOR_VERSION};
use crate::gray::{ImageError, ImageGray};
use crate::metrics::{
    diversity, grouped_report, intra_subject_ssim, FeatureSet, GroupedReport, MetricsError,
};
use crate::raster::{render_identity, CanvasConfig, RasterError};
use crate::seed::{content_hash, derive_rng, derive_seed};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const IDENTITY_FILE: &str = "identity.json";
pub const MATED_SAMPLES: usize = 10;
/// Default CPD jitter in grid units. Jitter on the scale of the sampling
/// margin moves every stroke clear of its previous position.
pub const DEFAULT_CPD_MAGNITUDE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unknown variant {0:?} (expected fc, cpd or vpd)")]
    UnknownVariant(String),
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("identity {id}: {source}")]
    Geometry { id: String, source: GeometryError },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported manifest version {0}")]
    ManifestVersion(u32),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "FC")]
    Fc,
    #[serde(rename = "CPD")]
    Cpd,
    #[serde(rename = "VPD")]
    Vpd,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Fc => "fc",
            Variant::Cpd => "cpd",
            Variant::Vpd => "vpd",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fc" => Ok(Variant::Fc),
            "cpd" => Ok(Variant::Cpd),
            "vpd" => Ok(Variant::Vpd),
            _ => Err(DatasetError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    pub variant: Variant,
    pub n_identities: usize,
    pub global_seed: u64,
    pub canvas: CanvasConfig,
    pub identity: IdentityConfig,
    /// Guide-point jitter for CPD in grid units.
    pub cpd_magnitude: f64,
    pub registry: Vec<AugmentationSpec>,
}

impl DatasetConfig {
    pub fn new(variant: Variant, n_identities: usize, global_seed: u64) -> Self {
        Self {
            name: format!("crease-{}", variant.tag()),
            variant,
            n_identities,
            global_seed,
            canvas: CanvasConfig::default(),
            identity: IdentityConfig::default(),
            cpd_magnitude: DEFAULT_CPD_MAGNITUDE,
            registry: list_augmentations(),
        }
    }

    pub fn samples_per_identity(&self) -> usize {
        match self.variant {
            Variant::Fc | Variant::Cpd => MATED_SAMPLES,
            Variant::Vpd => self.registry.len(),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        self.canvas.validate()?;
        self.identity
            .validate()
            .map_err(|source| DatasetError::Geometry {
                id: String::new(),
                source,
            })?;
        if self.n_identities == 0 {
            return Err(DatasetError::Config(
                "n_identities must be at least 1".into(),
            ));
        }
        if self.variant == Variant::Vpd && self.registry.is_empty() {
            return Err(DatasetError::Config(
                "VPD needs a non-empty registry".into(),
            ));
        }
        let m = self.cpd_magnitude;
        if !(m.is_finite() && m >= 0.0) {
            return Err(DatasetError::Config(format!("cpd magnitude {m}")));
        }
        Ok(())
    }
}

pub fn identity_id(index: usize) -> String {
    format!("id{index:04}")
}

pub fn identity_seed(global_seed: u64, index: usize) -> u64 {
    derive_seed(global_seed, &["identity", &index.to_string()])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub identity_id: String,
    pub variant_index: usize,
    pub augmentation: Option<String>,
    pub file: String,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityEntry {
    pub identity_id: String,
    pub seed: u64,
    pub file: String,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub manifest_version: u32,
    pub name: String,
    pub variant: Variant,
    pub global_seed: u64,
    pub n_identities: usize,
    pub samples_per_identity: usize,
    pub generator_version: String,
    pub canvas: CanvasConfig,
    pub identity_config: IdentityConfig,
    pub cpd_magnitude: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub registry: Option<Vec<AugmentationSpec>>,
    pub identities: Vec<IdentityEntry>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> Result<String, DatasetError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let m: Self = serde_json::from_str(text)?;
        if m.manifest_version != MANIFEST_VERSION {
            return Err(DatasetError::ManifestVersion(m.manifest_version));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    /// Entries grouped by identity, each group ordered by variant index.
    pub fn groups(&self) -> Vec<(String, Vec<&ManifestEntry>)> {
        let mut out: Vec<(String, Vec<&ManifestEntry>)> = self
            .identities
            .iter()
            .map(|i| (i.identity_id.clone(), Vec::new()))
            .collect();
        for e in &self.entries {
            if let Some((_, v)) = out.iter_mut().find(|(id, _)| *id == e.identity_id) {
                v.push(e);
            }
        }
        for (_, v) in out.iter_mut() {
            v.sort_by_key(|e| e.variant_index);
        }
        out
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn build_identity(
    config: &DatasetConfig,
    index: usize,
    out_dir: &Path,
) -> Result<(IdentityEntry, Vec<ManifestEntry>), DatasetError> {
    let id = identity_id(index);
    let seed = identity_seed(config.global_seed, index);
    let geo = |source| DatasetError::Geometry {
        id: id.clone(),
        source,
    };
    let record = IdentityRecord::generate(&id, seed, &config.identity).map_err(geo)?;
    record.validate().map_err(geo)?;
    let dir = out_dir.join(&id);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let json = record.to_json().map_err(geo)?;
    write_bytes(&dir.join(IDENTITY_FILE), json.as_bytes())?;
    let identity_entry = IdentityEntry {
        identity_id: id.clone(),
        seed,
        file: format!("{id}/{IDENTITY_FILE}"),
        content_hash: content_hash(json.as_bytes()),
    };

    let mut entries = Vec::with_capacity(config.samples_per_identity());
    let mut emit = |k: usize, tag: &str, aug: Option<String>, img: &ImageGray| {
        let rel = format!("{id}/{k:02}_{tag}.png");
        let bytes = img.write_png(&out_dir.join(&rel))?;
        entries.push(ManifestEntry {
            identity_id: id.clone(),
            variant_index: k,
            augmentation: aug,
            file: rel,
            content_hash: content_hash(&bytes),
        });
        Ok::<_, DatasetError>(())
    };

    match config.variant {
        Variant::Fc => {
            let base = render_identity(&record, &config.canvas)?;
            for k in 0..MATED_SAMPLES {
                emit(k, "fc", None, &base)?;
            }
        }
        Variant::Cpd => {
            for k in 0..MATED_SAMPLES {
                let child = record
                    .cpd_variant_seeded(k as u32, config.cpd_magnitude)
                    .map_err(geo)?;
                if child.mask != record.mask {
                    return Err(geo(GeometryError::Inconsistent(format!(
                        "variant {k} changed the grid mask"
                    ))));
                }
                emit(k, "cpd", None, &render_identity(&child, &config.canvas)?)?;
            }
        }
        Variant::Vpd => {
            let base = render_identity(&record, &config.canvas)?;
            for (k, spec) in config.registry.iter().enumerate() {
                let mut rng = derive_rng(config.global_seed, &["augment", &id, &spec.name]);
                let img = apply_augmentation(&base, spec, &mut rng)?;
                emit(k, &spec.name, Some(spec.name.clone()), &img)?;
            }
        }
    }
    Ok((identity_entry, entries))
}

/// Builds every identity in parallel and writes the manifest once all
/// images exist. A failure leaves no manifest behind.
pub fn generate_dataset(
    config: &DatasetConfig,
    out_dir: &Path,
) -> Result<DatasetManifest, DatasetError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(io_err(&manifest_path))?;
    }
    let built = (0..config.n_identities)
        .into_par_iter()
        .map(|i| build_identity(config, i, out_dir))
        .collect::<Result<Vec<_>, _>>()?;
    let mut identities = Vec::with_capacity(built.len());
    let mut entries = Vec::with_capacity(built.len() * config.samples_per_identity());
    for (ident, e) in built {
        identities.push(ident);
        entries.extend(e);
    }
    let manifest = DatasetManifest {
        manifest_version: MANIFEST_VERSION,
        name: config.name.clone(),
        variant: config.variant,
        global_seed: config.global_seed,
        n_identities: config.n_identities,
        samples_per_identity: config.samples_per_identity(),
        generator_version: GENERATOR_VERSION.to_string(),
        canvas: config.canvas,
        identity_config: config.identity.clone(),
        cpd_magnitude: config.cpd_magnitude,
        registry: (config.variant == Variant::Vpd).then(|| config.registry.clone()),
        identities,
        entries,
    };
    if manifest.entries.len() != manifest.n_identities * manifest.samples_per_identity {
        return Err(DatasetError::Config(
            "entry count does not match the configuration".into(),
        ));
    }
    write_bytes(&manifest_path, manifest.to_json()?.as_bytes())?;
    log::info!(
        "wrote {} {} images for {} identities to {}",
        manifest.entries.len(),
        manifest.variant.tag(),
        manifest.n_identities,
        out_dir.display()
    );
    Ok(manifest)
}

/// Keeps the first identity for each distinct serialized grid mask.
pub fn dedup_masks(identities: Vec<IdentityRecord>) -> (Vec<IdentityRecord>, Vec<IdentityRecord>) {
    let mut seen = std::collections::HashSet::new();
    identities
        .into_iter()
        .partition(|r| seen.insert(serde_json::to_string(&r.mask).expect("mask serializes")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mismatch {
    Missing {
        file: String,
    },
    HashMismatch {
        file: String,
        expected: String,
        found: String,
    },
    Count {
        expected: usize,
        found: usize,
    },
    Schema {
        detail: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub files_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-hashes every file listed in the manifest and checks entry counts.
pub fn verify_manifest(manifest: &DatasetManifest, root: &Path) -> VerifyReport {
    let mut mismatches = Vec::new();
    let expected = manifest.n_identities * manifest.samples_per_identity;
    if manifest.entries.len() != expected {
        mismatches.push(Mismatch::Count {
            expected,
            found: manifest.entries.len(),
        });
    }
    if manifest.identities.len() != manifest.n_identities {
        mismatches.push(Mismatch::Count {
            expected: manifest.n_identities,
            found: manifest.identities.len(),
        });
    }
    for (id, group) in manifest.groups() {
        if group.len() != manifest.samples_per_identity {
            mismatches.push(Mismatch::Schema {
                detail: format!("{id} has {} samples", group.len()),
            });
        }
    }
    let files: Vec<(&str, &str)> = manifest
        .identities
        .iter()
        .map(|i| (i.file.as_str(), i.content_hash.as_str()))
        .chain(
            manifest
                .entries
                .iter()
                .map(|e| (e.file.as_str(), e.content_hash.as_str())),
        )
        .collect();
    let checked: Vec<Option<Mismatch>> = files
        .par_iter()
        .map(|(file, hash)| match fs::read(root.join(file)) {
            Err(_) => Some(Mismatch::Missing {
                file: file.to_string(),
            }),
            Ok(bytes) => {
                let found = content_hash(&bytes);
                (found != *hash).then(|| Mismatch::HashMismatch {
                    file: file.to_string(),
                    expected: hash.to_string(),
                    found,
                })
            }
        })
        .collect();
    mismatches.extend(checked.into_iter().flatten());
    VerifyReport {
        files_checked: files.len(),
        mismatches,
    }
}

/// Loads every identity's images in variant order.
pub fn load_groups(
    manifest: &DatasetManifest,
    root: &Path,
) -> Result<Vec<(String, Vec<ImageGray>)>, DatasetError> {
    manifest
        .groups()
        .into_par_iter()
        .map(|(id, entries)| {
            let imgs = entries
                .iter()
                .map(|e| ImageGray::read_png(&root.join(&e.file)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((id, imgs))
        })
        .collect()
}

/// First-pose SSIM protocol over a built dataset.
pub fn dataset_ssim(
    manifest: &DatasetManifest,
    root: &Path,
) -> Result<GroupedReport, DatasetError> {
    Ok(intra_subject_ssim(&load_groups(manifest, root)?)?)
}

/// Pixel features of a prompt: mean intensity of each `pool x pool` block,
/// scaled to `[0, 1]`. `pool = 1` gives the raw pixels.
pub fn pixel_features(img: &ImageGray, pool: usize) -> Vec<f64> {
    let pool = pool.max(1);
    let (w, h) = (img.width() / pool, img.height() / pool);
    let scale = 1.0 / (255.0 * (pool * pool) as f64);
    let mut out = vec![0.0; w * h];
    for y in 0..h * pool {
        for x in 0..w * pool {
            out[(y / pool) * w + x / pool] += img.get(x, y) as f64 * scale;
        }
    }
    out
}

/// Intra-subject diversity over [`pixel_features`]. Groups are processed one
/// at a time to bound memory.
pub fn pixel_diversity(
    manifest: &DatasetManifest,
    root: &Path,
    pool: usize,
) -> Result<GroupedReport, DatasetError> {
    let results = manifest
        .groups()
        .into_par_iter()
        .map(|(id, entries)| {
            let rows = entries
                .iter()
                .map(|e| {
                    Ok(pixel_features(
                        &ImageGray::read_png(&root.join(&e.file))?,
                        pool,
                    ))
                })
                .collect::<Result<Vec<Vec<f64>>, DatasetError>>()?;
            let n = rows.len();
            if n < 2 {
                return Ok((id, n, None));
            }
            let fs = FeatureSet::new(rows, Some(vec![id.clone(); n]))?;
            Ok((id, n, Some(diversity(&fs)?.mean)))
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(grouped_report("diversity", results)?)
}
