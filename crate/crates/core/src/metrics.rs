//! Image similarity, feature-space diversity, Fréchet distance between
//! Gaussian feature statistics, and verification error rates.
//!
//! Scores follow the similarity convention: higher means more likely a match.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edgeproc::gaussian_kernel;
use crate::gray::ImageGray;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("images differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("image {width}x{height} smaller than the {window}x{window} window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("invalid ssim configuration")]
    BadConfig,
    #[error("empty {0} score list")]
    EmptyScores(&'static str),
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("fmr target {0} outside (0, 1)")]
    BadTarget(f64),
    #[error("det curve needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("feature rows have inconsistent width ({expected} vs {found})")]
    Ragged { expected: usize, found: usize },
    #[error("need at least 2 feature rows, got {0}")]
    TooFewRows(usize),
    #[error("statistics dimension mismatch: {0} vs {1}")]
    StatsDimension(usize, usize),
    #[error("covariance is not symmetric positive semidefinite")]
    NotPsd,
    #[error("matrix square root failed: eigenvalue {0}")]
    SqrtFailed(f64),
    #[error("no group has at least 2 samples")]
    NoGroups,
    #[error("group labels required")]
    MissingGroups,
    #[error("bad score label {0:?}")]
    BadLabel(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed csv: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

/// Valid-mode separable weighted sum of one plane.
fn valid_filter(plane: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(t, c)| c * plane[y * w + x + t])
                .sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(t, c)| c * rows[(y + t) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean local SSIM over every valid window position.
pub fn ssim_with(a: &ImageGray, b: &ImageGray, cfg: &SsimConfig) -> Result<f64, MetricsError> {
    let (w, h) = (a.width(), a.height());
    if (w, h) != (b.width(), b.height()) {
        return Err(MetricsError::DimensionMismatch(w, h, b.width(), b.height()));
    }
    if cfg.window == 0 || cfg.window.is_multiple_of(2) || !(cfg.sigma > 0.0) {
        return Err(MetricsError::BadConfig);
    }
    if w < cfg.window || h < cfg.window {
        return Err(MetricsError::TooSmall {
            width: w,
            height: h,
            window: cfg.window,
        });
    }
    let taps = gaussian_kernel(cfg.window, cfg.sigma);
    let pa: Vec<f64> = a.data().iter().map(|&v| v as f64).collect();
    let pb: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
    let paa: Vec<f64> = pa.iter().map(|v| v * v).collect();
    let pbb: Vec<f64> = pb.iter().map(|v| v * v).collect();
    let pab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    let [ma, mb, maa, mbb, mab] =
        [&pa, &pb, &paa, &pbb, &pab].map(|p| valid_filter(p, w, h, &taps));
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);
    let mut total = 0.0;
    for i in 0..ma.len() {
        let (mx, my) = (ma[i], mb[i]);
        let vx = maa[i] - mx * mx;
        let vy = mbb[i] - my * my;
        let cxy = mab[i] - mx * my;
        total +=
            ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / ma.len() as f64)
}

pub fn ssim(a: &ImageGray, b: &ImageGray) -> Result<f64, MetricsError> {
    ssim_with(a, b, &SsimConfig::default())
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupScore {
    pub id: String,
    pub value: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupedReport {
    pub metric: String,
    pub mean: f64,
    pub groups: Vec<GroupScore>,
    pub skipped: Vec<String>,
}

/// Averages per-group values; `None` entries are logged and listed as skipped.
pub fn grouped_report(
    metric: &str,
    results: Vec<(String, usize, Option<f64>)>,
) -> Result<GroupedReport, MetricsError> {
    let mut groups = Vec::new();
    let mut skipped = Vec::new();
    for (id, count, value) in results {
        match value {
            Some(value) => groups.push(GroupScore { id, value, count }),
            None => {
                log::warn!("{metric}: group {id} has {count} sample(s), skipped");
                skipped.push(id);
            }
        }
    }
    if groups.is_empty() {
        return Err(MetricsError::NoGroups);
    }
    let mean = groups.iter().map(|g| g.value).sum::<f64>() / groups.len() as f64;
    Ok(GroupedReport {
        metric: metric.to_string(),
        mean,
        groups,
        skipped,
    })
}

/// Per identity, mean SSIM of the first pose against each later pose, then
/// the mean over identities. Identities with a single pose are skipped.
pub fn intra_subject_ssim(
    identities: &[(String, Vec<ImageGray>)],
) -> Result<GroupedReport, MetricsError> {
    let results = identities
        .par_iter()
        .map(|(id, poses)| {
            if poses.len() < 2 {
                return Ok((id.clone(), poses.len(), None));
            }
            let scores = poses[1..]
                .iter()
                .map(|p| ssim(&poses[0], p))
                .collect::<Result<Vec<_>, _>>()?;
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            Ok((id.clone(), poses.len(), Some(mean)))
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    grouped_report("intra_subject_ssim", results)
}

/// Feature matrix with optional per-row group labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    rows: Vec<Vec<f64>>,
    group_ids: Option<Vec<String>>,
}

impl FeatureSet {
    pub fn new(rows: Vec<Vec<f64>>, group_ids: Option<Vec<String>>) -> Result<Self, MetricsError> {
        if let Some(first) = rows.first() {
            for r in &rows {
                if r.len() != first.len() {
                    return Err(MetricsError::Ragged {
                        expected: first.len(),
                        found: r.len(),
                    });
                }
            }
        }
        if let Some(g) = &group_ids {
            if g.len() != rows.len() {
                return Err(MetricsError::Format(
                    "one group label per row required".into(),
                ));
            }
        }
        Ok(Self { rows, group_ids })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Rows grouped by label, groups in order of first appearance.
    pub fn groups(&self) -> Result<Vec<(String, Vec<&[f64]>)>, MetricsError> {
        let ids = self.group_ids.as_ref().ok_or(MetricsError::MissingGroups)?;
        let mut out: Vec<(String, Vec<&[f64]>)> = Vec::new();
        for (id, row) in ids.iter().zip(&self.rows) {
            match out.iter_mut().find(|(g, _)| g == id) {
                Some((_, v)) => v.push(row),
                None => out.push((id.clone(), vec![row])),
            }
        }
        Ok(out)
    }

    /// Reads `id,f0,...,f{d-1}` CSV.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, MetricsError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("id") || headers.len() < 2 {
            return Err(MetricsError::Format(
                "feature header must be id,f0,...".into(),
            ));
        }
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| MetricsError::Format(s.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::new(rows, Some(ids))
    }

    pub fn read_csv(path: &Path) -> Result<Self, MetricsError> {
        Self::from_csv(std::fs::File::open(path)?)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Per group, mean pairwise Euclidean distance between rows; then the mean
/// over groups. Groups with fewer than two rows are skipped.
pub fn diversity(features: &FeatureSet) -> Result<GroupedReport, MetricsError> {
    let groups = features.groups()?;
    let results = groups
        .par_iter()
        .map(|(id, rows)| {
            if rows.len() < 2 {
                return (id.clone(), rows.len(), None);
            }
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..rows.len() {
                for j in i + 1..rows.len() {
                    total += euclidean(rows[i], rows[j]);
                    pairs += 1;
                }
            }
            (id.clone(), rows.len(), Some(total / pairs as f64))
        })
        .collect();
    grouped_report("diversity", results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianStats {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub n: usize,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.cov[i][j])
    }
}

/// Sample mean and unbiased covariance, symmetrized.
pub fn gaussian_stats(features: &FeatureSet) -> Result<GaussianStats, MetricsError> {
    let n = features.rows.len();
    if n < 2 {
        return Err(MetricsError::TooFewRows(n));
    }
    let d = features.dim();
    let mut mean = vec![0.0; d];
    for r in &features.rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    for r in &features.rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in 0..d {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            cov[i][j] /= (n - 1) as f64;
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            let s = (cov[i][j] + cov[j][i]) / 2.0;
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }
    Ok(GaussianStats { mean, cov, n })
}

const PSD_TOLERANCE: f64 = 1e-8;
const SQRT_CLIP_REL: f64 = 1e-6;

fn check_stats(s: &GaussianStats) -> Result<DMatrix<f64>, MetricsError> {
    let d = s.dim();
    if s.cov.len() != d || s.cov.iter().any(|r| r.len() != d) {
        return Err(MetricsError::StatsDimension(d, s.cov.len()));
    }
    let m = s.cov_matrix();
    for i in 0..d {
        for j in 0..d {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 {
                return Err(MetricsError::NotPsd);
            }
        }
    }
    let m = (&m + m.transpose()) / 2.0;
    if m.clone()
        .symmetric_eigenvalues()
        .iter()
        .any(|&l| l < -PSD_TOLERANCE)
    {
        return Err(MetricsError::NotPsd);
    }
    Ok(m)
}

/// Eigenvalue square roots with small negatives clipped to zero.
fn clipped_sqrt_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, MetricsError> {
    let mut eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    for l in eig.eigenvalues.iter_mut() {
        if *l < 0.0 {
            if *l < -SQRT_CLIP_REL * scale.max(f64::MIN_POSITIVE) {
                return Err(MetricsError::SqrtFailed(*l));
            }
            *l = 0.0;
        }
        *l = l.sqrt();
    }
    Ok(eig)
}

/// `||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2))`.
///
/// The trace term uses `Tr((S1 S2)^(1/2)) = Tr((A S2 A)^(1/2))` with
/// `A = S1^(1/2)`, which keeps every decomposition symmetric.
pub fn frechet_distance(s1: &GaussianStats, s2: &GaussianStats) -> Result<f64, MetricsError> {
    if s1.dim() != s2.dim() {
        return Err(MetricsError::StatsDimension(s1.dim(), s2.dim()));
    }
    let c1 = check_stats(s1)?;
    let c2 = check_stats(s2)?;
    let mu = DVector::from_column_slice(&s1.mean) - DVector::from_column_slice(&s2.mean);
    let a = clipped_sqrt_eigen(c1.clone())?.recompose();
    let inner = &a * &c2 * &a;
    let inner = (&inner + inner.transpose()) / 2.0;
    let tr_sqrt: f64 = clipped_sqrt_eigen(inner)?.eigenvalues.iter().sum();
    let value = mu.norm_squared() + c1.trace() + c2.trace() - 2.0 * tr_sqrt;
    let scale = mu.norm_squared() + c1.trace() + c2.trace();
    if value < -SQRT_CLIP_REL * scale.max(1.0) {
        return Err(MetricsError::SqrtFailed(value));
    }
    Ok(value.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

/// Sorted copies of both score lists plus the sorted distinct thresholds.
struct SortedScores {
    genuine: Vec<f64>,
    impostor: Vec<f64>,
    thresholds: Vec<f64>,
}

impl SortedScores {
    fn new(s: &ScoreSet) -> Result<Self, MetricsError> {
        if s.genuine.is_empty() {
            return Err(MetricsError::EmptyScores("genuine"));
        }
        if s.impostor.is_empty() {
            return Err(MetricsError::EmptyScores("impostor"));
        }
        if let Some(&v) = s.genuine.iter().chain(&s.impostor).find(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite(v));
        }
        let mut genuine = s.genuine.clone();
        let mut impostor = s.impostor.clone();
        genuine.sort_by(f64::total_cmp);
        impostor.sort_by(f64::total_cmp);
        let mut thresholds: Vec<f64> = genuine.iter().chain(&impostor).copied().collect();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        Ok(Self {
            genuine,
            impostor,
            thresholds,
        })
    }

    /// `(fmr, fnmr)`: impostors at or above `tau`, genuines below it.
    fn rates(&self, tau: f64) -> (f64, f64) {
        let fm = self.impostor.len() - self.impostor.partition_point(|&s| s < tau);
        let fnm = self.genuine.partition_point(|&s| s < tau);
        (
            fm as f64 / self.impostor.len() as f64,
            fnm as f64 / self.genuine.len() as f64,
        )
    }

    /// Distinct thresholds followed by one above every score.
    fn thresholds_with_top(&self) -> Vec<f64> {
        let mut t = self.thresholds.clone();
        let top = *t.last().expect("non-empty");
        t.push(top.next_up());
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
}

/// Equal error rate at the distinct-score threshold minimizing `|FMR - FNMR|`,
/// smallest threshold on ties.
pub fn eer(scores: &ScoreSet) -> Result<EerResult, MetricsError> {
    let s = SortedScores::new(scores)?;
    let mut best: Option<(f64, EerResult)> = None;
    for &tau in &s.thresholds {
        let (fmr, fnmr) = s.rates(tau);
        let gap = (fmr - fnmr).abs();
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((
                gap,
                EerResult {
                    eer: (fmr + fnmr) / 2.0,
                    threshold: tau,
                },
            ));
        }
    }
    Ok(best.expect("non-empty thresholds").1)
}

/// True-match rate at the smallest threshold whose FMR is at most the target.
pub fn tmr_at_fmr(scores: &ScoreSet, fmr_target: f64) -> Result<f64, MetricsError> {
    if !(fmr_target > 0.0 && fmr_target < 1.0) {
        return Err(MetricsError::BadTarget(fmr_target));
    }
    let s = SortedScores::new(scores)?;
    let tau = s
        .thresholds_with_top()
        .into_iter()
        .find(|&t| s.rates(t).0 <= fmr_target)
        .expect("top threshold has zero FMR");
    let hits = s.genuine.len() - s.genuine.partition_point(|&v| v < tau);
    Ok(hits as f64 / s.genuine.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub fmr: f64,
    pub fnmr: f64,
}

/// Every `(fmr, fnmr)` pair in ascending FMR order (descending threshold).
pub fn det_full(scores: &ScoreSet) -> Result<Vec<DetPoint>, MetricsError> {
    let s = SortedScores::new(scores)?;
    Ok(s.thresholds_with_top()
        .into_iter()
        .rev()
        .map(|t| {
            let (fmr, fnmr) = s.rates(t);
            DetPoint { fmr, fnmr }
        })
        .collect())
}

/// [`det_full`] downsampled to at most `n_points` evenly spaced entries,
/// always keeping both ends.
pub fn det_curve(scores: &ScoreSet, n_points: usize) -> Result<Vec<DetPoint>, MetricsError> {
    if n_points < 2 {
        return Err(MetricsError::TooFewPoints(n_points));
    }
    let full = det_full(scores)?;
    if full.len() <= n_points {
        return Ok(full);
    }
    let last = full.len() - 1;
    let mut idx: Vec<usize> = (0..n_points)
        .map(|k| ((k as f64 * last as f64) / (n_points - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    Ok(idx.into_iter().map(|i| full[i]).collect())
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    label: String,
    score: f64,
}

impl ScoreSet {
    /// Reads `label,score` CSV with labels `genuine` / `impostor`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, MetricsError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut set = ScoreSet {
            genuine: Vec::new(),
            impostor: Vec::new(),
        };
        for row in rdr.deserialize::<ScoreRow>() {
            let row = row?;
            match row.label.as_str() {
                "genuine" => set.genuine.push(row.score),
                "impostor" => set.impostor.push(row.score),
                other => return Err(MetricsError::BadLabel(other.to_string())),
            }
        }
        Ok(set)
    }

    pub fn read_csv(path: &Path) -> Result<Self, MetricsError> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["label", "score"])?;
        for (label, list) in [("genuine", &self.genuine), ("impostor", &self.impostor)] {
            for s in list {
                w.write_record([label, &s.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes `fmr,fnmr` CSV.
pub fn write_det_csv<W: Write>(points: &[DetPoint], writer: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(g: &[f64], i: &[f64]) -> ScoreSet {
        ScoreSet {
            genuine: g.to_vec(),
            impostor: i.to_vec(),
        }
    }

    #[test]
    fn ssim_reflexive_and_symmetric() {
        let a = ImageGray::new(16, 16, (0..256).map(|v| (v * 7 % 256) as u8).collect()).unwrap();
        let b = ImageGray::new(16, 16, (0..256).map(|v| (v * 3 % 251) as u8).collect()).unwrap();
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        assert!(ssim(&a, &b).unwrap() < 1.0);
    }

    #[test]
    fn ssim_errors() {
        let a = ImageGray::filled(10, 10, 0);
        let b = ImageGray::filled(12, 12, 0);
        assert!(matches!(
            ssim(&a, &b),
            Err(MetricsError::DimensionMismatch(..))
        ));
        assert!(matches!(ssim(&a, &a), Err(MetricsError::TooSmall { .. })));
    }

    #[test]
    fn intra_ssim_identical_and_skip() {
        let img = ImageGray::new(12, 12, (0..144).map(|v| v as u8).collect()).unwrap();
        let ids = vec![
            ("a".to_string(), vec![img.clone(), img.clone(), img.clone()]),
            ("b".to_string(), vec![img.clone()]),
        ];
        let r = intra_subject_ssim(&ids).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.skipped, vec!["b".to_string()]);
    }

    #[test]
    fn diversity_single_pair() {
        let f = FeatureSet::new(
            vec![
                vec![0.0, 0.0],
                vec![3.0, 4.0],
                vec![1.0, 1.0],
                vec![1.0, 1.0],
            ],
            Some(vec!["a".into(), "a".into(), "b".into(), "b".into()]),
        )
        .unwrap();
        let r = diversity(&f).unwrap();
        assert_eq!(r.groups[0].value, 5.0);
        assert_eq!(r.groups[1].value, 0.0);
        assert_eq!(r.mean, 2.5);
    }

    #[test]
    fn stats_hand_case() {
        let f =
            FeatureSet::new(vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 4.0]], None).unwrap();
        let s = gaussian_stats(&f).unwrap();
        assert_eq!(s.mean, vec![3.0, 4.0]);
        assert_eq!(s.cov, vec![vec![4.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            gaussian_stats(&FeatureSet::new(vec![vec![1.0]], None).unwrap()),
            Err(MetricsError::TooFewRows(1))
        ));
    }

    #[test]
    fn frechet_one_dimensional() {
        let a = GaussianStats {
            mean: vec![0.0],
            cov: vec![vec![1.0]],
            n: 2,
        };
        let b = GaussianStats {
            mean: vec![3.0],
            cov: vec![vec![1.0]],
            n: 2,
        };
        assert!((frechet_distance(&a, &b).unwrap() - 9.0).abs() < 1e-12);
        assert!(frechet_distance(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn frechet_rejects_bad_cov() {
        let a = GaussianStats {
            mean: vec![0.0],
            cov: vec![vec![-1.0]],
            n: 2,
        };
        assert!(matches!(
            frechet_distance(&a, &a),
            Err(MetricsError::NotPsd)
        ));
        let b = GaussianStats {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            n: 2,
        };
        let c = GaussianStats {
            mean: vec![0.0],
            cov: vec![vec![1.0]],
            n: 2,
        };
        assert!(matches!(
            frechet_distance(&b, &c),
            Err(MetricsError::StatsDimension(2, 1))
        ));
    }

    #[test]
    fn eer_cases() {
        assert_eq!(eer(&set(&[0.9, 0.8], &[0.1, 0.2])).unwrap().eer, 0.0);
        assert_eq!(
            eer(&set(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9])).unwrap().eer,
            0.5
        );
        assert!(matches!(
            eer(&set(&[], &[0.1])),
            Err(MetricsError::EmptyScores("genuine"))
        ));
        assert!(matches!(
            eer(&set(&[f64::NAN], &[0.1])),
            Err(MetricsError::NonFinite(_))
        ));
    }

    #[test]
    fn tmr_separated_and_target_checked() {
        let s = set(&[0.9, 0.8], &[0.1, 0.2]);
        for t in [1e-4, 1e-3, 0.5] {
            assert_eq!(tmr_at_fmr(&s, t).unwrap(), 1.0);
        }
        assert!(matches!(
            tmr_at_fmr(&s, 0.0),
            Err(MetricsError::BadTarget(_))
        ));
    }

    #[test]
    fn det_separated_touches_corners() {
        let d = det_full(&set(&[0.9, 0.8], &[0.1, 0.2])).unwrap();
        assert_eq!(d.first().unwrap().fmr, 0.0);
        assert!(d.iter().any(|p| p.fmr == 0.0 && p.fnmr == 0.0));
        assert_eq!(d.last().unwrap().fmr, 1.0);
        assert!(matches!(
            det_curve(&set(&[1.0], &[0.0]), 1),
            Err(MetricsError::TooFewPoints(1))
        ));
    }

    #[test]
    fn csv_round_trips() {
        let s = set(&[0.5, 0.25], &[-1.0]);
        let mut buf = Vec::new();
        s.to_csv(&mut buf).unwrap();
        assert_eq!(ScoreSet::from_csv(&buf[..]).unwrap(), s);
        assert!(matches!(
            ScoreSet::from_csv("label,score\nmaybe,1\n".as_bytes()),
            Err(MetricsError::BadLabel(_))
        ));
        let f = FeatureSet::from_csv("id,f0,f1\na,1,2\nb,3,4\n".as_bytes()).unwrap();
        assert_eq!(f.dim(), 2);
        let mut out = Vec::new();
        write_det_csv(
            &[DetPoint {
                fmr: 0.0,
                fnmr: 1.0,
            }],
            &mut out,
        )
        .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "fmr,fnmr\n0.0,1.0\n");
    }
}
