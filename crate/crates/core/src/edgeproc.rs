//! Edge-map extraction from real crease images.
//!
//! Stages: Gaussian blur, self-quotient, Otsu binarization, dilation and
//! inversion. The result uses the same convention as rendered prompts:
//! creases are 0 on a 255 background.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gray::{ImageError, ImageGray, BLACK, WHITE};

#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("kernel size {0} must be odd")]
    EvenKernel(usize),
    #[error("kernel size {0} too small")]
    SmallKernel(usize),
    #[error("sigma {0} must be positive")]
    BadSigma(f64),
    #[error("quotient epsilon {0} must be positive")]
    BadEpsilon(f64),
    #[error("input image is not binary")]
    NonBinary,
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePipelineConfig {
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub dilate_kernel: usize,
    pub dilate_iterations: usize,
    pub quotient_epsilon: f64,
}

impl Default for EdgePipelineConfig {
    fn default() -> Self {
        Self {
            blur_kernel: 15,
            blur_sigma: 30.0,
            dilate_kernel: 3,
            dilate_iterations: 1,
            quotient_epsilon: 1.0,
        }
    }
}

impl EdgePipelineConfig {
    pub fn validate(&self) -> Result<(), EdgeError> {
        for k in [self.blur_kernel, self.dilate_kernel] {
            check_kernel(k)?;
            if k < 3 {
                return Err(EdgeError::SmallKernel(k));
            }
        }
        if !(self.blur_sigma > 0.0) {
            return Err(EdgeError::BadSigma(self.blur_sigma));
        }
        if !(self.quotient_epsilon > 0.0) {
            return Err(EdgeError::BadEpsilon(self.quotient_epsilon));
        }
        Ok(())
    }
}

fn check_kernel(k: usize) -> Result<(), EdgeError> {
    if k.is_multiple_of(2) {
        Err(EdgeError::EvenKernel(k))
    } else {
        Ok(())
    }
}

/// Truncated Gaussian taps of odd length `size`, normalized to sum 1.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as i64;
    let taps: Vec<f64> = (-half..=half)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable convolution of a real-valued plane with edge replication.
pub(crate) fn convolve_separable(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let clampx = |x: isize| x.clamp(0, w as isize - 1) as usize;
    let clampy = |y: isize| y.clamp(0, h as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * row[clampx(x as isize + k as isize - half)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * tmp[clampy(y as isize + k as isize - half) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

pub fn gaussian_blur(img: &ImageGray, kernel: usize, sigma: f64) -> Result<ImageGray, EdgeError> {
    check_kernel(kernel)?;
    if !(sigma > 0.0) {
        return Err(EdgeError::BadSigma(sigma));
    }
    let taps = gaussian_kernel(kernel, sigma);
    let plane: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    let out = convolve_separable(&plane, img.width(), img.height(), &taps)
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok(ImageGray::new(img.width(), img.height(), out)?)
}

const FLAT_QUOTIENT_REL: f64 = 1e-9;

/// `img / (blurred + epsilon)`, rescaled to `[0, 255]` by its own range.
/// A constant quotient maps to all zeros.
pub fn self_quotient(
    img: &ImageGray,
    blurred: &ImageGray,
    epsilon: f64,
) -> Result<ImageGray, EdgeError> {
    img.same_shape(blurred)?;
    if !(epsilon > 0.0) {
        return Err(EdgeError::BadEpsilon(epsilon));
    }
    let q: Vec<f64> = img
        .data()
        .iter()
        .zip(blurred.data())
        .map(|(&a, &b)| a as f64 / (b as f64 + epsilon))
        .collect();
    let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Ratios equal up to rounding count as constant.
    let flat = hi - lo <= FLAT_QUOTIENT_REL * hi.abs().max(1.0);
    let out = if !flat {
        q.iter()
            .map(|v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
            .collect()
    } else {
        vec![0; q.len()]
    };
    Ok(ImageGray::new(img.width(), img.height(), out)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtsuResult {
    pub threshold: u8,
    /// `255` where the pixel is above the threshold.
    pub binary: ImageGray,
    /// Set for single-valued images, where no split exists.
    pub degenerate: bool,
}

/// Otsu's threshold over the 256-bin histogram, smallest maximizer on ties.
pub fn otsu_threshold(img: &ImageGray) -> OtsuResult {
    let mut hist = [0i128; 256];
    for &v in img.data() {
        hist[v as usize] += 1;
    }
    let total: i128 = hist.iter().sum();
    let sum: i128 = hist.iter().enumerate().map(|(v, &c)| v as i128 * c).sum();

    let (mut n0, mut s0) = (0i128, 0i128);
    let mut best = f64::NEG_INFINITY;
    let mut threshold = 0u8;
    for t in 0..256usize {
        n0 += hist[t];
        s0 += t as i128 * hist[t];
        let (n1, s1) = (total - n0, sum - s0);
        // Between-class variance scaled by N^2: (S0 n1 - S1 n0)^2 / (n0 n1).
        let score = if n0 == 0 || n1 == 0 {
            0.0
        } else {
            let d = s0 * n1 - s1 * n0;
            (d * d) as f64 / (n0 * n1) as f64
        };
        if score > best {
            best = score;
            threshold = t as u8;
        }
    }

    let distinct = hist.iter().filter(|&&c| c > 0).count();
    if distinct <= 1 {
        let value = img.data()[0];
        log::warn!("otsu: constant image (value {value}), no threshold split exists");
        return OtsuResult {
            threshold: value,
            binary: ImageGray::filled(img.width(), img.height(), BLACK),
            degenerate: true,
        };
    }
    let binary = img
        .data()
        .iter()
        .map(|&v| if v > threshold { WHITE } else { BLACK })
        .collect();
    OtsuResult {
        threshold,
        binary: ImageGray::new(img.width(), img.height(), binary).expect("same shape"),
        degenerate: false,
    }
}

fn ensure_binary(img: &ImageGray) -> Result<(), EdgeError> {
    if img.is_binary() {
        Ok(())
    } else {
        Err(EdgeError::NonBinary)
    }
}

/// Square-window rank filter applied as a row pass then a column pass.
fn rank_filter(img: &ImageGray, kernel: usize, iterations: usize, take_max: bool) -> ImageGray {
    let (w, h) = (img.width(), img.height());
    let half = (kernel / 2) as isize;
    let pick = |a: u8, b: u8| if take_max { a.max(b) } else { a.min(b) };
    let init = if take_max { 0u8 } else { 255u8 };
    let mut cur = img.clone();
    for _ in 0..iterations {
        let mut rows = ImageGray::filled(w, h, init);
        for y in 0..h {
            for x in 0..w {
                let mut acc = init;
                for d in -half..=half {
                    acc = pick(acc, cur.get_clamped(x as isize + d, y as isize));
                }
                rows.set(x, y, acc);
            }
        }
        let mut next = ImageGray::filled(w, h, init);
        for y in 0..h {
            for x in 0..w {
                let mut acc = init;
                for d in -half..=half {
                    acc = pick(acc, rows.get_clamped(x as isize, y as isize + d));
                }
                next.set(x, y, acc);
            }
        }
        cur = next;
    }
    cur
}

/// Binary dilation (max filter) with a `kernel x kernel` all-ones element.
pub fn dilate(img: &ImageGray, kernel: usize, iterations: usize) -> Result<ImageGray, EdgeError> {
    check_kernel(kernel)?;
    ensure_binary(img)?;
    Ok(rank_filter(img, kernel, iterations, true))
}

/// Binary erosion (min filter), the dual of [`dilate`].
pub fn erode(img: &ImageGray, kernel: usize, iterations: usize) -> Result<ImageGray, EdgeError> {
    check_kernel(kernel)?;
    ensure_binary(img)?;
    Ok(rank_filter(img, kernel, iterations, false))
}

pub fn invert(img: &ImageGray) -> ImageGray {
    let data = img.data().iter().map(|&v| 255 - v).collect();
    ImageGray::new(img.width(), img.height(), data).expect("same shape")
}

/// Intermediate images of the pipeline, in order.
#[derive(Debug, Clone)]
pub struct EdgeStages {
    pub blurred: ImageGray,
    pub quotient: ImageGray,
    pub threshold: u8,
    /// Crease class as 255 (the darker quotient class).
    pub creases: ImageGray,
    pub dilated: ImageGray,
    pub edge_map: ImageGray,
}

pub fn extract_edge_stages(
    img: &ImageGray,
    config: &EdgePipelineConfig,
) -> Result<EdgeStages, EdgeError> {
    config.validate()?;
    let blurred = gaussian_blur(img, config.blur_kernel, config.blur_sigma)?;
    let quotient = self_quotient(img, &blurred, config.quotient_epsilon)?;
    let otsu = otsu_threshold(&quotient);
    let creases = if otsu.degenerate {
        ImageGray::filled(img.width(), img.height(), BLACK)
    } else {
        invert(&otsu.binary)
    };
    let dilated = dilate(&creases, config.dilate_kernel, config.dilate_iterations)?;
    let edge_map = invert(&dilated);
    Ok(EdgeStages {
        blurred,
        quotient,
        threshold: otsu.threshold,
        creases,
        dilated,
        edge_map,
    })
}

pub fn extract_edge_map(
    img: &ImageGray,
    config: &EdgePipelineConfig,
) -> Result<ImageGray, EdgeError> {
    Ok(extract_edge_stages(img, config)?.edge_map)
}

/// PNG files directly inside `dir`, sorted by name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>, std::io::Error> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Runs the pipeline over every PNG in `input`, writing edge maps with the
/// same basenames into `output`.
pub fn extract_edges_dir(
    input: &Path,
    output: &Path,
    config: &EdgePipelineConfig,
) -> Result<Vec<PathBuf>, EdgeError> {
    config.validate()?;
    let files = list_pngs(input)?;
    std::fs::create_dir_all(output)?;
    files
        .par_iter()
        .map(|src| {
            let img = ImageGray::read_png(src)?;
            let edges = extract_edge_map(&img, config)?;
            let dst = output.join(src.file_name().expect("listed files have names"));
            edges.write_png(&dst)?;
            Ok(dst)
        })
        .collect()
}
