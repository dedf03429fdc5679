//! Seeded image-level augmentations of binary visual prompts.
//!
//! Prompts are black (0) creases on a white (255) canvas. Geometric warps use
//! backward mapping with bilinear sampling, exposed regions read as
//! background, and the result is re-binarized at 127.5.

use nalgebra::{Matrix3, SMatrix, SVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edgeproc::{self, convolve_separable, gaussian_kernel};
use crate::gray::{ImageGray, BLACK, WHITE};

pub const REGISTRY_SIZE: usize = 14;
pub const REBINARIZE_THRESHOLD: f64 = 127.5;
const PERSPECTIVE_ATTEMPTS: usize = 8;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("input image is not binary")]
    NonBinary,
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("no invertible perspective found after {0} attempts")]
    DegeneratePerspective(usize),
    #[error("unknown augmentation {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Edge(#[from] edgeproc::EdgeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentKind {
    Dropout {
        patch_frac: f64,
        n_patches: u32,
    },
    Elastic {
        alpha: f64,
        sigma: f64,
    },
    MeshAffine {
        lattice_n: u32,
        jitter: f64,
    },
    Perspective {
        corner_jitter_frac: f64,
    },
    Rotate {
        max_degrees: f64,
    },
    Scale {
        min_factor: f64,
        max_factor: f64,
    },
    /// Per-axis shift limits as fractions of width and height.
    Translate {
        max_frac_x: f64,
        max_frac_y: f64,
    },
    /// Horizontal shear by exactly `degrees` with a random sign.
    Shear {
        degrees: f64,
    },
    MorphThicken {
        kernel: u32,
        iterations: u32,
    },
    MorphThin {
        kernel: u32,
        iterations: u32,
    },
    NoiseRethreshold {
        blur_sigma: f64,
        noise_sigma: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: AugmentKind,
}

impl AugmentationSpec {
    fn new(name: &str, kind: AugmentKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
        }
    }

    /// Same augmentation with every magnitude parameter set to its neutral value.
    pub fn zeroed(&self) -> Self {
        use AugmentKind::*;
        let kind = match self.kind {
            Dropout { patch_frac, .. } => Dropout {
                patch_frac,
                n_patches: 0,
            },
            Elastic { sigma, .. } => Elastic { alpha: 0.0, sigma },
            MeshAffine { lattice_n, .. } => MeshAffine {
                lattice_n,
                jitter: 0.0,
            },
            Perspective { .. } => Perspective {
                corner_jitter_frac: 0.0,
            },
            Rotate { .. } => Rotate { max_degrees: 0.0 },
            Scale { .. } => Scale {
                min_factor: 1.0,
                max_factor: 1.0,
            },
            Translate { .. } => Translate {
                max_frac_x: 0.0,
                max_frac_y: 0.0,
            },
            Shear { .. } => Shear { degrees: 0.0 },
            MorphThicken { kernel, .. } => MorphThicken {
                kernel,
                iterations: 0,
            },
            MorphThin { kernel, .. } => MorphThin {
                kernel,
                iterations: 0,
            },
            NoiseRethreshold { noise_sigma, .. } => NoiseRethreshold {
                blur_sigma: 0.0,
                noise_sigma,
                amplitude: 0.0,
            },
        };
        Self {
            name: self.name.clone(),
            kind,
        }
    }
}

/// The fixed default registry, in dataset order.
pub fn list_augmentations() -> Vec<AugmentationSpec> {
    use AugmentKind::*;
    vec![
        AugmentationSpec::new(
            "dropout_small",
            Dropout {
                patch_frac: 0.06,
                n_patches: 4,
            },
        ),
        AugmentationSpec::new(
            "dropout_large",
            Dropout {
                patch_frac: 0.12,
                n_patches: 3,
            },
        ),
        AugmentationSpec::new(
            "elastic_mild",
            Elastic {
                alpha: 200.0,
                sigma: 8.0,
            },
        ),
        AugmentationSpec::new(
            "elastic_strong",
            Elastic {
                alpha: 300.0,
                sigma: 10.0,
            },
        ),
        AugmentationSpec::new(
            "mesh_mild",
            MeshAffine {
                lattice_n: 5,
                jitter: 8.0,
            },
        ),
        AugmentationSpec::new(
            "mesh_strong",
            MeshAffine {
                lattice_n: 5,
                jitter: 10.0,
            },
        ),
        AugmentationSpec::new(
            "perspective_mild",
            Perspective {
                corner_jitter_frac: 0.015,
            },
        ),
        AugmentationSpec::new(
            "perspective_strong",
            Perspective {
                corner_jitter_frac: 0.02,
            },
        ),
        AugmentationSpec::new("rotate_pm5", Rotate { max_degrees: 5.0 }),
        AugmentationSpec::new(
            "scale_95_105",
            Scale {
                min_factor: 0.95,
                max_factor: 1.05,
            },
        ),
        AugmentationSpec::new(
            "translate_3pct",
            Translate {
                max_frac_x: 0.03,
                max_frac_y: 0.02,
            },
        ),
        AugmentationSpec::new("shear_5deg", Shear { degrees: 5.0 }),
        AugmentationSpec::new(
            "morph_thicken",
            MorphThicken {
                kernel: 3,
                iterations: 1,
            },
        ),
        AugmentationSpec::new(
            "noise_rethreshold",
            NoiseRethreshold {
                blur_sigma: 1.0,
                noise_sigma: 6.0,
                amplitude: 110.0,
            },
        ),
    ]
}

pub fn find_augmentation(name: &str) -> Result<AugmentationSpec, AugmentError> {
    list_augmentations()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| AugmentError::Unknown(name.to_string()))
}

pub fn registry_json() -> String {
    serde_json::to_string_pretty(&list_augmentations()).expect("registry serializes")
}

fn check_binary(img: &ImageGray) -> Result<(), AugmentError> {
    if img.is_binary() {
        Ok(())
    } else {
        Err(AugmentError::NonBinary)
    }
}

fn param(name: &'static str, value: f64, ok: bool) -> Result<(), AugmentError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(AugmentError::InvalidParam { name, value })
    }
}

pub fn apply_augmentation<R: Rng + ?Sized>(
    img: &ImageGray,
    spec: &AugmentationSpec,
    rng: &mut R,
) -> Result<ImageGray, AugmentError> {
    check_binary(img)?;
    use AugmentKind::*;
    match spec.kind {
        Dropout {
            patch_frac,
            n_patches,
        } => coarse_dropout(img, patch_frac, n_patches, rng),
        Elastic { alpha, sigma } => elastic_warp(img, alpha, sigma, rng),
        MeshAffine { lattice_n, jitter } => mesh_warp(img, lattice_n, jitter, rng),
        Perspective { corner_jitter_frac } => perspective_warp(img, corner_jitter_frac, rng),
        Rotate { max_degrees } => {
            param("max_degrees", max_degrees, max_degrees >= 0.0)?;
            let a = symmetric(rng, max_degrees).to_radians();
            let (s, c) = a.sin_cos();
            Ok(affine_warp(img, [[c, -s], [s, c]], [0.0, 0.0]))
        }
        Scale {
            min_factor,
            max_factor,
        } => {
            param("min_factor", min_factor, min_factor > 0.0)?;
            param("max_factor", max_factor, max_factor >= min_factor)?;
            let f = min_factor + (max_factor - min_factor) * rng.random::<f64>();
            Ok(affine_warp(img, [[f, 0.0], [0.0, f]], [0.0, 0.0]))
        }
        Translate {
            max_frac_x,
            max_frac_y,
        } => {
            param("max_frac_x", max_frac_x, (0.0..0.5).contains(&max_frac_x))?;
            param("max_frac_y", max_frac_y, (0.0..0.5).contains(&max_frac_y))?;
            let dx = symmetric(rng, max_frac_x * img.width() as f64);
            let dy = symmetric(rng, max_frac_y * img.height() as f64);
            Ok(affine_warp(img, [[1.0, 0.0], [0.0, 1.0]], [dx, dy]))
        }
        Shear { degrees } => {
            param("degrees", degrees, (0.0..45.0).contains(&degrees))?;
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let k = (sign * degrees).to_radians().tan();
            Ok(affine_warp(img, [[1.0, k], [0.0, 1.0]], [0.0, 0.0]))
        }
        MorphThicken { kernel, iterations } => {
            let fg = edgeproc::invert(img);
            Ok(edgeproc::invert(&edgeproc::dilate(
                &fg,
                kernel as usize,
                iterations as usize,
            )?))
        }
        MorphThin { kernel, iterations } => {
            let fg = edgeproc::invert(img);
            Ok(edgeproc::invert(&edgeproc::erode(
                &fg,
                kernel as usize,
                iterations as usize,
            )?))
        }
        NoiseRethreshold {
            blur_sigma,
            noise_sigma,
            amplitude,
        } => noise_rethreshold(img, blur_sigma, noise_sigma, amplitude, rng),
    }
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, m: f64) -> f64 {
    m * (2.0 * rng.random::<f64>() - 1.0)
}

fn binarize(v: f64) -> u8 {
    if v < REBINARIZE_THRESHOLD {
        BLACK
    } else {
        WHITE
    }
}

/// Bilinear sample at continuous image coordinates (pixel centers at `i + 0.5`).
/// Neighbours outside the image read as background.
fn sample_bilinear(img: &ImageGray, x: f64, y: f64) -> f64 {
    let (u, v) = (x - 0.5, y - 0.5);
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let (w, h) = (img.width() as isize, img.height() as isize);
    let at = |xi: isize, yi: isize| -> f64 {
        if xi < 0 || yi < 0 || xi >= w || yi >= h {
            WHITE as f64
        } else {
            img.get(xi as usize, yi as usize) as f64
        }
    };
    let (xi, yi) = (x0 as isize, y0 as isize);
    let top = at(xi, yi) * (1.0 - fx) + at(xi + 1, yi) * fx;
    let bottom = at(xi, yi + 1) * (1.0 - fx) + at(xi + 1, yi + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Re-binarized backward warp: output point `p` reads the source at `map(p)`.
fn backward_warp<F: Fn(f64, f64) -> (f64, f64)>(img: &ImageGray, map: F) -> ImageGray {
    let (w, h) = (img.width(), img.height());
    let mut out = ImageGray::filled(w, h, WHITE);
    for j in 0..h {
        for i in 0..w {
            let (sx, sy) = map(i as f64 + 0.5, j as f64 + 0.5);
            out.set(i, j, binarize(sample_bilinear(img, sx, sy)));
        }
    }
    out
}

/// Forward affine `p' = A (p - c) + c + t` about the image center, applied backward.
fn affine_warp(img: &ImageGray, a: [[f64; 2]; 2], t: [f64; 2]) -> ImageGray {
    let (cx, cy) = (img.width() as f64 / 2.0, img.height() as f64 / 2.0);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let inv = [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ];
    backward_warp(img, |x, y| {
        let (dx, dy) = (x - cx - t[0], y - cy - t[1]);
        (
            inv[0][0] * dx + inv[0][1] * dy + cx,
            inv[1][0] * dx + inv[1][1] * dy + cy,
        )
    })
}

fn smoothing_taps(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil().max(1.0) as usize;
    gaussian_kernel(2 * half + 1, sigma)
}

/// Random displacement field: uniform noise in `[-1, 1]` smoothed by a
/// Gaussian and scaled by `alpha`. Returns `(dx, dy)` planes.
pub fn elastic_field<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    alpha: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), AugmentError> {
    param("alpha", alpha, alpha >= 0.0)?;
    param("sigma", sigma, sigma > 0.0)?;
    let taps = smoothing_taps(sigma);
    let n = width * height;
    let mut plane = || -> Vec<f64> {
        let noise: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        convolve_separable(&noise, width, height, &taps)
            .into_iter()
            .map(|v| alpha * v)
            .collect()
    };
    let dx = plane();
    let dy = plane();
    Ok((dx, dy))
}

pub fn elastic_warp<R: Rng + ?Sized>(
    img: &ImageGray,
    alpha: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<ImageGray, AugmentError> {
    check_binary(img)?;
    let w = img.width();
    let (dx, dy) = elastic_field(w, img.height(), alpha, sigma, rng)?;
    Ok(backward_warp(img, |x, y| {
        let k = y as usize * w + x as usize;
        (x + dx[k], y + dy[k])
    }))
}

/// Control lattice of a mesh warp: `n x n` nodes over the image rectangle,
/// interior nodes displaced.
#[derive(Debug, Clone)]
pub struct MeshLattice {
    n: usize,
    width: f64,
    height: f64,
    nodes: Vec<(f64, f64)>,
}

impl MeshLattice {
    pub fn sample<R: Rng + ?Sized>(
        width: usize,
        height: usize,
        lattice_n: u32,
        jitter: f64,
        rng: &mut R,
    ) -> Result<Self, AugmentError> {
        param("lattice_n", lattice_n as f64, lattice_n >= 2)?;
        param("jitter", jitter, jitter >= 0.0)?;
        let n = lattice_n as usize;
        let (wf, hf) = (width as f64, height as f64);
        let mut nodes = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..n {
                let x = a as f64 * wf / (n - 1) as f64;
                let y = b as f64 * hf / (n - 1) as f64;
                let interior = a > 0 && b > 0 && a < n - 1 && b < n - 1;
                if interior {
                    let jx = symmetric(rng, jitter);
                    let jy = symmetric(rng, jitter);
                    nodes.push((x + jx, y + jy));
                } else {
                    nodes.push((x, y));
                }
            }
        }
        Ok(Self {
            n,
            width: wf,
            height: hf,
            nodes,
        })
    }

    /// Source position for an output point, bilinear within its lattice cell.
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let cells = (self.n - 1) as f64;
        let gx = (x / self.width * cells).clamp(0.0, cells);
        let gy = (y / self.height * cells).clamp(0.0, cells);
        let a = (gx.floor() as usize).min(self.n - 2);
        let b = (gy.floor() as usize).min(self.n - 2);
        let (u, v) = (gx - a as f64, gy - b as f64);
        let node = |a: usize, b: usize| self.nodes[b * self.n + a];
        let (p00, p10, p01, p11) = (
            node(a, b),
            node(a + 1, b),
            node(a, b + 1),
            node(a + 1, b + 1),
        );
        let lerp = |q00: f64, q10: f64, q01: f64, q11: f64| {
            (q00 * (1.0 - u) + q10 * u) * (1.0 - v) + (q01 * (1.0 - u) + q11 * u) * v
        };
        // Offsets keep the undisplaced lattice an exact identity.
        let ox = lerp(p00.0, p10.0, p01.0, p11.0) - lerp_regular(a, u, self.width, cells);
        let oy = lerp(p00.1, p10.1, p01.1, p11.1) - lerp_regular(b, v, self.height, cells);
        (x + ox, y + oy)
    }
}

fn lerp_regular(a: usize, u: f64, extent: f64, cells: f64) -> f64 {
    let lo = a as f64 * extent / cells;
    let hi = (a + 1) as f64 * extent / cells;
    lo * (1.0 - u) + hi * u
}

pub fn mesh_warp<R: Rng + ?Sized>(
    img: &ImageGray,
    lattice_n: u32,
    jitter: f64,
    rng: &mut R,
) -> Result<ImageGray, AugmentError> {
    check_binary(img)?;
    let lattice = MeshLattice::sample(img.width(), img.height(), lattice_n, jitter, rng)?;
    Ok(backward_warp(img, |x, y| lattice.map(x, y)))
}

/// Homography taking each `from[k]` to `to[k]`, with `h33 = 1`.
pub fn homography_from_points(
    from: &[(f64, f64); 4],
    to: &[(f64, f64); 4],
) -> Option<Matrix3<f64>> {
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for k in 0..4 {
        let (x, y) = from[k];
        let (u, v) = to[k];
        let r = 2 * k;
        a.row_mut(r)
            .copy_from_slice(&[x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]);
        b[r] = u;
        b[r + 1] = v;
    }
    let h = a.lu().solve(&b)?;
    if h.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let m = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0);
    if m.determinant().abs() < 1e-12 {
        return None;
    }
    Some(m)
}

pub fn apply_homography(h: &Matrix3<f64>, x: f64, y: f64) -> (f64, f64) {
    let w = h[(2, 0)] * x + h[(2, 1)] * y + h[(2, 2)];
    (
        (h[(0, 0)] * x + h[(0, 1)] * y + h[(0, 2)]) / w,
        (h[(1, 0)] * x + h[(1, 1)] * y + h[(1, 2)]) / w,
    )
}

fn strictly_convex(q: &[(f64, f64); 4]) -> bool {
    let mut sign = 0.0;
    for k in 0..4 {
        let (a, b, c) = (q[k], q[(k + 1) % 4], q[(k + 2) % 4]);
        let cross = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
        if cross == 0.0 || (sign != 0.0 && cross.signum() != sign) {
            return false;
        }
        sign = cross.signum();
    }
    true
}

/// Image corners in order top-left, top-right, bottom-right, bottom-left.
pub fn image_corners(width: usize, height: usize) -> [(f64, f64); 4] {
    let (w, h) = (width as f64, height as f64);
    [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]
}

/// Draws jittered corners and returns them with the backward homography
/// (output plane to source plane) that maps each jittered corner to its
/// original position.
pub fn sample_perspective<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    corner_jitter_frac: f64,
    rng: &mut R,
) -> Result<([(f64, f64); 4], Matrix3<f64>), AugmentError> {
    param(
        "corner_jitter_frac",
        corner_jitter_frac,
        (0.0..0.5).contains(&corner_jitter_frac),
    )?;
    let corners = image_corners(width, height);
    let d = corner_jitter_frac * width.min(height) as f64;
    for _ in 0..PERSPECTIVE_ATTEMPTS {
        let mut moved = corners;
        for c in moved.iter_mut() {
            c.0 += symmetric(rng, d);
            c.1 += symmetric(rng, d);
        }
        if !strictly_convex(&moved) {
            continue;
        }
        if let Some(h) = homography_from_points(&moved, &corners) {
            return Ok((moved, h));
        }
    }
    Err(AugmentError::DegeneratePerspective(PERSPECTIVE_ATTEMPTS))
}

pub fn perspective_warp<R: Rng + ?Sized>(
    img: &ImageGray,
    corner_jitter_frac: f64,
    rng: &mut R,
) -> Result<ImageGray, AugmentError> {
    check_binary(img)?;
    let (_, h) = sample_perspective(img.width(), img.height(), corner_jitter_frac, rng)?;
    Ok(backward_warp(img, |x, y| apply_homography(&h, x, y)))
}

pub fn coarse_dropout<R: Rng + ?Sized>(
    img: &ImageGray,
    patch_frac: f64,
    n_patches: u32,
    rng: &mut R,
) -> Result<ImageGray, AugmentError> {
    check_binary(img)?;
    param(
        "patch_frac",
        patch_frac,
        patch_frac > 0.0 && patch_frac <= 0.25,
    )?;
    let (w, h) = (img.width(), img.height());
    let side = ((patch_frac * w.min(h) as f64).round() as usize).max(1);
    let mut out = img.clone();
    for _ in 0..n_patches {
        let x0 = rng.random_range(0..=w - side);
        let y0 = rng.random_range(0..=h - side);
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                out.set(x, y, WHITE);
            }
        }
    }
    Ok(out)
}

/// Blurs the prompt, adds a smooth noise field normalized to peak
/// `amplitude`, and re-thresholds. Background cannot flip while
/// `amplitude < 127.5`.
pub fn noise_rethreshold<R: Rng + ?Sized>(
    img: &ImageGray,
    blur_sigma: f64,
    noise_sigma: f64,
    amplitude: f64,
    rng: &mut R,
) -> Result<ImageGray, AugmentError> {
    check_binary(img)?;
    param("blur_sigma", blur_sigma, blur_sigma >= 0.0)?;
    param("noise_sigma", noise_sigma, noise_sigma > 0.0)?;
    param("amplitude", amplitude, amplitude >= 0.0)?;
    let (w, h) = (img.width(), img.height());
    let mut plane: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    if blur_sigma > 0.0 {
        plane = convolve_separable(&plane, w, h, &smoothing_taps(blur_sigma));
    }
    let noise: Vec<f64> = (0..w * h)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let noise = convolve_separable(&noise, w, h, &smoothing_taps(noise_sigma));
    let peak = noise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    let data = plane
        .iter()
        .zip(&noise)
        .map(|(p, n)| binarize(p + scale * n))
        .collect();
    Ok(ImageGray::new(w, h, data).expect("same shape"))
}

/// Fraction of input foreground pixels lying within `radius` (Euclidean) of
/// some output foreground pixel. An input without foreground scores 1.
pub fn foreground_survival(input: &ImageGray, output: &ImageGray, radius: usize) -> f64 {
    let (w, h) = (input.width() as isize, input.height() as isize);
    let r = radius as isize;
    let mut total = 0usize;
    let mut kept = 0usize;
    for y in 0..h {
        for x in 0..w {
            if input.get(x as usize, y as usize) != BLACK {
                continue;
            }
            total += 1;
            let hit = (-r..=r).any(|dy| {
                (-r..=r).any(|dx| {
                    let (xx, yy) = (x + dx, y + dy);
                    dx * dx + dy * dy <= r * r
                        && xx >= 0
                        && yy >= 0
                        && xx < w
                        && yy < h
                        && output.get(xx as usize, yy as usize) == BLACK
                })
            });
            kept += hit as usize;
        }
    }
    if total == 0 {
        1.0
    } else {
        kept as f64 / total as f64
    }
}
