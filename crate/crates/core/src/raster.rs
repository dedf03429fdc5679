//! Renders identities to binary visual prompts: dark strokes on white.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    eval_bezier, fit_bspline, CurveRole, GeometryError, GuidePointSet, IdentityRecord, GRID_COLS,
    GRID_ROWS,
};
use crate::gray::{ImageGray, BLACK, WHITE};

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("invalid canvas: {0}")]
    Canvas(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanvasConfig {
    pub width: usize,
    pub height: usize,
    pub margin: usize,
    pub stroke_thickness: u32,
    pub samples_per_curve: usize,
}

impl Default for CanvasConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            margin: 8,
            stroke_thickness: 3,
            samples_per_curve: 256,
        }
    }
}

impl CanvasConfig {
    pub fn validate(&self) -> Result<(), RasterError> {
        if self.width <= 2 * self.margin || self.height <= 2 * self.margin {
            return Err(RasterError::Canvas(format!(
                "{}x{} leaves no drawable area inside a {} px margin",
                self.width, self.height, self.margin
            )));
        }
        if self.stroke_thickness < 1 {
            return Err(RasterError::Canvas("stroke thickness must be >= 1".into()));
        }
        if self.samples_per_curve < 64 {
            return Err(RasterError::Canvas(
                "need at least 64 samples per curve".into(),
            ));
        }
        Ok(())
    }

    /// Maps grid coordinates onto pixel coordinates. Pixel `(i, j)` covers
    /// `[i, i + 1) x [j, j + 1)`; its center is `(i + 0.5, j + 0.5)`.
    pub fn to_pixel(&self, gx: f64, gy: f64) -> (f64, f64) {
        let sx = (self.width - 2 * self.margin) as f64 / GRID_COLS as f64;
        let sy = (self.height - 2 * self.margin) as f64 / GRID_ROWS as f64;
        (self.margin as f64 + gx * sx, self.margin as f64 + gy * sy)
    }
}

/// Samples one crease in grid coordinates.
pub fn curve_samples(curve: &GuidePointSet, n: usize) -> Result<Vec<(f64, f64)>, GeometryError> {
    let n = n.max(2);
    match curve.role {
        CurveRole::Principal => {
            let spline = fit_bspline(curve)?;
            Ok(spline.sample(n).into_iter().map(|p| (p.x, p.y)).collect())
        }
        CurveRole::NonProminent => {
            let [s, p, e] = [curve.points[0], curve.points[1], curve.points[2]];
            (0..n)
                .map(|k| eval_bezier(s, p, e, k as f64 / (n - 1) as f64).map(|q| (q.x, q.y)))
                .collect()
        }
    }
}

/// Pixel-space polylines of every crease, `samples` points each.
pub fn identity_polylines(
    identity: &IdentityRecord,
    canvas: &CanvasConfig,
    samples: usize,
) -> Result<Vec<Vec<(f64, f64)>>, GeometryError> {
    identity
        .curves
        .iter()
        .map(|c| {
            curve_samples(c, samples).map(|pts| {
                pts.into_iter()
                    .map(|(x, y)| canvas.to_pixel(x, y))
                    .collect()
            })
        })
        .collect()
}

pub fn render_identity(
    identity: &IdentityRecord,
    canvas: &CanvasConfig,
) -> Result<ImageGray, RasterError> {
    canvas.validate()?;
    let mut img = ImageGray::filled(canvas.width, canvas.height, WHITE);
    for line in identity_polylines(identity, canvas, canvas.samples_per_curve)? {
        draw_polyline(&mut img, &line, canvas.stroke_thickness as f64, BLACK);
    }
    Ok(img)
}

/// Sets every pixel whose center lies within `thickness / 2` of the polyline.
/// Writes are clipped to the image.
pub fn draw_polyline(img: &mut ImageGray, points: &[(f64, f64)], thickness: f64, value: u8) {
    let radius = thickness.max(1.0) / 2.0;
    match points {
        [] => {}
        [p] => fill_capsule(img, *p, *p, radius, value),
        _ => {
            for w in points.windows(2) {
                fill_capsule(img, w[0], w[1], radius, value);
            }
        }
    }
}

fn fill_capsule(img: &mut ImageGray, a: (f64, f64), b: (f64, f64), r: f64, value: u8) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let x0 = (a.0.min(b.0) - r - 0.5).floor().max(0.0);
    let x1 = (a.0.max(b.0) + r - 0.5).ceil().min(w - 1.0);
    let y0 = (a.1.min(b.1) - r - 0.5).floor().max(0.0);
    let y1 = (a.1.max(b.1) + r - 0.5).ceil().min(h - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let r2 = r * r;
    for py in y0 as usize..=y1 as usize {
        let cy = py as f64 + 0.5;
        for px in x0 as usize..=x1 as usize {
            let cx = px as f64 + 0.5;
            let t = if len2 > 0.0 {
                (((cx - a.0) * dx + (cy - a.1) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (ex, ey) = (cx - (a.0 + t * dx), cy - (a.1 + t * dy));
            if ex * ex + ey * ey <= r2 {
                img.set(px, py, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{IdentityConfig, IdentityRecord};

    #[test]
    fn empty_identity_renders_white() {
        let mut r = IdentityRecord::generate("e", 3, &IdentityConfig::default()).unwrap();
        r.curves.clear();
        let img = render_identity(&r, &CanvasConfig::default()).unwrap();
        assert_eq!(img.count_value(WHITE), 256 * 256);
    }

    #[test]
    fn identical_points_draw_one_disc() {
        let mut img = ImageGray::filled(11, 11, WHITE);
        draw_polyline(&mut img, &[(5.5, 5.5), (5.5, 5.5)], 3.0, BLACK);
        // radius 1.5 around a pixel center: the center, 4 edge neighbours
        // at distance 1 and 4 diagonals at sqrt(2) < 1.5.
        assert_eq!(img.count_value(BLACK), 9);
        assert_eq!(img.get(5, 5), BLACK);
        assert_eq!(img.get(4, 4), BLACK);
        assert_eq!(img.get(3, 5), WHITE);
    }

    #[test]
    fn off_canvas_points_leave_image_untouched() {
        let mut img = ImageGray::filled(8, 8, WHITE);
        draw_polyline(&mut img, &[(-40.0, -3.0), (-10.0, 50.0)], 3.0, BLACK);
        assert_eq!(img.count_value(WHITE), 64);
        draw_polyline(&mut img, &[(-5.0, 4.5), (20.0, 4.5)], 1.0, BLACK);
        assert_eq!(img.count_value(BLACK), 8);
    }

    #[test]
    fn canvas_validation() {
        let c = CanvasConfig {
            width: 16,
            margin: 8,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = CanvasConfig {
            samples_per_curve: 10,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(CanvasConfig::default().validate().is_ok());
    }

    #[test]
    fn grid_corners_map_to_drawable_area() {
        let c = CanvasConfig::default();
        assert_eq!(c.to_pixel(0.0, 0.0), (8.0, 8.0));
        assert_eq!(c.to_pixel(6.0, 6.0), (248.0, 248.0));
    }
}
