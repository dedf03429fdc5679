//! Guide points for principal (B-spline) and non-prominent (Bezier) creases.
//!
//! Grid coordinates: the canvas spans `[0, 6] x [0, 6]`, `y` grows downward
//! and row `i` occupies `y in [i, i + 1]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mask::{CELLS_PER_ROW, GRID_COLS, GRID_ROWS};
use super::GeometryError;

/// Minimum horizontal gap kept between consecutive guide points.
pub const MIN_X_GAP: f64 = 0.05;

/// Slack used when checking bounds of stored (12-digit) coordinates.
const BOUNDS_SLACK: f64 = 1e-9;

pub const PRINCIPAL_DEGREES: [usize; 2] = [3, 4];
pub const BEZIER_DEGREE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Perturbation margin `m`. Sampling code only accepts `0.3 <= m <= 0.6`;
/// [`Margin::diagnostic`] lifts the range check for inspection runs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Margin(f64);

impl Margin {
    pub const MIN: f64 = 0.3;
    pub const MAX: f64 = 0.6;

    pub fn new(m: f64) -> Result<Self, GeometryError> {
        if (Self::MIN..=Self::MAX).contains(&m) {
            Ok(Self(m))
        } else {
            Err(GeometryError::MarginOutOfRange(m))
        }
    }

    /// Any finite non-negative margin, including zero.
    pub fn diagnostic(m: f64) -> Result<Self, GeometryError> {
        if m.is_finite() && m >= 0.0 {
            Ok(Self(m))
        } else {
            Err(GeometryError::MarginOutOfRange(m))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveRole {
    Principal,
    NonProminent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidePointSet {
    pub role: CurveRole,
    pub row: usize,
    /// Merged-cell index, non-prominent creases only.
    pub cell: Option<usize>,
    pub degree: usize,
    pub points: Vec<Point>,
}

/// Axis-aligned box `(x_lo, x_hi, y_lo, y_hi)`.
pub type Bounds = (f64, f64, f64, f64);

impl GuidePointSet {
    /// The owning row (principal) or 1x2 cell (non-prominent), grown by `margin`.
    pub fn bounds(&self, margin: f64) -> Bounds {
        let r = self.row as f64;
        match (self.role, self.cell) {
            (CurveRole::NonProminent, Some(c)) => {
                let x0 = 2.0 * c as f64;
                (x0 - margin, x0 + 2.0 + margin, r - margin, r + 1.0 + margin)
            }
            _ => (
                -margin,
                GRID_COLS as f64 + margin,
                r - margin,
                r + 1.0 + margin,
            ),
        }
    }

    pub fn validate(&self, margin: f64) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidGuides(msg));
        if self.row >= GRID_ROWS {
            return Err(GeometryError::RowOutOfRange(self.row));
        }
        match self.role {
            CurveRole::Principal => {
                if !PRINCIPAL_DEGREES.contains(&self.degree) {
                    return Err(GeometryError::InvalidDegree(self.degree));
                }
                if self.cell.is_some() {
                    return bad("principal crease carries a cell index".into());
                }
                if self.points.len() != self.degree + 4 {
                    return bad(format!(
                        "principal degree {} needs {} points, got {}",
                        self.degree,
                        self.degree + 4,
                        self.points.len()
                    ));
                }
            }
            CurveRole::NonProminent => {
                if self.degree != BEZIER_DEGREE {
                    return Err(GeometryError::InvalidDegree(self.degree));
                }
                match self.cell {
                    Some(c) if c < CELLS_PER_ROW => {}
                    Some(c) => return Err(GeometryError::CellOutOfRange(c)),
                    None => return bad("non-prominent crease without cell".into()),
                }
                if self.points.len() != 3 {
                    return bad(format!("bezier needs 3 points, got {}", self.points.len()));
                }
            }
        }
        if self.points.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(GeometryError::NotIncreasing);
        }
        let (x0, x1, y0, y1) = self.bounds(margin);
        for p in &self.points {
            if p.x < x0 - BOUNDS_SLACK
                || p.x > x1 + BOUNDS_SLACK
                || p.y < y0 - BOUNDS_SLACK
                || p.y > y1 + BOUNDS_SLACK
            {
                return bad(format!("point ({}, {}) outside owning box", p.x, p.y));
            }
        }
        Ok(())
    }
}

/// Uniform draw on `[-m, m)`. Always consumes exactly one value from `rng`.
pub(crate) fn symmetric<R: Rng + ?Sized>(rng: &mut R, m: f64) -> f64 {
    m * (2.0 * rng.random::<f64>() - 1.0)
}

/// Rounds to 12 significant decimal digits so stored coordinates survive a
/// JSON round trip bit-exactly.
pub fn quantize(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

/// Clamps `xs` into `[lo, hi]` and makes it strictly increasing with at least
/// `gap` between neighbours. Needs `lo + (n - 1) * gap <= hi`.
pub(crate) fn enforce_increasing(xs: &mut [f64], lo: f64, hi: f64, gap: f64) {
    let n = xs.len();
    if n == 0 {
        return;
    }
    for x in xs.iter_mut() {
        *x = x.clamp(lo, hi);
    }
    for i in 1..n {
        xs[i] = xs[i].max(xs[i - 1] + gap);
    }
    xs[n - 1] = xs[n - 1].min(hi);
    for i in (0..n - 1).rev() {
        xs[i] = xs[i].min(xs[i + 1] - gap);
    }
}

fn check_degree(degree: usize) -> Result<(), GeometryError> {
    if PRINCIPAL_DEGREES.contains(&degree) {
        Ok(())
    } else {
        Err(GeometryError::InvalidDegree(degree))
    }
}

/// Principal crease guides for `row`.
///
/// Start and end sit at the centers of the row's first and last unit cell.
/// `degree + 2` interior guides start evenly spaced on the baseline between
/// them; each then has its `x` and `y` shifted independently by a uniform
/// draw from `[-m, m]`.
pub fn sample_principal_guides<R: Rng + ?Sized>(
    rng: &mut R,
    row: usize,
    margin: Margin,
    degree: usize,
) -> Result<GuidePointSet, GeometryError> {
    check_degree(degree)?;
    if row >= GRID_ROWS {
        return Err(GeometryError::RowOutOfRange(row));
    }
    let m = margin.value();
    let y = row as f64 + 0.5;
    let start = Point::new(0.5, y);
    let end = Point::new(GRID_COLS as f64 - 0.5, y);
    let interior = degree + 2;
    let step = (end.x - start.x) / (interior + 1) as f64;

    let mut xs = Vec::with_capacity(interior);
    let mut ys = Vec::with_capacity(interior);
    for k in 1..=interior {
        let dx = symmetric(rng, m);
        let dy = symmetric(rng, m);
        xs.push(start.x + step * k as f64 + dx);
        ys.push((y + dy).clamp(row as f64 - m, row as f64 + 1.0 + m));
    }
    enforce_increasing(&mut xs, start.x + MIN_X_GAP, end.x - MIN_X_GAP, MIN_X_GAP);

    let mut points = Vec::with_capacity(interior + 2);
    points.push(start);
    points.extend(
        xs.into_iter()
            .zip(ys)
            .map(|(x, y)| Point::new(quantize(x), quantize(y))),
    );
    points.push(end);
    Ok(GuidePointSet {
        role: CurveRole::Principal,
        row,
        cell: None,
        degree,
        points,
    })
}

/// Non-prominent crease guides for merged cell `cell` of `row`: start, control
/// and end at the left-half center, cell midpoint and right-half center, all
/// three perturbed by `[-m, m]` and clamped into the cell grown by `m`.
pub fn sample_bezier_guides<R: Rng + ?Sized>(
    rng: &mut R,
    row: usize,
    cell: usize,
    margin: Margin,
) -> Result<GuidePointSet, GeometryError> {
    if row >= GRID_ROWS {
        return Err(GeometryError::RowOutOfRange(row));
    }
    if cell >= CELLS_PER_ROW {
        return Err(GeometryError::CellOutOfRange(cell));
    }
    let m = margin.value();
    let x0 = 2.0 * cell as f64;
    let y = row as f64 + 0.5;
    let base = [x0 + 0.5, x0 + 1.0, x0 + 1.5];
    let mut set = GuidePointSet {
        role: CurveRole::NonProminent,
        row,
        cell: Some(cell),
        degree: BEZIER_DEGREE,
        points: base.iter().map(|&x| Point::new(x, y)).collect(),
    };
    jitter_in_place(rng, &mut set, m, m);
    Ok(set)
}

/// Adds `[-magnitude, magnitude]` noise to every point of `set`, then clamps
/// into the owning box grown by `margin` and restores x-ordering.
pub(crate) fn jitter_in_place<R: Rng + ?Sized>(
    rng: &mut R,
    set: &mut GuidePointSet,
    magnitude: f64,
    margin: f64,
) {
    let (x_lo, x_hi, y_lo, y_hi) = set.bounds(margin);
    let mut xs = Vec::with_capacity(set.points.len());
    for p in set.points.iter_mut() {
        let dx = symmetric(rng, magnitude);
        let dy = symmetric(rng, magnitude);
        xs.push(p.x + dx);
        p.y = (p.y + dy).clamp(y_lo, y_hi);
    }
    enforce_increasing(&mut xs, x_lo, x_hi, MIN_X_GAP);
    for (p, x) in set.points.iter_mut().zip(xs) {
        p.x = quantize(x);
        p.y = quantize(p.y);
    }
}
