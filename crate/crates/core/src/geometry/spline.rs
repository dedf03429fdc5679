//! Clamped interpolating B-splines and quadratic Bezier evaluation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::guides::{GuidePointSet, Point};
use super::GeometryError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineCurve {
    degree: usize,
    knots: Vec<f64>,
    coefficients: Vec<Point>,
}

impl BSplineCurve {
    /// Checks the knot count and that both ends are clamped.
    pub fn new(
        degree: usize,
        knots: Vec<f64>,
        coefficients: Vec<Point>,
    ) -> Result<Self, GeometryError> {
        if degree == 0 || coefficients.len() < degree + 1 {
            return Err(GeometryError::BadKnots(format!(
                "degree {degree} needs at least {} coefficients, got {}",
                degree + 1,
                coefficients.len()
            )));
        }
        if knots.len() != coefficients.len() + degree + 1 {
            return Err(GeometryError::BadKnots(format!(
                "{} knots for {} coefficients of degree {degree}",
                knots.len(),
                coefficients.len()
            )));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(GeometryError::BadKnots("knots decrease".into()));
        }
        let k = knots.len();
        let clamped = knots[..=degree].iter().all(|&u| u == knots[0])
            && knots[k - degree - 1..].iter().all(|&u| u == knots[k - 1]);
        if !clamped || knots[0] >= knots[k - 1] {
            return Err(GeometryError::BadKnots("ends are not clamped".into()));
        }
        Ok(Self {
            degree,
            knots,
            coefficients,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn coefficients(&self) -> &[Point] {
        &self.coefficients
    }

    /// Parameter interval `[knots[p], knots[len - 1 - p]]`.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.knots[self.degree],
            self.knots[self.knots.len() - 1 - self.degree],
        )
    }

    /// Evaluates at normalized `t in [0, 1]`, mapped affinely onto the domain.
    pub fn eval(&self, t: f64) -> Result<Point, GeometryError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(GeometryError::Domain(t));
        }
        let (a, b) = self.domain();
        Ok(self.eval_knot(a + t * (b - a)))
    }

    /// de Boor's triangular scheme at knot-space parameter `u`.
    pub fn eval_knot(&self, u: f64) -> Point {
        let p = self.degree;
        let span = find_span(&self.knots, self.coefficients.len(), p, u);
        let mut d: Vec<Point> = (0..=p).map(|j| self.coefficients[span - p + j]).collect();
        for r in 1..=p {
            for j in (r..=p).rev() {
                let i = span - p + j;
                let denom = self.knots[i + p + 1 - r] - self.knots[i];
                let alpha = if denom == 0.0 {
                    0.0
                } else {
                    (u - self.knots[i]) / denom
                };
                d[j] = Point::new(
                    (1.0 - alpha) * d[j - 1].x + alpha * d[j].x,
                    (1.0 - alpha) * d[j - 1].y + alpha * d[j].y,
                );
            }
        }
        d[p]
    }

    /// `n` evenly spaced samples over the whole curve, endpoints included.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        let (a, b) = self.domain();
        let n = n.max(2);
        (0..n)
            .map(|k| self.eval_knot(a + (b - a) * k as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Index `s` with `knots[s] <= u < knots[s + 1]`; the right end of the domain
/// maps to the last non-empty span.
fn find_span(knots: &[f64], n_coeffs: usize, p: usize, u: f64) -> usize {
    let n = n_coeffs - 1;
    if u >= knots[n + 1] {
        return n;
    }
    if u <= knots[p] {
        return p;
    }
    let (mut lo, mut hi) = (p, n + 1);
    let mut mid = (lo + hi) / 2;
    while u < knots[mid] || u >= knots[mid + 1] {
        if u < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = (lo + hi) / 2;
    }
    mid
}

/// The `p + 1` non-vanishing basis functions at `u` (triangular table).
fn basis_funs(knots: &[f64], span: usize, p: usize, u: f64) -> Vec<f64> {
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Normalized cumulative chord length of `points`, from 0 to 1.
pub fn chord_length_params(points: &[Point]) -> Result<Vec<f64>, GeometryError> {
    let steps: Vec<f64> = points.windows(2).map(|w| w[0].distance(&w[1])).collect();
    let total: f64 = steps.iter().sum();
    if total <= 0.0 || steps.contains(&0.0) {
        return Err(GeometryError::NotIncreasing);
    }
    let mut params = Vec::with_capacity(points.len());
    params.push(0.0);
    let mut acc = 0.0;
    for d in &steps[..steps.len() - 1] {
        acc += d;
        params.push(acc / total);
    }
    params.push(1.0);
    Ok(params)
}

/// Clamped knot vector by averaging `degree` consecutive interior parameters.
pub fn averaged_knots(params: &[f64], degree: usize) -> Vec<f64> {
    let n = params.len() - 1;
    let mut knots = vec![0.0; n + degree + 2];
    for j in 1..=n - degree {
        let sum: f64 = params[j..j + degree].iter().sum();
        knots[j + degree] = sum / degree as f64;
    }
    for k in knots.iter_mut().skip(n + 1) {
        *k = 1.0;
    }
    knots
}

/// Interpolating clamped B-spline through `points` (zero smoothing).
pub fn interpolate(points: &[Point], degree: usize) -> Result<BSplineCurve, GeometryError> {
    if degree == 0 || points.len() < degree + 1 {
        return Err(GeometryError::TooFewGuides {
            degree,
            count: points.len(),
        });
    }
    if points.windows(2).any(|w| w[1].x <= w[0].x) {
        return Err(GeometryError::NotIncreasing);
    }
    let params = chord_length_params(points)?;
    let knots = averaged_knots(&params, degree);
    let count = points.len();

    // Collocation matrix is banded (at most degree + 1 entries per row).
    let mut a = DMatrix::<f64>::zeros(count, count);
    for (row, &u) in params.iter().enumerate() {
        let span = find_span(&knots, count, degree, u);
        for (j, v) in basis_funs(&knots, span, degree, u).into_iter().enumerate() {
            a[(row, span - degree + j)] = v;
        }
    }
    let rhs = DMatrix::from_fn(
        count,
        2,
        |r, c| if c == 0 { points[r].x } else { points[r].y },
    );
    let lu = a.lu();
    let solved = lu.solve(&rhs).ok_or(GeometryError::SingularSystem)?;
    if solved.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::SingularSystem);
    }
    let coefficients = (0..count)
        .map(|r| Point::new(solved[(r, 0)], solved[(r, 1)]))
        .collect();
    BSplineCurve::new(degree, knots, coefficients)
}

/// Fits the B-spline of a guide set at the set's own degree.
pub fn fit_bspline(guides: &GuidePointSet) -> Result<BSplineCurve, GeometryError> {
    interpolate(&guides.points, guides.degree)
}

/// `(1 - t)^2 s + 2 (1 - t) t p + t^2 e`.
pub fn eval_bezier(s: Point, p: Point, e: Point, t: f64) -> Result<Point, GeometryError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::Domain(t));
    }
    let u = 1.0 - t;
    let (a, b, c) = (u * u, 2.0 * u * t, t * t);
    Ok(Point::new(
        a * s.x + b * p.x + c * e.x,
        a * s.y + b * p.y + c * e.y,
    ))
}
