//! Slow, textbook reference implementations used as test oracles.
//!
//! Nothing here shares code with `crease-core`; every routine works on raw
//! slices and follows the most literal formulation available so that the
//! optimized library paths can be checked against it.

/// Cox-de Boor recursive basis function `N_{i,p}(t)`.
///
/// The right end of the domain is treated as belonging to the last
/// non-degenerate span so clamped curves evaluate to their final
/// coefficient at `t = knots[last]`.
pub fn basis(knots: &[f64], i: usize, p: usize, t: f64) -> f64 {
    if p == 0 {
        let (lo, hi) = (knots[i], knots[i + 1]);
        let last = *knots.last().unwrap();
        if lo <= t && t < hi {
            return 1.0;
        }
        // Closed right end: the last non-empty span owns t == last.
        if t == last && hi == last && lo < hi {
            return 1.0;
        }
        return 0.0;
    }
    let mut left = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 != 0.0 {
        left = (t - knots[i]) / d1 * basis(knots, i, p - 1, t);
    }
    let mut right = 0.0;
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 != 0.0 {
        right = (knots[i + p + 1] - t) / d2 * basis(knots, i + 1, p - 1, t);
    }
    left + right
}

/// Evaluates a B-spline as `sum_i N_{i,p}(t) * c_i` using [`basis`].
pub fn bspline_point(knots: &[f64], coeffs: &[(f64, f64)], degree: usize, t: f64) -> (f64, f64) {
    let mut x = 0.0;
    let mut y = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        let n = basis(knots, i, degree, t);
        x += n * c.0;
        y += n * c.1;
    }
    (x, y)
}

pub fn quadratic_bezier(s: (f64, f64), p: (f64, f64), e: (f64, f64), t: f64) -> (f64, f64) {
    let u = 1.0 - t;
    (
        u * u * s.0 + 2.0 * u * t * p.0 + t * t * e.0,
        u * u * s.1 + 2.0 * u * t * p.1 + t * t * e.1,
    )
}

fn clamp_index(v: isize, n: usize) -> usize {
    v.clamp(0, n as isize - 1) as usize
}

/// Normalized, truncated 1-D Gaussian taps.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as isize;
    let raw: Vec<f64> = (-half..=half)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Dense 2-D Gaussian convolution with edge replication, rounded to 8 bits.
pub fn dense_gaussian_blur(data: &[u8], w: usize, h: usize, size: usize, sigma: f64) -> Vec<u8> {
    let g = gaussian_taps(size, sigma);
    let half = (size / 2) as isize;
    let mut kernel = vec![0.0; size * size];
    for j in 0..size {
        for i in 0..size {
            kernel[j * size + i] = g[j] * g[i];
        }
    }
    let ksum: f64 = kernel.iter().sum();
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -half..=half {
                for dx in -half..=half {
                    let sx = clamp_index(x as isize + dx, w);
                    let sy = clamp_index(y as isize + dy, h);
                    let k = kernel[((dy + half) as usize) * size + (dx + half) as usize] / ksum;
                    acc += k * data[sy * w + sx] as f64;
                }
            }
            out[y * w + x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Otsu threshold by sweeping all 256 candidates and recomputing the class
/// statistics from the pixels for each one. Returns the smallest maximizer.
pub fn otsu_sweep(data: &[u8]) -> u8 {
    let mut best_t = 0u8;
    let mut best = f64::NEG_INFINITY;
    for t in 0..=255u8 {
        let (mut n0, mut s0, mut n1, mut s1) = (0i128, 0i128, 0i128, 0i128);
        for &v in data {
            if v <= t {
                n0 += 1;
                s0 += v as i128;
            } else {
                n1 += 1;
                s1 += v as i128;
            }
        }
        let score = if n0 == 0 || n1 == 0 {
            0.0
        } else {
            let d = s0 * n1 - s1 * n0;
            (d * d) as f64 / (n0 * n1) as f64
        };
        if score > best {
            best = score;
            best_t = t;
        }
    }
    best_t
}

/// Neighbourhood max filter with a `k x k` square window, repeated.
pub fn max_filter(data: &[u8], w: usize, h: usize, k: usize, iterations: usize) -> Vec<u8> {
    let half = (k / 2) as isize;
    let mut cur = data.to_vec();
    for _ in 0..iterations {
        let mut next = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut m = 0u8;
                for dy in -half..=half {
                    for dx in -half..=half {
                        let sx = clamp_index(x as isize + dx, w);
                        let sy = clamp_index(y as isize + dy, h);
                        m = m.max(cur[sy * w + sx]);
                    }
                }
                next[y * w + x] = m;
            }
        }
        cur = next;
    }
    cur
}

/// Mean SSIM over every valid `win x win` window, each window evaluated
/// straight from the weighted-moment definitions.
pub fn ssim_windows(a: &[u8], b: &[u8], w: usize, h: usize, win: usize, sigma: f64) -> f64 {
    let g = gaussian_taps(win, sigma);
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for oy in 0..=(h - win) {
        for ox in 0..=(w - win) {
            let mut wsum = 0.0;
            let (mut ma, mut mb) = (0.0, 0.0);
            for j in 0..win {
                for i in 0..win {
                    let k = g[j] * g[i];
                    let idx = (oy + j) * w + ox + i;
                    wsum += k;
                    ma += k * a[idx] as f64;
                    mb += k * b[idx] as f64;
                }
            }
            ma /= wsum;
            mb /= wsum;
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..win {
                for i in 0..win {
                    let k = g[j] * g[i] / wsum;
                    let idx = (oy + j) * w + ox + i;
                    let da = a[idx] as f64 - ma;
                    let db = b[idx] as f64 - mb;
                    va += k * da * da;
                    vb += k * db * db;
                    cov += k * da * db;
                }
            }
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

fn distinct_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).unwrap());
    all.dedup();
    all
}

/// `(fmr, fnmr)` at threshold `tau`, counted directly.
pub fn rates_at(genuine: &[f64], impostor: &[f64], tau: f64) -> (f64, f64) {
    let fm = impostor.iter().filter(|&&s| s >= tau).count();
    let fnm = genuine.iter().filter(|&&s| s < tau).count();
    (
        fm as f64 / impostor.len() as f64,
        fnm as f64 / genuine.len() as f64,
    )
}

/// Exhaustive EER sweep over every distinct score.
pub fn eer_sweep(genuine: &[f64], impostor: &[f64]) -> (f64, f64) {
    let mut best: Option<(f64, f64, f64)> = None;
    for tau in distinct_sorted(genuine, impostor) {
        let (fmr, fnmr) = rates_at(genuine, impostor, tau);
        let gap = (fmr - fnmr).abs();
        match best {
            Some((g, _, _)) if gap >= g => {}
            _ => best = Some((gap, tau, (fmr + fnmr) / 2.0)),
        }
    }
    let (_, tau, eer) = best.unwrap();
    (eer, tau)
}

/// Exhaustive TMR@FMR sweep: smallest candidate threshold meeting the FMR
/// target, with a threshold above every score as the fallback.
pub fn tmr_sweep(genuine: &[f64], impostor: &[f64], target: f64) -> f64 {
    let mut cands = distinct_sorted(genuine, impostor);
    let top = *cands.last().unwrap();
    cands.push(next_up(top));
    for tau in cands {
        let (fmr, _) = rates_at(genuine, impostor, tau);
        if fmr <= target {
            let hits = genuine.iter().filter(|&&s| s >= tau).count();
            return hits as f64 / genuine.len() as f64;
        }
    }
    unreachable!("threshold above every score has zero FMR")
}

/// Every `(fmr, fnmr)` pair over distinct scores plus one threshold above
/// the maximum, ordered by descending threshold.
pub fn det_sweep(genuine: &[f64], impostor: &[f64]) -> Vec<(f64, f64)> {
    let mut cands = distinct_sorted(genuine, impostor);
    let top = *cands.last().unwrap();
    cands.push(next_up(top));
    cands.reverse();
    cands
        .into_iter()
        .map(|tau| rates_at(genuine, impostor, tau))
        .collect()
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// Distance from point `q` to the segment `a-b`.
pub fn point_segment_distance(q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((q.0 - a.0) * dx + (q.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (px, py) = (a.0 + t * dx, a.1 + t * dy);
    ((q.0 - px).powi(2) + (q.1 - py).powi(2)).sqrt()
}

/// Mean over all unordered pairs of the Euclidean distance between rows.
pub fn mean_pairwise_distance(rows: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += d.sqrt();
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Frechet distance between two Gaussians with diagonal covariances.
pub fn frechet_diagonal(mu1: &[f64], var1: &[f64], mu2: &[f64], var2: &[f64]) -> f64 {
    let mut d = 0.0;
    for i in 0..mu1.len() {
        d += (mu1[i] - mu2[i]).powi(2) + (var1[i].sqrt() - var2[i].sqrt()).powi(2);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_partition_of_unity() {
        let knots = [0.0, 0.0, 0.0, 0.0, 0.3, 0.6, 1.0, 1.0, 1.0, 1.0];
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let s: f64 = (0..6).map(|i| basis(&knots, i, 3, t)).sum();
            assert!((s - 1.0).abs() < 1e-12, "t={t} sum={s}");
        }
    }

    #[test]
    fn eer_sweep_separated() {
        let (eer, _) = eer_sweep(&[0.9, 0.8], &[0.2, 0.1]);
        assert_eq!(eer, 0.0);
    }
}
