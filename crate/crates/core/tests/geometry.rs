use std::collections::{HashMap, HashSet};

use crease_core::geometry::{
    eval_bezier, fit_bspline, interpolate, sample_bezier_guides, sample_grid_mask,
    sample_principal_guides, BSplineCurve, GridMask, IdentityConfig, IdentityRecord, Margin, Point,
    RowMask, CELLS_PER_ROW, GRID_ROWS, MIN_ACTIVE_ROWS,
};
use crease_core::seed::{derive_rng, rng_from_seed};
use proptest::prelude::*;
use rand::Rng;

fn pairs(points: &[Point]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.x, p.y)).collect()
}

fn check_against_oracle(curve: &BSplineCurve, params: usize) -> f64 {
    let (a, b) = curve.domain();
    let coeffs = pairs(curve.coefficients());
    let mut worst: f64 = 0.0;
    for k in 0..params {
        let u = a + (b - a) * k as f64 / (params - 1) as f64;
        let lib = curve.eval_knot(u);
        let (ox, oy) = crease_oracle::bspline_point(curve.knots(), &coeffs, curve.degree(), u);
        worst = worst.max((lib.x - ox).abs()).max((lib.y - oy).abs());
    }
    worst
}

#[test]
fn principal_splines_match_cox_de_boor() {
    let config = IdentityConfig::default();
    let mut checked = 0;
    for seed in 0..300 {
        let id = IdentityRecord::generate("s", seed, &config).unwrap();
        for curve in id.curves.iter().filter(|c| c.cell.is_none()) {
            let spline = fit_bspline(curve).unwrap();
            let err = check_against_oracle(&spline, 50);
            assert!(err < 1e-12, "seed {seed}: oracle gap {err:e}");
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn interpolation_hits_every_guide() {
    let config = IdentityConfig::default();
    for seed in 0..300 {
        let id = IdentityRecord::generate("s", seed, &config).unwrap();
        for curve in id.curves.iter().filter(|c| c.cell.is_none()) {
            let spline = fit_bspline(curve).unwrap();
            let params = crease_core::geometry::chord_length_params(&curve.points).unwrap();
            for (p, &u) in curve.points.iter().zip(&params) {
                let q = spline.eval_knot(u);
                assert!(
                    p.distance(&q) < 1e-9,
                    "seed {seed}: residual {}",
                    p.distance(&q)
                );
            }
        }
    }
}

#[test]
fn quadratic_bspline_on_bezier_knots_is_the_bezier() {
    let mut rng = rng_from_seed(11);
    for _ in 0..200 {
        let mut pt = || Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let (s, p, e) = (pt(), pt(), pt());
        let curve =
            BSplineCurve::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], vec![s, p, e]).unwrap();
        for k in 0..=40 {
            let t = k as f64 / 40.0;
            let a = curve.eval(t).unwrap();
            let b = eval_bezier(s, p, e, t).unwrap();
            assert!(a.distance(&b) < 1e-12);
        }
    }
}

#[test]
fn bezier_matches_closed_form() {
    let mut rng = rng_from_seed(12);
    for _ in 0..1000 {
        let mut pt = || (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (s, p, e) = (pt(), pt(), pt());
        let t: f64 = rng.random();
        let lib = eval_bezier(
            Point::new(s.0, s.1),
            Point::new(p.0, p.1),
            Point::new(e.0, e.1),
            t,
        )
        .unwrap();
        let (ox, oy) = crease_oracle::quadratic_bezier(s, p, e, t);
        assert!((lib.x - ox).abs() <= 4.0 * f64::EPSILON * 10.0);
        assert!((lib.y - oy).abs() <= 4.0 * f64::EPSILON * 10.0);
    }
}

#[test]
fn masks_satisfy_invariants_at_scale() {
    for seed in 0..100_000u64 {
        let mask = sample_grid_mask(&mut rng_from_seed(seed));
        mask.validate()
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let (first, last) = mask.active_span().unwrap();
        let (top, bottom) = (first, GRID_ROWS - 1 - last);
        assert!(top.abs_diff(bottom) <= 1);
    }
}

/// Probability of every mask the sampler can emit, by enumeration of its
/// draw sequence.
fn mask_distribution() -> HashMap<String, f64> {
    #[derive(Clone, Copy, PartialEq)]
    enum R {
        P,
        W,
        U,
    }
    fn arrangements(counts: [usize; 3], prefix: &mut Vec<R>, out: &mut Vec<Vec<R>>) {
        if counts.iter().sum::<usize>() == 0 {
            if prefix[0] != R::U && *prefix.last().unwrap() != R::U {
                out.push(prefix.clone());
            }
            return;
        }
        for (k, role) in [R::P, R::W, R::U].into_iter().enumerate() {
            if counts[k] > 0 {
                let mut next = counts;
                next[k] -= 1;
                prefix.push(role);
                arrangements(next, prefix, out);
                prefix.pop();
            }
        }
    }
    // Non-empty cell subsets: w ~ U{1..3}, then a uniform w-subset.
    let mut subsets: Vec<([bool; CELLS_PER_ROW], f64)> = Vec::new();
    for bits in 1u8..8 {
        let cells = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
        let w = bits.count_ones();
        let choose = [1.0, 3.0, 3.0, 1.0][w as usize];
        subsets.push((cells, 1.0 / 3.0 / choose));
    }

    let mut dist = HashMap::new();
    for r in MIN_ACTIVE_ROWS..=GRID_ROWS {
        for rc in 1..=r {
            let rws: Vec<usize> = if r > rc {
                (1..=r - rc).collect()
            } else {
                vec![0]
            };
            for &rw in &rws {
                let base = 1.0 / 4.0 / r as f64 / rws.len() as f64;
                let mut perms = Vec::new();
                arrangements([rc, rw, r - rc - rw], &mut Vec::new(), &mut perms);
                let p_perm = base / perms.len() as f64;
                let top = (GRID_ROWS - r).div_ceil(2);
                for perm in &perms {
                    let mut partial = vec![([RowMask::Empty; GRID_ROWS], p_perm)];
                    for (k, role) in perm.iter().enumerate() {
                        let mut next = Vec::new();
                        for (rows, p) in partial {
                            match role {
                                R::P | R::U => {
                                    let mut rows = rows;
                                    if *role == R::P {
                                        rows[top + k] = RowMask::Principal;
                                    }
                                    next.push((rows, p));
                                }
                                R::W => {
                                    for &(cells, q) in &subsets {
                                        let mut rows = rows;
                                        rows[top + k] = RowMask::NonProminent(cells);
                                        next.push((rows, p * q));
                                    }
                                }
                            }
                        }
                        partial = next;
                    }
                    for (rows, p) in partial {
                        *dist.entry(GridMask::from_rows(rows).key()).or_insert(0.0) += p;
                    }
                }
            }
        }
    }
    dist
}

#[test]
fn mask_duplicate_rate_matches_enumeration() {
    let dist = mask_distribution();
    let total: f64 = dist.values().sum();
    assert!((total - 1.0).abs() < 1e-9, "probabilities sum to {total}");

    let n = 10_000usize;
    let expected_distinct: f64 = dist.values().map(|p| 1.0 - (1.0 - p).powi(n as i32)).sum();
    let expected_dup = 1.0 - expected_distinct / n as f64;

    let config = IdentityConfig::default();
    let mut masks = HashSet::new();
    let mut identities = HashSet::new();
    for i in 0..n as u64 {
        let id = IdentityRecord::generate("d", i, &config).unwrap();
        let key = id.mask.key();
        assert!(
            dist.contains_key(&key),
            "mask {key} outside the enumerated space"
        );
        masks.insert(key);
        identities.insert(serde_json::to_string(&id.curves).unwrap());
    }
    let observed_dup = 1.0 - masks.len() as f64 / n as f64;
    // Distinct-count variance is below its mean; 5 sd of sqrt(distinct)/n.
    let tol = 5.0 * expected_distinct.sqrt() / n as f64;
    assert!(
        (observed_dup - expected_dup).abs() < tol,
        "duplicate fraction {observed_dup} vs enumerated {expected_dup} (tol {tol})"
    );
    assert_eq!(
        identities.len(),
        n,
        "every identity is unique once guides are included"
    );
}

#[test]
fn identities_from_consecutive_seeds_are_valid() {
    let config = IdentityConfig::default();
    for seed in 0..247 {
        let id = IdentityRecord::generate(&format!("id{seed:04}"), seed, &config).unwrap();
        id.validate().unwrap();
        let again = IdentityRecord::generate(&format!("id{seed:04}"), seed, &config).unwrap();
        assert_eq!(id.to_json().unwrap(), again.to_json().unwrap());
    }
}

#[test]
fn cpd_variants_keep_mask_and_differ() {
    let config = IdentityConfig::default();
    let parent = IdentityRecord::generate("p", 5, &config).unwrap();
    let mut seen = HashSet::new();
    for k in 0..10 {
        let child = parent.cpd_variant_seeded(k, 0.45).unwrap();
        assert_eq!(child.mask, parent.mask);
        child.validate().unwrap();
        seen.insert(serde_json::to_string(&child.curves).unwrap());
    }
    assert_eq!(seen.len(), 10);
}

#[test]
fn cpd_variant_golden() {
    let config = IdentityConfig::default();
    let parent = IdentityRecord::generate("p", 5, &config).unwrap();
    let hashes: Vec<String> = (0..10)
        .map(|k| {
            let child = parent.cpd_variant_seeded(k, 0.45).unwrap();
            crease_core::seed::content_hash(child.to_json().unwrap().as_bytes())[..16].to_string()
        })
        .collect();
    assert_eq!(hashes, CPD_GOLDEN);
}

const CPD_GOLDEN: [&str; 10] = [
    "96938ba2ff7f8524",
    "898ccb60c371ef6e",
    "c8dfa2c214a6afa5",
    "e1e497fa2f1664cb",
    "f6e56a246db03071",
    "a01b62116d796716",
    "f2fb0f9da2d94387",
    "25e64c2c436a6e37",
    "642e28df329fcb98",
    "7690fa3254fa601d",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn principal_guides_respect_constraints(seed in any::<u64>(), row in 0usize..6, m in 0.3f64..=0.6, deg in 3usize..=4) {
        let g = sample_principal_guides(&mut rng_from_seed(seed), row, Margin::new(m).unwrap(), deg).unwrap();
        prop_assert_eq!(g.points.len(), deg + 4);
        prop_assert!(g.validate(m).is_ok());
        prop_assert!(interpolate(&g.points, deg).is_ok());
    }

    #[test]
    fn bezier_guides_respect_constraints(seed in any::<u64>(), row in 0usize..6, cell in 0usize..3, m in 0.3f64..=0.6) {
        let g = sample_bezier_guides(&mut rng_from_seed(seed), row, cell, Margin::new(m).unwrap()).unwrap();
        prop_assert!(g.validate(m).is_ok());
    }

    #[test]
    fn cpd_never_changes_the_mask(seed in any::<u64>(), k in 0u32..10, mag in 0.0f64..0.6) {
        let parent = IdentityRecord::generate("p", seed, &IdentityConfig::default()).unwrap();
        let child = crease_core::geometry::cpd_variant(&parent, &mut derive_rng(seed, &["t"]), mag, k).unwrap();
        prop_assert_eq!(child.mask, parent.mask);
        prop_assert!(child.validate().is_ok());
    }

    #[test]
    fn identity_json_round_trips(seed in any::<u64>()) {
        let id = IdentityRecord::generate("r", seed, &IdentityConfig::default()).unwrap();
        let text = id.to_json().unwrap();
        let back = IdentityRecord::from_json(&text).unwrap();
        prop_assert_eq!(&back, &id);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}
