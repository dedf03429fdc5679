use crease_core::geometry::{IdentityConfig, IdentityRecord};
use crease_core::gray::{BLACK, WHITE};
use crease_core::raster::{
    curve_samples, draw_polyline, identity_polylines, render_identity, CanvasConfig,
};
use crease_core::seed::{content_hash, rng_from_seed};
use crease_core::ImageGray;
use proptest::prelude::*;
use rand::Rng;

/// Pixels whose center lies within `thickness / 2` of any segment.
fn capsule_oracle(w: usize, h: usize, points: &[(f64, f64)], thickness: f64) -> Vec<u8> {
    let r = thickness.max(1.0) / 2.0;
    let mut out = vec![WHITE; w * h];
    for y in 0..h {
        for x in 0..w {
            let q = (x as f64 + 0.5, y as f64 + 0.5);
            let hit = if points.len() == 1 {
                crease_oracle::point_segment_distance(q, points[0], points[0]) <= r
            } else {
                points
                    .windows(2)
                    .any(|s| crease_oracle::point_segment_distance(q, s[0], s[1]) <= r)
            };
            if hit {
                out[y * w + x] = BLACK;
            }
        }
    }
    out
}

#[test]
fn polyline_matches_capsule_oracle() {
    let mut rng = rng_from_seed(3);
    for _ in 0..60 {
        let n = rng.random_range(1..6);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-4.0..36.0), rng.random_range(-4.0..28.0)))
            .collect();
        let thickness = rng.random_range(1.0..6.0);
        let mut img = ImageGray::filled(32, 24, WHITE);
        draw_polyline(&mut img, &pts, thickness, BLACK);
        assert_eq!(
            img.data(),
            capsule_oracle(32, 24, &pts, thickness).as_slice()
        );
    }
}

#[test]
fn principal_stroke_area_is_bounded_by_length() {
    let config = IdentityConfig::default();
    let canvas = CanvasConfig::default();
    for seed in 0..40 {
        let mut id = IdentityRecord::generate("r", seed, &config).unwrap();
        id.curves.retain(|c| c.cell.is_none());
        id.curves.truncate(1);
        let line = &identity_polylines(&id, &canvas, canvas.samples_per_curve).unwrap()[0];
        let len: f64 = line
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum();
        let img = render_identity(&id, &canvas).unwrap();
        let ink = img.count_value(BLACK) as f64;
        assert!(
            ink >= len && ink <= 5.0 * len,
            "seed {seed}: ink {ink}, length {len}"
        );
    }
}

#[test]
fn every_stroke_pixel_hugs_the_true_curve() {
    let config = IdentityConfig::default();
    let canvas = CanvasConfig::default();
    let bound = canvas.stroke_thickness as f64 / 2.0 + 1.0;
    for seed in 0..5 {
        let id = IdentityRecord::generate("f", seed, &config).unwrap();
        let img = render_identity(&id, &canvas).unwrap();
        let dense: Vec<(f64, f64)> = identity_polylines(&id, &canvas, 8192)
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.get(x, y) != BLACK {
                    continue;
                }
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                let d = dense
                    .iter()
                    .map(|p| (p.0 - cx).hypot(p.1 - cy))
                    .fold(f64::INFINITY, f64::min);
                assert!(d <= bound, "seed {seed}: pixel ({x}, {y}) is {d} px away");
            }
        }
    }
}

#[test]
fn thin_horizontal_segment_is_one_row() {
    let mut img = ImageGray::filled(20, 9, WHITE);
    draw_polyline(&mut img, &[(2.0, 4.5), (17.0, 4.5)], 1.0, BLACK);
    let expected = capsule_oracle(20, 9, &[(2.0, 4.5), (17.0, 4.5)], 1.0);
    assert_eq!(img.data(), expected.as_slice());
    for x in 0..20 {
        let inked = (0..9).filter(|&y| img.get(x, y) == BLACK).count();
        // Round caps reach the pixel centers half a pixel past each end.
        assert_eq!(inked, usize::from((1..=17).contains(&x)));
    }
}

#[test]
fn bezier_samples_start_and_end_on_guides() {
    let id = IdentityRecord::generate("b", 8, &IdentityConfig::default()).unwrap();
    for c in &id.curves {
        let s = curve_samples(c, 64).unwrap();
        let (a, b) = (c.points[0], *c.points.last().unwrap());
        assert!((s[0].0 - a.x).abs() < 1e-12 && (s[0].1 - a.y).abs() < 1e-12);
        assert!((s[63].0 - b.x).abs() < 1e-9 && (s[63].1 - b.y).abs() < 1e-9);
    }
}

#[test]
fn rendered_prompt_golden() {
    let id = IdentityRecord::generate("g", 2024, &IdentityConfig::default()).unwrap();
    let img = render_identity(&id, &CanvasConfig::default()).unwrap();
    assert!(img.is_binary());
    assert_eq!(content_hash(img.data()), PROMPT_GOLDEN);
}

const PROMPT_GOLDEN: &str = "469ef8e112be54aa2e5f09480c040ce2fb86156a1666307f4e7651dbfcc14199";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn renders_are_binary_and_deterministic(seed in any::<u64>()) {
        let id = IdentityRecord::generate("p", seed, &IdentityConfig::default()).unwrap();
        let canvas = CanvasConfig { width: 128, height: 96, margin: 4, ..Default::default() };
        let a = render_identity(&id, &canvas).unwrap();
        let b = render_identity(&id, &canvas).unwrap();
        prop_assert!(a.is_binary());
        prop_assert!(a.count_value(BLACK) > 0);
        prop_assert_eq!(a, b);
    }
}
