use elastic_unwrap::evaluate::{aligned_iou, profile_error};
use elastic_unwrap::geometry::{cumulative_chord, extract_contour, resample_polyline, BinaryMask, Point};
use elastic_unwrap::morph::{
    alpha_filter, curvature_deformation, dilate, distance_and_footpoint, erode, minimizing_scale, phi0_field,
    reference_curve, unwrap_image, unwrap_morph, FieldUnits, KappaReference, MorphConfig, ReferenceCurve,
    ScalarField, ScaleSpace,
};
use elastic_unwrap::roundtrip::flat_image;
use elastic_unwrap::synth::{bend, make_template, BendProfile, CapStyle, Template};
use image::GrayImage;
use proptest::prelude::*;

fn contour_samples(mask: &BinaryMask) -> (Vec<Point<f64>>, Vec<f64>) {
    let c = extract_contour::<f64>(mask).unwrap();
    let mut ring = c.points().to_vec();
    ring.push(ring[0]);
    let mut pts = resample_polyline(&ring, 0.5);
    pts.pop();
    let arc = cumulative_chord(&pts);
    (pts, arc)
}

fn disk(radius: f64, size: usize) -> BinaryMask {
    let c = (size / 2) as f64;
    BinaryMask::from_fn(size, size, |x, y| (x as f64 - c).hypot(y as f64 - c) <= radius)
}

/// Rectangle of body pixels `x0..x1`, `y0..y1` on a 0-margin canvas.
fn rect(w: usize, h: usize, x0: usize, x1: usize, y0: usize, y1: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
}

/// Nearest sample, its distance, and the margin to the nearest sample on a
/// different stretch of the curve (more than `apart` away along a closed arc).
fn brute_nearest(samples: &[Point<f64>], arc: &[f64], q: Point<f64>, apart: f64) -> (usize, f64, f64) {
    let total = arc.last().unwrap() + (samples[0] - *samples.last().unwrap()).norm();
    let mut d: Vec<(f64, usize)> = samples.iter().enumerate().map(|(k, p)| ((*p - q).norm(), k)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let best = d[0];
    let along = |k: usize| {
        let u = (arc[k] - arc[best.1]).abs();
        u.min(total - u)
    };
    let other = d.iter().find(|e| along(e.1) > apart).map_or(f64::INFINITY, |e| e.0);
    (best.1, best.0, other - best.0)
}

fn in_disk(dx: i64, dy: i64, r: i64) -> bool {
    dx * dx + dy * dy <= r * r
}

/// Sup of `f` over `offsets` around each body pixel, restricted to the body.
fn sup_over(f: &ScalarField<f64>, offsets: &[(i64, i64)]) -> ScalarField<f64> {
    ScalarField::from_fn(f.mask(), f.units(), |x, y| {
        offsets
            .iter()
            .filter_map(|&(dx, dy)| f.get(x as i64 + dx, y as i64 + dy))
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

fn disk_offsets(r: i64) -> Vec<(i64, i64)> {
    (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).filter(|&(dx, dy)| in_disk(dx, dy, r)).collect()
}

fn body_pairs<'a>(a: &'a ScalarField<f64>, b: &'a ScalarField<f64>) -> impl Iterator<Item = (usize, usize, f64, f64)> + 'a {
    a.iter().map(move |(x, y, v)| (x, y, v, b.get(x as i64, y as i64).unwrap()))
}

#[test]
fn disk_centre_distance_is_radius() {
    let r = 20.0;
    let m = disk(r, 61);
    let n = (2.0 * std::f64::consts::PI * r / 0.5).ceil() as usize;
    let s: Vec<Point<f64>> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point::new(30.0 + r * t.cos(), 30.0 + r * t.sin())
        })
        .collect();
    let a = cumulative_chord(&s);
    let (d, _) = distance_and_footpoint(&s, &a, &m);
    let centre = d.get(30, 30).unwrap();
    assert!((centre - r).abs() <= 0.5, "centre {centre}");
}

#[test]
fn contour_pixels_have_near_zero_distance() {
    let m = disk(15.0, 41);
    let c = extract_contour::<f64>(&m).unwrap();
    let (s, a) = contour_samples(&m);
    let (d, _) = distance_and_footpoint(&s, &a, &m);
    for p in c.points() {
        let (x, y) = p.round_pixel();
        if (p.x - x as f64).abs() < 1e-9 && (p.y - y as f64).abs() < 1e-9 {
            assert!(d.get(x, y).unwrap() <= 0.5);
        }
    }
}

#[test]
fn distance_and_footpoint_match_brute_force() {
    let t = Template::linear(120.0, 17.0, 11.0, CapStyle::Round).unwrap();
    let body = bend(&t, &BendProfile::parse("0:0.015;60:-0.012").unwrap(), 6).unwrap();
    let (s, a) = contour_samples(&body.mask);
    let (d, foot) = distance_and_footpoint(&s, &a, &body.mask);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (x, y, v) in d.iter() {
        let q = Point::from_pixel(x as i64, y as i64);
        let (k, dist, gap) = brute_nearest(&s, &a, q, 3.0);
        worst = worst.max((v - dist).abs());
        if gap >= 0.25 {
            assert_eq!(foot.get(x as i64, y as i64).unwrap(), a[k], "footpoint at ({x}, {y})");
            checked += 1;
        }
    }
    assert!(worst <= 0.5, "max distance error {worst}");
    assert!(checked > body.mask.area() / 2);
}

#[test]
fn footpoint_ties_take_smaller_arc_length() {
    let m = rect(11, 11, 0, 11, 0, 11);
    let samples = vec![Point::new(5.0, 0.0), Point::new(5.0, 10.0)];
    let (_, foot) = distance_and_footpoint(&samples, &[0.0, 10.0], &m);
    assert_eq!(foot.get(5, 5), Some(0.0));
    assert_eq!(foot.get(5, 4), Some(0.0));
    assert_eq!(foot.get(5, 6), Some(10.0));
}

#[test]
fn axis_footpoint_is_column_offset() {
    let m = rect(80, 21, 5, 75, 5, 16);
    let axis: Vec<Point<f64>> = (0..=140).map(|i| Point::new(5.0 + i as f64 * 0.5, 10.0)).collect();
    let arc = cumulative_chord(&axis);
    let (_, s0) = distance_and_footpoint(&axis, &arc, &m);
    for (x, _, v) in s0.iter() {
        assert!((v - (x as f64 - 5.0)).abs() <= 1.0);
    }
}

#[test]
fn distance_offsets_under_dilation_on_straight_band() {
    // Band rows 10..=30, body half width 10; distances to the long edges.
    let m = rect(200, 41, 10, 190, 10, 31);
    let d = ScalarField::from_fn(&m, FieldUnits::Pixels, |_, y| (y as f64 - 9.5).min(30.5 - y as f64));
    let axis: Vec<Point<f64>> = (0..=360).map(|i| Point::new(10.0 + i as f64 * 0.5, 20.0)).collect();
    let arc = cumulative_chord(&axis);
    let (_, s0) = distance_and_footpoint(&axis, &arc, &m);
    for delta in 1..=4usize {
        let dd = dilate(&d, delta);
        let ds = dilate(&s0, delta);
        let r = delta as f64;
        for (x, y, v) in d.iter() {
            let from_ridge = (y as f64 - 20.0).abs();
            let from_end = (x as f64 - 10.0).min(189.0 - x as f64);
            if v >= r && from_ridge >= r {
                assert_eq!(dd.get(x as i64, y as i64).unwrap(), v + r, "distance at ({x}, {y}) scale {delta}");
            }
            if from_end >= r {
                let s = s0.get(x as i64, y as i64).unwrap();
                assert_eq!(ds.get(x as i64, y as i64).unwrap(), s + r, "length at ({x}, {y}) scale {delta}");
            }
        }
    }
}

#[test]
fn constant_field_and_zero_radius_are_fixed_points() {
    let m = disk(12.0, 31);
    let c = ScalarField::constant(&m, FieldUnits::Pixels, 3.25);
    for r in 0..6 {
        assert_eq!(dilate(&c, r), c);
        assert_eq!(erode(&c, r), c);
    }
    let f = ScalarField::from_fn(&m, FieldUnits::Pixels, |x, y| ((x * 7 + y * 13) % 11) as f64);
    assert_eq!(dilate(&f, 0), f);
    assert_eq!(erode(&f, 0), f);
}

fn random_field() -> impl Strategy<Value = ScalarField<f64>> {
    (12usize..28, 12usize..28, any::<u64>()).prop_map(|(w, h, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = BinaryMask::from_fn(w, h, |x, y| {
            let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
            ((x as f64 - cx) / cx).powi(2) + ((y as f64 - cy) / cy).powi(2) <= 1.0
        });
        let vals: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-5.0..5.0)).collect();
        ScalarField::from_fn(&m, FieldUnits::Pixels, |x, y| vals[y * w + x])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dilation_matches_disk_oracle_and_composes(f in random_field(), a in 0i64..4, b in 0i64..4) {
        let once = dilate(&f, (a + b) as usize);
        prop_assert_eq!(&once, &sup_over(&f, &disk_offsets(a + b)));
        // Composition sweeps the Minkowski sum of the two disks.
        let twice = dilate(&dilate(&f, a as usize), b as usize);
        let mut sum: Vec<(i64, i64)> = disk_offsets(a)
            .iter()
            .flat_map(|&(x1, y1)| disk_offsets(b).into_iter().map(move |(x2, y2)| (x1 + x2, y1 + y2)))
            .collect();
        sum.sort();
        sum.dedup();
        let far = |x: usize, y: usize| {
            let r = a + b;
            disk_offsets(r).iter().all(|&(dx, dy)| f.mask().get(x as i64 + dx, y as i64 + dy))
                && sum.iter().all(|&(dx, dy)| f.mask().get(x as i64 + dx, y as i64 + dy))
        };
        let oracle = sup_over(&f, &sum);
        for (x, y, v, o) in body_pairs(&twice, &oracle) {
            if far(x, y) {
                prop_assert_eq!(v, o);
            }
        }
    }

    #[test]
    fn extensive_monotone_and_dual(f in random_field(), r1 in 0usize..4, extra in 0usize..3) {
        let r2 = r1 + extra;
        let (d1, d2) = (dilate(&f, r1), dilate(&f, r2));
        let (e1, e2) = (erode(&f, r1), erode(&f, r2));
        for (_, _, v, d) in body_pairs(&f, &d1) {
            prop_assert!(d >= v);
        }
        for (_, _, v, e) in body_pairs(&f, &e1) {
            prop_assert!(e <= v);
        }
        for (_, _, a, b) in body_pairs(&d1, &d2) {
            prop_assert!(a <= b);
        }
        for (_, _, a, b) in body_pairs(&e1, &e2) {
            prop_assert!(a >= b);
        }
        let neg = f.map(FieldUnits::Pixels, |v| -v);
        prop_assert_eq!(e1, dilate(&neg, r1).map(FieldUnits::Pixels, |v| -v));
    }

    #[test]
    fn alpha_is_sandwiched_and_branch_selected(f in random_field(), s in 0usize..5, split in 0.0f64..1.0) {
        let w = f.width() as f64;
        let kref = KappaReference::from_fn(f.mask(), |x, _| (x as f64) < split * w);
        let alpha = alpha_filter(&f, &kref, s);
        let (up, down) = (dilate(&f, s), erode(&f, s));
        for (x, y, v) in alpha.iter() {
            let (xi, yi) = (x as i64, y as i64);
            prop_assert!(down.get(xi, yi).unwrap() <= v && v <= up.get(xi, yi).unwrap());
            let branch = if kref.erodes(xi, yi).unwrap() { down.get(xi, yi) } else { up.get(xi, yi) };
            prop_assert_eq!(Some(v), branch);
        }
    }
}

#[test]
fn uniform_kref_gives_plain_dilation_or_erosion() {
    let m = disk(14.0, 31);
    let f = ScalarField::from_fn(&m, FieldUnits::Log, |x, y| ((x * 31 + y * 17) % 23) as f64 / 7.0 - 1.5);
    for s in 0..5 {
        assert_eq!(alpha_filter(&f, &KappaReference::uniform(&m, false), s), dilate(&f, s));
        assert_eq!(alpha_filter(&f, &KappaReference::uniform(&m, true), s), erode(&f, s));
    }
}

#[test]
fn branch_equivalence_on_s_bend() {
    let t = Template::constant(180.0, 19.0, CapStyle::Round).unwrap();
    let body = bend(&t, &BendProfile::parse("0:0.012;90:-0.012").unwrap(), 8).unwrap();
    let (s, a) = contour_samples(&body.mask);
    let (d, foot) = distance_and_footpoint(&s, &a, &body.mask);
    let half = a.last().unwrap() / 2.0;
    let kref = KappaReference::from_footpoints(&foot, |u| if u < half { 1.0 } else { -1.0 });
    assert!(!kref.sign_boundary().is_empty());
    let phi0 = phi0_field(&d);
    for sc in [1, 3, 6] {
        let alpha = alpha_filter(&phi0, &kref, sc);
        let (up, down) = (dilate(&phi0, sc), erode(&phi0, sc));
        for (x, y, v) in alpha.iter() {
            let (xi, yi) = (x as i64, y as i64);
            let want = if kref.erodes(xi, yi).unwrap() { down.get(xi, yi) } else { up.get(xi, yi) };
            assert_eq!(Some(v), want);
        }
    }
}

fn band_distance() -> (BinaryMask, ScalarField<f64>) {
    let body = make_template(&Template::constant(160.0, 21.0, CapStyle::Flat).unwrap(), 8);
    let (s, a) = contour_samples(&body.mask);
    let d = distance_and_footpoint(&s, &a, &body.mask).0;
    (body.mask, d)
}

/// Column distance to the nearer end of the body.
fn from_ends(m: &BinaryMask, x: usize) -> i64 {
    let xs: Vec<usize> = m.pixels().map(|p| p.0).collect();
    (x as i64 - *xs.iter().min().unwrap() as i64).min(*xs.iter().max().unwrap() as i64 - x as i64)
}

fn band_ridge_row(m: &BinaryMask) -> usize {
    let ys: Vec<usize> = m.pixels().map(|p| p.1).collect();
    (ys.iter().min().unwrap() + ys.iter().max().unwrap()) / 2
}

/// Body pixels whose row and column neighbourhoods are free of the caps.
fn band_interior(m: &BinaryMask, x: usize, y: usize, reach: i64) -> bool {
    (-reach..=reach).all(|k| m.get(x as i64 + k, y as i64) && m.get(x as i64, y as i64 + k))
}

#[test]
fn unit_gradient_gives_zero_log_and_ridge_is_negative() {
    let (m, d) = band_distance();
    let phi0 = phi0_field(&d);
    let ridge_row = band_ridge_row(&m);
    let mut checked = 0;
    for (x, y, v) in phi0.iter() {
        let off_ridge = (y as i64 - ridge_row as i64).abs() >= 2;
        if off_ridge && band_interior(&m, x, y, 2) && from_ends(&m, x) > 12 {
            assert!(v.abs() <= 0.05, "log gradient {v} at ({x}, {y})");
            checked += 1;
        }
        if y == ridge_row && from_ends(&m, x) > 12 {
            assert!(v < 0.0);
        }
    }
    assert!(checked > 1000);
}

#[test]
fn log_gradient_matches_both_stencils() {
    let (m, d) = band_distance();
    let phi0 = phi0_field(&d);
    let ridge_row = band_ridge_row(&m) as i64;
    for (x, y, v) in phi0.iter() {
        let (xi, yi) = (x as i64, y as i64);
        if !band_interior(&m, x, y, 2) {
            continue;
        }
        let g = |dx: i64, dy: i64, h: f64| (d.get(xi + dx, yi + dy).unwrap() - d.get(xi - dx, yi - dy).unwrap()) * (0.5 / h);
        let norm = |a: f64, b: f64| (a * a + b * b).sqrt().max(1e-6).ln();
        let one = norm(g(1, 0, 1.0), g(0, 1, 1.0));
        assert_eq!(v, one);
        if (yi - ridge_row).abs() >= 3 && from_ends(&m, x) > 12 {
            let two = norm(g(2, 0, 2.0), g(0, 2, 2.0));
            assert!((v - two).abs() <= 0.1, "stencils differ at ({x}, {y}): {v} vs {two}");
        }
    }
}

#[test]
fn zero_log_field_at_scale_zero_is_one() {
    let m = disk(10.0, 25);
    let phi0 = ScalarField::constant(&m, FieldUnits::Log, 0.0);
    for positive in [false, true] {
        let phi = curvature_deformation(&phi0, &KappaReference::uniform(&m, positive), 0);
        assert!(phi.iter().all(|(_, _, v)| v == 1.0));
    }
}

#[test]
fn erosion_branch_is_non_increasing_in_scale() {
    let (m, d) = band_distance();
    let phi0 = phi0_field(&d);
    let kref = KappaReference::from_fn(&m, |x, _| x < 90);
    let stack = ScaleSpace::build(&phi0, &kref, 8);
    for w in stack.levels.windows(2) {
        for (x, y, a, b) in body_pairs(&w[0], &w[1]) {
            if kref.erodes(x as i64, y as i64).unwrap() {
                assert!(b <= a);
            } else {
                assert!(b >= a);
            }
        }
    }
}

#[test]
fn straight_band_is_undeformed_away_from_caps_and_ridge() {
    let (m, d) = band_distance();
    let phi0 = phi0_field(&d);
    let kref = KappaReference::uniform(&m, false);
    let stack = ScaleSpace::build(&phi0, &kref, 10);
    let ridge_row = band_ridge_row(&m) as i64;
    for (s, level) in stack.levels.iter().enumerate() {
        for (x, y, v) in level.iter() {
            let away = from_ends(&m, x) > 12 + s as i64;
            let off_ridge = (y as i64 - ridge_row).abs() >= 2 || s >= 1;
            if away && off_ridge && band_interior(&m, x, y, 2) {
                assert!((v - 1.0).abs() <= 0.05, "phi {v} at ({x}, {y}) scale {s}");
            }
        }
    }
}

#[test]
fn minimizing_scale_tie_rules() {
    let m = disk(5.0, 13);
    let constant = ScaleSpace {
        levels: vec![ScalarField::constant(&m, FieldUnits::Ratio, 0.7); 5],
    };
    let (sigma, _) = minimizing_scale(&constant).unwrap();
    assert!(sigma.iter().all(|(_, _, v)| v == 0.0));
    let plateau = ScaleSpace {
        levels: [3.0, 2.0, 1.0, 1.0, 1.0]
            .iter()
            .map(|&v| ScalarField::constant(&m, FieldUnits::Ratio, v))
            .collect(),
    };
    let (sigma, best) = minimizing_scale(&plateau).unwrap();
    assert!(sigma.iter().all(|(_, _, v)| v == 2.0));
    assert!(best.iter().all(|(_, _, v)| v == 1.0));
    assert!(minimizing_scale::<f64>(&ScaleSpace { levels: vec![] }).is_err());
}

fn quarter_circle(radius: f64, width: f64) -> (elastic_unwrap::synth::SynthBody, f64) {
    let length = std::f64::consts::FRAC_PI_2 * radius;
    let t = Template::constant(length.round(), width, CapStyle::Flat).unwrap();
    (bend(&t, &BendProfile::constant(1.0 / radius), 8).unwrap(), length)
}

fn morph_of(mask: &BinaryMask) -> elastic_unwrap::morph::MorphResult<f64> {
    let c = extract_contour::<f64>(mask).unwrap();
    unwrap_morph(&flat_image(mask, 60), mask, &c, &MorphConfig::default()).unwrap()
}

#[test]
fn quarter_circle_outer_side_needs_larger_scale() {
    let (body, _) = quarter_circle(90.0, 21.0);
    let r = morph_of(&body.mask);
    let (mut outer, mut inner) = (Vec::new(), Vec::new());
    for (x, y, sig) in r.sigma.iter() {
        let Some((s, offset)) = body.truth.section_through(Point::from_pixel(x as i64, y as i64)) else {
            continue;
        };
        if s < 15.0 || s > body.truth.length - 15.0 || offset.abs() < 3.0 {
            continue;
        }
        // The bend turns towards +normal, so the outer side has negative offset.
        if offset < 0.0 {
            outer.push(sig);
        } else {
            inner.push(sig);
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (o, i) = (median(&mut outer), median(&mut inner));
    assert!(o > i, "outer median {o}, inner median {i}");
}

fn rms_to(points: &[Point<f64>], dist: impl Fn(Point<f64>) -> f64) -> f64 {
    (points.iter().map(|&p| dist(p).powi(2)).sum::<f64>() / points.len() as f64).sqrt()
}

#[test]
fn straight_band_reference_is_the_axis() {
    let body = make_template(&Template::constant(160.0, 21.0, CapStyle::Round).unwrap(), 8);
    let r = morph_of(&body.mask);
    let axis_y = body.truth.axis[0].y;
    let rms = rms_to(&r.ridge.points, |p| p.y - axis_y);
    assert!(rms <= 1.5, "rms {rms}");
}

#[test]
fn quarter_circle_reference_is_the_mid_arc() {
    let (body, _) = quarter_circle(90.0, 21.0);
    let r = morph_of(&body.mask);
    let (p0, n0) = body.truth.frame(0.0);
    let centre = p0 + n0 * 90.0;
    let rms = rms_to(&r.ridge.points, |p| (p - centre).norm() - 90.0);
    assert!(rms <= 2.0, "rms {rms}");
}

#[test]
fn unreachable_threshold_gives_empty_reference() {
    let m = disk(10.0, 25);
    let phi = ScalarField::constant(&m, FieldUnits::Ratio, 1.0);
    assert!(reference_curve(&phi, 0.5).is_err());
    assert!(reference_curve(&phi, f64::INFINITY).is_err());
}

#[test]
fn straight_band_unwraps_to_itself() {
    let body = make_template(&Template::constant(160.0, 21.0, CapStyle::Round).unwrap(), 8);
    let r = morph_of(&body.mask);
    let iou = aligned_iou(&r.unwrapped.mask, &body.mask, 200);
    assert!(iou >= 0.95, "iou {iou}");
}

#[test]
fn bent_band_width_profile_matches_template() {
    let t = Template::constant(201.0, 21.0, CapStyle::Round).unwrap();
    let body = bend(&t, &BendProfile::constant(0.01), 8).unwrap();
    let r = morph_of(&body.mask);
    let recovered: Vec<f64> = r.shape.unit_profile().iter().map(|h| 2.0 * h).collect();
    let truth = t.width_profile();
    let err = profile_error(&recovered, &truth);
    assert!(err <= 0.03, "width error {err}");
}

#[test]
fn unwrapping_conserves_mean_intensity() {
    let t = Template::constant(181.0, 19.0, CapStyle::Round).unwrap();
    let body = bend(&t, &BendProfile::constant(0.012), 8).unwrap();
    let m = &body.mask;
    let img = GrayImage::from_fn(m.width() as u32, m.height() as u32, |x, y| {
        image::Luma([(40 + (x * 3 + y * 5) % 150) as u8])
    });
    let c = extract_contour::<f64>(m).unwrap();
    let r = unwrap_morph(&img, m, &c, &MorphConfig::default()).unwrap();
    let mean_in = m.pixels().map(|(x, y)| img.get_pixel(x as u32, y as u32).0[0] as f64).sum::<f64>() / m.area() as f64;
    let out = &r.unwrapped;
    let mean_out = out.mask.pixels().map(|(x, y)| out.image.get_pixel(x as u32, y as u32).0[0] as f64).sum::<f64>()
        / out.mask.area() as f64;
    assert!((mean_out - mean_in).abs() / mean_in <= 0.02, "{mean_in} vs {mean_out}");
}

#[test]
fn identity_coordinates_scatter_in_place() {
    let m = rect(30, 12, 2, 28, 2, 10);
    let img = flat_image(&m, 90);
    let s0 = ScalarField::from_fn(&m, FieldUnits::Pixels, |x, _| x as f64);
    let delta0 = ScalarField::from_fn(&m, FieldUnits::Pixels, |_, y| y as f64 - 6.0);
    let sigma = ScalarField::constant(&m, FieldUnits::Scale, 0.0);
    let pts: Vec<Point<f64>> = (0..30).map(|x| Point::new(x as f64, 6.0)).collect();
    let reference = ReferenceCurve {
        arc: cumulative_chord(&pts),
        points: pts,
        discarded_components: 0,
    };
    let out = unwrap_image(&img, &s0, &delta0, &sigma, &reference, 1);
    assert_eq!(out.mask.area(), m.area());
    assert!(out.mask.pixels().all(|(x, y)| out.image.get_pixel(x as u32, y as u32).0[0] == 90));
}

/// Pixels next to the reference should be the least deformed in the body.
#[test]
#[ignore = "does not hold for the scale-0 ridge reference; see the decisions ledger"]
fn reference_neighbourhood_is_least_deformed() {
    let t = Template::constant(201.0, 21.0, CapStyle::Round).unwrap();
    let body = bend(&t, &BendProfile::constant(0.01), 8).unwrap();
    let r = morph_of(&body.mask);
    let mut dev: Vec<f64> = r.phi_min.iter().map(|(_, _, v)| (v - 1.0).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let p5 = dev[dev.len() / 20];
    for p in &r.ridge.points {
        let (x, y) = p.round_pixel();
        for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
            if let Some(v) = r.phi_min.get(x + dx, y + dy) {
                assert!((v - 1.0).abs() < p5, "|phi_min - 1| = {} at ({}, {})", (v - 1.0).abs(), x + dx, y + dy);
            }
        }
    }
}
