use std::path::PathBuf;

use elastic_unwrap::classify::ProfileCurve;
use elastic_unwrap::geometry::{BinaryMask, Point};
use elastic_unwrap::io::*;
use elastic_unwrap::morph::{FieldUnits, ScalarField};
use elastic_unwrap::segment::{histogram, lower_turning_point, segment_threshold};
use elastic_unwrap::IoError;
use image::{GrayImage, Luma};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn scratch() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().to_path_buf();
    (dir, p)
}

fn random_mask(seed: u64) -> BinaryMask {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let bits: Vec<bool> = (0..37 * 23).map(|_| rng.gen_bool(0.4)).collect();
    BinaryMask::from_fn(37, 23, |x, y| bits[y * 37 + x])
}

#[test]
fn masks_round_trip_through_pgm_and_png() {
    let (_d, dir) = scratch();
    for seed in 0..4 {
        let m = random_mask(seed);
        for name in ["m.pgm", "m.png"] {
            let p = dir.join(name);
            write_mask(&p, &m).unwrap();
            assert_eq!(read_mask(&p).unwrap(), m);
        }
    }
}

#[test]
fn gray_images_round_trip() {
    let (_d, dir) = scratch();
    let img = GrayImage::from_fn(31, 17, |x, y| Luma([((x * 7 + y * 13) % 256) as u8]));
    for name in ["g.pgm", "g.png"] {
        let p = dir.join(name);
        write_gray(&p, &img).unwrap();
        assert_eq!(read_gray(&p).unwrap(), img);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn profiles_round_trip_exactly(v in prop::collection::vec(-1e6f64..1e6, 11..60)) {
        let (_d, dir) = scratch();
        let p = dir.join("p.csv");
        let c = ProfileCurve::new(v).unwrap();
        write_profile_csv(&p, &c).unwrap();
        prop_assert_eq!(read_profile_csv(&p).unwrap(), c);
    }

    #[test]
    fn contours_round_trip_exactly(v in prop::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 1..50)) {
        let (_d, dir) = scratch();
        let p = dir.join("c.csv");
        let pts: Vec<Point<f64>> = v.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        write_contour_csv(&p, &pts).unwrap();
        prop_assert_eq!(read_contour_csv(&p).unwrap(), pts);
    }

    #[test]
    fn json_round_trips(v in prop::collection::vec(-1e9f64..1e9, 0..40), label in "[a-z]{1,8}") {
        let (_d, dir) = scratch();
        let p = dir.join("r.json");
        let value = (label, v);
        write_json(&p, &value).unwrap();
        let back: (String, Vec<f64>) = read_json(&p).unwrap();
        prop_assert_eq!(back, value);
    }

    #[test]
    fn field_dump_is_within_quantization(seed in any::<u64>(), scale in 0.1f64..1e3) {
        let (_d, dir) = scratch();
        let m = random_mask(seed);
        let f = ScalarField::from_fn(&m, FieldUnits::Pixels, |x, y| scale * ((x * 31 + y * 17) as f64).sin());
        let p = dir.join("f.pgm");
        let range = write_field_pgm16(&p, &f).unwrap();
        let (w, h, values) = read_field_pgm16(&p).unwrap();
        prop_assert_eq!((w, h), (m.width(), m.height()));
        let step = (range.max - range.min) / 65534.0;
        for y in 0..h {
            for x in 0..w {
                match (f.get(x as i64, y as i64), values[y * w + x]) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 0.5 * step + 1e-9),
                    (None, None) => {}
                    other => prop_assert!(false, "support differs at ({x},{y}): {other:?}"),
                }
            }
        }
    }
}

#[test]
fn labels_round_trip() {
    let (_d, dir) = scratch();
    let p = dir.join("l.csv");
    let rows = vec![("a1".to_string(), "round".to_string()), ("b, c".to_string(), "x\"y".to_string())];
    write_labels_csv(&p, &rows).unwrap();
    assert_eq!(read_labels_csv(&p).unwrap(), rows);
}

#[test]
fn missing_file_names_the_path() {
    let p = PathBuf::from("/nonexistent/dir/mask.pgm");
    match read_mask(&p) {
        Err(IoError::Io { path, .. }) => assert_eq!(path, p),
        other => panic!("{other:?}"),
    }
}

#[test]
fn out_of_order_profile_is_rejected() {
    let (_d, dir) = scratch();
    let p = dir.join("bad.csv");
    std::fs::write(&p, "lambda_x,half_width\n0,1\n2,1\n").unwrap();
    assert!(matches!(read_profile_csv(&p), Err(IoError::Format { .. })));
}

/// Dark disk of level 40 on a background of level 200, with a little spread.
fn bimodal() -> GrayImage {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    GrayImage::from_fn(64, 64, |x, y| {
        let inside = (x as f64 - 32.0).hypot(y as f64 - 30.0) < 14.0;
        let base: i32 = if inside { 40 } else { 200 };
        Luma([(base + rng.gen_range(-6..=6)) as u8])
    })
}

#[test]
fn bimodal_threshold_sits_in_the_valley() {
    let img = bimodal();
    let h = histogram(&img);
    let seg = segment_threshold(&img);
    assert!(!seg.no_turning_point);
    assert!(seg.threshold > 40 && seg.threshold < 200, "threshold {}", seg.threshold);
    // Nothing in the raw histogram lies between the modes.
    assert!(h[47..194].iter().all(|&c| c == 0));
    // The foreground is the dark disk.
    let disk = BinaryMask::from_fn(64, 64, |x, y| (x as f64 - 32.0).hypot(y as f64 - 30.0) < 14.0);
    assert!(seg.mask.iou(&disk) > 0.97);
    assert!(seg.mask.get(32, 30) && !seg.mask.get(2, 2));
}

#[test]
fn constant_image_falls_back_to_median() {
    let img = GrayImage::from_pixel(20, 20, Luma([90]));
    assert_eq!(lower_turning_point(&histogram(&img)), None);
    let seg = segment_threshold(&img);
    assert!(seg.no_turning_point);
    assert_eq!(seg.threshold, 90);
    assert_eq!(seg.mask.area(), 0);
}
