//! File formats: masks and images (PGM, PNG), profiles and labels (CSV),
//! reports (JSON), field dumps (16-bit PGM with a range sidecar) and SVG
//! contour overlays.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::classify::ProfileCurve;
use crate::error::IoError;
use crate::geometry::{cumulative_chord, BinaryMask, Point};
use crate::morph::ScalarField;
use crate::Real;

type IoResult<T> = std::result::Result<T, IoError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> IoError {
    IoError::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> IoResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn ensure_exists(path: &Path) -> IoResult<()> {
    fs::metadata(path).map(|_| ()).map_err(io_err(path))
}

/// 8-bit grayscale image from any format the `image` crate reads (PGM and PNG here).
pub fn read_gray(path: &Path) -> IoResult<GrayImage> {
    ensure_exists(path)?;
    let img = image::open(path).map_err(|e| format_err(path, e))?;
    Ok(img.to_luma8())
}

/// Format chosen by extension: `.png`, otherwise binary PGM.
pub fn write_gray(path: &Path, img: &GrayImage) -> IoResult<()> {
    let format = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        image::ImageFormat::Png
    } else {
        image::ImageFormat::Pnm
    };
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, format).map_err(|e| format_err(path, e))?;
    write_atomic(path, &buf.into_inner())
}

/// Pixels at 128 or above are foreground.
pub fn read_mask(path: &Path) -> IoResult<BinaryMask> {
    Ok(mask_from_gray(&read_gray(path)?))
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> IoResult<()> {
    write_gray(path, &mask_to_gray(mask))
}

pub fn mask_from_gray(img: &GrayImage) -> BinaryMask {
    BinaryMask::from_fn(img.width() as usize, img.height() as usize, |x, y| {
        img.get_pixel(x as u32, y as u32).0[0] >= 128
    })
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as i64, y as i64) { 255 } else { 0 }])
    })
}

/// Value range recorded next to a 16-bit field dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRange {
    pub min: f64,
    pub max: f64,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".range");
    PathBuf::from(s)
}

/// Body values scaled linearly to `1..=65535`; background is 0. The range
/// goes to `<path>.range` as `min max`.
pub fn write_field_pgm16<T: Real>(path: &Path, field: &ScalarField<T>) -> IoResult<FieldRange> {
    let (lo, hi) = field.range();
    let range = FieldRange {
        min: lo.f64(),
        max: hi.f64(),
    };
    let span = if range.max > range.min { range.max - range.min } else { 1.0 };
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(field.width() as u32, field.height() as u32, |x, y| {
            Luma([match field.get(x as i64, y as i64) {
                Some(v) => 1 + ((v.f64() - range.min) / span * 65534.0).round().clamp(0.0, 65534.0) as u16,
                None => 0,
            }])
        });
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Pnm).map_err(|e| format_err(path, e))?;
    write_atomic(path, &buf.into_inner())?;
    write_atomic(&sidecar(path), format!("{} {}\n", range.min, range.max).as_bytes())?;
    Ok(range)
}

/// Decoded values of a dump written by [`write_field_pgm16`]; `None` on background.
pub fn read_field_pgm16(path: &Path) -> IoResult<(usize, usize, Vec<Option<f64>>)> {
    ensure_exists(path)?;
    let img = image::open(path).map_err(|e| format_err(path, e))?.to_luma16();
    let side = sidecar(path);
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    let nums: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| format_err(&side, e)))
        .collect::<IoResult<_>>()?;
    let [min, max] = nums[..] else {
        return Err(format_err(&side, "expected `min max`"));
    };
    let span = if max > min { max - min } else { 1.0 };
    let values = img
        .pixels()
        .map(|p| (p.0[0] > 0).then(|| min + (p.0[0] - 1) as f64 / 65534.0 * span))
        .collect();
    Ok((img.width() as usize, img.height() as usize, values))
}

/// `lambda_x,half_width` rows at unit stations.
pub fn write_profile_csv<T: Real>(path: &Path, curve: &ProfileCurve<T>) -> IoResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda_x", "half_width"]).map_err(|e| format_err(path, e))?;
    for (i, v) in curve.samples().iter().enumerate() {
        w.write_record([i.to_string(), v.f64().to_string()]).map_err(|e| format_err(path, e))?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| format_err(path, e))?)
}

pub fn read_profile_csv(path: &Path) -> IoResult<ProfileCurve<f64>> {
    ensure_exists(path)?;
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    let mut samples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let station: f64 = rec.get(0).unwrap_or("").parse().map_err(|e| format_err(path, format!("row {}: {e}", i + 1)))?;
        if station != i as f64 {
            return Err(format_err(path, format!("row {}: station {station} out of order", i + 1)));
        }
        let v: f64 = rec.get(1).unwrap_or("").parse().map_err(|e| format_err(path, format!("row {}: {e}", i + 1)))?;
        samples.push(v);
    }
    ProfileCurve::new(samples).map_err(|e| format_err(path, e))
}

/// `name,label` rows.
pub fn read_labels_csv(path: &Path) -> IoResult<Vec<(String, String)>> {
    ensure_exists(path)?;
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| format_err(path, e))?;
            match (rec.get(0), rec.get(1)) {
                (Some(n), Some(l)) => Ok((n.to_string(), l.to_string())),
                _ => Err(format_err(path, "expected name,label")),
            }
        })
        .collect()
}

pub fn write_labels_csv(path: &Path, rows: &[(String, String)]) -> IoResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "label"]).map_err(|e| format_err(path, e))?;
    for (n, l) in rows {
        w.write_record([n, l]).map_err(|e| format_err(path, e))?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| format_err(path, e))?)
}

/// `x,y,s` rows in traversal order, `s` the cumulative arc length.
pub fn write_contour_csv<T: Real>(path: &Path, points: &[Point<T>]) -> IoResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "s"]).map_err(|e| format_err(path, e))?;
    for (p, s) in points.iter().zip(cumulative_chord(points)) {
        w.write_record([p.x.f64().to_string(), p.y.f64().to_string(), s.f64().to_string()])
            .map_err(|e| format_err(path, e))?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| format_err(path, e))?)
}

/// Points of a contour CSV; the arc-length column is ignored.
pub fn read_contour_csv(path: &Path) -> IoResult<Vec<Point<f64>>> {
    ensure_exists(path)?;
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| format_err(path, e))?;
            let num = |k: usize| rec.get(k).unwrap_or("").parse::<f64>().map_err(|e| format_err(path, e));
            Ok(Point::new(num(0)?, num(1)?))
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> IoResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| format_err(path, e))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> IoResult<D> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

/// Mask as gray pixels with coloured polylines on top.
pub fn write_svg<T: Real>(path: &Path, mask: &BinaryMask, lines: &[(&str, &[Point<T>], bool)]) -> IoResult<()> {
    let (w, h) = (mask.width(), mask.height());
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="-0.5 -0.5 {w} {h}">"#,
        4 * w,
        4 * h
    );
    let _ = writeln!(s, r##"<rect x="-0.5" y="-0.5" width="{w}" height="{h}" fill="#000"/>"##);
    let _ = write!(s, r##"<path fill="#666" d=""##);
    for (x, y) in mask.pixels() {
        let _ = write!(s, "M{} {}h1v1h-1z", x as f64 - 0.5, y as f64 - 0.5);
    }
    let _ = writeln!(s, r#""/>"#);
    for (colour, pts, closed) in lines {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, p.x.f64(), p.y.f64());
        }
        if *closed {
            d.push('Z');
        }
        let _ = writeln!(s, r#"<path fill="none" stroke="{colour}" stroke-width="0.4" d="{d}"/>"#);
    }
    s.push_str("</svg>\n");
    write_atomic(path, s.as_bytes())
}
