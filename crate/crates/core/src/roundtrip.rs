//! Round-trip evaluation: bend known templates, add boundary noise, unwrap
//! with both methods and score the results against the template.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classify::{consistency_metrics, ConsistencyReport};
use crate::evaluate::{aligned_iou, profile_error};
use crate::geometry::{extract_contour, BinaryMask, Contour};
use crate::morph::{unwrap_morph, MorphConfig};
use crate::neutral::{unwrap_neutral, NeutralConfig, StraightenedShape};
use crate::synth::{add_boundary_noise, bend, make_template, BendProfile, CapStyle, Template};
use crate::{Error, Result};

/// Background around every synthetic body.
pub const MARGIN: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripCase {
    pub template_name: String,
    pub template: Template,
    /// Curvature specification in the [`BendProfile::parse`] format.
    pub bend: String,
    pub noise_amplitude: f64,
    pub seed: u64,
}

/// Four templates with odd base widths, so straight references have no
/// pixel-centre ties at the edges. All have a pointed or round tail: on a
/// square end the tail lands on a corner and the first sections run
/// diagonally across the end face.
pub fn standard_templates() -> Vec<(String, Template)> {
    use std::f64::consts::PI;
    let spindle = |s: f64| 15.0 + 10.0 * (PI * s / 241.0).sin();
    let beaded = |s: f64| 19.0 + 3.0 * (4.0 * PI * s / 221.0).sin();
    vec![
        ("band".into(), Template::constant(201.0, 21.0, CapStyle::Round).unwrap()),
        ("taper".into(), Template::linear(261.0, 25.0, 15.0, CapStyle::Taper).unwrap()),
        ("beaded".into(), Template::new(221.0, beaded, CapStyle::Round).unwrap()),
        ("spindle".into(), Template::new(241.0, spindle, CapStyle::Round).unwrap()),
    ]
}

/// Six curvature profiles for a body of `length`: three arcs, two S-bends
/// with linearly varying curvature and a ramp.
pub fn standard_bends(length: f64) -> Vec<String> {
    let s_bend = |k: f64| format!("0:{k},{}", -2.0 * k / length);
    vec![
        "0.006".into(),
        "-0.01".into(),
        "0.014".into(),
        s_bend(0.012),
        s_bend(-0.01),
        format!("0:0.002,{}", 0.014 / length),
    ]
}

/// Every template under every standard bend with 1 px boundary noise.
pub fn standard_suite(seed: u64) -> Vec<RoundtripCase> {
    let mut out = Vec::new();
    for (name, t) in standard_templates() {
        for b in standard_bends(t.length) {
            out.push(RoundtripCase {
                template_name: name.clone(),
                template: t.clone(),
                bend: b,
                noise_amplitude: 1.0,
                seed: seed + out.len() as u64,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub shape: StraightenedShape<f64>,
    /// Intersection over union with the straight template raster.
    pub iou: f64,
    /// Width-profile error relative to the mean template width.
    pub width_error: f64,
    pub seconds: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripResult {
    pub case: RoundtripCase,
    pub neutral: std::result::Result<MethodScore, String>,
    pub morph: std::result::Result<MethodScore, String>,
    /// Width-profile difference between the two methods, relative to the morphological mean width.
    pub agreement: Option<f64>,
}

/// The noisy bent mask of a case.
pub fn case_mask(case: &RoundtripCase) -> Result<BinaryMask> {
    let body = bend(&case.template, &BendProfile::parse(&case.bend)?, MARGIN)?;
    add_boundary_noise(&body.mask, case.noise_amplitude, case.seed)
}

/// Uniform gray body on a black background.
pub fn flat_image(mask: &BinaryMask, level: u8) -> image::GrayImage {
    image::GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        image::Luma([if mask.get(x as i64, y as i64) { level } else { 0 }])
    })
}

fn widths(shape: &StraightenedShape<f64>) -> Vec<f64> {
    shape.unit_profile().iter().map(|h| 2.0 * h).collect()
}

fn score(shape: StraightenedShape<f64>, template: &Template, seconds: f64, flags: Vec<String>) -> MethodScore {
    let truth = make_template(template, 4).mask;
    MethodScore {
        iou: aligned_iou(&shape.to_mask(2), &truth, 3),
        width_error: profile_error(&widths(&shape), &template.width_profile()),
        shape,
        seconds,
        flags,
    }
}

/// Neutral-line unwrapping of a mask, contour extraction included.
pub fn run_neutral(mask: &BinaryMask, cfg: &NeutralConfig) -> Result<(StraightenedShape<f64>, Vec<String>)> {
    let contour: Contour<f64> = extract_contour(mask)?;
    let r = unwrap_neutral(mask, &contour, cfg)?;
    Ok((r.shape, r.flags))
}

/// Morphological unwrapping of a mask with a flat image.
pub fn run_morph(mask: &BinaryMask, cfg: &MorphConfig) -> Result<(StraightenedShape<f64>, Vec<String>)> {
    let contour: Contour<f64> = extract_contour(mask)?;
    let r = unwrap_morph(&flat_image(mask, 200), mask, &contour, cfg)?;
    Ok((r.shape, r.flags))
}

pub fn run_case(case: &RoundtripCase, neutral: &NeutralConfig, morph: &MorphConfig) -> Result<RoundtripResult> {
    let mask = case_mask(case)?;
    let timed = |f: &dyn Fn() -> Result<(StraightenedShape<f64>, Vec<String>)>| {
        let t0 = Instant::now();
        f().map(|(shape, flags)| score(shape, &case.template, t0.elapsed().as_secs_f64(), flags))
            .map_err(|e| e.to_string())
    };
    let n = timed(&|| run_neutral(&mask, neutral));
    let m = timed(&|| run_morph(&mask, morph));
    let agreement = match (&n, &m) {
        (Ok(a), Ok(b)) => Some(profile_error(&widths(&a.shape), &widths(&b.shape))),
        _ => None,
    };
    Ok(RoundtripResult {
        case: case.clone(),
        neutral: n,
        morph: m,
        agreement,
    })
}

/// Consistency of the neutral-line results, per template.
pub fn consistency_by_template(results: &[RoundtripResult]) -> Result<Vec<(String, ConsistencyReport)>> {
    let mut names: Vec<&String> = results.iter().map(|r| &r.case.template_name).collect();
    names.dedup();
    names
        .into_iter()
        .map(|name| {
            let shapes: Vec<StraightenedShape<f64>> = results
                .iter()
                .filter(|r| &r.case.template_name == name)
                .filter_map(|r| r.neutral.as_ref().ok().map(|s| s.shape.clone()))
                .collect();
            if shapes.len() < 2 {
                return Err(Error::TooFewInstances(shapes.len()));
            }
            Ok((name.clone(), consistency_metrics(&shapes)?))
        })
        .collect()
}
