use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use elastic_unwrap::classify::{
    assign, consistency_metrics, family_error_table, tune, Ensemble, ProfileCurve, ShapeMeasures, TuneConfig,
};
use elastic_unwrap::geometry::{choose_degree, extract_contour, BinaryMask, Contour, Point};
use elastic_unwrap::morph::{self as morph_mod, MorphConfig};
use elastic_unwrap::neutral::{self, NeutralConfig, StraightenedShape};
use elastic_unwrap::roundtrip::{consistency_by_template, run_case, standard_suite};
use elastic_unwrap::segment::segment_threshold;
use elastic_unwrap::synth::{add_boundary_noise, bend, BendProfile, CapStyle, Template};
use elastic_unwrap::{io, IoError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::Failure;

type CmdResult = Result<(), Failure>;

/// Output path, placed under UNWRAP_OUT_DIR when relative.
fn out_path(p: &Path) -> PathBuf {
    match std::env::var_os("UNWRAP_OUT_DIR") {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn io_failure(module: &'static str) -> impl Fn(IoError) -> Failure {
    move |e| {
        let path = match &e {
            IoError::Io { path, .. } | IoError::Format { path, .. } => path.clone(),
        };
        Failure::new(module, Some(path), e)
    }
}

fn fail<'a>(module: &'static str, path: &'a Path) -> impl Fn(elastic_unwrap::Error) -> Failure + 'a {
    move |e| Failure::new(module, Some(path.to_path_buf()), e)
}

/// Flat TOML document deserialised into a config with unknown keys rejected.
fn load_config<C: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<C, Failure> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::new("config", Some(path.clone()), e))?;
    toml::from_str(&text).map_err(|e| Failure::new("config", Some(path.clone()), e))
}

fn write_report<S: Serialize>(path: Option<&PathBuf>, value: &S) -> CmdResult {
    match path {
        Some(p) => io::write_json(&out_path(p), value).map_err(io_failure("report")),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("serialisable"));
            Ok(())
        }
    }
}

fn read_mask(path: &Path, module: &'static str) -> Result<BinaryMask, Failure> {
    io::read_mask(path).map_err(io_failure(module))
}

fn contour_of(mask: &BinaryMask, path: &Path, module: &'static str) -> Result<Contour<f64>, Failure> {
    extract_contour(mask).map_err(fail(module, path))
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    /// Input mask (PGM or PNG, body >= 128).
    #[arg(long)]
    mask: PathBuf,
    /// Contour CSV with columns x,y,s.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// JSON summary; printed to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn contour(a: &ContourArgs) -> CmdResult {
    let mask = read_mask(&a.mask, "contour")?;
    let c = contour_of(&mask, &a.mask, "contour")?;
    let choice = choose_degree(&c).map_err(fail("contour", &a.mask))?;
    io::write_contour_csv(&out_path(&a.out), c.points()).map_err(io_failure("contour"))?;
    if let Some(svg) = &a.svg {
        io::write_svg(&out_path(svg), &mask, &[("#fc0", c.points(), true)]).map_err(io_failure("contour"))?;
    }
    write_report(
        a.report.as_ref(),
        &json!({
            "input": a.mask.display().to_string(),
            "points": c.len(),
            "perimeter": c.perimeter(),
            "area": c.signed_area(),
            "degree": choice.degree,
            "fit_rms": choice.fit.rms,
            "degree_capped": choice.capped,
        }),
    )
}

#[derive(Debug, Args)]
pub struct NeutralArgs {
    #[arg(long)]
    mask: PathBuf,
    /// Width profile CSV with columns lambda_x,half_width.
    #[arg(long)]
    out_profile: PathBuf,
    #[arg(long)]
    out_contour: Option<PathBuf>,
    /// Overlay of the contour, sections and neutral line.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// TOML keys and defaults: tail_window = 0.05, k_window = 0.05,
    /// sparse_step = 3.0, dense_step = 1.0, width_correction = 1.0,
    /// head_range = [0.4, 0.6], head_fit_window = 0.05, max_delta_phi = 0.3,
    /// prolong_ends = true.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn unwrap_neutral(a: &NeutralArgs) -> CmdResult {
    let cfg: NeutralConfig = load_config(a.config.as_ref())?;
    let mask = read_mask(&a.mask, "neutral-line")?;
    let c = contour_of(&mask, &a.mask, "neutral-line")?;
    let r = neutral::unwrap_neutral(&mask, &c, &cfg).map_err(fail("neutral-line", &a.mask))?;
    let profile = ProfileCurve::from_shape(&r.shape).map_err(fail("neutral-line", &a.mask))?;
    io::write_profile_csv(&out_path(&a.out_profile), &profile).map_err(io_failure("neutral-line"))?;
    if let Some(p) = &a.out_contour {
        io::write_contour_csv(&out_path(p), c.points()).map_err(io_failure("neutral-line"))?;
    }
    if let Some(svg) = &a.svg {
        let sections: Vec<[Point<f64>; 2]> = r.search.sections.iter().map(|s| [s.p_i, s.p_ii]).collect();
        let mut lines: Vec<(&str, &[Point<f64>], bool)> = vec![("#fc0", c.points(), true)];
        lines.extend(sections.iter().map(|s| ("#39f", &s[..], false)));
        lines.push(("#f33", &r.neutral.midpoints, false));
        io::write_svg(&out_path(svg), &mask, &lines).map_err(io_failure("neutral-line"))?;
    }
    let pts = c.points();
    write_report(
        a.report.as_ref(),
        &json!({
            "input": a.mask.display().to_string(),
            "tail": pts[r.landmarks.tail_index],
            "head": pts[r.landmarks.head_index],
            "degrees": r.degrees,
            "sections": r.search.sections.len(),
            "gaps": r.search.gaps.len(),
            "rejected": r.search.rejected.len(),
            "displaced": r.search.displaced.len(),
            "measures": ShapeMeasures::of(&r.shape),
            "flags": r.flags,
        }),
    )
}

#[derive(Debug, Args)]
pub struct MorphArgs {
    /// Grayscale image of the body.
    #[arg(long)]
    image: PathBuf,
    /// Body mask; segmented from the image histogram when omitted.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Straightened image.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    out_profile: Option<PathBuf>,
    /// Directory for 16-bit dumps of the fields, each with a `.range` sidecar.
    #[arg(long)]
    fields_dir: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// TOML keys and defaults: delta_scale = 2, max_scale (largest body
    /// depth), curvature_window = 0.05, reference_threshold = 0.5,
    /// sample_step = 0.5, s_dilation = false, margin = 2.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn unwrap_morph(a: &MorphArgs) -> CmdResult {
    let cfg: MorphConfig = load_config(a.config.as_ref())?;
    let image = io::read_gray(&a.image).map_err(io_failure("morph-solver"))?;
    let mut flags = Vec::new();
    let (mask, mask_path) = match &a.mask {
        Some(p) => (read_mask(p, "morph-solver")?, p.clone()),
        None => {
            let seg = segment_threshold(&image);
            if seg.no_turning_point {
                flags.push(format!("no histogram turning point; median threshold {}", seg.threshold));
            }
            (seg.mask, a.image.clone())
        }
    };
    if (mask.width(), mask.height()) != (image.width() as usize, image.height() as usize) {
        return Err(Failure::new("morph-solver", Some(mask_path), "mask and image sizes differ"));
    }
    let body = elastic_unwrap::geometry::single_body(&mask).map_err(fail("morph-solver", &mask_path))?;
    let c = contour_of(&body, &mask_path, "morph-solver")?;
    let r = morph_mod::unwrap_morph(&image, &body, &c, &cfg).map_err(fail("morph-solver", &mask_path))?;
    io::write_gray(&out_path(&a.out), &r.unwrapped.image).map_err(io_failure("morph-solver"))?;
    if let Some(p) = &a.out_profile {
        let profile = ProfileCurve::from_shape(&r.shape).map_err(fail("morph-solver", &mask_path))?;
        io::write_profile_csv(&out_path(p), &profile).map_err(io_failure("morph-solver"))?;
    }
    let mut ranges = BTreeMap::new();
    if let Some(dir) = &a.fields_dir {
        let dir = out_path(dir);
        for (name, f) in [
            ("delta_contour", &r.contour_distance),
            ("phi0", &r.phi0),
            ("phi_min", &r.phi_min),
            ("sigma", &r.sigma),
            ("s0", &r.s0),
            ("delta0", &r.delta0),
        ] {
            let range = io::write_field_pgm16(&dir.join(format!("{name}.pgm")), f).map_err(io_failure("morph-solver"))?;
            ranges.insert(name, [range.min, range.max]);
        }
    }
    flags.extend(r.flags.iter().cloned());
    write_report(
        a.report.as_ref(),
        &json!({
            "input": a.image.display().to_string(),
            "reference_length": r.reference.length(),
            "ridge_points": r.ridge.points.len(),
            "max_scale": r.sigma.range().1,
            "measures": ShapeMeasures::of(&r.shape),
            "field_ranges": ranges,
            "flags": flags,
        }),
    )
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Cap {
    Round,
    Flat,
    Taper,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Axis length (pixels).
    #[arg(long, default_value_t = 200.0)]
    length: f64,
    /// Width at the tail end (pixels).
    #[arg(long, default_value_t = 21.0)]
    width: f64,
    /// Width at the head end; equals --width when omitted.
    #[arg(long)]
    width_end: Option<f64>,
    #[arg(long, value_enum, default_value = "round")]
    cap: Cap,
    /// Curvature along the axis: a constant, or `start:c0,c1,..;start:..` polynomial pieces.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    kappa_spec: String,
    /// Peak boundary noise (pixels).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Background around the body (pixels).
    #[arg(long, default_value_t = 8)]
    margin: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

pub fn synth(a: &SynthArgs) -> CmdResult {
    let cap = match a.cap {
        Cap::Round => CapStyle::Round,
        Cap::Flat => CapStyle::Flat,
        Cap::Taper => CapStyle::Taper,
    };
    let err = |e: elastic_unwrap::Error| Failure::new("synth", None, e);
    let t = Template::linear(a.length, a.width, a.width_end.unwrap_or(a.width), cap).map_err(err)?;
    let profile = BendProfile::parse(&a.kappa_spec).map_err(err)?;
    let mut body = bend(&t, &profile, a.margin).map_err(err)?;
    let mask = add_boundary_noise(&body.mask, a.noise, a.seed).map_err(err)?;
    body.truth.seed = Some(a.seed);
    io::write_mask(&out_path(&a.out), &mask).map_err(io_failure("synth"))?;
    if let Some(p) = &a.truth {
        io::write_json(&out_path(p), &body.truth).map_err(io_failure("synth"))?;
    }
    Ok(())
}

/// Profiles `*.csv` in `dir`, sorted by file name, keyed by file stem.
fn read_profiles(dir: &Path, module: &'static str) -> Result<Vec<(String, ProfileCurve<f64>)>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::new(module, Some(dir.to_path_buf()), e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::new(module, Some(dir.to_path_buf()), "no .csv profiles"));
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            io::read_profile_csv(p).map(|c| (name, c)).map_err(io_failure(module))
        })
        .collect()
}

fn labelled(
    profiles: Vec<(String, ProfileCurve<f64>)>,
    labels_path: &Path,
    module: &'static str,
) -> Result<Vec<(String, ProfileCurve<f64>, String)>, Failure> {
    let labels: BTreeMap<String, String> = io::read_labels_csv(labels_path).map_err(io_failure(module))?.into_iter().collect();
    profiles
        .into_iter()
        .map(|(name, c)| match labels.get(&name) {
            Some(l) => Ok((name, c, l.clone())),
            None => Err(Failure::new(module, Some(labels_path.to_path_buf()), format!("no label for profile {name:?}"))),
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of profile CSVs.
    #[arg(long)]
    profiles: PathBuf,
    /// CSV with columns name,label; name is the profile file stem.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// TOML keys and defaults: target_rate = 0.98, max_epochs = 50,
    /// literal_reinforcement = false.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn train(a: &TrainArgs) -> CmdResult {
    let cfg: TuneConfig = load_config(a.config.as_ref())?;
    let data = labelled(read_profiles(&a.profiles, "classify")?, &a.labels, "classify")?;
    let samples: Vec<(ProfileCurve<f64>, String)> = data.into_iter().map(|(_, c, l)| (c, l)).collect();
    let initial = Ensemble::from_labeled(&samples).map_err(fail("classify", &a.profiles))?;
    let out = tune(&initial, &samples, &cfg).map_err(fail("classify", &a.labels))?;
    io::write_json(&out_path(&a.out), &out.ensemble).map_err(io_failure("classify"))?;
    let mut flags = Vec::new();
    if !out.reached_target {
        flags.push(format!("training rate {:.4} below target after {} epochs", out.rates.last().unwrap_or(&0.0), cfg.max_epochs));
    }
    if out.degenerate_updates > 0 {
        flags.push(format!("{} updates skipped for degenerate counts", out.degenerate_updates));
    }
    write_report(
        a.report.as_ref(),
        &json!({
            "samples": samples.len(),
            "generation": out.ensemble.generation,
            "training_rates": out.rates,
            "reached_target": out.reached_target,
            "flags": flags,
        }),
    )
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long)]
    ensemble: PathBuf,
    /// True labels; adds accuracy, the confusion matrix and per-family error counts.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleResult {
    name: String,
    predicted: String,
    truth: Option<String>,
    distances: BTreeMap<String, f64>,
}

pub fn classify(a: &ClassifyArgs) -> CmdResult {
    let ens: Ensemble<f64> = io::read_json(&a.ensemble).map_err(io_failure("classify"))?;
    let profiles = read_profiles(&a.profiles, "classify")?;
    let truth: Option<BTreeMap<String, String>> = match &a.labels {
        Some(p) => Some(io::read_labels_csv(p).map_err(io_failure("classify"))?.into_iter().collect()),
        None => None,
    };
    let results: Vec<SampleResult> = profiles
        .iter()
        .map(|(name, c)| {
            let r = assign(c, &ens);
            SampleResult {
                name: name.clone(),
                predicted: r.label,
                truth: truth.as_ref().and_then(|t| t.get(name).cloned()),
                distances: r.distances.into_iter().collect(),
            }
        })
        .collect();
    let mut report = json!({ "samples": results });
    if truth.is_some() {
        let labels: Vec<String> = ens.models.iter().map(|m| m.label.clone()).collect();
        let known: Vec<&SampleResult> = results.iter().filter(|r| r.truth.is_some()).collect();
        let mut confusion: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        for r in &known {
            *confusion.entry(r.truth.as_deref().unwrap()).or_default().entry(&r.predicted).or_default() += 1;
        }
        let counts: Vec<usize> = labels.iter().map(|l| known.iter().filter(|r| r.truth.as_ref() == Some(l)).count()).collect();
        let errors: Vec<usize> = labels
            .iter()
            .map(|l| known.iter().filter(|r| r.truth.as_ref() == Some(l) && &r.predicted != l).count())
            .collect();
        let correct = known.iter().filter(|r| r.truth.as_ref() == Some(&r.predicted)).count();
        report["accuracy"] = json!(correct as f64 / known.len().max(1) as f64);
        report["confusion"] = json!(confusion);
        report["family_errors"] = json!(family_error_table(&labels, &counts, &[errors]));
    }
    write_report(a.report.as_ref(), &report)
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Directory of profile CSVs, all unwrapped from one body.
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn metrics(a: &MetricsArgs) -> CmdResult {
    let profiles = read_profiles(&a.profiles, "classify")?;
    let shapes: Vec<StraightenedShape<f64>> = profiles
        .iter()
        .map(|(_, c)| StraightenedShape {
            stations: (0..c.samples().len()).map(|i| i as f64).collect(),
            half_widths: c.samples().to_vec(),
        })
        .collect();
    let r = consistency_metrics(&shapes).map_err(fail("classify", &a.profiles))?;
    let names: Vec<&String> = profiles.iter().map(|(n, _)| n).collect();
    write_report(
        a.report.as_ref(),
        &json!({
            "instances": names,
            "per_instance": r.per_instance,
            "mean": r.mean,
            "std_dev": r.std_dev,
            "measures": ["a1 length", "a2 area", "a3 width", "a4 perimeter", "a5 max cross section"],
        }),
    )
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RoundtripConfig {
    neutral: NeutralConfig,
    morph: MorphConfig,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// TOML with [neutral] and [morph] tables, keys as for unwrap-neutral
    /// and unwrap-morph.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn eval_roundtrip(a: &RoundtripArgs) -> CmdResult {
    use rayon::prelude::*;
    let cfg: RoundtripConfig = load_config(a.config.as_ref())?;
    let suite = standard_suite(a.seed);
    let results = suite
        .par_iter()
        .map(|c| run_case(c, &cfg.neutral, &cfg.morph))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::new("synth", None, e))?;
    let consistency = consistency_by_template(&results).map_err(|e| Failure::new("classify", None, e))?;
    let cases: Vec<serde_json::Value> = results
        .iter()
        .map(|r| {
            let score = |m: &Result<elastic_unwrap::roundtrip::MethodScore, String>| match m {
                Ok(s) => json!({
                    "iou": s.iou,
                    "width_error": s.width_error,
                    "length": s.shape.length(),
                    "flags": s.flags,
                }),
                Err(e) => json!({ "error": e }),
            };
            json!({
                "template": r.case.template_name,
                "bend": r.case.bend,
                "seed": r.case.seed,
                "neutral": score(&r.neutral),
                "morph": score(&r.morph),
                "agreement": r.agreement,
            })
        })
        .collect();
    let consistency: BTreeMap<&String, _> = consistency.iter().map(|(n, c)| (n, json!({ "mean": c.mean, "std_dev": c.std_dev }))).collect();
    write_report(
        a.report.as_ref(),
        &json!({ "seed": a.seed, "cases": cases, "consistency": consistency }),
    )
}
