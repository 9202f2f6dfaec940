//! Synthetic labelled bodies for classification experiments and the
//! repeated train/test split protocol.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{assign, family_error_table, tune, Ensemble, FamilyErrors, ProfileCurve, TuneConfig};
use crate::neutral::NeutralConfig;
use crate::roundtrip::{run_neutral, MARGIN};
use crate::synth::{add_boundary_noise, bend, BendProfile, CapStyle, Template};
use crate::Result;

/// Mean shape of one family: axis length and width as a function of the
/// normalised station `t` in `[0, 1]`. Every family has a pointed tail and
/// a round head, so unwrapping orients all members the same way.
#[derive(Debug, Clone, Copy)]
pub struct Family {
    pub label: &'static str,
    pub length: f64,
    pub width: fn(f64) -> f64,
}

pub fn standard_families() -> Vec<Family> {
    use std::f64::consts::PI;
    vec![
        Family { label: "beaded", length: 220.0, width: |t| 19.0 + 2.5 * (4.0 * PI * t).sin() },
        Family { label: "club", length: 250.0, width: |t| 16.0 + 9.0 * t },
        Family { label: "long", length: 250.0, width: |t| 22.0 - 2.0 * t },
        Family { label: "short", length: 190.0, width: |t| 18.0 - 2.0 * t },
        Family { label: "slim", length: 170.0, width: |_| 15.0 },
        Family { label: "spindle", length: 210.0, width: |t| 14.0 + 8.0 * (PI * t).sin() },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub per_family: usize,
    /// Uniform relative spread of individual length.
    pub length_spread: f64,
    /// Uniform relative spread of individual width.
    pub width_spread: f64,
    /// Largest |curvature| of the random bends (1/px).
    pub max_curvature: f64,
    pub noise_amplitude: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            per_family: 30,
            length_spread: 0.06,
            width_spread: 0.08,
            max_curvature: 0.012,
            noise_amplitude: 1.0,
        }
    }
}

/// A random individual of `family`: scaled length and width, a random
/// linear-curvature bend and boundary noise, unwrapped by the neutral-line
/// method.
fn individual(family: &Family, cfg: &DatasetConfig, seed: u64) -> Result<ProfileCurve<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ls = 1.0 + rng.gen_range(-cfg.length_spread..=cfg.length_spread);
    let ws = 1.0 + rng.gen_range(-cfg.width_spread..=cfg.width_spread);
    let length = (family.length * ls).round();
    let shape = family.width;
    let template = Template::new(length, |s| shape(s / length) * ws, CapStyle::Taper)?;
    let k0 = rng.gen_range(-cfg.max_curvature..=cfg.max_curvature);
    let k1 = rng.gen_range(-cfg.max_curvature..=cfg.max_curvature);
    let profile = BendProfile::parse(&format!("0:{k0},{}", (k1 - k0) / length))?;
    let body = bend(&template, &profile, MARGIN)?;
    let mask = add_boundary_noise(&body.mask, cfg.noise_amplitude, rng.gen())?;
    let (shape, _) = run_neutral(&mask, &NeutralConfig::default())?;
    ProfileCurve::from_shape(&shape)
}

/// `per_family` unwrapped profiles of every family, in family order.
pub fn generate(families: &[Family], cfg: &DatasetConfig, seed: u64) -> Result<Vec<(ProfileCurve<f64>, String)>> {
    let jobs: Vec<(usize, usize)> = (0..families.len()).flat_map(|f| (0..cfg.per_family).map(move |i| (f, i))).collect();
    jobs.par_iter()
        .map(|&(f, i)| {
            let s = seed.wrapping_mul(1_000_003).wrapping_add((f * 10_000 + i) as u64);
            individual(&families[f], cfg, s).map(|c| (c, families[f].label.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub test_accuracy: f64,
    /// Test accuracy of the untuned group means.
    pub initial_accuracy: f64,
    pub epochs: usize,
    pub reached_target: bool,
    /// Misidentified test members per family, in label order.
    pub errors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub labels: Vec<String>,
    pub splits: Vec<SplitOutcome>,
    pub mean_accuracy: f64,
    /// Fraction of splits whose tuning reached the target rate.
    pub reached_fraction: f64,
    pub table: Vec<FamilyErrors>,
}

/// Repeated stratified half splits: group means from the training half,
/// tuning, then assignment of the test half.
pub fn split_protocol(
    data: &[(ProfileCurve<f64>, String)],
    splits: usize,
    seed: u64,
    tune_cfg: &TuneConfig,
) -> Result<SplitReport> {
    let mut labels: Vec<String> = data.iter().map(|(_, l)| l.clone()).collect();
    labels.sort();
    labels.dedup();
    let counts: Vec<usize> = labels.iter().map(|l| data.iter().filter(|(_, m)| m == l).count()).collect();
    let outcomes: Vec<SplitOutcome> = (0..splits)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for l in &labels {
                let mut idx: Vec<usize> = (0..data.len()).filter(|&i| &data[i].1 == l).collect();
                idx.shuffle(&mut rng);
                let half = idx.len() / 2;
                train.extend(idx[..half].iter().map(|&i| data[i].clone()));
                test.extend(idx[half..].iter().map(|&i| data[i].clone()));
            }
            let initial = Ensemble::from_labeled(&train)?;
            let tuned = tune(&initial, &train, tune_cfg)?;
            let accuracy = |ens: &Ensemble<f64>| {
                test.iter().filter(|(c, l)| &assign(c, ens).label == l).count() as f64 / test.len() as f64
            };
            let errors = labels
                .iter()
                .map(|l| test.iter().filter(|(c, m)| m == l && &assign(c, &tuned.ensemble).label != l).count())
                .collect();
            Ok(SplitOutcome {
                test_accuracy: accuracy(&tuned.ensemble),
                initial_accuracy: accuracy(&initial),
                epochs: tuned.rates.len() - 1,
                reached_target: tuned.reached_target,
                errors,
            })
        })
        .collect::<Result<_>>()?;
    let n = outcomes.len().max(1) as f64;
    let errors: Vec<Vec<usize>> = outcomes.iter().map(|o| o.errors.clone()).collect();
    Ok(SplitReport {
        mean_accuracy: outcomes.iter().map(|o| o.test_accuracy).sum::<f64>() / n,
        reached_fraction: outcomes.iter().filter(|o| o.reached_target).count() as f64 / n,
        table: family_error_table(&labels, &counts, &errors),
        labels,
        splits: outcomes,
    })
}
