//! Nearest-prototype classification of straightened width profiles and the
//! consistency measures between unwrapped versions of one body.

use serde::{Deserialize, Serialize};

use crate::geometry::{polyline_length, Point};
use crate::neutral::StraightenedShape;
use crate::{Error, Real, Result};

/// Shortest accepted profile, in stations.
pub const MIN_PROFILE_LENGTH: usize = 10;

/// Effective counts at or below this are not updated further.
pub const MIN_EFFECTIVE_COUNT: f64 = 0.1;

/// Half-widths at unit arc-length stations `0..=length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve<T> {
    samples: Vec<T>,
}

impl<T: Real> ProfileCurve<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.len() < MIN_PROFILE_LENGTH + 1 {
            return Err(Error::Invalid(format!(
                "profile has {} stations, need at least {}",
                samples.len().saturating_sub(1),
                MIN_PROFILE_LENGTH
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("profile has non-finite samples".into()));
        }
        Ok(Self { samples })
    }

    pub fn from_shape(shape: &StraightenedShape<T>) -> Result<Self> {
        Self::new(shape.unit_profile())
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Number of unit steps.
    pub fn length(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&v| v * k).collect(),
        }
    }
}

/// `sum_s (c(s) - reference(s + shift))^2` over the stations of `c`.
pub fn shifted_distance<T: Real>(c: &ProfileCurve<T>, reference: &ProfileCurve<T>, shift: usize) -> T {
    c.samples
        .iter()
        .zip(&reference.samples[shift..])
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum()
}

/// Shift of `c` along `reference` with the smallest squared distance (first
/// on ties) and that distance.
pub fn align<T: Real>(c: &ProfileCurve<T>, reference: &ProfileCurve<T>) -> Result<(usize, T)> {
    if reference.length() < c.length() {
        return Err(Error::RefTooShort {
            reference: reference.length(),
            query: c.length(),
        });
    }
    let mut best = (0, shifted_distance(c, reference, 0));
    for d in 1..=reference.length() - c.length() {
        let e = shifted_distance(c, reference, d);
        if e < best.1 {
            best = (d, e);
        }
    }
    Ok(best)
}

/// Overlap of a sample with a model: station pairs `(model, sample)` and the
/// summed squared distance over them. The shorter curve slides along the
/// longer one.
fn overlap<T: Real>(sample: &ProfileCurve<T>, model: &ProfileCurve<T>) -> (Vec<(usize, usize)>, T) {
    if model.length() >= sample.length() {
        let (d, e) = align(sample, model).expect("model is longer");
        ((0..=sample.length()).map(|s| (s + d, s)).collect(), e)
    } else {
        let (d, e) = align(model, sample).expect("sample is longer");
        ((0..=model.length()).map(|s| (s, s + d)).collect(), e)
    }
}

/// Minimum aligned distance between a sample and a model curve.
pub fn curve_distance<T: Real>(sample: &ProfileCurve<T>, model: &ProfileCurve<T>) -> T {
    overlap(sample, model).1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModel<T> {
    pub label: String,
    pub representative: ProfileCurve<T>,
    pub effective_count: T,
}

/// Mean of the members after aligning each to the longest one; every
/// station averages the members that cover it.
pub fn group_mean<T: Real>(label: &str, members: &[ProfileCurve<T>]) -> Result<GroupModel<T>> {
    let anchor = members
        .iter()
        .enumerate()
        .max_by_key(|(i, m)| (m.length(), std::cmp::Reverse(*i)))
        .map(|(_, m)| m)
        .ok_or_else(|| Error::Invalid(format!("group {label:?} has no members")))?;
    let n = anchor.samples.len();
    let mut sum = vec![T::zero(); n];
    let mut count = vec![0usize; n];
    for m in members {
        let (d, _) = align(m, anchor)?;
        for (s, &v) in m.samples.iter().enumerate() {
            sum[s + d] += v;
            count[s + d] += 1;
        }
    }
    let samples = sum.iter().zip(&count).map(|(&a, &k)| a / T::of_usize(k)).collect();
    Ok(GroupModel {
        label: label.to_string(),
        representative: ProfileCurve { samples },
        effective_count: T::of_usize(members.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble<T> {
    pub models: Vec<GroupModel<T>>,
    /// Tuning epochs that changed the models.
    pub generation: usize,
}

impl<T: Real> Ensemble<T> {
    pub fn new(models: Vec<GroupModel<T>>) -> Result<Self> {
        let mut labels: Vec<&str> = models.iter().map(|m| m.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Invalid(format!("label {:?} appears twice", w[0])));
        }
        if models.is_empty() {
            return Err(Error::Invalid("ensemble has no models".into()));
        }
        Ok(Self { models, generation: 0 })
    }

    /// One group mean per label, labels in sorted order.
    pub fn from_labeled(samples: &[(ProfileCurve<T>, String)]) -> Result<Self> {
        let mut labels: Vec<&String> = samples.iter().map(|(_, l)| l).collect();
        labels.sort();
        labels.dedup();
        let models = labels
            .into_iter()
            .map(|l| {
                let members: Vec<ProfileCurve<T>> =
                    samples.iter().filter(|(_, m)| m == l).map(|(c, _)| c.clone()).collect();
                group_mean(l, &members)
            })
            .collect::<Result<_>>()?;
        Self::new(models)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.models.iter().position(|m| m.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment<T> {
    pub label: String,
    /// `(label, distance)` for every model, in ensemble order.
    pub distances: Vec<(String, T)>,
}

/// Label of the nearest model; ties go to the lexicographically smallest label.
pub fn assign<T: Real>(c: &ProfileCurve<T>, ensemble: &Ensemble<T>) -> Assignment<T> {
    let distances: Vec<(String, T)> = ensemble
        .models
        .iter()
        .map(|m| (m.label.clone(), curve_distance(c, &m.representative)))
        .collect();
    let best = distances
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)))
        .expect("ensemble is not empty");
    Assignment {
        label: best.0.clone(),
        distances,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneConfig {
    /// Training success rate that ends tuning.
    pub target_rate: f64,
    pub max_epochs: usize,
    /// Use `N - beta` in the correct-model update instead of `N + beta`.
    pub literal_reinforcement: bool,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            target_rate: 0.98,
            max_epochs: 50,
            literal_reinforcement: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome<T> {
    pub ensemble: Ensemble<T>,
    /// Training success rate at the start of each epoch and after the last one.
    pub rates: Vec<f64>,
    pub reached_target: bool,
    /// Updates skipped because the effective count would collapse.
    pub degenerate_updates: usize,
}

/// Correction weight `exp(-mean squared distance)` over the overlap.
pub fn beta<T: Real>(sample: &ProfileCurve<T>, model: &ProfileCurve<T>) -> T {
    let (pairs, e) = overlap(sample, model);
    (-e / T::of_usize(pairs.len())).exp()
}

/// Moves `model` away from (`sign < 0`) or towards (`sign > 0`) the sample
/// on the overlapped stations. Returns false when the update was skipped.
fn update_model<T: Real>(model: &mut GroupModel<T>, sample: &ProfileCurve<T>, sign: T, count_sign: T) -> bool {
    let (pairs, e) = overlap(sample, &model.representative);
    let b = (-e / T::of_usize(pairs.len())).exp();
    let n = model.effective_count;
    let denom = n + count_sign * b;
    if denom <= T::of(MIN_EFFECTIVE_COUNT) {
        return false;
    }
    for (m, s) in pairs {
        let r = &mut model.representative.samples[m];
        *r = (n * *r + sign * b * sample.samples[s]) / denom;
    }
    model.effective_count = denom;
    true
}

fn success_rate<T: Real>(ensemble: &Ensemble<T>, training: &[(ProfileCurve<T>, String)]) -> f64 {
    let ok = training.iter().filter(|(c, l)| &assign(c, ensemble).label == l).count();
    ok as f64 / training.len().max(1) as f64
}

/// Re-estimates the models from their training errors until the success
/// rate reaches the target or the epoch budget runs out. Within an epoch
/// samples are visited in order and every misclassification immediately
/// pushes the wrong model away and pulls the right one closer.
pub fn tune<T: Real>(ensemble: &Ensemble<T>, training: &[(ProfileCurve<T>, String)], cfg: &TuneConfig) -> Result<TuneOutcome<T>> {
    if let Some((_, l)) = training.iter().find(|(_, l)| ensemble.index_of(l).is_none()) {
        return Err(Error::UnknownLabel(l.clone()));
    }
    let mut ens = ensemble.clone();
    let mut rates = Vec::new();
    let mut degenerate = 0;
    for _ in 0..cfg.max_epochs {
        let rate = success_rate(&ens, training);
        rates.push(rate);
        if rate >= cfg.target_rate {
            return Ok(TuneOutcome {
                ensemble: ens,
                rates,
                reached_target: true,
                degenerate_updates: degenerate,
            });
        }
        let mut changed = false;
        for (c, truth) in training {
            let got = assign(c, &ens).label;
            if &got == truth {
                continue;
            }
            let w = ens.index_of(&got).unwrap();
            let r = ens.index_of(truth).unwrap();
            let one = T::one();
            if update_model(&mut ens.models[w], c, -one, -one) {
                changed = true;
            } else {
                degenerate += 1;
            }
            let count_sign = if cfg.literal_reinforcement { -one } else { one };
            if update_model(&mut ens.models[r], c, one, count_sign) {
                changed = true;
            } else {
                degenerate += 1;
            }
        }
        if changed {
            ens.generation += 1;
        }
    }
    let rate = success_rate(&ens, training);
    rates.push(rate);
    Ok(TuneOutcome {
        ensemble: ens,
        rates,
        reached_target: rate >= cfg.target_rate,
        degenerate_updates: degenerate,
    })
}

/// Scalar measures of one straightened body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMeasures {
    pub length: f64,
    pub area: f64,
    pub perimeter: f64,
    pub max_cross_section: f64,
}

impl ShapeMeasures {
    pub fn of<T: Real>(shape: &StraightenedShape<T>) -> Self {
        let st: Vec<f64> = shape.stations.iter().map(|v| v.f64()).collect();
        let hw: Vec<f64> = shape.half_widths.iter().map(|v| v.f64()).collect();
        let area = st
            .windows(2)
            .zip(hw.windows(2))
            .map(|(s, h)| (s[1] - s[0]) * (h[0] + h[1]))
            .sum();
        let upper: Vec<Point<f64>> = st.iter().zip(&hw).map(|(&x, &h)| Point::new(x, h)).collect();
        let lower: Vec<Point<f64>> = st.iter().zip(&hw).map(|(&x, &h)| Point::new(x, -h)).collect();
        let (first, last) = (hw.first().copied().unwrap_or(0.0), hw.last().copied().unwrap_or(0.0));
        Self {
            length: st.last().copied().unwrap_or(0.0) - st.first().copied().unwrap_or(0.0),
            area,
            perimeter: polyline_length(&upper) + polyline_length(&lower) + 2.0 * (first + last),
            max_cross_section: 2.0 * hw.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Percent deviations of every instance from the across-instance means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `[a1, a2, a3, a4, a5]` per instance, signed percent.
    pub per_instance: Vec<[f64; 5]>,
    /// Mean absolute value per measure.
    pub mean: [f64; 5],
    /// Standard deviation of the absolute values per measure.
    pub std_dev: [f64; 5],
}

fn pct(v: f64, mean: f64) -> f64 {
    (v - mean) / mean * 100.0
}

/// Length, area, mean width, perimeter and maximum cross-section deviations.
/// Width profiles are aligned to the longest instance and compared on the
/// stations every instance covers.
pub fn consistency_metrics<T: Real>(instances: &[StraightenedShape<T>]) -> Result<ConsistencyReport> {
    let n = instances.len();
    if n < 2 {
        return Err(Error::TooFewInstances(n));
    }
    let measures: Vec<ShapeMeasures> = instances.iter().map(ShapeMeasures::of).collect();
    let mean_of = |f: fn(&ShapeMeasures) -> f64| measures.iter().map(f).sum::<f64>() / n as f64;
    let (ml, ma, mp, mc) = (
        mean_of(|m| m.length),
        mean_of(|m| m.area),
        mean_of(|m| m.perimeter),
        mean_of(|m| m.max_cross_section),
    );
    let widths: Vec<Vec<f64>> = instances
        .iter()
        .map(|s| s.unit_profile().iter().map(|h| 2.0 * h.f64()).collect())
        .collect();
    let anchor = (0..n).max_by_key(|&i| (widths[i].len(), std::cmp::Reverse(i))).unwrap();
    let anchor_curve = ProfileCurve { samples: widths[anchor].clone() };
    let shifts: Vec<usize> = widths
        .iter()
        .map(|w| {
            if w.len() >= 2 {
                align(&ProfileCurve { samples: w.clone() }, &anchor_curve).map(|r| r.0)
            } else {
                Ok(0)
            }
        })
        .collect::<Result<_>>()?;
    let lo = shifts.iter().copied().max().unwrap_or(0);
    let hi = widths.iter().zip(&shifts).map(|(w, &d)| d + w.len()).min().unwrap_or(0);
    if hi <= lo {
        return Err(Error::Invalid("width profiles share no stations".into()));
    }
    let at = |i: usize, j: usize| widths[i][j - shifts[i]];
    let ybar: Vec<f64> = (lo..hi).map(|j| (0..n).map(|i| at(i, j)).sum::<f64>() / n as f64).collect();
    let ybar_mean = ybar.iter().sum::<f64>() / ybar.len() as f64;
    let per_instance: Vec<[f64; 5]> = (0..n)
        .map(|i| {
            let m = &measures[i];
            let dev = (lo..hi).map(|j| at(i, j) - ybar[j - lo]).sum::<f64>() / ybar.len() as f64;
            [
                pct(m.length, ml),
                pct(m.area, ma),
                dev / ybar_mean * 100.0,
                pct(m.perimeter, mp),
                pct(m.max_cross_section, mc),
            ]
        })
        .collect();
    let mut mean = [0.0; 5];
    let mut std_dev = [0.0; 5];
    for k in 0..5 {
        let abs: Vec<f64> = per_instance.iter().map(|a| a[k].abs()).collect();
        mean[k] = abs.iter().sum::<f64>() / n as f64;
        std_dev[k] = (abs.iter().map(|v| (v - mean[k]).powi(2)).sum::<f64>() / n as f64).sqrt();
    }
    Ok(ConsistencyReport {
        per_instance,
        mean,
        std_dev,
    })
}

/// Per-family outcome of repeated train/test splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyErrors {
    pub label: String,
    /// Members of the family in the whole data set.
    pub count: usize,
    /// Percent of splits with no misidentified test member.
    pub zero_errors: f64,
    /// Percent of splits with exactly one.
    pub one_error: f64,
}

/// Tallies test errors per family over splits; `errors[k][f]` is the number
/// of misidentified test members of family `f` in split `k`.
pub fn family_error_table(labels: &[String], counts: &[usize], errors: &[Vec<usize>]) -> Vec<FamilyErrors> {
    let splits = errors.len().max(1) as f64;
    labels
        .iter()
        .enumerate()
        .map(|(f, label)| FamilyErrors {
            label: label.clone(),
            count: counts[f],
            zero_errors: 100.0 * errors.iter().filter(|e| e[f] == 0).count() as f64 / splits,
            one_error: 100.0 * errors.iter().filter(|e| e[f] == 1).count() as f64 / splits,
        })
        .collect()
}
