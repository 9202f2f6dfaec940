//! Morphological inversion of the bending deformation.
//!
//! Fields live on the pixel grid and are defined on body pixels only; the
//! exterior holds NaN and is never read by the filters.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    choose_degree_for, cumulative_chord, resample_polyline, BinaryMask, Contour, FrameSample, Point, PointGrid,
};
use crate::neutral::{local_curvature, StraightenedShape};
use crate::{Error, Real, Result};

/// Magnitude standing in for infinity in [`KappaReference`].
pub const SENTINEL: f64 = 1e12;
/// Lower clamp on the gradient norm before taking its logarithm.
pub const MIN_GRADIENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldUnits {
    Pixels,
    Log,
    Ratio,
    Scale,
}

/// Real values on the body pixels of a mask.
#[derive(Debug, Clone)]
pub struct ScalarField<T> {
    mask: BinaryMask,
    values: Vec<T>,
    units: FieldUnits,
}

/// Equal masks, units and body values; the exterior is ignored.
impl<T: Real> PartialEq for ScalarField<T> {
    fn eq(&self, other: &Self) -> bool {
        self.mask == other.mask
            && self.units == other.units
            && self.mask.cells().iter().zip(self.values.iter().zip(&other.values)).all(|(&c, (a, b))| !c || a == b)
    }
}

impl<T: Real> ScalarField<T> {
    /// Field with `f(x, y)` on body pixels and NaN elsewhere.
    pub fn from_fn(mask: &BinaryMask, units: FieldUnits, f: impl Fn(usize, usize) -> T) -> Self {
        let w = mask.width();
        let values = mask
            .cells()
            .iter()
            .enumerate()
            .map(|(i, &inside)| if inside { f(i % w, i / w) } else { T::nan() })
            .collect();
        Self {
            mask: mask.clone(),
            values,
            units,
        }
    }

    pub fn constant(mask: &BinaryMask, units: FieldUnits, v: T) -> Self {
        Self::from_fn(mask, units, |_, _| v)
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn units(&self) -> FieldUnits {
        self.units
    }

    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }

    /// Raw row-major values, NaN outside the body.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at a body pixel; `None` outside the body or the grid.
    pub fn get(&self, x: i64, y: i64) -> Option<T> {
        if !self.mask.get(x, y) {
            return None;
        }
        Some(self.values[y as usize * self.width() + x as usize])
    }

    /// Value at a body pixel given by its row-major index.
    #[inline]
    pub fn at(&self, index: usize) -> T {
        self.values[index]
    }

    pub fn map(&self, units: FieldUnits, f: impl Fn(T) -> T) -> Self {
        let values = self
            .values
            .iter()
            .zip(self.mask.cells())
            .map(|(&v, &inside)| if inside { f(v) } else { T::nan() })
            .collect();
        Self {
            mask: self.mask.clone(),
            values,
            units,
        }
    }

    fn zip_with(&self, other: &Self, units: FieldUnits, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.mask, other.mask, "fields must share a mask");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.mask.cells())
            .map(|((&a, &b), &inside)| if inside { f(a, b) } else { T::nan() })
            .collect();
        Self {
            mask: self.mask.clone(),
            values,
            units,
        }
    }

    /// `(x, y, value)` over body pixels in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let w = self.width();
        self.mask
            .cells()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| (i % w, i / w, self.values[i]))
    }

    /// Smallest and largest body value.
    pub fn range(&self) -> (T, T) {
        self.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), (_, _, v)| (lo.min(v), hi.max(v)))
    }
}

/// Nearest-sample distance and the arc length of that sample, for every body
/// pixel. Ties go to the smaller arc length.
pub fn distance_and_footpoint<T: Real>(
    samples: &[Point<T>],
    arc: &[T],
    mask: &BinaryMask,
) -> (ScalarField<T>, ScalarField<T>) {
    assert_eq!(samples.len(), arc.len());
    let grid = PointGrid::new(samples.to_vec(), T::of(4.0));
    let w = mask.width();
    let mut dist = vec![T::nan(); mask.cells().len()];
    let mut foot = dist.clone();
    for (x, y) in mask.pixels() {
        let q = Point::from_pixel(x as i64, y as i64);
        if let Some((k, d2)) = grid.nearest(q) {
            dist[y * w + x] = d2.sqrt();
            foot[y * w + x] = arc[k];
        }
    }
    let wrap = |values| ScalarField {
        mask: mask.clone(),
        values,
        units: FieldUnits::Pixels,
    };
    (wrap(dist), wrap(foot))
}

/// Distance from each body pixel to the nearest curve sample.
pub fn distance_field<T: Real>(samples: &[Point<T>], arc: &[T], mask: &BinaryMask) -> ScalarField<T> {
    distance_and_footpoint(samples, arc, mask).0
}

/// Arc length of the nearest curve sample for each body pixel.
pub fn footpoint_field<T: Real>(samples: &[Point<T>], arc: &[T], mask: &BinaryMask) -> ScalarField<T> {
    distance_and_footpoint(samples, arc, mask).1
}

/// Half widths of the rows of the Euclidean disk `dx^2 + dy^2 <= r^2`.
pub fn disk_rows(radius: usize) -> Vec<usize> {
    let r2 = (radius * radius) as i64;
    (-(radius as i64)..=radius as i64)
        .map(|dy| {
            let mut h = 0;
            while ((h + 1) * (h + 1)) as i64 + dy * dy <= r2 {
                h += 1;
            }
            h
        })
        .collect()
}

/// Sliding extreme of half-width `h` along `row` (monotone deque).
fn window_extreme<T: Real>(row: &[T], h: usize, better: impl Fn(T, T) -> bool, out: &mut Vec<T>, fill: T) {
    out.clear();
    let n = row.len();
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for x in 0..n {
        let hi = (x + h).min(n - 1);
        while next <= hi {
            while let Some(&b) = dq.back() {
                if better(row[next], row[b]) || row[next] == row[b] {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        while let Some(&f) = dq.front() {
            if f + h < x {
                dq.pop_front();
            } else {
                break;
            }
        }
        out.push(dq.front().map_or(fill, |&f| row[f]));
    }
}

/// Flat-disk sup (`dilate = true`) or inf over body pixels.
fn flat_disk<T: Real>(f: &ScalarField<T>, radius: usize, dilate: bool) -> ScalarField<T> {
    if radius == 0 {
        return f.clone();
    }
    let (w, h) = (f.width(), f.height());
    let fill = if dilate { T::neg_infinity() } else { T::infinity() };
    let better = move |a: T, b: T| if dilate { a > b } else { a < b };
    let src: Vec<T> = f
        .values
        .iter()
        .zip(f.mask.cells())
        .map(|(&v, &inside)| if inside { v } else { fill })
        .collect();
    let rows = disk_rows(radius);
    let mut widths: Vec<usize> = rows.clone();
    widths.sort_unstable();
    widths.dedup();
    // windowed[k][y * w + x]: extreme over row y, columns x - widths[k] ..= x + widths[k]
    let mut windowed = vec![Vec::with_capacity(w * h); widths.len()];
    let mut buf = Vec::with_capacity(w);
    for (k, &hw) in widths.iter().enumerate() {
        for y in 0..h {
            window_extreme(&src[y * w..(y + 1) * w], hw, better, &mut buf, fill);
            windowed[k].extend_from_slice(&buf);
        }
    }
    let slot: Vec<usize> = rows.iter().map(|hw| widths.binary_search(hw).unwrap()).collect();
    let r = radius as i64;
    let mut out = vec![T::nan(); w * h];
    for (x, y) in f.mask.pixels() {
        let mut acc = fill;
        for (i, dy) in (-r..=r).enumerate() {
            let yy = y as i64 + dy;
            if yy < 0 || yy >= h as i64 {
                continue;
            }
            let v = windowed[slot[i]][yy as usize * w + x];
            if better(v, acc) {
                acc = v;
            }
        }
        out[y * w + x] = acc;
    }
    ScalarField {
        mask: f.mask.clone(),
        values: out,
        units: f.units,
    }
}

/// Supremum over the Euclidean disk of `radius`, restricted to body pixels.
pub fn dilate<T: Real>(f: &ScalarField<T>, radius: usize) -> ScalarField<T> {
    flat_disk(f, radius, true)
}

/// Infimum over the Euclidean disk of `radius`, restricted to body pixels.
pub fn erode<T: Real>(f: &ScalarField<T>, radius: usize) -> ScalarField<T> {
    flat_disk(f, radius, false)
}

/// Logarithm of the gradient norm of `delta`: central differences, one-sided
/// where a neighbour leaves the body, zero where both do.
pub fn phi0_field<T: Real>(delta: &ScalarField<T>) -> ScalarField<T> {
    let floor = T::of(MIN_GRADIENT);
    let half = T::of(0.5);
    let diff = |x: i64, y: i64, dx: i64, dy: i64| -> T {
        let c = delta.get(x, y).unwrap();
        match (delta.get(x + dx, y + dy), delta.get(x - dx, y - dy)) {
            (Some(a), Some(b)) => (a - b) * half,
            (Some(a), None) => a - c,
            (None, Some(b)) => c - b,
            (None, None) => T::zero(),
        }
    };
    ScalarField::from_fn(delta.mask(), FieldUnits::Log, |x, y| {
        let (x, y) = (x as i64, y as i64);
        let g = Point::new(diff(x, y, 1, 0), diff(x, y, 0, 1));
        g.norm().max(floor).ln()
    })
}

/// Per-pixel branch selector: `+SENTINEL` where the contour curvature at the
/// footpoint is not positive (dilation branch), `-SENTINEL` where it is
/// positive (erosion branch).
#[derive(Debug, Clone)]
pub struct KappaReference<T> {
    field: ScalarField<T>,
}

impl<T: Real> PartialEq for KappaReference<T> {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
    }
}

impl<T: Real> KappaReference<T> {
    /// Builds the selector from the footpoint field and the curvature of the
    /// curve as a function of arc length.
    pub fn from_footpoints(s0: &ScalarField<T>, curvature: impl Fn(T) -> T) -> Self {
        let sent = T::of(SENTINEL);
        Self {
            field: s0.map(FieldUnits::Ratio, |s| if curvature(s) > T::zero() { -sent } else { sent }),
        }
    }

    /// Same sign everywhere; `positive_curvature` selects erosion.
    pub fn uniform(mask: &BinaryMask, positive_curvature: bool) -> Self {
        let sent = T::of(SENTINEL);
        Self {
            field: ScalarField::constant(mask, FieldUnits::Ratio, if positive_curvature { -sent } else { sent }),
        }
    }

    pub fn from_fn(mask: &BinaryMask, positive_curvature: impl Fn(usize, usize) -> bool) -> Self {
        let sent = T::of(SENTINEL);
        Self {
            field: ScalarField::from_fn(mask, FieldUnits::Ratio, |x, y| if positive_curvature(x, y) { -sent } else { sent }),
        }
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.field
    }

    /// Whether the pixel takes the erosion branch.
    pub fn erodes(&self, x: i64, y: i64) -> Option<bool> {
        self.field.get(x, y).map(|v| v < T::zero())
    }

    /// Body pixels with a 4-neighbour of the other sign.
    pub fn sign_boundary(&self) -> Vec<(usize, usize)> {
        self.field
            .iter()
            .filter(|&(x, y, v)| {
                [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
                    self.field
                        .get(x as i64 + dx, y as i64 + dy)
                        .is_some_and(|u| (u < T::zero()) != (v < T::zero()))
                })
            })
            .map(|(x, y, _)| (x, y))
            .collect()
    }
}

/// `sup[erode(g, s), inf[dilate(g, s), kref]]`.
pub fn alpha_filter<T: Real>(g: &ScalarField<T>, kref: &KappaReference<T>, scale: usize) -> ScalarField<T> {
    let up = dilate(g, scale);
    let down = erode(g, scale);
    let capped = up.zip_with(&kref.field, g.units, |a, k| a.min(k));
    down.zip_with(&capped, g.units, |a, b| a.max(b))
}

/// `exp(alpha[g](s))`.
pub fn curvature_deformation<T: Real>(phi0: &ScalarField<T>, kref: &KappaReference<T>, scale: usize) -> ScalarField<T> {
    alpha_filter(phi0, kref, scale).map(FieldUnits::Ratio, |v| v.exp())
}

/// Curvature deformation at integer scales `0..=max_scale`.
#[derive(Debug, Clone)]
pub struct ScaleSpace<T> {
    pub levels: Vec<ScalarField<T>>,
}

impl<T: Real> ScaleSpace<T> {
    pub fn build(phi0: &ScalarField<T>, kref: &KappaReference<T>, max_scale: usize) -> Self {
        use rayon::prelude::*;
        let levels = (0..=max_scale)
            .into_par_iter()
            .map(|s| curvature_deformation(phi0, kref, s))
            .collect();
        Self { levels }
    }

    pub fn max_scale(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }
}

/// Per-pixel scale of the smallest value in the stack (first on ties) and the
/// value reached there.
pub fn minimizing_scale<T: Real>(stack: &ScaleSpace<T>) -> Result<(ScalarField<T>, ScalarField<T>)> {
    let first = stack.levels.first().ok_or_else(|| Error::Invalid("empty scale space".into()))?;
    let mut best = first.clone();
    let mut sigma = first.map(FieldUnits::Scale, |_| T::zero());
    for (s, level) in stack.levels.iter().enumerate().skip(1) {
        for i in 0..best.values.len() {
            if first.mask.cells()[i] && level.values[i] < best.values[i] {
                best.values[i] = level.values[i];
                sigma.values[i] = T::of_usize(s);
            }
        }
    }
    Ok((sigma, best))
}

/// Ordered one-pixel-wide curve through the body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve<T> {
    pub points: Vec<Point<T>>,
    pub arc: Vec<T>,
    /// Number of skeleton components other than the kept one.
    pub discarded_components: usize,
}

impl<T: Real> ReferenceCurve<T> {
    pub fn length(&self) -> T {
        self.arc.last().copied().unwrap_or_else(T::zero)
    }
}

/// Ridge of a curvature-deformation field: pixels with `|phi - 1| > threshold`,
/// thinned and reduced to the longest geodesic path of the largest component.
pub fn reference_curve<T: Real>(phi: &ScalarField<T>, threshold: T) -> Result<ReferenceCurve<T>> {
    let mask = phi.mask();
    let interface = BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        phi.get(x as i64, y as i64).is_some_and(|v| (v - T::one()).abs() > threshold)
    });
    let skeleton = interface.thin();
    let components = skeleton.components().len();
    let path = skeleton.longest_path();
    if path.len() < 2 {
        return Err(Error::EmptyReference);
    }
    let points: Vec<Point<T>> = path.iter().map(|&(x, y)| Point::from_pixel(x as i64, y as i64)).collect();
    let arc = crate::geometry::cumulative_chord(&points);
    Ok(ReferenceCurve {
        points,
        arc,
        discarded_components: components - 1,
    })
}

/// Smooths an ordered curve with an arc-length polynomial fit, resamples it
/// at `step` and prolongs both ends along their tangents until they leave
/// `mask`.
pub fn extend_reference<T: Real>(curve: &ReferenceCurve<T>, mask: &BinaryMask, step: T) -> Result<ReferenceCurve<T>> {
    let choice = choose_degree_for(&curve.points, &curve.arc)?;
    let samples = choice.fit.curve.sample(step);
    if samples.len() < 2 {
        return Err(Error::EmptyReference);
    }
    let inside = |p: Point<T>| {
        let (x, y) = p.round_pixel();
        mask.get(x, y)
    };
    let prolong = |from: &FrameSample<T>, dir: Point<T>| {
        let mut out = Vec::new();
        let mut p = from.position;
        loop {
            p = p + dir * step;
            out.push(p);
            if !inside(p) {
                return out;
            }
        }
    };
    let first = samples.first().unwrap();
    let last = samples.last().unwrap();
    let mut points: Vec<Point<T>> = prolong(first, -first.tangent).into_iter().rev().collect();
    points.extend(samples.iter().map(|f| f.position));
    points.extend(prolong(last, last.tangent));
    let arc = cumulative_chord(&points);
    Ok(ReferenceCurve {
        points,
        arc,
        discarded_components: curve.discarded_components,
    })
}

/// Signed distance to `curve` (positive to the left of its direction) and
/// the arc length of the nearest sample.
pub fn curve_coordinates<T: Real>(curve: &ReferenceCurve<T>, mask: &BinaryMask) -> (ScalarField<T>, ScalarField<T>) {
    let (dist, foot) = distance_and_footpoint(&curve.points, &curve.arc, mask);
    let n = curve.points.len();
    let tangent = |k: usize| {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
        curve.points[b] - curve.points[a]
    };
    let signed = ScalarField::from_fn(mask, FieldUnits::Pixels, |x, y| {
        let i = y * mask.width() + x;
        let k = curve.arc.partition_point(|&a| a < foot.at(i)).min(n - 1);
        let p = Point::from_pixel(x as i64, y as i64);
        let side = tangent(k).cross(p - curve.points[k]);
        if side < T::zero() {
            -dist.at(i)
        } else {
            dist.at(i)
        }
    });
    (signed, foot)
}

/// Straightened raster: intensities, support and the coordinates of the
/// output origin in the `(x~, y~)` frame.
#[derive(Debug, Clone)]
pub struct Unwrapped {
    pub image: image::GrayImage,
    pub mask: BinaryMask,
    pub origin: (i64, i64),
}

/// Forward-scatters every body pixel of `image` to
/// `x~ = dilate_sigma(s0)`, `y~ = delta0 - delta0(reference point)`, rounded
/// to the nearest cell. Collisions average, holes of at most two cells along
/// a row or column take the nearest hit.
pub fn unwrap_image<T: Real>(
    image: &image::GrayImage,
    s0: &ScalarField<T>,
    delta0: &ScalarField<T>,
    sigma: &ScalarField<T>,
    reference: &ReferenceCurve<T>,
    margin: usize,
) -> Unwrapped {
    let mask = s0.mask();
    let w = mask.width();
    let n = reference.points.len();
    let mut hits: Vec<(i64, i64, u8)> = Vec::new();
    for (x, y) in mask.pixels() {
        let i = y * w + x;
        let radius = sigma.at(i).max(T::zero()).round().to_usize().unwrap_or(0);
        let x_t = if radius == 0 {
            s0.at(i)
        } else {
            let r = radius as i64;
            let mut best = s0.at(i);
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy <= r * r {
                        if let Some(v) = s0.get(x as i64 + dx, y as i64 + dy) {
                            best = best.max(v);
                        }
                    }
                }
            }
            best
        };
        let k = reference.arc.partition_point(|&a| a < s0.at(i)).min(n.saturating_sub(1));
        let (rx, ry) = reference.points[k].round_pixel();
        let base = delta0.get(rx, ry).unwrap_or_else(T::zero);
        let y_t = delta0.at(i) - base;
        let v = image.get_pixel(x as u32, y as u32).0[0];
        hits.push((x_t.round().to_i64().unwrap_or(0), y_t.round().to_i64().unwrap_or(0), v));
    }
    scatter(&hits, margin)
}

fn scatter(hits: &[(i64, i64, u8)], margin: usize) -> Unwrapped {
    if hits.is_empty() {
        return Unwrapped {
            image: image::GrayImage::new(1, 1),
            mask: BinaryMask::new(1, 1),
            origin: (0, 0),
        };
    }
    let m = margin as i64;
    let (x_lo, x_hi) = hits.iter().fold((i64::MAX, i64::MIN), |(a, b), h| (a.min(h.0), b.max(h.0)));
    let (y_lo, y_hi) = hits.iter().fold((i64::MAX, i64::MIN), |(a, b), h| (a.min(h.1), b.max(h.1)));
    let (w, h) = ((x_hi - x_lo + 1 + 2 * m) as usize, (y_hi - y_lo + 1 + 2 * m) as usize);
    let mut sum = vec![0u64; w * h];
    let mut count = vec![0u32; w * h];
    for &(x, y, v) in hits {
        let i = (y - y_lo + m) as usize * w + (x - x_lo + m) as usize;
        sum[i] += v as u64;
        count[i] += 1;
    }
    let hit = BinaryMask::from_cells(w, h, count.iter().map(|&c| c > 0).collect());
    let mut value: Vec<Option<u8>> = (0..w * h)
        .map(|i| (count[i] > 0).then(|| ((sum[i] as f64) / count[i] as f64).round() as u8))
        .collect();
    let bridged = |x: i64, y: i64, dx: i64, dy: i64| {
        (1..=2).any(|a| hit.get(x - a * dx, y - a * dy)) && (1..=2).any(|b| hit.get(x + b * dx, y + b * dy)) && {
            // gap length along this direction is at most two cells
            let back = (1..=2).find(|&a| hit.get(x - a * dx, y - a * dy)).unwrap();
            let fwd = (1..=2).find(|&b| hit.get(x + b * dx, y + b * dy)).unwrap();
            back + fwd <= 3
        }
    };
    let mut filled = hit.clone();
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            if count[i] > 0 || !(bridged(x, y, 1, 0) || bridged(x, y, 0, 1)) {
                continue;
            }
            let nearest = (-2i64..=2)
                .flat_map(|dy| (-2i64..=2).map(move |dx| (dx, dy)))
                .filter(|&(dx, dy)| hit.get(x + dx, y + dy))
                .min_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx))
                .unwrap();
            let j = (y + nearest.1) as usize * w + (x + nearest.0) as usize;
            value[i] = value[j];
            filled.set(x as usize, y as usize, true);
        }
    }
    let image = image::GrayImage::from_fn(w as u32, h as u32, |x, y| image::Luma([value[y as usize * w + x as usize].unwrap_or(0)]));
    Unwrapped {
        image,
        mask: filled,
        origin: (x_lo - m, y_lo - m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorphConfig {
    /// Dilation applied to the contour distance before taking its gradient (pixels).
    pub delta_scale: usize,
    /// Largest scale in the stack; the maximum interior distance when unset.
    pub max_scale: Option<usize>,
    /// Half-window of the local quintic giving the branch-selector curvature, fraction of the perimeter.
    pub curvature_window: f64,
    /// Ridge threshold on `|phi - 1|` at scale zero.
    pub reference_threshold: f64,
    /// Contour and reference sample spacing (pixels).
    pub sample_step: f64,
    /// Dilate the axial coordinate by the minimising scale before scattering.
    pub s_dilation: bool,
    /// Empty border around the straightened raster.
    pub margin: usize,
}

impl Default for MorphConfig {
    fn default() -> Self {
        Self {
            delta_scale: 2,
            max_scale: None,
            curvature_window: 0.05,
            reference_threshold: 0.5,
            sample_step: 0.5,
            s_dilation: false,
            margin: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MorphResult<T> {
    /// Distance to the contour.
    pub contour_distance: ScalarField<T>,
    pub kref: KappaReference<T>,
    pub phi0: ScalarField<T>,
    pub sigma: ScalarField<T>,
    pub phi_min: ScalarField<T>,
    /// Ridge before smoothing.
    pub ridge: ReferenceCurve<T>,
    /// Smoothed ridge prolonged to the body boundary.
    pub reference: ReferenceCurve<T>,
    /// Arc length of the nearest reference sample.
    pub s0: ScalarField<T>,
    /// Signed distance to the reference.
    pub delta0: ScalarField<T>,
    pub unwrapped: Unwrapped,
    pub shape: StraightenedShape<T>,
    pub flags: Vec<String>,
}

/// Closed contour resampled at `step`, with matching arc lengths.
fn densify<T: Real>(contour: &Contour<T>, step: T) -> (Vec<Point<T>>, Vec<T>) {
    let mut ring = contour.points().to_vec();
    ring.push(ring[0]);
    let mut pts = resample_polyline(&ring, step);
    pts.pop();
    let arc = cumulative_chord(&pts);
    (pts, arc)
}

/// Half-widths per column of the straightened support, from the extreme
/// unrounded offsets of the pixels landing in each column.
fn column_profile<T: Real>(columns: &[(i64, T)]) -> StraightenedShape<T> {
    let lo = columns.iter().map(|c| c.0).min().unwrap_or(0);
    let hi = columns.iter().map(|c| c.0).max().unwrap_or(0);
    let mut ext = vec![(T::infinity(), T::neg_infinity()); (hi - lo + 1) as usize];
    for &(x, y) in columns {
        let e = &mut ext[(x - lo) as usize];
        *e = (e.0.min(y), e.1.max(y));
    }
    let half = T::of(0.5);
    let mut stations = vec![T::zero()];
    let mut half_widths = vec![T::zero()];
    for (k, &(a, b)) in ext.iter().enumerate() {
        let w = if a <= b { (b - a + T::one()) * half } else { T::zero() };
        stations.push(T::of_usize(k) + half);
        half_widths.push(w);
    }
    stations.push(T::of_usize(ext.len()));
    half_widths.push(T::zero());
    StraightenedShape { stations, half_widths }
}

/// Full morphological unwrapping of one body.
pub fn unwrap_morph<T: Real>(
    image: &image::GrayImage,
    mask: &BinaryMask,
    contour: &Contour<T>,
    cfg: &MorphConfig,
) -> Result<MorphResult<T>> {
    let step = T::of(cfg.sample_step);
    let mut flags = Vec::new();
    let (samples, arc) = densify(contour, step);
    let (contour_distance, contour_foot) = distance_and_footpoint(&samples, &arc, mask);
    let half_window = contour.perimeter() * T::of(cfg.curvature_window);
    let curv: Vec<T> = (0..contour.len())
        .map(|i| local_curvature(contour, i, half_window))
        .collect::<Result<_>>()?;
    let cl = contour.cumulative_length();
    let kref = KappaReference::from_footpoints(&contour_foot, |s| {
        let j = cl.partition_point(|&a| a <= s).max(1) - 1;
        curv[j]
    });
    let sign_edges = kref.sign_boundary().len();
    if sign_edges > 0 {
        flags.push(format!("{sign_edges} pixels on a curvature sign boundary"));
    }
    let phi0 = phi0_field(&dilate(&contour_distance, cfg.delta_scale));
    let max_scale = cfg
        .max_scale
        .unwrap_or_else(|| contour_distance.range().1.ceil().to_usize().unwrap_or(0));
    let stack = ScaleSpace::build(&phi0, &kref, max_scale);
    let (sigma, phi_min) = minimizing_scale(&stack)?;
    let ridge = reference_curve(&stack.levels[0], T::of(cfg.reference_threshold))?;
    if ridge.discarded_components > 0 {
        flags.push(format!("{} ridge components discarded", ridge.discarded_components));
    }
    let reference = extend_reference(&ridge, mask, step)?;
    let (delta0, s0) = curve_coordinates(&reference, mask);
    let zero = ScalarField::constant(mask, FieldUnits::Scale, T::zero());
    let used_sigma = if cfg.s_dilation { &sigma } else { &zero };
    let unwrapped = unwrap_image(image, &s0, &delta0, used_sigma, &reference, cfg.margin);
    let columns: Vec<(i64, T)> = mask
        .pixels()
        .map(|(x, y)| {
            let i = y * mask.width() + x;
            (s0.at(i).round().to_i64().unwrap_or(0), delta0.at(i))
        })
        .collect();
    let shape = column_profile(&columns);
    Ok(MorphResult {
        contour_distance,
        kref,
        phi0,
        sigma,
        phi_min,
        ridge,
        reference,
        s0,
        delta0,
        unwrapped,
        shape,
        flags,
    })
}
