//! Forward deformation model: straight templates bent along a prescribed
//! curvature profile, with the ground truth needed for round-trip checks.
//!
//! The body is `{ mu(s) + d n(s) : 0 <= s <= L, |d| <= w(s)/2 }` where
//! `mu` is the unit-speed axis integrated from `kappa(s)` and `w` the
//! template width including its caps. Cross sections stay straight and
//! perpendicular to the axis by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{extract_contour, BinaryMask, Contour, Point, PointGrid};
use crate::{Error, Result};

/// Largest allowed `|kappa| * w / 2`.
pub const MAX_BEND_RATIO: f64 = 0.8;
/// Frame integration step (arc length, pixels).
pub const FRAME_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapStyle {
    /// Semicircular caps at both ends.
    Round,
    /// Square ends.
    Flat,
    /// Pointed tail at `s = 0` and a round head at `s = L`.
    Taper,
}

/// Undeformed body: axis length and width profile sampled at unit stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub length: f64,
    /// Width before cap shaping at stations `0, 1, ..`; the last station is `length`.
    pub widths: Vec<f64>,
    pub cap: CapStyle,
}

impl Template {
    pub fn new(length: f64, width: impl Fn(f64) -> f64, cap: CapStyle) -> Result<Self> {
        if !(length >= 10.0) {
            return Err(Error::InvalidProfile(format!("length {length} below 10 px")));
        }
        let n = length.ceil() as usize;
        let widths: Vec<f64> = (0..=n).map(|i| width((i as f64).min(length))).collect();
        if let Some(w) = widths.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidProfile(format!("non-positive width {w}")));
        }
        let max = widths.iter().cloned().fold(0.0, f64::max);
        if max >= length / 3.0 {
            return Err(Error::InvalidProfile(format!(
                "max width {max} is not below a third of the length {length}"
            )));
        }
        Ok(Self { length, widths, cap })
    }

    pub fn constant(length: f64, width: f64, cap: CapStyle) -> Result<Self> {
        Self::new(length, |_| width, cap)
    }

    /// Linear taper from `start` to `end` width.
    pub fn linear(length: f64, start: f64, end: f64, cap: CapStyle) -> Result<Self> {
        Self::new(length, |s| start + (end - start) * s / length, cap)
    }

    fn raw_width(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length);
        let i = (s.floor() as usize).min(self.widths.len() - 1);
        let j = (i + 1).min(self.widths.len() - 1);
        let t = s - i as f64;
        self.widths[i] * (1.0 - t) + self.widths[j] * t
    }

    /// Full width at axis position `s` including cap shaping; zero outside `[0, L]`.
    pub fn width_at(&self, s: f64) -> f64 {
        if !(0.0..=self.length).contains(&s) {
            return 0.0;
        }
        let raw = self.raw_width(s);
        let round = |d: f64, end_width: f64| {
            let r = end_width / 2.0;
            if d < r {
                2.0 * (r * r - (r - d) * (r - d)).max(0.0).sqrt()
            } else {
                f64::INFINITY
            }
        };
        let tail = self.length - s;
        let cap = match self.cap {
            CapStyle::Flat => f64::INFINITY,
            CapStyle::Round => round(s, self.raw_width(0.0)).min(round(tail, self.raw_width(self.length))),
            CapStyle::Taper => {
                let t = 2.0 * self.raw_width(0.0);
                let taper = if s < t { raw * s / t } else { f64::INFINITY };
                taper.min(round(tail, self.raw_width(self.length)))
            }
        };
        raw.min(cap)
    }

    pub fn max_width(&self) -> f64 {
        self.widths.iter().cloned().fold(0.0, f64::max)
    }

    /// Capped widths at unit stations `0..=floor(L)`.
    pub fn width_profile(&self) -> Vec<f64> {
        (0..=self.length.floor() as usize).map(|i| self.width_at(i as f64)).collect()
    }

    /// Area of the continuous body (trapezoid rule at 0.25 px).
    pub fn area(&self) -> f64 {
        let n = (self.length / 0.25).ceil() as usize;
        let h = self.length / n as f64;
        (0..n)
            .map(|k| 0.5 * h * (self.width_at(k as f64 * h) + self.width_at((k + 1) as f64 * h)))
            .sum()
    }
}

/// One polynomial piece of a curvature profile, valid from `start` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendPiece {
    pub start: f64,
    /// `kappa(s) = sum_k coeffs[k] * (s - start)^k`.
    pub coeffs: Vec<f64>,
}

/// Piecewise polynomial curvature along the axis (1/pixels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendProfile {
    pub pieces: Vec<BendPiece>,
}

impl BendProfile {
    pub fn straight() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(kappa: f64) -> Self {
        Self {
            pieces: vec![BendPiece {
                start: 0.0,
                coeffs: vec![kappa],
            }],
        }
    }

    /// Piecewise-constant curvature: `(start, kappa)` pairs.
    pub fn steps(steps: &[(f64, f64)]) -> Self {
        let mut pieces: Vec<BendPiece> = steps
            .iter()
            .map(|&(start, k)| BendPiece {
                start,
                coeffs: vec![k],
            })
            .collect();
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        Self { pieces }
    }

    /// Parses `"k"` (constant) or `"start:c0,c1,..;start:c0,.."`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |m: &str| Error::Invalid(format!("kappa spec {spec:?}: {m}"));
        let spec_t = spec.trim();
        if let Ok(k) = spec_t.parse::<f64>() {
            return Ok(Self::constant(k));
        }
        let mut pieces = Vec::new();
        for part in spec_t.split(';').filter(|p| !p.trim().is_empty()) {
            let (start, coeffs) = part.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let start: f64 = start.trim().parse().map_err(|_| bad("bad start"))?;
            let coeffs = coeffs
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| bad("bad coefficient")))
                .collect::<Result<Vec<_>>>()?;
            if coeffs.is_empty() {
                return Err(bad("empty piece"));
            }
            pieces.push(BendPiece { start, coeffs });
        }
        if pieces.is_empty() {
            return Err(bad("no pieces"));
        }
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        Ok(Self { pieces })
    }

    pub fn kappa(&self, s: f64) -> f64 {
        let piece = self
            .pieces
            .iter()
            .rev()
            .find(|p| p.start <= s)
            .unwrap_or(&self.pieces[0]);
        let d = s - piece.start;
        piece.coeffs.iter().rev().fold(0.0, |acc, &c| acc * d + c)
    }
}

/// Ground truth recorded alongside a synthetic body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub length: f64,
    /// Axis points at unit stations (plus the end point).
    pub axis: Vec<Point<f64>>,
    pub stations: Vec<f64>,
    /// Full capped width per station.
    pub widths: Vec<f64>,
    /// Unit normal per station.
    pub normals: Vec<Point<f64>>,
    pub kappa: BendProfile,
    pub cap: CapStyle,
    pub seed: Option<u64>,
}

impl GroundTruth {
    /// Axis point and unit normal at arc length `s` (linear between stations).
    pub fn frame(&self, s: f64) -> (Point<f64>, Point<f64>) {
        let st = &self.stations;
        let s = s.clamp(0.0, self.length);
        let j = st.partition_point(|&v| v <= s).clamp(1, st.len() - 1);
        let t = (s - st[j - 1]) / (st[j] - st[j - 1]);
        let n = self.normals[j - 1].lerp(self.normals[j], t);
        let n = n.normalized(1e-12).unwrap_or(self.normals[j]);
        (self.axis[j - 1].lerp(self.axis[j], t), n)
    }

    /// Full width at arc length `s` (linear between stations).
    pub fn width(&self, s: f64) -> f64 {
        let st = &self.stations;
        if !(0.0..=self.length).contains(&s) {
            return 0.0;
        }
        let j = st.partition_point(|&v| v <= s).clamp(1, st.len() - 1);
        let t = (s - st[j - 1]) / (st[j] - st[j - 1]);
        self.widths[j - 1] * (1.0 - t) + self.widths[j] * t
    }

    /// True section through `p`: the arc length `s` with `p - mu(s)` along
    /// `n(s)`, and the signed offset `d`. Picks the root with the smallest `|d|`.
    pub fn section_through(&self, p: Point<f64>) -> Option<(f64, f64)> {
        let g = |s: f64| {
            let (m, n) = self.frame(s);
            let t = Point::new(n.y, -n.x);
            ((p - m).dot(t), (p - m).dot(n))
        };
        let step = 0.25;
        let count = (self.length / step).ceil() as usize;
        let mut best: Option<(f64, f64)> = None;
        let mut prev = (0.0, g(0.0));
        for k in 1..=count {
            let s = (k as f64 * step).min(self.length);
            let cur = g(s);
            if prev.1 .0 == 0.0 || prev.1 .0.signum() != cur.0.signum() {
                let (mut a, mut b) = (prev.0, s);
                for _ in 0..40 {
                    let mid = 0.5 * (a + b);
                    if g(mid).0.signum() == g(a).0.signum() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let root = 0.5 * (a + b);
                let d = g(root).1;
                if best.map_or(true, |(_, bd)| d.abs() < bd.abs()) {
                    best = Some((root, d));
                }
            }
            prev = (s, cur);
        }
        best
    }

    /// Section endpoints `(mu + w/2 n, mu - w/2 n)` per station.
    pub fn sections(&self) -> Vec<(Point<f64>, Point<f64>)> {
        self.axis
            .iter()
            .zip(&self.normals)
            .zip(&self.widths)
            .map(|((&m, &n), &w)| (m + n * (w / 2.0), m - n * (w / 2.0)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthBody {
    pub mask: BinaryMask,
    pub truth: GroundTruth,
}

/// Straight body along +x with the axis on a pixel row.
pub fn make_template(template: &Template, margin: usize) -> SynthBody {
    let half = (template.max_width() / 2.0).ceil() as usize;
    let width = template.length.ceil() as usize + 2 * (margin + half) + 1;
    let height = 2 * (half + margin) + 1;
    let (x0, yc) = ((half + margin) as f64, (half + margin) as f64);
    let mask = BinaryMask::from_fn(width, height, |x, y| {
        let s = x as f64 - x0;
        (0.0..=template.length).contains(&s) && (y as f64 - yc).abs() <= template.width_at(s) / 2.0
    });
    let stations = unit_stations(template.length);
    let truth = GroundTruth {
        length: template.length,
        axis: stations.iter().map(|&s| Point::new(x0 + s, yc)).collect(),
        widths: stations.iter().map(|&s| template.width_at(s)).collect(),
        normals: vec![Point::new(0.0, 1.0); stations.len()],
        stations,
        kappa: BendProfile::straight(),
        cap: template.cap,
        seed: None,
    };
    SynthBody { mask, truth }
}

fn unit_stations(length: f64) -> Vec<f64> {
    let mut s: Vec<f64> = (0..=length.floor() as usize).map(|i| i as f64).collect();
    if length - *s.last().unwrap() > 1e-9 {
        s.push(length);
    }
    s
}

/// Unit-speed planar frame integrated with RK4 from heading +x at the origin.
/// Returns positions and headings at `n + 1` evenly spaced stations.
fn integrate_frame(profile: &BendProfile, length: f64) -> (Vec<f64>, Vec<Point<f64>>, Vec<f64>) {
    let n = (length / FRAME_STEP).ceil() as usize;
    let h = length / n as f64;
    let f = |s: f64, th: f64| (th.cos(), th.sin(), profile.kappa(s));
    let (mut x, mut y, mut th) = (0.0, 0.0, 0.0);
    let mut ss = vec![0.0];
    let mut pts = vec![Point::new(0.0, 0.0)];
    let mut ths = vec![0.0];
    for k in 0..n {
        let s = k as f64 * h;
        let k1 = f(s, th);
        let k2 = f(s + h / 2.0, th + h / 2.0 * k1.2);
        let k3 = f(s + h / 2.0, th + h / 2.0 * k2.2);
        let k4 = f(s + h, th + h * k3.2);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        th += h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
        ss.push((k + 1) as f64 * h);
        pts.push(Point::new(x, y));
        ths.push(th);
    }
    (ss, pts, ths)
}

/// Bends `template` along `profile` and rasterises the result.
///
/// A pixel belongs to the body when its projection `(s, d)` onto the axis
/// satisfies `0 <= s <= L` and `|d| <= w(s)/2`. Fails with
/// [`Error::SelfOverlap`] when the bend ratio exceeds [`MAX_BEND_RATIO`] or
/// distant parts of the body land on the same pixel.
pub fn bend(template: &Template, profile: &BendProfile, margin: usize) -> Result<SynthBody> {
    let l = template.length;
    let mut worst = 0.0f64;
    let mut s = 0.0;
    while s <= l {
        worst = worst.max(profile.kappa(s).abs() * template.width_at(s) / 2.0);
        s += FRAME_STEP;
    }
    if worst > MAX_BEND_RATIO {
        return Err(Error::SelfOverlap(format!(
            "|kappa| w/2 reaches {worst:.3} (limit {MAX_BEND_RATIO})"
        )));
    }
    let (ss, raw_pts, ths) = integrate_frame(profile, l);
    let half = template.max_width() / 2.0;
    let (mut lo, mut hi) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
    for p in &raw_pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let m = margin as f64 + half.ceil();
    let shift = Point::new(m - lo.x, m - lo.y);
    let pts: Vec<Point<f64>> = raw_pts.iter().map(|&p| p + shift).collect();
    let width = (hi.x - lo.x + 2.0 * m).ceil() as usize + 1;
    let height = (hi.y - lo.y + 2.0 * m).ceil() as usize + 1;
    let grid = PointGrid::new(pts.clone(), 4.0);
    let tangent = |k: usize| Point::new(ths[k].cos(), ths[k].sin());
    let local_arc = std::f64::consts::PI * half + 2.0;
    let mut mask = BinaryMask::new(width, height);
    let mut overlap = None;
    for y in 0..height {
        for x in 0..width {
            let p = Point::new(x as f64, y as f64);
            let (k, d2) = grid.nearest(p).expect("axis has points");
            if d2.sqrt() > half + 1.0 {
                continue;
            }
            let v = p - pts[k];
            let (t, d) = (v.dot(tangent(k)), v.dot(tangent(k).perp()));
            let stretch = 1.0 - profile.kappa(ss[k]) * d;
            let s_est = ss[k] + t / stretch.max(0.05);
            if !(0.0..=l).contains(&s_est) || d.abs() > template.width_at(s_est) / 2.0 {
                continue;
            }
            mask.set(x, y, true);
            if overlap.is_none() {
                for j in grid.within(p, half) {
                    if (ss[j] - ss[k]).abs() > local_arc
                        && pts[j].distance(p) <= template.width_at(ss[j]) / 2.0
                    {
                        overlap = Some((x, y));
                        break;
                    }
                }
            }
        }
    }
    if let Some((x, y)) = overlap {
        return Err(Error::SelfOverlap(format!("distant parts meet at pixel ({x}, {y})")));
    }
    let stations = unit_stations(l);
    let interp = |s: f64| {
        let f = s / l * (ss.len() - 1) as f64;
        let i = (f.floor() as usize).min(ss.len() - 2);
        let t = f - i as f64;
        let th = ths[i] * (1.0 - t) + ths[i + 1] * t;
        (pts[i].lerp(pts[i + 1], t), Point::new(th.cos(), th.sin()).perp())
    };
    let (axis, normals): (Vec<_>, Vec<_>) = stations.iter().map(|&s| interp(s)).unzip();
    Ok(SynthBody {
        mask,
        truth: GroundTruth {
            length: l,
            axis,
            widths: stations.iter().map(|&s| template.width_at(s)).collect(),
            normals,
            stations,
            kappa: profile.clone(),
            cap: template.cap,
            seed: None,
        },
    })
}

/// Scanline even-odd fill of a closed polygon at pixel centres.
pub fn rasterize_polygon(poly: &[Point<f64>], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    let n = poly.len();
    let mut xs = Vec::new();
    for y in 0..height {
        let yc = y as f64;
        xs.clear();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y <= yc && b.y > yc) || (b.y <= yc && a.y > yc) {
                xs.push(a.x + (yc - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks(2) {
            if let [x0, x1] = pair {
                let start = x0.ceil().max(0.0) as usize;
                let end = x1.floor().min(width as f64 - 1.0);
                if end < 0.0 {
                    continue;
                }
                for x in start..=end as usize {
                    if (x as f64) >= *x0 {
                        mask.set(x, y, true);
                    }
                }
            }
        }
    }
    mask
}

/// Outward polygon between the boundary pixel centres of `contour` and the
/// next row of background centres, optionally perturbed.
fn offset_polygon(contour: &Contour<f64>, extra: &[f64]) -> Vec<Point<f64>> {
    let pts = contour.points();
    let n = pts.len();
    (0..n)
        .map(|i| {
            let t = pts[(i + 2) % n] - pts[(i + n - 2) % n];
            let outward = -t.normalized(1e-12).unwrap_or(Point::new(1.0, 0.0)).perp();
            // halfway to the next row of pixel centres along the normal
            let base = 0.5 * outward.x.abs().max(outward.y.abs());
            pts[i] + outward * (base + extra.get(i).copied().unwrap_or(0.0))
        })
        .collect()
}

/// Perturbs the boundary along its normal by smooth zero-mean noise of peak
/// `amplitude` pixels and re-rasterises. Deterministic for a given seed.
pub fn add_boundary_noise(mask: &BinaryMask, amplitude: f64, seed: u64) -> Result<BinaryMask> {
    if amplitude == 0.0 {
        return Ok(mask.clone());
    }
    if !(0.0..=2.0).contains(&amplitude) {
        return Err(Error::Invalid(format!("noise amplitude {amplitude} outside [0, 2]")));
    }
    let contour: Contour<f64> = extract_contour(mask)?;
    let n = contour.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = 2usize;
    let mut noise: Vec<f64> = (0..n)
        .map(|i| (0..=2 * w).map(|k| raw[(i + n + k - w) % n]).sum::<f64>() / (2 * w + 1) as f64)
        .collect();
    let mean = noise.iter().sum::<f64>() / n as f64;
    noise.iter_mut().for_each(|v| *v -= mean);
    let peak = noise.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak > 0.0 {
        noise.iter_mut().for_each(|v| *v *= amplitude / peak);
    }
    let poly = offset_polygon(&contour, &noise);
    let out = rasterize_polygon(&poly, mask.width(), mask.height());
    Ok(out.largest_component().fill_holes())
}

/// Rasterisation of the unperturbed half-pixel offset polygon; the zero
/// reference for [`add_boundary_noise`].
pub fn reference_rasterization(mask: &BinaryMask) -> Result<BinaryMask> {
    let contour: Contour<f64> = extract_contour(mask)?;
    Ok(rasterize_polygon(&offset_polygon(&contour, &[]), mask.width(), mask.height()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_band_area() {
        let t = Template::constant(200.0, 20.0, CapStyle::Flat).unwrap();
        let body = make_template(&t, 5);
        // 201 columns (0..=200) x 21 rows (|y| <= 10)
        assert_eq!(body.mask.area(), 201 * 21);
        assert!((t.area() - 4000.0).abs() < 1e-9);
    }

    #[test]
    fn taper_width_is_monotone() {
        let t = Template::linear(200.0, 20.0, 5.0, CapStyle::Flat).unwrap();
        let w = t.width_profile();
        assert!(w.windows(2).all(|p| p[1] <= p[0] + 1e-12));
    }

    #[test]
    fn area_matches_pixel_count() {
        let t = Template::constant(120.0, 16.0, CapStyle::Round).unwrap();
        let body = make_template(&t, 4);
        let (x0, yc) = (12.0, 12.0);
        let count = (0..body.mask.height())
            .flat_map(|y| (0..body.mask.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| {
                let s = x as f64 - x0;
                (0.0..=120.0).contains(&s) && (y as f64 - yc).abs() <= t.width_at(s) / 2.0
            })
            .count();
        assert_eq!(body.mask.area(), count);
    }

    #[test]
    fn invalid_profiles() {
        assert!(Template::constant(60.0, 25.0, CapStyle::Flat).is_err());
        assert!(Template::new(100.0, |s| 10.0 - s, CapStyle::Flat).is_err());
    }

    #[test]
    fn zero_curvature_bend_is_identity() {
        let t = Template::constant(150.0, 18.0, CapStyle::Round).unwrap();
        let a = make_template(&t, 6);
        let b = bend(&t, &BendProfile::straight(), 6).unwrap();
        assert_eq!((a.mask.width(), a.mask.height()), (b.mask.width(), b.mask.height()));
        assert!(a.mask.iou(&b.mask) >= 0.99, "{}", a.mask.iou(&b.mask));
    }

    #[test]
    fn quarter_annulus_area() {
        let (r, w) = (60.0, 20.0);
        let l = std::f64::consts::FRAC_PI_2 * r;
        let t = Template::constant(l, w, CapStyle::Flat).unwrap();
        let body = bend(&t, &BendProfile::constant(1.0 / r), 4).unwrap();
        let (ro, ri) = (r + w / 2.0, r - w / 2.0);
        let analytic = std::f64::consts::FRAC_PI_4 * (ro * ro - ri * ri);
        let area = body.mask.area() as f64;
        assert!((area - analytic).abs() / analytic < 0.03, "{area} vs {analytic}");
    }

    #[test]
    fn excessive_bend_overlaps() {
        let t = Template::constant(100.0, 20.0, CapStyle::Flat).unwrap();
        let err = bend(&t, &BendProfile::constant(0.09), 4).unwrap_err();
        assert!(matches!(err, Error::SelfOverlap(_)));
    }

    #[test]
    fn kappa_spec_parsing() {
        assert_eq!(BendProfile::parse("0.01").unwrap(), BendProfile::constant(0.01));
        let p = BendProfile::parse("0:0.01;100:-0.02,0.0001").unwrap();
        assert_eq!(p.kappa(50.0), 0.01);
        assert!((p.kappa(110.0) - (-0.02 + 0.001)).abs() < 1e-15);
        assert!(BendProfile::parse("x").is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let t = Template::constant(100.0, 16.0, CapStyle::Round).unwrap();
        let body = make_template(&t, 6);
        assert_eq!(add_boundary_noise(&body.mask, 0.0, 1).unwrap(), body.mask);
    }

    #[test]
    fn noise_is_deterministic() {
        let t = Template::constant(100.0, 16.0, CapStyle::Round).unwrap();
        let body = bend(&t, &BendProfile::constant(0.02), 6).unwrap();
        let a = add_boundary_noise(&body.mask, 1.0, 9).unwrap();
        let b = add_boundary_noise(&body.mask, 1.0, 9).unwrap();
        assert_eq!(a, b);
    }
}
