//! Neutral-line unwrapping: tail/head landmarks, contour split, matched
//! cross sections and the straightened width profile.

use serde::{Deserialize, Serialize};

use crate::geometry::{
    choose_degree_for, cumulative_chord, fit_polycurve, BinaryMask, Contour, FrameSample, Point,
    PolyCurve2D,
};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeutralConfig {
    /// Line-fit window on each side of a tail candidate, as a fraction of the perimeter.
    pub tail_window: f64,
    /// Candidate window on part II, as a fraction of the perimeter.
    pub k_window: f64,
    /// Sample spacing on part I (pixels).
    pub sparse_step: f64,
    /// Sample spacing on part II (pixels).
    pub dense_step: f64,
    /// Added to every chord length: boundary pixel centres sit half a pixel inside the body edge.
    pub width_correction: f64,
    /// Allowed head position, as fractions of the perimeter from the tail.
    pub head_range: (f64, f64),
    /// Half-window of the local quintic used for head curvature, fraction of the perimeter.
    pub head_fit_window: f64,
    /// Best matches with a larger angle mismatch (radians) are treated as gaps.
    pub max_delta_phi: f64,
    /// End the neutral line where its prolongation leaves the body instead of
    /// at the tail and head contour points.
    pub prolong_ends: bool,
}

impl Default for NeutralConfig {
    fn default() -> Self {
        Self {
            tail_window: 0.05,
            k_window: 0.05,
            sparse_step: 3.0,
            dense_step: 1.0,
            width_correction: 1.0,
            head_range: (0.4, 0.6),
            head_fit_window: 0.05,
            max_delta_phi: 0.3,
            prolong_ends: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Landmarks {
    pub tail_index: usize,
    pub head_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection<T> {
    pub p_i: Point<T>,
    pub p_ii: Point<T>,
    pub midpoint: Point<T>,
    pub length: T,
    pub delta_phi: T,
    /// Index of the matched sample on part II.
    pub match_index: usize,
}

impl<T: Real> CrossSection<T> {
    pub fn new(p_i: Point<T>, p_ii: Point<T>, delta_phi: T, match_index: usize) -> Self {
        Self {
            p_i,
            p_ii,
            midpoint: (p_i + p_ii) * T::of(0.5),
            length: p_i.distance(p_ii),
            delta_phi,
            match_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralLine<T> {
    pub midpoints: Vec<Point<T>>,
    pub cumulative_length: Vec<T>,
}

impl<T: Real> NeutralLine<T> {
    pub fn length(&self) -> T {
        self.cumulative_length.last().copied().unwrap_or_else(T::zero)
    }
}

/// Unrolled body: axis stations with half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StraightenedShape<T> {
    pub stations: Vec<T>,
    pub half_widths: Vec<T>,
}

impl<T: Real> StraightenedShape<T> {
    pub fn length(&self) -> T {
        self.stations.last().copied().unwrap_or_else(T::zero)
    }

    /// Upper boundary `(station, +half_width)`.
    pub fn upper(&self) -> Vec<Point<T>> {
        self.stations.iter().zip(&self.half_widths).map(|(&x, &h)| Point::new(x, h)).collect()
    }

    /// Lower boundary `(station, -half_width)`.
    pub fn lower(&self) -> Vec<Point<T>> {
        self.stations.iter().zip(&self.half_widths).map(|(&x, &h)| Point::new(x, -h)).collect()
    }

    /// Half-width at station `x` by linear interpolation; zero outside.
    pub fn half_width_at(&self, x: T) -> T {
        let st = &self.stations;
        if st.is_empty() || x < st[0] || x > *st.last().unwrap() {
            return T::zero();
        }
        let j = st.partition_point(|&v| v <= x).clamp(1, st.len() - 1);
        let (a, b) = (st[j - 1], st[j]);
        let t = if b > a { (x - a) / (b - a) } else { T::zero() };
        self.half_widths[j - 1] * (T::one() - t) + self.half_widths[j] * t
    }

    /// Half-widths at unit stations `0, 1, .., floor(length)`.
    pub fn unit_profile(&self) -> Vec<T> {
        let n = self.length().floor().to_usize().unwrap_or(0);
        (0..=n).map(|i| self.half_width_at(T::of_usize(i))).collect()
    }

    /// Straightened body as a mask: axis along +x at row `margin + max half-width`.
    pub fn to_mask(&self, margin: usize) -> BinaryMask {
        let half = self
            .half_widths
            .iter()
            .fold(T::zero(), |a, &b| a.max(b))
            .f64()
            .ceil() as usize;
        let width = self.length().f64().ceil() as usize + 2 * margin + 1;
        let yc = (half + margin) as f64;
        BinaryMask::from_fn(width, 2 * (half + margin) + 1, |x, y| {
            let s = T::of(x as f64 - margin as f64);
            (y as f64 - yc).abs() <= self.half_width_at(s).f64()
        })
    }
}

/// Direction of the least-squares line through `origin` fitted to `pts`,
/// oriented towards them.
fn ray_direction<T: Real>(origin: Point<T>, pts: &[Point<T>]) -> Point<T> {
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    let mut mean = Point::new(T::zero(), T::zero());
    for p in pts {
        let d = *p - origin;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
        mean = mean + d;
    }
    let theta = T::of(0.5) * (T::of(2.0) * sxy).atan2(sxx - syy);
    let dir = Point::new(theta.cos(), theta.sin());
    if dir.dot(mean) < T::zero() {
        -dir
    } else {
        dir
    }
}

/// Arc of midpoints used for the end direction of a prolonged neutral line.
pub const END_DIRECTION_SPAN: f64 = 10.0;

/// Where the ray from `origin` along `dir` first reaches a background pixel,
/// walking in quarter-pixel steps.
pub fn prolong_to_boundary<T: Real>(mask: &BinaryMask, origin: Point<T>, dir: Point<T>) -> Point<T> {
    let step = T::of(0.25);
    let mut p = origin;
    for _ in 0..4 * (mask.width() + mask.height()) {
        let (x, y) = p.round_pixel();
        if !mask.get(x, y) {
            break;
        }
        p = p + dir * step;
    }
    p
}

/// Outward end of a midpoint chain: the first midpoint prolonged along the
/// line fitted to the midpoints within [`END_DIRECTION_SPAN`] of it.
fn prolonged_end<T: Real>(mask: &BinaryMask, mids: &[Point<T>]) -> Point<T> {
    let origin = mids[0];
    let near: Vec<Point<T>> = mids[1..]
        .iter()
        .copied()
        .take_while(|p| p.distance(origin) <= T::of(END_DIRECTION_SPAN))
        .collect();
    let near = if near.is_empty() { vec![mids[1]] } else { near };
    prolong_to_boundary(mask, origin, -ray_direction(origin, &near))
}

fn window_points<T: Real>(contour: &Contour<T>, window: T) -> usize {
    let mean = contour.perimeter() / T::of_usize(contour.len());
    (window / mean).ceil().to_usize().unwrap_or(5).max(5)
}

/// Interior angle in `[0, 2 pi)` at contour index `i` between least-squares
/// rays from the point, fitted to `w` points on either side.
fn angle_at<T: Real>(pts: &[Point<T>], i: usize, w: usize) -> T {
    let n = pts.len();
    let ahead: Vec<Point<T>> = (1..=w).map(|k| pts[(i + k) % n]).collect();
    let behind: Vec<Point<T>> = (1..=w).map(|k| pts[(i + n - k) % n]).collect();
    let f = ray_direction(pts[i], &ahead);
    let b = ray_direction(pts[i], &behind);
    let a = f.cross(b).atan2(f.dot(b));
    if a < T::zero() {
        a + T::of(2.0) * T::PI()
    } else {
        a
    }
}

/// Interior angle at each contour index, rays fitted to `window` of arc on either side.
pub fn interior_angles<T: Real>(contour: &Contour<T>, window: T) -> Vec<T> {
    let w = window_points(contour, window).min((contour.len() - 1) / 2);
    (0..contour.len()).map(|i| angle_at(contour.points(), i, w)).collect()
}

/// Index of the sharpest convex point: the smallest interior angle at
/// `window`, refined to the smallest angle at a third of the window within
/// one window of it (a coarse window that wraps around a nearby tip can
/// report a spuriously acute angle). Ties go to the lowest index.
pub fn detect_tail<T: Real>(contour: &Contour<T>, window: T) -> usize {
    let n = contour.len();
    let angles = interior_angles(contour, window);
    let mut coarse = 0;
    for (i, &a) in angles.iter().enumerate() {
        if a < angles[coarse] {
            coarse = i;
        }
    }
    let w = window_points(contour, window).min((n - 1) / 2);
    let fine_w = window_points(contour, window / T::of(3.0)).min((n - 1) / 2);
    let mut cand: Vec<usize> = (0..=2 * w).map(|k| (coarse + n + k - w) % n).collect();
    cand.sort_unstable();
    cand.dedup();
    let fine: Vec<T> = cand.iter().map(|&i| angle_at(contour.points(), i, fine_w)).collect();
    let mut best = 0;
    for (k, &a) in fine.iter().enumerate() {
        if a < fine[best] {
            best = k;
        }
    }
    cand[best]
}

/// Signed curvature at contour index `i` from a local quintic over `half_window` of arc.
pub fn local_curvature<T: Real>(contour: &Contour<T>, i: usize, half_window: T) -> Result<T> {
    let n = contour.len();
    let w = window_points(contour, half_window).max(8).min((n - 1) / 2);
    let idx: Vec<usize> = (0..=2 * w).map(|k| (i + n + k - w) % n).collect();
    let pts: Vec<Point<T>> = idx.iter().map(|&k| contour.points()[k]).collect();
    let s = cumulative_chord(&pts);
    let fit = fit_polycurve(&pts, &s, 5)?;
    Ok(fit.curve.frame_at(s[w])?.curvature)
}

/// Relative curvature tolerance within which head candidates count as tied.
pub const HEAD_TIE_TOLERANCE: f64 = 0.25;

/// Point of maximum convex curvature among indices whose forward arc
/// distance from `tail` lies within `range` (fractions of the perimeter).
/// Near-ties (a round cap) resolve to the middle of the contiguous run of
/// candidates within [`HEAD_TIE_TOLERANCE`] of the maximum.
pub fn detect_head<T: Real>(
    contour: &Contour<T>,
    tail: usize,
    range: (f64, f64),
    half_window: T,
) -> Result<usize> {
    let per = contour.perimeter();
    let (lo, hi) = (per * T::of(range.0), per * T::of(range.1));
    let n = contour.len();
    let mut cand: Vec<(usize, T)> = Vec::new();
    for i in (0..n).map(|k| (tail + k) % n) {
        let a = contour.arc_between(tail, i);
        if a < lo || a > hi {
            continue;
        }
        cand.push((i, local_curvature(contour, i, half_window)?));
    }
    let mut best = 0;
    for (k, c) in cand.iter().enumerate() {
        if c.1 > cand[best].1 {
            best = k;
        }
    }
    let Some(&(_, top)) = cand.get(best) else {
        return Err(Error::Invalid("empty head window".into()));
    };
    let floor = top - top.abs() * T::of(HEAD_TIE_TOLERANCE);
    let (mut first, mut last) = (best, best);
    while first > 0 && cand[first - 1].1 >= floor {
        first -= 1;
    }
    while last + 1 < cand.len() && cand[last + 1].1 >= floor {
        last += 1;
    }
    Ok(cand[(first + last) / 2].0)
}

#[derive(Debug, Clone)]
pub struct ContourPart<T> {
    pub curve: PolyCurve2D<T>,
    pub rms: T,
    pub degree_capped: bool,
    /// Frame samples ordered tail to head.
    pub samples: Vec<FrameSample<T>>,
}

fn fit_part<T: Real>(pts: &[Point<T>], step: T) -> Result<ContourPart<T>> {
    let s = cumulative_chord(pts);
    let choice = choose_degree_for(pts, &s)?;
    let samples = choice.fit.curve.sample(step);
    Ok(ContourPart {
        rms: choice.fit.rms,
        degree_capped: choice.capped,
        curve: choice.fit.curve,
        samples,
    })
}

/// Splits the closed contour at the landmarks into two open parts running
/// tail to head: part I forward along the contour (sparsely sampled), part II
/// backward (densely sampled).
pub fn split_contour<T: Real>(
    contour: &Contour<T>,
    marks: Landmarks,
    sparse_step: T,
    dense_step: T,
) -> Result<(ContourPart<T>, ContourPart<T>)> {
    if marks.tail_index == marks.head_index {
        return Err(Error::Invalid("tail and head coincide".into()));
    }
    let pts = contour.points();
    let first: Vec<Point<T>> = contour
        .walk(marks.tail_index, marks.head_index)
        .into_iter()
        .map(|i| pts[i])
        .collect();
    let mut second: Vec<Point<T>> = contour
        .walk(marks.head_index, marks.tail_index)
        .into_iter()
        .map(|i| pts[i])
        .collect();
    second.reverse();
    Ok((fit_part(&first, sparse_step)?, fit_part(&second, dense_step)?))
}

/// `|angle(r, t1) + angle(r, t2) - pi|` with unsigned angles.
pub fn delta_phi<T: Real>(r: Point<T>, t1: Point<T>, t2: Point<T>) -> T {
    (r.angle_to(t1) + r.angle_to(t2) - T::PI()).abs()
}

/// The same condition with both boundary tangents taken relative to the
/// local axis tangent. Used to validate matches against a known axis.
pub fn axis_relative_delta_phi<T: Real>(r: Point<T>, t1: Point<T>, t2: Point<T>, axis: Point<T>) -> T {
    let eps = T::of(1e-9);
    let rel = |t: Point<T>| {
        let d = t - axis;
        if d.norm() < eps {
            T::FRAC_PI_2()
        } else {
            r.angle_to(d)
        }
    };
    (rel(t1) + rel(t2) - T::PI()).abs()
}

/// True when every 1 px step strictly between `a` and `b` lands on a body pixel.
pub fn chord_inside<T: Real>(mask: &BinaryMask, a: Point<T>, b: Point<T>) -> bool {
    let len = a.distance(b);
    let steps = len.floor().to_usize().unwrap_or(0);
    (1..=steps).all(|k| {
        let t = T::of_usize(k) / len;
        if t >= T::one() {
            return true;
        }
        let (x, y) = a.lerp(b, t).round_pixel();
        mask.get(x, y)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSearch<T> {
    pub sections: Vec<CrossSection<T>>,
    /// Part I sample indices for which no interior candidate existed.
    pub gaps: Vec<usize>,
    /// Part I sample indices whose best match exceeded the mismatch limit.
    pub rejected: Vec<usize>,
    /// Part I sample indices dropped because a better section claimed the
    /// same part II point.
    pub displaced: Vec<usize>,
    /// Part I sample index of each emitted section.
    pub sources: Vec<usize>,
}

/// Matches each interior part-I sample to the part-II sample minimising
/// [`delta_phi`] among the next `k` candidates past the previous match.
/// Matches whose mismatch exceeds `max_delta_phi` are recorded as rejected
/// and do not advance the search.
pub fn find_cross_sections<T: Real>(
    part_i: &[FrameSample<T>],
    part_ii: &[FrameSample<T>],
    k: usize,
    mask: &BinaryMask,
    max_delta_phi: T,
) -> SectionSearch<T> {
    let k = k.max(1);
    let mut out = SectionSearch {
        sections: Vec::new(),
        gaps: Vec::new(),
        rejected: Vec::new(),
        displaced: Vec::new(),
        sources: Vec::new(),
    };
    if part_i.len() < 3 || part_ii.len() < 3 {
        return out;
    }
    let last_ii = part_ii.len() - 1;
    let min_chord = T::of(0.5);
    let mut d = 1;
    for (i, m) in part_i.iter().enumerate().take(part_i.len() - 1).skip(1) {
        let mut best: Option<(usize, T)> = None;
        for j in d..(d + k).min(last_ii) {
            let c = &part_ii[j];
            let r = m.position - c.position;
            if r.norm() < min_chord || !chord_inside(mask, c.position, m.position) {
                continue;
            }
            let dp = delta_phi(r, m.tangent, c.tangent);
            if best.map_or(true, |(_, b)| dp < b) {
                best = Some((j, dp));
            }
        }
        match best {
            Some((_, dp)) if dp > max_delta_phi => out.rejected.push(i),
            Some((j, dp)) => {
                d = j;
                // Sections never share a boundary point; keep the better match.
                if let Some(prev) = out.sections.last().filter(|c| c.match_index == j) {
                    if dp >= prev.delta_phi {
                        out.displaced.push(i);
                        continue;
                    }
                    out.displaced.push(out.sources.pop().unwrap());
                    out.sections.pop();
                }
                out.sections.push(CrossSection::new(m.position, part_ii[j].position, dp, j));
                out.sources.push(i);
            }
            None => out.gaps.push(i),
        }
    }
    out
}

/// Polyline through the section midpoints, bracketed by `ends` (tail, head)
/// when given. Coincident consecutive points are dropped.
pub fn build_neutral_line<T: Real>(
    sections: &[CrossSection<T>],
    ends: Option<(Point<T>, Point<T>)>,
) -> Result<NeutralLine<T>> {
    if sections.len() < 2 {
        return Err(Error::TooFewSections(sections.len()));
    }
    let mut pts = Vec::with_capacity(sections.len() + 2);
    if let Some((t, _)) = ends {
        pts.push(t);
    }
    pts.extend(sections.iter().map(|c| c.midpoint));
    if let Some((_, h)) = ends {
        pts.push(h);
    }
    let mut midpoints: Vec<Point<T>> = Vec::with_capacity(pts.len());
    for p in pts {
        if midpoints.last().map_or(true, |q: &Point<T>| q.distance(p) > T::of(1e-9)) {
            midpoints.push(p);
        }
    }
    let cumulative_length = cumulative_chord(&midpoints);
    Ok(NeutralLine {
        midpoints,
        cumulative_length,
    })
}

/// Unrolls the neutral line: station `i` sits at the neutral arc length of
/// midpoint `i` with half-width `widths[i] / 2`.
pub fn straighten<T: Real>(neutral: &NeutralLine<T>, widths: &[T]) -> Result<StraightenedShape<T>> {
    if widths.len() != neutral.midpoints.len() {
        return Err(Error::Invalid(format!(
            "{} widths for {} neutral points",
            widths.len(),
            neutral.midpoints.len()
        )));
    }
    Ok(StraightenedShape {
        stations: neutral.cumulative_length.clone(),
        half_widths: widths.iter().map(|&w| (w * T::of(0.5)).max(T::zero())).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct NeutralResult<T> {
    pub landmarks: Landmarks,
    pub search: SectionSearch<T>,
    pub neutral: NeutralLine<T>,
    pub shape: StraightenedShape<T>,
    /// Degrees chosen for parts I and II.
    pub degrees: (usize, usize),
    pub part_i: ContourPart<T>,
    pub part_ii: ContourPart<T>,
    pub flags: Vec<String>,
}

/// Full neutral-line unwrapping of one body.
pub fn unwrap_neutral<T: Real>(
    mask: &BinaryMask,
    contour: &Contour<T>,
    cfg: &NeutralConfig,
) -> Result<NeutralResult<T>> {
    let per = contour.perimeter();
    let mut flags = Vec::new();
    let tail = detect_tail(contour, per * T::of(cfg.tail_window));
    let angles = interior_angles(contour, per * T::of(cfg.tail_window));
    if angles[tail] > T::of(0.75) * T::PI() {
        flags.push("low-confidence tail: no acute end".to_string());
    }
    let head = detect_head(contour, tail, cfg.head_range, per * T::of(cfg.head_fit_window))?;
    let landmarks = Landmarks {
        tail_index: tail,
        head_index: head,
    };
    let (part_i, part_ii) = split_contour(contour, landmarks, T::of(cfg.sparse_step), T::of(cfg.dense_step))?;
    for (name, part) in [("I", &part_i), ("II", &part_ii)] {
        if part.degree_capped {
            flags.push(format!(
                "part {name}: degree capped at {} with rms {:.3}",
                part.curve.degree(),
                part.rms.f64()
            ));
        }
    }
    let k = (per * T::of(cfg.k_window) / T::of(cfg.dense_step))
        .round()
        .to_usize()
        .unwrap_or(1);
    let search = find_cross_sections(&part_i.samples, &part_ii.samples, k, mask, T::of(cfg.max_delta_phi));
    if !search.gaps.is_empty() {
        flags.push(format!("{} sections without interior candidates", search.gaps.len()));
    }
    if !search.rejected.is_empty() {
        flags.push(format!("{} sections above the mismatch limit", search.rejected.len()));
    }
    let pts = contour.points();
    let corr = T::of(cfg.width_correction);
    // terminal contour pixels sit the same half pixel inside the body as the sides
    let push = |end: Point<T>, toward: Option<Point<T>>| match toward.and_then(|k| (end - k).normalized(T::of(1e-9))) {
        Some(dir) => end + dir * (corr * T::of(0.5)),
        None => end,
    };
    let mids: Vec<Point<T>> = search.sections.iter().map(|c| c.midpoint).collect();
    let (tp, hp) = if cfg.prolong_ends && mids.len() >= 2 {
        let rev: Vec<Point<T>> = mids.iter().rev().copied().collect();
        (prolonged_end(mask, &mids), prolonged_end(mask, &rev))
    } else {
        (
            push(pts[tail], mids.first().copied()),
            push(pts[head], mids.last().copied()),
        )
    };
    let neutral = build_neutral_line(&search.sections, Some((tp, hp)))?;
    let mut widths = vec![T::zero()];
    let mut last = tp;
    for c in &search.sections {
        if c.midpoint.distance(last) > T::of(1e-9) {
            widths.push(c.length + corr);
            last = c.midpoint;
        }
    }
    if hp.distance(last) > T::of(1e-9) {
        widths.push(T::zero());
    }
    let shape = straighten(&neutral, &widths)?;
    Ok(NeutralResult {
        landmarks,
        search,
        neutral,
        shape,
        degrees: (part_i.curve.degree(), part_ii.curve.degree()),
        part_i,
        part_ii,
        flags,
    })
}
