//! Boundary tracing and conditioning.
//!
//! The traced chain is repaired so that every pixel has exactly two
//! 8-neighbours in the chain, no spur or isolated pixel survives, and no three
//! consecutive pixels form a compact right angle.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::mask::{BinaryMask, NEIGHBORS8};
use super::point::{cumulative_chord, signed_area, Point};
use crate::{Error, Real, Result};

/// Smallest component accepted by [`extract_contour`].
pub const MIN_COMPONENT_PIXELS: usize = 64;

/// Ordered chain of pixel centres with arc-length bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour<T> {
    points: Vec<Point<T>>,
    cumulative_length: Vec<T>,
    closed: bool,
}

impl<T: Real> Contour<T> {
    pub fn new(points: Vec<Point<T>>, closed: bool) -> Self {
        let cumulative_length = cumulative_chord(&points);
        Self {
            points,
            cumulative_length,
            closed,
        }
    }

    pub fn from_pixels(pixels: &[(i64, i64)], closed: bool) -> Self {
        Self::new(
            pixels.iter().map(|&(x, y)| Point::from_pixel(x, y)).collect(),
            closed,
        )
    }

    #[inline]
    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    #[inline]
    pub fn cumulative_length(&self) -> &[T] {
        &self.cumulative_length
    }

    #[inline]
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total length, including the closing step for closed chains.
    pub fn perimeter(&self) -> T {
        let open = self.cumulative_length.last().copied().unwrap_or_else(T::zero);
        if self.closed && self.points.len() > 1 {
            open + self.points[self.points.len() - 1].distance(self.points[0])
        } else {
            open
        }
    }

    /// Forward arc distance from index `from` to index `to`, wrapping for closed chains.
    pub fn arc_between(&self, from: usize, to: usize) -> T {
        let s = &self.cumulative_length;
        if to >= from {
            s[to] - s[from]
        } else {
            self.perimeter() - s[from] + s[to]
        }
    }

    /// Indices from `from` to `to` inclusive walking forward (wrapping).
    pub fn walk(&self, from: usize, to: usize) -> Vec<usize> {
        let n = self.points.len();
        let mut out = vec![from];
        let mut i = from;
        while i != to {
            i = (i + 1) % n;
            out.push(i);
        }
        out
    }

    pub fn signed_area(&self) -> T {
        signed_area(&self.points)
    }
}

/// Moore-neighbour trace of the outer boundary of the component containing
/// the first foreground pixel in raster order. The chain is rotated so the
/// enclosed area is positive.
pub fn trace_boundary(mask: &BinaryMask) -> Vec<(i64, i64)> {
    let Some((sx, sy)) = mask.pixels().next() else {
        return Vec::new();
    };
    let start = (sx as i64, sy as i64);
    let dir_of = |from: (i64, i64), to: (i64, i64)| {
        let d = (to.0 - from.0, to.1 - from.1);
        NEIGHBORS8.iter().position(|&n| n == d).expect("adjacent")
    };
    let step = |cur: (i64, i64), back: (i64, i64)| -> Option<((i64, i64), (i64, i64))> {
        let k0 = dir_of(cur, back);
        for i in 1..=8 {
            let (dx, dy) = NEIGHBORS8[(k0 + i) % 8];
            let n = (cur.0 + dx, cur.1 + dy);
            if mask.get(n.0, n.1) {
                let (bx, by) = NEIGHBORS8[(k0 + i - 1) % 8];
                return Some((n, (cur.0 + bx, cur.1 + by)));
            }
        }
        None
    };
    let mut chain = vec![start];
    let mut cur = start;
    let mut back = (start.0 - 1, start.1);
    let limit = 4 * mask.area() + 16;
    for _ in 0..limit {
        let Some((next, nback)) = step(cur, back) else {
            break;
        };
        if cur == start && chain.len() > 1 && next == chain[1] {
            chain.pop();
            break;
        }
        chain.push(next);
        cur = next;
        back = nback;
    }
    if chain.len() > 1 && chain.last() == Some(&start) {
        chain.pop();
    }
    let pts: Vec<Point<f64>> = chain.iter().map(|&(x, y)| Point::from_pixel(x, y)).collect();
    if signed_area(&pts) < 0.0 {
        chain.reverse();
    }
    chain
}

fn is_diag(a: (i64, i64), b: (i64, i64)) -> bool {
    (a.0 - b.0).abs() == 1 && (a.1 - b.1).abs() == 1
}

fn is_4adj(a: (i64, i64), b: (i64, i64)) -> bool {
    (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
}

/// Number of other chain pixels in the 8-neighbourhood of each chain pixel.
pub fn neighbor_counts(chain: &[(i64, i64)]) -> Vec<usize> {
    let set: HashSet<(i64, i64)> = chain.iter().copied().collect();
    chain
        .iter()
        .map(|&(x, y)| {
            NEIGHBORS8
                .iter()
                .filter(|(dx, dy)| set.contains(&(x + dx, y + dy)))
                .count()
        })
        .collect()
}

/// Drops repeated pixels and spur tips with their repeated base until none
/// remain. Returns whether anything changed.
fn remove_spurs(c: &mut Vec<(i64, i64)>) -> bool {
    let mut changed = false;
    let mut i = 0;
    while c.len() >= 4 && i < c.len() {
        let n = c.len();
        let prev = c[(i + n - 1) % n];
        let cur = c[i];
        let next = c[(i + 1) % n];
        if prev == next {
            // spur tip: remove it and the repeated base
            let j = (i + 1) % n;
            if j > i {
                c.remove(j);
                c.remove(i);
            } else {
                c.remove(i);
                c.remove(j);
            }
            i = i.saturating_sub(2);
            changed = true;
        } else if prev == cur {
            c.remove(i);
            changed = true;
        } else {
            i += 1;
        }
    }
    changed
}

/// Drops duplicates and spurs, then deletes the corner pixel of every
/// compact right angle (first occurrence first), repeating until stable.
fn clean_chain(raw: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut c: Vec<(i64, i64)> = raw.to_vec();
    c.dedup();
    while c.len() > 1 && c.first() == c.last() {
        c.pop();
    }
    loop {
        remove_spurs(&mut c);
        let mut changed = false;
        let mut i = 0;
        while c.len() >= 4 && i < c.len() {
            let n = c.len();
            let prev = c[(i + n - 1) % n];
            let cur = c[i];
            let next = c[(i + 1) % n];
            if is_diag(prev, next) && is_4adj(prev, cur) && is_4adj(cur, next) {
                c.remove(i);
                changed = true;
                if remove_spurs(&mut c) {
                    i = 0;
                } else {
                    i = i.saturating_sub(1);
                }
            } else {
                i += 1;
            }
        }
        if !changed {
            break;
        }
    }
    c
}

/// Pixels breaking the two-neighbour rule: repeated pixels and pixels with
/// other than two chain neighbours.
fn chain_defects(c: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut seen = HashSet::new();
    let mut bad: Vec<(i64, i64)> = c.iter().filter(|p| !seen.insert(**p)).copied().collect();
    bad.extend(
        neighbor_counts(c)
            .into_iter()
            .zip(c)
            .filter(|&(k, _)| k != 2)
            .map(|(_, &p)| p),
    );
    bad
}

/// Repairs a closed 8-connected chain: drops duplicates and spurs, deletes
/// the corner pixel of every compact right angle (first occurrence first),
/// then audits the two-neighbour rule.
pub fn condition_chain(raw: &[(i64, i64)]) -> Result<Vec<(i64, i64)>> {
    let c = clean_chain(raw);
    if c.len() < 4 {
        return Err(Error::Unrepairable(format!("only {} pixels remain", c.len())));
    }
    let mut seen = HashSet::new();
    if let Some(p) = c.iter().find(|p| !seen.insert(**p)) {
        return Err(Error::Unrepairable(format!("pixel {p:?} visited twice")));
    }
    if let Some((i, k)) = neighbor_counts(&c)
        .into_iter()
        .enumerate()
        .find(|&(_, k)| k != 2)
    {
        return Err(Error::Unrepairable(format!(
            "pixel {:?} has {k} chain neighbours",
            c[i]
        )));
    }
    Ok(c)
}

/// [`condition_chain`] producing a closed [`Contour`].
pub fn condition_contour<T: Real>(raw: &[(i64, i64)]) -> Result<Contour<T>> {
    Ok(Contour::from_pixels(&condition_chain(raw)?, true))
}

/// Rounds of local mask repair tried by [`extract_contour`].
pub const MAX_REPAIR_ROUNDS: usize = 64;

/// Outer boundary of the single body in `mask`, conditioned and ordered with
/// positive enclosed area. Components smaller than
/// [`MIN_COMPONENT_PIXELS`] are discarded first. Features thinner than three
/// pixels cannot satisfy the two-neighbour rule; the offending boundary
/// pixels are removed from the body and the trace repeated, keeping the
/// largest remaining component.
pub fn extract_contour<T: Real>(mask: &BinaryMask) -> Result<Contour<T>> {
    let mut body = single_body(mask)?;
    let mut last = String::new();
    for _ in 0..MAX_REPAIR_ROUNDS {
        let chain = clean_chain(&trace_boundary(&body));
        if chain.len() < 4 {
            return Err(Error::Unrepairable(format!("only {} pixels remain", chain.len())));
        }
        let bad = chain_defects(&chain);
        if bad.is_empty() {
            return condition_contour(&chain);
        }
        last = format!("pixel {:?} breaks the two-neighbour rule", bad[0]);
        for (x, y) in bad {
            body.set(x as usize, y as usize, false);
        }
        body = body.largest_component().fill_holes();
        if body.area() < MIN_COMPONENT_PIXELS {
            return Err(Error::EmptyMask);
        }
    }
    Err(Error::Unrepairable(last))
}

/// The unique large component with interior holes filled.
pub fn single_body(mask: &BinaryMask) -> Result<BinaryMask> {
    let comps: Vec<Vec<usize>> = mask
        .components()
        .into_iter()
        .filter(|c| c.len() >= MIN_COMPONENT_PIXELS)
        .collect();
    match comps.len() {
        0 => Err(Error::EmptyMask),
        1 => Ok(mask.with_only(&comps[0]).fill_holes()),
        n => Err(Error::MultipleComponents(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> BinaryMask {
        BinaryMask::from_fn(n + 4, n + 4, |x, y| (2..n + 2).contains(&x) && (2..n + 2).contains(&y))
    }

    #[test]
    fn raw_trace_of_square_has_36_points() {
        let chain = trace_boundary(&square(10));
        assert_eq!(chain.len(), 36);
        let c = Contour::<f64>::from_pixels(&chain, true);
        assert!((c.perimeter() - 36.0).abs() < 1e-12);
        assert!(c.signed_area() > 0.0);
    }

    #[test]
    fn conditioned_square_loses_its_four_corners() {
        let c: Contour<f64> = extract_contour(&square(10)).unwrap();
        assert_eq!(c.len(), 32);
        let expect = 28.0 + 4.0 * 2f64.sqrt();
        assert!((c.perimeter() - expect).abs() < 1e-9);
    }

    #[test]
    fn single_pixel_is_empty() {
        let mut m = BinaryMask::new(5, 5);
        m.set(2, 2, true);
        assert_eq!(extract_contour::<f64>(&m).unwrap_err(), Error::EmptyMask);
    }

    #[test]
    fn two_bodies_are_rejected() {
        let m = BinaryMask::from_fn(40, 20, |x, y| (2..12).contains(&y) && ((2..12).contains(&x) || (20..30).contains(&x)));
        assert_eq!(extract_contour::<f64>(&m).unwrap_err(), Error::MultipleComponents(2));
    }

    #[test]
    fn clean_chain_is_unchanged() {
        let chain: Vec<(i64, i64)> = trace_boundary(&square(10));
        let clean = condition_chain(&chain).unwrap();
        assert_eq!(condition_chain(&clean).unwrap(), clean);
    }

    #[test]
    fn single_corner_is_removed() {
        // octagon-like ring with one compact right angle at (5, 0)
        let chain = vec![
            (1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (5, 1), (6, 2), (6, 3), (5, 4), (4, 5),
            (3, 5), (2, 5), (1, 4), (0, 3), (0, 2), (0, 1),
        ];
        let out = condition_chain(&chain).unwrap();
        assert_eq!(out.len(), chain.len() - 1);
        assert!(!out.contains(&(5, 0)));
    }

    #[test]
    fn disk_perimeter_close_to_circle() {
        let r = 20.0f64;
        let m = BinaryMask::from_fn(50, 50, |x, y| {
            let (dx, dy) = (x as f64 - 25.0, y as f64 - 25.0);
            dx * dx + dy * dy <= r * r
        });
        let c: Contour<f64> = extract_contour(&m).unwrap();
        let target = 2.0 * std::f64::consts::PI * r;
        assert!((c.perimeter() - target).abs() / target < 0.05, "{}", c.perimeter());
    }
}
