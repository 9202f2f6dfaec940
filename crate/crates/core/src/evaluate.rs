//! Scores for a recovered straight body against a known template.

use crate::geometry::BinaryMask;

/// Mirror image about the vertical centre line.
fn flipped(m: &BinaryMask) -> BinaryMask {
    let w = m.width();
    BinaryMask::from_fn(w, m.height(), |x, y| m.get((w - 1 - x) as i64, y as i64))
}

fn centroid(m: &BinaryMask) -> (f64, f64) {
    let n = m.area().max(1) as f64;
    let (sx, sy) = m.pixels().fold((0.0, 0.0), |(a, b), (x, y)| (a + x as f64, b + y as f64));
    (sx / n, sy / n)
}

fn overlap(a: &BinaryMask, b: &BinaryMask, dx: i64, dy: i64) -> f64 {
    let inter = a.pixels().filter(|&(x, y)| b.get(x as i64 + dx, y as i64 + dy)).count();
    let uni = a.area() + b.area() - inter;
    if uni == 0 {
        1.0
    } else {
        inter as f64 / uni as f64
    }
}

/// Best intersection over union of two masks over integer translations
/// within `search` pixels of centroid alignment, with and without a
/// left-right flip of `a`.
pub fn aligned_iou(a: &BinaryMask, b: &BinaryMask, search: i64) -> f64 {
    let mut best: f64 = 0.0;
    for m in [a.clone(), flipped(a)] {
        let (ca, cb) = (centroid(&m), centroid(b));
        let (ox, oy) = ((cb.0 - ca.0).round() as i64, (cb.1 - ca.1).round() as i64);
        for dy in -search..=search {
            for dx in -search..=search {
                best = best.max(overlap(&m, b, ox + dx, oy + dy));
            }
        }
    }
    best
}

/// Foreground count of every column between the first and last occupied one.
pub fn column_widths(m: &BinaryMask) -> Vec<f64> {
    let counts: Vec<usize> = (0..m.width())
        .map(|x| (0..m.height()).filter(|&y| m.get(x as i64, y as i64)).count())
        .collect();
    let Some(lo) = counts.iter().position(|&c| c > 0) else {
        return Vec::new();
    };
    let hi = counts.iter().rposition(|&c| c > 0).unwrap();
    counts[lo..=hi].iter().map(|&c| c as f64).collect()
}

/// Mean absolute difference between two width profiles sampled at unit
/// stations, relative to the mean truth width, minimised over integer
/// shifts and reversal of `recovered`. Stations covered by only one profile
/// count with the other taken as zero.
pub fn profile_error(recovered: &[f64], truth: &[f64]) -> f64 {
    let mean_truth = truth.iter().sum::<f64>() / truth.len().max(1) as f64;
    if mean_truth <= 0.0 {
        return f64::INFINITY;
    }
    let reversed: Vec<f64> = recovered.iter().rev().copied().collect();
    let (n, m) = (recovered.len() as i64, truth.len() as i64);
    let mut best = f64::INFINITY;
    for r in [recovered, &reversed[..]] {
        for d in -n..=m {
            let lo = d.min(0);
            let hi = (d + n).max(m);
            let mut acc = 0.0;
            for t in lo..hi {
                let a = if (d..d + n).contains(&t) { r[(t - d) as usize] } else { 0.0 };
                let b = if (0..m).contains(&t) { truth[t as usize] } else { 0.0 };
                acc += (a - b).abs();
            }
            best = best.min(acc / m as f64 / mean_truth);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_profiles_have_zero_error() {
        let p = [0.0, 3.0, 4.0, 4.0, 2.0];
        assert_eq!(profile_error(&p, &p), 0.0);
        let r: Vec<f64> = p.iter().rev().copied().collect();
        assert_eq!(profile_error(&r, &p), 0.0);
    }

    #[test]
    fn column_widths_of_rectangle() {
        let a = BinaryMask::from_fn(10, 8, |x, y| (2..6).contains(&x) && (1..4).contains(&y));
        assert_eq!(column_widths(&a), vec![3.0; 4]);
    }

    #[test]
    fn shifted_mask_aligns() {
        let a = BinaryMask::from_fn(30, 20, |x, y| (3..20).contains(&x) && (4..9).contains(&y));
        let b = BinaryMask::from_fn(30, 20, |x, y| (8..25).contains(&x) && (10..15).contains(&y));
        assert_eq!(aligned_iou(&a, &b, 2), 1.0);
    }
}
