//! Histogram valley segmentation of a dark body on a bright background.

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::geometry::BinaryMask;

/// Moving-average width applied to the histogram.
pub const SMOOTHING_BINS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub mask: BinaryMask,
    /// Pixels strictly below this level are foreground.
    pub threshold: u8,
    /// Set when the histogram had no valley below the background mode and
    /// the median was used instead.
    pub no_turning_point: bool,
}

pub fn histogram(img: &GrayImage) -> [usize; 256] {
    let mut h = [0usize; 256];
    for p in img.pixels() {
        h[p.0[0] as usize] += 1;
    }
    h
}

fn smoothed(h: &[usize; 256]) -> Vec<f64> {
    let r = (SMOOTHING_BINS / 2) as i64;
    (0..256i64)
        .map(|i| {
            let (lo, hi) = ((i - r).max(0), (i + r).min(255));
            (lo..=hi).map(|k| h[k as usize] as f64).sum::<f64>() / SMOOTHING_BINS as f64
        })
        .collect()
}

/// First valley of the smoothed histogram going down from the background
/// (most populated) level. A local minimum only counts once the histogram
/// below it climbs to at least twice its height plus one, so ripples on the
/// flank of the mode are passed over. `None` when no such rise follows.
pub fn lower_turning_point(h: &[usize; 256]) -> Option<u8> {
    let s = smoothed(h);
    let mode = (0..256).rev().max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
    let mut low = mode;
    for k in (0..mode).rev() {
        if s[k] < s[low] {
            low = k;
        } else if s[k] >= 2.0 * s[low] + 1.0 {
            // centre of a flat valley floor
            let mut j = low;
            while j > k + 1 && s[j - 1] == s[low] {
                j -= 1;
            }
            return Some(((j + low + 1) / 2) as u8);
        }
    }
    None
}

fn median(h: &[usize; 256]) -> u8 {
    let total: usize = h.iter().sum();
    let mut acc = 0;
    for (v, &c) in h.iter().enumerate() {
        acc += c;
        if 2 * acc >= total {
            return v as u8;
        }
    }
    255
}

/// Foreground below the lower turning point, cleaned by an opening and a
/// closing of radius 1.
pub fn segment_threshold(img: &GrayImage) -> Segmentation {
    let h = histogram(img);
    let (threshold, no_turning_point) = match lower_turning_point(&h) {
        Some(t) => (t, false),
        None => (median(&h), true),
    };
    let raw = BinaryMask::from_fn(img.width() as usize, img.height() as usize, |x, y| {
        img.get_pixel(x as u32, y as u32).0[0] < threshold
    });
    Segmentation {
        mask: raw.open(1).close(1),
        threshold,
        no_turning_point,
    }
}
