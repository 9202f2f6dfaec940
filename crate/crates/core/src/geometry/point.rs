use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::Real;

/// A point or vector in pixel coordinates (x to the right, y down the rows).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn from_pixel(x: i64, y: i64) -> Self {
        Self::new(T::of(x as f64), T::of(y as f64))
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn distance_sq(self, o: Self) -> T {
        (self - o).norm_sq()
    }

    /// Unit vector, or `None` when the length is below `eps`.
    pub fn normalized(self, eps: T) -> Option<Self> {
        let n = self.norm();
        (n > eps).then(|| self * (T::one() / n))
    }

    /// Rotation by +90 degrees.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    /// Unsigned angle to `o` in `[0, pi]`.
    #[inline]
    pub fn angle_to(self, o: Self) -> T {
        self.cross(o).abs().atan2(self.dot(o))
    }

    /// Nearest pixel index.
    #[inline]
    pub fn round_pixel(self) -> (i64, i64) {
        (
            self.x.round().to_i64().unwrap_or(i64::MIN),
            self.y.round().to_i64().unwrap_or(i64::MIN),
        )
    }

    pub fn cast<U: Real>(self) -> Point<U> {
        Point::new(U::of(self.x.f64()), U::of(self.y.f64()))
    }
}

impl<T: Real> Add for Point<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Point<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Point<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<T: Real> Neg for Point<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Cumulative chord length along `points`, starting at zero.
pub fn cumulative_chord<T: Real>(points: &[Point<T>]) -> Vec<T> {
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            acc += p.distance(points[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Polyline length (open).
pub fn polyline_length<T: Real>(points: &[Point<T>]) -> T {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Shoelace area; positive when the chain turns counter-clockwise in (x, y).
pub fn signed_area<T: Real>(points: &[Point<T>]) -> T {
    let n = points.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc += points[i].cross(points[(i + 1) % n]);
    }
    acc * T::of(0.5)
}

/// Resample an open polyline at (approximately) uniform arc-length `step`,
/// always keeping both endpoints.
pub fn resample_polyline<T: Real>(points: &[Point<T>], step: T) -> Vec<Point<T>> {
    if points.len() < 2 {
        return points.to_vec();
    }
    let s = cumulative_chord(points);
    let total = *s.last().unwrap();
    let n = (total / step).ceil().to_usize().unwrap_or(1).max(1);
    let mut out = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let target = total * T::of_usize(k) / T::of_usize(n);
        while seg + 2 < points.len() && s[seg + 1] < target {
            seg += 1;
        }
        let len = s[seg + 1] - s[seg];
        let t = if len > T::zero() {
            ((target - s[seg]) / len).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_is_unsigned() {
        let a = Point::new(1.0, 0.0);
        assert!((a.angle_to(Point::new(0.0, -1.0)) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((a.angle_to(Point::new(-1.0, 0.0)) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn resample_keeps_endpoints_and_spacing() {
        let pts: Vec<Point<f64>> = (0..=10).map(|i| Point::new(i as f64 * 3.0, 0.0)).collect();
        let r = resample_polyline(&pts, 0.5);
        assert_eq!(r.first(), pts.first());
        assert!((r.last().unwrap().x - 30.0).abs() < 1e-12);
        for w in r.windows(2) {
            assert!((w[0].distance(w[1]) - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn square_area_sign() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert_eq!(signed_area(&sq), 1.0);
    }
}
