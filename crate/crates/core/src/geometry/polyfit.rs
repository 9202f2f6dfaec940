//! Arc-length parameterised polynomial curves and their least-squares fit.
//!
//! The parameter is mapped to `u = 2 (s - s_start) / L - 1` before fitting so
//! the Vandermonde columns stay well scaled at the degrees used here
//! (up to 12). Coefficients live in the `u` domain; derivatives with respect
//! to `s` pick up the factor `2 / L`.

use serde::{Deserialize, Serialize};

use super::contour::Contour;
use super::point::Point;
use crate::{Error, Real, Result};

pub const MIN_DEGREE: usize = 3;
pub const MAX_DEGREE: usize = 12;
pub const DEGREE_RMS_TOLERANCE: f64 = 0.5;

/// Pair of polynomials `x(s)`, `y(s)` over `[s_start, s_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyCurve2D<T> {
    pub coeffs_x: Vec<T>,
    pub coeffs_y: Vec<T>,
    pub s_start: T,
    pub s_end: T,
}

/// Position, unit tangent, unit normal (tangent turned +90 degrees) and
/// signed curvature at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSample<T> {
    pub s: T,
    pub position: Point<T>,
    pub tangent: Point<T>,
    pub normal: Point<T>,
    pub curvature: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit<T> {
    pub curve: PolyCurve2D<T>,
    pub rms: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeChoice<T> {
    pub fit: Fit<T>,
    pub degree: usize,
    /// Set when no degree in range met the RMS tolerance.
    pub capped: bool,
}

/// Value, first and second derivative of a polynomial at `u` (Horner).
fn horner<T: Real>(c: &[T], u: T) -> (T, T, T) {
    let (mut p, mut d1, mut d2) = (T::zero(), T::zero(), T::zero());
    for &a in c.iter().rev() {
        d2 = d2 * u + d1 * T::of(2.0);
        d1 = d1 * u + p;
        p = p * u + a;
    }
    (p, d1, d2)
}

impl<T: Real> PolyCurve2D<T> {
    pub fn degree(&self) -> usize {
        self.coeffs_x.len() - 1
    }

    pub fn length(&self) -> T {
        self.s_end - self.s_start
    }

    #[inline]
    fn to_u(&self, s: T) -> T {
        T::of(2.0) * (s - self.s_start) / self.length() - T::one()
    }

    pub fn eval(&self, s: T) -> Point<T> {
        let u = self.to_u(s);
        Point::new(horner(&self.coeffs_x, u).0, horner(&self.coeffs_y, u).0)
    }

    /// First and second derivatives with respect to `s`.
    pub fn derivatives(&self, s: T) -> (Point<T>, Point<T>) {
        let u = self.to_u(s);
        let k = T::of(2.0) / self.length();
        let (_, x1, x2) = horner(&self.coeffs_x, u);
        let (_, y1, y2) = horner(&self.coeffs_y, u);
        (Point::new(x1 * k, y1 * k), Point::new(x2 * k * k, y2 * k * k))
    }

    pub fn frame_at(&self, s: T) -> Result<FrameSample<T>> {
        let (d1, d2) = self.derivatives(s);
        let speed = d1.norm();
        if speed < T::of(1e-9) {
            return Err(Error::SingularSpeed(s.f64()));
        }
        let tangent = d1 * (T::one() / speed);
        Ok(FrameSample {
            s,
            position: self.eval(s),
            tangent,
            normal: tangent.perp(),
            curvature: d1.cross(d2) / (speed * speed * speed),
        })
    }

    /// Samples at (approximately) uniform parameter spacing `step`, endpoints included.
    pub fn sample(&self, step: T) -> Vec<FrameSample<T>> {
        let n = (self.length() / step).round().to_usize().unwrap_or(1).max(1);
        (0..=n)
            .filter_map(|k| {
                let s = self.s_start + self.length() * T::of_usize(k) / T::of_usize(n);
                self.frame_at(s).ok()
            })
            .collect()
    }
}

/// Householder QR least squares for a tall `m x n` system stored row-major,
/// solved for several right-hand sides. Returns solutions and the ratio of
/// the largest to smallest |R_ii|.
fn qr_solve<T: Real>(mut a: Vec<T>, m: usize, n: usize, mut rhs: Vec<Vec<T>>) -> (Vec<Vec<T>>, T) {
    for k in 0..n {
        let mut norm = T::zero();
        for i in k..m {
            norm += a[i * n + k] * a[i * n + k];
        }
        let norm = norm.sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if a[k * n + k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| a[i * n + k]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..n {
            let dot: T = (k..m).map(|i| v[i - k] * a[i * n + j]).sum();
            let f = T::of(2.0) * dot / vnorm2;
            for i in k..m {
                a[i * n + j] -= f * v[i - k];
            }
        }
        for b in rhs.iter_mut() {
            let dot: T = (k..m).map(|i| v[i - k] * b[i]).sum();
            let f = T::of(2.0) * dot / vnorm2;
            for i in k..m {
                b[i] -= f * v[i - k];
            }
        }
    }
    let diag: Vec<T> = (0..n).map(|i| a[i * n + i].abs()).collect();
    let dmax = diag.iter().copied().fold(T::zero(), T::max);
    let dmin = diag.iter().copied().fold(T::infinity(), T::min);
    let cond = if dmin > T::zero() { dmax / dmin } else { T::infinity() };
    let sols = rhs
        .into_iter()
        .map(|b| {
            let mut x = vec![T::zero(); n];
            for i in (0..n).rev() {
                let mut acc = b[i];
                for j in i + 1..n {
                    acc -= a[i * n + j] * x[j];
                }
                x[i] = if a[i * n + i] != T::zero() { acc / a[i * n + i] } else { T::zero() };
            }
            x
        })
        .collect();
    (sols, cond)
}

/// Largest acceptable conditioning estimate for the scalar type.
fn condition_limit<T: Real>() -> T {
    T::of(1e-2) / T::epsilon()
}

/// Least-squares fit of `x(s)`, `y(s)` of the given degree through `points`
/// at the fixed parameters `s` (strictly increasing).
pub fn fit_polycurve<T: Real>(points: &[Point<T>], s: &[T], degree: usize) -> Result<Fit<T>> {
    let m = points.len();
    if degree == 0 || m < degree + 1 || s.len() != m {
        return Err(Error::TooFewPoints { degree, points: m });
    }
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("arc lengths must be strictly increasing".into()));
    }
    let mut curve = PolyCurve2D {
        coeffs_x: vec![],
        coeffs_y: vec![],
        s_start: s[0],
        s_end: s[m - 1],
    };
    let n = degree + 1;
    let mut a = Vec::with_capacity(m * n);
    for &si in s {
        let u = curve.to_u(si);
        let mut p = T::one();
        for _ in 0..n {
            a.push(p);
            p *= u;
        }
    }
    let bx = points.iter().map(|p| p.x).collect();
    let by = points.iter().map(|p| p.y).collect();
    let (mut sol, cond) = qr_solve(a, m, n, vec![bx, by]);
    if !(cond <= condition_limit::<T>()) {
        return Err(Error::IllConditioned { condition: cond.f64() });
    }
    curve.coeffs_y = sol.pop().unwrap();
    curve.coeffs_x = sol.pop().unwrap();
    let rms = residual_rms(&curve, points, s);
    Ok(Fit { curve, rms })
}

pub fn residual_rms<T: Real>(curve: &PolyCurve2D<T>, points: &[Point<T>], s: &[T]) -> T {
    let ss: T = points
        .iter()
        .zip(s)
        .map(|(p, &si)| p.distance_sq(curve.eval(si)))
        .sum();
    (ss / T::of_usize(points.len())).sqrt()
}

/// Smallest degree in `[MIN_DEGREE, MAX_DEGREE]` whose fit RMS is within
/// half a pixel; falls back to the highest degree that could be fitted.
pub fn choose_degree_for<T: Real>(points: &[Point<T>], s: &[T]) -> Result<DegreeChoice<T>> {
    let tol = T::of(DEGREE_RMS_TOLERANCE);
    let mut last = None;
    for degree in MIN_DEGREE..=MAX_DEGREE {
        match fit_polycurve(points, s, degree) {
            Ok(fit) if fit.rms <= tol => {
                return Ok(DegreeChoice {
                    fit,
                    degree,
                    capped: false,
                })
            }
            Ok(fit) => last = Some((fit, degree)),
            Err(e @ Error::TooFewPoints { .. }) if last.is_none() => return Err(e),
            Err(_) => break,
        }
    }
    let (fit, degree) = last.ok_or(Error::TooFewPoints {
        degree: MIN_DEGREE,
        points: points.len(),
    })?;
    Ok(DegreeChoice {
        fit,
        degree,
        capped: true,
    })
}

/// [`choose_degree_for`] over a contour's own points and arc lengths.
pub fn choose_degree<T: Real>(contour: &Contour<T>) -> Result<DegreeChoice<T>> {
    choose_degree_for(contour.points(), contour.cumulative_length())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_fit_exactly() {
        let pts: Vec<Point<f64>> = (0..20).map(|i| Point::new(2.0 + 0.6 * i as f64, 1.0 - 0.8 * i as f64)).collect();
        let s: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let fit = fit_polycurve(&pts, &s, 1).unwrap();
        assert!(fit.rms < 1e-9);
        let f = fit.curve.frame_at(7.3).unwrap();
        assert!(f.curvature.abs() < 1e-9);
    }

    #[test]
    fn square_system_interpolates() {
        let pts: Vec<Point<f64>> = vec![Point::new(0.0, 0.0), Point::new(1.0, 3.0), Point::new(4.0, -1.0), Point::new(2.0, 2.0)];
        let s = [0.0, 1.0, 2.5, 4.0];
        let fit = fit_polycurve(&pts, &s, 3).unwrap();
        assert!(fit.rms < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert!(matches!(fit_polycurve(&pts, &[0.0, 1.0], 3), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn works_in_f32() {
        let pts: Vec<Point<f32>> = (0..30).map(|i| Point::new(i as f32, (i as f32 * 0.1).sin() * 5.0)).collect();
        let s: Vec<f32> = crate::geometry::cumulative_chord(&pts);
        let fit = fit_polycurve(&pts, &s, 5).unwrap();
        assert!(fit.rms < 0.05);
    }

    #[test]
    fn straight_band_edge_uses_minimum_degree() {
        let c = Contour::new((0..100).map(|i| Point::new(i as f64, 10.0)).collect(), false);
        let choice = choose_degree(&c).unwrap();
        assert_eq!(choice.degree, MIN_DEGREE);
        assert!(!choice.capped);
    }
}
