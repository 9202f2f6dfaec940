use super::point::Point;
use crate::Real;

/// Uniform bucket grid over a point set for exact nearest-point queries.
#[derive(Debug, Clone)]
pub struct PointGrid<T> {
    points: Vec<Point<T>>,
    cell: T,
    origin: Point<T>,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl<T: Real> PointGrid<T> {
    pub fn new(points: Vec<Point<T>>, cell: T) -> Self {
        let (mut lo, mut hi) = (
            Point::new(T::infinity(), T::infinity()),
            Point::new(T::neg_infinity(), T::neg_infinity()),
        );
        for p in &points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if points.is_empty() {
            lo = Point::default();
            hi = Point::default();
        }
        let cols = ((hi.x - lo.x) / cell).floor().to_usize().unwrap_or(0) + 1;
        let rows = ((hi.y - lo.y) / cell).floor().to_usize().unwrap_or(0) + 1;
        let mut buckets = vec![Vec::new(); cols * rows];
        for (i, p) in points.iter().enumerate() {
            let (c, r) = Self::cell_of(lo, cell, cols, rows, *p);
            buckets[r * cols + c].push(i);
        }
        Self {
            points,
            cell,
            origin: lo,
            cols,
            rows,
            buckets,
        }
    }

    fn cell_of(origin: Point<T>, cell: T, cols: usize, rows: usize, p: Point<T>) -> (usize, usize) {
        let c = ((p.x - origin.x) / cell).floor().to_i64().unwrap_or(0).clamp(0, cols as i64 - 1);
        let r = ((p.y - origin.y) / cell).floor().to_i64().unwrap_or(0).clamp(0, rows as i64 - 1);
        (c as usize, r as usize)
    }

    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    /// Index and squared distance of the nearest point; ties resolve to the
    /// smaller index.
    pub fn nearest(&self, q: Point<T>) -> Option<(usize, T)> {
        if self.points.is_empty() {
            return None;
        }
        // fractional cell coordinates (may be outside the grid)
        let fx = ((q.x - self.origin.x) / self.cell).floor().to_i64().unwrap_or(0);
        let fy = ((q.y - self.origin.y) / self.cell).floor().to_i64().unwrap_or(0);
        let (cols, rows) = (self.cols as i64, self.rows as i64);
        let mut best: Option<(usize, T)> = None;
        let max_ring = (fx.abs() + fy.abs() + cols + rows) as usize;
        for ring in 0..=max_ring {
            let ring_i = ring as i64;
            // every point in this ring is at least (ring - 1) cells away
            if let Some((_, d2)) = best {
                let gap = self.cell * T::of((ring_i - 1).max(0) as f64);
                if gap * gap > d2 {
                    break;
                }
            }
            for cy in fy - ring_i..=fy + ring_i {
                if cy < 0 || cy >= rows {
                    continue;
                }
                let edge_row = cy == fy - ring_i || cy == fy + ring_i;
                let step = if edge_row { 1 } else { 2 * ring_i.max(1) };
                let mut cx = fx - ring_i;
                while cx <= fx + ring_i {
                    if cx >= 0 && cx < cols {
                        for &i in &self.buckets[(cy * cols + cx) as usize] {
                            let d2 = self.points[i].distance_sq(q);
                            best = match best {
                                Some((bi, bd)) if bd < d2 || (bd == d2 && bi < i) => Some((bi, bd)),
                                _ => Some((i, d2)),
                            };
                        }
                    }
                    cx += step;
                }
            }
        }
        best
    }

    /// All indices within `radius` of `q`.
    pub fn within(&self, q: Point<T>, radius: T) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let lo = Self::cell_of(self.origin, self.cell, self.cols, self.rows, q - Point::new(radius, radius));
        let hi = Self::cell_of(self.origin, self.cell, self.cols, self.rows, q + Point::new(radius, radius));
        for cy in lo.1..=hi.1 {
            for cx in lo.0..=hi.0 {
                for &i in &self.buckets[cy * self.cols + cx] {
                    if self.points[i].distance_sq(q) <= r2 {
                        out.push(i);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
