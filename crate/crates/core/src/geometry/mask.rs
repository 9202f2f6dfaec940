use serde::{Deserialize, Serialize};

/// 8-neighbourhood offsets in clockwise order (image rows grow downwards),
/// starting from west.
pub const NEIGHBORS8: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// Boolean raster; `true` marks body pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            cells: vec![false; width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), width * height, "cell count must match dimensions");
        Self {
            width,
            height,
            cells,
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                cells.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            cells,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Out-of-range coordinates read as background.
    #[inline]
    pub fn get(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.cells[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        let i = self.index(x, y);
        self.cells[i] = v;
    }

    pub fn area(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    pub fn touches_border(&self) -> bool {
        let (w, h) = (self.width, self.height);
        (0..w).any(|x| self.cells[x] || self.cells[(h - 1) * w + x])
            || (0..h).any(|y| self.cells[y * w] || self.cells[y * w + w - 1])
    }

    /// Copy surrounded by `pad` background pixels on every side.
    pub fn padded(&self, pad: usize) -> Self {
        let mut out = Self::new(self.width + 2 * pad, self.height + 2 * pad);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.cells[self.index(x, y)] {
                    out.set(x + pad, y + pad, true);
                }
            }
        }
        out
    }

    /// 8-connected foreground components as lists of flat indices.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.cells.len()];
        let mut comps = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.cells.len() {
            if !self.cells[start] || label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut comp = Vec::new();
            label[start] = id;
            stack.push(start);
            while let Some(i) = stack.pop() {
                comp.push(i);
                let (x, y) = ((i % self.width) as i64, (i / self.width) as i64);
                for (dx, dy) in NEIGHBORS8 {
                    let (nx, ny) = (x + dx, y + dy);
                    if self.get(nx, ny) {
                        let j = ny as usize * self.width + nx as usize;
                        if label[j] == usize::MAX {
                            label[j] = id;
                            stack.push(j);
                        }
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    /// Mask holding only the given flat indices.
    pub fn with_only(&self, indices: &[usize]) -> Self {
        let mut out = Self::new(self.width, self.height);
        for &i in indices {
            out.cells[i] = true;
        }
        out
    }

    /// Largest 8-connected component; empty mask when there is none.
    pub fn largest_component(&self) -> Self {
        let comps = self.components();
        match comps.iter().max_by_key(|c| c.len()) {
            Some(c) => self.with_only(c),
            None => Self::new(self.width, self.height),
        }
    }

    /// Sets every background pixel not 4-connected to the image border.
    pub fn fill_holes(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut outside = vec![false; w * h];
        let mut stack = Vec::new();
        for x in 0..w {
            stack.push((x, 0));
            stack.push((x, h - 1));
        }
        for y in 0..h {
            stack.push((0, y));
            stack.push((w - 1, y));
        }
        while let Some((x, y)) = stack.pop() {
            let i = y * w + x;
            if self.cells[i] || outside[i] {
                continue;
            }
            outside[i] = true;
            if x > 0 {
                stack.push((x - 1, y));
            }
            if x + 1 < w {
                stack.push((x + 1, y));
            }
            if y > 0 {
                stack.push((x, y - 1));
            }
            if y + 1 < h {
                stack.push((x, y + 1));
            }
        }
        Self::from_cells(w, h, outside.into_iter().map(|o| !o).collect())
    }

    fn morph(&self, radius: i64, dilate: bool) -> Self {
        let offsets: Vec<(i64, i64)> = (-radius..=radius)
            .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
            .filter(|(dx, dy)| dx * dx + dy * dy <= radius * radius)
            .collect();
        Self::from_fn(self.width, self.height, |x, y| {
            let (x, y) = (x as i64, y as i64);
            if dilate {
                offsets.iter().any(|&(dx, dy)| self.get(x + dx, y + dy))
            } else {
                offsets.iter().all(|&(dx, dy)| self.get(x + dx, y + dy))
            }
        })
    }

    /// Binary dilation with the Euclidean disk of `radius`.
    pub fn dilate(&self, radius: usize) -> Self {
        self.morph(radius as i64, true)
    }

    /// Binary erosion with the Euclidean disk of `radius`; outside counts as background.
    pub fn erode(&self, radius: usize) -> Self {
        self.morph(radius as i64, false)
    }

    pub fn open(&self, radius: usize) -> Self {
        self.erode(radius).dilate(radius)
    }

    pub fn close(&self, radius: usize) -> Self {
        self.dilate(radius).erode(radius)
    }

    /// Intersection over union of two same-sized masks.
    pub fn iou(&self, other: &Self) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let (mut inter, mut uni) = (0usize, 0usize);
        for (&a, &b) in self.cells.iter().zip(&other.cells) {
            inter += (a && b) as usize;
            uni += (a || b) as usize;
        }
        if uni == 0 {
            1.0
        } else {
            inter as f64 / uni as f64
        }
    }

    /// Zhang-Suen thinning to an 8-connected skeleton one pixel wide.
    pub fn thin(&self) -> Self {
        let mut out = self.clone();
        let w = self.width as i64;
        loop {
            let mut changed = false;
            for pass in 0..2 {
                let mut del = Vec::new();
                for (x, y) in out.pixels() {
                    let (x, y) = (x as i64, y as i64);
                    // P2..P9 clockwise from north
                    let n: [bool; 8] = [
                        out.get(x, y - 1),
                        out.get(x + 1, y - 1),
                        out.get(x + 1, y),
                        out.get(x + 1, y + 1),
                        out.get(x, y + 1),
                        out.get(x - 1, y + 1),
                        out.get(x - 1, y),
                        out.get(x - 1, y - 1),
                    ];
                    let b = n.iter().filter(|&&v| v).count();
                    let a = (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count();
                    let (c1, c2) = if pass == 0 {
                        (n[0] && n[2] && n[4], n[2] && n[4] && n[6])
                    } else {
                        (n[0] && n[2] && n[6], n[0] && n[4] && n[6])
                    };
                    if (2..=6).contains(&b) && a == 1 && !c1 && !c2 {
                        del.push((y * w + x) as usize);
                    }
                }
                changed |= !del.is_empty();
                for i in del {
                    out.cells[i] = false;
                }
            }
            if !changed {
                return out;
            }
        }
    }

    /// Longest geodesic path (diagonal steps cost sqrt 2) through the largest
    /// 8-connected component, found by two farthest-point sweeps. Empty when
    /// the mask is empty.
    pub fn longest_path(&self) -> Vec<(usize, usize)> {
        let comp = self.largest_component();
        let Some(start) = comp.cells.iter().position(|&c| c) else {
            return Vec::new();
        };
        let farthest = |d: &[f64], from: usize| {
            (0..d.len())
                .filter(|&i| d[i].is_finite())
                .fold(from, |best, i| if d[i] > d[best] { i } else { best })
        };
        let (d0, _) = comp.geodesic_from(start);
        let a = farthest(&d0, start);
        let (da, parent) = comp.geodesic_from(a);
        let mut cur = farthest(&da, a);
        let mut path = vec![cur];
        while cur != a {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path.into_iter().map(|i| (i % self.width, i / self.width)).collect()
    }

    /// Dijkstra distances and parents over foreground pixels from `src`.
    fn geodesic_from(&self, src: usize) -> (Vec<f64>, Vec<usize>) {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let mut dist = vec![f64::INFINITY; self.cells.len()];
        let mut parent = vec![usize::MAX; self.cells.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        // integer keys keep the heap ordering total
        heap.push(Reverse((0u64, src)));
        while let Some(Reverse((key, i))) = heap.pop() {
            if key > (dist[i] * 1e6).round() as u64 {
                continue;
            }
            let (x, y) = ((i % self.width) as i64, (i / self.width) as i64);
            for (dx, dy) in NEIGHBORS8 {
                if !self.get(x + dx, y + dy) {
                    continue;
                }
                let j = (y + dy) as usize * self.width + (x + dx) as usize;
                let nd = dist[i] + if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                if nd < dist[j] {
                    dist[j] = nd;
                    parent[j] = i;
                    heap.push(Reverse(((nd * 1e6).round() as u64, j)));
                }
            }
        }
        (dist, parent)
    }

    /// Iterator over `(x, y)` of body pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_are_eight_connected() {
        let mut m = BinaryMask::new(5, 5);
        m.set(1, 1, true);
        m.set(2, 2, true);
        m.set(4, 4, true);
        assert_eq!(m.components().len(), 2);
        assert_eq!(m.largest_component().area(), 2);
    }

    #[test]
    fn fill_holes_closes_ring() {
        let m = BinaryMask::from_fn(7, 7, |x, y| {
            (1..=5).contains(&x) && (1..=5).contains(&y) && !(x == 3 && y == 3)
        });
        assert_eq!(m.fill_holes().area(), 25);
    }

    #[test]
    fn opening_removes_thin_strip() {
        let m = BinaryMask::from_fn(20, 9, |x, y| {
            (2..=17).contains(&x) && (y == 4 || y == 5) || (2..=8).contains(&x) && (2..=6).contains(&y)
        });
        let o = m.open(1);
        assert!(!o.get(14, 4));
        assert!(o.get(5, 4));
    }
}
