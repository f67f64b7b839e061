use super::Point2;
use crate::scalar::Scalar;

/// Above this many reference points queries go through a uniform grid.
const BRUTE_FORCE_LIMIT: usize = 1000;

/// Exact nearest-neighbour lookup over a fixed reference set.
///
/// Small sets are scanned exhaustively; larger ones are bucketed into a uniform
/// grid searched ring by ring. Both paths return the same squared distance.
#[derive(Debug, Clone)]
pub struct NearestIndex<T> {
    points: Vec<Point2<T>>,
    grid: Option<Grid<T>>,
}

#[derive(Debug, Clone)]
struct Grid<T> {
    min: Point2<T>,
    cell: T,
    cols: usize,
    rows: usize,
    /// `starts[c]..starts[c + 1]` indexes `order` for cell `c`.
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl<T: Scalar> NearestIndex<T> {
    pub fn new(points: &[Point2<T>]) -> Self {
        let grid = (points.len() > BRUTE_FORCE_LIMIT).then(|| Grid::build(points)).flatten();
        Self { points: points.to_vec(), grid }
    }

    /// Forces the exhaustive path regardless of size.
    pub fn brute_force(points: &[Point2<T>]) -> Self {
        Self { points: points.to_vec(), grid: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    /// Index and squared distance of the closest reference point.
    /// Ties resolve to the lowest index. `None` only for an empty index.
    pub fn nearest(&self, q: Point2<T>) -> Option<(usize, T)> {
        match &self.grid {
            Some(grid) => grid.nearest(&self.points, q),
            None => brute(&self.points, q),
        }
    }
}

fn brute<T: Scalar>(points: &[Point2<T>], q: Point2<T>) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, &p) in points.iter().enumerate() {
        let d = p.distance_squared(q);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}

impl<T: Scalar> Grid<T> {
    fn build(points: &[Point2<T>]) -> Option<Self> {
        let (mut min, mut max) = (points[0], points[0]);
        for p in points {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        let w = max.x - min.x;
        let h = max.y - min.y;
        let extent = w.max(h);
        if !(extent > T::zero()) {
            return None;
        }
        // Roughly two points per cell; degenerate (thin) boxes fall back to a 1D strip.
        let n = T::from_usize_lossy(points.len());
        let area = w * h;
        let cell = if area > T::zero() {
            (area * T::lit(2.0) / n).sqrt()
        } else {
            extent * T::lit(2.0) / n
        };
        let cell = cell.max(extent / T::lit(4096.0));
        let cols = (w / cell).floor().to_usize().unwrap_or(0) + 1;
        let rows = (h / cell).floor().to_usize().unwrap_or(0) + 1;
        let mut grid = Grid { min, cell, cols, rows, starts: vec![0; cols * rows + 1], order: Vec::new() };

        let cells: Vec<usize> = points.iter().map(|&p| grid.cell_of(p)).collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..cols * rows {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        grid.order = vec![0; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            grid.order[fill[c]] = i;
            fill[c] += 1;
        }
        Some(grid)
    }

    fn coords(&self, p: Point2<T>) -> (usize, usize) {
        let clamp = |v: T, n: usize| -> usize {
            if !(v > T::zero()) {
                0
            } else {
                v.floor().to_usize().unwrap_or(usize::MAX).min(n - 1)
            }
        };
        (clamp((p.x - self.min.x) / self.cell, self.cols), clamp((p.y - self.min.y) / self.cell, self.rows))
    }

    fn cell_of(&self, p: Point2<T>) -> usize {
        let (cx, cy) = self.coords(p);
        cy * self.cols + cx
    }

    fn scan_cell(&self, points: &[Point2<T>], cx: usize, cy: usize, q: Point2<T>, best: &mut Option<(usize, T)>) {
        let c = cy * self.cols + cx;
        for &i in &self.order[self.starts[c]..self.starts[c + 1]] {
            let d = points[i].distance_squared(q);
            let better = match *best {
                None => true,
                Some((bi, bd)) => d < bd || (d == bd && i < bi),
            };
            if better {
                *best = Some((i, d));
            }
        }
    }

    fn nearest(&self, points: &[Point2<T>], q: Point2<T>) -> Option<(usize, T)> {
        let (qx, qy) = self.coords(q);
        let max_ring = self.cols.max(self.rows);
        let mut best = None;
        for ring in 0..=max_ring {
            let x0 = qx as isize - ring as isize;
            let x1 = qx as isize + ring as isize;
            let y0 = qy as isize - ring as isize;
            let y1 = qy as isize + ring as isize;
            for cy in y0..=y1 {
                if cy < 0 || cy >= self.rows as isize {
                    continue;
                }
                let on_edge_row = cy == y0 || cy == y1;
                let mut cx = x0;
                while cx <= x1 {
                    if cx >= 0 && cx < self.cols as isize {
                        self.scan_cell(points, cx as usize, cy as usize, q, &mut best);
                    }
                    // Interior rows only contribute their two edge cells.
                    cx = if on_edge_row || cx == x1 { cx + 1 } else { x1 };
                }
            }
            // Anything in an unvisited ring lies at least `ring * cell` away.
            if let Some((_, d)) = best {
                let reach = self.cell * T::from_usize_lossy(ring);
                if d < reach * reach {
                    break;
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_agrees_with_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point2<f64>> =
            (0..3000).map(|_| Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-3.0..3.0))).collect();
        let index = NearestIndex::new(&pts);
        assert!(index.grid.is_some());
        for _ in 0..500 {
            let q = Point2::new(rng.random_range(-15.0..15.0), rng.random_range(-8.0..8.0));
            let (_, dg) = index.nearest(q).unwrap();
            let (_, db) = brute(&pts, q).unwrap();
            assert_eq!(dg, db);
        }
    }

    #[test]
    fn collinear_reference_set() {
        let pts: Vec<Point2<f64>> = (0..2000).map(|i| Point2::new(i as f64 * 0.01, 0.0)).collect();
        let index = NearestIndex::new(&pts);
        let (i, d) = index.nearest(Point2::new(5.004, 1.0)).unwrap();
        assert_eq!(i, 500);
        assert!((d - (0.004f64.powi(2) + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn all_points_identical_falls_back() {
        let pts = vec![Point2::new(1.0, 1.0); 1500];
        let index = NearestIndex::new(&pts);
        assert!(index.grid.is_none());
        assert_eq!(index.nearest(Point2::new(0.0, 1.0)), Some((0, 1.0)));
    }
}
