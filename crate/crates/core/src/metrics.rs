//! Directed and symmetric Hausdorff distances between finite point sets.

use crate::error::{Error, Result};
use crate::Point;

/// Nonempty set of finite planar points with a uniform-grid index for
/// exact nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<Point>,
    origin: Point,
    cell: f64,
    cols: usize,
    rows: usize,
    /// CSR layout: points of cell `c` are `order[start[c]..start[c + 1]]`.
    start: Vec<usize>,
    order: Vec<usize>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet("input"));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Data("point set contains non-finite coordinates".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        // About two points per cell along a curve-like set.
        let per_side = ((points.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let cell = if extent > 0.0 { extent / per_side as f64 } else { 1.0 };
        let cols = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let rows = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);

        let mut set = Self {
            points,
            origin: lo,
            cell,
            cols,
            rows,
            start: vec![0; cols * rows + 1],
            order: Vec::new(),
        };
        let cells: Vec<usize> = set.points.iter().map(|&p| set.cell_of(p)).collect();
        for &c in &cells {
            set.start[c + 1] += 1;
        }
        for c in 0..cols * rows {
            set.start[c + 1] += set.start[c];
        }
        let mut fill = set.start.clone();
        set.order = vec![0; set.points.len()];
        for (i, &c) in cells.iter().enumerate() {
            set.order[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(set)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn coords(&self, p: Point) -> (isize, isize) {
        (
            ((p[0] - self.origin[0]) / self.cell).floor() as isize,
            ((p[1] - self.origin[1]) / self.cell).floor() as isize,
        )
    }

    fn cell_of(&self, p: Point) -> usize {
        let (cx, cy) = self.coords(p);
        let cx = cx.clamp(0, self.cols as isize - 1) as usize;
        let cy = cy.clamp(0, self.rows as isize - 1) as usize;
        cy * self.cols + cx
    }

    /// Exact distance from `q` to the nearest member of the set.
    pub fn nearest_distance(&self, q: Point) -> f64 {
        let (qx, qy) = self.coords(q);
        let (cols, rows) = (self.cols as isize, self.rows as isize);
        // Distance from q to the grid's bounding box, in cells, bounds the
        // first ring that can contain anything.
        let gap_x = if qx < 0 { -qx } else if qx >= cols { qx - cols + 1 } else { 0 };
        let gap_y = if qy < 0 { -qy } else if qy >= rows { qy - rows + 1 } else { 0 };
        let first_ring = gap_x.max(gap_y);
        let max_ring = first_ring + cols.max(rows) + 1;

        let mut best = f64::INFINITY;
        for ring in first_ring..=max_ring {
            // Every point in ring `ring` is at least (ring - 1) cells away.
            if ring > 0 && ((ring - 1) as f64) * self.cell > best {
                break;
            }
            for cy in (qy - ring)..=(qy + ring) {
                if cy < 0 || cy >= rows {
                    continue;
                }
                let on_edge_row = cy == qy - ring || cy == qy + ring;
                let xs: Box<dyn Iterator<Item = isize>> = if on_edge_row {
                    Box::new((qx - ring)..=(qx + ring))
                } else if ring == 0 {
                    Box::new(std::iter::once(qx))
                } else {
                    Box::new([qx - ring, qx + ring].into_iter())
                };
                for cx in xs {
                    if cx < 0 || cx >= cols {
                        continue;
                    }
                    let c = (cy * cols + cx) as usize;
                    for &i in &self.order[self.start[c]..self.start[c + 1]] {
                        best = best.min(distance(q, self.points[i]));
                    }
                }
            }
        }
        best
    }
}

pub(crate) fn distance(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// `sup_{x in a} inf_{y in b} |x - y|`.
pub fn directed_distance(a: &PointSet, b: &PointSet) -> f64 {
    a.points
        .iter()
        .map(|&p| b.nearest_distance(p))
        .fold(0.0, f64::max)
}

/// `max(d(a|b), d(b|a))`.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> f64 {
    directed_distance(a, b).max(directed_distance(b, a))
}

/// Hausdorff distance between raw point lists; errors if either is empty.
pub fn hausdorff_points(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySet("first"));
    }
    if b.is_empty() {
        return Err(Error::EmptySet("second"));
    }
    Ok(hausdorff(&PointSet::new(a.to_vec())?, &PointSet::new(b.to_vec())?))
}
