//! Uniform-grid bucketing of points for short-range neighbour queries.

use crate::math::Vec2;

/// Neighbour search strategy for the force pass. Both produce candidate
/// lists in ascending index order, so force sums agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborSearch {
    #[default]
    CellList,
    AllPairs,
}

impl NeighborSearch {
    pub fn name(self) -> &'static str {
        match self {
            NeighborSearch::CellList => "cell_list",
            NeighborSearch::AllPairs => "all_pairs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cell_list" => Some(NeighborSearch::CellList),
            "all_pairs" => Some(NeighborSearch::AllPairs),
            _ => None,
        }
    }
}

/// Points bucketed into square cells of side at least `r_cut`; every pair
/// within `r_cut` lies in the same or adjacent cells.
#[derive(Debug, Clone)]
pub struct CellList {
    origin: Vec2,
    cell: f64,
    ncx: usize,
    ncy: usize,
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl CellList {
    pub fn build(points: &[Vec2], r_cut: f64) -> Self {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        // Non-finite points are clamped into edge cells by `cell_of` below.
        for p in points.iter().filter(|p| p.is_finite()) {
            lo.c1 = lo.c1.min(p.c1);
            lo.c2 = lo.c2.min(p.c2);
            hi.c1 = hi.c1.max(p.c1);
            hi.c2 = hi.c2.max(p.c2);
        }
        if !lo.is_finite() {
            lo = Vec2::ZERO;
            hi = Vec2::ZERO;
        }
        let max_cells = (4 * points.len()).max(16) as f64;
        let mut cell = r_cut;
        let dims = |cell: f64| {
            (
                ((hi.c1 - lo.c1) / cell).floor() + 1.0,
                ((hi.c2 - lo.c2) / cell).floor() + 1.0,
            )
        };
        let (mut fx, mut fy) = dims(cell);
        while fx * fy > max_cells {
            cell *= 2.0;
            (fx, fy) = dims(cell);
        }
        let (ncx, ncy) = (fx as usize, fy as usize);

        // Counting sort keeps indices ascending inside each cell.
        let cell_of = |p: &Vec2| {
            let cx = (((p.c1 - lo.c1) / cell) as usize).min(ncx - 1);
            let cy = (((p.c2 - lo.c2) / cell) as usize).min(ncy - 1);
            cx * ncy + cy
        };
        let mut starts = vec![0usize; ncx * ncy + 1];
        for p in points {
            starts[cell_of(p) + 1] += 1;
        }
        for c in 0..ncx * ncy {
            starts[c + 1] += starts[c];
        }
        let mut fill = starts.clone();
        let mut items = vec![0usize; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[fill[c]] = i;
            fill[c] += 1;
        }
        CellList {
            origin: lo,
            cell,
            ncx,
            ncy,
            starts,
            items,
        }
    }

    /// Collects every point index in the 3x3 block of cells around `x`,
    /// sorted ascending, into `out`.
    pub fn candidates(&self, x: Vec2, out: &mut Vec<usize>) {
        out.clear();
        let cx = ((x.c1 - self.origin.c1) / self.cell).floor() as isize;
        let cy = ((x.c2 - self.origin.c2) / self.cell).floor() as isize;
        for ix in cx - 1..=cx + 1 {
            if ix < 0 || ix >= self.ncx as isize {
                continue;
            }
            for iy in cy - 1..=cy + 1 {
                if iy < 0 || iy >= self.ncy as isize {
                    continue;
                }
                let c = ix as usize * self.ncy + iy as usize;
                out.extend_from_slice(&self.items[self.starts[c]..self.starts[c + 1]]);
            }
        }
        out.sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn finds_every_pair_in_range(pts in prop::collection::vec((-30.0..30.0f64, -10.0..10.0f64), 1..150)) {
            let points: Vec<Vec2> = pts.iter().map(|&(a, b)| Vec2::new(a, b)).collect();
            let r = 3.0;
            let grid = CellList::build(&points, r);
            let mut buf = Vec::new();
            for (i, p) in points.iter().enumerate() {
                grid.candidates(*p, &mut buf);
                prop_assert!(buf.windows(2).all(|w| w[0] < w[1]));
                for (j, q) in points.iter().enumerate() {
                    if (*p - *q).norm_sq() <= r * r {
                        prop_assert!(buf.binary_search(&j).is_ok(), "missing {j} for {i}");
                    }
                }
            }
        }
    }
}
