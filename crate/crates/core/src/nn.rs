//! Exact nearest-neighbour queries over a static 2-D point set, bucketed on a
//! uniform grid and searched ring by ring.

pub struct PointIndex<'a> {
    points: &'a [(f64, f64)],
    origin: (f64, f64),
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> PointIndex<'a> {
    /// Panics if `points` is empty.
    pub fn new(points: &'a [(f64, f64)]) -> Self {
        assert!(!points.is_empty(), "PointIndex needs at least one point");
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &(x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let extent = (x1 - x0).max(y1 - y0);
        let per_side = (points.len() as f64).sqrt().ceil().max(1.0);
        let cell = if extent > 0.0 { extent / per_side } else { 1.0 };
        let nx = (((x1 - x0) / cell).floor() as usize + 1).max(1);
        let ny = (((y1 - y0) / cell).floor() as usize + 1).max(1);

        let cell_of = |x: f64, y: f64| {
            let cx = (((x - x0) / cell) as usize).min(nx - 1);
            let cy = (((y - y0) / cell) as usize).min(ny - 1);
            cy * nx + cx
        };
        let mut counts = vec![0u32; nx * ny + 1];
        for &(x, y) in points {
            counts[cell_of(x, y) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; points.len()];
        for (i, &(x, y)) in points.iter().enumerate() {
            let c = cell_of(x, y);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Self {
            points,
            origin: (x0, y0),
            cell,
            nx,
            ny,
            starts,
            items,
        }
    }

    /// Index of the closest point and its squared distance. Exact ties go to
    /// the lowest index.
    pub fn nearest(&self, qx: f64, qy: f64) -> (usize, f64) {
        let fx = ((qx - self.origin.0) / self.cell).floor();
        let fy = ((qy - self.origin.1) / self.cell).floor();
        let cx = fx.clamp(0.0, (self.nx - 1) as f64) as isize;
        let cy = fy.clamp(0.0, (self.ny - 1) as f64) as isize;
        let max_ring = self.nx.max(self.ny) as isize;

        let mut best = (usize::MAX, f64::INFINITY);
        for ring in 0..=max_ring {
            for (ix, iy) in ring_cells(cx, cy, ring) {
                if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
                    continue;
                }
                let c = iy as usize * self.nx + ix as usize;
                for &i in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let (px, py) = self.points[i as usize];
                    let d = (px - qx) * (px - qx) + (py - qy) * (py - qy);
                    let i = i as usize;
                    if d < best.1 || (d == best.1 && i < best.0) {
                        best = (i, d);
                    }
                }
            }
            // anything unvisited is at least `ring` whole cells away
            let bound = ring as f64 * self.cell;
            if best.0 != usize::MAX && best.1 < bound * bound {
                break;
            }
        }
        best
    }
}

fn ring_cells(cx: isize, cy: isize, ring: isize) -> Box<dyn Iterator<Item = (isize, isize)>> {
    if ring == 0 {
        return Box::new(std::iter::once((cx, cy)));
    }
    let top_bottom = (-ring..=ring).flat_map(move |dx| [(cx + dx, cy - ring), (cx + dx, cy + ring)]);
    let sides = (-ring + 1..ring).flat_map(move |dy| [(cx - ring, cy + dy), (cx + ring, cy + dy)]);
    Box::new(top_bottom.chain(sides))
}

/// Reference linear scan with the same tie rule.
pub fn nearest_brute(points: &[(f64, f64)], qx: f64, qy: f64) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, &(px, py)) in points.iter().enumerate() {
        let d = (px - qx) * (px - qx) + (py - qy) * (py - qy);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}
