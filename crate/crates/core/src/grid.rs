//! Rasterized planar domains: occupancy, exact boundary distance, the
//! 16-neighbour path graph and the intrinsic length and diameter metrics.

use crate::cellset::CellSet;
use crate::error::{Error, Result};
use crate::search::{bottleneck_search, Search};
use std::collections::VecDeque;

/// Spatial dimension of every domain built here.
pub const DIM: usize = 2;

/// Grid steps of the path graph: 4 axis moves, 4 diagonals, 8 knight moves.
pub const MOVES: [(i32, i32); 16] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
    (2, 1),
    (1, 2),
    (-1, 2),
    (-2, 1),
    (-2, -1),
    (-1, -2),
    (1, -2),
    (2, -1),
];

/// Cells a move sweeps through besides its endpoints, in path order. Every
/// one of them must be interior for the move to be an edge, which keeps each
/// edge inside the union of interior cells and makes the graph components the
/// 4-connected components.
pub fn move_intermediates(dir: usize) -> &'static [(i32, i32)] {
    const T: [&[(i32, i32)]; 16] = [
        &[],
        &[],
        &[],
        &[],
        &[(1, 0), (0, 1)],
        &[(-1, 0), (0, 1)],
        &[(-1, 0), (0, -1)],
        &[(1, 0), (0, -1)],
        &[(1, 0), (1, 1)],
        &[(0, 1), (1, 1)],
        &[(0, 1), (-1, 1)],
        &[(-1, 0), (-1, 1)],
        &[(-1, 0), (-1, -1)],
        &[(0, -1), (-1, -1)],
        &[(0, -1), (1, -1)],
        &[(1, 0), (1, -1)],
    ];
    T[dir]
}

/// A location inside a cell: `offset` is relative to the cell center, in
/// cell units, each component within `[-0.5, 0.5]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub cell: usize,
    pub offset: [f64; 2],
}

impl Point {
    pub fn center(cell: usize) -> Self {
        Point { cell, offset: [0.0, 0.0] }
    }
}

/// A polyline through cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub cells: Vec<usize>,
    pub length: f64,
    pub diameter: f64,
}

impl Path {
    pub fn from_cells(dom: &GridDomain, cells: Vec<usize>) -> Self {
        let pts: Vec<[f64; 2]> = cells.iter().map(|&c| dom.center(c)).collect();
        let length = pts.windows(2).map(|w| dist(w[0], w[1])).sum();
        let diameter = point_set_diameter(&pts);
        Path { cells, length, diameter }
    }

    pub fn points(&self, dom: &GridDomain) -> Vec<[f64; 2]> {
        self.cells.iter().map(|&c| dom.center(c)).collect()
    }
}

#[inline]
pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Euclidean diameter of a finite point set, via its convex hull.
pub fn point_set_diameter(pts: &[[f64; 2]]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let hull = convex_hull(pts);
    let mut best = 0.0f64;
    for a in 0..hull.len() {
        for b in a + 1..hull.len() {
            best = best.max(dist(hull[a], hull[b]));
        }
    }
    best
}

fn convex_hull(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = pts.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Connected-component labels after removing a forbidden set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    /// `NO_LABEL` for exterior and forbidden cells.
    pub labels: Vec<u32>,
    pub count: usize,
}

pub const NO_LABEL: u32 = u32::MAX;

impl Labeling {
    pub fn label(&self, cell: usize) -> Option<u32> {
        let l = self.labels[cell];
        (l != NO_LABEL).then_some(l)
    }
}

/// Result of an intrinsic diameter query.
#[derive(Clone, Debug, PartialEq)]
pub struct DiameterDistance {
    /// Diameter of `path`, an upper bound for the graph value.
    pub value: f64,
    /// Certified lower bound.
    pub lower: f64,
    pub path: Path,
}

#[derive(Clone, Debug)]
pub struct GridDomain {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    interior: Vec<bool>,
    dist: Vec<f64>,
    inv_dist: Vec<f64>,
    moves: Vec<u16>,
    offsets: [isize; 16],
    step_len: [f64; 16],
    x0: usize,
    boundary_cells: Vec<usize>,
    interior_count: usize,
}

impl GridDomain {
    /// Builds a domain from an occupancy mask (`true` = interior). Only the
    /// 4-connected component of `x0` is kept; a ring of exterior cells is
    /// added when the mask touches the grid border.
    pub fn from_mask(nx: usize, ny: usize, h: f64, origin: [f64; 2], mask: Vec<bool>, x0: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parameter(format!("cell size must be positive, got {h}")));
        }
        if mask.len() != nx * ny {
            return Err(Error::Domain(format!("mask has {} cells, expected {}", mask.len(), nx * ny)));
        }
        if x0 >= mask.len() || !mask[x0] {
            return Err(Error::Domain("base point is not an interior cell".into()));
        }
        let touches = (0..nx).any(|i| mask[i] || mask[(ny - 1) * nx + i]) || (0..ny).any(|j| mask[j * nx] || mask[j * nx + nx - 1]);
        let (nx, ny, origin, mask, x0) = if touches {
            let (px, py) = (nx + 2, ny + 2);
            let mut m = vec![false; px * py];
            for j in 0..ny {
                for i in 0..nx {
                    m[(j + 1) * px + i + 1] = mask[j * nx + i];
                }
            }
            let x0p = (x0 / nx + 1) * px + x0 % nx + 1;
            (px, py, [origin[0] - h, origin[1] - h], m, x0p)
        } else {
            (nx, ny, origin, mask, x0)
        };
        let mut interior = vec![false; nx * ny];
        let mut queue = VecDeque::from([x0]);
        interior[x0] = true;
        while let Some(c) = queue.pop_front() {
            for n in neighbors4(c, nx, ny) {
                if mask[n] && !interior[n] {
                    interior[n] = true;
                    queue.push_back(n);
                }
            }
        }
        let interior_count = interior.iter().filter(|&&b| b).count();
        let dist = distance_field(nx, ny, h, &interior);
        let inv_dist = dist.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
        let mut offsets = [0isize; 16];
        let mut step_len = [0.0; 16];
        for (k, &(dx, dy)) in MOVES.iter().enumerate() {
            offsets[k] = dy as isize * nx as isize + dx as isize;
            step_len[k] = h * ((dx * dx + dy * dy) as f64).sqrt();
        }
        let mut moves = vec![0u16; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if !interior[c] {
                    continue;
                }
                let ok = |dx: i32, dy: i32| {
                    let (a, b) = (i as i64 + dx as i64, j as i64 + dy as i64);
                    a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny && interior[b as usize * nx + a as usize]
                };
                let mut mask = 0u16;
                for (k, &(dx, dy)) in MOVES.iter().enumerate() {
                    if ok(dx, dy) && move_intermediates(k).iter().all(|&(a, b)| ok(a, b)) {
                        mask |= 1 << k;
                    }
                }
                moves[c] = mask;
            }
        }
        let mut boundary_cells = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if interior[c] {
                    continue;
                }
                let near = (-1i64..=1).any(|dy| {
                    (-1i64..=1).any(|dx| {
                        let (a, b) = (i as i64 + dx, j as i64 + dy);
                        a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny && interior[b as usize * nx + a as usize]
                    })
                });
                if near {
                    boundary_cells.push(c);
                }
            }
        }
        Ok(GridDomain { nx, ny, h, origin, interior, dist, inv_dist, moves, offsets, step_len, x0, boundary_cells, interior_count })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.interior_count == 0
    }
    pub fn x0(&self) -> usize {
        self.x0
    }

    /// Moves the base point to the interior cell containing `x`.
    pub fn with_base_point(mut self, x: [f64; 2]) -> Result<Self> {
        self.x0 = self.point(x)?.cell;
        Ok(self)
    }
    pub fn interior_count(&self) -> usize {
        self.interior_count
    }
    #[inline]
    pub fn is_interior(&self, cell: usize) -> bool {
        self.interior[cell]
    }
    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }
    pub fn interior_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&c| self.interior[c])
    }
    /// Distance from a cell center to the exterior; 0 for exterior cells.
    #[inline]
    pub fn d(&self, cell: usize) -> f64 {
        self.dist[cell]
    }
    pub fn distance_field(&self) -> &[f64] {
        &self.dist
    }
    #[inline]
    pub fn inv_d(&self, cell: usize) -> f64 {
        self.inv_dist[cell]
    }
    #[inline]
    pub fn ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }
    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn center(&self, cell: usize) -> [f64; 2] {
        let (i, j) = self.ij(cell);
        [self.origin[0] + self.h * (i as f64 + 0.5), self.origin[1] + self.h * (j as f64 + 0.5)]
    }
    pub fn world(&self, p: &Point) -> [f64; 2] {
        let c = self.center(p.cell);
        [c[0] + self.h * p.offset[0], c[1] + self.h * p.offset[1]]
    }
    /// Cell containing a world location, if inside the grid.
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        let fi = ((x[0] - self.origin[0]) / self.h).floor();
        let fj = ((x[1] - self.origin[1]) / self.h).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some(self.cell(fi as usize, fj as usize))
    }
    /// Interior point at a world location.
    pub fn point(&self, x: [f64; 2]) -> Result<Point> {
        let cell = self.locate(x).ok_or_else(|| Error::Domain(format!("({}, {}) is outside the grid", x[0], x[1])))?;
        if !self.interior[cell] {
            return Err(Error::Domain(format!("({}, {}) is in an exterior cell", x[0], x[1])));
        }
        let c = self.center(cell);
        Ok(Point { cell, offset: [(x[0] - c[0]) / self.h, (x[1] - c[1]) / self.h] })
    }
    /// Interior cell whose center is nearest to `x`.
    pub fn nearest_interior(&self, x: [f64; 2]) -> Option<usize> {
        if let Some(c) = self.locate(x) {
            if self.interior[c] {
                return Some(c);
            }
        }
        self.interior_cells().min_by(|&a, &b| dist(self.center(a), x).total_cmp(&dist(self.center(b), x)))
    }
    #[inline]
    pub fn move_mask(&self, cell: usize) -> u16 {
        self.moves[cell]
    }
    #[inline]
    pub fn step(&self, cell: usize, dir: usize) -> usize {
        (cell as isize + self.offsets[dir]) as usize
    }
    #[inline]
    pub fn step_len(&self, dir: usize) -> f64 {
        self.step_len[dir]
    }
    /// Graph neighbours of a cell with the move index.
    pub fn edges(&self, cell: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mask = self.moves[cell];
        (0..16).filter(move |k| mask & (1 << k) != 0).map(move |k| (self.step(cell, k), k))
    }
    /// Quasihyperbolic weight of one graph edge.
    #[inline]
    pub fn qh_weight(&self, a: usize, b: usize, dir: usize) -> f64 {
        self.step_len[dir] * 0.5 * (self.inv_dist[a] + self.inv_dist[b])
    }
    /// Cells on the straight move from `a` along `dir`, endpoints included.
    pub fn edge_cells(&self, a: usize, dir: usize) -> Vec<usize> {
        let mut out = vec![a];
        for &(dx, dy) in move_intermediates(dir) {
            out.push((a as isize + dy as isize * self.nx as isize + dx as isize) as usize);
        }
        out.push(self.step(a, dir));
        out
    }
    /// Move index joining two graph-adjacent cells.
    pub fn dir_between(&self, a: usize, b: usize) -> Option<usize> {
        (0..16).find(|&k| self.moves[a] & (1 << k) != 0 && self.step(a, k) == b)
    }
    /// Expands a node path into the sequence of cells its moves sweep.
    pub fn cell_chain(&self, cells: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::with_capacity(cells.len() * 2);
        if let Some(&f) = cells.first() {
            out.push(f);
        }
        for w in cells.windows(2) {
            let dir = self.dir_between(w[0], w[1]).expect("consecutive path cells are graph neighbours");
            out.extend(self.edge_cells(w[0], dir).into_iter().skip(1));
        }
        out
    }
    /// Expands a node path into a 4-connected cell sequence; a diagonal move
    /// passes through its first intermediate cell only.
    pub fn four_chain(&self, cells: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = cells.first().copied().into_iter().collect();
        for w in cells.windows(2) {
            let dir = self.dir_between(w[0], w[1]).expect("consecutive path cells are graph neighbours");
            let e = self.edge_cells(w[0], dir);
            if (4..8).contains(&dir) {
                out.extend([e[1], e[3]]);
            } else {
                out.extend(e.into_iter().skip(1));
            }
        }
        out
    }
    pub fn boundary_cells(&self) -> &[usize] {
        &self.boundary_cells
    }

    /// Exact euclidean distance from `x` to the union of exterior cells.
    pub fn boundary_distance(&self, x: &Point) -> Result<f64> {
        if x.cell >= self.len() || !self.interior[x.cell] {
            return Err(Error::Domain(format!("cell {} is not interior", x.cell)));
        }
        if x.offset == [0.0, 0.0] {
            return Ok(self.dist[x.cell]);
        }
        let p = self.world(x);
        let half = 0.5 * self.h;
        let mut best = f64::INFINITY;
        for &e in &self.boundary_cells {
            let c = self.center(e);
            let dx = ((p[0] - c[0]).abs() - half).max(0.0);
            let dy = ((p[1] - c[1]).abs() - half).max(0.0);
            best = best.min(dx.hypot(dy));
        }
        Ok(best)
    }

    fn check_interior(&self, x: &Point) -> Result<()> {
        if x.cell >= self.len() || !self.interior[x.cell] {
            return Err(Error::Domain(format!("cell {} is not interior", x.cell)));
        }
        Ok(())
    }

    /// Intrinsic length distance λ between the centers of two cells.
    pub fn intrinsic_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.intrinsic_path(x, y).map(|p| p.length)
    }

    /// Shortest euclidean-length path between two cell centers.
    pub fn intrinsic_path(&self, x: &Point, y: &Point) -> Result<Path> {
        self.check_interior(x)?;
        self.check_interior(y)?;
        let mut s = Search::new(self.len());
        s.run(self, &[(x.cell, 0.0)], |_, _, k| self.step_len[k], |_| true, |c, _| c == y.cell);
        if !s.reached(y.cell) {
            return Err(Error::Unreachable(x.cell, y.cell));
        }
        Ok(Path::from_cells(self, s.path_to(y.cell)))
    }

    /// Intrinsic diameter distance δ between two cell centers.
    ///
    /// For a center `c`, a minimax search finds the smallest radius `r` such
    /// that `x` and `y` connect inside `B(c, r)`; a shortest path inside that
    /// ball is then measured. Centers are the midpoint, points of the length
    /// geodesic and a pattern-search refinement; the best measured diameter is
    /// returned. The lower bound uses the searches centered at `x` and `y`.
    pub fn intrinsic_diameter_distance(&self, x: &Point, y: &Point) -> Result<DiameterDistance> {
        self.check_interior(x)?;
        self.check_interior(y)?;
        let (a, b) = (x.cell, y.cell);
        if a == b {
            return Ok(DiameterDistance { value: 0.0, lower: 0.0, path: Path::from_cells(self, vec![a]) });
        }
        let (pa, pb) = (self.center(a), self.center(b));
        let radius = |c: [f64; 2]| bottleneck_search(self, a, b, |v| dist(self.center(v), c)).map(|(r, _)| r);
        let rx = radius(pa).ok_or(Error::Unreachable(a, b))?;
        let ry = radius(pb).ok_or(Error::Unreachable(a, b))?;
        let lower = dist(pa, pb).max(rx).max(ry);

        let geo = self.intrinsic_path(x, y)?;
        let mut candidates = vec![[(pa[0] + pb[0]) * 0.5, (pa[1] + pb[1]) * 0.5]];
        let n = geo.cells.len();
        for f in [0.25, 0.5, 0.75] {
            let g = self.center(geo.cells[((n - 1) as f64 * f).round() as usize]);
            candidates.push(g);
            candidates.push([(g[0] + (pa[0] + pb[0]) * 0.5) * 0.5, (g[1] + (pa[1] + pb[1]) * 0.5) * 0.5]);
        }
        let mut best_c = candidates[0];
        let mut best_r = f64::INFINITY;
        for c in candidates {
            let r = radius(c).unwrap_or(f64::INFINITY);
            if r < best_r {
                best_r = r;
                best_c = c;
            }
        }
        let mut step = 0.25 * best_r;
        while step > 0.5 * self.h {
            let mut moved = false;
            for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let c = [best_c[0] + dx * step, best_c[1] + dy * step];
                let r = radius(c).unwrap_or(f64::INFINITY);
                if r < best_r {
                    best_r = r;
                    best_c = c;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        let c = best_c;
        let cap = best_r * (1.0 + 1e-12) + 1e-15;
        let mut s = Search::new(self.len());
        s.run(self, &[(a, 0.0)], |_, _, k| self.step_len[k], |v| dist(self.center(v), c) <= cap, |v, _| v == b);
        let ball = Path::from_cells(self, s.path_to(b));
        let path = if ball.diameter <= geo.diameter { ball } else { geo };
        Ok(DiameterDistance { value: path.diameter.max(lower), lower, path })
    }

    /// Component labels of the interior minus `forbidden` (4-connectivity).
    /// The component of `x0` gets label 0 when `x0` is not forbidden; the
    /// rest are numbered in scan order.
    pub fn components(&self, forbidden: &CellSet) -> Labeling {
        self.components_where(|c| !forbidden.contains(c))
    }

    pub fn components_where(&self, keep: impl Fn(usize) -> bool) -> Labeling {
        let mut labels = vec![NO_LABEL; self.len()];
        let mut count = 0u32;
        let mut queue = VecDeque::new();
        let mut flood = |seed: usize, labels: &mut Vec<u32>, l: u32| {
            labels[seed] = l;
            queue.push_back(seed);
            while let Some(c) = queue.pop_front() {
                for n in neighbors4(c, self.nx, self.ny) {
                    if self.interior[n] && labels[n] == NO_LABEL && keep(n) {
                        labels[n] = l;
                        queue.push_back(n);
                    }
                }
            }
        };
        if keep(self.x0) {
            flood(self.x0, &mut labels, 0);
            count = 1;
        }
        for c in 0..self.len() {
            if self.interior[c] && labels[c] == NO_LABEL && keep(c) {
                flood(c, &mut labels, count);
                count += 1;
            }
        }
        Labeling { labels, count: count as usize }
    }
}

#[inline]
pub fn neighbors4(c: usize, nx: usize, ny: usize) -> impl Iterator<Item = usize> {
    let (i, j) = (c % nx, c / nx);
    let mut out = [usize::MAX; 4];
    if i + 1 < nx {
        out[0] = c + 1;
    }
    if i > 0 {
        out[1] = c - 1;
    }
    if j + 1 < ny {
        out[2] = c + nx;
    }
    if j > 0 {
        out[3] = c - nx;
    }
    out.into_iter().filter(|&n| n != usize::MAX)
}

#[inline]
pub fn neighbors8(c: usize, nx: usize, ny: usize) -> impl Iterator<Item = usize> {
    let (i, j) = ((c % nx) as i64, (c / nx) as i64);
    (-1i64..=1).flat_map(move |dy| {
        (-1i64..=1).filter_map(move |dx| {
            let (a, b) = (i + dx, j + dy);
            ((dx, dy) != (0, 0) && a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny).then(|| b as usize * nx + a as usize)
        })
    })
}

/// Exact distance from each interior cell center to the union of exterior
/// cell squares, by a separable column/row pass.
fn distance_field(nx: usize, ny: usize, h: f64, interior: &[bool]) -> Vec<f64> {
    let far = (nx + ny) as f64 * 4.0;
    // Squared vertical gap, in cell units, to the nearest exterior square in the column.
    let mut g = vec![0.0f64; nx * ny];
    let mut run = vec![far; ny];
    for i in 0..nx {
        let mut last = f64::NEG_INFINITY;
        for j in 0..ny {
            if !interior[j * nx + i] {
                last = j as f64;
            }
            run[j] = j as f64 - last;
        }
        let mut next = f64::INFINITY;
        for j in (0..ny).rev() {
            if !interior[j * nx + i] {
                next = j as f64;
            }
            let k = run[j].min(next - j as f64).min(far);
            let gap = (k - 0.5).max(0.0);
            g[j * nx + i] = gap * gap;
        }
    }
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let row = &g[j * nx..(j + 1) * nx];
        for i in 0..nx {
            if !interior[j * nx + i] {
                continue;
            }
            let mut best = row[i];
            let mut t = 1usize;
            loop {
                let gap = t as f64 - 0.5;
                let gx = gap * gap;
                if gx >= best || (t > i && i + t >= nx) {
                    break;
                }
                if t <= i {
                    best = best.min(gx + row[i - t]);
                }
                if i + t < nx {
                    best = best.min(gx + row[i + t]);
                }
                t += 1;
            }
            out[j * nx + i] = h * best.sqrt();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use proptest::prelude::*;

    #[test]
    fn four_chain_steps_through_shared_edges() {
        let dom = gallery::square(1.0, 1.0 / 16.0).unwrap().domain;
        let a = dom.point([0.5, 0.5]).unwrap().cell;
        for dir in 0..16 {
            let b = dom.step(a, dir);
            let chain = dom.four_chain(&[a, b, a]);
            assert_eq!((chain[0], *chain.last().unwrap()), (a, a));
            for w in chain.windows(2) {
                assert!(neighbors4(w[0], dom.nx(), dom.ny()).any(|v| v == w[1]), "dir {dir}");
            }
        }
    }

    fn brute_distance(dom: &GridDomain, c: usize) -> f64 {
        let p = dom.center(c);
        let half = dom.h() * 0.5;
        (0..dom.len())
            .filter(|&e| !dom.is_interior(e))
            .map(|e| {
                let q = dom.center(e);
                let dx = ((p[0] - q[0]).abs() - half).max(0.0);
                let dy = ((p[1] - q[1]).abs() - half).max(0.0);
                dx.hypot(dy)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn distance_field_matches_brute_force() {
        for dom in [gallery::disk(1.0, 1.0 / 24.0).unwrap(), gallery::slit_disk(1.0 / 16.0).unwrap(), gallery::comb(3, 1.0 / 32.0).unwrap()] {
            let dom = dom.domain;
            for c in dom.interior_cells() {
                assert!((dom.d(c) - brute_distance(&dom, c)).abs() < 1e-12, "cell {c}");
            }
        }
    }

    #[test]
    fn square_center_distance() {
        let dom = gallery::square(1.0, 1.0 / 256.0).unwrap().domain;
        let p = dom.point([0.5, 0.5]).unwrap();
        assert!((dom.boundary_distance(&p).unwrap() - 0.5).abs() <= dom.h());
        let edge = dom.point([0.5 * dom.h(), 0.5]).unwrap();
        let v = dom.boundary_distance(&edge).unwrap();
        assert!(v > 0.0 && v <= dom.h());
    }

    #[test]
    fn disk_distance_matches_formula() {
        let dom = gallery::disk(1.0, 1.0 / 128.0).unwrap().domain;
        let p = dom.point([0.3, 0.0]).unwrap();
        assert!((dom.boundary_distance(&p).unwrap() - 0.7).abs() <= 2.0 * dom.h());
        for c in dom.interior_cells() {
            let x = dom.center(c);
            let exact = 1.0 - (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!((dom.d(c) - exact).abs() <= 2.0 * dom.h(), "cell {c}");
        }
    }

    #[test]
    fn offset_queries_and_errors() {
        let dom = gallery::square(1.0, 1.0 / 32.0).unwrap().domain;
        let p = dom.point([0.2, 0.61]).unwrap();
        let exact = 0.2f64.min(0.39);
        assert!((dom.boundary_distance(&p).unwrap() - exact).abs() < 1e-12);
        assert!(matches!(dom.point([-0.01, 0.5]), Err(Error::Domain(_))));
        assert!(matches!(dom.point([5.0, 0.5]), Err(Error::Domain(_))));
        assert!(dom.boundary_distance(&Point::center(0)).is_err());
    }

    #[test]
    fn lipschitz_distance_field() {
        let dom = gallery::spiral(1.0 / 64.0).unwrap().domain;
        for c in dom.interior_cells() {
            for (n, k) in dom.edges(c) {
                assert!((dom.d(c) - dom.d(n)).abs() <= dom.step_len(k) + 1e-12);
            }
        }
    }

    #[test]
    fn intrinsic_distance_convex_and_zero() {
        let dom = gallery::square(1.0, 1.0 / 64.0).unwrap().domain;
        let x = dom.point([0.1, 0.2]).unwrap();
        let y = dom.point([0.8, 0.7]).unwrap();
        let e = dist(dom.center(x.cell), dom.center(y.cell));
        let l = dom.intrinsic_distance(&x, &y).unwrap();
        assert!(l >= e - 1e-12 && l <= e * 1.028, "{l} vs {e}");
        assert_eq!(dom.intrinsic_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn slit_length_refines() {
        // Around the rasterized tip at (-h,0): two slanted segments plus the slit thickness.
        let mut vals = Vec::new();
        for h in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
            let dom = gallery::slit_disk(h).unwrap().domain;
            let x = dom.point([0.5, 0.1]).unwrap();
            let y = dom.point([0.5, -0.1]).unwrap();
            let c = dom.center(x.cell);
            let around = 2.0 * (c[0] + h).hypot(c[1] - h) + 2.0 * h;
            let l = dom.intrinsic_distance(&x, &y).unwrap();
            assert!(l >= around && l <= around * 1.06, "{l} vs {around}");
            vals.push(l);
        }
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
        assert!((vals[1] - vals[2]) / vals[2] < 0.03, "{vals:?}");
    }

    #[test]
    fn unreachable_between_components() {
        let (nx, ny) = (8, 5);
        let mut mask = vec![false; nx * ny];
        for j in 1..4 {
            for i in 1..7 {
                mask[j * nx + i] = true;
            }
        }
        let dom = GridDomain::from_mask(nx, ny, 0.1, [0.0, 0.0], mask, 2 * nx + 2).unwrap();
        assert_eq!(dom.interior_count(), 18);
        assert!(matches!(
            GridDomain::from_mask(nx, ny, 0.1, [0.0, 0.0], vec![false; nx * ny], 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn components_examples() {
        let dom = gallery::square(1.0, 1.0 / 16.0).unwrap().domain;
        let all = dom.components(&CellSet::empty(dom.nx()));
        assert_eq!(all.count, 1);
        assert!(dom.interior_cells().all(|c| all.label(c) == Some(0)));
        let everything = CellSet::from_cells(dom.nx(), dom.interior_cells());
        let none = dom.components(&everything);
        assert_eq!(none.count, 0);
        assert!(none.labels.iter().all(|&l| l == NO_LABEL));
    }

    #[test]
    fn diameter_distance_convex() {
        let dom = gallery::square(1.0, 1.0 / 64.0).unwrap().domain;
        let x = dom.point([0.1, 0.2]).unwrap();
        let y = dom.point([0.8, 0.7]).unwrap();
        let e = dist(dom.center(x.cell), dom.center(y.cell));
        let d = dom.intrinsic_diameter_distance(&x, &y).unwrap();
        assert!(d.lower >= e - 1e-12);
        assert!(d.value <= e + 2.0 * dom.h(), "{} vs {e}", d.value);
        assert_eq!(dom.intrinsic_diameter_distance(&x, &x).unwrap().value, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn metric_ordering_on_slit(ax in -0.8f64..0.8, ay in -0.5f64..0.5, bx in -0.8f64..0.8, by in -0.5f64..0.5) {
            let dom = gallery::slit_disk(1.0 / 32.0).unwrap().domain;
            let (Ok(x), Ok(y)) = (dom.point([ax, ay]), dom.point([bx, by])) else { return Ok(()); };
            let e = dist(dom.center(x.cell), dom.center(y.cell));
            let l = dom.intrinsic_distance(&x, &y).unwrap();
            let d = dom.intrinsic_diameter_distance(&x, &y).unwrap();
            prop_assert!(e <= d.lower + 1e-12);
            prop_assert!(d.lower <= d.value + 1e-12);
            prop_assert!(d.value <= l + 1e-9);
            let back = dom.intrinsic_distance(&y, &x).unwrap();
            prop_assert!((l - back).abs() < 1e-9);
        }
    }
}
