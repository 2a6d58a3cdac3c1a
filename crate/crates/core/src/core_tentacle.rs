//! Level-`m` decomposition of a domain into a core of large Whitney cubes,
//! neighbourhoods of boundary cubes of the core, and tentacles blocked from
//! the base point by those neighbourhoods.
//!
//! All sets are unions of grid cells. A dilated cube `λQ` holds the cells
//! whose centers lie in the closed concentric square of side `λ·l(Q)`;
//! `(λQ)_c` is the 4-connected component of `λQ ∩ Ω` containing `Q`.
//! Removing the closure of a cell set from the domain is modelled by
//! removing its cells: two remaining 4-adjacent cells share an edge that the
//! closure meets at most in endpoints.

use crate::cellset::CellSet;
use crate::error::{Error, Result};
use crate::grid::{neighbors4, neighbors8, GridDomain, NO_LABEL};
use crate::properties::PropertyReport;
use crate::quasihyperbolic::{qh_geodesics_from, GeodesicTree};
use crate::search::Search;
use crate::whitney::WhitneyDecomposition;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Factor between the neighbourhood `B_Q` and the blocking set `(c0·Q)_c`.
pub const NEIGHBOURHOOD_FACTOR: f64 = 1.1;

#[derive(Clone, Debug)]
pub struct Piece {
    pub cells: CellSet,
    /// Every Whitney cube meeting the piece has `l ≥ 2^{-(m-2)}`.
    pub thick: bool,
    /// Cubes of `P_m` whose closed blocking set touches the closure of the piece.
    pub bounding: Vec<usize>,
    /// Group whose blocking sets separate the piece from the base point
    /// (tentacles only).
    pub group: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Group {
    /// Cubes of `P_m`, ascending.
    pub cubes: Vec<usize>,
    /// Lowest-index cube of the group.
    pub assigned: usize,
    /// Tentacle piece ids assigned to the group.
    pub tentacles: Vec<usize>,
    /// Union of the assigned tentacles and the neighbourhoods of the cubes.
    pub cells: CellSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Blocking {
    Blocked,
    NotBlocked,
    /// Nothing of the set survives the removal, or the base point is removed.
    Degenerate,
}

/// Reusable flood fill from the base point.
struct Reach {
    stamp: Vec<u32>,
    gen: u32,
    queue: Vec<usize>,
}

impl Reach {
    fn new(n: usize) -> Self {
        Reach { stamp: vec![0; n], gen: 0, queue: Vec::new() }
    }

    /// Marks cells reachable from `start` through interior cells not removed.
    fn run(&mut self, dom: &GridDomain, start: usize, removed: impl Fn(usize) -> bool) {
        self.gen += 1;
        self.queue.clear();
        if removed(start) {
            return;
        }
        let g = self.gen;
        self.stamp[start] = g;
        self.queue.push(start);
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for v in neighbors4(u, dom.nx(), dom.ny()) {
                if self.stamp[v] != g && dom.is_interior(v) && !removed(v) {
                    self.stamp[v] = g;
                    self.queue.push(v);
                }
            }
        }
    }

    #[inline]
    fn reached(&self, c: usize) -> bool {
        self.stamp[c] == self.gen
    }
}

/// Cells cut off from the base point by removing a cell set.
///
/// Every component of the domain minus a nonempty set `R` contains a cell
/// 4-adjacent to `R` (the domain is connected), so the search starts from
/// the rim of `R`. Rim cells joined near `R` form one class; classes then
/// grow in turn and merge on contact, and the search stops once every class
/// except the base point's is exhausted. The base point's class is never
/// grown, so the cost is the size of the cut-off part.
pub struct Cut {
    stamp: Vec<u32>,
    owner: Vec<u32>,
    gen: u32,
    unreachable: Vec<usize>,
}

impl Cut {
    pub fn new(n: usize) -> Self {
        Cut { stamp: vec![0; n], owner: vec![0; n], gen: 0, unreachable: Vec::new() }
    }

    fn find(root: &mut [usize], mut g: usize) -> usize {
        while root[g] != g {
            root[g] = root[root[g]];
            g = root[g];
        }
        g
    }

    /// Computes the cut-off cells for `removed`, which must not contain the
    /// base point. Returns them in no particular order.
    pub fn run(&mut self, dom: &GridDomain, removed: &CellSet) -> &[usize] {
        self.unreachable.clear();
        let (nx, ny) = (dom.nx(), dom.ny());
        let Some((i0, j0, i1, j1)) = removed.bbox() else {
            return &self.unreachable;
        };
        debug_assert!(!removed.contains(dom.x0()));
        let pad = ((i1 - i0).max(j1 - j0) / 2).max(4);
        let (bi0, bj0) = (i0.saturating_sub(pad), j0.saturating_sub(pad));
        let (bi1, bj1) = ((i1 + pad).min(nx - 1), (j1 + pad).min(ny - 1));
        let in_box = |c: usize| {
            let (i, j) = (c % nx, c / nx);
            i >= bi0 && i <= bi1 && j >= bj0 && j <= bj1
        };
        let open = |c: usize| dom.is_interior(c) && !removed.contains(c);

        // Local classes: components of the box minus `removed` holding rim cells.
        self.gen += 1;
        let g = self.gen;
        let mut rim = Vec::new();
        for c in removed.iter() {
            for v in neighbors4(c, nx, ny) {
                if open(v) && self.stamp[v] != g {
                    self.stamp[v] = g;
                    rim.push(v);
                }
            }
        }
        self.gen += 1;
        let g = self.gen;
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &r in &rim {
            if self.stamp[r] == g {
                continue;
            }
            let id = classes.len() as u32;
            let mut cells = vec![r];
            self.stamp[r] = g;
            self.owner[r] = id;
            let mut head = 0;
            while head < cells.len() {
                let u = cells[head];
                head += 1;
                for v in neighbors4(u, nx, ny) {
                    if self.stamp[v] != g && in_box(v) && open(v) {
                        self.stamp[v] = g;
                        self.owner[v] = id;
                        cells.push(v);
                    }
                }
            }
            classes.push(cells);
        }
        if classes.len() < 2 {
            return &self.unreachable;
        }

        let k = classes.len();
        let mut root: Vec<usize> = (0..k).collect();
        let mut queue: Vec<Vec<usize>> = classes;
        let mut heads = vec![0usize; k];
        let mut base = (self.stamp[dom.x0()] == g).then(|| self.owner[dom.x0()] as usize);
        loop {
            let b = base.map(|b| Self::find(&mut root, b));
            let live: Vec<usize> = (0..k).filter(|&c| root[c] == c && Some(c) != b && heads[c] < queue[c].len()).collect();
            if live.is_empty() {
                break;
            }
            if b.is_none() && live.len() == 1 {
                base = Some(live[0]);
                break;
            }
            for &c in &live {
                if root[c] != c || heads[c] >= queue[c].len() || base.is_some_and(|b| Self::find(&mut root, b) == c) {
                    continue;
                }
                let u = queue[c][heads[c]];
                heads[c] += 1;
                for v in neighbors4(u, nx, ny) {
                    if !open(v) {
                        continue;
                    }
                    let cr = Self::find(&mut root, c);
                    if self.stamp[v] != g {
                        self.stamp[v] = g;
                        self.owner[v] = cr as u32;
                        queue[cr].push(v);
                        if v == dom.x0() {
                            base = Some(cr);
                        }
                    } else {
                        let o = Self::find(&mut root, self.owner[v] as usize);
                        if o != cr {
                            let (big, small) = if queue[o].len() - heads[o] >= queue[cr].len() - heads[cr] { (o, cr) } else { (cr, o) };
                            let moved = queue[small].split_off(heads[small]);
                            queue[big].extend(moved);
                            root[small] = big;
                        }
                    }
                }
            }
        }
        let b = Self::find(&mut root, base.expect("the base point's class is found"));
        for c in 0..k {
            if Self::find(&mut root, c) != b {
                self.unreachable.extend_from_slice(&queue[c][..heads[c]]);
            }
        }
        self.unreachable.sort_unstable();
        &self.unreachable
    }
}

/// `(λQ)_c` for the cube with index `q`.
pub fn dilated_component(dom: &GridDomain, dec: &WhitneyDecomposition, q: usize, lambda: f64) -> CellSet {
    let cube = &dec.cubes[q];
    let (h, o) = (dom.h(), dom.origin());
    let half = 0.5 * lambda * cube.l;
    // Cell centers o + h(i + 1/2) inside [c - half, c + half], with a little
    // slack for centers that land exactly on the closed boundary.
    let tol = 1e-9 * h;
    let lo = |c: f64, o: f64| (((c - half - tol - o) / h - 0.5).ceil().max(0.0)) as usize;
    let hi = |c: f64, o: f64, n: usize| ((((c + half + tol - o) / h - 0.5).floor()) as isize).clamp(0, n as isize - 1) as usize;
    let (i0, i1) = (lo(cube.center[0], o[0]), hi(cube.center[0], o[0], dom.nx()));
    let (j0, j1) = (lo(cube.center[1], o[1]), hi(cube.center[1], o[1], dom.ny()));
    let w = i1 + 1 - i0;
    let mut seen = vec![false; w * (j1 + 1 - j0)];
    let local = |c: usize| {
        let (i, j) = dom.ij(c);
        (i >= i0 && i <= i1 && j >= j0 && j <= j1).then(|| (j - j0) * w + (i - i0))
    };
    let mut queue: Vec<usize> = cube.cells(dom.nx()).collect();
    for &c in &queue {
        seen[local(c).expect("the cube lies in its dilation")] = true;
    }
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for v in neighbors4(u, dom.nx(), dom.ny()) {
            if !dom.is_interior(v) {
                continue;
            }
            if let Some(k) = local(v) {
                if !seen[k] {
                    seen[k] = true;
                    queue.push(v);
                }
            }
        }
    }
    CellSet::from_cells(dom.nx(), queue)
}

/// The core `Ω_m^(1)` with its boundary layer `P_m^(1)` and the dilated
/// neighbourhoods of the layer cubes.
#[derive(Clone, Debug)]
pub struct Core {
    pub m: u32,
    pub c0: f64,
    /// `2^{-m}`.
    pub level: f64,
    pub cells: CellSet,
    /// Cubes inside the core, ascending.
    pub cubes: Vec<usize>,
    /// Core cubes with `2^{-m} ≤ l < 2^{-(m-2)}`, ascending.
    pub p1: Vec<usize>,
    /// `(c0·Q)_c` per cube of `p1`.
    pub region: BTreeMap<usize, CellSet>,
    /// `B_Q = (1.1·c0·Q)_c` per cube of `p1`.
    pub nbhd: BTreeMap<usize, CellSet>,
}

pub fn build_core(dom: &GridDomain, dec: &WhitneyDecomposition, m: u32, c0: f64) -> Result<Core> {
    if !(c0 >= 10.0) || !c0.is_finite() {
        return Err(Error::Parameter(format!("blocking constant c0 = {c0} must be at least 10")));
    }
    let level = 0.5f64.powi(m as i32);
    let big = |q: usize| !dec.cubes[q].flagged && dec.cubes[q].l >= level * (1.0 - 1e-12);
    let x0_cube = dec.cube_of_cell(dom.x0()).expect("base point is interior");
    if !big(x0_cube) {
        return Err(Error::Level(format!(
            "the base point's cube has side {} < 2^-{m}; choose a larger level",
            dec.cubes[x0_cube].l
        )));
    }
    let cells = core_cells_at(dom, dec, level).expect("base cube is large");
    let mut cubes: Vec<usize> = cells.iter().filter_map(|c| dec.cube_of_cell(c)).collect();
    cubes.sort_unstable();
    cubes.dedup();
    let p1: Vec<usize> = cubes.iter().copied().filter(|&q| dec.cubes[q].l < 4.0 * level * (1.0 - 1e-12)).collect();
    let mut region = BTreeMap::new();
    let mut nbhd = BTreeMap::new();
    for &q in &p1 {
        region.insert(q, dilated_component(dom, dec, q, c0));
        nbhd.insert(q, dilated_component(dom, dec, q, NEIGHBOURHOOD_FACTOR * c0));
    }
    Ok(Core { m, c0, level, cells, cubes, p1, region, nbhd })
}

/// Cells of the 4-connected component of the base point in the union of
/// non-flagged cubes with side at least `level`; `None` when the base
/// point's cube is smaller.
pub fn core_cells_at(dom: &GridDomain, dec: &WhitneyDecomposition, level: f64) -> Option<CellSet> {
    let big = |q: usize| !dec.cubes[q].flagged && dec.cubes[q].l >= level * (1.0 - 1e-12);
    let mut reach = Reach::new(dom.len());
    reach.run(dom, dom.x0(), |c| !dec.cube_of_cell(c).is_some_and(big));
    (!reach.queue.is_empty()).then(|| CellSet::from_cells(dom.nx(), reach.queue.iter().copied()))
}

impl Core {
    /// Whether `Q` blocks `a`: the base point and `a` lie in different
    /// components of the domain minus the closure of `(c0·Q)_c`.
    pub fn blocks(&self, dom: &GridDomain, dec: &WhitneyDecomposition, q: usize, a: &CellSet) -> Result<Blocking> {
        if a.is_empty() {
            return Err(Error::Parameter("blocking test against an empty set".into()));
        }
        let owned;
        let region = match self.region.get(&q) {
            Some(r) => r,
            None => {
                owned = dilated_component(dom, dec, q, self.c0);
                &owned
            }
        };
        if region.contains(dom.x0()) || a.is_subset(region) {
            return Ok(Blocking::Degenerate);
        }
        let mut reach = Reach::new(dom.len());
        reach.run(dom, dom.x0(), |c| region.contains(c));
        let hit = a.iter().any(|c| !region.contains(c) && reach.reached(c));
        Ok(if hit { Blocking::NotBlocked } else { Blocking::Blocked })
    }
}

#[derive(Clone, Debug)]
pub struct CoreTentacleDecomposition {
    pub core: Core,
    /// `(Q′, Q)` with `Q′|Q` among cubes of `P_m^(1)`, recording for each
    /// blocked `Q` the first blocker in the enumeration.
    pub blocking: Vec<(usize, usize)>,
    /// Blocking tests where `B_Q` lies inside the removed set.
    pub degenerate_blocks: usize,
    pub p_minus: Vec<usize>,
    /// `P_m`, ascending; this is the fixed enumeration.
    pub p: Vec<usize>,
    /// Component label per cell of the domain minus the blocking sets of
    /// `P_m`; `NO_LABEL` for removed and exterior cells.
    pub labels: Vec<u32>,
    pub pieces: Vec<Piece>,
    /// Thick piece ids (`U_i`), starting with the base point's piece.
    pub thick: Vec<usize>,
    /// Tentacle piece ids (`V_i`).
    pub tentacles: Vec<usize>,
    /// Whether the base point's piece met the thickness criterion; it is
    /// thick by definition either way.
    pub u0_meets_criterion: bool,
    /// Largest irredundant family of tentacle boundary collections sharing
    /// one cube.
    pub belong_max: usize,
    pub groups: Vec<Group>,
    /// Tentacles that no group separates from the base point.
    pub unassigned: Vec<usize>,
    /// Cubes of `P_m` in no group.
    pub u_m: Vec<usize>,
}

/// Adds pruning, component relabeling and tentacle grouping to a core.
pub fn prune_and_split(dom: &GridDomain, dec: &WhitneyDecomposition, core: Core) -> Result<CoreTentacleDecomposition> {
    let mut cut = Cut::new(dom.len());
    let mut off = vec![0u32; dom.len()];
    let mut blocking = Vec::new();
    let mut degenerate = 0usize;
    let mut minus = BTreeSet::new();
    let boxes: Vec<(usize, usize, usize, usize)> = core.p1.iter().map(|q| core.nbhd[q].bbox().expect("neighbourhoods are nonempty")).collect();
    let inside = |a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)| a.0 >= b.0 && a.1 >= b.1 && a.2 <= b.2 && a.3 <= b.3;
    let meets = |a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)| a.0 <= b.2 && b.0 <= a.2 && a.1 <= b.3 && b.1 <= a.3;
    for (gen, &b) in core.p1.iter().enumerate() {
        let gen = gen as u32 + 1;
        let reg = &core.region[&b];
        if reg.contains(dom.x0()) {
            return Err(Error::Level(format!("base point lies in the blocking set of cube {b}; choose a larger level")));
        }
        let rb = reg.bbox().expect("blocking sets are nonempty");
        for (qi, &q) in core.p1.iter().enumerate() {
            if inside(boxes[qi], rb) && core.nbhd[&q].is_subset(reg) {
                degenerate += 1;
            }
        }
        let un = cut.run(dom, reg);
        if un.is_empty() {
            continue;
        }
        for &c in un {
            off[c] = gen;
        }
        let ub = CellSet::from_cells(dom.nx(), un.iter().copied()).bbox().expect("nonempty");
        for (qi, &q) in core.p1.iter().enumerate() {
            if minus.contains(&q) || !meets(boxes[qi], ub) {
                continue;
            }
            let mut any = false;
            let mut hit = false;
            for c in core.nbhd[&q].iter() {
                if reg.contains(c) {
                    continue;
                }
                any = true;
                if off[c] != gen {
                    hit = true;
                    break;
                }
            }
            if any && !hit {
                blocking.push((b, q));
                minus.insert(q);
            }
        }
    }
    let p_minus: Vec<usize> = minus.iter().copied().collect();
    let p: Vec<usize> = core.p1.iter().copied().filter(|q| !minus.contains(q)).collect();

    let mut removed = vec![false; dom.len()];
    for &q in &p {
        for c in core.region[&q].iter() {
            removed[c] = true;
        }
    }
    if removed[dom.x0()] {
        return Err(Error::Level("base point lies in a blocking set; choose a larger level".into()));
    }
    let lab = dom.components_where(|c| !removed[c]);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); lab.count];
    for c in dom.interior_cells() {
        if let Some(l) = lab.label(c) {
            members[l as usize].push(c);
        }
    }
    let wide = 4.0 * core.level * (1.0 - 1e-12);
    let mut bounding: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); lab.count];
    for &q in &p {
        for c in core.region[&q].iter() {
            for v in neighbors8(c, dom.nx(), dom.ny()) {
                if let Some(l) = lab.label(v) {
                    bounding[l as usize].insert(q);
                }
            }
        }
    }
    let mut pieces = Vec::with_capacity(lab.count);
    for (l, cells) in members.into_iter().enumerate() {
        let thick = cells.iter().all(|&c| {
            let q = &dec.cubes[dec.cube_of_cell(c).expect("interior cell has a cube")];
            !q.flagged && q.l >= wide
        });
        pieces.push(Piece {
            cells: CellSet::from_cells(dom.nx(), cells),
            thick,
            bounding: bounding[l].iter().copied().collect(),
            group: None,
        });
    }
    let u0_meets_criterion = pieces[0].thick;
    pieces[0].thick = true;
    let thick: Vec<usize> = (0..pieces.len()).filter(|&i| pieces[i].thick).collect();
    let tentacles: Vec<usize> = (0..pieces.len()).filter(|&i| !pieces[i].thick).collect();

    let mut ctd = CoreTentacleDecomposition {
        core,
        blocking,
        degenerate_blocks: degenerate,
        p_minus,
        p,
        labels: lab.labels,
        pieces,
        thick,
        tentacles,
        u0_meets_criterion,
        belong_max: 0,
        groups: Vec::new(),
        unassigned: Vec::new(),
        u_m: Vec::new(),
    };
    group_tentacles(dom, &mut ctd);
    Ok(ctd)
}

/// Builds the full decomposition at level `m`.
pub fn decompose(dom: &GridDomain, dec: &WhitneyDecomposition, m: u32, c0: f64) -> Result<CoreTentacleDecomposition> {
    prune_and_split(dom, dec, build_core(dom, dec, m, c0)?)
}

/// Size of an irredundant subfamily of `sets` with the same union: sets
/// covered by the others are dropped, smallest first.
fn irredundant(mut sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    sets.sort();
    sets.dedup();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut keep = vec![true; sets.len()];
    for i in 0..sets.len() {
        let others: BTreeSet<usize> = (0..sets.len()).filter(|&j| j != i && keep[j]).flat_map(|j| sets[j].iter().copied()).collect();
        if sets[i].iter().all(|q| others.contains(q)) {
            keep[i] = false;
        }
    }
    sets.into_iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect()
}

fn group_tentacles(dom: &GridDomain, ctd: &mut CoreTentacleDecomposition) {
    let v_sets: Vec<&Vec<usize>> = ctd.tentacles.iter().map(|&t| &ctd.pieces[t].bounding).collect();
    let mut tilde = Vec::new();
    for &q in &ctd.p {
        let containing: Vec<Vec<usize>> = v_sets.iter().filter(|s| s.contains(&q)).map(|s| (*s).clone()).collect();
        if containing.is_empty() {
            continue;
        }
        ctd.belong_max = ctd.belong_max.max(irredundant(containing.clone()).len());
        let union: BTreeSet<usize> = containing.into_iter().flatten().collect();
        tilde.push(union.into_iter().collect::<Vec<usize>>());
    }
    let mut families = irredundant(tilde);
    families.sort_by_key(|f| f[0]);

    let mut reach = Reach::new(dom.len());
    let mut groups: Vec<Group> = Vec::new();
    for fam in families {
        let sets: Vec<&CellSet> = fam.iter().map(|q| &ctd.core.region[q]).collect();
        reach.run(dom, dom.x0(), |c| sets.iter().any(|s| s.contains(c)));
        let mut tentacles = Vec::new();
        for &t in &ctd.tentacles {
            let piece = &mut ctd.pieces[t];
            if piece.group.is_none() && !piece.cells.iter().any(|c| reach.reached(c)) {
                piece.group = Some(groups.len());
                tentacles.push(t);
            }
        }
        let cells = CellSet::union_all(
            dom.nx(),
            tentacles.iter().map(|&t| &ctd.pieces[t].cells).chain(fam.iter().map(|q| &ctd.core.nbhd[q])),
        );
        groups.push(Group { assigned: fam[0], cubes: fam, tentacles, cells });
    }
    ctd.unassigned = ctd.tentacles.iter().copied().filter(|&t| ctd.pieces[t].group.is_none()).collect();
    let grouped: BTreeSet<usize> = groups.iter().flat_map(|g| g.cubes.iter().copied()).collect();
    ctd.u_m = ctd.p.iter().copied().filter(|q| !grouped.contains(q)).collect();
    ctd.groups = groups;
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionSummary {
    pub m: u32,
    pub c0: f64,
    pub core_cells: usize,
    pub core_cubes: usize,
    pub p1: Vec<usize>,
    pub p_minus: Vec<usize>,
    pub p: Vec<usize>,
    pub thick: Vec<PieceSummary>,
    pub tentacles: Vec<PieceSummary>,
    pub groups: Vec<GroupSummary>,
    pub u_m: Vec<usize>,
    pub unassigned: Vec<usize>,
    pub max_tentacle_bounding: usize,
    pub belong_max: usize,
    pub overlap_min: u32,
    pub overlap_max: u32,
    pub coverage: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceSummary {
    pub id: usize,
    pub cells: usize,
    pub bounding: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupSummary {
    pub cubes: Vec<usize>,
    pub assigned: usize,
    pub tentacles: Vec<usize>,
    pub cells: usize,
}

impl CoreTentacleDecomposition {
    pub fn m(&self) -> u32 {
        self.core.m
    }

    /// Cells removed as blocking sets of `P_m`.
    pub fn removed(&self, c: usize) -> bool {
        self.labels[c] == NO_LABEL
    }

    /// `Ω_m`, the union of the thick pieces.
    pub fn omega_m(&self) -> CellSet {
        CellSet::union_all(self.core.cells.nx(), self.thick.iter().map(|&i| &self.pieces[i].cells))
    }

    /// Largest tentacle boundary collection `#𝒱_i`.
    pub fn max_tentacle_bounding(&self) -> usize {
        self.tentacles.iter().map(|&t| self.pieces[t].bounding.len()).max().unwrap_or(0)
    }

    /// Per-cell count of the covering sets: `B_Q` for cubes outside all
    /// groups, the thick pieces and the tentacle groups. At grid resolution
    /// the enlargement of a thick piece by `2^{-m}/100` adds no cell center.
    pub fn overlap_counts(&self, dom: &GridDomain) -> Vec<u32> {
        let mut count = vec![0u32; dom.len()];
        for q in &self.u_m {
            for c in self.core.nbhd[q].iter() {
                count[c] += 1;
            }
        }
        for &u in &self.thick {
            for c in self.pieces[u].cells.iter() {
                count[c] += 1;
            }
        }
        for g in &self.groups {
            for c in g.cells.iter() {
                count[c] += 1;
            }
        }
        count
    }

    /// `(min, max)` of the overlap count over interior cells.
    pub fn overlap_range(&self, dom: &GridDomain) -> (u32, u32) {
        let count = self.overlap_counts(dom);
        dom.interior_cells().map(|c| count[c]).fold((u32::MAX, 0), |(lo, hi), k| (lo.min(k), hi.max(k)))
    }

    /// Whether removed cells and pieces partition the interior exactly.
    pub fn tiles(&self, dom: &GridDomain) -> bool {
        let removed: CellSet = CellSet::union_all(dom.nx(), self.p.iter().map(|q| &self.core.region[q]));
        let mut seen = vec![0u8; dom.len()];
        for c in removed.iter() {
            seen[c] += 1;
        }
        for p in &self.pieces {
            for c in p.cells.iter() {
                seen[c] += 1;
            }
        }
        dom.interior_cells().all(|c| seen[c] == 1)
    }

    /// `|Ω_m| / |Ω|` in cells.
    pub fn coverage(&self, dom: &GridDomain) -> f64 {
        self.omega_m().len() as f64 / dom.interior_count() as f64
    }

    pub fn summary(&self, dom: &GridDomain) -> DecompositionSummary {
        let piece = |&i: &usize| PieceSummary { id: i, cells: self.pieces[i].cells.len(), bounding: self.pieces[i].bounding.clone() };
        let (lo, hi) = self.overlap_range(dom);
        DecompositionSummary {
            m: self.core.m,
            c0: self.core.c0,
            core_cells: self.core.cells.len(),
            core_cubes: self.core.cubes.len(),
            p1: self.core.p1.clone(),
            p_minus: self.p_minus.clone(),
            p: self.p.clone(),
            thick: self.thick.iter().map(piece).collect(),
            tentacles: self.tentacles.iter().map(piece).collect(),
            groups: self
                .groups
                .iter()
                .map(|g| GroupSummary { cubes: g.cubes.clone(), assigned: g.assigned, tentacles: g.tentacles.clone(), cells: g.cells.len() })
                .collect(),
            u_m: self.u_m.clone(),
            unassigned: self.unassigned.clone(),
            max_tentacle_bounding: self.max_tentacle_bounding(),
            belong_max: self.belong_max,
            overlap_min: lo,
            overlap_max: hi,
            coverage: self.coverage(dom),
        }
    }
}

/// Inclusion `Ω_M^(1) ⊆ Ω_m` for the largest `M` with `2^{-M} > 10·c0·2^{-m}`.
/// `None` when that core does not exist (the base point's cube is smaller
/// than `2^{-M}`), in which case the inclusion is vacuous.
pub fn coarse_core_included(dom: &GridDomain, dec: &WhitneyDecomposition, ctd: &CoreTentacleDecomposition) -> Option<bool> {
    let m = ctd.core.m as f64;
    let bound = m - (10.0 * ctd.core.c0).log2();
    let big_m = bound.ceil() - 1.0;
    if big_m < 0.0 {
        return None;
    }
    let coarse = build_core(dom, dec, big_m as u32, ctd.core.c0).ok()?;
    Some(coarse.cells.is_subset(&ctd.omega_m()))
}

/// Trails of cubes: the set of nodes whose tree path from the base point
/// meets the cube, counting the cells crossed by multi-cell moves.
pub struct Trails<'a> {
    dom: &'a GridDomain,
    dec: &'a WhitneyDecomposition,
    tree: &'a GeodesicTree,
    offsets: Vec<usize>,
    kids: Vec<usize>,
    cache: HashMap<usize, CellSet>,
    mark: Vec<u32>,
    gen: u32,
}

impl<'a> Trails<'a> {
    pub fn new(dom: &'a GridDomain, dec: &'a WhitneyDecomposition, tree: &'a GeodesicTree) -> Self {
        let (offsets, kids) = tree.children();
        Trails { dom, dec, tree, offsets, kids, cache: HashMap::new(), mark: vec![0; dom.len()], gen: 0 }
    }

    /// Nodes whose own position or incoming tree edge meets cube `q`.
    fn hits(&self, q: usize) -> Vec<usize> {
        let cube = &self.dec.cubes[q];
        let (nx, ny) = (self.dom.nx(), self.dom.ny());
        let inside = |c: usize| self.dec.cube_of_cell(c) == Some(q);
        let mut out = Vec::new();
        let (i0, j0) = (cube.i0.saturating_sub(2), cube.j0.saturating_sub(2));
        let (i1, j1) = ((cube.i0 + cube.side + 2).min(nx), (cube.j0 + cube.side + 2).min(ny));
        for j in j0..j1 {
            for i in i0..i1 {
                let v = j * nx + i;
                if !self.tree.k[v].is_finite() {
                    continue;
                }
                if inside(v) {
                    out.push(v);
                } else if let Some(p) = self.tree.parent(v) {
                    let dir = self.dom.dir_between(p, v).expect("tree edges are graph edges");
                    let cells = self.dom.edge_cells(p, dir);
                    if cells[1..cells.len() - 1].iter().any(|&c| inside(c)) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// A trail computed earlier by [`Trails::trail`].
    pub fn cached(&self, q: usize) -> &CellSet {
        &self.cache[&q]
    }

    pub fn trail(&mut self, q: usize) -> &CellSet {
        if !self.cache.contains_key(&q) {
            self.gen += 1;
            let g = self.gen;
            let mut stack = self.hits(q);
            let mut cells = Vec::new();
            while let Some(v) = stack.pop() {
                if self.mark[v] == g {
                    continue;
                }
                self.mark[v] = g;
                cells.push(v);
                stack.extend_from_slice(&self.kids[self.offsets[v]..self.offsets[v + 1]]);
            }
            self.cache.insert(q, CellSet::from_cells(self.dom.nx(), cells));
        }
        &self.cache[&q]
    }
}

/// Covers of the cubes of `P_m` with the cell-wise check that the trails of
/// the cover exhaust `B_Q`.
#[derive(Clone, Debug)]
pub struct Covers {
    pub cover: BTreeMap<usize, Vec<usize>>,
    /// Cells of some `B_Q` outside the core and outside every trail of a
    /// layer cube.
    pub uncovered: usize,
}

pub fn covers(dec: &WhitneyDecomposition, ctd: &CoreTentacleDecomposition, trails: &mut Trails) -> Covers {
    let core_cube: BTreeSet<usize> = ctd.core.cubes.iter().copied().collect();
    let mut in_trail: HashMap<usize, Vec<usize>> = HashMap::new();
    for &q in &ctd.core.p1 {
        for c in trails.trail(q).iter() {
            in_trail.entry(c).or_default().push(q);
        }
    }
    let mut cover = BTreeMap::new();
    let mut uncovered = 0;
    for &q in &ctd.p {
        let mut set = BTreeSet::new();
        for z in ctd.core.nbhd[&q].iter() {
            let mut found = false;
            if let Some(c) = dec.cube_of_cell(z).filter(|c| core_cube.contains(c)) {
                set.insert(c);
                found = true;
            }
            if let Some(qs) = in_trail.get(&z) {
                set.extend(qs.iter().copied());
                found = true;
            }
            if !found {
                uncovered += 1;
            }
        }
        cover.insert(q, set.into_iter().collect());
    }
    Covers { cover, uncovered }
}

/// Quasihyperbolic distances between cube centers and face-adjacent cube
/// chains along the geodesics, keyed by ordered pairs `(a, b)`, `a < b`.
#[derive(Clone, Debug, Default)]
pub struct PairTable {
    pub entries: BTreeMap<(usize, usize), (f64, Vec<usize>)>,
}

/// Removes loops from a cube sequence whose consecutive entries are distinct
/// and face-adjacent.
fn loop_erase(seq: Vec<usize>) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut pos: HashMap<usize, usize> = HashMap::new();
    for q in seq {
        if let Some(&i) = pos.get(&q) {
            for r in out.drain(i + 1..) {
                pos.remove(&r);
            }
        } else {
            pos.insert(q, out.len());
            out.push(q);
        }
    }
    out
}

impl PairTable {
    pub fn build(dom: &GridDomain, dec: &WhitneyDecomposition, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut by_source: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (a, b) in pairs {
            if a != b {
                by_source.entry(a.min(b)).or_default().insert(a.max(b));
            }
        }
        let nx = dom.nx();
        let mut search = Search::new(dom.len());
        let mut entries = BTreeMap::new();
        for (a, targets) in by_source {
            let targets: Vec<usize> = targets.into_iter().collect();
            let cells: Vec<usize> = targets.iter().map(|&b| dec.cubes[b].center_cell(nx)).collect();
            let found = qh_geodesics_from(dom, &mut search, dec.cubes[a].center_cell(nx), &cells);
            for (&b, (d, path)) in targets.iter().zip(found) {
                let mut seq: Vec<usize> = dom.four_chain(&path).into_iter().map(|c| dec.cube_of_cell(c).expect("path cells are interior")).collect();
                seq.dedup();
                entries.insert((a, b), (d, loop_erase(seq)));
            }
        }
        PairTable { entries }
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        if a == b {
            return Some(0.0);
        }
        self.entries.get(&(a.min(b), a.max(b))).map(|e| e.0)
    }

    /// `F(a, b)`, with `F(b, a)` its reverse.
    pub fn chain(&self, a: usize, b: usize, threshold: f64) -> Result<Vec<usize>> {
        if a == b {
            return Ok(vec![a]);
        }
        let (d, chain) = self.entries.get(&(a.min(b), a.max(b))).ok_or_else(|| Error::Chain(a, b, f64::NAN, threshold))?;
        if *d > threshold {
            return Err(Error::Chain(a, b, *d, threshold));
        }
        let mut c = chain.clone();
        if a > b {
            c.reverse();
        }
        Ok(c)
    }
}

/// Measured constants of the distance lemmas and chain bounds at one level.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub m: u32,
    pub cover_max: usize,
    pub uncovered: usize,
    /// Cubes of a cover with intersecting trails.
    pub trail_pairs: PropertyReport,
    /// Cubes of `P_m` with intersecting neighbourhoods.
    pub nbhd_pairs: PropertyReport,
    /// A cube of `P_m` and a cover cube meeting its neighbourhood.
    pub cover_pairs: PropertyReport,
    /// Group members and their assigned cube.
    pub group_pairs: PropertyReport,
    pub chain_max: usize,
    /// Largest number of required pairs whose chain passes through one cube.
    pub chain_overlap: usize,
}

fn sorted(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

pub fn verify_distance_lemmas(dom: &GridDomain, dec: &WhitneyDecomposition, ctd: &CoreTentacleDecomposition, tree: &GeodesicTree, seed: u64) -> LemmaReport {
    let mut trails = Trails::new(dom, dec, tree);
    let cov = covers(dec, ctd, &mut trails);

    let mut trail_pairs = BTreeSet::new();
    for list in cov.cover.values() {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                trail_pairs.insert((a, b));
            }
        }
    }
    for &(a, b) in &trail_pairs {
        trails.trail(a);
        trails.trail(b);
    }
    let trail_pairs: BTreeSet<(usize, usize)> =
        trail_pairs.into_iter().filter(|&(a, b)| trails.cached(a).intersects(trails.cached(b))).collect();

    let mut nbhd_pairs = BTreeSet::new();
    for (i, &a) in ctd.p.iter().enumerate() {
        for &b in &ctd.p[i + 1..] {
            if ctd.core.nbhd[&a].intersects(&ctd.core.nbhd[&b]) {
                nbhd_pairs.insert(sorted(a, b));
            }
        }
    }
    let mut cover_pairs = BTreeSet::new();
    for (&q, list) in &cov.cover {
        let nb = &ctd.core.nbhd[&q];
        for &c in list {
            if c != q && dec.cubes[c].cells(dom.nx()).any(|x| nb.contains(x)) {
                cover_pairs.insert(sorted(q, c));
            }
        }
    }
    let mut group_pairs = BTreeSet::new();
    for g in &ctd.groups {
        for &q in &g.cubes {
            if q != g.assigned {
                group_pairs.insert(sorted(q, g.assigned));
            }
        }
    }
    // Pairs of assigned cubes with meeting tentacles, and layer cubes whose
    // neighbourhood meets a tentacle group.
    let mut tentacle_pairs = BTreeSet::new();
    for (i, gi) in ctd.groups.iter().enumerate() {
        for gj in &ctd.groups[i + 1..] {
            if gi.cells.intersects(&gj.cells) {
                tentacle_pairs.insert(sorted(gi.assigned, gj.assigned));
            }
        }
        for &q in &ctd.p {
            if q != gi.assigned && ctd.core.nbhd[&q].intersects(&gi.cells) {
                tentacle_pairs.insert(sorted(q, gi.assigned));
            }
        }
    }

    let all: BTreeSet<(usize, usize)> =
        trail_pairs.iter().chain(&nbhd_pairs).chain(&cover_pairs).chain(&group_pairs).chain(&tentacle_pairs).copied().collect();
    let table = PairTable::build(dom, dec, all.iter().copied());

    let report = |name: &str, set: &BTreeSet<(usize, usize)>| {
        let mut rep = PropertyReport::new(name, dom.h(), seed);
        for &(a, b) in set {
            let d = table.distance(a, b).expect("pair was measured");
            rep.push(vec![dec.cubes[a].center, dec.cubes[b].center], d, None);
        }
        rep.parts.insert("m".into(), ctd.core.m as f64);
        rep.finish(None)
    };

    let required: BTreeSet<(usize, usize)> = cover_pairs.iter().chain(&nbhd_pairs).chain(&tentacle_pairs).copied().collect();
    let mut through: HashMap<usize, usize> = HashMap::new();
    let mut chain_max = 0;
    for &(a, b) in &required {
        let chain = &table.entries[&(a, b)].1;
        chain_max = chain_max.max(chain.len());
        for &q in chain {
            *through.entry(q).or_default() += 1;
        }
    }
    LemmaReport {
        m: ctd.core.m,
        cover_max: cov.cover.values().map(Vec::len).max().unwrap_or(0),
        uncovered: cov.uncovered,
        trail_pairs: report("trail_pairs_dist_k", &trail_pairs),
        nbhd_pairs: report("neighbourhood_pairs_dist_k", &nbhd_pairs),
        cover_pairs: report("cover_pairs_dist_k", &cover_pairs),
        group_pairs: report("group_pairs_dist_k", &group_pairs),
        chain_max,
        chain_overlap: through.values().copied().max().unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::quasihyperbolic::radial_tree;
    use crate::whitney::whitney_decompose;

    fn setup(name: &str, h: f64) -> (GridDomain, WhitneyDecomposition) {
        let dom = gallery::by_name(name, h).unwrap().domain;
        let dec = whitney_decompose(&dom).unwrap();
        (dom, dec)
    }

    fn cut_off_by_flood(dom: &GridDomain, removed: &CellSet) -> Vec<usize> {
        let mut reach = Reach::new(dom.len());
        reach.run(dom, dom.x0(), |c| removed.contains(c));
        dom.interior_cells().filter(|&c| !removed.contains(c) && !reach.reached(c)).collect()
    }

    #[test]
    fn cut_search_matches_flood_fill() {
        for (name, h, m) in [("dumbbell", 1.0 / 128.0, 7), ("spiral", 1.0 / 64.0, 6), ("slit_disk", 1.0 / 64.0, 6), ("comb", 1.0 / 128.0, 7)] {
            let (dom, dec) = setup(name, h);
            let core = build_core(&dom, &dec, m, 10.0).unwrap();
            let mut cut = Cut::new(dom.len());
            let mut nonempty = 0;
            for &q in core.p1.iter().step_by(3) {
                let reg = &core.region[&q];
                if reg.contains(dom.x0()) {
                    continue;
                }
                let fast = cut.run(&dom, reg).to_vec();
                let slow = cut_off_by_flood(&dom, reg);
                assert_eq!(fast, slow, "{name} cube {q}");
                nonempty += !slow.is_empty() as usize;
            }
            assert!(name == "slit_disk" || nonempty > 0, "{name}");
        }
    }

    #[test]
    fn small_c0_and_coarse_levels_are_rejected() {
        let (dom, dec) = setup("disk", 1.0 / 32.0);
        assert!(matches!(build_core(&dom, &dec, 5, 5.0), Err(Error::Parameter(_))));
        // The base point's cube has side 1/4.
        assert!(matches!(build_core(&dom, &dec, 1, 10.0), Err(Error::Level(_))));
        assert!(build_core(&dom, &dec, 2, 10.0).is_ok());
    }

    #[test]
    fn minimal_level_core_is_the_base_cube_component() {
        let (dom, dec) = setup("disk", 1.0 / 32.0);
        let core = build_core(&dom, &dec, 2, 10.0).unwrap();
        let q0 = dec.cube_of_cell(dom.x0()).unwrap();
        assert_eq!(dec.cubes[q0].l, 0.25);
        // Only cubes of side 1/4 qualify, and they touch the base cube.
        assert!(core.cubes.iter().all(|&q| dec.cubes[q].l == 0.25));
        assert!(core.cubes.contains(&q0));
        assert_eq!(core.cells.len(), core.cubes.len() * 64);
    }

    #[test]
    fn disk_layer_is_an_annulus_and_the_core_is_connected() {
        let (dom, dec) = setup("disk", 1.0 / 64.0);
        let core = build_core(&dom, &dec, 5, 10.0).unwrap();
        let lab = dom.components_where(|c| core.cells.contains(c));
        assert_eq!(lab.count, 1);
        let radii: Vec<f64> = core.p1.iter().map(|&q| crate::grid::dist(dec.cubes[q].center, [0.0, 0.0])).collect();
        let (lo, hi) = radii.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(lo > 0.4 && hi < 1.0, "{lo} {hi}");
        for &q in &core.p1 {
            let l = dec.cubes[q].l;
            assert!(l >= core.level && l < 4.0 * core.level);
        }
    }

    #[test]
    fn convex_dilations_are_plain_intersections() {
        let (dom, dec) = setup("square", 1.0 / 64.0);
        let core = build_core(&dom, &dec, 5, 10.0).unwrap();
        for &q in core.p1.iter().take(20) {
            let full = dilated_component(&dom, &dec, q, 10.0);
            let cube = &dec.cubes[q];
            let half = 5.0 * cube.l + 1e-12;
            let plain = dom.interior_cells().filter(|&c| {
                let p = dom.center(c);
                (p[0] - cube.center[0]).abs() <= half && (p[1] - cube.center[1]).abs() <= half
            });
            assert_eq!(full, CellSet::from_cells(dom.nx(), plain));
        }
    }

    #[test]
    fn convex_domain_has_no_blocking() {
        let (dom, dec) = setup("square", 1.0 / 64.0);
        let ctd = decompose(&dom, &dec, 6, 10.0).unwrap();
        assert!(ctd.blocking.is_empty());
        assert_eq!(ctd.p, ctd.core.p1);
    }

    #[test]
    fn corridor_cube_blocks_the_far_chamber() {
        let (dom, dec) = setup("dumbbell", 1.0 / 128.0);
        let core = build_core(&dom, &dec, 6, 10.0).unwrap();
        let mid = dom.point([0.5, 0.2]).unwrap().cell;
        let q = dec.cube_of_cell(mid).unwrap();
        let far = CellSet::from_cells(dom.nx(), [dom.point([0.9, 0.2]).unwrap().cell]);
        let near = CellSet::from_cells(dom.nx(), [dom.point([0.1, 0.2]).unwrap().cell]);
        assert_eq!(core.blocks(&dom, &dec, q, &far).unwrap(), Blocking::Blocked);
        assert_eq!(core.blocks(&dom, &dec, q, &near).unwrap(), Blocking::NotBlocked);
        assert!(matches!(core.blocks(&dom, &dec, q, &CellSet::empty(dom.nx())), Err(Error::Parameter(_))));
        let inside = CellSet::from_cells(dom.nx(), [mid]);
        assert_eq!(core.blocks(&dom, &dec, q, &inside).unwrap(), Blocking::Degenerate);
    }

    #[test]
    fn decomposition_tiles_and_overlap_is_positive() {
        for (name, h, m) in [("disk", 1.0 / 64.0, 5), ("disk", 1.0 / 64.0, 6), ("slit_disk", 1.0 / 64.0, 6), ("dumbbell", 1.0 / 128.0, 7)] {
            let (dom, dec) = setup(name, h);
            let ctd = decompose(&dom, &dec, m, 10.0).unwrap();
            assert!(ctd.tiles(&dom), "{name} m={m}");
            assert!(ctd.unassigned.is_empty(), "{name} m={m}");
            let (lo, _) = ctd.overlap_range(&dom);
            assert!(lo >= 1, "{name} m={m}");
            assert_eq!(ctd.labels[dom.x0()], 0);
            assert!(ctd.pieces[0].thick);
            for &u in &ctd.thick[1..] {
                assert!(ctd.pieces[u].cells.iter().all(|c| dec.cubes[dec.cube_of_cell(c).unwrap()].l >= 4.0 * ctd.core.level));
            }
        }
    }

    #[test]
    fn dumbbell_far_chamber_is_one_tentacle() {
        let f = gallery::dumbbell(1.0 / 128.0).unwrap();
        let dom = &f.domain;
        let dec = whitney_decompose(dom).unwrap();
        let ctd = decompose(dom, &dec, 7, 10.0).unwrap();
        let far = ctd.labels[dom.point(f.landmarks[1]).unwrap().cell];
        assert_eq!(ctd.tentacles, vec![far as usize]);
        assert_eq!(ctd.groups.len(), 1);
        let g = &ctd.groups[0];
        assert_eq!(g.assigned, g.cubes[0]);
        assert_eq!(g.tentacles, vec![far as usize]);
        assert_eq!(g.cubes, ctd.pieces[far as usize].bounding);
        assert_eq!(ctd.u_m.len() + g.cubes.len(), ctd.p.len());
    }

    #[test]
    fn comb_teeth_become_tentacles() {
        let f = gallery::comb(8, 1.0 / 256.0).unwrap();
        let dom = &f.domain;
        let dec = whitney_decompose(dom).unwrap();
        let ctd = decompose(dom, &dec, 8, 10.0).unwrap();
        let mut seen = BTreeSet::new();
        for tip in &f.landmarks {
            let l = ctd.labels[dom.point(*tip).unwrap().cell];
            assert_ne!(l, NO_LABEL);
            let piece = &ctd.pieces[l as usize];
            assert!(!piece.thick, "tooth tip {tip:?} in a thick piece");
            assert!(piece.group.is_some());
            seen.insert(l);
        }
        assert_eq!(seen.len(), f.landmarks.len());
        assert_eq!(ctd.tentacles.len(), f.landmarks.len());
        assert!(ctd.max_tentacle_bounding() >= 1);
        let (lo, _) = ctd.overlap_range(dom);
        assert!(lo >= 1);
    }

    #[test]
    fn coarse_core_lies_in_the_thick_part() {
        let (dom, dec) = setup("disk", 1.0 / 256.0);
        let ctd = decompose(&dom, &dec, 9, 10.0).unwrap();
        // 2^-M > 100 * 2^-9 gives M = 2, whose core is the base cube's component.
        assert_eq!(coarse_core_included(&dom, &dec, &ctd), Some(true));
        let small = decompose(&dom, &dec, 8, 10.0).unwrap();
        assert_eq!(coarse_core_included(&dom, &dec, &small), None);
    }

    #[test]
    fn thick_part_grows_with_the_level() {
        let (dom, dec) = setup("slit_disk", 1.0 / 128.0);
        let cov: Vec<f64> = (6..=8).map(|m| decompose(&dom, &dec, m, 10.0).unwrap().coverage(&dom)).collect();
        assert!(cov.windows(2).all(|w| w[0] < w[1]), "{cov:?}");
    }

    #[test]
    fn blocking_persists_for_larger_c0() {
        let (dom, dec) = setup("dumbbell", 1.0 / 128.0);
        let small = build_core(&dom, &dec, 7, 10.0).unwrap();
        let large = build_core(&dom, &dec, 7, 12.0).unwrap();
        let mut checked = 0;
        for &b in small.p1.iter().step_by(7) {
            if !large.region[&b].is_subset(&small.region[&b]) && small.region[&b].is_subset(&large.region[&b]) && !large.region[&b].contains(dom.x0()) {
                for &q in small.p1.iter().step_by(11) {
                    if small.blocks(&dom, &dec, b, &small.nbhd[&q]).unwrap() == Blocking::Blocked {
                        assert_ne!(large.blocks(&dom, &dec, b, &small.nbhd[&q]).unwrap(), Blocking::NotBlocked);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn lemma_distances_are_finite_and_covers_complete() {
        let (dom, dec) = setup("slit_disk", 1.0 / 64.0);
        let tree = radial_tree(&dom);
        let ctd = decompose(&dom, &dec, 6, 10.0).unwrap();
        let r = verify_distance_lemmas(&dom, &dec, &ctd, &tree, 3);
        assert_eq!(r.uncovered, 0);
        for rep in [&r.trail_pairs, &r.nbhd_pairs, &r.cover_pairs] {
            assert!(rep.pass && rep.constant.is_finite() && rep.constant > 0.0, "{}", rep.property);
        }
        // No tentacles at this level: the group class is vacuous.
        assert!(r.group_pairs.records.is_empty() && r.group_pairs.pass);
        assert!(r.chain_max >= 2 && r.chain_overlap >= 1);
    }

    #[test]
    fn irredundant_keeps_a_minimal_cover() {
        let sets = vec![vec![1, 2], vec![2, 3], vec![1, 2, 3], vec![4]];
        let out = irredundant(sets);
        let union: BTreeSet<usize> = out.iter().flatten().copied().collect();
        assert_eq!(union, [1, 2, 3, 4].into_iter().collect());
        for (i, s) in out.iter().enumerate() {
            let others: BTreeSet<usize> = out.iter().enumerate().filter(|(j, _)| *j != i).flat_map(|(_, t)| t.iter().copied()).collect();
            assert!(!s.iter().all(|q| others.contains(q)));
        }
    }

    #[test]
    fn trails_contain_their_cube_and_root_trail_is_everything() {
        let (dom, dec) = setup("slit_disk", 1.0 / 32.0);
        let tree = radial_tree(&dom);
        let mut trails = Trails::new(&dom, &dec, &tree);
        let q0 = dec.cube_of_cell(dom.x0()).unwrap();
        assert_eq!(trails.trail(q0).len(), dom.interior_count());
        for q in (0..dec.cubes.len()).step_by(17) {
            let cells: Vec<usize> = dec.cubes[q].cells(dom.nx()).collect();
            let t = trails.trail(q);
            assert!(cells.iter().all(|&c| t.contains(c)));
        }
    }

    #[test]
    fn trail_matches_path_scan() {
        let (dom, dec) = setup("comb", 1.0 / 64.0);
        let tree = radial_tree(&dom);
        let mut trails = Trails::new(&dom, &dec, &tree);
        let q = dec.cube_of_cell(dom.point([0.375, 0.3]).unwrap().cell).unwrap();
        let fast = trails.trail(q).clone();
        // Oracle: walk every tree path and test each crossed cell.
        let slow = dom.interior_cells().filter(|&y| {
            let path = tree.path_to(y);
            dom.cell_chain(&path).iter().any(|&c| dec.cube_of_cell(c) == Some(q))
        });
        assert_eq!(fast, CellSet::from_cells(dom.nx(), slow));
    }

    #[test]
    fn covers_exhaust_the_neighbourhoods() {
        let f = gallery::comb(8, 1.0 / 256.0).unwrap();
        let dom = &f.domain;
        let dec = whitney_decompose(dom).unwrap();
        let tree = radial_tree(dom);
        let ctd = decompose(dom, &dec, 8, 10.0).unwrap();
        let mut trails = Trails::new(dom, &dec, &tree);
        let cov = covers(&dec, &ctd, &mut trails);
        assert_eq!(cov.uncovered, 0);
        for (&q, list) in &cov.cover {
            for z in ctd.core.nbhd[&q].iter() {
                assert!(list.iter().any(|&c| trails.trail(c).contains(z)));
            }
        }
    }

    #[test]
    fn chains_are_face_adjacent_and_symmetric() {
        let (dom, dec) = setup("disk", 1.0 / 64.0);
        let ctd = decompose(&dom, &dec, 5, 10.0).unwrap();
        let a = ctd.p[0];
        let pairs: Vec<(usize, usize)> = ctd.p.iter().skip(1).take(8).map(|&b| (a, b)).collect();
        let table = PairTable::build(&dom, &dec, pairs.iter().copied());
        for &(x, y) in &pairs {
            let f = table.chain(x, y, f64::INFINITY).unwrap();
            let mut g = table.chain(y, x, f64::INFINITY).unwrap();
            g.reverse();
            assert_eq!(f, g);
            assert_eq!((f[0], *f.last().unwrap()), (x, y));
            for w in f.windows(2) {
                assert!(dec.adjacency[w[0]].contains(&w[1]));
            }
            let mut u = f.clone();
            u.sort_unstable();
            u.dedup();
            assert_eq!(u.len(), f.len());
            let d = table.distance(x, y).unwrap();
            assert!(matches!(table.chain(x, y, 0.5 * d), Err(Error::Chain(..))));
        }
        assert_eq!(table.chain(a, a, 0.0).unwrap(), vec![a]);
        let nb = dec.adjacency[a][0];
        let t2 = PairTable::build(&dom, &dec, [(a, nb)]);
        assert_eq!(t2.chain(a, nb, f64::INFINITY).unwrap().len(), 2);
    }

    #[test]
    fn no_tentacles_means_no_groups() {
        let (dom, dec) = setup("square", 1.0 / 64.0);
        let ctd = decompose(&dom, &dec, 6, 10.0).unwrap();
        assert!(ctd.tentacles.is_empty());
        assert!(ctd.groups.is_empty());
        assert_eq!(ctd.u_m, ctd.p);
    }
}
