//! Dijkstra-type searches over the implicit 16-neighbour graph of a domain.
//!
//! Ties in path length are broken by comparing node index sequences from the
//! source, so extracted paths are reproducible.

use crate::grid::GridDomain;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq)]
struct Item {
    d: f64,
    node: u32,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable single-source or multi-source shortest-path state. Arrays are
/// reset lazily through a generation stamp, so truncated searches only pay
/// for the nodes they touch.
pub struct Search {
    dist: Vec<f64>,
    parent: Vec<u32>,
    depth: Vec<u32>,
    stamp: Vec<u32>,
    done: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Item>,
    settled: Vec<usize>,
}

impl Search {
    pub fn new(n: usize) -> Self {
        Search {
            dist: vec![f64::INFINITY; n],
            parent: vec![NO_PARENT; n],
            depth: vec![0; n],
            stamp: vec![0; n],
            done: vec![0; n],
            generation: 0,
            heap: BinaryHeap::new(),
            settled: Vec::new(),
        }
    }

    #[inline]
    fn fresh(&self, v: usize) -> bool {
        self.stamp[v] == self.generation
    }

    /// Tentative or final distance; infinite when not reached.
    #[inline]
    pub fn dist(&self, v: usize) -> f64 {
        if self.fresh(v) {
            self.dist[v]
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.fresh(v) && self.parent[v] != NO_PARENT).then(|| self.parent[v] as usize)
    }

    #[inline]
    pub fn is_settled(&self, v: usize) -> bool {
        self.done[v] == self.generation
    }

    pub fn reached(&self, v: usize) -> bool {
        self.is_settled(v)
    }

    /// Nodes in settle order.
    pub fn settled(&self) -> &[usize] {
        &self.settled
    }

    /// Node sequence from a source to `v`.
    pub fn path_to(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut c = v;
        while let Some(p) = self.parent(c) {
            out.push(p);
            c = p;
        }
        out.reverse();
        out
    }

    fn reset(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.done.fill(0);
            self.generation = 1;
        }
        self.heap.clear();
        self.settled.clear();
    }

    /// Orders `path(a) + [v]` against `path(b) + [v]`.
    fn lex_cmp(&self, a: usize, b: usize, v: usize) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let (mut x, mut y) = (a, b);
        let (mut xn, mut yn) = (v, v);
        while self.depth[x] > self.depth[y] {
            xn = x;
            x = self.parent[x] as usize;
        }
        while self.depth[y] > self.depth[x] {
            yn = y;
            y = self.parent[y] as usize;
        }
        if x == y {
            return xn.cmp(&yn);
        }
        loop {
            let (px, py) = (self.parent[x], self.parent[y]);
            if px == py {
                return x.cmp(&y);
            }
            x = px as usize;
            y = py as usize;
        }
    }

    /// Runs Dijkstra from `sources` (node, initial distance).
    ///
    /// `weight(u, v, dir)` gives edge weights, `allowed(v)` restricts the node
    /// set and `stop(v, d)` is called when `v` is settled; returning `true`
    /// ends the search.
    pub fn run<W, A, S>(&mut self, dom: &GridDomain, sources: &[(usize, f64)], weight: W, allowed: A, mut stop: S)
    where
        W: Fn(usize, usize, usize) -> f64,
        A: Fn(usize) -> bool,
        S: FnMut(usize, f64) -> bool,
    {
        self.reset();
        let g = self.generation;
        for &(s, d0) in sources {
            if !dom.is_interior(s) || !allowed(s) {
                continue;
            }
            if self.stamp[s] != g || d0 < self.dist[s] || (d0 == self.dist[s] && s < self.parent[s] as usize) {
                self.stamp[s] = g;
                self.dist[s] = d0;
                self.parent[s] = NO_PARENT;
                self.depth[s] = 0;
                self.heap.push(Item { d: d0, node: s as u32 });
            }
        }
        while let Some(Item { d, node }) = self.heap.pop() {
            let u = node as usize;
            if self.done[u] == g || d > self.dist[u] {
                continue;
            }
            self.done[u] = g;
            self.settled.push(u);
            if stop(u, d) {
                break;
            }
            let mask = dom.move_mask(u);
            for k in 0..16 {
                if mask & (1 << k) == 0 {
                    continue;
                }
                let v = dom.step(u, k);
                if self.done[v] == g || !allowed(v) {
                    continue;
                }
                let nd = d + weight(u, v, k);
                if self.stamp[v] != g || nd < self.dist[v] {
                    self.stamp[v] = g;
                    self.dist[v] = nd;
                    self.parent[v] = u as u32;
                    self.depth[v] = self.depth[u] + 1;
                    self.heap.push(Item { d: nd, node: v as u32 });
                } else if nd == self.dist[v] && self.lex_cmp(u, self.parent[v] as usize, v) == Ordering::Less {
                    self.parent[v] = u as u32;
                    self.depth[v] = self.depth[u] + 1;
                }
            }
        }
    }
}

/// Minimax search: the smallest `r` such that some path from `a` to `b` has
/// every node cost at most `r`. Returns `r` and such a path.
pub fn bottleneck_search(dom: &GridDomain, a: usize, b: usize, cost: impl Fn(usize) -> f64) -> Option<(f64, Vec<usize>)> {
    let n = dom.len();
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![NO_PARENT; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    key[a] = cost(a);
    heap.push(Item { d: key[a], node: a as u32 });
    while let Some(Item { d, node }) = heap.pop() {
        let u = node as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == b {
            let mut path = vec![b];
            let mut c = b;
            while parent[c] != NO_PARENT {
                c = parent[c] as usize;
                path.push(c);
            }
            path.reverse();
            return Some((d, path));
        }
        for (v, _) in dom.edges(u) {
            if done[v] {
                continue;
            }
            let nk = d.max(cost(v));
            if nk < key[v] {
                key[v] = nk;
                parent[v] = u as u32;
                heap.push(Item { d: nk, node: v as u32 });
            }
        }
    }
    None
}

/// Widest-path search over 4-adjacent interior cells: for every cell, the
/// largest `m` such that some path from a source keeps every cell value
/// (the source included) at least `m`.
pub fn widest_search(dom: &GridDomain, sources: &[usize], value: impl Fn(usize) -> f64) -> Vec<f64> {
    let n = dom.len();
    let mut key = vec![f64::NEG_INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        let k = value(s);
        if k > key[s] {
            key[s] = k;
            // Max-heap on the key through the min-ordered item.
            heap.push(Item { d: -k, node: s as u32 });
        }
    }
    while let Some(Item { d, node }) = heap.pop() {
        let u = node as usize;
        if done[u] {
            continue;
        }
        done[u] = true;
        let ku = -d;
        for v in crate::grid::neighbors4(u, dom.nx(), dom.ny()) {
            if done[v] || !dom.is_interior(v) {
                continue;
            }
            let nk = ku.min(value(v));
            if nk > key[v] {
                key[v] = nk;
                heap.push(Item { d: -nk, node: v as u32 });
            }
        }
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    #[test]
    fn ties_are_broken_by_smallest_sequence() {
        let dom = gallery::square(1.0, 1.0 / 8.0).unwrap().domain;
        let a = dom.point([0.0625, 0.0625]).unwrap().cell;
        let b = dom.point([0.1875, 0.1875]).unwrap().cell;
        let mut s = Search::new(dom.len());
        // Unit weights: every 2-edge route to the diagonal neighbour ties with the 1-edge one under
        // a weight that makes the diagonal cost 2.
        s.run(&dom, &[(a, 0.0)], |_, _, k| if k < 4 { 1.0 } else { 2.0 + k as f64 }, |_| true, |_, _| false);
        assert_eq!(s.dist(b), 2.0);
        // Two routes: via a+1 or a+nx; the smaller intermediate index wins.
        assert_eq!(s.path_to(b), vec![a, a + 1, b]);
    }

    #[test]
    fn search_reuse_resets_state() {
        let dom = gallery::square(1.0, 1.0 / 16.0).unwrap().domain;
        let a = dom.point([0.5, 0.5]).unwrap().cell;
        let b = dom.point([0.1, 0.1]).unwrap().cell;
        let mut s = Search::new(dom.len());
        s.run(&dom, &[(a, 0.0)], |_, _, k| dom.step_len(k), |_| true, |v, _| v == b);
        let first = s.dist(b);
        s.run(&dom, &[(b, 0.0)], |_, _, k| dom.step_len(k), |_| true, |v, _| v == a);
        assert_eq!(s.dist(a), first);
        assert!(s.dist(dom.point([0.95, 0.95]).unwrap().cell).is_infinite() || !s.is_settled(dom.point([0.95, 0.95]).unwrap().cell));
    }

    #[test]
    fn bottleneck_threshold_is_tight() {
        let dom = gallery::disk(1.0, 1.0 / 16.0).unwrap().domain;
        let a = dom.point([-0.5, 0.0]).unwrap().cell;
        let b = dom.point([0.5, 0.3]).unwrap().cell;
        let cost = |v: usize| dom.center(v)[1].abs();
        let (r, path) = bottleneck_search(&dom, a, b, cost).unwrap();
        assert!(path.iter().all(|&v| cost(v) <= r));
        assert_eq!((path[0], *path.last().unwrap()), (a, b));
        assert_eq!(r, cost(b));
    }

    #[test]
    fn widest_matches_threshold_flood_fill() {
        let dom = gallery::slit_disk(1.0 / 16.0).unwrap().domain;
        let a = dom.point([0.5, 0.3]).unwrap().cell;
        let value = |v: usize| -crate::grid::dist(dom.center(v), [0.0, 0.0]);
        let w = widest_search(&dom, &[a], value);
        let connected = |t: f64, b: usize| {
            let lab = dom.components_where(|c| value(c) >= t);
            lab.label(a).is_some() && lab.label(a) == lab.label(b)
        };
        for b in dom.interior_cells().step_by(7) {
            assert!(connected(w[b], b));
            assert!(!connected(w[b] + 1e-9, b));
        }
    }
}
