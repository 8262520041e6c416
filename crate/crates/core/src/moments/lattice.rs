//! Exact counting of integer points `ℓ ∈ {0..N}^p` satisfying the block constraints.
//!
//! Column `i` of the constraint matrix has `+1` in the row of the block holding `i`
//! and `-1` in the row of the block holding `[i-1]`, so the constraints are flow
//! conservation on a directed multigraph whose vertices are blocks and whose edges
//! are the steps `b([i-1]) -> b(i)` of the cyclic walk through the blocks. A point
//! is a circulation with every edge flow in `0..=N`. Self-loops are unconstrained
//! and contribute a factor `N+1` each; the remaining edges are counted by a dynamic
//! program over edges that tracks the net excess at each vertex.

use std::collections::HashMap;
use std::ops::AddAssign;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::partition::{cyclic_index, SetPartition};

/// The walk graph of a partition, self-loops split off.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct WalkGraph {
    pub vertices: usize,
    /// Non-loop edges `(tail, head)` in walk order.
    pub edges: Vec<(u8, u8)>,
    pub loops: u32,
}

impl WalkGraph {
    pub fn new(labels: &[u8]) -> Self {
        let p = labels.len();
        let vertices = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut edges = Vec::with_capacity(p);
        let mut loops = 0;
        for i in 1..=p {
            let tail = labels[cyclic_index(i as i64 - 1, p) - 1];
            let head = labels[i - 1];
            if tail == head {
                loops += 1;
            } else {
                edges.push((tail, head));
            }
        }
        Self { vertices, edges, loops }
    }

    /// Edge multiset in sorted order; equal keys give equal reduced counts.
    pub fn key(&self) -> (usize, Vec<(u8, u8)>) {
        let mut e = self.edges.clone();
        e.sort_unstable();
        (self.vertices, e)
    }

    /// Walk graph of the lexicographically smallest relabelling of `labels` over all
    /// cyclic rotations and the reversal. Reversing the walk reverses every edge, which
    /// maps circulations bijectively, so all of these share one count.
    pub fn canonical(labels: &[u8]) -> Self {
        let p = labels.len();
        let mut best: Option<Vec<u8>> = None;
        let mut buf = Vec::with_capacity(p);
        let mut map = [u8::MAX; 256];
        for reversed in [false, true] {
            for start in 0..p {
                buf.clear();
                map.fill(u8::MAX);
                let mut next = 0u8;
                for i in 0..p {
                    let j = if reversed { (start + p - i) % p } else { (start + i) % p };
                    let l = labels[j] as usize;
                    if map[l] == u8::MAX {
                        map[l] = next;
                        next += 1;
                    }
                    buf.push(map[l]);
                }
                if best.as_ref().is_none_or(|b| buf < *b) {
                    best = Some(buf.clone());
                }
            }
        }
        Self::new(&best.unwrap_or_default())
    }

    /// Number of circulations on the non-loop edges with flows in `0..=n`.
    pub fn count_reduced<C: Count>(&self, n: u64) -> C {
        count_circulations(self.vertices, &self.edges, n)
    }
}

pub(crate) trait Count: Clone + Zero + One + AddAssign {
    fn pow_u64(base: u64, exp: u32) -> Self;
}

impl Count for u128 {
    fn pow_u64(base: u64, exp: u32) -> Self {
        (base as u128).pow(exp)
    }
}

impl Count for BigUint {
    fn pow_u64(base: u64, exp: u32) -> Self {
        BigUint::from(base).pow(exp)
    }
}

fn count_circulations<C: Count>(vertices: usize, edges: &[(u8, u8)], n: u64) -> C {
    let mut degree = vec![0i64; vertices];
    for &(u, w) in edges {
        degree[u as usize] += 1;
        degree[w as usize] += 1;
    }
    let max_excess = n as i64 * degree.iter().copied().max().unwrap_or(0);
    let width = 64 - (2 * max_excess as u64 + 1).leading_zeros();
    if width as usize * vertices <= 128 {
        circulations_packed(degree, edges, n as i64, width)
    } else {
        circulations_vec(degree, edges, n as i64)
    }
}

/// Admissible flows on edge `(u, w)` given current excesses and remaining capacities.
fn flow_range(n: i64, eu: i64, ew: i64, cap_u: i64, cap_w: i64) -> std::ops::RangeInclusive<i64> {
    let lo = 0.max(-cap_w - ew).max(eu - cap_u);
    let hi = n.min(cap_w - ew).min(eu + cap_u);
    lo..=hi
}

/// Excess vector packed into a `u128`, `width` bits per vertex, offset to be nonnegative.
fn circulations_packed<C: Count>(mut remaining: Vec<i64>, edges: &[(u8, u8)], n: i64, width: u32) -> C {
    let offset = 1i64 << (width - 1);
    let mask = (1u128 << width) - 1;
    let zero: u128 = (0..remaining.len()).fold(0, |acc, v| acc | (offset as u128) << (v as u32 * width));
    let mut states: HashMap<u128, C> = HashMap::new();
    states.insert(zero, C::one());
    for &(u, w) in edges {
        let (u, w) = (u as usize, w as usize);
        remaining[u] -= 1;
        remaining[w] -= 1;
        let (cap_u, cap_w) = (n * remaining[u], n * remaining[w]);
        let (su, sw) = (u as u32 * width, w as u32 * width);
        let mut next: HashMap<u128, C> = HashMap::with_capacity(states.len());
        for (state, count) in states {
            let eu = ((state >> su) & mask) as i64 - offset;
            let ew = ((state >> sw) & mask) as i64 - offset;
            for x in flow_range(n, eu, ew, cap_u, cap_w) {
                let s = state - ((x as u128) << su) + ((x as u128) << sw);
                *next.entry(s).or_insert_with(C::zero) += count.clone();
            }
        }
        states = next;
    }
    states.remove(&zero).unwrap_or_else(C::zero)
}

fn circulations_vec<C: Count>(mut remaining: Vec<i64>, edges: &[(u8, u8)], n: i64) -> C {
    let vertices = remaining.len();
    let mut states: HashMap<Vec<i64>, C> = HashMap::new();
    states.insert(vec![0; vertices], C::one());
    for &(u, w) in edges {
        let (u, w) = (u as usize, w as usize);
        remaining[u] -= 1;
        remaining[w] -= 1;
        // after this edge, each vertex's excess must still be cancellable by its remaining edges
        let (cap_u, cap_w) = (n * remaining[u], n * remaining[w]);
        let mut next: HashMap<Vec<i64>, C> = HashMap::with_capacity(states.len());
        for (state, count) in states {
            for x in flow_range(n, state[u], state[w], cap_u, cap_w) {
                let mut s = state.clone();
                s[u] -= x;
                s[w] += x;
                *next.entry(s).or_insert_with(C::zero) += count.clone();
            }
        }
        states = next;
    }
    states.remove(&vec![0; vertices]).unwrap_or_else(C::zero)
}

/// Whether `(n+1)^p` fits in a `u128`, which bounds every count and partial sum.
pub(crate) fn fits_u128(n: u64, p: usize) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..p {
        match acc.checked_mul(n as u128 + 1) {
            Some(v) => acc = v,
            None => return false,
        }
    }
    true
}

/// Exact number of `ℓ ∈ {0..n}^p` satisfying the constraints of `tau`.
pub fn count_lattice_points(tau: &SetPartition, n: u64) -> BigUint {
    let g = WalkGraph::new(tau.labels());
    if fits_u128(n, tau.p()) {
        let c: u128 = g.count_reduced::<u128>(n) * (n as u128 + 1).pow(g.loops);
        BigUint::from(c)
    } else {
        g.count_reduced::<BigUint>(n) * BigUint::pow_u64(n + 1, g.loops)
    }
}
