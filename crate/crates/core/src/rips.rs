//! Open Vietoris–Rips complexes as flag complexes of the strict neighborhood
//! graph, strong collapses, and critical radii.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::PointSet;
use crate::scalar::Scalar;

pub const DEFAULT_DIM_CAP: usize = 3;
pub const DEFAULT_CLIQUE_BUDGET: u64 = 10_000_000;

/// Dense adjacency bitset, one row per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitMatrix {
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix {
            words,
            bits: vec![0; words * n],
        }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }
}

/// Simple undirected graph on `0..vertex_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    adjacency: Vec<Vec<usize>>,
    matrix: BitMatrix,
}

impl Graph {
    pub fn new(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut matrix = BitMatrix::new(vertex_count);
        for (a, b) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at {a}")));
            }
            if !matrix.get(a, b) {
                matrix.set(a, b);
                matrix.set(b, a);
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        adjacency.iter_mut().for_each(|n| n.sort_unstable());
        Ok(Graph {
            vertex_count,
            adjacency,
            matrix,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.matrix.get(a, b)
    }

    /// Edges `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, n)| n.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Edge `{i, j}` iff `d(xᵢ, xⱼ) < r`, strictly.
pub fn neighborhood_graph(x: &PointSet, r: &Scalar) -> Result<Graph> {
    if !r.is_positive() {
        return Err(Error::invalid(format!("scale must be > 0, got {r}")));
    }
    let n = x.len();
    let edges: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            ((i + 1)..n)
                .filter(move |&j| &x.dist(i, j) < r)
                .map(move |j| (i, j))
        })
        .collect();
    Graph::new(n, edges)
}

/// Simplices graded by dimension; each simplex a strictly increasing vertex
/// tuple, each dimension in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SimplicialComplex {
    vertex_count: usize,
    dim_cap: usize,
    simplices: Vec<Vec<Vec<u32>>>,
}

impl SimplicialComplex {
    /// Builds a complex from explicit simplices, adding all faces up to
    /// `dim_cap`. Simplices above the cap are dropped.
    pub fn from_simplices(
        vertex_count: usize,
        dim_cap: usize,
        simplices: &[Vec<u32>],
    ) -> Result<Self> {
        let mut graded: Vec<std::collections::BTreeSet<Vec<u32>>> =
            vec![Default::default(); dim_cap + 1];
        for v in 0..vertex_count as u32 {
            graded[0].insert(vec![v]);
        }
        for s in simplices {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            if s.iter().any(|&v| v as usize >= vertex_count) {
                return Err(Error::invalid(format!(
                    "simplex {s:?} has out-of-range vertex"
                )));
            }
            for mask in 1u32..(1 << s.len().min(31)) {
                let face: Vec<u32> = (0..s.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| s[i])
                    .collect();
                if face.len() <= dim_cap + 1 {
                    graded[face.len() - 1].insert(face);
                }
            }
        }
        Ok(SimplicialComplex {
            vertex_count,
            dim_cap,
            simplices: graded
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// The `d`-simplices; empty above the cap.
    pub fn simplices(&self, d: usize) -> &[Vec<u32>] {
        self.simplices.get(d).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn face_counts(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    pub fn total_simplices(&self) -> usize {
        self.simplices.iter().map(Vec::len).sum()
    }

    /// Highest dimension with at least one simplex, `None` when empty.
    pub fn top_dim(&self) -> Option<usize> {
        self.simplices.iter().rposition(|s| !s.is_empty())
    }

    /// Position of `simplex` within its dimension.
    pub fn index_of(&self, simplex: &[u32]) -> Option<usize> {
        let d = simplex.len().checked_sub(1)?;
        self.simplices
            .get(d)?
            .binary_search_by(|s| s.as_slice().cmp(simplex))
            .ok()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.simplices
            .iter()
            .enumerate()
            .map(|(d, s)| {
                if d % 2 == 0 {
                    s.len() as i64
                } else {
                    -(s.len() as i64)
                }
            })
            .sum()
    }

    /// The 1-skeleton.
    pub fn graph(&self) -> Graph {
        Graph::new(
            self.vertex_count,
            self.simplices(1)
                .iter()
                .map(|e| (e[0] as usize, e[1] as usize)),
        )
        .expect("edges of a valid complex")
    }

    /// Checks canonical order, face closure and the flag property up to the cap.
    pub fn validate_flag(&self) -> Result<()> {
        let g = self.graph();
        let expected = flag_complex_with_budget(&g, self.dim_cap, u64::MAX)?;
        if expected.simplices != self.simplices {
            return Err(Error::invalid(
                "complex is not the flag complex of its 1-skeleton",
            ));
        }
        Ok(())
    }
}

/// All cliques of `g` with at most `dim_cap + 1` vertices.
pub fn flag_complex(g: &Graph, dim_cap: usize) -> Result<SimplicialComplex> {
    flag_complex_with_budget(g, dim_cap, DEFAULT_CLIQUE_BUDGET)
}

pub fn flag_complex_with_budget(
    g: &Graph,
    dim_cap: usize,
    budget: u64,
) -> Result<SimplicialComplex> {
    let n = g.vertex_count();
    let counter = AtomicU64::new(0);
    let over = || counter.load(Ordering::Relaxed) > budget;

    // Ordered extension from each root: a clique only ever grows by a vertex
    // larger than its current maximum, so every clique is produced once and,
    // roots taken in order, each dimension comes out lexicographic.
    let per_root: Vec<Vec<Vec<Vec<u32>>>> = (0..n)
        .into_par_iter()
        .map(|root| {
            let mut out: Vec<Vec<Vec<u32>>> = vec![Vec::new(); dim_cap + 1];
            if over() {
                return out;
            }
            let higher: Vec<usize> = g
                .neighbors(root)
                .iter()
                .copied()
                .filter(|&u| u > root)
                .collect();
            let mut stack = vec![root as u32];
            extend(g, &mut stack, &higher, dim_cap, &mut out, &counter, budget);
            out
        })
        .collect();

    let total = counter.load(Ordering::Relaxed);
    if total > budget {
        return Err(Error::BudgetExceeded {
            what: "clique",
            count: total,
            budget,
        });
    }
    let mut simplices: Vec<Vec<Vec<u32>>> = vec![Vec::new(); dim_cap + 1];
    for root in per_root {
        for (d, mut s) in root.into_iter().enumerate() {
            simplices[d].append(&mut s);
        }
    }
    for s in &mut simplices {
        if !s.is_sorted() {
            s.sort_unstable();
        }
    }
    Ok(SimplicialComplex {
        vertex_count: n,
        dim_cap,
        simplices,
    })
}

fn extend(
    g: &Graph,
    stack: &mut Vec<u32>,
    candidates: &[usize],
    dim_cap: usize,
    out: &mut [Vec<Vec<u32>>],
    counter: &AtomicU64,
    budget: u64,
) {
    if counter.fetch_add(1, Ordering::Relaxed) >= budget {
        return;
    }
    out[stack.len() - 1].push(stack.clone());
    if stack.len() > dim_cap {
        return;
    }
    for (k, &u) in candidates.iter().enumerate() {
        let next: Vec<usize> = candidates[k + 1..]
            .iter()
            .copied()
            .filter(|&w| g.has_edge(u, w))
            .collect();
        stack.push(u as u32);
        extend(g, stack, &next, dim_cap, out, counter, budget);
        stack.pop();
    }
}

/// VR(X; r) truncated at `dim_cap`.
pub fn vietoris_rips(x: &PointSet, r: &Scalar, dim_cap: usize) -> Result<SimplicialComplex> {
    flag_complex(&neighborhood_graph(x, r)?, dim_cap)
}

pub fn vietoris_rips_with_budget(
    x: &PointSet,
    r: &Scalar,
    dim_cap: usize,
    budget: u64,
) -> Result<SimplicialComplex> {
    flag_complex_with_budget(&neighborhood_graph(x, r)?, dim_cap, budget)
}

/// True iff both complexes contain exactly the same simplex tuples, vertex
/// `i` of one identified with vertex `i` of the other.
pub fn complexes_equal_under_index_map(
    k1: &SimplicialComplex,
    k2: &SimplicialComplex,
) -> Result<bool> {
    if k1.vertex_count != k2.vertex_count {
        return Err(Error::invalid(format!(
            "vertex counts differ: {} vs {}",
            k1.vertex_count, k2.vertex_count
        )));
    }
    let dims = k1.simplices.len().max(k2.simplices.len());
    Ok((0..dims).all(|d| k1.simplices(d) == k2.simplices(d)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CollapseCertificate {
    /// `(dominated, dominator)` in original vertex indices, in removal order.
    pub steps: Vec<(usize, usize)>,
    pub residual_size: usize,
    /// Original indices of the surviving vertices; vertex `i` of the residual
    /// complex is `survivors[i]`.
    pub survivors: Vec<usize>,
}

impl CollapseCertificate {
    pub fn collapsed_to_point(&self) -> bool {
        self.residual_size == 1
    }
}

/// Closed neighborhoods restricted to the alive vertices.
struct Domination {
    closed: BitMatrix,
    alive: Vec<bool>,
}

impl Domination {
    fn new(g: &Graph) -> Self {
        let n = g.vertex_count();
        let mut closed = g.matrix.clone();
        for v in 0..n {
            closed.set(v, v);
        }
        Domination {
            closed,
            alive: vec![true; n],
        }
    }

    fn dominates(&self, w: usize, v: usize) -> bool {
        w != v
            && self.alive[w]
            && self.closed.get(v, w)
            && self
                .closed
                .row(v)
                .iter()
                .zip(self.closed.row(w))
                .all(|(a, b)| a & !b == 0)
    }

    fn lowest_dominator(&self, v: usize) -> Option<usize> {
        (0..self.alive.len()).find(|&w| self.dominates(w, v))
    }

    fn remove(&mut self, v: usize) {
        self.alive[v] = false;
        let words = self.closed.words;
        for u in 0..self.alive.len() {
            self.closed.bits[u * words + v / 64] &= !(1 << (v % 64));
        }
        self.closed.bits[v * words..(v + 1) * words].fill(0);
    }
}

/// Repeatedly removes the lowest-index dominated vertex (its closed
/// neighborhood lies inside another alive vertex's), recording the
/// lowest-index dominator, until no vertex is dominated.
pub fn strong_collapse(k: &SimplicialComplex) -> (SimplicialComplex, CollapseCertificate) {
    let g = k.graph();
    let mut dom = Domination::new(&g);
    let mut steps = Vec::new();
    'outer: loop {
        for v in 0..dom.alive.len() {
            if !dom.alive[v] {
                continue;
            }
            if let Some(w) = dom.lowest_dominator(v) {
                steps.push((v, w));
                dom.remove(v);
                continue 'outer;
            }
        }
        break;
    }
    let survivors: Vec<usize> = (0..dom.alive.len()).filter(|&v| dom.alive[v]).collect();
    let residual = induced_subcomplex(k, &survivors);
    let cert = CollapseCertificate {
        residual_size: survivors.len(),
        steps,
        survivors,
    };
    (residual, cert)
}

/// Checks every step of `cert` against `k` and returns the residual complex.
pub fn replay_collapse(
    k: &SimplicialComplex,
    cert: &CollapseCertificate,
) -> Result<SimplicialComplex> {
    let g = k.graph();
    let mut dom = Domination::new(&g);
    for &(v, w) in &cert.steps {
        if v >= dom.alive.len() || !dom.alive[v] || !dom.dominates(w, v) {
            return Err(Error::invalid(format!(
                "collapse step ({v}, {w}) is not a domination"
            )));
        }
        dom.remove(v);
    }
    let survivors: Vec<usize> = (0..dom.alive.len()).filter(|&v| dom.alive[v]).collect();
    if survivors != cert.survivors || survivors.len() != cert.residual_size {
        return Err(Error::invalid("certificate survivors do not match replay"));
    }
    Ok(induced_subcomplex(k, &survivors))
}

/// Result of elementary collapses: a simplex with exactly one coface is removed
/// together with that coface until none remains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementaryCollapse {
    pub pairs_removed: usize,
    /// Surviving simplices per dimension.
    pub remaining: Vec<usize>,
    /// The input contained every clique of its 1-skeleton, so the collapse
    /// speaks about the whole flag complex rather than a truncation.
    pub complete: bool,
}

impl ElementaryCollapse {
    pub fn collapsed_to_point(&self) -> bool {
        self.complete
            && self.remaining.first() == Some(&1)
            && self.remaining[1..].iter().all(|&c| c == 0)
    }
}

impl SimplicialComplex {
    /// No simplex at the cap extends to a larger clique.
    pub fn is_full_flag(&self) -> bool {
        let g = self.graph();
        self.simplices(self.dim_cap)
            .iter()
            .all(|s| !(0..self.vertex_count).any(|w| s.iter().all(|&v| g.has_edge(v as usize, w))))
    }
}

/// Elementary collapses in index order (lowest dimension, then lexicographic).
pub fn elementary_collapse(k: &SimplicialComplex) -> ElementaryCollapse {
    let offsets: Vec<usize> = k
        .simplices
        .iter()
        .scan(0, |acc, level| {
            let start = *acc;
            *acc += level.len();
            Some(start)
        })
        .collect();
    let total = k.total_simplices();
    let mut dim_of = vec![0usize; total];
    let mut faces: Vec<Vec<usize>> = vec![Vec::new(); total];
    let mut cofaces: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (d, level) in k.simplices.iter().enumerate() {
        for (i, s) in level.iter().enumerate() {
            let id = offsets[d] + i;
            dim_of[id] = d;
            if d == 0 {
                continue;
            }
            for drop in 0..s.len() {
                let face: Vec<u32> = s
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != drop)
                    .map(|(_, &v)| v)
                    .collect();
                let fid = offsets[d - 1] + k.index_of(&face).expect("face-closed complex");
                faces[id].push(fid);
                cofaces[fid].push(id);
            }
        }
    }
    let mut alive = vec![true; total];
    let mut count: Vec<usize> = cofaces.iter().map(Vec::len).collect();
    let mut queue: std::collections::VecDeque<usize> =
        (0..total).filter(|&i| count[i] == 1).collect();
    let mut pairs_removed = 0;
    while let Some(sigma) = queue.pop_front() {
        if !alive[sigma] || count[sigma] != 1 {
            continue;
        }
        let tau = *cofaces[sigma]
            .iter()
            .find(|&&c| alive[c])
            .expect("one live coface");
        alive[sigma] = false;
        alive[tau] = false;
        pairs_removed += 1;
        for &f in faces[tau].iter().chain(&faces[sigma]) {
            if f == sigma {
                continue;
            }
            count[f] -= 1;
            if alive[f] && count[f] == 1 {
                queue.push_back(f);
            }
        }
    }
    let mut remaining = vec![0; k.simplices.len()];
    for id in (0..total).filter(|&i| alive[i]) {
        remaining[dim_of[id]] += 1;
    }
    ElementaryCollapse {
        pairs_removed,
        remaining,
        complete: k.is_full_flag(),
    }
}

/// Simplices whose vertices all lie in `keep` (sorted), reindexed by position in `keep`.
fn induced_subcomplex(k: &SimplicialComplex, keep: &[usize]) -> SimplicialComplex {
    let mut map = vec![u32::MAX; k.vertex_count];
    for (i, &v) in keep.iter().enumerate() {
        map[v] = i as u32;
    }
    let simplices = k
        .simplices
        .iter()
        .map(|level| {
            level
                .iter()
                .filter(|s| s.iter().all(|&v| map[v as usize] != u32::MAX))
                .map(|s| s.iter().map(|&v| map[v as usize]).collect())
                .collect()
        })
        .collect();
    SimplicialComplex {
        vertex_count: keep.len(),
        dim_cap: k.dim_cap,
        simplices,
    }
}

/// Sorted distinct pairwise distances.
pub fn critical_radii(x: &PointSet) -> Result<Vec<Scalar>> {
    if x.len() < 2 {
        return Err(Error::invalid("critical radii need at least two points"));
    }
    let n = x.len();
    let mut radii: Vec<Scalar> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| ((i + 1)..n).map(move |j| x.dist(i, j)))
        .collect();
    radii.par_sort_unstable();
    radii.dedup();
    Ok(radii)
}

/// Largest entry of the sorted `radii` strictly below `r`.
pub fn largest_radius_below<'a>(radii: &'a [Scalar], r: &Scalar) -> Option<&'a Scalar> {
    let idx = radii.partition_point(|c| c < r);
    idx.checked_sub(1).map(|i| &radii[i])
}
