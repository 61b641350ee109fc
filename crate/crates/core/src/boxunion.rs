//! Unions of closed axis-aligned boxes (closed ℓ∞ balls) and their homology.
//!
//! A union of boxes is modelled exactly by the cubical complex of its
//! coordinate arrangement: per axis, the sorted distinct box endpoints
//! ("breakpoints") cut the line into points and open gaps, and a product of
//! one piece per axis is a cell. Every box is a union of cells, so a cell lies
//! in the union iff it lies in one box, and the union is the closure of its
//! inside cells. Cells are addressed in doubled coordinates: index `2k` is
//! breakpoint `k`, index `2k + 1` is the gap after it.

use std::collections::VecDeque;

use serde::Serialize;

use crate::embeddings::{embed_set, EmbeddingSpec};
use crate::error::{Error, Result};
use crate::homology::{betti_from_boundaries, BettiVector, SparseBinaryMatrix};
use crate::metric::{dist, Metric, Point, PointSet};
use crate::rips::{critical_radii, largest_radius_below};
use crate::scalar::Scalar;

pub const MAX_ARRANGEMENT_DIM: usize = 4;
pub const DEFAULT_CELL_BUDGET: u64 = 10_000_000;

/// Closed product of intervals `[loᵢ, hiᵢ]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosedBox {
    lo: Point,
    hi: Point,
}

impl ClosedBox {
    pub fn new(lo: Point, hi: Point) -> Result<Self> {
        Error::check_dim(lo.dim(), hi.dim())?;
        if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
            return Err(Error::invalid(format!("box corners {lo:?} > {hi:?}")));
        }
        Ok(ClosedBox { lo, hi })
    }

    /// The closed ℓ∞ ball `[c − r, c + r]`.
    pub fn ball(center: &Point, radius: &Scalar) -> Result<Self> {
        if radius.is_negative() {
            return Err(Error::invalid(format!("negative radius {radius}")));
        }
        let lo = Point::new(center.coords().iter().map(|c| c - radius).collect());
        let hi = Point::new(center.coords().iter().map(|c| c + radius).collect());
        Ok(ClosedBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    /// Intersection, or `None` when some axis has `max lo > min hi`.
    pub fn intersect(&self, other: &ClosedBox) -> Option<ClosedBox> {
        let lo: Vec<Scalar> = (0..self.dim())
            .map(|i| Scalar::max(&self.lo[i], &other.lo[i]).clone())
            .collect();
        let hi: Vec<Scalar> = (0..self.dim())
            .map(|i| Scalar::min(&self.hi[i], &other.hi[i]).clone())
            .collect();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            None
        } else {
            Some(ClosedBox {
                lo: Point::new(lo),
                hi: Point::new(hi),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum HellyOutcome {
    /// Some pair has `d∞(cᵢ, cⱼ) > rᵢ + rⱼ`; nothing is claimed.
    PremiseViolated {
        i: usize,
        j: usize,
        distance: Scalar,
        radius_sum: Scalar,
    },
    /// The per-axis intersection `[max lo, min hi]` is nonempty.
    CommonPoint {
        intersection: ClosedBox,
        witness: Point,
    },
    /// Premise holds but the intersection is empty. Impossible in ℓ∞.
    HellyFailure,
}

impl HellyOutcome {
    pub fn premise_holds(&self) -> bool {
        !matches!(self, HellyOutcome::PremiseViolated { .. })
    }

    pub fn has_common_point(&self) -> bool {
        matches!(self, HellyOutcome::CommonPoint { .. })
    }
}

/// For closed ℓ∞ balls `(center, radius)`: checks the pairwise premise
/// `d∞(cᵢ, cⱼ) ≤ rᵢ + rⱼ`, then intersects per axis.
pub fn box_helly_check(balls: &[(Point, Scalar)]) -> Result<HellyOutcome> {
    let Some((first, _)) = balls.first() else {
        return Err(Error::invalid("Helly check needs at least one ball"));
    };
    let n = first.dim();
    for (c, r) in balls {
        Error::check_dim(n, c.dim())?;
        if r.is_negative() {
            return Err(Error::invalid(format!("negative radius {r}")));
        }
    }
    for i in 0..balls.len() {
        for j in i + 1..balls.len() {
            let distance = dist(Metric::LInf, &balls[i].0, &balls[j].0)?;
            let radius_sum = &balls[i].1 + &balls[j].1;
            if distance > radius_sum {
                return Ok(HellyOutcome::PremiseViolated {
                    i,
                    j,
                    distance,
                    radius_sum,
                });
            }
        }
    }
    let mut acc = ClosedBox::ball(&balls[0].0, &balls[0].1)?;
    for (c, r) in &balls[1..] {
        match acc.intersect(&ClosedBox::ball(c, r)?) {
            Some(b) => acc = b,
            None => return Ok(HellyOutcome::HellyFailure),
        }
    }
    Ok(HellyOutcome::CommonPoint {
        witness: acc.lo.clone(),
        intersection: acc,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxUnion {
    dim: usize,
    boxes: Vec<ClosedBox>,
}

impl BoxUnion {
    pub fn new(boxes: Vec<ClosedBox>) -> Result<Self> {
        let dim = boxes
            .first()
            .ok_or_else(|| Error::invalid("empty box union"))?
            .dim();
        for b in &boxes {
            Error::check_dim(dim, b.dim())?;
        }
        Ok(BoxUnion { dim, boxes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[ClosedBox] {
        &self.boxes
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    /// Sorted distinct box endpoints on each axis.
    pub fn breakpoints(&self) -> Vec<Vec<Scalar>> {
        (0..self.dim)
            .map(|i| {
                let mut v: Vec<Scalar> = self
                    .boxes
                    .iter()
                    .flat_map(|b| [b.lo[i].clone(), b.hi[i].clone()])
                    .collect();
                v.sort();
                v.dedup();
                v
            })
            .collect()
    }
}

/// One closed ℓ∞ ball of the given radius per center.
pub fn ball_union(centers: &PointSet, radius: &Scalar) -> Result<BoxUnion> {
    if centers.metric() != Metric::LInf {
        return Err(Error::invalid(
            "ball union centers must carry the LINF metric",
        ));
    }
    if !radius.is_positive() {
        return Err(Error::invalid(format!(
            "ball radius must be > 0, got {radius}"
        )));
    }
    BoxUnion::new(
        centers
            .points()
            .iter()
            .map(|c| ClosedBox::ball(c, radius))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Cells of a coordinate arrangement, flagged inside/outside the union.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicalComplex {
    breakpoints: Vec<Vec<Scalar>>,
    extents: Vec<usize>,
    strides: Vec<usize>,
    inside: Vec<bool>,
}

pub fn arrangement_cubical_complex(u: &BoxUnion) -> Result<CubicalComplex> {
    arrangement_with_budget(u, DEFAULT_CELL_BUDGET)
}

pub fn arrangement_with_budget(u: &BoxUnion, budget: u64) -> Result<CubicalComplex> {
    arrangement_on(u, u.breakpoints(), budget)
}

/// Arrangement over caller-supplied breakpoints, which must include every box
/// endpoint; extra breakpoints only refine the cells.
pub fn arrangement_on(
    u: &BoxUnion,
    breakpoints: Vec<Vec<Scalar>>,
    budget: u64,
) -> Result<CubicalComplex> {
    let dim = u.dim();
    if dim > MAX_ARRANGEMENT_DIM {
        return Err(Error::invalid(format!(
            "arrangement dimension {dim} exceeds the cap {MAX_ARRANGEMENT_DIM}"
        )));
    }
    Error::check_dim(dim, breakpoints.len())?;
    for axis in &breakpoints {
        if axis.is_empty() || !axis.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "breakpoints must be nonempty and strictly increasing",
            ));
        }
    }
    let extents: Vec<usize> = breakpoints.iter().map(|b| 2 * b.len() - 1).collect();
    let total = extents
        .iter()
        .try_fold(1u64, |acc, &e| acc.checked_mul(e as u64))
        .unwrap_or(u64::MAX);
    if total > budget {
        return Err(Error::BudgetExceeded {
            what: "cubical cell",
            count: total,
            budget,
        });
    }
    let mut strides = vec![1usize; dim];
    for i in (0..dim.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * extents[i + 1];
    }
    let mut inside = vec![false; total as usize];

    for b in u.boxes() {
        let mut ranges = Vec::with_capacity(dim);
        for (i, axis) in breakpoints.iter().enumerate() {
            let lo = axis.binary_search(&b.lo[i]);
            let hi = axis.binary_search(&b.hi[i]);
            match (lo, hi) {
                (Ok(lo), Ok(hi)) => ranges.push((2 * lo, 2 * hi)),
                _ => {
                    return Err(Error::invalid(
                        "breakpoints must include every box endpoint",
                    ))
                }
            }
        }
        for_each_in_ranges(&ranges, &strides, |idx| inside[idx] = true);
    }
    Ok(CubicalComplex {
        breakpoints,
        extents,
        strides,
        inside,
    })
}

/// Calls `f` on the linear index of every cell in the product of inclusive ranges.
fn for_each_in_ranges(ranges: &[(usize, usize)], strides: &[usize], mut f: impl FnMut(usize)) {
    let dim = ranges.len();
    let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(cur.iter().zip(strides).map(|(c, s)| c * s).sum());
        let mut axis = dim;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if cur[axis] < ranges[axis].1 {
                cur[axis] += 1;
                break;
            }
            cur[axis] = ranges[axis].0;
        }
    }
}

impl CubicalComplex {
    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn breakpoints(&self) -> &[Vec<Scalar>] {
        &self.breakpoints
    }

    pub fn cell_count(&self) -> usize {
        self.inside.len()
    }

    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    fn coords(&self, mut idx: usize) -> [usize; MAX_ARRANGEMENT_DIM] {
        let mut out = [0; MAX_ARRANGEMENT_DIM];
        for (c, &s) in out.iter_mut().zip(&self.strides) {
            *c = idx / s;
            idx %= s;
        }
        out
    }

    /// Index tuples (doubled coordinates) of the inside cells, in index order.
    pub fn inside_cells(&self) -> Vec<Vec<usize>> {
        (0..self.inside.len())
            .filter(|&i| self.inside[i])
            .map(|i| self.coords(i)[..self.dim()].to_vec())
            .collect()
    }

    pub fn is_inside(&self, cell: &[usize]) -> bool {
        cell.len() == self.dim()
            && cell.iter().zip(&self.extents).all(|(c, e)| c < e)
            && self.inside[cell
                .iter()
                .zip(&self.strides)
                .map(|(c, s)| c * s)
                .sum::<usize>()]
    }

    fn cell_dim(&self, idx: usize) -> usize {
        self.coords(idx).iter().filter(|c| *c % 2 == 1).count()
    }

    fn faces(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let coords = self.coords(idx);
        (0..self.dim())
            .filter(move |&i| coords[i] % 2 == 1)
            .flat_map(move |i| [idx - self.strides[i], idx + self.strides[i]])
    }

    fn cofaces(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let coords = self.coords(idx);
        (0..self.dim())
            .filter(move |&i| coords[i].is_multiple_of(2))
            .flat_map(move |i| {
                let below = (coords[i] > 0).then(|| idx - self.strides[i]);
                let above = (coords[i] + 1 < self.extents[i]).then(|| idx + self.strides[i]);
                below.into_iter().chain(above)
            })
    }

    /// Every face of an inside cell is inside.
    pub fn validate_face_closure(&self) -> Result<()> {
        for idx in (0..self.inside.len()).filter(|&i| self.inside[i]) {
            if let Some(f) = self.faces(idx).find(|&f| !self.inside[f]) {
                return Err(Error::invalid(format!(
                    "cell {:?} is inside but its face {:?} is not",
                    &self.coords(idx)[..self.dim()],
                    &self.coords(f)[..self.dim()]
                )));
            }
        }
        Ok(())
    }

    /// Inside cells per dimension.
    pub fn cells_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dim() + 1];
        for idx in (0..self.inside.len()).filter(|&i| self.inside[i]) {
            counts[self.cell_dim(idx)] += 1;
        }
        counts
    }

    /// Removes free-face pairs (a cell with exactly one coface, together with
    /// that coface) until none remain. Homotopy type, hence homology, is
    /// unchanged. Returns the surviving cell mask.
    fn collapse(&self) -> Vec<bool> {
        let mut alive = self.inside.clone();
        let mut coface_count = vec![0u8; alive.len()];
        for idx in (0..alive.len()).filter(|&i| alive[i]) {
            coface_count[idx] = self.cofaces(idx).filter(|&c| alive[c]).count() as u8;
        }
        let mut queue: VecDeque<usize> = (0..alive.len())
            .filter(|&i| alive[i] && coface_count[i] == 1)
            .collect();
        while let Some(sigma) = queue.pop_front() {
            if !alive[sigma] || coface_count[sigma] != 1 {
                continue;
            }
            let tau = self
                .cofaces(sigma)
                .find(|&c| alive[c])
                .expect("one live coface");
            alive[sigma] = false;
            alive[tau] = false;
            for f in self.faces(tau).chain(self.faces(sigma)) {
                if f == sigma {
                    continue;
                }
                coface_count[f] -= 1;
                if alive[f] && coface_count[f] == 1 {
                    queue.push_back(f);
                }
            }
        }
        alive
    }

    fn betti_of_mask(&self, mask: &[bool], dmax: usize, reduced: bool) -> BettiVector {
        let dim = self.dim();
        let mut position = vec![u32::MAX; mask.len()];
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); dim + 1];
        for idx in (0..mask.len()).filter(|&i| mask[i]) {
            let d = self.cell_dim(idx);
            position[idx] = cells[d].len() as u32;
            cells[d].push(idx);
        }
        let counts: Vec<usize> = cells.iter().map(Vec::len).collect();
        let mut boundaries = vec![SparseBinaryMatrix::zero(0, counts[0])];
        for d in 1..=dmax + 1 {
            if d > dim {
                boundaries.push(SparseBinaryMatrix::zero(counts[dim.min(d - 1)], 0));
                continue;
            }
            let columns = cells[d]
                .iter()
                .map(|&idx| {
                    let mut rows: Vec<u32> = self.faces(idx).map(|f| position[f]).collect();
                    rows.sort_unstable();
                    rows
                })
                .collect();
            boundaries.push(
                SparseBinaryMatrix::new(counts[d - 1], columns).expect("face-closed complex"),
            );
        }
        betti_from_boundaries(&counts, &boundaries, dmax, reduced)
    }

    /// Homology of the union, computed on the complex after free-face collapses.
    pub fn betti(&self, dmax: usize, reduced: bool) -> Result<BettiVector> {
        if dmax > self.dim() {
            return Err(Error::invalid(format!(
                "dmax {dmax} exceeds dimension {}",
                self.dim()
            )));
        }
        Ok(self.betti_of_mask(&self.collapse(), dmax, reduced))
    }

    /// Same as [`betti`](Self::betti) without the collapse preprocessing.
    pub fn betti_uncollapsed(&self, dmax: usize, reduced: bool) -> Result<BettiVector> {
        if dmax > self.dim() {
            return Err(Error::invalid(format!(
                "dmax {dmax} exceeds dimension {}",
                self.dim()
            )));
        }
        Ok(self.betti_of_mask(&self.inside, dmax, reduced))
    }

    /// Number of cells left after free-face collapses.
    pub fn collapsed_size(&self) -> usize {
        self.collapse().iter().filter(|&&b| b).count()
    }
}

pub fn cubical_betti(c: &CubicalComplex, dmax: usize) -> Result<BettiVector> {
    c.betti(dmax, false)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NeighborhoodBetti {
    /// Largest pairwise distance strictly below `r`; `None` when there is none.
    pub r_bar: Option<Scalar>,
    pub box_count: usize,
    pub cell_count: usize,
    pub inside_cells: usize,
    pub betti: BettiVector,
}

/// Betti numbers of the ℓ∞ neighborhood of the embedded set. The open
/// `r/2`-neighborhood is modelled by closed balls of radius `r̄/2`, where `r̄`
/// is the largest pairwise distance below `r`; with no such distance the
/// neighborhood is `|X|` disjoint balls.
pub fn neighborhood_betti(
    x: &PointSet,
    spec: &EmbeddingSpec,
    r: &Scalar,
    dmax: usize,
) -> Result<NeighborhoodBetti> {
    neighborhood_betti_with_budget(x, spec, r, dmax, DEFAULT_CELL_BUDGET)
}

pub fn neighborhood_betti_with_budget(
    x: &PointSet,
    spec: &EmbeddingSpec,
    r: &Scalar,
    dmax: usize,
    budget: u64,
) -> Result<NeighborhoodBetti> {
    if !r.is_positive() {
        return Err(Error::invalid(format!("scale must be > 0, got {r}")));
    }
    if x.metric() != Metric::L1 {
        return Err(Error::invalid(
            "neighborhood Betti numbers need an L1 point set",
        ));
    }
    Error::check_dim(spec.source_dim(), x.dim())?;
    if x.is_empty() {
        return Err(Error::invalid("empty point set"));
    }
    let r_bar = if x.len() < 2 {
        None
    } else {
        largest_radius_below(&critical_radii(x)?, r).cloned()
    };
    let Some(r_bar) = r_bar else {
        let mut betti = vec![0; dmax + 1];
        betti[0] = x.len();
        return Ok(NeighborhoodBetti {
            r_bar: None,
            box_count: x.len(),
            cell_count: 0,
            inside_cells: 0,
            betti: BettiVector {
                betti,
                reduced: false,
            },
        });
    };
    let union = ball_union(&embed_set(spec, x)?, &(&r_bar * &Scalar::ratio(1, 2)))?;
    let complex = arrangement_with_budget(&union, budget)?;
    Ok(NeighborhoodBetti {
        r_bar: Some(r_bar),
        box_count: union.boxes().len(),
        cell_count: complex.cell_count(),
        inside_cells: complex.inside_count(),
        betti: complex.betti(dmax, false)?,
    })
}
