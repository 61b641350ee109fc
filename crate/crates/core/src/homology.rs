//! Homology over the two-element field by column reduction of sparse boundary
//! matrices.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rips::SimplicialComplex;

/// Matrix over the two-element field stored by columns; each column is the
/// strictly increasing list of rows holding a 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    row_count: usize,
    columns: Vec<Vec<u32>>,
}

impl SparseBinaryMatrix {
    pub fn new(row_count: usize, columns: Vec<Vec<u32>>) -> Result<Self> {
        for c in &columns {
            if !c.windows(2).all(|w| w[0] < w[1])
                || c.last().is_some_and(|&r| r as usize >= row_count)
            {
                return Err(Error::invalid(
                    "column rows must be strictly increasing and in range",
                ));
            }
        }
        Ok(SparseBinaryMatrix { row_count, columns })
    }

    pub fn zero(row_count: usize, col_count: usize) -> Self {
        SparseBinaryMatrix {
            row_count,
            columns: vec![Vec::new(); col_count],
        }
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn col_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    /// `self · other`, i.e. column `j` of the result is the sum of the columns
    /// of `self` selected by column `j` of `other`.
    pub fn compose(&self, other: &SparseBinaryMatrix) -> Result<SparseBinaryMatrix> {
        Error::check_dim(self.col_count(), other.row_count)?;
        let columns = other
            .columns
            .iter()
            .map(|sel| {
                sel.iter().fold(Vec::new(), |acc, &k| {
                    symmetric_difference(&acc, &self.columns[k as usize])
                })
            })
            .collect();
        Ok(SparseBinaryMatrix {
            row_count: self.row_count,
            columns,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(Vec::is_empty)
    }

    /// Rank by [`reduce`].
    pub fn rank(&self) -> usize {
        reduce(self).rank()
    }
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Result of left-to-right column reduction: every nonzero reduced column
/// has a distinct lowest row.
#[derive(Clone, Debug)]
pub struct Reduction {
    columns: Vec<Vec<u32>>,
    pivots: usize,
}

impl Reduction {
    pub fn rank(&self) -> usize {
        self.pivots
    }

    pub fn reduced_column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }
}

/// Standard column reduction: for each column left to right, while its
/// lowest row is already the pivot of an earlier column, add that column.
pub fn reduce(m: &SparseBinaryMatrix) -> Reduction {
    let mut pivot_of_row: Vec<u32> = vec![u32::MAX; m.row_count];
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(m.col_count());
    let mut pivots = 0;
    for (j, col) in m.columns.iter().enumerate() {
        let mut col = col.clone();
        while let Some(&low) = col.last() {
            let owner = pivot_of_row[low as usize];
            if owner == u32::MAX {
                pivot_of_row[low as usize] = j as u32;
                pivots += 1;
                break;
            }
            col = symmetric_difference(&col, &columns[owner as usize]);
        }
        columns.push(col);
    }
    Reduction { columns, pivots }
}

/// Boundary map from `d`-simplices to `(d−1)`-simplices; faces are located by
/// binary search in the canonical order.
pub fn boundary_matrix(k: &SimplicialComplex, d: usize) -> Result<SparseBinaryMatrix> {
    if d == 0 || d > k.dim_cap() {
        return Err(Error::invalid(format!(
            "boundary dimension {d} outside 1..={}",
            k.dim_cap()
        )));
    }
    let columns = k
        .simplices(d)
        .par_iter()
        .map(|s| {
            let mut rows: Vec<u32> = (0..s.len())
                .map(|skip| {
                    let face: Vec<u32> = s
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    k.index_of(&face).expect("complex is face-closed") as u32
                })
                .collect();
            rows.sort_unstable();
            rows
        })
        .collect();
    Ok(SparseBinaryMatrix {
        row_count: k.simplices(d - 1).len(),
        columns,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BettiVector {
    pub betti: Vec<usize>,
    pub reduced: bool,
}

impl BettiVector {
    pub fn get(&self, d: usize) -> usize {
        self.betti.get(d).copied().unwrap_or(0)
    }

    /// All entries zero (with `reduced`, this is "homology of a point").
    pub fn is_trivial(&self) -> bool {
        self.betti.iter().all(|&b| b == 0)
    }

    pub fn to_reduced(&self) -> BettiVector {
        let mut betti = self.betti.clone();
        if !self.reduced {
            if let Some(b0) = betti.first_mut() {
                *b0 = b0.saturating_sub(1);
            }
        }
        BettiVector {
            betti,
            reduced: true,
        }
    }
}

/// Betti numbers of a finite chain complex given by cell counts per dimension
/// and the boundary matrices `boundaries[d]: C_d → C_{d−1}` for
/// `d = 1..=dmax+1`.
pub fn betti_from_boundaries(
    cell_counts: &[usize],
    boundaries: &[SparseBinaryMatrix],
    dmax: usize,
    reduced: bool,
) -> BettiVector {
    // rank[d] = rank of ∂_d, with ∂_0 = 0.
    let mut rank = vec![0usize; dmax + 2];
    let computed: Vec<(usize, usize)> = boundaries
        .par_iter()
        .enumerate()
        .filter(|(d, _)| (1..=dmax + 1).contains(d))
        .map(|(d, m)| (d, m.rank()))
        .collect();
    for (d, r) in computed {
        rank[d] = r;
    }
    let betti = (0..=dmax)
        .map(|d| cell_counts.get(d).copied().unwrap_or(0) - rank[d] - rank[d + 1])
        .collect();
    let full = BettiVector {
        betti,
        reduced: false,
    };
    if reduced && cell_counts.first().copied().unwrap_or(0) > 0 {
        full.to_reduced()
    } else {
        BettiVector { reduced, ..full }
    }
}

/// `β_d = #d-simplices − rank ∂_d − rank ∂_{d+1}` for `d ≤ dmax`.
pub fn betti(k: &SimplicialComplex, dmax: usize, reduced: bool) -> Result<BettiVector> {
    if dmax + 1 > k.dim_cap() {
        return Err(Error::invalid(format!(
            "betti up to {dmax} needs simplices up to dimension {}, complex is capped at {}",
            dmax + 1,
            k.dim_cap()
        )));
    }
    let mut boundaries = vec![SparseBinaryMatrix::zero(0, k.vertex_count())];
    for d in 1..=dmax + 1 {
        boundaries.push(boundary_matrix(k, d)?);
    }
    Ok(betti_from_boundaries(
        &k.face_counts(),
        &boundaries,
        dmax,
        reduced,
    ))
}

/// `∂_d ∘ ∂_{d+1} = 0` for every `d` with both maps inside the cap.
pub fn boundary_of_boundary_vanishes(k: &SimplicialComplex) -> Result<bool> {
    for d in 1..k.dim_cap() {
        if !boundary_matrix(k, d)?
            .compose(&boundary_matrix(k, d + 1)?)?
            .is_zero()
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Connected components by union-find over the 1-skeleton.
pub fn component_count(k: &SimplicialComplex) -> usize {
    let mut parent: Vec<usize> = (0..k.vertex_count()).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut components = k.vertex_count();
    for e in k.simplices(1) {
        let (a, b) = (
            find(&mut parent, e[0] as usize),
            find(&mut parent, e[1] as usize),
        );
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components
}
