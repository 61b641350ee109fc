//! Isometric embeddings of (ℝⁿ, ℓ₁) into ℓ∞ spaces.
//!
//! Every embedding here is linear: output coordinate `j` is `⟨s_j, x⟩` for a
//! sign vector `s_j ∈ {±1}ⁿ`. Taking one row from each `±` pair of sign
//! vectors makes `max_j |⟨s_j, x⟩| = ‖x‖₁`, because the row matching the sign
//! pattern of `x` sums all `|xᵢ|` and no row can exceed that.
//!
//! For n = 3 the image is the hyperplane `y₁ + y₂ + y₃ − y₄ = 0` with normal
//! `v = (1, 1, 1, −1)`, `⟨v, v⟩ = 4`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{dist, Metric, Point, PointSet};
use crate::scalar::Scalar;

/// Largest source dimension accepted by [`EmbeddingSpec::general`].
pub const DEFAULT_SOURCE_DIM_CAP: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbeddingSpec {
    source_dim: usize,
    sign_rows: Vec<Vec<i8>>,
}

impl EmbeddingSpec {
    /// The planar map `(x₁, x₂) ↦ (x₁ + x₂, x₁ − x₂)`.
    pub fn planar() -> Self {
        EmbeddingSpec {
            source_dim: 2,
            sign_rows: vec![vec![1, 1], vec![1, -1]],
        }
    }

    /// The map ℝ³ → ℝ⁴,
    /// `(x₁,x₂,x₃) ↦ (−x₁+x₂+x₃, x₁−x₂+x₃, x₁+x₂−x₃, x₁+x₂+x₃)`.
    pub fn spatial() -> Self {
        EmbeddingSpec {
            source_dim: 3,
            sign_rows: vec![
                vec![-1, 1, 1],
                vec![1, -1, 1],
                vec![1, 1, -1],
                vec![1, 1, 1],
            ],
        }
    }

    /// All sign vectors with first component `+1`, the remaining components
    /// in binary order (`0 ↦ +1`, `1 ↦ −1`, most significant first).
    pub fn general(n: usize) -> Result<Self> {
        Self::general_with_cap(n, DEFAULT_SOURCE_DIM_CAP)
    }

    pub fn general_with_cap(n: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("embedding source dimension must be >= 1"));
        }
        if n > cap {
            return Err(Error::BudgetExceeded {
                what: "embedding source dimension",
                count: n as u64,
                budget: cap as u64,
            });
        }
        let rows = (0..1usize << (n - 1))
            .map(|mask| {
                let mut row = vec![1i8];
                row.extend(
                    (0..n - 1)
                        .rev()
                        .map(|bit| if mask >> bit & 1 == 0 { 1 } else { -1 }),
                );
                row
            })
            .collect();
        Ok(EmbeddingSpec {
            source_dim: n,
            sign_rows: rows,
        })
    }

    /// Validated construction from explicit sign rows.
    pub fn from_rows(rows: Vec<Vec<i8>>) -> Result<Self> {
        let spec = Self::from_rows_unchecked(rows)?;
        for (i, a) in spec.sign_rows.iter().enumerate() {
            for b in &spec.sign_rows[i + 1..] {
                if a == b || a.iter().zip(b).all(|(x, y)| *x == -*y) {
                    return Err(Error::invalid(format!(
                        "sign rows {a:?} and {b:?} are equal up to sign"
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// Like [`from_rows`](Self::from_rows) but allows repeated rows. Such an
    /// embedding is generally not an isometry; useful for exercising
    /// [`verify_isometry`].
    pub fn from_rows_unchecked(rows: Vec<Vec<i8>>) -> Result<Self> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(Error::invalid("embedding needs at least one nonempty row"));
        }
        for row in &rows {
            Error::check_dim(n, row.len())?;
            if row.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::invalid(format!(
                    "row {row:?} has entries other than ±1"
                )));
            }
        }
        Ok(EmbeddingSpec {
            source_dim: n,
            sign_rows: rows,
        })
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.sign_rows.len()
    }

    pub fn sign_rows(&self) -> &[Vec<i8>] {
        &self.sign_rows
    }
}

pub fn embed(spec: &EmbeddingSpec, p: &Point) -> Result<Point> {
    Error::check_dim(spec.source_dim, p.dim())?;
    Ok(Point::new(
        spec.sign_rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(p.coords())
                    .fold(
                        Scalar::zero(),
                        |acc, (&s, c)| {
                            if s > 0 {
                                acc + c
                            } else {
                                acc - c
                            }
                        },
                    )
            })
            .collect(),
    ))
}

/// Embeds every point; the result carries the ℓ∞ metric and the input order.
pub fn embed_set(spec: &EmbeddingSpec, x: &PointSet) -> Result<PointSet> {
    let pts = x
        .points()
        .iter()
        .map(|p| embed(spec, p))
        .collect::<Result<Vec<_>>>()?;
    // Injective because the embedding is an isometry.
    Ok(PointSet::new_unchecked(
        spec.target_dim(),
        Metric::LInf,
        pts,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub x: Point,
    pub y: Point,
    pub source_l1: Scalar,
    pub image_linf: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsometryReport {
    pub checked: usize,
    pub counterexample: Option<Counterexample>,
}

/// Checks `‖e(x) − e(y)‖∞ = ‖x − y‖₁` exactly on every pair, stopping at the
/// first failure.
pub fn verify_isometry(spec: &EmbeddingSpec, pairs: &[(Point, Point)]) -> Result<IsometryReport> {
    for (k, (x, y)) in pairs.iter().enumerate() {
        let source_l1 = dist(Metric::L1, x, y)?;
        let image_linf = dist(Metric::LInf, &embed(spec, x)?, &embed(spec, y)?)?;
        if source_l1 != image_linf {
            return Ok(IsometryReport {
                checked: k + 1,
                counterexample: Some(Counterexample {
                    x: x.clone(),
                    y: y.clone(),
                    source_l1,
                    image_linf,
                }),
            });
        }
    }
    Ok(IsometryReport {
        checked: pairs.len(),
        counterexample: None,
    })
}

/// `v = (1, 1, 1, −1)`, normal to the image of the spatial embedding.
pub fn normal_vector() -> Point {
    Point::from_ints(&[1, 1, 1, -1])
}

/// `q₁ + q₂ + q₃ − q₄`; zero exactly on the image of [`EmbeddingSpec::spatial`].
pub fn hyperplane_residual(q: &Point) -> Result<Scalar> {
    Error::check_dim(4, q.dim())?;
    Ok(q.dot(&normal_vector()))
}

/// Orthogonal projection `q − (⟨q, v⟩/4)·v` onto the image hyperplane.
pub fn project_to_image(q: &Point) -> Result<Point> {
    let shift = hyperplane_residual(q)? * Scalar::ratio(1, 4);
    Ok(q - &normal_vector().scale(&shift))
}
