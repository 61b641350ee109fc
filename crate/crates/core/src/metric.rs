//! Points with exact rational coordinates, the ℓ₁ and ℓ∞ metrics, lattice
//! generators and rescaling.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Index, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    L1,
    #[serde(rename = "LINF")]
    LInf,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "L1",
            Metric::LInf => "LINF",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L1" => Ok(Metric::L1),
            "LINF" => Ok(Metric::LInf),
            other => Err(Error::Parse(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<Scalar>);

impl Point {
    pub fn new(coords: Vec<Scalar>) -> Self {
        Point(coords)
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Point(coords.iter().map(|&c| Scalar::from_int(c)).collect())
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![Scalar::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<Scalar> {
        self.0
    }

    pub fn scale(&self, factor: &Scalar) -> Point {
        Point(self.0.iter().map(|c| c * factor).collect())
    }

    /// Euclidean inner product. Panics on dimension mismatch.
    pub fn dot(&self, other: &Point) -> Scalar {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

impl Index<usize> for Point {
    type Output = Scalar;
    fn index(&self, i: usize) -> &Scalar {
        &self.0[i]
    }
}

impl Add<&Point> for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        assert_eq!(self.dim(), rhs.dim(), "add: dimension mismatch");
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        assert_eq!(self.dim(), rhs.dim(), "sub: dimension mismatch");
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Exact distance between two points under `metric`.
pub fn dist(metric: Metric, p: &Point, q: &Point) -> Result<Scalar> {
    Error::check_dim(p.dim(), q.dim())?;
    let diffs = p.0.iter().zip(&q.0).map(|(a, b)| (a - b).abs());
    Ok(match metric {
        Metric::L1 => diffs.sum(),
        Metric::LInf => diffs.fold(Scalar::zero(), |m, d| if d > m { d } else { m }),
    })
}

/// A finite, ordered set of distinct points of equal dimension. Position in
/// the set is the vertex index used by every complex built from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointSet {
    dim: usize,
    metric: Metric,
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(dim: usize, metric: Metric, points: Vec<Point>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            Error::check_dim(dim, p.dim())?;
            if !seen.insert(p) {
                return Err(Error::invalid(format!("duplicate point {p:?}")));
            }
        }
        Ok(PointSet {
            dim,
            metric,
            points,
        })
    }

    pub(crate) fn new_unchecked(dim: usize, metric: Metric, points: Vec<Point>) -> Self {
        PointSet {
            dim,
            metric,
            points,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    /// Distance between the points at positions `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> Scalar {
        dist(self.metric, &self.points[i], &self.points[j]).expect("uniform dimension")
    }

    /// The subset at the given positions, in that order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        PointSet::new_unchecked(
            self.dim,
            self.metric,
            indices.iter().map(|&i| self.points[i].clone()).collect(),
        )
    }
}

/// All integer points of `[lo, hi]^n` in lexicographic order, metric ℓ₁.
pub fn lattice_window(n: usize, lo: i64, hi: i64) -> Result<PointSet> {
    if n == 0 || lo > hi {
        return Err(Error::invalid(format!(
            "lattice window needs n >= 1 and lo <= hi (got n={n}, lo={lo}, hi={hi})"
        )));
    }
    let side: Vec<Scalar> = (lo..=hi).map(Scalar::from_int).collect();
    Ok(PointSet::new_unchecked(
        n,
        Metric::L1,
        grid_product(&vec![side; n]),
    ))
}

/// Cartesian product of per-axis coordinate lists, lexicographic order.
pub(crate) fn grid_product(axes: &[Vec<Scalar>]) -> Vec<Point> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for c in axis {
                let mut p = prefix.clone();
                p.push(c.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(Point).collect()
}

/// Sampled lattice graph: every point on an axis-parallel unit edge of the
/// window lattice whose free coordinate is a multiple of `pitch`. Lexicographic
/// order, metric ℓ₁ (induced from the ambient space).
pub fn lattice_graph_sample(n: usize, lo: i64, hi: i64, pitch: &Scalar) -> Result<PointSet> {
    if !pitch.is_positive() || !num_traits::One::is_one(&pitch.numer()) {
        return Err(Error::invalid(format!(
            "lattice graph pitch must be 1/k for an integer k >= 1, got {pitch}"
        )));
    }
    let window = lattice_window(n, lo, hi)?;
    let steps: i64 = pitch
        .recip()?
        .floor_i64()
        .ok_or_else(|| Error::invalid("pitch too fine"))?;
    let mut pts: Vec<Point> = window.points.clone();
    for base in window.points() {
        for axis in 0..n {
            if base[axis] == Scalar::from_int(hi) {
                continue;
            }
            for j in 1..steps {
                let mut c = base.clone().into_coords();
                c[axis] = &c[axis] + &Scalar::ratio(j, steps);
                pts.push(Point(c));
            }
        }
    }
    pts.sort();
    Ok(PointSet::new_unchecked(n, Metric::L1, pts))
}

/// All points of `pitch·ℤⁿ` inside the cube `[lo, hi]^n`, lexicographic, metric ℓ₁.
pub fn scaled_lattice_box(n: usize, pitch: &Scalar, lo: &Scalar, hi: &Scalar) -> Result<PointSet> {
    if n == 0 || !pitch.is_positive() || lo > hi {
        return Err(Error::invalid(format!(
            "scaled lattice box needs n >= 1, pitch > 0 and lo <= hi (got n={n}, pitch={pitch}, [{lo}, {hi}])"
        )));
    }
    let first = -(-(lo / pitch))
        .floor_i64()
        .ok_or_else(|| Error::invalid("window too large"))?;
    let last = (hi / pitch)
        .floor_i64()
        .ok_or_else(|| Error::invalid("window too large"))?;
    if first > last {
        return Err(Error::invalid(format!(
            "no multiple of {pitch} in [{lo}, {hi}]"
        )));
    }
    let side: Vec<Scalar> = (first..=last)
        .map(|k| pitch * &Scalar::from_int(k))
        .collect();
    Ok(PointSet::new_unchecked(
        n,
        Metric::L1,
        grid_product(&vec![side; n]),
    ))
}

/// Coordinate-wise scaling by a positive factor. Order and metric are kept.
pub fn rescale(x: &PointSet, factor: &Scalar) -> Result<PointSet> {
    if !factor.is_positive() {
        return Err(Error::invalid(format!(
            "rescale factor must be > 0, got {factor}"
        )));
    }
    Ok(PointSet::new_unchecked(
        x.dim,
        x.metric,
        x.points.iter().map(|p| p.scale(factor)).collect(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Planar case: the ℓ₁ plane is itself hyperconvex.
    Dim2,
    /// Three-dimensional case, via the four-coordinate ℓ∞ embedding.
    Dim3,
}

/// Scale above which VR of an `epsilon0`-dense set is contractible:
/// `2·ε₀` in the plane, `16·ε₀` in three dimensions.
pub fn contractibility_threshold(epsilon0: &Scalar, regime: Regime) -> Result<Scalar> {
    if !epsilon0.is_positive() {
        return Err(Error::invalid(format!(
            "epsilon0 must be > 0, got {epsilon0}"
        )));
    }
    let factor = match regime {
        Regime::Dim2 => 2,
        Regime::Dim3 => 16,
    };
    Ok(epsilon0 * &Scalar::from_int(factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn pt(c: &[(i64, i64)]) -> Point {
        Point::new(c.iter().map(|&(n, d)| q(n, d)).collect())
    }

    #[test]
    fn distances() {
        let o = Point::from_ints(&[0, 0]);
        let p = Point::from_ints(&[1, 2]);
        assert_eq!(dist(Metric::L1, &o, &p).unwrap(), Scalar::from_int(3));
        assert_eq!(dist(Metric::LInf, &o, &p).unwrap(), Scalar::from_int(2));
        let c = pt(&[(1, 2), (1, 2), (1, 2)]);
        assert_eq!(dist(Metric::L1, &c, &Point::origin(3)).unwrap(), q(3, 2));
        assert!(matches!(
            dist(Metric::L1, &o, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn windows() {
        let w = lattice_window(2, 0, 1).unwrap();
        let expected: Vec<Point> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|c| Point::from_ints(c))
            .collect();
        assert_eq!(w.points(), &expected[..]);
        assert_eq!(lattice_window(1, 0, 3).unwrap().len(), 4);
        assert_eq!(lattice_window(3, 0, 2).unwrap().len(), 27);
        assert!(lattice_window(2, 1, 0).is_err());
        assert!(lattice_window(0, 0, 1).is_err());
    }

    // Closed form: edges·(k−1) + vertices, edges = n·(m−1)·m^(n−1).
    fn graph_count(n: u32, m: i64, k: i64) -> usize {
        let vertices = m.pow(n);
        let edges = n as i64 * (m - 1) * m.pow(n - 1);
        (edges * (k - 1) + vertices) as usize
    }

    #[test]
    fn lattice_graph_counts() {
        assert_eq!(graph_count(2, 2, 2), 8);
        assert_eq!(graph_count(3, 2, 2), 20);
        assert_eq!(lattice_graph_sample(2, 0, 1, &q(1, 2)).unwrap().len(), 8);
        assert_eq!(lattice_graph_sample(3, 0, 1, &q(1, 2)).unwrap().len(), 20);
        let corners = lattice_graph_sample(2, 0, 1, &Scalar::one()).unwrap();
        assert_eq!(corners, lattice_window(2, 0, 1).unwrap());
        for (n, lo, hi, k) in [(2, 0, 3, 4), (3, -1, 1, 3), (1, 0, 5, 2)] {
            let s = lattice_graph_sample(n as usize, lo, hi, &q(1, k)).unwrap();
            assert_eq!(s.len(), graph_count(n, hi - lo + 1, k));
            assert!(PointSet::new(s.dim(), s.metric(), s.points().to_vec()).is_ok());
        }
        assert!(lattice_graph_sample(2, 0, 1, &q(2, 3)).is_err());
        assert!(lattice_graph_sample(2, 0, 1, &q(-1, 2)).is_err());
    }

    #[test]
    fn scaled_lattice_boxes() {
        let x = scaled_lattice_box(3, &q(1, 12), &Scalar::zero(), &Scalar::one()).unwrap();
        assert_eq!(x.len(), 13 * 13 * 13);
        let y = scaled_lattice_box(2, &q(1, 2), &q(-3, 4), &q(3, 4)).unwrap();
        assert_eq!(y.points()[0], pt(&[(-1, 2), (-1, 2)]));
        assert_eq!(y.len(), 9);
        assert!(scaled_lattice_box(2, &q(1, 2), &q(1, 5), &q(2, 5)).is_err());
        assert!(scaled_lattice_box(2, &Scalar::zero(), &q(0, 1), &q(1, 1)).is_err());
    }

    #[test]
    fn rescaling() {
        let x = PointSet::new(2, Metric::L1, vec![Point::from_ints(&[1, 2])]).unwrap();
        let y = rescale(&x, &q(2, 3)).unwrap();
        assert_eq!(y.points()[0], pt(&[(2, 3), (4, 3)]));
        assert_eq!(rescale(&x, &Scalar::one()).unwrap(), x);
        assert!(rescale(&x, &Scalar::zero()).is_err());
        assert!(rescale(&x, &q(-1, 2)).is_err());
    }

    #[test]
    fn thresholds() {
        let t = |e: Scalar, r| contractibility_threshold(&e, r).unwrap();
        assert_eq!(t(q(3, 2), Regime::Dim3), Scalar::from_int(24));
        assert_eq!(t(q(1, 2), Regime::Dim3), Scalar::from_int(8));
        assert_eq!(t(Scalar::one(), Regime::Dim2), Scalar::from_int(2));
        assert!(contractibility_threshold(&Scalar::zero(), Regime::Dim2).is_err());
    }

    #[test]
    fn duplicate_points_rejected() {
        let p = Point::from_ints(&[1, 1]);
        assert!(PointSet::new(2, Metric::L1, vec![p.clone(), p]).is_err());
    }

    fn arb_point(n: usize) -> impl Strategy<Value = Point> {
        prop::collection::vec((-20i64..20, 1i64..13), n)
            .prop_map(|c| Point::new(c.into_iter().map(|(a, b)| q(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in arb_point(4), b in arb_point(4), c in arb_point(4)) {
            for m in [Metric::L1, Metric::LInf] {
                let ab = dist(m, &a, &b).unwrap();
                let bc = dist(m, &b, &c).unwrap();
                let ac = dist(m, &a, &c).unwrap();
                prop_assert!(ac <= &ab + &bc);
                prop_assert_eq!(&ab, &dist(m, &b, &a).unwrap());
                prop_assert_eq!(ab.is_zero(), a == b);
            }
        }

        #[test]
        fn distances_scale_linearly(a in arb_point(3), b in arb_point(3), f in (1i64..30, 1i64..30)) {
            let f = q(f.0, f.1);
            let scaled = dist(Metric::L1, &a.scale(&f), &b.scale(&f)).unwrap();
            prop_assert_eq!(scaled, &f * &dist(Metric::L1, &a, &b).unwrap());
        }

        #[test]
        fn rescale_roundtrip(pts in prop::collection::hash_set(arb_point(2), 1..10), f in (1i64..30, 1i64..30)) {
            let x = PointSet::new(2, Metric::L1, pts.into_iter().collect()).unwrap();
            let f = q(f.0, f.1);
            let back = rescale(&rescale(&x, &f).unwrap(), &f.recip().unwrap()).unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
