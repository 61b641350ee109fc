//! Bracketing certificates for the ℓ₁ covering radius of a finite set over a box.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{dist, grid_product, Metric, Point, PointSet};
use crate::scalar::Scalar;

/// `lower ≤ covering radius over box ≤ upper`, with `upper − lower = n·h/2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityCertificate {
    pub lower: Scalar,
    pub upper: Scalar,
    pub box_lo: Point,
    pub box_hi: Point,
    pub pitch: Scalar,
    pub samples: usize,
    /// A sample attaining `lower`.
    pub witness: Point,
}

impl DensityCertificate {
    /// True when the set is certified ε-dense over the box for every ε > `eps`,
    /// i.e. the covering radius is at most `eps`.
    pub fn certifies_at_most(&self, eps: &Scalar) -> bool {
        &self.upper <= eps
    }
}

/// Sample positions along one axis: `lo, lo+h, …` plus `hi` itself, so that
/// every coordinate in `[lo, hi]` lies within `h/2` of a sample.
fn axis_samples(lo: &Scalar, hi: &Scalar, pitch: &Scalar) -> Vec<Scalar> {
    let mut out = Vec::new();
    let mut c = lo.clone();
    while &c < hi {
        out.push(c.clone());
        c = &c + pitch;
    }
    out.push(hi.clone());
    out
}

/// Certifies the ℓ₁ covering radius of `x` over the box `[lo, hi]` by brute
/// force on a `pitch`-spaced sample grid. `lower` is the largest sampled
/// distance to `x`; the ℓ₁ Lipschitz bound adds `n·pitch/2` for `upper`.
///
/// Passing a subset of the true set only makes the certificate more
/// conservative (`upper` remains a valid bound for the superset).
pub fn covering_radius_certified(
    x: &PointSet,
    lo: &Point,
    hi: &Point,
    pitch: &Scalar,
) -> Result<DensityCertificate> {
    if x.is_empty() {
        return Err(Error::invalid("covering radius of an empty set"));
    }
    if x.metric() != Metric::L1 {
        return Err(Error::invalid(
            "covering radius certificate needs an L1 point set",
        ));
    }
    if !pitch.is_positive() {
        return Err(Error::invalid(format!(
            "sampling pitch must be > 0, got {pitch}"
        )));
    }
    let n = x.dim();
    Error::check_dim(n, lo.dim())?;
    Error::check_dim(n, hi.dim())?;
    if lo.coords().iter().zip(hi.coords()).any(|(a, b)| a > b) {
        return Err(Error::invalid("box corners must satisfy lo <= hi"));
    }

    let axes: Vec<Vec<Scalar>> = (0..n)
        .map(|i| axis_samples(&lo[i], &hi[i], pitch))
        .collect();
    let samples = grid_product(&axes);
    let (lower, witness) = samples
        .par_iter()
        .map(|s| {
            let d = x
                .points()
                .iter()
                .map(|y| dist(Metric::L1, s, y).expect("dimension checked"))
                .min()
                .expect("nonempty");
            (d, s)
        })
        // Ties resolve to the earliest sample so the witness is schedule-independent.
        .reduce_with(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one sample");
    let slack = pitch * &Scalar::ratio(n as i64, 2);
    Ok(DensityCertificate {
        upper: &lower + &slack,
        lower,
        box_lo: lo.clone(),
        box_hi: hi.clone(),
        pitch: pitch.clone(),
        samples: samples.len(),
        witness: witness.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{lattice_graph_sample, lattice_window};

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn cube(n: usize, c: Scalar) -> Point {
        Point::new(vec![c; n])
    }

    #[test]
    fn z3_cell_center_attains_three_halves() {
        let x = lattice_window(3, 0, 2).unwrap();
        let cert =
            covering_radius_certified(&x, &cube(3, q(1, 2)), &cube(3, q(3, 2)), &q(1, 4)).unwrap();
        assert_eq!(cert.lower, q(3, 2));
        assert_eq!(cert.upper, q(3, 2) + q(3, 8));
        assert_eq!(cert.witness, cube(3, q(1, 2)));
        assert_eq!(cert.samples, 125);
    }

    #[test]
    fn planar_lattice_graph_brackets_one_half() {
        let x = lattice_graph_sample(2, 0, 2, &q(1, 4)).unwrap();
        let cert = covering_radius_certified(
            &x,
            &cube(2, Scalar::zero()),
            &cube(2, Scalar::one()),
            &q(1, 8),
        )
        .unwrap();
        assert!(cert.lower <= q(1, 2) && q(1, 2) <= cert.upper);
        assert_eq!(cert.lower, q(1, 2));
        assert_eq!(cert.upper, q(5, 8));
    }

    // The body center of a unit cube needs two coordinates moved by 1/2 to
    // reach an edge of the lattice graph, so the covering radius in three
    // dimensions is 1, not 1/2.
    #[test]
    fn spatial_lattice_graph_covering_radius_is_one() {
        let x = lattice_graph_sample(3, 0, 1, &q(1, 2)).unwrap();
        let cert = covering_radius_certified(
            &x,
            &cube(3, Scalar::zero()),
            &cube(3, Scalar::one()),
            &q(1, 4),
        )
        .unwrap();
        assert_eq!(cert.lower, Scalar::one());
        assert_eq!(cert.witness, cube(3, q(1, 2)));
        assert!(!cert.certifies_at_most(&q(1, 2)));
    }

    #[test]
    fn single_point_degenerate_box() {
        let p = Point::new(vec![q(1, 3), q(-2, 5)]);
        let x = PointSet::new(2, Metric::L1, vec![p.clone()]).unwrap();
        let cert = covering_radius_certified(&x, &p, &p, &q(1, 2)).unwrap();
        assert_eq!(cert.lower, Scalar::zero());
        assert_eq!(cert.samples, 1);
    }

    #[test]
    fn lattice_aligned_sampling_certifies_an_eighth() {
        let x = crate::metric::rescale(&lattice_window(3, 0, 12).unwrap(), &q(1, 12)).unwrap();
        let cert =
            covering_radius_certified(&x, &cube(3, q(1, 3)), &cube(3, q(2, 3)), &q(1, 12)).unwrap();
        assert_eq!(cert.lower, Scalar::zero());
        assert!(cert.certifies_at_most(&q(1, 8)));
    }

    #[test]
    fn errors() {
        let empty = PointSet::new(2, Metric::L1, vec![]).unwrap();
        let o = cube(2, Scalar::zero());
        assert!(covering_radius_certified(&empty, &o, &o, &q(1, 2)).is_err());
        let x = lattice_window(2, 0, 1).unwrap();
        assert!(covering_radius_certified(&x, &o, &o, &Scalar::zero()).is_err());
        assert!(
            covering_radius_certified(&x.clone().with_metric(Metric::LInf), &o, &o, &q(1, 2))
                .is_err()
        );
    }

    #[test]
    fn monotone_in_set_and_pitch() {
        let full = lattice_window(2, 0, 3).unwrap();
        let sub = full.select(&[0, 3, 5, 10, 12, 15]);
        let (lo, hi) = (cube(2, Scalar::zero()), cube(2, Scalar::from_int(3)));
        let c_sub = covering_radius_certified(&sub, &lo, &hi, &q(1, 2)).unwrap();
        let c_full = covering_radius_certified(&full, &lo, &hi, &q(1, 2)).unwrap();
        assert!(c_full.lower <= c_sub.lower);
        // Refining a nested grid never lowers `lower`; here it also tightens `upper`.
        let c_half = covering_radius_certified(&full, &lo, &hi, &q(1, 4)).unwrap();
        assert!(c_half.lower >= c_full.lower);
        assert!(c_half.upper <= c_full.upper);
    }

    #[test]
    fn refining_can_raise_upper_when_coarse_grid_misses_the_maximum() {
        // Pitch 1 samples only lattice points (lower 0, upper 1); pitch 1/2
        // finds the cell centers (lower 1, upper 3/2). Both brackets are valid.
        let x = lattice_window(2, 0, 3).unwrap();
        let (lo, hi) = (cube(2, Scalar::zero()), cube(2, Scalar::from_int(3)));
        let coarse = covering_radius_certified(&x, &lo, &hi, &Scalar::one()).unwrap();
        let fine = covering_radius_certified(&x, &lo, &hi, &q(1, 2)).unwrap();
        assert_eq!(
            (coarse.lower.clone(), coarse.upper.clone()),
            (Scalar::zero(), Scalar::one())
        );
        assert_eq!(
            (fine.lower.clone(), fine.upper.clone()),
            (Scalar::one(), q(3, 2))
        );
        assert!(fine.lower <= coarse.upper);
    }
}
