//! The straight-line retraction `Φ(p, t) = p − (t/4)⟨p, v⟩v` of the
//! 1-neighborhood of `e(X) ⊂ ℝ⁴` onto the hyperplane `e(ℝ³)`, checked
//! pointwise with exact interval covers.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{covering_radius_certified, DensityCertificate};
use crate::embeddings::{embed, normal_vector, EmbeddingSpec};
use crate::error::{Error, Result};
use crate::metric::{dist, Metric, Point, PointSet};
use crate::scalar::Scalar;

const TARGET_DIM: usize = 4;

/// ℓ∞ radius around a segment's bounding box beyond which centers are skipped.
pub const PRUNE_RADIUS: i64 = 3;

/// Margin between anchor points and the boundary of the sampled set.
pub const BOUNDARY_MARGIN: i64 = 2;

fn check_t(t: &Scalar) -> Result<()> {
    if t.is_negative() || t > &Scalar::one() {
        return Err(Error::invalid(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(())
}

fn phi_unchecked(p: &Point, t: &Scalar) -> Point {
    let v = normal_vector();
    let shift = t * &p.dot(&v) * Scalar::ratio(1, 4);
    Point::new(
        p.coords()
            .iter()
            .zip(v.coords())
            .map(|(a, b)| a - &(&shift * b))
            .collect(),
    )
}

/// `Φ(p, t)` for `t ∈ [0, 1]`.
pub fn phi(p: &Point, t: &Scalar) -> Result<Point> {
    Error::check_dim(TARGET_DIM, p.dim())?;
    check_t(t)?;
    Ok(phi_unchecked(p, t))
}

/// `Δp = p − p′` with its inner product against the normal vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Displacement {
    dp: Point,
    inner: Scalar,
}

impl Displacement {
    pub fn new(dp: Point) -> Result<Self> {
        Error::check_dim(TARGET_DIM, dp.dim())?;
        let inner = dp.dot(&normal_vector());
        Ok(Displacement { dp, inner })
    }

    pub fn between(p: &Point, p_prime: &Point) -> Result<Self> {
        Error::check_dim(TARGET_DIM, p_prime.dim())?;
        Self::new(p - p_prime)
    }

    pub fn dp(&self) -> &Point {
        &self.dp
    }

    pub fn inner(&self) -> &Scalar {
        &self.inner
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    #[serde(rename = "CASE1")]
    Case1,
    #[serde(rename = "CASE2")]
    Case2,
}

/// `Case1` iff `|⟨Δp, v⟩| ≥ 7/2`. Requires every `|Δpᵢ| < 1`.
pub fn classify_case(d: &Displacement) -> Result<Case> {
    if let Some(c) = d.dp.coords().iter().find(|c| c.abs() >= Scalar::one()) {
        return Err(Error::Precondition(format!(
            "displacement {:?} has coordinate {c} outside the open unit ball",
            d.dp
        )));
    }
    Ok(if d.inner.abs() >= Scalar::ratio(7, 2) {
        Case::Case1
    } else {
        Case::Case2
    })
}

/// `|((t − 1)/4)·⟨Δp, v⟩|`, the ℓ∞ distance from `Φ(p, t)` to `Φ(p, 1)`.
pub fn case2_bound_value(d: &Displacement, t: &Scalar) -> Scalar {
    ((t - &Scalar::one()) * &d.inner * Scalar::ratio(1, 4)).abs()
}

/// True iff the bound value stays below `7/8` at every sample and at `t = 0`.
pub fn case2_bound_check(d: &Displacement, samples_t: &[Scalar]) -> Result<bool> {
    if classify_case(d)? != Case::Case2 {
        return Err(Error::Precondition(format!(
            "bound check needs a CASE2 displacement, inner product is {}",
            d.inner
        )));
    }
    for t in samples_t {
        check_t(t)?;
    }
    let limit = Scalar::ratio(7, 8);
    Ok(samples_t
        .iter()
        .chain([&Scalar::zero()])
        .all(|t| case2_bound_value(d, t) < limit))
}

/// Open interval of `t`; `None` endpoints are infinite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpenInterval {
    pub lo: Option<Scalar>,
    pub hi: Option<Scalar>,
}

impl OpenInterval {
    pub fn contains(&self, t: &Scalar) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo < t) && self.hi.as_ref().is_none_or(|hi| t < hi)
    }

    fn meets_unit(&self) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo < &Scalar::one())
            && self.hi.as_ref().is_none_or(|hi| hi.is_positive())
    }

    /// A rational point of the interval inside `[0, 1]`, for intervals meeting it.
    fn unit_midpoint(&self) -> Scalar {
        let lo = self.lo.as_ref().map_or(Scalar::zero(), |lo| {
            Scalar::max(lo, &Scalar::zero()).clone()
        });
        let hi = self
            .hi
            .as_ref()
            .map_or(Scalar::one(), |hi| Scalar::min(hi, &Scalar::one()).clone());
        (lo + hi) * Scalar::ratio(1, 2)
    }
}

/// `{t ∈ ℝ : ‖Φ(p, t) − q‖∞ < 1}`, or `None` when empty.
///
/// Coordinate `i` of `Φ(p, t) − q` is `aᵢ − bᵢt` with `a = p − q` and
/// `b = (⟨p, v⟩/4)·v`; all `|bᵢ|` are equal.
pub fn coverage_interval(p: &Point, q: &Point) -> Result<Option<OpenInterval>> {
    Error::check_dim(TARGET_DIM, p.dim())?;
    Error::check_dim(TARGET_DIM, q.dim())?;
    let slope = p.dot(&normal_vector()) * Scalar::ratio(1, 4);
    Ok(interval_with_slope(p, q, &slope))
}

const NORMAL_SIGNS: [i64; TARGET_DIM] = [1, 1, 1, -1];

fn interval_with_slope(p: &Point, q: &Point, slope: &Scalar) -> Option<OpenInterval> {
    let one = Scalar::one();
    if slope.is_zero() {
        let inside = (0..TARGET_DIM).all(|i| (&p[i] - &q[i]).abs() < one);
        return inside.then_some(OpenInterval { lo: None, hi: None });
    }
    let mut lo: Option<Scalar> = None;
    let mut hi: Option<Scalar> = None;
    for (i, sign) in NORMAL_SIGNS.iter().enumerate() {
        let ai = &p[i] - &q[i];
        let b = if *sign > 0 {
            slope.clone()
        } else {
            -slope.clone()
        };
        let (x, y) = ((&ai - &one) / &b, (&ai + &one) / &b);
        let (l, h) = if b.is_positive() { (x, y) } else { (y, x) };
        if lo.as_ref().is_none_or(|cur| &l > cur) {
            lo = Some(l);
        }
        if hi.as_ref().is_none_or(|cur| &h < cur) {
            hi = Some(h);
        }
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo < hi => Some(OpenInterval {
            lo: Some(lo),
            hi: Some(hi),
        }),
        _ => None,
    }
}

/// Intervals of the centers meeting `[0, 1]`, and whether their union covers it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageCertificate {
    pub p: Point,
    /// `(center index, interval)` for every nonempty interval meeting `[0, 1]`.
    pub contributions: Vec<(usize, OpenInterval)>,
    /// Positions in `contributions` forming a gap-free chain from 0 to 1.
    pub chain: Vec<usize>,
    pub covered: bool,
    /// Smallest `t ∈ [0, 1]` left uncovered, when not covered.
    pub gap_at: Option<Scalar>,
}

impl CoverageCertificate {
    /// Re-evaluates `‖Φ(p, t̂) − q‖∞ < 1` at a rational point `t̂` of every
    /// listed interval, and checks the chain.
    pub fn validate(&self, centers: &PointSet) -> Result<bool> {
        for (idx, interval) in &self.contributions {
            let q = centers
                .points()
                .get(*idx)
                .ok_or_else(|| Error::invalid(format!("center index {idx} out of range")))?;
            let t = interval.unit_midpoint();
            if !interval.contains(&t)
                || dist(Metric::LInf, &phi_unchecked(&self.p, &t), q)? >= Scalar::one()
            {
                return Ok(false);
            }
        }
        if !self.covered {
            return Ok(true);
        }
        let mut reach = Scalar::zero();
        for &k in &self.chain {
            let interval = &self
                .contributions
                .get(k)
                .ok_or_else(|| Error::invalid("bad chain index"))?
                .1;
            if !interval.contains(&reach) {
                return Ok(false);
            }
            match &interval.hi {
                None => return Ok(true),
                Some(hi) => reach = hi.clone(),
            }
        }
        Ok(reach > Scalar::one())
    }
}

/// Decides whether the union of open intervals contains `[0, 1]`.
fn sweep(intervals: &[OpenInterval]) -> (Vec<usize>, bool, Option<Scalar>) {
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_by(|&a, &b| match (&intervals[a].lo, &intervals[b].lo) {
        (None, None) => a.cmp(&b),
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.cmp(y).then(a.cmp(&b)),
    });
    let mut chain = Vec::new();
    // `[0, reach)` is covered; `reach` itself needs an interval starting below it.
    let mut reach = Scalar::zero();
    let mut cursor = 0;
    loop {
        let mut best: Option<(usize, Option<&Scalar>)> = None;
        while cursor < order.len() {
            let k = order[cursor];
            let admissible = intervals[k].lo.as_ref().is_none_or(|lo| lo < &reach);
            if !admissible {
                break;
            }
            let hi = intervals[k].hi.as_ref();
            let better = match (&best, hi) {
                (None, _) => true,
                (Some((_, None)), _) => false,
                (Some(_), None) => true,
                (Some((_, Some(b))), Some(h)) => h > b,
            };
            if better {
                best = Some((k, hi));
            }
            cursor += 1;
        }
        match best {
            Some((k, None)) => {
                chain.push(k);
                return (chain, true, None);
            }
            Some((k, Some(hi))) if hi > &reach => {
                chain.push(k);
                if hi > &Scalar::one() {
                    return (chain, true, None);
                }
                reach = hi.clone();
            }
            _ => return (chain, false, Some(reach)),
        }
    }
}

/// Exact check that the segment `{Φ(p, t) : t ∈ [0, 1]}` lies in the union of
/// open unit ℓ∞ balls around `centers`.
pub fn verify_segment_coverage(p: &Point, centers: &PointSet) -> Result<CoverageCertificate> {
    Error::check_dim(TARGET_DIM, p.dim())?;
    Error::check_dim(TARGET_DIM, centers.dim())?;
    if centers.is_empty() {
        return Err(Error::invalid("segment coverage needs at least one center"));
    }
    let end = phi_unchecked(p, &Scalar::one());
    let seg_lo: Vec<Scalar> = (0..TARGET_DIM)
        .map(|i| Scalar::min(&p[i], &end[i]).clone())
        .collect();
    let seg_hi: Vec<Scalar> = (0..TARGET_DIM)
        .map(|i| Scalar::max(&p[i], &end[i]).clone())
        .collect();
    let widen = |r: i64| -> (Vec<Scalar>, Vec<Scalar>) {
        let r = Scalar::from_int(r);
        (
            seg_lo.iter().map(|c| c - &r).collect(),
            seg_hi.iter().map(|c| c + &r).collect(),
        )
    };
    let (prune_lo, prune_hi) = widen(PRUNE_RADIUS);
    let (near_lo, near_hi) = widen(1);
    let slope = p.dot(&normal_vector()) * Scalar::ratio(1, 4);
    let mut contributions = Vec::new();
    for (idx, q) in centers.points().iter().enumerate() {
        // The segment lies in its bounding box, so a center at ℓ∞ distance
        // ≥ 1 from the box has an empty interval.
        let in_prune_box = (0..TARGET_DIM).all(|i| prune_lo[i] <= q[i] && q[i] <= prune_hi[i]);
        if !in_prune_box || !(0..TARGET_DIM).all(|i| near_lo[i] < q[i] && q[i] < near_hi[i]) {
            continue;
        }
        if let Some(interval) = interval_with_slope(p, q, &slope) {
            if interval.meets_unit() {
                contributions.push((idx, interval));
            }
        }
    }
    let intervals: Vec<OpenInterval> = contributions.iter().map(|(_, i)| i.clone()).collect();
    let (chain, covered, gap_at) = sweep(&intervals);
    Ok(CoverageCertificate {
        p: p.clone(),
        contributions,
        chain,
        covered,
        gap_at,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleOutcome {
    pub index: usize,
    /// Source point `x` with `p′ = e(x)`.
    pub anchor: Point,
    pub p_prime: Point,
    pub displacement: Displacement,
    pub case: Case,
    /// CASE1: the interval of `p′` alone contains `[0, 1]`. CASE2: the bound
    /// `< 7/8` holds at `t = 0`.
    pub case_property: bool,
    pub certificate_valid: bool,
    /// Anchor closer than the boundary margin to the edge of the sampled set.
    pub near_boundary: bool,
    pub covered: bool,
    pub center_count: usize,
    /// Full certificate, kept only for samples that did not pass.
    pub certificate: Option<CoverageCertificate>,
}

impl SampleOutcome {
    pub fn passed(&self) -> bool {
        self.covered && self.case_property && self.certificate_valid
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RetractionReport {
    pub density: DensityCertificate,
    pub anchor_count: usize,
    pub point_count: usize,
    pub sample_count: usize,
    pub case1: usize,
    pub case2: usize,
    pub covered: usize,
    pub case1_single_center: usize,
    pub case2_bound_ok: usize,
    pub failures: Vec<SampleOutcome>,
    /// Non-passing samples whose anchor lies within the boundary margin.
    pub margin_violations: Vec<SampleOutcome>,
}

impl RetractionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteConfig {
    /// Anchors `x` are drawn from `X ∩ [window_lo, window_hi]³`.
    pub window_lo: Scalar,
    pub window_hi: Scalar,
    /// Sampling pitch of the density certificate over the window.
    pub density_pitch: Scalar,
    pub sample_count: usize,
    pub seed: u64,
}

/// `1/1000`-grid displacement. Every fourth sample is forced into CASE1 by
/// taking every `|Δpᵢ| ∈ [7/8, 1)` with the sign pattern of `±v`.
fn sample_displacement(rng: &mut ChaCha8Rng, index: usize) -> Point {
    let milli = |k: i64| Scalar::ratio(k, 1000);
    if index % 4 == 3 {
        let sigma = if rng.gen_bool(0.5) { 1 } else { -1 };
        let coords = normal_vector()
            .coords()
            .iter()
            .map(|vi| {
                let u = rng.gen_range(1..=125);
                vi * &milli(sigma * (1000 - u))
            })
            .collect();
        Point::new(coords)
    } else {
        Point::new(
            (0..TARGET_DIM)
                .map(|_| milli(100 * rng.gen_range(-9..=9) + rng.gen_range(-49..=49)))
                .collect(),
        )
    }
}

/// Samples `p ∈ B₁(p′)` around anchors `p′ ∈ e(X)` and certifies segment
/// coverage for each. Refuses to run unless `X` is certified to have covering
/// radius at most `1/8` over the anchor window.
pub fn retraction_suite(x: &PointSet, config: &SuiteConfig) -> Result<RetractionReport> {
    if x.dim() != 3 || x.metric() != Metric::L1 {
        return Err(Error::invalid(
            "retraction suite needs a 3-dimensional L1 point set",
        ));
    }
    if config.window_lo > config.window_hi {
        return Err(Error::invalid("empty anchor window"));
    }
    let in_window = |p: &Point| {
        p.coords()
            .iter()
            .all(|c| &config.window_lo <= c && c <= &config.window_hi)
    };
    let anchors: Vec<usize> = (0..x.len())
        .filter(|&i| in_window(&x.points()[i]))
        .collect();
    if anchors.is_empty() {
        return Err(Error::invalid("no points of X inside the anchor window"));
    }
    let window_pts = x.select(&anchors);
    let lo = Point::new(vec![config.window_lo.clone(); 3]);
    let hi = Point::new(vec![config.window_hi.clone(); 3]);
    let density = covering_radius_certified(&window_pts, &lo, &hi, &config.density_pitch)?;
    if !density.certifies_at_most(&Scalar::ratio(1, 8)) {
        return Err(Error::Precondition(format!(
            "density certificate upper bound {} exceeds 1/8",
            density.upper
        )));
    }

    let spec = EmbeddingSpec::spatial();
    let image = crate::embeddings::embed_set(&spec, x)?;
    let margin = Scalar::from_int(BOUNDARY_MARGIN);
    let extent: Vec<(Scalar, Scalar)> = (0..3)
        .map(|i| {
            let coords = x.points().iter().map(|p| &p[i]);
            (
                coords.clone().min().unwrap().clone(),
                coords.max().unwrap().clone(),
            )
        })
        .collect();
    let near_boundary =
        |p: &Point| (0..3).any(|i| &p[i] - &extent[i].0 < margin || &extent[i].1 - &p[i] < margin);

    let outcomes: Vec<SampleOutcome> = (0..config.sample_count)
        .into_par_iter()
        .map(|index| -> Result<SampleOutcome> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(index as u64);
            let anchor_idx = anchors[rng.gen_range(0..anchors.len())];
            let anchor = x.points()[anchor_idx].clone();
            let p_prime = embed(&spec, &anchor)?;
            let displacement = Displacement::new(sample_displacement(&mut rng, index))?;
            let case = classify_case(&displacement)?;
            let p = &p_prime + displacement.dp();
            let cert = verify_segment_coverage(&p, &image)?;
            let case_property = match case {
                Case::Case1 => coverage_interval(&p, &p_prime)?
                    .is_some_and(|i| i.contains(&Scalar::zero()) && i.contains(&Scalar::one())),
                Case::Case2 => case2_bound_check(&displacement, &[])?,
            };
            let certificate_valid = cert.validate(&image)?;
            let mut outcome = SampleOutcome {
                index,
                near_boundary: near_boundary(&anchor),
                anchor,
                p_prime,
                displacement,
                case,
                case_property,
                certificate_valid,
                covered: cert.covered,
                center_count: cert.contributions.len(),
                certificate: None,
            };
            if !outcome.passed() {
                outcome.certificate = Some(cert);
            }
            Ok(outcome)
        })
        .collect::<Result<_>>()?;

    let count = |f: &dyn Fn(&SampleOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let (failures, margin_violations): (Vec<_>, Vec<_>) = outcomes
        .iter()
        .filter(|o| !o.passed())
        .cloned()
        .partition(|o| !o.near_boundary);
    Ok(RetractionReport {
        density,
        anchor_count: anchors.len(),
        point_count: x.len(),
        sample_count: outcomes.len(),
        case1: count(&|o| o.case == Case::Case1),
        case2: count(&|o| o.case == Case::Case2),
        covered: count(&|o| o.covered),
        case1_single_center: count(&|o| o.case == Case::Case1 && o.case_property),
        case2_bound_ok: count(&|o| o.case == Case::Case2 && o.case_property),
        failures,
        margin_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{embed_set, hyperplane_residual, project_to_image};
    use crate::metric::scaled_lattice_box;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn pt(c: &[(i64, i64)]) -> Point {
        Point::new(c.iter().map(|&(n, d)| q(n, d)).collect())
    }

    fn window_set() -> PointSet {
        scaled_lattice_box(3, &q(1, 12), &Scalar::zero(), &Scalar::one()).unwrap()
    }

    #[test]
    fn phi_examples() {
        let on_plane = embed(&EmbeddingSpec::spatial(), &Point::from_ints(&[1, 2, -3])).unwrap();
        assert_eq!(phi(&on_plane, &q(1, 3)).unwrap(), on_plane);
        assert_eq!(
            phi(&normal_vector(), &Scalar::one()).unwrap(),
            Point::origin(4)
        );
        assert_eq!(
            phi(&Point::from_ints(&[1, 0, 0, 0]), &q(1, 2)).unwrap(),
            pt(&[(7, 8), (-1, 8), (-1, 8), (1, 8)])
        );
        assert!(phi(&normal_vector(), &q(3, 2)).is_err());
        assert!(phi(&normal_vector(), &q(-1, 2)).is_err());
        assert!(phi(&Point::origin(3), &Scalar::zero()).is_err());
    }

    #[test]
    fn case_classification() {
        let d = Displacement::new(pt(&[(9, 10), (9, 10), (9, 10), (-9, 10)])).unwrap();
        assert_eq!(d.inner(), &q(18, 5));
        assert_eq!(classify_case(&d).unwrap(), Case::Case1);
        // In CASE1 every coordinate has absolute value at least 1/2.
        assert!(d.dp().coords().iter().all(|c| c.abs() >= q(1, 2)));
        let half = Displacement::new(pt(&[(1, 2), (0, 1), (0, 1), (0, 1)])).unwrap();
        assert_eq!(classify_case(&half).unwrap(), Case::Case2);
        let zero = Displacement::new(Point::origin(4)).unwrap();
        assert_eq!(classify_case(&zero).unwrap(), Case::Case2);
        let outside = Displacement::new(pt(&[(1, 1), (0, 1), (0, 1), (0, 1)])).unwrap();
        assert!(matches!(
            classify_case(&outside),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn case2_bound() {
        let near = Displacement::new(pt(&[(87, 100), (87, 100), (87, 100), (-87, 100)])).unwrap();
        assert!(near.inner() < &q(7, 2));
        assert!(case2_bound_check(&near, &[q(1, 2), Scalar::one()]).unwrap());
        assert!(case2_bound_value(&near, &Scalar::zero()) < q(7, 8));
        let zero = Displacement::new(Point::origin(4)).unwrap();
        assert!(case2_bound_check(&zero, &[q(1, 3)]).unwrap());
        let four = Displacement::new(pt(&[(99, 100), (99, 100), (99, 100), (-99, 100)])).unwrap();
        assert!(case2_bound_check(&four, &[]).is_err());
        let at_four = Displacement::new(Point::from_ints(&[1, 1, 1, -1])).unwrap();
        assert_eq!(case2_bound_value(&at_four, &Scalar::zero()), Scalar::one());
        assert!(case2_bound_check(&zero, &[q(2, 1)]).is_err());
    }

    #[test]
    fn coverage_interval_examples() {
        let p = Point::from_ints(&[1, 2, -3, 0]);
        assert_eq!(
            coverage_interval(&p, &p).unwrap(),
            Some(OpenInterval { lo: None, hi: None })
        );
        let shifted = &p + &Point::from_ints(&[2, 0, 0, 2]);
        assert_eq!(hyperplane_residual(&shifted).unwrap(), Scalar::zero());
        assert_eq!(coverage_interval(&shifted, &p).unwrap(), None);
        assert_eq!(
            coverage_interval(&Point::from_ints(&[1, 0, 0, 0]), &Point::origin(4)).unwrap(),
            Some(OpenInterval {
                lo: Some(Scalar::zero()),
                hi: Some(Scalar::from_int(4))
            })
        );
    }

    #[test]
    fn sweep_decides_union_exactly() {
        let iv = |a: (i64, i64), b: (i64, i64)| OpenInterval {
            lo: Some(q(a.0, a.1)),
            hi: Some(q(b.0, b.1)),
        };
        let (_, covered, gap) = sweep(&[iv((-1, 1), (1, 2)), iv((1, 2), (2, 1))]);
        assert!(!covered);
        assert_eq!(gap, Some(q(1, 2)));
        let (chain, covered, _) = sweep(&[iv((1, 3), (2, 1)), iv((-1, 1), (1, 2))]);
        assert!(covered);
        assert_eq!(chain, vec![1, 0]);
        let (_, covered, gap) = sweep(&[iv((0, 1), (2, 1))]);
        assert!(!covered);
        assert_eq!(gap, Some(Scalar::zero()));
        let (_, covered, gap) = sweep(&[iv((-1, 1), (1, 1))]);
        assert!(!covered);
        assert_eq!(gap, Some(Scalar::one()));
        assert!(
            sweep(&[OpenInterval {
                lo: None,
                hi: Some(q(3, 2))
            }])
            .1
        );
        assert!(!sweep(&[]).1);
    }

    #[test]
    fn own_center_covers_points_in_the_set() {
        let x = window_set();
        let centers = embed_set(&EmbeddingSpec::spatial(), &x).unwrap();
        let p = centers.points()[100].clone();
        let cert = verify_segment_coverage(&p, &centers).unwrap();
        assert!(cert.covered);
        assert!(cert.contributions.iter().any(|(i, _)| *i == 100));
        assert!(cert.validate(&centers).unwrap());
    }

    #[test]
    fn case_examples_on_the_fine_lattice() {
        let x = window_set();
        let spec = EmbeddingSpec::spatial();
        let centers = embed_set(&spec, &x).unwrap();
        let p_prime = embed(&spec, &pt(&[(1, 2), (1, 2), (1, 2)])).unwrap();
        let center_idx = centers.points().iter().position(|c| c == &p_prime).unwrap();

        let p1 = &p_prime + &pt(&[(9, 10), (9, 10), (9, 10), (-9, 10)]);
        let own = coverage_interval(&p1, &p_prime).unwrap().unwrap();
        assert!(own.contains(&Scalar::zero()) && own.contains(&Scalar::one()));
        let cert1 = verify_segment_coverage(&p1, &centers).unwrap();
        assert!(cert1.covered);
        assert!(cert1.validate(&centers).unwrap());

        let p2 = &p_prime + &pt(&[(1, 2), (0, 1), (0, 1), (0, 1)]);
        let cert2 = verify_segment_coverage(&p2, &centers).unwrap();
        assert!(cert2.covered);
        assert!(cert2.contributions.iter().any(|(i, _)| *i != center_idx));
        assert!(cert2.validate(&centers).unwrap());
    }

    #[test]
    fn uncovered_segment_reports_gap() {
        let centers = PointSet::new(4, Metric::LInf, vec![Point::origin(4)]).unwrap();
        let p = Point::from_ints(&[0, 0, 0, 3]);
        let cert = verify_segment_coverage(&p, &centers).unwrap();
        assert!(!cert.covered);
        assert!(cert.gap_at.is_some());
        assert!(cert.validate(&centers).unwrap());
    }

    #[test]
    fn tampered_certificate_is_rejected() {
        let x = window_set();
        let centers = embed_set(&EmbeddingSpec::spatial(), &x).unwrap();
        let p = &centers.points()[500] + &pt(&[(1, 2), (1, 3), (0, 1), (0, 1)]);
        let mut cert = verify_segment_coverage(&p, &centers).unwrap();
        assert!(cert.validate(&centers).unwrap());
        cert.contributions[0].0 = (cert.contributions[0].0 + 700) % centers.len();
        assert!(!cert.validate(&centers).unwrap());
    }

    fn suite_config(samples: usize, seed: u64) -> SuiteConfig {
        SuiteConfig {
            window_lo: Scalar::zero(),
            window_hi: q(1, 2),
            density_pitch: q(1, 12),
            sample_count: samples,
            seed,
        }
    }

    #[test]
    fn suite_on_fine_lattice() {
        let x = scaled_lattice_box(3, &q(1, 12), &Scalar::from_int(-2), &q(5, 2)).unwrap();
        let report = retraction_suite(&x, &suite_config(24, 7)).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert!(report.margin_violations.is_empty());
        assert_eq!(report.covered, 24);
        assert_eq!(report.case1, 6);
        assert_eq!(report.case1_single_center, report.case1);
        assert_eq!(report.case2_bound_ok, report.case2);
        assert_eq!(report.density.upper, q(1, 8));
        assert_eq!(retraction_suite(&x, &suite_config(24, 7)).unwrap(), report);
    }

    #[test]
    fn suite_refuses_sparse_sets() {
        let x =
            scaled_lattice_box(3, &q(1, 2), &Scalar::from_int(-2), &Scalar::from_int(3)).unwrap();
        assert!(matches!(
            retraction_suite(&x, &suite_config(10, 1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn empty_suite_succeeds() {
        let x = window_set();
        let report = retraction_suite(&x, &suite_config(0, 1)).unwrap();
        assert!(report.passed());
        assert_eq!(report.sample_count, 0);
    }

    #[test]
    fn samples_lie_in_the_open_unit_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for index in 0..400 {
            let d = Displacement::new(sample_displacement(&mut rng, index)).unwrap();
            let case = classify_case(&d).unwrap();
            if index % 4 == 3 {
                assert_eq!(case, Case::Case1);
            }
        }
    }

    fn arb_point4() -> impl Strategy<Value = Point> {
        prop::collection::vec((-50i64..50, 1i64..13), 4)
            .prop_map(|c| Point::new(c.into_iter().map(|(n, d)| q(n, d)).collect()))
    }

    proptest! {
        #[test]
        fn phi_scales_the_normal_component(p in arb_point4(), t in (0i64..=12).prop_map(|k| q(k, 12))) {
            let v = normal_vector();
            let image = phi(&p, &t).unwrap();
            prop_assert_eq!(image.dot(&v), (Scalar::one() - &t) * p.dot(&v));
            prop_assert_eq!(phi(&p, &Scalar::zero()).unwrap(), p.clone());
            prop_assert_eq!(phi(&p, &Scalar::one()).unwrap(), project_to_image(&p).unwrap());
        }

        #[test]
        fn interval_matches_pointwise_distance(p in arb_point4(), c in arb_point4(), k in 0i64..=24) {
            let t = q(k, 24);
            let inside = dist(Metric::LInf, &phi(&p, &t).unwrap(), &c).unwrap() < Scalar::one();
            let interval = coverage_interval(&p, &c).unwrap();
            prop_assert_eq!(interval.is_some_and(|i| i.contains(&t)), inside);
        }
    }
}
