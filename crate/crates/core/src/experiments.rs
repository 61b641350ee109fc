//! Desk-scale experiments. Each returns a [`RunRecord`] whose non-timing
//! fields depend only on the configuration.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::boxunion::{box_helly_check, neighborhood_betti_with_budget, NeighborhoodBetti};
use crate::density::covering_radius_certified;
use crate::embeddings::{verify_isometry, EmbeddingSpec};
use crate::error::{Error, Result};
use crate::homology::{betti, boundary_of_boundary_vanishes, component_count, BettiVector};
use crate::metric::{
    contractibility_threshold, lattice_graph_sample, lattice_window, rescale, scaled_lattice_box,
    Metric, Point, PointSet, Regime,
};
use crate::retraction::{retraction_suite, SuiteConfig, BOUNDARY_MARGIN, PRUNE_RADIUS};
use crate::rips::{
    complexes_equal_under_index_map, critical_radii, elementary_collapse, strong_collapse,
    vietoris_rips_with_budget, ElementaryCollapse, SimplicialComplex, DEFAULT_DIM_CAP,
};
use crate::scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Statement tags carried by run records.
pub mod tags {
    pub const HYPERCONVEX: &str = "hyperconvex-helly";
    pub const OPEN_VR: &str = "open-vietoris-rips";
    pub const NEIGHBORHOOD: &str = "neighborhood-homotopy";
    pub const PLANE_THRESHOLD: &str = "plane-threshold";
    pub const Z2_WEDGE: &str = "z2-wedge-of-circles";
    pub const Z2_GRAPH: &str = "z2-graph-contractible";
    pub const EMBEDDING: &str = "l1-linf-embedding";
    pub const RETRACTION: &str = "hyperplane-retraction";
    pub const RESCALING: &str = "rescaling-isomorphism";
    pub const Z3_THRESHOLD: &str = "z3-threshold";
    pub const Z3_GRAPH: &str = "z3-graph-threshold";

    pub const ALL: [&str; 11] = [
        HYPERCONVEX,
        OPEN_VR,
        NEIGHBORHOOD,
        PLANE_THRESHOLD,
        Z2_WEDGE,
        Z2_GRAPH,
        EMBEDDING,
        RETRACTION,
        RESCALING,
        Z3_THRESHOLD,
        Z3_GRAPH,
    ];
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub tags: Vec<&'static str>,
    pub version: &'static str,
    pub config: Value,
    pub passed: bool,
    pub results: Value,
    pub notes: Vec<String>,
    pub timings_ms: BTreeMap<String, u128>,
    #[serde(skip)]
    pub table: Table,
}

impl RunRecord {
    pub fn new(command: &str, tags: &[&'static str], config: Value) -> Self {
        RunRecord {
            command: command.to_string(),
            tags: tags.to_vec(),
            version: VERSION,
            config,
            passed: true,
            results: Value::Null,
            notes: Vec::new(),
            timings_ms: BTreeMap::new(),
            table: Table::default(),
        }
    }

    /// The record without timings, for reproducibility comparisons.
    pub fn without_timings(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("record serializes");
        v.as_object_mut().expect("object").remove("timings_ms");
        v
    }
}

/// Tabular mirror of a record, written as CSV.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in std::iter::once(&self.header).chain(&self.rows) {
            w.write_record(row).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
    }
}

fn betti_string(b: &BettiVector) -> String {
    b.betti
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn timed<T>(timings: &mut BTreeMap<String, u128>, key: String, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    timings.insert(key, start.elapsed().as_millis());
    out
}

/// `f2`, `e3`, or `general:<n>`.
pub fn parse_embedding(s: &str) -> Result<EmbeddingSpec> {
    match s {
        "f2" => Ok(EmbeddingSpec::planar()),
        "e3" => Ok(EmbeddingSpec::spatial()),
        _ => match s.strip_prefix("general:").map(str::parse::<usize>) {
            Some(Ok(n)) => EmbeddingSpec::general(n),
            _ => Err(Error::Parse(format!(
                "unknown embedding `{s}` (expected f2, e3 or general:<n>)"
            ))),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScaleResult {
    pub r: Scalar,
    pub face_counts: Vec<usize>,
    pub betti: BettiVector,
    pub reduced_trivial: bool,
    pub collapse_residual: usize,
    pub collapsed_to_point: bool,
    /// Elementary collapses of the full flag complex, run when the strong
    /// collapse stops above a single vertex.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elementary: Option<ElementaryCollapse>,
}

impl ScaleResult {
    /// Some collapse certificate reduces the complex to a point.
    pub fn collapsible(&self) -> bool {
        self.collapsed_to_point
            || self
                .elementary
                .as_ref()
                .is_some_and(ElementaryCollapse::collapsed_to_point)
    }
}

/// Homology and strong collapse of `VR(x, r)` with Betti numbers up to `dmax`.
pub fn analyze_scale(x: &PointSet, r: &Scalar, dmax: usize, budget: u64) -> Result<ScaleResult> {
    let k = vietoris_rips_with_budget(x, r, (dmax + 1).max(1), budget)?;
    let b = betti(&k, dmax, false)?;
    let (_, cert) = strong_collapse(&k);
    let elementary = if cert.collapsed_to_point() {
        None
    } else {
        let full = vietoris_rips_with_budget(x, r, x.len().saturating_sub(1), budget)?;
        Some(elementary_collapse(&full))
    };
    Ok(ScaleResult {
        elementary,
        r: r.clone(),
        face_counts: k.face_counts(),
        reduced_trivial: b.to_reduced().is_trivial(),
        betti: b,
        collapse_residual: cert.residual_size,
        collapsed_to_point: cert.collapsed_to_point(),
    })
}

/// Expected finite-window behaviour of `VR(ℤ² ∩ [0, N−1]², r)`.
fn z2_expectation(n: i64, r: &Scalar, res: &ScaleResult) -> (String, bool) {
    let side = (n * n) as usize;
    if r <= &Scalar::one() {
        (
            "beta0 = N^2, beta1 = 0".into(),
            res.betti.get(0) == side && res.betti.get(1) == 0,
        )
    } else if r <= &Scalar::from_int(2) {
        let holes = ((n - 1) * (n - 1)) as usize;
        (
            "beta0 = 1, beta1 = (N-1)^2".into(),
            res.betti.get(0) == 1 && res.betti.get(1) == holes,
        )
    } else {
        (
            "strong collapse to a point".into(),
            res.collapsed_to_point && res.reduced_trivial,
        )
    }
}

pub fn z2_table(sizes: &[i64], scales: &[Scalar], budget: u64) -> Result<RunRecord> {
    if let Some(n) = sizes.iter().find(|n| !(2..=8).contains(*n)) {
        return Err(Error::invalid(format!("window size {n} outside 2..=8")));
    }
    let mut rec = RunRecord::new(
        "z2-table",
        &[tags::Z2_WEDGE, tags::OPEN_VR],
        json!({ "sizes": sizes, "scales": scales, "dmax": 2, "budget": budget }),
    );
    rec.table = Table::new(&["n", "r", "betti", "collapse_residual", "expectation", "ok"]);
    let mut rows = Vec::new();
    for &n in sizes {
        let x = lattice_window(2, 0, n - 1)?;
        for r in scales {
            let res = timed(&mut rec.timings_ms, format!("n={n} r={r}"), || {
                analyze_scale(&x, r, 2, budget)
            })?;
            let (expectation, ok) = z2_expectation(n, r, &res);
            rec.passed &= ok;
            rec.table.push(vec![
                n.to_string(),
                r.to_string(),
                betti_string(&res.betti),
                res.collapse_residual.to_string(),
                expectation.clone(),
                ok.to_string(),
            ]);
            rows.push(json!({ "n": n, "result": res, "expectation": expectation, "ok": ok }));
        }
    }
    rec.results = json!(rows);
    rec.notes.push(
        "Finite windows stand in for the infinite lattice; the infinite wedge of circles is not computable.".into(),
    );
    Ok(rec)
}

/// Distinct random points with coordinates `k/den`, `k ∈ [0, span]`.
fn random_points(
    rng: &mut ChaCha8Rng,
    dim: usize,
    count: usize,
    span: i64,
    den: i64,
) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::new();
    while pts.len() < count {
        let p = Point::new(
            (0..dim)
                .map(|_| Scalar::ratio(rng.gen_range(0..=span), den))
                .collect(),
        );
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

/// Distinct points of `{0, …, side}^dim`, each coordinate moved by `k/8`
/// with `k ∈ {−1, 0, 1}`.
fn jittered_lattice_points(
    rng: &mut ChaCha8Rng,
    dim: usize,
    count: usize,
    side: i64,
) -> Vec<Point> {
    let mut pts: Vec<Point> = Vec::new();
    let mut bases: Vec<Point> = Vec::new();
    while pts.len() < count {
        let base = Point::new(
            (0..dim)
                .map(|_| Scalar::from_int(rng.gen_range(0..=side)))
                .collect(),
        );
        if bases.contains(&base) {
            continue;
        }
        let jitter = Point::new(
            (0..dim)
                .map(|_| Scalar::ratio(rng.gen_range(-1..=1), 8))
                .collect(),
        );
        pts.push(&base + &jitter);
        bases.push(base);
    }
    pts
}

/// A scale strictly between two consecutive critical radii (or above the
/// largest), so the result does not depend on the strict inequality. Drawn
/// from the lower half of the radii, where the topology is nontrivial.
fn generic_scale(rng: &mut ChaCha8Rng, radii: &[Scalar]) -> Scalar {
    let i = rng.gen_range(0..(radii.len() / 2).max(1));
    match radii.get(i + 1) {
        Some(next) => (&radii[i] + next) * Scalar::ratio(1, 2),
        None => &radii[i] + &Scalar::one(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossCheckTrial {
    pub index: usize,
    pub dim: usize,
    pub points: usize,
    pub r: Scalar,
    pub vr_betti: BettiVector,
    pub neighborhood: NeighborhoodBetti,
    pub agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<PointSet>,
}

fn cross_check_trial(
    x: &PointSet,
    r: &Scalar,
    index: usize,
    budget: u64,
) -> Result<CrossCheckTrial> {
    let (spec, dmax) = match x.dim() {
        2 => (EmbeddingSpec::planar(), 1),
        3 => (EmbeddingSpec::spatial(), 2),
        d => {
            return Err(Error::invalid(format!(
                "cross-check supports dimensions 2 and 3, got {d}"
            )))
        }
    };
    let k = vietoris_rips_with_budget(x, r, dmax + 1, budget)?;
    let vr_betti = betti(&k, dmax, false)?;
    let neighborhood = neighborhood_betti_with_budget(x, &spec, r, dmax, budget)?;
    let agree = vr_betti == neighborhood.betti;
    Ok(CrossCheckTrial {
        index,
        dim: x.dim(),
        points: x.len(),
        r: r.clone(),
        vr_betti,
        neighborhood,
        agree,
        x: (!agree).then(|| x.clone()),
    })
}

/// Compares VR Betti numbers with those of the ℓ∞ neighborhood of the
/// embedded set on random planar and spatial instances. The last trial uses a
/// scale below the minimum pairwise distance.
pub fn cross_check(
    trials_2d: usize,
    trials_3d: usize,
    seed: u64,
    budget: u64,
) -> Result<RunRecord> {
    let mut rec = RunRecord::new(
        "cross-check",
        &[
            tags::NEIGHBORHOOD,
            tags::EMBEDDING,
            tags::HYPERCONVEX,
            tags::PLANE_THRESHOLD,
        ],
        json!({ "trials_2d": trials_2d, "trials_3d": trials_3d, "seed": seed, "budget": budget,
                "max_points_2d": 40, "max_points_3d": 12 }),
    );
    let total = trials_2d + trials_3d + 1;
    let start = Instant::now();
    let trials: Vec<CrossCheckTrial> = (0..total)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let (dim, max_points) = match index {
                i if i < trials_2d => (2, 40),
                i if i < trials_2d + trials_3d => (3, 12),
                _ => (2, 12),
            };
            let pts = if index + 1 == total {
                random_points(&mut rng, 2, 12, 16, 1)
            } else if index % 2 == 0 {
                let n = rng.gen_range(3..=max_points);
                random_points(&mut rng, dim, n, if dim == 2 { 24 } else { 8 }, 2)
            } else {
                let n = rng.gen_range(4..=max_points);
                jittered_lattice_points(&mut rng, dim, n, if dim == 2 { 6 } else { 2 })
            };
            let x = PointSet::new(dim, Metric::L1, pts)?;
            let radii = critical_radii(&x)?;
            let r = if index + 1 == total {
                &radii[0] * Scalar::ratio(1, 2)
            } else {
                generic_scale(&mut rng, &radii)
            };
            cross_check_trial(&x, &r, index, budget)
        })
        .collect::<Result<_>>()?;
    rec.timings_ms
        .insert("total".into(), start.elapsed().as_millis());
    rec.table = Table::new(&[
        "trial",
        "dim",
        "points",
        "r",
        "vr_betti",
        "neighborhood_betti",
        "r_bar",
        "agree",
    ]);
    for t in &trials {
        rec.passed &= t.agree;
        rec.table.push(vec![
            t.index.to_string(),
            t.dim.to_string(),
            t.points.to_string(),
            t.r.to_string(),
            betti_string(&t.vr_betti),
            betti_string(&t.neighborhood.betti),
            t.neighborhood
                .r_bar
                .as_ref()
                .map_or("none".into(), Scalar::to_string),
            t.agree.to_string(),
        ]);
    }
    let last = trials.last().expect("at least one trial");
    if last.vr_betti.get(0) != last.points || last.neighborhood.betti.get(0) != last.points {
        rec.passed = false;
        rec.notes
            .push("sub-minimum scale did not give |X| components".into());
    }
    let mismatches = trials.iter().filter(|t| !t.agree).count();
    rec.results = json!({ "mismatches": mismatches, "trials": trials });
    Ok(rec)
}

/// `VR(X, r)` against `VR((2/r)·X, 2)` as simplex sets on random lattice subsets.
pub fn rescale_check(trials: usize, seed: u64, budget: u64) -> Result<RunRecord> {
    let mut rec = RunRecord::new(
        "rescale-check",
        &[tags::RESCALING, tags::OPEN_VR],
        json!({ "trials": trials, "seed": seed, "budget": budget, "window": "[0,6]^2" }),
    );
    rec.table = Table::new(&["trial", "points", "r", "simplices", "equal"]);
    let start = Instant::now();
    let outcomes: Vec<(usize, Scalar, usize, bool)> = (0..trials)
        .into_par_iter()
        .map(|index| -> Result<_> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let count = if index == 1 { 1 } else { rng.gen_range(2..=15) };
            let x = PointSet::new(2, Metric::L1, random_points(&mut rng, 2, count, 6, 1))?;
            let r = if index == 0 {
                Scalar::from_int(2)
            } else {
                Scalar::ratio(rng.gen_range(1..=60), rng.gen_range(1..=12))
            };
            let a = vietoris_rips_with_budget(&x, &r, DEFAULT_DIM_CAP, budget)?;
            let scaled = rescale(&x, &(Scalar::from_int(2) / &r))?;
            let b =
                vietoris_rips_with_budget(&scaled, &Scalar::from_int(2), DEFAULT_DIM_CAP, budget)?;
            Ok((
                x.len(),
                r,
                a.total_simplices(),
                complexes_equal_under_index_map(&a, &b)?,
            ))
        })
        .collect::<Result<_>>()?;
    rec.timings_ms
        .insert("total".into(), start.elapsed().as_millis());
    for (i, (n, r, simplices, equal)) in outcomes.iter().enumerate() {
        rec.passed &= equal;
        rec.table.push(vec![
            i.to_string(),
            n.to_string(),
            r.to_string(),
            simplices.to_string(),
            equal.to_string(),
        ]);
    }
    rec.results = json!({
        "unequal": outcomes.iter().filter(|o| !o.3).count(),
        "trials": outcomes.iter().enumerate().map(|(i, (n, r, s, e))| json!({
            "trial": i, "points": n, "r": r, "simplices": s, "equal": e
        })).collect::<Vec<_>>(),
    });
    Ok(rec)
}

/// Sampled lattice graphs: homology and collapse of `G(ℤ²)` around scale 1,
/// covering-radius certificates, and the resulting contractibility thresholds.
pub fn graph_tables(budget: u64) -> Result<RunRecord> {
    let mut rec = RunRecord::new(
        "graph-tables",
        &[
            tags::Z2_GRAPH,
            tags::Z3_GRAPH,
            tags::Z3_THRESHOLD,
            tags::PLANE_THRESHOLD,
        ],
        json!({ "plane": { "pitch": "1/2", "window": "[0,3]^2", "scales": ["1/2", "4/5", "6/5"] },
                "space": { "pitch": "1/2", "box": "[0,1]^3", "sampling_pitch": "1/4" },
                "budget": budget }),
    );
    rec.table = Table::new(&["item", "value", "ok"]);
    let half = Scalar::ratio(1, 2);
    let g2 = lattice_graph_sample(2, 0, 3, &half)?;
    let mut plane = Vec::new();
    for (r, expect) in [
        (Scalar::ratio(1, 2), "beta0 = |X|"),
        (Scalar::ratio(4, 5), "beta0 = 1, beta1 = 9"),
        (Scalar::ratio(6, 5), "strong collapse to a point"),
    ] {
        let res = timed(&mut rec.timings_ms, format!("plane r={r}"), || {
            analyze_scale(&g2, &r, 2, budget)
        })?;
        let ok = match expect {
            "beta0 = |X|" => res.betti.get(0) == g2.len() && res.betti.get(1) == 0,
            "beta0 = 1, beta1 = 9" => res.betti.get(0) == 1 && res.betti.get(1) == 9,
            _ => res.collapsible() && res.reduced_trivial,
        };
        if !res.collapsed_to_point && res.collapsible() {
            rec.notes.push(format!(
                "G(Z2) sample at r={r}: no vertex is dominated (strong collapse keeps all {} vertices); \
                 elementary collapses of the full flag complex reduce it to a point.",
                res.collapse_residual
            ));
        }
        rec.passed &= ok;
        let collapse = match (&res.collapsed_to_point, &res.elementary) {
            (true, _) => "strong collapse to a point".to_string(),
            (false, Some(e)) if e.collapsed_to_point() => {
                "elementary collapse to a point".to_string()
            }
            _ => format!("strong collapse residual {}", res.collapse_residual),
        };
        rec.table.push(vec![
            format!("G(Z2) VR r={r}"),
            format!("{} ({collapse})", betti_string(&res.betti)),
            ok.to_string(),
        ]);
        plane.push(json!({ "result": res, "expectation": expect, "ok": ok }));
    }

    let unit = |n: usize, v: i64| Point::new(vec![Scalar::from_int(v); n]);
    let quarter = Scalar::ratio(1, 4);
    let d2 = timed(&mut rec.timings_ms, "plane density".into(), || {
        covering_radius_certified(
            &lattice_graph_sample(2, -1, 2, &Scalar::ratio(1, 8))?,
            &unit(2, 0),
            &unit(2, 1),
            &Scalar::ratio(1, 8),
        )
    })?;
    let plane_threshold = contractibility_threshold(&half, Regime::Dim2)?;
    let plane_ok = d2.lower == half;
    rec.passed &= plane_ok;
    rec.table.push(vec![
        "G(Z2) covering radius bracket".into(),
        format!("[{}, {}]", d2.lower, d2.upper),
        plane_ok.to_string(),
    ]);
    rec.table.push(vec![
        "G(Z2) threshold 2*(1/2)".into(),
        plane_threshold.to_string(),
        "true".into(),
    ]);

    let g3 = lattice_graph_sample(3, -1, 2, &half)?;
    let d3 = timed(&mut rec.timings_ms, "space density".into(), || {
        covering_radius_certified(&g3, &unit(3, 0), &unit(3, 1), &quarter)
    })?;
    let stated_threshold = contractibility_threshold(&half, Regime::Dim3)?;
    let certified_threshold = contractibility_threshold(&d3.lower, Regime::Dim3)?;
    let upper_threshold = contractibility_threshold(&d3.upper, Regime::Dim3)?;
    rec.table.push(vec![
        "G(Z3) covering radius bracket".into(),
        format!("[{}, {}]", d3.lower, d3.upper),
        "true".into(),
    ]);
    rec.table.push(vec![
        "G(Z3) threshold from density 1/2".into(),
        stated_threshold.to_string(),
        "true".into(),
    ]);
    rec.table.push(vec![
        "G(Z3) threshold from certified lower bound".into(),
        certified_threshold.to_string(),
        "true".into(),
    ]);
    if d3.lower > half {
        rec.notes.push(format!(
            "G(Z3) is not e-dense for e slightly above 1/2: the point {:?} has l1 distance {} to the graph, so the \
             covering radius is at least {}; the density-based threshold is 16*{} = {}, not {}.",
            d3.witness, d3.lower, d3.lower, d3.lower, certified_threshold, stated_threshold
        ));
    }

    let z3 = lattice_window(3, -1, 2)?;
    let box_lo = Point::new(vec![half.clone(); 3]);
    let box_hi = Point::new(vec![Scalar::ratio(3, 2); 3]);
    let dz3 = timed(&mut rec.timings_ms, "Z3 density".into(), || {
        covering_radius_certified(&z3, &box_lo, &box_hi, &quarter)
    })?;
    let z3_ok = dz3.lower == Scalar::ratio(3, 2);
    rec.passed &= z3_ok;
    let z3_threshold = contractibility_threshold(&dz3.lower, Regime::Dim3)?;
    rec.table.push(vec![
        "Z3 covering radius bracket".into(),
        format!("[{}, {}]", dz3.lower, dz3.upper),
        z3_ok.to_string(),
    ]);
    rec.table.push(vec![
        "Z3 threshold 16*(3/2)".into(),
        z3_threshold.to_string(),
        "true".into(),
    ]);
    rec.notes.push(
        "VR complexes of the spatial lattice or lattice graph at scales above the threshold are far beyond \
         desk scale; the spatial statements are exercised through density certificates, thresholds and the \
         retraction suite."
            .into(),
    );

    rec.results = json!({
        "plane": plane,
        "plane_graph_density": d2,
        "plane_graph_threshold": plane_threshold,
        "space_graph_density": d3,
        "space_graph_threshold_from_density_one_half": stated_threshold,
        "space_graph_threshold_from_certified_lower": certified_threshold,
        "space_graph_threshold_from_certified_upper": upper_threshold,
        "z3_density": dz3,
        "z3_threshold": z3_threshold,
    });
    Ok(rec)
}

/// Retraction suite on `pitch·ℤ³ ∩ [lo − 2, hi + 2]³` with anchors in `[lo, hi]³`.
pub fn retraction_check(
    pitch: &Scalar,
    lo: &Scalar,
    hi: &Scalar,
    samples: usize,
    seed: u64,
) -> Result<RunRecord> {
    let mut rec = RunRecord::new(
        "verify-retraction",
        &[tags::RETRACTION, tags::EMBEDDING, tags::Z3_THRESHOLD],
        json!({ "pitch": pitch, "window": [lo, hi], "margin": BOUNDARY_MARGIN, "samples": samples, "seed": seed,
                "prune_radius": PRUNE_RADIUS }),
    );
    let margin = Scalar::from_int(BOUNDARY_MARGIN);
    let x = timed(&mut rec.timings_ms, "build".into(), || {
        scaled_lattice_box(3, pitch, &(lo - &margin), &(hi + &margin))
    })?;
    let config = SuiteConfig {
        window_lo: lo.clone(),
        window_hi: hi.clone(),
        density_pitch: pitch.clone(),
        sample_count: samples,
        seed,
    };
    let report = timed(&mut rec.timings_ms, "suite".into(), || {
        retraction_suite(&x, &config)
    })?;
    rec.passed = report.passed();
    rec.table = Table::new(&[
        "samples",
        "case1",
        "case2",
        "covered",
        "case1_single_center",
        "case2_bound_ok",
        "failures",
        "margin_violations",
    ]);
    rec.table.push(
        [
            report.sample_count,
            report.case1,
            report.case2,
            report.covered,
            report.case1_single_center,
            report.case2_bound_ok,
            report.failures.len(),
            report.margin_violations.len(),
        ]
        .iter()
        .map(usize::to_string)
        .collect(),
    );
    if !report.margin_violations.is_empty() {
        rec.notes.push(format!(
            "{} samples near the boundary of the finite window were not covered; they are reported separately.",
            report.margin_violations.len()
        ));
    }
    rec.results = json!(report);
    Ok(rec)
}

fn random_rational(rng: &mut ChaCha8Rng) -> Scalar {
    Scalar::ratio(
        rng.gen_range(-1_000_000..=1_000_000),
        rng.gen_range(1..=1000),
    )
}

/// Exact isometry check of the embedding on `pairs` random rational pairs.
pub fn isometry_check(spec: &EmbeddingSpec, pairs: usize, seed: u64) -> Result<RunRecord> {
    let n = spec.source_dim();
    let mut rec = RunRecord::new(
        "verify-isometry",
        &[tags::EMBEDDING, tags::PLANE_THRESHOLD],
        json!({ "source_dim": n, "target_dim": spec.target_dim(), "pairs": pairs, "seed": seed }),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| Point::new((0..n).map(|_| random_rational(rng)).collect());
    let sample: Vec<(Point, Point)> = (0..pairs)
        .map(|_| (point(&mut rng), point(&mut rng)))
        .collect();
    let report = timed(&mut rec.timings_ms, "verify".into(), || {
        verify_isometry(spec, &sample)
    })?;
    rec.passed = report.counterexample.is_none();
    rec.table = Table::new(&["source_dim", "pairs_checked", "counterexample"]);
    rec.table.push(vec![
        n.to_string(),
        report.checked.to_string(),
        report
            .counterexample
            .as_ref()
            .map_or("none".into(), |c| format!("{:?} {:?}", c.x, c.y)),
    ]);
    rec.results = json!(report);
    Ok(rec)
}

/// Structural invariants on random flag complexes and random box families.
pub fn structural_suite(complexes: usize, helly_trials: usize, seed: u64) -> Result<RunRecord> {
    let mut rec = RunRecord::new(
        "structural",
        &[tags::HYPERCONVEX, tags::OPEN_VR],
        json!({ "complexes": complexes, "helly_trials": helly_trials, "seed": seed }),
    );
    let start = Instant::now();
    let checks: Vec<Value> = (0..complexes)
        .into_par_iter()
        .map(|index| -> Result<Value> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let dim = rng.gen_range(2..=3);
            let count = rng.gen_range(2..=20);
            let x = PointSet::new(dim, Metric::L1, random_points(&mut rng, dim, count, 8, 2))?;
            let r = generic_scale(&mut rng, &critical_radii(&x)?);
            let k: SimplicialComplex = vietoris_rips_with_budget(&x, &r, 3, u64::MAX)?;
            let b = betti(&k, 2, false)?;
            let euler_from_betti = b.betti[0] as i64 - b.betti[1] as i64 + b.betti[2] as i64;
            let top_clear = k.simplices(3).is_empty();
            let (residual, _) = strong_collapse(&k);
            Ok(json!({
                "boundary_squared_zero": boundary_of_boundary_vanishes(&k)?,
                "euler_consistent": !top_clear || k.euler_characteristic() == euler_from_betti,
                "components_match": b.betti[0] == component_count(&k),
                "collapse_preserves_betti": betti(&residual, 2, false)? == b,
            }))
        })
        .collect::<Result<_>>()?;
    let helly: Vec<bool> = (0..helly_trials)
        .into_par_iter()
        .map(|index| -> Result<bool> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            rng.set_stream(index as u64);
            loop {
                let count = rng.gen_range(2..=10);
                let balls: Vec<(Point, Scalar)> = (0..count)
                    .map(|_| {
                        let c = Point::new(
                            (0..4)
                                .map(|_| Scalar::ratio(rng.gen_range(-20..=20), 2))
                                .collect(),
                        );
                        (c, Scalar::ratio(rng.gen_range(8..=30), 2))
                    })
                    .collect();
                let out = box_helly_check(&balls)?;
                if out.premise_holds() {
                    return Ok(out.has_common_point());
                }
            }
        })
        .collect::<Result<_>>()?;
    rec.timings_ms
        .insert("total".into(), start.elapsed().as_millis());
    let tally = |key: &str| checks.iter().filter(|c| c[key] == json!(true)).count();
    let keys = [
        "boundary_squared_zero",
        "euler_consistent",
        "components_match",
        "collapse_preserves_betti",
    ];
    rec.table = Table::new(&["invariant", "held", "trials"]);
    let mut summary = serde_json::Map::new();
    for key in keys {
        let held = tally(key);
        rec.passed &= held == complexes;
        rec.table
            .push(vec![key.into(), held.to_string(), complexes.to_string()]);
        summary.insert(key.into(), json!(held));
    }
    let helly_held = helly.iter().filter(|&&b| b).count();
    rec.passed &= helly_held == helly_trials;
    rec.table.push(vec![
        "helly_common_point".into(),
        helly_held.to_string(),
        helly_trials.to_string(),
    ]);
    summary.insert("helly_common_point".into(), json!(helly_held));
    rec.results = Value::Object(summary);
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rips::DEFAULT_CLIQUE_BUDGET;

    #[test]
    fn parses_embeddings() {
        assert_eq!(parse_embedding("f2").unwrap(), EmbeddingSpec::planar());
        assert_eq!(parse_embedding("e3").unwrap(), EmbeddingSpec::spatial());
        assert_eq!(parse_embedding("general:4").unwrap().target_dim(), 8);
        assert!(parse_embedding("general:x").is_err());
        assert!(parse_embedding("g").is_err());
    }

    #[test]
    fn small_z2_table() {
        let scales = [
            Scalar::ratio(1, 2),
            Scalar::ratio(3, 2),
            Scalar::ratio(5, 2),
        ];
        let rec = z2_table(&[2, 4], &scales, DEFAULT_CLIQUE_BUDGET).unwrap();
        assert!(rec.passed, "{}", rec.table.to_csv());
        assert_eq!(rec.table.rows[1][2], "1 1 0");
        assert_eq!(rec.table.rows[3][2], "16 0 0");
        assert_eq!(rec.table.rows[4][2], "1 9 0");
        assert!(z2_table(&[9], &scales, DEFAULT_CLIQUE_BUDGET).is_err());
    }

    #[test]
    fn small_cross_check_is_deterministic() {
        let a = cross_check(4, 2, 11, DEFAULT_CLIQUE_BUDGET).unwrap();
        assert!(a.passed, "{}", a.table.to_csv());
        let b = cross_check(4, 2, 11, DEFAULT_CLIQUE_BUDGET).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
    }

    #[test]
    fn rescale_and_isometry_records() {
        let rec = rescale_check(12, 3, DEFAULT_CLIQUE_BUDGET).unwrap();
        assert!(rec.passed);
        assert_eq!(rec.table.rows[0][2], "2");
        assert_eq!(rec.table.rows[1][1], "1");
        let iso = isometry_check(&EmbeddingSpec::spatial(), 200, 5).unwrap();
        assert!(iso.passed);
    }

    #[test]
    fn graph_tables_report_both_spatial_thresholds() {
        let rec = graph_tables(DEFAULT_CLIQUE_BUDGET).unwrap();
        assert!(rec.passed, "{}", rec.table.to_csv());
        assert_eq!(
            rec.results["space_graph_threshold_from_density_one_half"],
            json!("8")
        );
        assert_eq!(
            rec.results["space_graph_threshold_from_certified_lower"],
            json!("16")
        );
        assert_eq!(rec.results["z3_threshold"], json!("24"));
        assert_eq!(rec.results["plane_graph_threshold"], json!("1"));
    }

    #[test]
    fn structural_suite_holds() {
        let rec = structural_suite(20, 50, 9).unwrap();
        assert!(rec.passed, "{}", rec.table.to_csv());
    }

    #[test]
    fn csv_escaping() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x,y".into(), "q\"".into()]);
        assert_eq!(t.to_csv(), "a,b\n\"x,y\",\"q\"\"\"\n");
    }
}
