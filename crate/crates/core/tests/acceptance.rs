//! Acceptance suite: one line per criterion with its measured time and limit.
//! Exits nonzero when any criterion fails.

use std::time::{Duration, Instant};

use l1rips::density::covering_radius_certified;
use l1rips::embeddings::{embed, EmbeddingSpec};
use l1rips::experiments::{
    analyze_scale, cross_check, isometry_check, rescale_check, structural_suite,
};
use l1rips::metric::{contractibility_threshold, lattice_window, scaled_lattice_box, Regime};
use l1rips::retraction::{retraction_suite, SuiteConfig};
use l1rips::rips::DEFAULT_CLIQUE_BUDGET;
use l1rips::{Point, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    ok: bool,
    detail: String,
}

fn q(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out =
        std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|e| Outcome {
            ok: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        });
    let elapsed = start.elapsed();
    let pass = out.ok && elapsed <= limit;
    println!(
        "criterion {id} [{}] {name}: {} (elapsed {} ms, limit {} ms)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_millis(),
        limit.as_millis()
    );
    pass
}

/// Image coordinates written out by hand for n = 2 and n = 3.
fn hand_embed(x: &[Scalar]) -> Vec<Scalar> {
    match x {
        [a, b] => vec![a + b, a - b],
        [a, b, c] => vec![-a.clone() + b + c, a - b + c, a + b - c, a + b + c],
        _ => unreachable!(),
    }
}

fn isometry() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (n, spec) in [
        (2usize, EmbeddingSpec::planar()),
        (3, EmbeddingSpec::spatial()),
    ] {
        let rec = isometry_check(&spec, 10_000, SEED + n as u64).expect("isometry run");
        ok &= rec.passed && rec.results["checked"] == 10_000;
        // Independent recomputation on fresh pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ n as u64);
        let mut independent = 0;
        for _ in 0..2_000 {
            let x: Vec<Scalar> = (0..n)
                .map(|_| q(rng.gen_range(-10_000..=10_000), rng.gen_range(1..=97)))
                .collect();
            let y: Vec<Scalar> = (0..n)
                .map(|_| q(rng.gen_range(-10_000..=10_000), rng.gen_range(1..=97)))
                .collect();
            let l1: Scalar = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            let (ex, ey) = (hand_embed(&x), hand_embed(&y));
            let linf = ex
                .iter()
                .zip(&ey)
                .map(|(a, b)| (a - b).abs())
                .max()
                .unwrap();
            let lib = embed(&spec, &Point::new(x.clone())).unwrap();
            ok &= lib.coords() == ex.as_slice() && l1 == linf;
            independent += 1;
        }
        details.push(format!(
            "n={n}: 10000 pairs, counterexample {}, {independent} hand-checked",
            rec.results["counterexample"]
        ));
    }
    Outcome {
        ok,
        detail: details.join("; "),
    }
}

fn z2_table() -> Outcome {
    let mut ok = true;
    let mut rows = Vec::new();
    for n in [3i64, 4, 5] {
        let x = lattice_window(2, 0, n - 1).unwrap();
        let side = (n * n) as usize;
        let holes = ((n - 1) * (n - 1)) as usize;
        let low = analyze_scale(&x, &q(1, 2), 2, DEFAULT_CLIQUE_BUDGET).unwrap();
        let mid = analyze_scale(&x, &q(3, 2), 2, DEFAULT_CLIQUE_BUDGET).unwrap();
        let high = analyze_scale(&x, &q(5, 2), 2, DEFAULT_CLIQUE_BUDGET).unwrap();
        let good = low.betti.betti[..2] == [side, 0]
            && mid.betti.betti[..2] == [1, holes]
            && high.collapsed_to_point
            && high.betti.to_reduced().betti == vec![0, 0, 0];
        ok &= good;
        rows.push(format!(
            "N={n}: {:?} {:?} collapse {}",
            &low.betti.betti[..2],
            &mid.betti.betti[..2],
            high.collapse_residual
        ));
    }
    Outcome {
        ok,
        detail: rows.join("; "),
    }
}

fn neighborhood_cross_check() -> Outcome {
    let rec = cross_check(50, 20, SEED, DEFAULT_CLIQUE_BUDGET).expect("cross-check run");
    let trials = rec.results["trials"].as_array().unwrap();
    let planar = trials.iter().filter(|t| t["dim"] == 2).count();
    let spatial = trials.iter().filter(|t| t["dim"] == 3).count();
    let max_planar = trials
        .iter()
        .filter(|t| t["dim"] == 2)
        .map(|t| t["points"].as_u64().unwrap())
        .max()
        .unwrap();
    let max_spatial = trials
        .iter()
        .filter(|t| t["dim"] == 3)
        .map(|t| t["points"].as_u64().unwrap())
        .max()
        .unwrap();
    let nontrivial = trials
        .iter()
        .filter(|t| t["vr_betti"]["betti"][1].as_u64().unwrap() > 0)
        .count();
    Outcome {
        ok: rec.passed && spatial == 20 && planar == 51 && max_planar <= 40 && max_spatial <= 12,
        detail: format!(
            "{} mismatches over {planar} planar and {spatial} spatial trials, {nontrivial} with beta1 > 0",
            rec.results["mismatches"]
        ),
    }
}

fn rescaling() -> Outcome {
    let rec = rescale_check(100, SEED, DEFAULT_CLIQUE_BUDGET).expect("rescale run");
    Outcome {
        ok: rec.passed,
        detail: format!("{} of 100 trials unequal", rec.results["unequal"]),
    }
}

fn retraction() -> Outcome {
    let pitch = q(1, 12);
    let x = scaled_lattice_box(3, &pitch, &Scalar::from_int(-2), &Scalar::from_int(3)).unwrap();
    let config = SuiteConfig {
        window_lo: Scalar::zero(),
        window_hi: Scalar::one(),
        density_pitch: pitch.clone(),
        sample_count: 200,
        seed: SEED,
    };
    let report = retraction_suite(&x, &config).expect("suite run");
    let density_ok = report.density.upper <= q(1, 8);
    let ok = density_ok
        && report.sample_count == 200
        && report.covered == 200
        && report.failures.is_empty()
        && report.margin_violations.is_empty()
        && report.case1 > 0
        && report.case1_single_center == report.case1
        && report.case2_bound_ok == report.case2;
    Outcome {
        ok,
        detail: format!(
            "density upper {}, {} covered of {}, CASE1 {} ({} by p' alone), CASE2 {} ({} within 7/8)",
            report.density.upper,
            report.covered,
            report.sample_count,
            report.case1,
            report.case1_single_center,
            report.case2,
            report.case2_bound_ok
        ),
    }
}

fn thresholds() -> Outcome {
    let z3 = contractibility_threshold(&q(3, 2), Regime::Dim3).unwrap();
    let graph = contractibility_threshold(&q(1, 2), Regime::Dim3).unwrap();
    let lattice = lattice_window(3, -1, 2).unwrap();
    let cert = covering_radius_certified(
        &lattice,
        &Point::new(vec![q(1, 2); 3]),
        &Point::new(vec![q(3, 2); 3]),
        &q(1, 4),
    )
    .unwrap();
    let brackets = cert.lower <= q(3, 2) && q(3, 2) <= cert.upper;
    Outcome {
        ok: z3 == Scalar::from_int(24) && graph == Scalar::from_int(8) && brackets,
        detail: format!(
            "16*(3/2) = {z3}, 16*(1/2) = {graph}, Z3 covering radius in [{}, {}]",
            cert.lower, cert.upper
        ),
    }
}

fn structural() -> Outcome {
    let rec = structural_suite(300, 1_000, SEED).expect("structural run");
    Outcome {
        ok: rec.passed,
        detail: format!("{}", rec.results),
    }
}

fn main() {
    let results = [
        run(1, "isometry", Duration::from_secs(5), isometry),
        run(
            2,
            "integer lattice windows",
            Duration::from_secs(60),
            z2_table,
        ),
        run(
            3,
            "VR vs neighborhood homology",
            Duration::from_secs(600),
            neighborhood_cross_check,
        ),
        run(
            4,
            "rescaling isomorphism",
            Duration::from_secs(30),
            rescaling,
        ),
        run(5, "retraction suite", Duration::from_secs(120), retraction),
        run(6, "thresholds", Duration::from_secs(5), thresholds),
        run(
            7,
            "structural invariants",
            Duration::from_secs(120),
            structural,
        ),
    ];
    let passed = results.iter().filter(|&&b| b).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
