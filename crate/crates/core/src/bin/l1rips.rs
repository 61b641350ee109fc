use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use l1rips::boxunion::neighborhood_betti_with_budget;
use l1rips::density::covering_radius_certified;
use l1rips::embeddings::EmbeddingSpec;
use l1rips::experiments::{self, tags, RunRecord, Table};
use l1rips::homology::betti;
use l1rips::pointfile::read_point_set;
use l1rips::rips::{
    critical_radii, strong_collapse, vietoris_rips_with_budget, DEFAULT_CLIQUE_BUDGET,
};
use l1rips::{Error, Point, Scalar};

/// Exact checks for Vietoris–Rips complexes of subsets of (ℝⁿ, ℓ₁).
#[derive(Parser)]
#[command(name = "l1rips", version)]
struct Cli {
    /// Write the JSON run record to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a CSV table instead of JSON on stdout.
    #[arg(long, global = true)]
    csv: bool,
    /// Seed for randomized commands (required by them).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Budget for cliques and cubical cells.
    #[arg(long, global = true, default_value_t = DEFAULT_CLIQUE_BUDGET)]
    budget: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ComplexArgs {
    /// Point file (`dim=<n> metric=<L1|LINF>` header, one point per line).
    #[arg(long)]
    input: PathBuf,
    /// Scale, as an integer or `num/den`.
    #[arg(long)]
    r: Scalar,
}

#[derive(Subcommand)]
enum Command {
    /// Build the open VR complex and strong-collapse it.
    Vr {
        #[command(flatten)]
        complex: ComplexArgs,
        #[arg(long, default_value_t = 3)]
        dim_cap: usize,
    },
    /// Betti numbers of the open VR complex over the two-element field.
    Betti {
        #[command(flatten)]
        complex: ComplexArgs,
        #[arg(long, default_value_t = 2)]
        dmax: usize,
        #[arg(long)]
        reduced: bool,
    },
    /// Betti numbers of the ℓ∞ neighborhood of the embedded set.
    NbhdBetti {
        #[command(flatten)]
        complex: ComplexArgs,
        /// `f2`, `e3` or `general:<n>`.
        #[arg(long)]
        embed: String,
        #[arg(long, default_value_t = 1)]
        dmax: usize,
    },
    /// Exact isometry check of the ℓ₁ → ℓ∞ embedding on random pairs.
    VerifyIsometry {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        /// Defaults to f2 for n = 2, e3 for n = 3, general:<n> otherwise.
        #[arg(long)]
        embed: Option<String>,
    },
    /// Segment-coverage certificates for the hyperplane retraction.
    VerifyRetraction {
        #[arg(long, default_value = "1/12")]
        pitch: Scalar,
        /// Anchor window `lo:hi`.
        #[arg(long, default_value = "0:1")]
        window: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Homology and collapse of integer-lattice windows.
    Z2Table {
        #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5])]
        sizes: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_value = "1/2,3/2,5/2")]
        scales: Vec<Scalar>,
    },
    /// Sampled lattice graphs, density certificates and thresholds.
    GraphTables,
    /// VR homology against neighborhood homology on random sets.
    CrossCheck {
        #[arg(long, default_value_t = 50)]
        trials_2d: usize,
        #[arg(long, default_value_t = 20)]
        trials_3d: usize,
    },
    /// `VR(X, r)` against `VR((2/r)·X, 2)` on random sets.
    RescaleCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Certified ℓ₁ covering radius of a point set over a cube.
    Density {
        #[arg(long)]
        input: PathBuf,
        /// Cube `lo:hi` on every axis.
        #[arg(long = "box")]
        cube: String,
        #[arg(long)]
        pitch: Scalar,
        /// Report whether the covering radius is certified to be at most this.
        #[arg(long)]
        eps: Option<Scalar>,
    },
}

fn parse_range(s: &str) -> Result<(Scalar, Scalar), Error> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("expected `lo:hi`, got `{s}`")))?;
    let (lo, hi) = (Scalar::parse_strict(lo)?, Scalar::parse_strict(hi)?);
    if lo > hi {
        return Err(Error::InvalidInput(format!("empty range `{s}`")));
    }
    Ok((lo, hi))
}

fn need_seed(seed: Option<u64>) -> Result<u64, Error> {
    seed.ok_or_else(|| Error::InvalidInput("this command is randomized and needs --seed".into()))
}

fn single_row(header: &[&str], row: Vec<String>) -> Table {
    let mut t = Table::new(header);
    t.push(row);
    t
}

fn betti_text(b: &[usize]) -> String {
    b.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn run(cli: &Cli) -> Result<RunRecord, Error> {
    let budget = cli.budget;
    match &cli.command {
        Command::Vr { complex, dim_cap } => {
            let x = read_point_set(&complex.input)?;
            let k = vietoris_rips_with_budget(&x, &complex.r, *dim_cap, budget)?;
            let (_, cert) = strong_collapse(&k);
            let mut rec = RunRecord::new(
                "vr",
                &[tags::OPEN_VR],
                json!({ "input": complex.input, "r": complex.r, "dim_cap": dim_cap, "budget": budget }),
            );
            rec.table = single_row(
                &["points", "face_counts", "euler", "collapse_residual"],
                vec![
                    x.len().to_string(),
                    betti_text(&k.face_counts()),
                    k.euler_characteristic().to_string(),
                    cert.residual_size.to_string(),
                ],
            );
            rec.results = json!({
                "points": x.len(),
                "face_counts": k.face_counts(),
                "euler_characteristic": k.euler_characteristic(),
                "collapse": {
                    "residual_size": cert.residual_size,
                    "collapsed_to_point": cert.collapsed_to_point(),
                    "steps": cert.steps,
                    "survivors": cert.survivors,
                },
            });
            Ok(rec)
        }
        Command::Betti {
            complex,
            dmax,
            reduced,
        } => {
            let x = read_point_set(&complex.input)?;
            let k = vietoris_rips_with_budget(&x, &complex.r, dmax + 1, budget)?;
            let b = betti(&k, *dmax, *reduced)?;
            let (_, cert) = strong_collapse(&k);
            let mut rec = RunRecord::new(
                "betti",
                &[tags::OPEN_VR],
                json!({ "input": complex.input, "r": complex.r, "dmax": dmax, "reduced": reduced, "budget": budget }),
            );
            rec.table = single_row(
                &["points", "betti", "collapse_residual"],
                vec![
                    x.len().to_string(),
                    betti_text(&b.betti),
                    cert.residual_size.to_string(),
                ],
            );
            rec.results = json!({
                "points": x.len(),
                "face_counts": k.face_counts(),
                "betti": b,
                "collapse_residual": cert.residual_size,
                "collapsed_to_point": cert.collapsed_to_point(),
            });
            Ok(rec)
        }
        Command::NbhdBetti {
            complex,
            embed,
            dmax,
        } => {
            let x = read_point_set(&complex.input)?;
            let spec = experiments::parse_embedding(embed)?;
            let primary = neighborhood_betti_with_budget(&x, &spec, &complex.r, *dmax, budget)?;
            let radii = if x.len() >= 2 {
                critical_radii(&x)?
            } else {
                Vec::new()
            };
            let degenerate = radii.binary_search(&complex.r).is_ok();
            let at_closed = if degenerate {
                let above = radii
                    .iter()
                    .find(|c| *c > &complex.r)
                    .map_or(&complex.r + &Scalar::one(), |next| {
                        (&complex.r + next) * Scalar::ratio(1, 2)
                    });
                Some(neighborhood_betti_with_budget(
                    &x, &spec, &above, *dmax, budget,
                )?)
            } else {
                None
            };
            let mut rec = RunRecord::new(
                "nbhd-betti",
                &[tags::NEIGHBORHOOD, tags::EMBEDDING],
                json!({ "input": complex.input, "embed": embed, "r": complex.r, "dmax": dmax, "budget": budget }),
            );
            rec.table = single_row(
                &["r", "r_bar", "boxes", "cells", "betti", "degenerate"],
                vec![
                    complex.r.to_string(),
                    primary
                        .r_bar
                        .as_ref()
                        .map_or("none".into(), Scalar::to_string),
                    primary.box_count.to_string(),
                    primary.cell_count.to_string(),
                    betti_text(&primary.betti.betti),
                    degenerate.to_string(),
                ],
            );
            if degenerate {
                rec.notes.push(format!(
                    "r = {} is a pairwise distance; `at_closed_scale` gives the result with the closed scale r.",
                    complex.r
                ));
            }
            rec.results = json!({ "neighborhood": primary, "degenerate": degenerate, "at_closed_scale": at_closed });
            Ok(rec)
        }
        Command::VerifyIsometry { n, pairs, embed } => {
            let spec = match (embed, n) {
                (Some(e), _) => experiments::parse_embedding(e)?,
                (None, 2) => EmbeddingSpec::planar(),
                (None, 3) => EmbeddingSpec::spatial(),
                (None, n) => EmbeddingSpec::general(*n)?,
            };
            if spec.source_dim() != *n {
                return Err(Error::DimensionMismatch {
                    expected: *n,
                    got: spec.source_dim(),
                });
            }
            experiments::isometry_check(&spec, *pairs, need_seed(cli.seed)?)
        }
        Command::VerifyRetraction {
            pitch,
            window,
            samples,
        } => {
            let (lo, hi) = parse_range(window)?;
            experiments::retraction_check(pitch, &lo, &hi, *samples, need_seed(cli.seed)?)
        }
        Command::Z2Table { sizes, scales } => experiments::z2_table(sizes, scales, budget),
        Command::GraphTables => experiments::graph_tables(budget),
        Command::CrossCheck {
            trials_2d,
            trials_3d,
        } => experiments::cross_check(*trials_2d, *trials_3d, need_seed(cli.seed)?, budget),
        Command::RescaleCheck { trials } => {
            experiments::rescale_check(*trials, need_seed(cli.seed)?, budget)
        }
        Command::Density {
            input,
            cube,
            pitch,
            eps,
        } => {
            let x = read_point_set(input)?;
            let (lo, hi) = parse_range(cube)?;
            let corner = |c: &Scalar| Point::new(vec![c.clone(); x.dim()]);
            let cert = covering_radius_certified(&x, &corner(&lo), &corner(&hi), pitch)?;
            let mut rec = RunRecord::new(
                "density",
                &[tags::Z3_THRESHOLD, tags::Z3_GRAPH],
                json!({ "input": input, "box": [lo, hi], "pitch": pitch, "eps": eps }),
            );
            if let Some(e) = eps {
                rec.passed = cert.certifies_at_most(e);
            }
            rec.table = single_row(
                &["lower", "upper", "samples", "witness"],
                vec![
                    cert.lower.to_string(),
                    cert.upper.to_string(),
                    cert.samples.to_string(),
                    format!("{:?}", cert.witness),
                ],
            );
            rec.results = json!(cert);
            Ok(rec)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        _ => 2,
    }
}

fn write_json(path: &Path, rec: &RunRecord) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(rec).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rec = match run(&cli) {
        Ok(rec) => rec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Some(path) = &cli.out {
        if let Err(e) = write_json(path, &rec) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if cli.csv {
        print!("{}", rec.table.to_csv());
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&rec).expect("record serializes")
        );
    }
    for note in &rec.notes {
        eprintln!("note: {note}");
    }
    if rec.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}: property check failed", rec.command);
        ExitCode::from(1)
    }
}
