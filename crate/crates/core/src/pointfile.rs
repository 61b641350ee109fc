//! Text format for point sets.
//!
//! ```text
//! # comment
//! dim=2 metric=L1
//! 0 0
//! 1/2 -3
//! ```
//!
//! One point per line, coordinates separated by single spaces, each an integer
//! or `num/den` in lowest terms.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::{Metric, Point, PointSet};
use crate::scalar::Scalar;

pub fn parse_point_set(text: &str) -> Result<PointSet> {
    let mut header: Option<(usize, Metric)> = None;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let at = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        match header {
            None => header = Some(parse_header(line).map_err(|e| at(e.to_string()))?),
            Some((dim, _)) => {
                let coords = line
                    .split(' ')
                    .map(Scalar::parse_strict)
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| at(e.to_string()))?;
                if coords.len() != dim {
                    return Err(at(format!(
                        "expected {dim} coordinates, found {}",
                        coords.len()
                    )));
                }
                points.push(Point::new(coords));
            }
        }
    }
    let (dim, metric) =
        header.ok_or_else(|| Error::Parse("missing `dim=<n> metric=<..>` header".into()))?;
    PointSet::new(dim, metric, points)
}

fn parse_header(line: &str) -> Result<(usize, Metric)> {
    let mut dim = None;
    let mut metric = None;
    for field in line.split(' ') {
        match field.split_once('=') {
            Some(("dim", v)) => {
                dim = Some(
                    v.parse::<usize>()
                        .ok()
                        .filter(|&d| d > 0)
                        .ok_or_else(|| Error::Parse(format!("bad dimension `{v}`")))?,
                )
            }
            Some(("metric", v)) => metric = Some(v.parse::<Metric>()?),
            _ => return Err(Error::Parse(format!("unexpected header field `{field}`"))),
        }
    }
    match (dim, metric) {
        (Some(d), Some(m)) => Ok((d, m)),
        _ => Err(Error::Parse("header needs both dim= and metric=".into())),
    }
}

pub fn format_point_set(x: &PointSet) -> String {
    let mut out = format!("dim={} metric={}\n", x.dim(), x.metric().name());
    for p in x.points() {
        let line: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).expect("write to string");
    }
    out
}

pub fn read_point_set(path: &Path) -> Result<PointSet> {
    parse_point_set(&std::fs::read_to_string(path)?)
}

pub fn write_point_set(path: &Path, x: &PointSet) -> Result<()> {
    std::fs::write(path, format_point_set(x))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::lattice_graph_sample;

    #[test]
    fn parses_header_comments_and_rationals() {
        let x = parse_point_set("# window\ndim=2 metric=LINF\n0 0\n1/2 -3\n\n# tail\n").unwrap();
        assert_eq!(x.metric(), Metric::LInf);
        assert_eq!(x.len(), 2);
        assert_eq!(
            x.points()[1],
            Point::new(vec![Scalar::ratio(1, 2), Scalar::from_int(-3)])
        );
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "0 0\n",
            "dim=2\n0 0\n",
            "dim=2 metric=L2\n0 0\n",
            "dim=2 metric=L1\n0 0.5\n",
            "dim=2 metric=L1\n0 2/4\n",
            "dim=2 metric=L1\n0  1\n",
            "dim=2 metric=L1\n0 1 2\n",
            "dim=2 metric=L1\n0 1\n0 1\n",
            "dim=0 metric=L1\n",
        ] {
            assert!(parse_point_set(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn format_roundtrip() {
        let x = lattice_graph_sample(2, -1, 1, &Scalar::ratio(1, 3)).unwrap();
        assert_eq!(parse_point_set(&format_point_set(&x)).unwrap(), x);
    }
}
