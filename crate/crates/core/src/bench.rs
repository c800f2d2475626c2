//! Scaling benchmark harness: instance families, timed evaluation, CSV
//! records and log-log slope fitting.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::error::Result;
use crate::graph::{gen_random, gen_star_instance, LabeledGraph, STAR_QUERY};
use crate::planner::{evaluate, Engine, EvalOptions};
use crate::query::{parse_query, Crpq};

pub const CSV_HEADER: &str = "n,engine,rep,wall_ns,N,OUT,OUT_a,rounds";

/// Query paired with the random family: a 3-star with bound center.
pub const RANDOM_FAMILY_QUERY: &str = "free: Y1 Y2 Y3\natom: X l0 Y1\natom: X l1 Y2\natom: X \"l2 l0*\" Y3\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Star,
    Random,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "star" => Ok(Family::Star),
            "random" => Ok(Family::Random),
            other => Err(format!("unknown family {other:?} (expected star or random)")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Star => "star",
            Family::Random => "random",
        })
    }
}

impl Family {
    /// The instance of size parameter `n` and its query. Random instances
    /// have `n` vertices, `4n` edges and three labels.
    pub fn instance(self, n: usize, seed: u64) -> (LabeledGraph, Crpq) {
        match self {
            Family::Star => (gen_star_instance(n), parse_query(STAR_QUERY).expect("star query parses")),
            Family::Random => {
                (gen_random(n, 4 * n, 3, seed), parse_query(RANDOM_FAMILY_QUERY).expect("random family query parses"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub n: usize,
    pub engine: Engine,
    pub rep: usize,
    pub wall_ns: u128,
    /// |V| + |E|.
    pub size: usize,
    pub out: usize,
    pub out_a: Option<usize>,
    pub rounds: Option<usize>,
}

impl BenchRecord {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.engine,
            self.rep,
            self.wall_ns,
            self.size,
            self.out,
            opt(self.out_a),
            opt(self.rounds)
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, records: &[BenchRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Times `reps` evaluations per (n, engine). The clock covers evaluation
/// only; instance generation and query parsing happen before it starts.
pub fn run_bench(
    family: Family,
    ns: &[usize],
    engines: &[Engine],
    reps: usize,
    seed: u64,
    opts: &EvalOptions,
) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::new();
    for &n in ns {
        let (g, q) = family.instance(n, seed);
        for &engine in engines {
            for rep in 0..reps {
                let start = Instant::now();
                let report = evaluate(&q, &g, engine, opts)?;
                let wall_ns = start.elapsed().as_nanos();
                records.push(BenchRecord {
                    n,
                    engine,
                    rep,
                    wall_ns,
                    size: g.size(),
                    out: report.output.len(),
                    out_a: report.out_a,
                    rounds: (engine == Engine::Optimal).then(|| report.rounds()),
                });
            }
        }
    }
    Ok(records)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 2, "slope needs two points");
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Per engine: the log-log slope of median wall time against n, or `None`
/// when fewer than two sizes or fewer than three repetitions are present.
pub fn slope_summary(records: &[BenchRecord]) -> Vec<(Engine, Option<f64>)> {
    let mut out = Vec::new();
    for engine in Engine::ALL {
        let mine: Vec<&BenchRecord> = records.iter().filter(|r| r.engine == engine).collect();
        if mine.is_empty() {
            continue;
        }
        let mut ns: Vec<usize> = mine.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let mut points = Vec::new();
        let mut enough = ns.len() >= 2;
        for &n in &ns {
            let mut times: Vec<f64> = mine.iter().filter(|r| r.n == n).map(|r| r.wall_ns as f64).collect();
            enough &= times.len() >= 3;
            points.push((n as f64, median(&mut times)));
        }
        out.push((engine, enough.then(|| loglog_slope(&points))));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts) - 2.0).abs() < 1e-9);
        let lin: Vec<(f64, f64)> = [10.0, 100.0].iter().map(|&x| (x, x)).collect();
        assert!((loglog_slope(&lin) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn small_star_bench() {
        let records = run_bench(Family::Star, &[4, 8], &[Engine::Optimal, Engine::Baseline], 3, 0, &EvalOptions::default()).unwrap();
        assert_eq!(records.len(), 2 * 2 * 3);
        assert!(records.iter().all(|r| r.out == 1));
        assert!(records.iter().filter(|r| r.engine == Engine::Baseline).all(|r| r.out_a.is_some() && r.rounds.is_none()));
        let summary = slope_summary(&records);
        assert_eq!(summary.len(), 2);
        assert!(summary.iter().all(|(_, s)| s.is_some()));
        let mut csv = Vec::new();
        write_csv(&mut csv, &records).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n4,optimal,0,")));
        assert_eq!(text.lines().count(), 13);
    }

    #[test]
    fn slope_needs_three_reps() {
        let records = run_bench(Family::Star, &[4, 8], &[Engine::Optimal], 2, 0, &EvalOptions::default()).unwrap();
        assert_eq!(slope_summary(&records), vec![(Engine::Optimal, None)]);
    }

    #[test]
    fn random_family_runs() {
        let records = run_bench(Family::Random, &[30], &[Engine::Optimal, Engine::Oracle], 1, 5, &EvalOptions::default()).unwrap();
        assert_eq!(records[0].out, records[1].out);
        assert_eq!("random".parse::<Family>().unwrap(), Family::Random);
        assert!("grid".parse::<Family>().is_err());
    }
}
