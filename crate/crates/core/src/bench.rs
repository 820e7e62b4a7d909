//! Benchmark harness and the paired sign test.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{solve_exact, SearchBudget};
use crate::ga::{run_ga, GaConfig, GaError};
use crate::greedy::solve_greedy;
use crate::model::Instance;
use crate::rational::Rational;
use crate::solve::SolveError;
use crate::verify::goodness;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("runs per genetic algorithm must be at least 1")]
    NoRuns,
    #[error("instance {id}: {source}")]
    Solve { id: String, source: SolveError },
    #[error("instance {id}: {source}")]
    Ga { id: String, source: GaError },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Exact,
    Greedy,
    Ga,
    GaReinforced,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Greedy => "greedy",
            Algorithm::Ga => "ga",
            Algorithm::GaReinforced => "ga-reinforced",
        }
    }

    fn is_genetic(&self) -> bool {
        matches!(self, Algorithm::Ga | Algorithm::GaReinforced)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Algorithm::Exact),
            "greedy" => Ok(Algorithm::Greedy),
            "ga" => Ok(Algorithm::Ga),
            "ga-reinforced" => Ok(Algorithm::GaReinforced),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs_per_ga: usize,
    pub base_seed: u64,
    /// Template for the genetic runs; `seed` and `reinforced` are overridden.
    pub ga: GaConfig,
    pub exact_budget: SearchBudget,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            runs_per_ga: 3,
            base_seed: 0,
            ga: GaConfig::default(),
            exact_budget: SearchBudget::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub algorithm: Algorithm,
    pub goodness: Rational,
    pub runs: usize,
    pub seconds: f64,
    /// False when an exact search hit its budget.
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AverageRow {
    pub algorithm: Algorithm,
    /// Exact mean as `p/q`.
    pub mean: String,
    pub mean_decimal: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub averages: Vec<AverageRow>,
}

fn run_one(
    id: &str,
    inst: &Instance,
    algorithm: Algorithm,
    config: &BenchConfig,
) -> Result<BenchRow, BenchError> {
    let started = Instant::now();
    let solve_err = |source| BenchError::Solve { id: id.to_string(), source };
    let (value, runs, complete) = match algorithm {
        Algorithm::Greedy => {
            let tree = solve_greedy(inst).map_err(solve_err)?;
            (goodness(&tree, inst).expect("greedy trees are well formed"), 1, true)
        }
        Algorithm::Exact => {
            let sol = solve_exact(inst, config.exact_budget).map_err(solve_err)?;
            (sol.goodness, 1, sol.optimal)
        }
        Algorithm::Ga | Algorithm::GaReinforced => {
            let mut best = Rational::ZERO;
            for run in 0..config.runs_per_ga {
                let ga = GaConfig {
                    seed: config.base_seed.wrapping_add(run as u64),
                    reinforced: algorithm == Algorithm::GaReinforced,
                    ..config.ga.clone()
                };
                let record = run_ga(inst, &ga)
                    .map_err(|source| BenchError::Ga { id: id.to_string(), source })?;
                best = best.max(record.best_goodness);
            }
            (best, config.runs_per_ga, true)
        }
    };
    Ok(BenchRow {
        instance_id: id.to_string(),
        algorithm,
        goodness: value,
        runs,
        seconds: started.elapsed().as_secs_f64(),
        complete,
    })
}

/// Runs every algorithm on every instance. Greedy and exact run once; each
/// genetic variant runs `runs_per_ga` times with seeds `base_seed + i` and
/// keeps its best result. Instances are processed in parallel; rows come back
/// in instance order, then algorithm order.
pub fn run_benchmark(
    instances: &[(String, Instance)],
    algorithms: &[Algorithm],
    config: &BenchConfig,
) -> Result<BenchResult, BenchError> {
    if config.runs_per_ga == 0 && algorithms.iter().any(Algorithm::is_genetic) {
        return Err(BenchError::NoRuns);
    }
    let per_instance: Vec<Result<Vec<BenchRow>, BenchError>> = instances
        .par_iter()
        .map(|(id, inst)| algorithms.iter().map(|&a| run_one(id, inst, a, config)).collect())
        .collect();
    let mut rows = Vec::new();
    for r in per_instance {
        rows.extend(r?);
    }
    let averages = algorithms
        .iter()
        .map(|&algorithm| {
            let values: Vec<Rational> =
                rows.iter().filter(|r| r.algorithm == algorithm).map(|r| r.goodness).collect();
            let sum = values.iter().fold(BigRational::zero(), |acc, v| {
                acc + BigRational::new(BigInt::from(v.numer()), BigInt::from(v.denom()))
            });
            let mean = if values.is_empty() {
                BigRational::zero()
            } else {
                sum / BigRational::from_integer(BigInt::from(values.len()))
            };
            AverageRow {
                algorithm,
                mean: format!("{}/{}", mean.numer(), mean.denom()),
                mean_decimal: mean.to_f64().unwrap_or(f64::NAN),
                instances: values.len(),
            }
        })
        .collect();
    Ok(BenchResult { rows, averages })
}

pub const CSV_HEADER: [&str; 6] =
    ["instance_id", "algorithm", "goodness_exact", "goodness_decimal", "runs", "seconds"];

/// CSV rendering; the average rows use instance id `average`. Wall times are
/// written only when `timings` is set, so that the default output is
/// reproducible byte for byte.
pub fn to_csv(result: &BenchResult, timings: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &result.rows {
        w.write_record([
            r.instance_id.clone(),
            r.algorithm.to_string(),
            r.goodness.to_string(),
            r.goodness.decimal4(),
            r.runs.to_string(),
            if timings { format!("{:.3}", r.seconds) } else { String::new() },
        ])
        .expect("in-memory write");
    }
    for a in &result.averages {
        w.write_record([
            "average".to_string(),
            a.algorithm.to_string(),
            a.mean.clone(),
            format!("{:.4}", a.mean_decimal),
            a.instances.to_string(),
            String::new(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("paired score lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("every pair is tied; the sign test is undefined")]
    AllTied,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignTestResult {
    /// Pairs where B beats A.
    pub statistic: usize,
    /// Untied pairs.
    pub n_effective: usize,
    pub ties: usize,
    /// One-sided `P[X >= statistic]`, `X ~ Binomial(n_effective, 1/2)`.
    pub p_value: f64,
    /// The same tail probability as an exact fraction.
    pub p_exact: String,
    pub alpha: f64,
    pub reject_h0: bool,
}

/// Exact one-sided binomial tail `P[X >= k]` for `X ~ Binomial(n, 1/2)`.
pub fn binomial_upper_tail(n: usize, k: usize) -> BigRational {
    let mut coeff = BigUint::one();
    let mut tail = BigUint::zero();
    for j in 0..=n {
        if j >= k {
            tail += &coeff;
        }
        coeff = coeff * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    BigRational::new(BigInt::from(tail), BigInt::from(BigUint::one() << n))
}

/// Paired sign test of whether B tends to score higher than A. Ties are
/// dropped; H0 is rejected when the one-sided exact p-value is below `alpha`.
pub fn sign_test(a: &[Rational], b: &[Rational], alpha: f64) -> Result<SignTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let wins = a.iter().zip(b).filter(|(x, y)| y > x).count();
    let ties = a.iter().zip(b).filter(|(x, y)| y == x).count();
    let n = a.len() - ties;
    if n == 0 {
        return Err(StatsError::AllTied);
    }
    let p = binomial_upper_tail(n, wins);
    let p_value = p.to_f64().unwrap_or(f64::NAN);
    Ok(SignTestResult {
        statistic: wins,
        n_effective: n,
        ties,
        p_value,
        p_exact: format!("{}/{}", p.numer(), p.denom()),
        alpha,
        reject_h0: p_value < alpha,
    })
}
