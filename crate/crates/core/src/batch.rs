//! Seeded batch campaigns and their summary statistics.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{solve, RunResult, SolverConfig};
use crate::error::{Error, Result};
use crate::problem::Problem;

/// Outcome of one replica. Failed replicas carry `error` and count as infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub objective: f64,
    pub feasible: bool,
    pub wall_time_secs: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub problem: String,
    pub config: SolverConfig,
    pub runs: usize,
    pub feasible_runs: usize,
    pub failed_runs: usize,
    pub feasibility_rate: f64,
    /// Statistics of the final objective over feasible runs only.
    pub best: Option<f64>,
    pub worst: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub best_run: Option<RunResult>,
    pub total_wall_time_secs: f64,
    /// Per-replica records ordered by seed.
    pub records: Vec<RunRecord>,
}

impl BatchSummary {
    /// Copy with all timings zeroed, for comparing campaigns.
    pub fn without_timings(&self) -> Self {
        let mut s = self.clone();
        s.total_wall_time_secs = 0.0;
        for r in &mut s.records {
            r.wall_time_secs = 0.0;
        }
        s
    }
}

fn run_one(problem: &Problem, config: &SolverConfig, seed: u64) -> (RunRecord, Option<RunResult>) {
    let config = config.with_seed(seed);
    let started = Instant::now();
    let outcome = solve(problem, &config);
    let wall_time_secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(result) => (
            RunRecord {
                seed,
                best_x: result.best_x.clone(),
                best_f: result.best_f,
                objective: result.objective,
                feasible: result.feasible(),
                wall_time_secs,
                error: None,
            },
            Some(result),
        ),
        Err(e) => (
            RunRecord {
                seed,
                best_x: Vec::new(),
                best_f: f64::NAN,
                objective: f64::NAN,
                feasible: false,
                wall_time_secs,
                error: Some(e.to_string()),
            },
            None,
        ),
    }
}

/// Solves with seeds `base_seed .. base_seed + runs` in parallel.
pub fn run_batch(problem: &Problem, runs: usize, base_seed: u64, config: &SolverConfig) -> Result<BatchSummary> {
    if runs == 0 {
        return Err(Error::InvalidConfig("a batch needs at least one run".into()));
    }
    config.validate()?;
    let outcomes: Vec<(RunRecord, Option<RunResult>)> = (0..runs as u64)
        .into_par_iter()
        .map(|offset| run_one(problem, config, base_seed.wrapping_add(offset)))
        .collect();
    Ok(summarize(problem.name(), config, outcomes))
}

/// Folds replica outcomes into a summary. The result does not depend on the
/// order of `outcomes`.
pub fn summarize(
    problem: &str,
    config: &SolverConfig,
    mut outcomes: Vec<(RunRecord, Option<RunResult>)>,
) -> BatchSummary {
    outcomes.sort_by_key(|(r, _)| r.seed);
    let runs = outcomes.len();
    let feasible: Vec<f64> = outcomes
        .iter()
        .filter(|(r, _)| r.feasible)
        .map(|(r, _)| r.objective)
        .collect();
    let failed_runs = outcomes.iter().filter(|(r, _)| r.error.is_some()).count();

    let (best, worst, mean, std) = if feasible.is_empty() {
        (None, None, None, None)
    } else {
        let n = feasible.len() as f64;
        let best = feasible.iter().cloned().fold(f64::INFINITY, f64::min);
        let worst = feasible.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = feasible.iter().sum::<f64>() / n;
        let var = feasible.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
        (Some(best), Some(worst), Some(mean), Some(var.sqrt()))
    };

    // best feasible objective, else lowest penalized cost; earliest seed wins ties
    let mut best_run: Option<&RunResult> = None;
    for (_, result) in &outcomes {
        let Some(candidate) = result else { continue };
        let better = match best_run {
            None => true,
            Some(current) => match (candidate.feasible(), current.feasible()) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => candidate.objective < current.objective,
                (false, false) => candidate.best_f < current.best_f,
            },
        };
        if better {
            best_run = Some(candidate);
        }
    }

    BatchSummary {
        problem: problem.to_string(),
        config: *config,
        runs,
        feasible_runs: feasible.len(),
        failed_runs,
        feasibility_rate: feasible.len() as f64 / runs.max(1) as f64,
        best,
        worst,
        mean,
        std,
        best_run: best_run.cloned(),
        total_wall_time_secs: outcomes.iter().map(|(r, _)| r.wall_time_secs).sum(),
        records: outcomes.into_iter().map(|(r, _)| r).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{evaluable, VariableDomain};

    fn sphere() -> Problem {
        Problem::new(
            "sphere",
            vec![VariableDomain::continuous(-5.0, 5.0); 2],
            evaluable(|x| x.iter().map(|v| v * v).sum()),
        )
        .unwrap()
    }

    fn config() -> SolverConfig {
        SolverConfig::default().with_max_steps(50)
    }

    #[test]
    fn single_run_statistics() {
        let s = run_batch(&sphere(), 1, 9, &config()).unwrap();
        assert_eq!(s.runs, 1);
        assert_eq!(s.best, s.worst);
        assert_eq!(s.best, s.mean);
        assert_eq!(s.std, Some(0.0));
        assert_eq!(s.records[0].seed, 9);
    }

    #[test]
    fn zero_runs_rejected() {
        assert!(run_batch(&sphere(), 0, 0, &config()).is_err());
    }

    #[test]
    fn repeated_campaigns_identical() {
        let a = run_batch(&sphere(), 6, 100, &config()).unwrap();
        let b = run_batch(&sphere(), 6, 100, &config()).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
        let seeds: Vec<u64> = a.records.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, (100..106).collect::<Vec<_>>());
    }

    #[test]
    fn summary_ignores_completion_order() {
        let problem = sphere();
        let mut outcomes: Vec<_> = (0..8).map(|s| run_one(&problem, &config(), s)).collect();
        for (r, _) in &mut outcomes {
            r.wall_time_secs = 0.0;
        }
        let forward = summarize("sphere", &config(), outcomes.clone());
        outcomes.reverse();
        outcomes.swap(1, 5);
        let shuffled = summarize("sphere", &config(), outcomes);
        assert_eq!(forward, shuffled);
    }

    #[test]
    fn failed_runs_are_flagged_not_fatal() {
        let problem = Problem::new(
            "broken",
            vec![VariableDomain::continuous(0.0, 1.0)],
            std::sync::Arc::new(|_: &[f64]| Err(crate::EvalError::DivisionByZero)),
        )
        .unwrap();
        let s = run_batch(&problem, 3, 0, &config()).unwrap();
        assert_eq!(s.failed_runs, 3);
        assert_eq!(s.feasibility_rate, 0.0);
        assert!(s.best.is_none() && s.best_run.is_none());
        assert!(s.records.iter().all(|r| r.error.is_some()));
    }
}
