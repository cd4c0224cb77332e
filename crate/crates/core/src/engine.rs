//! The porcellio scaber swarm.
//!
//! Each step draws one random direction `tau` shared by the whole swarm,
//! probes the penalized cost at `x_i + tau` for every individual, ranks the
//! probes into an exploration weight `p_i` in `[0, 1]`, and moves
//!
//! ```text
//! x_i <- P(x_i - (1 - lambda) (x_i - x_b) - lambda p_i tau)
//! ```
//!
//! where `x_b` is the current swarm-best position and `P` projects onto the
//! variable domains. Probes are not projected; only committed moves are.
//!
//! Random draws happen in a fixed order so runs are reproducible from the
//! seed: initialization draws individual by individual, coordinate by
//! coordinate; each step then draws `d` normal variates for `tau`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{evaluate_constraints, penalized_cost_with_status, ConstraintReport, Problem, VariableDomain};
use crate::projection::project_domain_in_place;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub swarm_size: usize,
    /// Weight between aggregation and exploration, in `(0, 1)`.
    pub lambda: f64,
    pub max_steps: usize,
    /// Standard deviation of each element of `tau`.
    pub tau_std: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            swarm_size: 40,
            lambda: 0.6,
            max_steps: 100_000,
            tau_std: 0.1,
            gamma: 1e12,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.swarm_size < 2 {
            return bad(format!("swarm size must be at least 2, got {}", self.swarm_size));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if !(self.tau_std.is_finite() && self.tau_std > 0.0) {
            return bad(format!("tau std must be positive, got {}", self.tau_std));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        Ok(())
    }
}

/// One record of the optional per-step trace. Step 0 is the initial population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub best_f: f64,
    pub feasible_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_x: Vec<f64>,
    /// Penalized cost at `best_x`.
    pub best_f: f64,
    /// Plain objective at `best_x`; equals `best_f` when feasible.
    pub objective: f64,
    pub constraint_report: ConstraintReport,
    pub steps_taken: usize,
    pub history: Option<Vec<(usize, f64)>>,
}

impl RunResult {
    pub fn feasible(&self) -> bool {
        self.constraint_report.feasible
    }
}

/// What a single step computed, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub leader: usize,
    pub direction: Vec<f64>,
    pub detected: Vec<f64>,
    pub exploration: Vec<f64>,
}

/// Draws `n` initial positions: continuous coordinates uniform in
/// `[lower, upper)`, grid coordinates uniform over every admissible multiple.
pub fn init_positions<R: Rng + ?Sized>(domains: &[VariableDomain], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            domains
                .iter()
                .map(|d| match *d {
                    VariableDomain::Continuous { lower, upper } => lower + (upper - lower) * rng.random::<f64>(),
                    VariableDomain::Grid {
                        step,
                        min_multiple,
                        max_multiple,
                    } => rng.random_range(min_multiple..=max_multiple) as f64 * step,
                })
                .collect()
        })
        .collect()
}

/// `(detected[i] - min) / (max - min)`, or 0 when all probes are equal.
pub fn exploration_weight(detected: &[f64], i: usize) -> f64 {
    let (min, max) = min_max(detected);
    weight(detected[i], min, max)
}

pub fn exploration_weights(detected: &[f64]) -> Vec<f64> {
    let (min, max) = min_max(detected);
    detected.iter().map(|d| weight(*d, min, max)).collect()
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(*v), hi.max(*v))
    })
}

fn weight(value: f64, min: f64, max: f64) -> f64 {
    let range = max - min;
    if range > 0.0 {
        ((value - min) / range).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Swarm state bound to a problem and configuration.
#[derive(Debug, Clone)]
pub struct Swarm<'p> {
    problem: &'p Problem,
    config: SolverConfig,
    positions: Vec<Vec<f64>>,
    costs: Vec<f64>,
    satisfied: Vec<bool>,
    step: usize,
    best_x: Vec<f64>,
    best_f: f64,
    rng: ChaCha8Rng,
}

impl<'p> Swarm<'p> {
    /// Seeds the RNG from `config.seed` and draws the initial population.
    pub fn new(problem: &'p Problem, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let positions = init_positions(problem.domains(), config.swarm_size, &mut rng);
        Self::build(problem, config, positions, rng)
    }

    /// Starts from caller-supplied positions, which are projected onto the domains.
    pub fn from_positions(problem: &'p Problem, config: SolverConfig, mut positions: Vec<Vec<f64>>) -> Result<Self> {
        config.validate()?;
        if positions.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "swarm needs at least 2 individuals, got {}",
                positions.len()
            )));
        }
        for x in &mut positions {
            project_domain_in_place(problem.domains(), x)?;
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self::build(problem, config, positions, rng)
    }

    fn build(problem: &'p Problem, config: SolverConfig, positions: Vec<Vec<f64>>, rng: ChaCha8Rng) -> Result<Self> {
        let mut swarm = Swarm {
            problem,
            config,
            costs: Vec::with_capacity(positions.len()),
            satisfied: Vec::with_capacity(positions.len()),
            positions,
            step: 0,
            best_x: Vec::new(),
            best_f: f64::INFINITY,
            rng,
        };
        swarm.evaluate_positions()?;
        swarm.update_best();
        Ok(swarm)
    }

    fn cost(&self, x: &[f64], individual: usize) -> Result<(f64, bool)> {
        penalized_cost_with_status(self.problem, x, self.config.gamma).map_err(|source| Error::StepEvaluation {
            step: self.step,
            individual,
            source,
        })
    }

    fn evaluate_positions(&mut self) -> Result<()> {
        self.costs.clear();
        self.satisfied.clear();
        for i in 0..self.positions.len() {
            let (c, ok) = self.cost(&self.positions[i], i)?;
            self.costs.push(c);
            self.satisfied.push(ok);
        }
        Ok(())
    }

    fn update_best(&mut self) {
        let i = argmin(&self.costs);
        if self.costs[i] < self.best_f {
            self.best_f = self.costs[i];
            self.best_x.clone_from(&self.positions[i]);
        }
    }

    /// Draws `tau` and advances one step.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let normal = Normal::new(0.0, self.config.tau_std)
            .map_err(|e| Error::InvalidConfig(format!("tau distribution: {e}")))?;
        let tau: Vec<f64> = (0..self.problem.dimension())
            .map(|_| normal.sample(&mut self.rng))
            .collect();
        self.step_with_direction(&tau)
    }

    /// Advances one step with a caller-supplied direction; the RNG is untouched.
    pub fn step_with_direction(&mut self, tau: &[f64]) -> Result<StepOutcome> {
        let d = self.problem.dimension();
        if tau.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: tau.len(),
            });
        }
        // the step being computed is k+1
        self.step += 1;
        let leader = argmin(&self.costs);
        let x_b = self.positions[leader].clone();

        let mut probe = vec![0.0; d];
        let mut detected = Vec::with_capacity(self.positions.len());
        for (i, x) in self.positions.iter().enumerate() {
            for ((p, xi), t) in probe.iter_mut().zip(x).zip(tau) {
                *p = xi + t;
            }
            detected.push(self.cost(&probe, i)?.0);
        }
        let exploration = exploration_weights(&detected);

        let aggregation = 1.0 - self.config.lambda;
        let lambda = self.config.lambda;
        for (x, p) in self.positions.iter_mut().zip(&exploration) {
            for ((xj, bj), tj) in x.iter_mut().zip(&x_b).zip(tau) {
                *xj = *xj - aggregation * (*xj - bj) - lambda * p * tj;
            }
            project_domain_in_place(self.problem.domains(), x)?;
        }
        self.evaluate_positions()?;
        self.update_best();

        Ok(StepOutcome {
            leader,
            direction: tau.to_vec(),
            detected,
            exploration,
        })
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    /// Penalized cost of each current position.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn best_x(&self) -> &[f64] {
        &self.best_x
    }

    pub fn best_f(&self) -> f64 {
        self.best_f
    }

    pub fn feasible_count(&self) -> usize {
        self.satisfied.iter().filter(|s| **s).count()
    }

    pub fn trace_record(&self) -> TraceRecord {
        TraceRecord {
            step: self.step,
            best_f: self.best_f,
            feasible_count: self.feasible_count(),
        }
    }

    pub fn into_result(self, history: Option<Vec<(usize, f64)>>) -> Result<RunResult> {
        let objective = self.problem.objective(&self.best_x)?;
        let constraint_report = evaluate_constraints(self.problem, &self.best_x)?;
        Ok(RunResult {
            best_x: self.best_x,
            best_f: self.best_f,
            objective,
            constraint_report,
            steps_taken: self.step,
            history,
        })
    }
}

/// Runs the full solve; deterministic for a given problem and config.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<RunResult> {
    let mut swarm = Swarm::new(problem, *config)?;
    for _ in 0..config.max_steps {
        swarm.step()?;
    }
    swarm.into_result(None)
}

/// Like [`solve`], streaming a [`TraceRecord`] per step (including step 0)
/// to `sink` and keeping the `(step, best_f)` history in the result.
pub fn solve_traced<F>(problem: &Problem, config: &SolverConfig, mut sink: F) -> Result<RunResult>
where
    F: FnMut(&TraceRecord),
{
    let mut swarm = Swarm::new(problem, *config)?;
    let mut history = Vec::with_capacity(config.max_steps + 1);
    let record = swarm.trace_record();
    sink(&record);
    history.push((record.step, record.best_f));
    for _ in 0..config.max_steps {
        swarm.step()?;
        let record = swarm.trace_record();
        sink(&record);
        history.push((record.step, record.best_f));
    }
    swarm.into_result(Some(history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::EvalError;
    use crate::problem::evaluable;

    fn parabola() -> Problem {
        Problem::new(
            "parabola",
            vec![VariableDomain::continuous(0.0, 10.0)],
            evaluable(|x| x[0] * x[0]),
        )
        .unwrap()
    }

    #[test]
    fn exploration_weight_examples() {
        let detected = [3.0, 7.0, 5.0];
        assert_eq!(exploration_weight(&detected, 0), 0.0);
        assert_eq!(exploration_weight(&detected, 1), 1.0);
        assert_eq!(exploration_weight(&detected, 2), 0.5);
    }

    #[test]
    fn equal_probes_give_zero_weight() {
        assert_eq!(exploration_weights(&[2.0, 2.0, 2.0]), vec![0.0; 3]);
    }

    #[test]
    fn hand_computed_step() {
        let problem = parabola();
        let config = SolverConfig {
            swarm_size: 2,
            ..SolverConfig::default()
        };
        let mut swarm = Swarm::from_positions(&problem, config, vec![vec![2.0], vec![8.0]]).unwrap();
        let outcome = swarm.step_with_direction(&[0.5]).unwrap();
        assert_eq!(outcome.detected, vec![6.25, 72.25]);
        assert_eq!(outcome.exploration, vec![0.0, 1.0]);
        assert_eq!(swarm.positions(), &[vec![2.0], vec![5.3]]);
        assert_eq!(swarm.steps_taken(), 1);
    }

    #[test]
    fn leader_with_zero_weight_stays_put() {
        let problem = parabola();
        let config = SolverConfig {
            swarm_size: 3,
            ..SolverConfig::default()
        };
        let mut swarm = Swarm::from_positions(&problem, config, vec![vec![1.0], vec![4.0], vec![6.0]]).unwrap();
        // tau > 0 raises every probe, and x=1 remains the smallest
        let outcome = swarm.step_with_direction(&[0.25]).unwrap();
        assert_eq!(outcome.leader, 0);
        assert_eq!(outcome.exploration[0], 0.0);
        assert_eq!(swarm.positions()[0], vec![1.0]);
    }

    #[test]
    fn zero_steps_reports_initial_population() {
        let problem = parabola();
        let config = SolverConfig::default().with_max_steps(0).with_seed(3);
        let swarm = Swarm::new(&problem, config).unwrap();
        let expected = swarm.costs().iter().cloned().fold(f64::INFINITY, f64::min);
        let result = solve(&problem, &config).unwrap();
        assert_eq!(result.steps_taken, 0);
        assert_eq!(result.best_f, expected);
        assert!(result.feasible());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SolverConfig::default();
        for bad in [
            SolverConfig { swarm_size: 1, ..base },
            SolverConfig { lambda: 0.0, ..base },
            SolverConfig { lambda: 1.0, ..base },
            SolverConfig { tau_std: 0.0, ..base },
            SolverConfig { gamma: -1.0, ..base },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn direction_dimension_checked() {
        let problem = parabola();
        let mut swarm = Swarm::new(&problem, SolverConfig::default()).unwrap();
        assert!(swarm.step_with_direction(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn evaluation_failure_names_individual_and_step() {
        let problem = Problem::new(
            "fails",
            vec![VariableDomain::continuous(0.0, 1.0)],
            std::sync::Arc::new(|x: &[f64]| {
                if x[0] > 1.0 {
                    Err(EvalError::DivisionByZero)
                } else {
                    Ok(x[0])
                }
            }),
        )
        .unwrap();
        let config = SolverConfig {
            swarm_size: 2,
            ..SolverConfig::default()
        };
        let mut swarm = Swarm::from_positions(&problem, config, vec![vec![0.2], vec![0.9]]).unwrap();
        let err = swarm.step_with_direction(&[0.5]).unwrap_err();
        match err {
            Error::StepEvaluation { step, individual, .. } => {
                assert_eq!(step, 1);
                assert_eq!(individual, 1);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn init_grid_values_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let domains = [VariableDomain::grid(0.0625, 1, 99)];
        let mut seen_max = false;
        for x in init_positions(&domains, 10_000, &mut rng) {
            let m = x[0] / 0.0625;
            assert_eq!(m, m.round());
            assert!((1.0..=99.0).contains(&m));
            seen_max |= m == 99.0;
        }
        assert!(seen_max);
    }

    #[test]
    fn init_continuous_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs = init_positions(&[VariableDomain::continuous(0.0, 1.0)], 10_000, &mut rng);
        let mean = xs.iter().map(|x| x[0]).sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        assert!(xs.iter().all(|x| (0.0..1.0).contains(&x[0])));
    }
}
