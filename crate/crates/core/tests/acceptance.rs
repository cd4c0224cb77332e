//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every tolerance is pinned below.
//!
//! Run with `cargo test -p psa-core --release --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use psa_core::batch::run_batch;
use psa_core::benchmarks::{
    audit_table, himmelblau, pressure_vessel, reference_table, AuditVerdict, SignStatus, HIMMELBLAU,
    KNOWN_DISCREPANCIES, PRESSURE_VESSEL,
};
use psa_core::engine::{exploration_weights, init_positions, solve, solve_traced, SolverConfig, Swarm};
use psa_core::projection::project_domain;
use psa_core::{dsl, evaluable, penalized_cost, PenaltyParams, Problem, VariableDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const F_TOLERANCE: f64 = 1.0;
const SIGN_BAND: f64 = 1e-3;
const PSA_G3: f64 = 20.0055;
const PSA_G3_TOLERANCE: f64 = 0.005;

const CAMPAIGN_RUNS: usize = 30;
const CAMPAIGN_BASE_SEED: u64 = 0;
const CAMPAIGN_STEPS: usize = 5000;
const MIN_FEASIBLE_RUNS: usize = 27;
const PV_BEST_LIMIT: f64 = 6362.7;
const HB_BEST_LIMIT: f64 = -30000.0;

const PROJECTION_POINTS: usize = 10_000;
const INVARIANT_SEEDS: u64 = 5;
const INVARIANT_STEPS: usize = 300;

const ORACLE_POINTS: usize = 1000;
const ORACLE_RELATIVE: f64 = 1e-9;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn audit(problem: &Problem, name: &str) -> Vec<AuditVerdict> {
    audit_table(problem, &reference_table(name).unwrap(), SIGN_BAND).unwrap()
}

fn f_failures(verdicts: &[AuditVerdict]) -> Vec<String> {
    verdicts
        .iter()
        .filter(|v| !v.f_within(F_TOLERANCE))
        .map(|v| {
            format!(
                "{}: reported {} vs recomputed {:.4} (off by {:.3})",
                v.source, v.reported_f, v.recomputed_f, v.f_error
            )
        })
        .collect()
}

fn row<'a>(verdicts: &'a [AuditVerdict], source: &str) -> &'a AuditVerdict {
    verdicts.iter().find(|v| v.source == source).unwrap()
}

fn known(problem: &str, source: &str) -> bool {
    KNOWN_DISCREPANCIES
        .iter()
        .any(|(p, s, _)| *p == problem && *s == source)
}

fn criterion_1() -> Outcome {
    let verdicts = audit(&pressure_vessel(), PRESSURE_VESSEL);
    let mut problems = f_failures(&verdicts);
    for source in ["csaam", "fastf", "aipso"] {
        let v = row(&verdicts, source);
        if !v.flags_consistent {
            problems.push(format!("{source}: recomputed marks disagree with the published ones"));
        }
    }
    let niadp = row(&verdicts, "niadp");
    let g3 = &niadp.columns[2];
    // the published g3 is positive yet unmarked; at two printed decimals the
    // recomputed sign cannot be decided, so the mismatch rests on the reported value
    let documented = known(PRESSURE_VESSEL, "niadp")
        && niadp.reported_sign_mismatches == vec![2]
        && g3.reported_status == SignStatus::Violated
        && g3.status != SignStatus::Satisfied
        && !g3.flagged;
    if !documented {
        problems.push(format!(
            "niadp: g3 known mismatch not reproduced (reported {}, recomputed {:.3} ± {:.3})",
            g3.reported, g3.recomputed, g3.band
        ));
    }
    let rows = verdicts.len();
    if problems.is_empty() {
        outcome(
            true,
            format!("{rows} rows, f within ±{F_TOLERANCE}, marks consistent, niadp g3 mismatch documented"),
        )
    } else {
        outcome(false, problems.join("; "))
    }
}

fn criterion_2() -> Outcome {
    let verdicts = audit(&himmelblau(), HIMMELBLAU);
    let mut problems = f_failures(&verdicts);
    let covga = &row(&verdicts, "covga").columns[2];
    if !(covga.strictly_violated && covga.recomputed < 20.0) {
        problems.push(format!("covga: g3 = {} not flagged below 20", covga.recomputed));
    }
    let psa_g3 = row(&verdicts, "PSA").columns[2].recomputed;
    if (psa_g3 - PSA_G3).abs() > PSA_G3_TOLERANCE {
        problems.push(format!("PSA: g3 = {psa_g3}, expected {PSA_G3} ± {PSA_G3_TOLERANCE}"));
    }
    if problems.is_empty() {
        outcome(
            true,
            format!(
                "{} rows, covga g3 = {:.6} flagged, PSA g3 = {psa_g3:.5}",
                verdicts.len(),
                covga.recomputed
            ),
        )
    } else {
        outcome(false, problems.join("; "))
    }
}

fn campaign_config() -> SolverConfig {
    SolverConfig {
        swarm_size: 40,
        lambda: 0.6,
        max_steps: CAMPAIGN_STEPS,
        tau_std: 0.1,
        gamma: 1e12,
        seed: CAMPAIGN_BASE_SEED,
    }
}

fn campaign(problem: &Problem, limit: f64) -> Outcome {
    let started = Instant::now();
    let summary = run_batch(problem, CAMPAIGN_RUNS, CAMPAIGN_BASE_SEED, &campaign_config()).unwrap();
    let best = summary.best.unwrap_or(f64::INFINITY);
    let passed = summary.feasible_runs >= MIN_FEASIBLE_RUNS && best <= limit;
    outcome(
        passed,
        format!(
            "{}/{} feasible (need {MIN_FEASIBLE_RUNS}), best f = {best:.4} (limit {limit}), mean {:.4}, {:.1}s",
            summary.feasible_runs,
            summary.runs,
            summary.mean.unwrap_or(f64::NAN),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut problems = Vec::new();
    let params = PenaltyParams::default();

    for problem in [pressure_vessel(), himmelblau()] {
        for seed in 0..INVARIANT_SEEDS {
            let config = SolverConfig::default().with_max_steps(INVARIANT_STEPS).with_seed(seed);

            let mut trace = Vec::new();
            let traced = solve_traced(&problem, &config, |r| trace.push(r.best_f)).unwrap();
            if trace.windows(2).any(|w| w[1] > w[0]) {
                problems.push(format!("{} seed {seed}: best_f increased", problem.name()));
            }

            let again = solve(&problem, &config).unwrap();
            if again.best_x != traced.best_x || again.best_f.to_bits() != traced.best_f.to_bits() {
                problems.push(format!("{} seed {seed}: repeated run differs", problem.name()));
            }

            let mut swarm = Swarm::new(&problem, config).unwrap();
            for _ in 0..INVARIANT_STEPS {
                let step = swarm.step().unwrap();
                if swarm.positions().iter().any(|x| !problem.is_admissible(x)) {
                    problems.push(format!("{} seed {seed}: inadmissible position", problem.name()));
                    break;
                }
                if step.exploration.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    problems.push(format!("{} seed {seed}: p outside [0, 1]", problem.name()));
                    break;
                }
                let lowest = step.detected.iter().cloned().fold(f64::INFINITY, f64::min);
                let argmin = step.detected.iter().position(|d| *d == lowest).unwrap();
                if step.exploration[argmin] != 0.0 {
                    problems.push(format!("{} seed {seed}: probe argmin has p != 0", problem.name()));
                    break;
                }
            }
        }
    }
    if exploration_weights(&[3.0, 3.0, 3.0]) != vec![0.0; 3] {
        problems.push("equal probes must give p = 0".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pv = pressure_vessel();
    let mut checked_feasible = 0;
    for _ in 0..PROJECTION_POINTS {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-50.0..300.0)).collect();
        let y = project_domain(pv.domains(), &x).unwrap();
        if !pv.is_admissible(&y) {
            problems.push(format!("projection left {y:?} inadmissible"));
            break;
        }
        if project_domain(pv.domains(), &y).unwrap() != y {
            problems.push(format!("projection not idempotent at {x:?}"));
            break;
        }
    }
    let admissible = init_positions(pv.domains(), PROJECTION_POINTS, &mut rng);
    for x in &admissible {
        if &project_domain(pv.domains(), x).unwrap() != x {
            problems.push(format!("admissible {x:?} moved by projection"));
            break;
        }
        let values = pv.constraint_values(x).unwrap();
        if values.iter().all(|g| *g <= 0.0) {
            checked_feasible += 1;
            let f = pv.objective(x).unwrap();
            let penalized = penalized_cost(&pv, x, &params).unwrap();
            if penalized.to_bits() != f.to_bits() {
                problems.push(format!("penalized cost differs from f at feasible {x:?}"));
                break;
            }
        }
    }
    if checked_feasible == 0 {
        problems.push("no feasible sample to check the penalty identity".into());
    }

    if problems.is_empty() {
        outcome(
            true,
            format!(
                "{} traced runs, {PROJECTION_POINTS} projection points, {checked_feasible} feasible penalty checks",
                2 * INVARIANT_SEEDS
            ),
        )
    } else {
        outcome(false, problems.join("; "))
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ORACLE_RELATIVE * a.abs().max(b.abs()).max(1.0)
}

fn criterion_6() -> Outcome {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/problems");
    let mut problems = Vec::new();
    let mut worst: f64 = 0.0;
    for (file, builtin) in [
        ("pressure_vessel.cop", pressure_vessel()),
        ("himmelblau.cop", himmelblau()),
    ] {
        let text = std::fs::read_to_string(format!("{dir}/{file}")).unwrap();
        let compiled = dsl::compile_source(&text).unwrap();
        if compiled.constraint_count() != builtin.constraint_count() || compiled.domains() != builtin.domains() {
            problems.push(format!("{file}: structure differs from the builtin"));
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for x in init_positions(builtin.domains(), ORACLE_POINTS, &mut rng) {
            let mut pairs = vec![(compiled.objective(&x).unwrap(), builtin.objective(&x).unwrap())];
            pairs.extend(
                compiled
                    .constraint_values(&x)
                    .unwrap()
                    .into_iter()
                    .zip(builtin.constraint_values(&x).unwrap()),
            );
            for (a, b) in pairs {
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
                if !close(a, b) {
                    problems.push(format!("{file}: {a} vs {b} at {x:?}"));
                }
            }
        }
    }
    if problems.is_empty() {
        outcome(
            true,
            format!("{ORACLE_POINTS} points per file, worst relative gap {worst:.2e}"),
        )
    } else {
        problems.truncate(3);
        outcome(false, problems.join("; "))
    }
}

fn criterion_7() -> Outcome {
    let problem = Problem::new(
        "parabola",
        vec![VariableDomain::continuous(0.0, 10.0)],
        evaluable(|x| x[0] * x[0]),
    )
    .unwrap();
    let config = SolverConfig {
        swarm_size: 2,
        lambda: 0.6,
        ..SolverConfig::default()
    };
    let mut swarm = Swarm::from_positions(&problem, config, vec![vec![2.0], vec![8.0]]).unwrap();
    swarm.step_with_direction(&[0.5]).unwrap();
    let got = swarm.positions().to_vec();
    outcome(
        got == vec![vec![2.0], vec![5.3]],
        format!("positions after one step: {got:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 pressure vessel table audit", criterion_1),
        ("2 Himmelblau table audit", criterion_2),
        ("3 pressure vessel campaign", || {
            campaign(&pressure_vessel(), PV_BEST_LIMIT)
        }),
        ("4 Himmelblau campaign", || campaign(&himmelblau(), HB_BEST_LIMIT)),
        ("5 invariant suite", criterion_5),
        ("6 DSL oracle equivalence", criterion_6),
        ("7 hand-computed step", criterion_7),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = check();
        if !result.passed {
            failed += 1;
        }
        let tag = if result.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{name}] {}", result.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
