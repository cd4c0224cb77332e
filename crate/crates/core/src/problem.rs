//! Constrained problem model and the penalty transform.
//!
//! A [`Problem`] is `minimize f(x)` subject to `g_j(x) <= 0` and per-variable
//! domains. [`penalized_cost`] folds the inequality constraints into the cost
//! as `f(x) + gamma * sum_j g_j(x)^2 * h(g_j(x))` where `h` is the violation
//! indicator. Equality constraints are not supported.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::projection::project_grid;

/// A scalar function of a point. Must be pure; problems are shared across threads.
pub type Evaluable = Arc<dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync>;

/// Wraps an infallible closure as an [`Evaluable`].
pub fn evaluable<F>(f: F) -> Evaluable
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    Arc::new(move |x: &[f64]| Ok(f(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableDomain {
    /// Closed interval `[lower, upper]`.
    Continuous { lower: f64, upper: f64 },
    /// `{min_multiple..=max_multiple} * step`.
    Grid {
        step: f64,
        min_multiple: i64,
        max_multiple: i64,
    },
}

impl VariableDomain {
    pub fn continuous(lower: f64, upper: f64) -> Self {
        VariableDomain::Continuous { lower, upper }
    }

    pub fn grid(step: f64, min_multiple: i64, max_multiple: i64) -> Self {
        VariableDomain::Grid {
            step,
            min_multiple,
            max_multiple,
        }
    }

    pub fn lower(&self) -> f64 {
        match *self {
            VariableDomain::Continuous { lower, .. } => lower,
            VariableDomain::Grid { step, min_multiple, .. } => min_multiple as f64 * step,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            VariableDomain::Continuous { upper, .. } => upper,
            VariableDomain::Grid { step, max_multiple, .. } => max_multiple as f64 * step,
        }
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let invalid = |reason: String| Error::InvalidDomain { index, reason };
        match *self {
            VariableDomain::Continuous { lower, upper } => {
                if !lower.is_finite() || !upper.is_finite() {
                    return Err(invalid("bounds must be finite".into()));
                }
                if lower > upper {
                    return Err(invalid(format!("lower {lower} exceeds upper {upper}")));
                }
            }
            VariableDomain::Grid {
                step,
                min_multiple,
                max_multiple,
            } => {
                if !(step.is_finite() && step > 0.0) {
                    return Err(invalid(format!("grid step {step} must be positive")));
                }
                if min_multiple > max_multiple {
                    return Err(invalid(format!(
                        "min multiple {min_multiple} exceeds max multiple {max_multiple}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether `value` is admissible. Grid values are accepted when they
    /// reproject to themselves.
    pub fn contains(&self, value: f64) -> bool {
        match *self {
            VariableDomain::Continuous { lower, upper } => lower <= value && value <= upper,
            VariableDomain::Grid {
                step,
                min_multiple,
                max_multiple,
            } => {
                let snapped = project_grid(step, min_multiple, max_multiple, value);
                (snapped - value).abs() <= f64::EPSILON * snapped.abs().max(step)
            }
        }
    }
}

impl fmt::Display for VariableDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariableDomain::Continuous { lower, upper } => write!(f, "[{lower}, {upper}]"),
            VariableDomain::Grid {
                step,
                min_multiple,
                max_multiple,
            } => write!(f, "{{{min_multiple}..{max_multiple}}} * {step}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub gamma: f64,
}

impl PenaltyParams {
    pub const DEFAULT_GAMMA: f64 = 1e12;

    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "penalty gamma must be positive and finite, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            gamma: Self::DEFAULT_GAMMA,
        }
    }
}

/// Constraint values at a point together with their violation flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub values: Vec<f64>,
    pub violated: Vec<bool>,
    /// No violated constraint and every coordinate inside its domain.
    pub feasible: bool,
}

impl ConstraintReport {
    pub fn violation_count(&self) -> usize {
        self.violated.iter().filter(|v| **v).count()
    }
}

/// A constrained optimization problem.
#[derive(Clone)]
pub struct Problem {
    name: String,
    domains: Vec<VariableDomain>,
    objective: Evaluable,
    constraints: Vec<Evaluable>,
    constraint_labels: Vec<String>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domains", &self.domains)
            .field("constraints", &self.constraint_labels)
            .finish()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, domains: Vec<VariableDomain>, objective: Evaluable) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::InvalidConfig("a problem needs at least one variable".into()));
        }
        for (i, d) in domains.iter().enumerate() {
            d.validate(i + 1)?;
        }
        Ok(Self {
            name: name.into(),
            domains,
            objective,
            constraints: Vec::new(),
            constraint_labels: Vec::new(),
        })
    }

    /// Adds `g(x) <= 0`.
    pub fn with_constraint(mut self, label: impl Into<String>, g: Evaluable) -> Self {
        self.constraints.push(g);
        self.constraint_labels.push(label.into());
        self
    }

    /// Adds `lower <= g(x) <= upper` as two single-sided constraints.
    pub fn with_double_sided(self, label: &str, g: Evaluable, lower: f64, upper: f64) -> Result<Self> {
        let (lo, hi) = split_double_sided(g, lower, upper)?;
        Ok(self
            .with_constraint(format!("{lower} - {label}"), lo)
            .with_constraint(format!("{label} - {upper}"), hi))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[VariableDomain] {
        &self.domains
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraint_labels(&self) -> &[String] {
        &self.constraint_labels
    }

    fn check_dimension(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.dimension() {
            return Err(EvalError::Dimension {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.check_dimension(x)?;
        (self.objective)(x)
    }

    pub fn constraint(&self, j: usize, x: &[f64]) -> Result<f64, EvalError> {
        self.check_dimension(x)?;
        (self.constraints[j])(x)
    }

    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.check_dimension(x)?;
        self.constraints.iter().map(|g| g(x)).collect()
    }

    /// True when every coordinate lies in its domain.
    pub fn is_admissible(&self, x: &[f64]) -> bool {
        x.len() == self.dimension() && self.domains.iter().zip(x).all(|(d, v)| d.contains(*v))
    }
}

/// Violation indicator: 1 when `g_value > 0`, else 0.
pub fn indicator(g_value: f64) -> f64 {
    if g_value > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `f(x) + gamma * sum_j g_j(x)^2 * indicator(g_j(x))`. Returns `f(x)`
/// unchanged when no constraint is violated.
pub fn penalized_cost(problem: &Problem, x: &[f64], params: &PenaltyParams) -> Result<f64, EvalError> {
    penalized_cost_with_status(problem, x, params.gamma).map(|(cost, _)| cost)
}

/// Penalized cost and whether all constraints held.
pub(crate) fn penalized_cost_with_status(problem: &Problem, x: &[f64], gamma: f64) -> Result<(f64, bool), EvalError> {
    let f = problem.objective(x)?;
    let mut penalty = 0.0;
    let mut satisfied = true;
    for g in &problem.constraints {
        let v = g(x)?;
        if v > 0.0 {
            satisfied = false;
            penalty += v * v;
        }
    }
    if satisfied {
        return Ok((f, true));
    }
    let cost = f + gamma * penalty;
    if !cost.is_finite() {
        return Err(EvalError::NonFinite { value: cost });
    }
    Ok((cost, false))
}

pub fn evaluate_constraints(problem: &Problem, x: &[f64]) -> Result<ConstraintReport, EvalError> {
    let values = problem.constraint_values(x)?;
    let violated: Vec<bool> = values.iter().map(|v| *v > 0.0).collect();
    let feasible = !violated.iter().any(|v| *v) && problem.is_admissible(x);
    Ok(ConstraintReport {
        values,
        violated,
        feasible,
    })
}

/// Splits `lower <= g(x) <= upper` into `lower - g(x) <= 0` and `g(x) - upper <= 0`.
pub fn split_double_sided(g: Evaluable, lower: f64, upper: f64) -> Result<(Evaluable, Evaluable)> {
    if lower.is_nan() || upper.is_nan() || lower > upper {
        return Err(Error::InvalidConfig(format!(
            "double-sided constraint needs lower <= upper, got [{lower}, {upper}]"
        )));
    }
    let g_lo = Arc::clone(&g);
    let below: Evaluable = Arc::new(move |x: &[f64]| Ok(lower - g_lo(x)?));
    let above: Evaluable = Arc::new(move |x: &[f64]| Ok(g(x)? - upper));
    Ok((below, above))
}
