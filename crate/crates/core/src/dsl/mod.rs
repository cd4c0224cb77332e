//! A small text format for custom constrained problems (`.cop` files).
//!
//! ```text
//! # comments run to the end of the line
//! name pressure_vessel
//! dim 4
//! minimize 0.6224*x1*x3*x4 + 1.7781*x2*x3^2 + 3.1661*x1^2*x4 + 19.84*x1^2*x3
//! -x1 + 0.0193*x3 <= 0
//! 90 <= 80.51249 + 0.0071317*x2*x5 <= 110
//! x1 in {1..99} * 0.0625
//! x3 in [10, 200]
//! ```
//!
//! One statement per line. A constraint `lhs <= rhs` means `lhs - rhs <= 0`;
//! a double-sided `lo <= expr <= hi` (constant `lo`, `hi`) becomes two
//! single-sided constraints. Every variable needs exactly one domain line.

mod ast;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use ast::{BinOp, Expr};
pub use parser::parse_expr;

use crate::error::{EvalError, Result};
use crate::problem::{split_double_sided, Evaluable, Problem, VariableDomain};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid problem file:{}", DiagnosticList(.0))]
    Validation(Vec<Diagnostic>),
}

struct DiagnosticList<'a>(&'a [Diagnostic]);

impl fmt::Display for DiagnosticList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticKind {
    MissingStatement(&'static str),
    DuplicateStatement(&'static str),
    /// A variable appears in an expression but its index exceeds the dimension.
    UndeclaredVariable(usize),
    /// A variable within the dimension has no domain line.
    MissingDomain(usize),
    DuplicateDomain(usize),
    /// A domain line names a variable beyond the declared dimension.
    DimensionMismatch {
        variable: usize,
        dimension: usize,
    },
    InvalidDomain {
        variable: usize,
        reason: String,
    },
    NonConstantBound,
    InvertedBounds {
        lower: f64,
        upper: f64,
    },
    BoundEvaluation(EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// 1-based source line; 0 when the problem is with the file as a whole.
    pub line: usize,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        match &self.kind {
            DiagnosticKind::MissingStatement(s) => write!(f, "missing `{s}` statement"),
            DiagnosticKind::DuplicateStatement(s) => write!(f, "duplicate `{s}` statement"),
            DiagnosticKind::UndeclaredVariable(i) => write!(f, "variable x{i} is not declared"),
            DiagnosticKind::MissingDomain(i) => write!(f, "variable x{i} has no domain declaration"),
            DiagnosticKind::DuplicateDomain(i) => write!(f, "duplicate domain for x{i}"),
            DiagnosticKind::DimensionMismatch { variable, dimension } => {
                write!(f, "domain for x{variable} exceeds dimension {dimension}")
            }
            DiagnosticKind::InvalidDomain { variable, reason } => write!(f, "invalid domain for x{variable}: {reason}"),
            DiagnosticKind::NonConstantBound => write!(f, "bounds of a double-sided constraint must be constant"),
            DiagnosticKind::InvertedBounds { lower, upper } => {
                write!(f, "lower bound {lower} exceeds upper bound {upper}")
            }
            DiagnosticKind::BoundEvaluation(e) => write!(f, "bound cannot be evaluated: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintClause {
    /// `lhs <= rhs`
    Single { lhs: Expr, rhs: Expr },
    /// `lower <= expr <= upper`
    DoubleSided { lower: Expr, expr: Expr, upper: Expr },
}

impl ConstraintClause {
    fn expressions(&self) -> Vec<&Expr> {
        match self {
            ConstraintClause::Single { lhs, rhs } => vec![lhs, rhs],
            ConstraintClause::DoubleSided { lower, expr, upper } => vec![lower, expr, upper],
        }
    }
}

impl fmt::Display for ConstraintClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintClause::Single { lhs, rhs } => write!(f, "{lhs} <= {rhs}"),
            ConstraintClause::DoubleSided { lower, expr, upper } => write!(f, "{lower} <= {expr} <= {upper}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainClause {
    pub variable: usize,
    pub domain: VariableDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Statement {
    Name(String),
    Dimension(usize),
    Objective(Expr),
    Constraint(ConstraintClause),
    Domain(DomainClause),
}

/// A value and the source line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Located<T> {
    pub line: usize,
    pub value: T,
}

/// A parsed and validated `.cop` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpecFile {
    pub name: Option<String>,
    pub dimension: usize,
    pub objective: Located<Expr>,
    pub constraints: Vec<Located<ConstraintClause>>,
    pub domains: Vec<Located<DomainClause>>,
}

/// Parses and validates problem source text.
pub fn parse(source: &str) -> Result<ProblemSpecFile, DslError> {
    let mut name: Option<Located<String>> = None;
    let mut dimension: Option<Located<usize>> = None;
    let mut objective: Option<Located<Expr>> = None;
    let mut constraints = Vec::new();
    let mut domains = Vec::new();
    let mut diagnostics = Vec::new();

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("");
        if text.trim().is_empty() {
            continue;
        }
        let duplicate = |what| Diagnostic {
            line,
            kind: DiagnosticKind::DuplicateStatement(what),
        };
        match parser::parse_line(text, line)? {
            Statement::Name(n) => {
                if name.is_some() {
                    diagnostics.push(duplicate("name"));
                }
                name = Some(Located { line, value: n });
            }
            Statement::Dimension(d) => {
                if dimension.is_some() {
                    diagnostics.push(duplicate("dim"));
                }
                dimension = Some(Located { line, value: d });
            }
            Statement::Objective(e) => {
                if objective.is_some() {
                    diagnostics.push(duplicate("minimize"));
                }
                objective = Some(Located { line, value: e });
            }
            Statement::Constraint(c) => constraints.push(Located { line, value: c }),
            Statement::Domain(d) => domains.push(Located { line, value: d }),
        }
    }

    if dimension.is_none() {
        diagnostics.push(Diagnostic {
            line: 0,
            kind: DiagnosticKind::MissingStatement("dim"),
        });
    }
    if objective.is_none() {
        diagnostics.push(Diagnostic {
            line: 0,
            kind: DiagnosticKind::MissingStatement("minimize"),
        });
    }
    let (Some(dimension), Some(objective)) = (dimension, objective) else {
        return Err(DslError::Validation(diagnostics));
    };
    let spec = ProblemSpecFile {
        name: name.map(|n| n.value),
        dimension: dimension.value,
        objective,
        constraints,
        domains,
    };
    diagnostics.extend(spec.diagnostics());
    if diagnostics.is_empty() {
        Ok(spec)
    } else {
        diagnostics.sort_by_key(|d| d.line);
        Err(DslError::Validation(diagnostics))
    }
}

impl ProblemSpecFile {
    pub fn validate(&self) -> Result<(), DslError> {
        let diagnostics = self.diagnostics();
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(DslError::Validation(diagnostics))
        }
    }

    fn diagnostics(&self) -> Vec<Diagnostic> {
        let d = self.dimension;
        let mut out = Vec::new();
        let mut push = |line, kind| out.push(Diagnostic { line, kind });

        let mut exprs: Vec<(usize, &Expr)> = vec![(self.objective.line, &self.objective.value)];
        for c in &self.constraints {
            exprs.extend(c.value.expressions().into_iter().map(|e| (c.line, e)));
        }
        let mut reported = BTreeSet::new();
        for (line, e) in exprs {
            for v in e.variables() {
                if v > d && reported.insert(v) {
                    push(line, DiagnosticKind::UndeclaredVariable(v));
                }
            }
        }

        let mut declared = BTreeSet::new();
        for clause in &self.domains {
            let DomainClause { variable, domain } = &clause.value;
            if *variable > d {
                push(
                    clause.line,
                    DiagnosticKind::DimensionMismatch {
                        variable: *variable,
                        dimension: d,
                    },
                );
                continue;
            }
            if !declared.insert(*variable) {
                push(clause.line, DiagnosticKind::DuplicateDomain(*variable));
            }
            if let Err(e) = domain.validate(*variable) {
                let reason = match e {
                    crate::Error::InvalidDomain { reason, .. } => reason,
                    other => other.to_string(),
                };
                push(
                    clause.line,
                    DiagnosticKind::InvalidDomain {
                        variable: *variable,
                        reason,
                    },
                );
            }
        }
        for v in 1..=d {
            if !declared.contains(&v) {
                push(0, DiagnosticKind::MissingDomain(v));
            }
        }

        for c in &self.constraints {
            if let ConstraintClause::DoubleSided { lower, upper, .. } = &c.value {
                if !lower.is_constant() || !upper.is_constant() {
                    push(c.line, DiagnosticKind::NonConstantBound);
                    continue;
                }
                match (lower.eval(&[]), upper.eval(&[])) {
                    (Ok(lo), Ok(hi)) if lo > hi => {
                        push(c.line, DiagnosticKind::InvertedBounds { lower: lo, upper: hi })
                    }
                    (Err(e), _) | (_, Err(e)) => push(c.line, DiagnosticKind::BoundEvaluation(e)),
                    _ => {}
                }
            }
        }
        out
    }

    /// Number of single-sided constraints after splitting.
    pub fn constraint_count(&self) -> usize {
        self.constraints
            .iter()
            .map(|c| match c.value {
                ConstraintClause::Single { .. } => 1,
                ConstraintClause::DoubleSided { .. } => 2,
            })
            .sum()
    }
}

impl fmt::Display for ProblemSpecFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            writeln!(f, "name {name}")?;
        }
        writeln!(f, "dim {}", self.dimension)?;
        writeln!(f, "minimize {}", self.objective.value)?;
        for c in &self.constraints {
            writeln!(f, "{}", c.value)?;
        }
        for d in &self.domains {
            writeln!(f, "x{} in {}", d.value.variable, d.value.domain)?;
        }
        Ok(())
    }
}

fn expr_evaluable(expr: Expr) -> Evaluable {
    let expr = Arc::new(expr);
    Arc::new(move |x: &[f64]| expr.eval(x))
}

/// Builds a [`Problem`] from a validated spec.
pub fn compile(spec: &ProblemSpecFile) -> Result<Problem> {
    spec.validate()?;
    let mut domains = vec![VariableDomain::continuous(0.0, 0.0); spec.dimension];
    for clause in &spec.domains {
        domains[clause.value.variable - 1] = clause.value.domain;
    }
    let name = spec.name.clone().unwrap_or_else(|| "custom".to_string());
    let mut problem = Problem::new(name, domains, expr_evaluable(spec.objective.value.clone()))?;
    for c in &spec.constraints {
        let label = c.value.to_string();
        match &c.value {
            ConstraintClause::Single { lhs, rhs } => {
                let g = if *rhs == Expr::Num(0.0) {
                    lhs.clone()
                } else {
                    Expr::binary(BinOp::Sub, lhs.clone(), rhs.clone())
                };
                problem = problem.with_constraint(label, expr_evaluable(g));
            }
            ConstraintClause::DoubleSided { lower, expr, upper } => {
                let lo = lower.eval(&[]).map_err(crate::Error::Eval)?;
                let hi = upper.eval(&[]).map_err(crate::Error::Eval)?;
                let (below, above) = split_double_sided(expr_evaluable(expr.clone()), lo, hi)?;
                problem = problem
                    .with_constraint(format!("{lo} - ({expr}) <= 0"), below)
                    .with_constraint(format!("{expr} - {hi} <= 0"), above);
            }
        }
    }
    Ok(problem)
}

/// Parses and compiles in one go.
pub fn compile_source(source: &str) -> Result<Problem> {
    compile(&parse(source)?)
}
