//! Text, CSV and JSON renderings of runs, batches and comparison tables.
//!
//! Numbers are printed with the shortest representation that round-trips,
//! so a printed `x*` reproduces the printed `f*` exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::batch::BatchSummary;
use crate::benchmarks::{
    audit_row, AuditVerdict, ReferenceRow, ReferenceTable, KNOWN_DISCREPANCIES, REPORTED_F_TOLERANCE, SIGN_TOLERANCE,
};
use crate::engine::{RunResult, TraceRecord};
use crate::error::{Error, Result};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

const OUR_ROW: &str = "PSA (this run)";

/// One row of a comparison table, recomputed from its `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub source: String,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub f: f64,
    pub reported_f: Option<f64>,
    /// Labels of columns whose recomputed value is violated.
    pub violated: Vec<String>,
    /// Labels marked as violated in the publication.
    pub published_flags: Vec<String>,
}

fn comparison_row(problem: &Problem, table: &ReferenceTable, row: &ReferenceRow, ours: bool) -> Result<ComparisonRow> {
    let verdict = audit_row(problem, table, row, SIGN_TOLERANCE)?;
    let labels = |pick: &dyn Fn(usize) -> bool| {
        table
            .columns
            .iter()
            .enumerate()
            .filter(|(j, _)| pick(*j))
            .map(|(_, c)| c.label.clone())
            .collect::<Vec<_>>()
    };
    Ok(ComparisonRow {
        source: row.source.clone(),
        x: row.x.clone(),
        g: verdict.columns.iter().map(|c| c.recomputed).collect(),
        f: verdict.recomputed_f,
        reported_f: (!ours).then_some(row.reported_f),
        violated: labels(&|j| verdict.columns[j].strictly_violated),
        published_flags: labels(&|j| row.flagged_violations.contains(&j)),
    })
}

/// The published rows followed by a row for `our_best`, with violation marks recomputed.
pub fn comparison_rows(problem: &Problem, table: &ReferenceTable, our_best: &RunResult) -> Result<Vec<ComparisonRow>> {
    let mut rows = table
        .rows
        .iter()
        .map(|row| comparison_row(problem, table, row, false))
        .collect::<Result<Vec<_>>>()?;
    let ours = ReferenceRow {
        source: OUR_ROW.to_string(),
        x: our_best.best_x.clone(),
        x_resolution: vec![0.0; our_best.best_x.len()],
        reported_g: Vec::new(),
        reported_f: our_best.objective,
        flagged_violations: Default::default(),
    };
    rows.push(comparison_row(problem, table, &ours, true)?);
    Ok(rows)
}

pub fn render_comparison(
    problem: &Problem,
    table: &ReferenceTable,
    our_best: &RunResult,
    format: OutputFormat,
) -> Result<String> {
    let rows = comparison_rows(problem, table, our_best)?;
    let dim = problem.dimension();
    let g_labels: Vec<String> = table.columns.iter().map(|c| c.label.clone()).collect();
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&rows)?),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["source".to_string()];
            header.extend((1..=dim).map(|i| format!("x{i}")));
            header.extend(g_labels.iter().cloned());
            header.extend(["f", "reported_f", "violated", "published_flags"].map(String::from));
            w.write_record(&header)?;
            for r in &rows {
                let mut rec = vec![r.source.clone()];
                rec.extend(r.x.iter().map(|v| v.to_string()));
                rec.extend(r.g.iter().map(|v| v.to_string()));
                rec.push(r.f.to_string());
                rec.push(r.reported_f.map_or(String::new(), |v| v.to_string()));
                rec.push(r.violated.join(";"));
                rec.push(r.published_flags.join(";"));
                w.write_record(&rec)?;
            }
            csv_string(w)
        }
        OutputFormat::Text => {
            let mut header = vec!["source".to_string()];
            header.extend((1..=dim).map(|i| format!("x{i}")));
            header.extend(g_labels.iter().cloned());
            header.extend(["f", "reported f", "published †"].map(String::from));
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut cells = vec![r.source.clone()];
                    cells.extend(r.x.iter().map(|v| format!("{v:.4}")));
                    cells.extend(r.g.iter().zip(&g_labels).map(|(v, label)| {
                        let mark = if r.violated.contains(label) { "†" } else { "" };
                        format!("{v:.6e}{mark}")
                    }));
                    cells.push(format!("{:.4}", r.f));
                    cells.push(r.reported_f.map_or("-".into(), |v| v.to_string()));
                    cells.push(if r.published_flags.is_empty() {
                        "-".into()
                    } else {
                        r.published_flags.join(",")
                    });
                    cells
                })
                .collect();
            let mut out = align(&header, &body);
            out.push_str("† marks constraints violated at the listed x (recomputed).\n");
            Ok(out)
        }
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn align(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header);
    for row in rows {
        line(row);
    }
    out
}

/// Labels and values of the constraint columns shown for a run: the table's
/// columns for built-in problems, otherwise the problem's own constraints.
fn run_columns(
    problem: &Problem,
    result: &RunResult,
    table: Option<&ReferenceTable>,
) -> Result<Vec<(String, f64, bool)>> {
    match table {
        Some(t) => t
            .columns
            .iter()
            .map(|c| {
                let v = c.value(&result.best_x)?;
                Ok((c.label.clone(), v, c.margin(v) > 0.0))
            })
            .collect(),
        None => Ok(problem
            .constraint_labels()
            .iter()
            .zip(&result.constraint_report.values)
            .zip(&result.constraint_report.violated)
            .map(|((l, v), bad)| (l.clone(), *v, *bad))
            .collect()),
    }
}

pub fn render_run(
    problem: &Problem,
    result: &RunResult,
    table: Option<&ReferenceTable>,
    format: OutputFormat,
) -> Result<String> {
    let columns = run_columns(problem, result, table)?;
    match format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                problem: &'a str,
                result: &'a RunResult,
                columns: Vec<Column<'a>>,
            }
            #[derive(Serialize)]
            struct Column<'a> {
                label: &'a str,
                value: f64,
                violated: bool,
            }
            let report = Report {
                problem: problem.name(),
                result,
                columns: columns
                    .iter()
                    .map(|(label, value, violated)| Column {
                        label,
                        value: *value,
                        violated: *violated,
                    })
                    .collect(),
            };
            Ok(serde_json::to_string_pretty(&report)?)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header: Vec<String> = (1..=result.best_x.len()).map(|i| format!("x{i}")).collect();
            header.extend(columns.iter().map(|(l, ..)| l.clone()));
            header.extend(["f", "penalized_f", "feasible", "steps"].map(String::from));
            w.write_record(&header)?;
            let mut rec: Vec<String> = result.best_x.iter().map(|v| v.to_string()).collect();
            rec.extend(columns.iter().map(|(_, v, _)| v.to_string()));
            rec.push(result.objective.to_string());
            rec.push(result.best_f.to_string());
            rec.push(result.feasible().to_string());
            rec.push(result.steps_taken.to_string());
            w.write_record(&rec)?;
            csv_string(w)
        }
        OutputFormat::Text => {
            let mut out = String::new();
            writeln!(out, "problem: {}", problem.name()).unwrap();
            writeln!(out, "steps:   {}", result.steps_taken).unwrap();
            for (i, v) in result.best_x.iter().enumerate() {
                writeln!(out, "x{} = {v}", i + 1).unwrap();
            }
            for (j, (label, v, violated)) in columns.iter().enumerate() {
                let mark = if *violated { "  † violated" } else { "" };
                let short = format!("g{}", j + 1);
                if *label == short {
                    writeln!(out, "{short} = {v}{mark}").unwrap();
                } else {
                    writeln!(out, "{short} = {v}{mark}  # {label}").unwrap();
                }
            }
            writeln!(out, "f* = {}", result.best_f).unwrap();
            if result.best_f != result.objective {
                writeln!(out, "f(x*) without penalty = {}", result.objective).unwrap();
            }
            writeln!(out, "feasible: {}", result.feasible()).unwrap();
            Ok(out)
        }
    }
}

pub fn render_batch(summary: &BatchSummary, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(summary)?),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let dim = summary.records.iter().map(|r| r.best_x.len()).max().unwrap_or(0);
            let mut header = vec!["seed".to_string()];
            header.extend((1..=dim).map(|i| format!("x{i}")));
            header.extend(["f", "penalized_f", "feasible", "wall_time_secs", "error"].map(String::from));
            w.write_record(&header)?;
            for r in &summary.records {
                let mut rec = vec![r.seed.to_string()];
                rec.extend((0..dim).map(|i| r.best_x.get(i).map_or(String::new(), |v| v.to_string())));
                rec.push(r.objective.to_string());
                rec.push(r.best_f.to_string());
                rec.push(r.feasible.to_string());
                rec.push(format!("{:.6}", r.wall_time_secs));
                rec.push(r.error.clone().unwrap_or_default());
                w.write_record(&rec)?;
            }
            csv_string(w)
        }
        OutputFormat::Text => {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
            let mut out = String::new();
            let c = &summary.config;
            writeln!(out, "problem:          {}", summary.problem).unwrap();
            writeln!(
                out,
                "settings:         N={} lambda={} max_steps={} tau_std={} gamma={:e}",
                c.swarm_size, c.lambda, c.max_steps, c.tau_std, c.gamma
            )
            .unwrap();
            writeln!(out, "runs:             {}", summary.runs).unwrap();
            writeln!(
                out,
                "feasible runs:    {} ({:.1}%)",
                summary.feasible_runs,
                100.0 * summary.feasibility_rate
            )
            .unwrap();
            if summary.failed_runs > 0 {
                writeln!(out, "failed runs:      {}", summary.failed_runs).unwrap();
            }
            writeln!(out, "best f:           {}", fmt(summary.best)).unwrap();
            writeln!(out, "worst f:          {}", fmt(summary.worst)).unwrap();
            writeln!(out, "mean f:           {}", fmt(summary.mean)).unwrap();
            writeln!(out, "std f:            {}", fmt(summary.std)).unwrap();
            if let Some(best) = &summary.best_run {
                let x: Vec<String> = best.best_x.iter().map(|v| v.to_string()).collect();
                writeln!(out, "best x:           [{}]", x.join(", ")).unwrap();
            }
            let per_run = summary.total_wall_time_secs / summary.runs.max(1) as f64;
            writeln!(out, "wall time / run:  {per_run:.3} s").unwrap();
            Ok(out)
        }
    }
}

fn known_note(problem: &str, source: &str) -> Option<&'static str> {
    KNOWN_DISCREPANCIES
        .iter()
        .find(|(p, s, _)| *p == problem && *s == source)
        .map(|(_, _, note)| *note)
}

/// One line per published row: objective agreement, mark consistency and
/// whether the row is a documented discrepancy.
pub fn render_audit(problem: &str, verdicts: &[AuditVerdict], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(verdicts)?),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "source",
                "reported_f",
                "recomputed_f",
                "f_error",
                "flags_consistent",
                "reported_sign_mismatches",
                "recomputed_violations",
                "clean",
                "known_discrepancy",
            ])?;
            for v in verdicts {
                let labels = |idx: &mut dyn Iterator<Item = usize>| {
                    idx.map(|j| v.columns[j].label.clone()).collect::<Vec<_>>().join(";")
                };
                w.write_record([
                    v.source.clone(),
                    v.reported_f.to_string(),
                    v.recomputed_f.to_string(),
                    v.f_error.to_string(),
                    v.flags_consistent.to_string(),
                    labels(&mut v.reported_sign_mismatches.iter().copied()),
                    labels(&mut v.recomputed_violations().into_iter()),
                    v.is_clean().to_string(),
                    known_note(problem, &v.source).unwrap_or("").to_string(),
                ])?;
            }
            csv_string(w)
        }
        OutputFormat::Text => {
            let header = ["source", "reported f", "recomputed f", "|diff|", "verdict"].map(String::from);
            let mut notes = Vec::new();
            let rows: Vec<Vec<String>> = verdicts
                .iter()
                .map(|v| {
                    let mut issues = Vec::new();
                    if !v.f_within(REPORTED_F_TOLERANCE) {
                        issues.push("f differs".to_string());
                    }
                    if !v.flags_consistent {
                        issues.push("marks differ".to_string());
                    }
                    for j in &v.reported_sign_mismatches {
                        issues.push(format!("{} sign unmarked", v.columns[*j].label));
                    }
                    let mut verdict = if issues.is_empty() {
                        "ok".to_string()
                    } else {
                        issues.join(", ")
                    };
                    if let Some(note) = known_note(problem, &v.source) {
                        verdict.push_str(" (known)");
                        notes.push(format!("{}: {note}", v.source));
                    }
                    vec![
                        v.source.clone(),
                        v.reported_f.to_string(),
                        format!("{:.4}", v.recomputed_f),
                        format!("{:.4}", v.f_error),
                        verdict,
                    ]
                })
                .collect();
            let mut out = align(&header, &rows);
            for note in notes {
                writeln!(out, "note {note}").unwrap();
            }
            Ok(out)
        }
    }
}

/// Per-step trace as CSV with columns `step,best_f,feasible_count`.
pub fn render_trace(records: &[TraceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    csv_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{himmelblau, pressure_vessel, reference_table, HIMMELBLAU, PRESSURE_VESSEL};
    use crate::engine::{solve, SolverConfig};

    fn quick(problem: &Problem) -> RunResult {
        solve(problem, &SolverConfig::default().with_max_steps(20).with_seed(1)).unwrap()
    }

    #[test]
    fn comparison_row_counts() {
        let pv = pressure_vessel();
        let rows = comparison_rows(&pv, &reference_table(PRESSURE_VESSEL).unwrap(), &quick(&pv)).unwrap();
        assert_eq!(rows.len(), 16);
        assert_eq!(rows.last().unwrap().source, OUR_ROW);
        let hb = himmelblau();
        let rows = comparison_rows(&hb, &reference_table(HIMMELBLAU).unwrap(), &quick(&hb)).unwrap();
        assert_eq!(rows.len(), 7);
    }

    #[test]
    fn comparison_csv_round_trips() {
        let pv = pressure_vessel();
        let table = reference_table(PRESSURE_VESSEL).unwrap();
        let best = quick(&pv);
        let rows = comparison_rows(&pv, &table, &best).unwrap();
        let csv_text = render_comparison(&pv, &table, &best, OutputFormat::Csv).unwrap();
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let parsed: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(parsed.len(), rows.len());
        for (rec, row) in parsed.iter().zip(&rows) {
            assert_eq!(&rec[0], row.source);
            for (i, x) in row.x.iter().enumerate() {
                assert_eq!(rec[1 + i].parse::<f64>().unwrap(), *x);
            }
            for (j, g) in row.g.iter().enumerate() {
                assert_eq!(rec[5 + j].parse::<f64>().unwrap(), *g);
            }
            assert_eq!(rec[9].parse::<f64>().unwrap(), row.f);
        }
    }

    #[test]
    fn comparison_json_round_trips() {
        let hb = himmelblau();
        let table = reference_table(HIMMELBLAU).unwrap();
        let best = quick(&hb);
        let json = render_comparison(&hb, &table, &best, OutputFormat::Json).unwrap();
        let back: Vec<ComparisonRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, comparison_rows(&hb, &table, &best).unwrap());
    }

    #[test]
    fn text_table_marks_recomputed_violations() {
        let pv = pressure_vessel();
        let table = reference_table(PRESSURE_VESSEL).unwrap();
        let text = render_comparison(&pv, &table, &quick(&pv), OutputFormat::Text).unwrap();
        let fastf = text.lines().find(|l| l.starts_with("fastf")).unwrap();
        assert_eq!(fastf.matches('†').count(), 2);
    }

    #[test]
    fn printed_run_reproduces_f() {
        let pv = pressure_vessel();
        let result = quick(&pv);
        let text = render_run(
            &pv,
            &result,
            Some(&reference_table(PRESSURE_VESSEL).unwrap()),
            OutputFormat::Text,
        )
        .unwrap();
        let value = |key: &str| -> f64 {
            let line = text.lines().find(|l| l.starts_with(key)).unwrap();
            line.split('=')
                .nth(1)
                .unwrap()
                .split_whitespace()
                .next()
                .unwrap()
                .parse()
                .unwrap()
        };
        let x: Vec<f64> = (1..=4).map(|i| value(&format!("x{i} ="))).collect();
        let f = value("f* =");
        let recomputed = crate::problem::penalized_cost(&pv, &x, &Default::default()).unwrap();
        assert_eq!(f, recomputed);
        assert_eq!(text.lines().filter(|l| l.starts_with('g')).count(), 4);
    }

    #[test]
    fn trace_csv_has_one_row_per_step() {
        let mut records = Vec::new();
        let config = SolverConfig::default().with_max_steps(5).with_seed(2);
        crate::engine::solve_traced(&pressure_vessel(), &config, |r| records.push(*r)).unwrap();
        let text = render_trace(&records).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,best_f,feasible_count"));
        assert_eq!(lines.count(), 6);
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
