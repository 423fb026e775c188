//! Benchmark harness.
//!
//! A dataset is a directory of assignments plus a `manifest.csv` naming the
//! buggy target version and the ground-truth correct version for each
//! student:
//!
//! ```text
//! dataset/
//!   manifest.csv               assignment,student,buggy,correct
//!   <assignment>/...           standard assignment layout
//! ```
//!
//! The harness repairs every target, reports per-assignment repair rate and
//! mean/SD token edit distance (over repaired programs only), and can rerun
//! the pipeline with individual design choices disabled for side-by-side
//! comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::assignment::{load_assignment, Assignment};
use crate::error::{Error, Result};
use crate::pipeline::{Engine, PipelineConfig, RepairStatus};
use crate::prompt::Sections;

/// One manifest row: which version of a student's history to repair and
/// which later version is the ground-truth fix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchTarget {
    pub assignment_id: String,
    pub student: String,
    pub buggy_ordinal: u32,
    pub correct_ordinal: u32,
}

/// Result of one repair attempt in a benchmark run.
#[derive(Debug, Clone, Serialize)]
pub struct TargetOutcome {
    pub assignment_id: String,
    pub student: String,
    pub status: RepairStatus,
    pub ted: Option<usize>,
    /// Populated when the run aborted (backend or environment failure);
    /// such targets count as not repaired rather than killing the run.
    pub error: Option<String>,
}

impl TargetOutcome {
    pub fn repaired(&self) -> bool {
        self.status == RepairStatus::Repaired && self.error.is_none()
    }
}

/// Per-assignment aggregate row.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub assignment_id: String,
    pub submissions: usize,
    pub repaired: usize,
    /// Percentage in `[0, 100]`.
    pub repair_rate: f64,
    /// Mean/SD of token edit distance over repaired programs only; `None`
    /// when nothing was repaired (rendered as `N/A`).
    pub mean_ted: Option<f64>,
    pub sd_ted: Option<f64>,
}

impl BenchRecord {
    /// `12.50 (0.50)` or `N/A`, mirroring the usual results-table format.
    pub fn ted_cell(&self) -> String {
        match (self.mean_ted, self.sd_ted) {
            (Some(mean), Some(sd)) => format!("{mean:.2} ({sd:.2})"),
            _ => "N/A".to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    /// Aggregated across all programs, not averaged over assignment rows.
    pub overall: BenchRecord,
    pub outcomes: Vec<TargetOutcome>,
}

pub fn load_manifest(dataset_dir: &Path) -> Result<Vec<BenchTarget>> {
    let path = dataset_dir.join("manifest.csv");
    let bad = |reason: String| Error::BadFile {
        path: path.clone(),
        reason,
    };
    let data =
        std::fs::read_to_string(&path).map_err(|e| bad(format!("cannot read manifest: {e}")))?;
    let mut targets = Vec::new();
    for (lineno, line) in data.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("assignment")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad(format!("line {}: expected 4 fields", lineno + 1)));
        }
        let parse = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| bad(format!("line {}: bad ordinal `{s}`", lineno + 1)))
        };
        targets.push(BenchTarget {
            assignment_id: fields[0].to_string(),
            student: fields[1].to_string(),
            buggy_ordinal: parse(fields[2])?,
            correct_ordinal: parse(fields[3])?,
        });
    }
    if targets.is_empty() {
        return Err(bad("manifest has no targets".to_string()));
    }
    Ok(targets)
}

/// Repairs every manifest target and aggregates the outcomes.
pub fn run_benchmark(
    engine: &Engine,
    dataset_dir: &Path,
    config: &PipelineConfig,
) -> Result<BenchReport> {
    let targets = load_manifest(dataset_dir)?;
    let mut assignments: BTreeMap<String, Assignment> = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(targets.len());

    for target in &targets {
        if !assignments.contains_key(&target.assignment_id) {
            let assignment = load_assignment(&dataset_dir.join(&target.assignment_id))?;
            assignments.insert(target.assignment_id.clone(), assignment);
        }
        let assignment = &assignments[&target.assignment_id];

        let program = assignment
            .histories
            .get(&target.student)
            .and_then(|versions| versions.iter().find(|v| v.ordinal == target.buggy_ordinal))
            .map(|v| v.source.clone());

        let outcome = match program {
            None => TargetOutcome {
                assignment_id: target.assignment_id.clone(),
                student: target.student.clone(),
                status: RepairStatus::Failed,
                ted: None,
                error: Some(format!(
                    "history {} has no version {}",
                    target.student, target.buggy_ordinal
                )),
            },
            Some(program) => {
                match engine.repair_excluding(&program, assignment, config, Some(&target.student)) {
                    Ok(result) => TargetOutcome {
                        assignment_id: target.assignment_id.clone(),
                        student: target.student.clone(),
                        status: result.status,
                        ted: result.ted,
                        error: None,
                    },
                    Err(err) => TargetOutcome {
                        assignment_id: target.assignment_id.clone(),
                        student: target.student.clone(),
                        status: RepairStatus::Failed,
                        ted: None,
                        error: Some(err.to_string()),
                    },
                }
            }
        };
        outcomes.push(outcome);
    }

    let (records, overall) = aggregate(&outcomes);
    Ok(BenchReport {
        records,
        overall,
        outcomes,
    })
}

/// Pure aggregation over target outcomes, grouped by assignment in order
/// of first appearance. Mean/SD use the repaired programs' edit distances;
/// SD is the population form, so a single repaired program reads `0.00`.
pub fn aggregate(outcomes: &[TargetOutcome]) -> (Vec<BenchRecord>, BenchRecord) {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&TargetOutcome>> = BTreeMap::new();
    for outcome in outcomes {
        if !groups.contains_key(outcome.assignment_id.as_str()) {
            order.push(&outcome.assignment_id);
        }
        groups
            .entry(outcome.assignment_id.as_str())
            .or_default()
            .push(outcome);
    }

    let record_for = |id: &str, group: &[&TargetOutcome]| {
        let submissions = group.len();
        let teds: Vec<usize> = group
            .iter()
            .filter(|o| o.repaired())
            .filter_map(|o| o.ted)
            .collect();
        let repaired = group.iter().filter(|o| o.repaired()).count();
        let (mean, sd) = mean_sd(&teds);
        BenchRecord {
            assignment_id: id.to_string(),
            submissions,
            repaired,
            repair_rate: if submissions == 0 {
                0.0
            } else {
                repaired as f64 / submissions as f64 * 100.0
            },
            mean_ted: mean,
            sd_ted: sd,
        }
    };

    let records: Vec<BenchRecord> = order.iter().map(|id| record_for(id, &groups[id])).collect();
    let all: Vec<&TargetOutcome> = outcomes.iter().collect();
    let overall = record_for("Overall", &all);
    (records, overall)
}

fn mean_sd(values: &[usize]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<usize>() as f64 / n;
    let var = values
        .iter()
        .map(|&v| (v as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    (Some(mean), Some(var.sqrt()))
}

/// Human-readable results table.
pub fn render_table(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>12} {:>16} {:>18}",
        "Assignment", "Submissions", "Repair rate (%)", "Mean TED (SD)"
    );
    for record in report
        .records
        .iter()
        .chain(std::iter::once(&report.overall))
    {
        let _ = writeln!(
            out,
            "{:<20} {:>12} {:>16.2} {:>18}",
            record.assignment_id,
            record.submissions,
            record.repair_rate,
            record.ted_cell()
        );
    }
    out
}

/// Comma-separated form of the same report.
pub fn render_csv(report: &BenchReport) -> String {
    let mut out = String::from("assignment,submissions,repaired,repair_rate,mean_ted,sd_ted\n");
    for record in report
        .records
        .iter()
        .chain(std::iter::once(&report.overall))
    {
        let fmt = |v: Option<f64>| v.map_or("N/A".to_string(), |x| format!("{x:.2}"));
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{},{}",
            record.assignment_id,
            record.submissions,
            record.repaired,
            record.repair_rate,
            fmt(record.mean_ted),
            fmt(record.sd_ted)
        );
    }
    out
}

/// Which design choice an ablation run disables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    NoChunking,
    NoIterative,
    ZeroShot,
    /// One run per prompt structure plus the full ensemble.
    SingleStructure,
}

impl AblationMode {
    pub fn parse(s: &str) -> Option<AblationMode> {
        match s {
            "no-chunking" => Some(AblationMode::NoChunking),
            "no-iterative" => Some(AblationMode::NoIterative),
            "zero-shot" => Some(AblationMode::ZeroShot),
            "single-structure" | "single-structures" => Some(AblationMode::SingleStructure),
            _ => None,
        }
    }
}

/// Labeled benchmark runs for side-by-side comparison.
#[derive(Debug, Serialize)]
pub struct AblationReport {
    pub columns: Vec<(String, BenchReport)>,
}

/// Runs the full configuration next to the ablated one (or, for
/// single-structure mode, one run per prompt structure plus the ensemble).
pub fn run_ablation(
    engine: &Engine,
    dataset_dir: &Path,
    mode: AblationMode,
    base: &PipelineConfig,
) -> Result<AblationReport> {
    let mut columns = Vec::new();
    match mode {
        AblationMode::SingleStructure => {
            for sections in Sections::all_six() {
                let config = PipelineConfig {
                    prompt_structures: vec![sections],
                    ..base.clone()
                };
                columns.push((
                    sections.label(),
                    run_benchmark(engine, dataset_dir, &config)?,
                ));
            }
            let ensemble = PipelineConfig {
                prompt_structures: Sections::all_six().to_vec(),
                ..base.clone()
            };
            columns.push((
                "ensemble".to_string(),
                run_benchmark(engine, dataset_dir, &ensemble)?,
            ));
        }
        AblationMode::NoChunking | AblationMode::NoIterative | AblationMode::ZeroShot => {
            let mut full = base.clone();
            let mut ablated = base.clone();
            let (full_label, ablated_label) = match mode {
                AblationMode::NoChunking => {
                    full.use_chunking = true;
                    ablated.use_chunking = false;
                    ("with-chunking", "no-chunking")
                }
                AblationMode::NoIterative => {
                    full.use_iterative = true;
                    ablated.use_iterative = false;
                    ("with-iterative", "no-iterative")
                }
                AblationMode::ZeroShot => {
                    full.use_few_shot = true;
                    ablated.use_few_shot = false;
                    ("few-shot", "zero-shot")
                }
                AblationMode::SingleStructure => unreachable!(),
            };
            columns.push((
                full_label.to_string(),
                run_benchmark(engine, dataset_dir, &full)?,
            ));
            columns.push((
                ablated_label.to_string(),
                run_benchmark(engine, dataset_dir, &ablated)?,
            ));
        }
    }
    Ok(AblationReport { columns })
}

/// Side-by-side table: one block of columns per run.
pub fn render_ablation_table(report: &AblationReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<20}", "Assignment");
    for (label, _) in &report.columns {
        let _ = write!(
            out,
            " | {:>16} {:>18}",
            format!("{label} RR(%)"),
            "Mean TED (SD)"
        );
    }
    out.push('\n');

    let row_ids: Vec<String> = report
        .columns
        .first()
        .map(|(_, r)| {
            r.records
                .iter()
                .map(|rec| rec.assignment_id.clone())
                .chain(std::iter::once("Overall".to_string()))
                .collect()
        })
        .unwrap_or_default();

    for id in &row_ids {
        let _ = write!(out, "{id:<20}");
        for (_, bench) in &report.columns {
            let record = if id == "Overall" {
                &bench.overall
            } else {
                bench
                    .records
                    .iter()
                    .find(|r| &r.assignment_id == id)
                    .unwrap_or(&bench.overall)
            };
            let _ = write!(
                out,
                " | {:>16.2} {:>18}",
                record.repair_rate,
                record.ted_cell()
            );
        }
        out.push('\n');
    }
    out
}
