//! Few-shot example bank built from peer edit histories.
//!
//! For every peer with an eventually correct version, each earlier
//! syntactically valid but test-failing version is paired with that first
//! correct version. Shots are then retrieved by similarity of test-failure
//! vectors: two programs are similar when they fail the same tests.

use serde::Serialize;

use crate::assignment::Assignment;
use crate::error::Result;
use crate::oracle::{Interpreter, TestVector};
use crate::prompt::ExamplePair;
use crate::token::token_edit_distance;

/// Shots retrieved per query.
pub const DEFAULT_SHOTS: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct BankEntry {
    pub pair: ExamplePair,
    /// Failure vector of the incorrect program.
    pub vector: TestVector,
    pub student: String,
    /// Ordinal of the incorrect version within its history.
    pub ordinal: u32,
}

/// Builds the example bank for an assignment by replaying peer histories
/// against the oracles. Students with no passing version contribute
/// nothing.
pub fn build_bank(assignment: &Assignment, interpreter: &Interpreter) -> Result<Vec<BankEntry>> {
    let mut bank = Vec::new();
    for (student, versions) in &assignment.histories {
        let mut correct: Option<&crate::assignment::ProgramVersion> = None;
        for version in versions {
            if interpreter.passes_syntax(&version.source)?
                && interpreter
                    .run_tests(&version.source, &assignment.tests)?
                    .all_pass()
            {
                correct = Some(version);
                break;
            }
        }
        let Some(correct) = correct else { continue };
        for version in versions.iter().filter(|v| v.ordinal < correct.ordinal) {
            if version.source == correct.source {
                continue;
            }
            if !interpreter.passes_syntax(&version.source)? {
                continue;
            }
            let report = interpreter.run_tests(&version.source, &assignment.tests)?;
            if report.all_pass() {
                continue;
            }
            bank.push(BankEntry {
                pair: ExamplePair {
                    incorrect: version.source.clone(),
                    correct: correct.source.clone(),
                },
                vector: report.vector,
                student: student.clone(),
                ordinal: version.ordinal,
            });
        }
    }
    Ok(bank)
}

/// `1 - hamming(a, b) / n`: the fraction of test positions on which the
/// two programs agree. Panics on a length mismatch, which would mean the
/// vectors came from different test suites.
pub fn similarity(a: &TestVector, b: &TestVector) -> f64 {
    assert_eq!(
        a.len(),
        b.len(),
        "test vectors must come from the same suite"
    );
    let differing = a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count();
    1.0 - differing as f64 / a.len() as f64
}

/// Retrieves the `k` most similar incorrect/correct pairs for a target
/// failure vector, at most one per peer student. Ties break on higher
/// similarity, then smaller edit distance between the pair's programs,
/// then lexicographic student id, so selection is deterministic.
pub fn select_shots(bank: &[BankEntry], target: &TestVector, k: usize) -> Vec<ExamplePair> {
    let mut ranked: Vec<(f64, usize, &BankEntry)> = bank
        .iter()
        .map(|entry| {
            (
                similarity(&entry.vector, target),
                token_edit_distance(&entry.pair.incorrect, &entry.pair.correct),
                entry,
            )
        })
        .collect();
    ranked.sort_by(|(sim_a, ted_a, a), (sim_b, ted_b, b)| {
        sim_b
            .partial_cmp(sim_a)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ted_a.cmp(ted_b))
            .then(a.student.cmp(&b.student))
            .then(a.ordinal.cmp(&b.ordinal))
    });

    let mut seen_students = std::collections::BTreeSet::new();
    let mut shots = Vec::with_capacity(k);
    for (_, _, entry) in ranked {
        if shots.len() == k {
            break;
        }
        if seen_students.insert(entry.student.clone()) {
            shots.push(entry.pair.clone());
        }
    }
    shots
}
