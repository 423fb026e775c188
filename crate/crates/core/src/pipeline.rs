//! The repair pipeline.
//!
//! A buggy program first enters the syntax phase: the error-enclosing chunk
//! is extracted, two syntax prompts are issued, generations are merged back
//! into the full program, and the syntax oracle filters the merges. Still
//! broken merges seed the next iteration (bounded). Every syntactically
//! valid candidate then enters the semantic phase: six prompt structures
//! (optionally with few-shot examples) are ensembled, and only generations
//! passing the whole test suite survive. The final answer is the valid
//! candidate with the smallest token edit distance to the original program.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::assignment::Assignment;
use crate::chunk;
use crate::error::Result;
use crate::fewshot;
use crate::gateway::{self, CompletionBackend, GenParams};
use crate::oracle::Interpreter;
use crate::prompt::{self, Sections};
use crate::token::token_edit_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Syntax,
    Semantic,
}

/// A generated (or passed-through) full program with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub source: String,
    pub phase: Phase,
    /// Which prompt produced it: `syntax-plain`, `syntax-with-diagnostic`,
    /// a semantic structure label, or `input` for the original program.
    pub prompt_structure: String,
    pub mean_logprob: Option<f64>,
    pub iteration: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairStatus {
    /// The returned program passes the whole test suite.
    Repaired,
    /// A syntactically valid program was produced but none passed all tests.
    SyntaxFixedOnly,
    /// No syntactically valid candidate was found at all.
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairResult {
    pub status: RepairStatus,
    pub program: Option<String>,
    /// Token edit distance from `program` to the original student program.
    pub ted: Option<usize>,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub phase: Phase,
    pub iteration: u32,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    PromptIssued {
        kind: String,
        digest: String,
        generations: usize,
    },
    CandidateKept {
        digest: String,
        reason: String,
    },
    CandidateDiscarded {
        digest: String,
        reason: String,
    },
    Note {
        text: String,
    },
}

impl TraceEntry {
    pub fn describe(&self) -> String {
        match &self.event {
            TraceEvent::PromptIssued {
                kind,
                digest,
                generations,
            } => format!(
                "[{:?} #{}] prompt {kind} ({}) -> {generations} generation(s)",
                self.phase,
                self.iteration,
                &digest[..12.min(digest.len())]
            ),
            TraceEvent::CandidateKept { digest, reason } => format!(
                "[{:?} #{}] kept {digest}: {reason}",
                self.phase, self.iteration
            ),
            TraceEvent::CandidateDiscarded { digest, reason } => format!(
                "[{:?} #{}] discarded {digest}: {reason}",
                self.phase, self.iteration
            ),
            TraceEvent::Note { text } => {
                format!("[{:?} #{}] {text}", self.phase, self.iteration)
            }
        }
    }
}

/// Pipeline toggles. The defaults are the full configuration; the ablation
/// harness flips individual switches.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub use_few_shot: bool,
    pub use_chunking: bool,
    /// When off, the syntax phase runs a single round regardless of
    /// `max_syntax_iterations`.
    pub use_iterative: bool,
    pub max_syntax_iterations: u32,
    pub prompt_structures: Vec<Sections>,
    pub gen_params: GenParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            use_few_shot: false,
            use_chunking: true,
            use_iterative: true,
            max_syntax_iterations: 2,
            prompt_structures: Sections::all_six().to_vec(),
            gen_params: GenParams::default(),
        }
    }
}

impl PipelineConfig {
    fn effective_syntax_iterations(&self) -> u32 {
        if self.use_iterative {
            self.max_syntax_iterations.max(1)
        } else {
            1
        }
    }
}

/// Ties the oracles and a completion backend together.
pub struct Engine<'a> {
    pub interpreter: &'a Interpreter,
    pub backend: &'a dyn CompletionBackend,
}

/// Candidates selected per phase, ranked by mean token log probability.
const TOP_CANDIDATES_PER_PHASE: usize = 10;

fn short_digest(source: &str) -> String {
    gateway::prompt_digest(source)[..12].to_string()
}

impl<'a> Engine<'a> {
    pub fn new(interpreter: &'a Interpreter, backend: &'a dyn CompletionBackend) -> Engine<'a> {
        Engine {
            interpreter,
            backend,
        }
    }

    /// Repairs a student program against an assignment.
    pub fn repair(
        &self,
        program: &str,
        assignment: &Assignment,
        config: &PipelineConfig,
    ) -> Result<RepairResult> {
        self.repair_excluding(program, assignment, config, None)
    }

    /// Like [`Engine::repair`], additionally excluding one student's
    /// history from the few-shot bank — the benchmark harness passes the
    /// author of the program under repair so no self-examples leak in.
    pub fn repair_excluding(
        &self,
        program: &str,
        assignment: &Assignment,
        config: &PipelineConfig,
        exclude_student: Option<&str>,
    ) -> Result<RepairResult> {
        let mut trace = Vec::new();
        match self.repair_inner(program, assignment, config, exclude_student, &mut trace) {
            Ok((status, best)) => {
                let (program_out, ted) = match best {
                    Some(candidate) => {
                        let ted = token_edit_distance(&candidate.source, program);
                        (Some(candidate.source), Some(ted))
                    }
                    None => (None, None),
                };
                Ok(RepairResult {
                    status,
                    program: program_out,
                    ted,
                    trace,
                })
            }
            Err(err) => Err(err.aborted(trace)),
        }
    }

    fn repair_inner(
        &self,
        program: &str,
        assignment: &Assignment,
        config: &PipelineConfig,
        exclude_student: Option<&str>,
        trace: &mut Vec<TraceEntry>,
    ) -> Result<(RepairStatus, Option<Candidate>)> {
        let syntactic: Vec<Candidate> = if self.interpreter.passes_syntax(program)? {
            trace.push(TraceEntry {
                phase: Phase::Syntax,
                iteration: 0,
                event: TraceEvent::Note {
                    text: "input already passes the syntax oracle".to_string(),
                },
            });
            vec![Candidate {
                source: program.to_string(),
                phase: Phase::Syntax,
                prompt_structure: "input".to_string(),
                mean_logprob: None,
                iteration: 0,
            }]
        } else {
            self.syntax_phase(program, config, trace)?
        };

        if syntactic.is_empty() {
            return Ok((RepairStatus::Failed, None));
        }

        let valid = self.semantic_phase(
            syntactic.clone(),
            assignment,
            config,
            exclude_student,
            trace,
        )?;

        if valid.is_empty() {
            let (best, _) = select_final(&syntactic, program);
            return Ok((RepairStatus::SyntaxFixedOnly, Some(best.clone())));
        }
        let (best, _) = select_final(&valid, program);
        Ok((RepairStatus::Repaired, Some(best.clone())))
    }

    /// Iteratively removes syntax errors.
    ///
    /// Each iteration chunks the current program at its first diagnostic,
    /// issues the two syntax prompts, merges extracted fixes back into the
    /// full program, and keeps syntactically valid merges. When no merge is
    /// valid yet, the highest-ranked still-broken merge seeds the next
    /// iteration, which targets errors the first round could not see.
    pub fn syntax_phase(
        &self,
        program: &str,
        config: &PipelineConfig,
        trace: &mut Vec<TraceEntry>,
    ) -> Result<Vec<Candidate>> {
        let mut current = program.to_string();
        let mut valid: Vec<Candidate> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();

        for iteration in 1..=config.effective_syntax_iterations() {
            let Some(diag) = self.interpreter.check_syntax(&current)? else {
                break; // the seed is valid; nothing left to repair
            };
            let chunk = if config.use_chunking {
                chunk::chunk(&current, &diag)
            } else {
                chunk::whole_file_chunk(&current)
            };

            let mut invalid: Vec<Candidate> = Vec::new();
            for prompt in prompt::syntax_prompts(&chunk, &diag) {
                let kind = match prompt.kind {
                    prompt::PromptKind::SyntaxPlain => "syntax-plain",
                    prompt::PromptKind::SyntaxWithDiagnostic => "syntax-with-diagnostic",
                    prompt::PromptKind::Semantic => "semantic",
                };
                let generations = self.backend.complete(&prompt, &config.gen_params)?;
                trace.push(TraceEntry {
                    phase: Phase::Syntax,
                    iteration,
                    event: TraceEvent::PromptIssued {
                        kind: kind.to_string(),
                        digest: gateway::prompt_digest(&prompt.text),
                        generations: generations.len(),
                    },
                });

                let ranked = gateway::top_k_by_logprob(&generations, TOP_CANDIDATES_PER_PHASE);
                for gen in &ranked {
                    let Some(code) = gateway::extract_code(gen, &config.gen_params) else {
                        trace.push(TraceEntry {
                            phase: Phase::Syntax,
                            iteration,
                            event: TraceEvent::CandidateDiscarded {
                                digest: short_digest(&gen.text),
                                reason: "empty generation".to_string(),
                            },
                        });
                        continue;
                    };
                    let merged = chunk::merge_chunk(&current, &chunk, &code);
                    let digest = short_digest(&merged);
                    if !seen.insert(merged.clone()) {
                        trace.push(TraceEntry {
                            phase: Phase::Syntax,
                            iteration,
                            event: TraceEvent::CandidateDiscarded {
                                digest,
                                reason: "duplicate".to_string(),
                            },
                        });
                        continue;
                    }
                    let candidate = Candidate {
                        source: merged.clone(),
                        phase: Phase::Syntax,
                        prompt_structure: kind.to_string(),
                        mean_logprob: gen.mean_logprob,
                        iteration,
                    };
                    if self.interpreter.passes_syntax(&merged)? {
                        trace.push(TraceEntry {
                            phase: Phase::Syntax,
                            iteration,
                            event: TraceEvent::CandidateKept {
                                digest,
                                reason: "passes the syntax oracle".to_string(),
                            },
                        });
                        valid.push(candidate);
                    } else {
                        trace.push(TraceEntry {
                            phase: Phase::Syntax,
                            iteration,
                            event: TraceEvent::CandidateDiscarded {
                                digest,
                                reason: "syntax oracle rejected".to_string(),
                            },
                        });
                        invalid.push(candidate);
                    }
                }
            }

            if !valid.is_empty() {
                break; // candidates are ready for the semantic phase
            }
            let Some(next) = rank_candidates(invalid).into_iter().next() else {
                break; // nothing to iterate on
            };
            current = next.source;
        }

        let mut valid = rank_candidates(valid);
        valid.truncate(TOP_CANDIDATES_PER_PHASE);
        Ok(valid)
    }

    /// Validates candidates against the test suite and ensembles semantic
    /// prompts for those that fail, keeping only generations that pass
    /// every test. A candidate that already passes bypasses generation
    /// entirely.
    pub fn semantic_phase(
        &self,
        candidates: Vec<Candidate>,
        assignment: &Assignment,
        config: &PipelineConfig,
        exclude_student: Option<&str>,
        trace: &mut Vec<TraceEntry>,
    ) -> Result<Vec<Candidate>> {
        let bank = if config.use_few_shot {
            let full = fewshot::build_bank(assignment, self.interpreter)?;
            let filtered: Vec<_> = full
                .into_iter()
                .filter(|entry| Some(entry.student.as_str()) != exclude_student)
                .collect();
            trace.push(TraceEntry {
                phase: Phase::Semantic,
                iteration: 0,
                event: TraceEvent::Note {
                    text: format!("few-shot bank holds {} pair(s)", filtered.len()),
                },
            });
            filtered
        } else {
            Vec::new()
        };

        let mut seen: BTreeSet<String> = candidates.iter().map(|c| c.source.clone()).collect();
        let mut valid: Vec<Candidate> = Vec::new();

        for candidate in candidates {
            let report = self
                .interpreter
                .run_tests(&candidate.source, &assignment.tests)?;
            if report.all_pass() {
                trace.push(TraceEntry {
                    phase: Phase::Semantic,
                    iteration: candidate.iteration,
                    event: TraceEvent::CandidateKept {
                        digest: short_digest(&candidate.source),
                        reason: "already passes all tests".to_string(),
                    },
                });
                valid.push(candidate);
                continue;
            }

            // Shots are selected on this candidate's failure vector; a pair
            // whose incorrect program IS the program under repair would be
            // an answer key, not an example.
            let shots = if bank.is_empty() {
                Vec::new()
            } else {
                let usable: Vec<_> = bank
                    .iter()
                    .filter(|e| e.pair.incorrect != candidate.source)
                    .cloned()
                    .collect();
                fewshot::select_shots(&usable, &report.vector, fewshot::DEFAULT_SHOTS)
            };

            for sections in &config.prompt_structures {
                let prompt = prompt::render_semantic(
                    &candidate.source,
                    assignment,
                    &shots,
                    Some(&report),
                    *sections,
                );
                let generations = self.backend.complete(&prompt, &config.gen_params)?;
                trace.push(TraceEntry {
                    phase: Phase::Semantic,
                    iteration: candidate.iteration,
                    event: TraceEvent::PromptIssued {
                        kind: prompt.structure.label(),
                        digest: gateway::prompt_digest(&prompt.text),
                        generations: generations.len(),
                    },
                });

                let ranked = gateway::top_k_by_logprob(&generations, TOP_CANDIDATES_PER_PHASE);
                for gen in &ranked {
                    let Some(mut code) = gateway::extract_code(gen, &config.gen_params) else {
                        trace.push(TraceEntry {
                            phase: Phase::Semantic,
                            iteration: candidate.iteration,
                            event: TraceEvent::CandidateDiscarded {
                                digest: short_digest(&gen.text),
                                reason: "empty generation".to_string(),
                            },
                        });
                        continue;
                    };
                    // Keep the input's trailing-newline convention so a
                    // stripped generation is not charged a phantom edit.
                    if candidate.source.ends_with('\n') && !code.ends_with('\n') {
                        code.push('\n');
                    }
                    let digest = short_digest(&code);
                    if !seen.insert(code.clone()) {
                        trace.push(TraceEntry {
                            phase: Phase::Semantic,
                            iteration: candidate.iteration,
                            event: TraceEvent::CandidateDiscarded {
                                digest,
                                reason: "duplicate".to_string(),
                            },
                        });
                        continue;
                    }
                    // Generations that do not even parse are filtered here
                    // rather than recursed into the syntax phase.
                    if !self.interpreter.passes_syntax(&code)? {
                        trace.push(TraceEntry {
                            phase: Phase::Semantic,
                            iteration: candidate.iteration,
                            event: TraceEvent::CandidateDiscarded {
                                digest,
                                reason: "syntax oracle rejected".to_string(),
                            },
                        });
                        continue;
                    }
                    let gen_report = self.interpreter.run_tests(&code, &assignment.tests)?;
                    if gen_report.all_pass() {
                        trace.push(TraceEntry {
                            phase: Phase::Semantic,
                            iteration: candidate.iteration,
                            event: TraceEvent::CandidateKept {
                                digest,
                                reason: "passes all tests".to_string(),
                            },
                        });
                        valid.push(Candidate {
                            source: code,
                            phase: Phase::Semantic,
                            prompt_structure: prompt.structure.label(),
                            mean_logprob: gen.mean_logprob,
                            iteration: candidate.iteration,
                        });
                    } else {
                        let reason = if gen_report
                            .per_test
                            .iter()
                            .any(|t| t.status == crate::oracle::TestStatus::RuntimeException)
                        {
                            "runtime exception".to_string()
                        } else {
                            format!(
                                "failed {} of {} tests",
                                gen_report.vector.failure_count(),
                                gen_report.vector.len()
                            )
                        };
                        trace.push(TraceEntry {
                            phase: Phase::Semantic,
                            iteration: candidate.iteration,
                            event: TraceEvent::CandidateDiscarded { digest, reason },
                        });
                    }
                }
            }
        }
        Ok(valid)
    }
}

/// Orders candidates by mean log probability (highest first, unscored
/// last), preserving insertion order on ties.
fn rank_candidates(mut candidates: Vec<Candidate>) -> Vec<Candidate> {
    candidates.sort_by(|a, b| match (a.mean_logprob, b.mean_logprob) {
        (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Equal),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    candidates
}

/// Picks the valid candidate with the smallest token edit distance to the
/// original program; ties break on higher mean log probability, then on
/// stable generation order. Panics on an empty slice (callers guarantee at
/// least one candidate).
pub fn select_final<'c>(valid: &'c [Candidate], original: &str) -> (&'c Candidate, usize) {
    assert!(
        !valid.is_empty(),
        "select_final needs at least one candidate"
    );
    let mut best_idx = 0;
    let mut best_ted = usize::MAX;
    for (idx, candidate) in valid.iter().enumerate() {
        let ted = token_edit_distance(&candidate.source, original);
        let better = ted < best_ted
            || (ted == best_ted && candidate.mean_logprob > valid[best_idx].mean_logprob);
        if better {
            best_idx = idx;
            best_ted = ted;
        }
    }
    (&valid[best_idx], best_ted)
}
