//! Prompt rendering.
//!
//! Two syntax variants (with and without the interpreter's error message),
//! six semantic structures over {program, diagnostics, description, tests},
//! and few-shot blocks. Rendering is pure: identical inputs produce
//! byte-identical text, and the golden files under `tests/golden/` pin the
//! exact layout — changing anything here is a breaking change gated by the
//! golden tests. Student code is always embedded verbatim.

use serde::Serialize;

use crate::assignment::Assignment;
use crate::chunk::Chunk;
use crate::oracle::{Diagnostic, TestReport, TestStatus};

/// Instruction line opening every syntax prompt.
pub const SYNTAX_INSTRUCTION: &str = "# Fix the syntax error of the program #";
/// Completion trailer for syntax prompts.
pub const SYNTAX_TRAILER: &str = "# Correct Program #";
/// Completion trailer for semantic prompts.
pub const SEMANTIC_TRAILER: &str = "### Correct Program ###";
/// Test cases included in a prompt are capped to keep prompts short.
pub const MAX_PROMPT_TESTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    SyntaxPlain,
    SyntaxWithDiagnostic,
    Semantic,
}

/// Which information blocks a semantic prompt carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Sections {
    pub program: bool,
    pub diagnostics: bool,
    pub description: bool,
    pub tests: bool,
}

impl Sections {
    const fn new(diagnostics: bool, description: bool, tests: bool) -> Sections {
        Sections {
            program: true,
            diagnostics,
            description,
            tests,
        }
    }

    /// The six ensembled semantic structures, in a fixed order.
    pub fn all_six() -> [Sections; 6] {
        [
            Sections::new(false, false, false),
            Sections::new(true, false, false),
            Sections::new(false, true, false),
            Sections::new(true, true, false),
            Sections::new(true, true, true),
            Sections::new(true, false, true),
        ]
    }

    pub fn label(&self) -> String {
        let mut parts = vec!["program"];
        if self.diagnostics {
            parts.push("diagnostics");
        }
        if self.description {
            parts.push("description");
        }
        if self.tests {
            parts.push("tests");
        }
        parts.join("+")
    }

    /// Parses a `program+diagnostics+tests` style label.
    pub fn parse(label: &str) -> Option<Sections> {
        let mut sections = Sections::default();
        for part in label.split('+') {
            match part.trim() {
                "program" => sections.program = true,
                "diagnostics" => sections.diagnostics = true,
                "description" => sections.description = true,
                "tests" => sections.tests = true,
                _ => return None,
            }
        }
        sections.program.then_some(sections)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Prompt {
    pub text: String,
    pub kind: PromptKind,
    /// Blocks actually present in the text (an unavailable block is
    /// dropped and not recorded).
    pub structure: Sections,
    /// Example pairs included ahead of the buggy program.
    pub shots: usize,
}

/// One worked example: a peer's incorrect program and its eventual fix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExamplePair {
    pub incorrect: String,
    pub correct: String,
}

fn body(text: &str) -> &str {
    text.trim_end_matches('\n')
}

/// Renders the two syntax-phase prompts: one with and one without the
/// interpreter's error message.
pub fn syntax_prompts(chunk: &Chunk, diag: &Diagnostic) -> [Prompt; 2] {
    let program_block = format!("# Buggy Program #\n{}", body(&chunk.text()));

    let plain = [
        SYNTAX_INSTRUCTION.to_string(),
        program_block.clone(),
        SYNTAX_TRAILER.to_string(),
    ];
    let raw = body(&diag.raw);
    let message_block = if raw.is_empty() {
        "### Error Msg ###".to_string()
    } else {
        format!("### Error Msg ###\n{raw}")
    };
    let with_diag = [
        SYNTAX_INSTRUCTION.to_string(),
        message_block,
        program_block,
        SYNTAX_TRAILER.to_string(),
    ];

    [
        Prompt {
            text: join_blocks(&plain),
            kind: PromptKind::SyntaxPlain,
            structure: Sections::new(false, false, false),
            shots: 0,
        },
        Prompt {
            text: join_blocks(&with_diag),
            kind: PromptKind::SyntaxWithDiagnostic,
            structure: Sections::new(true, false, false),
            shots: 0,
        },
    ]
}

/// Renders all six semantic structures for a syntactically valid program.
pub fn semantic_prompts(
    program: &str,
    assignment: &Assignment,
    shots: &[ExamplePair],
    report: Option<&TestReport>,
) -> Vec<Prompt> {
    Sections::all_six()
        .iter()
        .map(|sections| render_semantic(program, assignment, shots, report, *sections))
        .collect()
}

/// Renders one semantic prompt with the requested blocks. Blocks that are
/// unavailable (empty description, no failing test to summarize) are
/// omitted and dropped from the recorded structure.
pub fn render_semantic(
    program: &str,
    assignment: &Assignment,
    shots: &[ExamplePair],
    report: Option<&TestReport>,
    sections: Sections,
) -> Prompt {
    let mut blocks: Vec<String> = shots.iter().map(render_shot).collect();
    let mut structure = Sections::new(false, false, false);

    blocks.push(format!("### Buggy Program ###\n{}", body(program)));

    if sections.diagnostics {
        if let Some(summary) = report.and_then(|r| diagnostics_summary(r, assignment)) {
            blocks.push(format!("### Diagnostics ###\n{summary}"));
            structure.diagnostics = true;
        }
    }

    if sections.description && !assignment.description.trim().is_empty() {
        let commented: Vec<String> = body(&assignment.description)
            .split('\n')
            .map(|line| format!("#{line}"))
            .collect();
        blocks.push(commented.join("\n"));
        structure.description = true;
    }

    if sections.tests && !assignment.tests.is_empty() {
        let cases: Vec<String> = assignment
            .tests
            .iter()
            .take(MAX_PROMPT_TESTS)
            .map(|t| {
                format!(
                    "#input:\n{}\n#output:\n{}",
                    body(&t.input),
                    body(&t.expected_output)
                )
            })
            .collect();
        blocks.push(cases.join("\n\n"));
        structure.tests = true;
    }

    blocks.push(SEMANTIC_TRAILER.to_string());

    Prompt {
        text: join_blocks(&blocks),
        kind: PromptKind::Semantic,
        structure,
        shots: shots.len(),
    }
}

/// One few-shot block: the peer's incorrect program and its correction.
pub fn render_shot(pair: &ExamplePair) -> String {
    format!(
        "# Incorrect Program #\n{}\n# Correct Program #\n{}",
        body(&pair.incorrect),
        body(&pair.correct)
    )
}

/// Compact failure summary used as the diagnostics block once syntax
/// diagnostics no longer exist: the first failing test's input, expected
/// output, and what actually happened.
fn diagnostics_summary(report: &TestReport, assignment: &Assignment) -> Option<String> {
    let first_failing = report.vector.0.iter().position(|failed| *failed)?;
    let outcome = &report.per_test[first_failing];
    let test = assignment.tests.get(first_failing)?;
    let actual = match outcome.status {
        TestStatus::RuntimeException => "(runtime exception)".to_string(),
        TestStatus::Timeout => "(timeout)".to_string(),
        _ => body(&outcome.actual_output).to_string(),
    };
    Some(format!(
        "#failed {} of {} tests\n#input:\n{}\n#expected:\n{}\n#actual:\n{}",
        report.vector.failure_count(),
        report.vector.len(),
        body(&test.input),
        body(&test.expected_output),
        actual
    ))
}

/// Blocks are separated by single blank lines; the text ends with the
/// trailer line plus a final newline.
fn join_blocks(blocks: &[String]) -> String {
    let mut text = blocks.join("\n\n");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{TestOutcome, TestVector};
    use std::collections::BTreeMap;

    fn sample_assignment() -> Assignment {
        Assignment {
            id: "reverse_sum".into(),
            description: "Read a number.\nPrint it reversed.".into(),
            tests: vec![
                crate::assignment::TestCase {
                    input: "43\n".into(),
                    expected_output: "34".into(),
                },
                crate::assignment::TestCase {
                    input: "500\n".into(),
                    expected_output: "5".into(),
                },
            ],
            reference_solution: None,
            histories: BTreeMap::new(),
        }
    }

    fn failing_report() -> TestReport {
        TestReport {
            vector: TestVector(vec![true, false]),
            per_test: vec![
                TestOutcome {
                    status: TestStatus::WrongOutput,
                    actual_output: "43\n".into(),
                },
                TestOutcome {
                    status: TestStatus::Pass,
                    actual_output: "5\n".into(),
                },
            ],
        }
    }

    #[test]
    fn always_two_syntax_prompts_ending_in_trailer() {
        let chunk = Chunk {
            start: 0,
            end: 2,
            lines: vec!["while (n > 0):".into(), "a = n".into()],
        };
        let diag = Diagnostic {
            line: 2,
            column: Some(1),
            kind: "indentation-error".into(),
            message: "expected an indented block".into(),
            raw: "  File \"<unknown>\", line 2\n    a = n\n    ^\nIndentationError: expected an indented block\n".into(),
        };
        let prompts = syntax_prompts(&chunk, &diag);
        assert_eq!(prompts.len(), 2);
        for p in &prompts {
            assert!(p.text.starts_with(SYNTAX_INSTRUCTION));
            assert!(p.text.ends_with(&format!("{SYNTAX_TRAILER}\n")));
            assert!(p.text.contains("while (n > 0):\na = n"));
        }
        assert!(prompts[1].text.contains("### Error Msg ###"));
        assert!(prompts[1].text.contains("IndentationError"));
        assert!(!prompts[0].text.contains("Error Msg"));
    }

    #[test]
    fn empty_diagnostic_degenerates_to_plain_plus_empty_block() {
        let chunk = Chunk {
            start: 0,
            end: 1,
            lines: vec!["x = 1".into()],
        };
        let diag = Diagnostic {
            line: 1,
            column: None,
            kind: "syntax-error".into(),
            message: String::new(),
            raw: String::new(),
        };
        let [plain, with_diag] = syntax_prompts(&chunk, &diag);
        assert_eq!(
            with_diag.text,
            plain.text.replace(
                "# Buggy Program #",
                "### Error Msg ###\n\n# Buggy Program #"
            )
        );
    }

    #[test]
    fn always_six_semantic_prompts() {
        let a = sample_assignment();
        let prompts = semantic_prompts("print(1)", &a, &[], Some(&failing_report()));
        assert_eq!(prompts.len(), 6);
        for p in &prompts {
            assert!(p.text.ends_with(&format!("{SEMANTIC_TRAILER}\n")));
            assert!(p.text.contains("### Buggy Program ###\nprint(1)"));
        }
    }

    #[test]
    fn structure_records_only_present_blocks() {
        let mut a = sample_assignment();
        a.description = String::new();
        let p = render_semantic("print(1)", &a, &[], None, Sections::new(true, true, false));
        assert!(!p.structure.description, "empty description dropped");
        assert!(!p.structure.diagnostics, "no report available");
        assert!(!p.text.contains("### Diagnostics ###"));
    }

    #[test]
    fn tests_block_is_capped() {
        let mut a = sample_assignment();
        for i in 0..10 {
            a.tests.push(crate::assignment::TestCase {
                input: format!("{i}\n"),
                expected_output: format!("{i}"),
            });
        }
        let p = render_semantic("print(1)", &a, &[], None, Sections::new(false, false, true));
        assert_eq!(p.text.matches("#input:").count(), MAX_PROMPT_TESTS);
    }

    #[test]
    fn shots_are_prepended_in_order() {
        let a = sample_assignment();
        let shots = vec![
            ExamplePair {
                incorrect: "print (m+n)\n".into(),
                correct: "print (m*n)\n".into(),
            },
            ExamplePair {
                incorrect: "print(0)\n".into(),
                correct: "print(9)\n".into(),
            },
        ];
        let p = render_semantic(
            "print(1)",
            &a,
            &shots,
            None,
            Sections::new(false, false, false),
        );
        assert_eq!(p.shots, 2);
        let first = p.text.find("print (m+n)").unwrap();
        let second = p.text.find("print(0)").unwrap();
        let program = p.text.find("### Buggy Program ###").unwrap();
        assert!(first < second && second < program);
    }

    #[test]
    fn render_shot_matches_block_layout() {
        let pair = ExamplePair {
            incorrect: "print (m+n)\n".into(),
            correct: "print (m*n)\n".into(),
        };
        assert_eq!(
            render_shot(&pair),
            "# Incorrect Program #\nprint (m+n)\n# Correct Program #\nprint (m*n)"
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = sample_assignment();
        let report = failing_report();
        let one = semantic_prompts("x = 1\n", &a, &[], Some(&report));
        let two = semantic_prompts("x = 1\n", &a, &[], Some(&report));
        for (p, q) in one.iter().zip(&two) {
            assert_eq!(p.text, q.text);
        }
    }

    #[test]
    fn structure_labels_round_trip() {
        for sections in Sections::all_six() {
            assert_eq!(Sections::parse(&sections.label()), Some(sections));
        }
        assert_eq!(Sections::parse("nonsense"), None);
    }
}
