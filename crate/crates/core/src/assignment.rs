//! On-disk assignment store.
//!
//! Layout:
//!
//! ```text
//! assignment/
//!   description.txt          task statement (required)
//!   reference.py             instructor solution (optional)
//!   tests/<stem>.in|.out     paired test files, ordered by stem
//!   history/<student>/vNN.py ordered edit versions, ordinal = numeric suffix
//! ```
//!
//! All files are UTF-8 text. Test order is fixed by sorting stems
//! lexicographically so test vectors stay comparable across programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{normalize, Interpreter};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestCase {
    /// Fed to the program's standard input verbatim.
    pub input: String,
    /// Expected standard output, stored normalized.
    pub expected_output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProgramVersion {
    pub source: String,
    /// Position in the student's edit history.
    pub ordinal: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub id: String,
    pub description: String,
    pub tests: Vec<TestCase>,
    /// Used only by the benchmark harness, never by the repair pipeline.
    pub reference_solution: Option<String>,
    pub histories: BTreeMap<String, Vec<ProgramVersion>>,
}

fn load_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Loads an assignment directory. Deterministic for a fixed tree.
pub fn load_assignment(path: &Path) -> Result<Assignment> {
    if !path.is_dir() {
        return Err(load_err(path, "not a directory"));
    }
    let id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "assignment".to_string());

    let description_path = path.join("description.txt");
    let description = fs::read_to_string(&description_path)
        .map_err(|_| load_err(path, "missing description (description.txt)"))?;

    let tests = load_tests(&path.join("tests"))?;
    if tests.is_empty() {
        return Err(load_err(path, "empty test suite"));
    }

    let reference_solution = match fs::read_to_string(path.join("reference.py")) {
        Ok(text) => Some(text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };

    let histories = load_histories(&path.join("history"))?;

    Ok(Assignment {
        id,
        description,
        tests,
        reference_solution,
        histories,
    })
}

fn load_tests(dir: &Path) -> Result<Vec<TestCase>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut ins = BTreeSet::new();
    let mut outs = BTreeSet::new();
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        let (Some(stem), Some(ext)) = (p.file_stem(), p.extension()) else {
            continue;
        };
        let stem = stem.to_string_lossy().into_owned();
        match ext.to_string_lossy().as_ref() {
            "in" => {
                ins.insert(stem);
            }
            "out" => {
                outs.insert(stem);
            }
            _ => {}
        }
    }
    if let Some(stem) = ins.symmetric_difference(&outs).next() {
        return Err(load_err(
            dir,
            format!("unpaired test file for stem `{stem}`"),
        ));
    }
    let mut tests = Vec::with_capacity(ins.len());
    for stem in &ins {
        let input = fs::read_to_string(dir.join(format!("{stem}.in")))?;
        let expected = fs::read_to_string(dir.join(format!("{stem}.out")))?;
        tests.push(TestCase {
            input,
            expected_output: normalize(&expected),
        });
    }
    Ok(tests)
}

fn load_histories(dir: &Path) -> Result<BTreeMap<String, Vec<ProgramVersion>>> {
    let mut histories = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(histories);
    }
    for entry in fs::read_dir(dir)? {
        let student_dir = entry?.path();
        if !student_dir.is_dir() {
            continue;
        }
        let student = student_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut versions = Vec::new();
        for file in fs::read_dir(&student_dir)? {
            let p = file?.path();
            if p.extension().is_none_or(|e| e != "py") {
                continue;
            }
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let digits: String = stem
                .chars()
                .rev()
                .take_while(|c| c.is_ascii_digit())
                .collect::<String>()
                .chars()
                .rev()
                .collect();
            let ordinal: u32 = digits
                .parse()
                .map_err(|_| load_err(&p, "history file has no numeric suffix"))?;
            versions.push(ProgramVersion {
                source: fs::read_to_string(&p)?,
                ordinal,
            });
        }
        versions.sort_by_key(|v| v.ordinal);
        if versions.windows(2).any(|w| w[0].ordinal == w[1].ordinal) {
            return Err(load_err(&student_dir, "duplicate version ordinal"));
        }
        if !versions.is_empty() {
            histories.insert(student, versions);
        }
    }
    Ok(histories)
}

/// Writes an assignment back to the layout. Reloading the written tree
/// yields an equal value (stems are regenerated as `tNN`).
pub fn save_assignment(dir: &Path, assignment: &Assignment) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("description.txt"), &assignment.description)?;
    if let Some(reference) = &assignment.reference_solution {
        fs::write(dir.join("reference.py"), reference)?;
    }
    let tests_dir = dir.join("tests");
    fs::create_dir_all(&tests_dir)?;
    for (i, test) in assignment.tests.iter().enumerate() {
        fs::write(tests_dir.join(format!("t{i:02}.in")), &test.input)?;
        fs::write(
            tests_dir.join(format!("t{i:02}.out")),
            &test.expected_output,
        )?;
    }
    for (student, versions) in &assignment.histories {
        let student_dir = dir.join("history").join(student);
        fs::create_dir_all(&student_dir)?;
        for version in versions {
            fs::write(
                student_dir.join(format!("v{:02}.py", version.ordinal)),
                &version.source,
            )?;
        }
    }
    Ok(())
}

/// Sanity-checks an assignment, returning human-readable warnings. Nothing
/// here is fatal; a warning-free assignment is simply more useful to the
/// pipeline.
pub fn validate(assignment: &Assignment, interpreter: &Interpreter) -> Result<Vec<String>> {
    let mut warnings = Vec::new();

    if assignment.histories.is_empty() {
        warnings.push("few-shot unavailable: assignment has no peer histories".to_string());
    }

    for i in 0..assignment.tests.len() {
        for j in i + 1..assignment.tests.len() {
            if assignment.tests[i].input == assignment.tests[j].input {
                warnings.push(format!(
                    "duplicate test: cases {i} and {j} have identical input"
                ));
            }
        }
    }

    if let Some(reference) = &assignment.reference_solution {
        if interpreter.check_syntax(reference)?.is_some() {
            warnings.push("reference solution fails the syntax oracle".to_string());
        } else {
            let report = interpreter.run_tests(reference, &assignment.tests)?;
            let failing = report.vector.failure_count();
            if failing > 0 {
                warnings.push(format!(
                    "reference solution fails its own tests ({failing} of {} failing)",
                    assignment.tests.len()
                ));
            }
        }
    }

    Ok(warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, content: &str) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, content).unwrap();
    }

    fn minimal_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("sum_two");
        write(&root.join("description.txt"), "Add two numbers.\n");
        write(&root.join("tests/t01.in"), "1 2\n");
        write(&root.join("tests/t01.out"), "3\n");
        dir
    }

    #[test]
    fn loads_minimal_layout() {
        let dir = minimal_dir();
        let a = load_assignment(&dir.path().join("sum_two")).unwrap();
        assert_eq!(a.id, "sum_two");
        assert_eq!(a.tests.len(), 1);
        assert_eq!(a.tests[0].input, "1 2\n");
        assert_eq!(a.tests[0].expected_output, "3");
        assert!(a.reference_solution.is_none());
        assert!(a.histories.is_empty());
    }

    #[test]
    fn missing_tests_directory_is_an_empty_suite() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("a");
        write(&root.join("description.txt"), "x");
        match load_assignment(&root) {
            Err(Error::Load { reason, .. }) => assert!(reason.contains("empty test suite")),
            other => panic!("expected load error, got {other:?}"),
        }
    }

    #[test]
    fn unpaired_test_file_names_the_stem() {
        let dir = minimal_dir();
        let root = dir.path().join("sum_two");
        write(&root.join("tests/t02.in"), "9\n");
        match load_assignment(&root) {
            Err(Error::Load { reason, .. }) => assert!(reason.contains("t02")),
            other => panic!("expected load error, got {other:?}"),
        }
    }

    #[test]
    fn histories_are_ordered_by_numeric_suffix() {
        let dir = minimal_dir();
        let root = dir.path().join("sum_two");
        write(&root.join("history/s1/v01.py"), "b\n");
        write(&root.join("history/s1/v00.py"), "a\n");
        let a = load_assignment(&root).unwrap();
        let versions = &a.histories["s1"];
        assert_eq!(
            versions.iter().map(|v| v.ordinal).collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_eq!(versions[0].source, "a\n");
    }

    #[test]
    fn missing_description_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("a");
        write(&root.join("tests/t01.in"), "1\n");
        write(&root.join("tests/t01.out"), "1\n");
        match load_assignment(&root) {
            Err(Error::Load { reason, .. }) => assert!(reason.contains("description")),
            other => panic!("expected load error, got {other:?}"),
        }
    }

    #[test]
    fn save_then_load_round_trips() {
        let mut histories = BTreeMap::new();
        histories.insert(
            "s1".to_string(),
            vec![
                ProgramVersion {
                    source: "print(1)\n".into(),
                    ordinal: 0,
                },
                ProgramVersion {
                    source: "print(2)\n".into(),
                    ordinal: 1,
                },
            ],
        );
        let a = Assignment {
            id: "round_trip".into(),
            description: "Print the input.\n".into(),
            tests: vec![TestCase {
                input: "1\n".into(),
                expected_output: "1".into(),
            }],
            reference_solution: Some("print(input())\n".into()),
            histories,
        };
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("round_trip");
        save_assignment(&root, &a).unwrap();
        let reloaded = load_assignment(&root).unwrap();
        assert_eq!(reloaded, a);
    }

    #[test]
    fn validate_warns_on_gaps() {
        let interp = Interpreter::default();
        let a = Assignment {
            id: "w".into(),
            description: "d".into(),
            tests: vec![
                TestCase {
                    input: "1\n".into(),
                    expected_output: "2".into(),
                },
                TestCase {
                    input: "1\n".into(),
                    expected_output: "2".into(),
                },
            ],
            reference_solution: Some("print(3)\n".into()),
            histories: BTreeMap::new(),
        };
        let warnings = validate(&a, &interp).unwrap();
        assert!(warnings.iter().any(|w| w.contains("duplicate test")));
        assert!(warnings.iter().any(|w| w.contains("few-shot unavailable")));
        assert!(warnings
            .iter()
            .any(|w| w.contains("reference solution fails its own tests")));
    }

    #[test]
    fn validate_is_quiet_for_consistent_reference() {
        let interp = Interpreter::default();
        let a = Assignment {
            id: "q".into(),
            description: "d".into(),
            tests: vec![TestCase {
                input: "5\n".into(),
                expected_output: "5".into(),
            }],
            reference_solution: Some("print(input().strip())\n".into()),
            histories: BTreeMap::from([(
                "s1".to_string(),
                vec![ProgramVersion {
                    source: "print(0)\n".into(),
                    ordinal: 0,
                }],
            )]),
        };
        assert!(validate(&a, &interp).unwrap().is_empty());
    }
}
