//! Interpreter-backed oracles.
//!
//! The syntax oracle runs the Python compile step on a source text and
//! parses the first reported diagnostic (interpreters report syntax errors
//! one at a time). The semantic oracle executes a program once per test
//! case in an isolated working directory, feeding the test input on stdin
//! and comparing normalized stdout against the expected output.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::assignment::TestCase;
use crate::error::{Error, Result};

/// Wall-clock limit for a single test execution. Student programs loop
/// forever often enough that the semantic oracle cannot run without one.
pub const DEFAULT_PER_TEST_TIMEOUT: Duration = Duration::from_secs(10);

/// Environment variable overriding the interpreter executable.
pub const PYTHON_ENV: &str = "PYMEND_PYTHON";

/// Compiles stdin and reports the first syntax error in the interpreter's
/// standard format (file/line header, offending line, caret, message line).
const SYNTAX_CHECK_DRIVER: &str = r#"import sys, traceback
src = sys.stdin.buffer.read().decode("utf-8", "replace")
try:
    compile(src, "<unknown>", "exec")
except (SyntaxError, ValueError) as exc:
    sys.stderr.write("".join(traceback.format_exception_only(type(exc), exc)))
    raise SystemExit(1)
"#;

/// A parsed syntax-level diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based line, clamped to the number of source lines + 1.
    pub line: usize,
    /// 1-based column when the interpreter printed a caret marker.
    pub column: Option<usize>,
    /// Kebab-case error class, e.g. `syntax-error`, `indentation-error`.
    pub kind: String,
    pub message: String,
    /// The full interpreter-emitted message block, embedded verbatim in
    /// syntax prompts.
    pub raw: String,
}

/// Per-test boolean failure statuses; `true` means the test FAILED.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestVector(pub Vec<bool>);

impl TestVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_pass(&self) -> bool {
        !self.0.iter().any(|failed| *failed)
    }

    pub fn failure_count(&self) -> usize {
        self.0.iter().filter(|failed| **failed).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestStatus {
    Pass,
    WrongOutput,
    RuntimeException,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub status: TestStatus,
    /// Captured stdout, raw (not normalized).
    pub actual_output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub vector: TestVector,
    pub per_test: Vec<TestOutcome>,
}

impl TestReport {
    pub fn all_pass(&self) -> bool {
        self.vector.all_pass()
    }
}

/// Strips trailing whitespace on each line and trailing blank lines.
/// Interior spacing and case are preserved, keeping the oracle strict.
pub fn normalize(output: &str) -> String {
    let mut lines: Vec<&str> = output
        .split('\n')
        .map(|line| line.trim_end_matches([' ', '\t', '\r']))
        .collect();
    while lines.last().is_some_and(|line| line.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

/// Handle on the student-language interpreter used by both oracles.
#[derive(Debug, Clone)]
pub struct Interpreter {
    pub program: PathBuf,
    pub per_test_timeout: Duration,
}

impl Default for Interpreter {
    fn default() -> Self {
        let program = std::env::var(PYTHON_ENV).unwrap_or_else(|_| "python3".to_string());
        Interpreter {
            program: PathBuf::from(program),
            per_test_timeout: DEFAULT_PER_TEST_TIMEOUT,
        }
    }
}

impl Interpreter {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Interpreter {
            program: program.into(),
            ..Interpreter::default()
        }
    }

    pub fn with_timeout(mut self, per_test_timeout: Duration) -> Self {
        self.per_test_timeout = per_test_timeout;
        self
    }

    /// Runs the interpreter's compile step on `source`. `None` means the
    /// source is syntactically valid; otherwise the first reported
    /// diagnostic is returned.
    pub fn check_syntax(&self, source: &str) -> Result<Option<Diagnostic>> {
        let mut cmd = Command::new(&self.program);
        cmd.args(["-I", "-X", "utf8", "-c", SYNTAX_CHECK_DRIVER]);
        // Compilation is fast; the generous limit only guards a wedged
        // interpreter.
        let run = run_command(&mut cmd, source.as_bytes(), Duration::from_secs(30))
            .map_err(|e| self.spawn_error(e))?;
        if run.timed_out {
            return Err(Error::Interpreter("syntax check timed out".to_string()));
        }
        match run.exit_code {
            Some(0) => Ok(None),
            Some(1) => Ok(Some(parse_diagnostic(&run.stderr, source))),
            code => Err(Error::Interpreter(format!(
                "syntax check exited with {:?}: {}",
                code,
                run.stderr.trim()
            ))),
        }
    }

    /// True when `check_syntax` accepts the source.
    pub fn passes_syntax(&self, source: &str) -> Result<bool> {
        Ok(self.check_syntax(source)?.is_none())
    }

    /// Executes `source` once per test case in a fresh working directory.
    ///
    /// A test passes iff the normalized actual output equals the normalized
    /// expected output and the program exits cleanly. A nonzero exit (an
    /// uncaught exception) yields `RuntimeException`; a wall-clock overrun
    /// yields `Timeout`. Both count as failures in the test vector.
    pub fn run_tests(&self, source: &str, tests: &[TestCase]) -> Result<TestReport> {
        let workdir = tempfile::tempdir()?;
        let script = workdir.path().join("main.py");
        std::fs::write(&script, source)?;

        let mut per_test = Vec::with_capacity(tests.len());
        let mut failures = Vec::with_capacity(tests.len());
        for test in tests {
            let mut cmd = Command::new(&self.program);
            cmd.args(["-I", "-X", "utf8", "main.py"])
                .current_dir(workdir.path());
            let run = run_command(&mut cmd, test.input.as_bytes(), self.per_test_timeout)
                .map_err(|e| self.spawn_error(e))?;
            let status = if run.timed_out {
                TestStatus::Timeout
            } else if run.exit_code != Some(0) {
                TestStatus::RuntimeException
            } else if normalize(&run.stdout) == normalize(&test.expected_output) {
                TestStatus::Pass
            } else {
                TestStatus::WrongOutput
            };
            failures.push(status != TestStatus::Pass);
            per_test.push(TestOutcome {
                status,
                actual_output: run.stdout,
            });
        }
        Ok(TestReport {
            vector: TestVector(failures),
            per_test,
        })
    }

    fn spawn_error(&self, err: std::io::Error) -> Error {
        if err.kind() == std::io::ErrorKind::NotFound {
            Error::InterpreterNotFound(self.program.display().to_string())
        } else {
            Error::Io(err)
        }
    }
}

struct CommandRun {
    exit_code: Option<i32>,
    stdout: String,
    stderr: String,
    timed_out: bool,
}

/// Spawns a command with `stdin_data` piped in, enforcing a wall-clock
/// deadline. Output pipes are drained on threads so a chatty child cannot
/// deadlock against a full pipe buffer.
fn run_command(
    cmd: &mut Command,
    stdin_data: &[u8],
    timeout: Duration,
) -> std::io::Result<CommandRun> {
    cmd.stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn()?;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let data = stdin_data.to_vec();
    let writer = std::thread::spawn(move || {
        // The child may exit without reading all input; a broken pipe here
        // is not an oracle failure.
        let _ = stdin.write_all(&data);
        drop(stdin);
    });
    let stdout_pipe = child.stdout.take().expect("stdout piped");
    let stderr_pipe = child.stderr.take().expect("stderr piped");
    let out_reader = std::thread::spawn(move || read_lossy(stdout_pipe));
    let err_reader = std::thread::spawn(move || read_lossy(stderr_pipe));

    let deadline = Instant::now() + timeout;
    let mut timed_out = false;
    let exit_code = loop {
        match child.try_wait()? {
            Some(status) => break status.code(),
            None if Instant::now() >= deadline => {
                timed_out = true;
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };

    let _ = writer.join();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok(CommandRun {
        exit_code,
        stdout,
        stderr,
        timed_out,
    })
}

fn read_lossy(mut pipe: impl std::io::Read) -> String {
    let mut buf = Vec::new();
    let _ = pipe.read_to_end(&mut buf);
    String::from_utf8_lossy(&buf).into_owned()
}

/// Parses the interpreter's standard syntax-error block:
///
/// ```text
///   File "<unknown>", line 2
///     a = n
///     ^
/// IndentationError: expected an indented block
/// ```
fn parse_diagnostic(raw: &str, source: &str) -> Diagnostic {
    let lines: Vec<&str> = raw.lines().collect();
    let source_lines = source.split('\n').count();

    let mut line = 1;
    for l in &lines {
        if let Some(rest) = l.trim_start().strip_prefix("File ") {
            if let Some(idx) = rest.find(", line ") {
                let digits: String = rest[idx + 7..]
                    .chars()
                    .take_while(|c| c.is_ascii_digit())
                    .collect();
                if let Ok(n) = digits.parse::<usize>() {
                    line = n;
                    break;
                }
            }
        }
    }
    line = line.clamp(1, source_lines + 1);

    // The caret line marks the column within the echoed source line, which
    // the interpreter prefixes with four spaces.
    let column = lines
        .iter()
        .find(|l| {
            let t = l.trim();
            !t.is_empty() && t.chars().all(|c| c == '^' || c == '~')
        })
        .and_then(|l| l.find('^'))
        .map(|pos| pos.saturating_sub(4) + 1);

    let (kind, message) = lines
        .iter()
        .rev()
        .find(|l| !l.trim().is_empty())
        .and_then(|l| split_error_class(l))
        .unwrap_or_else(|| ("syntax-error".to_string(), raw.trim().to_string()));

    Diagnostic {
        line,
        column,
        kind,
        message,
        raw: raw.to_string(),
    }
}

/// Splits `IndentationError: expected an indented block` into the
/// kebab-cased class and the message.
fn split_error_class(line: &str) -> Option<(String, String)> {
    let (class, message) = line.split_once(": ")?;
    let class = class.trim();
    if class.is_empty() || !class.chars().all(|c| c.is_ascii_alphanumeric()) {
        return None;
    }
    Some((kebab_case(class), message.trim().to_string()))
}

fn kebab_case(class: &str) -> String {
    let mut out = String::with_capacity(class.len() + 4);
    for (i, c) in class.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('-');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}
