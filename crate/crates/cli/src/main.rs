//! `pymend` — repair buggy introductory Python assignments.
//!
//! Subcommands:
//! - `repair`: fix one program against one assignment directory.
//! - `bench`: replay a dataset and report repair rate and edit distances.
//! - `ablate`: rerun a dataset with a design choice disabled, side by side.
//!
//! Exit codes for `repair`: 0 repaired, 2 syntactically fixed but failing
//! tests, 3 no syntactically valid candidate, 1 bad paths, configuration,
//! or backend failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pymend_core::assignment::{load_assignment, validate};
use pymend_core::bench::{self, AblationMode};
use pymend_core::gateway::{CompletionBackend, GenParams, HttpBackend, HttpConfig, MockBackend};
use pymend_core::oracle::Interpreter;
use pymend_core::pipeline::{Engine, PipelineConfig, RepairStatus};
use pymend_core::prompt::Sections;

#[derive(Parser)]
#[command(
    name = "pymend",
    version,
    about = "Automated repair for introductory Python assignments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repair a single student program.
    Repair {
        /// Path to the buggy program.
        file: PathBuf,
        /// Assignment directory (description.txt, tests/, ...).
        #[arg(long)]
        assignment: PathBuf,
        #[command(flatten)]
        opts: PipelineOpts,
    },
    /// Repair every target in a dataset and report aggregate metrics.
    Bench {
        /// Dataset directory containing manifest.csv and assignments.
        dataset: PathBuf,
        /// Also write the report as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: PipelineOpts,
    },
    /// Compare the full pipeline against an ablated variant.
    Ablate {
        dataset: PathBuf,
        /// no-chunking | no-iterative | zero-shot | single-structure
        #[arg(long)]
        mode: String,
        /// Also write the comparison as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: PipelineOpts,
    },
}

#[derive(Args)]
struct PipelineOpts {
    /// Completion backend: `mock:<fixtures.json>` or `http`.
    #[arg(long)]
    backend: String,
    /// Base URL for the HTTP backend.
    #[arg(long, default_value = "https://api.openai.com/v1")]
    endpoint: String,
    /// Model name for the HTTP backend (key read from MODEL_API_KEY).
    #[arg(long)]
    model: Option<String>,
    /// Select few-shot examples from peer histories.
    #[arg(long)]
    few_shot: bool,
    /// Send whole programs to the model instead of error chunks.
    #[arg(long)]
    no_chunking: bool,
    /// Limit the syntax phase to a single round.
    #[arg(long)]
    no_iterative: bool,
    /// Comma-separated semantic prompt structures
    /// (e.g. `program,program+diagnostics+tests`); default is all six.
    #[arg(long)]
    structures: Option<String>,
    /// Sampling temperature.
    #[arg(long)]
    temperature: Option<f64>,
    /// Generations sampled per prompt.
    #[arg(long)]
    samples: Option<usize>,
    /// Token budget per generation.
    #[arg(long)]
    max_new_tokens: Option<usize>,
    /// Per-test wall-clock limit, in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    /// Maximum syntax-phase iterations.
    #[arg(long)]
    max_iterations: Option<u32>,
    /// Interpreter executable (default: $PYMEND_PYTHON or python3).
    #[arg(long)]
    python: Option<PathBuf>,
    /// Print the repair trace and assignment warnings to stderr.
    #[arg(long)]
    verbose: bool,
}

impl PipelineOpts {
    fn interpreter(&self) -> Interpreter {
        let mut interpreter = match &self.python {
            Some(path) => Interpreter::new(path.clone()),
            None => Interpreter::default(),
        };
        if let Some(secs) = self.timeout {
            interpreter = interpreter.with_timeout(Duration::from_secs(secs));
        }
        interpreter
    }

    fn backend(&self) -> Result<Box<dyn CompletionBackend>> {
        if let Some(fixtures) = self.backend.strip_prefix("mock:") {
            let mock = MockBackend::from_file(Path::new(fixtures))
                .with_context(|| format!("loading fixtures from {fixtures}"))?;
            return Ok(Box::new(mock));
        }
        if self.backend == "http" {
            let Some(model) = &self.model else {
                bail!("--model is required with --backend http");
            };
            let config = HttpConfig::from_env(self.endpoint.clone(), model.clone());
            return Ok(Box::new(HttpBackend::new(config)?));
        }
        bail!(
            "unknown backend `{}` (expected `mock:<fixtures.json>` or `http`)",
            self.backend
        );
    }

    fn config(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig {
            use_few_shot: self.few_shot,
            use_chunking: !self.no_chunking,
            use_iterative: !self.no_iterative,
            ..PipelineConfig::default()
        };
        if let Some(max) = self.max_iterations {
            if max == 0 {
                bail!("--max-iterations must be at least 1");
            }
            config.max_syntax_iterations = max;
        }
        if let Some(spec) = &self.structures {
            let mut structures = Vec::new();
            for label in spec.split(',') {
                let Some(sections) = Sections::parse(label) else {
                    bail!("unknown prompt structure `{label}`");
                };
                structures.push(sections);
            }
            config.prompt_structures = structures;
        }
        let mut gen_params = GenParams::default();
        if let Some(t) = self.temperature {
            if t < 0.0 {
                bail!("--temperature must be non-negative");
            }
            gen_params.temperature = t;
        }
        if let Some(k) = self.samples {
            if k == 0 {
                bail!("--samples must be at least 1");
            }
            gen_params.samples_per_prompt = k;
        }
        if let Some(m) = self.max_new_tokens {
            gen_params.max_new_tokens = m;
        }
        config.gen_params = gen_params;
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let ok = matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Repair {
            file,
            assignment,
            opts,
        } => run_repair(&file, &assignment, &opts),
        Command::Bench { dataset, out, opts } => run_bench(&dataset, out.as_deref(), &opts),
        Command::Ablate {
            dataset,
            mode,
            out,
            opts,
        } => run_ablate(&dataset, &mode, out.as_deref(), &opts),
    }
}

fn run_repair(file: &Path, assignment_dir: &Path, opts: &PipelineOpts) -> Result<ExitCode> {
    let program = std::fs::read_to_string(file)
        .with_context(|| format!("reading program {}", file.display()))?;
    let assignment = load_assignment(assignment_dir)?;
    let interpreter = opts.interpreter();
    let backend = opts.backend()?;
    let config = opts.config()?;

    if opts.verbose {
        for warning in validate(&assignment, &interpreter)? {
            eprintln!("warning: {warning}");
        }
    }

    let engine = Engine::new(&interpreter, backend.as_ref());
    let result = match engine.repair(&program, &assignment, &config) {
        Ok(result) => result,
        Err(err) => {
            if opts.verbose {
                if let pymend_core::Error::Aborted { trace, .. } = &err {
                    for entry in trace {
                        eprintln!("{}", entry.describe());
                    }
                }
            }
            return Err(err.into());
        }
    };

    if opts.verbose {
        for entry in &result.trace {
            eprintln!("{}", entry.describe());
        }
    }
    if let Some(program) = &result.program {
        print!("{program}");
        if !program.ends_with('\n') {
            println!();
        }
    }
    match result.status {
        RepairStatus::Repaired => {
            eprintln!("status: repaired (ted {})", result.ted.unwrap_or(0));
            Ok(ExitCode::from(0))
        }
        RepairStatus::SyntaxFixedOnly => {
            eprintln!(
                "status: syntax fixed only, tests still failing (ted {})",
                result.ted.unwrap_or(0)
            );
            Ok(ExitCode::from(2))
        }
        RepairStatus::Failed => {
            eprintln!("status: failed to produce a syntactically valid candidate");
            Ok(ExitCode::from(3))
        }
    }
}

fn run_bench(dataset: &Path, out: Option<&Path>, opts: &PipelineOpts) -> Result<ExitCode> {
    let interpreter = opts.interpreter();
    let backend = opts.backend()?;
    let config = opts.config()?;
    let engine = Engine::new(&interpreter, backend.as_ref());

    let report = bench::run_benchmark(&engine, dataset, &config)?;
    for outcome in &report.outcomes {
        if let Some(error) = &outcome.error {
            eprintln!(
                "warning: {}/{}: {error}",
                outcome.assignment_id, outcome.student
            );
        }
    }
    print!("{}", bench::render_table(&report));
    if let Some(path) = out {
        std::fs::write(path, bench::render_csv(&report))
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::from(0))
}

fn run_ablate(
    dataset: &Path,
    mode: &str,
    out: Option<&Path>,
    opts: &PipelineOpts,
) -> Result<ExitCode> {
    let Some(mode) = AblationMode::parse(mode) else {
        bail!("unknown ablation mode `{mode}` (expected no-chunking, no-iterative, zero-shot, or single-structure)");
    };
    let interpreter = opts.interpreter();
    let backend = opts.backend()?;
    let config = opts.config()?;
    let engine = Engine::new(&interpreter, backend.as_ref());

    let report = bench::run_ablation(&engine, dataset, mode, &config)?;
    print!("{}", bench::render_ablation_table(&report));
    if let Some(path) = out {
        let mut csv = String::new();
        for (label, column) in &report.columns {
            csv.push_str(&format!("# {label}\n"));
            csv.push_str(&bench::render_csv(column));
        }
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::from(0))
}
