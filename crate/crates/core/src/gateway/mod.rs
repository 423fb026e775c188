//! Completion backends and generation post-processing.
//!
//! The pipeline talks to a [`CompletionBackend`]: either an HTTP client for
//! an OpenAI-compatible completions endpoint, or a fixture-replay mock that
//! makes whole runs bit-reproducible. Post-processing (stop-marker
//! truncation, fence stripping, log-probability ranking) is shared and
//! backend-independent.

mod http;
mod mock;

pub use http::{HttpBackend, HttpConfig};
pub use mock::{FixtureEntry, MockBackend, DEFAULT_FIXTURE_KEY};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::prompt::Prompt;

/// Environment variable holding the API key for the HTTP backend.
pub const API_KEY_ENV: &str = "MODEL_API_KEY";

/// Sampling parameters for one completion request.
#[derive(Debug, Clone, Serialize)]
pub struct GenParams {
    pub temperature: f64,
    /// Generations requested per prompt.
    pub samples_per_prompt: usize,
    pub max_new_tokens: usize,
    /// A generation is cut at the first occurrence of any marker, keeping
    /// the model from running on into a second program.
    pub stop_markers: Vec<String>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            temperature: 0.8,
            samples_per_prompt: 10,
            max_new_tokens: 512,
            stop_markers: vec!["###".to_string(), "# Buggy Program #".to_string()],
        }
    }
}

/// One sampled completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub text: String,
    /// Mean per-token log probability; absent for backends that do not
    /// report log probabilities.
    pub mean_logprob: Option<f64>,
}

pub trait CompletionBackend {
    /// Returns up to `params.samples_per_prompt` generations for a prompt.
    fn complete(&self, prompt: &Prompt, params: &GenParams) -> Result<Vec<Generation>>;
}

/// Stable digest of a prompt's exact text; keys mock fixtures and names
/// prompts in traces.
pub fn prompt_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Extracts the code portion of a generation: truncates at the first stop
/// marker, drops code-fence lines, and trims blank padding. `None` means
/// the generation was empty after stripping and the candidate is discarded.
pub fn extract_code(gen: &Generation, params: &GenParams) -> Option<String> {
    let mut text = gen.text.as_str();
    if let Some(cut) = params
        .stop_markers
        .iter()
        .filter_map(|marker| text.find(marker.as_str()))
        .min()
    {
        text = &text[..cut];
    }

    let lines: Vec<&str> = text
        .split('\n')
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect();

    let first = lines.iter().position(|l| !l.trim().is_empty())?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty())?;
    Some(lines[first..=last].join("\n"))
}

/// Keeps the `k` generations with the highest mean log probability.
/// Duplicates (identical text) collapse to one; generations without log
/// probabilities keep backend order and fill in after the ranked ones.
pub fn top_k_by_logprob(gens: &[Generation], k: usize) -> Vec<Generation> {
    let mut best: Vec<Generation> = Vec::new();
    for gen in gens {
        match best.iter_mut().find(|g| g.text == gen.text) {
            Some(existing) => {
                if gen.mean_logprob > existing.mean_logprob {
                    existing.mean_logprob = gen.mean_logprob;
                }
            }
            None => best.push(gen.clone()),
        }
    }
    // Stable sort: scored generations first, highest mean first; unscored
    // ones retain their original relative order at the tail.
    best.sort_by(|a, b| match (a.mean_logprob, b.mean_logprob) {
        (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Equal),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    best.truncate(k);
    best
}
