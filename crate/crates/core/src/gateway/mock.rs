//! Fixture-replay backend.
//!
//! Fixtures map a prompt digest (see [`prompt_digest`]) to an ordered list
//! of completions, one file per test scenario. Because golden prompts and
//! fixtures are keyed by the same digest, a prompt-template change
//! invalidates stale fixtures loudly instead of silently replaying wrong
//! completions. The reserved key `"*"` provides fallback completions for
//! any prompt without its own entry.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{prompt_digest, CompletionBackend, GenParams, Generation};
use crate::error::{Error, Result};
use crate::prompt::Prompt;

/// Fixture key matching any prompt without a dedicated entry.
pub const DEFAULT_FIXTURE_KEY: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_logprob: Option<f64>,
}

impl FixtureEntry {
    pub fn new(text: impl Into<String>) -> FixtureEntry {
        FixtureEntry {
            text: text.into(),
            mean_logprob: None,
        }
    }

    pub fn scored(text: impl Into<String>, mean_logprob: f64) -> FixtureEntry {
        FixtureEntry {
            text: text.into(),
            mean_logprob: Some(mean_logprob),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    entries: BTreeMap<String, Vec<FixtureEntry>>,
}

impl MockBackend {
    pub fn new() -> MockBackend {
        MockBackend::default()
    }

    pub fn from_file(path: &Path) -> Result<MockBackend> {
        let bad = |reason: String| Error::BadFile {
            path: path.to_path_buf(),
            reason,
        };
        let data = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let entries: BTreeMap<String, Vec<FixtureEntry>> =
            serde_json::from_str(&data).map_err(|e| bad(e.to_string()))?;
        // Log probabilities are logs of probabilities; a positive mean
        // means the fixture was written by hand, wrongly.
        for (key, completions) in &entries {
            if completions
                .iter()
                .any(|c| c.mean_logprob.is_some_and(|lp| lp > 0.0))
            {
                return Err(bad(format!("entry {key} has a positive mean_logprob")));
            }
        }
        Ok(MockBackend { entries })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let data = serde_json::to_string_pretty(&self.entries).expect("fixtures serialize");
        std::fs::write(path, data)?;
        Ok(())
    }

    /// Registers completions for a prompt, keyed by its digest.
    pub fn insert(&mut self, prompt_text: &str, completions: Vec<FixtureEntry>) {
        self.entries.insert(prompt_digest(prompt_text), completions);
    }

    /// Registers fallback completions replayed for any unmatched prompt.
    pub fn insert_default(&mut self, completions: Vec<FixtureEntry>) {
        self.entries
            .insert(DEFAULT_FIXTURE_KEY.to_string(), completions);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, prompt: &Prompt, params: &GenParams) -> Result<Vec<Generation>> {
        let digest = prompt_digest(&prompt.text);
        let entries = self
            .entries
            .get(&digest)
            .or_else(|| self.entries.get(DEFAULT_FIXTURE_KEY))
            .ok_or(Error::FixtureMiss(digest))?;
        Ok(entries
            .iter()
            .take(params.samples_per_prompt)
            .map(|e| Generation {
                text: e.text.clone(),
                mean_logprob: e.mean_logprob,
            })
            .collect())
    }
}
