//! Error-enclosing subprogram extraction and merge-back.
//!
//! Given a syntax diagnostic, the chunker slices the contiguous run of
//! lines around the error whose indentation is no shallower than the error
//! line's, then widens once more when that run starts at a control-flow
//! header so the whole construct travels together. The chunk is a heuristic
//! stand-in for a basic block; real block analysis needs a program that
//! parses, which is exactly what we do not have.

use serde::Serialize;

use crate::oracle::Diagnostic;

/// Columns per tab stop when counting indentation (interpreter convention).
pub const TAB_WIDTH: usize = 8;

const CONTROL_FLOW_KEYWORDS: &[&str] = &[
    "if", "elif", "else", "for", "while", "try", "except", "finally", "with", "def",
];

/// A contiguous line range of the source, with the sliced lines verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chunk {
    /// 0-based inclusive start line.
    pub start: usize,
    /// 0-based exclusive end line.
    pub end: usize,
    pub lines: Vec<String>,
}

impl Chunk {
    pub fn text(&self) -> String {
        self.lines.join("\n")
    }
}

/// Splits a source into lines, folding a single trailing newline into the
/// representation so merge round-trips stay byte-identical.
pub fn source_lines(source: &str) -> Vec<String> {
    let mut lines: Vec<String> = source.split('\n').map(str::to_string).collect();
    if source.ends_with('\n') && lines.len() > 1 {
        lines.pop();
    }
    lines
}

/// Splits the source and converts the diagnostic's 1-based line into a
/// 0-based index, clamped to the last line for end-of-file errors.
pub fn locate_error(source: &str, diag: &Diagnostic) -> (Vec<String>, usize) {
    let lines = source_lines(source);
    let error_line = diag.line.saturating_sub(1).min(lines.len() - 1);
    (lines, error_line)
}

/// Leading whitespace width in columns, tabs advancing to the next
/// multiple of [`TAB_WIDTH`].
pub fn indentation_level(lines: &[String], idx: usize) -> usize {
    indent_columns(&lines[idx])
}

pub(crate) fn indent_columns(line: &str) -> usize {
    let mut col = 0;
    for c in line.chars() {
        match c {
            ' ' => col += 1,
            '\t' => col = (col / TAB_WIDTH + 1) * TAB_WIDTH,
            _ => break,
        }
    }
    col
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

/// Maximal contiguous range containing `idx` in which every non-blank line
/// is indented at least `level` columns. Blank lines interior to the range
/// are included; a blank line at a boundary is not.
pub fn slice_biway(lines: &[String], idx: usize, level: usize) -> (usize, usize) {
    let qualifies = |i: usize| !is_blank(&lines[i]) && indent_columns(&lines[i]) >= level;

    let mut start = idx;
    loop {
        // Walk over a blank run; it is only included if a qualifying
        // non-blank line sits above it.
        let mut probe = start;
        while probe > 0 && is_blank(&lines[probe - 1]) {
            probe -= 1;
        }
        if probe > 0 && qualifies(probe - 1) {
            start = probe - 1;
        } else {
            break;
        }
    }

    let mut end = idx + 1;
    loop {
        let mut probe = end;
        while probe < lines.len() && is_blank(&lines[probe]) {
            probe += 1;
        }
        if probe < lines.len() && qualifies(probe) {
            end = probe + 1;
        } else {
            break;
        }
    }

    (start, end)
}

fn starts_with_control_flow(line: &str) -> bool {
    let rest = line.trim_start();
    let word: String = rest
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect();
    if !CONTROL_FLOW_KEYWORDS.contains(&word.as_str()) {
        return false;
    }
    // Keyword boundary: `elif x` and `else:` qualify, `elifx` does not.
    rest.chars()
        .nth(word.len())
        .is_none_or(|c| !(c.is_alphanumeric() || c == '_'))
}

/// Extracts the error-enclosing chunk for a diagnostic.
///
/// First slices around the error line at its own indentation level; when
/// the slice begins at a control-flow header, re-slices from that header at
/// the header's level so sibling clauses stay in the chunk.
pub fn chunk(source: &str, diag: &Diagnostic) -> Chunk {
    let (lines, error_line) = locate_error(source, diag);
    let level = indentation_level(&lines, error_line);
    let (mut start, mut end) = slice_biway(&lines, error_line, level);
    if starts_with_control_flow(&lines[start]) {
        let header_level = indentation_level(&lines, start);
        let (s, e) = slice_biway(&lines, start, header_level);
        start = s;
        // The re-slice anchors on the header; with badly broken student
        // indentation it can land short of the error line, so widen back.
        end = e.max(error_line + 1);
    }
    Chunk {
        start,
        end,
        lines: lines[start..end].to_vec(),
    }
}

/// The whole program as a single chunk (chunking disabled).
pub fn whole_file_chunk(source: &str) -> Chunk {
    let lines = source_lines(source);
    Chunk {
        start: 0,
        end: lines.len(),
        lines,
    }
}

/// Replaces the chunk's line range with `replacement`, leaving every line
/// outside `[start, end)` byte-identical. The replacement may have a
/// different line count; its newlines are separators, so a replacement
/// ending in `\n` denotes a final empty line (this keeps
/// `merge_chunk(s, c, c.text())` an exact identity for every chunk).
pub fn merge_chunk(source: &str, chunk: &Chunk, replacement: &str) -> String {
    let lines = source_lines(source);
    let mut merged: Vec<String> = Vec::with_capacity(lines.len());
    merged.extend_from_slice(&lines[..chunk.start]);
    merged.extend(replacement.split('\n').map(str::to_string));
    merged.extend_from_slice(&lines[chunk.end.min(lines.len())..]);
    let mut out = merged.join("\n");
    if source.ends_with('\n') {
        out.push('\n');
    }
    out
}
