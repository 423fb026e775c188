//! Error-tolerant Python lexer and token-level Levenshtein distance.
//!
//! The lexer never fails: unknown characters become single-character
//! punctuation tokens and unterminated strings end at the line break. That
//! tolerance matters because the distance is taken against buggy programs
//! that do not parse. Comments are tokens (commenting a line out is an
//! edit), and indentation changes surface as indent/dedent tokens so an
//! indentation fix registers as a small edit.

use serde::Serialize;

use crate::chunk::TAB_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Name,
    Number,
    TextLiteral,
    Operator,
    Punctuation,
    Keyword,
    Comment,
    Newline,
    Indent,
    Dedent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
}

impl Token {
    fn new(kind: TokenKind, lexeme: impl Into<String>) -> Token {
        Token {
            kind,
            lexeme: lexeme.into(),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

// Longest first so maximal munch falls out of a linear scan.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "==", "!=", "<=", ">=", "->", ":=", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "@=", "**", "//", "<<", ">>", "+", "-", "*", "/", "%", "&", "|", "^", "~",
    "<", ">", "=", "@",
];

const PUNCTUATION: &[char] = &['(', ')', '[', ']', '{', '}', ',', ':', ';', '.'];

pub fn tokenize(source: &str) -> Vec<Token> {
    Lexer::new(source).run()
}

/// Levenshtein distance (unit-cost insert/delete/substitute) between the
/// token sequences of `a` and `b`; tokens compare by kind and lexeme.
pub fn token_edit_distance(a: &str, b: &str) -> usize {
    let ta = tokenize(a);
    let tb = tokenize(b);
    if ta.is_empty() {
        return tb.len();
    }
    if tb.is_empty() {
        return ta.len();
    }

    let mut distances: Vec<usize> = (0..=tb.len()).collect();
    for (i, x) in ta.iter().enumerate() {
        let mut sub = i;
        distances[0] = i + 1;
        for (j, y) in tb.iter().enumerate() {
            let dist = (distances[j].min(distances[j + 1]) + 1).min(sub + (x != y) as usize);
            sub = distances[j + 1];
            distances[j + 1] = dist;
        }
    }
    *distances.last().unwrap()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    tokens: Vec<Token>,
    indent_stack: Vec<usize>,
    bracket_depth: usize,
    at_line_start: bool,
}

impl Lexer {
    fn new(source: &str) -> Lexer {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            tokens: Vec::new(),
            indent_stack: vec![0],
            bracket_depth: 0,
            at_line_start: true,
        }
    }

    fn run(mut self) -> Vec<Token> {
        while self.pos < self.chars.len() {
            if self.at_line_start && self.bracket_depth == 0 {
                self.handle_line_start();
                if self.pos >= self.chars.len() {
                    break;
                }
            }
            self.at_line_start = false;
            let c = self.chars[self.pos];
            match c {
                '\n' => {
                    self.pos += 1;
                    if self.bracket_depth == 0 {
                        self.push(TokenKind::Newline, "\n");
                        self.at_line_start = true;
                    }
                    // Inside brackets a line break is plain whitespace.
                }
                '\r' => self.pos += 1,
                ' ' | '\t' | '\x0c' => self.pos += 1,
                '\\' if self.peek(1) == Some('\n') => {
                    // Explicit line join: the logical line continues.
                    self.pos += 2;
                }
                '#' => self.lex_comment(),
                '\'' | '"' => self.lex_string(String::new()),
                c if c.is_ascii_digit() => self.lex_number(),
                '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.lex_number(),
                c if c == '_' || c.is_alphabetic() => self.lex_name(),
                _ => self.lex_symbol(),
            }
        }
        // Close any open blocks so trailing indentation is observable.
        while self.indent_stack.len() > 1 {
            self.indent_stack.pop();
            self.push(TokenKind::Dedent, "");
        }
        self.tokens
    }

    fn handle_line_start(&mut self) {
        let mut ws = String::new();
        let mut width = 0usize;
        while let Some(&c) = self.chars.get(self.pos) {
            match c {
                ' ' => width += 1,
                '\t' => width = (width / TAB_WIDTH + 1) * TAB_WIDTH,
                '\x0c' => {}
                _ => break,
            }
            ws.push(c);
            self.pos += 1;
        }
        // Blank and comment-only lines do not open or close blocks.
        match self.chars.get(self.pos) {
            None | Some('\n') | Some('\r') | Some('#') => return,
            _ => {}
        }
        let top = *self.indent_stack.last().unwrap();
        if width > top {
            self.indent_stack.push(width);
            self.push(TokenKind::Indent, ws);
        } else if width < top {
            while *self.indent_stack.last().unwrap() > width {
                self.indent_stack.pop();
                self.push(TokenKind::Dedent, "");
            }
            // Tolerate an inconsistent dedent by opening a block at the
            // new width; the mismatch itself is the student's bug.
            if *self.indent_stack.last().unwrap() < width {
                self.indent_stack.push(width);
                self.push(TokenKind::Indent, ws);
            }
        }
    }

    fn lex_comment(&mut self) {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos] != '\n' {
            self.pos += 1;
        }
        let lexeme: String = self.chars[start..self.pos].iter().collect();
        self.push(TokenKind::Comment, lexeme);
    }

    fn lex_name(&mut self) {
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| *c == '_' || c.is_alphanumeric())
        {
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos].iter().collect();
        // A short prefix glued to a quote is a string prefix (r"", f"", rb"").
        if word.len() <= 2
            && word
                .chars()
                .all(|c| matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'))
            && matches!(self.chars.get(self.pos), Some('\'') | Some('"'))
        {
            self.lex_string(word);
            return;
        }
        let kind = if KEYWORDS.contains(&word.as_str()) {
            TokenKind::Keyword
        } else {
            TokenKind::Name
        };
        self.push(kind, word);
    }

    fn lex_string(&mut self, prefix: String) {
        let quote = self.chars[self.pos];
        let mut lexeme = prefix;
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        if triple {
            lexeme.push(quote);
            lexeme.push(quote);
            lexeme.push(quote);
            self.pos += 3;
            while self.pos < self.chars.len() {
                if self.chars[self.pos] == quote
                    && self.peek(1) == Some(quote)
                    && self.peek(2) == Some(quote)
                {
                    lexeme.push(quote);
                    lexeme.push(quote);
                    lexeme.push(quote);
                    self.pos += 3;
                    break;
                }
                lexeme.push(self.chars[self.pos]);
                self.pos += 1;
            }
        } else {
            lexeme.push(quote);
            self.pos += 1;
            while self.pos < self.chars.len() {
                let c = self.chars[self.pos];
                if c == '\n' {
                    // Unterminated: stop at the line break.
                    break;
                }
                lexeme.push(c);
                self.pos += 1;
                if c == '\\' {
                    if let Some(&esc) = self.chars.get(self.pos) {
                        if esc != '\n' {
                            lexeme.push(esc);
                        }
                        self.pos += 1;
                    }
                } else if c == quote {
                    break;
                }
            }
        }
        self.push(TokenKind::TextLiteral, lexeme);
    }

    fn lex_number(&mut self) {
        let start = self.pos;
        let digits = |c: char| c.is_ascii_alphanumeric() || c == '_';
        if self.chars[self.pos] == '0'
            && self
                .peek(1)
                .is_some_and(|c| matches!(c.to_ascii_lowercase(), 'x' | 'o' | 'b'))
        {
            self.pos += 2;
            while self.chars.get(self.pos).is_some_and(|c| digits(*c)) {
                self.pos += 1;
            }
        } else {
            while self
                .chars
                .get(self.pos)
                .is_some_and(|c| c.is_ascii_digit() || *c == '_')
            {
                self.pos += 1;
            }
            if self.chars.get(self.pos) == Some(&'.')
                && self
                    .peek(1)
                    .is_none_or(|c| !c.is_alphabetic() || c == 'e' || c == 'E')
            {
                self.pos += 1;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_digit() || *c == '_')
                {
                    self.pos += 1;
                }
            }
            if self
                .chars
                .get(self.pos)
                .is_some_and(|c| matches!(c, 'e' | 'E'))
                && self
                    .peek(1)
                    .is_some_and(|c| c.is_ascii_digit() || c == '+' || c == '-')
            {
                self.pos += 2;
                while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
            if self
                .chars
                .get(self.pos)
                .is_some_and(|c| matches!(c, 'j' | 'J'))
            {
                self.pos += 1;
            }
        }
        let lexeme: String = self.chars[start..self.pos].iter().collect();
        self.push(TokenKind::Number, lexeme);
    }

    fn lex_symbol(&mut self) {
        for op in OPERATORS {
            if self.matches(op) {
                self.pos += op.chars().count();
                self.push(TokenKind::Operator, *op);
                return;
            }
        }
        let c = self.chars[self.pos];
        self.pos += 1;
        match c {
            '(' | '[' | '{' => self.bracket_depth += 1,
            ')' | ']' | '}' => self.bracket_depth = self.bracket_depth.saturating_sub(1),
            _ => {}
        }
        // Any character outside the known sets still becomes a token; the
        // lexer must cope with arbitrarily broken input.
        let _known = PUNCTUATION.contains(&c);
        self.push(TokenKind::Punctuation, c.to_string());
    }

    fn matches(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.chars.get(self.pos + i) == Some(&c))
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, lexeme: impl Into<String>) {
        self.tokens.push(Token::new(kind, lexeme));
    }
}
