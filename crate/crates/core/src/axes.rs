//! Axis generators: place the tokens of one text at character positions on
//! its axis of the bitext space.
//!
//! Two modes exist. Cognate mode tokenizes every word, number and
//! punctuation mark. Lexicon mode only plots occurrences of strings the
//! matching predicate could ever match (lexicon entries, numbers and
//! punctuation), found by plain string matching, so it also works for
//! scripts written without spaces.

use std::collections::HashSet;
use std::fmt;

use aho_corasick::AhoCorasick;

use crate::config::KeyValues;
use crate::error::{Result, SimrError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
}

impl TokenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Word => "word",
            TokenKind::Number => "number",
            TokenKind::Punctuation => "punct",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxisToken {
    /// Case-folded surface form.
    pub surface: String,
    /// Mean of the token's character offsets.
    pub position: f64,
    /// First character offset (inclusive).
    pub start: usize,
    /// Character offset one past the token (exclusive).
    pub end: usize,
    pub kind: TokenKind,
}

impl AxisToken {
    fn new(surface: String, start: usize, end: usize, kind: TokenKind) -> Self {
        debug_assert!(start < end);
        AxisToken {
            surface,
            position: (start + end - 1) as f64 / 2.0,
            start,
            end,
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// All tokens of one text, sorted by position.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisMap {
    tokens: Vec<AxisToken>,
    text_length: usize,
}

impl AxisMap {
    fn from_unsorted(mut tokens: Vec<AxisToken>, text_length: usize) -> Self {
        tokens.sort_by(|a, b| {
            a.position
                .total_cmp(&b.position)
                .then(a.start.cmp(&b.start))
                .then(a.end.cmp(&b.end))
                .then_with(|| a.surface.cmp(&b.surface))
        });
        tokens.dedup_by(|a, b| a.start == b.start && a.end == b.end && a.surface == b.surface);
        AxisMap {
            tokens,
            text_length,
        }
    }

    pub fn tokens(&self) -> &[AxisToken] {
        &self.tokens
    }

    pub fn text_length(&self) -> usize {
        self.text_length
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index range of the tokens whose position lies in `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.tokens.partition_point(|t| t.position < lo);
        let b = self.tokens.partition_point(|t| t.position <= hi);
        a..b.max(a)
    }

    /// Tokens whose position lies in the closed interval `[lo, hi]`.
    pub fn in_range(&self, lo: f64, hi: f64) -> &[AxisToken] {
        &self.tokens[self.index_range(lo, hi)]
    }

    /// One line per token: `surface<TAB>kind<TAB>start<TAB>end<TAB>position`,
    /// preceded by a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("surface\tkind\tstart\tend\tposition\n");
        for t in &self.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.2}\n",
                escape_tsv(&t.surface),
                t.kind,
                t.start,
                t.end,
                t.position
            ));
        }
        out
    }
}

fn escape_tsv(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
}

/// Per-language character classes used by the tokenizers.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenRules {
    /// Inclusive letter ranges; `None` means any alphabetic character.
    letters: Option<Vec<(char, char)>>,
    punct: HashSet<char>,
}

const DEFAULT_PUNCT: &str = ".,;:!?()[]{}\"'`-/&%$#@*+=<>|~_«»¿¡–—…“”‘’„。、，！？：；（）「」『』";

impl Default for TokenRules {
    fn default() -> Self {
        TokenRules {
            letters: None,
            punct: DEFAULT_PUNCT.chars().collect(),
        }
    }
}

impl TokenRules {
    pub fn new(letters: Option<Vec<(char, char)>>, punct: impl IntoIterator<Item = char>) -> Self {
        TokenRules {
            letters,
            punct: punct.into_iter().collect(),
        }
    }

    /// Parses the two-line rules format:
    ///
    /// ```text
    /// letters: a-z A-Z à-ÿ
    /// punct: .,;:!?
    /// ```
    ///
    /// Either line may be omitted to keep the default. `letters: *` selects
    /// every alphabetic character.
    pub fn parse(input: &str) -> Result<Self> {
        let kv = KeyValues::parse(input)?;
        let mut rules = TokenRules::default();
        for (line, key, value) in kv.entries() {
            match key {
                "letters" => rules.letters = parse_letter_ranges(value, line)?,
                "punct" => rules.punct = value.chars().filter(|c| !c.is_whitespace()).collect(),
                other => {
                    return Err(SimrError::parse(line, format!("unknown key `{other}`")));
                }
            }
        }
        Ok(rules)
    }

    pub fn is_letter(&self, c: char) -> bool {
        match &self.letters {
            None => c.is_alphabetic(),
            Some(ranges) => ranges.iter().any(|&(lo, hi)| (lo..=hi).contains(&c)),
        }
    }

    pub fn is_digit(&self, c: char) -> bool {
        c.is_numeric()
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.punct.contains(&c)
    }
}

fn parse_letter_ranges(value: &str, line: usize) -> Result<Option<Vec<(char, char)>>> {
    if value.trim() == "*" {
        return Ok(None);
    }
    let mut ranges = Vec::new();
    for item in value.split_whitespace() {
        let chars: Vec<char> = item.chars().collect();
        let range = match chars.as_slice() {
            [c] => (*c, *c),
            [lo, '-', hi] if lo <= hi => (*lo, *hi),
            _ => return Err(SimrError::parse(line, format!("bad letter range `{item}`"))),
        };
        ranges.push(range);
    }
    if ranges.is_empty() {
        return Err(SimrError::parse(line, "empty letter set"));
    }
    Ok(Some(ranges))
}

/// One-to-one lower-casing so character offsets survive folding.
fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Letter,
    Digit,
    Punct,
    Other,
}

/// Tokenizes every word, number and punctuation mark of `text`.
///
/// Words are maximal letter runs (case-folded), numbers maximal digit runs,
/// and each configured punctuation character is its own token.
pub fn tokenize_cognate_mode(text: &str, rules: &TokenRules) -> Result<AxisMap> {
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Err(SimrError::EmptyText);
    }
    Ok(AxisMap::from_unsorted(
        scan(&chars, rules, true),
        chars.len(),
    ))
}

/// Plots every occurrence of every `vocab` string, plus numbers and
/// punctuation. Occurrences may overlap: a string that contains another vocab
/// string yields a token for each.
pub fn tokenize_lexicon_mode<S: AsRef<str>>(
    text: &str,
    vocab: impl IntoIterator<Item = S>,
    rules: &TokenRules,
) -> Result<AxisMap> {
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Err(SimrError::EmptyText);
    }
    let mut tokens = scan(&chars, rules, false);

    let mut patterns: Vec<String> = vocab
        .into_iter()
        .map(|s| s.as_ref().chars().map(fold).collect::<String>())
        .filter(|s| !s.is_empty())
        .collect();
    patterns.sort();
    patterns.dedup();

    if !patterns.is_empty() {
        let folded: String = chars.iter().map(|&c| fold(c)).collect();
        // Byte offset of every character start, plus the end sentinel.
        let mut starts: Vec<usize> = folded.char_indices().map(|(i, _)| i).collect();
        starts.push(folded.len());
        let char_at = |byte: usize| starts.binary_search(&byte).expect("match on char boundary");

        let ac =
            AhoCorasick::new(&patterns).map_err(|e| SimrError::InvalidConfig(e.to_string()))?;
        for m in ac.find_overlapping_iter(&folded) {
            let (s, e) = (char_at(m.start()), char_at(m.end()));
            tokens.push(AxisToken::new(
                patterns[m.pattern().as_usize()].clone(),
                s,
                e,
                TokenKind::Word,
            ));
        }
    }
    Ok(AxisMap::from_unsorted(tokens, chars.len()))
}

fn scan(chars: &[char], rules: &TokenRules, emit_words: bool) -> Vec<AxisToken> {
    let classify = |c: char| {
        if rules.is_digit(c) {
            Class::Digit
        } else if rules.is_letter(c) {
            Class::Letter
        } else if rules.is_punct(c) {
            Class::Punct
        } else {
            Class::Other
        }
    };

    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let class = classify(chars[i]);
        match class {
            Class::Letter | Class::Digit => {
                let start = i;
                while i < chars.len() && classify(chars[i]) == class {
                    i += 1;
                }
                if class == Class::Digit {
                    let surface: String = chars[start..i].iter().collect();
                    tokens.push(AxisToken::new(surface, start, i, TokenKind::Number));
                } else if emit_words {
                    let surface: String = chars[start..i].iter().map(|&c| fold(c)).collect();
                    tokens.push(AxisToken::new(surface, start, i, TokenKind::Word));
                }
            }
            Class::Punct => {
                tokens.push(AxisToken::new(
                    chars[i].to_string(),
                    i,
                    i + 1,
                    TokenKind::Punctuation,
                ));
                i += 1;
            }
            Class::Other => i += 1,
        }
    }
    tokens
}
