//! Synthetic bitexts with known correspondence.
//!
//! A source text is copied to the x side (minus any omitted spans) and
//! distorted word by word into the y side: letters are substituted through a
//! fixed scrambled alphabet, word lengths are jittered and adjacent words are
//! swapped. The ends of words that survive on both sides become the gold
//! standard.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SimrError};
use crate::evaluation::GoldTBM;
use crate::geometry::Point;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DistortionSpec {
    /// Probability that a letter of the y text is replaced.
    pub substitution_rate: f64,
    /// `(position, length)` spans of the source, in characters, deleted from
    /// the x text.
    pub omission_spans: Vec<(usize, usize)>,
    /// Probability of swapping a word with its right neighbour.
    pub inversion_rate: f64,
    /// Standard deviation of the log-scale word length noise.
    pub length_jitter: f64,
    pub rng_seed: u64,
}

impl DistortionSpec {
    pub fn identity() -> Self {
        Self::default()
    }

    fn validate(&self, source_len: usize) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.substitution_rate) {
            return Err(SimrError::InvalidSpec(
                "substitution_rate must be in [0, 1]".into(),
            ));
        }
        if !unit(self.inversion_rate) {
            return Err(SimrError::InvalidSpec(
                "inversion_rate must be in [0, 1]".into(),
            ));
        }
        if !(self.length_jitter >= 0.0 && self.length_jitter.is_finite()) {
            return Err(SimrError::InvalidSpec(
                "length_jitter must be non-negative".into(),
            ));
        }
        let mut spans = self.omission_spans.clone();
        spans.sort_unstable();
        for &(pos, len) in &spans {
            if len == 0 || pos + len > source_len {
                return Err(SimrError::InvalidSpec(format!(
                    "omission ({pos}, {len}) outside a source of {source_len} characters"
                )));
            }
        }
        if spans.windows(2).any(|w| w[0].0 + w[0].1 > w[1].0) {
            return Err(SimrError::InvalidSpec("omission spans overlap".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticBitext {
    pub text_x: String,
    pub text_y: String,
    pub gold: GoldTBM,
    /// Adjacent word pairs swapped in the y text.
    pub inversions: usize,
}

impl SyntheticBitext {
    /// Aligned segment lists cut at the gold points.
    pub fn segments(&self) -> Result<(Vec<String>, Vec<String>)> {
        self.gold.to_segments(&self.text_x, &self.text_y)
    }
}

struct Unit {
    word_start: usize,
    word_end: usize,
    end: usize,
}

/// Splits into units of one alphanumeric run plus the separator after it.
/// Characters before the first word are returned as the prefix length.
fn units(chars: &[char]) -> (usize, Vec<Unit>) {
    let mut out: Vec<Unit> = Vec::new();
    let mut i = 0;
    while i < chars.len() && !chars[i].is_alphanumeric() {
        i += 1;
    }
    let prefix = i;
    while i < chars.len() {
        let word_start = i;
        while i < chars.len() && chars[i].is_alphanumeric() {
            i += 1;
        }
        let word_end = i;
        while i < chars.len() && !chars[i].is_alphanumeric() {
            i += 1;
        }
        out.push(Unit {
            word_start,
            word_end,
            end: i,
        });
    }
    (prefix, out)
}

/// A random cyclic permutation of `a..=z`, so no letter maps to itself.
fn scrambled_alphabet(rng: &mut ChaCha8Rng) -> [char; 26] {
    let mut letters: Vec<char> = ('a'..='z').collect();
    letters.shuffle(rng);
    let mut table = ['a'; 26];
    for i in 0..26 {
        table[(letters[i] as u8 - b'a') as usize] = letters[(i + 1) % 26];
    }
    table
}

fn substitute(c: char, table: &[char; 26]) -> char {
    if c.is_ascii_lowercase() {
        table[(c as u8 - b'a') as usize]
    } else if c.is_ascii_uppercase() {
        table[(c.to_ascii_lowercase() as u8 - b'a') as usize].to_ascii_uppercase()
    } else {
        c
    }
}

fn distort_word(
    word: &[char],
    spec: &DistortionSpec,
    table: &[char; 26],
    rng: &mut ChaCha8Rng,
) -> Vec<char> {
    // Numbers are kept verbatim.
    if word.iter().any(|c| c.is_numeric()) {
        return word.to_vec();
    }
    let mut out = word.to_vec();
    if spec.length_jitter > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        let target = ((word.len() as f64) * (spec.length_jitter * z).exp())
            .round()
            .max(1.0) as usize;
        if target < out.len() {
            out.truncate(target);
        } else {
            for k in word.len()..target {
                out.push(word[k % word.len()].to_ascii_lowercase());
            }
        }
    }
    if spec.substitution_rate > 0.0 {
        for c in out.iter_mut() {
            if c.is_ascii_alphabetic() && rng.random_bool(spec.substitution_rate) {
                *c = substitute(*c, table);
            }
        }
    }
    out
}

/// Builds a distorted bitext from `source`. Whitespace is normalized to
/// single-character spaces so the result can be written as segment files.
pub fn generate(source: &str, spec: &DistortionSpec) -> Result<SyntheticBitext> {
    let chars: Vec<char> = source
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .collect();
    if chars.is_empty() {
        return Err(SimrError::InvalidSpec("empty source".into()));
    }
    spec.validate(chars.len())?;
    let (prefix, units) = units(&chars);
    if units.is_empty() {
        return Err(SimrError::InvalidSpec("source contains no words".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let table = scrambled_alphabet(&mut rng);

    // Swap decisions first, then word distortions, in unit order.
    let mut swapped_with_next = vec![false; units.len()];
    let mut k = 0;
    while k + 1 < units.len() {
        if spec.inversion_rate > 0.0 && rng.random_bool(spec.inversion_rate) {
            swapped_with_next[k] = true;
            k += 2;
        } else {
            k += 1;
        }
    }
    let words: Vec<Vec<char>> = units
        .iter()
        .map(|u| distort_word(&chars[u.word_start..u.word_end], spec, &table, &mut rng))
        .collect();

    let deleted_before = |pos: usize| -> usize {
        spec.omission_spans
            .iter()
            .map(|&(p, l)| pos.saturating_sub(p).min(l))
            .sum()
    };
    let intersects =
        |a: usize, b: usize| spec.omission_spans.iter().any(|&(p, l)| a < p + l && p < b);

    let text_x: String = chars
        .iter()
        .enumerate()
        .filter(|(i, _)| !intersects(*i, *i + 1))
        .map(|(_, c)| c)
        .collect();
    let len_x = text_x.chars().count();
    if len_x == 0 {
        return Err(SimrError::InvalidSpec(
            "omissions delete the whole x text".into(),
        ));
    }

    let mut text_y: Vec<char> = chars[..prefix].to_vec();
    let mut tpcs: Vec<Point> = Vec::new();
    let mut inversions = 0;
    let mut k = 0;
    while k < units.len() {
        let span = if swapped_with_next[k] { 2 } else { 1 };
        let order: &[usize] = if span == 2 { &[1, 0] } else { &[0] };
        for (slot, &which) in order.iter().enumerate() {
            let u = &units[k + slot];
            text_y.extend_from_slice(&words[k + which]);
            text_y.extend_from_slice(&chars[u.word_end..u.end]);
        }
        let first = &units[k];
        let last = &units[k + span - 1];
        if !intersects(first.word_start, last.end) {
            let x = last.end - deleted_before(last.end);
            tpcs.push(Point::new(x as f64, text_y.len() as f64));
        }
        inversions += span - 1;
        k += span;
    }

    let terminus = Point::new(len_x as f64, text_y.len() as f64);
    while tpcs
        .last()
        .is_some_and(|p| !(p.x < terminus.x && p.y < terminus.y))
    {
        tpcs.pop();
    }
    tpcs.push(terminus);

    Ok(SyntheticBitext {
        text_x,
        text_y: text_y.into_iter().collect(),
        gold: GoldTBM::new(tpcs)?,
        inversions,
    })
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(1..=4);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
        if rng.random_bool(0.35) {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        }
    }
    w
}

/// Pseudo-natural text of exactly `n_chars` characters: sentences of
/// pseudo-words drawn from a Zipf-distributed vocabulary in which frequent
/// words are short, with occasional commas and numbers.
pub fn random_text(n_chars: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab: Vec<String> = (0..3000).map(|_| pseudo_word(&mut rng)).collect();
    vocab.sort_by_key(|w| w.len());
    vocab.dedup();
    let weights: Vec<f64> = (0..vocab.len()).map(|r| 1.0 / (r as f64 + 2.0)).collect();
    let zipf = WeightedIndex::new(&weights).expect("positive weights");

    let mut out = String::with_capacity(n_chars + 64);
    while out.chars().count() < n_chars {
        let words = rng.random_range(6..=18);
        for i in 0..words {
            let word = if rng.random_bool(0.03) {
                rng.random_range(1..10_000).to_string()
            } else {
                vocab[zipf.sample(&mut rng)].clone()
            };
            if i == 0 {
                let mut cs = word.chars();
                if let Some(f) = cs.next() {
                    out.extend(f.to_uppercase());
                    out.push_str(cs.as_str());
                }
            } else {
                out.push_str(&word);
            }
            if i + 1 < words {
                if rng.random_bool(0.08) {
                    out.push(',');
                }
                out.push(' ');
            }
        }
        out.push_str(". ");
    }
    let mut text: String = out.chars().take(n_chars).collect();
    if text.ends_with(' ') {
        text.pop();
        text.push('.');
    }
    text
}
