//! Matching predicates: decide whether two tokens from opposite halves of a
//! bitext are likely mutual translations, and generate the candidate points
//! of correspondence inside a region of the bitext space.

use std::collections::{HashMap, HashSet};

use crate::axes::{AxisMap, AxisToken, TokenKind};
use crate::config::{parse_columns, KeyValues};
use crate::error::{Result, SimrError};
use crate::geometry::{Point, Rect};

/// A candidate point of correspondence.
pub type CandidatePoint = Point;

/// Longest common subsequence ratio: `|LCS(a, b)| / max(|a|, |b|)` over
/// characters. Returns 0 when either string is empty.
pub fn lcsr(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    lcsr_chars(&a, &b)
}

fn lcsr_chars(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    lcs_len(a, b) as f64 / longest as f64
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn normalize(s: &str) -> String {
    s.chars()
        .map(|c| c.to_lowercase().next().unwrap_or(c))
        .collect()
}

/// Directional translation lexicon: x-side string to y-side strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TranslationLexicon {
    entries: HashMap<String, HashSet<String>>,
}

impl TranslationLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<A: AsRef<str>, B: AsRef<str>>(
        pairs: impl IntoIterator<Item = (A, B)>,
    ) -> Self {
        let mut entries: HashMap<String, HashSet<String>> = HashMap::new();
        for (a, b) in pairs {
            entries
                .entry(normalize(a.as_ref()))
                .or_default()
                .insert(normalize(b.as_ref()));
        }
        TranslationLexicon { entries }
    }

    /// Parses `source<TAB>target` lines; `#` starts a comment line.
    pub fn parse(input: &str) -> Result<Self> {
        let rows = parse_columns(input, 2)?;
        Ok(Self::from_pairs(
            rows.iter().map(|r| (r[0].as_str(), r[1].as_str())),
        ))
    }

    /// Number of (source, target) pairs.
    pub fn len(&self) -> usize {
        self.entries.values().map(HashSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, x: &str, y: &str) -> bool {
        self.entries.get(x).is_some_and(|ys| ys.contains(y))
    }

    pub fn x_side(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn y_side(&self) -> impl Iterator<Item = &str> {
        self.entries.values().flatten().map(String::as_str)
    }
}

/// Parses a one-column stop list.
pub fn parse_stop_list(input: &str) -> Result<HashSet<String>> {
    Ok(parse_columns(input, 1)?
        .into_iter()
        .map(|r| normalize(&r[0]))
        .collect())
}

/// Parses a two-column faux-amis list (`x-word<TAB>y-word`).
pub fn parse_faux_amis(input: &str) -> Result<HashSet<(String, String)>> {
    Ok(parse_columns(input, 2)?
        .into_iter()
        .map(|r| (normalize(&r[0]), normalize(&r[1])))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredicateConfig {
    pub lcsr_threshold: f64,
    pub min_cognate_length: usize,
    pub use_lexicon: bool,
    pub use_cognates: bool,
    pub stop_list_x: HashSet<String>,
    pub stop_list_y: HashSet<String>,
    pub faux_amis: HashSet<(String, String)>,
}

impl Default for PredicateConfig {
    fn default() -> Self {
        PredicateConfig {
            lcsr_threshold: 0.71,
            min_cognate_length: 4,
            use_lexicon: false,
            use_cognates: true,
            stop_list_x: HashSet::new(),
            stop_list_y: HashSet::new(),
            faux_amis: HashSet::new(),
        }
    }
}

impl PredicateConfig {
    pub const KEYS: [&'static str; 4] = [
        "lcsr_threshold",
        "min_cognate_length",
        "use_cognates",
        "use_lexicon",
    ];

    pub fn validate(&self) -> Result<()> {
        if !(self.lcsr_threshold > 0.0 && self.lcsr_threshold <= 1.0) {
            return Err(SimrError::InvalidConfig(format!(
                "lcsr_threshold must be in (0, 1], got {}",
                self.lcsr_threshold
            )));
        }
        if self.min_cognate_length == 0 {
            return Err(SimrError::InvalidConfig(
                "min_cognate_length must be at least 1".into(),
            ));
        }
        if !self.use_cognates && !self.use_lexicon {
            return Err(SimrError::InvalidConfig(
                "at least one of use_cognates and use_lexicon must be enabled".into(),
            ));
        }
        Ok(())
    }

    /// Overrides fields named in `kv`; other keys are ignored.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(v) = kv.parse_opt("lcsr_threshold")? {
            self.lcsr_threshold = v;
        }
        if let Some(v) = kv.parse_opt("min_cognate_length")? {
            self.min_cognate_length = v;
        }
        if let Some(v) = kv.parse_opt("use_cognates")? {
            self.use_cognates = v;
        }
        if let Some(v) = kv.parse_opt("use_lexicon")? {
            self.use_lexicon = v;
        }
        self.validate()
    }
}

/// Whether `tx` (from the x text) and `ty` (from the y text) are likely
/// mutual translations.
///
/// Stop-listed words and faux amis never match. Otherwise a pair matches if
/// it is an identical number or punctuation mark, a sufficiently long word
/// pair above the LCSR threshold, or a lexicon entry.
pub fn match_tokens(
    tx: &AxisToken,
    ty: &AxisToken,
    cfg: &PredicateConfig,
    lex: &TranslationLexicon,
) -> bool {
    if cfg.stop_list_x.contains(&tx.surface) || cfg.stop_list_y.contains(&ty.surface) {
        return false;
    }
    if !cfg.faux_amis.is_empty()
        && cfg
            .faux_amis
            .contains(&(tx.surface.clone(), ty.surface.clone()))
    {
        return false;
    }
    let symbolic = |k: TokenKind| matches!(k, TokenKind::Number | TokenKind::Punctuation);
    if symbolic(tx.kind) && symbolic(ty.kind) && tx.surface == ty.surface {
        return true;
    }
    if cfg.use_cognates
        && tx.kind == TokenKind::Word
        && ty.kind == TokenKind::Word
        && is_cognate(&tx.surface, &ty.surface, cfg)
    {
        return true;
    }
    cfg.use_lexicon && lex.contains(&tx.surface, &ty.surface)
}

fn is_cognate(a: &str, b: &str, cfg: &PredicateConfig) -> bool {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() {
        (&a, &b)
    } else {
        (&b, &a)
    };
    if short.len() < cfg.min_cognate_length {
        return false;
    }
    // The LCS is at most the shorter length.
    if (short.len() as f64 / long.len() as f64) < cfg.lcsr_threshold {
        return false;
    }
    if cfg.lcsr_threshold >= 1.0 {
        return a == b;
    }
    lcsr_chars(&a, &b) >= cfg.lcsr_threshold
}

/// All points `(tx.position, ty.position)` inside `region` whose tokens
/// match, sorted by `(x, y)` with duplicates removed.
pub fn generate_points(
    region: &Rect,
    ax: &AxisMap,
    ay: &AxisMap,
    cfg: &PredicateConfig,
    lex: &TranslationLexicon,
) -> Vec<CandidatePoint> {
    if region.is_empty() {
        return Vec::new();
    }
    let xs = ax.in_range(region.min.x, region.max.x);
    let ys = ay.in_range(region.min.y, region.max.y);
    let mut out = Vec::new();
    for tx in xs {
        for ty in ys {
            if match_tokens(tx, ty, cfg, lex) {
                out.push(Point::new(tx.position, ty.position));
            }
        }
    }
    sort_dedup(&mut out);
    out
}

pub(crate) fn sort_dedup(points: &mut Vec<Point>) {
    points.sort_by(Point::cmp_xy);
    points.dedup();
}

/// The token pair a predicate needs to look at, bundled with the lexicon.
#[derive(Clone, Debug)]
pub struct Predicate {
    pub config: PredicateConfig,
    pub lexicon: TranslationLexicon,
}

impl Predicate {
    pub fn new(config: PredicateConfig, lexicon: TranslationLexicon) -> Result<Self> {
        config.validate()?;
        Ok(Predicate { config, lexicon })
    }

    pub fn cognates(lcsr_threshold: f64) -> Self {
        Predicate {
            config: PredicateConfig {
                lcsr_threshold,
                ..PredicateConfig::default()
            },
            lexicon: TranslationLexicon::new(),
        }
    }

    pub fn matches(&self, tx: &AxisToken, ty: &AxisToken) -> bool {
        match_tokens(tx, ty, &self.config, &self.lexicon)
    }
}

/// Point generation for one bitext with match decisions memoized per
/// surface pair. Produces exactly what [`generate_points`] produces.
pub struct PointGenerator<'a> {
    ax: &'a AxisMap,
    ay: &'a AxisMap,
    predicate: &'a Predicate,
    ids_x: Vec<u32>,
    ids_y: Vec<u32>,
    cache: HashMap<(u32, u32), bool>,
}

fn intern(map: &AxisMap) -> Vec<u32> {
    let mut table: HashMap<(&str, TokenKind), u32> = HashMap::new();
    map.tokens()
        .iter()
        .map(|t| {
            let next = table.len() as u32;
            *table.entry((t.surface.as_str(), t.kind)).or_insert(next)
        })
        .collect()
}

impl<'a> PointGenerator<'a> {
    pub fn new(ax: &'a AxisMap, ay: &'a AxisMap, predicate: &'a Predicate) -> Self {
        PointGenerator {
            ax,
            ay,
            predicate,
            ids_x: intern(ax),
            ids_y: intern(ay),
            cache: HashMap::new(),
        }
    }

    pub fn points_in(&mut self, region: &Rect) -> Vec<CandidatePoint> {
        if region.is_empty() {
            return Vec::new();
        }
        let rx = self.ax.index_range(region.min.x, region.max.x);
        let ry = self.ay.index_range(region.min.y, region.max.y);
        let (tx, ty) = (self.ax.tokens(), self.ay.tokens());
        let mut out = Vec::new();
        for i in rx {
            for j in ry.clone() {
                let key = (self.ids_x[i], self.ids_y[j]);
                let predicate = self.predicate;
                let hit = *self
                    .cache
                    .entry(key)
                    .or_insert_with(|| predicate.matches(&tx[i], &ty[j]));
                if hit {
                    out.push(Point::new(tx[i].position, ty[j].position));
                }
            }
        }
        sort_dedup(&mut out);
        out
    }
}
