//! Run configuration shared by the subcommands: the key/value settings file
//! plus the matching resources named on the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use simr_core::matching::{parse_faux_amis, parse_stop_list};
use simr_core::{
    read_to_string, tokenize_cognate_mode, tokenize_lexicon_mode, AnnealConfig, AxisMap, KeyValues,
    Predicate, PredicateConfig, SearchConfig, SimrParams, TokenRules, TranslationLexicon,
};

/// Everything a settings file may contain, with defaults for what it omits.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub params: SimrParams,
    pub search: SearchConfig,
    pub predicate: PredicateConfig,
    pub anneal: AnnealConfig,
}

impl Settings {
    pub fn parse(input: &str) -> simr_core::Result<Self> {
        let kv = KeyValues::parse(input)?;
        let known: Vec<&str> = SimrParams::KEYS
            .iter()
            .chain(&SearchConfig::KEYS)
            .chain(&PredicateConfig::KEYS)
            .chain(&AnnealConfig::KEYS)
            .copied()
            .collect();
        kv.reject_unknown(&known)?;
        let mut s = Settings::default();
        s.params.apply(&kv)?;
        s.search.apply(&kv)?;
        s.predicate.apply(&kv)?;
        s.anneal.apply(&kv)?;
        s.anneal.initial = s.params;
        Ok(s)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Settings::default()),
            Some(p) => {
                let text = read_to_string(p)?;
                Settings::parse(&text).with_context(|| format!("{}", p.display()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Every word is a token; words match by spelling similarity.
    #[default]
    Cognate,
    /// Only lexicon entries (plus numbers and punctuation) are tokens.
    Lexicon,
}

/// Matching resources and tokenization options.
#[derive(Args, Clone, Debug, Default)]
pub struct MatchArgs {
    #[arg(long, value_enum, default_value_t = Mode::Cognate)]
    pub mode: Mode,
    /// Translation lexicon, two tab-separated columns (x word, y word).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Words of the x text that never match.
    #[arg(long)]
    pub stop_x: Option<PathBuf>,
    /// Words of the y text that never match.
    #[arg(long)]
    pub stop_y: Option<PathBuf>,
    /// Word pairs that look alike but must not match.
    #[arg(long)]
    pub faux_amis: Option<PathBuf>,
    /// Tokenization rules for the x text.
    #[arg(long)]
    pub rules_x: Option<PathBuf>,
    /// Tokenization rules for the y text.
    #[arg(long)]
    pub rules_y: Option<PathBuf>,
}

fn load_with<T>(path: &Path, parse: impl FnOnce(&str) -> simr_core::Result<T>) -> Result<T> {
    let text = read_to_string(path)?;
    parse(&text).with_context(|| format!("{}", path.display()))
}

fn load_rules(path: Option<&PathBuf>) -> Result<TokenRules> {
    match path {
        Some(p) => load_with(p, TokenRules::parse),
        None => Ok(TokenRules::default()),
    }
}

/// Loaded matching resources, ready to tokenize and match a bitext.
pub struct Matcher {
    pub mode: Mode,
    pub predicate: Predicate,
    rules_x: TokenRules,
    rules_y: TokenRules,
}

impl Matcher {
    pub fn new(args: &MatchArgs, base: &PredicateConfig) -> Result<Self> {
        let mut config = base.clone();
        let lexicon = match &args.lexicon {
            Some(p) => {
                config.use_lexicon = true;
                load_with(p, TranslationLexicon::parse)?
            }
            None if args.mode == Mode::Lexicon => bail!("lexicon mode needs --lexicon"),
            None => TranslationLexicon::new(),
        };
        if let Some(p) = &args.stop_x {
            config.stop_list_x = load_with(p, parse_stop_list)?;
        }
        if let Some(p) = &args.stop_y {
            config.stop_list_y = load_with(p, parse_stop_list)?;
        }
        if let Some(p) = &args.faux_amis {
            config.faux_amis = load_with(p, parse_faux_amis)?;
        }
        Ok(Matcher {
            mode: args.mode,
            predicate: Predicate::new(config, lexicon)?,
            rules_x: load_rules(args.rules_x.as_ref())?,
            rules_y: load_rules(args.rules_y.as_ref())?,
        })
    }

    pub fn axis(&self, text: &str, side: Side) -> simr_core::Result<AxisMap> {
        let rules = match side {
            Side::X => &self.rules_x,
            Side::Y => &self.rules_y,
        };
        match self.mode {
            Mode::Cognate => tokenize_cognate_mode(text, rules),
            Mode::Lexicon => {
                let lexicon = &self.predicate.lexicon;
                match side {
                    Side::X => tokenize_lexicon_mode(text, lexicon.x_side(), rules),
                    Side::Y => tokenize_lexicon_mode(text, lexicon.y_side(), rules),
                }
            }
        }
    }

    /// Reads and tokenizes both halves of a bitext.
    pub fn axes(&self, x: &Path, y: &Path) -> Result<(AxisMap, AxisMap)> {
        let tx = read_to_string(x)?;
        let ty = read_to_string(y)?;
        let ax = self
            .axis(&tx, Side::X)
            .with_context(|| format!("{}", x.display()))?;
        let ay = self
            .axis(&ty, Side::Y)
            .with_context(|| format!("{}", y.display()))?;
        Ok((ax, ay))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Side {
    X,
    Y,
}

/// Reads a tab-separated manifest, resolving relative paths against the
/// manifest's own directory.
pub fn read_manifest(path: &Path, columns: usize) -> Result<Vec<Vec<PathBuf>>> {
    let rows = load_with(path, |t| simr_core::config::parse_columns(t, columns))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(rows
        .into_iter()
        .map(|row| row.into_iter().map(|f| base.join(f)).collect())
        .collect())
}
