//! Simulated-annealing calibration of the four recognizer parameters
//! against training bitexts with known true points of correspondence.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::axes::AxisMap;
use crate::config::KeyValues;
use crate::error::{Result, SimrError};
use crate::evaluation::{evaluate, ErrorDirection, GoldTBM};
use crate::matching::Predicate;
use crate::recognizer::SimrParams;
use crate::search::{map_bitext, SearchConfig};

/// One training bitext: both axes and the gold standard.
#[derive(Clone, Debug)]
pub struct TrainingBitext {
    pub x: AxisMap,
    pub y: AxisMap,
    pub gold: GoldTBM,
}

/// Everything held fixed while the recognizer parameters vary.
#[derive(Clone, Debug)]
pub struct Objective {
    pub training: Vec<TrainingBitext>,
    pub predicate: Predicate,
    pub search: SearchConfig,
    pub direction: ErrorDirection,
}

impl Objective {
    pub fn new(training: Vec<TrainingBitext>, predicate: Predicate, search: SearchConfig) -> Self {
        Objective {
            training,
            predicate,
            search,
            direction: ErrorDirection::Perpendicular,
        }
    }

    /// Sum of squared errors and TPC count for each training bitext.
    pub fn per_bitext(&self, params: &SimrParams) -> Result<Vec<(f64, usize)>> {
        self.training
            .iter()
            .map(|t| {
                let map = map_bitext(&t.x, &t.y, params, &self.search, &self.predicate)?;
                let report = evaluate(&map, &t.gold, self.direction)?;
                Ok((report.sum_of_squares(), t.gold.len()))
            })
            .collect()
    }

    /// RMS error over the TPCs of all training bitexts pooled together.
    pub fn evaluate(&self, params: &SimrParams) -> Result<f64> {
        if self.training.is_empty() {
            return Err(SimrError::InvalidConfig("no training bitexts".into()));
        }
        Ok(pooled_rms(&self.per_bitext(params)?))
    }
}

/// `sqrt(sum of squared errors / number of errors)` across groups.
pub fn pooled_rms(groups: &[(f64, usize)]) -> f64 {
    let (sum, n) = groups
        .iter()
        .fold((0.0, 0usize), |(s, n), &(gs, gn)| (s + gs, n + gn));
    (sum / n as f64).sqrt()
}

/// Inclusive grid `min, min + step, ..., <= max` for one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Bound {
    pub const fn new(min: f64, max: f64, step: f64) -> Self {
        Bound { min, max, step }
    }

    pub fn fixed(value: f64) -> Self {
        Bound::new(value, value, 1.0)
    }

    pub fn len(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, index: usize) -> f64 {
        self.min + index as f64 * self.step
    }

    /// Grid index closest to `v`, clamped to the grid.
    pub fn nearest(&self, v: f64) -> usize {
        let k = ((v - self.min) / self.step).round();
        (k.max(0.0) as usize).min(self.len() - 1)
    }

    fn check(&self, name: &str, integral: bool, lowest: f64, strict: bool) -> Result<()> {
        let err = |m: &str| Err(SimrError::InvalidBounds(format!("{name}: {m}")));
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return err("non-finite bound");
        }
        if self.step <= 0.0 {
            return err("step must be positive");
        }
        if self.min > self.max {
            return err("min exceeds max");
        }
        if integral && (self.min.fract() != 0.0 || self.step.fract() != 0.0) {
            return err("integer parameter needs integer min and step");
        }
        if self.min < lowest || (strict && self.min <= lowest) {
            return err("min outside the parameter's domain");
        }
        Ok(())
    }
}

/// Search grid for the four parameters. The angle is in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamBounds {
    pub chain_size: Bound,
    pub max_point_dispersal: Bound,
    pub max_angle_deviation_deg: Bound,
    pub max_point_ambiguity: Bound,
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            chain_size: Bound::new(3.0, 12.0, 1.0),
            max_point_dispersal: Bound::new(1.0, 40.0, 1.0),
            max_angle_deviation_deg: Bound::new(1.0, 30.0, 1.0),
            max_point_ambiguity: Bound::new(0.0, 5.0, 1.0),
        }
    }
}

type GridIndex = [usize; 4];

impl ParamBounds {
    pub fn validate(&self) -> Result<()> {
        self.chain_size.check("chain_size", true, 2.0, false)?;
        self.max_point_dispersal
            .check("max_point_dispersal", false, 0.0, true)?;
        self.max_angle_deviation_deg
            .check("max_angle_deviation_deg", false, 0.0, true)?;
        self.max_point_ambiguity
            .check("max_point_ambiguity", true, 0.0, false)?;
        Ok(())
    }

    fn all(&self) -> [&Bound; 4] {
        [
            &self.chain_size,
            &self.max_point_dispersal,
            &self.max_angle_deviation_deg,
            &self.max_point_ambiguity,
        ]
    }

    fn params_at(&self, idx: GridIndex) -> SimrParams {
        SimrParams {
            chain_size: self.chain_size.value(idx[0]).round() as usize,
            max_point_dispersal: self.max_point_dispersal.value(idx[1]),
            max_angle_deviation: self.max_angle_deviation_deg.value(idx[2]).to_radians(),
            max_point_ambiguity: self.max_point_ambiguity.value(idx[3]).round() as usize,
        }
    }

    fn snap(&self, p: &SimrParams) -> GridIndex {
        [
            self.chain_size.nearest(p.chain_size as f64),
            self.max_point_dispersal.nearest(p.max_point_dispersal),
            self.max_angle_deviation_deg.nearest(p.angle_deg()),
            self.max_point_ambiguity
                .nearest(p.max_point_ambiguity as f64),
        ]
    }

    /// Every grid point along one parameter with the others at `base`.
    pub fn axis_values(&self, base: &SimrParams, parameter: usize) -> Vec<SimrParams> {
        let start = self.snap(base);
        (0..self.all()[parameter].len())
            .map(|k| {
                let mut idx = start;
                idx[parameter] = k;
                self.params_at(idx)
            })
            .collect()
    }

    /// Lines of `name: min max step`.
    pub fn parse(input: &str) -> Result<Self> {
        let kv = KeyValues::parse(input)?;
        kv.reject_unknown(&SimrParams::KEYS)?;
        let mut bounds = ParamBounds::default();
        for (line, key, value) in kv.entries() {
            let nums: Vec<f64> = value
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| SimrError::parse(line, format!("{key}: {e}")))?;
            let b = match nums.as_slice() {
                [v] => Bound::fixed(*v),
                [min, max, step] => Bound::new(*min, *max, *step),
                _ => {
                    return Err(SimrError::parse(
                        line,
                        format!("{key}: expected `min max step`"),
                    ))
                }
            };
            match key {
                "chain_size" => bounds.chain_size = b,
                "max_point_dispersal" => bounds.max_point_dispersal = b,
                "max_angle_deviation_deg" => bounds.max_angle_deviation_deg = b,
                _ => bounds.max_point_ambiguity = b,
            }
        }
        bounds.validate()?;
        Ok(bounds)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealConfig {
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    pub steps_per_temperature: usize,
    pub min_temperature: f64,
    pub rng_seed: u64,
    pub bounds: ParamBounds,
    /// Starting point, snapped to the grid. Defaults to the shipped parameters.
    pub initial: SimrParams,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temperature: 2.0,
            cooling_rate: 0.85,
            steps_per_temperature: 10,
            min_temperature: 0.05,
            rng_seed: 7,
            bounds: ParamBounds::default(),
            initial: SimrParams::default(),
        }
    }
}

impl AnnealConfig {
    pub const KEYS: [&'static str; 5] = [
        "initial_temperature",
        "cooling_rate",
        "steps_per_temperature",
        "min_temperature",
        "rng_seed",
    ];

    /// Overrides the schedule fields named in `kv`; other keys are ignored.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(v) = kv.parse_opt("initial_temperature")? {
            self.initial_temperature = v;
        }
        if let Some(v) = kv.parse_opt("cooling_rate")? {
            self.cooling_rate = v;
        }
        if let Some(v) = kv.parse_opt("steps_per_temperature")? {
            self.steps_per_temperature = v;
        }
        if let Some(v) = kv.parse_opt("min_temperature")? {
            self.min_temperature = v;
        }
        if let Some(v) = kv.parse_opt("rng_seed")? {
            self.rng_seed = v;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(SimrError::InvalidConfig(
                "initial_temperature must be positive".into(),
            ));
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(SimrError::InvalidConfig(
                "cooling_rate must be in (0, 1)".into(),
            ));
        }
        if self.min_temperature.is_nan() || self.min_temperature <= 0.0 {
            return Err(SimrError::InvalidConfig(
                "min_temperature must be positive".into(),
            ));
        }
        if self.steps_per_temperature == 0 {
            return Err(SimrError::InvalidConfig(
                "steps_per_temperature must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Temperatures visited: `T0, T0 r, T0 r^2, ...` while at least the minimum.
    pub fn temperature_levels(&self) -> Vec<f64> {
        let mut levels = Vec::new();
        let mut t = self.initial_temperature;
        while t >= self.min_temperature {
            levels.push(t);
            t *= self.cooling_rate;
        }
        levels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub step: usize,
    pub temperature: f64,
    pub params: SimrParams,
    pub objective: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct AnnealResult {
    pub best: Trial,
    pub history: Vec<Trial>,
}

impl AnnealResult {
    pub fn history_tsv(&self) -> String {
        history_tsv(&self.history)
    }
}

pub fn history_tsv(history: &[Trial]) -> String {
    let mut out = String::from(
        "step\ttemperature\tchain_size\tdispersal\tangle_deg\tambiguity\tobjective\taccepted\n",
    );
    for t in history {
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{}\t{}\t{}\t{}\t{:.6}\t{}",
            t.step,
            t.temperature,
            t.params.chain_size,
            t.params.max_point_dispersal,
            round_deg(t.params.angle_deg()),
            t.params.max_point_ambiguity,
            t.objective,
            t.accepted
        );
    }
    out
}

/// Degrees survive a radians round trip only approximately.
fn round_deg(d: f64) -> f64 {
    (d * 1e9).round() / 1e9
}

/// Anneals the recognizer parameters with `objective` as the energy.
///
/// Each step moves one uniformly chosen parameter, among those with more
/// than one grid value, by one grid step up or down; at the edge of the grid
/// the step goes inwards. Improvements are always accepted; a worse proposal is
/// accepted with probability `exp(-delta / T)`. The temperature is
/// multiplied by the cooling rate after every `steps_per_temperature` steps
/// and the run ends once it drops below the minimum.
pub fn anneal(cfg: &AnnealConfig, objective: &Objective) -> Result<AnnealResult> {
    anneal_with(cfg, |p| objective.evaluate(p))
}

/// [`anneal`] with an arbitrary objective function.
pub fn anneal_with<F>(cfg: &AnnealConfig, mut energy: F) -> Result<AnnealResult>
where
    F: FnMut(&SimrParams) -> Result<f64>,
{
    cfg.validate()?;
    let bounds = &cfg.bounds;
    let sizes: Vec<usize> = bounds.all().iter().map(|b| b.len()).collect();
    // Parameters pinned to a single value are never proposed.
    let free: Vec<usize> = (0..4).filter(|&i| sizes[i] > 1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut cache: HashMap<GridIndex, f64> = HashMap::new();
    let mut eval = |idx: GridIndex| -> Result<f64> {
        if let Some(&v) = cache.get(&idx) {
            return Ok(v);
        }
        let v = energy(&bounds.params_at(idx))?;
        cache.insert(idx, v);
        Ok(v)
    };

    let mut state = bounds.snap(&cfg.initial);
    let mut current = eval(state)?;
    let first = Trial {
        step: 0,
        temperature: cfg.initial_temperature,
        params: bounds.params_at(state),
        objective: current,
        accepted: true,
    };
    let mut best = first.clone();
    let mut history = vec![first];

    let mut step = 0;
    for temperature in cfg.temperature_levels() {
        for _ in 0..cfg.steps_per_temperature {
            step += 1;
            let mut proposal = state;
            if !free.is_empty() {
                let which = free[rng.random_range(0..free.len())];
                let up = rng.random_bool(0.5);
                // At either end of the grid the only move is inwards.
                proposal[which] = match (state[which], up) {
                    (0, _) => 1,
                    (i, _) if i + 1 == sizes[which] => i - 1,
                    (i, true) => i + 1,
                    (i, false) => i - 1,
                };
            }

            let (value, accepted) = if proposal == state {
                (current, false)
            } else {
                let value = eval(proposal)?;
                let delta = value - current;
                let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp();
                (value, accept)
            };
            let trial = Trial {
                step,
                temperature,
                params: bounds.params_at(proposal),
                objective: value,
                accepted,
            };
            if accepted {
                state = proposal;
                current = value;
                if value < best.objective {
                    best = trial.clone();
                }
            }
            history.push(trial);
        }
    }
    Ok(AnnealResult { best, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(p: &SimrParams) -> Result<f64> {
        Ok((p.chain_size as f64 - 5.0).powi(2)
            + (p.max_point_dispersal - 12.0).abs()
            + (p.angle_deg() - 8.0).abs() * 0.5
            + p.max_point_ambiguity as f64)
    }

    #[test]
    fn temperature_level_count() {
        let cfg = AnnealConfig {
            initial_temperature: 1.0,
            cooling_rate: 0.5,
            min_temperature: 0.1,
            ..AnnealConfig::default()
        };
        assert_eq!(cfg.temperature_levels().len(), 4);
        let expected = ((0.1f64).ln() / (0.5f64).ln()).ceil() as usize;
        assert_eq!(expected, 4);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = AnnealConfig::default();
        let a = anneal_with(&cfg, bowl).unwrap();
        let b = anneal_with(&cfg, bowl).unwrap();
        assert_eq!(a.history_tsv(), b.history_tsv());
        let c = anneal_with(&AnnealConfig { rng_seed: 8, ..cfg }, bowl).unwrap();
        assert_ne!(a.history_tsv(), c.history_tsv());
    }

    #[test]
    fn best_is_history_minimum_and_on_grid() {
        let cfg = AnnealConfig::default();
        let r = anneal_with(&cfg, bowl).unwrap();
        let min = r
            .history
            .iter()
            .filter(|t| t.accepted)
            .map(|t| t.objective)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best.objective, min);
        assert!(r
            .history
            .iter()
            .all(|t| t.objective >= r.best.objective || !t.accepted));
        for t in &r.history {
            let p = t.params;
            assert!((3..=12).contains(&p.chain_size));
            assert!(p.max_point_dispersal >= 1.0 && p.max_point_dispersal <= 40.0);
            assert_eq!(p.max_point_dispersal.fract(), 0.0);
            assert!((p.angle_deg() - p.angle_deg().round()).abs() < 1e-9);
            assert!(p.max_point_ambiguity <= 5);
        }
        assert!(r.best.objective <= bowl(&SimrParams::default()).unwrap());
    }

    #[test]
    fn improvements_always_accepted() {
        let r = anneal_with(&AnnealConfig::default(), bowl).unwrap();
        let mut current = r.history[0].objective;
        for t in &r.history[1..] {
            if t.objective < current {
                assert!(t.accepted, "improving step {} rejected", t.step);
            }
            if t.accepted {
                current = t.objective;
            }
        }
    }

    #[test]
    fn single_tuple_bounds() {
        let p = SimrParams::default();
        let cfg = AnnealConfig {
            bounds: ParamBounds {
                chain_size: Bound::fixed(6.0),
                max_point_dispersal: Bound::fixed(15.0),
                max_angle_deviation_deg: Bound::fixed(10.0),
                max_point_ambiguity: Bound::fixed(1.0),
            },
            ..AnnealConfig::default()
        };
        let r = anneal_with(&cfg, bowl).unwrap();
        assert!(r.history[0].accepted);
        assert!(r.history[1..].iter().all(|t| !t.accepted));
        assert_eq!(r.best.params.chain_size, p.chain_size);
        assert_eq!(r.best.step, 0);
    }

    #[test]
    fn one_dimensional_walk_finds_scan_optimum() {
        let bounds = ParamBounds {
            chain_size: Bound::fixed(6.0),
            max_point_dispersal: Bound::new(1.0, 40.0, 1.0),
            max_angle_deviation_deg: Bound::fixed(10.0),
            max_point_ambiguity: Bound::fixed(1.0),
        };
        // Rugged 1-D landscape: a local minimum at 30, the global one at 4,
        // and the start (15) inside the global basin.
        let f = |p: &SimrParams| -> Result<f64> {
            let d = p.max_point_dispersal;
            Ok(((d - 4.0).abs()).min((d - 30.0).abs() + 10.0) + (d * 1.7).sin().abs())
        };
        let scan = bounds
            .axis_values(&SimrParams::default(), 1)
            .iter()
            .map(|p| f(p).unwrap())
            .fold(f64::INFINITY, f64::min);
        let cfg = AnnealConfig {
            bounds,
            initial_temperature: 5.0,
            cooling_rate: 0.9,
            steps_per_temperature: 40,
            min_temperature: 0.01,
            ..AnnealConfig::default()
        };
        for seed in 0..8 {
            let r = anneal_with(
                &AnnealConfig {
                    rng_seed: seed,
                    ..cfg.clone()
                },
                f,
            )
            .unwrap();
            assert_eq!(r.best.objective, scan, "seed {seed}");
        }
    }

    #[test]
    fn invalid_bounds() {
        let mut cfg = AnnealConfig::default();
        cfg.bounds.max_point_dispersal = Bound::new(5.0, 1.0, 1.0);
        assert!(matches!(
            anneal_with(&cfg, bowl),
            Err(SimrError::InvalidBounds(_))
        ));
        cfg.bounds = ParamBounds::default();
        cfg.bounds.chain_size = Bound::new(1.0, 5.0, 1.0);
        assert!(matches!(
            anneal_with(&cfg, bowl),
            Err(SimrError::InvalidBounds(_))
        ));
        cfg.bounds = ParamBounds::default();
        cfg.bounds.max_point_ambiguity = Bound::new(0.0, 3.0, 0.5);
        assert!(matches!(
            anneal_with(&cfg, bowl),
            Err(SimrError::InvalidBounds(_))
        ));
    }

    #[test]
    fn bounds_parse() {
        let b = ParamBounds::parse("chain_size: 4 8 1\nmax_point_dispersal: 10\n").unwrap();
        assert_eq!(b.chain_size.len(), 5);
        assert_eq!(b.max_point_dispersal.len(), 1);
        assert!(ParamBounds::parse("chain_size: 4 8").is_err());
        assert!(ParamBounds::parse("foo: 1").is_err());
    }

    #[test]
    fn pooling() {
        let (s1, n1, s2, n2) = (50.0, 10usize, 30.0, 6usize);
        assert!(
            (pooled_rms(&[(s1, n1), (s2, n2)]) - ((s1 + s2) / (n1 + n2) as f64).sqrt()).abs()
                < 1e-15
        );
    }
}
