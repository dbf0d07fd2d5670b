//! Chain recognition with the localized noise filter.
//!
//! Candidate points inside the current search rectangle are first thinned by
//! their ambiguity level, then scanned for chains: runs of `chain_size`
//! neighbouring points that are injective, lie close to their least-squares
//! line, and run roughly parallel to the main diagonal.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::config::KeyValues;
use crate::error::{Result, SimrError};
use crate::geometry::{least_squares_fit, BitextSpace, LineFit, Point};
use crate::matching::CandidatePoint;

/// The four tunable parameters of the recognizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimrParams {
    pub chain_size: usize,
    /// Characters.
    pub max_point_dispersal: f64,
    /// Radians.
    pub max_angle_deviation: f64,
    pub max_point_ambiguity: usize,
}

impl Default for SimrParams {
    fn default() -> Self {
        SimrParams {
            chain_size: 6,
            max_point_dispersal: 15.0,
            max_angle_deviation: 10f64.to_radians(),
            max_point_ambiguity: 1,
        }
    }
}

impl SimrParams {
    pub const KEYS: [&'static str; 4] = [
        "chain_size",
        "max_point_dispersal",
        "max_angle_deviation_deg",
        "max_point_ambiguity",
    ];

    pub fn validate(&self) -> Result<()> {
        if self.chain_size < 2 {
            return Err(SimrError::InvalidConfig(
                "chain_size must be at least 2".into(),
            ));
        }
        if !(self.max_point_dispersal > 0.0 && self.max_point_dispersal.is_finite()) {
            return Err(SimrError::InvalidConfig(
                "max_point_dispersal must be positive".into(),
            ));
        }
        if !(self.max_angle_deviation > 0.0 && self.max_angle_deviation.is_finite()) {
            return Err(SimrError::InvalidConfig(
                "max_angle_deviation must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Reads the four parameters from a key/value block. The angle is given
    /// in degrees.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let params = SimrParams {
            chain_size: kv.require("chain_size")?,
            max_point_dispersal: kv.require("max_point_dispersal")?,
            max_angle_deviation: kv.require::<f64>("max_angle_deviation_deg")?.to_radians(),
            max_point_ambiguity: kv.require("max_point_ambiguity")?,
        };
        params.validate()?;
        Ok(params)
    }

    /// Overrides the parameters named in `kv`; other keys are ignored.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(v) = kv.parse_opt("chain_size")? {
            self.chain_size = v;
        }
        if let Some(v) = kv.parse_opt("max_point_dispersal")? {
            self.max_point_dispersal = v;
        }
        if let Some(v) = kv.parse_opt::<f64>("max_angle_deviation_deg")? {
            self.max_angle_deviation = v.to_radians();
        }
        if let Some(v) = kv.parse_opt("max_point_ambiguity")? {
            self.max_point_ambiguity = v;
        }
        self.validate()
    }

    pub fn parse(input: &str) -> Result<Self> {
        let kv = KeyValues::parse(input)?;
        kv.reject_unknown(&Self::KEYS)?;
        Self::from_key_values(&kv)
    }

    pub fn angle_deg(&self) -> f64 {
        self.max_angle_deviation.to_degrees()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "chain_size: {}", self.chain_size);
        let _ = writeln!(out, "max_point_dispersal: {}", self.max_point_dispersal);
        let _ = writeln!(out, "max_angle_deviation_deg: {}", self.angle_deg());
        let _ = writeln!(out, "max_point_ambiguity: {}", self.max_point_ambiguity);
        out
    }
}

/// An accepted group of candidate points.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub points: Vec<CandidatePoint>,
    pub fit: LineFit,
    /// `(max x, max y)` over the points.
    pub anchor_corner: Point,
    /// `|fit.angle - atan(bitext slope)|`, radians.
    pub angle_deviation: f64,
}

impl Chain {
    /// Whether some pair of points is ordered differently along the two axes.
    pub fn is_non_monotonic(&self) -> bool {
        let pts = &self.points;
        (0..pts.len()).any(|i| {
            (i + 1..pts.len()).any(|j| (pts[i].x - pts[j].x) * (pts[i].y - pts[j].y) < 0.0)
        })
    }
}

fn key(v: f64) -> u64 {
    // Collapse -0.0 onto 0.0.
    (v + 0.0).to_bits()
}

/// `X + Y - 2`, where `X` counts the points of `points` in `p`'s column and
/// `Y` those in its row. `p` is expected to be one of `points`.
pub fn ambiguity_level(p: &CandidatePoint, points: &[CandidatePoint]) -> usize {
    let column = points.iter().filter(|q| q.x == p.x).count();
    let row = points.iter().filter(|q| q.y == p.y).count();
    (column + row).saturating_sub(2)
}

/// Ambiguity level of every point, computed in linear time.
pub fn ambiguity_levels(points: &[CandidatePoint]) -> Vec<usize> {
    let mut columns: HashMap<u64, usize> = HashMap::with_capacity(points.len());
    let mut rows: HashMap<u64, usize> = HashMap::with_capacity(points.len());
    for p in points {
        *columns.entry(key(p.x)).or_default() += 1;
        *rows.entry(key(p.y)).or_default() += 1;
    }
    points
        .iter()
        .map(|p| (columns[&key(p.x)] + rows[&key(p.y)]).saturating_sub(2))
        .collect()
}

/// Keeps the points whose ambiguity level, measured against the whole input,
/// does not exceed `max_point_ambiguity`. Levels are computed once; removing
/// a point does not lower the levels of the others.
pub fn filter_noise(points: &[CandidatePoint], params: &SimrParams) -> Vec<CandidatePoint> {
    ambiguity_levels(points)
        .into_iter()
        .zip(points)
        .filter(|(level, _)| *level <= params.max_point_ambiguity)
        .map(|(_, p)| *p)
        .collect()
}

/// Orders points by their projection onto the main-diagonal direction.
pub fn diagonal_order(points: &mut [CandidatePoint], space: &BitextSpace) {
    let scale = space.width() / space.height();
    points.sort_by(|a, b| {
        (a.x + a.y * scale)
            .total_cmp(&(b.x + b.y * scale))
            .then_with(|| a.cmp_xy(b))
    });
}

fn is_injective(points: &[CandidatePoint]) -> bool {
    let mut xs: Vec<u64> = points.iter().map(|p| key(p.x)).collect();
    let mut ys: Vec<u64> = points.iter().map(|p| key(p.y)).collect();
    xs.sort_unstable();
    ys.sort_unstable();
    xs.windows(2).all(|w| w[0] != w[1]) && ys.windows(2).all(|w| w[0] != w[1])
}

/// Applies the injectivity, dispersal and angle filters to one point set.
pub fn check_chain(
    points: &[CandidatePoint],
    params: &SimrParams,
    space: &BitextSpace,
) -> Option<Chain> {
    if points.len() < 2 || !is_injective(points) {
        return None;
    }
    let fit = least_squares_fit(points).ok()?;
    if fit.rms_dispersal > params.max_point_dispersal {
        return None;
    }
    let angle_deviation = (fit.angle - space.diagonal_angle()).abs();
    if angle_deviation > params.max_angle_deviation {
        return None;
    }
    let anchor_corner = points.iter().fold(Point::new(f64::MIN, f64::MIN), |c, p| {
        Point::new(c.x.max(p.x), c.y.max(p.y))
    });
    Some(Chain {
        points: points.to_vec(),
        fit,
        anchor_corner,
        angle_deviation,
    })
}

/// Every window of `chain_size` consecutive points, in diagonal order, that
/// passes all three chain filters.
pub fn find_chains(
    points: &[CandidatePoint],
    params: &SimrParams,
    space: &BitextSpace,
) -> Vec<Chain> {
    let k = params.chain_size;
    if k < 2 || points.len() < k {
        return Vec::new();
    }
    let mut ordered = points.to_vec();
    diagonal_order(&mut ordered, space);
    ordered
        .windows(k)
        .filter_map(|w| check_chain(w, params, space))
        .collect()
}

/// The least dispersed chain; ties go to the smaller angle deviation, then
/// to the chain whose top-right corner lies further left.
pub fn best_chain(chains: &[Chain]) -> Result<&Chain> {
    chains
        .iter()
        .min_by(|a, b| {
            a.fit
                .rms_dispersal
                .total_cmp(&b.fit.rms_dispersal)
                .then(a.angle_deviation.total_cmp(&b.angle_deviation))
                .then(a.anchor_corner.x.total_cmp(&b.anchor_corner.x))
        })
        .ok_or(SimrError::EmptyChainSet)
}
