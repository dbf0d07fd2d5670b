//! The expanding-rectangle trace.
//!
//! The first search rectangle sits at the origin. Inside it, candidate points
//! are generated, noise-filtered and scanned for chains. If nothing is
//! found the rectangle grows about its fixed bottom-left anchor; once a chain
//! is accepted, the next rectangle starts at that chain's top-right corner.
//! The accepted points, cleaned up into a strictly monotonic polyline between
//! origin and terminus, form the bitext map.

use std::fmt::Write as _;

use crate::axes::AxisMap;
use crate::config::KeyValues;
use crate::error::{Result, SimrError};
use crate::geometry::{interpolate, BitextSpace, Point, Rect};
use crate::matching::{PointGenerator, Predicate};
use crate::recognizer::{best_chain, filter_noise, find_chains, Chain, SimrParams};

/// A search region whose diagonal is parallel to the main diagonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchRect {
    pub anchor: Point,
    pub width: f64,
    pub height: f64,
}

impl SearchRect {
    pub fn new(anchor: Point, width: f64, space: &BitextSpace) -> Self {
        SearchRect {
            anchor,
            width,
            height: width * space.slope(),
        }
    }

    /// The region actually searched: the rectangle cut off at the terminus.
    pub fn clipped(&self, space: &BitextSpace) -> Rect {
        Rect::new(
            self.anchor,
            Point::new(
                (self.anchor.x + self.width).min(space.width()),
                (self.anchor.y + self.height).min(space.height()),
            ),
        )
    }

    /// Whether the rectangle already reaches the terminus in both directions,
    /// so growing it further cannot change what it contains.
    pub fn covers_remainder(&self, space: &BitextSpace) -> bool {
        self.anchor.x + self.width >= space.width() && self.anchor.y + self.height >= space.height()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    /// Width of a fresh rectangle, characters.
    pub initial_width: f64,
    pub growth_factor: f64,
    pub max_expansions: usize,
    /// After a chain is found away from the anchor, also trace backwards
    /// from it into the skipped region.
    pub backfill: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            initial_width: 20.0,
            growth_factor: 1.5,
            max_expansions: 50,
            backfill: true,
        }
    }
}

impl SearchConfig {
    pub const KEYS: [&'static str; 4] = [
        "initial_width",
        "growth_factor",
        "max_expansions",
        "backfill",
    ];

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_width > 0.0 && self.initial_width.is_finite()) {
            return Err(SimrError::InvalidConfig(
                "initial_width must be positive".into(),
            ));
        }
        if !(self.growth_factor > 1.0 && self.growth_factor.is_finite()) {
            return Err(SimrError::InvalidConfig(
                "growth_factor must exceed 1".into(),
            ));
        }
        Ok(())
    }

    /// Overrides fields named in `kv`; other keys are ignored.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(v) = kv.parse_opt("initial_width")? {
            self.initial_width = v;
        }
        if let Some(v) = kv.parse_opt("growth_factor")? {
            self.growth_factor = v;
        }
        if let Some(v) = kv.parse_opt("max_expansions")? {
            self.max_expansions = v;
        }
        if let Some(v) = kv.parse_opt("backfill")? {
            self.backfill = v;
        }
        self.validate()
    }
}

/// An injective, monotonically increasing map from origin to terminus.
#[derive(Clone, Debug, PartialEq)]
pub struct BitextMap {
    space: BitextSpace,
    points: Vec<Point>,
    /// Accepted chains in acceptance order, before monotonic cleanup.
    pub chains: Vec<Chain>,
    /// Chain points dropped to make the map strictly monotonic.
    pub discarded: usize,
}

impl BitextMap {
    /// The map with no interior points.
    pub fn diagonal(space: BitextSpace) -> Self {
        BitextMap {
            space,
            points: vec![space.origin(), space.terminus()],
            chains: Vec::new(),
            discarded: 0,
        }
    }

    /// Builds a map from explicit vertices. Origin and terminus are added if
    /// missing; the vertices must be strictly increasing in both coordinates.
    pub fn from_points(space: BitextSpace, interior: &[Point]) -> Result<Self> {
        let mut points = Vec::with_capacity(interior.len() + 2);
        if interior.first() != Some(&space.origin()) {
            points.push(space.origin());
        }
        points.extend_from_slice(interior);
        if interior.last() != Some(&space.terminus()) {
            points.push(space.terminus());
        }
        let ok = points
            .windows(2)
            .all(|w| w[0].x < w[1].x && w[0].y < w[1].y)
            && points.iter().all(|p| space.contains(*p));
        if !ok {
            return Err(SimrError::InvalidConfig(
                "map points must be strictly increasing and inside the bitext space".into(),
            ));
        }
        Ok(BitextMap {
            space,
            points,
            chains: Vec::new(),
            discarded: 0,
        })
    }

    pub fn space(&self) -> &BitextSpace {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate(&self.points, x)
    }

    pub fn is_degenerate(&self) -> bool {
        self.points.len() == 2
    }

    /// The same map with the roles of the two texts exchanged.
    pub fn transposed(&self) -> Self {
        BitextMap {
            space: self.space.transposed(),
            points: self.points.iter().map(|p| p.transposed()).collect(),
            chains: Vec::new(),
            discarded: self.discarded,
        }
    }

    /// `x<TAB>y` lines with two decimals, preceded by the header and the
    /// `# discarded` and `# chains` comment lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# discarded: {}", self.discarded);
        let _ = writeln!(out, "# chains: {}", self.chains.len());
        out.push_str("x\ty\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.2}\t{:.2}", p.x, p.y);
        }
        out
    }

    /// Reads a map written by [`BitextMap::to_tsv`]. Chain provenance is not
    /// stored in the file and comes back empty.
    pub fn from_tsv(input: &str, space: BitextSpace) -> Result<Self> {
        let mut interior = Vec::new();
        let mut discarded = 0;
        let mut seen_header = false;
        for (i, raw) in input.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("discarded:") {
                    discarded = v
                        .trim()
                        .parse()
                        .map_err(|_| SimrError::parse(i + 1, "bad discarded count"))?;
                }
                continue;
            }
            if !seen_header {
                if line != "x\ty" {
                    return Err(SimrError::parse(i + 1, "expected header `x<TAB>y`"));
                }
                seen_header = true;
                continue;
            }
            let (x, y) = line
                .split_once('\t')
                .ok_or_else(|| SimrError::parse(i + 1, "expected `x<TAB>y`"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| SimrError::parse(i + 1, e.to_string()))
            };
            interior.push(Point::new(parse(x)?, parse(y)?));
        }
        // Written maps carry origin and terminus at two-decimal precision.
        if let Some(first) = interior.first() {
            if first.x == 0.0 && first.y == 0.0 {
                interior.remove(0);
            }
        }
        if let Some(last) = interior.last() {
            if (last.x - space.width()).abs() < 0.005 && (last.y - space.height()).abs() < 0.005 {
                interior.pop();
            }
        }
        let mut map = BitextMap::from_points(space, &interior)?;
        map.discarded = discarded;
        Ok(map)
    }
}

/// Indices of a longest subsequence of `ys` that is strictly increasing.
/// Among equally long subsequences the lexicographically earliest ending
/// positions win, which keeps the choice deterministic.
fn longest_increasing(ys: &[f64]) -> Vec<usize> {
    // tails[k]: index of the smallest tail of an increasing run of length k+1.
    let mut tails: Vec<usize> = Vec::new();
    let mut prev: Vec<Option<usize>> = vec![None; ys.len()];
    for (i, &y) in ys.iter().enumerate() {
        let pos = tails.partition_point(|&t| ys[t] < y);
        prev[i] = pos.checked_sub(1).map(|p| tails[p]);
        if pos == tails.len() {
            tails.push(i);
        } else {
            tails[pos] = i;
        }
    }
    let mut out = Vec::with_capacity(tails.len());
    let mut cur = tails.last().copied();
    while let Some(i) = cur {
        out.push(i);
        cur = prev[i];
    }
    out.reverse();
    out
}

/// Merges accepted chains into a strictly monotonic map.
///
/// All chain points strictly inside the space are sorted by x and reduced to
/// a longest subsequence that increases strictly in both coordinates;
/// everything else counts as discarded. Chains are kept as provenance.
pub fn assemble_map(chains: Vec<Chain>, space: BitextSpace) -> BitextMap {
    let total: usize = chains.iter().map(|c| c.points.len()).sum();
    let mut interior: Vec<Point> = chains
        .iter()
        .flat_map(|c| c.points.iter().copied())
        .filter(|p| p.x > 0.0 && p.y > 0.0 && p.x < space.width() && p.y < space.height())
        .collect();
    // Descending y within a column so at most one point per x survives.
    interior.sort_by(|a, b| a.x.total_cmp(&b.x).then(b.y.total_cmp(&a.y)));
    let ys: Vec<f64> = interior.iter().map(|p| p.y).collect();
    let keep = longest_increasing(&ys);

    let mut points = Vec::with_capacity(keep.len() + 2);
    points.push(space.origin());
    points.extend(keep.iter().map(|&i| interior[i]));
    points.push(space.terminus());
    BitextMap {
        space,
        points,
        discarded: total - keep.len(),
        chains,
    }
}

/// Runs the full trace over one bitext.
///
/// Returns [`SimrError::SignalTooSparse`], carrying the diagonal map, when
/// no chain is accepted anywhere.
pub fn run_search(
    ax: &AxisMap,
    ay: &AxisMap,
    params: &SimrParams,
    cfg: &SearchConfig,
    predicate: &Predicate,
) -> Result<BitextMap> {
    params.validate()?;
    cfg.validate()?;
    let space = BitextSpace::new(ax.text_length(), ay.text_length())?;
    let chains = trace(ax, ay, params, cfg, predicate, &space);
    if chains.is_empty() {
        return Err(SimrError::SignalTooSparse(Box::new(BitextMap::diagonal(
            space,
        ))));
    }
    Ok(assemble_map(chains, space))
}

/// Like [`run_search`] but treats a sparse signal as a diagonal map.
pub fn map_bitext(
    ax: &AxisMap,
    ay: &AxisMap,
    params: &SimrParams,
    cfg: &SearchConfig,
    predicate: &Predicate,
) -> Result<BitextMap> {
    match run_search(ax, ay, params, cfg, predicate) {
        Err(SimrError::SignalTooSparse(map)) => Ok(*map),
        other => other,
    }
}

fn trace(
    ax: &AxisMap,
    ay: &AxisMap,
    params: &SimrParams,
    cfg: &SearchConfig,
    predicate: &Predicate,
    space: &BitextSpace,
) -> Vec<Chain> {
    let mut generator = PointGenerator::new(ax, ay, predicate);
    let mut chains = Vec::new();
    let mut anchor = space.origin();

    while anchor.x < space.width() && anchor.y < space.height() {
        let mut rect = SearchRect::new(anchor, cfg.initial_width, space);
        let mut expansions = 0;
        loop {
            let region = rect.clipped(space);
            let candidates = generator.points_in(&region);
            let filtered = filter_noise(&candidates, params);
            let found = find_chains(&filtered, params, space);
            if let Ok(chain) = best_chain(&found) {
                if cfg.backfill {
                    let corner = lower_corner(&chain.points);
                    chains.extend(backfill(&mut generator, params, cfg, space, anchor, corner));
                }
                anchor = chain.anchor_corner;
                chains.push(chain.clone());
                break;
            }
            if expansions >= cfg.max_expansions || rect.covers_remainder(space) {
                // Dead signal: slide past this stretch and start small again.
                anchor = Point::new(anchor.x + rect.width, anchor.y + rect.height);
                break;
            }
            rect = SearchRect::new(anchor, rect.width * cfg.growth_factor, space);
            expansions += 1;
        }
    }
    chains
}

fn lower_corner(points: &[Point]) -> Point {
    points
        .iter()
        .fold(Point::new(f64::INFINITY, f64::INFINITY), |c, p| {
            Point::new(c.x.min(p.x), c.y.min(p.y))
        })
}

/// Mirror image of the forward trace inside the box `[floor, ceiling]`:
/// rectangles hang down-left from `ceiling`, and each accepted chain moves
/// the ceiling to its bottom-left corner. Stops once a rectangle covering
/// the rest of the box yields nothing. Chains come back in up-right order.
fn backfill(
    generator: &mut PointGenerator<'_>,
    params: &SimrParams,
    cfg: &SearchConfig,
    space: &BitextSpace,
    floor: Point,
    mut ceiling: Point,
) -> Vec<Chain> {
    let mut out = Vec::new();
    while ceiling.x > floor.x && ceiling.y > floor.y {
        let mut width = cfg.initial_width;
        let mut expansions = 0;
        let accepted = loop {
            let min = Point::new(
                (ceiling.x - width).max(floor.x),
                (ceiling.y - width * space.slope()).max(floor.y),
            );
            let region = Rect::new(min, ceiling);
            let candidates = generator.points_in(&region);
            let filtered = filter_noise(&candidates, params);
            let found = find_chains(&filtered, params, space);
            if let Ok(chain) = best_chain(&found) {
                break Some(chain.clone());
            }
            if expansions >= cfg.max_expansions || min == floor {
                break None;
            }
            width *= cfg.growth_factor;
            expansions += 1;
        };
        match accepted {
            Some(chain) => {
                ceiling = lower_corner(&chain.points);
                out.push(chain);
            }
            None => break,
        }
    }
    out.reverse();
    out
}
