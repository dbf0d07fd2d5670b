//! Gold-standard ingestion and the RMS error metric.
//!
//! A gold standard is read from two files of aligned segments, one segment
//! per line. The end of every aligned segment pair is a true point of
//! correspondence. A map is scored by the RMS distance between those points
//! and the interpolated map, measured perpendicular to the main diagonal.

use std::fmt::Write as _;

use crate::error::{Result, SimrError};
use crate::geometry::{interpolate, BitextSpace, Point};
use crate::search::BitextMap;

/// True points of correspondence, strictly increasing in both coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GoldTBM {
    tpcs: Vec<Point>,
}

impl GoldTBM {
    pub fn new(tpcs: Vec<Point>) -> Result<Self> {
        if tpcs
            .windows(2)
            .any(|w| !(w[0].x < w[1].x && w[0].y < w[1].y))
        {
            return Err(SimrError::InvalidGold(
                "points must be strictly increasing in both coordinates".into(),
            ));
        }
        if tpcs
            .iter()
            .any(|p| p.x < 0.0 || p.y < 0.0 || !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(SimrError::InvalidGold(
                "negative or non-finite coordinate".into(),
            ));
        }
        Ok(GoldTBM { tpcs })
    }

    pub fn tpcs(&self) -> &[Point] {
        &self.tpcs
    }

    pub fn len(&self) -> usize {
        self.tpcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tpcs.is_empty()
    }

    pub fn transposed(&self) -> Self {
        GoldTBM {
            tpcs: self.tpcs.iter().map(|p| p.transposed()).collect(),
        }
    }

    /// TPC `i` is the pair of cumulative character lengths of the first `i`
    /// segments on each side.
    pub fn from_segments<S: AsRef<str>>(segments_x: &[S], segments_y: &[S]) -> Result<Self> {
        if segments_x.len() != segments_y.len() {
            return Err(SimrError::SegmentCountMismatch {
                x: segments_x.len(),
                y: segments_y.len(),
            });
        }
        let mut tpcs = Vec::with_capacity(segments_x.len());
        let (mut cx, mut cy) = (0usize, 0usize);
        for (sx, sy) in segments_x.iter().zip(segments_y) {
            cx += sx.as_ref().chars().count();
            cy += sy.as_ref().chars().count();
            tpcs.push(Point::new(cx as f64, cy as f64));
        }
        GoldTBM::new(tpcs)
    }

    /// Cuts the two texts at the TPC coordinates. Each TPC must sit on an
    /// integer character offset, and the last one must be the terminus for
    /// the segments to cover the texts.
    pub fn to_segments(&self, text_x: &str, text_y: &str) -> Result<(Vec<String>, Vec<String>)> {
        let cut = |text: &str, ends: Vec<f64>| -> Result<Vec<String>> {
            let chars: Vec<char> = text.chars().collect();
            let mut out = Vec::with_capacity(ends.len());
            let mut start = 0usize;
            for end in ends {
                if end.fract() != 0.0 || end as usize > chars.len() {
                    return Err(SimrError::InvalidGold(format!(
                        "cannot cut a text of {} characters at {end}",
                        chars.len()
                    )));
                }
                let end = end as usize;
                out.push(chars[start..end].iter().collect());
                start = end;
            }
            if start != chars.len() {
                return Err(SimrError::InvalidGold(
                    "last point is not the terminus".into(),
                ));
            }
            Ok(out)
        };
        Ok((
            cut(text_x, self.tpcs.iter().map(|p| p.x).collect())?,
            cut(text_y, self.tpcs.iter().map(|p| p.y).collect())?,
        ))
    }
}

/// Splits a segment file into segments: one per line, with the line
/// terminator (`\n` or `\r\n`) excluded. A final terminator does not start an
/// extra segment.
pub fn parse_segments(input: &str) -> Vec<String> {
    if input.is_empty() {
        return Vec::new();
    }
    let body = input.strip_suffix('\n').unwrap_or(input);
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect()
}

/// Segment file contents for `segments`, one per line.
pub fn format_segments<S: AsRef<str>>(segments: &[S]) -> Result<String> {
    let mut out = String::new();
    for s in segments {
        let s = s.as_ref();
        if s.contains('\n') {
            return Err(SimrError::InvalidGold(
                "segment contains a line break".into(),
            ));
        }
        out.push_str(s);
        out.push('\n');
    }
    Ok(out)
}

/// Builds a gold standard from segment-file contents, checking that the
/// segments concatenate back to the raw texts.
pub fn load_gold(
    segments_x: &str,
    segments_y: &str,
    text_x: &str,
    text_y: &str,
) -> Result<GoldTBM> {
    let sx = parse_segments(segments_x);
    let sy = parse_segments(segments_y);
    if sx.len() != sy.len() {
        return Err(SimrError::SegmentCountMismatch {
            x: sx.len(),
            y: sy.len(),
        });
    }
    if sx.concat() != text_x {
        return Err(SimrError::TextReconstructionMismatch { side: 'x' });
    }
    if sy.concat() != text_y {
        return Err(SimrError::TextReconstructionMismatch { side: 'y' });
    }
    GoldTBM::from_segments(&sx, &sy)
}

/// Direction along which a TPC's distance to the map is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorDirection {
    /// Perpendicular to the main diagonal.
    #[default]
    Perpendicular,
    /// Along the y axis (error in the y text only).
    Vertical,
    /// Along the x axis (error in the x text only).
    Horizontal,
}

impl std::str::FromStr for ErrorDirection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "perpendicular" => Ok(ErrorDirection::Perpendicular),
            "vertical" => Ok(ErrorDirection::Vertical),
            "horizontal" => Ok(ErrorDirection::Horizontal),
            other => Err(format!("unknown error direction `{other}`")),
        }
    }
}

/// Signed distance of each TPC from the map: positive when the TPC lies
/// above (or, for the horizontal variant, to the right of) the map.
pub fn signed_errors(map: &BitextMap, gold: &GoldTBM, direction: ErrorDirection) -> Vec<f64> {
    let space = map.space();
    match direction {
        ErrorDirection::Perpendicular => {
            // In coordinates rotated onto the main diagonal the map is a
            // function of the along-diagonal coordinate.
            let rotated: Vec<Point> = map.points().iter().map(|&p| rotate(p, space)).collect();
            gold.tpcs()
                .iter()
                .map(|&t| {
                    let r = rotate(t, space);
                    r.y - interpolate(&rotated, r.x)
                })
                .collect()
        }
        ErrorDirection::Vertical => gold
            .tpcs()
            .iter()
            .map(|t| t.y - map.interpolate(t.x))
            .collect(),
        ErrorDirection::Horizontal => {
            let swapped: Vec<Point> = map.points().iter().map(|p| p.transposed()).collect();
            gold.tpcs()
                .iter()
                .map(|t| t.x - interpolate(&swapped, t.y))
                .collect()
        }
    }
}

fn rotate(p: Point, space: &BitextSpace) -> Point {
    Point::new(space.along_diagonal(p), space.perpendicular_distance(p))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramBin {
    /// Inclusive lower edge, characters.
    pub lower: f64,
    /// Exclusive upper edge, characters.
    pub upper: f64,
    pub count: usize,
    pub fraction: f64,
}

/// Width of an error histogram bin, characters.
pub const BIN_WIDTH: f64 = 10.0;

/// Contiguous bins of [`BIN_WIDTH`] characters from the lowest to the highest
/// occupied bin; `[-10, 0)` and `[0, 10)` straddle zero.
pub fn histogram(errors: &[f64]) -> Vec<HistogramBin> {
    if errors.is_empty() {
        return Vec::new();
    }
    let index = |e: f64| (e / BIN_WIDTH).floor() as i64;
    let lo = errors.iter().map(|&e| index(e)).min().unwrap_or(0);
    let hi = errors.iter().map(|&e| index(e)).max().unwrap_or(0);
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &e in errors {
        counts[(index(e) - lo) as usize] += 1;
    }
    let n = errors.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let k = lo + i as i64;
            HistogramBin {
                lower: k as f64 * BIN_WIDTH,
                upper: (k + 1) as f64 * BIN_WIDTH,
                count,
                fraction: count as f64 / n,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub rms_error: f64,
    pub signed_errors: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
}

impl ErrorReport {
    pub fn mean_error(&self) -> f64 {
        self.signed_errors.iter().sum::<f64>() / self.signed_errors.len() as f64
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.signed_errors.iter().map(|e| e * e).sum()
    }

    /// Histogram TSV (`lower<TAB>upper<TAB>count<TAB>fraction`) followed by the
    /// `rms<TAB>value` summary line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lower\tupper\tcount\tfraction\n");
        for b in &self.histogram {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.4}",
                b.lower, b.upper, b.count, b.fraction
            );
        }
        let _ = writeln!(out, "rms\t{:.2}", self.rms_error);
        out
    }
}

/// Scores `map` against `gold` with the error measured in `direction`.
pub fn evaluate(map: &BitextMap, gold: &GoldTBM, direction: ErrorDirection) -> Result<ErrorReport> {
    if gold.is_empty() {
        return Err(SimrError::EmptyGold);
    }
    let signed_errors = signed_errors(map, gold, direction);
    let ms = signed_errors.iter().map(|e| e * e).sum::<f64>() / signed_errors.len() as f64;
    Ok(ErrorReport {
        rms_error: ms.sqrt(),
        histogram: histogram(&signed_errors),
        signed_errors,
    })
}

/// RMS distance between the gold TPCs and the interpolated map, measured
/// perpendicular to the main diagonal.
pub fn rms_perpendicular_error(map: &BitextMap, gold: &GoldTBM) -> Result<ErrorReport> {
    evaluate(map, gold, ErrorDirection::Perpendicular)
}
