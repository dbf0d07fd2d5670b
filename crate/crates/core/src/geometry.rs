//! Bitext space geometry.
//!
//! A bitext space is the rectangle spanned by the character lengths of the
//! two texts. The x axis belongs to the first text, the y axis to the second.
//! The origin `(0, 0)` and the terminus `(width, height)` are always points of
//! correspondence, and the segment between them is the main diagonal.

use crate::error::{Result, SimrError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BitextSpace {
    width: f64,
    height: f64,
}

impl BitextSpace {
    /// Builds a space from the character counts of the two texts.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(SimrError::EmptyText);
        }
        Ok(BitextSpace {
            width: width as f64,
            height: height as f64,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn slope(&self) -> f64 {
        self.height / self.width
    }

    pub fn origin(&self) -> Point {
        Point::new(0.0, 0.0)
    }

    pub fn terminus(&self) -> Point {
        Point::new(self.width, self.height)
    }

    /// Length of the main diagonal.
    pub fn diagonal_length(&self) -> f64 {
        self.width.hypot(self.height)
    }

    /// Angle of the main diagonal, in radians.
    pub fn diagonal_angle(&self) -> f64 {
        self.slope().atan()
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// The same space with the roles of the two texts exchanged.
    pub fn transposed(&self) -> Self {
        BitextSpace {
            width: self.height,
            height: self.width,
        }
    }

    /// Coordinate of `p` along the main diagonal, measured from the origin.
    pub fn along_diagonal(&self, p: Point) -> f64 {
        (p.x * self.width + p.y * self.height) / self.diagonal_length()
    }

    /// Signed distance from `p` to the main diagonal; positive above it.
    pub fn perpendicular_distance(&self, p: Point) -> f64 {
        perpendicular_distance(p, self)
    }
}

/// A position in a bitext space, in characters.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn transposed(self) -> Self {
        Point::new(self.y, self.x)
    }

    /// Total order on `(x, y)`; positions are never NaN.
    pub fn cmp_xy(&self, other: &Point) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

/// Closed axis-aligned rectangle. A rectangle with `max` below or left of
/// `min` is empty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const fn new(min: Point, max: Point) -> Self {
        Rect { min, max }
    }

    pub fn is_empty(&self) -> bool {
        self.max.x < self.min.x || self.max.y < self.min.y
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }
}

/// Signed Euclidean distance from `p` to the main diagonal of `space`,
/// positive when `p` lies above the diagonal.
pub fn perpendicular_distance(p: Point, space: &BitextSpace) -> f64 {
    (p.y * space.width - p.x * space.height) / space.diagonal_length()
}

/// Ordinary least-squares line (y on x) with the RMS perpendicular
/// distance of the fitted points from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_dispersal: f64,
    /// `atan(slope)`, radians.
    pub angle: f64,
}

impl LineFit {
    pub fn y_at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

pub fn least_squares_fit(points: &[Point]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(SimrError::DegenerateFit);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.x).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.y).sum::<f64>() / n;

    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in points {
        let dx = p.x - mean_x;
        sxx += dx * dx;
        sxy += dx * (p.y - mean_y);
    }
    // Relative test so large coordinates with tiny spread still count as a column.
    let scale = 64.0 * f64::EPSILON * mean_x.abs().max(1.0);
    if sxx <= scale * scale * n {
        return Err(SimrError::DegenerateFit);
    }

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sq_vertical: f64 = points
        .iter()
        .map(|p| {
            let r = p.y - (slope * p.x + intercept);
            r * r
        })
        .sum();
    // Perpendicular distance to y = a x + b is |r| / sqrt(1 + a^2).
    let rms_dispersal = (sq_vertical / (n * (1.0 + slope * slope))).sqrt();

    Ok(LineFit {
        slope,
        intercept,
        rms_dispersal,
        angle: slope.atan(),
    })
}

/// Piecewise-linear interpolation of `y` at `x` along a polyline whose
/// vertices are sorted by strictly increasing `x`.
///
/// Values of `x` outside the polyline are clamped to its end points.
pub fn interpolate(polyline: &[Point], x: f64) -> f64 {
    match polyline {
        [] => f64::NAN,
        [only] => only.y,
        _ => {
            let first = polyline[0];
            let last = polyline[polyline.len() - 1];
            if x <= first.x {
                return first.y;
            }
            if x >= last.x {
                return last.y;
            }
            // First vertex strictly right of x; exists because x < last.x.
            let hi = polyline.partition_point(|p| p.x <= x);
            let (a, b) = (polyline[hi - 1], polyline[hi]);
            if a.x == x {
                return a.y;
            }
            a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
        }
    }
}
