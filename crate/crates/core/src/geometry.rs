//! Boundary curves used as scatterers and their equispaced discretization.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Smallest node count accepted by [`discretize`].
pub const MIN_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point::new(r * c, r * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Polar angle in `(-pi, pi]`; zero at the origin.
    pub fn angle(self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            self.y.atan2(self.x)
        }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point::new(self * rhs.x, self * rhs.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Circle,
    Ellipse,
    RoundSquare,
    Peanut,
    Kite,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Ellipse => "ellipse",
            ShapeKind::RoundSquare => "roundsquare",
            ShapeKind::Peanut => "peanut",
            ShapeKind::Kite => "kite",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-', ' '], "").as_str() {
            "circle" | "disk" => Ok(ShapeKind::Circle),
            "ellipse" => Ok(ShapeKind::Ellipse),
            "roundsquare" => Ok(ShapeKind::RoundSquare),
            "peanut" => Ok(ShapeKind::Peanut),
            "kite" => Ok(ShapeKind::Kite),
            _ => Err(Error::invalid(format!("unknown shape kind '{s}'"))),
        }
    }
}

/// A smooth closed curve `x(t) = center + shape(t)`, `t` in `[0, 2pi)`,
/// traversed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricCurve {
    kind: ShapeKind,
    center: Point,
    radius: f64,
}

/// Builds a catalog curve. Only `Circle` takes a parameter (its radius);
/// the other shapes have fixed coefficients and are placed by `center`.
pub fn make_shape(kind: ShapeKind, center: Point, params: &[f64]) -> Result<ParametricCurve> {
    if !(center.x.is_finite() && center.y.is_finite()) {
        return Err(Error::invalid("shape center must be finite"));
    }
    let radius = match kind {
        ShapeKind::Circle => {
            let [r] = params else {
                return Err(Error::invalid(format!(
                    "circle takes exactly one parameter (radius), got {}",
                    params.len()
                )));
            };
            if !(r.is_finite() && *r > 0.0) {
                return Err(Error::invalid(format!(
                    "circle radius must be positive, got {r}"
                )));
            }
            *r
        }
        _ => {
            if !params.is_empty() {
                return Err(Error::invalid(format!("{kind} takes no shape parameters")));
            }
            0.0
        }
    };
    Ok(ParametricCurve {
        kind,
        center,
        radius,
    })
}

impl ParametricCurve {
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        make_shape(ShapeKind::Circle, center, &[radius])
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// Radius for circles, `None` for the fixed shapes.
    pub fn radius(&self) -> Option<f64> {
        (self.kind == ShapeKind::Circle).then_some(self.radius)
    }

    pub fn position(&self, t: f64) -> Point {
        self.center + self.shape(t)
    }

    /// Returns `(x'(t), x''(t))`.
    pub fn derivatives(&self, t: f64) -> (Point, Point) {
        let (s, c) = t.sin_cos();
        match self.kind {
            ShapeKind::Circle => {
                let r = self.radius;
                (Point::new(-r * s, r * c), Point::new(-r * c, -r * s))
            }
            ShapeKind::Ellipse => (
                Point::new(-2.0 * s, 3.0 * c),
                Point::new(-2.0 * c, -3.0 * s),
            ),
            ShapeKind::RoundSquare => (
                Point::new(
                    -1.5 * s * (3.0 * c * c + 1.0),
                    1.5 * c * (3.0 * s * s + 1.0),
                ),
                Point::new(
                    1.5 * (6.0 * c * s * s - 3.0 * c * c * c - c),
                    1.5 * (6.0 * s * c * c - 3.0 * s * s * s - s),
                ),
            ),
            ShapeKind::Peanut => {
                // rho = 1.5 sqrt(g), g = 3 cos^2 t + 1
                let g = 3.0 * c * c + 1.0;
                let sg = g.sqrt();
                let dg = -6.0 * c * s;
                let ddg = -6.0 * (c * c - s * s);
                let rho = 1.5 * sg;
                let drho = 1.5 * dg / (2.0 * sg);
                let ddrho = 1.5 * (ddg / (2.0 * sg) - dg * dg / (4.0 * g * sg));
                let radial = Point::new(c, s);
                let tangential = Point::new(-s, c);
                (
                    drho * radial + rho * tangential,
                    (ddrho - rho) * radial + (2.0 * drho) * tangential,
                )
            }
            ShapeKind::Kite => {
                let (s2, c2) = (2.0 * t).sin_cos();
                (
                    Point::new(-1.1 * s - 1.25 * s2, 1.5 * c),
                    Point::new(-1.1 * c - 2.5 * c2, -1.5 * s),
                )
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Point {
        self.derivatives(t).0
    }

    fn shape(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        match self.kind {
            ShapeKind::Circle => self.radius * Point::new(c, s),
            ShapeKind::Ellipse => Point::new(2.0 * c, 3.0 * s),
            ShapeKind::RoundSquare => {
                Point::new(1.5 * c * c * c + 1.5 * c, 1.5 * s * s * s + 1.5 * s)
            }
            ShapeKind::Peanut => (1.5 * (3.0 * c * c + 1.0).sqrt()) * Point::new(c, s),
            ShapeKind::Kite => Point::new(1.1 * c + 0.625 * (2.0 * t).cos() - 0.625, 1.5 * s),
        }
    }

    /// Winding number of the curve around `p`, from a fine polygonal
    /// approximation. 1 inside, 0 outside.
    pub fn winding_number(&self, p: Point) -> i32 {
        const SAMPLES: usize = 2048;
        let mut total = 0.0;
        let mut prev = self.position(0.0) - p;
        for j in 1..=SAMPLES {
            let cur = self.position(TAU * j as f64 / SAMPLES as f64) - p;
            total += prev.cross(cur).atan2(prev.dot(cur));
            prev = cur;
        }
        (total / TAU).round() as i32
    }

    pub fn contains(&self, p: Point) -> bool {
        self.winding_number(p) != 0
    }

    /// Approximate distance from `p` to the curve (dense sampling plus a
    /// few Newton refinements of the nearest sample).
    pub fn distance_to(&self, p: Point) -> f64 {
        const SAMPLES: usize = 1024;
        let (mut t, _) = (0..SAMPLES)
            .map(|j| {
                let t = TAU * j as f64 / SAMPLES as f64;
                (t, self.position(t).dist(p))
            })
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        for _ in 0..8 {
            let d = self.position(t) - p;
            let (d1, d2) = self.derivatives(t);
            let g = d.dot(d1);
            let h = d1.dot(d1) + d.dot(d2);
            if h <= 0.0 {
                break;
            }
            t -= g / h;
        }
        let refined = self.position(t).dist(p);
        let coarse = (0..SAMPLES)
            .map(|j| self.position(TAU * j as f64 / SAMPLES as f64).dist(p))
            .fold(f64::INFINITY, f64::min);
        refined.min(coarse)
    }

    /// `(min |x(t)|, max |x(t)|)` over a fine parameter grid.
    pub fn radial_extent(&self) -> (f64, f64) {
        const SAMPLES: usize = 4096;
        (0..SAMPLES)
            .map(|j| self.position(TAU * j as f64 / SAMPLES as f64).norm())
            .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }
}

/// Equispaced parameter nodes `t_j = 2 pi j / n` on a curve.
#[derive(Debug, Clone)]
pub struct BoundaryDiscretization {
    curve: ParametricCurve,
    pub nodes: Vec<Point>,
    pub derivatives: Vec<Point>,
    pub second_derivatives: Vec<Point>,
}

pub fn discretize(curve: &ParametricCurve, n: usize) -> Result<BoundaryDiscretization> {
    if n < MIN_NODES || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "node count must be even and at least {MIN_NODES}, got {n}"
        )));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut derivatives = Vec::with_capacity(n);
    let mut second_derivatives = Vec::with_capacity(n);
    for j in 0..n {
        let t = 2.0 * PI * j as f64 / n as f64;
        let (d1, d2) = curve.derivatives(t);
        nodes.push(curve.position(t));
        derivatives.push(d1);
        second_derivatives.push(d2);
    }
    Ok(BoundaryDiscretization {
        curve: *curve,
        nodes,
        derivatives,
        second_derivatives,
    })
}

impl BoundaryDiscretization {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn curve(&self) -> &ParametricCurve {
        &self.curve
    }

    /// Parameter value of node `j`.
    pub fn param(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }

    /// Trapezoid weight in the parameter, `2 pi / n`.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    pub fn speed(&self, j: usize) -> f64 {
        self.derivatives[j].norm()
    }

    /// Arc-length quadrature weights `|x'(t_j)| 2 pi / n`.
    pub fn arc_weights(&self) -> Vec<f64> {
        let w = self.weight();
        self.derivatives.iter().map(|d| d.norm() * w).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.arc_weights().iter().sum()
    }

    /// Largest node spacing in arc length.
    pub fn max_spacing(&self) -> f64 {
        self.derivatives
            .iter()
            .map(|d| d.norm())
            .fold(0.0, f64::max)
            * self.weight()
    }
}
