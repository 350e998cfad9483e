//! Independent oracles and measurement helpers shared by the integration
//! tests. Nothing here calls the library's special-function code.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;

use nearsamp_core::bie::{assemble_t, fundamental_solution, Wavenumber};
use nearsamp_core::geometry::{discretize, ParametricCurve, Point};
use nearsamp_core::imaging::ImagingGrid;
use nearsamp_core::linalg::{spectral_norm, CMatrix};
use nearsamp_core::nearfield::NearFieldMatrix;

/// Bessel's integral `J_n(x) = (1/2pi) int_0^{2pi} cos(n t - x sin t) dt`,
/// rectangle rule on a periodic integrand (exact up to aliasing).
pub fn bessel_j_integral(n: i32, x: f64) -> f64 {
    let m = 2 * (n.unsigned_abs() as usize + x.abs().ceil() as usize) + 64;
    (0..m)
        .map(|j| {
            let t = TAU * j as f64 / m as f64;
            (n as f64 * t - x * t.sin()).cos()
        })
        .sum::<f64>()
        / m as f64
}

/// `Y_n(x) = (1/pi) int_0^pi sin(x sin t - n t) dt
///   - (1/pi) int_0^inf (e^{nt} + (-1)^n e^{-nt}) e^{-x sinh t} dt`, `n >= 0`.
pub fn bessel_y_integral(n: u32, x: f64) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(200).unwrap());
    let nf = n as f64;
    let first: f64 = (0..8)
        .map(|p| {
            let a = PI * p as f64 / 8.0;
            rule.integrate(a, a + PI / 8.0, |t| (x * t.sin() - nf * t).sin())
        })
        .sum();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    // e^{-x sinh t} is negligible once x sinh t > 800
    let upper = (800.0 / x).asinh().max(1.0);
    let pieces = 64;
    let second: f64 = (0..pieces)
        .map(|p| {
            let a = upper * p as f64 / pieces as f64;
            rule.integrate(a, a + upper / pieces as f64, |t| {
                ((nf * t - x * t.sinh()).exp()) + sign * (-nf * t - x * t.sinh()).exp()
            })
        })
        .sum();
    (first - second) / PI
}

pub fn hankel_integral(n: u32, x: f64) -> Complex64 {
    Complex64::new(bessel_j_integral(n as i32, x), bessel_y_integral(n, x))
}

/// Ascending power series of `J_n`, fine for small arguments.
pub fn bessel_j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for m in 1..60 {
        term *= -half * half / (m as f64 * (m + n) as f64);
        sum += term;
    }
    sum
}

pub fn relative_error(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

pub fn max_relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| relative_error(*x, *y))
        .fold(0.0, f64::max)
}

/// `Phi(targets_i; sources_j) * weights_j`.
fn weighted_kernel(
    targets: &[Point],
    sources: &[Point],
    weights: &[f64],
    k: Wavenumber,
) -> CMatrix {
    DMatrix::from_fn(targets.len(), sources.len(), |i, j| {
        fundamental_solution(targets[i], sources[j], k).unwrap() * weights[j]
    })
}

/// `||N w + H^* T H|| / ||N w||` for the discrete factorization of the
/// near-field operator through the boundary `curve` (`n` nodes), where `w`
/// is the sensor arc weight. Obstacle mode uses `N = -R H^* T R H`, cavity
/// mode `N = -S^* T S`; both reduce to the same matrix product with
/// `conj(T)` (obstacle) or `T` (cavity).
pub fn factorization_residual(near: &NearFieldMatrix, curve: &ParametricCurve, n: usize) -> f64 {
    let k = near.k;
    let disc = discretize(curve, n).unwrap();
    let t = assemble_t(&disc, k).unwrap();
    let sensors = near.ring.positions();
    let sensor_w = vec![near.ring.spacing(); sensors.len()];
    let boundary_w = disc.arc_weights();
    // incidence: boundary values of the single layer over the sensors
    let h = weighted_kernel(&disc.nodes, &sensors, &sensor_w, k);
    let back = weighted_kernel(&sensors, &disc.nodes, &boundary_w, k);
    let model = match near.ring.mode() {
        nearsamp_core::nearfield::Mode::Obstacle => &back * t.map(|v| v.conj()) * &h,
        nearsamp_core::nearfield::Mode::Cavity => back.map(|v| v.conj()) * &t * &h,
    };
    let nw = &near.entries * Complex64::new(near.ring.spacing(), 0.0);
    spectral_norm(&(&nw + model)) / spectral_norm(&nw)
}

/// Values along a ray from the origin by bilinear interpolation of the grid.
pub fn ray_profile(grid: &ImagingGrid, angle: f64, radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| bilinear(grid, Point::polar(r, angle)))
        .collect()
}

pub fn bilinear(grid: &ImagingGrid, p: Point) -> f64 {
    let s = &grid.spec;
    let fx = (p.x - s.x0) / (s.x1 - s.x0) * (s.nx - 1) as f64;
    let fy = (p.y - s.y0) / (s.y1 - s.y0) * (s.ny - 1) as f64;
    let i = (fx.floor() as usize).min(s.nx - 2);
    let j = (fy.floor() as usize).min(s.ny - 2);
    let (u, v) = (fx - i as f64, fy - j as f64);
    (1.0 - u) * (1.0 - v) * grid.at(i, j)
        + u * (1.0 - v) * grid.at(i + 1, j)
        + (1.0 - u) * v * grid.at(i, j + 1)
        + u * v * grid.at(i + 1, j + 1)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Radius at which the azimuthal mean of the grid peaks; bins have the
/// width of the grid spacing.
pub fn radial_argmax(grid: &ImagingGrid, center: Point) -> f64 {
    let s = &grid.spec;
    let width = (s.x1 - s.x0) / (s.nx - 1) as f64;
    let rmax = (s.x1 - center.x)
        .min(center.x - s.x0)
        .min(s.y1 - center.y)
        .min(center.y - s.y0);
    let bins = (rmax / width).floor() as usize;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for j in 0..s.ny {
        for i in 0..s.nx {
            let r = s.point(i, j).dist(center);
            let b = (r / width).floor() as usize;
            if b < bins {
                sum[b] += grid.at(i, j);
                count[b] += 1;
            }
        }
    }
    let best = (0..bins)
        .filter(|&b| count[b] > 0)
        .max_by(|&a, &b| (sum[a] / count[a] as f64).total_cmp(&(sum[b] / count[b] as f64)))
        .unwrap();
    (best as f64 + 0.5) * width
}

/// Mean distance from the ridge of the indicator to the true boundary, over
/// boundary-normal lines through the upper half (`y > center.y`) of the
/// curve. On each normal line the indicator is sampled within `reach` of the
/// boundary and its maximum located.
pub fn upper_ridge_error(
    grid: &ImagingGrid,
    curve: &ParametricCurve,
    lines: usize,
    reach: f64,
) -> f64 {
    let mut total = 0.0;
    let mut used = 0;
    for l in 0..lines {
        let t = TAU * (l as f64 + 0.5) / lines as f64;
        let p = curve.position(t);
        if p.y <= curve.center().y {
            continue;
        }
        let d = curve.derivative(t);
        let normal = (1.0 / d.norm()) * Point::new(d.y, -d.x);
        let offsets = linspace(-reach, reach, 81);
        let best = offsets
            .iter()
            .map(|&s| (s, bilinear(grid, p + s * normal)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        total += best.0.abs();
        used += 1;
    }
    total / used as f64
}

/// First positive zero of `J_0`, by bisection on the integral oracle.
pub fn first_zero_j0() -> f64 {
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if bessel_j_integral(0, a) * bessel_j_integral(0, m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}
