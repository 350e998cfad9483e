//! Nyström boundary-integral solvers for sound-soft scatterers.
//!
//! Curves are sampled at `N = 2n` equispaced parameter nodes. Weakly singular
//! kernels are split as `K(t, s) = K1(t, s) ln(4 sin^2((t - s)/2)) + K2(t, s)`
//! with smooth `K1, K2`; the log factor is integrated exactly against the
//! trigonometric interpolant of the density and the smooth part with the
//! trapezoid rule. For analytic curves the error decays exponentially in `N`.
//!
//! The exterior problem uses the combined-field ansatz
//! `u(x) = int (dPhi/dnu_y - i eta Phi)(x, y) psi(y) ds_y` with `eta = k`,
//! which is uniquely solvable for every `k > 0`. The interior (cavity)
//! problem uses a pure single layer, solvable whenever `k^2` is not a
//! Dirichlet eigenvalue of the cavity.

use std::f64::consts::{FRAC_1_PI, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::{discretize, BoundaryDiscretization, ParametricCurve, Point};
use crate::linalg::{condition_number, CMatrix};
use crate::specfun::{bessel_j_seq, hankel1_seq, near_bessel_zero, Cyl01};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Matrices whose condition number exceeds this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Minimum boundary node count for the solvers.
pub const MIN_BIE_NODES: usize = 16;

/// Points closer to the boundary than this many node spacings are evaluated
/// on an upsampled copy of the density.
const NEAR_FIELD_SPACINGS: f64 = 4.0;
const MAX_UPSAMPLING: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Wavenumber(f64);

impl Wavenumber {
    pub fn new(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid(format!(
                "wavenumber must be positive and finite, got {k}"
            )));
        }
        Ok(Wavenumber(k))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `Phi(x; y) = (i/4) H_0^(1)(k |x - y|)`.
pub fn fundamental_solution(x: Point, y: Point, k: Wavenumber) -> Result<Complex64> {
    let r = x.dist(y);
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(0.25 * I * Cyl01::at(k.0 * r).h0())
}

/// `[Phi(targets_i; sources_j)]`.
pub fn point_source_matrix(targets: &[Point], sources: &[Point], k: Wavenumber) -> Result<CMatrix> {
    let rows: Vec<Vec<Complex64>> = targets
        .par_iter()
        .map(|&t| {
            sources
                .iter()
                .map(|&s| fundamental_solution(t, s, k))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(targets.len(), sources.len(), |i, j| {
        rows[i][j]
    }))
}

/// Weights `R_m` with `int_0^{2pi} ln(4 sin^2((t_i - s)/2)) f(s) ds ~ sum_j R_{(i-j) mod N} f(t_j)`.
fn log_weights(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n as f64;
    (0..n_nodes)
        .map(|m| {
            let d = PI * m as f64 / nf;
            let series: f64 = (1..n).map(|p| (p as f64 * d).cos() / p as f64).sum();
            -2.0 * PI / nf * series - PI / (nf * nf) * (nf * d).cos()
        })
        .collect()
}

/// `ln(4 sin^2((t_i - t_j)/2))` for `i != j`.
fn log_factor(n_nodes: usize, m: usize) -> f64 {
    let half = PI * m as f64 / n_nodes as f64;
    (4.0 * half.sin().powi(2)).ln()
}

/// Nyström matrix of the single-layer operator `psi -> int Phi(., y) psi(y) ds_y`
/// acting on node values of the density. With `conjugated`, the kernel is
/// `conj(Phi)`.
pub fn assemble_single_layer(
    disc: &BoundaryDiscretization,
    k: Wavenumber,
    conjugated: bool,
) -> Result<CMatrix> {
    check_nodes(disc)?;
    let n_nodes = disc.len();
    let r = log_weights(n_nodes);
    let w = disc.weight();
    let kv = k.0;
    let rows: Vec<Vec<Complex64>> = (0..n_nodes)
        .into_par_iter()
        .map(|i| {
            (0..n_nodes)
                .map(|j| {
                    let m = (i + n_nodes - j) % n_nodes;
                    let speed = disc.speed(j);
                    let (m1, m2) = if i == j {
                        let m2 = Complex64::new(
                            -EULER_GAMMA * FRAC_1_PI - FRAC_1_PI * (0.5 * kv * speed).ln(),
                            0.5,
                        ) * speed;
                        (-0.5 * FRAC_1_PI * speed, m2)
                    } else {
                        let c = Cyl01::at(kv * disc.nodes[i].dist(disc.nodes[j]));
                        let m_full = 0.5 * I * c.h0() * speed;
                        let m1 = -0.5 * FRAC_1_PI * c.j0 * speed;
                        (m1, m_full - m1 * log_factor(n_nodes, m))
                    };
                    // int Phi psi ds = (1/2) int M psi dt
                    let v = 0.5 * (r[m] * m1 + w * m2);
                    if conjugated {
                        v.conj()
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n_nodes, n_nodes, |i, j| rows[i][j]))
}

/// Discrete `T_Gamma`: maps boundary samples of `g` to the density `h` with
/// `g = int conj(Phi)(., y) h(y) ds_y`, i.e. the inverse of the conjugated
/// single-layer matrix.
pub fn assemble_t(disc: &BoundaryDiscretization, k: Wavenumber) -> Result<CMatrix> {
    let s = assemble_single_layer(disc, k, true)?;
    let cond = condition_number(&s);
    if cond > CONDITION_LIMIT {
        return Err(Error::EigenvalueProximity(format!(
            "single-layer condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )));
    }
    s.try_inverse()
        .ok_or_else(|| Error::SingularSystem("conjugated single-layer matrix".into()))
}

/// Discrete duality pairing `sum_j a_j conj(b_j) |x'(t_j)| 2pi/N`.
pub fn duality_pairing(
    disc: &BoundaryDiscretization,
    a: &[Complex64],
    b: &[Complex64],
) -> Complex64 {
    a.iter()
        .zip(b)
        .zip(disc.arc_weights())
        .map(|((x, y), w)| x * y.conj() * w)
        .sum()
}

fn check_nodes(disc: &BoundaryDiscretization) -> Result<()> {
    if disc.len() < MIN_BIE_NODES {
        return Err(Error::invalid(format!(
            "boundary solvers need at least {MIN_BIE_NODES} nodes, got {}",
            disc.len()
        )));
    }
    Ok(())
}

/// Which layer potential a density represents.
#[derive(Debug, Clone, Copy)]
enum Layer {
    /// `dPhi/dnu_y - i eta Phi`
    Combined {
        eta: f64,
    },
    Single,
}

/// Kernel of `layer` times `|x'(t_j)|` at an off-boundary target.
fn layer_kernel(layer: Layer, k: f64, x: Point, y: Point, dy: Point) -> Complex64 {
    let d = x - y;
    let r = d.norm();
    let c = Cyl01::at(k * r);
    let speed = dy.norm();
    let single = 0.25 * I * c.h0() * speed;
    match layer {
        Layer::Single => single,
        Layer::Combined { eta } => {
            // dPhi/dnu_y |x'| = (ik/4) H_1(kr) (nu |x'|).(x - y) / r, nu |x'| = (y2', -y1')
            let s = dy.y * d.x - dy.x * d.y;
            0.25 * I * k * c.h1() * s / r - I * eta * single
        }
    }
}

/// Evaluates a layer potential at `x`, refining the density when `x` is
/// close to the boundary.
fn evaluate_layer(
    disc: &BoundaryDiscretization,
    density: &[Complex64],
    layer: Layer,
    k: f64,
    x: Point,
) -> Result<Complex64> {
    let spacing = disc.max_spacing();
    let nearest = disc
        .nodes
        .iter()
        .map(|p| p.dist(x))
        .fold(f64::INFINITY, f64::min);
    if nearest >= NEAR_FIELD_SPACINGS * spacing {
        let w = disc.weight();
        return Ok((0..disc.len())
            .map(|j| layer_kernel(layer, k, x, disc.nodes[j], disc.derivatives[j]) * density[j])
            .sum::<Complex64>()
            * w);
    }
    let gap = disc.curve().distance_to(x);
    if gap < 1e-12 * spacing {
        return Err(Error::Geometry(format!(
            "evaluation point ({}, {}) lies on the boundary",
            x.x, x.y
        )));
    }
    let factor = ((NEAR_FIELD_SPACINGS * spacing / gap).ceil() as usize)
        .next_power_of_two()
        .clamp(2, MAX_UPSAMPLING);
    let fine = discretize(disc.curve(), disc.len() * factor)?;
    let fine_density = trig_upsample(density, factor);
    let w = fine.weight();
    Ok((0..fine.len())
        .map(|j| layer_kernel(layer, k, x, fine.nodes[j], fine.derivatives[j]) * fine_density[j])
        .sum::<Complex64>()
        * w)
}

/// Trigonometric interpolation of equispaced periodic samples onto a grid
/// `factor` times finer.
fn trig_upsample(values: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = values.len();
    let big = n * factor;
    let mut planner = FftPlanner::new();
    let mut spectrum = values.to_vec();
    planner.plan_fft_forward(n).process(&mut spectrum);
    let mut padded = vec![Complex64::new(0.0, 0.0); big];
    let half = n / 2;
    padded[..half].copy_from_slice(&spectrum[..half]);
    padded[big - half + 1..].copy_from_slice(&spectrum[half + 1..]);
    // split the Nyquist mode symmetrically
    padded[half] = 0.5 * spectrum[half];
    padded[big - half] = 0.5 * spectrum[half];
    planner.plan_fft_inverse(big).process(&mut padded);
    let scale = 1.0 / n as f64;
    padded.iter_mut().for_each(|v| *v *= scale);
    padded
}

/// Combined-field Nyström system for the exterior Dirichlet problem outside
/// a union of disjoint curves, LU-factorized once and reused for many
/// sources.
pub struct ExteriorSolver {
    discs: Vec<BoundaryDiscretization>,
    offsets: Vec<usize>,
    k: f64,
    eta: f64,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl ExteriorSolver {
    /// `n` nodes per curve.
    pub fn new(curves: &[ParametricCurve], k: Wavenumber, n: usize) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::invalid("exterior solver needs at least one curve"));
        }
        check_disjoint(curves)?;
        let discs = curves
            .iter()
            .map(|c| discretize(c, n))
            .collect::<Result<Vec<_>>>()?;
        for d in &discs {
            check_nodes(d)?;
        }
        let mut offsets = vec![0];
        for d in &discs {
            offsets.push(offsets.last().unwrap() + d.len());
        }
        let total = *offsets.last().unwrap();
        let kv = k.0;
        let eta = kv;

        let rows: Vec<Vec<Complex64>> = (0..total)
            .into_par_iter()
            .map(|row| {
                let a = offsets.partition_point(|&o| o <= row) - 1;
                let i = row - offsets[a];
                let mut out = Vec::with_capacity(total);
                for (b, db) in discs.iter().enumerate() {
                    if a == b {
                        out.extend(combined_self_row(db, kv, eta, i));
                    } else {
                        let x = discs[a].nodes[i];
                        let w = db.weight();
                        out.extend((0..db.len()).map(|j| {
                            2.0 * w
                                * layer_kernel(
                                    Layer::Combined { eta },
                                    kv,
                                    x,
                                    db.nodes[j],
                                    db.derivatives[j],
                                )
                        }));
                    }
                }
                out
            })
            .collect();
        let matrix = DMatrix::from_fn(total, total, |i, j| rows[i][j]);
        Ok(ExteriorSolver {
            discs,
            offsets,
            k: kv,
            eta,
            lu: matrix.lu(),
        })
    }

    pub fn discretizations(&self) -> &[BoundaryDiscretization] {
        &self.discs
    }

    /// Densities for point sources at `sources`, one column per source.
    pub fn densities(&self, sources: &[Point]) -> Result<CMatrix> {
        for &s in sources {
            self.check_outside(s)?;
        }
        let kw = Wavenumber(self.k);
        let nodes: Vec<Point> = self
            .discs
            .iter()
            .flat_map(|d| d.nodes.iter().copied())
            .collect();
        let rhs = point_source_matrix(&nodes, sources, kw)? * Complex64::new(-2.0, 0.0);
        self.lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("combined-field Nyström matrix".into()))
    }

    /// Scattered field at `receivers` for each density column.
    pub fn evaluate(&self, densities: &CMatrix, receivers: &[Point]) -> Result<CMatrix> {
        for &x in receivers {
            self.check_outside(x)?;
        }
        let cols = densities.ncols();
        let layer = Layer::Combined { eta: self.eta };
        let rows: Vec<Vec<Complex64>> = receivers
            .par_iter()
            .map(|&x| {
                (0..cols)
                    .map(|c| {
                        let mut total = Complex64::new(0.0, 0.0);
                        for (b, d) in self.discs.iter().enumerate() {
                            let dens: Vec<Complex64> = (self.offsets[b]..self.offsets[b + 1])
                                .map(|i| densities[(i, c)])
                                .collect();
                            total += evaluate_layer(d, &dens, layer, self.k, x)?;
                        }
                        Ok(total)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(receivers.len(), cols, |i, j| rows[i][j]))
    }

    fn check_outside(&self, p: Point) -> Result<()> {
        for d in &self.discs {
            if d.curve().contains(p) {
                return Err(Error::Geometry(format!(
                    "point ({}, {}) is inside the obstacle",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

fn combined_self_row(disc: &BoundaryDiscretization, k: f64, eta: f64, i: usize) -> Vec<Complex64> {
    let n_nodes = disc.len();
    let r = log_weights(n_nodes);
    let w = disc.weight();
    let xi = disc.nodes[i];
    (0..n_nodes)
        .map(|j| {
            let m = (i + n_nodes - j) % n_nodes;
            let dj = disc.derivatives[j];
            let speed = dj.norm();
            let (l1, l2, m1, m2) = if i == j {
                let l2 = -0.5 * FRAC_1_PI * dj.cross(disc.second_derivatives[j]) / (speed * speed);
                let m2 = Complex64::new(
                    -EULER_GAMMA * FRAC_1_PI - FRAC_1_PI * (0.5 * k * speed).ln(),
                    0.5,
                ) * speed;
                (0.0, Complex64::new(l2, 0.0), -0.5 * FRAC_1_PI * speed, m2)
            } else {
                let d = xi - disc.nodes[j];
                let dist = d.norm();
                let c = Cyl01::at(k * dist);
                let s = dj.y * d.x - dj.x * d.y;
                let lg = log_factor(n_nodes, m);
                let l_full = 0.5 * I * k * c.h1() * s / dist;
                let l1 = -0.5 * FRAC_1_PI * k * s * c.j1 / dist;
                let m_full = 0.5 * I * c.h0() * speed;
                let m1 = -0.5 * FRAC_1_PI * c.j0 * speed;
                (l1, l_full - l1 * lg, m1, m_full - m1 * lg)
            };
            let log_part = Complex64::new(l1, 0.0) - I * eta * m1;
            let smooth = l2 - I * eta * m2;
            let v = r[m] * log_part + w * smooth;
            if i == j {
                v + 1.0
            } else {
                v
            }
        })
        .collect()
}

fn check_disjoint(curves: &[ParametricCurve]) -> Result<()> {
    const PROBES: usize = 256;
    for (a, ca) in curves.iter().enumerate() {
        for (b, cb) in curves.iter().enumerate() {
            if a == b {
                continue;
            }
            let hit = (0..PROBES).any(|j| {
                let t = 2.0 * PI * j as f64 / PROBES as f64;
                cb.contains(ca.position(t))
            });
            if hit {
                return Err(Error::Geometry(format!(
                    "scene components {a} ({}) and {b} ({}) overlap",
                    ca.kind(),
                    cb.kind()
                )));
            }
        }
    }
    Ok(())
}

/// Scattered field `u^s(receiver; source)` outside a sound-soft obstacle for
/// a point source.
pub fn solve_exterior_dirichlet(
    curve: &ParametricCurve,
    k: Wavenumber,
    source: Point,
    receivers: &[Point],
    n: usize,
) -> Result<Vec<Complex64>> {
    let solver = ExteriorSolver::new(std::slice::from_ref(curve), k, n)?;
    let dens = solver.densities(&[source])?;
    Ok(solver
        .evaluate(&dens, receivers)?
        .column(0)
        .iter()
        .copied()
        .collect())
}

/// Single-layer Nyström system for the interior Dirichlet problem of a
/// cavity.
pub struct InteriorSolver {
    disc: BoundaryDiscretization,
    k: f64,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl InteriorSolver {
    pub fn new(curve: &ParametricCurve, k: Wavenumber, n: usize) -> Result<Self> {
        let disc = discretize(curve, n)?;
        let s = assemble_single_layer(&disc, k, false)?;
        let cond = condition_number(&s);
        if cond > CONDITION_LIMIT {
            return Err(Error::EigenvalueProximity(format!(
                "cavity single-layer condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
            )));
        }
        Ok(InteriorSolver {
            disc,
            k: k.0,
            lu: s.lu(),
        })
    }

    pub fn discretization(&self) -> &BoundaryDiscretization {
        &self.disc
    }

    pub fn densities(&self, sources: &[Point]) -> Result<CMatrix> {
        for &s in sources {
            self.check_inside(s)?;
        }
        let rhs = point_source_matrix(&self.disc.nodes, sources, Wavenumber(self.k))?
            * Complex64::new(-1.0, 0.0);
        self.lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("cavity single-layer matrix".into()))
    }

    pub fn evaluate(&self, densities: &CMatrix, receivers: &[Point]) -> Result<CMatrix> {
        for &x in receivers {
            self.check_inside(x)?;
        }
        let cols = densities.ncols();
        let rows: Vec<Vec<Complex64>> = receivers
            .par_iter()
            .map(|&x| {
                (0..cols)
                    .map(|c| {
                        let dens: Vec<Complex64> = densities.column(c).iter().copied().collect();
                        evaluate_layer(&self.disc, &dens, Layer::Single, self.k, x)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(receivers.len(), cols, |i, j| rows[i][j]))
    }

    fn check_inside(&self, p: Point) -> Result<()> {
        if !self.disc.curve().contains(p) {
            return Err(Error::Geometry(format!(
                "point ({}, {}) is outside the cavity",
                p.x, p.y
            )));
        }
        Ok(())
    }
}

/// Scattered field `u^s(receiver; source)` inside a sound-soft cavity.
pub fn solve_interior_dirichlet(
    curve: &ParametricCurve,
    k: Wavenumber,
    source: Point,
    receivers: &[Point],
    n: usize,
) -> Result<Vec<Complex64>> {
    let solver = InteriorSolver::new(curve, k, n)?;
    let dens = solver.densities(&[source])?;
    Ok(solver
        .evaluate(&dens, receivers)?
        .column(0)
        .iter()
        .copied()
        .collect())
}

/// Truncation order that keeps the circle series tail below double
/// precision for points up to radius `r_max`.
pub fn mie_truncation(k: Wavenumber, r_max: f64) -> usize {
    ((k.0 * r_max).ceil() as usize + 40).min(crate::specfun::MAX_ORDER as usize)
}

/// Separation-of-variables solution for a sound-soft circle of radius `a`
/// centered at the origin, point source outside:
/// `u^s(x; y) = -(i/4) sum_n J_n(ka)/H_n(ka) H_n(k|y|) H_n(k|x|) cos(n theta_xy)`.
pub fn mie_circle_exterior(
    a: f64,
    k: Wavenumber,
    source: Point,
    receiver: Point,
    trunc: usize,
) -> Result<Complex64> {
    check_radius(a)?;
    let (ry, rx) = (source.norm(), receiver.norm());
    let tol = 1e-14 * a;
    if ry < a - tol || rx < a - tol {
        return Err(Error::Geometry(
            "exterior circle series needs |x|, |y| >= a".into(),
        ));
    }
    let kv = k.0;
    let jka = bessel_j_seq(trunc, kv * a)?;
    let hka = hankel1_seq(trunc, kv * a)?;
    let hy = hankel1_seq(trunc, kv * ry)?;
    let hx = hankel1_seq(trunc, kv * rx)?;
    let theta = receiver.angle() - source.angle();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=trunc {
        let weight = if n == 0 { 1.0 } else { 2.0 };
        let term = (jka[n] / hka[n]) * hy[n] * hx[n] * (weight * (n as f64 * theta).cos());
        if !term.is_finite() {
            return Err(Error::invalid(format!(
                "circle series overflowed at order {n}"
            )));
        }
        sum += term;
    }
    Ok(-0.25 * I * sum)
}

/// Interior counterpart for a sound-soft disk cavity:
/// `u^s(x; y) = -(i/4) sum_n H_n(ka)/J_n(ka) J_n(k|y|) J_n(k|x|) cos(n theta_xy)`.
pub fn mie_circle_interior(
    a: f64,
    k: Wavenumber,
    source: Point,
    receiver: Point,
    trunc: usize,
) -> Result<Complex64> {
    check_radius(a)?;
    let (ry, rx) = (source.norm(), receiver.norm());
    let tol = 1e-14 * a;
    if ry > a + tol || rx > a + tol {
        return Err(Error::Geometry(
            "interior circle series needs |x|, |y| <= a".into(),
        ));
    }
    let kv = k.0;
    for n in 0..=trunc {
        if near_bessel_zero(n, kv * a, 1e-13)? {
            return Err(Error::EigenvalueProximity(format!(
                "J_{n}(ka) vanishes at ka = {}",
                kv * a
            )));
        }
    }
    let jka = bessel_j_seq(trunc, kv * a)?;
    let hka = hankel1_seq(trunc, kv * a)?;
    let jy = bessel_j_seq(trunc, kv * ry)?;
    let jx = bessel_j_seq(trunc, kv * rx)?;
    let theta = receiver.angle() - source.angle();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=trunc {
        if jy[n] == 0.0 || jx[n] == 0.0 {
            break;
        }
        if jka[n] == 0.0 {
            return Err(Error::invalid(format!(
                "J_{n}(ka) underflows; lower the truncation"
            )));
        }
        let weight = if n == 0 { 1.0 } else { 2.0 };
        let term = hka[n] * ((jy[n] / jka[n]) * jx[n] * weight * (n as f64 * theta).cos());
        if !term.is_finite() {
            return Err(Error::invalid(format!(
                "circle series overflowed at order {n}"
            )));
        }
        sum += term;
    }
    Ok(-0.25 * I * sum)
}

fn check_radius(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!(
            "circle radius must be positive, got {a}"
        )));
    }
    Ok(())
}
