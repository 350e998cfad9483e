//! Probe vectors, indicator functions and grid sweeps.
//!
//! For a sampling point `z` the obstacle probe on the sensor ring is
//! `phi_z(y) = sum_{|n|<=M} 4 / (i r pi (1 + delta_0n)) J_n(k|z|) / H_n(k r) cos(n (theta_y - theta_z))`
//! and the cavity probe `psi_z` replaces `H_n(k r)` by `J_n(k r)`. Since
//! the terms for `n` and `-n` coincide, the single layer of `phi_z` over the
//! ring is `J_0(k|x|) J_0(k|z|) + 4 sum_{n=1}^{M} J_n(k|x|) J_n(k|z|) cos(n theta_xz)`,
//! twice the `n != 0` part of the Graf sum. This weighting suppresses the
//! `n = 0` blob at the ring center and is what makes the indicator peak on
//! the boundary; [`h_phi_closed_form`] and [`s_psi_closed_form`] give the
//! plain Graf sums.
//!
//! The indicators are `|Phi^T N Phi|` (plain transpose) and `|Psi^* N Psi|`.
//!
//! Both probes are trigonometric polynomials in the sensor angle,
//! `v = E b(z)` with `E_jn = e^{i n theta_j}`, so a sweep reduces `N` once to
//! the `(2M+1)^2` matrix `E^T N E` (or `E^* N E`) and evaluates a small
//! quadratic form per sampling point.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bie::Wavenumber;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::CMatrix;
use crate::nearfield::{Mode, NearFieldMatrix, SensorRing};
use crate::specfun::{bessel_j_seq, hankel1_seq, near_bessel_zero};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative root-distance threshold below which `J_n(k r_i)` counts as zero.
pub const EIGENVALUE_TOL: f64 = 1e-13;

/// Probe growth `(max|z| / r_i)^m` above which a cavity sweep warns.
pub const CAVITY_GROWTH_WARNING: f64 = 1e8;

pub const DEFAULT_OBSTACLE_TRUNCATION: usize = 32;
pub const DEFAULT_CAVITY_TRUNCATION: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeVector {
    pub values: DVector<Complex64>,
    pub z: Point,
    pub truncation: usize,
    pub mode: Mode,
}

/// Per-order weights `c_n = 4 / (i r pi (1 + delta_0n)) J_n(k|z|) / D_n`, `n = 0..=m`,
/// where `D_n` is `H_n(k r)` or `J_n(k r)`.
fn probe_weights(z: Point, radius: f64, k: f64, denom: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = denom.len() - 1;
    let jz = bessel_j_seq(m, k * z.norm())?;
    let pre = 4.0 / (I * radius * std::f64::consts::PI);
    Ok((0..=m)
        .map(|n| if n == 0 { 0.5 } else { 1.0 } * pre * jz[n] / denom[n])
        .collect())
}

/// Coefficients `b_n`, `n = -m..=m`, of the probe in the basis `e^{i n theta}`.
fn probe_coefficients(weights: &[Complex64], z: Point) -> DVector<Complex64> {
    let m = weights.len() as i64 - 1;
    let tz = z.angle();
    DVector::from_iterator(
        (2 * m + 1) as usize,
        (-m..=m).map(|n| {
            weights[n.unsigned_abs() as usize] * Complex64::from_polar(1.0, -(n as f64) * tz)
        }),
    )
}

/// `E_jn = e^{i n theta_j}`, `n = -m..=m`.
fn fourier_basis(ring: &SensorRing, m: usize) -> CMatrix {
    let angles = ring.angles();
    let m = m as i64;
    DMatrix::from_fn(angles.len(), (2 * m + 1) as usize, |j, c| {
        Complex64::from_polar(1.0, (c as i64 - m) as f64 * angles[j])
    })
}

fn build_probe(z: Point, ring: &SensorRing, weights: &[Complex64]) -> DVector<Complex64> {
    let tz = z.angle();
    DVector::from_iterator(
        ring.count(),
        ring.angles().into_iter().map(|ty| {
            let d = ty - tz;
            weights
                .iter()
                .enumerate()
                .map(|(n, w)| w * (2.0 * (n as f64 * d).cos()))
                .sum::<Complex64>()
                - weights[0]
        }),
    )
}

fn obstacle_denominators(ring: &SensorRing, k: f64, m: usize) -> Result<Vec<Complex64>> {
    hankel1_seq(m, k * ring.radius())
}

fn cavity_denominators(ring: &SensorRing, k: f64, m: usize) -> Result<Vec<Complex64>> {
    let x = k * ring.radius();
    for n in 0..=m {
        if near_bessel_zero(n, x, EIGENVALUE_TOL)? {
            return Err(Error::EigenvalueProximity(format!(
                "J_{n}(k r_i) vanishes at k r_i = {x}; k^2 is an eigenvalue of the sensor disk"
            )));
        }
    }
    Ok(bessel_j_seq(m, x)?
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect())
}

fn require_mode(ring: &SensorRing, mode: Mode) -> Result<()> {
    if ring.mode() != mode {
        return Err(Error::invalid(format!(
            "expected a {mode} sensor ring, got {}",
            ring.mode()
        )));
    }
    Ok(())
}

/// `phi_z` sampled at the ring sensors.
pub fn probe_obstacle(z: Point, ring: &SensorRing, k: Wavenumber, m: usize) -> Result<ProbeVector> {
    require_mode(ring, Mode::Obstacle)?;
    let w = probe_weights(
        z,
        ring.radius(),
        k.get(),
        &obstacle_denominators(ring, k.get(), m)?,
    )?;
    Ok(ProbeVector {
        values: build_probe(z, ring, &w),
        z,
        truncation: m,
        mode: Mode::Obstacle,
    })
}

/// `psi_z` sampled at the ring sensors.
pub fn probe_cavity(z: Point, ring: &SensorRing, k: Wavenumber, m: usize) -> Result<ProbeVector> {
    require_mode(ring, Mode::Cavity)?;
    let w = probe_weights(
        z,
        ring.radius(),
        k.get(),
        &cavity_denominators(ring, k.get(), m)?,
    )?;
    Ok(ProbeVector {
        values: build_probe(z, ring, &w),
        z,
        truncation: m,
        mode: Mode::Cavity,
    })
}

fn check_probe(n: &NearFieldMatrix, probe: &ProbeVector, mode: Mode) -> Result<()> {
    if probe.mode != mode {
        return Err(Error::invalid(format!(
            "expected a {mode} probe, got {}",
            probe.mode
        )));
    }
    if probe.values.len() != n.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.dim(),
            found: probe.values.len(),
        });
    }
    Ok(())
}

/// `|Phi^T N Phi|`.
pub fn indicator_obstacle(n: &NearFieldMatrix, probe: &ProbeVector) -> Result<f64> {
    check_probe(n, probe, Mode::Obstacle)?;
    Ok((probe.values.transpose() * &n.entries * &probe.values)[(0, 0)].norm())
}

/// `|Psi^* N Psi|`.
pub fn indicator_cavity(n: &NearFieldMatrix, probe: &ProbeVector) -> Result<f64> {
    check_probe(n, probe, Mode::Cavity)?;
    Ok((probe.values.adjoint() * &n.entries * &probe.values)[(0, 0)].norm())
}

/// Sampling grid over `[x0, x1] x [y0, y1]` with `nx x ny` equally spaced
/// nodes, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let g = GridSpec {
            nx,
            ny,
            x0,
            x1,
            y0,
            y1,
        };
        g.validate()?;
        Ok(g)
    }

    /// `n x n` nodes on `[-half, half]^2`.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        GridSpec::new(n, n, -half, half, -half, half)
    }

    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Obstacle => GridSpec {
                nx: 301,
                ny: 301,
                x0: -5.0,
                x1: 5.0,
                y0: -5.0,
                y1: 5.0,
            },
            Mode::Cavity => GridSpec {
                nx: 81,
                ny: 81,
                x0: -4.0,
                x1: 4.0,
                y0: -4.0,
                y1: 4.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::invalid("imaging grid is empty"));
        }
        let ok = [self.x0, self.x1, self.y0, self.y1]
            .iter()
            .all(|v| v.is_finite());
        if !ok || self.x1 < self.x0 || self.y1 < self.y0 {
            return Err(Error::invalid(
                "imaging grid bounds must be finite and ordered",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        axis(self.x0, self.x1, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        axis(self.y0, self.y1, self.ny, j)
    }

    /// Node at column `i`, row `j`.
    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.x(i), self.y(j))
    }

    fn max_radius(&self) -> f64 {
        let cx = self.x0.abs().max(self.x1.abs());
        let cy = self.y0.abs().max(self.y1.abs());
        cx.hypot(cy)
    }
}

fn axis(a: f64, b: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        a
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

/// Normalized indicator values, row-major with `y` increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagingGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ImagingGrid {
    /// Value at column `i`, row `j`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// Divides by the maximum so the largest value is exactly 1.
    pub fn normalized(spec: GridSpec, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                found: raw.len(),
            });
        }
        if let Some(bad) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "indicator is not finite at grid node {bad}"
            )));
        }
        let max = raw.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::DegenerateIndicator);
        }
        Ok(ImagingGrid {
            spec,
            values: raw.into_iter().map(|v| v / max).collect(),
        })
    }
}

impl fmt::Display for ImagingGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.spec;
        writeln!(f, "IMG 1")?;
        writeln!(
            f,
            "nx={} ny={} x0={} x1={} y0={} y1={}",
            s.nx, s.ny, s.x0, s.x1, s.y0, s.y1
        )?;
        for row in self.values.chunks(s.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Evaluates the indicator matching the ring mode of `n` at every grid
/// node and normalizes. `truncation` is `M` for obstacles and the cavity
/// order otherwise.
pub fn sweep(n: &NearFieldMatrix, spec: &GridSpec, truncation: usize) -> Result<ImagingGrid> {
    spec.validate()?;
    let ring = n.ring;
    let k = n.k.get();
    let m = truncation;
    let (denom, sesquilinear) = match ring.mode() {
        Mode::Obstacle => (obstacle_denominators(&ring, k, m)?, false),
        Mode::Cavity => {
            let growth = (spec.max_radius() / ring.radius()).powi(m as i32);
            if growth > CAVITY_GROWTH_WARNING {
                log::warn!(
                    "cavity probes grow like (|z|/r_i)^m = {growth:.2e} on this grid; expect loss of accuracy \
                     (lower the truncation or enlarge the sensor ring)"
                );
            }
            (cavity_denominators(&ring, k, m)?, true)
        }
    };
    let e = fourier_basis(&ring, m);
    let gram = if sesquilinear {
        e.adjoint() * &n.entries * &e
    } else {
        e.transpose() * &n.entries * &e
    };
    let raw: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|idx| {
            let z = spec.point(idx % spec.nx, idx / spec.nx);
            let b = probe_coefficients(&probe_weights(z, ring.radius(), k, &denom)?, z);
            let gb = &gram * &b;
            let form: Complex64 = if sesquilinear {
                b.dotc(&gb)
            } else {
                b.dot(&gb)
            };
            Ok(form.norm())
        })
        .collect::<Result<_>>()?;
    ImagingGrid::normalized(*spec, raw)
}

pub fn save_grid(grid: &ImagingGrid, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(w, "{grid}")?;
    w.flush()?;
    Ok(())
}

pub fn load_grid(path: &Path) -> Result<ImagingGrid> {
    read_grid(BufReader::new(fs::File::open(path)?))
}

pub fn read_grid(r: impl BufRead) -> Result<ImagingGrid> {
    let mut lines = r.lines();
    let magic = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::img("empty file"))?;
    if magic.trim() != "IMG 1" {
        return Err(Error::img(format!("bad magic line '{}'", magic.trim())));
    }
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::img("missing header line"))?;
    let mut fields = [None::<f64>; 6];
    const KEYS: [&str; 6] = ["nx", "ny", "x0", "x1", "y0", "y1"];
    for tok in header.split_whitespace() {
        let (key, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::img(format!("bad header token '{tok}'")))?;
        let slot = KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| Error::img(format!("unknown header key '{key}'")))?;
        fields[slot] = Some(
            v.parse()
                .map_err(|_| Error::img(format!("bad value for {key}: '{v}'")))?,
        );
    }
    let get =
        |i: usize| fields[i].ok_or_else(|| Error::img(format!("header is missing {}", KEYS[i])));
    let count = |i: usize| -> Result<usize> {
        let v = get(i)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::img(format!(
                "{} must be a nonnegative integer",
                KEYS[i]
            )));
        }
        Ok(v as usize)
    };
    let spec = GridSpec::new(count(0)?, count(1)?, get(2)?, get(3)?, get(4)?, get(5)?)
        .map_err(|e| Error::img(e.to_string()))?;
    let mut values = Vec::with_capacity(spec.len());
    let mut rows = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::img(format!("bad number '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != spec.nx {
            return Err(Error::DimensionMismatch {
                expected: spec.nx,
                found: row.len(),
            });
        }
        values.extend(row);
        rows += 1;
    }
    if rows != spec.ny {
        return Err(Error::DimensionMismatch {
            expected: spec.ny,
            found: rows,
        });
    }
    Ok(ImagingGrid { spec, values })
}

/// `sum_{|n|<=M} J_n(k|x|) J_n(k|z|) cos(n theta_xz)`.
pub fn h_phi_closed_form(x: Point, z: Point, k: Wavenumber, m: usize) -> Result<f64> {
    let jx = bessel_j_seq(m, k.get() * x.norm())?;
    let jz = bessel_j_seq(m, k.get() * z.norm())?;
    let t = x.angle() - z.angle();
    Ok(jx[0] * jz[0]
        + (1..=m)
            .map(|n| 2.0 * jx[n] * jz[n] * (n as f64 * t).cos())
            .sum::<f64>())
}

/// `sum_{|n|<=m} H_n(k|x|) J_n(k|z|) cos(n theta_xz)`.
pub fn s_psi_closed_form(x: Point, z: Point, k: Wavenumber, m: usize) -> Result<Complex64> {
    if x.norm() == 0.0 {
        return Err(Error::invalid("Hankel expansion is singular at x = 0"));
    }
    let hx = hankel1_seq(m, k.get() * x.norm())?;
    let jz = bessel_j_seq(m, k.get() * z.norm())?;
    let t = x.angle() - z.angle();
    Ok(hx[0] * jz[0]
        + (1..=m)
            .map(|n| hx[n] * (2.0 * jz[n] * (n as f64 * t).cos()))
            .sum::<Complex64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_j, hankel1, CylOrder};
    use std::f64::consts::PI;

    fn k(v: f64) -> Wavenumber {
        Wavenumber::new(v).unwrap()
    }

    fn identity_matrix(ring: SensorRing) -> NearFieldMatrix {
        NearFieldMatrix::new(DMatrix::identity(ring.count(), ring.count()), ring, k(1.0)).unwrap()
    }

    #[test]
    fn probe_at_origin_has_only_zeroth_mode() {
        let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
        let p = probe_obstacle(Point::ORIGIN, &ring, k(10.0), 32).unwrap();
        let h0 = hankel1(CylOrder::new(0).unwrap(), 50.0).unwrap();
        let expect = 4.0 / (I * 5.0 * PI * 2.0 * h0);
        assert!(p
            .values
            .iter()
            .all(|v| (v - expect).norm() < 1e-14 * expect.norm()));

        let cav = SensorRing::new(1.0, 16, Mode::Cavity).unwrap();
        let p = probe_cavity(Point::ORIGIN, &cav, k(0.2), 3).unwrap();
        let j0 = bessel_j(CylOrder::new(0).unwrap(), 0.2).unwrap();
        let expect = 4.0 / (I * PI * 2.0 * j0);
        assert!(p
            .values
            .iter()
            .all(|v| (v - expect).norm() < 1e-14 * expect.norm()));
    }

    #[test]
    fn probe_rotation_permutes_entries() {
        let ring = SensorRing::new(5.0, 32, Mode::Obstacle).unwrap();
        let z = Point::new(1.1, -0.4);
        let a = probe_obstacle(z, &ring, k(10.0), 16).unwrap();
        let b = probe_obstacle(z.rotate(2.0 * PI * 3.0 / 32.0), &ring, k(10.0), 16).unwrap();
        for j in 0..32 {
            assert!((a.values[j] - b.values[(j + 3) % 32]).norm() < 1e-12);
        }
    }

    #[test]
    fn mode_mismatch_rejected() {
        let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
        assert!(probe_cavity(Point::ORIGIN, &ring, k(1.0), 3).is_err());
        let p = probe_obstacle(Point::new(1.0, 0.0), &ring, k(1.0), 3).unwrap();
        assert!(indicator_cavity(&identity_matrix(ring), &p).is_err());
    }

    #[test]
    fn cavity_probe_flags_eigenvalue() {
        let cav = SensorRing::new(1.0, 16, Mode::Cavity).unwrap();
        let r = probe_cavity(Point::ORIGIN, &cav, k(2.404_825_557_695_773), 3);
        assert!(matches!(r, Err(Error::EigenvalueProximity(_))));
    }

    #[test]
    fn bilinear_and_sesquilinear_forms() {
        let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
        let p = probe_obstacle(Point::new(0.7, 1.2), &ring, k(3.0), 8).unwrap();
        let n = identity_matrix(ring);
        let bil: Complex64 = p.values.iter().map(|v| v * v).sum();
        assert!((indicator_obstacle(&n, &p).unwrap() - bil.norm()).abs() < 1e-12 * bil.norm());

        let cav = SensorRing::new(1.0, 16, Mode::Cavity).unwrap();
        let q = probe_cavity(Point::new(0.7, 1.2), &cav, k(0.2), 3).unwrap();
        let n = identity_matrix(cav);
        let ses: f64 = q.values.iter().map(|v| v.norm_sqr()).sum();
        assert!((indicator_cavity(&n, &q).unwrap() - ses).abs() < 1e-12 * ses);
    }

    #[test]
    fn sweep_matches_direct_indicator() {
        let ring = SensorRing::new(5.0, 24, Mode::Obstacle).unwrap();
        let e = DMatrix::from_fn(24, 24, |i, j| {
            Complex64::new((i * j) as f64 % 7.0, (i + j) as f64 % 5.0 - 2.0)
        });
        let n = NearFieldMatrix::new(e, ring, k(2.0)).unwrap();
        let spec = GridSpec::square(5, 3.0).unwrap();
        let g = sweep(&n, &spec, 6).unwrap();
        let raw: Vec<f64> = (0..25)
            .map(|i| {
                indicator_obstacle(
                    &n,
                    &probe_obstacle(spec.point(i % 5, i / 5), &ring, k(2.0), 6).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let max = raw.iter().copied().fold(0.0, f64::max);
        for (a, b) in g.values.iter().zip(&raw) {
            assert!((a - b / max).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_cannot_be_normalized() {
        let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
        let n = NearFieldMatrix::new(DMatrix::zeros(16, 16), ring, k(1.0)).unwrap();
        assert!(matches!(
            sweep(&n, &GridSpec::square(3, 1.0).unwrap(), 4),
            Err(Error::DegenerateIndicator)
        ));
        assert!(GridSpec::new(0, 3, 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_round_trip() {
        let spec = GridSpec::new(3, 2, -1.0, 1.0, 0.0, 0.5).unwrap();
        let g = ImagingGrid::normalized(spec, vec![0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0]).unwrap();
        let text = g.to_string();
        let back = read_grid(text.as_bytes()).unwrap();
        assert_eq!(back, g);
        assert!(read_grid("IMG 1\nnx=3 ny=2 x0=0 x1=1 y0=0 y1=1\n1 2 3\n".as_bytes()).is_err());
    }

    #[test]
    fn closed_form_relations() {
        let x = Point::new(1.3, 0.4);
        let z = Point::new(-0.2, 0.9);
        let a = h_phi_closed_form(x, z, k(2.0), 30).unwrap();
        let b = h_phi_closed_form(z, x, k(2.0), 30).unwrap();
        assert!((a - b).abs() < 1e-15);
        let s = s_psi_closed_form(x, z, k(2.0), 30).unwrap();
        assert!((s.re - a).abs() < 1e-13);
        assert!(s_psi_closed_form(Point::ORIGIN, z, k(2.0), 3).is_err());
        let h0 = hankel1(CylOrder::new(0).unwrap(), 2.0 * x.norm()).unwrap();
        assert!((s_psi_closed_form(x, Point::ORIGIN, k(2.0), 5).unwrap() - h0).norm() < 1e-15);
    }
}
