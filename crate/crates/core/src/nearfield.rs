//! Near-field measurement matrices: synthesis, noise, and the `NFM` text
//! format.
//!
//! Rows are receivers and columns are sources, both on the same sensor ring.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::bie::{ExteriorSolver, InteriorSolver, Wavenumber};
use crate::completion::ApertureSpec;
use crate::error::{Error, Result};
use crate::geometry::{ParametricCurve, Point};
use crate::linalg::{spectral_norm, CMatrix};

pub const MIN_SENSORS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Sensors on a circle enclosing the obstacle.
    Obstacle,
    /// Sensors on a circle inside the cavity.
    Cavity,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Obstacle => "obstacle",
            Mode::Cavity => "cavity",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obstacle" => Ok(Mode::Obstacle),
            "cavity" => Ok(Mode::Cavity),
            _ => Err(Error::invalid(format!(
                "unknown mode '{s}' (expected obstacle or cavity)"
            ))),
        }
    }
}

/// Equidistant sensors on a circle about the origin.
///
/// A full ring has sensor `j` at angle `-pi + 2 pi j / L`. A ring restricted
/// to an arc keeps the sensors of the full ring that lie on
/// `[center - alpha, center + alpha]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorRing {
    radius: f64,
    count: usize,
    mode: Mode,
    aperture: Option<ApertureSpec>,
}

impl SensorRing {
    pub fn new(radius: f64, count: usize, mode: Mode) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "ring radius must be positive, got {radius}"
            )));
        }
        if count < MIN_SENSORS {
            return Err(Error::invalid(format!(
                "a sensor ring needs at least {MIN_SENSORS} sensors, got {count}"
            )));
        }
        Ok(SensorRing {
            radius,
            count,
            mode,
            aperture: None,
        })
    }

    /// Ring of `count` sensors spread over a closed arc, endpoints included.
    pub fn on_arc(radius: f64, count: usize, mode: Mode, aperture: ApertureSpec) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "ring radius must be positive, got {radius}"
            )));
        }
        if count < 2 {
            return Err(Error::invalid("an arc needs at least two sensors"));
        }
        if aperture.is_full() {
            return SensorRing::new(radius, count, mode);
        }
        Ok(SensorRing {
            radius,
            count,
            mode,
            aperture: Some(aperture),
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `None` for a full ring.
    pub fn aperture(&self) -> Option<ApertureSpec> {
        self.aperture
    }

    pub fn angle(&self, j: usize) -> f64 {
        match self.aperture {
            None => -PI + TAU * j as f64 / self.count as f64,
            Some(a) => {
                a.center() - a.alpha() + 2.0 * a.alpha() * j as f64 / (self.count - 1) as f64
            }
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.angle(j)).collect()
    }

    pub fn positions(&self) -> Vec<Point> {
        (0..self.count)
            .map(|j| Point::polar(self.radius, self.angle(j)))
            .collect()
    }

    /// Arc length per sensor, `2 pi r / L` on a full ring.
    pub fn spacing(&self) -> f64 {
        match self.aperture {
            None => TAU * self.radius / self.count as f64,
            Some(a) => 2.0 * a.alpha() * self.radius / (self.count - 1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldMatrix {
    pub entries: CMatrix,
    pub ring: SensorRing,
    pub k: Wavenumber,
    pub noise_delta: f64,
    /// Set when the matrix was extrapolated from limited-aperture data.
    pub completed: bool,
}

impl NearFieldMatrix {
    pub fn new(entries: CMatrix, ring: SensorRing, k: Wavenumber) -> Result<Self> {
        if entries.nrows() != ring.count() || entries.ncols() != ring.count() {
            return Err(Error::DimensionMismatch {
                expected: ring.count(),
                found: if entries.nrows() != ring.count() {
                    entries.nrows()
                } else {
                    entries.ncols()
                },
            });
        }
        Ok(NearFieldMatrix {
            entries,
            ring,
            k,
            noise_delta: 0.0,
            completed: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `||N - N^T|| / ||N||` in the spectral norm (plain transpose).
    pub fn asymmetry(&self) -> f64 {
        let norm = spectral_norm(&self.entries);
        if norm == 0.0 {
            return 0.0;
        }
        spectral_norm(&(&self.entries - self.entries.transpose())) / norm
    }
}

/// Checks that every scene component sits where the ring mode requires.
pub fn check_containment(scene: &[ParametricCurve], ring: &SensorRing) -> Result<()> {
    match ring.mode() {
        Mode::Obstacle => {
            for (i, c) in scene.iter().enumerate() {
                let (_, outer) = c.radial_extent();
                if outer >= ring.radius() {
                    return Err(Error::Geometry(format!(
                        "scene component {i} ({}) reaches radius {outer:.6} but the sensor ring has radius {}",
                        c.kind(),
                        ring.radius()
                    )));
                }
            }
        }
        Mode::Cavity => {
            if scene.len() > 1 {
                return Err(Error::Geometry(format!(
                    "cavity mode takes a single boundary curve, got {}",
                    scene.len()
                )));
            }
            if let Some(c) = scene.first() {
                let (inner, _) = c.radial_extent();
                if inner <= ring.radius() || !c.contains(Point::ORIGIN) {
                    return Err(Error::Geometry(format!(
                        "sensor ring of radius {} is not strictly inside the cavity ({})",
                        ring.radius(),
                        c.kind()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Samples `u^s(x_i; y_j)` for all sensor pairs, solving the boundary
/// integral equation of the scene with `n_bie` nodes per component.
pub fn synthesize(
    scene: &[ParametricCurve],
    ring: SensorRing,
    k: Wavenumber,
    n_bie: usize,
) -> Result<NearFieldMatrix> {
    check_containment(scene, &ring)?;
    let l = ring.count();
    if scene.is_empty() {
        return NearFieldMatrix::new(DMatrix::zeros(l, l), ring, k);
    }
    let sensors = ring.positions();
    let entries = match ring.mode() {
        Mode::Obstacle => {
            let solver = ExteriorSolver::new(scene, k, n_bie)?;
            let dens = solver.densities(&sensors)?;
            solver.evaluate(&dens, &sensors)?
        }
        Mode::Cavity => {
            let solver = InteriorSolver::new(&scene[0], k, n_bie)?;
            let dens = solver.densities(&sensors)?;
            solver.evaluate(&dens, &sensors)?
        }
    };
    log::debug!("synthesized {l}x{l} {} near-field matrix", ring.mode());
    NearFieldMatrix::new(entries, ring, k)
}

/// `N + delta ||N|| E / ||E||` with `E = R1 + i R2` standard normal,
/// generated from `seed` (`R1` row-major, then `R2`).
pub fn add_noise(n: &NearFieldMatrix, delta: f64, seed: u64) -> Result<NearFieldMatrix> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::invalid(format!(
            "noise level must be nonnegative, got {delta}"
        )));
    }
    let mut out = n.clone();
    out.noise_delta = delta;
    if delta == 0.0 {
        return Ok(out);
    }
    let (rows, cols) = n.entries.shape();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut re = vec![0.0; rows * cols];
    let mut im = vec![0.0; rows * cols];
    re.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    im.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    let e = DMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(re[i * cols + j], im[i * cols + j])
    });
    let scale = delta * spectral_norm(&n.entries) / spectral_norm(&e);
    out.entries += e * Complex64::new(scale, 0.0);
    Ok(out)
}

/// Writes `n` in the `NFM 1` format.
pub fn save(n: &NearFieldMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_nfm(n, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_nfm(n: &NearFieldMatrix, w: &mut impl Write) -> Result<()> {
    writeln!(w, "NFM 1")?;
    write!(
        w,
        "mode={} L={} radius={} k={} delta={}",
        n.ring.mode(),
        n.dim(),
        n.ring.radius(),
        n.k.get(),
        n.noise_delta
    )?;
    if let Some(a) = n.ring.aperture() {
        write!(w, " aperture={} aperture_center={}", a.alpha(), a.center())?;
    }
    if n.completed {
        write!(w, " completed=true")?;
    }
    writeln!(w)?;
    let mut line = String::new();
    for i in 0..n.dim() {
        line.clear();
        for j in 0..n.dim() {
            let v = n.entries[(i, j)];
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:.16e} {:.16e}", v.re, v.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<NearFieldMatrix> {
    read_nfm(BufReader::new(fs::File::open(path)?))
}

pub fn read_nfm(r: impl BufRead) -> Result<NearFieldMatrix> {
    let mut lines = r.lines();
    let magic = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::nfm("empty file"))?;
    if magic.trim() != "NFM 1" {
        return Err(Error::nfm(format!("bad magic line '{}'", magic.trim())));
    }
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::nfm("missing header line"))?;
    let h = parse_header(&header)?;
    let ring = match h.aperture {
        None => SensorRing::new(h.radius, h.count, h.mode)?,
        Some(alpha) => {
            let a = ApertureSpec::new(alpha, h.aperture_center.unwrap_or(0.0))?;
            SensorRing::on_arc(h.radius, h.count, h.mode, a)?
        }
    };
    if h.aperture.is_none() && h.aperture_center.is_some() {
        return Err(Error::nfm("aperture_center given without aperture"));
    }
    let mut entries = DMatrix::zeros(h.count, h.count);
    let mut rows = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if rows == h.count {
            return Err(Error::DimensionMismatch {
                expected: h.count,
                found: rows + 1,
            });
        }
        let vals = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::nfm(format!("row {rows}: bad number '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != 2 * h.count {
            return Err(Error::nfm(format!(
                "row {rows} has {} numbers, expected {}",
                vals.len(),
                2 * h.count
            )));
        }
        for j in 0..h.count {
            entries[(rows, j)] = Complex64::new(vals[2 * j], vals[2 * j + 1]);
        }
        rows += 1;
    }
    if rows != h.count {
        return Err(Error::DimensionMismatch {
            expected: h.count,
            found: rows,
        });
    }
    let mut n = NearFieldMatrix::new(entries, ring, Wavenumber::new(h.k)?)?;
    n.noise_delta = h.delta;
    n.completed = h.completed;
    Ok(n)
}

struct Header {
    mode: Mode,
    count: usize,
    radius: f64,
    k: f64,
    delta: f64,
    aperture: Option<f64>,
    aperture_center: Option<f64>,
    completed: bool,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut mode = None;
    let mut count = None;
    let mut radius = None;
    let mut k = None;
    let mut delta = None;
    let mut aperture = None;
    let mut aperture_center = None;
    let mut completed = false;
    let float = |key: &str, v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::nfm(format!("bad value for {key}: '{v}'")))
    };
    for tok in line.split_whitespace() {
        let (key, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::nfm(format!("header token '{tok}' is not key=value")))?;
        match key {
            "mode" => mode = Some(v.parse::<Mode>().map_err(|e| Error::nfm(e.to_string()))?),
            "L" => {
                count = Some(
                    v.parse::<usize>()
                        .map_err(|_| Error::nfm(format!("bad value for L: '{v}'")))?,
                )
            }
            "radius" => radius = Some(float(key, v)?),
            "k" => k = Some(float(key, v)?),
            "delta" => delta = Some(float(key, v)?),
            "aperture" => aperture = Some(float(key, v)?),
            "aperture_center" => aperture_center = Some(float(key, v)?),
            "completed" => {
                completed = v
                    .parse::<bool>()
                    .map_err(|_| Error::nfm(format!("bad value for completed: '{v}'")))?
            }
            _ => return Err(Error::nfm(format!("unknown header key '{key}'"))),
        }
    }
    let missing = |name: &str| Error::nfm(format!("header is missing {name}"));
    Ok(Header {
        mode: mode.ok_or_else(|| missing("mode"))?,
        count: count.ok_or_else(|| missing("L"))?,
        radius: radius.ok_or_else(|| missing("radius"))?,
        k: k.ok_or_else(|| missing("k"))?,
        delta: delta.ok_or_else(|| missing("delta"))?,
        aperture,
        aperture_center,
        completed,
    })
}
