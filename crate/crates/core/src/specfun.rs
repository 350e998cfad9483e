//! Integer-order cylinder functions of real positive argument.
//!
//! `J_n` comes from the ascending series for small arguments and from
//! Miller's backward recurrence (normalized with `J_0 + 2 sum J_2k = 1`)
//! otherwise. `Y_0` and `Y_1` use the Neumann series built on the same `J`
//! sequence for `x < 20` and Hankel's asymptotic expansion above; higher
//! orders follow from upward recurrence, which is stable for `Y`.
//!
//! Negative orders are resolved with `C_{-n} = (-1)^n C_n`.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported order magnitude.
pub const MAX_ORDER: u32 = 200;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument `J_n` is summed from its ascending series.
const SERIES_LIMIT: f64 = 1.0;

/// At and above this argument `J_0, J_1, Y_0, Y_1` use Hankel's expansion.
const ASYMPTOTIC_LIMIT: f64 = 20.0;

const RESCALE_LIMIT: f64 = 1e200;

/// Signed integer order of a cylinder function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylOrder(i32);

impl CylOrder {
    pub fn new(n: i32) -> Result<Self> {
        if n.unsigned_abs() > MAX_ORDER {
            return Err(Error::invalid(format!(
                "order {n} exceeds the supported range |n| <= {MAX_ORDER}"
            )));
        }
        Ok(CylOrder(n))
    }

    pub fn value(self) -> i32 {
        self.0
    }

    fn magnitude(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    /// `(-1)^n` for negative odd orders, 1 otherwise.
    fn reflection_sign(self) -> f64 {
        if self.0 < 0 && self.0 % 2 != 0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl TryFrom<i32> for CylOrder {
    type Error = Error;

    fn try_from(n: i32) -> Result<Self> {
        CylOrder::new(n)
    }
}

/// Bessel function of the first kind `J_n(x)` for `x >= 0`.
pub fn bessel_j(order: CylOrder, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid(format!(
            "bessel_j needs a finite x >= 0, got {x}"
        )));
    }
    let n = order.magnitude();
    Ok(order.reflection_sign() * bessel_j_seq(n, x)?[n])
}

/// Bessel function of the second kind `Y_n(x)` for `x > 0`.
pub fn bessel_y(order: CylOrder, x: f64) -> Result<f64> {
    let n = order.magnitude();
    Ok(order.reflection_sign() * bessel_y_seq(n, x)?[n])
}

/// Hankel function of the first kind `H_n^(1)(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(order: CylOrder, x: f64) -> Result<Complex64> {
    let n = order.magnitude();
    Ok(order.reflection_sign() * hankel1_seq(n, x)?[n])
}

/// `J_0(x), ..., J_nmax(x)`.
pub fn bessel_j_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_order(nmax)?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid(format!(
            "bessel_j needs a finite x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    let mut seq = j_sequence(nmax, x);
    seq.truncate(nmax + 1);
    Ok(seq)
}

/// `Y_0(x), ..., Y_nmax(x)`. Entries that overflow are `-inf`.
pub fn bessel_y_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_order(nmax)?;
    check_positive(x)?;
    let (y0, y1) = if x >= ASYMPTOTIC_LIMIT {
        (hankel_asymptotic(0.0, x).1, hankel_asymptotic(1.0, x).1)
    } else {
        neumann_y01(&j_sequence(1, x), x)
    };
    Ok(upward_y(nmax, x, y0, y1))
}

/// `H_0^(1)(x), ..., H_nmax^(1)(x)`.
pub fn hankel1_seq(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    check_order(nmax)?;
    check_positive(x)?;
    let j = j_sequence(nmax, x);
    let (y0, y1) = if x >= ASYMPTOTIC_LIMIT {
        (hankel_asymptotic(0.0, x).1, hankel_asymptotic(1.0, x).1)
    } else {
        neumann_y01(&j, x)
    };
    let y = upward_y(nmax, x, y0, y1);
    Ok(j.iter()
        .zip(&y)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect())
}

/// `J_0, J_1, Y_0, Y_1` at `x > 0`; the hot path for kernel assembly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cyl01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Cyl01 {
    pub fn at(x: f64) -> Self {
        debug_assert!(x > 0.0);
        if x >= ASYMPTOTIC_LIMIT {
            let (j0, y0) = hankel_asymptotic(0.0, x);
            let (j1, y1) = hankel_asymptotic(1.0, x);
            Cyl01 { j0, j1, y0, y1 }
        } else {
            let j = j_sequence(1, x);
            let (y0, y1) = neumann_y01(&j, x);
            Cyl01 {
                j0: j[0],
                j1: j[1],
                y0,
                y1,
            }
        }
    }

    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }

    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

fn check_order(nmax: usize) -> Result<()> {
    if nmax > MAX_ORDER as usize {
        return Err(Error::invalid(format!(
            "order {nmax} exceeds the supported range |n| <= {MAX_ORDER}"
        )));
    }
    Ok(())
}

fn check_positive(x: f64) -> Result<()> {
    if x == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid(format!(
            "argument must be finite and positive, got {x}"
        )));
    }
    Ok(())
}

/// Normalized `J_0 ..= J_top` for `x > 0`, with `top >= nmax` and long
/// enough for the Neumann series of `Y_0, Y_1`.
fn j_sequence(nmax: usize, x: f64) -> Vec<f64> {
    if x <= SERIES_LIMIT {
        ascending_series(nmax.max(40), x)
    } else {
        miller(nmax, x)
    }
}

/// `J_n(x) = (x/2)^n / n! * sum_m (-x^2/4)^m / (m! (n+1)...(n+m))`.
fn ascending_series(top: usize, x: f64) -> Vec<f64> {
    let half = 0.5 * x;
    let q = -half * half;
    let mut lead = 1.0;
    (0..=top)
        .map(|n| {
            if n > 0 {
                lead *= half / n as f64;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..60 {
                term *= q / (m as f64 * (n + m) as f64);
                sum += term;
                if term.abs() < 1e-17 * sum.abs() {
                    break;
                }
            }
            lead * sum
        })
        .collect()
}

fn miller(nmax: usize, x: f64) -> Vec<f64> {
    let base = (nmax as f64).max(x.ceil());
    let mut top = (base + 30.0 + (10.0 * x.cbrt()).ceil()) as usize;
    top += top & 1;

    let mut j = vec![0.0; top + 2];
    j[top] = 1.0;
    let two_over_x = 2.0 / x;
    for m in (1..=top).rev() {
        let next = m as f64 * two_over_x * j[m] - j[m + 1];
        j[m - 1] = next;
        if next.abs() > RESCALE_LIMIT {
            for v in &mut j[m - 1..=top] {
                *v /= RESCALE_LIMIT;
            }
        }
    }
    let norm = j[0] + 2.0 * j[2..=top].iter().step_by(2).sum::<f64>();
    j.truncate(top + 1);
    for v in &mut j {
        *v /= norm;
    }
    j
}

/// Neumann series for `Y_0` and its negated derivative `Y_1`.
fn neumann_y01(j: &[f64], x: f64) -> (f64, f64) {
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut sign = -1.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let kf = k as f64;
        s0 += sign * j[2 * k] / kf;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / kf;
        sign = -sign;
        k += 1;
    }
    let y0 = FRAC_2_PI * log_term * j[0] - 2.0 * FRAC_2_PI * s0;
    let y1 = FRAC_2_PI * (log_term * j[1] - j[0] / x) + FRAC_2_PI * s1;
    (y0, y1)
}

fn upward_y(nmax: usize, x: f64, y0: f64, y1: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(nmax + 1);
    y.push(y0);
    if nmax >= 1 {
        y.push(y1);
    }
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * y[n] - y[n - 1];
        if next.is_finite() {
            y.push(next);
        } else {
            y.resize(nmax + 1, f64::NEG_INFINITY);
            break;
        }
    }
    y
}

/// Hankel's large-argument expansion; returns `(J_nu(x), Y_nu(x))`.
fn hankel_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut k = 0usize;
    loop {
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        k += 1;
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next == 0.0 || next.abs() >= term.abs() || next.abs() < 1e-18 || k > 400 {
            break;
        }
        term = next;
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// True when `x` sits numerically on a zero of `J_n`: the relative distance
/// `|J_n(x)| / (|J_n(x)| + |x J_n'(x)|)` to the nearest root is below `tol`.
///
/// The scale `x J_n'` keeps the decaying tail (`J_n` tiny but far from any
/// root) from being flagged.
pub fn near_bessel_zero(n: usize, x: f64, tol: f64) -> Result<bool> {
    let j = bessel_j_seq(n + 1, x)?;
    let jn = j[n];
    // x J_n' = n J_n - x J_{n+1}
    let xdj = n as f64 * jn - x * j[n + 1];
    Ok(jn.abs() < tol * (jn.abs() + xdj.abs()))
}
