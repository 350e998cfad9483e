//! Completion of limited-aperture near-field data to the full sensor ring.
//!
//! With the orthonormal basis `phi_p(theta) = e^{i p theta} / sqrt(2 pi)`,
//! the Fourier coefficients of a band-limited column on an arc
//! `[-alpha, alpha]` are `C^alpha = P C`, where `C` holds the full-circle
//! coefficients and `P` is the prolate matrix
//! `p_mn = sin((m - n) alpha) / (pi (m - n))`, `p_mm = alpha / pi`.
//! `P` is severely ill-conditioned, so `C` is recovered with the Tikhonov-type
//! inverse `U diag(1 / (sigma + eps)) U^T`. Completing every source column
//! and then, by reciprocity, every receiver row yields a full matrix.
//!
//! Arcs centered at `c != 0` are handled in the rotated angle `theta - c`.

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nearfield::{NearFieldMatrix, SensorRing};

/// Sensor angles within this distance of a requested arc endpoint count as
/// lying on it.
const ALIGNMENT_TOL: f64 = 1e-9;

/// Half-aperture `alpha` of an arc `[center - alpha, center + alpha]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureSpec {
    alpha: f64,
    center: f64,
}

impl ApertureSpec {
    pub fn new(alpha: f64, center: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= PI) {
            return Err(Error::invalid(format!(
                "half-aperture must lie in (0, pi], got {alpha}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::invalid("aperture center must be finite"));
        }
        Ok(ApertureSpec { alpha, center })
    }

    /// `[-alpha, alpha]`.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        ApertureSpec::new(alpha, 0.0)
    }

    pub fn full() -> Self {
        ApertureSpec {
            alpha: PI,
            center: 0.0,
        }
    }

    /// The upper half circle `[0, pi]`.
    pub fn upper_half() -> Self {
        ApertureSpec {
            alpha: PI / 2.0,
            center: PI / 2.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn is_full(&self) -> bool {
        self.alpha == PI
    }
}

/// Coefficients `c_p`, `p = -J..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffVector {
    j: usize,
    values: Vec<Complex64>,
}

impl FourierCoeffVector {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "coefficient vectors have odd length 2J+1, got {}",
                values.len()
            )));
        }
        Ok(FourierCoeffVector {
            j: values.len() / 2,
            values,
        })
    }

    pub fn truncation(&self) -> usize {
        self.j
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `c_p` for `-J <= p <= J`.
    pub fn get(&self, p: i64) -> Complex64 {
        self.values[(p + self.j as i64) as usize]
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.values)
    }

    /// `sum_p c_p phi_p(theta)`.
    pub fn evaluate(&self, theta: f64) -> Complex64 {
        let step = Complex64::from_polar(1.0, theta);
        let mut e = Complex64::from_polar(1.0, -(self.j as f64) * theta);
        let mut sum = Complex64::new(0.0, 0.0);
        for c in &self.values {
            sum += c * e;
            e *= step;
        }
        sum / TAU.sqrt()
    }
}

/// Restricts a full-ring matrix to the sensors on an arc. Both arc endpoints
/// must coincide with sensors of the ring.
pub fn restrict(n: &NearFieldMatrix, aperture: ApertureSpec) -> Result<NearFieldMatrix> {
    if n.ring.aperture().is_some() {
        return Err(Error::invalid("matrix is already restricted to an arc"));
    }
    if aperture.is_full() {
        return Ok(n.clone());
    }
    let l = n.dim();
    let h = TAU / l as f64;
    let start = (aperture.center() - aperture.alpha() + PI) / h;
    let span = 2.0 * aperture.alpha() / h;
    if (start - start.round()).abs() > ALIGNMENT_TOL || (span - span.round()).abs() > ALIGNMENT_TOL
    {
        return Err(Error::invalid(format!(
            "arc [{:.6}, {:.6}] does not start and end on sensors of the {l}-sensor ring",
            aperture.center() - aperture.alpha(),
            aperture.center() + aperture.alpha()
        )));
    }
    let start = (start.round() as i64).rem_euclid(l as i64) as usize;
    let count = span.round() as usize + 1;
    let idx: Vec<usize> = (0..count).map(|j| (start + j) % l).collect();
    let ring = SensorRing::on_arc(n.ring.radius(), count, n.ring.mode(), aperture)?;
    let entries = DMatrix::from_fn(count, count, |i, j| n.entries[(idx[i], idx[j])]);
    let mut out = NearFieldMatrix::new(entries, ring, n.k)?;
    out.noise_delta = n.noise_delta;
    Ok(out)
}

/// Number of sensors the full ring would have at the arc's sensor spacing.
fn implied_ring_count(samples: usize, alpha: f64) -> f64 {
    if alpha == PI {
        samples as f64
    } else {
        TAU * (samples - 1) as f64 / (2.0 * alpha)
    }
}

/// Quadrature weights (in `theta`) for equispaced samples on `[-alpha, alpha]`.
///
/// `alpha = pi` takes `samples` periodic points `-pi + 2 pi j / samples`
/// and the rectangle rule. Otherwise the samples include both endpoints and
/// the trapezoid rule gets endpoint corrections of Gregory type, so smooth
/// integrands converge at high algebraic order instead of `O(h^2)`.
fn arc_weights(samples: usize, alpha: f64) -> Vec<f64> {
    if alpha == PI {
        return vec![TAU / samples as f64; samples];
    }
    let h = 2.0 * alpha / (samples - 1) as f64;
    let m = (samples / 2).min(8);
    let d = endpoint_corrections(m);
    let mut w = vec![h; samples];
    for (j, dj) in d.iter().enumerate() {
        w[j] += h * dj;
        w[samples - 1 - j] += h * dj;
    }
    w
}

/// Corrections `d_j`, `j < m`, to unit weights so that `sum_{j>=0} (1 + d_j) f(j)`
/// matches `int_0^inf f` for polynomial behavior of degree `< m` near the end:
/// `sum_j d_j j^r = -zeta(-r) - [r = 0]`.
fn endpoint_corrections(m: usize) -> Vec<f64> {
    // B_{r+1} / (r + 1) for r >= 1, and -1/2 for r = 0
    const RHS: [f64; 8] = [
        -0.5,
        1.0 / 12.0,
        0.0,
        -1.0 / 120.0,
        0.0,
        1.0 / 252.0,
        0.0,
        -1.0 / 240.0,
    ];
    let a = DMatrix::from_fn(m, m, |r, j| (j as f64).powi(r as i32));
    let b = DVector::from_fn(m, |r, _| RHS[r]);
    let x = a
        .lu()
        .solve(&b)
        .expect("Vandermonde matrix on distinct nodes");
    x.iter().copied().collect()
}

/// `c_p = int_{-alpha}^{alpha} u(theta) conj(phi_p(theta)) dtheta`, `|p| <= J`,
/// from samples at equispaced angles in the (rotated) arc.
pub fn fourier_coeffs_limited(
    samples: &[Complex64],
    alpha: f64,
    j: usize,
) -> Result<FourierCoeffVector> {
    if !(alpha > 0.0 && alpha <= PI) {
        return Err(Error::invalid(format!(
            "half-aperture must lie in (0, pi], got {alpha}"
        )));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let implied = implied_ring_count(n, alpha);
    if (2 * j + 1) as f64 > implied + ALIGNMENT_TOL {
        return Err(Error::invalid(format!(
            "{n} samples on a half-aperture of {alpha:.6} resolve at most {} modes, J = {j} needs {}",
            implied.floor(),
            2 * j + 1
        )));
    }
    let w = arc_weights(n, alpha);
    let angles: Vec<f64> = if alpha == PI {
        (0..n).map(|i| -PI + TAU * i as f64 / n as f64).collect()
    } else {
        (0..n)
            .map(|i| -alpha + 2.0 * alpha * i as f64 / (n - 1) as f64)
            .collect()
    };
    let norm = 1.0 / TAU.sqrt();
    let values = (-(j as i64)..=j as i64)
        .map(|p| {
            samples
                .iter()
                .zip(&angles)
                .zip(&w)
                .map(|((u, &t), &wt)| u * Complex64::from_polar(wt * norm, -(p as f64) * t))
                .sum()
        })
        .collect();
    FourierCoeffVector::new(values)
}

/// Real symmetric matrix `p_mn`, `m, n = -J..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlateMatrix {
    alpha: f64,
    j: usize,
    entries: DMatrix<f64>,
}

/// Eigenpairs of a prolate matrix, eigenvalues descending.
///
/// Eigenvalues closer to 1 than machine epsilon round to 1.0, so the gaps
/// `1 - lambda` are kept separately.
#[derive(Debug, Clone)]
pub struct ProlateSpectrum {
    pub values: Vec<f64>,
    pub complements: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn prolate_matrix(alpha: f64, j: usize) -> Result<ProlateMatrix> {
    if !(alpha > 0.0 && alpha <= PI) {
        return Err(Error::invalid(format!(
            "half-aperture must lie in (0, pi], got {alpha}"
        )));
    }
    let size = 2 * j + 1;
    let entries = DMatrix::from_fn(size, size, |m, n| {
        if m == n {
            alpha / PI
        } else if alpha == PI {
            0.0
        } else {
            let d = m as f64 - n as f64;
            (d * alpha).sin() / (PI * d)
        }
    });
    Ok(ProlateMatrix { alpha, j, entries })
}

impl ProlateMatrix {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn truncation(&self) -> usize {
        self.j
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigendecomposition. Each eigenvalue is the fraction of
    /// `int |g|^2` carried by the arc for the trigonometric polynomial `g`
    /// built from its eigenvector; computing the smaller of the arc and
    /// complement parts with a positive quadrature keeps tiny eigenvalues
    /// positive and eigenvalues near 1 strictly below it.
    pub fn spectrum(&self) -> ProlateSpectrum {
        let eig = SymmetricEigen::new(self.entries.clone());
        let size = self.entries.nrows();
        let mut pairs: Vec<((f64, f64), DVector<f64>)> = (0..size)
            .map(|i| {
                let v = eig.eigenvectors.column(i).into_owned();
                (self.rayleigh_fraction(&v, eig.eigenvalues[i]), v)
            })
            .collect();
        pairs.sort_by(|a, b| b.0 .0.total_cmp(&a.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
        let values = pairs.iter().map(|p| p.0 .0).collect();
        let complements = pairs.iter().map(|p| p.0 .1).collect();
        let vectors = DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
        ProlateSpectrum {
            values,
            complements,
            vectors,
        }
    }

    /// `(lambda, 1 - lambda)`.
    fn rayleigh_fraction(&self, v: &DVector<f64>, raw: f64) -> (f64, f64) {
        if self.alpha == PI {
            return (raw, 1.0 - raw);
        }
        let nodes = NonZeroUsize::new(4 * self.j + 64).unwrap();
        let rule = GaussLegendre::new(nodes);
        let j = self.j as f64;
        let energy = |t: f64| {
            let step = Complex64::from_polar(1.0, t);
            let mut e = Complex64::from_polar(1.0, -j * t);
            let mut g = Complex64::new(0.0, 0.0);
            for c in v.iter() {
                g += e * *c;
                e *= step;
            }
            g.norm_sqr() / TAU
        };
        let inner = rule.integrate(-self.alpha, self.alpha, energy);
        let outer = rule.integrate(self.alpha, TAU - self.alpha, energy);
        let total = inner + outer;
        (inner / total, outer / total)
    }
}

/// `U diag(1 / (sigma + eps)) U^T`.
pub fn regularized_inverse(p: &ProlateMatrix, eps: f64) -> Result<DMatrix<f64>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!(
            "regularization parameter must be positive, got {eps}"
        )));
    }
    let s = p.spectrum();
    let scaled = DMatrix::from_fn(s.vectors.nrows(), s.vectors.ncols(), |r, c| {
        s.vectors[(r, c)] / (s.values[c] + eps)
    });
    Ok(scaled * s.vectors.transpose())
}

/// Estimates the full-circle coefficients as `P_dagger C^alpha` and evaluates
/// the truncated series at the `l` full-ring angles `-pi + 2 pi j / l`,
/// taken relative to the arc center `center`.
pub fn complete_column(
    c_alpha: &FourierCoeffVector,
    p_dagger: &DMatrix<f64>,
    l: usize,
    center: f64,
) -> Result<Vec<Complex64>> {
    let size = c_alpha.values.len();
    if p_dagger.nrows() != size || p_dagger.ncols() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            found: p_dagger.nrows(),
        });
    }
    let c = p_dagger.map(|v| Complex64::new(v, 0.0)) * c_alpha.to_vector();
    let full = FourierCoeffVector::new(c.iter().copied().collect())?;
    Ok((0..l)
        .map(|i| full.evaluate(-PI + TAU * i as f64 / l as f64 - center))
        .collect())
}

/// Two-pass completion of an arc-restricted matrix to the `l`-sensor ring:
/// every source column is completed over all receivers, then, using
/// `u^s(x; y) = u^s(y; x)`, every receiver row is completed over all sources.
pub fn complete_matrix(
    partial: &NearFieldMatrix,
    l: usize,
    j: usize,
    eps: f64,
) -> Result<NearFieldMatrix> {
    let aperture = partial.ring.aperture().unwrap_or_else(ApertureSpec::full);
    let m = partial.dim();
    if aperture.is_full() && m != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            found: m,
        });
    }
    if 2 * j + 1 > l {
        return Err(Error::invalid(format!("J = {j} needs 2J+1 <= L = {l}")));
    }
    let implied = implied_ring_count(m, aperture.alpha());
    if (implied - l as f64).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "{m} arc sensors on half-aperture {:.6} do not match a {l}-sensor ring",
            aperture.alpha()
        )));
    }
    let full_ring = SensorRing::new(partial.ring.radius(), l, partial.ring.mode())?;
    let center = aperture.center();
    let p_dagger = regularized_inverse(&prolate_matrix(aperture.alpha(), j)?, eps)?;
    let alpha = aperture.alpha();

    let complete = |samples: Vec<Complex64>| -> Result<Vec<Complex64>> {
        let c = fourier_coeffs_limited(&samples, alpha, j)?;
        complete_column(&c, &p_dagger, l, center)
    };
    // pass 1: receivers, one source column at a time -> l x m
    let pass1: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|s| complete(partial.entries.column(s).iter().copied().collect()))
        .collect::<Result<_>>()?;
    // pass 2: sources, one receiver row at a time -> l x l
    let pass2: Vec<Vec<Complex64>> = (0..l)
        .into_par_iter()
        .map(|r| complete((0..m).map(|s| pass1[s][r]).collect()))
        .collect::<Result<_>>()?;
    let entries = DMatrix::from_fn(l, l, |r, s| pass2[r][s]);
    let mut out = NearFieldMatrix::new(entries, full_ring, partial.k)?;
    out.noise_delta = partial.noise_delta;
    out.completed = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(q: i64, t: f64) -> Complex64 {
        Complex64::from_polar(1.0 / TAU.sqrt(), q as f64 * t)
    }

    #[test]
    fn aperture_validation() {
        assert!(ApertureSpec::symmetric(0.0).is_err());
        assert!(ApertureSpec::symmetric(3.2).is_err());
        assert!(ApertureSpec::symmetric(PI).unwrap().is_full());
    }

    #[test]
    fn endpoint_corrections_low_order() {
        let d = endpoint_corrections(2);
        assert!((d[0] + 7.0 / 12.0).abs() < 1e-15);
        assert!((d[1] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn corrected_trapezoid_integrates_polynomials() {
        let w = arc_weights(41, 1.0);
        let h = 2.0 / 40.0;
        for deg in 0..8 {
            let approx: f64 = (0..41)
                .map(|i| w[i] * (-1.0 + h * i as f64 + 0.3).powi(deg))
                .sum();
            let exact = (1.3f64.powi(deg + 1) - (-0.7f64).powi(deg + 1)) / (deg + 1) as f64;
            assert!((approx - exact).abs() < 1e-12, "degree {deg}");
        }
    }

    #[test]
    fn full_aperture_orthonormality() {
        let n = 64;
        let samples: Vec<_> = (0..n)
            .map(|i| basis(3, -PI + TAU * i as f64 / n as f64))
            .collect();
        let c = fourier_coeffs_limited(&samples, PI, 10).unwrap();
        for p in -10..=10 {
            let expect = if p == 3 { 1.0 } else { 0.0 };
            assert!((c.get(p) - expect).norm() < 1e-12);
        }
        assert!(fourier_coeffs_limited(&samples, PI, 32).is_err());
    }

    #[test]
    fn prolate_closed_form() {
        let p = prolate_matrix(PI, 5).unwrap();
        assert_eq!(p.entries(), &DMatrix::identity(11, 11));
        let p = prolate_matrix(PI / 2.0, 3).unwrap();
        assert!((p.entries()[(3, 4)] - 1.0 / PI).abs() < 1e-16);
        assert_eq!(p.entries(), &p.entries().transpose());
        assert!(prolate_matrix(0.0, 3).is_err());
    }

    #[test]
    fn regularized_inverse_identity_case() {
        let p = prolate_matrix(PI, 4).unwrap();
        let pd = regularized_inverse(&p, 1e-3).unwrap();
        assert!((pd - DMatrix::identity(9, 9) / 1.001).abs().max() < 1e-15);
        assert!(regularized_inverse(&p, 0.0).is_err());
    }

    #[test]
    fn restrict_upper_half() {
        use crate::bie::Wavenumber;
        use crate::nearfield::Mode;
        let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
        let e = DMatrix::from_fn(16, 16, |i, j| Complex64::new(i as f64, j as f64));
        let n = NearFieldMatrix::new(e, ring, Wavenumber::new(10.0).unwrap()).unwrap();
        let r = restrict(&n, ApertureSpec::upper_half()).unwrap();
        assert_eq!(r.dim(), 9);
        assert_eq!(r.entries[(0, 0)], Complex64::new(8.0, 8.0));
        assert_eq!(r.entries[(8, 7)], Complex64::new(0.0, 15.0));
        assert!(restrict(&n, ApertureSpec::symmetric(0.3).unwrap()).is_err());
    }
}
