mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nearsamp_core::bie::{fundamental_solution, Wavenumber};
use nearsamp_core::geometry::Point;
use nearsamp_core::imaging::{
    h_phi_closed_form, indicator_cavity, indicator_obstacle, probe_cavity, probe_obstacle,
    read_grid, s_psi_closed_form, sweep, GridSpec,
};
use nearsamp_core::nearfield::{Mode, NearFieldMatrix, SensorRing};
use nearsamp_core::specfun::{bessel_j, hankel1, CylOrder};
use nearsamp_core::Error;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn k(v: f64) -> Wavenumber {
    Wavenumber::new(v).unwrap()
}

fn ord(n: i32) -> CylOrder {
    CylOrder::new(n).unwrap()
}

fn random_symmetric(l: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(l, l, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    &a + a.transpose()
}

/// `(2 pi r / L) sum_j Phi(x, y_j) v_j`: the ring single layer of a probe.
fn ring_single_layer(
    x: Point,
    ring: &SensorRing,
    values: &[Complex64],
    kv: Wavenumber,
) -> Complex64 {
    ring.positions()
        .iter()
        .zip(values)
        .map(|(y, v)| fundamental_solution(x, *y, kv).unwrap() * v)
        .sum::<Complex64>()
        * ring.spacing()
}

#[test]
fn origin_probes_keep_only_the_zero_mode() {
    let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
    let p = probe_obstacle(Point::ORIGIN, &ring, k(10.0), 32).unwrap();
    let want = 4.0 / (I * 5.0 * PI * 2.0 * hankel1(ord(0), 50.0).unwrap());
    assert!(p
        .values
        .iter()
        .all(|v| (v - want).norm() < 1e-14 * want.norm()));

    let cring = SensorRing::new(1.0, 16, Mode::Cavity).unwrap();
    let q = probe_cavity(Point::ORIGIN, &cring, k(0.2), 3).unwrap();
    let want = 4.0 / (I * PI * 2.0) / bessel_j(ord(0), 0.2).unwrap();
    assert!(q
        .values
        .iter()
        .all(|v| (v - want).norm() < 1e-14 * want.norm()));
}

#[test]
fn probe_rotation_permutes_entries() {
    let l = 32;
    let ring = SensorRing::new(5.0, l, Mode::Obstacle).unwrap();
    let z = Point::new(1.2, -0.4);
    let shift = 5;
    let rz = z.rotate(2.0 * PI * shift as f64 / l as f64);
    let a = probe_obstacle(z, &ring, k(4.0), 20).unwrap();
    let b = probe_obstacle(rz, &ring, k(4.0), 20).unwrap();
    for j in 0..l {
        assert!((b.values[(j + shift) % l] - a.values[j]).norm() < 1e-12 * a.values.norm());
    }
}

// The probe's n and -n terms coincide, so its single layer counts every
// nonzero order twice: J_0 J_0 + 4 sum_{n>=1} J_n J_n cos, which is
// 2 * (Graf sum) - J_0(k|x|) J_0(k|z|).
#[test]
fn obstacle_probe_single_layer() {
    let kv = k(10.0);
    let ring = SensorRing::new(5.0, 128, Mode::Obstacle).unwrap();
    let (x, z) = (Point::new(1.5, 0.7), Point::new(0.5, -0.2));
    let p = probe_obstacle(z, &ring, kv, 32).unwrap();
    let got = ring_single_layer(x, &ring, p.values.as_slice(), kv);
    let graf = h_phi_closed_form(x, z, kv, 32).unwrap();
    let zero =
        bessel_j(ord(0), 10.0 * x.norm()).unwrap() * bessel_j(ord(0), 10.0 * z.norm()).unwrap();
    assert!((got - (2.0 * graf - zero)).norm() < 1e-8, "{got}");
}

#[test]
fn cavity_probe_single_layer() {
    let kv = k(0.2);
    let ring = SensorRing::new(1.0, 32, Mode::Cavity).unwrap();
    let (x, z) = (Point::polar(3.0, 0.4), Point::new(0.3, 0.2));
    let p = probe_cavity(z, &ring, kv, 3).unwrap();
    let got = ring_single_layer(x, &ring, p.values.as_slice(), kv);
    let graf = s_psi_closed_form(x, z, kv, 3).unwrap();
    let zero = hankel1(ord(0), 0.6).unwrap() * bessel_j(ord(0), 0.2 * z.norm()).unwrap();
    assert!(
        (got - (2.0 * graf - zero)).norm() < 1e-8 * graf.norm(),
        "{got}"
    );
}

#[test]
fn graf_sums() {
    let kv = k(10.0);
    let x = Point::new(0.8, -1.1);
    assert!((h_phi_closed_form(x, x, kv, 60).unwrap() - 1.0).abs() < 1e-8);
    let z = x + Point::polar(common::first_zero_j0() / 10.0, 0.9);
    assert!(h_phi_closed_form(x, z, kv, 80).unwrap().abs() < 1e-8);
    assert_eq!(
        h_phi_closed_form(x, z, kv, 30).unwrap(),
        h_phi_closed_form(z, x, kv, 30).unwrap()
    );

    let kc = k(0.2);
    let xc = Point::polar(3.0, 1.0);
    let zc = Point::polar(1.0, -0.5);
    let s = s_psi_closed_form(xc, zc, kc, 40).unwrap();
    let h0 = common::hankel_integral(0, 0.2 * xc.dist(zc));
    assert!((s - h0).norm() < 1e-6);
    let origin = s_psi_closed_form(xc, Point::ORIGIN, kc, 3).unwrap();
    assert!((origin - hankel1(ord(0), 0.6).unwrap()).norm() < 1e-15);
    assert_eq!(s.re, h_phi_closed_form(xc, zc, kc, 40).unwrap());
}

#[test]
fn indicator_forms() {
    let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
    let p = probe_obstacle(Point::new(0.3, 0.1), &ring, k(2.0), 8).unwrap();
    let eye = NearFieldMatrix::new(DMatrix::identity(16, 16), ring, k(2.0)).unwrap();
    let zero = NearFieldMatrix::new(DMatrix::zeros(16, 16), ring, k(2.0)).unwrap();
    let bilinear: Complex64 = p.values.iter().map(|v| v * v).sum();
    assert!(
        (indicator_obstacle(&eye, &p).unwrap() - bilinear.norm()).abs() < 1e-14 * bilinear.norm()
    );
    assert_eq!(indicator_obstacle(&zero, &p).unwrap(), 0.0);
    let c = Complex64::new(-2.0, 1.5);
    let scaled = NearFieldMatrix::new(eye.entries.map(|v| v * c), ring, k(2.0)).unwrap();
    let ratio = indicator_obstacle(&scaled, &p).unwrap() / indicator_obstacle(&eye, &p).unwrap();
    assert!((ratio - c.norm()).abs() < 1e-12);

    let cring = SensorRing::new(1.0, 16, Mode::Cavity).unwrap();
    let q = probe_cavity(Point::new(0.3, 0.1), &cring, k(0.2), 3).unwrap();
    let ceye = NearFieldMatrix::new(DMatrix::identity(16, 16), cring, k(0.2)).unwrap();
    let energy = q.values.norm_squared();
    assert!((indicator_cavity(&ceye, &q).unwrap() - energy).abs() < 1e-14 * energy);
    assert!(matches!(
        indicator_cavity(&eye, &p),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn sweep_is_scale_invariant_and_normalized() {
    let ring = SensorRing::new(5.0, 32, Mode::Obstacle).unwrap();
    let n = NearFieldMatrix::new(random_symmetric(32, 3), ring, k(3.0)).unwrap();
    let scaled = NearFieldMatrix::new(
        n.entries.map(|v| v * Complex64::new(0.0, 7.0)),
        ring,
        k(3.0),
    )
    .unwrap();
    let spec = GridSpec::square(21, 3.0).unwrap();
    let a = sweep(&n, &spec, 12).unwrap();
    let b = sweep(&scaled, &spec, 12).unwrap();
    assert_eq!(a.values.iter().copied().fold(0.0, f64::max), 1.0);
    for (u, v) in a.values.iter().zip(&b.values) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn sweep_rotates_with_the_data() {
    // rotating the data a quarter turn rotates the image a quarter turn
    let l = 32;
    let s = l / 4;
    let ring = SensorRing::new(5.0, l, Mode::Obstacle).unwrap();
    let n = random_symmetric(l, 11);
    let rotated = DMatrix::from_fn(l, l, |i, j| n[((i + l - s) % l, (j + l - s) % l)]);
    let spec = GridSpec::square(25, 3.0).unwrap();
    let a = sweep(&NearFieldMatrix::new(n, ring, k(3.0)).unwrap(), &spec, 12).unwrap();
    let b = sweep(
        &NearFieldMatrix::new(rotated, ring, k(3.0)).unwrap(),
        &spec,
        12,
    )
    .unwrap();
    // node (i, j) at (x, y) maps back to (y, -x), which is node (j, 24 - i)
    for j in 0..25 {
        for i in 0..25 {
            assert!((b.at(i, j) - a.at(j, 24 - i)).abs() < 1e-10);
        }
    }
}

#[test]
fn grid_text_round_trip() {
    let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
    let n = NearFieldMatrix::new(random_symmetric(16, 5), ring, k(2.0)).unwrap();
    let grid = sweep(&n, &GridSpec::new(7, 5, -2.0, 2.0, -1.0, 1.5).unwrap(), 6).unwrap();
    let back = read_grid(grid.to_string().as_bytes()).unwrap();
    assert_eq!(back, grid);
}

#[test]
fn zero_data_is_degenerate() {
    let ring = SensorRing::new(5.0, 16, Mode::Obstacle).unwrap();
    let n = NearFieldMatrix::new(DMatrix::zeros(16, 16), ring, k(2.0)).unwrap();
    assert!(matches!(
        sweep(&n, &GridSpec::square(5, 1.0).unwrap(), 4),
        Err(Error::DegenerateIndicator)
    ));
}

#[test]
fn cavity_probe_on_a_bessel_zero_is_rejected() {
    let z0 = common::first_zero_j0();
    let ring = SensorRing::new(1.0, 16, Mode::Cavity).unwrap();
    let err = probe_cavity(Point::new(0.1, 0.0), &ring, k(z0), 3).unwrap_err();
    assert!(err.is_numerical(), "{err}");
}
