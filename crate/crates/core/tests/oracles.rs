//! Closed forms and resummed series checked against the library routes.

use std::f64::consts::PI;

use renorm_core::lattice::{w_eta, w_fourier, w_zeta_diff, DEFAULT_PROBES};
use renorm_core::modular::{eisenstein, epstein_zeta_mellin, theta_lattice, SeriesControl, Tau};
use renorm_core::{LatticeBasis, Vec2};

const CATALAN: f64 = 0.915_965_594_177_219;
/// `L(2, chi_{-3})`.
const L_MINUS3_AT_2: f64 = 0.781_302_412_896_486_3;

fn ctl() -> SeriesControl {
    SeriesControl::default()
}

/// Eisenstein series summed over `n` by Poisson in closed form; the sum
/// over `m` then decays like `e^{-2 pi |m| b min(v, 1 - v)}`.
fn eisenstein_poisson(u: f64, v: f64, tau: Tau) -> f64 {
    let (a, b) = (tau.a(), tau.b());
    let v = v.rem_euclid(1.0);
    let mut s = 2.0 * b * PI * PI * (v * v - v + 1.0 / 6.0);
    for m in 1..400 {
        let mf = m as f64;
        for k in -40..=40 {
            let w = v - k as f64;
            let decay = (-2.0 * PI * mf * b * w.abs()).exp();
            // m and -m contribute equally
            s += 2.0 * PI / mf * (2.0 * PI * mf * (u - a * w)).cos() * decay;
        }
    }
    s
}

#[test]
fn eisenstein_matches_poisson_resummation() {
    for (u, v, a, b) in [(0.3, 0.25, 0.0, 1.0), (0.1, 0.6, 0.2, 1.3), (0.75, 0.4, -0.4, 0.9), (0.0, 0.5, 0.5, 0.8660254)] {
        let tau = Tau::new(a, b).unwrap();
        let lib = eisenstein(u, v, tau, &ctl()).unwrap().value;
        let oracle = eisenstein_poisson(u, v, tau);
        assert!((lib - oracle).abs() < 1e-9, "({u}, {v}, {a}, {b}): {lib} vs {oracle}");
    }
}

#[test]
fn epstein_zeta_square_closed_form() {
    // sum' |p|^-4 over Z^2 is 4 zeta(2) beta(2)
    let oracle = 4.0 * PI * PI / 6.0 * CATALAN / (8.0 * PI * PI);
    let z = epstein_zeta_mellin(&LatticeBasis::square(), 2.0, &ctl()).unwrap();
    assert!((z.value - oracle).abs() < 1e-10, "{} vs {oracle}", z.value);
}

#[test]
fn epstein_zeta_hexagonal_closed_form() {
    // unit hexagonal lattice: sum' |p|^-4 = 6 zeta(2) L(2, chi_{-3})
    let hex = LatticeBasis::new(Vec2::new(1.0, 0.0), Vec2::new(0.5, 0.5 * 3f64.sqrt())).unwrap();
    let oracle = 6.0 * PI * PI / 6.0 * L_MINUS3_AT_2 / (8.0 * PI * PI);
    let z = epstein_zeta_mellin(&hex, 2.0, &ctl()).unwrap();
    assert!((z.value - oracle).abs() < 1e-10, "{} vs {oracle}", z.value);
}

#[test]
fn theta_of_square_lattice_is_a_square_of_1d_sums() {
    for alpha in [0.3, 1.0, 2.7] {
        let one: f64 = (-80..=80).map(|n: i32| (-PI * alpha * (n * n) as f64).exp()).sum();
        let th = theta_lattice(&LatticeBasis::square(), alpha, &ctl()).unwrap().value;
        assert!((th - one * one).abs() < 1e-12);
    }
}

#[test]
fn three_routes_agree_away_from_symmetric_points() {
    let reference = Tau::square();
    let w_ref = w_eta(reference, 1.0).unwrap().value;
    for (a, b) in [(0.2, 1.1), (-0.35, 1.6), (0.0, 2.2), (0.45, 0.95)] {
        let tau = Tau::new(a, b).unwrap();
        let e = w_eta(tau, 1.0).unwrap().value;
        let f = w_fourier(tau, 1.0, &DEFAULT_PROBES, &ctl()).unwrap().value;
        let z = w_zeta_diff(tau, reference, 1.0).unwrap().value;
        assert!((e - f).abs() < 1e-4, "fourier at ({a}, {b}): {e} vs {f}");
        assert!((e - w_ref - z).abs() < 1e-6, "zeta at ({a}, {b}): {} vs {z}", e - w_ref);
    }
}

#[test]
fn remark_values() {
    assert!((w_eta(Tau::square(), 1.0).unwrap().value + 0.1958).abs() < 1e-3);
    assert!((w_eta(Tau::triangular(), 1.0).unwrap().value + 0.2011).abs() < 1e-3);
    let d = w_zeta_diff(Tau::square(), Tau::triangular(), 1.0).unwrap().value;
    assert!((d - 0.0053).abs() < 5e-4);
}
