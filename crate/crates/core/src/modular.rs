//! Special functions behind the closed forms of the lattice energy: Dedekind
//! eta, the Kronecker product `f(z, tau)`, the Eisenstein series `E_{u,v}`,
//! lattice theta functions and the Epstein zeta function through its Mellin
//! representation.
//!
//! All series converge geometrically. Every evaluation returns an
//! [`Evaluated`] carrying an a-posteriori bound on the truncation error.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_finite, check_positive, Error, Result};
pub use crate::geom::{LatticeBasis, Vec2};
use crate::quad::adaptive_simpson;

/// Distance below which arguments count as sitting on a singular set.
pub const SINGULAR_TUBE: f64 = 1e-9;

/// A point `tau = a + ib` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tau {
    a: f64,
    b: f64,
}

impl Tau {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_finite("Re tau", a)?;
        check_finite("Im tau", b)?;
        if b <= 0.0 {
            return Err(Error::NonPositiveImaginaryPart(b));
        }
        Ok(Tau { a, b })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Tau::new(z.re, z.im)
    }

    /// `tau = i`, the square lattice.
    pub fn square() -> Self {
        Tau { a: 0.0, b: 1.0 }
    }

    /// `tau = e^{i pi / 3}`, the triangular lattice.
    pub fn triangular() -> Self {
        Tau { a: 0.5, b: 0.5 * 3f64.sqrt() }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    /// Nome `q = e^{2 i pi tau}`.
    pub fn nome(&self) -> Complex64 {
        (Complex64::i() * 2.0 * PI * self.complex()).exp()
    }

    /// Basis `(1, 0), (a, b)` scaled to the given covolume.
    pub fn basis(&self, covolume: f64) -> LatticeBasis {
        LatticeBasis::from_modulus(self.a, self.b, covolume)
    }
}

/// Density-carrying lattice shape: modulus plus points per unit area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeModulus {
    pub tau: Tau,
    pub m: f64,
}

impl LatticeModulus {
    pub fn new(a: f64, b: f64, m: f64) -> Result<Self> {
        Ok(LatticeModulus { tau: Tau::new(a, b)?, m: check_positive("m", m)? })
    }
}

/// Truncation policy shared by all series evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    /// Minimum number of product terms (or lattice shells, in units of the
    /// shortest vector) summed before the tail test is applied.
    pub truncation_order: usize,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl { truncation_order: 1, abs_tol: 1e-14, max_terms: 20_000 }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        check_positive("abs_tol", self.abs_tol)?;
        if self.truncation_order < 1 {
            return Err(Error::InvalidInput("truncation_order must be >= 1".into()));
        }
        if self.max_terms < self.truncation_order {
            return Err(Error::InvalidInput("max_terms must be >= truncation_order".into()));
        }
        Ok(())
    }

    pub fn with_truncation_order(mut self, order: usize) -> Self {
        self.truncation_order = order;
        self.max_terms = self.max_terms.max(order);
        self
    }
}

/// A value with its a-posteriori truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluated<T> {
    pub value: T,
    pub error: f64,
    pub terms: usize,
}

/// Bound on `sum_{n > n0} |log|1 - x_n||` when `|x_n| <= scale * r^n`.
fn product_tail(r: f64, scale: f64, n0: usize) -> f64 {
    let lead = scale * r.powi(n0 as i32 + 1);
    if lead >= 1.0 || r >= 1.0 {
        return f64::INFINITY;
    }
    lead / ((1.0 - r) * (1.0 - lead))
}

/// `log|eta(tau)|` from the product, shared by [`dedekind_eta`].
pub fn log_abs_eta(tau: Tau, ctl: &SeriesControl) -> Result<Evaluated<f64>> {
    let (prod, err, terms) = eta_product(tau, ctl)?;
    Ok(Evaluated { value: -PI * tau.b / 12.0 + prod.norm().ln(), error: err, terms })
}

/// Dedekind eta `q^{1/24} prod_{n>=1} (1 - q^n)`.
pub fn dedekind_eta(tau: Tau, ctl: &SeriesControl) -> Result<Evaluated<Complex64>> {
    let (prod, log_err, terms) = eta_product(tau, ctl)?;
    let pre = (Complex64::i() * 2.0 * PI * tau.complex() / 24.0).exp();
    let value = pre * prod;
    Ok(Evaluated { value, error: value.norm() * log_err.exp_m1(), terms })
}

fn eta_product(tau: Tau, ctl: &SeriesControl) -> Result<(Complex64, f64, usize)> {
    ctl.validate()?;
    let q = tau.nome();
    let r = q.norm();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    let mut n = 0usize;
    loop {
        n += 1;
        if n > ctl.max_terms {
            return Err(Error::PrecisionUnreachable { abs_tol: ctl.abs_tol, max_terms: ctl.max_terms });
        }
        qn *= q;
        prod *= Complex64::new(1.0, 0.0) - qn;
        if n >= ctl.truncation_order {
            let tail = product_tail(r, 1.0, n);
            // relative bound on the product translates to an absolute one on eta
            if tail.is_finite() && tail * prod.norm().max(1.0) < 0.1 * ctl.abs_tol {
                return Ok((prod, tail, n));
            }
        }
    }
}

fn log_abs_two_sin_pi(z: Complex64) -> f64 {
    if z.im.abs() < 5.0 {
        (2.0 * (PI * z).sin()).norm().ln()
    } else {
        // |p^{1/2} - p^{-1/2}| = e^{pi |Im z|} |1 - w|, |w| = e^{-2 pi |Im z|}
        let w = if z.im > 0.0 {
            (Complex64::i() * 2.0 * PI * z).exp()
        } else {
            (-Complex64::i() * 2.0 * PI * z).exp()
        };
        PI * z.im.abs() + (Complex64::new(1.0, 0.0) - w).norm().ln()
    }
}

fn pi_cot_pi(z: Complex64) -> Complex64 {
    if z.im.abs() < 5.0 {
        PI * (PI * z).cos() / (PI * z).sin()
    } else if z.im > 0.0 {
        Complex64::new(0.0, -PI)
    } else {
        Complex64::new(0.0, PI)
    }
}

/// Distance from `z` to the lattice `Z + tau Z`.
pub fn distance_to_lattice(z: Complex64, tau: Tau) -> f64 {
    let j0 = (z.im / tau.b).round();
    let mut best = f64::INFINITY;
    for dj in -1..=1 {
        let j = j0 + dj as f64;
        let k = (z.re - j * tau.a).round();
        for dk in -1..=1 {
            let w = z - Complex64::new(k + dk as f64 + j * tau.a, j * tau.b);
            best = best.min(w.norm());
        }
    }
    best
}

/// `log|f(z, tau)|` and, optionally, `d/dz log f(z, tau)`.
pub(crate) struct KroneckerLog {
    pub log_abs: f64,
    pub dlog: Complex64,
    pub error: f64,
    pub terms: usize,
}

pub(crate) fn kronecker_log(z: Complex64, tau: Tau, ctl: &SeriesControl, deriv: bool) -> Result<KroneckerLog> {
    ctl.validate()?;
    check_finite("z", z.re)?;
    check_finite("z", z.im)?;
    let dist = distance_to_lattice(z, tau);
    if dist < SINGULAR_TUBE {
        return Err(Error::LatticePointSingularity { distance: dist, tube: SINGULAR_TUBE });
    }
    let one = Complex64::new(1.0, 0.0);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let q = tau.nome();
    let r = q.norm();
    let p = (two_pi_i * z).exp();
    let p_inv = (-two_pi_i * z).exp();
    let scale = (2.0 * PI * z.im.abs()).exp();

    let mut log_abs = -PI * tau.b / 6.0 + log_abs_two_sin_pi(z);
    let mut dlog = if deriv { pi_cot_pi(z) } else { Complex64::new(0.0, 0.0) };
    let mut qn = one;
    let mut n = 0usize;
    loop {
        n += 1;
        if n > ctl.max_terms {
            return Err(Error::PrecisionUnreachable { abs_tol: ctl.abs_tol, max_terms: ctl.max_terms });
        }
        qn *= q;
        let a = qn * p;
        let b = qn * p_inv;
        log_abs += (one - a).norm().ln() + (one - b).norm().ln();
        if deriv {
            dlog += two_pi_i * (b / (one - b) - a / (one - a));
        }
        if n >= ctl.truncation_order {
            let tail = 2.0 * product_tail(r, scale, n);
            let tail = if deriv { tail * 2.0 * PI } else { tail };
            if tail.is_finite() && tail < 0.1 * ctl.abs_tol {
                return Ok(KroneckerLog { log_abs, dlog, error: tail, terms: n });
            }
        }
    }
}

/// `|f(z, tau)|` for `f(z, tau) = q^{1/12} (p^{1/2} - p^{-1/2}) prod (1 - q^n p)(1 - q^n / p)`.
///
/// The factor `p^{1/2} - p^{-1/2}` enters through its modulus `2|sin(pi z)|`,
/// so no branch of the square root is chosen. On `Z + tau Z` the function
/// vanishes and `0` is returned.
pub fn kronecker_f(z: Complex64, tau: Tau, ctl: &SeriesControl) -> Result<Evaluated<f64>> {
    match kronecker_log(z, tau, ctl, false) {
        Ok(k) => {
            let v = k.log_abs.exp();
            Ok(Evaluated { value: v, error: v * k.error.exp_m1(), terms: k.terms })
        }
        Err(Error::LatticePointSingularity { .. }) => Ok(Evaluated { value: 0.0, error: 0.0, terms: 0 }),
        Err(e) => Err(e),
    }
}

/// `log|f(z, tau)|`; fails inside the singular tube around `Z + tau Z`.
pub fn kronecker_log_abs(z: Complex64, tau: Tau, ctl: &SeriesControl) -> Result<Evaluated<f64>> {
    let k = kronecker_log(z, tau, ctl, false)?;
    Ok(Evaluated { value: k.log_abs, error: k.error, terms: k.terms })
}

/// Representative of `x` modulo 1 in `[-1/2, 1/2)`.
pub(crate) fn centered_mod1(x: f64) -> f64 {
    let r = x - x.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// `log|f(u - v tau, tau) q^{v^2/2}|` with `(u, v)` reduced modulo `Z^2`,
/// plus the holomorphic derivative of `log f` at the reduced point.
pub(crate) fn log_abs_f_q(u: f64, v: f64, tau: Tau, ctl: &SeriesControl, deriv: bool) -> Result<(KroneckerLog, f64, f64)> {
    let ur = centered_mod1(u);
    let vr = centered_mod1(v);
    if ur.hypot(vr) < SINGULAR_TUBE {
        return Err(Error::DivergentSeries { u, v });
    }
    let z = Complex64::new(ur, 0.0) - vr * tau.complex();
    let mut k = kronecker_log(z, tau, ctl, deriv)?;
    k.log_abs -= PI * tau.b * vr * vr;
    Ok((k, ur, vr))
}

/// Eisenstein series `E_{u,v}(tau) = sum' e^{2 i pi (m u + n v)} b / |m tau + n|^2`,
/// evaluated through the second Kronecker limit formula
/// `E_{u,v}(tau) = -2 pi log|f(u - v tau, tau) q^{v^2/2}|`.
pub fn eisenstein(u: f64, v: f64, tau: Tau, ctl: &SeriesControl) -> Result<Evaluated<f64>> {
    check_finite("u", u)?;
    check_finite("v", v)?;
    let (k, _, _) = match log_abs_f_q(u, v, tau, ctl, false) {
        Err(Error::LatticePointSingularity { .. }) => return Err(Error::DivergentSeries { u, v }),
        other => other?,
    };
    Ok(Evaluated { value: -2.0 * PI * k.log_abs, error: 2.0 * PI * k.error, terms: k.terms })
}

/// Gaussian tail bound for `sum_{|p| > rho} e^{-pi alpha |p|^2}` over a
/// lattice with covolume `vol`, using `#{|p| <= r} <= pi (r + delta)^2 / vol`.
fn theta_tail(alpha: f64, rho: f64, delta: f64, vol: f64) -> f64 {
    2.0 * PI / vol * (-PI * alpha * rho * rho).exp() * (rho * rho + 1.0 / (PI * alpha) + delta * delta)
}

/// Jacobi theta of a lattice, `theta(alpha) = sum_{p} e^{-pi alpha |p|^2}`.
pub fn theta_lattice(basis: &LatticeBasis, alpha: f64, ctl: &SeriesControl) -> Result<Evaluated<f64>> {
    check_positive("alpha", alpha)?;
    ctl.validate()?;
    let red = basis.reduced();
    let vol = red.covolume();
    let lambda = red.u.norm();
    let delta = red.u.norm() + red.v.norm();
    let step = 0.25 * lambda;
    let mut rho = lambda * ctl.truncation_order as f64;
    let mut shells = ctl.truncation_order;
    while theta_tail(alpha, rho, delta, vol) >= 0.1 * ctl.abs_tol {
        rho += step;
        shells += 1;
        if rho > lambda * ctl.max_terms as f64 {
            return Err(Error::PrecisionUnreachable { abs_tol: ctl.abs_tol, max_terms: ctl.max_terms });
        }
    }
    let imax = (rho * red.v.norm() / vol).ceil() as i64;
    let jmax = (rho * red.u.norm() / vol).ceil() as i64;
    let rho_sq = rho * rho;
    let mut sum = 0.0;
    // accumulate from the outside in so small terms are not swamped
    for i in (0..=imax).rev() {
        for j in -jmax..=jmax {
            if i == 0 && j < 0 {
                continue;
            }
            let p = red.point(i as f64, j as f64);
            let d = p.norm_sq();
            if d > rho_sq || (i == 0 && j == 0) {
                continue;
            }
            sum += 2.0 * (-PI * alpha * d).exp();
        }
    }
    sum += 1.0;
    Ok(Evaluated { value: sum, error: theta_tail(alpha, rho, delta, vol), terms: shells })
}

/// Theta control for use inside integrals: tight tolerance, default budget.
fn inner_theta_ctl(ctl: &SeriesControl) -> SeriesControl {
    SeriesControl { truncation_order: 1, abs_tol: (0.01 * ctl.abs_tol).max(1e-17), max_terms: ctl.max_terms }
}

/// Upper limit `A` such that `int_A^inf (theta(a) - 1) w(a) da` is below
/// `target`, for a unimodular lattice with shortest vector `lambda` and a
/// weight growing at most like `a^{power}`.
fn mellin_cutoff(lambda: f64, delta: f64, power: f64, target: f64) -> (f64, f64) {
    let mut a_hi = (2.0 * (power.max(0.0) + 1.0) / (PI * lambda * lambda)).max(2.0);
    loop {
        let b = theta_tail(a_hi, lambda * (1.0 - 1e-12), delta, 1.0);
        let tail = 2.0 * b * (a_hi.powf(power) + 1.0) / (PI * lambda * lambda);
        if tail < target || a_hi > 1e6 {
            return (a_hi, tail);
        }
        a_hi += 0.5;
    }
}

/// Epstein zeta `zeta(x) = sum_{p != 0} 1 / (8 pi^2 |p|^{2+x})` of the lattice
/// spanned by `basis_dual`, via the Mellin transform of its theta function.
///
/// The lattice is first rescaled to unit covolume, for which
/// `pi^{-s} Gamma(s) sum |p|^{-2s} = 1/(s-1) - 1/s + int_1^inf (theta(a) - 1)(a^{s-1} + a^{-s}) da`
/// holds with `s = 1 + x/2`.
pub fn epstein_zeta_mellin(basis_dual: &LatticeBasis, x: f64, ctl: &SeriesControl) -> Result<Evaluated<f64>> {
    check_positive("x", x)?;
    ctl.validate()?;
    let vol = basis_dual.covolume();
    let unit = basis_dual.unimodular().reduced();
    let lambda = unit.u.norm();
    let delta = unit.u.norm() + unit.v.norm();
    let s = 1.0 + 0.5 * x;
    let prefactor = PI.powf(s) / gamma(s) * vol.powf(-s) / (8.0 * PI * PI);
    let target = 0.1 * ctl.abs_tol / prefactor;
    let (a_hi, tail) = mellin_cutoff(lambda, delta, s - 1.0, 0.1 * target);
    let th_ctl = inner_theta_ctl(ctl);
    let mut integral = 0.0;
    let mut err = tail;
    let mut evals = 0;
    let mut lo = 1.0;
    while lo < a_hi {
        let hi = (lo + 1.0).min(a_hi);
        let q = adaptive_simpson(
            |a| {
                let th = theta_lattice(&unit, a, &th_ctl).map(|t| t.value).unwrap_or(f64::NAN);
                (th - 1.0) * (a.powf(s - 1.0) + a.powf(-s))
            },
            lo,
            hi,
            0.5 * target / a_hi,
        );
        integral += q.value;
        err += q.error + th_ctl.abs_tol * (hi - lo) * (hi.powf(s - 1.0) + 1.0);
        evals += q.evaluations;
        lo = hi;
    }
    if !integral.is_finite() {
        return Err(Error::PrecisionUnreachable { abs_tol: ctl.abs_tol, max_terms: ctl.max_terms });
    }
    let bracket = 1.0 / (s - 1.0) - 1.0 / s + integral;
    Ok(Evaluated { value: prefactor * bracket, error: prefactor * err, terms: evals })
}

/// `lim_{x -> 0} [zeta_1(x) - zeta_2(x)]` for two lattices of equal covolume
/// `V`, as `(1 / (8 pi V)) int_1^inf (theta_1(a) - theta_2(a)) (1 + a) da / a`
/// with both thetas taken on the unit-covolume rescalings.
pub fn zeta_difference_limit(lat1: &LatticeBasis, lat2: &LatticeBasis, ctl: &SeriesControl) -> Result<Evaluated<f64>> {
    ctl.validate()?;
    let (v1, v2) = (lat1.covolume(), lat2.covolume());
    if (v1 - v2).abs() > 1e-9 * v1.abs().max(v2.abs()) {
        return Err(Error::CovolumeMismatch(v1, v2));
    }
    let u1 = lat1.unimodular().reduced();
    let u2 = lat2.unimodular().reduced();
    let prefactor = 1.0 / (8.0 * PI * v1);
    let target = 0.1 * ctl.abs_tol / prefactor;
    let lambda = u1.u.norm().min(u2.u.norm());
    let delta = (u1.u.norm() + u1.v.norm()).max(u2.u.norm() + u2.v.norm());
    let (a_hi, tail) = mellin_cutoff(lambda, delta, 0.0, 0.05 * target);
    let th_ctl = inner_theta_ctl(ctl);
    let mut integral = 0.0;
    let mut err = 2.0 * tail;
    let mut evals = 0;
    let mut lo = 1.0;
    while lo < a_hi {
        let hi = (lo + 1.0).min(a_hi);
        let q = adaptive_simpson(
            |a| {
                let t1 = theta_lattice(&u1, a, &th_ctl).map(|t| t.value).unwrap_or(f64::NAN);
                let t2 = theta_lattice(&u2, a, &th_ctl).map(|t| t.value).unwrap_or(f64::NAN);
                (t1 - t2) * (1.0 + a) / a
            },
            lo,
            hi,
            0.5 * target / a_hi,
        );
        integral += q.value;
        err += q.error + 2.0 * th_ctl.abs_tol * (hi - lo) * 2.0;
        evals += q.evaluations;
        lo = hi;
    }
    if !integral.is_finite() {
        return Err(Error::PrecisionUnreachable { abs_tol: ctl.abs_tol, max_terms: ctl.max_terms });
    }
    Ok(Evaluated { value: prefactor * integral, error: prefactor * err, terms: evals })
}
