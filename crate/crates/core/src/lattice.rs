//! Renormalized energy `W` of lattices.
//!
//! Three independent evaluation routes are provided:
//!
//! * [`w_eta`]: the Dedekind-eta closed form
//!   `W = -1/2 log(sqrt(2 pi b) |eta(tau)|^2)` at unit density;
//! * [`w_fourier`]: the regularized dual-lattice Fourier series, summed in
//!   closed form through the Eisenstein series and extrapolated to `x -> 0`;
//! * [`w_zeta_diff`]: energy differences from theta-function integrals.
//!
//! Densities other than one follow the scaling law `W_m = m (W_1 - log(m) / 4)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::geom::{LatticeBasis, Vec2, UNIT_DENSITY_COVOLUME};
use crate::modular::{eisenstein, log_abs_eta, theta_lattice, zeta_difference_limit, SeriesControl, Tau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Eta,
    Fourier,
    ZetaDiff,
}

/// An energy value with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Energy per unit area.
    pub value: f64,
    pub route: Route,
    pub tau: Tau,
    pub m: f64,
    /// Second lattice for difference routes.
    pub reference: Option<Tau>,
    pub truncation: SeriesControl,
    pub error_estimate: f64,
}

/// Applies `W_m = m (W_1 - log(m) / 4)`.
pub fn scale_to_density(w_unit: f64, m: f64) -> f64 {
    m * (w_unit - 0.25 * m.ln())
}

/// Maps `tau` to the fundamental domain `{|Re tau| <= 1/2, |tau| >= 1}`.
///
/// Boundary points are normalized to `Re tau > -1/2` and, on the unit arc,
/// to `Re tau >= 0`.
pub fn reduce_fundamental(tau: Tau) -> Tau {
    let mut z = tau.complex();
    for _ in 0..10_000 {
        z.re -= z.re.round();
        if z.norm_sqr() < 1.0 - 1e-14 {
            z = -1.0 / z;
        } else {
            break;
        }
    }
    if z.re < -0.5 + 1e-12 {
        z.re += 1.0;
    }
    if (z.norm_sqr() - 1.0).abs() < 1e-12 && z.re < 0.0 {
        z = -1.0 / z;
    }
    // z.im never decreases along the reduction
    Tau::new(z.re, z.im).expect("reduction stays in the upper half-plane")
}

/// Modulus and orientation of the dual of a lattice with covolume `2 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualFrame {
    /// `tau` of the Gauss-reduced dual basis (not boundary-normalized).
    pub tau: Tau,
    /// Angle of the reduced dual generator; rotating by `-angle` puts it on
    /// the positive x-axis.
    pub angle: f64,
}

pub fn dual_frame(basis: &LatticeBasis) -> Result<DualFrame> {
    let basis = LatticeBasis::new(basis.u, basis.v)?;
    let scale = (UNIT_DENSITY_COVOLUME / basis.covolume()).sqrt();
    let dual = basis.scaled(scale).dual().reduced();
    let angle = dual.angle();
    let u = dual.u.rotate(-angle);
    let v = dual.v.rotate(-angle);
    let tau = Tau::new(v.x / u.x, v.y / u.x)?;
    Ok(DualFrame { tau, angle })
}

/// Modulus `tau` of a lattice (through its dual cell, after rescaling to
/// covolume `2 pi`) and the rescaling factor applied.
pub fn lattice_to_tau(basis: &LatticeBasis) -> Result<(Tau, f64)> {
    let basis = LatticeBasis::new(basis.u, basis.v)?;
    let scale = (UNIT_DENSITY_COVOLUME / basis.covolume()).sqrt();
    let frame = dual_frame(&basis)?;
    Ok((reduce_fundamental(frame.tau), scale))
}

/// `W` at unit density from the eta closed form, with its truncation bound.
fn w_unit_eta(tau: Tau, ctl: &SeriesControl) -> Result<(f64, f64)> {
    let le = log_abs_eta(tau, ctl)?;
    Ok((-0.25 * (2.0 * PI * tau.b()).ln() - le.value, le.error))
}

pub fn w_eta(tau: Tau, m: f64) -> Result<EnergyReport> {
    w_eta_with(tau, m, &SeriesControl::default())
}

pub fn w_eta_with(tau: Tau, m: f64, ctl: &SeriesControl) -> Result<EnergyReport> {
    check_positive("m", m)?;
    let (w1, err) = w_unit_eta(tau, ctl)?;
    Ok(EnergyReport {
        value: scale_to_density(w1, m),
        route: Route::Eta,
        tau,
        m,
        reference: None,
        truncation: *ctl,
        error_estimate: m * err,
    })
}

/// Default probe radii for [`w_fourier`].
pub const DEFAULT_PROBES: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Largest disagreement tolerated between successive Richardson estimates.
pub const EXTRAPOLATION_TOL: f64 = 1e-4;

/// Regularized Fourier sum `sum_{p in dual, p != 0} e^{2 i pi p.x} / (4 pi^2 |p|^2)`
/// in the frame where the dual cell is `(1, 0), (a, b)` over `sqrt(2 pi b)`.
pub fn dual_fourier_sum(tau: Tau, x: Vec2, ctl: &SeriesControl) -> Result<(f64, f64)> {
    let s = (2.0 * PI * tau.b()).sqrt();
    let u = (tau.a() * x.x + tau.b() * x.y) / s;
    let v = x.x / s;
    let e = eisenstein(u, v, tau, ctl)?;
    Ok((e.value / (2.0 * PI), e.error / (2.0 * PI)))
}

pub fn w_fourier(tau: Tau, m: f64, probe_radii: &[f64], ctl: &SeriesControl) -> Result<EnergyReport> {
    w_fourier_along(tau, m, probe_radii, 0.0, ctl)
}

/// [`w_fourier`] with the probe points placed along direction `angle`.
pub fn w_fourier_along(tau: Tau, m: f64, probe_radii: &[f64], angle: f64, ctl: &SeriesControl) -> Result<EnergyReport> {
    check_positive("m", m)?;
    if probe_radii.len() < 2 {
        return Err(Error::InvalidInput("need at least two probe radii".into()));
    }
    for w in probe_radii.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidInput("probe radii must be strictly decreasing".into()));
        }
    }
    let dir = Vec2::new(angle.cos(), angle.sin());
    let mut phis = Vec::with_capacity(probe_radii.len());
    let mut series_err: f64 = 0.0;
    for &r in probe_radii {
        check_positive("probe radius", r)?;
        let (sum, err) = dual_fourier_sum(tau, r * dir, ctl)?;
        phis.push(0.5 * (sum + r.ln()));
        series_err = series_err.max(err);
    }
    let estimates: Vec<f64> = probe_radii
        .windows(2)
        .zip(phis.windows(2))
        .map(|(r, p)| (r[0] * p[1] - r[1] * p[0]) / (r[0] - r[1]))
        .collect();
    let last = *estimates.last().unwrap();
    let spread = if estimates.len() >= 2 {
        let d = (last - estimates[estimates.len() - 2]).abs();
        if d > EXTRAPOLATION_TOL {
            return Err(Error::ExtrapolationUnstable(d));
        }
        d
    } else {
        (last - phis[phis.len() - 1]).abs()
    };
    Ok(EnergyReport {
        value: scale_to_density(last, m),
        route: Route::Fourier,
        tau,
        m,
        reference: None,
        truncation: *ctl,
        error_estimate: m * (spread + series_err),
    })
}

/// `W(tau1) - W(tau2)` at density `m` from the theta-integral identity.
pub fn w_zeta_diff(tau1: Tau, tau2: Tau, m: f64) -> Result<EnergyReport> {
    w_zeta_diff_with(tau1, tau2, m, &SeriesControl::default())
}

pub fn w_zeta_diff_with(tau1: Tau, tau2: Tau, m: f64, ctl: &SeriesControl) -> Result<EnergyReport> {
    check_positive("m", m)?;
    let covol = 1.0 / UNIT_DENSITY_COVOLUME;
    let d = zeta_difference_limit(&tau1.basis(covol), &tau2.basis(covol), ctl)?;
    Ok(EnergyReport {
        value: m * d.value,
        route: Route::ZetaDiff,
        tau: tau1,
        m,
        reference: Some(tau2),
        truncation: *ctl,
        error_estimate: m * d.error,
    })
}

/// Rectangular search region in moduli space, clipped below by the unit arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuliGrid {
    pub a_range: [f64; 2],
    pub b_range: [f64; 2],
    pub resolution: usize,
}

impl Default for ModuliGrid {
    fn default() -> Self {
        ModuliGrid { a_range: [-0.5, 0.5], b_range: [0.5 * 3f64.sqrt(), 2.0], resolution: 200 }
    }
}

impl ModuliGrid {
    pub fn validate(&self) -> Result<()> {
        let [a0, a1] = self.a_range;
        let [b0, b1] = self.b_range;
        if ![a0, a1, b0, b1].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite range".into()));
        }
        if self.resolution == 0 {
            return Err(Error::InvalidGrid("resolution must be >= 1".into()));
        }
        if a0 > a1 || b0 > b1 {
            return Err(Error::InvalidGrid("ranges must be ordered".into()));
        }
        if a0 < -0.5 - 1e-12 || a1 > 0.5 + 1e-12 {
            return Err(Error::InvalidGrid(format!("a range [{a0}, {a1}] leaves |Re tau| <= 1/2")));
        }
        if b0 <= 0.0 {
            return Err(Error::InvalidGrid("b range must be positive".into()));
        }
        let worst = self.lower_b(if a0 <= 0.0 && a1 >= 0.0 { 0.0 } else { a0.abs().min(a1.abs()) });
        if b1 < worst {
            return Err(Error::InvalidGrid(format!("b_max {b1} lies below the unit arc")));
        }
        Ok(())
    }

    fn lower_b(&self, a: f64) -> f64 {
        self.b_range[0].max((1.0 - a * a).max(0.0).sqrt())
    }

    fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Grid nodes, column by column in increasing `a`, each column running
    /// from the arc (or `b_min`) up to `b_max`.
    pub fn points(&self) -> Result<Vec<Tau>> {
        self.validate()?;
        let n = self.resolution;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let a = Self::lerp(self.a_range[0], self.a_range[1], i, n);
            let lo = self.lower_b(a);
            for j in 0..n {
                out.push(Tau::new(a, Self::lerp(lo, self.b_range[1], j, n))?);
            }
        }
        Ok(out)
    }

    /// Largest spacing between neighbouring nodes.
    pub fn cell_size(&self) -> f64 {
        let n = self.resolution.max(2) as f64 - 1.0;
        let da = (self.a_range[1] - self.a_range[0]) / n;
        let db = (self.b_range[1] - self.lower_b(0.5).min(self.b_range[1])) / n;
        da.hypot(db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub a: f64,
    pub b: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub m: f64,
    pub grid: ModuliGrid,
    pub grid_argmin: Tau,
    pub grid_min: f64,
    pub refined: Tau,
    pub refined_min: f64,
    pub refine_iters: usize,
    pub values: Vec<ScanPoint>,
}

/// Values closer than this are ties, broken towards the larger `(a, b)`.
pub const TIE_TOL: f64 = 1e-12;

pub fn moduli_scan(grid: &ModuliGrid, m: f64) -> Result<ScanReport> {
    check_positive("m", m)?;
    let pts = grid.points()?;
    let ctl = SeriesControl::default();
    let values: Vec<ScanPoint> = pts
        .par_iter()
        .map(|t| w_eta_with(*t, m, &ctl).map(|r| ScanPoint { a: t.a(), b: t.b(), w: r.value }))
        .collect::<Result<_>>()?;
    let best = values
        .iter()
        .copied()
        .reduce(|best, p| {
            if p.w < best.w - TIE_TOL {
                p
            } else if (p.w - best.w).abs() <= TIE_TOL && (p.a, p.b) > (best.a, best.b) {
                p
            } else {
                best
            }
        })
        .expect("grid is non-empty");
    let start = Tau::new(best.a, best.b)?;
    let (refined, refined_min, refine_iters) = refine_descent(start, m, &ctl)?;
    Ok(ScanReport {
        m,
        grid: *grid,
        grid_argmin: start,
        grid_min: best.w,
        refined,
        refined_min,
        refine_iters,
        values,
    })
}

/// Gradient descent on `W` over the upper half-plane, five-point-stencil
/// gradients, backtracking steps. The result is reduced to the fundamental
/// domain (W is modular invariant).
fn refine_descent(start: Tau, m: f64, ctl: &SeriesControl) -> Result<(Tau, f64, usize)> {
    let f = |a: f64, b: f64| -> Result<f64> { Ok(w_eta_with(Tau::new(a, b)?, m, ctl)?.value) };
    let hd = 1e-4;
    let grad = |a: f64, b: f64| -> Result<(f64, f64)> {
        let ga = (-f(a + 2.0 * hd, b)? + 8.0 * f(a + hd, b)? - 8.0 * f(a - hd, b)? + f(a - 2.0 * hd, b)?) / (12.0 * hd);
        let gb = (-f(a, b + 2.0 * hd)? + 8.0 * f(a, b + hd)? - 8.0 * f(a, b - hd)? + f(a, b - 2.0 * hd)?) / (12.0 * hd);
        Ok((ga, gb))
    };
    let (mut a, mut b) = (start.a(), start.b());
    let mut fx = f(a, b)?;
    let mut step = 0.1;
    let mut iters = 0;
    while iters < 200 {
        let (ga, gb) = grad(a, b)?;
        let gn = ga.hypot(gb);
        if gn < 1e-8 {
            break;
        }
        iters += 1;
        let mut accepted = false;
        while step > 1e-14 {
            let (na, nb) = (a - step * ga, b - step * gb);
            if nb > 0.5 * b {
                let fn_ = f(na, nb)?;
                if fn_ <= fx - 1e-4 * step * gn * gn {
                    a = na;
                    b = nb;
                    fx = fn_;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    let red = reduce_fundamental(Tau::new(a, b)?);
    let val = w_eta_with(red, m, ctl)?.value;
    Ok((red, val, iters))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaVerdict {
    /// Triangular theta strictly below the sample's.
    Pass,
    /// Sample has the triangular shape; equal values.
    Tie,
    /// Difference below the numerical noise floor.
    Inconclusive,
    /// Sample theta strictly below triangular.
    Violation,
}

/// Compares the theta functions (unit covolume) of the triangular lattice
/// and of the lattice with modulus `sample` at `alpha`.
pub fn theta_compare(sample: Tau, alpha: f64, ctl: &SeriesControl) -> Result<(ThetaVerdict, f64)> {
    let tri = theta_lattice(&Tau::triangular().basis(1.0), alpha, ctl)?;
    let smp = theta_lattice(&sample.basis(1.0), alpha, ctl)?;
    let diff = smp.value - tri.value;
    let noise = tri.error + smp.error + 8.0 * f64::EPSILON * tri.value.max(smp.value);
    let reduced = reduce_fundamental(sample);
    let is_tri = (reduced.complex() - Tau::triangular().complex()).norm() < 1e-9;
    let verdict = if diff < -noise {
        ThetaVerdict::Violation
    } else if diff.abs() <= noise {
        if is_tri {
            ThetaVerdict::Tie
        } else {
            ThetaVerdict::Inconclusive
        }
    } else {
        ThetaVerdict::Pass
    };
    Ok((verdict, diff))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaProbeEntry {
    pub alpha: f64,
    pub theta_triangular: f64,
    pub passes: usize,
    pub ties: usize,
    pub inconclusive: usize,
    pub violations: usize,
    /// Smallest `theta(sample) - theta(triangular)` observed.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaProbeReport {
    pub samples: usize,
    pub seed: u64,
    pub entries: Vec<ThetaProbeEntry>,
    pub total_violations: usize,
}

/// Largest `Im tau` drawn by [`theta_minimality_probe`].
pub const PROBE_B_MAX: f64 = 2.5;

/// Draws a modulus uniformly from the truncated fundamental domain.
pub fn random_fundamental_tau<R: Rng>(rng: &mut R, b_max: f64) -> Tau {
    let a: f64 = rng.gen_range(-0.5..0.5);
    let lo = (1.0 - a * a).sqrt();
    let b = rng.gen_range(lo..b_max);
    Tau::new(a, b).expect("b > 0")
}

pub fn theta_minimality_probe(alphas: &[f64], samples: usize, seed: u64) -> Result<ThetaProbeReport> {
    let ctl = SeriesControl::default();
    for &a in alphas {
        check_positive("alpha", a)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taus: Vec<Tau> = (0..samples).map(|_| random_fundamental_tau(&mut rng, PROBE_B_MAX)).collect();
    let mut entries = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let tri = theta_lattice(&Tau::triangular().basis(1.0), alpha, &ctl)?;
        let verdicts: Vec<(ThetaVerdict, f64)> =
            taus.par_iter().map(|t| theta_compare(*t, alpha, &ctl)).collect::<Result<_>>()?;
        let count = |v: ThetaVerdict| verdicts.iter().filter(|(x, _)| *x == v).count();
        entries.push(ThetaProbeEntry {
            alpha,
            theta_triangular: tri.value,
            passes: count(ThetaVerdict::Pass),
            ties: count(ThetaVerdict::Tie),
            inconclusive: count(ThetaVerdict::Inconclusive),
            violations: count(ThetaVerdict::Violation),
            min_margin: verdicts.iter().map(|(_, d)| *d).fold(f64::INFINITY, f64::min),
        });
    }
    let total_violations = entries.iter().map(|e| e.violations).sum();
    Ok(ThetaProbeReport { samples, seed, entries, total_violations })
}
