//! Coulomb interaction on flat tori of volume `2 pi`.
//!
//! The Green function solves `-Delta G = 2 pi delta_0 - 1` with zero mean and
//! is evaluated through the Kronecker closed form
//! `G(x) = -log|f(u - v tau, tau) q^{v^2/2}|`, where `tau` is the modulus of
//! the dual cell. The energy of `n` points `a_i` is
//! `W = 1/2 sum_{i != j} G(a_i - a_j) + n W(torus lattice)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::geom::{LatticeBasis, Vec2, UNIT_DENSITY_COVOLUME};
use crate::lattice::{dual_frame, lattice_to_tau, w_eta_with};
use crate::modular::{centered_mod1, log_abs_f_q, SeriesControl, Tau, SINGULAR_TUBE};

/// Minimum separation between points, in fractional coordinates.
pub const MIN_SEPARATION: f64 = 1e-8;

/// Allowed relative deviation of the torus volume from `2 pi`.
pub const VOLUME_TOL: f64 = 1e-12;

/// Mean of `G` over the cell above which a correction constant is stored.
pub const MEAN_TOL: f64 = 1e-4;

/// Periodicity lattice of a torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub basis: LatticeBasis,
}

impl TorusSpec {
    pub fn new(basis: LatticeBasis) -> Result<Self> {
        Ok(TorusSpec { basis: LatticeBasis::new(basis.u, basis.v)? })
    }

    /// Square torus of volume `2 pi`.
    pub fn square() -> Self {
        TorusSpec { basis: LatticeBasis::square().scaled(UNIT_DENSITY_COVOLUME.sqrt()) }
    }

    /// Triangular torus of volume `2 pi`.
    pub fn triangular() -> Self {
        TorusSpec { basis: LatticeBasis::triangular().scaled(UNIT_DENSITY_COVOLUME.sqrt()) }
    }

    /// Rectangle `k x k sqrt(3)` (volume `2 pi`) holding a triangular
    /// configuration of `2 k^2` points.
    pub fn triangular_rectangle(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        let k = k as f64;
        let s = (UNIT_DENSITY_COVOLUME / (k * k * 3f64.sqrt())).sqrt();
        Ok(TorusSpec {
            basis: LatticeBasis { u: Vec2::new(k * s, 0.0), v: Vec2::new(0.0, k * s * 3f64.sqrt()) },
        })
    }

    pub fn volume(&self) -> f64 {
        self.basis.covolume()
    }

    /// Copy rescaled to volume `2 pi`.
    pub fn normalized(&self) -> Self {
        TorusSpec { basis: self.basis.scaled((UNIT_DENSITY_COVOLUME / self.volume()).sqrt()) }
    }

    /// Cartesian vector with fractional coordinates `(s, t)`.
    pub fn to_cartesian(&self, s: f64, t: f64) -> Vec2 {
        self.basis.point(s, t)
    }

    fn check_normalized(&self) -> Result<()> {
        let vol = self.volume();
        if ((vol - UNIT_DENSITY_COVOLUME) / UNIT_DENSITY_COVOLUME).abs() > VOLUME_TOL {
            return Err(Error::VolumeNotNormalized(vol));
        }
        Ok(())
    }
}

fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `n` points on a torus, stored as fractional coordinates in `[0, 1)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct TorusConfig {
    pub torus: TorusSpec,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    basis: LatticeBasis,
    points: Vec<[f64; 2]>,
    n: usize,
}

impl TryFrom<ConfigRepr> for TorusConfig {
    type Error = Error;
    fn try_from(r: ConfigRepr) -> Result<Self> {
        if r.n != r.points.len() {
            return Err(Error::InvalidInput(format!("n = {} but {} points given", r.n, r.points.len())));
        }
        TorusConfig::new(TorusSpec::new(r.basis)?, r.points)
    }
}

impl From<TorusConfig> for ConfigRepr {
    fn from(c: TorusConfig) -> Self {
        ConfigRepr { basis: c.torus.basis, n: c.points.len(), points: c.points }
    }
}

impl TorusConfig {
    /// Wraps the coordinates into `[0, 1)` and checks separation.
    pub fn new(torus: TorusSpec, points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("configuration needs at least one point".into()));
        }
        let mut pts = Vec::with_capacity(points.len());
        for p in points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::NonFinite("point"));
            }
            pts.push([wrap01(p[0]), wrap01(p[1])]);
        }
        if let Some((i, j)) = first_collision(&pts) {
            return Err(Error::CoincidentPoints(i, j));
        }
        Ok(TorusConfig { torus, points: pts })
    }

    /// `n` independent uniform points.
    pub fn random<R: Rng>(torus: TorusSpec, n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("configuration needs at least one point".into()));
        }
        loop {
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            if first_collision(&pts).is_none() {
                return TorusConfig::new(torus, pts);
            }
        }
    }

    /// [`TorusConfig::random`] from the seeded stream the minimizer uses for
    /// its first start.
    pub fn seeded(torus: TorusSpec, n: usize, seed: u64) -> Result<Self> {
        TorusConfig::random(torus, n, &mut restart_rng(seed, 0))
    }

    /// Triangular configuration of `2 k^2` points on [`TorusSpec::triangular_rectangle`].
    pub fn triangular_embedding(k: usize) -> Result<Self> {
        let torus = TorusSpec::triangular_rectangle(k)?;
        let kf = k as f64;
        let mut pts = Vec::with_capacity(2 * k * k);
        for j in 0..2 * k {
            for i in 0..k {
                let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
                pts.push([(i as f64 + shift) / kf, j as f64 / (2.0 * kf)]);
            }
        }
        TorusConfig::new(torus, pts)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn cartesian(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| self.torus.to_cartesian(p[0], p[1])).collect()
    }

    /// Copy with every point moved by the Cartesian displacement `d[i]`.
    pub fn displaced(&self, d: &[Vec2]) -> Result<Self> {
        let pts = self
            .points
            .iter()
            .zip(d)
            .map(|(p, &di)| {
                let (ds, dt) = self.torus.basis.fractional(di);
                [p[0] + ds, p[1] + dt]
            })
            .collect();
        TorusConfig::new(self.torus, pts)
    }
}

fn first_collision(pts: &[[f64; 2]]) -> Option<(usize, usize)> {
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let ds = centered_mod1(pts[i][0] - pts[j][0]);
            let dt = centered_mod1(pts[i][1] - pts[j][1]);
            if ds.hypot(dt) <= MIN_SEPARATION {
                return Some((i, j));
            }
        }
    }
    None
}

/// Zero-mean Green function of a torus of volume `2 pi`.
///
/// Immutable after construction; evaluations may run concurrently.
#[derive(Debug, Clone, Copy)]
pub struct GreenEvaluator {
    torus: TorusSpec,
    tau: Tau,
    angle: f64,
    ctl: SeriesControl,
    self_energy: f64,
    mean_drift: f64,
    correction: f64,
}

impl GreenEvaluator {
    pub fn new(torus: &TorusSpec, ctl: SeriesControl) -> Result<Self> {
        ctl.validate()?;
        torus.check_normalized()?;
        let frame = dual_frame(&torus.basis)?;
        let (shape, _) = lattice_to_tau(&torus.basis)?;
        let self_energy = w_eta_with(shape, 1.0, &ctl)?.value;
        let mut ev = GreenEvaluator {
            torus: *torus,
            tau: frame.tau,
            angle: frame.angle,
            ctl,
            self_energy,
            mean_drift: 0.0,
            correction: 0.0,
        };
        ev.mean_drift = ev.cell_mean()?;
        if ev.mean_drift.abs() > MEAN_TOL {
            ev.correction = -ev.mean_drift;
        }
        Ok(ev)
    }

    pub fn torus(&self) -> &TorusSpec {
        &self.torus
    }

    /// Modulus of the dual cell used by the closed form.
    pub fn tau(&self) -> Tau {
        self.tau
    }

    /// `W` of the periodicity lattice at unit density.
    pub fn self_energy(&self) -> f64 {
        self.self_energy
    }

    /// Cell average of `G` measured at construction.
    pub fn mean_drift(&self) -> f64 {
        self.mean_drift
    }

    /// Constant added to every value (zero unless the mean check failed).
    pub fn correction(&self) -> f64 {
        self.correction
    }

    /// Midpoint rule on a 64 x 64 fractional grid centred at the singularity,
    /// with the 16 cells around it subdivided 16 x 16.
    fn cell_mean(&self) -> Result<f64> {
        const N: usize = 64;
        const SUB: usize = 16;
        let h = 1.0 / N as f64;
        let near = |i: usize| (N / 2 - 2..N / 2 + 2).contains(&i);
        let rows: Vec<f64> = (0..N)
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let mut acc = 0.0;
                for j in 0..N {
                    let s0 = -0.5 + i as f64 * h;
                    let t0 = -0.5 + j as f64 * h;
                    if near(i) && near(j) {
                        let hs = h / SUB as f64;
                        let mut sub = 0.0;
                        for a in 0..SUB {
                            for b in 0..SUB {
                                let s = s0 + (a as f64 + 0.5) * hs;
                                let t = t0 + (b as f64 + 0.5) * hs;
                                sub += self.raw(self.torus.to_cartesian(s, t), false)?.0;
                            }
                        }
                        acc += sub / (SUB * SUB) as f64;
                    } else {
                        let x = self.torus.to_cartesian(s0 + 0.5 * h, t0 + 0.5 * h);
                        acc += self.raw(x, false)?.0;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        Ok(rows.iter().sum::<f64>() / (N * N) as f64)
    }

    fn check_singular(&self, x: Vec2) -> Result<()> {
        let (s, t) = self.torus.basis.fractional(x);
        let (s, t) = (centered_mod1(s), centered_mod1(t));
        let mut dist = f64::INFINITY;
        for di in -1..=1 {
            for dj in -1..=1 {
                dist = dist.min(self.torus.to_cartesian(s + di as f64, t + dj as f64).norm());
            }
        }
        if dist < SINGULAR_TUBE {
            return Err(Error::LatticePointSingularity { distance: dist, tube: SINGULAR_TUBE });
        }
        Ok(())
    }

    /// Value (without correction) and optionally the gradient of `G`.
    fn raw(&self, x: Vec2, deriv: bool) -> Result<(f64, Vec2, f64)> {
        self.check_singular(x)?;
        let xr = x.rotate(-self.angle);
        let (a, b) = (self.tau.a(), self.tau.b());
        let s = (2.0 * PI * b).sqrt();
        let u = (a * xr.x + b * xr.y) / s;
        let v = xr.x / s;
        let (k, _, vr) = match log_abs_f_q(u, v, self.tau, &self.ctl, deriv) {
            Err(Error::DivergentSeries { .. }) | Err(Error::LatticePointSingularity { .. }) => {
                return Err(Error::LatticePointSingularity { distance: 0.0, tube: SINGULAR_TUBE })
            }
            r => r?,
        };
        let grad = if deriv {
            // z = sqrt(b / 2 pi) (x2 - i x1) in the rotated frame
            let c = (b / (2.0 * PI)).sqrt();
            let g1 = s * vr - c * k.dlog.im;
            let g2 = -c * k.dlog.re;
            Vec2::new(g1, g2).rotate(self.angle)
        } else {
            Vec2::ZERO
        };
        Ok((-k.log_abs, grad, k.error))
    }

    /// `G(x)`.
    pub fn green(&self, x: Vec2) -> Result<f64> {
        Ok(self.raw(x, false)?.0 + self.correction)
    }

    /// `grad G(x)`.
    pub fn green_grad(&self, x: Vec2) -> Result<Vec2> {
        Ok(self.raw(x, true)?.1)
    }

    /// `G(x)` and `grad G(x)` from one series evaluation.
    pub fn green_and_grad(&self, x: Vec2) -> Result<(f64, Vec2)> {
        let (g, d, _) = self.raw(x, true)?;
        Ok((g + self.correction, d))
    }

    fn check_config(&self, cfg: &TorusConfig) -> Result<()> {
        cfg.torus.check_normalized()?;
        if cfg.torus != self.torus {
            return Err(Error::InvalidInput("configuration lives on a different torus".into()));
        }
        Ok(())
    }

    /// Cartesian displacement `a_i - a_j` reduced to the centred cell.
    fn difference(&self, cfg: &TorusConfig, i: usize, j: usize) -> Vec2 {
        let (p, q) = (cfg.points[i], cfg.points[j]);
        self.torus.to_cartesian(centered_mod1(p[0] - q[0]), centered_mod1(p[1] - q[1]))
    }

    /// `sum_{i < j} G(a_i - a_j)`.
    pub fn pair_energy(&self, cfg: &TorusConfig) -> Result<f64> {
        self.check_config(cfg)?;
        let n = cfg.n();
        let mut e = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                e += self.green(self.difference(cfg, i, j))?;
            }
        }
        Ok(e)
    }

    /// `W = 1/2 sum_{i != j} G(a_i - a_j) + n W(torus lattice)`.
    pub fn config_energy(&self, cfg: &TorusConfig) -> Result<f64> {
        Ok(self.pair_energy(cfg)? + cfg.n() as f64 * self.self_energy)
    }

    /// `dW/da_i = sum_{j != i} grad G(a_i - a_j)`.
    pub fn config_grad(&self, cfg: &TorusConfig) -> Result<Vec<Vec2>> {
        Ok(self.energy_and_grad(cfg)?.1)
    }

    pub fn energy_and_grad(&self, cfg: &TorusConfig) -> Result<(f64, Vec<Vec2>)> {
        self.check_config(cfg)?;
        let n = cfg.n();
        let mut e = 0.0;
        let mut g = vec![Vec2::ZERO; n];
        for i in 0..n {
            for j in i + 1..n {
                let (gv, d) = self.green_and_grad(self.difference(cfg, i, j))?;
                e += gv;
                g[i] = g[i] + d;
                g[j] = g[j] - d;
            }
        }
        Ok((e + n as f64 * self.self_energy, g))
    }
}

/// [`GreenEvaluator::config_energy`] with default series control.
pub fn config_energy(cfg: &TorusConfig) -> Result<f64> {
    GreenEvaluator::new(&cfg.torus, SeriesControl::default())?.config_energy(cfg)
}

/// [`GreenEvaluator::config_grad`] with default series control.
pub fn config_grad(cfg: &TorusConfig) -> Result<Vec<Vec2>> {
    GreenEvaluator::new(&cfg.torus, SeriesControl::default())?.config_grad(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeControl {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_init: f64,
    pub restarts: usize,
    pub rng_seed: u64,
}

impl Default for MinimizeControl {
    fn default() -> Self {
        MinimizeControl { max_iters: 5000, grad_tol: 1e-8, step_init: 0.1, restarts: 16, rng_seed: 0 }
    }
}

impl MinimizeControl {
    pub fn validate(&self) -> Result<()> {
        check_positive("grad_tol", self.grad_tol)?;
        check_positive("step_init", self.step_init)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOutcome {
    pub config: TorusConfig,
    pub energy: f64,
    pub initial_energy: f64,
    /// Sup-norm of the Cartesian gradient at `config`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Iteration at which the line search failed, if it did.
    pub stall: Option<usize>,
    /// 0 for the input configuration, `k` for the `k`-th random restart.
    pub run: usize,
    pub trace: Vec<TraceRow>,
}

impl MinimizeOutcome {
    pub fn stall_error(&self) -> Option<Error> {
        self.stall.map(Error::LineSearchStall)
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const MAX_STEP: f64 = 10.0;

fn sup_norm(g: &[Vec2]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.max_abs()))
}

/// Gradient descent with backtracking from a single start.
fn descend(ev: &GreenEvaluator, start: &TorusConfig, ctl: &MinimizeControl, run: usize) -> Result<MinimizeOutcome> {
    let (mut e, mut g) = ev.energy_and_grad(start)?;
    let initial_energy = e;
    let mut cfg = start.clone();
    let mut gs = sup_norm(&g);
    let mut trace = vec![TraceRow { iter: 0, energy: e, grad_norm: gs }];
    let mut step = ctl.step_init;
    let mut stall = None;
    let mut iters = 0;
    while gs >= ctl.grad_tol && iters < ctl.max_iters {
        iters += 1;
        let g2: f64 = g.iter().map(|v| v.norm_sq()).sum();
        let mut t = (2.0 * step).min(MAX_STEP);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let d: Vec<Vec2> = g.iter().map(|&v| -t * v).collect();
            if let Ok(trial) = cfg.displaced(&d) {
                let (en, gn) = ev.energy_and_grad(&trial)?;
                let sufficient = en <= e - ARMIJO * t * g2;
                // At the rounding floor of the energy, accept steps that keep
                // the energy level and reduce the gradient.
                let floor = en <= e + 4.0 * f64::EPSILON * e.abs().max(1.0) && sup_norm(&gn) < gs;
                if sufficient || floor {
                    accepted = Some((trial, en, gn));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, en, gn)) => {
                cfg = trial;
                e = en;
                g = gn;
                gs = sup_norm(&g);
                step = t;
                trace.push(TraceRow { iter: iters, energy: e, grad_norm: gs });
            }
            None => {
                stall = Some(iters);
                break;
            }
        }
    }
    Ok(MinimizeOutcome {
        config: cfg,
        energy: e,
        initial_energy,
        grad_norm: gs,
        iterations: trace.len() - 1,
        converged: gs < ctl.grad_tol,
        stall,
        run,
        trace,
    })
}

fn restart_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Minimizes `W` from `cfg` and from `ctl.restarts` seeded random starts
/// (run in parallel); returns the lowest-energy run, ties broken by run index.
pub fn minimize_config(cfg: &TorusConfig, ctl: &MinimizeControl) -> Result<MinimizeOutcome> {
    let ev = GreenEvaluator::new(&cfg.torus, SeriesControl::default())?;
    minimize_with(&ev, cfg, ctl)
}

pub fn minimize_with(ev: &GreenEvaluator, cfg: &TorusConfig, ctl: &MinimizeControl) -> Result<MinimizeOutcome> {
    let runs = minimize_runs(ev, cfg, ctl)?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.energy < runs[best].energy {
            best = k;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one run"))
}

/// Every run of [`minimize_with`], in run order. A single point has nothing
/// to optimize and gets one run.
pub fn minimize_runs(ev: &GreenEvaluator, cfg: &TorusConfig, ctl: &MinimizeControl) -> Result<Vec<MinimizeOutcome>> {
    ctl.validate()?;
    ev.check_config(cfg)?;
    if cfg.n() == 1 {
        return Ok(vec![descend(ev, cfg, ctl, 0)?]);
    }
    (0..=ctl.restarts)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                cfg.clone()
            } else {
                TorusConfig::random(cfg.torus, cfg.n(), &mut restart_rng(ctl.rng_seed, k))?
            };
            descend(ev, &start, ctl, k)
        })
        .collect()
}

/// Width of the band the normalized excesses must fit in.
pub const ELKIES_BAND: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElkiesEntry {
    pub n: usize,
    /// Minimum found of `sum_{i != j} G(a_i - a_j)`.
    pub e_min: f64,
    /// `(e_min + (n / 4) log n) / n`.
    pub excess: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElkiesReport {
    pub entries: Vec<ElkiesEntry>,
    pub band_width: f64,
    pub band_limit: f64,
    pub within_band: bool,
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.contains(&0) {
        return Err(Error::InvalidInput("point counts must be >= 1".into()));
    }
    Ok(())
}

/// Minimizes the pair sum for each `n` and reports the normalized excess
/// over `-(n / 4) log n`.
pub fn elkies_experiment(n_list: &[usize], torus: &TorusSpec, ctl: &MinimizeControl) -> Result<ElkiesReport> {
    check_n_list(n_list)?;
    ctl.validate()?;
    let ev = GreenEvaluator::new(torus, SeriesControl::default())?;
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let entry = if n == 1 {
            ElkiesEntry { n, e_min: 0.0, excess: 0.0, grad_norm: 0.0, converged: true }
        } else {
            let start = TorusConfig::random(*torus, n, &mut restart_rng(ctl.rng_seed ^ ((n as u64) << 32), 0))?;
            let out = minimize_with(&ev, &start, ctl)?;
            // the pair sum over i != j is twice the pairwise part of W
            let e_min = 2.0 * (out.energy - n as f64 * ev.self_energy());
            let nf = n as f64;
            ElkiesEntry {
                n,
                e_min,
                excess: (e_min + 0.25 * nf * nf.ln()) / nf,
                grad_norm: out.grad_norm,
                converged: out.converged,
            }
        };
        entries.push(entry);
    }
    let (lo, hi) = entries
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.excess), hi.max(e.excess)));
    let band_width = if entries.is_empty() { 0.0 } else { hi - lo };
    let finite = entries.iter().all(|e| e.excess.is_finite());
    Ok(ElkiesReport { entries, band_width, band_limit: ELKIES_BAND, within_band: finite && band_width < ELKIES_BAND })
}

/// Slack below the triangular value before a result is flagged.
pub const CONJECTURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureEntry {
    pub n: usize,
    /// `"square"` or `"triangular-k"` for the `k x k sqrt(3)` rectangle.
    pub torus: String,
    /// Best `W / n + log(n) / 4` found.
    pub per_point: f64,
    /// Same quantity for the exact triangular configuration, when the torus
    /// admits one.
    pub embedded_per_point: Option<f64>,
    /// `per_point` minus the triangular lattice value.
    pub gap: f64,
    pub converged: bool,
    /// Found below the triangular value by more than [`CONJECTURE_TOL`].
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    /// `W` of the triangular lattice at unit density.
    pub triangular_value: f64,
    pub entries: Vec<ConjectureEntry>,
    pub flagged: usize,
}

fn exact_root(n: usize) -> Option<usize> {
    if n % 2 != 0 {
        return None;
    }
    let k = ((n / 2) as f64).sqrt().round() as usize;
    (k >= 1 && 2 * k * k == n).then_some(k)
}

/// Per-point minimal energies on the square torus and, for `n = 2 k^2`, on
/// the rectangle carrying an exact triangular configuration. Observational:
/// values below the triangular one are flagged, never suppressed.
pub fn conjecture1_probe(n_list: &[usize], ctl: &MinimizeControl) -> Result<ConjectureReport> {
    check_n_list(n_list)?;
    ctl.validate()?;
    let triangular_value = w_eta_with(Tau::triangular(), 1.0, &SeriesControl::default())?.value;
    let mut entries = Vec::new();
    for &n in n_list {
        let nf = n as f64;
        let normalize = |w: f64| w / nf + 0.25 * nf.ln();
        let mut tori = vec![("square".to_string(), TorusSpec::square(), None)];
        if let Some(k) = exact_root(n) {
            let emb = TorusConfig::triangular_embedding(k)?;
            tori.push((format!("triangular-{k}"), emb.torus, Some(emb)));
        }
        for (label, torus, emb) in tori {
            let ev = GreenEvaluator::new(&torus, SeriesControl::default())?;
            let start = TorusConfig::random(torus, n, &mut restart_rng(ctl.rng_seed ^ ((n as u64) << 32), 0))?;
            let out = minimize_with(&ev, &start, ctl)?;
            let embedded_per_point = match &emb {
                Some(c) => Some(normalize(ev.config_energy(c)?)),
                None => None,
            };
            let per_point = normalize(out.energy);
            let gap = per_point - triangular_value;
            entries.push(ConjectureEntry {
                n,
                torus: label,
                per_point,
                embedded_per_point,
                gap,
                converged: out.converged,
                flagged: gap < -CONJECTURE_TOL,
            });
        }
    }
    let flagged = entries.iter().filter(|e| e.flagged).count();
    Ok(ConjectureReport { triangular_value, entries, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::w_eta;

    fn ev(t: &TorusSpec) -> GreenEvaluator {
        GreenEvaluator::new(t, SeriesControl::default()).unwrap()
    }

    fn skewed() -> TorusSpec {
        TorusSpec::new(LatticeBasis::new(Vec2::new(1.0, 0.3), Vec2::new(0.4, 1.7)).unwrap())
            .unwrap()
            .normalized()
    }

    #[test]
    fn rejects_unnormalized_volume() {
        let t = TorusSpec::new(LatticeBasis::square()).unwrap();
        assert!(matches!(GreenEvaluator::new(&t, SeriesControl::default()), Err(Error::VolumeNotNormalized(_))));
    }

    #[test]
    fn mean_is_zero() {
        for t in [TorusSpec::square(), TorusSpec::triangular(), skewed()] {
            let e = ev(&t);
            assert!(e.mean_drift().abs() < MEAN_TOL, "{}", e.mean_drift());
            assert_eq!(e.correction(), 0.0);
        }
    }

    #[test]
    fn green_is_even() {
        let e = ev(&skewed());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            assert!((e.green(x).unwrap() - e.green(-x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn green_is_periodic() {
        let t = skewed();
        let e = ev(&t);
        let x = Vec2::new(0.3, -0.8);
        let y = x + t.basis.u - 2.0 * t.basis.v;
        assert!((e.green(x).unwrap() - e.green(y).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn green_singular_at_lattice_points() {
        let t = TorusSpec::square();
        let e = ev(&t);
        assert!(matches!(e.green(Vec2::ZERO), Err(Error::LatticePointSingularity { .. })));
        assert!(matches!(e.green(t.basis.v), Err(Error::LatticePointSingularity { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let e = ev(&skewed());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..10 {
            let x = Vec2::new(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2));
            if x.norm() < 0.2 {
                continue;
            }
            let g = e.green_grad(x).unwrap();
            let fx = (e.green(x + Vec2::new(h, 0.0)).unwrap() - e.green(x - Vec2::new(h, 0.0)).unwrap()) / (2.0 * h);
            let fy = (e.green(x + Vec2::new(0.0, h)).unwrap() - e.green(x - Vec2::new(0.0, h)).unwrap()) / (2.0 * h);
            let err = (g - Vec2::new(fx, fy)).norm() / g.norm();
            assert!(err < 1e-6, "{x:?}: {err}");
            let gm = e.green_grad(-x).unwrap();
            assert!((g + gm).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_has_log_singularity() {
        let e = ev(&TorusSpec::triangular());
        for r in [1e-2, 1e-4, 1e-6] {
            let x = Vec2::new(0.6 * r, -0.8 * r);
            let g = e.green_grad(x).unwrap();
            let rem = g + (1.0 / x.norm_sq()) * x;
            assert!(rem.norm() < 1.0, "{r}: {rem:?}");
        }
    }

    #[test]
    fn green_limit_is_lattice_energy() {
        for t in [TorusSpec::square(), TorusSpec::triangular(), skewed()] {
            let e = ev(&t);
            let phi = |r: f64| {
                let x = Vec2::new(r * 0.8, r * 0.6);
                0.5 * (e.green(x).unwrap() + r.ln())
            };
            let (r1, r2) = (1e-3, 5e-4);
            let lim = (r1 * phi(r2) - r2 * phi(r1)) / (r1 - r2);
            let (tau, _) = lattice_to_tau(&t.basis).unwrap();
            assert!((lim - w_eta(tau, 1.0).unwrap().value).abs() < 1e-5);
        }
    }

    #[test]
    fn weak_form_of_the_laplacian() {
        // phi = (1 - r^2)^4 on the unit disk
        let e = ev(&TorusSpec::square());
        let n = 128;
        let h = 2.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = Vec2::new(-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                let r2 = x.norm_sq();
                if r2 >= 1.0 {
                    continue;
                }
                let w = 1.0 - r2;
                let lap = -16.0 * w.powi(3) + 48.0 * r2 * w * w;
                acc -= e.green(x).unwrap() * lap * h * h;
            }
        }
        let expected = 2.0 * PI - PI / 5.0;
        assert!((acc - expected).abs() < 5e-3 * expected, "{acc} vs {expected}");
    }

    #[test]
    fn one_point_energy_is_lattice_energy() {
        for t in [TorusSpec::square(), skewed()] {
            let cfg = TorusConfig::new(t, vec![[0.3, 0.9]]).unwrap();
            let (tau, _) = lattice_to_tau(&t.basis).unwrap();
            assert!((config_energy(&cfg).unwrap() - w_eta(tau, 1.0).unwrap().value).abs() < 1e-12);
        }
    }

    #[test]
    fn centred_square_is_a_denser_square_lattice() {
        let cfg = TorusConfig::new(TorusSpec::square(), vec![[0.0, 0.0], [0.5, 0.5]]).unwrap();
        let w = config_energy(&cfg).unwrap();
        assert!((w - w_eta(Tau::square(), 2.0).unwrap().value).abs() < 1e-12);
        let g = config_grad(&cfg).unwrap();
        assert!(sup_norm(&g) < 1e-12);
    }

    #[test]
    fn triangular_embedding_has_lattice_energy() {
        for k in [1, 2] {
            let cfg = TorusConfig::triangular_embedding(k).unwrap();
            let n = cfg.n() as f64;
            let w = config_energy(&cfg).unwrap();
            let tri = w_eta(Tau::triangular(), 1.0).unwrap().value;
            assert!((w / n + 0.25 * n.ln() - tri).abs() < 1e-10);
        }
    }

    fn random_config(t: TorusSpec, n: usize, seed: u64) -> TorusConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TorusConfig::random(t, n, &mut rng).unwrap()
    }

    #[test]
    fn energy_symmetries() {
        let t = TorusSpec::square();
        let e = ev(&t);
        let cfg = random_config(t, 5, 8);
        let w = e.config_energy(&cfg).unwrap();
        let shifted: Vec<[f64; 2]> = cfg.points().iter().map(|p| [p[0] + 0.37, p[1] - 0.61]).collect();
        let w_shift = e.config_energy(&TorusConfig::new(t, shifted).unwrap()).unwrap();
        assert!((w - w_shift).abs() < 1e-12);
        let mut rev = cfg.points().to_vec();
        rev.reverse();
        let w_rev = e.config_energy(&TorusConfig::new(t, rev).unwrap()).unwrap();
        assert!((w - w_rev).abs() < 1e-12);
        let rot: Vec<[f64; 2]> = cfg.points().iter().map(|p| [-p[1], p[0]]).collect();
        let w_rot = e.config_energy(&TorusConfig::new(t, rot).unwrap()).unwrap();
        assert!((w - w_rot).abs() < 1e-12);
    }

    #[test]
    fn config_gradient_matches_finite_differences() {
        let t = skewed();
        let e = ev(&t);
        let cfg = random_config(t, 3, 21);
        let g = e.config_grad(&cfg).unwrap();
        let total = g.iter().fold(Vec2::ZERO, |a, &b| a + b);
        assert!(total.norm() < 1e-12);
        let h = 1e-5;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..cfg.n() {
            for dir in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)] {
                let mut d = vec![Vec2::ZERO; cfg.n()];
                d[i] = h * dir;
                let ep = e.config_energy(&cfg.displaced(&d).unwrap()).unwrap();
                d[i] = -h * dir;
                let em = e.config_energy(&cfg.displaced(&d).unwrap()).unwrap();
                let fd = (ep - em) / (2.0 * h);
                num += (fd - g[i].dot(dir)).powi(2);
                den += g[i].dot(dir).powi(2);
            }
        }
        assert!((num / den).sqrt() < 1e-5);
    }

    #[test]
    fn coincident_points_rejected() {
        let r = TorusConfig::new(TorusSpec::square(), vec![[0.1, 0.2], [1.1, 0.2]]);
        assert!(matches!(r, Err(Error::CoincidentPoints(0, 1))));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = random_config(TorusSpec::triangular(), 4, 2);
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"n\":4"));
        let back: TorusConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn single_point_is_left_alone() {
        let cfg = TorusConfig::new(TorusSpec::square(), vec![[0.25, 0.5]]).unwrap();
        let out = minimize_config(&cfg, &MinimizeControl::default()).unwrap();
        assert_eq!(out.config, cfg);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn two_points_find_the_centred_square() {
        let start = random_config(TorusSpec::square(), 2, 0);
        let ctl = MinimizeControl { restarts: 0, ..Default::default() };
        let out = minimize_config(&start, &ctl).unwrap();
        assert!(out.converged, "{:?}", out.stall);
        assert!(out.grad_norm < 1e-8);
        assert!(out.energy <= out.initial_energy);
        assert!((out.energy - w_eta(Tau::square(), 2.0).unwrap().value).abs() < 1e-8);
        for w in out.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-14 * w[0].energy.abs().max(1.0));
        }
    }

    #[test]
    fn restarts_are_deterministic() {
        let start = random_config(TorusSpec::triangular(), 3, 5);
        let ctl = MinimizeControl { restarts: 4, max_iters: 300, grad_tol: 1e-6, ..Default::default() };
        let a = minimize_config(&start, &ctl).unwrap();
        let b = minimize_config(&start, &ctl).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn elkies_single_point_and_empty() {
        let r = elkies_experiment(&[1], &TorusSpec::square(), &MinimizeControl::default()).unwrap();
        assert_eq!(r.entries[0].e_min, 0.0);
        assert_eq!(r.entries[0].excess, 0.0);
        let r = conjecture1_probe(&[], &MinimizeControl::default()).unwrap();
        assert!(r.entries.is_empty());
    }

    #[test]
    fn conjecture_probe_at_two_points() {
        let ctl = MinimizeControl { restarts: 2, ..Default::default() };
        let r = conjecture1_probe(&[2], &ctl).unwrap();
        assert_eq!(r.entries.len(), 2);
        let sq = &r.entries[0];
        assert!((sq.per_point - w_eta(Tau::square(), 1.0).unwrap().value).abs() < 1e-8);
        assert!(sq.gap > 0.0 && !sq.flagged);
        let tri = &r.entries[1];
        assert!((tri.embedded_per_point.unwrap() - r.triangular_value).abs() < 1e-10);
        assert_eq!(r.flagged, 0);
    }
}
