//! Checks on converged obstacle solutions: coincidence-set geometry,
//! gradient bounds near `m = 1`, the small-set scale law near `min h_0`,
//! roundness of the blown-up set, and barrier comparisons.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use std::sync::Arc;

use super::domain::DomainGrid;
use super::solver::{solve_h0, sweep_m, GridFunction, H0Solution, ObstacleField, BOUNDARY_VALUE};
use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Fewest active cells for the scale-law and ellipse checks.
pub const MIN_ACTIVE_CELLS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceMetrics {
    pub area: f64,
    pub active_cells: usize,
    pub centroid: Vec2,
    /// Semi-axes from second moments, largest first.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis.
    pub orientation: f64,
    pub axis_ratio: f64,
    /// Set when the coincidence set is empty; all metrics are then zero.
    pub empty: bool,
}

/// Area by cell count, centroid and principal axes of the active set.
pub fn coincidence_metrics(field: &ObstacleField) -> CoincidenceMetrics {
    let h = field.grid.h;
    let pts: Vec<Vec2> =
        field.grid.nodes().iter().zip(&field.active).filter(|(_, &a)| a).map(|(n, _)| n.x).collect();
    if pts.is_empty() {
        return CoincidenceMetrics {
            area: 0.0,
            active_cells: 0,
            centroid: Vec2::ZERO,
            semi_axes: [0.0; 2],
            orientation: 0.0,
            axis_ratio: 0.0,
            empty: true,
        };
    }
    let n = pts.len() as f64;
    let c = (1.0 / n) * pts.iter().fold(Vec2::ZERO, |a, &p| a + p);
    // each cell contributes its own second moment h^2 / 12
    let (mut sxx, mut sxy, mut syy) = (h * h / 12.0, 0.0, h * h / 12.0);
    for p in &pts {
        let d = *p - c;
        sxx += d.x * d.x / n;
        sxy += d.x * d.y / n;
        syy += d.y * d.y / n;
    }
    let tr = 0.5 * (sxx + syy);
    let disc = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let (l1, l2) = (tr + disc, (tr - disc).max(0.0));
    // uniform ellipse: variance along a semi-axis a is a^2 / 4
    let semi_axes = [2.0 * l1.sqrt(), 2.0 * l2.sqrt()];
    CoincidenceMetrics {
        area: n * h * h,
        active_cells: pts.len(),
        centroid: c,
        semi_axes,
        orientation: 0.5 * (2.0 * sxy).atan2(sxx - syy),
        axis_ratio: if semi_axes[1] > 0.0 { semi_axes[0] / semi_axes[1] } else { f64::INFINITY },
        empty: false,
    }
}

/// Largest discrete gradient norm of a field.
pub fn sup_gradient(field: &ObstacleField) -> f64 {
    (0..field.grid.len()).map(|k| field.grid.gradient(&field.values, BOUNDARY_VALUE, k).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundEntry {
    pub m: f64,
    pub sup_grad: f64,
    /// `sup |grad H_m| / sqrt(1 - m)`; absent at `m = 1`.
    pub ratio: Option<f64>,
    /// `|Omega \ omega_m|` on the grid.
    pub deficit: f64,
    /// `deficit / sqrt(1 - m)`; absent at `m = 1`.
    pub deficit_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundReport {
    pub entries: Vec<GradientBoundEntry>,
    /// Largest over smallest gradient ratio.
    pub spread: f64,
    pub deficit_spread: f64,
    /// Gradient ratios agree to within 50%.
    pub bounded: bool,
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if lo.is_finite() && lo > 0.0 {
        hi / lo
    } else if lo.is_infinite() {
        1.0
    } else {
        f64::INFINITY
    }
}

pub fn verify_gradient_bound(fields: &[ObstacleField]) -> GradientBoundReport {
    let entries: Vec<GradientBoundEntry> = fields
        .iter()
        .map(|f| {
            let sup_grad = sup_gradient(f);
            let deficit = f.grid.area() - coincidence_metrics(f).area;
            let s = (1.0 - f.m).sqrt();
            let (ratio, deficit_ratio) = if f.m < 1.0 { (Some(sup_grad / s), Some(deficit / s)) } else { (None, None) };
            GradientBoundEntry { m: f.m, sup_grad, ratio, deficit, deficit_ratio }
        })
        .collect();
    let spread_g = spread(entries.iter().filter_map(|e| e.ratio));
    let spread_d = spread(entries.iter().filter_map(|e| e.deficit_ratio));
    GradientBoundReport { entries, spread: spread_g, deficit_spread: spread_d, bounded: spread_g < 1.5 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Resolved,
    EmptySet,
    UnderResolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub m: f64,
    /// `m - min h_0`.
    pub offset: f64,
    pub area: f64,
    pub active_cells: usize,
    /// `sqrt(|omega_m|)`.
    pub l_m: f64,
    /// `L^2 |log L| / (2 pi (m - min h_0) / min h_0)`.
    pub ratio: Option<f64>,
    pub axis_ratio: f64,
    pub status: RecordStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub h0_min: f64,
    pub records: Vec<ScaleRecord>,
    /// `|ratio - 1|` does not grow as the offset decreases.
    pub monotone_toward_one: bool,
    /// Every resolved ratio lies in `[0.5, 2]`.
    pub within_band: bool,
}

pub const SCALE_BAND: [f64; 2] = [0.5, 2.0];

/// Forms the scale-law ratio for each field; empty or under-resolved sets are
/// recorded without a ratio.
pub fn verify_scale_law(fields: &[ObstacleField], h0_min: f64) -> AsymptoticsReport {
    let records: Vec<ScaleRecord> = fields
        .iter()
        .map(|f| {
            let mt = coincidence_metrics(f);
            let offset = f.m - h0_min;
            let l_m = mt.area.sqrt();
            let status = if mt.empty || offset <= 0.0 {
                RecordStatus::EmptySet
            } else if mt.active_cells < MIN_ACTIVE_CELLS {
                RecordStatus::UnderResolved
            } else {
                RecordStatus::Resolved
            };
            let ratio = (status == RecordStatus::Resolved)
                .then(|| l_m * l_m * l_m.ln().abs() / (2.0 * PI * offset / h0_min));
            ScaleRecord { m: f.m, offset, area: mt.area, active_cells: mt.active_cells, l_m, ratio, axis_ratio: mt.axis_ratio, status }
        })
        .collect();
    let mut resolved: Vec<(f64, f64)> = records.iter().filter_map(|r| r.ratio.map(|q| (r.offset, q))).collect();
    resolved.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone_toward_one = resolved.windows(2).all(|w| (w[1].1 - 1.0).abs() <= (w[0].1 - 1.0).abs());
    let within_band = resolved.iter().all(|&(_, q)| (SCALE_BAND[0]..=SCALE_BAND[1]).contains(&q));
    AsymptoticsReport { h0_min, records, monotone_toward_one, within_band }
}

/// Radius of the disk of unit area.
pub fn unit_disk_radius() -> f64 {
    1.0 / PI.sqrt()
}

/// Radial solution of `Delta U = (Delta Q / 2) 1_{r > r_0}`, `U = 0` on the
/// disk of area 1, `C^1` across `r_0`.
pub fn u_q(r: f64, delta_q: f64) -> f64 {
    let r0 = unit_disk_radius();
    if r <= r0 {
        0.0
    } else {
        delta_q / 8.0 * (r * r - r0 * r0) - delta_q / 4.0 * r0 * r0 * (r / r0).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseReport {
    pub m: f64,
    pub l_m: f64,
    pub axis_ratio: f64,
    pub delta: f64,
    /// Fraction of nodes with `|y| < r_0 - delta` outside the blown-up set.
    pub inner_defect: f64,
    /// Fraction of active nodes with `|y| > r_0 + delta`.
    pub outer_defect: f64,
    /// Finite-difference Hessian `[h_xx, h_xy, h_yy]` of `h_0` at `x_0`.
    pub hessian: [f64; 3],
    /// Ratio of the Hessian eigenvalues, largest over smallest.
    pub hessian_isotropy: f64,
    /// `Delta Q = 2 Delta h_0(x_0)`.
    pub delta_q: f64,
}

/// Compares `(omega_m - x_0) / L_m` with the disk of area 1.
pub fn verify_ellipse_limit(field: &ObstacleField, h0: &H0Solution, delta: f64) -> Result<EllipseReport> {
    if field.grid.h != h0.grid.h || field.grid.len() != h0.grid.len() {
        return Err(Error::GridMismatch);
    }
    let mt = coincidence_metrics(field);
    if mt.active_cells < MIN_ACTIVE_CELLS {
        return Err(Error::UnderResolved { active: mt.active_cells, needed: MIN_ACTIVE_CELLS });
    }
    let l_m = mt.area.sqrt();
    let r0 = unit_disk_radius();
    let (mut inner_total, mut inner_miss, mut outer_miss) = (0usize, 0usize, 0usize);
    for (k, n) in field.grid.nodes().iter().enumerate() {
        let y = (1.0 / l_m) * (n.x - h0.x0);
        let r = y.norm();
        if r < r0 - delta {
            inner_total += 1;
            if !field.active[k] {
                inner_miss += 1;
            }
        }
        if field.active[k] && r > r0 + delta {
            outer_miss += 1;
        }
    }
    let hessian = hessian_at_min(h0)?;
    let [hxx, hxy, hyy] = hessian;
    let tr = 0.5 * (hxx + hyy);
    let disc = (0.25 * (hxx - hyy).powi(2) + hxy * hxy).sqrt();
    Ok(EllipseReport {
        m: field.m,
        l_m,
        axis_ratio: mt.axis_ratio,
        delta,
        inner_defect: if inner_total > 0 { inner_miss as f64 / inner_total as f64 } else { 0.0 },
        outer_defect: outer_miss as f64 / mt.active_cells as f64,
        hessian,
        hessian_isotropy: (tr + disc) / (tr - disc),
        delta_q: 2.0 * (hxx + hyy),
    })
}

fn hessian_at_min(h0: &H0Solution) -> Result<[f64; 3]> {
    let g = &h0.grid;
    let h = g.h;
    let (i, j) = ((h0.x0.x / h).round() as i32, (h0.x0.y / h).round() as i32);
    let at = |di: i32, dj: i32| g.node_at(i + di, j + dj).map(|k| h0.values[k]).ok_or(Error::UnderResolved { active: 0, needed: 9 });
    let c = at(0, 0)?;
    let hxx = (at(1, 0)? - 2.0 * c + at(-1, 0)?) / (h * h);
    let hyy = (at(0, 1)? - 2.0 * c + at(0, -1)?) / (h * h);
    let hxy = (at(1, 1)? - at(1, -1)? - at(-1, 1)? + at(-1, -1)?) / (4.0 * h * h);
    Ok([hxx, hxy, hyy])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub kind: BarrierKind,
    pub boundary_ok: bool,
    pub obstacle_ok: bool,
    pub equation_ok: bool,
    /// All three hypotheses hold.
    pub hypotheses: bool,
    /// `h >= H_m` (interior) or `h <= H_m` (exterior) at every node.
    pub conclusion: bool,
    /// Largest violation of the conclusion.
    pub worst: f64,
}

/// Checks the hypotheses and the conclusion of the barrier comparison for a
/// candidate `h` against `H_m`, with slack `10 tol`.
pub fn barrier_check(field: &ObstacleField, candidate: &GridFunction, kind: BarrierKind) -> Result<BarrierReport> {
    let g = &field.grid;
    if candidate.values.len() != g.len() {
        return Err(Error::GridMismatch);
    }
    let slack = 10.0 * field.tol;
    let m = field.m;
    let u = &candidate.values;
    let obstacle_ok = u.iter().all(|&v| v >= m - slack);
    let mut equation_ok = true;
    let mut worst: f64 = 0.0;
    for k in 0..g.len() {
        let a = g.apply(u, candidate.boundary, k);
        let ok = match kind {
            BarrierKind::Interior => a >= -slack,
            BarrierKind::Exterior => {
                let rhs = if u[k] - m < slack { m } else { 0.0 };
                a <= rhs + slack
            }
        };
        equation_ok &= ok;
        let gap = match kind {
            BarrierKind::Interior => field.values[k] - u[k],
            BarrierKind::Exterior => u[k] - field.values[k],
        };
        worst = worst.max(gap);
    }
    let boundary_ok = match kind {
        BarrierKind::Interior => candidate.boundary >= BOUNDARY_VALUE - slack,
        BarrierKind::Exterior => candidate.boundary <= BOUNDARY_VALUE + slack,
    };
    Ok(BarrierReport {
        kind,
        boundary_ok,
        obstacle_ok,
        equation_ok,
        hypotheses: boundary_ok && obstacle_ok && equation_ok,
        conclusion: worst <= slack,
        worst,
    })
}

/// One named pass/fail check with its worst observed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub worst: f64,
}

impl Verdict {
    fn new(name: &str, pass: bool, worst: f64) -> Self {
        Verdict { name: name.into(), pass, worst }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub m: f64,
    pub area: f64,
    pub active_cells: usize,
    pub residual: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub h0_min: f64,
    pub x0: Vec2,
    pub tol: f64,
    /// Levels solved, increasing; the first lies below `min h_0`, the last is 1.
    pub levels: Vec<LevelSummary>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

/// Empty set below `min h_0`, full set at `m = 1`, cellwise monotonicity
/// `H_m <= H_m' <= H_m + (m' - m)` across `ms`, monotone `m |omega_m|`
/// and complementarity, all with slack `10 tol`.
pub fn verify_baseline(grid: &Arc<DomainGrid>, ms: &[f64], tol: f64) -> Result<BaselineReport> {
    let h0 = solve_h0(grid, tol)?;
    let slack = 10.0 * tol;
    let m_low = (h0.h0_min - 0.05).min(0.5);
    let mut levels: Vec<f64> = ms.iter().copied().filter(|&m| m > m_low && m < 1.0).collect();
    levels.push(m_low);
    levels.push(1.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let fields = sweep_m(grid, &levels, tol)?;
    let low = &fields[0];
    let full = &fields[fields.len() - 1];

    let mut verdicts = Vec::new();
    let dev = low.values.iter().zip(&h0.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    verdicts.push(Verdict::new("empty_below_h0_min", low.active_count() == 0 && dev < slack, dev));
    let ext = barrier_check(low, &h0.as_candidate(), BarrierKind::Exterior)?;
    verdicts.push(Verdict::new("h0_exterior_barrier", ext.hypotheses && ext.conclusion, ext.worst));
    let missing = (full.grid.len() - full.active_count()) as f64;
    verdicts.push(Verdict::new("full_at_one", missing == 0.0, missing));

    let mut worst_mono: f64 = 0.0;
    for w in fields.windows(2) {
        let dm = w[1].m - w[0].m;
        for (a, b) in w[0].values.iter().zip(&w[1].values) {
            worst_mono = worst_mono.max(a - b).max(b - a - dm);
        }
    }
    verdicts.push(Verdict::new("monotone_in_m", worst_mono <= slack, worst_mono));

    let mass: Vec<f64> = fields.iter().map(|f| f.m * coincidence_metrics(f).area).collect();
    let drop = mass.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let ends = mass[0] == 0.0 && (mass[mass.len() - 1] - grid.area()).abs() < 1e-12;
    verdicts.push(Verdict::new("bijection", drop <= 0.0 && ends, drop));

    let res = fields.iter().map(|f| f.residual).fold(h0.residual, f64::max);
    verdicts.push(Verdict::new("complementarity", res < tol, res));

    let levels = fields
        .iter()
        .map(|f| {
            let mt = coincidence_metrics(f);
            LevelSummary { m: f.m, area: mt.area, active_cells: mt.active_cells, residual: f.residual, iters: f.iters }
        })
        .collect();
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(BaselineReport { h0_min: h0.h0_min, x0: h0.x0, tol, levels, verdicts, pass })
}
