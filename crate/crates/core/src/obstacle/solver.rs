//! Relaxation solvers for `-Delta h + h = 0` and the constant-obstacle problem.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::DomainGrid;
use crate::error::{check_finite, check_positive, Error, Result};
use crate::geom::Vec2;

/// Default sup-norm tolerance on the row-scaled (complementarity) residual.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Sweep cap before [`Error::NoConvergence`].
pub const MAX_SWEEPS: usize = 50_000;

/// Sweeps between residual checks.
const CHECK_EVERY: usize = 16;

/// Consecutive checks without a 1% improvement before giving up.
const STALL_CHECKS: usize = 64;

/// Dirichlet value on the boundary.
pub const BOUNDARY_VALUE: f64 = 1.0;

/// Interior values on a grid together with their Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub boundary: f64,
}

/// Discrete `h_0`.
#[derive(Debug, Clone)]
pub struct H0Solution {
    pub grid: Arc<DomainGrid>,
    pub values: Vec<f64>,
    /// `min h_0`.
    pub h0_min: f64,
    /// Node where the minimum is attained.
    pub x0: Vec2,
    pub residual: f64,
    pub iters: usize,
}

impl H0Solution {
    pub fn as_candidate(&self) -> GridFunction {
        GridFunction { values: self.values.clone(), boundary: BOUNDARY_VALUE }
    }

    /// `1 / (2 (1 - min h_0))`.
    pub fn lambda(&self) -> f64 {
        0.5 / (1.0 - self.h0_min)
    }
}

/// Discrete `H_m` with its coincidence set.
#[derive(Debug, Clone)]
pub struct ObstacleField {
    pub grid: Arc<DomainGrid>,
    pub m: f64,
    pub tol: f64,
    pub values: Vec<f64>,
    /// `H - m < 10 tol`.
    pub active: Vec<bool>,
    pub residual: f64,
    pub iters: usize,
}

/// One row of a field export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "H")]
    pub value: f64,
    pub active: bool,
}

impl ObstacleField {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn as_candidate(&self) -> GridFunction {
        GridFunction { values: self.values.clone(), boundary: BOUNDARY_VALUE }
    }

    pub fn rows(&self) -> impl Iterator<Item = FieldRow> + '_ {
        self.grid.nodes().iter().enumerate().map(move |(k, n)| FieldRow {
            x: n.x.x,
            y: n.x.y,
            value: self.values[k],
            active: self.active[k],
        })
    }
}

/// Over-relaxation factor tuned to the lowest Dirichlet mode of a disk of
/// radius `width`.
fn relaxation(grid: &DomainGrid) -> f64 {
    2.0 / (1.0 + 2.405 * grid.h / grid.width)
}

/// `sup |min(u - floor, A u)|`, or `sup |A u|` without an obstacle, with
/// each row of `A` scaled to the diagonal of a full-arm node.
fn residual(grid: &DomainGrid, u: &[f64], floor: Option<f64>) -> f64 {
    let d_reg = 1.0 + 4.0 / (grid.h * grid.h);
    (0..grid.len())
        .map(|k| {
            let a = grid.apply(u, BOUNDARY_VALUE, k) * d_reg / grid.nodes()[k].diag;
            match floor {
                Some(m) => (u[k] - m).min(a).abs(),
                None => a.abs(),
            }
        })
        .fold(0.0, f64::max)
}

/// Projected SOR in natural node order.
fn psor(grid: &DomainGrid, u: &mut [f64], floor: Option<f64>, tol: f64) -> Result<(f64, usize)> {
    let omega = relaxation(grid);
    let nodes = grid.nodes();
    let mut sweeps = 0;
    let mut best = f64::INFINITY;
    let mut flat = 0;
    loop {
        let r = residual(grid, u, floor);
        if r < tol {
            return Ok((r, sweeps));
        }
        // below the rounding floor the residual stops improving
        if r < 0.99 * best {
            best = r;
            flat = 0;
        } else {
            flat += 1;
        }
        if sweeps >= MAX_SWEEPS || flat >= STALL_CHECKS {
            return Err(Error::NoConvergence { iters: sweeps, residual: r });
        }
        for _ in 0..CHECK_EVERY {
            for (k, n) in nodes.iter().enumerate() {
                let mut s = n.bnd * BOUNDARY_VALUE;
                for d in 0..4 {
                    if let Some(q) = n.nbr[d] {
                        s += n.coef[d] * u[q as usize];
                    }
                }
                let gs = s / n.diag;
                let mut v = u[k] + omega * (gs - u[k]);
                if let Some(m) = floor {
                    v = v.max(m);
                }
                u[k] = v;
            }
        }
        sweeps += CHECK_EVERY;
    }
}

fn check_tol(tol: f64) -> Result<()> {
    check_positive("tol", tol)?;
    Ok(())
}

/// Solves `-Delta h_0 + h_0 = 0` in the domain, `h_0 = 1` on its boundary.
pub fn solve_h0(grid: &Arc<DomainGrid>, tol: f64) -> Result<H0Solution> {
    check_tol(tol)?;
    let mut u = vec![BOUNDARY_VALUE; grid.len()];
    let (residual, iters) = psor(grid, &mut u, None, tol)?;
    let mut k0 = 0;
    for k in 0..u.len() {
        if u[k] < u[k0] {
            k0 = k;
        }
    }
    Ok(H0Solution { grid: grid.clone(), h0_min: u[k0], x0: grid.nodes()[k0].x, values: u, residual, iters })
}

fn finish(grid: &Arc<DomainGrid>, m: f64, tol: f64, values: Vec<f64>, residual: f64, iters: usize) -> ObstacleField {
    let active = values.iter().map(|&v| v - m < 10.0 * tol).collect();
    ObstacleField { grid: grid.clone(), m, tol, values, active, residual, iters }
}

/// Minimizer `H_m` of the constant-obstacle problem: `H >= m`,
/// `-Delta H + H >= 0`, with equality off the coincidence set.
pub fn solve_obstacle(grid: &Arc<DomainGrid>, m: f64, tol: f64) -> Result<ObstacleField> {
    check_finite("m", m)?;
    check_tol(tol)?;
    if m > 1.0 {
        return Err(Error::InvalidInput(format!("obstacle level m = {m} exceeds 1")));
    }
    // starting above the solution keeps the iterates monotone
    let mut u = vec![BOUNDARY_VALUE; grid.len()];
    let (residual, iters) = psor(grid, &mut u, Some(m), tol)?;
    Ok(finish(grid, m, tol, u, residual, iters))
}

/// [`solve_obstacle`] over several levels in parallel; output follows `ms`.
pub fn sweep_m(grid: &Arc<DomainGrid>, ms: &[f64], tol: f64) -> Result<Vec<ObstacleField>> {
    ms.par_iter().map(|&m| solve_obstacle(grid, m, tol)).collect()
}
