use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Result;
use renorm_core::lattice::{lattice_to_tau, moduli_scan, w_eta_with, w_fourier, w_zeta_diff_with, ModuliGrid};
use renorm_core::modular::{SeriesControl, Tau};
use renorm_core::obstacle::{
    coincidence_metrics, solve_h0, solve_obstacle, sweep_m, verify_ellipse_limit, verify_gradient_bound,
    verify_baseline, verify_scale_law, DomainGrid, ObstacleField, Shape,
};
use renorm_core::torus::{
    conjecture1_probe, elkies_experiment, minimize_runs, GreenEvaluator, MinimizeControl, TorusConfig, TorusSpec,
};
use renorm_core::{Error, LatticeBasis, Vec2, UNIT_DENSITY_COVOLUME};
use serde_json::{json, Value};

use crate::args::{Cli, Command, FeketeArgs, LatticeArgs, ObstacleArgs, RouteArg, ScanArgs, SeriesArgs, Suite, TorusArg};
use crate::output::{to_value, Table};
use crate::row;

/// Invalid combination of flags that clap cannot express.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

pub struct Outcome {
    /// The `result` member of the JSON report.
    pub result: Value,
    /// Main output under `--format csv`.
    pub table: Table,
    /// Extra CSV requested with `--csv`.
    pub side: Option<(PathBuf, Table)>,
    /// Numerical failure reported after the output is written.
    pub failure: Option<Error>,
}

impl Outcome {
    fn new(result: Value, table: Table) -> Self {
        Outcome { result, table, side: None, failure: None }
    }
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Lattice(a) => lattice(a),
        Command::ModuliScan(a) => scan(a),
        Command::Fekete(a) => fekete(a, cli.seed),
        Command::Obstacle(a) => obstacle(a),
    }
}

fn series(a: &SeriesArgs) -> Result<SeriesControl> {
    let ctl = SeriesControl { abs_tol: a.abs_tol, ..SeriesControl::default() }.with_truncation_order(a.truncation_order);
    ctl.validate()?;
    Ok(ctl)
}

fn lattice(a: &LatticeArgs) -> Result<Outcome> {
    let ctl = series(&a.series)?;
    let (tau, m) = match (&a.tau, &a.basis) {
        (Some(t), _) => (Tau::new(t[0], t[1])?, a.m.unwrap_or(1.0)),
        (None, Some(b)) => {
            let basis = LatticeBasis::new(Vec2::new(b[0], b[1]), Vec2::new(b[2], b[3]))?;
            (lattice_to_tau(&basis)?.0, UNIT_DENSITY_COVOLUME / basis.covolume())
        }
        (None, None) => return usage("lattice needs --tau or --basis"),
    };
    let report = match a.route {
        RouteArg::Eta => w_eta_with(tau, m, &ctl)?,
        RouteArg::Fourier => w_fourier(tau, m, &a.probes, &ctl)?,
        RouteArg::ZetadiffVs => w_zeta_diff_with(tau, Tau::new(a.vs[0], a.vs[1])?, m, &ctl)?,
    };
    let result = to_value(&report)?;
    let route = result["route"].as_str().unwrap_or_default().to_string();
    let mut t = Table::new(&["route", "a", "b", "m", "value", "error_estimate"]);
    t.push(row![route, tau.a(), tau.b(), m, report.value, report.error_estimate]);
    Ok(Outcome::new(result, t))
}

fn scan(a: &ScanArgs) -> Result<Outcome> {
    let grid = ModuliGrid { a_range: [a.a_min, a.a_max], b_range: [a.b_min, a.b_max], resolution: a.resolution };
    let report = moduli_scan(&grid, a.m)?;
    let mut t = Table::new(&["a", "b", "W"]);
    for p in &report.values {
        t.push(row![p.a, p.b, p.w]);
    }
    let mut result = to_value(&report)?;
    if let Value::Object(o) = &mut result {
        o.remove("values");
        o.insert("cell_size".into(), json!(grid.cell_size()));
    }
    let mut out = Outcome::new(result, t.clone());
    out.side = a.csv.clone().map(|p| (p, t));
    Ok(out)
}

fn torus_spec(t: TorusArg) -> TorusSpec {
    match t {
        TorusArg::Square => TorusSpec::square(),
        TorusArg::Triangular => TorusSpec::triangular(),
    }
}

fn fekete(a: &FeketeArgs, seed: u64) -> Result<Outcome> {
    let ctl = MinimizeControl {
        max_iters: a.max_iters,
        grad_tol: a.grad_tol,
        step_init: a.step_init,
        restarts: a.restarts,
        rng_seed: seed,
    };
    let torus = torus_spec(a.torus);
    if a.elkies {
        if a.n_min == 0 || a.n_min > a.n_max {
            return usage(format!("need 1 <= n-min <= n-max, got {}..={}", a.n_min, a.n_max));
        }
        let ns: Vec<usize> = (a.n_min..=a.n_max).collect();
        let report = elkies_experiment(&ns, &torus, &ctl)?;
        let mut t = Table::new(&["n", "e_min", "excess", "grad_norm", "converged"]);
        for e in &report.entries {
            t.push(row![e.n, e.e_min, e.excess, e.grad_norm, e.converged]);
        }
        return Ok(Outcome::new(to_value(&report)?, t));
    }
    if a.conjecture {
        let report = conjecture1_probe(&a.n_list, &ctl)?;
        let mut t = Table::new(&["n", "torus", "per_point", "embedded_per_point", "gap", "converged", "flagged"]);
        for e in &report.entries {
            t.push(row![e.n, e.torus.clone(), e.per_point, e.embedded_per_point, e.gap, e.converged, e.flagged]);
        }
        return Ok(Outcome::new(to_value(&report)?, t));
    }
    let Some(n) = a.n else {
        return usage("fekete needs --n, --elkies or --conjecture");
    };
    let ev = GreenEvaluator::new(&torus, series(&a.series)?)?;
    let start = TorusConfig::seeded(torus, n, seed)?;
    let runs = minimize_runs(&ev, &start, &ctl)?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.energy < runs[best].energy {
            best = k;
        }
    }
    let mut t = Table::new(&["run", "energy", "initial_energy", "grad_norm", "iterations", "converged"]);
    let mut table = Vec::new();
    for r in &runs {
        t.push(row![r.run, r.energy, r.initial_energy, r.grad_norm, r.iterations, r.converged]);
        table.push(json!({
            "run": r.run,
            "energy": r.energy,
            "initial_energy": r.initial_energy,
            "grad_norm": r.grad_norm,
            "iterations": r.iterations,
            "converged": r.converged,
            "stall": r.stall,
        }));
    }
    let b = &runs[best];
    let mut trace = Table::new(&["iter", "energy", "grad_norm"]);
    for r in &b.trace {
        trace.push(row![r.iter, r.energy, r.grad_norm]);
    }
    let result = json!({
        "n": n,
        "torus": a.torus,
        "energy": b.energy,
        "energy_per_point": b.energy / n as f64,
        "self_energy": ev.self_energy(),
        "grad_norm": b.grad_norm,
        "iterations": b.iterations,
        "converged": b.converged,
        "best_run": b.run,
        "config": b.config,
        "runs": table,
    });
    let failure = if b.converged {
        None
    } else {
        Some(b.stall_error().unwrap_or(Error::NoConvergence { iters: b.iterations, residual: b.grad_norm }))
    };
    Ok(Outcome { result, table: t, side: a.csv.clone().map(|p| (p, trace)), failure })
}

fn shape(a: &ObstacleArgs) -> Result<Shape> {
    if let Some(e) = &a.ellipse {
        return Ok(Shape::ellipse(e[0], e[1])?);
    }
    if let Some(p) = &a.polygon {
        if p.len() % 2 != 0 {
            return usage("polygon needs an even number of coordinates");
        }
        return Ok(Shape::polygon(p.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect())?);
    }
    Ok(Shape::UnitDisk)
}

fn level_json(f: &ObstacleField) -> Value {
    let mt = coincidence_metrics(f);
    json!({
        "m": f.m,
        "area": mt.area,
        "active_cells": mt.active_cells,
        "empty": mt.empty,
        "all_active": mt.active_cells == f.grid.len(),
        "centroid": mt.centroid,
        "semi_axes": mt.semi_axes,
        "axis_ratio": mt.axis_ratio,
        "residual": f.residual,
        "iters": f.iters,
    })
}

fn obstacle(a: &ObstacleArgs) -> Result<Outcome> {
    let fine = matches!(a.suite, Some(Suite::ScaleLaw | Suite::Ellipse));
    let h = a.h.unwrap_or(if fine { 1.0 / 256.0 } else { 1.0 / 128.0 });
    let grid = Arc::new(DomainGrid::new(shape(a)?, h)?);
    let tol = a.tol;
    if a.suite.is_some() && a.csv.is_some() {
        return usage("--csv exports a field and cannot be combined with --suite");
    }
    let ms = a.m.map(|m| vec![m]).or_else(|| a.m_grid.clone());
    let Some(suite) = a.suite else {
        let Some(ms) = ms else {
            return usage("obstacle needs --m, --m-grid or --suite");
        };
        let h0 = solve_h0(&grid, tol)?;
        let fields = sweep_m(&grid, &ms, tol)?;
        let mut t = Table::new(&["m", "area", "active_cells", "axis_ratio", "residual", "iters"]);
        for f in &fields {
            let mt = coincidence_metrics(f);
            t.push(row![f.m, mt.area, mt.active_cells, mt.axis_ratio, f.residual, f.iters]);
        }
        let result = json!({
            "shape": grid.shape,
            "h": h,
            "tol": tol,
            "nodes": grid.len(),
            "domain_area": grid.area(),
            "h0_min": h0.h0_min,
            "x0": h0.x0,
            "lambda": h0.lambda(),
            "levels": fields.iter().map(level_json).collect::<Vec<_>>(),
        });
        let side = a.csv.clone().map(|p| {
            let one = fields.len() == 1;
            let mut ft = Table::new(if one { &["x", "y", "H", "active"] } else { &["m", "x", "y", "H", "active"] });
            for f in &fields {
                for r in f.rows() {
                    let mut cells = row![r.x, r.y, r.value, r.active];
                    if !one {
                        cells.insert(0, f.m.into());
                    }
                    ft.push(cells);
                }
            }
            (p, ft)
        });
        return Ok(Outcome { result, table: t, side, failure: None });
    };
    match suite {
        Suite::PropA1 => {
            let ms = ms.unwrap_or_else(|| vec![0.80, 0.85, 0.90, 0.95]);
            let report = verify_baseline(&grid, &ms, tol)?;
            let mut t = Table::new(&["check", "pass", "worst"]);
            for v in &report.verdicts {
                t.push(row![v.name.clone(), v.pass, v.worst]);
            }
            Ok(Outcome::new(to_value(&report)?, t))
        }
        Suite::GradientBound => {
            let ms = ms.unwrap_or_else(|| vec![0.90, 0.95, 0.99]);
            let report = verify_gradient_bound(&sweep_m(&grid, &ms, tol)?);
            let mut t = Table::new(&["m", "sup_grad", "ratio", "deficit", "deficit_ratio"]);
            for e in &report.entries {
                t.push(row![e.m, e.sup_grad, e.ratio, e.deficit, e.deficit_ratio]);
            }
            Ok(Outcome::new(to_value(&report)?, t))
        }
        Suite::ScaleLaw => {
            let h0 = solve_h0(&grid, tol)?;
            let ms: Vec<f64> = a.offsets.iter().map(|o| h0.h0_min + o).collect();
            let report = verify_scale_law(&sweep_m(&grid, &ms, tol)?, h0.h0_min);
            let mut t = Table::new(&["m", "offset", "area", "active_cells", "l_m", "ratio", "axis_ratio", "status"]);
            for r in &report.records {
                let status = to_value(&r.status)?.as_str().unwrap_or_default().to_string();
                t.push(row![r.m, r.offset, r.area, r.active_cells, r.l_m, r.ratio, r.axis_ratio, status]);
            }
            Ok(Outcome::new(to_value(&report)?, t))
        }
        Suite::Ellipse => {
            let h0 = solve_h0(&grid, tol)?;
            let field = solve_obstacle(&grid, h0.h0_min + a.offset, tol)?;
            let r = verify_ellipse_limit(&field, &h0, a.delta)?;
            let mut t = Table::new(&[
                "m", "l_m", "axis_ratio", "delta", "inner_defect", "outer_defect", "hessian_isotropy", "delta_q",
            ]);
            t.push(row![r.m, r.l_m, r.axis_ratio, r.delta, r.inner_defect, r.outer_defect, r.hessian_isotropy, r.delta_q]);
            let mut result = to_value(&r)?;
            if let Value::Object(o) = &mut result {
                o.insert("h0_min".into(), json!(h0.h0_min));
                o.insert("x0".into(), json!(h0.x0));
            }
            Ok(Outcome::new(result, t))
        }
    }
}
