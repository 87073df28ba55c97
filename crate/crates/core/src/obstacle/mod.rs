//! Constant-obstacle problem `min int |grad H|^2 + H^2` over `H >= m`,
//! `H = 1` on the boundary, on convex planar domains.

pub mod domain;
pub mod solver;
pub mod verify;

pub use domain::{DomainGrid, Node, Shape};
pub use solver::{
    solve_h0, solve_obstacle, sweep_m, FieldRow, GridFunction, H0Solution, ObstacleField, BOUNDARY_VALUE, DEFAULT_TOL,
    MAX_SWEEPS,
};
pub use verify::{
    barrier_check, coincidence_metrics, sup_gradient, u_q, unit_disk_radius, verify_ellipse_limit,
    verify_gradient_bound, verify_baseline, verify_scale_law, AsymptoticsReport, BarrierKind, BarrierReport, CoincidenceMetrics,
    EllipseReport, GradientBoundEntry, GradientBoundReport, LevelSummary, BaselineReport, RecordStatus, ScaleRecord, MIN_ACTIVE_CELLS, SCALE_BAND, Verdict,
};
