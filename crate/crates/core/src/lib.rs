//! Renormalized Coulomb energy of planar lattices and periodic point
//! configurations, together with the constant-obstacle problem that governs
//! where vortices nucleate in a bounded domain.
//!
//! * [`modular`]: Dedekind eta, Kronecker and Eisenstein series, lattice
//!   theta and Epstein zeta functions.
//! * [`lattice`]: the energy `W` of lattices along three routes, moduli-space
//!   scans and the theta minimality probe.
//! * [`torus`]: torus Green functions, energies of `n`-point configurations
//!   and their minimization.
//! * [`obstacle`]: relaxation solver for the obstacle problem and checks on
//!   its coincidence set.

pub mod error;
pub mod geom;
pub mod lattice;
pub mod modular;
pub mod obstacle;
pub mod quad;
pub mod torus;

pub use error::{Error, Result};
pub use geom::{LatticeBasis, Vec2, UNIT_DENSITY_COVOLUME};
pub use lattice::{
    lattice_to_tau, moduli_scan, reduce_fundamental, scale_to_density, theta_minimality_probe, w_eta, w_fourier,
    w_zeta_diff, EnergyReport, ModuliGrid, Route, ScanReport, ThetaProbeReport,
};
pub use modular::{dedekind_eta, eisenstein, kronecker_f, theta_lattice, Evaluated, LatticeModulus, SeriesControl, Tau};
pub use obstacle::{solve_h0, solve_obstacle, sweep_m, DomainGrid, H0Solution, ObstacleField, Shape};
pub use torus::{
    conjecture1_probe, elkies_experiment, minimize_config, minimize_runs, minimize_with, ConjectureReport, ElkiesReport,
    GreenEvaluator, MinimizeControl, MinimizeOutcome, TorusConfig, TorusSpec,
};
