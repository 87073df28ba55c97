use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("imaginary part of tau must be positive, got {0}")]
    NonPositiveImaginaryPart(f64),
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("non-finite input for `{0}`")]
    NonFinite(&'static str),
    #[error("series did not reach tolerance {abs_tol:e} within {max_terms} terms")]
    PrecisionUnreachable { abs_tol: f64, max_terms: usize },
    #[error("argument lies within {tube:e} of a lattice point (distance {distance:e})")]
    LatticePointSingularity { distance: f64, tube: f64 },
    #[error("Eisenstein series diverges: (u, v) = ({u}, {v}) lies on Z^2")]
    DivergentSeries { u: f64, v: f64 },
    #[error("covolumes differ: {0} vs {1}")]
    CovolumeMismatch(f64, f64),
    #[error("degenerate basis: cross product {0:e}")]
    DegenerateBasis(f64),
    #[error("Richardson extrapolation unstable: successive estimates differ by {0:e}")]
    ExtrapolationUnstable(f64),
    #[error("invalid moduli grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("torus volume must be 2*pi, got {0}")]
    VolumeNotNormalized(f64),
    #[error("points {0} and {1} are closer than the minimum separation")]
    CoincidentPoints(usize, usize),
    #[error("line search stalled at iteration {0}")]
    LineSearchStall(usize),
    #[error("solver did not converge after {iters} sweeps (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("coincidence set has {active} active cells, need at least {needed}")]
    UnderResolved { active: usize, needed: usize },
    #[error("coincidence set is empty")]
    EmptySet,
    #[error("grids do not match")]
    GridMismatch,
}

impl Error {
    /// Variant name, stable across releases; used by the CLI for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveImaginaryPart(_) => "NonPositiveImaginaryPart",
            Error::NonPositiveParameter { .. } => "NonPositiveParameter",
            Error::NonFinite(_) => "NonFinite",
            Error::PrecisionUnreachable { .. } => "PrecisionUnreachable",
            Error::LatticePointSingularity { .. } => "LatticePointSingularity",
            Error::DivergentSeries { .. } => "DivergentSeries",
            Error::CovolumeMismatch(..) => "CovolumeMismatch",
            Error::DegenerateBasis(_) => "DegenerateBasis",
            Error::ExtrapolationUnstable(_) => "ExtrapolationUnstable",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidInput(_) => "InvalidInput",
            Error::VolumeNotNormalized(_) => "VolumeNotNormalized",
            Error::CoincidentPoints(..) => "CoincidentPoints",
            Error::LineSearchStall(_) => "LineSearchStall",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::UnderResolved { .. } => "UnderResolved",
            Error::EmptySet => "EmptySet",
            Error::GridMismatch => "GridMismatch",
        }
    }

    /// True when the error comes from invalid caller input rather than a
    /// numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveImaginaryPart(_)
                | Error::NonPositiveParameter { .. }
                | Error::NonFinite(_)
                | Error::DegenerateBasis(_)
                | Error::InvalidGrid(_)
                | Error::InvalidInput(_)
                | Error::VolumeNotNormalized(_)
                | Error::CoincidentPoints(..)
                | Error::CovolumeMismatch(..)
                | Error::GridMismatch
        )
    }
}

pub(crate) fn check_finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn check_positive(name: &'static str, x: f64) -> Result<f64> {
    check_finite(name, x)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::NonPositiveParameter { name, value: x })
    }
}
