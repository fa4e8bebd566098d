//! # fgrelax
//!
//! A numerical laboratory for the hyperbolic relaxation of the Green-Naghdi
//! shallow-water equations on the one-dimensional torus.
//!
//! The relaxation system replaces the elliptic constraint of the Green-Naghdi
//! model by two augmented unknowns `(eta, w)` driven by a stiff source of
//! strength `lambda`. As `lambda` grows, solutions started from well-prepared
//! data approach Green-Naghdi solutions at rate `1/lambda`, while naive data
//! excites fast oscillations whose imprint on `lambda (eta - h)` grows like
//! `lambda^{1/2}`.
//!
//! Modules:
//! - [`spectral`]: periodic grids, Fourier differentiation, dealiasing, Sobolev norms.
//! - [`state`]: physical and balanced unknowns and the change of variables.
//! - [`analysis`]: principal symbol, symmetrizers, symmetric form, projections.
//! - [`elliptic`]: the operators `t[h]`, `T[h]` and their inverses.
//! - [`prep`]: well-prepared initial data of order 0, 1, 2.
//! - [`solvers`]: time integration of both systems.
//! - [`diagnostics`]: time derivatives, weighted norms, consistency residual.
//! - [`toy`]: scalar toy models of the derivative-growth mechanism.
//! - [`experiments`]: configuration-driven experiment runners and result files.

pub mod analysis;
pub mod diagnostics;
pub mod elliptic;
pub mod experiments;
pub mod prep;
pub mod solvers;
pub mod spectral;
pub mod state;
pub mod toy;

pub use spectral::{GridSpec, ScalarField};
pub use state::{from_balanced, to_balanced, ParamSet, StateU, StateV};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cavitation: minimum depth {min_depth:.6e} below floor {h_star:.6e}")]
    Cavitation { min_depth: f64, h_star: f64 },
    #[error("symbol not hyperbolic: alpha * h = {alpha_h:.6e} < 0")]
    NonHyperbolic { alpha_h: f64 },
    #[error("elliptic solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("depth floor violated at t = {time:.6e}: minimum depth {min_depth:.6e} below {h_star:.6e}")]
    DepthFloor {
        time: f64,
        min_depth: f64,
        h_star: f64,
        /// Last accepted state, as a list of component fields.
        snapshot: Vec<ScalarField>,
    },
    #[error("non-finite state at t = {time:.6e}")]
    NonFinite { time: f64 },
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl Error {
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidGrid(_) | Error::InvalidParams(_))
    }

    /// Errors raised by the numerics (as opposed to bad input).
    pub fn is_numerical_abort(&self) -> bool {
        matches!(
            self,
            Error::DepthFloor { .. }
                | Error::NonFinite { .. }
                | Error::SolverFailure { .. }
                | Error::Cavitation { .. }
                | Error::NonHyperbolic { .. }
        )
    }
}
