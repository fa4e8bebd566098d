//! Pointwise and Fourier-multiplier linear algebra of the relaxation system.

pub mod projector;
pub mod symbol;
pub mod symmetric;

pub use projector::{j_apply, j_inverse_singular, projector_apply, Projection};
pub use symbol::{
    characteristic_speeds, default_gamma, flux_jacobian, gamma_min, symbol_matrix, symmetrizer_hyp,
    CharacteristicSpeeds, DenseMatrix, SymbolPoint,
};
pub use symmetric::{
    hyperbolicity_margin, quadratic_energy, symmetric_form, BalancedSymbolPoint, SymmetricForm,
};
