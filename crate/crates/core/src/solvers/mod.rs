//! Time integration of the relaxation system and of the reference
//! Green-Naghdi system.

mod stepper;
mod tendency;

pub use stepper::{
    integrate, integrate_with_monitor, stable_dt, step, step_with_dt, Evolvable, Scheme, SolverMeta,
    StepPolicy, System, Trajectory,
};
pub(crate) use stepper::median;
pub use tendency::{
    fg_nonstiff_tendency, fg_tendency, gn_tendency, relaxation_substep_exact, GnState,
};
