//! Mean field control value function: forward representation, linearization,
//! fundamental-solution field, spectral cost recovery, non-uniqueness demo.

pub mod cost;
pub mod oracle;
pub mod recover;
pub mod value;

pub use cost::{Functional, RunningCost, TerminalCost, TimeProfile};
pub use oracle::DataOracle;
pub use recover::{
    discrete_decay_weight, nonuniqueness_demo, recover_dpe_cost, RecoverOptions,
    TaylorCoefficients,
};
pub use value::{delta_u_field, dpe_linearized, dpe_value};
