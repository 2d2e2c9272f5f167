//! Exact setpoint-change responses of PID loops around plants with one
//! transport delay.
//!
//! The closed loop is a neutral delay differential equation. Given a history
//! and a setpoint that are exponential polynomials over the loop's
//! characteristic roots, the method of steps keeps the solution in that form on
//! every delay interval, so trajectories, derivatives and integrals are
//! evaluated from closed-form coefficients instead of a time grid.
//!
//! ```
//! use pidelay::prelude::*;
//!
//! // first-order lag with unit time constant, integral action only
//! let pid = PidParams::new(0.0, 0.5, 0.0)?;
//! let plant = PlantModel::first_order(1.0, 1.0)?;
//! let system = build_closed_loop(&pid, &plant)?;
//!
//! // steady at 1, setpoint stepped to 0 at t = 0
//! let init = InitialCondition::steady(1.0);
//! let setpoint = ForcingTerm::steps(1.0, &[(0.0, 0.0)])?;
//! let sol = solve(&system, &init, &setpoint, 10)?;
//!
//! assert_eq!(sol.value(0.5), Some(1.0));
//! let y = sol.value(1.5).unwrap();
//! assert!((y - (1.25 - 0.5 * (-0.5f64).exp())).abs() < 1e-12);
//! # Ok::<(), pidelay::Error>(())
//! ```

pub mod cli;
pub mod closed_loop;
pub mod error;
pub mod exp_poly;
pub mod metrics;
pub mod oracle;
pub mod series_identities;
pub mod stepper;
pub mod vandermonde;
pub mod verify;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::closed_loop::{build_closed_loop, characteristic_roots, DdeSystem, PidParams, PlantModel};
    pub use crate::error::{Error, Result};
    pub use crate::exp_poly::ExpPoly;
    pub use crate::metrics::{compute_metrics, ResponseMetrics};
    pub use crate::oracle::{integrate, OracleTrajectory};
    pub use crate::stepper::{solve, ForcingTerm, InitialCondition, PiecewiseSolution};
}
