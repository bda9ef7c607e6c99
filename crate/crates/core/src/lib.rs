//! Antenna-position optimization for a linear movable-antenna array serving a
//! zero-forcing multiuser uplink.
//!
//! Given M single-antenna users at known angles of arrival, the base station
//! slides its N antennas inside disjoint boxes so that the total transmit power
//! needed to meet every user's rate target is as small as possible. That power
//! is `f(x) = tr{Z⁻¹}` with `Z = Ω⁻¹H(x)ᴴH(x)`, and it is minimized by projected
//! gradient descent with a closed-form gradient built from the eigensystem of
//! `Z`.
//!
//! ```
//! use ma_array::{optimizer, scenario::ScenarioConfig};
//!
//! let scenario = ScenarioConfig::reference().validate().unwrap();
//! let result = optimizer::optimize(&scenario, &Default::default()).unwrap();
//! assert!(result.objective <= result.trace.records[0].objective);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod objective;
pub mod optimizer;
pub mod scenario;

pub use error::{Error, Result};
