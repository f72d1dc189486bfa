//! Symbol error rate (SER) analysis of a single-relay selective
//! decode-and-forward network whose hops use orthogonal space-time block
//! codes over kappa-mu fading.
//!
//! The crate is layered bottom-up:
//!
//! * [`specfun`]: log-gamma, Pochhammer symbols, modified Bessel `I_nu`,
//!   the Gaussian Q function and the confluent Humbert `Phi_1` and
//!   Lauricella `Phi_1^(3)` series.
//! * [`quadrature`]: Gauss-Legendre rules and adaptive Gauss-Kronrod
//!   integration.
//! * [`kappa_mu`]: density, MGF, numeric CDF and exact samplers of the
//!   post-combining SNR.
//! * [`ser_engine`]: per-link average SER (MGF quadrature and hypergeometric
//!   series) and the end-to-end composition.
//! * [`montecarlo`]: model-faithful and physical (Alamouti + MRC) simulators.
//! * [`sweep`]: SNR sweeps, figure presets and CSV output used by the CLI.

// NaN-rejecting guards such as `!(x > 0.0)` are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kappa_mu;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod ser_engine;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
pub use kappa_mu::KappaMuParams;
pub use montecarlo::{SimConfig, SimMode, SimResult};
pub use ser_engine::{LinkEvaluator, LinkParams, ModulationParams, NetworkParams, Scheme};
pub use specfun::SeriesControl;
pub use sweep::{Evaluator, FigureName, SweepRow, SweepSpec};
