//! Digital-twin toolkit for convection-oven cooking processes.
//!
//! The crate covers the full chain from physics to runtime:
//!
//! * [`material`] — thermophysical and constitutive relations of the
//!   hygroscopic porous food (saturations, ideal-gas densities,
//!   non-equilibrium evaporation, effective transport properties).
//! * [`fom`] — the full-order model: a 1-D finite-volume solver for the
//!   coupled gas/vapor/water/energy transport with surface boundary
//!   conditions, implicit time stepping and grid-convergence tooling.
//! * [`excite`] — APRBS excitation signals (random hold levels joined by
//!   half-cosine transitions) used to generate training data.
//! * [`sysid`] — NARX grey-box identification: polynomial regressors,
//!   ridge least squares and greedy forward term selection.
//! * [`twin`] — the reduced-order-model runtime: portable `.dtrom` model
//!   files, open-loop prediction, scenario fan-out and speed benchmarks.
//! * [`metrics`] — MAPE/RMSE error quantification.
//! * [`config`] / [`pipeline`] — TOML configuration files and the
//!   end-to-end train/evaluate pipeline.

pub mod config;
pub mod error;
pub mod excite;
pub mod fom;
pub mod io;
pub mod material;
pub mod metrics;
pub mod pipeline;
pub mod signal;
pub mod sysid;
pub mod twin;

pub use error::Error;
pub use signal::Signal;

#[cfg(test)]
pub(crate) mod testutil;
