//! Heralded single-photon sources multiplexed through a switch tree.
//!
//! Two engines share one scenario description:
//!
//! * [`analytic`]: closed-form coincidence-to-accidental ratio and the
//!   first-order multiplexed prediction.
//! * [`mc`]: a pulse-slot Monte Carlo with detector deadtime, switch
//!   latency and delayed-window accidentals.
//!
//! [`runner`] drives sweeps, multiplexing comparisons and calibration on top
//! of both, [`config`] reads and writes scenario files and [`recipes`]
//! regenerates the bundled figure and table data.

pub mod analytic;
pub mod config;
pub mod error;
pub mod mc;
pub mod model;
pub mod prob;
pub mod recipes;
pub mod runner;
pub mod table;

pub use error::{Error, Result};
pub use model::{
    ChannelSpec, DetectorRole, DetectorSpec, LaserSpec, McSettings, MuxTopology, RoutingPolicy, Scenario, SpectralSpec,
    SwitchSpec,
};
pub use prob::PairStatistics;
