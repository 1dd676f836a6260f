//! Design and measurement toolkit for thin-film and overmoded bulk acoustic
//! resonators.
//!
//! * [`materials`]: layer media, stacks and derived acoustic constants.
//! * [`acoustic1d`]: admittance of a layered stack (boundary value problem
//!   and Mason closed form), field profiles and strain-energy partition.
//! * [`modal`]: resonance detection and per-mode figures of merit.
//! * [`sweep`]: two-axis electrode thickness sweeps, CSV and SVG heatmaps.
//! * [`mbvd`]: Touchstone files, S to Y conversion and modified
//!   Butterworth-Van Dyke fitting.
//! * [`cli`]: the `baw` command line front end.

pub mod acoustic1d;
pub mod cli;
pub mod materials;
pub mod mbvd;
pub mod modal;
pub mod sweep;
pub mod units;
