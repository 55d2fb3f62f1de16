//! Bistatic radar cross section characterization toolkit.

pub mod cli_io;
pub mod dists;
pub mod geometry;
pub mod gof;
pub mod link_budget;
pub mod montecarlo;
pub mod nf_rcs;
pub mod optim;
pub mod waveform;
