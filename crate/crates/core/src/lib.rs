//! Discrete-event simulator of vehicular edge-computing offloading to LEO
//! satellite constellations.
//!
//! Modules follow the data path: [`tle`] element sets feed the two-body
//! [`orbit`] propagator, [`link`] turns geometry into rates, [`queueing`]
//! models compute queues, [`policy`] decides per frame, and [`engine`] runs
//! the event loop. [`cli`] wraps it all for the `leovec` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod engine;
pub mod link;
pub mod orbit;
pub mod policy;
pub mod queueing;
pub mod rng;
pub mod tle;

use thiserror::Error;

/// Top-level error with the process exit code it maps to.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error(transparent)]
    Tle(#[from] tle::TleError),
    #[error(transparent)]
    Fetch(#[from] tle::fetch::FetchError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// 2 configuration, 3 I/O, 4 constellation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 2,
            Error::Engine(e) if e.is_config() => 2,
            Error::Engine(_) | Error::Tle(_) => 4,
            Error::Fetch(_) | Error::Io(_) | Error::Csv(_) => 3,
        }
    }
}
