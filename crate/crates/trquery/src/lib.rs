//! File formats, IO and the command-line front end for [`trquery_core`].
//!
//! * [`snapshot`]: the `TRQG` binary graph snapshot.
//! * [`embfile`]: the `TRQE` binary embedding file.
//! * [`load`]: streaming N-Triples input and query files.
//! * [`manifest`]: benchmark manifests and truth files.
//! * [`output`]: TSV and JSON result documents.
//! * [`cli`]: the `trquery` command.

pub mod cli;
mod codec;
pub mod embfile;
pub mod error;
pub mod load;
pub mod manifest;
pub mod output;
pub mod snapshot;

use std::time::Instant;

pub use error::{Error, FormatError};
pub use trquery_core as core;

/// Monotonic wall clock for phase timings.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl trquery_core::Clock for SystemClock {
    fn now_nanos(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}
