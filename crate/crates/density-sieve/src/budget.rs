//! Iteration budgets. Every unbounded search in the library is metered so
//! that a family that never reaches its target produces a diagnosable error
//! instead of a hang. `DENSITY_SIEVE_ITER_CAP` overrides the default cap.

use crate::error::{Error, Result};

pub const DEFAULT_ITER_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct Budget {
    cap: u64,
}

impl Budget {
    pub fn new(cap: u64) -> Self {
        Budget { cap }
    }

    /// Default cap, overridable through the DENSITY_SIEVE_ITER_CAP env var.
    pub fn from_env() -> Self {
        let cap = std::env::var("DENSITY_SIEVE_ITER_CAP")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_ITER_CAP);
        Budget { cap }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn start(&self, context: impl Into<String>) -> Meter {
        Meter { cap: self.cap, used: 0, context: context.into() }
    }
}

/// Running counter against a fixed cap.
#[derive(Debug)]
pub struct Meter {
    cap: u64,
    used: u64,
    context: String,
}

impl Meter {
    pub fn tick(&mut self) -> Result<()> {
        self.tick_n(1)
    }

    pub fn tick_n(&mut self, n: u64) -> Result<()> {
        self.used = self.used.saturating_add(n);
        if self.used > self.cap {
            Err(Error::IterationCap { cap: self.cap, context: self.context.clone() })
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }
}
