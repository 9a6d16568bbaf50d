use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::matrix::rng_stream;

/// Perturbation tolerance: margins down to `-MARGIN_TOL * scale` count as
/// nonnegative.
pub const MARGIN_TOL: f64 = 1e-12;
/// Default central-difference step scale.
pub const FD_STEP_SCALE: f64 = 1e-6;
/// Default grid resolution per gain entry.
pub const GRID_POINTS: usize = 41;
/// Largest `n * m` the grid oracle accepts.
pub const GRID_MAX_DIMS: usize = 4;
/// Minimum distance, relative to `λ_n`, between a sampled `λ` and the
/// spectrum.
pub const LAMBDA_GUARD: f64 = 1e-6;

// Stream ids for the counter-based seed split. The low 32 bits carry an
// item index (direction, gain, ...).
const DIRECTION_STREAM: u64 = 1 << 32;
const GAIN_STREAM: u64 = 2 << 32;
const SYMPOLY_STREAM: u64 = 3 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub num_directions: usize,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub fd_step_scale: f64,
    pub exec: ExecMode,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            num_directions: 100,
            epsilons: vec![1e-2, 1e-1],
            seed: 0,
            fd_step_scale: FD_STEP_SCALE,
            exec: ExecMode::default(),
        }
    }
}

impl ProbeConfig {
    pub fn new(num_directions: usize, epsilons: Vec<f64>, seed: u64) -> Result<Self> {
        let cfg = Self {
            num_directions,
            epsilons,
            seed,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_directions == 0 {
            return Err(Error::InvalidArgument("need at least one probe direction".into()));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("epsilons must be positive and finite".into()));
        }
        if self.epsilons.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("epsilons must be sorted ascending".into()));
        }
        if !(self.fd_step_scale > 0.0) {
            return Err(Error::InvalidArgument("fd_step_scale must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn direction_rng(&self, index: usize) -> ChaCha8Rng {
        rng_stream(self.seed, DIRECTION_STREAM | index as u64)
    }

    pub(crate) fn gain_rng(&self, index: usize) -> ChaCha8Rng {
        rng_stream(self.seed, GAIN_STREAM | index as u64)
    }

    pub(crate) fn sympoly_rng(&self) -> ChaCha8Rng {
        rng_stream(self.seed, SYMPOLY_STREAM)
    }
}

/// `max(1, |φ|)`, the scale all gradient and margin tolerances refer to.
pub fn objective_scale(value: f64) -> f64 {
    value.abs().max(1.0)
}
