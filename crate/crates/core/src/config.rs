use crate::error::{NcasError, Result};

/// Smoothing kernel applied to the phase field before it enters the
/// similarity and coupling terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Identity: `k * f = f`.
    Delta,
    /// Truncated (3 sigma) normalized Gaussian on the pixel grid.
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// Squared gradient norm (Dirichlet energy).
    H1,
    /// Gradient magnitude (total variation).
    Tv,
}

impl std::str::FromStr for Regularizer {
    type Err = NcasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Ok(Regularizer::H1),
            "tv" => Ok(Regularizer::Tv),
            other => Err(NcasError::param(format!("unknown regularizer '{other}'"))),
        }
    }
}

/// Model and solver parameters shared by both drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the phase coupling term.
    pub lambda: f64,
    /// Weight of the spatial regularizer.
    pub eta: f64,
    /// Splitting penalty between the phase field and its TV-denoised copy.
    pub epsilon_penalty: f64,
    /// Gradient step of the inner loop.
    pub tau: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// Relative phase change below which the outer loop stops.
    pub outer_tol: f64,
    /// Half-width of the square pixel window (10 gives 21x21).
    pub window_radius: usize,
    /// Neighbor count for point-cloud graphs.
    pub knn: usize,
    pub kernel: Kernel,
    /// Number of (row-normalize, symmetrize) sweeps per similarity update.
    pub projection_sweeps: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eta: 1e-3,
            epsilon_penalty: 1e-3,
            tau: 2.0,
            h0: 50.0,
            h_min: 0.5,
            h_max: 1000.0,
            inner_iters: 1000,
            outer_iters: 50,
            outer_tol: 1e-4,
            window_radius: 10,
            knn: 20,
            kernel: Kernel::Delta,
            projection_sweeps: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("epsilon_penalty", self.epsilon_penalty),
            ("tau", self.tau),
            ("h0", self.h0),
            ("h_min", self.h_min),
        ];
        for (name, v) in positive {
            // lambda/eta/epsilon of exactly zero are allowed for degenerate runs
            let ok = if matches!(name, "lambda" | "eta" | "epsilon_penalty") {
                v.is_finite() && v >= 0.0
            } else {
                v.is_finite() && v > 0.0
            };
            if !ok {
                return Err(NcasError::param(format!("{name} = {v} is out of range")));
            }
        }
        if !(self.h_max.is_finite() && self.h_min <= self.h_max) {
            return Err(NcasError::param(format!(
                "bandwidth bounds [{}, {}] are not ordered",
                self.h_min, self.h_max
            )));
        }
        if !(self.outer_tol.is_finite() && self.outer_tol >= 0.0) {
            return Err(NcasError::param("outer_tol must be nonnegative"));
        }
        if self.knn == 0 {
            return Err(NcasError::param("knn must be positive"));
        }
        if self.projection_sweeps == 0 {
            return Err(NcasError::param("projection_sweeps must be at least 1"));
        }
        if let Kernel::Gaussian { sigma } = self.kernel {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(NcasError::param("gaussian kernel sigma must be positive"));
            }
        }
        Ok(())
    }

    /// The initial bandwidth clamped into `[h_min, h_max]`.
    pub fn initial_bandwidth(&self) -> f64 {
        self.h0.clamp(self.h_min, self.h_max)
    }
}
