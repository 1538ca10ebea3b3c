use serde::{Deserialize, Serialize};

/// FISTA extrapolation weights `beta_k = (theta_{k-1} - 1) / theta_k` with
/// `theta_k = (1 + sqrt(1 + 4 theta_{k-1}^2)) / 2` and `theta_{-1} = theta_0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaMomentum {
    theta_prev: f64,
    theta: f64,
}

impl Default for FistaMomentum {
    fn default() -> Self {
        Self::new()
    }
}

impl FistaMomentum {
    pub fn new() -> Self {
        Self {
            theta_prev: 1.0,
            theta: 1.0,
        }
    }

    /// Current `beta_k`.
    pub fn beta(&self) -> f64 {
        (self.theta_prev - 1.0) / self.theta
    }

    /// Moves from `beta_k` to `beta_{k+1}`.
    pub fn advance(&mut self) {
        let next = 0.5 * (1.0 + (1.0 + 4.0 * self.theta * self.theta).sqrt());
        self.theta_prev = self.theta;
        self.theta = next;
    }

    /// `theta_{k-1} = theta_k = 1`, so the next weight is zero.
    pub fn restart(&mut self) {
        self.theta_prev = 1.0;
        self.theta = 1.0;
    }
}

/// How pDCA_e extrapolates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Extrapolation {
    /// `beta_k = 0`; pDCA_e becomes pDCA.
    Off,
    Fista {
        /// Reset `theta` every this many iterations.
        restart_every: Option<usize>,
        /// Reset when `<y^k - x^{k+1}, x^{k+1} - x^k> > 0`.
        adaptive: bool,
    },
}

impl Default for Extrapolation {
    fn default() -> Self {
        Extrapolation::Fista {
            restart_every: Some(200),
            adaptive: true,
        }
    }
}
