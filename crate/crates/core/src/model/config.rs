use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions, link parameters and SEE weights of one downlink instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    pub n_bs: usize,
    pub n_u: usize,
    pub k_users: usize,
    pub n_ris: usize,
    /// Columns of each precoder.
    pub d_streams: usize,
    /// Codeword length in channel uses. `f64::INFINITY` removes the
    /// dispersion penalty.
    pub n_block: f64,
    pub epsilon: f64,
    pub sigma2: f64,
    /// Transmit power budget (linear, same unit as the static powers).
    pub p_budget: f64,
    /// Inverse amplifier efficiency.
    pub eta: f64,
    /// Per-user SE weights; `1 - alpha` weights the EE.
    pub alpha: Vec<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_bs: 4,
            n_u: 4,
            k_users: 2,
            n_ris: 20,
            d_streams: 4,
            n_block: 256.0,
            epsilon: 1e-5,
            sigma2: 1.0,
            p_budget: 10.0,
            eta: 2.5,
            alpha: vec![0.5; 2],
        }
    }
}

impl SystemConfig {
    /// Converts a budget given as `10 log10(P / sigma2)`.
    pub fn p_from_db(db: f64, sigma2: f64) -> f64 {
        sigma2 * 10f64.powf(db / 10.0)
    }

    /// Sets the same weight for every user.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = vec![alpha; self.k_users];
        self
    }

    /// Sets `n_bs = n_u = d_streams = streams`.
    pub fn with_streams(mut self, streams: usize) -> Self {
        self.n_bs = streams;
        self.n_u = streams;
        self.d_streams = streams;
        self
    }

    pub fn alpha_k(&self, k: usize) -> f64 {
        self.alpha[k]
    }

    /// `Q^{-1}(eps) / sqrt(n)`.
    pub fn dispersion_factor(&self) -> f64 {
        if self.n_block.is_infinite() {
            return 0.0;
        }
        super::inv_q(self.epsilon).unwrap_or(0.0) / self.n_block.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_bs == 0 || self.n_u == 0 || self.k_users == 0 || self.n_ris == 0 {
            return bad("antenna, user and RIS counts must be at least 1".into());
        }
        if self.d_streams == 0 || self.d_streams > self.n_bs.min(self.n_u) {
            return bad(format!(
                "d_streams = {} must lie in 1..=min(n_bs, n_u) = {}",
                self.d_streams,
                self.n_bs.min(self.n_u)
            ));
        }
        if !(self.n_block >= 1.0) {
            return bad(format!("n_block = {} must be at least 1", self.n_block));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("epsilon = {} must lie in (0, 0.5)", self.epsilon));
        }
        if !(self.sigma2 > 0.0) {
            return bad(format!("sigma2 = {} must be positive", self.sigma2));
        }
        if !(self.p_budget > 0.0) {
            return bad(format!("p_budget = {} must be positive", self.p_budget));
        }
        if !(self.eta >= 1.0) {
            return bad(format!("eta = {} must be at least 1", self.eta));
        }
        if self.alpha.len() != self.k_users {
            return bad(format!(
                "expected {} alpha weights, got {}",
                self.k_users,
                self.alpha.len()
            ));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("alpha = {a} outside [0, 1]"));
        }
        Ok(())
    }
}

/// Static power model, all values in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    /// Per-user share of BS and UE static power.
    pub p_t: f64,
    pub p_ris0_d: f64,
    /// Per-element power of a diagonal RIS.
    pub p_ris_n_d: f64,
    pub p_ris0_bd: f64,
    /// Per-circuit power of a fully-connected BD-RIS.
    pub p_ris_n_bd: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_t: 2.5,
            p_ris0_d: 0.0,
            p_ris_n_d: 0.02,
            p_ris0_bd: 0.0,
            p_ris_n_bd: 0.02,
        }
    }
}

impl PowerModel {
    /// Same per-element and per-circuit power for both families.
    pub fn with_element_power(mut self, watts: f64) -> Self {
        self.p_ris_n_d = watts;
        self.p_ris_n_bd = watts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p_t, self.p_ris0_d, self.p_ris_n_d, self.p_ris0_bd, self.p_ris_n_bd];
        if all.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidConfig("power model entries must be non-negative".into()));
        }
        Ok(())
    }
}

/// RIS architecture: two baselines plus the four optimised variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Direct link only.
    NoRis,
    /// Locally passive diagonal RIS with random, fixed phases.
    RandD,
    LnpD,
    LnpBd,
    GnpD,
    GnpBd,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::NoRis,
        Architecture::RandD,
        Architecture::LnpD,
        Architecture::LnpBd,
        Architecture::GnpD,
        Architecture::GnpBd,
    ];

    pub const OPTIMIZED: [Architecture; 4] = [
        Architecture::LnpD,
        Architecture::LnpBd,
        Architecture::GnpD,
        Architecture::GnpBd,
    ];

    pub fn has_ris(self) -> bool {
        self != Architecture::NoRis
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Architecture::RandD | Architecture::LnpD | Architecture::GnpD)
    }

    pub fn is_bd(self) -> bool {
        matches!(self, Architecture::LnpBd | Architecture::GnpBd)
    }

    pub fn is_gnp(self) -> bool {
        matches!(self, Architecture::GnpD | Architecture::GnpBd)
    }

    /// Whether the scattering matrix is an optimisation variable.
    pub fn optimizes_phi(self) -> bool {
        !matches!(self, Architecture::NoRis | Architecture::RandD)
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::NoRis => "no-ris",
            Architecture::RandD => "rand-d",
            Architecture::LnpD => "lnp-d",
            Architecture::LnpBd => "lnp-bd",
            Architecture::GnpD => "gnp-d",
            Architecture::GnpBd => "gnp-bd",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown architecture '{s}'")))
    }
}
