//! Flat key-value run configuration.
//!
//! Every key is optional and defaults to the canonical case. Precedence is
//! file, then the `SFC_LAB_SEED` / `SFC_LAB_OUT` environment variables, then
//! command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfc_core::analytics::OptionSpec;
use sfc_core::binomial::TreeParams;
use sfc_core::hedge::{HedgeConfig, HedgeMode, TradeTiming};
use sfc_core::market::{GbmParams, TimeGrid};

use crate::error::LabError;

pub const ENV_SEED: &str = "SFC_LAB_SEED";
pub const ENV_OUT: &str = "SFC_LAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKey {
    Budget,
    Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimingKey {
    Node,
    Lagged,
}

/// Stock holding rule for the increment and ex-ante experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaKey {
    Delta,
    /// `alpha = alpha_constant`
    Constant,
    /// `alpha = alpha_constant + t`
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Worker threads; 0 lets rayon choose.
    pub threads: usize,
    pub format: Format,
    pub out: PathBuf,

    pub x0: f64,
    pub strike: f64,
    pub maturity: f64,
    pub r: f64,
    pub sigma: f64,
    pub mu: f64,
    pub t0: f64,

    pub n_paths: usize,
    pub n_steps: usize,
    pub mode: ModeKey,
    pub timing: TimingKey,
    pub terminal_tau: f64,
    pub include_bond_cross: bool,
    pub scan_steps: Vec<usize>,

    pub theta_tau: f64,
    pub theta_eps: f64,
    pub theta_tol: f64,

    pub alpha_rule: AlphaKey,
    pub alpha_constant: f64,
    pub dt: f64,
    pub n_inner: usize,

    pub t1: f64,
    pub x1: f64,
    pub conditional_steps: usize,
    pub resamples: usize,
    pub refine_steps: Vec<usize>,

    pub crr_steps: Vec<usize>,
    pub tree_s: f64,
    pub tree_strike: f64,
    pub tree_u: f64,
    pub tree_d: f64,
    pub tree_r_star: f64,
    pub price_bump: f64,
    pub lattice_steps: usize,

    pub dump_paths: bool,
    pub dump_ledger: bool,
    pub dump_limit: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            threads: 0,
            format: Format::Csv,
            out: PathBuf::from("out"),
            x0: 100.0,
            strike: 100.0,
            maturity: 1.0,
            r: 0.05,
            sigma: 0.2,
            mu: 0.10,
            t0: 0.0,
            n_paths: 10_000,
            n_steps: 1024,
            mode: ModeKey::Formula,
            timing: TimingKey::Node,
            terminal_tau: 0.0,
            include_bond_cross: true,
            scan_steps: (4..=14).map(|e| 1usize << e).collect(),
            theta_tau: 1e-8,
            theta_eps: 0.5,
            theta_tol: 1e-6,
            alpha_rule: AlphaKey::Delta,
            alpha_constant: 0.5,
            dt: 1e-4,
            n_inner: 1_000_000,
            t1: 0.5,
            x1: 100.0,
            conditional_steps: 1 << 14,
            resamples: 200,
            refine_steps: (6..=12).map(|e| 1usize << e).collect(),
            crr_steps: (4..=12).map(|e| 1usize << e).collect(),
            tree_s: 100.0,
            tree_strike: 100.0,
            tree_u: 1.1,
            tree_d: 0.9,
            tree_r_star: 1.05,
            price_bump: 0.01,
            lattice_steps: 64,
            dump_paths: false,
            dump_ledger: false,
            dump_limit: 10,
        }
    }
}

fn bad(key: &str, reason: &str) -> LabError {
    LabError::Config(format!("{key}: {reason}"))
}

fn core_bad(e: sfc_core::Error) -> LabError {
    LabError::Config(e.to_string())
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(format!("cannot parse config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `SFC_LAB_SEED` and `SFC_LAB_OUT` read through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), LabError> {
        if let Some(v) = lookup(ENV_SEED) {
            self.seed = v.trim().parse().map_err(|_| bad(ENV_SEED, "must be an unsigned 64-bit integer"))?;
        }
        if let Some(v) = lookup(ENV_OUT) {
            self.out = PathBuf::from(v);
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn market(&self) -> Result<GbmParams, LabError> {
        GbmParams::new(self.x0, self.mu, self.sigma, self.r).map_err(core_bad)
    }

    pub fn option(&self) -> Result<OptionSpec, LabError> {
        OptionSpec::new(self.strike, self.maturity, self.r, self.sigma).map_err(core_bad)
    }

    pub fn grid(&self, n_steps: usize) -> Result<TimeGrid, LabError> {
        TimeGrid::new(self.t0, self.maturity, n_steps).map_err(core_bad)
    }

    pub fn hedge(&self) -> HedgeConfig {
        HedgeConfig {
            mode: match self.mode {
                ModeKey::Budget => HedgeMode::BudgetSolved,
                ModeKey::Formula => HedgeMode::FormulaPrescribed,
            },
            timing: match self.timing {
                TimingKey::Node => TradeTiming::Node,
                TimingKey::Lagged => TradeTiming::Lagged,
            },
            terminal_tau: self.terminal_tau,
        }
    }

    pub fn one_step_tree(&self) -> Result<TreeParams, LabError> {
        TreeParams::new(self.tree_s, self.tree_u, self.tree_d, self.tree_r_star, 1).map_err(core_bad)
    }

    /// Checks every sub-configuration; messages name the violated invariant.
    pub fn validate(&self) -> Result<(), LabError> {
        self.market()?;
        self.option()?;
        self.grid(self.n_steps)?;
        if self.t0 >= self.maturity {
            return Err(bad("t0", "must be < maturity"));
        }
        if self.n_paths == 0 {
            return Err(bad("n_paths", "must be >= 1"));
        }
        if !(self.terminal_tau >= 0.0 && self.terminal_tau < self.maturity - self.t0) {
            return Err(bad("terminal_tau", "must lie in [0, maturity - t0)"));
        }
        if !(self.theta_tau > 0.0) || !(self.theta_eps >= 0.0) || !(self.theta_tol > 0.0) {
            return Err(bad("theta_tau/theta_eps/theta_tol", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(bad("dt", "must be > 0"));
        }
        if self.n_inner < sfc_core::hedge::MIN_INNER_SAMPLES {
            return Err(bad("n_inner", "must be >= 1000"));
        }
        if !(self.t1 > self.t0 && self.t1 < self.maturity) {
            return Err(bad("t1", "must lie strictly between t0 and maturity"));
        }
        if !(self.x1 > 0.0) {
            return Err(bad("x1", "must be > 0"));
        }
        if self.conditional_steps == 0 {
            return Err(bad("conditional_steps", "must be >= 1"));
        }
        if self.resamples < sfc_core::decompose::MIN_BOOTSTRAP_RESAMPLES {
            return Err(bad("resamples", "must be >= 200"));
        }
        for (key, list) in [("scan_steps", &self.scan_steps), ("refine_steps", &self.refine_steps), ("crr_steps", &self.crr_steps)] {
            if list.len() < 2 || list.windows(2).any(|w| w[1] <= w[0]) || list[0] < 2 {
                return Err(bad(key, "needs at least two strictly increasing values >= 2"));
            }
        }
        self.one_step_tree()?;
        if !(self.tree_strike > 0.0) {
            return Err(bad("tree_strike", "must be > 0"));
        }
        if !self.price_bump.is_finite() {
            return Err(bad("price_bump", "must be finite"));
        }
        if self.lattice_steps == 0 {
            return Err(bad("lattice_steps", "must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_canonical_defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!((c.x0, c.strike, c.r, c.sigma, c.mu, c.maturity), (100.0, 100.0, 0.05, 0.2, 0.1, 1.0));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Config::from_toml("volatility = 0.3"), Err(LabError::Config(_))));
    }

    #[test]
    fn nonpositive_sigma_names_the_invariant() {
        let c = Config::from_toml("sigma = -0.1").unwrap();
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn env_overrides_seed_and_out_only() {
        let mut c = Config::from_toml("seed = 1\nsigma = 0.3").unwrap();
        c.apply_env(|k| match k {
            ENV_SEED => Some("77".into()),
            ENV_OUT => Some("/tmp/x".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.seed, 77);
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
        assert_eq!(c.sigma, 0.3);
        assert!(c.apply_env(|_| Some("nope".into())).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = Config {
            mode: ModeKey::Budget,
            scan_steps: vec![8, 16],
            ..Config::default()
        };
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }
}
