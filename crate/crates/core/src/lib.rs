//! Numerical laboratory for the continuous-time self-financing condition.
//!
//! The crate is `no_std` with `alloc`. It covers:
//!
//! * [`market`]: log-exact geometric Brownian motion paths with per-path
//!   counter-based random streams, plus realized quadratic variation.
//! * [`analytics`]: closed-form Black-Scholes call value, the partial
//!   derivatives up to speed and charm, the replication identities, the
//!   pricing PDE residual and the physical-measure expected payoff.
//! * [`hedge`]: discretely rebalanced replicating portfolios and every
//!   discrete-time residual computed from them.
//! * [`decompose`]: the drift / diffusion split of the holding process
//!   (`kappa`, `lambda`, `theta`) and ensemble statistics of its integrals.
//! * [`binomial`]: Cox-Ross-Rubinstein lattices and the beta relations.
//! * [`stats`]: estimators with standard errors, bootstrap resampling and
//!   log-log slope fits.
//!
//! With the `parallel` feature, ensemble loops run on rayon. Results do not
//! depend on the number of threads because every path owns its random stream.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytics;
pub mod binomial;
pub mod decompose;
pub mod error;
pub mod hedge;
pub mod market;
pub mod math;
pub mod stats;

mod exec;

pub use analytics::{Greeks, OptionSpec};
pub use binomial::{MarketTree, TreeParams};
pub use decompose::DecompositionSeries;
pub use error::{Error, Result};
pub use hedge::{HedgeConfig, HedgeLedger, HedgeMode, TradeTiming};
pub use market::{GbmParams, PathSet, TimeGrid};
