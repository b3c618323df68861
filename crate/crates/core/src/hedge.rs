//! Discretely rebalanced replicating portfolios.
//!
//! Holdings `(alpha[i], beta[i])` are chosen at node `i` from the prices at
//! node `i` and held over `[t_i, t_{i+1}]`. The per-step self-financing
//! residual recorded at node `i >= 1` is the cost of the trade made there,
//!
//! ```text
//! da x[i-1] + da dx + dbeta b[i-1] + dbeta db,   da = alpha[i] - alpha[i-1], dx = x[i] - x[i-1]
//! ```
//!
//! which telescopes into the exact accounting identity
//! `dv = alpha[i-1] dx + beta[i-1] db + residual[i]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::analytics::{bs_price, greeks, holdings, terminal_holdings, OptionSpec};
use crate::error::{finite, Error, Result};
use crate::exec;
use crate::market::{GbmParams, PathGenerator, PathSet, TimeGrid};
use crate::math::sqrt;
use crate::stats::{Estimate, Moments};

/// How the bond holding is set at each rebalancing node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HedgeMode {
    /// `alpha` from delta, `beta` solved so that each trade costs nothing.
    BudgetSolved,
    /// `alpha = N(d1)` and `beta = -N(d2)` read from the closed form.
    FormulaPrescribed,
}

/// Which prices a rebalancing trade settles at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TradeTiming {
    /// Trades at node `i` settle at the prices of node `i`.
    #[default]
    Node,
    /// Trades at node `i` settle at the prices of node `i - 1`.
    Lagged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeConfig {
    pub mode: HedgeMode,
    pub timing: TradeTiming,
    /// When positive, terminal holdings are the closed form evaluated this
    /// long before maturity instead of the payoff indicators.
    pub terminal_tau: f64,
}

impl HedgeConfig {
    pub fn new(mode: HedgeMode) -> Self {
        Self {
            mode,
            timing: TradeTiming::Node,
            terminal_tau: 0.0,
        }
    }
}

/// Per-node accounting of one hedged path. Every series has one entry per
/// grid node; trades and residuals at node 0 are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLedger {
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub v: Vec<f64>,
    pub trade_alpha: Vec<f64>,
    pub trade_beta: Vec<f64>,
    /// Settlement cost of the trade at each node under the run's timing.
    pub residual: Vec<f64>,
    pub payoff: f64,
    /// Residuals carried to maturity in bond units, `sum residual[i] b[n] / b[i]`.
    pub carried_residual: f64,
    /// `v[n] - carried_residual - payoff`: self-financed wealth against the payoff.
    pub tracking_error: f64,
}

impl PathLedger {
    pub fn n_steps(&self) -> usize {
        self.x.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeLedger {
    pub grid: TimeGrid,
    pub spec: OptionSpec,
    pub config: HedgeConfig,
    pub paths: Vec<PathLedger>,
}

fn check_alignment(grid: &TimeGrid, params: &GbmParams, spec: &OptionSpec) -> Result<()> {
    spec.validate()?;
    params.validate()?;
    if (grid.maturity() - spec.maturity).abs() > 1e-12 * spec.maturity.abs().max(1.0) {
        return Err(Error::GridMismatch("grid terminal time differs from option maturity"));
    }
    if params.r != spec.r {
        return Err(Error::GridMismatch("path rate differs from option rate"));
    }
    Ok(())
}

/// Formula holdings at node `i`, applying the terminal rule at the last node.
fn formula_holdings(x: f64, t: f64, is_last: bool, spec: &OptionSpec, config: &HedgeConfig) -> (f64, f64) {
    if is_last {
        if config.terminal_tau > 0.0 {
            holdings(x, spec.maturity - config.terminal_tau, spec)
                .unwrap_or_else(|_| terminal_holdings(x, spec))
        } else {
            terminal_holdings(x, spec)
        }
    } else {
        holdings(x, t, spec).unwrap_or((f64::NAN, f64::NAN))
    }
}

/// Self-financing cost of moving from one holding pair to the next.
#[inline]
pub fn sfc_term(da: f64, db_hold: f64, x_prev: f64, dx: f64, b_prev: f64, dbond: f64, bond_cross: bool) -> f64 {
    let mut r = da * x_prev + da * dx + db_hold * b_prev;
    if bond_cross {
        r += db_hold * dbond;
    }
    r
}

/// Hedges one price path. `prices` must have one entry per grid node.
pub fn hedge_path(prices: &[f64], grid: &TimeGrid, spec: &OptionSpec, config: &HedgeConfig) -> PathLedger {
    let n = grid.n_steps();
    assert_eq!(prices.len(), n + 1, "path length must match the grid");
    let times = grid.times();
    let b: Vec<f64> = times.iter().map(|&t| spec.bond(t)).collect();
    let mut alpha = vec![0.0; n + 1];
    let mut beta = vec![0.0; n + 1];
    for i in 0..=n {
        let (a, bh) = formula_holdings(prices[i], times[i], i == n, spec, config);
        alpha[i] = a;
        beta[i] = bh;
    }
    if config.mode == HedgeMode::BudgetSolved {
        for i in 1..=n {
            beta[i] = match config.timing {
                TradeTiming::Node => {
                    (alpha[i - 1] * prices[i] + beta[i - 1] * b[i] - alpha[i] * prices[i]) / b[i]
                }
                TradeTiming::Lagged => {
                    (alpha[i - 1] * prices[i - 1] + beta[i - 1] * b[i - 1] - alpha[i] * prices[i - 1])
                        / b[i - 1]
                }
            };
        }
    }
    let v: Vec<f64> = (0..=n).map(|i| alpha[i] * prices[i] + beta[i] * b[i]).collect();
    let mut trade_alpha = vec![0.0; n + 1];
    let mut trade_beta = vec![0.0; n + 1];
    let mut residual = vec![0.0; n + 1];
    let mut carried = 0.0;
    for i in 1..=n {
        let da = alpha[i] - alpha[i - 1];
        let dbh = beta[i] - beta[i - 1];
        trade_alpha[i] = da;
        trade_beta[i] = dbh;
        residual[i] = match config.timing {
            TradeTiming::Node => sfc_term(da, dbh, prices[i - 1], prices[i] - prices[i - 1], b[i - 1], b[i] - b[i - 1], true),
            TradeTiming::Lagged => da * prices[i - 1] + dbh * b[i - 1],
        };
        carried += residual[i] * (b[n] / b[i]);
    }
    let payoff = spec.payoff(prices[n]);
    PathLedger {
        tracking_error: v[n] - carried - payoff,
        x: prices.to_vec(),
        b,
        alpha,
        beta,
        v,
        trade_alpha,
        trade_beta,
        residual,
        payoff,
        carried_residual: carried,
    }
}

pub fn run_hedge(paths: &PathSet, spec: &OptionSpec, config: HedgeConfig) -> Result<HedgeLedger> {
    check_alignment(paths.grid(), paths.params(), spec)?;
    finite("terminal_tau", config.terminal_tau)?;
    let grid = paths.grid().clone();
    let ledgers = exec::map_indexed(paths.n_paths(), |p| hedge_path(paths.prices(p), &grid, spec, &config));
    Ok(HedgeLedger {
        grid,
        spec: *spec,
        config,
        paths: ledgers,
    })
}

/// Per-step self-financing residual recomputed from the holdings.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub per_step: Vec<f64>,
    pub cumulative: Vec<f64>,
}

pub fn sfc_residual_series(path: &PathLedger, include_bond_cross: bool) -> ResidualSeries {
    let n = path.n_steps();
    let mut per_step = vec![0.0; n + 1];
    let mut cumulative = vec![0.0; n + 1];
    for i in 1..=n {
        per_step[i] = sfc_term(
            path.alpha[i] - path.alpha[i - 1],
            path.beta[i] - path.beta[i - 1],
            path.x[i - 1],
            path.x[i] - path.x[i - 1],
            path.b[i - 1],
            path.b[i] - path.b[i - 1],
            include_bond_cross,
        );
        cumulative[i] = cumulative[i - 1] + per_step[i];
    }
    ResidualSeries { per_step, cumulative }
}

/// Largest `|dv - alpha dx - beta db - residual|` over the path, with the
/// full four-term residual.
pub fn accounting_violation(path: &PathLedger) -> f64 {
    let series = sfc_residual_series(path, true);
    (1..=path.n_steps())
        .map(|i| {
            let dv = path.v[i] - path.v[i - 1];
            let explained = path.alpha[i - 1] * (path.x[i] - path.x[i - 1])
                + path.beta[i - 1] * (path.b[i] - path.b[i - 1])
                + series.per_step[i];
            (dv - explained).abs()
        })
        .fold(0.0, f64::max)
}

/// `theta[i] = -(alpha[i] + beta[i])`.
pub fn theta_process(path: &PathLedger) -> Vec<f64> {
    path.alpha.iter().zip(&path.beta).map(|(a, b)| -(a + b)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaCheck {
    pub max_abs_terminal: f64,
    pub checked: usize,
    pub excluded: usize,
    pub passed: bool,
}

/// Terminal theta over paths whose terminal price is more than `eps` from
/// the strike.
pub fn terminal_theta_check(ledger: &HedgeLedger, eps: f64, tol: f64) -> ThetaCheck {
    let k = ledger.spec.strike;
    let terminals = ledger.paths.iter().map(|p| {
        let n = p.n_steps();
        (p.x[n], -(p.alpha[n] + p.beta[n]))
    });
    theta_check_from(terminals, k, eps, tol)
}

pub(crate) fn theta_check_from(
    terminals: impl Iterator<Item = (f64, f64)>,
    strike: f64,
    eps: f64,
    tol: f64,
) -> ThetaCheck {
    let mut max_abs = 0.0f64;
    let mut checked = 0;
    let mut excluded = 0;
    for (x_t, theta) in terminals {
        if (x_t - strike).abs() > eps {
            checked += 1;
            max_abs = max_abs.max(theta.abs());
        } else {
            excluded += 1;
        }
    }
    ThetaCheck {
        max_abs_terminal: max_abs,
        checked,
        excluded,
        passed: max_abs <= tol,
    }
}

/// Terminal theta `-(N(d1) - N(d2))` evaluated `tau_final` before maturity.
pub fn terminal_theta(x_t: f64, spec: &OptionSpec, tau_final: f64) -> Result<f64> {
    let (a, b) = holdings(x_t, spec.maturity - tau_final, spec)?;
    Ok(-(a + b))
}

/// Rule generating the stock holding.
#[derive(Clone, Copy)]
pub enum AlphaRule<'a> {
    /// `alpha = N(d1)`, with the payoff indicator at maturity.
    Delta,
    /// `alpha = f(t)`, independent of the price.
    Deterministic(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl core::fmt::Debug for AlphaRule<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            AlphaRule::Delta => f.write_str("Delta"),
            AlphaRule::Deterministic(_) => f.write_str("Deterministic(..)"),
        }
    }
}

impl AlphaRule<'_> {
    fn alpha(&self, x: f64, t: f64, spec: &OptionSpec) -> f64 {
        match self {
            AlphaRule::Delta => holdings(x, t, spec).map(|h| h.0).unwrap_or(f64::NAN),
            AlphaRule::Deterministic(f) => f(t),
        }
    }

    /// `d alpha / dx`
    fn sensitivity(&self, x: f64, t: f64, spec: &OptionSpec) -> f64 {
        match self {
            AlphaRule::Delta => greeks(x, t, spec).map(|g| g.w11).unwrap_or(0.0),
            AlphaRule::Deterministic(_) => 0.0,
        }
    }
}

/// Trade valued at the post-move price (`a`) against the pre-move price (`b`).
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementComparison {
    /// `a[i] = (alpha[i] - alpha[i-1]) x[i]` for `i = 1..=n`, stored at `i - 1`.
    pub post_move: Vec<f64>,
    /// `b[i] = (alpha[i] - alpha[i-1]) x[i-1]`.
    pub pre_move: Vec<f64>,
    /// `a[i] - b[i] = (alpha[i] - alpha[i-1]) (x[i] - x[i-1])`.
    pub difference: Vec<f64>,
    pub cumulative_difference: Vec<f64>,
    /// `sum sigma^2 x[i]^2 (d alpha / dx)(x[i], t[i]) dt` over `i < n`.
    pub compensator: f64,
}

pub fn merton_increment_comparison(
    prices: &[f64],
    grid: &TimeGrid,
    spec: &OptionSpec,
    rule: AlphaRule<'_>,
) -> Result<IncrementComparison> {
    spec.validate()?;
    let n = grid.n_steps();
    if prices.len() != n + 1 {
        return Err(Error::GridMismatch("path length differs from grid"));
    }
    let times = grid.times();
    let alpha: Vec<f64> = (0..=n).map(|i| rule.alpha(prices[i], times[i], spec)).collect();
    let mut post_move = Vec::with_capacity(n);
    let mut pre_move = Vec::with_capacity(n);
    let mut difference = Vec::with_capacity(n);
    let mut cumulative_difference = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 1..=n {
        let da = alpha[i] - alpha[i - 1];
        let a = da * prices[i];
        let b = da * prices[i - 1];
        let d = da * (prices[i] - prices[i - 1]);
        acc += d;
        post_move.push(a);
        pre_move.push(b);
        difference.push(d);
        cumulative_difference.push(acc);
    }
    let sig2 = spec.sigma * spec.sigma;
    let compensator = (0..n)
        .map(|i| sig2 * prices[i] * prices[i] * rule.sensitivity(prices[i], times[i], spec) * grid.dt())
        .sum();
    Ok(IncrementComparison {
        post_move,
        pre_move,
        difference,
        cumulative_difference,
        compensator,
    })
}

/// One-step conditional expectations from a fixed state `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExAnteEstimate {
    /// `E[da x + da dx + dbeta b + dbeta db | F_t]`
    pub residual: Estimate,
    /// `E[da dx | F_t] / dt`
    pub cross_over_dt: Estimate,
    /// `(d alpha / dx) sigma^2 x^2`, the limit of `cross_over_dt`.
    pub compensator: f64,
    pub n_inner: usize,
}

pub const MIN_INNER_SAMPLES: usize = 1000;

#[allow(clippy::too_many_arguments)]
pub fn ex_ante_residual(
    x: f64,
    t: f64,
    spec: &OptionSpec,
    mu: f64,
    dt: f64,
    n_inner: usize,
    seed: u64,
    rule: AlphaRule<'_>,
) -> Result<ExAnteEstimate> {
    spec.validate()?;
    finite("dt", dt)?;
    if dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be > 0",
        });
    }
    if !(t + dt < spec.maturity) {
        return Err(Error::AtOrAfterExpiry {
            t: t + dt,
            maturity: spec.maturity,
        });
    }
    if n_inner < MIN_INNER_SAMPLES {
        return Err(Error::InvalidParameter {
            name: "n_inner",
            reason: "must be >= 1000",
        });
    }
    let params = GbmParams::new(x, mu, spec.sigma, spec.r)?;
    let grid = TimeGrid::new(t, t + dt, 1)?;
    let generator = PathGenerator::new(params, grid, seed)?;
    let (alpha0, beta0) = holdings(x, t, spec)?;
    let alpha0 = match rule {
        AlphaRule::Delta => alpha0,
        AlphaRule::Deterministic(f) => f(t),
    };
    let b0 = spec.bond(t);
    let b1 = spec.bond(t + dt);
    let t1 = t + dt;
    let samples = exec::map_indexed(n_inner, |p| {
        let x1 = generator.terminal(p);
        let (a1, beta1) = holdings(x1, t1, spec).unwrap_or((f64::NAN, f64::NAN));
        let a1 = match rule {
            AlphaRule::Delta => a1,
            AlphaRule::Deterministic(f) => f(t1),
        };
        let da = a1 - alpha0;
        let dbh = beta1 - beta0;
        let dx = x1 - x;
        (sfc_term(da, dbh, x, dx, b0, b1 - b0, true), da * dx / dt)
    });
    let mut res = Moments::new();
    let mut cross = Moments::new();
    for (r, c) in samples {
        res.push(r);
        cross.push(c);
    }
    let sens = rule.sensitivity(x, t, spec);
    Ok(ExAnteEstimate {
        residual: Estimate::new(res.mean(), res.std_error()),
        cross_over_dt: Estimate::new(cross.mean(), cross.std_error()),
        compensator: sens * spec.sigma * spec.sigma * x * x,
        n_inner,
    })
}

/// Two-step replication identity on a budget-solved path.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepIdentity {
    /// Largest `|v[i+1] - RHS|` over interior nodes.
    pub max_violation: f64,
    /// `(alpha[i] - alpha[i-1]) (x[i+1] - x[i])` for `i = 1..n`.
    pub stock_cross: Vec<f64>,
    /// `(beta[i] - beta[i-1]) (b[i+1] - b[i])`.
    pub bond_cross: Vec<f64>,
}

/// Checks `v[i+1] = alpha[i-1] x[i+1] + beta[i-1] b[i+1] + da[i-1] dx[i] + dbeta[i-1] db[i]`.
pub fn two_step_identity(path: &PathLedger, mode: HedgeMode) -> Result<TwoStepIdentity> {
    if mode != HedgeMode::BudgetSolved {
        return Err(Error::InvalidParameter {
            name: "mode",
            reason: "two-step identity needs a budget-solved ledger",
        });
    }
    let n = path.n_steps();
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: "two-step identity needs at least 2 steps",
        });
    }
    let mut max_violation = 0.0f64;
    let mut stock_cross = Vec::with_capacity(n - 1);
    let mut bond_cross = Vec::with_capacity(n - 1);
    for i in 1..n {
        let sc = (path.alpha[i] - path.alpha[i - 1]) * (path.x[i + 1] - path.x[i]);
        let bc = (path.beta[i] - path.beta[i - 1]) * (path.b[i + 1] - path.b[i]);
        let rhs = path.alpha[i - 1] * path.x[i + 1] + path.beta[i - 1] * path.b[i + 1] + sc + bc;
        max_violation = max_violation.max((path.v[i + 1] - rhs).abs());
        stock_cross.push(sc);
        bond_cross.push(bc);
    }
    Ok(TwoStepIdentity {
        max_violation,
        stock_cross,
        bond_cross,
    })
}

/// Scalar diagnostics of one hedged path, for ensembles too large to keep
/// their ledgers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub x_terminal: f64,
    pub v_terminal: f64,
    pub payoff: f64,
    pub tracking_error: f64,
    pub carried_residual: f64,
    pub cumulative_residual: f64,
    pub max_abs_residual: f64,
    pub residual_sum: f64,
    pub residual_sum_sq: f64,
    pub accounting_violation: f64,
    pub two_step_violation: f64,
    pub cross_sum_sq: f64,
    pub theta_terminal: f64,
}

pub fn summarize_path(path: &PathLedger, mode: HedgeMode) -> PathSummary {
    let n = path.n_steps();
    let steps = &path.residual[1..];
    let two = two_step_identity(path, mode).ok();
    PathSummary {
        x_terminal: path.x[n],
        v_terminal: path.v[n],
        payoff: path.payoff,
        tracking_error: path.tracking_error,
        carried_residual: path.carried_residual,
        cumulative_residual: steps.iter().sum(),
        max_abs_residual: steps.iter().fold(0.0, |m, r| m.max(r.abs())),
        residual_sum: steps.iter().sum(),
        residual_sum_sq: steps.iter().map(|r| r * r).sum(),
        accounting_violation: accounting_violation(path),
        two_step_violation: two.as_ref().map_or(f64::NAN, |t| t.max_violation),
        cross_sum_sq: two
            .as_ref()
            .map_or(f64::NAN, |t| t.stock_cross.iter().map(|c| c * c).sum()),
        theta_terminal: -(path.alpha[n] + path.beta[n]),
    }
}

/// Aggregate of [`PathSummary`] values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub n_paths: usize,
    pub n_steps: usize,
    pub initial_value: f64,
    /// Root mean square tracking error with the standard error of the mean square.
    pub rms_tracking_error: f64,
    pub rms_tracking_error_se: f64,
    pub mean_tracking_error: Estimate,
    pub mean_step_residual: Estimate,
    pub rms_step_residual: f64,
    pub max_abs_residual: f64,
    pub max_accounting_violation: f64,
    pub max_two_step_violation: f64,
    pub rms_cross_term: f64,
    pub max_abs_terminal_theta: f64,
}

pub fn summarize_ensemble(summaries: &[PathSummary], n_steps: usize, initial_value: f64) -> EnsembleSummary {
    let n = summaries.len();
    let mut te = Moments::new();
    let mut te_sq = Moments::new();
    let mut step_mean = Moments::new();
    let mut sum_sq = 0.0;
    let mut cross_sq = 0.0;
    let mut max_res = 0.0f64;
    let mut max_acc = 0.0f64;
    let mut max_two = 0.0f64;
    let mut max_theta = 0.0f64;
    for s in summaries {
        te.push(s.tracking_error);
        te_sq.push(s.tracking_error * s.tracking_error);
        step_mean.push(s.residual_sum / n_steps as f64);
        sum_sq += s.residual_sum_sq;
        cross_sq += s.cross_sum_sq;
        max_res = max_res.max(s.max_abs_residual);
        max_acc = max_acc.max(s.accounting_violation);
        if s.two_step_violation.is_finite() {
            max_two = max_two.max(s.two_step_violation);
        }
        max_theta = max_theta.max(s.theta_terminal.abs());
    }
    let rms = sqrt(te_sq.mean());
    // delta method on sqrt of the mean square
    let rms_se = if rms > 0.0 { te_sq.std_error() / (2.0 * rms) } else { 0.0 };
    let interior = n_steps.saturating_sub(1).max(1);
    EnsembleSummary {
        n_paths: n,
        n_steps,
        initial_value,
        rms_tracking_error: rms,
        rms_tracking_error_se: rms_se,
        mean_tracking_error: Estimate::new(te.mean(), te.std_error()),
        mean_step_residual: Estimate::new(step_mean.mean(), step_mean.std_error()),
        rms_step_residual: sqrt(sum_sq / (n * n_steps) as f64),
        max_abs_residual: max_res,
        max_accounting_violation: max_acc,
        max_two_step_violation: max_two,
        rms_cross_term: if cross_sq.is_finite() {
            sqrt(cross_sq / (n * interior) as f64)
        } else {
            f64::NAN
        },
        max_abs_terminal_theta: max_theta,
    }
}

/// Hedges `n_paths` generated paths without retaining their ledgers.
pub fn hedge_ensemble(
    generator: &PathGenerator,
    n_paths: usize,
    spec: &OptionSpec,
    config: HedgeConfig,
) -> Result<(Vec<PathSummary>, EnsembleSummary)> {
    check_alignment(generator.grid(), generator.params(), spec)?;
    let grid = generator.grid();
    let summaries = exec::map_indexed_init(
        n_paths,
        || generator.buffers(),
        |buf, p| {
            generator.fill(p, &mut buf.prices, &mut buf.wiener);
            let ledger = hedge_path(&buf.prices, grid, spec, &config);
            summarize_path(&ledger, config.mode)
        },
    );
    let v0 = bs_price(generator.params().x0, grid.t0(), spec)?;
    let agg = summarize_ensemble(&summaries, grid.n_steps(), v0);
    Ok((summaries, agg))
}

/// Draws a terminal price directly and evaluates its theta `tau_final`
/// before maturity, for the terminal-theta property at ensemble scale.
pub fn terminal_theta_ensemble(
    params: GbmParams,
    spec: &OptionSpec,
    t0: f64,
    n_paths: usize,
    seed: u64,
    tau_final: f64,
    eps: f64,
    tol: f64,
) -> Result<ThetaCheck> {
    let grid = TimeGrid::new(t0, spec.maturity, 1)?;
    let generator = PathGenerator::new(params, grid, seed)?;
    let pairs = exec::map_indexed(n_paths, |p| {
        let x_t = generator.terminal(p);
        (x_t, terminal_theta(x_t, spec, tau_final).unwrap_or(f64::NAN))
    });
    Ok(theta_check_from(pairs.into_iter(), spec.strike, eps, tol))
}

/// Plain Monte Carlo estimate of `E[g(x_T)]` over `n_paths` terminal draws.
pub fn terminal_expectation(
    params: GbmParams,
    t0: f64,
    maturity: f64,
    n_paths: usize,
    seed: u64,
    g: impl Fn(f64) -> f64 + Sync + Send,
) -> Result<Estimate> {
    let grid = TimeGrid::new(t0, maturity, 1)?;
    let generator = PathGenerator::new(params, grid, seed)?;
    let values = exec::map_indexed(n_paths, |p| g(generator.terminal(p)));
    Ok(Estimate::of_mean(&values))
}
