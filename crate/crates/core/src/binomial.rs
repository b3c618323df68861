//! Cox-Ross-Rubinstein lattices.
//!
//! The one-period rule `C = [p C_u + (1 - p) C_d] / r*` with
//! `p = (r* - d) / (u - d)` is applied by backward induction on a single
//! array. [`beta_relation_check`] reads the same rule from the single-factor
//! return relations: the ratio `C beta_C / (S beta_S)` solved from the up
//! state and from the down state agree exactly when `C` satisfies it.

use alloc::vec::Vec;

use crate::analytics::{bs_price, OptionSpec};
use crate::error::{positive, Error, Result};
use crate::math::{exp, sqrt};
use crate::stats::{log_log_fit, LineFit};

/// One-period lattice: spot `s`, factors `u`, `d`, gross riskless return
/// `r_star`, and the number of periods used when the lattice is iterated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub s: f64,
    pub u: f64,
    pub d: f64,
    pub r_star: f64,
    pub n: usize,
}

impl TreeParams {
    pub fn new(s: f64, u: f64, d: f64, r_star: f64, n: usize) -> Result<Self> {
        let p = Self { s, u, d, r_star, n };
        p.validate()?;
        Ok(p)
    }

    /// Standard calibration `u = exp(sigma sqrt dt)`, `d = 1 / u`,
    /// `r* = exp(r dt)` with `dt = (T - t0) / n`.
    pub fn calibrated(spec: &OptionSpec, s: f64, t0: f64, n: usize) -> Result<Self> {
        spec.validate()?;
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "must be >= 1",
            });
        }
        if spec.maturity <= t0 {
            return Err(Error::AtOrAfterExpiry {
                t: t0,
                maturity: spec.maturity,
            });
        }
        let dt = (spec.maturity - t0) / n as f64;
        let u = exp(spec.sigma * sqrt(dt));
        Self::new(s, u, 1.0 / u, exp(spec.r * dt), n)
    }

    pub fn validate(&self) -> Result<()> {
        positive("s", self.s)?;
        if !(self.u > self.r_star && self.r_star > self.d && self.d > 0.0) || !self.u.is_finite() {
            return Err(Error::Arbitrage {
                u: self.u,
                r_star: self.r_star,
                d: self.d,
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    /// Risk-neutral up probability.
    pub fn p(&self) -> f64 {
        (self.r_star - self.d) / (self.u - self.d)
    }
}

/// Market portfolio level now and at the two end-of-period states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketTree {
    pub m: f64,
    pub m_up: f64,
    pub m_down: f64,
}

impl MarketTree {
    /// The stock as its own market proxy: `(m_up / m, m_down / m) = (u, d)`.
    pub fn stock_proxy(tree: &TreeParams) -> Self {
        Self {
            m: 1.0,
            m_up: tree.u,
            m_down: tree.d,
        }
    }

    pub fn validate(&self, tree: &TreeParams) -> Result<()> {
        positive("m", self.m)?;
        positive("m_down", self.m_down)?;
        if !(self.m_up > self.m_down) {
            return Err(Error::InvalidParameter {
                name: "m_up",
                reason: "must exceed m_down",
            });
        }
        if !(self.m_up / self.m > tree.r_star && tree.r_star > self.m_down / self.m) {
            return Err(Error::InvalidParameter {
                name: "market",
                reason: "market returns must straddle r*",
            });
        }
        Ok(())
    }
}

/// One backward step of the difference equation.
pub fn crr_step(c_up: f64, c_down: f64, tree: &TreeParams) -> Result<f64> {
    tree.validate()?;
    Ok(step(c_up, c_down, tree))
}

#[inline]
fn step(c_up: f64, c_down: f64, tree: &TreeParams) -> f64 {
    let width = tree.u - tree.d;
    (((tree.r_star - tree.d) / width) * c_up + ((tree.u - tree.r_star) / width) * c_down) / tree.r_star
}

/// European call of strike `strike` on an arbitrary lattice.
pub fn crr_price_on(tree: &TreeParams, strike: f64) -> Result<f64> {
    tree.validate()?;
    positive("strike", strike)?;
    let n = tree.n;
    // node j of level n has j up moves
    let mut values: Vec<f64> = (0..=n)
        .map(|j| {
            let st = tree.s * libm::pow(tree.u, j as f64) * libm::pow(tree.d, (n - j) as f64);
            (st - strike).max(0.0)
        })
        .collect();
    for level in (0..n).rev() {
        for j in 0..=level {
            values[j] = step(values[j + 1], values[j], tree);
        }
    }
    Ok(values[0])
}

/// Call value on the calibrated `n`-period lattice from `t0` to maturity.
pub fn crr_price(spec: &OptionSpec, x0: f64, t0: f64, n: usize) -> Result<f64> {
    let tree = TreeParams::calibrated(spec, x0, t0, n)?;
    crr_price_on(&tree, spec.strike)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub crr_price: f64,
    pub bs_price: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// `ln |error|` against `ln n`.
    pub fit: LineFit,
}

pub fn convergence_study(spec: &OptionSpec, x0: f64, t0: f64, n_list: &[usize]) -> Result<ConvergenceStudy> {
    if n_list.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "n_list",
            reason: "needs at least two lattice sizes",
        });
    }
    if n_list.iter().any(|&n| n < 2) || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "n_list",
            reason: "must be strictly increasing with every n >= 2",
        });
    }
    let reference = bs_price(x0, t0, spec)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let c = crr_price(spec, x0, t0, n)?;
        rows.push(ConvergenceRow {
            n,
            crr_price: c,
            bs_price: reference,
            abs_error: (c - reference).abs(),
        });
    }
    if rows.iter().any(|r| r.abs_error == 0.0) {
        return Err(Error::Degenerate("zero lattice error, slope undefined"));
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
    Ok(ConvergenceStudy {
        fit: log_log_fit(&ns, &errs),
        rows,
    })
}

/// Outcome of solving the single-factor relations state by state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRelation {
    /// `C beta_C / (S beta_S)` from the up state.
    pub rho_up: f64,
    /// The same ratio from the down state.
    pub rho_down: f64,
    /// `rho_up - rho_down`
    pub gap: f64,
    /// The price that makes both ratios agree.
    pub implied_c: f64,
    /// `C - implied_c`
    pub price_gap: f64,
    /// Stock and option exposures to the market portfolio.
    pub beta_s: f64,
    pub beta_c: f64,
}

pub fn beta_relation_check(
    tree: &TreeParams,
    market: &MarketTree,
    c_up: f64,
    c_down: f64,
    c: f64,
) -> Result<BetaRelation> {
    tree.validate()?;
    market.validate(tree)?;
    let s = tree.s;
    let up_excess = tree.u * s - s * tree.r_star;
    let down_excess = tree.d * s - s * tree.r_star;
    if up_excess == 0.0 || down_excess == 0.0 {
        return Err(Error::Degenerate("stock state return equals r*"));
    }
    let rho_up = (c_up - c * tree.r_star) / up_excess;
    let rho_down = (c_down - c * tree.r_star) / down_excess;
    let implied_c = step(c_up, c_down, tree);
    let market_up = market.m_up / market.m - tree.r_star;
    let beta_s = (tree.u - tree.r_star) / market_up;
    let beta_c = if c != 0.0 { rho_up * s * beta_s / c } else { f64::NAN };
    Ok(BetaRelation {
        rho_up,
        rho_down,
        gap: rho_up - rho_down,
        implied_c,
        price_gap: c - implied_c,
        beta_s,
        beta_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_tree() -> TreeParams {
        TreeParams::new(100.0, 1.1, 0.9, 1.05, 1).unwrap()
    }

    #[test]
    fn one_step_hand_case() {
        let c = crr_step(10.0, 0.0, &hand_tree()).unwrap();
        assert!((c - 7.5 / 1.05).abs() < 1e-15);
        assert!((c - 7.142_857).abs() < 1e-6);
        let priced = crr_price_on(&hand_tree(), 100.0).unwrap();
        assert!((priced - 7.142_857_142_857_143).abs() < 1e-12);
    }

    #[test]
    fn riskless_payoff_discounts_at_r_star() {
        let c = crr_step(4.2, 4.2, &hand_tree()).unwrap();
        assert!((c - 4.2 / 1.05).abs() < 1e-15);
    }

    #[test]
    fn forward_like_payoff_matches_expectation() {
        let t = hand_tree();
        let strike = t.d * t.s;
        let (cu, cd) = (t.u * t.s - strike, 0.0);
        let c = crr_step(cu, cd, &t).unwrap();
        let p = (t.r_star - t.d) / (t.u - t.d);
        assert!((c - (p * cu + (1.0 - p) * cd) / t.r_star).abs() < 1e-13);
        assert!((c - (t.s - strike / t.r_star)).abs() < 1e-12);
    }

    #[test]
    fn arbitrage_ordering_rejected() {
        assert!(matches!(
            TreeParams::new(100.0, 1.1, 0.9, 1.2, 1),
            Err(Error::Arbitrage { .. })
        ));
        assert!(TreeParams::new(100.0, 1.1, 0.0, 1.05, 1).is_err());
        let spec = OptionSpec::new(100.0, 1.0, 0.05, 1e-12).unwrap();
        assert!(matches!(
            crr_price(&spec, 100.0, 0.0, 64),
            Err(Error::Arbitrage { .. })
        ));
    }

    #[test]
    fn lattice_matches_enumeration_oracle() {
        let spec = OptionSpec::new(105.0, 1.0, 0.03, 0.25).unwrap();
        for n in [1usize, 2, 7, 50, 301] {
            let t = TreeParams::calibrated(&spec, 100.0, 0.0, n).unwrap();
            let oracle = sfc_oracles::binomial_enumeration(100.0, 105.0, t.u, t.d, t.r_star, n as u32);
            let c = crr_price_on(&t, 105.0).unwrap();
            assert!((c - oracle).abs() < 1e-10, "n = {n}: {c} vs {oracle}");
        }
    }

    #[test]
    fn deep_out_of_the_money_small_lattice_is_zero() {
        let spec = OptionSpec::new(1000.0, 1.0, 0.05, 0.2).unwrap();
        assert_eq!(crr_price(&spec, 100.0, 0.0, 8).unwrap(), 0.0);
    }

    #[test]
    fn beta_ratios_agree_on_difference_equation_prices() {
        let t = hand_tree();
        let m = MarketTree::stock_proxy(&t);
        let c = crr_step(10.0, 0.0, &t).unwrap();
        let rel = beta_relation_check(&t, &m, 10.0, 0.0, c).unwrap();
        assert!(rel.gap.abs() <= 1e-12);
        assert!((rel.beta_s - 1.0).abs() < 1e-14);

        let bumped = beta_relation_check(&t, &m, 10.0, 0.0, c + 0.01).unwrap();
        assert!(bumped.gap < -1e-4, "{bumped:?}");
        // Both ratios move by -0.01 r* / excess; closed-form gap.
        let expected = -0.01 * 1.05 / 5.0 + 0.01 * 1.05 / -15.0;
        assert!((bumped.gap - expected).abs() < 1e-14);
    }

    #[test]
    fn riskless_option_has_no_market_exposure() {
        let t = hand_tree();
        let m = MarketTree::stock_proxy(&t);
        let rel = beta_relation_check(&t, &m, 3.0, 3.0, 3.0 / 1.05).unwrap();
        assert!(rel.beta_c.abs() < 1e-14);
        assert!((rel.implied_c - 3.0 / 1.05).abs() < 1e-15);
    }

    #[test]
    fn market_must_straddle_riskless_return() {
        let t = hand_tree();
        let m = MarketTree { m: 1.0, m_up: 1.04, m_down: 0.9 };
        assert!(beta_relation_check(&t, &m, 10.0, 0.0, 7.0).is_err());
    }
}
