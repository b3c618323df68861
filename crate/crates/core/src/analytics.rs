//! Closed-form Black-Scholes call analytics.
//!
//! Notation follows the replication literature: `w` is the call value, `w1`
//! its delta, `w11` gamma, `w111` speed, `w2 = dw/dt` theta and
//! `w12 = d(w1)/dt` charm. The replicating portfolio holds `w1` shares and
//! `beta = -N(d2)` units of the bond `b = k exp(-r (T - t))`.
//!
//! The bond here is the zero-coupon bond maturing at `T` with face `k`.
//! A money-market account `b0 exp(r t)` satisfies the same `db = r b dt`;
//! converting holdings between the two is a constant rescaling of `beta`
//! by `k exp(-r T) / b0`.

use crate::error::{finite, positive, Error, Result};
use crate::math::{exp, ln, norm_cdf, norm_pdf, sqrt};

/// European call contract together with the pricing rate and volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
    pub r: f64,
    pub sigma: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64, r: f64, sigma: f64) -> Result<Self> {
        let s = Self {
            strike,
            maturity,
            r,
            sigma,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        positive("strike", self.strike)?;
        finite("maturity", self.maturity)?;
        finite("r", self.r)?;
        positive("sigma", self.sigma)?;
        Ok(())
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, ..*self }
    }

    /// Bond value `k exp(-r (T - t))`.
    pub fn bond(&self, t: f64) -> f64 {
        self.strike * exp(-self.r * (self.maturity - t))
    }

    pub fn payoff(&self, x: f64) -> f64 {
        (x - self.strike).max(0.0)
    }

    fn time_to_expiry(&self, x: f64, t: f64) -> Result<f64> {
        self.validate()?;
        positive("x", x)?;
        finite("t", t)?;
        let tau = self.maturity - t;
        if tau <= 0.0 {
            return Err(Error::AtOrAfterExpiry {
                t,
                maturity: self.maturity,
            });
        }
        Ok(tau)
    }
}

/// The closed-form value and partial derivatives at one `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greeks {
    pub w: f64,
    pub w1: f64,
    pub w11: f64,
    pub w111: f64,
    pub w2: f64,
    pub w12: f64,
    pub beta: f64,
    pub b: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `d1 = [ln(x/k) + (r + sigma^2/2) tau] / (sigma sqrt tau)`, `d2 = d1 - sigma sqrt tau`.
pub fn d_values(x: f64, t: f64, spec: &OptionSpec) -> Result<(f64, f64)> {
    let tau = spec.time_to_expiry(x, t)?;
    Ok(d_values_unchecked(x, tau, spec))
}

#[inline]
fn d_values_unchecked(x: f64, tau: f64, spec: &OptionSpec) -> (f64, f64) {
    let s = spec.sigma * sqrt(tau);
    let d1 = (ln(x / spec.strike) + (spec.r + 0.5 * spec.sigma * spec.sigma) * tau) / s;
    (d1, d1 - s)
}

/// Call value; at `t = T` the payoff `max(x - k, 0)`.
pub fn bs_price(x: f64, t: f64, spec: &OptionSpec) -> Result<f64> {
    finite("t", t)?;
    if t == spec.maturity {
        spec.validate()?;
        positive("x", x)?;
        return Ok(spec.payoff(x));
    }
    let tau = spec.time_to_expiry(x, t)?;
    let (d1, d2) = d_values_unchecked(x, tau, spec);
    Ok(x * norm_cdf(d1) - spec.bond(t) * norm_cdf(d2))
}

/// All partial derivatives of the call value. Rejects `t >= T`.
pub fn greeks(x: f64, t: f64, spec: &OptionSpec) -> Result<Greeks> {
    let tau = spec.time_to_expiry(x, t)?;
    Ok(greeks_unchecked(x, t, tau, spec))
}

fn greeks_unchecked(x: f64, t: f64, tau: f64, spec: &OptionSpec) -> Greeks {
    debug_assert_eq!(tau, spec.maturity - t);
    let c = NodeConstants::new(t, spec);
    greeks_at_node(x, ln(x / spec.strike), &c, spec)
}

/// Replicating holdings `(w1, beta)` at `t <= T`. At expiry these are the
/// limits `(1, -1)` in the money and `(0, 0)` otherwise.
pub fn holdings(x: f64, t: f64, spec: &OptionSpec) -> Result<(f64, f64)> {
    finite("t", t)?;
    if t == spec.maturity {
        spec.validate()?;
        positive("x", x)?;
        return Ok(terminal_holdings(x, spec));
    }
    let (d1, d2) = d_values(x, t, spec)?;
    Ok((norm_cdf(d1), -norm_cdf(d2)))
}

pub fn terminal_holdings(x: f64, spec: &OptionSpec) -> (f64, f64) {
    if x > spec.strike {
        (1.0, -1.0)
    } else {
        (0.0, 0.0)
    }
}

/// Residuals of the replication identities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `w - (w1 x + beta b)`
    pub value: f64,
    /// `w2 + sigma^2 x^2 w11 / 2 - r beta b`
    pub drift: f64,
}

pub fn decomposition_identity(x: f64, t: f64, spec: &OptionSpec) -> Result<IdentityResiduals> {
    let g = greeks(x, t, spec)?;
    let w = bs_price(x, t, spec)?;
    Ok(IdentityResiduals {
        value: w - (g.w1 * x + g.beta * g.b),
        drift: g.w2 + 0.5 * spec.sigma * spec.sigma * x * x * g.w11 - spec.r * g.beta * g.b,
    })
}

/// `w2 - (r w - r w1 x - w11 sigma^2 x^2 / 2)`, zero for the closed form.
pub fn pde_residual(x: f64, t: f64, spec: &OptionSpec) -> Result<f64> {
    let g = greeks(x, t, spec)?;
    let w = bs_price(x, t, spec)?;
    let sig2 = spec.sigma * spec.sigma;
    Ok(g.w2 - (spec.r * w - spec.r * g.w1 * x - 0.5 * g.w11 * sig2 * x * x))
}

/// Undiscounted expected payoff `E[max(x_T - k, 0) | x_t = x]` when the stock
/// drifts at `mu`.
pub fn expected_payoff_physical(x: f64, t: f64, spec: &OptionSpec, mu: f64) -> Result<f64> {
    finite("mu", mu)?;
    let tau = spec.time_to_expiry(x, t)?;
    let s = spec.sigma * sqrt(tau);
    let d1 = (ln(x / spec.strike) + (mu + 0.5 * spec.sigma * spec.sigma) * tau) / s;
    let d2 = d1 - s;
    Ok(exp(mu * tau) * norm_cdf(d1) * x - norm_cdf(d2) * spec.strike)
}

/// Option drift reconciling the call value with its physical expected payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionDrift {
    /// `ln(E[w_T] / w) / (T - t)`, the constant rate that discounts the
    /// expected payoff back to the call value.
    pub average: f64,
    /// `(w1 mu x + w2 + sigma^2 x^2 w11 / 2) / w`, the instantaneous expected
    /// return of the call at `t`.
    pub instantaneous: f64,
}

pub fn implied_option_drift(x: f64, t: f64, spec: &OptionSpec, mu: f64) -> Result<OptionDrift> {
    let tau = spec.time_to_expiry(x, t)?;
    let w = bs_price(x, t, spec)?;
    if !(w > 0.0) {
        return Err(Error::Degenerate("call value is not positive"));
    }
    let expected = expected_payoff_physical(x, t, spec, mu)?;
    if !(expected > 0.0) {
        return Err(Error::Degenerate("expected payoff is not positive"));
    }
    let g = greeks_unchecked(x, t, tau, spec);
    let sig2 = spec.sigma * spec.sigma;
    Ok(OptionDrift {
        average: ln(expected / w) / tau,
        instantaneous: (g.w1 * mu * x + g.w2 + 0.5 * sig2 * x * x * g.w11) / w,
    })
}

/// Per-node constants for evaluating Greeks repeatedly along many paths
/// sharing one grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeConstants {
    pub tau: f64,
    pub sqrt_tau: f64,
    pub s: f64,
    pub b: f64,
    pub carry: f64,
}

impl NodeConstants {
    pub fn new(t: f64, spec: &OptionSpec) -> Self {
        let tau = spec.maturity - t;
        let sqrt_tau = sqrt(tau);
        Self {
            tau,
            sqrt_tau,
            s: spec.sigma * sqrt_tau,
            b: spec.bond(t),
            carry: (spec.r + 0.5 * spec.sigma * spec.sigma) * tau,
        }
    }
}

/// Greeks from precomputed node constants and `ln(x / k)`; the caller
/// guarantees `tau > 0`.
#[inline]
pub(crate) fn greeks_at_node(x: f64, log_moneyness: f64, c: &NodeConstants, spec: &OptionSpec) -> Greeks {
    let sigma = spec.sigma;
    let r = spec.r;
    let d1 = (log_moneyness + c.carry) / c.s;
    let d2 = d1 - c.s;
    let n1 = norm_pdf(d1);
    let cdf1 = norm_cdf(d1);
    let beta = -norm_cdf(d2);
    Greeks {
        w: x * cdf1 + beta * c.b,
        w1: cdf1,
        w11: n1 / (x * c.s),
        w111: -n1 * (d1 + c.s) / (x * x * c.s * c.s),
        w2: -x * n1 * sigma / (2.0 * c.sqrt_tau) + beta * c.b * r,
        w12: -n1 * (2.0 * r * c.tau - d2 * c.s) / (2.0 * c.tau * c.s),
        beta,
        b: c.b,
        d1,
        d2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> OptionSpec {
        OptionSpec::new(100.0, 1.0, 0.05, 0.2).unwrap()
    }

    #[test]
    fn canonical_d_values() {
        let (d1, d2) = d_values(100.0, 0.0, &canonical()).unwrap();
        assert!((d1 - 0.35).abs() < 1e-15);
        assert!((d2 - 0.15).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_d_values_are_symmetric() {
        let spec = OptionSpec::new(100.0, 1.0, 0.0, 0.2).unwrap();
        let (d1, d2) = d_values(100.0, 0.0, &spec).unwrap();
        assert!((d1 - 0.1).abs() < 1e-15);
        assert!((d1 + d2).abs() < 1e-15);
    }

    #[test]
    fn d_values_increase_with_spot() {
        let spec = canonical();
        let mut prev = f64::NEG_INFINITY;
        for x in [1.0, 50.0, 100.0, 1e3, 1e6, 1e12] {
            let (d1, d2) = d_values(x, 0.0, &spec).unwrap();
            assert!(d1 > prev && d2 < d1);
            prev = d1;
        }
        assert!(prev > 30.0);
    }

    #[test]
    fn d_values_reject_expiry() {
        assert!(matches!(
            d_values(100.0, 1.0, &canonical()),
            Err(Error::AtOrAfterExpiry { .. })
        ));
        assert!(greeks(100.0, 1.5, &canonical()).is_err());
    }

    #[test]
    fn canonical_price_and_expiry_payoff() {
        let spec = canonical();
        let w = bs_price(100.0, 0.0, &spec).unwrap();
        assert!((w - 10.450_584).abs() < 1e-6, "{w}");
        assert_eq!(bs_price(120.0, 1.0, &spec).unwrap(), 20.0);
        assert_eq!(bs_price(80.0, 1.0, &spec).unwrap(), 0.0);
        assert!(bs_price(f64::NAN, 0.0, &spec).is_err());
        assert!(bs_price(100.0, f64::INFINITY, &spec).is_err());
    }

    #[test]
    fn degenerate_volatility_price_is_forward_intrinsic() {
        let spec = canonical().with_sigma(1e-12);
        let w = bs_price(100.0, 0.0, &spec).unwrap();
        assert!((w - (100.0 - 100.0 * (-0.05f64).exp())).abs() < 1e-9);
        assert!((w - 4.877_058).abs() < 1e-6);
    }

    #[test]
    fn canonical_delta_and_gamma() {
        let g = greeks(100.0, 0.0, &canonical()).unwrap();
        assert!((g.w1 - 0.636_831).abs() < 1e-6);
        assert!((g.w11 - 0.018_762).abs() < 1e-6);
        let gamma_oracle = (-0.06125f64).exp() / (2.0 * core::f64::consts::PI).sqrt() / 20.0;
        assert!((g.w11 - gamma_oracle).abs() < 1e-15);
        assert!(g.b > 0.0 && g.beta < 0.0 && g.beta > -1.0);
    }

    #[test]
    fn identities_hold_near_expiry_and_deep_in_the_money() {
        let spec = canonical();
        for (x, t) in [(100.0, 0.0), (1000.0, 0.0), (103.0, 1.0 - 1e-6), (97.0, 1.0 - 1e-6)] {
            let res = decomposition_identity(x, t, &spec).unwrap();
            assert!(res.value.abs() <= 1e-12 * x, "{x} {t} {res:?}");
            assert!(res.drift.abs() <= 1e-10 * x, "{x} {t} {res:?}");
            assert!(pde_residual(x, t, &spec).unwrap().abs() <= 1e-10 * x);
        }
    }

    #[test]
    fn physical_payoff_with_riskless_drift_is_forward_price() {
        let spec = canonical();
        let e = expected_payoff_physical(100.0, 0.0, &spec, 0.05).unwrap();
        let w = bs_price(100.0, 0.0, &spec).unwrap();
        assert!((e / (0.05f64.exp() * w) - 1.0).abs() < 1e-12);
        let drift = implied_option_drift(100.0, 0.0, &spec, 0.05).unwrap();
        assert!((drift.average - 0.05).abs() < 1e-12);
        assert!((drift.instantaneous - 0.05).abs() < 1e-12);
    }

    #[test]
    fn option_drift_exceeds_stock_drift_and_decays_with_moneyness() {
        let spec = canonical();
        let atm = implied_option_drift(100.0, 0.0, &spec, 0.10).unwrap();
        assert!(atm.average > 0.10);
        let mut prev = atm.average;
        for x in [150.0, 300.0, 1000.0] {
            let d = implied_option_drift(x, 0.0, &spec, 0.10).unwrap();
            assert!(d.average > 0.10 && d.average < prev);
            prev = d.average;
        }
        assert!(prev - 0.10 < 0.01);
    }

    #[test]
    fn node_constants_reproduce_greeks() {
        let spec = canonical();
        let c = NodeConstants::new(0.25, &spec);
        let a = greeks_at_node(93.0, (93.0f64 / 100.0).ln(), &c, &spec);
        let b = greeks(93.0, 0.25, &spec).unwrap();
        for (u, v) in [(a.w, b.w), (a.w1, b.w1), (a.w11, b.w11), (a.w111, b.w111), (a.w12, b.w12), (a.w2, b.w2)] {
            assert!((u - v).abs() <= 1e-14 * v.abs().max(1.0), "{u} {v}");
        }
    }

    #[test]
    fn terminal_holdings_are_indicators() {
        let spec = canonical();
        assert_eq!(holdings(120.0, 1.0, &spec).unwrap(), (1.0, -1.0));
        assert_eq!(holdings(80.0, 1.0, &spec).unwrap(), (0.0, 0.0));
    }
}
