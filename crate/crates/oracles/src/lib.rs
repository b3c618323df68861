//! Independent numerical oracles for the test suites.
//!
//! Nothing here calls into `sfc-core`. Prices come from Gauss-Legendre
//! quadrature of the lognormal payoff, derivatives from Richardson-extrapolated
//! central stencils, and lattice values from direct enumeration of the
//! binomial distribution.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre quadrature of `f` over `[a, b]`.
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
}

impl Quadrature {
    pub fn new(order: usize, panels: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights, panels }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let width = (b - a) / self.panels as f64;
        let mut total = 0.0;
        for p in 0..self.panels {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            let mut panel = 0.0;
            for (z, w) in self.nodes.iter().zip(&self.weights) {
                panel += w * f(mid + 0.5 * width * z);
            }
            total += 0.5 * width * panel;
        }
        total
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(20, 48)
    }
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF by quadrature of the density from zero.
pub fn normal_cdf(x: f64) -> f64 {
    let q = Quadrature::new(20, 16);
    let half = q.integrate(normal_pdf, 0.0, x.abs().min(40.0));
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// `E[max(X_T - k, 0)]` for `ln X_T ~ N(ln x + (drift - sigma^2/2) tau, sigma^2 tau)`.
pub fn lognormal_call_expectation(x: f64, k: f64, drift: f64, sigma: f64, tau: f64) -> f64 {
    let s = sigma * tau.sqrt();
    let m = (drift - 0.5 * sigma * sigma) * tau;
    let z_star = ((k / x).ln() - m) / s;
    // The integrand decays like a Gaussian centred at `s`.
    let lo = z_star.max(-14.0);
    let hi = (s + 14.0).max(lo + 1.0);
    if z_star >= hi {
        return 0.0;
    }
    Quadrature::default().integrate(
        |z| {
            let payoff = x * (m + s * z).exp() - k;
            payoff.max(0.0) * normal_pdf(z)
        },
        lo,
        hi,
    )
}

/// Risk-neutral call value by quadrature.
pub fn call_price_quadrature(x: f64, k: f64, r: f64, sigma: f64, tau: f64) -> f64 {
    (-r * tau).exp() * lognormal_call_expectation(x, k, r, sigma, tau)
}

/// Richardson extrapolation of a stencil whose error expands in even powers
/// of the step (Ridders' tableau). Returns the estimate and its error bound.
pub fn ridders(stencil: impl Fn(f64) -> f64, h0: f64) -> (f64, f64) {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 12;
    const SAFE: f64 = 2.0;
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = stencil(h);
    let mut err = f64::MAX;
    let mut ans = a[0][0];
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = stencil(h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                ans = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    (ans, err)
}

/// [`ridders`] started from several initial steps around `h0`, keeping the
/// estimate with the smallest error bound.
pub fn ridders_best(stencil: impl Fn(f64) -> f64, h0: f64) -> (f64, f64) {
    [2.0, 1.0, 0.5, 0.25]
        .iter()
        .map(|m| ridders(&stencil, h0 * m))
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// First derivative by extrapolated central differences.
pub fn d1(f: impl Fn(f64) -> f64, x: f64, h0: f64) -> f64 {
    ridders_best(|h| (f(x + h) - f(x - h)) / (2.0 * h), h0).0
}

/// Second derivative by extrapolated second central differences.
pub fn d2(f: impl Fn(f64) -> f64, x: f64, h0: f64) -> f64 {
    let fx = f(x);
    ridders_best(|h| (f(x + h) - 2.0 * fx + f(x - h)) / (h * h), h0).0
}

/// Third derivative by extrapolated third central differences.
pub fn d3(f: impl Fn(f64) -> f64, x: f64, h0: f64) -> f64 {
    ridders_best(
        |h| (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        h0,
    )
    .0
}

/// Mixed partial `d^2 f / dx dy` with steps `h` in x and `ratio * h` in y.
pub fn d_mixed(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, h0: f64, ratio: f64) -> f64 {
    ridders_best(
        |h| {
            let k = ratio * h;
            (f(x + h, y + k) - f(x + h, y - k) - f(x - h, y + k) + f(x - h, y - k)) / (4.0 * h * k)
        },
        h0,
    )
    .0
}

/// European call on an `n`-period recombining lattice, summed over the
/// terminal binomial distribution rather than by backward induction.
pub fn binomial_enumeration(s: f64, k: f64, u: f64, d: f64, r_star: f64, n: u32) -> f64 {
    let p = (r_star - d) / (u - d);
    let mut total = 0.0;
    let mut log_choose = 0.0f64;
    for j in 0..=n {
        if j > 0 {
            log_choose += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        let st = s * u.powi(j as i32) * d.powi((n - j) as i32);
        let payoff = (st - k).max(0.0);
        if payoff > 0.0 {
            let log_prob = log_choose + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln();
            total += log_prob.exp() * payoff;
        }
    }
    total / r_star.powi(n as i32)
}

/// Ordinary least squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// SplitMix64 stream of uniforms on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct Uniforms(u64);

impl Uniforms {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// One random contract and state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub k: f64,
    pub r: f64,
    pub sigma: f64,
    pub tau: f64,
}

/// Random points with `x/k` in [0.5, 2], `sigma` in [0.05, 0.6], `r` in
/// [0, 0.1] and `tau` in [0.05, 3], at strike 100.
pub fn parameter_grid(n: usize, seed: u64) -> Vec<GridPoint> {
    let mut u = Uniforms::new(seed);
    (0..n)
        .map(|_| {
            let k = 100.0;
            GridPoint {
                x: k * u.range(0.5, 2.0),
                k,
                sigma: u.range(0.05, 0.6),
                r: u.range(0.0, 0.1),
                tau: u.range(0.05, 3.0),
            }
        })
        .collect()
}

/// Finite-difference estimates of `[w1, w11, w111, w2, w12, beta]` for a
/// pricer `price(x, t, k)` at time `t` with `tau` to expiry. `beta` is
/// `exp(r tau) dw/dk`.
pub fn fd_greeks(price: impl Fn(f64, f64, f64) -> f64, p: &GridPoint, t: f64) -> [f64; 6] {
    let sd = p.sigma * p.tau.sqrt();
    let hx = p.x * (0.2 * sd).min(0.2);
    let hk = p.k * (0.2 * sd).min(0.2);
    let ht = 0.2 * p.tau;
    let fx = |x: f64| price(x, t, p.k);
    [
        d1(fx, p.x, hx),
        d2(fx, p.x, hx),
        d3(fx, p.x, hx),
        d1(|s| price(p.x, s, p.k), t, ht),
        d_mixed(|x, s| price(x, s, p.k), p.x, t, hx, ht / hx),
        (p.r * p.tau).exp() * d1(|k| price(p.x, t, k), p.k, hk),
    ]
}

/// Typical magnitudes of `[w1, w11, w111, w2, w12, beta]` near the money.
pub fn greek_scales(p: &GridPoint) -> [f64; 6] {
    let sd = p.sigma * p.tau.sqrt();
    [
        1.0,
        1.0 / (p.x * sd),
        1.0 / (p.x * p.x * sd * sd),
        p.x * p.sigma / p.tau.sqrt(),
        1.0 / p.tau,
        1.0,
    ]
}

/// `|a - b| / max(|b|, floor * scale)`
pub fn floored_relative_error(a: f64, b: f64, scale: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let q = Quadrature::new(5, 1);
        let v = q.integrate(|x| x.powi(9) + 3.0 * x.powi(4), -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 + 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn normal_cdf_known_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-14);
        assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-15);
    }

    #[test]
    fn ridders_recovers_exp_derivatives() {
        assert!((d1(f64::exp, 1.0, 0.1) - 1f64.exp()).abs() < 1e-12);
        assert!((d2(f64::exp, 1.0, 0.1) - 1f64.exp()).abs() < 1e-9);
        assert!((d3(f64::exp, 1.0, 0.1) - 1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn enumeration_single_period() {
        let c = binomial_enumeration(100.0, 100.0, 1.1, 0.9, 1.05, 1);
        assert!((c - 7.5 / 1.05).abs() < 1e-14);
    }
}
