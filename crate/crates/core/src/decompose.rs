//! Drift and diffusion integrands of the holding process `theta = -(alpha + beta)`.
//!
//! Along a delta-hedged path `d theta = kappa dt + lambda dW`, with
//!
//! ```text
//! kappa  = [(x - b)(w12 + w111 sigma^2 x^2 / 2 + w11 x mu) + w11 sigma^2 x^2] / b
//! lambda = (x - b) w11 x sigma / b
//! ```
//!
//! Integrals use the left-point rule, so `integral lambda dW` is an Ito sum.

use alloc::vec;
use alloc::vec::Vec;

use crate::analytics::{greeks, holdings, terminal_holdings, NodeConstants, OptionSpec};
use crate::error::{Error, Result};
use crate::exec;
use crate::market::{GbmParams, PathGenerator, PathSet, TimeGrid};
use crate::math::{exp, ln, sqrt, SQRT_2PI};
use crate::stats::{bootstrap_std_errors, correlation, covariance, variance, Moments};

/// `(kappa, lambda)` at one state.
pub fn kappa_lambda(x: f64, t: f64, spec: &OptionSpec, mu: f64) -> Result<(f64, f64)> {
    let g = greeks(x, t, spec)?;
    let sig2x2 = spec.sigma * spec.sigma * x * x;
    let gap = (x - g.b) / g.b;
    let kappa = gap * (g.w12 + 0.5 * g.w111 * sig2x2 + g.w11 * x * mu) + g.w11 * sig2x2 / g.b;
    let lambda = gap * g.w11 * x * spec.sigma;
    Ok((kappa, lambda))
}

/// Per-node constants for the integrands; shared across all paths on a grid.
#[derive(Debug, Clone, Copy)]
struct IntegrandNode {
    c: NodeConstants,
    inv_b: f64,
    two_tau_r: f64,
}

impl IntegrandNode {
    fn new(t: f64, spec: &OptionSpec) -> Self {
        let c = NodeConstants::new(t, spec);
        Self {
            inv_b: 1.0 / c.b,
            two_tau_r: 2.0 * spec.r * c.tau,
            c,
        }
    }

    /// Same closed forms as [`kappa_lambda`], computing only the density terms.
    #[inline]
    fn eval(&self, x: f64, spec: &OptionSpec, mu: f64) -> (f64, f64) {
        let c = &self.c;
        let sigma = spec.sigma;
        let d1 = (ln(x / spec.strike) + c.carry) / c.s;
        let d2 = d1 - c.s;
        let n1 = exp(-0.5 * d1 * d1) / SQRT_2PI;
        let w11 = n1 / (x * c.s);
        let w111 = -n1 * (d1 + c.s) / (x * x * c.s * c.s);
        let w12 = -n1 * (self.two_tau_r - d2 * c.s) / (2.0 * c.tau * c.s);
        let sig2x2 = sigma * sigma * x * x;
        let gap = (x - c.b) * self.inv_b;
        let kappa = gap * (w12 + 0.5 * w111 * sig2x2 + w11 * x * mu) + w11 * sig2x2 * self.inv_b;
        (kappa, gap * w11 * x * sigma)
    }
}

fn integrand_nodes(grid: &TimeGrid, spec: &OptionSpec) -> Vec<IntegrandNode> {
    let times = grid.times();
    (0..grid.n_steps()).map(|i| IntegrandNode::new(times[i], spec)).collect()
}

fn theta_at(x: f64, t: f64, spec: &OptionSpec) -> f64 {
    let (a, b) = if t >= spec.maturity {
        terminal_holdings(x, spec)
    } else {
        holdings(x, t, spec).unwrap_or((f64::NAN, f64::NAN))
    };
    -(a + b)
}

/// Integrands and integrals of one path.
///
/// `kappa` and `lambda` hold the left-point values at nodes `0..n`, one per
/// step. `theta` holds all `n + 1` nodes, with the terminal value taken
/// from the payoff indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionSeries {
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    pub dt: f64,
    pub wiener: Vec<f64>,
    pub i_kappa: f64,
    pub i_lambda: f64,
    /// `theta[n] - theta[0] - i_kappa - i_lambda`
    pub defect: f64,
}

impl DecompositionSeries {
    /// Integrals over steps `[0, split)` and `[split, n)`.
    pub fn segments(&self, split: usize) -> SegmentIntegrals {
        let mut s = SegmentIntegrals::default();
        for i in 0..self.kappa.len() {
            let k = self.kappa[i] * self.dt;
            let l = self.lambda[i] * self.wiener[i];
            if i < split {
                s.kappa_early += k;
                s.lambda_early += l;
            } else {
                s.kappa_late += k;
                s.lambda_late += l;
            }
        }
        s
    }
}

pub fn decompose_path(
    prices: &[f64],
    wiener: &[f64],
    grid: &TimeGrid,
    spec: &OptionSpec,
    mu: f64,
) -> DecompositionSeries {
    let n = grid.n_steps();
    assert_eq!(prices.len(), n + 1);
    assert_eq!(wiener.len(), n);
    let times = grid.times();
    let dt = grid.dt();
    let mut kappa = vec![0.0; n];
    let mut lambda = vec![0.0; n];
    let mut i_kappa = 0.0;
    let mut i_lambda = 0.0;
    for i in 0..n {
        let (k, l) = kappa_lambda(prices[i], times[i], spec, mu).unwrap_or((f64::NAN, f64::NAN));
        kappa[i] = k;
        lambda[i] = l;
        i_kappa += k * dt;
        i_lambda += l * wiener[i];
    }
    let theta: Vec<f64> = (0..=n).map(|i| theta_at(prices[i], times[i], spec)).collect();
    DecompositionSeries {
        defect: theta[n] - theta[0] - i_kappa - i_lambda,
        kappa,
        lambda,
        theta,
        dt,
        wiener: wiener.to_vec(),
        i_kappa,
        i_lambda,
    }
}

pub fn integrate_decomposition(paths: &PathSet, spec: &OptionSpec) -> Result<Vec<DecompositionSeries>> {
    spec.validate()?;
    let grid = paths.grid();
    if (grid.maturity() - spec.maturity).abs() > 1e-12 * spec.maturity.abs().max(1.0) {
        return Err(Error::GridMismatch("grid terminal time differs from option maturity"));
    }
    let mu = paths.params().mu;
    Ok(exec::map_indexed(paths.n_paths(), |p| {
        decompose_path(paths.prices(p), paths.wiener(p), grid, spec, mu)
    }))
}

/// Integrals of one path split at `t1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentIntegrals {
    pub kappa_early: f64,
    pub lambda_early: f64,
    pub kappa_late: f64,
    pub lambda_late: f64,
}

/// Scalar results of one path, computed without storing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamedPath {
    pub segments: SegmentIntegrals,
    pub theta_start: f64,
    pub theta_split: f64,
    pub theta_end: f64,
    /// Largest relative gap between `lambda b` and `(x - b) w11 x sigma`
    /// recomputed from the full Greeks; only tracked on request.
    pub lambda_identity: f64,
}

impl StreamedPath {
    pub fn defect(&self) -> f64 {
        let s = &self.segments;
        self.theta_end - self.theta_start - s.kappa_early - s.lambda_early - s.kappa_late - s.lambda_late
    }
}

/// Streams `n_paths` generated paths and integrates them split at node `split`.
pub fn stream_decomposition(
    generator: &PathGenerator,
    n_paths: usize,
    spec: &OptionSpec,
    split: usize,
    check_lambda: bool,
) -> Result<Vec<StreamedPath>> {
    spec.validate()?;
    let grid = generator.grid();
    if (grid.maturity() - spec.maturity).abs() > 1e-12 * spec.maturity.abs().max(1.0) {
        return Err(Error::GridMismatch("grid terminal time differs from option maturity"));
    }
    if split > grid.n_steps() {
        return Err(Error::GridMismatch("split index beyond grid"));
    }
    let nodes = integrand_nodes(grid, spec);
    let mu = generator.params().mu;
    let dt = grid.dt();
    let times = grid.times();
    let x0 = generator.params().x0;
    let theta_start = theta_at(x0, times[0], spec);
    Ok(exec::map_indexed(n_paths, |p| {
        let mut seg = SegmentIntegrals::default();
        let mut theta_split = if split == 0 { theta_start } else { f64::NAN };
        let mut worst = 0.0f64;
        let x_end = generator.walk(p, |i, x, dw, next| {
            let (k, l) = nodes[i].eval(x, spec, mu);
            if check_lambda {
                worst = worst.max(lambda_identity_gap(x, times[i], spec, l));
            }
            if i < split {
                seg.kappa_early += k * dt;
                seg.lambda_early += l * dw;
            } else {
                seg.kappa_late += k * dt;
                seg.lambda_late += l * dw;
            }
            if i + 1 == split {
                theta_split = theta_at(next, times[i + 1], spec);
            }
        });
        StreamedPath {
            segments: seg,
            theta_start,
            theta_split,
            theta_end: theta_at(x_end, grid.maturity(), spec),
            lambda_identity: worst,
        }
    }))
}

/// Relative gap `|lambda b - (x - b) w11 x sigma|` against the larger side,
/// floored at the smallest normal magnitude.
pub fn lambda_identity_gap(x: f64, t: f64, spec: &OptionSpec, lambda: f64) -> f64 {
    let Ok(g) = greeks(x, t, spec) else {
        return f64::NAN;
    };
    let lhs = lambda * g.b;
    let rhs = (x - g.b) * g.w11 * x * spec.sigma;
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    (lhs - rhs).abs() / scale
}

/// Information set an estimate is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    Start,
    Split,
}

impl Conditioning {
    pub fn label(self) -> &'static str {
        match self {
            Conditioning::Start => "F_t0",
            Conditioning::Split => "F_t1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticRow {
    pub quantity: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub conditioning: Conditioning,
}

pub const MIN_BOOTSTRAP_RESAMPLES: usize = 200;

/// Names of the rows of [`ensemble_statistics`], in output order.
///
/// `k01` and `l01` are the drift and Ito integrals over `[t0, t1]`, `k1T`
/// and `l1T` over `[t1, T]`.
pub const STATISTIC_NAMES: [&str; 11] = [
    "cov(k01,k01+l01)",
    "cov(k01,k1T)",
    "cor(k1T,l1T)",
    "cov(k1T,l1T)",
    "var(k01)",
    "var(l01)",
    "var(k1T)",
    "var(l1T)",
    "var(k01+l01)",
    "var(k1T+l1T)",
    "cor(k01,l01)",
];

fn statistic_values(rows: &[SegmentIntegrals], idx: Option<&[usize]>, out: &mut [f64]) {
    let pick = |f: &dyn Fn(&SegmentIntegrals) -> f64| -> Vec<f64> {
        match idx {
            Some(ix) => ix.iter().map(|&i| f(&rows[i])).collect(),
            None => rows.iter().map(f).collect(),
        }
    };
    let k01 = pick(&|s| s.kappa_early);
    let l01 = pick(&|s| s.lambda_early);
    let k1t = pick(&|s| s.kappa_late);
    let l1t = pick(&|s| s.lambda_late);
    let early: Vec<f64> = k01.iter().zip(&l01).map(|(a, b)| a + b).collect();
    let late: Vec<f64> = k1t.iter().zip(&l1t).map(|(a, b)| a + b).collect();
    out[0] = covariance(&k01, &early);
    out[1] = covariance(&k01, &k1t);
    out[2] = correlation(&k1t, &l1t);
    out[3] = covariance(&k1t, &l1t);
    out[4] = variance(&k01);
    out[5] = variance(&l01);
    out[6] = variance(&k1t);
    out[7] = variance(&l1t);
    out[8] = variance(&early);
    out[9] = variance(&late);
    out[10] = correlation(&k01, &l01);
}

/// Sample covariances, variances and correlations of the split integrals,
/// with bootstrap standard errors over paths.
pub fn ensemble_statistics(rows: &[SegmentIntegrals], resamples: usize, seed: u64) -> Result<Vec<StatisticRow>> {
    if rows.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "need at least two paths",
        });
    }
    if resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::InvalidParameter {
            name: "resamples",
            reason: "need at least 200 bootstrap resamples",
        });
    }
    let mut point = [0.0; STATISTIC_NAMES.len()];
    statistic_values(rows, None, &mut point);
    let se = bootstrap_std_errors(rows.len(), point.len(), resamples, seed, |idx, out| {
        statistic_values(rows, Some(idx), out)
    });
    Ok(STATISTIC_NAMES
        .iter()
        .zip(point.iter().zip(&se))
        .map(|(name, (&estimate, &std_error))| StatisticRow {
            quantity: name,
            estimate,
            std_error,
            n_paths: rows.len(),
            conditioning: Conditioning::Start,
        })
        .collect())
}

/// Grid node of `t1`, which must lie strictly inside the grid.
pub fn split_index(grid: &TimeGrid, t1: f64) -> Result<usize> {
    match grid.index_of(t1) {
        Some(i) if i > 0 && i < grid.n_steps() => Ok(i),
        _ => Err(Error::GridMismatch("split time is not an interior grid node")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalCorrelation {
    /// `Cor(integral kappa dt, integral lambda dW | F_t1)`; NaN when degenerate.
    pub correlation: f64,
    pub std_error: f64,
    pub var_kappa: f64,
    pub var_lambda: f64,
    /// `theta` at the restart state, fixed given `F_t1`.
    pub theta_t1: f64,
    /// RMS of `integral kappa dt + integral lambda dW + theta_t1`.
    pub closure_rms: f64,
    pub degenerate: bool,
    pub n_paths: usize,
    pub n_steps: usize,
}

pub const MIN_CONDITIONAL_PATHS: usize = 1000;

/// Restarts `n` paths from `(t1, x1)` on a uniform `n_steps` grid over
/// `[t1, T]` and estimates the correlation of the two integrals.
pub fn conditional_correlation(
    x1: f64,
    t1: f64,
    spec: &OptionSpec,
    mu: f64,
    n: usize,
    n_steps: usize,
    seed: u64,
) -> Result<ConditionalCorrelation> {
    spec.validate()?;
    if n < MIN_CONDITIONAL_PATHS {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "need at least 1000 restarted paths",
        });
    }
    if !(t1 < spec.maturity) {
        return Err(Error::AtOrAfterExpiry {
            t: t1,
            maturity: spec.maturity,
        });
    }
    let params = GbmParams::new(x1, mu, spec.sigma, spec.r)?;
    let grid = TimeGrid::new(t1, spec.maturity, n_steps)?;
    let generator = PathGenerator::new(params, grid, seed)?;
    let streamed = stream_decomposition(&generator, n, spec, 0, false)?;
    let kappa: Vec<f64> = streamed.iter().map(|s| s.segments.kappa_late).collect();
    let lambda: Vec<f64> = streamed.iter().map(|s| s.segments.lambda_late).collect();
    let theta_t1 = theta_at(x1, t1, spec);
    let mut closure = Moments::new();
    for (k, l) in kappa.iter().zip(&lambda) {
        closure.push(k + l + theta_t1);
    }
    let var_kappa = variance(&kappa);
    let var_lambda = variance(&lambda);
    let scale = |v: &[f64]| {
        let m = Moments::from_slice(v).mean();
        (m * m).max(1.0)
    };
    let tiny = 1e-24;
    let degenerate = var_kappa <= tiny * scale(&kappa) || var_lambda <= tiny * scale(&lambda);
    let (correlation, std_error) = if degenerate {
        (f64::NAN, f64::NAN)
    } else {
        let rho = crate::stats::correlation(&kappa, &lambda);
        let se = bootstrap_std_errors(n, 1, MIN_BOOTSTRAP_RESAMPLES, seed ^ 0x9e37_79b9_7f4a_7c15, |idx, out| {
            let a: Vec<f64> = idx.iter().map(|&i| kappa[i]).collect();
            let b: Vec<f64> = idx.iter().map(|&i| lambda[i]).collect();
            out[0] = crate::stats::correlation(&a, &b);
        });
        (rho, se[0])
    };
    Ok(ConditionalCorrelation {
        correlation,
        std_error,
        var_kappa,
        var_lambda,
        theta_t1,
        closure_rms: closure.rms(),
        degenerate,
        n_paths: n,
        n_steps,
    })
}

/// RMS of the defect over paths.
pub fn rms_defect(series: &[DecompositionSeries]) -> f64 {
    let ss: f64 = series.iter().map(|s| s.defect * s.defect).sum();
    sqrt(ss / series.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::simulate_paths;

    fn spec() -> OptionSpec {
        OptionSpec::new(100.0, 1.0, 0.05, 0.2).unwrap()
    }

    #[test]
    fn lambda_vanishes_when_stock_equals_bond() {
        let s = spec();
        let b = s.bond(0.3);
        let (k, l) = kappa_lambda(b, 0.3, &s, 0.1).unwrap();
        assert!(l.abs() < 1e-15);
        let g = greeks(b, 0.3, &s).unwrap();
        let expected = g.w11 * s.sigma * s.sigma * b * b / b;
        assert!((k - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn lambda_tracks_sigma() {
        for sigma in [0.2, 0.4] {
            let s = spec().with_sigma(sigma);
            let (_, l) = kappa_lambda(90.0, 0.2, &s, 0.1).unwrap();
            let g = greeks(90.0, 0.2, &s).unwrap();
            let w11 = l * g.b / ((90.0 - g.b) * 90.0 * sigma);
            assert!((w11 - g.w11).abs() <= 1e-12 * g.w11);
        }
    }

    #[test]
    fn node_evaluation_matches_closed_form() {
        let s = spec();
        for &(x, t) in &[(100.0, 0.0), (80.0, 0.5), (130.0, 0.99), (100.0, 0.999_9)] {
            let node = IntegrandNode::new(t, &s);
            let (k, l) = node.eval(x, &s, 0.1);
            let (k2, l2) = kappa_lambda(x, t, &s, 0.1).unwrap();
            assert!((k - k2).abs() <= 1e-12 * k2.abs().max(1e-300), "{k} {k2}");
            assert!((l - l2).abs() <= 1e-12 * l2.abs().max(1e-300));
        }
    }

    #[test]
    fn expiry_is_rejected() {
        assert!(kappa_lambda(100.0, 1.0, &spec(), 0.1).is_err());
    }

    #[test]
    fn theta_start_is_shared_and_terminal_is_zero() {
        let p = GbmParams::new(100.0, 0.1, 0.2, 0.05).unwrap();
        let set = simulate_paths(p, &TimeGrid::new(0.0, 1.0, 64).unwrap(), 30, 2).unwrap();
        let series = integrate_decomposition(&set, &spec()).unwrap();
        let t0 = series[0].theta[0];
        for s in &series {
            assert_eq!(s.theta[0], t0);
            assert_eq!(s.theta[64], 0.0);
            assert_eq!(s.kappa.len(), 64);
        }
    }

    #[test]
    fn degenerate_volatility_has_no_ito_integral() {
        let p = GbmParams::new(100.0, 0.1, 1e-12, 0.05).unwrap();
        let s = spec().with_sigma(1e-12);
        let set = simulate_paths(p, &TimeGrid::new(0.0, 1.0, 32).unwrap(), 5, 3).unwrap();
        for d in integrate_decomposition(&set, &s).unwrap() {
            assert!(d.i_lambda.abs() < 1e-12);
        }
    }

    #[test]
    fn streamed_matches_stored() {
        let p = GbmParams::new(100.0, 0.1, 0.2, 0.05).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 128).unwrap();
        let set = simulate_paths(p, &grid, 8, 4).unwrap();
        let stored = integrate_decomposition(&set, &spec()).unwrap();
        let generator = PathGenerator::new(p, grid.clone(), 4).unwrap();
        let split = split_index(&grid, 0.5).unwrap();
        let streamed = stream_decomposition(&generator, 8, &spec(), split, true).unwrap();
        for (a, b) in stored.iter().zip(&streamed) {
            let seg = a.segments(split);
            let tol = 1e-10 * (1.0 + a.i_kappa.abs());
            assert!((seg.kappa_early + seg.kappa_late - a.i_kappa).abs() < tol);
            assert!((seg.kappa_early - b.segments.kappa_early).abs() < tol);
            assert!((seg.lambda_late - b.segments.lambda_late).abs() < tol);
            assert!((a.defect - b.defect()).abs() < tol);
            assert_eq!(a.theta[split], b.theta_split);
            assert!(b.lambda_identity <= 1e-12);
        }
    }

    #[test]
    fn statistics_table_is_consistent() {
        let p = GbmParams::new(100.0, 0.1, 0.2, 0.05).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let generator = PathGenerator::new(p, grid.clone(), 5).unwrap();
        let split = split_index(&grid, 0.5).unwrap();
        let rows: Vec<_> = stream_decomposition(&generator, 300, &spec(), split, false)
            .unwrap()
            .into_iter()
            .map(|s| s.segments)
            .collect();
        let table = ensemble_statistics(&rows, 200, 9).unwrap();
        assert_eq!(table.len(), STATISTIC_NAMES.len());
        for row in &table {
            assert!(row.std_error.is_finite() && row.std_error >= 0.0, "{row:?}");
            if row.quantity.starts_with("var") {
                assert!(row.estimate >= 0.0);
            }
            if row.quantity.starts_with("cor") {
                assert!((-1.0..=1.0).contains(&row.estimate));
            }
        }
        assert!(ensemble_statistics(&rows, 50, 9).is_err());
        assert!(split_index(&grid, 0.51).is_err());
        assert!(split_index(&grid, 0.0).is_err());
    }

    #[test]
    fn conditional_correlation_flags_degenerate_volatility() {
        let s = spec().with_sigma(1e-12);
        let c = conditional_correlation(100.0, 0.5, &s, 0.1, 1000, 64, 1).unwrap();
        assert!(c.degenerate);
        assert!(c.correlation.is_nan());
    }

    #[test]
    fn conditional_correlation_validates() {
        assert!(conditional_correlation(100.0, 0.5, &spec(), 0.1, 10, 64, 1).is_err());
        assert!(conditional_correlation(100.0, 1.0, &spec(), 0.1, 1000, 64, 1).is_err());
    }

    #[test]
    fn conditional_correlation_is_strongly_negative() {
        let c = conditional_correlation(100.0, 0.5, &spec(), 0.1, 1000, 1024, 3).unwrap();
        assert!(!c.degenerate);
        assert!(c.correlation < -0.9, "{c:?}");
    }
}
