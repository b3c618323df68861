//! Geometric Brownian motion on uniform time grids.
//!
//! Paths are stepped in log space, `x[i+1] = x[i] * exp((mu - sigma^2/2) dt + sigma dW[i])`,
//! which is exact in distribution at the grid points. Every path draws from
//! its own ChaCha8 stream, selected by the path index under a key derived
//! from the run seed, so a path's values do not depend on which thread
//! produced it or in what order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{finite, positive, Error, Result};
use crate::exec;
use crate::math;

/// Upper bound on the number of `f64` values a [`PathSet`] may hold (2 GiB).
pub const MAX_PATHSET_VALUES: u128 = 1 << 28;

/// Stock dynamics `dx / x = mu dt + sigma dW` and the riskless rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub x0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
}

impl GbmParams {
    pub fn new(x0: f64, mu: f64, sigma: f64, r: f64) -> Result<Self> {
        let p = Self { x0, mu, sigma, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("x0", self.x0)?;
        finite("mu", self.mu)?;
        positive("sigma", self.sigma)?;
        finite("r", self.r)?;
        Ok(())
    }

    /// Same dynamics restarted from a different spot.
    pub fn with_spot(&self, x0: f64) -> Self {
        Self { x0, ..*self }
    }
}

/// Uniform grid `t0 = times[0] < ... < times[n_steps] = maturity`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    maturity: f64,
    dt: f64,
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t0: f64, maturity: f64, n_steps: usize) -> Result<Self> {
        finite("t0", t0)?;
        finite("maturity", maturity)?;
        if maturity <= t0 {
            return Err(Error::InvalidParameter {
                name: "maturity",
                reason: "must be after t0",
            });
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "must be >= 1",
            });
        }
        let span = maturity - t0;
        let mut times: Vec<f64> = (0..=n_steps)
            .map(|i| t0 + i as f64 * span / n_steps as f64)
            .collect();
        times[n_steps] = maturity;
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "too fine for the time span in floating point",
            });
        }
        Ok(Self {
            t0,
            maturity,
            dt: span / n_steps as f64,
            times,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Index of the node equal to `t`, within a tolerance of `1e-9 * dt`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let pos = (t - self.t0) / self.dt;
        let i = libm::round(pos);
        if i < 0.0 || i > self.n_steps() as f64 {
            return None;
        }
        let i = i as usize;
        ((self.times[i] - t).abs() <= 1e-9 * self.dt).then_some(i)
    }
}

/// Deterministic source of paths. `path(p)` always yields the same values.
#[derive(Debug, Clone)]
pub struct PathGenerator {
    params: GbmParams,
    grid: TimeGrid,
    seed: u64,
    key: [u8; 32],
    drift_dt: f64,
    sqrt_dt: f64,
}

impl PathGenerator {
    pub fn new(params: GbmParams, grid: TimeGrid, seed: u64) -> Result<Self> {
        params.validate()?;
        let key = {
            let mut expand = ChaCha8Rng::seed_from_u64(seed);
            let mut k = [0u8; 32];
            expand.fill(&mut k[..]);
            k
        };
        let dt = grid.dt();
        Ok(Self {
            drift_dt: (params.mu - 0.5 * params.sigma * params.sigma) * dt,
            sqrt_dt: math::sqrt(dt),
            params,
            grid,
            seed,
            key,
        })
    }

    pub fn params(&self) -> &GbmParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The random stream owned by `path`.
    pub fn stream(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(path as u64);
        rng
    }

    /// Writes path `path` into `prices` (`n_steps + 1` values) and `wiener`
    /// (`n_steps` increments).
    pub fn fill(&self, path: usize, prices: &mut [f64], wiener: &mut [f64]) {
        let n = self.grid.n_steps();
        debug_assert_eq!(prices.len(), n + 1);
        debug_assert_eq!(wiener.len(), n);
        let mut rng = self.stream(path);
        let mut x = self.params.x0;
        prices[0] = x;
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let dw = self.sqrt_dt * z;
            x *= math::exp(self.drift_dt + self.params.sigma * dw);
            wiener[i] = dw;
            prices[i + 1] = x;
        }
    }

    /// Walks path `path` without storing it, calling `step(i, x_i, dw_i, x_{i+1})`
    /// for every step. Drawn values equal those of [`Self::fill`].
    pub fn walk(&self, path: usize, mut step: impl FnMut(usize, f64, f64, f64)) -> f64 {
        let mut rng = self.stream(path);
        let mut x = self.params.x0;
        for i in 0..self.grid.n_steps() {
            let z: f64 = rng.sample(StandardNormal);
            let dw = self.sqrt_dt * z;
            let next = x * math::exp(self.drift_dt + self.params.sigma * dw);
            step(i, x, dw, next);
            x = next;
        }
        x
    }

    /// Owned copy of one path.
    pub fn path(&self, path: usize) -> Path {
        let n = self.grid.n_steps();
        let mut prices = vec![0.0; n + 1];
        let mut wiener = vec![0.0; n];
        self.fill(path, &mut prices, &mut wiener);
        Path { prices, wiener }
    }

    /// Terminal price of `path`, drawing the same stream as [`Self::fill`].
    pub fn terminal(&self, path: usize) -> f64 {
        self.walk(path, |_, _, _, _| {})
    }

    /// Terminal prices of paths `0..n_paths`.
    pub fn terminals(&self, n_paths: usize) -> Vec<f64> {
        exec::map_indexed(n_paths, |p| self.terminal(p))
    }

    /// Scratch buffers sized for this grid.
    pub fn buffers(&self) -> Path {
        let n = self.grid.n_steps();
        Path {
            prices: vec![0.0; n + 1],
            wiener: vec![0.0; n],
        }
    }
}

/// One owned path.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub prices: Vec<f64>,
    pub wiener: Vec<f64>,
}

impl Path {
    pub fn view(&self) -> PathView<'_> {
        PathView {
            prices: &self.prices,
            wiener: &self.wiener,
        }
    }
}

/// Borrowed prices (`n + 1`) and Wiener increments (`n`) of one path.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub prices: &'a [f64],
    pub wiener: &'a [f64],
}

/// A materialized ensemble of paths, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    params: GbmParams,
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    prices: Vec<f64>,
    wiener: Vec<f64>,
}

/// Simulates `n_paths` paths of `params` on `grid`.
pub fn simulate_paths(
    params: GbmParams,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    params.validate()?;
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "must be >= 1",
        });
    }
    let n = grid.n_steps();
    let values = n_paths as u128 * (2 * n as u128 + 1);
    if values > MAX_PATHSET_VALUES {
        return Err(Error::TooLarge {
            values,
            limit: MAX_PATHSET_VALUES,
        });
    }
    let generator = PathGenerator::new(params, grid.clone(), seed)?;
    let paths = exec::map_indexed(n_paths, |p| generator.path(p));
    let mut prices = Vec::with_capacity(n_paths * (n + 1));
    let mut wiener = Vec::with_capacity(n_paths * n);
    for path in paths {
        prices.extend_from_slice(&path.prices);
        wiener.extend_from_slice(&path.wiener);
    }
    Ok(PathSet {
        params,
        grid: grid.clone(),
        n_paths,
        seed,
        prices,
        wiener,
    })
}

impl PathSet {
    pub fn params(&self) -> &GbmParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn prices(&self, path: usize) -> &[f64] {
        let w = self.grid.n_steps() + 1;
        &self.prices[path * w..(path + 1) * w]
    }

    pub fn wiener(&self, path: usize) -> &[f64] {
        let w = self.grid.n_steps();
        &self.wiener[path * w..(path + 1) * w]
    }

    pub fn path(&self, path: usize) -> PathView<'_> {
        PathView {
            prices: self.prices(path),
            wiener: self.wiener(path),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PathView<'_>> + '_ {
        (0..self.n_paths).map(move |p| self.path(p))
    }
}

/// Realized quadratic variation of one path and its compensator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticVariation {
    /// `sum (x[i+1] - x[i])^2`
    pub realized: f64,
    /// `sum sigma^2 x[i]^2 dt`
    pub compensator: f64,
}

pub fn path_quadratic_variation(prices: &[f64], sigma: f64, dt: f64) -> QuadraticVariation {
    let mut realized = 0.0;
    let mut compensator = 0.0;
    for w in prices.windows(2) {
        let dx = w[1] - w[0];
        realized += dx * dx;
        compensator += sigma * sigma * w[0] * w[0] * dt;
    }
    QuadraticVariation {
        realized,
        compensator,
    }
}

pub fn quadratic_variation(paths: &PathSet) -> Vec<QuadraticVariation> {
    let sigma = paths.params.sigma;
    let dt = paths.grid.dt();
    paths
        .iter()
        .map(|p| path_quadratic_variation(p.prices, sigma, dt))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn canonical() -> GbmParams {
        GbmParams::new(100.0, 0.05, 0.2, 0.05).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(TimeGrid::new(0.0, 1.0, 1).unwrap().times(), &[0.0, 1.0]);
        assert_eq!(TimeGrid::new(0.5, 1.5, 2).unwrap().times(), &[0.5, 1.0, 1.5]);
        assert_eq!(g.index_of(0.5), Some(2));
        assert_eq!(g.index_of(0.6), None);
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(matches!(
            TimeGrid::new(f64::NAN, 1.0, 2),
            Err(Error::NonFinite("t0"))
        ));
        assert!(TimeGrid::new(0.0, f64::INFINITY, 2).is_err());
    }

    #[test]
    fn params_reject_zero_sigma() {
        assert!(GbmParams::new(100.0, 0.05, 0.0, 0.05).is_err());
        assert!(GbmParams::new(-1.0, 0.05, 0.2, 0.05).is_err());
        assert!(GbmParams::new(100.0, f64::NAN, 0.2, 0.05).is_err());
    }

    #[test]
    fn oversized_pathset_is_rejected_before_allocation() {
        let grid = TimeGrid::new(0.0, 1.0, 1 << 20).unwrap();
        let err = simulate_paths(canonical(), &grid, 1 << 20, 1).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
    }

    #[test]
    fn degenerate_volatility_gives_deterministic_growth() {
        let params = GbmParams::new(100.0, 0.05, 1e-12, 0.05).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let set = simulate_paths(params, &grid, 10, 3).unwrap();
        for p in set.iter() {
            assert!((p.prices[16] - 105.127_109_637_602_4).abs() < 1e-6);
        }
        for q in quadratic_variation(&set) {
            assert!(q.compensator < 1e-18);
        }
        // only drift remains, so realized variation vanishes like dt
        let fine = |n| {
            let set = simulate_paths(params, &TimeGrid::new(0.0, 1.0, n).unwrap(), 1, 3).unwrap();
            quadratic_variation(&set)[0].realized
        };
        let (coarse, finer) = (fine(1024), fine(2048));
        assert!(finer < 2e-2);
        assert!((coarse / finer - 2.0).abs() < 1e-2);
    }

    #[test]
    fn log_exact_stepping() {
        let params = canonical();
        let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let set = simulate_paths(params, &grid, 20, 11).unwrap();
        let drift = (params.mu - 0.5 * params.sigma * params.sigma) * grid.dt();
        for p in set.iter() {
            assert_eq!(p.prices[0], 100.0);
            for i in 0..64 {
                let resid = (p.prices[i + 1] / p.prices[i]).ln() - drift - params.sigma * p.wiener[i];
                assert!(resid.abs() < 1e-15, "{resid}");
                assert!(p.prices[i + 1] > 0.0);
            }
        }
    }

    #[test]
    fn terminal_matches_full_path() {
        let grid = TimeGrid::new(0.0, 1.0, 8).unwrap();
        let g = PathGenerator::new(canonical(), grid, 5).unwrap();
        for p in 0..10 {
            assert_eq!(g.terminal(p), g.path(p).prices[8]);
        }
    }

    #[test]
    fn paths_use_distinct_streams() {
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let set = simulate_paths(canonical(), &grid, 3, 9).unwrap();
        assert_ne!(set.wiener(0), set.wiener(1));
        let other = simulate_paths(canonical(), &grid, 3, 10).unwrap();
        assert_ne!(set.wiener(0), other.wiener(0));
        assert_eq!(set, simulate_paths(canonical(), &grid, 3, 9).unwrap());
    }

    #[test]
    fn wiener_increments_have_variance_dt() {
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let set = simulate_paths(canonical(), &grid, 2000, 42).unwrap();
        let all: Vec<f64> = (0..2000).flat_map(|p| set.wiener(p).to_vec()).collect();
        let m = stats::Moments::from_slice(&all);
        assert!(m.mean().abs() < 3.0 * m.std_error());
        // var estimate SE ~ dt * sqrt(2 / n)
        let se = grid.dt() * (2.0 / all.len() as f64).sqrt();
        assert!((m.variance() - grid.dt()).abs() < 4.0 * se);
    }

    #[test]
    fn terminal_mean_matches_lognormal_moment() {
        let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
        let g = PathGenerator::new(canonical(), grid, 2024).unwrap();
        let m = stats::Moments::from_slice(&g.terminals(200_000));
        let expected = 100.0 * 0.05f64.exp();
        assert!((m.mean() - expected).abs() < 3.0 * m.std_error());
    }

    #[test]
    fn realized_qv_tracks_compensator() {
        let grid = TimeGrid::new(0.0, 1.0, 2000).unwrap();
        let set = simulate_paths(canonical(), &grid, 200, 8).unwrap();
        let qv = quadratic_variation(&set);
        let ratio: f64 = qv.iter().map(|q| q.realized / q.compensator).sum::<f64>() / qv.len() as f64;
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
    }
}
