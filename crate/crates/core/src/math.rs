//! Elementary functions routed through `libm` so results are identical with
//! and without `std`.

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal distribution function, `N(x) = erfc(-x / sqrt 2) / 2`.
///
/// `erfc` keeps full relative precision in the lower tail, so the absolute
/// error stays at the level of a few ulps of the result.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_matches_quadrature_oracle() {
        let mut x = -8.0;
        while x <= 8.0 {
            let oracle = sfc_oracles::normal_cdf(x);
            assert!((norm_cdf(x) - oracle).abs() <= 1e-15, "x = {x}");
            x += 0.173;
        }
    }

    #[test]
    fn cdf_at_canonical_d1() {
        // N(0.35) for the at-the-money one-year call.
        assert!((norm_cdf(0.35) - 0.636_831).abs() < 1e-6);
        assert!((norm_cdf(0.35) - sfc_oracles::normal_cdf(0.35)).abs() < 1e-15);
    }

    #[test]
    fn pdf_matches_closed_form() {
        let v = norm_pdf(0.35);
        let oracle = (-0.06125f64).exp() / (2.0 * core::f64::consts::PI).sqrt();
        assert!((v - oracle).abs() < 1e-16);
    }
}
