//! Standard normal CDF, quantile and logistic helpers.
//!
//! The CDF goes through `erfc` so that far-tail probabilities (down to
//! ~1e-300) keep full relative precision, which the genome-wide
//! significance levels (alpha = 5e-8) rely on. The quantile is Wichura's
//! AS 241 (PPND16) rational approximation, accurate to about 1e-15.

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function, 1 - Phi(x).
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Upper tail of the chi-square distribution with one degree of freedom.
///
/// P(X > t) = erfc(sqrt(t/2)) for t >= 0.
pub fn chi2_sf_1(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    libm::erfc((t / 2.0).sqrt())
}

/// Standard normal quantile (inverse CDF), AS 241 PPND16.
///
/// Panics are avoided: p outside (0,1) maps to +-infinity.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }

    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        let r = r - 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_132e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Logistic mean function, 1 / (1 + exp(-x)), computed without overflow.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(x)) without overflow.
pub fn log1pexp(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic variance weight mu * (1 - mu) at linear predictor eta.
///
/// Equals exp(-eta) / (1 + exp(-eta))^2.
pub fn logistic_weight(eta: f64) -> f64 {
    let mu = expit(eta);
    mu * (1.0 - mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    // Reference values computed with mpmath at 40 decimal digits.
    const Z_975: f64 = 1.959_963_984_540_054;
    const Z_80: f64 = 0.841_621_233_572_914_4;
    const Z_GW: f64 = 5.451_310_438_136_473; // Phi^-1(1 - 2.5e-8)

    #[test]
    fn quantile_frozen_values() {
        assert!((norm_quantile(0.975) - Z_975).abs() < 1e-14);
        assert!((norm_quantile(0.8) - Z_80).abs() < 1e-14);
        assert!((norm_quantile(1.0 - 2.5e-8) - Z_GW).abs() < 1e-12);
        assert!((norm_quantile(0.3) - (-0.524_400_512_708_040_8)).abs() < 1e-14);
        assert!((norm_quantile(1e-12) - (-7.034_483_825_301_132)).abs() < 1e-12);
        assert_eq!(norm_quantile(0.5), 0.0);
    }

    #[test]
    fn cdf_frozen_values() {
        assert!((norm_cdf(1.96) - 0.975_002_104_851_779_5).abs() < 1e-16);
        assert!((norm_cdf(-1.96) - 0.024_997_895_148_220_435).abs() < 1e-17);
        assert!((norm_cdf(-5.45) - 2.518_491_005_446_112e-8).abs() < 1e-20);
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(Z_80) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn chi2_sf_frozen_values() {
        // 95th percentile of chi2_1.
        assert!((chi2_sf_1(3.841459) - 0.049_999_994_653_195_77).abs() < 1e-15);
        assert!((chi2_sf_1(3.841_458_820_694_124_5) - 0.05).abs() < 1e-15);
        // Z = 5.45 squared: genome-wide boundary magnitude.
        assert!((chi2_sf_1(5.45 * 5.45) - 5.036_982_010_892_227e-8).abs() < 1e-20);
        assert_eq!(chi2_sf_1(0.0), 1.0);
        assert_eq!(chi2_sf_1(-1.0), 1.0);
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for &p in &[1e-10, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-7] {
            let z = norm_quantile(p);
            assert!(
                (norm_cdf(z) - p).abs() < 1e-14 * p.max(1e-3),
                "round trip failed at p={p}"
            );
        }
    }

    // Loose cross-check against an independent implementation; the
    // precision guarantee comes from the frozen mpmath values above.
    #[test]
    fn matches_statrs() {
        let n = Normal::new(0.0, 1.0).unwrap();
        for i in -60..=60 {
            let x = i as f64 * 0.1;
            let ours = norm_cdf(x);
            let theirs = n.cdf(x);
            assert!(
                (ours - theirs).abs() < 1e-10,
                "cdf mismatch at {x}: {ours} vs {theirs}"
            );
        }
        for i in 1..200 {
            let p = i as f64 / 200.0;
            assert!(
                (norm_quantile(p) - n.inverse_cdf(p)).abs() < 2e-8,
                "quantile mismatch at {p}"
            );
        }
    }

    #[test]
    fn expit_stability() {
        assert_eq!(expit(0.0), 0.5);
        assert!((expit(-1.386_294_361_119_890_6) - 0.2).abs() < 1e-15);
        assert_eq!(expit(-800.0), 0.0);
        assert_eq!(expit(800.0), 1.0);
        assert!((logistic_weight(0.0) - 0.25).abs() < 1e-16);
        assert!((logistic_weight(-1.386_294_361_119_890_6) - 0.16).abs() < 1e-15);
        // log1pexp against naive formula in the safe range
        for &x in &[-30.0, -1.0, 0.0, 2.5, 30.0] {
            assert!((log1pexp(x) - (1.0 + f64::exp(x)).ln()).abs() < 1e-12);
        }
        assert!((log1pexp(800.0) - 800.0).abs() < 1e-12);
    }
}
