//! Gamma function and its reciprocal.
//!
//! Lanczos approximation (g = 10.900511, 11 terms, Pugh 2004) on `x >= 0.5`
//! and the reflection formula below that.

#![allow(clippy::excessive_precision)]

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 10.900511;

const LANCZOS_COEFFS: [f64; 11] = [
    2.485_740_891_387_535_655_46e-5,
    1.051_423_785_817_219_742_10,
    -3.456_870_972_220_162_354_69,
    4.512_277_094_668_948_237_00,
    -2.982_852_253_235_766_557_21,
    1.056_397_115_771_267_130_77,
    -1.954_287_731_916_458_695_83e-1,
    1.709_705_434_044_412_243_07e-2,
    -5.719_261_174_043_057_812_83e-4,
    4.633_994_733_599_056_367_08e-6,
    -2.719_949_084_886_077_039_10e-9,
];

/// 2 * sqrt(e / pi)
const TWO_SQRT_E_OVER_PI: f64 = 1.860_382_734_205_265_717_336_249_247_266_663_112_059;

fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn lanczos_sum(x: f64) -> f64 {
    LANCZOS_COEFFS
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_COEFFS[0], |s, (i, c)| s + c / (x + i as f64 - 1.0))
}

// Gamma on x >= 0.5. The power is split in two halves so that the
// intermediate does not overflow before x reaches 171.6.
fn gamma_lanczos(x: f64) -> f64 {
    let base = (x - 0.5 + LANCZOS_G) / E;
    let half = base.powf(0.5 * (x - 0.5));
    lanczos_sum(x) * TWO_SQRT_E_OVER_PI * half * half
}

/// Exact Gamma at the positive integers up to 23 (where (n-1)! is still exact in f64).
fn small_factorial(x: f64) -> Option<f64> {
    if (1.0..=23.0).contains(&x) && x == x.floor() {
        Some((1..x as u64).fold(1.0, |acc, k| acc * k as f64))
    } else {
        None
    }
}

/// sin(pi x) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).floor();
    // r in [0, 2)
    let (r, sign) = if r >= 1.0 { (r - 1.0, -1.0) } else { (r, 1.0) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

/// The Gamma function. Errors with [`Error::Pole`] at non-positive integers.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if x.is_nan() || is_pole(x) {
        return Err(Error::Pole(x));
    }
    if let Some(f) = small_factorial(x) {
        return Ok(f);
    }
    if x >= 0.5 {
        Ok(gamma_lanczos(x))
    } else {
        Ok(PI / (sin_pi(x) * gamma_lanczos(1.0 - x)))
    }
}

/// 1 / Gamma(x), exactly zero at the poles of Gamma.
pub fn recip_gamma(x: f64) -> f64 {
    if is_pole(x) {
        return 0.0;
    }
    if let Some(f) = small_factorial(x) {
        return 1.0 / f;
    }
    if x >= 0.5 {
        if x > 171.7 {
            return 0.0;
        }
        1.0 / gamma_lanczos(x)
    } else {
        sin_pi(x) * gamma_lanczos(1.0 - x) / PI
    }
}

/// Gamma(p) / Gamma(q) routed through [`recip_gamma`]; zero whenever `q` is a pole.
pub fn gamma_ratio(p: f64, q: f64) -> Result<f64> {
    let rq = recip_gamma(q);
    if rq == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_fn(p)? * rq)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 30-digit evaluator.
    const REFERENCE: [(f64, f64); 16] = [
        (1e-3, 999.423_772_484_595_445_3),
        (0.1, 9.513_507_698_668_731_285_8),
        (0.5, 1.772_453_850_905_516_027_3),
        (1.5, 0.886_226_925_452_758_013_65),
        (2.5, 1.329_340_388_179_137_020_5),
        (0.25, 3.625_609_908_221_908_311_9),
        (0.75, 1.225_416_702_465_177_645_1),
        (3.7, 4.170_651_783_796_604_030_1),
        (10.5, 1_133_278.388_948_785_567_3),
        (33.3, 7.487_577_596_522_632_327_4e35),
        (100.1, 1.478_454_494_651_475_011_5e156),
        (150.5, 4.661_072_627_097_377_918_4e261),
        (170.0, 4.269_068_009_004_705_274_9e304),
        (-0.5, -3.544_907_701_811_032_054_6),
        (-2.5, -0.945_308_720_482_941_881_23),
        (-1.25, 3.921_333_447_888_568_464_4),
    ];

    #[test]
    fn matches_reference_values() {
        for (x, want) in REFERENCE {
            let got = gamma_fn(x).unwrap();
            let rel = ((got - want) / want).abs();
            assert!(rel <= 1e-12, "Gamma({x}) = {got}, want {want}, rel {rel:e}");
        }
    }

    #[test]
    fn trivial_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert_eq!(gamma_fn(4.0).unwrap(), 6.0);
        assert!((gamma_fn(1.5).unwrap() / (PI.sqrt() / 2.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn poles() {
        for x in [0.0, -1.0, -2.0, -17.0] {
            assert_eq!(gamma_fn(x), Err(Error::Pole(x)));
            assert_eq!(recip_gamma(x), 0.0);
        }
        assert_eq!(recip_gamma(1.0), 1.0);
    }

    #[test]
    fn ratio_vanishes_at_pole() {
        assert_eq!(gamma_ratio(0.5, 0.0).unwrap(), 0.0);
        let r = gamma_ratio(2.0, 1.5).unwrap();
        assert!((r - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-14);
    }
}
