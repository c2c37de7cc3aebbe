//! Closed-form body-composition estimators: BMI, Siri's density equation and
//! the U.S. Navy circumference method (male form).
//!
//! Inputs are in canonical units (kg, m or cm, g/cm³ as noted per function).
//! Unit conversion belongs to ingestion; nothing here converts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounds for reporting-range clamping of body-fat estimates.
pub const BF_CLAMP_RANGE: (f64, f64) = (0.0, 75.0);

/// Body density in g/cm³, restricted to the physiological open interval (0.8, 1.2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BodyDensity(f64);

impl BodyDensity {
    pub const MIN: f64 = 0.8;
    pub const MAX: f64 = 1.2;

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > Self::MIN && value < Self::MAX {
            Ok(Self(value))
        } else {
            Err(Error::domain(
                "density",
                format!(
                    "{value} g/cm³ is outside the physiological range ({}, {})",
                    Self::MIN,
                    Self::MAX
                ),
            ))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Body fat as a percentage of body mass. Holds the raw formula output.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BfPercent(f64);

impl BfPercent {
    pub fn new(value: f64) -> Self {
        Self(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The value limited to [0, 75] %.
    pub fn clamped(self) -> Self {
        Self(self.0.clamp(BF_CLAMP_RANGE.0, BF_CLAMP_RANGE.1))
    }

    /// Applies [`BfPercent::clamped`] only when `clamp` is set.
    pub fn reported(self, clamp: bool) -> Self {
        if clamp {
            self.clamped()
        } else {
            self
        }
    }
}

fn require_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(field, format!("must be positive, got {value}")))
    }
}

/// Body Mass Index in kg/m² from weight (kg) and height (m).
pub fn bmi(weight_kg: f64, height_m: f64) -> Result<f64> {
    require_positive("weight", weight_kg)?;
    require_positive("height", height_m)?;
    Ok(weight_kg / (height_m * height_m))
}

/// Siri's equation: BF% = 495/ρ − 450.
pub fn siri_bf(density: BodyDensity) -> BfPercent {
    BfPercent(495.0 / density.value() - 450.0)
}

/// Constants of the Navy log-circumference density model
/// `ρ = a − b·log10(waist − neck) + c·log10(height)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavyConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NavyConstants {
    /// Metric male form (circumferences and height in cm).
    pub const MALE_METRIC: NavyConstants = NavyConstants {
        a: 1.0324,
        b: 0.19077,
        c: 0.15456,
    };
}

impl Default for NavyConstants {
    fn default() -> Self {
        Self::MALE_METRIC
    }
}

/// U.S. Navy body-fat estimate for men (cm inputs), standard metric constants.
pub fn navy_bf_male(waist_cm: f64, neck_cm: f64, height_cm: f64) -> Result<BfPercent> {
    navy_bf_with(NavyConstants::MALE_METRIC, waist_cm, neck_cm, height_cm)
}

/// Navy estimate with caller-supplied constants.
pub fn navy_bf_with(
    constants: NavyConstants,
    waist_cm: f64,
    neck_cm: f64,
    height_cm: f64,
) -> Result<BfPercent> {
    require_positive("neck", neck_cm)?;
    require_positive("height", height_cm)?;
    if !(waist_cm.is_finite() && waist_cm > neck_cm) {
        return Err(Error::domain(
            "waist",
            format!("waist ({waist_cm} cm) must exceed neck ({neck_cm} cm)"),
        ));
    }
    let density =
        constants.a - constants.b * (waist_cm - neck_cm).log10() + constants.c * height_cm.log10();
    Ok(BfPercent(495.0 / density - 450.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bmi_examples() {
        assert_eq!(bmi(3.24, 1.8).unwrap(), 1.0);
        assert!((bmi(80.0, 1.8).unwrap() - 24.691358024691358).abs() < 1e-12);
        match bmi(80.0, 0.0) {
            Err(Error::Domain { field, .. }) => assert_eq!(field, "height"),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(bmi(-1.0, 1.8).is_err());
    }

    #[test]
    fn siri_examples() {
        assert!(siri_bf(BodyDensity::new(1.1).unwrap()).value().abs() < 1e-12);
        assert!((siri_bf(BodyDensity::new(0.99).unwrap()).value() - 50.0).abs() < 1e-12);
        assert_eq!(siri_bf(BodyDensity::new(1.0).unwrap()).value(), 45.0);
    }

    #[test]
    fn density_domain() {
        assert!(BodyDensity::new(0.8).is_err());
        assert!(BodyDensity::new(1.2).is_err());
        assert!(BodyDensity::new(f64::NAN).is_err());
        assert!(BodyDensity::new(1.05).is_ok());
    }

    #[test]
    fn navy_examples() {
        assert!(matches!(
            navy_bf_male(38.0, 38.0, 180.0),
            Err(Error::Domain { .. })
        ));
        // frozen from a direct evaluation of the formula
        let at_90 = navy_bf_male(90.0, 38.0, 180.0).unwrap().value();
        assert!((at_90 - 19.811988411785478).abs() < 1e-9);
        let at_91 = navy_bf_male(91.0, 38.0, 180.0).unwrap().value();
        assert!((at_91 - 20.516749963295922).abs() < 1e-9);
        assert!(at_91 > at_90);
    }

    #[test]
    fn clamp_is_opt_in() {
        let raw = BfPercent::new(-3.0);
        assert_eq!(raw.reported(false).value(), -3.0);
        assert_eq!(raw.reported(true).value(), 0.0);
        assert_eq!(BfPercent::new(90.0).clamped().value(), 75.0);
    }

    proptest! {
        #[test]
        fn siri_strictly_decreasing(a in 0.80001f64..1.19999, b in 0.80001f64..1.19999) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let f_lo = siri_bf(BodyDensity::new(lo).unwrap()).value();
            let f_hi = siri_bf(BodyDensity::new(hi).unwrap()).value();
            prop_assert!(f_lo > f_hi);
        }

        #[test]
        fn navy_monotone(neck in 30.0f64..45.0, gap in 5.0f64..80.0, dw in 0.01f64..10.0, h in 150.0f64..210.0) {
            let waist = neck + gap;
            let base = navy_bf_male(waist, neck, h).unwrap().value();
            prop_assert!(navy_bf_male(waist + dw, neck, h).unwrap().value() > base);
            let thicker_neck = navy_bf_male(waist, neck + dw.min(gap / 2.0), h).unwrap().value();
            prop_assert!(thicker_neck < base);
        }

        #[test]
        fn bmi_scale_consistent(w in 1.0f64..300.0, h in 0.5f64..2.5, k in 0.01f64..100.0) {
            let a = bmi(w, h).unwrap();
            let b = bmi(k * w, k.sqrt() * h).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn formulas_are_pure(w in 1.0f64..300.0, h in 0.5f64..2.5) {
            prop_assert_eq!(bmi(w, h).unwrap().to_bits(), bmi(w, h).unwrap().to_bits());
        }
    }
}
