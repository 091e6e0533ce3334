//! Bump (cutoff) profiles: 0 on `[0, eps]`, 1 on `[1-eps, 1]`, monotone in
//! between. Arguments outside `[0, 1]` continue the flat values, so a bump is
//! total on the real line and smooth across the junctions up to its class.

use super::ExprError;
use serde::{Deserialize, Serialize};

/// Smoothness class of the transition profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpClass {
    /// Quintic smoothstep `6u^5 - 15u^4 + 10u^3`: C^2 junctions, closed-form
    /// derivatives of every order.
    PolynomialC2,
    /// `exp(-1/u)` blend: C^infinity junctions; derivatives available up to
    /// order 2.
    ExponentialFlat,
}

impl BumpClass {
    pub fn name(self) -> &'static str {
        match self {
            BumpClass::PolynomialC2 => "polynomial-c2",
            BumpClass::ExponentialFlat => "exponential-flat",
        }
    }
}

/// Specification of a bump profile: the flat-zero interval ends at
/// `flat_end`, the flat-one interval starts at `1 - flat_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub flat_end: f64,
    pub class: BumpClass,
}

/// Quintic smoothstep coefficients, constant through u^5.
const SMOOTHSTEP: [f64; 6] = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec {
            flat_end: 0.25,
            class: BumpClass::PolynomialC2,
        }
    }
}

impl BumpSpec {
    pub fn new(flat_end: f64, class: BumpClass) -> Result<Self, ExprError> {
        if !(flat_end > 0.0 && flat_end < 0.5) {
            return Err(ExprError::InvalidBump(format!(
                "flat_end must lie in (0, 0.5), got {flat_end}"
            )));
        }
        Ok(BumpSpec { flat_end, class })
    }

    /// Value of the `deriv`-th derivative of the profile at `x`.
    pub fn value(&self, x: f64, deriv: u32) -> Result<f64, ExprError> {
        let e = self.flat_end;
        let w = 1.0 - 2.0 * e;
        if x <= e {
            return Ok(0.0);
        }
        if x >= 1.0 - e {
            return Ok(if deriv == 0 { 1.0 } else { 0.0 });
        }
        let u = (x - e) / w;
        match self.class {
            BumpClass::PolynomialC2 => {
                // k-th derivative of the quintic, chain-scaled by w^-k.
                let mut coeffs: Vec<f64> = SMOOTHSTEP.to_vec();
                for _ in 0..deriv {
                    coeffs = coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(i, c)| c * i as f64)
                        .collect();
                    if coeffs.is_empty() {
                        return Ok(0.0);
                    }
                }
                let mut v = 0.0;
                for c in coeffs.iter().rev() {
                    v = v * u + c;
                }
                Ok(v / w.powi(deriv as i32))
            }
            BumpClass::ExponentialFlat => {
                let v = exp_flat(u, deriv)?;
                Ok(v / w.powi(deriv as i32))
            }
        }
    }

    pub(crate) fn order_key(&self) -> (u64, u8) {
        let class = match self.class {
            BumpClass::PolynomialC2 => 0,
            BumpClass::ExponentialFlat => 1,
        };
        (self.flat_end.to_bits(), class)
    }
}

/// Derivatives of `s(u) = p/(p+q)` with `p = exp(-1/u)`, `q = exp(-1/(1-u))`
/// for `u` strictly inside (0, 1).
fn exp_flat(u: f64, deriv: u32) -> Result<f64, ExprError> {
    let p = (-1.0 / u).exp();
    let q = (-1.0 / (1.0 - u)).exp();
    let d = p + q;
    match deriv {
        0 => Ok(p / d),
        1 => {
            // s' = p q (u^-2 + (1-u)^-2) / d^2
            let m = u.powi(-2) + (1.0 - u).powi(-2);
            Ok(p * q * m / (d * d))
        }
        2 => {
            // s'' = (N' d - 2 N d') / d^3 with N = p q m.
            let m = u.powi(-2) + (1.0 - u).powi(-2);
            let m1 = -2.0 * u.powi(-3) + 2.0 * (1.0 - u).powi(-3);
            let p1 = p / (u * u);
            let q1 = -q / ((1.0 - u) * (1.0 - u));
            let n = p * q * m;
            let n1 = (p1 * q + p * q1) * m + p * q * m1;
            let d1 = p1 + q1;
            Ok((n1 * d - 2.0 * n * d1) / (d * d * d))
        }
        order => Err(ExprError::UnsupportedDerivative {
            class: "exponential-flat",
            order,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_flat_end() {
        assert!(BumpSpec::new(0.0, BumpClass::PolynomialC2).is_err());
        assert!(BumpSpec::new(0.5, BumpClass::PolynomialC2).is_err());
        assert!(BumpSpec::new(0.25, BumpClass::PolynomialC2).is_ok());
    }

    #[test]
    fn polynomial_derivative_vanishes_at_junctions() {
        let spec = BumpSpec::default();
        for x in [spec.flat_end, 1.0 - spec.flat_end] {
            assert_eq!(spec.value(x, 1).unwrap(), 0.0);
            assert_eq!(spec.value(x, 2).unwrap(), 0.0);
        }
        // One-sided limits from the transition side also vanish (C^2).
        let eps = 1e-9;
        assert!(spec.value(spec.flat_end + eps, 1).unwrap().abs() < 1e-15);
        assert!(spec.value(1.0 - spec.flat_end - eps, 2).unwrap().abs() < 1e-6);
    }

    #[test]
    fn interval_and_monotonicity_invariants_dense_sample() {
        for class in [BumpClass::PolynomialC2, BumpClass::ExponentialFlat] {
            for flat_end in [0.1, 0.25, 0.4] {
                let spec = BumpSpec::new(flat_end, class).unwrap();
                let n = 10_000;
                let mut prev = -1.0;
                for i in 0..=n {
                    let x = i as f64 / n as f64;
                    let v = spec.value(x, 0).unwrap();
                    if x <= flat_end {
                        assert_eq!(v, 0.0, "flat zero violated at {x} ({class:?})");
                    }
                    if x >= 1.0 - flat_end {
                        assert_eq!(v, 1.0, "flat one violated at {x} ({class:?})");
                    }
                    assert!(
                        v >= prev - 1e-12,
                        "monotonicity violated at {x} ({class:?})"
                    );
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn exp_flat_higher_derivative_unsupported() {
        let spec = BumpSpec::new(0.25, BumpClass::ExponentialFlat).unwrap();
        assert!(matches!(
            spec.value(0.5, 3),
            Err(ExprError::UnsupportedDerivative { .. })
        ));
        // Flat regions are exactly zero for any order.
        assert_eq!(spec.value(0.1, 7).unwrap(), 0.0);
    }

    #[test]
    fn exp_flat_first_derivative_matches_finite_difference() {
        let spec = BumpSpec::new(0.25, BumpClass::ExponentialFlat).unwrap();
        let h = 1e-6;
        for x in [0.3, 0.5, 0.62] {
            let fd = (spec.value(x + h, 0).unwrap() - spec.value(x - h, 0).unwrap()) / (2.0 * h);
            let exact = spec.value(x, 1).unwrap();
            assert!((fd - exact).abs() < 1e-6, "x={x}: fd={fd} exact={exact}");
        }
    }

    #[test]
    fn poly_second_derivative_matches_finite_difference() {
        let spec = BumpSpec::default();
        let h = 1e-5;
        for x in [0.3, 0.5, 0.7] {
            let fd = (spec.value(x + h, 1).unwrap() - spec.value(x - h, 1).unwrap()) / (2.0 * h);
            let exact = spec.value(x, 2).unwrap();
            assert!((fd - exact).abs() < 1e-6, "x={x}: fd={fd} exact={exact}");
        }
    }
}
