use std::f64::consts::LN_2;

/// Tangent of `2^{-t}` at the SCA point `t̄`: the restriction `ε ≤ ζ̄ - ᾱ t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaCoefficients {
    pub alpha: f64,
    pub zeta: f64,
}

impl ScaCoefficients {
    /// Right-hand side `ζ̄ - ᾱ t` of the linearized MSE constraint.
    pub fn bound(&self, t: f64) -> f64 {
        self.zeta - self.alpha * t
    }
}

/// With `f(t) = 2^t`: `ᾱ = f'(t̄)/f(t̄)²`, `ζ̄ = (f(t̄) + t̄ f'(t̄))/f(t̄)²`.
pub fn sca_coefficients(t_bar: f64) -> ScaCoefficients {
    let f = t_bar.exp2();
    let df = LN_2 * f;
    ScaCoefficients {
        alpha: df / (f * f),
        zeta: (f + t_bar * df) / (f * f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn at_origin() {
        let c = sca_coefficients(0.0);
        assert_relative_eq!(c.alpha, LN_2, epsilon = 1e-15);
        assert_relative_eq!(c.zeta, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn at_one() {
        let c = sca_coefficients(1.0);
        assert_relative_eq!(c.alpha, LN_2 / 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.zeta, (1.0 + LN_2) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.bound(1.0), 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn tangent_touches_and_lower_bounds(t_bar in 0.0f64..30.0, t in 0.0f64..30.0) {
            let c = sca_coefficients(t_bar);
            prop_assert!((c.bound(t_bar) - (-t_bar).exp2()).abs() <= 1e-12);
            // tangent of a convex function lies below it
            prop_assert!(c.bound(t) <= (-t).exp2() + 1e-12);
        }
    }
}
