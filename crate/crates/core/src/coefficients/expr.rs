use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::sync::Arc;

use super::{
    check_period, extremes, CoefficientError, PeriodicCoefficient, PeriodicFunction,
    SampledPeriodicFunction,
};

/// Denominators whose magnitude falls below this are treated as zero.
pub const DIVISION_GUARD: f64 = 1e-12;

/// Pointwise arithmetic over periodic leaves.
///
/// Leaves carry a display name so that domain errors can point at the
/// offending subexpression, e.g. `c1 / gamma`.
#[derive(Debug, Clone)]
pub enum CoefficientExpr {
    Constant(f64),
    Coefficient(Arc<str>, PeriodicCoefficient),
    Sampled(Arc<str>, SampledPeriodicFunction),
    Add(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Sub(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Mul(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Div(Box<CoefficientExpr>, Box<CoefficientExpr>),
}

impl CoefficientExpr {
    pub fn coef(name: &str, c: &PeriodicCoefficient) -> Self {
        Self::Coefficient(name.into(), c.clone())
    }

    pub fn sampled(name: &str, f: &SampledPeriodicFunction) -> Self {
        Self::Sampled(name.into(), f.clone())
    }

    pub fn constant(v: f64) -> Self {
        Self::Constant(v)
    }

    pub fn eval(&self, t: f64) -> Result<f64, CoefficientError> {
        Ok(match self {
            Self::Constant(v) => *v,
            Self::Coefficient(_, c) => c.eval(t),
            Self::Sampled(_, f) => f.eval(t),
            Self::Add(l, r) => l.eval(t)? + r.eval(t)?,
            Self::Sub(l, r) => l.eval(t)? - r.eval(t)?,
            Self::Mul(l, r) => l.eval(t)? * r.eval(t)?,
            Self::Div(l, r) => {
                let den = r.eval(t)?;
                if den.abs() < DIVISION_GUARD {
                    return Err(CoefficientError::Domain {
                        node: r.to_string(),
                        t,
                    });
                }
                l.eval(t)? / den
            }
        })
    }

    /// Common period of all leaves; `None` for a purely constant expression.
    pub fn common_period(&self) -> Result<Option<f64>, CoefficientError> {
        let mut found: Option<(f64, String)> = None;
        self.visit_leaves(&mut |name, p| {
            match &found {
                None => found = Some((p, name.to_owned())),
                Some((q, _)) => {
                    if (p - q).abs() > super::PERIOD_MATCH_TOL * p.max(*q) {
                        return Err(CoefficientError::PeriodMismatch {
                            name: name.to_owned(),
                            expected: *q,
                            found: p,
                        });
                    }
                }
            }
            Ok(())
        })?;
        Ok(found.map(|(p, _)| p))
    }

    fn visit_leaves<F>(&self, f: &mut F) -> Result<(), CoefficientError>
    where
        F: FnMut(&str, f64) -> Result<(), CoefficientError>,
    {
        match self {
            Self::Constant(_) => Ok(()),
            Self::Coefficient(n, c) => f(n, c.period()),
            Self::Sampled(n, s) => f(n, s.period()),
            Self::Add(l, r) | Self::Sub(l, r) | Self::Mul(l, r) | Self::Div(l, r) => {
                l.visit_leaves(f)?;
                r.visit_leaves(f)
            }
        }
    }

    /// Checks period consistency and that every denominator stays away from
    /// zero over a full period (grid plus local refinement).
    pub fn validate(&self) -> Result<(), CoefficientError> {
        let period = self.common_period()?;
        self.validate_divisions(period)
    }

    fn validate_divisions(&self, period: Option<f64>) -> Result<(), CoefficientError> {
        match self {
            Self::Constant(_) | Self::Coefficient(..) | Self::Sampled(..) => Ok(()),
            Self::Add(l, r) | Self::Sub(l, r) | Self::Mul(l, r) => {
                l.validate_divisions(period)?;
                r.validate_divisions(period)
            }
            Self::Div(l, r) => {
                l.validate_divisions(period)?;
                r.validate_divisions(period)?;
                match period {
                    None => {
                        r.eval(0.0)?;
                    }
                    Some(p) => {
                        let e = extremes(&Bound { expr: r, period: p })?;
                        let straddles = e.min <= DIVISION_GUARD && e.max >= -DIVISION_GUARD;
                        if straddles {
                            let t = if e.min.abs() < e.max.abs() { e.argmin } else { e.argmax };
                            return Err(CoefficientError::Domain {
                                node: r.to_string(),
                                t,
                            });
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Binds the expression to its period so it can be averaged and bounded.
    /// Constant expressions need an explicit period.
    pub fn with_period(&self, fallback: f64) -> Result<BoundExpr, CoefficientError> {
        let period = self.common_period()?.unwrap_or(fallback);
        check_period(period)?;
        self.validate_divisions(Some(period))?;
        Ok(BoundExpr {
            expr: self.clone(),
            period,
        })
    }
}

struct Bound<'a> {
    expr: &'a CoefficientExpr,
    period: f64,
}

impl PeriodicFunction for Bound<'_> {
    fn period(&self) -> f64 {
        self.period
    }

    fn value(&self, t: f64) -> Result<f64, CoefficientError> {
        self.expr.eval(t)
    }
}

/// A validated expression together with its period.
#[derive(Debug, Clone)]
pub struct BoundExpr {
    expr: CoefficientExpr,
    period: f64,
}

impl BoundExpr {
    pub fn expr(&self) -> &CoefficientExpr {
        &self.expr
    }
}

impl PeriodicFunction for BoundExpr {
    fn period(&self) -> f64 {
        self.period
    }

    fn value(&self, t: f64) -> Result<f64, CoefficientError> {
        self.expr.eval(t)
    }

    fn exact_mean(&self) -> Option<f64> {
        match &self.expr {
            CoefficientExpr::Constant(v) => Some(*v),
            CoefficientExpr::Coefficient(_, c) => Some(c.mean()),
            _ => None,
        }
    }
}

impl fmt::Display for CoefficientExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => write!(f, "{v}"),
            Self::Coefficient(n, _) | Self::Sampled(n, _) => write!(f, "{n}"),
            Self::Add(l, r) => write!(f, "({l} + {r})"),
            Self::Sub(l, r) => write!(f, "({l} - {r})"),
            Self::Mul(l, r) => write!(f, "{l} * {r}"),
            Self::Div(l, r) => write!(f, "{l} / {r}"),
        }
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait for CoefficientExpr {
            type Output = CoefficientExpr;

            fn $method(self, rhs: CoefficientExpr) -> CoefficientExpr {
                CoefficientExpr::$variant(Box::new(self), Box::new(rhs))
            }
        }

        impl $trait<f64> for CoefficientExpr {
            type Output = CoefficientExpr;

            fn $method(self, rhs: f64) -> CoefficientExpr {
                CoefficientExpr::$variant(Box::new(self), Box::new(CoefficientExpr::Constant(rhs)))
            }
        }

        impl $trait<CoefficientExpr> for f64 {
            type Output = CoefficientExpr;

            fn $method(self, rhs: CoefficientExpr) -> CoefficientExpr {
                CoefficientExpr::$variant(Box::new(CoefficientExpr::Constant(self)), Box::new(rhs))
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, Mul);
binary_op!(Div, div, Div);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{hat_mean, sup_inf};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn c(mean: f64) -> PeriodicCoefficient {
        PeriodicCoefficient::constant(FRAC_PI_4, mean)
    }

    #[test]
    fn evaluates_arithmetic() {
        let f = CoefficientExpr::coef("a", &c(3.0).with_sin(1, 1.0));
        let g = CoefficientExpr::coef("b", &c(2.0));
        let e = (f.clone() + g.clone()) * 2.0 - f / g;
        assert_abs_diff_eq!(e.eval(0.0).unwrap(), 10.0 - 1.5, epsilon = 1e-15);
        assert_eq!(e.to_string(), "((a + b) * 2 - a / b)");
    }

    #[test]
    fn division_by_zero_names_node() {
        let s = c(0.0).with_sin(1, 1.0);
        let e = CoefficientExpr::constant(1.0) / CoefficientExpr::coef("sin8t", &s);
        match e.eval(0.0) {
            Err(CoefficientError::Domain { node, .. }) => assert_eq!(node, "sin8t"),
            other => panic!("unexpected {other:?}"),
        }
        match e.validate() {
            Err(CoefficientError::Domain { node, .. }) => assert_eq!(node, "sin8t"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_periods_rejected() {
        let e = CoefficientExpr::coef("a", &c(1.0)) + CoefficientExpr::coef("b", &PeriodicCoefficient::constant(1.0, 1.0));
        assert!(matches!(e.validate(), Err(CoefficientError::PeriodMismatch { .. })));
    }

    #[test]
    fn product_extremes() {
        // (3 + 0.2 cos 8t)(4 - 0.3 cos 8t)
        let f = CoefficientExpr::coef("beta", &c(3.0).with_cos(1, 0.2))
            * CoefficientExpr::coef("a3", &c(4.0).with_cos(1, -0.3));
        let (hi, lo) = sup_inf(&f.with_period(FRAC_PI_4).unwrap()).unwrap();
        assert_abs_diff_eq!(lo, 11.84, epsilon = 1e-8);
        // Interior maximum at cos 8t = -5/6.
        assert_abs_diff_eq!(hi, 12.0 + 0.01 / 0.24, epsilon = 1e-8);
    }

    #[test]
    fn hat_mean_of_leaf_is_exact() {
        let e = CoefficientExpr::coef("a", &c(3.0).with_sin(1, 1.0));
        assert_eq!(hat_mean(&e.with_period(FRAC_PI_4).unwrap()).unwrap(), 3.0);
    }
}
