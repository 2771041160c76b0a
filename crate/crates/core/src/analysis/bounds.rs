//! A-priori bounds on the log-densities of any positive periodic solution
//! and the existence conditions built from them.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Serialize, Serializer};

use super::report::{ConditionEntry, ConditionReport};
use super::AnalysisError;
use crate::coefficients::{hat_mean, sup_inf, CoefficientExpr};
use crate::dynamics::CoefficientSet;

/// Threshold below which `|b11 b22 - b12 b21|` counts as zero.
pub const DETERMINANT_THRESHOLD: f64 = 1e-12;

/// A real number or negative infinity; `ln x = -inf` for `x <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
}

impl ExtendedReal {
    pub fn ln(x: f64) -> Self {
        if x > 0.0 {
            ExtendedReal::Finite(x.ln())
        } else {
            ExtendedReal::NegInfinity
        }
    }

    /// `exp(-inf) = 0`.
    pub fn exp(self) -> f64 {
        match self {
            ExtendedReal::NegInfinity => 0.0,
            ExtendedReal::Finite(v) => v.exp(),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
            ExtendedReal::Finite(v) => v,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }
}

impl Add<f64> for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: f64) -> ExtendedReal {
        match self {
            ExtendedReal::NegInfinity => ExtendedReal::NegInfinity,
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v + rhs),
        }
    }
}

impl Sub<f64> for ExtendedReal {
    type Output = ExtendedReal;

    fn sub(self, rhs: f64) -> ExtendedReal {
        self + (-rhs)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => write!(f, "-inf"),
            ExtendedReal::Finite(v) => write!(f, "{v:.12}"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::NegInfinity => s.serialize_str("-inf"),
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
        }
    }
}

/// Period averages and extremes the bounds are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub omega: f64,
    pub a_hat: [f64; 3],
    pub b11_hat: f64,
    pub b12_hat: f64,
    pub b21_hat: f64,
    pub b22_hat: f64,
    pub c1_over_gamma_hat: f64,
    pub c2_over_gamma_hat: f64,
    pub d1_hat: f64,
    pub d2_hat: f64,
    pub alpha_l: f64,
    pub alpha_u: f64,
    pub beta_u: f64,
    pub gamma_l: f64,
    pub gamma_u: f64,
}

impl BoundInputs {
    pub fn compute(params: &CoefficientSet) -> Result<Self, AnalysisError> {
        params.validate_periods()?;
        let omega = params.period();
        let ratio = |c: &crate::coefficients::PeriodicCoefficient, name: &str| -> Result<f64, AnalysisError> {
            let e = CoefficientExpr::coef(name, c) / CoefficientExpr::coef("gamma", &params.gamma);
            Ok(hat_mean(&e.with_period(omega)?)?)
        };
        let (alpha_u, alpha_l) = sup_inf(&params.alpha)?;
        let (beta_u, _) = sup_inf(&params.beta)?;
        let (gamma_u, gamma_l) = sup_inf(&params.gamma)?;
        Ok(Self {
            omega,
            a_hat: [params.a1.mean(), params.a2.mean(), params.a3.mean()],
            b11_hat: params.b11.mean(),
            b12_hat: params.b12.mean(),
            b21_hat: params.b21.mean(),
            b22_hat: params.b22.mean(),
            c1_over_gamma_hat: ratio(&params.c1, "c1")?,
            c2_over_gamma_hat: ratio(&params.c2, "c2")?,
            d1_hat: params.d1.mean(),
            d2_hat: params.d2.mean(),
            alpha_l,
            alpha_u,
            beta_u,
            gamma_l,
            gamma_u,
        })
    }
}

/// Lower (`L`) and upper (`H`) log-density bounds. Row index is the
/// species, column 1 is the upper ladder and column 2 the lower one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct ExistenceBounds {
    pub L11: ExtendedReal,
    pub L21: ExtendedReal,
    pub H11: ExtendedReal,
    pub H21: ExtendedReal,
    pub L12: ExtendedReal,
    pub L22: ExtendedReal,
    pub H12: ExtendedReal,
    pub H22: ExtendedReal,
    pub L31: ExtendedReal,
    pub H31: ExtendedReal,
    pub L32: ExtendedReal,
    pub H32: ExtendedReal,
    pub inputs: BoundInputs,
}

impl ExistenceBounds {
    pub fn from_inputs(p: &BoundInputs) -> Self {
        let [a1, a2, a3] = p.a_hat;
        let w = p.omega;
        let l11 = ExtendedReal::ln(a1 / p.b11_hat);
        let l21 = ExtendedReal::ln(a2 / p.b22_hat);
        let h11 = l11 + 2.0 * a1 * w;
        let h21 = l21 + 2.0 * a2 * w;
        let l12 = ExtendedReal::ln((a1 - p.b12_hat * h21.exp() - p.c1_over_gamma_hat) / p.b11_hat);
        let h12 = l12 - 2.0 * a1 * w;
        let l22 = ExtendedReal::ln((a2 - p.b21_hat * h11.exp() - p.c2_over_gamma_hat) / p.b22_hat);
        let h22 = l22 - 2.0 * a2 * w;
        let l31 = ExtendedReal::ln(
            (p.d1_hat * h11.exp() + p.d2_hat * h21.exp() - a3 * p.alpha_l) / (a3 * p.gamma_l),
        );
        let h31 = l31 + 2.0 * a3 * w;
        let l32 = ExtendedReal::ln(
            (p.d1_hat - a3 * p.beta_u) * h12.exp() + (p.d2_hat - a3 * p.beta_u) * h22.exp()
                - 2.0 * a3 * p.alpha_u,
        ) - (2.0 * a3 * p.gamma_u).ln();
        let h32 = l32 - 2.0 * a3 * w;
        Self {
            L11: l11,
            L21: l21,
            H11: h11,
            H21: h21,
            L12: l12,
            L22: l22,
            H12: h12,
            H22: h22,
            L31: l31,
            H31: h31,
            L32: l32,
            H32: h32,
            inputs: *p,
        }
    }
}

pub fn existence_bounds(params: &CoefficientSet) -> Result<ExistenceBounds, AnalysisError> {
    Ok(ExistenceBounds::from_inputs(&BoundInputs::compute(params)?))
}

/// The five existence conditions for a positive periodic solution.
pub fn check_h2(params: &CoefficientSet) -> Result<ConditionReport, AnalysisError> {
    let b = existence_bounds(params)?;
    let p = &b.inputs;
    let [a1, a2, a3] = p.a_hat;
    let det = p.b11_hat * p.b22_hat - p.b12_hat * p.b21_hat;
    let entries = vec![
        ConditionEntry::less(
            "H2.1",
            "1e-12 < |b11^ b22^ - b12^ b21^|",
            DETERMINANT_THRESHOLD,
            det.abs(),
        ),
        ConditionEntry::less(
            "H2.2",
            "b12^ e^H21 + (c1/gamma)^ < a1^",
            p.b12_hat * b.H21.exp() + p.c1_over_gamma_hat,
            a1,
        ),
        ConditionEntry::less(
            "H2.3",
            "b21^ e^H11 + (c2/gamma)^ < a2^",
            p.b21_hat * b.H11.exp() + p.c2_over_gamma_hat,
            a2,
        ),
        ConditionEntry::less(
            "H2.4",
            "a3^ alpha^l < d1^ e^H11 + d2^ e^H21",
            a3 * p.alpha_l,
            p.d1_hat * b.H11.exp() + p.d2_hat * b.H21.exp(),
        ),
        ConditionEntry::less(
            "H2.5",
            "2 a3^ alpha^u < (d1^ - a3^ beta^u) e^H12 + (d2^ - a3^ beta^u) e^H22",
            2.0 * a3 * p.alpha_u,
            (p.d1_hat - a3 * p.beta_u) * b.H12.exp() + (p.d2_hat - a3 * p.beta_u) * b.H22.exp(),
        ),
    ];
    Ok(ConditionReport::new("Existence of a positive periodic solution", entries))
}
