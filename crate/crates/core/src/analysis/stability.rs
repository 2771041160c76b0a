//! Pointwise hypotheses for global stability of the boundary orbit.

use serde::Serialize;

use super::boundary::{check_e27, A12Profile};
use super::report::{ConditionEntry, ConditionReport};
use super::AnalysisError;
use crate::coefficients::{extremes, CoefficientExpr as E};
use crate::dynamics::CoefficientSet;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub conditions: ConditionReport,
    /// Hypothesis (i): competition and predation conditions together.
    pub verdict_i: bool,
    /// Hypothesis (ii): predation condition with `c1 + c2 + d1 + d2`.
    pub verdict_ii: bool,
    /// Hypothesis (iii): predation condition with `d1 + d2` only.
    pub verdict_iii: bool,
    /// `min_t (b22 - b12)`.
    pub margin_b12: f64,
    /// `min_t (b11 - b21)`.
    pub margin_b21: f64,
    /// `min_t (beta a3 - (c1 + c2 + d1 + d2))`.
    pub margin_cd: f64,
    /// `min_t (beta a3 - (d1 + d2))`.
    pub margin_d: f64,
    pub min_beta_a3: f64,
    pub max_beta_a3: f64,
    pub min_cd_sum: f64,
    pub max_cd_sum: f64,
    /// Decay margin `-max_t max{(c1+c2+d1+d2 - beta a3)/beta, b_ij - b_jj}`.
    pub mu1: f64,
    /// Present when the boundary orbit could be computed.
    pub a12: Option<A12Profile>,
}

/// Evaluates the stability hypotheses pointwise in `t` over one period.
pub fn check_thm2(params: &CoefficientSet) -> Result<StabilityReport, AnalysisError> {
    params.validate_periods()?;
    let omega = params.period();
    let c = |name: &str| {
        let coef = params
            .named()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| c)
            .expect("known coefficient name");
        E::coef(name, coef)
    };
    let ext = |e: E| e.with_period(omega).and_then(|b| extremes(&b));

    let beta_a3 = c("beta") * c("a3");
    let cd_sum = c("c1") + c("c2") + c("d1") + c("d2");
    let d_sum = c("d1") + c("d2");

    let beta_a3_ext = ext(beta_a3.clone())?;
    let cd_ext = ext(cd_sum.clone())?;
    let margin_cd = ext(beta_a3.clone() - cd_sum.clone())?.min;
    let margin_d = ext(beta_a3.clone() - d_sum)?.min;
    let margin_b12 = ext(c("b22") - c("b12"))?.min;
    let margin_b21 = ext(c("b11") - c("b21"))?.min;
    let scaled_cd = ext((beta_a3 - cd_sum) / c("beta"))?.min;
    let mu1 = scaled_cd.min(margin_b12).min(margin_b21);

    let pointwise = |name: &str, relation: &str, margin: f64| ConditionEntry::less(name, relation, -margin, 0.0);
    let entries = vec![
        pointwise("i.b12", "max_t (b12 - b22) < 0", margin_b12),
        pointwise("i.b21", "max_t (b21 - b11) < 0", margin_b21),
        pointwise("i.cd", "max_t (c1 + c2 + d1 + d2 - beta a3) < 0", margin_cd),
        pointwise("iii.d", "max_t (d1 + d2 - beta a3) < 0", margin_d),
    ];
    let verdict_ii = margin_cd > 0.0;
    let verdict_i = verdict_ii && margin_b12 > 0.0 && margin_b21 > 0.0;
    let verdict_iii = margin_d > 0.0;

    Ok(StabilityReport {
        conditions: ConditionReport::new("Stability hypotheses for the boundary orbit", entries),
        verdict_i,
        verdict_ii,
        verdict_iii,
        margin_b12,
        margin_b21,
        margin_cd,
        margin_d,
        min_beta_a3: beta_a3_ext.min,
        max_beta_a3: beta_a3_ext.max,
        min_cd_sum: cd_ext.min,
        max_cd_sum: cd_ext.max,
        mu1,
        a12: check_e27(params).ok().map(|r| r.a12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::PeriodicCoefficient;
    use crate::scenarios;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_competition_failure() {
        let mut p = scenarios::fig2();
        let w = p.period();
        p.b12 = PeriodicCoefficient::constant(w, 2.0);
        p.b22 = PeriodicCoefficient::constant(w, 1.0);
        let r = check_thm2(&p).unwrap();
        assert!(!r.verdict_i);
        assert_abs_diff_eq!(r.margin_b12, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn fig2_hypotheses() {
        let r = check_thm2(&scenarios::fig2()).unwrap();
        assert_abs_diff_eq!(r.min_beta_a3, 11.84, epsilon = 1e-8);
        assert_abs_diff_eq!(r.max_cd_sum, 7.6, epsilon = 1e-8);
        assert!(r.margin_cd >= 4.24 - 1e-9);
        assert_abs_diff_eq!(r.margin_b12, 4.6 - 0.06, epsilon = 1e-6);
        assert!(r.verdict_i && r.verdict_ii && r.verdict_iii);
        assert!(r.mu1 > 0.0);
    }

    #[test]
    fn fig1_hypotheses_fail() {
        let r = check_thm2(&scenarios::fig1()).unwrap();
        assert_abs_diff_eq!(r.min_cd_sum, 6.2, epsilon = 1e-8);
        assert!(r.max_beta_a3 < r.min_cd_sum);
        assert!(!r.verdict_i && !r.verdict_ii && !r.verdict_iii);
        assert!(r.mu1 < 0.0);
    }
}
