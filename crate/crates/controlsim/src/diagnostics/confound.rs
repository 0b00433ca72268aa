use serde::{Deserialize, Serialize};

use super::mean_test::{mean_test_values, two_sample_permutation_p, TestMethod};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::science::ObservedDataset;

/// Configuration for the two-stage confounding check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundingConfig {
    /// Outcome believed unaffected by every treatment (a null outcome), so
    /// any movement in it is an artifact.
    pub outcome: String,
    /// Arm expected to absorb a confounder if assignment is skewed.
    pub active: String,
    /// Arm to compare against.
    pub control: String,
    pub alpha: f64,
    pub method: TestMethod,
}

impl ConfoundingConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("confounding check needs alpha in (0, 1)"));
        }
        if self.active == self.control {
            return Err(Error::domain("confounding check needs two distinct arms"));
        }
        Ok(())
    }
}

/// What the cascade found. The arm comparison only runs when the pooled
/// sample already deviates, so `arm_difference` is `None` on clean data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfoundingFinding {
    pub pooled_n: usize,
    pub pooled_mean: f64,
    pub pooled_p: f64,
    pub pooled_flagged: bool,
    pub arm_difference: Option<f64>,
    pub arm_difference_p: Option<f64>,
}

impl ConfoundingFinding {
    /// A flagged pool whose arms still agree points at a shared artifact; a
    /// flagged pool with unequal arms points at assignment itself.
    pub fn implicates_assignment(&self, alpha: f64) -> bool {
        matches!(self.arm_difference_p, Some(p) if p < alpha)
    }
}

/// Two-stage check of an outcome that should be zero for every unit.
///
/// Stage one pools every measured unit, whatever its arm, and tests the
/// pooled mean against zero: a confounder that touches the outcome moves
/// this pool no matter how units were assigned. Stage two runs only when
/// stage one flags, and asks whether the deviation is distributed unevenly
/// between the two named arms, which is the signature of confounded
/// assignment rather than a uniform artifact.
pub fn diagnose_confounding(dataset: &ObservedDataset, cfg: &ConfoundingConfig) -> Result<ConfoundingFinding> {
    cfg.validate()?;
    let outcome = cfg.outcome.as_str();
    let mut pooled = Vec::new();
    for unit in dataset.assignment.w.keys() {
        pooled.push(dataset.value(unit, outcome)?);
    }
    if pooled.is_empty() {
        return Err(Error::domain("confounding check needs at least one assigned unit"));
    }
    let pooled_mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let key = StreamKey::new(dataset.seed).tag("confound").tag(outcome);
    let pooled_test = mean_test_values(&pooled, cfg.method, key.tag("pooled"))?;
    let pooled_flagged = pooled_test.p_value < cfg.alpha;

    let (arm_difference, arm_difference_p) = if pooled_flagged {
        let a = dataset.arm_values(outcome, &cfg.active)?;
        let c = dataset.arm_values(outcome, &cfg.control)?;
        if a.is_empty() {
            return Err(Error::EmptyArm(cfg.active.clone()));
        }
        if c.is_empty() {
            return Err(Error::EmptyArm(cfg.control.clone()));
        }
        let diff = dataset.difference_in_means(outcome, &cfg.active, &cfg.control)?;
        let (p, _) = two_sample_permutation_p(&a, &c, key.tag("arms"))?;
        (Some(diff), Some(p))
    } else {
        (None, None)
    };

    Ok(ConfoundingFinding {
        pooled_n: pooled.len(),
        pooled_mean,
        pooled_p: pooled_test.p_value,
        pooled_flagged,
        arm_difference,
        arm_difference_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::dataset_from_arms;

    fn cfg() -> ConfoundingConfig {
        ConfoundingConfig {
            outcome: "z".into(),
            active: "at".into(),
            control: "ct".into(),
            alpha: 0.05,
            method: TestMethod::SignPermutation,
        }
    }

    #[test]
    fn clean_data_stops_at_stage_one() {
        // a null outcome measured as exactly zero everywhere: p = 1, no flag
        let data = dataset_from_arms(&[("at", &[0.0; 6]), ("ct", &[0.0; 6])], "z", 3);
        let finding = diagnose_confounding(&data, &cfg()).unwrap();
        assert_eq!(finding.pooled_p, 1.0);
        assert!(!finding.pooled_flagged);
        assert_eq!(finding.arm_difference, None);
        assert!(!finding.implicates_assignment(0.05));
    }

    #[test]
    fn uniform_artifact_flags_pool_but_not_arms() {
        // every unit shifted by 4: the pool deviates, the arms agree
        let data = dataset_from_arms(&[("at", &[4.0; 6]), ("ct", &[4.0; 6])], "z", 3);
        let finding = diagnose_confounding(&data, &cfg()).unwrap();
        assert!(finding.pooled_flagged);
        assert_eq!(finding.pooled_p, 0.0);
        assert_eq!(finding.arm_difference, Some(0.0));
        assert_eq!(finding.arm_difference_p, Some(1.0));
        assert!(!finding.implicates_assignment(0.05));
    }

    #[test]
    fn skewed_shift_implicates_assignment() {
        // the shift rides entirely on the active arm
        let data = dataset_from_arms(&[("at", &[4.0; 6]), ("ct", &[0.0; 6])], "z", 3);
        let finding = diagnose_confounding(&data, &cfg()).unwrap();
        assert!(finding.pooled_flagged);
        assert_eq!(finding.arm_difference, Some(4.0));
        // only the identity relabeling and its mirror separate this cleanly
        let p = finding.arm_difference_p.unwrap();
        assert!(p < 0.05, "p={p}");
        assert!(finding.implicates_assignment(0.05));
    }

    #[test]
    fn config_is_validated() {
        let mut bad = cfg();
        bad.control = "at".into();
        let data = dataset_from_arms(&[("at", &[0.0])], "z", 0);
        assert!(diagnose_confounding(&data, &bad).is_err());
        let mut bad_alpha = cfg();
        bad_alpha.alpha = 1.0;
        assert!(diagnose_confounding(&data, &bad_alpha).is_err());
    }
}
