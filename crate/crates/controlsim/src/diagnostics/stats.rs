use crate::error::{Error, Result};
use crate::science::ObservedDataset;

/// Mean of the outcome over the given arm. On a null treatment-control arm
/// this estimates the bias every arm's mean carries.
pub fn mean_null_tc(dataset: &ObservedDataset, outcome: &str, arm: &str) -> Result<f64> {
    dataset.group_mean(outcome, arm)
}

/// Mean absolute value over the arm. Stays large when unit-level artifacts
/// cancel in the plain mean.
pub fn abs_mean_null_tc(dataset: &ObservedDataset, outcome: &str, arm: &str) -> Result<f64> {
    let values = nonempty_arm(dataset, outcome, arm)?;
    Ok(values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64)
}

/// How many units in the arm land strictly beyond `threshold_a` in absolute
/// value. A value sitting exactly on the threshold does not count.
pub fn threshold_count(dataset: &ObservedDataset, outcome: &str, arm: &str, threshold_a: f64) -> Result<usize> {
    if !threshold_a.is_finite() {
        return Err(Error::domain("threshold_a must be finite"));
    }
    let values = nonempty_arm(dataset, outcome, arm)?;
    Ok(values.iter().filter(|v| v.abs() > threshold_a).count())
}

fn nonempty_arm(dataset: &ObservedDataset, outcome: &str, arm: &str) -> Result<Vec<f64>> {
    let values = dataset.arm_values(outcome, arm)?;
    if values.is_empty() {
        return Err(Error::EmptyArm(arm.into()));
    }
    Ok(values)
}
