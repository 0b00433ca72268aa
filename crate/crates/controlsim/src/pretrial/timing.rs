use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Timecourse;

/// How to pick a measurement time from pilot timecourses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimingCriterion {
    /// The sampled time with the largest across-unit mean |response|,
    /// earliest on ties.
    PeakOfMean,
    /// The contiguous run of sampled times around the peak where the mean
    /// |response| stays at or above `fraction` of the peak; the recommended
    /// time is the window midpoint.
    WindowAboveFraction { fraction: f64 },
}

/// The pilot and the main study are assumed to respond on similar time
/// scales; nothing in the data can confirm that, so it travels with every
/// recommendation.
pub const TIMESCALE_ASSUMPTION: &str =
    "assumes the pilot and the main study respond on similar time scales (not checkable from pilot data)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRecommendation {
    pub time: f64,
    /// Present for the window criterion: first and last sampled time of the
    /// qualifying run.
    pub window: Option<(f64, f64)>,
    /// Mean |response| at the peak sampled time.
    pub peak_mean_response: f64,
    pub assumption: String,
}

/// Choose when to measure, from pilot timecourses.
pub fn optimal_timing(timecourse: &Timecourse, criterion: &TimingCriterion) -> Result<TimingRecommendation> {
    if timecourse.times.is_empty() || timecourse.responses.is_empty() {
        return Err(Error::domain("timing needs a non-empty timecourse"));
    }
    for (unit, series) in &timecourse.responses {
        if series.len() != timecourse.times.len() {
            return Err(Error::domain(format!(
                "unit `{unit}` has {} responses for {} sampled times",
                series.len(),
                timecourse.times.len()
            )));
        }
    }
    let n_units = timecourse.responses.len() as f64;
    let mean_abs: Vec<f64> = (0..timecourse.times.len())
        .map(|i| timecourse.responses.values().map(|series| series[i].abs()).sum::<f64>() / n_units)
        .collect();

    let mut peak_idx = 0;
    for (i, v) in mean_abs.iter().enumerate() {
        if *v > mean_abs[peak_idx] {
            peak_idx = i;
        }
    }
    let peak = mean_abs[peak_idx];
    if peak == 0.0 {
        return Err(Error::NoSignal);
    }

    let (time, window) = match criterion {
        TimingCriterion::PeakOfMean => (timecourse.times[peak_idx], None),
        TimingCriterion::WindowAboveFraction { fraction } => {
            if !(fraction.is_finite() && *fraction > 0.0 && *fraction <= 1.0) {
                return Err(Error::domain("window fraction must lie in (0, 1]"));
            }
            let cut = fraction * peak;
            let mut lo = peak_idx;
            while lo > 0 && mean_abs[lo - 1] >= cut {
                lo -= 1;
            }
            let mut hi = peak_idx;
            while hi + 1 < mean_abs.len() && mean_abs[hi + 1] >= cut {
                hi += 1;
            }
            let window = (timecourse.times[lo], timecourse.times[hi]);
            ((window.0 + window.1) / 2.0, Some(window))
        }
    };

    Ok(TimingRecommendation {
        time,
        window,
        peak_mean_response: peak,
        assumption: TIMESCALE_ASSUMPTION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn course(times: &[f64], by_unit: &[(&str, &[f64])]) -> Timecourse {
        let mut responses = BTreeMap::new();
        for (unit, series) in by_unit {
            responses.insert(unit.to_string(), series.to_vec());
        }
        Timecourse { outcome: "y".into(), treatment: "at".into(), times: times.to_vec(), responses }
    }

    #[test]
    fn peak_of_mean_picks_the_argmax() {
        let tc = course(&[10.0, 20.0, 30.0, 40.0], &[("u1", &[1.0, 3.0, 5.0, 2.0])]);
        let rec = optimal_timing(&tc, &TimingCriterion::PeakOfMean).unwrap();
        assert_eq!(rec.time, 30.0);
        assert_eq!(rec.peak_mean_response, 5.0);
        assert_eq!(rec.window, None);
    }

    #[test]
    fn ties_resolve_to_the_earliest_time() {
        let tc = course(&[10.0, 20.0, 30.0], &[("u1", &[1.0, 4.0, 4.0])]);
        let rec = optimal_timing(&tc, &TimingCriterion::PeakOfMean).unwrap();
        assert_eq!(rec.time, 20.0);
    }

    #[test]
    fn negative_responses_count_by_magnitude() {
        let tc = course(&[10.0, 20.0], &[("u1", &[1.0, -6.0]), ("u2", &[1.0, 2.0])]);
        let rec = optimal_timing(&tc, &TimingCriterion::PeakOfMean).unwrap();
        assert_eq!(rec.time, 20.0);
        assert_eq!(rec.peak_mean_response, 4.0);
    }

    #[test]
    fn window_extends_contiguously_from_the_peak() {
        let tc = course(&[10.0, 20.0, 30.0, 40.0], &[("u1", &[1.0, 3.0, 5.0, 2.0])]);
        let rec = optimal_timing(&tc, &TimingCriterion::WindowAboveFraction { fraction: 0.5 }).unwrap();
        assert_eq!(rec.window, Some((20.0, 30.0)));
        assert_eq!(rec.time, 25.0);

        // an early time above the cut does not join the window across a gap
        let gapped = course(&[10.0, 20.0, 30.0, 40.0], &[("u1", &[4.0, 1.0, 5.0, 4.0])]);
        let rec = optimal_timing(&gapped, &TimingCriterion::WindowAboveFraction { fraction: 0.5 }).unwrap();
        assert_eq!(rec.window, Some((30.0, 40.0)));
    }

    #[test]
    fn flat_zero_curves_are_no_signal() {
        let tc = course(&[10.0, 20.0], &[("u1", &[0.0, 0.0]), ("u2", &[0.0, 0.0])]);
        assert!(matches!(optimal_timing(&tc, &TimingCriterion::PeakOfMean), Err(Error::NoSignal)));
    }

    #[test]
    fn fraction_and_shape_are_validated() {
        let tc = course(&[10.0, 20.0], &[("u1", &[1.0, 2.0])]);
        assert!(optimal_timing(&tc, &TimingCriterion::WindowAboveFraction { fraction: 0.0 }).is_err());
        assert!(optimal_timing(&tc, &TimingCriterion::WindowAboveFraction { fraction: 1.5 }).is_err());
        let ragged = course(&[10.0, 20.0], &[("u1", &[1.0])]);
        assert!(optimal_timing(&ragged, &TimingCriterion::PeakOfMean).is_err());
    }
}
