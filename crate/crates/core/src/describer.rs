//! Canonical state and goal sentences.
//!
//! Each task renders its numeric state into a fixed sentence template. All
//! numbers carry exactly two decimals, so the sentence space is finite and
//! identical states always produce byte-identical text (which the embedding
//! cache relies on). The goal sentence of each task is the template rendered
//! at the goal state, so a state that reaches the goal gets similarity 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{Task, TaskMetrics};
use crate::error::{Error, Result};

/// Sentence describing an observed state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSentence(String);

/// Sentence describing the target state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalSentence(String);

macro_rules! sentence_impls {
    ($t:ty) => {
        impl $t {
            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn into_string(self) -> String {
                self.0
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl AsRef<str> for $t {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

sentence_impls!(StateSentence);
sentence_impls!(GoalSentence);

impl PartialEq<GoalSentence> for StateSentence {
    fn eq(&self, other: &GoalSentence) -> bool {
        self.0 == other.0
    }
}

/// Format `x` with exactly two fractional digits, rounding half away from zero
/// on the shortest decimal representation of `x` (so `4.005` gives `"4.01"`
/// even though the nearest double is slightly below 4.005). Negative zero and
/// values that round to zero print as `"0.00"`.
pub fn round2(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::contract(format!("round2 of non-finite value {x}")));
    }
    // Display for f64 is the shortest round-trip decimal, never in exponent form.
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    digits.push(frac.first().copied().unwrap_or(0));
    digits.push(frac.get(1).copied().unwrap_or(0));
    if frac.get(2).is_some_and(|&d| d >= 5) {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - 2;
    let is_zero = digits.iter().all(|&d| d == 0);
    let mut out = String::with_capacity(digits.len() + 2);
    if x.is_sign_negative() && !is_zero {
        out.push('-');
    }
    out.extend(digits[..split].iter().map(|d| (b'0' + d) as char));
    out.push('.');
    out.extend(digits[split..].iter().map(|d| (b'0' + d) as char));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    /// Inclusive.
    pub lower: f64,
    /// Exclusive; `f64::INFINITY` for the last bucket.
    pub upper: f64,
    pub label: &'static str,
}

/// Ordered, contiguous buckets covering `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTable {
    buckets: Vec<Bucket>,
}

impl BucketTable {
    /// Build from ascending interior thresholds and one label per interval.
    pub fn from_thresholds(thresholds: &[f64], labels: &[&'static str]) -> Self {
        assert_eq!(labels.len(), thresholds.len() + 1);
        assert!(thresholds.windows(2).all(|w| w[0] < w[1]));
        let mut bounds = Vec::with_capacity(thresholds.len() + 2);
        bounds.push(0.0);
        bounds.extend_from_slice(thresholds);
        bounds.push(f64::INFINITY);
        let buckets = bounds
            .windows(2)
            .zip(labels)
            .map(|(w, &label)| Bucket {
                lower: w[0],
                upper: w[1],
                label,
            })
            .collect();
        Self { buckets }
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    /// Bucket containing `value` (lower bound inclusive, upper exclusive).
    pub fn lookup(&self, value: f64) -> Result<&Bucket> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::contract(format!(
                "bucketed metric must be finite and non-negative, got {value}"
            )));
        }
        Ok(self
            .buckets
            .iter()
            .find(|b| value >= b.lower && value < b.upper)
            .expect("buckets cover [0, inf)"))
    }
}

pub const BURGERS_LABELS: [&str; 11] = [
    "Level A",
    "Level B",
    "Level C",
    "Level D",
    "Level E",
    "excellent",
    "better",
    "good",
    "normal",
    "bad",
    "collapse",
];

pub const FLUID_LABELS: [&str; 6] = [
    "Drag is negligible, well done",
    "Drag is minimal with slight resistance",
    "Drag is mild but noticeable",
    "Drag is moderate and affecting motion",
    "Drag is strong and significantly slowing flow",
    "Severe drag condition detected, flow heavily impeded",
];

pub fn burgers_table() -> BucketTable {
    BucketTable::from_thresholds(
        &[0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1],
        &BURGERS_LABELS,
    )
}

/// Buckets over `cp^2`.
pub fn fluid_table() -> BucketTable {
    BucketTable::from_thresholds(&[0.01, 0.05, 0.10, 0.20, 0.35], &FLUID_LABELS)
}

const ANGLE_TOL: f64 = 1e-9;

pub fn describe_pendulum(theta: f64, theta_dot: f64) -> Result<StateSentence> {
    if !(theta.abs() <= std::f64::consts::PI + ANGLE_TOL) {
        return Err(Error::contract(format!("theta {theta} outside [-pi, pi]")));
    }
    if !(theta_dot.abs() <= 8.0 + ANGLE_TOL) {
        return Err(Error::contract(format!("theta_dot {theta_dot} outside [-8, 8]")));
    }
    Ok(StateSentence(format!(
        "The state is at θ = {}, θ̇ = {}.",
        round2(theta)?,
        round2(theta_dot)?
    )))
}

pub fn pendulum_goal() -> GoalSentence {
    GoalSentence(describe_pendulum(0.0, 0.0).expect("origin is valid").0)
}

pub fn describe_burgers(l2: f64) -> Result<StateSentence> {
    let label = burgers_table().lookup(l2)?.label;
    Ok(StateSentence(format!(
        "State L2 level: {}. L2 = {}.",
        label,
        round2(l2)?
    )))
}

pub fn burgers_goal() -> GoalSentence {
    GoalSentence(describe_burgers(0.0).expect("zero is valid").0)
}

pub fn describe_fluid(cp: f64) -> Result<StateSentence> {
    if !cp.is_finite() {
        return Err(Error::contract(format!("cp must be finite, got {cp}")));
    }
    let cp2 = cp * cp;
    let label = fluid_table().lookup(cp2)?.label;
    Ok(StateSentence(format!("{}. Cp2 = {}.", label, round2(cp2)?)))
}

pub fn fluid_goal() -> GoalSentence {
    GoalSentence(describe_fluid(0.0).expect("zero is valid").0)
}

/// Task-level view of the describers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceTemplate {
    pub task: Task,
}

impl SentenceTemplate {
    pub fn new(task: Task) -> Self {
        Self { task }
    }

    pub fn goal(&self) -> GoalSentence {
        match self.task {
            Task::Pendulum => pendulum_goal(),
            Task::Burgers => burgers_goal(),
            Task::Fluid => fluid_goal(),
        }
    }

    pub fn describe(&self, metrics: &TaskMetrics) -> Result<StateSentence> {
        match (self.task, metrics) {
            (Task::Pendulum, TaskMetrics::Pendulum { theta, theta_dot }) => {
                describe_pendulum(*theta, *theta_dot)
            }
            (Task::Burgers, TaskMetrics::Burgers { l2 }) => describe_burgers(*l2),
            (Task::Fluid, TaskMetrics::Fluid { cp, .. }) => describe_fluid(*cp),
            (task, m) => Err(Error::config(format!(
                "{task:?} describer cannot render {:?} metrics",
                m.task()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round2_cases() {
        assert_eq!(round2(1.204999).unwrap(), "1.20");
        assert_eq!(round2(-0.004).unwrap(), "0.00");
        assert_eq!(round2(-0.0).unwrap(), "0.00");
        assert_eq!(round2(4.005).unwrap(), "4.01");
        assert_eq!(round2(-4.005).unwrap(), "-4.01");
        assert_eq!(round2(9.995).unwrap(), "10.00");
        assert_eq!(round2(-0.005).unwrap(), "-0.01");
        assert_eq!(round2(0.0).unwrap(), "0.00");
        assert_eq!(round2(7.0).unwrap(), "7.00");
        assert_eq!(round2(1e-7).unwrap(), "0.00");
        assert_eq!(round2(123456.789).unwrap(), "123456.79");
        assert!(round2(f64::NAN).is_err());
        assert!(round2(f64::INFINITY).is_err());
    }

    /// Exact decimal oracle: scale the shortest decimal string by 100 using
    /// integer arithmetic on the digits, then round half away from zero.
    fn round2_oracle(x: f64) -> String {
        let s = format!("{}", x.abs());
        let (i, f) = s.split_once('.').unwrap_or((&s, ""));
        let f3: String = f.chars().chain(std::iter::repeat('0')).take(3).collect();
        let scaled: u128 = format!("{i}{f3}").parse().unwrap();
        let hundredths = (scaled + 5) / 10;
        let neg = x < 0.0 && hundredths != 0;
        format!(
            "{}{}.{:02}",
            if neg { "-" } else { "" },
            hundredths / 100,
            hundredths % 100
        )
    }

    proptest! {
        #[test]
        fn round2_matches_decimal_oracle(x in -1.0e6f64..1.0e6) {
            prop_assert_eq!(round2(x).unwrap(), round2_oracle(x));
        }

        #[test]
        fn round2_two_decimals(x in -1.0e9f64..1.0e9) {
            let s = round2(x).unwrap();
            let (_, frac) = s.split_once('.').unwrap();
            prop_assert_eq!(frac.len(), 2);
        }

        #[test]
        fn buckets_are_total(v in 0.0f64..10.0) {
            for table in [burgers_table(), fluid_table()] {
                let hits = table.buckets().iter().filter(|b| v >= b.lower && v < b.upper).count();
                prop_assert_eq!(hits, 1);
            }
        }

        #[test]
        fn pendulum_description_is_pure(theta in -3.14f64..3.14, dot in -8.0f64..8.0) {
            prop_assert_eq!(describe_pendulum(theta, dot).unwrap(), describe_pendulum(theta, dot).unwrap());
        }
    }

    #[test]
    fn tables_are_contiguous_from_zero() {
        for table in [burgers_table(), fluid_table()] {
            let b = table.buckets();
            assert_eq!(b[0].lower, 0.0);
            assert_eq!(b.last().unwrap().upper, f64::INFINITY);
            assert!(b.windows(2).all(|w| w[0].upper == w[1].lower));
        }
    }

    #[test]
    fn pendulum_sentences() {
        assert_eq!(
            describe_pendulum(1.2, 4.0).unwrap().as_str(),
            "The state is at θ = 1.20, θ̇ = 4.00."
        );
        assert_eq!(
            describe_pendulum(0.0, 0.0).unwrap().as_str(),
            "The state is at θ = 0.00, θ̇ = 0.00."
        );
        assert_eq!(
            describe_pendulum(-3.14159, -7.999).unwrap().as_str(),
            "The state is at θ = -3.14, θ̇ = -8.00."
        );
        assert_eq!(pendulum_goal().as_str(), "The state is at θ = 0.00, θ̇ = 0.00.");
        assert!(describe_pendulum(3.5, 0.0).is_err());
        assert!(describe_pendulum(0.0, 8.5).is_err());
    }

    #[test]
    fn burgers_sentences() {
        assert_eq!(describe_burgers(0.15).unwrap().as_str(), "State L2 level: Level A. L2 = 0.15.");
        assert!(describe_burgers(0.2).unwrap().as_str().contains("Level B"));
        assert!(describe_burgers(0.1999).unwrap().as_str().contains("Level A"));
        assert!(describe_burgers(1.25).unwrap().as_str().contains("collapse"));
        assert!(describe_burgers(1.1).unwrap().as_str().contains("collapse"));
        assert!(describe_burgers(1.0999).unwrap().as_str().contains("bad"));
        assert_eq!(burgers_goal().as_str(), "State L2 level: Level A. L2 = 0.00.");
        assert_eq!(describe_burgers(0.0).unwrap(), burgers_goal());
        assert!(describe_burgers(-0.1).is_err());
        assert!(describe_burgers(f64::NAN).is_err());
    }

    #[test]
    fn fluid_sentences() {
        assert_eq!(
            describe_fluid(0.05).unwrap().as_str(),
            "Drag is negligible, well done. Cp2 = 0.00."
        );
        assert_eq!(
            describe_fluid(-0.7).unwrap().as_str(),
            "Severe drag condition detected, flow heavily impeded. Cp2 = 0.49."
        );
        assert_eq!(describe_fluid(0.0).unwrap(), fluid_goal());
        assert_eq!(fluid_goal().as_str(), "Drag is negligible, well done. Cp2 = 0.00.");
        // cp^2 = 0.01 sits on the second bucket's inclusive lower bound.
        assert!(describe_fluid(0.1).unwrap().as_str().starts_with("Drag is minimal"));
        assert!(describe_fluid(f64::INFINITY).is_err());
    }

    #[test]
    fn template_rejects_foreign_metrics() {
        let t = SentenceTemplate::new(Task::Burgers);
        assert!(t.describe(&TaskMetrics::Pendulum { theta: 0.0, theta_dot: 0.0 }).is_err());
        assert_eq!(t.describe(&TaskMetrics::Burgers { l2: 0.0 }).unwrap(), t.goal());
    }

    #[test]
    fn sentence_space_is_finite_at_two_decimals() {
        // Pendulum states at 0.01 resolution: 629 angles x 1601 rates.
        let mut angles = std::collections::HashSet::new();
        for i in -400..=400 {
            let theta = (i as f64 * 0.00785).clamp(-std::f64::consts::PI, std::f64::consts::PI);
            angles.insert(round2(theta).unwrap());
        }
        assert!(angles.len() <= 629);
    }
}
