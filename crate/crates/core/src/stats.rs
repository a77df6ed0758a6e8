//! Rank correlation between reward channels.
//!
//! Kendall's tau is computed with Knight's `O(n log n)` merge-sort algorithm,
//! in both the literal `tau-a = (n_c - n_d) / (n (n - 1) / 2)` form and the
//! tie-corrected `tau-b`. Spearman's rho is the Pearson correlation of
//! average ranks, which equals `1 - 6 sum d^2 / (n (n^2 - 1))` when there are
//! no ties. P-values use the usual normal (tau) and Student-t (rho)
//! approximations; [`permutation_p_value`] is available for small samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    A,
    #[default]
    B,
}

impl std::str::FromStr for TauVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(TauVariant::A),
            "b" | "B" => Ok(TauVariant::B),
            other => Err(Error::config(format!("unknown tau variant {other:?}"))),
        }
    }
}

/// Exact pair counts behind Kendall's tau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub n: usize,
    /// `n_c - n_d`.
    pub score: i64,
    /// Pairs tied in x (including joint ties).
    pub ties_x: u64,
    /// Pairs tied in y (including joint ties).
    pub ties_y: u64,
    pub ties_xy: u64,
}

impl PairCounts {
    pub fn total_pairs(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) / 2
    }

    pub fn tau(&self, variant: TauVariant) -> Option<f64> {
        let n0 = self.total_pairs() as f64;
        match variant {
            TauVariant::A => Some(self.score as f64 / n0),
            TauVariant::B => {
                let denom = ((n0 - self.ties_x as f64) * (n0 - self.ties_y as f64)).sqrt();
                (denom > 0.0).then(|| (self.score as f64 / denom).clamp(-1.0, 1.0))
            }
        }
    }
}

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < min_len {
        return Err(Error::contract(format!(
            "need at least {min_len} samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::contract("rank statistics are undefined for NaN samples"));
    }
    Ok(())
}

fn tied_pairs(run: u64) -> u64 {
    run * run.saturating_sub(1) / 2
}

/// Sum of `t (t - 1) / 2` over runs of equal values in an already sorted slice.
fn count_tied_pairs<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += tied_pairs(run);
            run = 1;
        }
    }
    total + tied_pairs(run)
}

/// Knight's algorithm: sort by (x, y), then count the inversions in y with a
/// merge sort. Inversions are exactly the discordant pairs.
pub fn pair_counts(x: &[f64], y: &[f64]) -> Result<PairCounts> {
    check_pair(x, y, 2)?;
    let n = x.len();
    // Adding 0.0 maps -0.0 to 0.0, which total_cmp would otherwise order apart.
    let mut pairs: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let ties_x = count_tied_pairs(&pairs, |a, b| a.0 == b.0);
    let ties_xy = count_tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count(&mut ys, &mut buf);
    let ties_y = count_tied_pairs(&ys, |a, b| a == b);

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    // n_c + n_d = n0 - ties_x - ties_y + ties_xy
    let untied = n0 + ties_xy - ties_x - ties_y;
    let score = untied as i64 - 2 * discordant as i64;
    Ok(PairCounts {
        n,
        score,
        ties_x,
        ties_y,
        ties_xy,
    })
}

/// Bottom-up merge sort of `v`, returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid && j < end {
                if v[j] < v[i] {
                    buf[k] = v[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                } else {
                    buf[k] = v[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + end - j].copy_from_slice(&v[j..end]);
            start = end;
        }
        v.copy_from_slice(buf);
        width *= 2;
    }
    swaps
}

/// Statistic and two-sided p-value. `value` is `None` when the statistic is
/// undefined (e.g. one input is constant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: Option<f64>,
    pub p_value: Option<f64>,
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

/// Kendall's tau with the normal-approximation p-value
/// (variance `n (n - 1) (2n + 5) / 18` on `n_c - n_d`).
pub fn kendall_tau(x: &[f64], y: &[f64], variant: TauVariant) -> Result<Correlation> {
    let counts = pair_counts(x, y)?;
    let value = counts.tau(variant);
    let n = counts.n as f64;
    let var = n * (n - 1.0) * (2.0 * n + 5.0) / 18.0;
    let z = counts.score as f64 / var.sqrt();
    let p = 2.0 * standard_normal().cdf(-z.abs());
    Ok(Correlation {
        value,
        p_value: value.map(|_| p.clamp(0.0, 1.0)),
    })
}

/// Average ranks (1-based); ties share the mean of the positions they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        // Positions i+1 ..= j share the average (i + 1 + j) / 2.
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho (Pearson correlation of average ranks) with the
/// Student-t p-value on `n - 2` degrees of freedom.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_pair(x, y, 3)?;
    let n = x.len();
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    // Average ranks always sum to n (n + 1) / 2, so the centring is exact.
    let mean = (n + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation {
            value: None,
            p_value: None,
        });
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation {
        value: Some(rho),
        p_value: Some(rho_p_value(rho, n)),
    })
}

fn rho_p_value(rho: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

/// Two-sided permutation p-value: the fraction of `n_perm` shuffles of `y`
/// whose statistic is at least as extreme as the observed one (with the +1
/// correction so the estimate is never zero).
pub fn permutation_p_value(
    x: &[f64],
    y: &[f64],
    n_perm: usize,
    seed: u64,
    statistic: impl Fn(&[f64], &[f64]) -> Result<Option<f64>>,
) -> Result<f64> {
    let Some(observed) = statistic(x, y)? else {
        return Err(Error::contract("statistic undefined on the observed sample"));
    };
    let mut rng = SplitMix64::new(seed);
    let mut shuffled = y.to_vec();
    let mut extreme = 0usize;
    for _ in 0..n_perm {
        rng.shuffle(&mut shuffled);
        if let Some(s) = statistic(x, &shuffled)? {
            if s.abs() >= observed.abs() - 1e-12 {
                extreme += 1;
            }
        }
    }
    Ok((extreme + 1) as f64 / (n_perm + 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub x_channel: String,
    pub y_channel: String,
    pub variant: TauVariant,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    pub p_tau: Option<f64>,
    pub p_rho: Option<f64>,
    pub n: usize,
    /// Tied pairs in (x, y).
    pub tie_counts: (u64, u64),
}

/// Correlate two named series.
pub fn correlate(
    x_channel: &str,
    x: &[f64],
    y_channel: &str,
    y: &[f64],
    variant: TauVariant,
) -> Result<CorrelationReport> {
    check_pair(x, y, 3)?;
    let counts = pair_counts(x, y)?;
    let tau = kendall_tau(x, y, variant)?;
    let rho = spearman_rho(x, y)?;
    Ok(CorrelationReport {
        x_channel: x_channel.to_owned(),
        y_channel: y_channel.to_owned(),
        variant,
        tau: tau.value,
        rho: rho.value,
        p_tau: tau.p_value,
        p_rho: rho.p_value,
        n: x.len(),
        tie_counts: (counts.ties_x, counts.ties_y),
    })
}

/// Correlate two per-step channels of a trajectory (see
/// [`Trajectory::channel`] for the channel names).
pub fn correlate_rollout(
    traj: &Trajectory,
    x_channel: &str,
    y_channel: &str,
    variant: TauVariant,
) -> Result<CorrelationReport> {
    if traj.steps.len() < 3 {
        return Err(Error::contract(format!(
            "trajectory has {} steps, need at least 3",
            traj.steps.len()
        )));
    }
    let x = traj.channel(x_channel)?;
    let y = traj.channel(y_channel)?;
    correlate(x_channel, &x, y_channel, &y, variant)
}
