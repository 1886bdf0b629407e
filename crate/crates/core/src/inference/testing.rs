//! Global permutation test and per-bin median-exceedance tests.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::codebook::Histogram;
use crate::metrics::DistanceMatrix;
use crate::rng::substream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_permutations: usize,
}

/// Mean cross-group distance minus mean within-group distance, the
/// within-group pairs of both groups pooled.
fn energy_statistic(dist: &DistanceMatrix, labels: &[bool]) -> f64 {
    let n = labels.len();
    let (mut cross, mut n_cross, mut within, mut n_within) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..n {
        let row = dist.row(i);
        for j in i + 1..n {
            if labels[i] == labels[j] {
                within += row[j];
                n_within += 1;
            } else {
                cross += row[j];
                n_cross += 1;
            }
        }
    }
    cross / n_cross as f64 - within / n_within as f64
}

/// Label-permutation test of the energy-style statistic. Replicate `r`
/// shuffles with its own substream of `seed`, so the result does not depend
/// on the worker count.
pub fn permutation_test(
    dist: &DistanceMatrix,
    labels: &[bool],
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult> {
    if labels.len() != dist.len() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            labels.len(),
            dist.len()
        )));
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::invalid("permutation test needs two nonempty groups"));
    }
    if n_pos < 2 && labels.len() - n_pos < 2 {
        return Err(Error::invalid("permutation test needs a within-group pair"));
    }
    if n_perm < 99 {
        return Err(Error::invalid(format!("n_perm must be at least 99, got {n_perm}")));
    }
    let observed = energy_statistic(dist, labels);
    let threshold = observed - 1e-12 * observed.abs().max(1.0);
    let exceed: usize = (0..n_perm)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let mut perm = labels.to_vec();
            perm.shuffle(&mut rng);
            usize::from(energy_statistic(dist, &perm) >= threshold)
        })
        .sum();
    Ok(PermutationResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + n_perm) as f64,
        n_permutations: n_perm,
    })
}

/// Null distribution for the per-bin exceedance count of group A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinTestStrategy {
    /// Exact conditional median test: with the total exceedance count fixed,
    /// group A's count is hypergeometric.
    #[default]
    MedianHypergeometric,
    /// Group A's count against `Binomial(n_A, T/N)` with the pooled share `T/N`.
    MedianBinomial,
}

impl std::str::FromStr for BinTestStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median-hypergeometric" | "hypergeometric" => Ok(Self::MedianHypergeometric),
            "median-binomial" | "binomial" => Ok(Self::MedianBinomial),
            _ => Err(Error::Usage(format!(
                "unknown bin test strategy {s:?} (expected hypergeometric or binomial)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Group A exceeds the pooled median more often than expected.
    AHigher,
    BHigher,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTest {
    pub bin: usize,
    pub p_value: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerBinReport {
    pub per_bin: Vec<BinTest>,
    pub significant_bins: Vec<usize>,
}

/// Two-sided exact p-value: total probability of outcomes no more likely
/// than the observed one.
fn two_sided(ln_pmf: impl Fn(u64) -> f64, lo: u64, hi: u64, observed: u64) -> f64 {
    let cutoff = ln_pmf(observed) + 1e-7;
    let p: f64 = (lo..=hi)
        .map(&ln_pmf)
        .filter(|lp| *lp <= cutoff)
        .map(f64::exp)
        .sum();
    p.clamp(0.0, 1.0)
}

fn hypergeometric_p(n: u64, t: u64, n_a: u64, a: u64) -> f64 {
    let lo = n_a.saturating_sub(n - t);
    let hi = t.min(n_a);
    let ln_total = ln_binomial(n, n_a);
    two_sided(
        |k| ln_binomial(t, k) + ln_binomial(n - t, n_a - k) - ln_total,
        lo,
        hi,
        a,
    )
}

fn binomial_p(n_a: u64, p0: f64, a: u64) -> f64 {
    if p0 <= 0.0 || p0 >= 1.0 {
        return 1.0;
    }
    two_sided(
        |k| ln_binomial(n_a, k) + k as f64 * p0.ln() + (n_a - k) as f64 * (1.0 - p0).ln(),
        0,
        n_a,
        a,
    )
}

fn pooled_median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-bin median-exceedance tests between groups, flagged by
/// Benjamini-Hochberg at level `q`.
pub fn per_bin_tests(
    hists_a: &[Histogram],
    hists_b: &[Histogram],
    q: f64,
    strategy: BinTestStrategy,
) -> Result<PerBinReport> {
    if hists_a.is_empty() || hists_b.is_empty() {
        return Err(Error::invalid("both groups need at least one histogram"));
    }
    let k = hists_a[0].k();
    if let Some(h) = hists_a.iter().chain(hists_b).find(|h| h.k() != k) {
        return Err(Error::invalid(format!(
            "histogram has {} bins, expected {k}",
            h.k()
        )));
    }
    check_q(q)?;
    let n_a = hists_a.len() as u64;
    let n = n_a + hists_b.len() as u64;
    let mut pooled = Vec::with_capacity(n as usize);
    let per_bin: Vec<BinTest> = (0..k)
        .map(|bin| {
            pooled.clear();
            pooled.extend(hists_a.iter().chain(hists_b).map(|h| h.values()[bin]));
            let median = pooled_median(&mut pooled);
            let a = hists_a.iter().filter(|h| h.values()[bin] > median).count() as u64;
            let b = hists_b.iter().filter(|h| h.values()[bin] > median).count() as u64;
            let t = a + b;
            let p_value = match strategy {
                BinTestStrategy::MedianHypergeometric => hypergeometric_p(n, t, n_a, a),
                BinTestStrategy::MedianBinomial => binomial_p(n_a, t as f64 / n as f64, a),
            };
            // compare a against n_a * t / n in integers
            let direction = match (a * n).cmp(&(n_a * t)) {
                std::cmp::Ordering::Greater => Direction::AHigher,
                std::cmp::Ordering::Less => Direction::BHigher,
                std::cmp::Ordering::Equal => Direction::None,
            };
            BinTest {
                bin,
                p_value,
                direction,
            }
        })
        .collect();
    let p: Vec<f64> = per_bin.iter().map(|t| t.p_value).collect();
    let significant_bins = benjamini_hochberg(&p, q)?;
    Ok(PerBinReport {
        per_bin,
        significant_bins,
    })
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("FDR level q must lie in (0, 1), got {q}")))
    }
}

/// Benjamini-Hochberg step-up: indices (ascending) of the hypotheses with
/// rank at most the largest `r` such that `p_(r) <= r q / K`.
pub fn benjamini_hochberg(p_values: &[f64], q: f64) -> Result<Vec<usize>> {
    check_q(q)?;
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p-value {p} outside [0, 1]")));
    }
    let k = p_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]).then(i.cmp(&j)));
    let cutoff = (1..=k)
        .rev()
        .find(|&r| p_values[order[r - 1]] <= r as f64 * q / k as f64)
        .unwrap_or(0);
    let mut flagged: Vec<usize> = order[..cutoff].to_vec();
    flagged.sort_unstable();
    Ok(flagged)
}

/// Parameters recorded alongside the results in `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub n_permutations: usize,
    pub q: f64,
    pub seed: u64,
    pub strategy: BinTestStrategy,
    /// Label of group A (first in sorted order), then group B.
    pub groups: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub global_p: f64,
    pub statistic: f64,
    pub n_permutations: usize,
    pub per_bin: Vec<BinTest>,
    pub significant_bins: Vec<usize>,
    pub config: TestConfig,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Global permutation test plus per-bin tests between the two label groups.
/// `hists` are aligned with the rows of `dist`; group A is the first class.
pub fn two_sample_report(
    dist: &DistanceMatrix,
    hists: &[Histogram],
    labels: &super::BinaryLabels,
    n_perm: usize,
    q: f64,
    seed: u64,
    strategy: BinTestStrategy,
) -> Result<TestReport> {
    if hists.len() != dist.len() || labels.positive.len() != dist.len() {
        return Err(Error::invalid(format!(
            "{} histograms and {} labels for {} samples",
            hists.len(),
            labels.positive.len(),
            dist.len()
        )));
    }
    let global = permutation_test(dist, &labels.positive, n_perm, seed)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (h, &pos) in hists.iter().zip(&labels.positive) {
        if pos {
            b.push(h.clone());
        } else {
            a.push(h.clone());
        }
    }
    let bins = per_bin_tests(&a, &b, q, strategy)?;
    Ok(TestReport {
        global_p: global.p_value,
        statistic: global.statistic,
        n_permutations: n_perm,
        per_bin: bins.per_bin,
        significant_bins: bins.significant_bins,
        config: TestConfig {
            n_permutations: n_perm,
            q,
            seed,
            strategy,
            groups: labels.classes.clone(),
        },
    })
}
