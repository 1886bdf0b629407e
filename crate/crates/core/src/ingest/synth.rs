//! Synthetic fingerprint datasets.
//!
//! Compounds are drawn near a few low-dimensional structures in the positive
//! orthant: Gaussian blobs around a random anchor spectrum, or noisy quarter
//! arcs between two anchors. Each group of samples has mixing proportions over
//! the structures; a sample draws its own proportions from a Dirichlet around
//! the group's and spreads each structure's mass over that structure's
//! compounds with Dirichlet(1) shares.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Compound, Dataset, Entry, Fingerprint};
use crate::rng::{seeded, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    #[default]
    Blobs,
    Arcs,
    /// Even structures are blobs, odd ones arcs.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub samples: usize,
    /// Proportions over structures; rescaled to sum to one.
    pub mixing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub structures: usize,
    pub points_per_structure: usize,
    pub p: usize,
    /// Standard deviation of the additive Gaussian noise, relative to anchor entries of order one.
    pub noise: f64,
    #[serde(default)]
    pub kind: StructureKind,
    /// Dirichlet concentration for per-sample mixing; `None` uses the group mixing exactly.
    #[serde(default)]
    pub concentration: Option<f64>,
    pub groups: Vec<GroupSpec>,
}

impl SynthConfig {
    /// Two groups with the given mixing vectors over `structures` blobs.
    pub fn two_groups(
        structures: usize,
        points_per_structure: usize,
        p: usize,
        samples_per_group: usize,
        mixing_a: Vec<f64>,
        mixing_b: Vec<f64>,
    ) -> Self {
        SynthConfig {
            structures,
            points_per_structure,
            p,
            noise: 0.05,
            kind: StructureKind::Blobs,
            concentration: Some(200.0),
            groups: vec![
                GroupSpec {
                    label: "air".into(),
                    samples: samples_per_group,
                    mixing: mixing_a,
                },
                GroupSpec {
                    label: "ground".into(),
                    samples: samples_per_group,
                    mixing: mixing_b,
                },
            ],
        }
    }

    pub fn m(&self) -> usize {
        self.structures * self.points_per_structure
    }

    fn check(&self) -> Result<()> {
        if self.structures == 0 || self.points_per_structure == 0 || self.p == 0 {
            return Err(Error::invalid(
                "structures, points_per_structure and p must be positive",
            ));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::invalid("noise must be finite and nonnegative"));
        }
        if let Some(c) = self.concentration {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::invalid("concentration must be positive"));
            }
        }
        if self.groups.is_empty() {
            return Err(Error::invalid("at least one group is required"));
        }
        for g in &self.groups {
            if g.samples == 0 {
                return Err(Error::invalid(format!("group {}: samples must be positive", g.label)));
            }
            if g.mixing.len() != self.structures {
                return Err(Error::invalid(format!(
                    "group {}: mixing has {} entries, expected {}",
                    g.label,
                    g.mixing.len(),
                    self.structures
                )));
            }
            if g.mixing.iter().any(|v| !(*v >= 0.0) || !v.is_finite())
                || !(g.mixing.iter().sum::<f64>() > 0.0)
            {
                return Err(Error::invalid(format!(
                    "group {}: mixing must be nonnegative with positive sum",
                    g.label
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth structure index of every compound (compounds are structure-major).
pub fn structure_labels(config: &SynthConfig) -> Vec<usize> {
    (0..config.m())
        .map(|i| i / config.points_per_structure)
        .collect()
}

fn anchor(rng: &mut Rng, p: usize) -> Vec<f64> {
    (0..p)
        .map(|_| {
            let on = rng.random_bool(0.5);
            let v: f64 = rng.sample(StandardNormal);
            if on {
                v.abs() + 0.05
            } else {
                0.05
            }
        })
        .collect()
}

/// Deterministic function of `(config, seed)`.
pub fn generate_synthetic_dataset(config: &SynthConfig, seed: u64) -> Result<Dataset> {
    config.check()?;
    let mut rng = seeded(seed);
    let p = config.p;

    let mut compounds = Vec::with_capacity(config.m());
    for s in 0..config.structures {
        let arc = match config.kind {
            StructureKind::Blobs => false,
            StructureKind::Arcs => true,
            StructureKind::Mixed => s % 2 == 1,
        };
        let a = anchor(&mut rng, p);
        let b = if arc { anchor(&mut rng, p) } else { Vec::new() };
        let rt_center = 300.0 + 2400.0 * rng.random::<f64>();
        for _ in 0..config.points_per_structure {
            let base: Vec<f64> = if arc {
                let theta = std::f64::consts::FRAC_PI_2 * rng.random::<f64>();
                let (sin, cos) = theta.sin_cos();
                a.iter().zip(&b).map(|(x, y)| cos * x + sin * y).collect()
            } else {
                a.clone()
            };
            let mut spectrum: Vec<f64> = base
                .iter()
                .map(|v| {
                    let z: f64 = rng.sample(StandardNormal);
                    (v + config.noise * z).max(0.0)
                })
                .collect();
            if !spectrum.iter().any(|v| *v > 0.0) {
                let (k, v) = base
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (k, v)| if *v > acc.1 { (k, *v) } else { acc });
                spectrum[k] = v;
            }
            let jitter: f64 = rng.sample(StandardNormal);
            compounds.push(Compound {
                id: format!("c{:05}", compounds.len()),
                rt_boiling: (rt_center + 40.0 * jitter).max(0.0),
                rt_polarity: 0.5 + 4.5 * rng.random::<f64>(),
                spectrum,
            });
        }
    }

    let mut fingerprints = Vec::new();
    for g in &config.groups {
        let total: f64 = g.mixing.iter().sum();
        let mixing: Vec<f64> = g.mixing.iter().map(|v| v / total).collect();
        for _ in 0..g.samples {
            let sample_mix = match config.concentration {
                None => mixing.clone(),
                Some(c) => dirichlet(&mut rng, &mixing, c)?,
            };
            let mut entries = Vec::new();
            for (s, share) in sample_mix.iter().enumerate() {
                let start = s * config.points_per_structure;
                let draws: Vec<f64> = (0..config.points_per_structure)
                    .map(|_| Exp1.sample(&mut rng))
                    .collect();
                if *share <= 0.0 {
                    continue;
                }
                let sum: f64 = draws.iter().sum();
                for (offset, d) in draws.iter().enumerate() {
                    let w = share * d / sum;
                    if w > 0.0 {
                        entries.push(Entry {
                            compound_index: start + offset,
                            weight: w,
                        });
                    }
                }
            }
            let sum: f64 = entries.iter().map(|e| e.weight).sum();
            for e in &mut entries {
                e.weight /= sum;
            }
            fingerprints.push(Fingerprint {
                sample_id: format!("s{:03}_{}", fingerprints.len(), g.label),
                label: Some(g.label.clone()),
                entries,
            });
        }
    }

    Ok(Dataset {
        p,
        compounds,
        fingerprints,
    })
}

fn dirichlet(rng: &mut Rng, mean: &[f64], concentration: f64) -> Result<Vec<f64>> {
    let mut draws = Vec::with_capacity(mean.len());
    for &m in mean {
        if m <= 0.0 {
            draws.push(0.0);
            continue;
        }
        let gamma = Gamma::new(concentration * m, 1.0)
            .map_err(|e| Error::invalid(format!("dirichlet parameter: {e}")))?;
        draws.push(gamma.sample(rng));
    }
    let sum: f64 = draws.iter().sum();
    if !(sum > 0.0) {
        // Every gamma draw underflowed; fall back to the mean itself.
        return Ok(mean.to_vec());
    }
    Ok(draws.into_iter().map(|d| d / sum).collect())
}
