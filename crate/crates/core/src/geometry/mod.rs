//! Compound affinity graph, Markov random walk and diffusion map.
//!
//! Distances use the spectrum only; retention times are metadata.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::{Error, Result};

pub(crate) mod diffusion;

pub use diffusion::{diffusion_distance, diffusion_map, DiffusionMap, Spectrum, MAP_MAGIC, MAP_VERSION};

/// `1 - <x, y> / (|x| |y|)`, clamped to be nonnegative.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "spectra have different lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let nx = dot(x, x).sqrt();
    let ny = dot(y, y).sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::invalid("cosine distance of a zero spectrum"));
    }
    Ok(snap(1.0 - dot(x, y) / (nx * ny)))
}

/// Rounding leaves parallel spectra a few ulps apart; they are at distance 0.
#[inline]
fn snap(d: f64) -> f64 {
    if d < 1e-12 {
        0.0
    } else {
        d
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense symmetric matrix of pairwise cosine distances.
///
/// Rows are computed in parallel; every entry is a fixed-order dot product of
/// unit vectors, so the result does not depend on the worker count and is
/// exactly symmetric.
#[derive(Debug, Clone)]
pub struct CosineDistances {
    m: usize,
    values: Vec<f64>,
}

impl CosineDistances {
    pub fn compute<'a, I>(spectra: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut unit: Vec<Vec<f64>> = Vec::new();
        for (i, s) in spectra.into_iter().enumerate() {
            let n = dot(s, s).sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::invalid(format!("spectrum {i} is zero or not finite")));
            }
            if let Some(first) = unit.first() {
                if first.len() != s.len() {
                    return Err(Error::invalid(format!(
                        "spectrum {i} has length {}, expected {}",
                        s.len(),
                        first.len()
                    )));
                }
            }
            unit.push(s.iter().map(|v| v / n).collect());
        }
        let m = unit.len();
        let mut values = vec![0.0; m * m];
        values.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, row)| {
            for (j, out) in row.iter_mut().enumerate() {
                if i != j {
                    *out = snap(1.0 - dot(&unit[i], &unit[j]));
                }
            }
        });
        Ok(CosineDistances { m, values })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    /// Squared median of the off-diagonal distances (median heuristic).
    /// Even counts take the mean of the two middle values.
    pub fn median_bandwidth(&self) -> Result<f64> {
        if self.m < 2 {
            return Err(Error::invalid("bandwidth selection needs at least two compounds"));
        }
        let mut upper: Vec<f64> = (0..self.m)
            .flat_map(|i| (i + 1..self.m).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        upper.sort_by(f64::total_cmp);
        let n = upper.len();
        let median = if n % 2 == 1 {
            upper[n / 2]
        } else {
            0.5 * (upper[n / 2 - 1] + upper[n / 2])
        };
        if !(median > 0.0) {
            return Err(Error::invalid(
                "median pairwise cosine distance is zero; compounds are (nearly) identical",
            ));
        }
        Ok(median * median)
    }
}

/// Median-heuristic bandwidth: the squared median pairwise cosine distance.
pub fn select_bandwidth<'a, I>(spectra: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    CosineDistances::compute(spectra)?.median_bandwidth()
}

/// Gaussian kernel on cosine distances, `w_ij = exp(-d_ij^2 / eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    weights: DMatrix<f64>,
    bandwidth: f64,
}

impl AffinityMatrix {
    pub fn from_distances(dist: &CosineDistances, bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        if dist.len() < 2 {
            return Err(Error::invalid("affinity needs at least two compounds"));
        }
        let m = dist.len();
        let weights = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                1.0
            } else {
                let d = dist.get(i, j);
                (-d * d / bandwidth).exp()
            }
        });
        Ok(AffinityMatrix { weights, bandwidth })
    }

    /// Wraps a user-built affinity after checking symmetry and nonnegativity.
    pub fn from_matrix(weights: DMatrix<f64>, bandwidth: f64) -> Result<Self> {
        check_bandwidth(bandwidth)?;
        let m = weights.nrows();
        if m < 2 || weights.ncols() != m {
            return Err(Error::invalid("affinity must be square with at least two nodes"));
        }
        for i in 0..m {
            for j in 0..m {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!("affinity entry ({i}, {j}) = {w}")));
                }
                if (w - weights[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("affinity not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(AffinityMatrix { weights, bandwidth })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_bandwidth(eps: f64) -> Result<()> {
    if eps > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("bandwidth must be positive, got {eps}")))
    }
}

/// Affinity from spectra with a fixed bandwidth.
pub fn build_affinity<'a, I>(spectra: I, bandwidth: f64) -> Result<AffinityMatrix>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    check_bandwidth(bandwidth)?;
    AffinityMatrix::from_distances(&CosineDistances::compute(spectra)?, bandwidth)
}

/// Row-stochastic transition matrix of a reversible random walk.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMatrix {
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
    // Renormalized kernel row sums; the symmetric conjugate is w~_ij / sqrt(r_i r_j).
    kernel: DMatrix<f64>,
    row_sums: Vec<f64>,
}

impl MarkovMatrix {
    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn len(&self) -> usize {
        self.stationary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stationary.is_empty()
    }

    /// `D^{1/2} P D^{-1/2}` with `D = diag(stationary)`, built from the
    /// renormalized kernel so that it is exactly symmetric.
    pub fn symmetric_conjugate(&self) -> DMatrix<f64> {
        let m = self.len();
        let inv_sqrt: Vec<f64> = self.row_sums.iter().map(|r| 1.0 / r.sqrt()).collect();
        DMatrix::from_fn(m, m, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            self.kernel[(a, b)] * inv_sqrt[a] * inv_sqrt[b]
        })
    }
}

/// Density renormalization with exponent `alpha`, then row normalization:
/// `w~_ij = w_ij / (q_i^alpha q_j^alpha)`, `P = D^{-1} w~`.
pub fn renormalize(aff: &AffinityMatrix, alpha: f64) -> Result<MarkovMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let w = aff.weights();
    let m = w.nrows();
    let q: Vec<f64> = (0..m).map(|i| w.row(i).iter().sum()).collect();
    for (i, qi) in q.iter().enumerate() {
        if !(*qi > 0.0) {
            return Err(Error::Numerical(format!(
                "node {i} has zero affinity row sum; the graph is disconnected"
            )));
        }
        if (0..m).all(|j| j == i || w[(i, j)] == 0.0) {
            return Err(Error::Numerical(format!(
                "node {i} is isolated (all off-diagonal affinities are zero); increase the bandwidth"
            )));
        }
    }
    let qa: Vec<f64> = q.iter().map(|v| v.powf(alpha)).collect();
    let kernel = DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        w[(a, b)] / (qa[a] * qa[b])
    });
    let row_sums: Vec<f64> = (0..m).map(|i| kernel.row(i).iter().sum()).collect();
    if let Some(i) = row_sums.iter().position(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::Numerical(format!(
            "node {i} has degenerate renormalized row sum"
        )));
    }
    let transition = DMatrix::from_fn(m, m, |i, j| kernel[(i, j)] / row_sums[i]);
    let total: f64 = row_sums.iter().sum();
    let stationary = row_sums.iter().map(|r| r / total).collect();
    Ok(MarkovMatrix {
        transition,
        stationary,
        kernel,
        row_sums,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cosine_examples() {
        let x = [0.3, 1.2, 4.0];
        assert_abs_diff_eq!(cosine_distance(&x, &x).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(cosine_distance(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 1.0);
        let expected = 1.0 - 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(cosine_distance(&[1.0, 1.0], &[1.0, 0.0]).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.29289, epsilon = 1e-5);
        assert!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn affinity_examples() {
        let spectra: Vec<&[f64]> = vec![&[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0]];
        let aff = build_affinity(spectra.clone(), 1.0).unwrap();
        let w = aff.weights();
        assert_eq!(w[(0, 1)], 1.0);
        assert_abs_diff_eq!(w[(0, 2)], (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(w[(0, 2)], 0.36788, epsilon = 1e-5);
        assert!((0..3).all(|i| w[(i, i)] == 1.0));
        assert_eq!(w.transpose(), *w);

        let wide = build_affinity(spectra.clone(), 1e12).unwrap();
        assert!(wide.weights().iter().all(|v| (v - 1.0).abs() < 1e-11));
        assert!(build_affinity(spectra.clone(), 0.0).is_err());
        assert!(build_affinity(spectra, -1.0).is_err());
    }

    #[test]
    fn bandwidth_examples() {
        let same: Vec<&[f64]> = vec![&[1.0, 2.0], &[2.0, 4.0], &[0.5, 1.0]];
        assert!(select_bandwidth(same).is_err());

        // Two unit vectors at cosine similarity 0.6 are at distance 0.4.
        let two: Vec<&[f64]> = vec![&[1.0, 0.0], &[0.6, 0.8]];
        assert_abs_diff_eq!(select_bandwidth(two).unwrap(), 0.16, epsilon = 1e-12);
    }

    #[test]
    fn bandwidth_median_of_three() {
        // Unit vectors on a circle with chosen pairwise cosines.
        let a = [1.0, 0.0, 0.0];
        let b = [0.9, (1.0f64 - 0.81).sqrt(), 0.0];
        // Pick c with <a,c> = 0.8 and <b,c> = 0.7 on the unit sphere.
        let c0 = 0.8;
        let c1 = (0.7 - 0.9 * c0) / b[1];
        let c2 = (1.0 - c0 * c0 - c1 * c1).sqrt();
        let c = [c0, c1, c2];
        let spectra: Vec<&[f64]> = vec![&a, &b, &c];
        // distances {0.1, 0.2, 0.3}: median 0.2 -> 0.04
        assert_abs_diff_eq!(select_bandwidth(spectra).unwrap(), 0.04, epsilon = 1e-12);
    }

    #[test]
    fn uniform_walk_on_all_ones() {
        let aff = AffinityMatrix::from_matrix(DMatrix::from_element(2, 2, 1.0), 1.0).unwrap();
        let markov = renormalize(&aff, 0.0).unwrap();
        assert!(markov.transition().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn three_node_chain_alpha_one() {
        let w = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let markov = renormalize(&AffinityMatrix::from_matrix(w, 1.0).unwrap(), 1.0).unwrap();
        // q = (2, 3, 2); w~ rows (1/4, 1/6, 0), (1/6, 1/9, 1/6), (0, 1/6, 1/4)
        // row sums 5/12, 4/9, 5/12.
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[0.6, 0.4, 0.0, 0.375, 0.25, 0.375, 0.0, 0.4, 0.6],
        );
        for (a, b) in markov.transition().iter().zip(expected.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let total = 5.0 / 12.0 + 4.0 / 9.0 + 5.0 / 12.0;
        assert_abs_diff_eq!(markov.stationary()[1], (4.0 / 9.0) / total, epsilon = 1e-14);
    }

    #[test]
    fn isolated_node_is_an_error() {
        let mut w = DMatrix::from_element(3, 3, 0.5);
        for i in 0..3 {
            w[(i, i)] = 1.0;
        }
        w[(2, 0)] = 0.0;
        w[(0, 2)] = 0.0;
        w[(2, 1)] = 0.0;
        w[(1, 2)] = 0.0;
        let err = renormalize(&AffinityMatrix::from_matrix(w, 1.0).unwrap(), 1.0).unwrap_err();
        assert!(err.to_string().contains("node 2"), "{err}");
    }

    proptest::proptest! {
        #[test]
        fn rows_are_stochastic(
            pts in proptest::collection::vec(proptest::collection::vec(0.01f64..5.0, 4), 3..12),
            alpha in 0.0f64..=1.0,
        ) {
            let spectra: Vec<&[f64]> = pts.iter().map(|v| v.as_slice()).collect();
            let aff = build_affinity(spectra, 0.05).unwrap();
            let markov = renormalize(&aff, alpha).unwrap();
            let p = markov.transition();
            for i in 0..p.nrows() {
                let s: f64 = p.row(i).iter().sum();
                proptest::prop_assert!((s - 1.0).abs() < 1e-10);
            }
            let pi = markov.stationary();
            let pi_p = DMatrix::from_row_slice(1, pi.len(), pi) * p;
            for (a, b) in pi_p.iter().zip(pi) {
                proptest::prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
