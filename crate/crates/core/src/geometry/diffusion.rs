use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use super::MarkovMatrix;
use crate::{Error, Result};

pub const MAP_MAGIC: &[u8; 4] = b"FPDM";
pub const MAP_VERSION: u32 = 1;

/// Largest number of leading eigenvalues searched for the spectral gap.
const GAP_SEARCH: usize = 10;

/// Full nontrivial spectrum of a reversible Markov matrix.
///
/// Eigenpairs come from the symmetric conjugate `A = D^{1/2} P D^{-1/2}`. The
/// trivial direction `sqrt(stationary)` is deflated to eigenvalue -2 before the
/// solve, so a repeated eigenvalue 1 (disconnected components) still yields
/// nontrivial vectors orthogonal to the constant one.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Nontrivial eigenvalues, descending.
    values: Vec<f64>,
    /// Right eigenvectors of `P`, column j for `values[j]`, unit norm under
    /// the stationary-weighted inner product, largest-magnitude entry positive.
    vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn of(markov: &MarkovMatrix) -> Result<Self> {
        let m = markov.len();
        if m < 2 {
            return Err(Error::invalid("diffusion map needs at least two nodes"));
        }
        let sqrt_pi: Vec<f64> = markov.stationary().iter().map(|p| p.sqrt()).collect();
        let mut a = markov.symmetric_conjugate();
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] -= 3.0 * sqrt_pi[i] * sqrt_pi[j];
            }
        }
        let eig = SymmetricEigen::try_new(a, f64::EPSILON, 1000 * m).ok_or_else(|| {
            Error::Numerical(format!("symmetric eigensolver did not converge (m = {m})"))
        })?;

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| {
            eig.eigenvalues[y]
                .total_cmp(&eig.eigenvalues[x])
                .then(x.cmp(&y))
        });
        // The deflated trivial direction sits at -2, below every other eigenvalue.
        order.pop();

        let mut values = Vec::with_capacity(m - 1);
        let mut vectors = DMatrix::zeros(m, m - 1);
        for (col, &k) in order.iter().enumerate() {
            values.push(eig.eigenvalues[k]);
            let v = eig.eigenvectors.column(k);
            let mut psi: Vec<f64> = (0..m).map(|i| v[i] / sqrt_pi[i]).collect();
            let weighted: f64 = psi
                .iter()
                .zip(markov.stationary())
                .map(|(x, p)| p * x * x)
                .sum();
            let norm = weighted.sqrt();
            let mut pivot = 0;
            for i in 1..m {
                if psi[i].abs() > psi[pivot].abs() {
                    pivot = i;
                }
            }
            let sign = if psi[pivot] < 0.0 { -1.0 } else { 1.0 };
            for x in &mut psi {
                *x *= sign / norm;
            }
            vectors.set_column(col, &nalgebra::DVector::from_vec(psi));
        }
        Ok(Spectrum { values, vectors })
    }

    /// Nontrivial eigenvalues `lambda_1 >= lambda_2 >= ...`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Right eigenvector `psi_{j+1}` of `P`.
    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j).iter().copied().collect()
    }

    /// Embedding dimension at the largest gap among `lambda_1..lambda_10`
    /// (lowest index on ties), floored at 2 when the spectrum allows it.
    pub fn auto_dimension(&self) -> usize {
        let l = self.values.len().min(GAP_SEARCH);
        if l < 2 {
            return l.max(1);
        }
        let mut best = 1;
        let mut best_gap = f64::NEG_INFINITY;
        for j in 1..l {
            let gap = self.values[j - 1] - self.values[j];
            if gap > best_gap {
                best_gap = gap;
                best = j;
            }
        }
        best.max(2)
    }

    /// Coordinates `lambda_j^t psi_j` for `j = 1..=d`. `t = 0` gives the
    /// unscaled eigenvectors.
    pub fn embed(&self, d: usize, t: u32) -> Result<DiffusionMap> {
        let m = self.vectors.nrows();
        if d == 0 || d >= m {
            return Err(Error::invalid(format!(
                "embedding dimension must satisfy 1 <= d < m = {m}, got {d}"
            )));
        }
        let scale: Vec<f64> = self.values[..d].iter().map(|l| l.powi(t as i32)).collect();
        let mut coords = Vec::with_capacity(m * d);
        for i in 0..m {
            for (j, s) in scale.iter().enumerate() {
                coords.push(s * self.vectors[(i, j)]);
            }
        }
        let mut eigenvalues = Vec::with_capacity(d + 1);
        eigenvalues.push(1.0);
        eigenvalues.extend_from_slice(&self.values[..d]);
        Ok(DiffusionMap {
            m,
            d,
            t,
            eigenvalues,
            coords,
        })
    }
}

/// Compound coordinates in diffusion space, row i = `Psi(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMap {
    m: usize,
    d: usize,
    t: u32,
    /// `lambda_0 = 1, lambda_1, ..., lambda_d`.
    eigenvalues: Vec<f64>,
    coords: Vec<f64>,
}

/// Eigendecomposition followed by [`Spectrum::embed`].
pub fn diffusion_map(markov: &MarkovMatrix, d: usize, t: u32) -> Result<DiffusionMap> {
    if d >= markov.len() {
        return Err(Error::invalid(format!(
            "embedding dimension {d} must be below the number of nodes {}",
            markov.len()
        )));
    }
    Spectrum::of(markov)?.embed(d, t)
}

/// Euclidean distance between rows `i` and `j` of the map.
pub fn diffusion_distance(i: usize, j: usize, map: &DiffusionMap) -> Result<f64> {
    for idx in [i, j] {
        if idx >= map.m {
            return Err(Error::invalid(format!(
                "compound index {idx} out of range (m = {})",
                map.m
            )));
        }
    }
    Ok(euclidean(map.row(i), map.row(j)))
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl DiffusionMap {
    /// Builds a map from raw parts (row-major coordinates).
    pub fn from_parts(m: usize, d: usize, t: u32, eigenvalues: Vec<f64>, coords: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != d + 1 || coords.len() != m * d || d == 0 || m == 0 {
            return Err(Error::invalid(format!(
                "inconsistent diffusion map parts: m = {m}, d = {d}, {} eigenvalues, {} coordinates",
                eigenvalues.len(),
                coords.len()
            )));
        }
        if coords.iter().chain(&eigenvalues).any(|v| !v.is_finite()) {
            return Err(Error::invalid("diffusion map contains non-finite values"));
        }
        Ok(DiffusionMap {
            m,
            d,
            t,
            eigenvalues,
            coords,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Diffusion time; 0 means coordinates were not eigenvalue-scaled.
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    /// Row-major `m x d` coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Little-endian `map.bin` encoding: magic `FPDM`, u32 version, u64 m,
    /// u64 d, u64 t, f64 eigenvalues (d + 1), f64 row-major coordinates.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * (self.eigenvalues.len() + self.coords.len()));
        out.extend_from_slice(MAP_MAGIC);
        out.extend_from_slice(&MAP_VERSION.to_le_bytes());
        for v in [self.m as u64, self.d as u64, self.t as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.eigenvalues.iter().chain(&self.coords) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = crate::artifact::ByteReader::new(bytes, "map.bin");
        r.magic(MAP_MAGIC, MAP_VERSION)?;
        let m = r.u64()? as usize;
        let d = r.u64()? as usize;
        let t = u32::try_from(r.u64()?).map_err(|_| Error::Format("map.bin: t out of range".into()))?;
        let eigenvalues = r.f64s(d.checked_add(1).ok_or_else(|| Error::Format("map.bin: bad d".into()))?)?;
        let coords = r.f64s(m.checked_mul(d).ok_or_else(|| Error::Format("map.bin: bad size".into()))?)?;
        r.finish()?;
        Self::from_parts(m, d, t, eigenvalues, coords)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{renormalize, AffinityMatrix};
    use approx::assert_abs_diff_eq;

    fn two_cliques() -> MarkovMatrix {
        let w = DMatrix::from_fn(6, 6, |i, j| if i / 3 == j / 3 { 1.0 } else { 0.0 });
        renormalize(&AffinityMatrix::from_matrix(w, 1.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn two_cliques_first_vector_is_piecewise_constant() {
        let spectrum = Spectrum::of(&two_cliques()).unwrap();
        // Brute force: P is block-diagonal with two uniform 3x3 blocks, so its
        // spectrum is {1, 1, 0, 0, 0, 0}; the second unit eigenvalue belongs to
        // the +-1 clique indicator, which has stationary norm 1 when pi = 1/6.
        assert_abs_diff_eq!(spectrum.eigenvalues()[0], 1.0, epsilon = 1e-12);
        for l in &spectrum.eigenvalues()[1..] {
            assert_abs_diff_eq!(*l, 0.0, epsilon = 1e-12);
        }
        let psi = spectrum.eigenvector(0);
        for i in 0..3 {
            assert_abs_diff_eq!(psi[i], psi[0], epsilon = 1e-12);
            assert_abs_diff_eq!(psi[i + 3], -psi[0], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(psi[0].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_cliques_distances() {
        let map = diffusion_map(&two_cliques(), 1, 1).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let d = diffusion_distance(i, j, &map).unwrap();
                assert_eq!(d, diffusion_distance(j, i, &map).unwrap());
                if i / 3 == j / 3 {
                    assert!(d < 1e-10);
                } else {
                    assert_abs_diff_eq!(d, 2.0, epsilon = 1e-10);
                }
            }
        }
        assert!(diffusion_distance(0, 6, &map).is_err());
    }

    #[test]
    fn time_two_scales_columns_by_eigenvalue() {
        let pts: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![1.0 + (i as f64).sin().abs(), 1.0 + (i as f64 * 0.7).cos().abs(), 0.3 * i as f64])
            .collect();
        let aff = crate::geometry::build_affinity(pts.iter().map(|v| v.as_slice()), 0.05).unwrap();
        let markov = renormalize(&aff, 1.0).unwrap();
        let one = diffusion_map(&markov, 4, 1).unwrap();
        let two = diffusion_map(&markov, 4, 2).unwrap();
        for i in 0..9 {
            for j in 0..4 {
                let l = one.eigenvalues()[j + 1];
                assert_abs_diff_eq!(two.row(i)[j], l * one.row(i)[j], epsilon = 1e-12);
            }
        }
        let unscaled = diffusion_map(&markov, 4, 0).unwrap();
        for i in 0..9 {
            assert_abs_diff_eq!(
                one.row(i)[0],
                one.eigenvalues()[1] * unscaled.row(i)[0],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn dimension_must_be_below_m() {
        assert!(diffusion_map(&two_cliques(), 6, 1).is_err());
        assert!(diffusion_map(&two_cliques(), 0, 1).is_err());
    }

    #[test]
    fn bytes_round_trip_and_version_refusal() {
        let map = diffusion_map(&two_cliques(), 2, 1).unwrap();
        let bytes = map.to_bytes();
        assert_eq!(&bytes[..4], b"FPDM");
        assert_eq!(bytes.len(), 4 + 4 + 24 + 8 * (3 + 12));
        assert_eq!(DiffusionMap::from_bytes(&bytes).unwrap(), map);

        let mut wrong = bytes.clone();
        wrong[4] = 9;
        assert!(matches!(DiffusionMap::from_bytes(&wrong), Err(Error::Format(_))));
        assert!(DiffusionMap::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
