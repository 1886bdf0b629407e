//! Distances between fingerprints: GDD on codebook histograms, exact EMD
//! over the same bins, and the linear diffusion-kernel MMD on the raw
//! weighted sets.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::codebook::{diffusion_kmeans, histogram, Codebook, Histogram};
use crate::geometry::DiffusionMap;
use crate::ingest::{Dataset, Fingerprint};
use crate::{Error, Result};

mod transport;

pub use transport::{solve_transport, TransportPlan};

/// Symmetric pairwise distances between named samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks zero diagonal, nonnegativity and symmetry (1e-12).
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "distance matrix for {n} samples needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {}", ids[i])));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!("distance ({i}, {j}) = {v}")));
                }
                if (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("distance matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { ids, values })
    }

    /// Fills the upper triangle with `f(i, j)` in parallel and mirrors it.
    pub fn from_pairs<F>(ids: Vec<String>, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let n = ids.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| f(i, j)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            for (off, v) in row.iter().enumerate() {
                let j = i + 1 + off;
                values[i * n + j] = *v;
                values[j * n + i] = *v;
            }
        }
        Self::new(ids, values)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Submatrix on `idx` (in that order).
    pub fn select(&self, idx: &[usize]) -> DistanceMatrix {
        let ids = idx.iter().map(|&i| self.ids[i].clone()).collect();
        let values = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        DistanceMatrix { ids, values }
    }

    /// Header row of sample ids, then one row of distances per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.ids.iter().map(|s| crate::ingest::io::csv_field(s)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let ids: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::parse("dist.csv:1", e.to_string()))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let mut values = Vec::with_capacity(ids.len() * ids.len());
        let mut rows = 0;
        for record in rdr.records() {
            let record = record.map_err(|e| {
                Error::parse(format!("dist.csv:{}", e.position().map_or(0, |p| p.line())), e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            for field in record.iter() {
                values.push(field.trim().parse::<f64>().map_err(|_| {
                    Error::parse(format!("dist.csv:{line}"), format!("{field:?} is not a number"))
                })?);
            }
            rows += 1;
        }
        if rows != ids.len() {
            return Err(Error::parse(
                "dist.csv",
                format!("{} ids in header but {rows} rows", ids.len()),
            ));
        }
        Self::new(ids, values)
    }
}

/// `||sum_i (f_i - g_i) c_i||`, O(K d).
pub fn gdd(f: &Histogram, g: &Histogram, cb: &Codebook) -> Result<f64> {
    let k = cb.k();
    if f.k() != k || g.k() != k {
        return Err(Error::invalid(format!(
            "histogram sizes {} and {} do not match codebook K = {k}",
            f.k(),
            g.k()
        )));
    }
    let d = cb.d();
    let mut acc = vec![0.0; d];
    for ((fi, gi), c) in f
        .values()
        .iter()
        .zip(g.values())
        .zip(cb.centroids().chunks_exact(d))
    {
        let w = fi - gi;
        for (a, x) in acc.iter_mut().zip(c) {
            *a += w * x;
        }
    }
    Ok(acc.iter().map(|v| v * v).sum::<f64>().sqrt())
}

pub fn gdd_pairwise(ids: Vec<String>, hists: &[Histogram], cb: &Codebook) -> Result<DistanceMatrix> {
    if hists.is_empty() {
        return Err(Error::invalid("no histograms"));
    }
    if ids.len() != hists.len() {
        return Err(Error::invalid("one id per histogram is required"));
    }
    DistanceMatrix::from_pairs(ids, |i, j| gdd(&hists[i], &hists[j], cb))
}

/// Ground metric between bins for EMD.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundMatrix {
    k: usize,
    values: Vec<f64>,
}

impl GroundMatrix {
    /// Checks zero diagonal, symmetry and nonnegativity.
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != k * k || k == 0 {
            return Err(Error::invalid("ground matrix must be K x K"));
        }
        for i in 0..k {
            if values[i * k + i] != 0.0 {
                return Err(Error::invalid(format!("ground matrix diagonal ({i}, {i}) is nonzero")));
            }
            for j in 0..k {
                let v = values[i * k + j];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!("ground matrix entry ({i}, {j}) = {v}")));
                }
                if (v - values[j * k + i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("ground matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GroundMatrix { k, values })
    }

    /// Euclidean distances between codebook centroids.
    pub fn from_codebook(cb: &Codebook) -> Self {
        let k = cb.k();
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let v = crate::geometry::diffusion::euclidean(cb.centroid(i), cb.centroid(j));
                values[i * k + j] = v;
                values[j * k + i] = v;
            }
        }
        GroundMatrix { k, values }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }
}

/// Exact earth mover's distance between two histograms.
pub fn emd(f: &Histogram, g: &Histogram, ground: &GroundMatrix) -> Result<f64> {
    if f.k() != ground.k() || g.k() != ground.k() {
        return Err(Error::invalid(format!(
            "histogram sizes {} and {} do not match ground K = {}",
            f.k(),
            g.k(),
            ground.k()
        )));
    }
    Ok(solve_transport(f.values(), g.values(), ground.values())?.cost)
}

pub fn emd_pairwise(ids: Vec<String>, hists: &[Histogram], ground: &GroundMatrix) -> Result<DistanceMatrix> {
    if hists.is_empty() {
        return Err(Error::invalid("no histograms"));
    }
    DistanceMatrix::from_pairs(ids, |i, j| emd(&hists[i], &hists[j], ground))
}

fn mean_embedding(fp: &Fingerprint, map: &DiffusionMap) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; map.d()];
    for e in &fp.entries {
        if e.compound_index >= map.m() {
            return Err(Error::invalid(format!(
                "sample {}: compound index {} outside the map's {} compounds",
                fp.sample_id,
                e.compound_index,
                map.m()
            )));
        }
        for (a, x) in acc.iter_mut().zip(map.row(e.compound_index)) {
            *a += e.weight * x;
        }
    }
    Ok(acc)
}

/// Weighted (biased) MMD under the linear kernel on diffusion coordinates:
/// the distance between the two weighted mean embeddings.
pub fn mmd(a: &Fingerprint, b: &Fingerprint, map: &DiffusionMap) -> Result<f64> {
    let (ma, mb) = (mean_embedding(a, map)?, mean_embedding(b, map)?);
    Ok(crate::geometry::diffusion::euclidean(&ma, &mb))
}

pub fn mmd_pairwise(fps: &[Fingerprint], map: &DiffusionMap) -> Result<DistanceMatrix> {
    if fps.is_empty() {
        return Err(Error::invalid("no fingerprints"));
    }
    let means = fps
        .iter()
        .map(|fp| mean_embedding(fp, map))
        .collect::<Result<Vec<_>>>()?;
    let ids = fps.iter().map(|f| f.sample_id.clone()).collect();
    DistanceMatrix::from_pairs(ids, |i, j| Ok(crate::geometry::diffusion::euclidean(&means[i], &means[j])))
}

/// One point of the GDD-to-MMD convergence curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CurvePoint {
    pub k: usize,
    /// Max over sample pairs of `|gdd_K - mmd|`.
    pub max_gap: f64,
}

/// Fits a codebook for every K and reports the worst-pair gap between GDD and MMD.
pub fn convergence_curve(
    ds: &Dataset,
    map: &DiffusionMap,
    k_values: &[usize],
    seed: u64,
    max_iter: usize,
) -> Result<Vec<CurvePoint>> {
    if map.m() != ds.m() {
        return Err(Error::invalid(format!(
            "map has {} compounds, dataset has {}",
            map.m(),
            ds.m()
        )));
    }
    if k_values.is_empty() {
        return Err(Error::invalid("no K values"));
    }
    if k_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("K values must be sorted ascending"));
    }
    if let Some(bad) = k_values.iter().find(|k| **k < 1 || **k > map.m()) {
        return Err(Error::invalid(format!("K = {bad} outside 1..={}", map.m())));
    }
    let reference = mmd_pairwise(&ds.fingerprints, map)?;
    let n = ds.fingerprints.len();
    let mut out = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let cb = diffusion_kmeans(map, k, seed, max_iter)?;
        let hists = ds
            .fingerprints
            .iter()
            .map(|fp| histogram(fp, &cb))
            .collect::<Result<Vec<_>>>()?;
        let mut gap = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let g = gdd(&hists[i], &hists[j], &cb)?;
                gap = gap.max((g - reference.get(i, j)).abs());
            }
        }
        out.push(CurvePoint { k, max_gap: gap });
    }
    Ok(out)
}

pub fn curve_to_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("k,max_gap\n");
    for p in curve {
        writeln!(out, "{},{}", p.k, p.max_gap).unwrap();
    }
    out
}
