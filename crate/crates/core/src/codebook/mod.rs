//! Diffusion K-means codebook and histograms over code words.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;

use crate::artifact::ByteReader;
use crate::geometry::DiffusionMap;
use crate::ingest::Fingerprint;
use crate::rng::seeded;
use crate::{Error, Result};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"FPCB";
pub const CODEBOOK_VERSION: u32 = 1;

/// Default number of code words.
pub const DEFAULT_K: usize = 100;

/// K centroids in diffusion space and the bin of every compound.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    d: usize,
    centroids: Vec<f64>,
    assignment: Vec<usize>,
    inertia: f64,
    inertia_trace: Vec<f64>,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest row of `centroids` (k x d, row-major), lowest index on ties.
fn nearest(point: &[f64], centroids: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_dist(point, row);
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

/// K-means++ seeding: first center uniform, then proportional to squared
/// distance. When every remaining distance is zero the lowest unchosen index
/// is taken.
fn kmeanspp(points: &[f64], d: usize, k: usize, seed: u64) -> Vec<f64> {
    let n = points.len() / d;
    let row = |i: usize| &points[i * d..(i + 1) * d];
    let mut rng = seeded(seed);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = row(first).to_vec();
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = 0;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 {
                    last_positive = i;
                    acc += w;
                    if acc > target {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.unwrap_or(last_positive)
        } else {
            (0..n).find(|i| !chosen[*i]).expect("k <= n")
        };
        chosen[next] = true;
        centroids.extend_from_slice(row(next));
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_dist(row(i), row(next)));
        }
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding on `n x d` row-major points.
///
/// Empty clusters are re-seeded at the point farthest from its centroid
/// (among clusters with more than one member). Stops when assignments repeat
/// or after `max_iter` iterations.
pub fn kmeans(points: &[f64], d: usize, k: usize, seed: u64, max_iter: usize) -> Result<Codebook> {
    if d == 0 || !points.len().is_multiple_of(d) {
        return Err(Error::invalid("point buffer is not a whole number of rows"));
    }
    let n = points.len() / d;
    if k < 1 || k > n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k <= m = {n}, got {k}")));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be positive"));
    }
    let row = |i: usize| &points[i * d..(i + 1) * d];
    let mut centroids = kmeanspp(points, d, k, seed);
    let mut assignment: Vec<usize> = Vec::new();
    let mut trace = Vec::new();

    for _ in 0..max_iter {
        let nearest_of: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| nearest(row(i), &centroids, d))
            .collect();
        let mut next: Vec<usize> = nearest_of.iter().map(|(c, _)| *c).collect();
        let mut cost: Vec<f64> = nearest_of.iter().map(|(_, dist)| *dist).collect();

        let mut sizes = vec![0usize; k];
        for c in &next {
            sizes[*c] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let mut donor: Option<usize> = None;
            for i in 0..n {
                if sizes[next[i]] > 1 && donor.is_none_or(|j| cost[i] > cost[j]) {
                    donor = Some(i);
                }
            }
            let i = donor.expect("k <= n leaves a cluster with two members");
            sizes[next[i]] -= 1;
            sizes[empty] = 1;
            next[i] = empty;
            cost[i] = 0.0;
            centroids[empty * d..(empty + 1) * d].copy_from_slice(row(i));
        }

        let mut sums = vec![0.0; k * d];
        for (i, c) in next.iter().enumerate() {
            for (s, x) in sums[c * d..(c + 1) * d].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            let size = sizes[c] as f64;
            for s in &mut sums[c * d..(c + 1) * d] {
                *s /= size;
            }
        }
        centroids = sums;
        let inertia: f64 = next
            .iter()
            .enumerate()
            .map(|(i, c)| sq_dist(row(i), &centroids[c * d..(c + 1) * d]))
            .sum();
        trace.push(inertia);

        let done = next == assignment;
        assignment = next;
        if done {
            break;
        }
    }

    Ok(Codebook {
        k,
        d,
        inertia: *trace.last().expect("at least one iteration"),
        centroids,
        assignment,
        inertia_trace: trace,
    })
}

/// K-means in diffusion coordinates.
pub fn diffusion_kmeans(map: &DiffusionMap, k: usize, seed: u64, max_iter: usize) -> Result<Codebook> {
    kmeans(map.coords(), map.d(), k, seed, max_iter)
}

/// Bin of the nearest centroid; ties go to the lowest index.
pub fn assign(point: &[f64], cb: &Codebook) -> Result<usize> {
    if point.len() != cb.d {
        return Err(Error::invalid(format!(
            "point has dimension {}, codebook has {}",
            point.len(),
            cb.d
        )));
    }
    Ok(nearest(point, &cb.centroids, cb.d).0)
}

impl Codebook {
    pub fn from_parts(
        k: usize,
        d: usize,
        centroids: Vec<f64>,
        assignment: Vec<usize>,
        inertia: f64,
    ) -> Result<Self> {
        if k == 0 || d == 0 || centroids.len() != k * d {
            return Err(Error::invalid(format!(
                "codebook needs k * d = {} centroid values, got {}",
                k * d,
                centroids.len()
            )));
        }
        if let Some(bad) = assignment.iter().find(|b| **b >= k) {
            return Err(Error::invalid(format!("assignment {bad} out of range for k = {k}")));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("codebook has non-finite centroids"));
        }
        Ok(Codebook {
            k,
            d,
            centroids,
            assignment,
            inertia,
            inertia_trace: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn centroid(&self, b: usize) -> &[f64] {
        &self.centroids[b * self.d..(b + 1) * self.d]
    }

    /// Row-major `k x d` centroids.
    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    /// Bin of every compound the codebook was fitted on.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Within-cluster sum of squares after every Lloyd iteration (empty when loaded from disk).
    pub fn inertia_trace(&self) -> &[f64] {
        &self.inertia_trace
    }

    /// Compound indices per bin, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, b) in self.assignment.iter().enumerate() {
            out[*b].push(i);
        }
        out
    }

    /// `cb.bin`: magic `FPCB`, u32 version, u64 k, u64 d, u64 m, f64 inertia,
    /// f64 row-major centroids, u64 assignments; all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CODEBOOK_MAGIC);
        out.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        for v in [self.k, self.d, self.assignment.len()] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.inertia.to_le_bytes());
        for v in &self.centroids {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for b in &self.assignment {
            out.extend_from_slice(&(*b as u64).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "cb.bin");
        r.magic(CODEBOOK_MAGIC, CODEBOOK_VERSION)?;
        let k = r.u64()? as usize;
        let d = r.u64()? as usize;
        let m = r.u64()? as usize;
        let inertia = r.f64()?;
        let centroids = r.f64s(k.checked_mul(d).ok_or_else(|| Error::Format("cb.bin: bad size".into()))?)?;
        let assignment = r.u64s(m)?.into_iter().map(|b| b as usize).collect();
        r.finish()?;
        Self::from_parts(k, d, centroids, assignment, inertia)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// A distribution over the K code words.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram(Vec<f64>);

impl Histogram {
    /// Checks nonnegativity and unit mass (1e-9).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty histogram"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("histogram entry {v} is negative or not finite")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("histogram sums to {sum}, expected 1")));
        }
        Ok(Histogram(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// Mass of the fingerprint falling in each bin.
pub fn histogram(fp: &Fingerprint, cb: &Codebook) -> Result<Histogram> {
    let mut values = vec![0.0; cb.k];
    for e in &fp.entries {
        let bin = cb.assignment.get(e.compound_index).ok_or_else(|| {
            Error::invalid(format!(
                "sample {}: compound index {} outside the codebook's {} compounds",
                fp.sample_id,
                e.compound_index,
                cb.assignment.len()
            ))
        })?;
        values[*bin] += e.weight;
    }
    Histogram::new(values).map_err(|e| Error::invalid(format!("sample {}: {e}", fp.sample_id)))
}

/// A histogram tagged with its sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleHistogram {
    pub sample_id: String,
    pub label: Option<String>,
    pub histogram: Histogram,
}

pub fn sample_histograms(fps: &[Fingerprint], cb: &Codebook) -> Result<Vec<SampleHistogram>> {
    fps.iter()
        .map(|fp| {
            Ok(SampleHistogram {
                sample_id: fp.sample_id.clone(),
                label: fp.label.clone(),
                histogram: histogram(fp, cb)?,
            })
        })
        .collect()
}

/// `hist.csv`: `sample_id,label,h_0,...,h_{K-1}`.
pub fn write_hist_csv(hists: &[SampleHistogram]) -> String {
    let k = hists.first().map_or(0, |h| h.histogram.k());
    let mut out = String::from("sample_id,label");
    for b in 0..k {
        write!(out, ",h_{b}").unwrap();
    }
    out.push('\n');
    for h in hists {
        out.push_str(&crate::ingest::io::csv_field(&h.sample_id));
        out.push(',');
        out.push_str(&crate::ingest::io::csv_field(h.label.as_deref().unwrap_or("")));
        for v in h.histogram.values() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_hist_csv<R: std::io::Read>(input: R) -> Result<Vec<SampleHistogram>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| Error::parse("hist.csv:1", e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "sample_id" || &header[1] != "label" {
        return Err(Error::parse("hist.csv:1", "header must be sample_id,label,h_0,..."));
    }
    let k = header.len() - 2;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            Error::parse(format!("hist.csv:{}", e.position().map_or(0, |p| p.line())), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = (0..k)
            .map(|b| {
                record[b + 2].trim().parse::<f64>().map_err(|_| {
                    Error::parse(format!("hist.csv:{line}"), format!("h_{b}: not a number"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let label = Some(record[1].trim()).filter(|l| !l.is_empty()).map(str::to_string);
        out.push(SampleHistogram {
            sample_id: record[0].trim().to_string(),
            label,
            histogram: Histogram::new(values)
                .map_err(|e| Error::parse(format!("hist.csv:{line}"), e.to_string()))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Entry;

    fn grid_points() -> Vec<f64> {
        // three tight groups on a line
        let mut pts = Vec::new();
        for (center, n) in [(0.0, 4), (10.0, 3), (25.0, 5)] {
            for i in 0..n {
                pts.push(center + 0.1 * i as f64);
                pts.push(-center + 0.05 * i as f64);
            }
        }
        pts
    }

    #[test]
    fn k_equals_m_gives_zero_inertia() {
        let pts = grid_points();
        let cb = kmeans(&pts, 2, 12, 5, 100).unwrap();
        assert_eq!(cb.inertia(), 0.0);
        let mut seen = cb.assignment().to_vec();
        seen.sort();
        assert_eq!(seen, (0..12).collect::<Vec<_>>());
        for (i, b) in cb.assignment().iter().enumerate() {
            assert_eq!(cb.centroid(*b), &pts[2 * i..2 * i + 2]);
        }
    }

    #[test]
    fn k_one_is_the_mean() {
        let pts = grid_points();
        let cb = kmeans(&pts, 2, 1, 5, 100).unwrap();
        let n = pts.len() / 2;
        let mx = pts.iter().step_by(2).sum::<f64>() / n as f64;
        let my = pts.iter().skip(1).step_by(2).sum::<f64>() / n as f64;
        assert!((cb.centroid(0)[0] - mx).abs() < 1e-12);
        assert!((cb.centroid(0)[1] - my).abs() < 1e-12);
    }

    #[test]
    fn recovers_separated_groups_and_is_deterministic() {
        let pts = grid_points();
        let cb = kmeans(&pts, 2, 3, 9, 100).unwrap();
        let truth = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2];
        let a = cb.assignment();
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(truth[i] == truth[j], a[i] == a[j]);
            }
        }
        for w in cb.inertia_trace().windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(kmeans(&pts, 2, 3, 9, 100).unwrap(), cb);
    }

    #[test]
    fn duplicate_points_keep_every_bin_nonempty() {
        let pts = vec![1.0, 1.0, 1.0, 2.0, 5.0, 5.0];
        let cb = kmeans(&pts, 1, 5, 0, 20).unwrap();
        let members = cb.members();
        assert!(members.iter().all(|m| !m.is_empty()));
    }

    #[test]
    fn rejects_bad_k() {
        let pts = grid_points();
        assert!(kmeans(&pts, 2, 0, 0, 10).is_err());
        assert!(kmeans(&pts, 2, 13, 0, 10).is_err());
    }

    fn line_codebook() -> Codebook {
        Codebook::from_parts(3, 1, vec![0.0, 2.0, 5.0], vec![0, 0, 1, 2, 2], 0.0).unwrap()
    }

    #[test]
    fn assign_rules() {
        let cb = line_codebook();
        assert_eq!(assign(&[5.0], &cb).unwrap(), 2);
        assert_eq!(assign(&[1.0], &cb).unwrap(), 0);
        assert_eq!(assign(&[3.5], &cb).unwrap(), 1);
        assert!(assign(&[1.0, 2.0], &cb).is_err());
    }

    fn fp(entries: &[(usize, f64)]) -> Fingerprint {
        Fingerprint {
            sample_id: "s".into(),
            label: None,
            entries: entries
                .iter()
                .map(|&(compound_index, weight)| Entry { compound_index, weight })
                .collect(),
        }
    }

    #[test]
    fn histogram_examples() {
        let cb = Codebook::from_parts(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![3, 1, 1], 0.0).unwrap();
        assert_eq!(histogram(&fp(&[(0, 1.0)]), &cb).unwrap().values(), &[0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(histogram(&fp(&[(1, 0.4), (2, 0.6)]), &cb).unwrap().values()[1], 1.0);
        assert!(histogram(&fp(&[(7, 1.0)]), &cb).is_err());
    }

    #[test]
    fn bytes_round_trip() {
        let cb = kmeans(&grid_points(), 2, 3, 1, 50).unwrap();
        let back = Codebook::from_bytes(&cb.to_bytes()).unwrap();
        assert_eq!(back.centroids(), cb.centroids());
        assert_eq!(back.assignment(), cb.assignment());
        let mut bytes = cb.to_bytes();
        bytes[0] = b'X';
        assert!(Codebook::from_bytes(&bytes).is_err());
    }

    #[test]
    fn hist_csv_round_trip() {
        let hists = vec![SampleHistogram {
            sample_id: "a".into(),
            label: Some("air".into()),
            histogram: Histogram::new(vec![0.1, 0.2, 0.7]).unwrap(),
        }];
        let text = write_hist_csv(&hists);
        assert!(text.starts_with("sample_id,label,h_0,h_1,h_2\n"));
        assert_eq!(read_hist_csv(text.as_bytes()).unwrap(), hists);
    }

    proptest::proptest! {
        #[test]
        fn assign_matches_linear_scan(
            cents in proptest::collection::vec(-5.0f64..5.0, 3 * 4),
            point in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let cb = Codebook::from_parts(4, 3, cents.clone(), vec![], 0.0).unwrap();
            let mut best = 0;
            for c in 1..4 {
                if sq_dist(&point, &cents[c * 3..c * 3 + 3]) < sq_dist(&point, &cents[best * 3..best * 3 + 3]) {
                    best = c;
                }
            }
            proptest::prop_assert_eq!(assign(&point, &cb).unwrap(), best);
        }

        #[test]
        fn histogram_is_linear(
            w1 in proptest::collection::vec(0.01f64..1.0, 6),
            w2 in proptest::collection::vec(0.01f64..1.0, 6),
            a in 0.0f64..1.0,
        ) {
            let cb = Codebook::from_parts(3, 1, vec![0.0, 1.0, 2.0], vec![0, 1, 2, 0, 1, 1], 0.0).unwrap();
            let norm = |w: &[f64]| {
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect::<Vec<_>>()
            };
            let (u, v) = (norm(&w1), norm(&w2));
            let mix: Vec<(usize, f64)> = (0..6).map(|i| (i, a * u[i] + (1.0 - a) * v[i])).collect();
            let hu = histogram(&fp(&u.iter().copied().enumerate().collect::<Vec<_>>()), &cb).unwrap();
            let hv = histogram(&fp(&v.iter().copied().enumerate().collect::<Vec<_>>()), &cb).unwrap();
            let hm = histogram(&fp(&mix), &cb).unwrap();
            for b in 0..3 {
                let expect = a * hu.values()[b] + (1.0 - a) * hv.values()[b];
                proptest::prop_assert!((hm.values()[b] - expect).abs() < 1e-12);
            }
        }
    }
}
