//! Kernel logistic regression over GDD and two-sample significance tests.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::metrics::DistanceMatrix;
use crate::rng::seeded;
use crate::{Error, Result};

mod testing;

pub use testing::{
    benjamini_hochberg, per_bin_tests, permutation_test, BinTest, BinTestStrategy, Direction,
    PerBinReport, PermutationResult, TestConfig, TestReport, two_sample_report,
};

/// Two-class labels; `true` marks the second class in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLabels {
    pub classes: [String; 2],
    pub positive: Vec<bool>,
}

impl BinaryLabels {
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut distinct: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != 2 {
            return Err(Error::invalid(format!(
                "expected exactly two classes, found {}: {:?}",
                distinct.len(),
                distinct
            )));
        }
        let classes = [distinct[0].to_string(), distinct[1].to_string()];
        let positive = labels.iter().map(|l| l.as_ref() == classes[1]).collect();
        Ok(BinaryLabels { classes, positive })
    }
}

/// `G_ij = exp(-d_ij^2 / (2 sigma^2))`.
pub fn gram_from_gdd(dist: &DistanceMatrix, sigma: f64) -> Result<DMatrix<f64>> {
    check_sigma(sigma)?;
    let n = dist.len();
    Ok(DMatrix::from_fn(n, n, |i, j| gaussian(dist.get(i, j), sigma)))
}

#[inline]
fn gaussian(d: f64, sigma: f64) -> f64 {
    (-d * d / (2.0 * sigma * sigma)).exp()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("sigma must be positive, got {sigma}")))
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlrOptions {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KlrOptions {
    fn default() -> Self {
        KlrOptions {
            lambda: 1e-2,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

/// Dual coefficients from IRLS.
#[derive(Debug, Clone, PartialEq)]
pub struct KlrFit {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Penalized negative log-likelihood, starting at the zero model.
    pub objective_trace: Vec<f64>,
}

fn objective(gram: &DMatrix<f64>, y: &[f64], alpha: &DVector<f64>, bias: f64, lambda: f64) -> f64 {
    let g_alpha = gram * alpha;
    let loss: f64 = y
        .iter()
        .zip(g_alpha.iter())
        .map(|(yi, fi)| softplus(-yi * (fi + bias)))
        .sum();
    loss + 0.5 * lambda * alpha.dot(&g_alpha)
}

/// Minimizes `sum log(1 + exp(-y_i (G alpha + b)_i)) + lambda/2 alpha' G alpha`
/// by Newton/IRLS from the zero model, halving steps that would increase the
/// objective.
///
/// The Newton system is solved in the reduced form
/// `(W G + lambda I) da + W 1 db = -(p - t + lambda alpha)`, which multiplies
/// back to the full system and stays solvable when `G` is rank deficient.
pub fn klr_fit(gram: &DMatrix<f64>, labels: &[bool], opts: KlrOptions) -> Result<KlrFit> {
    let n = labels.len();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::invalid(format!(
            "gram is {}x{} but there are {n} labels",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::invalid("kernel logistic regression needs both classes"));
    }
    if !(opts.lambda >= 0.0) || !opts.lambda.is_finite() || !(opts.tol > 0.0) {
        return Err(Error::invalid("lambda must be nonnegative and tol positive"));
    }
    let lambda = opts.lambda;
    let t: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let y: Vec<f64> = t.iter().map(|v| 2.0 * v - 1.0).collect();

    let mut alpha = DVector::zeros(n);
    let mut bias = 0.0;
    let mut current = objective(gram, &y, &alpha, bias, lambda);
    let mut trace = vec![current];

    for _ in 0..opts.max_iter {
        let f = gram * &alpha;
        let p: Vec<f64> = f.iter().map(|fi| sigmoid(fi + bias)).collect();
        let w: Vec<f64> = p.iter().map(|pi| (pi * (1.0 - pi)).max(1e-12)).collect();

        let mut system = DMatrix::zeros(n + 1, n + 1);
        let mut rhs = DVector::zeros(n + 1);
        let mut resid_sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                system[(i, j)] = w[i] * gram[(i, j)];
            }
            system[(i, i)] += lambda;
            system[(i, n)] = w[i];
            rhs[i] = -(p[i] - t[i] + lambda * alpha[i]);
            resid_sum += p[i] - t[i];
        }
        for j in 0..n {
            system[(n, j)] = (0..n).map(|i| w[i] * gram[(i, j)]).sum();
        }
        system[(n, n)] = w.iter().sum();
        rhs[n] = -resid_sum;

        let step = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular IRLS system".into()))?;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand_alpha = &alpha + step.rows(0, n) * scale;
            let cand_bias = bias + step[n] * scale;
            let obj = objective(gram, &y, &cand_alpha, cand_bias, lambda);
            if obj <= current {
                accepted = Some((cand_alpha, cand_bias, obj));
                break;
            }
            scale *= 0.5;
        }
        let change = step.amax() * scale;
        match accepted {
            Some((a, b, obj)) => {
                alpha = a;
                bias = b;
                current = obj;
                trace.push(obj);
            }
            // No decreasing step at machine precision: already at the optimum.
            None => {
                return Ok(KlrFit {
                    alphas: alpha.iter().copied().collect(),
                    bias,
                    objective_trace: trace,
                })
            }
        }
        if !current.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numerical("IRLS diverged".into()));
        }
        if change < opts.tol {
            return Ok(KlrFit {
                alphas: alpha.iter().copied().collect(),
                bias,
                objective_trace: trace,
            });
        }
    }
    Err(Error::Numerical(format!(
        "kernel logistic regression did not converge in {} iterations",
        opts.max_iter
    )))
}

/// Fitted classifier over GDD distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlrModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub training_ids: Vec<String>,
}

impl KlrModel {
    pub fn fit(dist: &DistanceMatrix, labels: &[bool], sigma: f64, opts: KlrOptions) -> Result<Self> {
        let gram = gram_from_gdd(dist, sigma)?;
        let fit = klr_fit(&gram, labels, opts)?;
        Ok(KlrModel {
            alphas: fit.alphas,
            bias: fit.bias,
            sigma,
            lambda: opts.lambda,
            training_ids: dist.ids().to_vec(),
        })
    }

    /// Probability of the positive class given distances to every training sample.
    pub fn predict(&self, gdd_to_training: &[f64]) -> Result<f64> {
        klr_predict(self, gdd_to_training)
    }
}

/// `sigmoid(sum_i alpha_i exp(-d_i^2 / (2 sigma^2)) + b)`.
pub fn klr_predict(model: &KlrModel, gdd_to_training: &[f64]) -> Result<f64> {
    if gdd_to_training.len() != model.alphas.len() {
        return Err(Error::invalid(format!(
            "got {} distances for a model with {} training samples",
            gdd_to_training.len(),
            model.alphas.len()
        )));
    }
    let z: f64 = model
        .alphas
        .iter()
        .zip(gdd_to_training)
        .map(|(a, d)| a * gaussian(*d, model.sigma))
        .sum::<f64>()
        + model.bias;
    Ok(sigmoid(z))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub sigma: f64,
    pub lambda: f64,
    /// `None` when a fold failed to fit.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub accuracy: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub folds: usize,
    pub grid: Vec<GridPoint>,
}

/// Bandwidths at 0.5, 1 and 2 times the median off-diagonal distance.
pub fn default_sigma_grid(dist: &DistanceMatrix) -> Result<Vec<f64>> {
    let n = dist.len();
    let mut upper: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| dist.get(i, j))
        .collect();
    if upper.is_empty() {
        return Err(Error::invalid("need at least two samples"));
    }
    upper.sort_by(f64::total_cmp);
    let median = upper[upper.len() / 2];
    if !(median > 0.0) {
        return Err(Error::invalid("median distance is zero; cannot pick a bandwidth"));
    }
    Ok(vec![0.5 * median, median, 2.0 * median])
}

pub const DEFAULT_LAMBDA_GRID: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Stratified fold index per sample: each class is shuffled with the seed
/// and dealt round-robin.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid("at least two folds are required"));
    }
    let mut rng = seeded(seed);
    let mut fold = vec![0; labels.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::invalid(format!(
                "class has {} samples, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % folds;
        }
    }
    Ok(fold)
}

/// Stratified k-fold accuracy maximized over the `(sigma, lambda)` grid
/// (first grid point wins ties).
pub fn cross_validate(
    dist: &DistanceMatrix,
    labels: &[bool],
    folds: usize,
    sigma_grid: &[f64],
    lambda_grid: &[f64],
    seed: u64,
) -> Result<CvResult> {
    if labels.len() != dist.len() {
        return Err(Error::invalid("one label per sample is required"));
    }
    if sigma_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let fold_of = stratified_folds(labels, folds, seed)?;
    let n = labels.len();
    let mut grid = Vec::new();
    for &sigma in sigma_grid {
        check_sigma(sigma)?;
        for &lambda in lambda_grid {
            let opts = KlrOptions {
                lambda,
                ..KlrOptions::default()
            };
            let mut correct = 0usize;
            let mut failed = false;
            for k in 0..folds {
                let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != k).collect();
                let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == k).collect();
                let train_labels: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
                let model = match KlrModel::fit(&dist.select(&train), &train_labels, sigma, opts) {
                    Ok(m) => m,
                    Err(Error::Numerical(_)) => {
                        failed = true;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                for &i in &test {
                    let d: Vec<f64> = train.iter().map(|&j| dist.get(i, j)).collect();
                    let prob = model.predict(&d)?;
                    if (prob > 0.5) == labels[i] {
                        correct += 1;
                    }
                }
            }
            grid.push(GridPoint {
                sigma,
                lambda,
                accuracy: (!failed).then(|| correct as f64 / n as f64),
            });
        }
    }
    let best = grid
        .iter()
        .filter_map(|g| g.accuracy.map(|a| (a, g)))
        .fold(None::<(f64, &GridPoint)>, |best, (a, g)| match best {
            Some((b, _)) if b >= a => best,
            _ => Some((a, g)),
        })
        .ok_or_else(|| Error::Numerical("no grid point could be fitted".into()))?;
    Ok(CvResult {
        accuracy: best.0,
        sigma: best.1.sigma,
        lambda: best.1.lambda,
        folds,
        grid: grid.clone(),
    })
}
