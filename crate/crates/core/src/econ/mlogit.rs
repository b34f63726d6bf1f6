use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use super::EconError;

/// Outcome categories; 0 is the base.
pub const CATEGORIES: [i8; 3] = [-1, 0, 1];
pub const INTERCEPT: &str = "_cons";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovFlavor {
    Model,
    Robust,
}

impl std::str::FromStr for CovFlavor {
    type Err = EconError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model" => Ok(CovFlavor::Model),
            "robust" => Ok(CovFlavor::Robust),
            other => Err(EconError::InvalidConfig(format!("unknown covariance '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlogitConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the largest gradient component.
    pub tolerance: f64,
    pub max_halvings: usize,
    /// A coefficient times its column's range above this, together with a
    /// near-certain fitted outcome, is reported as separation.
    pub separation_bound: f64,
}

impl Default for MlogitConfig {
    fn default() -> Self {
        MlogitConfig {
            max_iterations: 100,
            tolerance: 1e-8,
            max_halvings: 50,
            separation_bound: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlogitFit {
    /// Intercept first, then the regressors.
    pub columns: Vec<String>,
    /// `[β₋₁, γ₋₁…, β₊₁, γ₊₁…]`; the base category has no parameters.
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    pub observations: usize,
    pub cov_model: Vec<Vec<f64>>,
    pub cov_robust: Vec<Vec<f64>>,
}

/// Softmax over `(η₋₁, η₀, η₊₁)`.
pub fn category_probabilities(eta: [f64; 3]) -> [f64; 3] {
    let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = eta.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn category_index(y: i8) -> Result<usize, EconError> {
    match y {
        -1 => Ok(0),
        0 => Ok(1),
        1 => Ok(2),
        other => Err(EconError::BadOutcome(other)),
    }
}

fn eta(params: &[f64], row: &[f64]) -> [f64; 3] {
    let k = row.len() + 1;
    let lin = |b: usize| params[b * k] + row.iter().zip(&params[b * k + 1..(b + 1) * k]).map(|(x, t)| x * t).sum::<f64>();
    [lin(0), 0.0, lin(1)]
}

impl MlogitFit {
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    /// Coefficient of column `j` (0 is the intercept) in the equation of
    /// `category`; always 0 for the base.
    pub fn coef(&self, category: i8, j: usize) -> f64 {
        match category {
            -1 => self.params[j],
            1 => self.params[self.k() + j],
            _ => 0.0,
        }
    }

    pub fn param_index(&self, category: i8, j: usize) -> Option<usize> {
        match category {
            -1 => Some(j),
            1 => Some(self.k() + j),
            _ => None,
        }
    }

    /// Outcome probabilities for a regressor row without the intercept.
    pub fn probabilities(&self, row: &[f64]) -> [f64; 3] {
        category_probabilities(eta(&self.params, row))
    }

    pub fn covariance(&self, flavor: CovFlavor) -> &Vec<Vec<f64>> {
        match flavor {
            CovFlavor::Model => &self.cov_model,
            CovFlavor::Robust => &self.cov_robust,
        }
    }

    pub fn std_errors(&self, flavor: CovFlavor) -> Vec<f64> {
        let c = self.covariance(flavor);
        (0..self.params.len()).map(|i| c[i][i].max(0.0).sqrt()).collect()
    }

    pub fn z_values(&self, flavor: CovFlavor) -> Vec<f64> {
        self.params
            .iter()
            .zip(self.std_errors(flavor))
            .map(|(b, se)| wald_test(*b, se).0)
            .collect()
    }

    pub fn p_values(&self, flavor: CovFlavor) -> Vec<f64> {
        wald_p(self, flavor)
    }
}

/// `(z, p)` for a coefficient and its standard error, two-sided normal.
pub fn wald_test(coef: f64, se: f64) -> (f64, f64) {
    if coef == 0.0 {
        return (0.0, 1.0);
    }
    let z = coef / se;
    (z, erfc(z.abs() / std::f64::consts::SQRT_2))
}

pub fn wald_p(fit: &MlogitFit, flavor: CovFlavor) -> Vec<f64> {
    fit.params
        .iter()
        .zip(fit.std_errors(flavor))
        .map(|(b, se)| wald_test(*b, se).1)
        .collect()
}

struct Accum {
    ll: f64,
    grad: Vec<f64>,
    info: Vec<f64>,
}

impl Accum {
    fn zero(d: usize, with_info: bool) -> Self {
        Accum {
            ll: 0.0,
            grad: vec![0.0; d],
            info: vec![0.0; if with_info { d * d } else { 0 }],
        }
    }

    fn add(&mut self, o: &Accum) {
        self.ll += o.ll;
        self.grad.iter_mut().zip(&o.grad).for_each(|(a, b)| *a += b);
        self.info.iter_mut().zip(&o.info).for_each(|(a, b)| *a += b);
    }
}

fn chunk_size(n: usize) -> usize {
    n.div_ceil(32).max(64)
}

/// Log-likelihood, score and observed information, each summed in a fixed
/// order so results do not depend on the thread count.
fn evaluate(params: &[f64], x: &[Vec<f64>], y: &[usize], with_info: bool) -> Accum {
    let k = params.len() / 2;
    let d = params.len();
    let idx: Vec<usize> = (0..x.len()).collect();
    let parts: Vec<Accum> = idx
        .par_chunks(chunk_size(x.len()))
        .map(|chunk| {
            let mut acc = Accum::zero(d, with_info);
            let mut xt = vec![0.0; k];
            for &i in chunk {
                let row = &x[i];
                xt[0] = 1.0;
                xt[1..].copy_from_slice(row);
                let e = eta(params, row);
                let p = category_probabilities(e);
                let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + e.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                acc.ll += e[y[i]] - lse;
                let pb = [p[0], p[2]];
                let ib = [0usize, 2];
                for b in 0..2 {
                    let r = if y[i] == ib[b] { 1.0 } else { 0.0 } - pb[b];
                    for j in 0..k {
                        acc.grad[b * k + j] += r * xt[j];
                    }
                }
                if with_info {
                    for b in 0..2 {
                        for c in 0..2 {
                            let w = if b == c { pb[b] } else { 0.0 } - pb[b] * pb[c];
                            for j in 0..k {
                                let wj = w * xt[j];
                                let base = (b * k + j) * d + c * k;
                                for l in 0..k {
                                    acc.info[base + l] += wj * xt[l];
                                }
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = Accum::zero(d, with_info);
    for p in &parts {
        total.add(p);
    }
    total
}

fn outcome_indices(y: &[i8]) -> Result<Vec<usize>, EconError> {
    y.iter().map(|&v| category_index(v)).collect()
}

fn check_shape(x: &[Vec<f64>], y: &[i8], columns: usize) -> Result<(), EconError> {
    if x.len() != y.len() {
        return Err(EconError::Alignment(format!("{} rows but {} outcomes", x.len(), y.len())));
    }
    if let Some(i) = x.iter().position(|r| r.len() != columns) {
        return Err(EconError::Alignment(format!("row {i} has {} columns, expected {columns}", x[i].len())));
    }
    if let Some(i) = x.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(EconError::NonFinite(format!("row {i}")));
    }
    Ok(())
}

/// First column (with the intercept at 0) that is a linear combination of
/// the columns before it.
fn dependent_column(x: &[Vec<f64>], k: usize) -> Option<usize> {
    let n = x.len();
    let mut m = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let rank = |cols: usize| {
        let sub = m.columns(0, cols).into_owned();
        let sv = sub.singular_values();
        let tol = sv.max() * n.max(cols) as f64 * f64::EPSILON * 16.0;
        sv.iter().filter(|&&s| s > tol).count()
    };
    if rank(k) == k {
        return None;
    }
    (1..=k).find(|&c| rank(c) < c).map(|c| c - 1)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn invert_information(info: &[f64], d: usize) -> Result<DMatrix<f64>, EconError> {
    let a = DMatrix::from_row_slice(d, d, info);
    let chol = a.cholesky().ok_or(EconError::SingularInformation)?;
    let inv = chol.inverse();
    if inv.iter().all(|v| v.is_finite()) {
        Ok(inv)
    } else {
        Err(EconError::SingularInformation)
    }
}

/// Model-based covariance: the inverse observed information at `params`.
pub fn model_cov(params: &[f64], x: &[Vec<f64>], y: &[i8]) -> Result<Vec<Vec<f64>>, EconError> {
    let yi = outcome_indices(y)?;
    let acc = evaluate(params, x, &yi, true);
    Ok(to_rows(&invert_information(&acc.info, params.len())?))
}

fn scores(params: &[f64], x: &[Vec<f64>], y: &[usize]) -> Vec<Vec<f64>> {
    let k = params.len() / 2;
    x.par_iter()
        .zip(y.par_iter())
        .map(|(row, &yi)| {
            let p = category_probabilities(eta(params, row));
            let mut s = vec![0.0; 2 * k];
            for (b, (pb, ib)) in [(p[0], 0usize), (p[2], 2)].into_iter().enumerate() {
                let r = if yi == ib { 1.0 } else { 0.0 } - pb;
                s[b * k] = r;
                for j in 1..k {
                    s[b * k + j] = r * row[j - 1];
                }
            }
            s
        })
        .collect()
}

fn sandwich_from(params: &[f64], x: &[Vec<f64>], y: &[usize], a_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let d = params.len();
    let mut b = DMatrix::<f64>::zeros(d, d);
    for s in scores(params, x, y) {
        let v = DVector::from_vec(s);
        b += &v * v.transpose();
    }
    a_inv * b * a_inv
}

/// Huber-White covariance `A⁻¹ B A⁻¹` at the fitted parameters.
pub fn sandwich_cov(fit: &MlogitFit, x: &[Vec<f64>], y: &[i8]) -> Result<Vec<Vec<f64>>, EconError> {
    check_shape(x, y, fit.k() - 1)?;
    let yi = outcome_indices(y)?;
    let acc = evaluate(&fit.params, x, &yi, true);
    let a_inv = invert_information(&acc.info, fit.params.len())?;
    Ok(to_rows(&sandwich_from(&fit.params, x, &yi, &a_inv)))
}

fn separation_column(params: &[f64], x: &[Vec<f64>], y: &[usize], columns: &[String], bound: f64) -> Option<String> {
    let k = columns.len();
    let certain = x
        .iter()
        .zip(y)
        .any(|(row, &yi)| category_probabilities(eta(params, row))[yi] > 1.0 - 1e-6);
    if !certain {
        return None;
    }
    let mut worst: Option<(f64, usize)> = None;
    for j in 1..k {
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r[j - 1]), hi.max(r[j - 1]))
        });
        let effect = (hi - lo) * params[j].abs().max(params[k + j].abs());
        if effect > bound && worst.map_or(true, |(w, _)| effect > w) {
            worst = Some((effect, j));
        }
    }
    worst.map(|(_, j)| columns[j].clone())
}

/// Multinomial logit with base category 0, fitted by Newton's method with
/// step halving. `columns` names the regressors; the intercept is added.
pub fn fit_mlogit(
    x: &[Vec<f64>],
    y: &[i8],
    columns: &[String],
    cfg: &MlogitConfig,
) -> Result<MlogitFit, EconError> {
    check_shape(x, y, columns.len())?;
    let yi = outcome_indices(y)?;
    let k = columns.len() + 1;
    let d = 2 * k;
    let mut names = vec![INTERCEPT.to_string()];
    names.extend(columns.iter().cloned());
    if x.len() <= k {
        return Err(EconError::TooFewObservations { rows: x.len(), columns: k });
    }
    if let Some(j) = dependent_column(x, k) {
        return Err(EconError::RankDeficient(names[j].clone()));
    }
    let mut counts = [0usize; 3];
    yi.iter().for_each(|&c| counts[c] += 1);
    if counts.contains(&0) {
        return Err(EconError::Separation(INTERCEPT.to_string()));
    }

    let mut params = vec![0.0; d];
    let mut acc = evaluate(&params, x, &yi, true);
    let mut iterations = 0;
    let max_abs = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while max_abs(&acc.grad) >= cfg.tolerance {
        if iterations >= cfg.max_iterations {
            let col = separation_column(&params, x, &yi, &names, cfg.separation_bound);
            return Err(match col {
                Some(c) => EconError::Separation(c),
                None => EconError::NotConverged {
                    iterations,
                    gradient: max_abs(&acc.grad),
                },
            });
        }
        iterations += 1;
        let a = DMatrix::from_row_slice(d, d, &acc.info);
        let g = DVector::from_column_slice(&acc.grad);
        let step = match a.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => a.lu().solve(&g).ok_or(EconError::SingularInformation)?,
        };
        let slack = 1e-12 * (1.0 + acc.ll.abs());
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..=cfg.max_halvings {
            let cand: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + t * s).collect();
            let ll = evaluate(&cand, x, &yi, false).ll;
            if ll.is_finite() && ll >= acc.ll - slack {
                next = Some(cand);
                break;
            }
            t *= 0.5;
        }
        let Some(cand) = next else {
            return Err(EconError::NotConverged {
                iterations,
                gradient: max_abs(&acc.grad),
            });
        };
        params = cand;
        acc = evaluate(&params, x, &yi, true);
    }
    // one more full step once inside the tolerance
    if iterations > 0 {
        let a = DMatrix::from_row_slice(d, d, &acc.info);
        if let Some(c) = a.cholesky() {
            let step = c.solve(&DVector::from_column_slice(&acc.grad));
            let cand: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let polished = evaluate(&cand, x, &yi, true);
            if polished.ll >= acc.ll - 1e-12 * (1.0 + acc.ll.abs()) && max_abs(&polished.grad) <= max_abs(&acc.grad) {
                params = cand;
                acc = polished;
            }
        }
    }
    if let Some(c) = separation_column(&params, x, &yi, &names, cfg.separation_bound) {
        return Err(EconError::Separation(c));
    }
    let a_inv = invert_information(&acc.info, d)?;
    let robust = sandwich_from(&params, x, &yi, &a_inv);
    Ok(MlogitFit {
        columns: names,
        gradient_max_norm: max_abs(&acc.grad),
        params,
        log_likelihood: acc.ll,
        iterations,
        observations: x.len(),
        cov_model: to_rows(&a_inv),
        cov_robust: to_rows(&robust),
    })
}
