//! Limited-memory BFGS minimization with Armijo backtracking.

use std::collections::VecDeque;

use super::model::StopReason;
use super::CrfError;

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    pub max_iterations: usize,
    pub memory: usize,
    /// Stop once `‖g‖₂ ≤ tolerance · max(1, ‖x‖₂)`.
    pub tolerance: f64,
    /// Stop after this many consecutive steps with relative decrease below 1e-10.
    pub patience: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            max_iterations: 500,
            memory: 7,
            tolerance: 1e-5,
            patience: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, cfg: &LbfgsConfig) -> Result<LbfgsResult, CrfError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(CrfError::NonFiniteObjective);
    }
    let mut trace = vec![fx];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stalled = 0;
    let n = x.len();
    for iter in 0..cfg.max_iterations {
        if norm(&g) <= cfg.tolerance * norm(&x).max(1.0) {
            return Ok(done(x, fx, iter, StopReason::GradientTolerance, trace));
        }
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if hist.is_empty() {
            1.0 / norm(&g).max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && gn.iter().all(|v| v.is_finite()) && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if fx.is_finite() {
                return Ok(done(x, fx, iter, StopReason::NoProgress, trace));
            }
            return Err(CrfError::NonFiniteObjective);
        };
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let decrease = (fx - fn_) / fx.abs().max(1.0);
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
        if decrease < 1e-10 {
            stalled += 1;
            if stalled >= cfg.patience {
                return Ok(done(x, fx, iter + 1, StopReason::NoProgress, trace));
            }
        } else {
            stalled = 0;
        }
    }
    let iters = cfg.max_iterations;
    Ok(done(x, fx, iters, StopReason::MaxIterations, trace))
}

fn done(x: Vec<f64>, value: f64, iterations: usize, stop_reason: StopReason, trace: Vec<f64>) -> LbfgsResult {
    LbfgsResult {
        x,
        value,
        iterations,
        stop_reason,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (v, g)
        };
        let r = minimize(f, vec![-1.2, 1.0], &LbfgsConfig { tolerance: 1e-10, ..Default::default() }).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_hits_tolerance() {
        let f = |x: &[f64]| {
            let v: f64 = x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum();
            let g = x.iter().enumerate().map(|(i, v)| 2.0 * (i as f64 + 1.0) * v).collect();
            (v, g)
        };
        let r = minimize(f, vec![1.0; 5], &LbfgsConfig::default()).unwrap();
        assert_eq!(r.stop_reason, StopReason::GradientTolerance);
        assert!(r.value < 1e-9);
    }

    #[test]
    fn non_finite_start() {
        let f = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert!(matches!(minimize(f, vec![0.0], &LbfgsConfig::default()), Err(CrfError::NonFiniteObjective)));
    }
}
