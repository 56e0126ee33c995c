//! L2-penalised logistic regression.
//!
//! Minimises the mean log-loss plus `l2_penalty / (2 n) * |w|^2` (intercept
//! unpenalised), which has the same optimum as scikit-learn's `C = 1 / l2`.
//! Rows with identical feature vectors are pooled into weighted groups before
//! fitting; genotype subsets of a few SNPs collapse to a few hundred
//! patterns, which is what keeps GA fitness evaluation cheap. The solver
//! takes damped Newton steps with Armijo backtracking and stops once every
//! gradient component is below `convergence_tol`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub l2_penalty: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2_penalty: 1.0,
            max_iterations: 500,
            convergence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    pub fn score(&self, x: &Matrix, i: usize) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * x.get(i, j))
                .sum::<f64>()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Rows pooled by identical feature vector.
struct Groups {
    p: usize,
    /// Row-major group features.
    x: Vec<f64>,
    count: Vec<f64>,
    cases: Vec<f64>,
    n: f64,
}

impl Groups {
    fn new(x: &Matrix, y: &[u8], pool: bool) -> Self {
        let (n, p) = (x.n_rows(), x.n_cols());
        let small_ints = pool
            && p <= 8
            && (0..p).all(|j| {
                x.column(j)
                    .iter()
                    .all(|&v| (0.0..=255.0).contains(&v) && v.fract() == 0.0)
            });
        let mut g = Groups {
            p,
            x: Vec::new(),
            count: Vec::new(),
            cases: Vec::new(),
            n: n as f64,
        };
        if small_ints {
            let mut index: HashMap<u64, usize> = HashMap::new();
            for i in 0..n {
                let key = (0..p).fold(0u64, |k, j| (k << 8) | x.get(i, j) as u64);
                let slot = *index.entry(key).or_insert_with(|| {
                    g.x.extend((0..p).map(|j| x.get(i, j)));
                    g.count.push(0.0);
                    g.cases.push(0.0);
                    g.count.len() - 1
                });
                g.count[slot] += 1.0;
                g.cases[slot] += f64::from(y[i]);
            }
        } else {
            for i in 0..n {
                g.x.extend((0..p).map(|j| x.get(i, j)));
                g.count.push(1.0);
                g.cases.push(f64::from(y[i]));
            }
        }
        g
    }

    fn len(&self) -> usize {
        self.count.len()
    }

    fn z(&self, k: usize, w: &[f64], b: f64) -> f64 {
        let row = &self.x[k * self.p..(k + 1) * self.p];
        b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>()
    }

    fn objective(&self, w: &[f64], b: f64, l2: f64) -> f64 {
        let mut loss = 0.0;
        for k in 0..self.len() {
            let z = self.z(k, w, b);
            loss += self.count[k] * softplus(z) - self.cases[k] * z;
        }
        let pen: f64 = w.iter().map(|v| v * v).sum();
        (loss + 0.5 * l2 * pen) / self.n
    }

    /// Gradient over (w, b) in that order.
    fn gradient(&self, w: &[f64], b: f64, l2: f64) -> Vec<f64> {
        let p = self.p;
        let mut g = vec![0.0; p + 1];
        for k in 0..self.len() {
            let r = self.count[k] * sigmoid(self.z(k, w, b)) - self.cases[k];
            let row = &self.x[k * p..(k + 1) * p];
            for j in 0..p {
                g[j] += r * row[j];
            }
            g[p] += r;
        }
        for j in 0..p {
            g[j] += l2 * w[j];
        }
        g.iter_mut().for_each(|v| *v /= self.n);
        g
    }

    /// Row-major (p+1)x(p+1) Hessian.
    fn hessian(&self, w: &[f64], b: f64, l2: f64) -> Vec<f64> {
        let p = self.p;
        let d = p + 1;
        let mut h = vec![0.0; d * d];
        let mut xt = vec![1.0; d];
        for k in 0..self.len() {
            let s = sigmoid(self.z(k, w, b));
            let c = self.count[k] * s * (1.0 - s);
            xt[..p].copy_from_slice(&self.x[k * p..(k + 1) * p]);
            for r in 0..d {
                let cr = c * xt[r];
                for q in r..d {
                    h[r * d + q] += cr * xt[q];
                }
            }
        }
        for r in 0..d {
            for q in 0..r {
                h[r * d + q] = h[q * d + r];
            }
        }
        for j in 0..p {
            h[j * d + j] += l2;
        }
        h.iter_mut().for_each(|v| *v /= self.n);
        h
    }
}

/// Solves `a x = b` for symmetric positive definite `a` (row-major) in place.
/// Returns `false` if `a` is not numerically positive definite.
fn cholesky_solve(a: &mut [f64], b: &mut [f64]) -> bool {
    let d = b.len();
    for j in 0..d {
        let mut s = a[j * d + j];
        for k in 0..j {
            s -= a[j * d + k] * a[j * d + k];
        }
        if s <= 0.0 || !s.is_finite() {
            return false;
        }
        let l = s.sqrt();
        a[j * d + j] = l;
        for i in j + 1..d {
            let mut t = a[i * d + j];
            for k in 0..j {
                t -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = t / l;
        }
    }
    for i in 0..d {
        let mut t = b[i];
        for k in 0..i {
            t -= a[i * d + k] * b[k];
        }
        b[i] = t / a[i * d + i];
    }
    for i in (0..d).rev() {
        let mut t = b[i];
        for k in i + 1..d {
            t -= a[k * d + i] * b[k];
        }
        b[i] = t / a[i * d + i];
    }
    true
}

pub fn fit(x: &Matrix, y: &[u8], params: &LogisticParams) -> LogisticModel {
    let groups = Groups::new(x, y, true);
    let p = x.n_cols();
    let l2 = params.l2_penalty;
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut f = groups.objective(&w, b, l2);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        let g = groups.gradient(&w, b, l2);
        if g.iter().all(|v| v.abs() <= params.convergence_tol) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut h = groups.hessian(&w, b, l2);
        let mut step: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut jitter = 1e-10;
        while !cholesky_solve(&mut h.clone(), &mut step.clone()) && jitter < 1e3 {
            for j in 0..=p {
                h[j * (p + 1) + j] += jitter;
            }
            jitter *= 10.0;
        }
        if !cholesky_solve(&mut h, &mut step) {
            step = g.iter().map(|v| -v).collect();
        }
        let slope: f64 = g.iter().zip(&step).map(|(a, c)| a * c).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let w_new: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let b_new = b + t * step[p];
            let f_new = groups.objective(&w_new, b_new, l2);
            if f_new <= f + 1e-4 * t * slope {
                w = w_new;
                b = b_new;
                f = f_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No descent possible at machine precision.
            converged = groups
                .gradient(&w, b, l2)
                .iter()
                .all(|v| v.abs() <= params.convergence_tol);
            break;
        }
    }
    if !converged && iterations == params.max_iterations {
        converged = groups
            .gradient(&w, b, l2)
            .iter()
            .all(|v| v.abs() <= params.convergence_tol);
    }
    LogisticModel {
        weights: w,
        intercept: b,
        iterations,
        converged,
    }
}

/// Penalised mean log-loss at `(weights, intercept)`.
pub fn objective(x: &Matrix, y: &[u8], weights: &[f64], intercept: f64, l2_penalty: f64) -> f64 {
    Groups::new(x, y, false).objective(weights, intercept, l2_penalty)
}

/// Analytic gradient of [`objective`], weights first and intercept last.
pub fn gradient(
    x: &Matrix,
    y: &[u8],
    weights: &[f64],
    intercept: f64,
    l2_penalty: f64,
) -> Vec<f64> {
    Groups::new(x, y, false).gradient(weights, intercept, l2_penalty)
}
