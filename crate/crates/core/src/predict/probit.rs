use serde::Serialize;

use super::design::{DesignRow, ProbitDesign};
use super::normal::{inverse_mills, log_norm_cdf, ETA_CLAMP};
use super::PredictError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub rel_ll_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            grad_tol: 1e-8,
            rel_ll_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// From the inverse observed information; NaN where it is singular.
    pub std_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Some row has `|eta| > 30` at the returned coefficients.
    pub separation: bool,
}

// Relative pivot below which a column counts as collinear.
const RANK_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 60;

/// Information matrix in arrow form: dense block `a` (k x k), coupling `b`
/// (one k-vector per group) and diagonal `d` (groups).
struct Arrow {
    k: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
}

impl Arrow {
    fn zeros(k: usize, g: usize) -> Self {
        Arrow {
            k,
            a: vec![0.0; k * k],
            b: vec![0.0; g * k],
            d: vec![0.0; g],
        }
    }

    fn add(&mut self, x: &[f64], group: Option<usize>, w: f64) {
        let k = self.k;
        for (r, &xr) in x.iter().enumerate() {
            let wx = w * xr;
            if wx != 0.0 {
                for (a, xc) in self.a[r * k..=r * k + r].iter_mut().zip(x) {
                    *a += wx * xc;
                }
            }
        }
        if let Some(g) = group {
            for (bj, xj) in self.b[g * k..(g + 1) * k].iter_mut().zip(x) {
                *bj += w * xj;
            }
            self.d[g] += w;
        }
    }

    fn mirror(&mut self) {
        let k = self.k;
        for r in 0..k {
            for c in r + 1..k {
                self.a[r * k + c] = self.a[c * k + r];
            }
        }
    }

    /// Cholesky factor of the Schur complement `a - sum b b' / d`. On
    /// failure returns the offending column (groups come after the dense
    /// block).
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
    fn factor(&self, rel_tol: f64) -> Result<Cholesky, usize> {
        let k = self.k;
        if let Some(g) = self.d.iter().position(|&d| !(d > 0.0)) {
            return Err(k + g);
        }
        let mut s = self.a.clone();
        for (g, &d) in self.d.iter().enumerate() {
            let bg = &self.b[g * k..(g + 1) * k];
            for r in 0..k {
                for c in 0..k {
                    s[r * k + c] -= bg[r] * bg[c] / d;
                }
            }
        }
        let mut l = vec![0.0; k * k];
        for j in 0..k {
            let mut pivot = s[j * k + j];
            for m in 0..j {
                pivot -= l[j * k + m] * l[j * k + m];
            }
            let scale = self.a[j * k + j];
            if !(scale > 0.0) || !(pivot > rel_tol * scale) {
                return Err(j);
            }
            let ljj = pivot.sqrt();
            l[j * k + j] = ljj;
            for r in j + 1..k {
                let mut v = s[r * k + j];
                for m in 0..j {
                    v -= l[r * k + m] * l[j * k + m];
                }
                l[r * k + j] = v / ljj;
            }
        }
        Ok(Cholesky { k, l })
    }

    /// Solves `I x = rhs` given the factor of the Schur complement.
    fn solve(&self, chol: &Cholesky, rhs: &[f64]) -> Vec<f64> {
        let k = self.k;
        let (rd, rg) = rhs.split_at(k);
        let mut reduced = rd.to_vec();
        for (g, (&d, &r)) in self.d.iter().zip(rg).enumerate() {
            for (j, v) in reduced.iter_mut().enumerate() {
                *v -= self.b[g * k + j] * r / d;
            }
        }
        let xd = chol.solve(&reduced);
        let mut out = xd.clone();
        for (g, (&d, &r)) in self.d.iter().zip(rg).enumerate() {
            let bx: f64 = self.b[g * k..(g + 1) * k].iter().zip(&xd).map(|(b, x)| b * x).sum();
            out.push((r - bx) / d);
        }
        out
    }

    /// Diagonal of the inverse.
    fn inverse_diagonal(&self, chol: &Cholesky) -> Vec<f64> {
        let k = self.k;
        let mut out = Vec::with_capacity(k + self.d.len());
        let mut s_inv = vec![0.0; k * k];
        for j in 0..k {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            let col = chol.solve(&e);
            for r in 0..k {
                s_inv[r * k + j] = col[r];
            }
            out.push(col[j]);
        }
        for (g, &d) in self.d.iter().enumerate() {
            let bg = &self.b[g * k..(g + 1) * k];
            let mut quad = 0.0;
            for r in 0..k {
                for c in 0..k {
                    quad += bg[r] * s_inv[r * k + c] * bg[c];
                }
            }
            out.push(1.0 / d + quad / (d * d));
        }
        out
    }
}

struct Cholesky {
    k: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut y = rhs.to_vec();
        for r in 0..k {
            for m in 0..r {
                y[r] -= self.l[r * k + m] * y[m];
            }
            y[r] /= self.l[r * k + r];
        }
        for r in (0..k).rev() {
            for m in r + 1..k {
                y[r] -= self.l[m * k + r] * y[m];
            }
            y[r] /= self.l[r * k + r];
        }
        y
    }
}

struct Evaluation {
    ll: f64,
    grad: Vec<f64>,
    info: Arrow,
    clamped: usize,
}

fn evaluate(design: &ProbitDesign, beta: &[f64], derivatives: bool) -> Evaluation {
    let k = design.k;
    let mut ll = 0.0;
    let mut grad = vec![0.0; if derivatives { design.n_columns() } else { 0 }];
    let mut info = Arrow::zeros(k, if derivatives { design.n_groups } else { 0 });
    let mut clamped = 0;
    for i in 0..design.n {
        let eta = design.eta(beta, i);
        let q = if design.y[i] { 1.0 } else { -1.0 };
        if eta.abs() > ETA_CLAMP {
            clamped += 1;
            ll += log_norm_cdf(q * eta.clamp(-ETA_CLAMP, ETA_CLAMP));
            continue;
        }
        let z = q * eta;
        ll += log_norm_cdf(z);
        if derivatives {
            let lambda = inverse_mills(z);
            let x = design.row(i);
            let gi = q * lambda;
            for (gj, xj) in grad.iter_mut().zip(x) {
                *gj += gi * xj;
            }
            let group = design.group[i];
            if let Some(g) = group {
                grad[k + g] += gi;
            }
            info.add(x, group, lambda * (lambda + z));
        }
    }
    info.mirror();
    Evaluation {
        ll,
        grad,
        info,
        clamped,
    }
}

/// Log-likelihood of a design at `beta` with the linear predictor clamped to
/// `[-30, 30]`.
pub fn design_log_likelihood(design: &ProbitDesign, beta: &[f64]) -> Result<f64, PredictError> {
    check_width(design, beta)?;
    Ok(evaluate(design, beta, false).ll)
}

/// Analytic gradient of the log-likelihood.
pub fn score(design: &ProbitDesign, beta: &[f64]) -> Result<Vec<f64>, PredictError> {
    check_width(design, beta)?;
    Ok(evaluate(design, beta, true).grad)
}

fn check_width(design: &ProbitDesign, beta: &[f64]) -> Result<(), PredictError> {
    if beta.len() != design.n_columns() {
        return Err(PredictError::WidthMismatch {
            expected: design.n_columns(),
            found: beta.len(),
        });
    }
    Ok(())
}

fn check_rank(design: &ProbitDesign) -> Result<(), PredictError> {
    let mut gram = Arrow::zeros(design.k, design.n_groups);
    for i in 0..design.n {
        gram.add(design.row(i), design.group[i], 1.0);
    }
    gram.mirror();
    gram.factor(RANK_TOL).map(|_| ()).map_err(|j| PredictError::RankDeficient {
        column: design.names[j].clone(),
    })
}

/// Maximum-likelihood probit fit by Newton-Raphson with step halving,
/// falling back to gradient ascent where the information is not positive
/// definite.
pub fn fit_design(design: &ProbitDesign, opts: &FitOptions) -> Result<RegressionFit, PredictError> {
    let p = design.n_columns();
    if design.n <= p {
        return Err(PredictError::TooFewObservations {
            n_obs: design.n,
            n_columns: p,
        });
    }
    check_rank(design)?;

    let mut beta = vec![0.0; p];
    let mut current = evaluate(design, &beta, true);
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let gmax = current.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < opts.grad_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        let (direction, newton) = match current.info.factor(0.0) {
            Ok(chol) => (current.info.solve(&chol, &current.grad), true),
            Err(_) => (current.grad.clone(), false),
        };
        iterations += 1;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(&direction).map(|(b, s)| b + t * s).collect();
            let ll = evaluate(design, &cand, false).ll;
            if ll >= current.ll {
                accepted = Some((cand, ll));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, ll)) = accepted else {
            // no ascent left at machine precision
            converged = newton;
            break;
        };
        let rel = (ll - current.ll).abs() / current.ll.abs().max(f64::MIN_POSITIVE);
        beta = cand;
        current = evaluate(design, &beta, true);
        if newton && rel < opts.rel_ll_tol {
            converged = true;
            break;
        }
    }

    let std_errors = match current.info.factor(0.0) {
        Ok(chol) => current
            .info
            .inverse_diagonal(&chol)
            .into_iter()
            .map(f64::sqrt)
            .collect(),
        Err(_) => vec![f64::NAN; p],
    };
    let separation = current.clamped > 0;
    if separation {
        log::warn!(
            "{} of {} rows have |eta| > {ETA_CLAMP} at the optimum (quasi-separation)",
            current.clamped,
            design.n
        );
    }
    Ok(RegressionFit {
        coefficient_names: design.names.clone(),
        coefficients: beta,
        std_errors,
        log_likelihood: current.ll,
        n_obs: design.n,
        converged,
        iterations,
        separation,
    })
}

/// Fits the response model with default options.
pub fn fit_probit(rows: &[DesignRow]) -> Result<RegressionFit, PredictError> {
    fit_design(&ProbitDesign::from_rows(rows)?, &FitOptions::default())
}

/// Log-likelihood of `rows` under a fitted coefficient vector.
pub fn log_likelihood(fit: &RegressionFit, rows: &[DesignRow]) -> Result<f64, PredictError> {
    design_log_likelihood(&ProbitDesign::from_rows(rows)?, &fit.coefficients)
}
