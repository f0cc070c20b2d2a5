//! Support vector machines trained with a sequential minimal optimisation
//! solver for the dual
//!
//! ```text
//! min ½ αᵀQα + pᵀα   s.t.  yᵀα = Δ,  0 ≤ αᵢ ≤ Cᵢ
//! ```
//!
//! using second-order working-set selection. The ν variant additionally
//! keeps `Σ αᵢ` fixed within each sign class, which is what ν-SVR needs.
//! C-SVC, ν-SVR and one-class SVM are different choices of `Q`, `p`, `y`
//! and the starting point.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::labeling::Label;

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 256 << 20;

/// Kernel rows `K(xᵢ, ·)` with a bounded FIFO cache.
struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    kernel: Kernel,
    rows: Vec<Option<Arc<[f64]>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [Vec<f64>], kernel: Kernel) -> Self {
        let capacity = (CACHE_BYTES / (8 * x.len().max(1))).max(2);
        KernelRows {
            x,
            kernel,
            rows: vec![None; x.len()],
            order: VecDeque::new(),
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> Arc<[f64]> {
        if let Some(r) = &self.rows[i] {
            return r.clone();
        }
        let xi = &self.x[i];
        let r: Arc<[f64]> = self
            .x
            .iter()
            .map(|xj| self.kernel.eval_unchecked(xi, xj))
            .collect();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        self.order.push_back(i);
        self.rows[i] = Some(r.clone());
        r
    }
}

/// `Q_ij = sᵢ sⱼ K(xᵢ mod l, xⱼ mod l)` for a sign vector `s` of length
/// `l` or `2l`.
struct SignedQ<'a> {
    base: KernelRows<'a>,
    sign: Vec<f64>,
    diag: Vec<f64>,
}

impl<'a> SignedQ<'a> {
    fn new(x: &'a [Vec<f64>], kernel: Kernel, sign: Vec<f64>) -> Self {
        let l = x.len();
        let diag = (0..sign.len())
            .map(|i| kernel.eval_unchecked(&x[i % l], &x[i % l]))
            .collect();
        SignedQ {
            base: KernelRows::new(x, kernel),
            sign,
            diag,
        }
    }

    fn row(&mut self, i: usize) -> Vec<f64> {
        let l = self.base.x.len();
        let k = self.base.row(i % l);
        let si = self.sign[i];
        let mut out = Vec::with_capacity(self.sign.len());
        for signs in self.sign.chunks(l) {
            out.extend(signs.iter().zip(k.iter()).map(|(sj, kj)| si * sj * kj));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    /// Stopping tolerance on the maximal KKT violation.
    pub eps: f64,
    /// Iteration cap; 0 picks `max(100_000, 100·n)`.
    #[serde(default)]
    pub max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            eps: 1e-3,
            max_iter: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
}

struct Problem<'q, 'a> {
    q: &'q mut SignedQ<'a>,
    p: Vec<f64>,
    y: Vec<f64>,
    c: Vec<f64>,
    alpha: Vec<f64>,
    g: Vec<f64>,
    nu: bool,
}

impl Problem<'_, '_> {
    fn upper(&self, i: usize) -> bool {
        self.alpha[i] >= self.c[i]
    }

    fn lower(&self, i: usize) -> bool {
        self.alpha[i] <= 0.0
    }

    fn objective(&self) -> f64 {
        0.5 * self
            .alpha
            .iter()
            .zip(self.g.iter().zip(&self.p))
            .map(|(a, (g, p))| a * (g + p))
            .sum::<f64>()
    }

    fn select(&mut self, eps: f64) -> Option<(usize, usize, Vec<f64>)> {
        if self.nu {
            self.select_nu(eps)
        } else {
            self.select_standard(eps)
        }
    }

    fn select_standard(&mut self, eps: f64) -> Option<(usize, usize, Vec<f64>)> {
        let n = self.alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut imax = None;
        for t in 0..n {
            if self.y[t] > 0.0 {
                if !self.upper(t) && -self.g[t] >= gmax {
                    gmax = -self.g[t];
                    imax = Some(t);
                }
            } else if !self.lower(t) && self.g[t] >= gmax {
                gmax = self.g[t];
                imax = Some(t);
            }
        }
        let i = imax?;
        let qi = self.q.row(i);
        let qd = &self.q.diag;
        let mut best = None;
        let mut obj_min = f64::INFINITY;
        for j in 0..n {
            let (grad_diff, quad) = if self.y[j] > 0.0 {
                if self.lower(j) {
                    continue;
                }
                gmax2 = gmax2.max(self.g[j]);
                (gmax + self.g[j], qd[i] + qd[j] - 2.0 * self.y[i] * qi[j])
            } else {
                if self.upper(j) {
                    continue;
                }
                gmax2 = gmax2.max(-self.g[j]);
                (gmax - self.g[j], qd[i] + qd[j] + 2.0 * self.y[i] * qi[j])
            };
            if grad_diff > 0.0 {
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= obj_min {
                    obj_min = obj;
                    best = Some(j);
                }
            }
        }
        if gmax + gmax2 < eps {
            return None;
        }
        best.map(|j| (i, j, qi))
    }

    fn select_nu(&mut self, eps: f64) -> Option<(usize, usize, Vec<f64>)> {
        let n = self.alpha.len();
        let (mut gmaxp, mut gmaxp2, mut ip) = (f64::NEG_INFINITY, f64::NEG_INFINITY, None);
        let (mut gmaxn, mut gmaxn2, mut in_) = (f64::NEG_INFINITY, f64::NEG_INFINITY, None);
        for t in 0..n {
            if self.y[t] > 0.0 {
                if !self.upper(t) && -self.g[t] >= gmaxp {
                    gmaxp = -self.g[t];
                    ip = Some(t);
                }
            } else if !self.lower(t) && self.g[t] >= gmaxn {
                gmaxn = self.g[t];
                in_ = Some(t);
            }
        }
        let qip = ip.map(|i| self.q.row(i));
        let qin = in_.map(|i| self.q.row(i));
        let qd = &self.q.diag;
        let mut best = None;
        let mut obj_min = f64::INFINITY;
        for j in 0..n {
            let (grad_diff, quad) = if self.y[j] > 0.0 {
                if self.lower(j) {
                    continue;
                }
                gmaxp2 = gmaxp2.max(self.g[j]);
                let Some((i, q)) = ip.zip(qip.as_ref()) else { continue };
                (gmaxp + self.g[j], qd[i] + qd[j] - 2.0 * q[j])
            } else {
                if self.upper(j) {
                    continue;
                }
                gmaxn2 = gmaxn2.max(-self.g[j]);
                let Some((i, q)) = in_.zip(qin.as_ref()) else { continue };
                (gmaxn - self.g[j], qd[i] + qd[j] - 2.0 * q[j])
            };
            if grad_diff > 0.0 {
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= obj_min {
                    obj_min = obj;
                    best = Some(j);
                }
            }
        }
        if (gmaxp + gmaxp2).max(gmaxn + gmaxn2) < eps {
            return None;
        }
        let j = best?;
        if self.y[j] > 0.0 {
            Some((ip?, j, qip?))
        } else {
            Some((in_?, j, qin?))
        }
    }

    /// Analytic two-variable update with box clipping.
    fn update(&mut self, i: usize, j: usize, qi: Vec<f64>) {
        let qj = self.q.row(j);
        let qd = &self.q.diag;
        let (ci, cj) = (self.c[i], self.c[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let a = &mut self.alpha;
        if self.y[i] != self.y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.g[i] - self.g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > ci - cj {
                if a[i] > ci {
                    a[i] = ci;
                    a[j] = ci - diff;
                }
            } else if a[j] > cj {
                a[j] = cj;
                a[i] = cj + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.g[i] - self.g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > ci {
                if a[i] > ci {
                    a[i] = ci;
                    a[j] = sum - ci;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > cj {
                if a[j] > cj {
                    a[j] = cj;
                    a[i] = sum - cj;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for (k, g) in self.g.iter_mut().enumerate() {
            *g += qi[k] * di + qj[k] * dj;
        }
    }

    fn rho_standard(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut n_free, mut sum_free) = (0usize, 0.0);
        for i in 0..self.alpha.len() {
            let yg = self.y[i] * self.g[i];
            if self.upper(i) {
                if self.y[i] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.lower(i) {
                if self.y[i] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        }
    }

    fn rho_nu(&self) -> f64 {
        let mut acc = [(f64::INFINITY, f64::NEG_INFINITY, 0usize, 0.0f64); 2];
        for i in 0..self.alpha.len() {
            let s = &mut acc[usize::from(self.y[i] < 0.0)];
            if self.upper(i) {
                s.1 = s.1.max(self.g[i]);
            } else if self.lower(i) {
                s.0 = s.0.min(self.g[i]);
            } else {
                s.2 += 1;
                s.3 += self.g[i];
            }
        }
        let r = |(ub, lb, n, sum): (f64, f64, usize, f64)| {
            if n > 0 {
                sum / n as f64
            } else {
                (ub + lb) / 2.0
            }
        };
        (r(acc[0]) - r(acc[1])) / 2.0
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    q: &mut SignedQ<'_>,
    p: Vec<f64>,
    y: Vec<f64>,
    c: Vec<f64>,
    alpha: Vec<f64>,
    nu: bool,
    params: &SolverParams,
    trace: bool,
) -> Solution {
    let n = alpha.len();
    let mut g = p.clone();
    for i in 0..n {
        if alpha[i] != 0.0 {
            let qi = q.row(i);
            for (gk, qk) in g.iter_mut().zip(&qi) {
                *gk += alpha[i] * qk;
            }
        }
    }
    let mut prob = Problem {
        q,
        p,
        y,
        c,
        alpha,
        g,
        nu,
    };
    let max_iter = if params.max_iter == 0 {
        100_000.max(100 * n)
    } else {
        params.max_iter
    };
    let mut objective_trace = Vec::new();
    if trace {
        objective_trace.push(prob.objective());
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let Some((i, j, qi)) = prob.select(params.eps) else {
            converged = true;
            break;
        };
        prob.update(i, j, qi);
        iterations += 1;
        if trace {
            objective_trace.push(prob.objective());
        }
    }
    if !converged {
        log::warn!("SMO stopped at the iteration cap ({max_iter}) before reaching eps");
    }
    let rho = if nu { prob.rho_nu() } else { prob.rho_standard() };
    Solution {
        objective: prob.objective(),
        alpha: prob.alpha,
        rho,
        iterations,
        converged,
        objective_trace,
    }
}

/// Kernel expansion `f(x) = Σ coefᵢ K(svᵢ, x) − ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    fn from_solution(x: &[Vec<f64>], coef: Vec<f64>, kernel: Kernel, sol: &Solution) -> Self {
        let (support, coef) = x
            .iter()
            .zip(coef)
            .filter(|(_, c)| *c != 0.0)
            .map(|(xi, c)| (xi.clone(), c))
            .unzip();
        SvmModel {
            kernel,
            support,
            coef,
            rho: sol.rho,
            iterations: sol.iterations,
            converged: sol.converged,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvcParams {
    pub kernel: Kernel,
    pub c: f64,
    /// Scale C per class by inverse class frequency.
    pub class_weights: bool,
    #[serde(default)]
    pub solver: SolverParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuSvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub nu: f64,
    /// Regression outputs at or above this are anomalous.
    pub decision_cutoff: f64,
    #[serde(default)]
    pub solver: SolverParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcSvmParams {
    pub kernel: Kernel,
    pub nu: f64,
    #[serde(default)]
    pub solver: SolverParams,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("C must be > 0, got {c}")));
    }
    Ok(())
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Config(format!("nu must lie in (0, 1], got {nu}")));
    }
    Ok(())
}

fn sign(l: Label) -> f64 {
    if l.is_anomalous() {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn fit_svc_solution(
    x: &[Vec<f64>],
    y: &[Label],
    params: &SvcParams,
    trace: bool,
) -> Result<(SvmModel, Solution)> {
    check_c(params.c)?;
    params.kernel.validate()?;
    let n_pos = y.iter().filter(|l| l.is_anomalous()).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Domain("SVC needs rows of both classes".into()));
    }
    let ys: Vec<f64> = y.iter().map(|l| sign(*l)).collect();
    let (w_pos, w_neg) = if params.class_weights {
        let n = y.len() as f64;
        (n / (2.0 * n_pos as f64), n / (2.0 * n_neg as f64))
    } else {
        (1.0, 1.0)
    };
    let c: Vec<f64> = ys
        .iter()
        .map(|s| params.c * if *s > 0.0 { w_pos } else { w_neg })
        .collect();
    let mut q = SignedQ::new(x, params.kernel, ys.clone());
    let n = x.len();
    let sol = solve(
        &mut q,
        vec![-1.0; n],
        ys.clone(),
        c,
        vec![0.0; n],
        false,
        &params.solver,
        trace,
    );
    let coef: Vec<f64> = sol.alpha.iter().zip(&ys).map(|(a, s)| a * s).collect();
    Ok((SvmModel::from_solution(x, coef, params.kernel, &sol), sol))
}

pub fn fit_svc(x: &[Vec<f64>], y: &[Label], params: &SvcParams) -> Result<SvmModel> {
    fit_svc_solution(x, y, params, false).map(|(m, _)| m)
}

/// ν-SVR on targets 0 (non-anomalous) and 1 (anomalous).
pub fn fit_nu_svr(x: &[Vec<f64>], y: &[Label], params: &NuSvrParams) -> Result<SvmModel> {
    check_c(params.c)?;
    check_nu(params.nu)?;
    params.kernel.validate()?;
    if x.is_empty() {
        return Err(Error::Domain("nu-SVR needs at least one row".into()));
    }
    let l = x.len();
    let z: Vec<f64> = y.iter().map(|v| v.as_index() as f64).collect();
    let mut alpha = vec![0.0; 2 * l];
    let mut sum = params.c * params.nu * l as f64 / 2.0;
    for i in 0..l {
        let a = sum.min(params.c);
        alpha[i] = a;
        alpha[i + l] = a;
        sum -= a;
    }
    let p: Vec<f64> = z.iter().map(|v| -v).chain(z.iter().copied()).collect();
    let ys: Vec<f64> = std::iter::repeat_n(1.0, l).chain(std::iter::repeat_n(-1.0, l)).collect();
    let mut q = SignedQ::new(x, params.kernel, ys.clone());
    let sol = solve(
        &mut q,
        p,
        ys,
        vec![params.c; 2 * l],
        alpha,
        true,
        &params.solver,
        false,
    );
    let coef: Vec<f64> = (0..l).map(|i| sol.alpha[i] - sol.alpha[i + l]).collect();
    Ok(SvmModel::from_solution(x, coef, params.kernel, &sol))
}

/// One-class SVM on (presumed) normal rows; negative decision values are
/// outliers.
pub fn fit_one_class(x: &[Vec<f64>], params: &OcSvmParams) -> Result<SvmModel> {
    check_nu(params.nu)?;
    params.kernel.validate()?;
    if x.is_empty() {
        return Err(Error::Domain("one-class SVM needs at least one row".into()));
    }
    let l = x.len();
    let budget = params.nu * l as f64;
    let full = (budget.floor() as usize).min(l);
    let mut alpha = vec![0.0; l];
    for a in alpha.iter_mut().take(full) {
        *a = 1.0;
    }
    if full < l {
        alpha[full] = budget - full as f64;
    }
    let mut q = SignedQ::new(x, params.kernel, vec![1.0; l]);
    let sol = solve(
        &mut q,
        vec![0.0; l],
        vec![1.0; l],
        vec![1.0; l],
        alpha,
        false,
        &params.solver,
        false,
    );
    Ok(SvmModel::from_solution(x, sol.alpha.clone(), params.kernel, &sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(degree: u32) -> Kernel {
        Kernel::Polynomial {
            degree,
            coef0: 1.0,
            gamma: 0.5,
        }
    }

    #[test]
    fn two_point_toy() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let y = vec![Label::NonAnomalous, Label::Anomalous];
        let params = SvcParams {
            kernel: poly(1),
            c: 10.0,
            class_weights: false,
            solver: SolverParams::default(),
        };
        let (m, sol) = fit_svc_solution(&x, &y, &params, true).unwrap();
        assert!(sol.converged);
        assert!(m.decision(&x[0]) < 0.0);
        assert!(m.decision(&x[1]) > 0.0);
        // Hard-margin solution: both points on the margin, f = ±1.
        assert!((m.decision(&x[0]) + 1.0).abs() < 1e-6);
        assert!((m.decision(&x[1]) - 1.0).abs() < 1e-6);
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective rose: {w:?}");
        }
    }

    fn blobs() -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let t = i as f64 / 30.0;
            x.push(vec![0.1 + 0.2 * t, 0.2 + 0.1 * (7.0 * t).sin()]);
            y.push(Label::NonAnomalous);
            x.push(vec![0.8 + 0.15 * t, 0.7 + 0.1 * (5.0 * t).cos()]);
            y.push(Label::Anomalous);
        }
        (x, y)
    }

    #[test]
    fn objective_never_increases() {
        let (x, y) = blobs();
        let params = SvcParams {
            kernel: poly(3),
            c: 5.0,
            class_weights: true,
            solver: SolverParams::default(),
        };
        let (m, sol) = fit_svc_solution(&x, &y, &params, true).unwrap();
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.decision(xi) > 0.0, yi.is_anomalous());
        }
    }

    #[test]
    fn nu_svr_separates_toy() {
        let (x, y) = blobs();
        let m = fit_nu_svr(
            &x,
            &y,
            &NuSvrParams {
                kernel: poly(3),
                c: 1.0,
                nu: 0.5,
                decision_cutoff: 0.5,
                solver: SolverParams::default(),
            },
        )
        .unwrap();
        assert!(m.converged);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, yi)| (m.decision(xi) >= 0.5) == yi.is_anomalous())
            .count();
        assert_eq!(correct, x.len());
        // Coefficients of a ν-SVR sum to zero.
        assert!(m.coef.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn one_class_flags_far_points() {
        let (x, y) = blobs();
        let normal: Vec<Vec<f64>> = x
            .iter()
            .zip(&y)
            .filter(|(_, l)| !l.is_anomalous())
            .map(|(r, _)| r.clone())
            .collect();
        let m = fit_one_class(
            &normal,
            &OcSvmParams {
                kernel: Kernel::Rbf { gamma: 10.0 },
                nu: 0.1,
                solver: SolverParams::default(),
            },
        )
        .unwrap();
        assert!(m.decision(&[3.0, 3.0]) < 0.0);
        let inside = normal.iter().filter(|r| m.decision(r) >= 0.0).count();
        assert!(inside as f64 >= 0.8 * normal.len() as f64);
        // Dual constraint Σα = νl is preserved.
        assert!((m.coef.iter().sum::<f64>() - 0.1 * normal.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        let (x, y) = blobs();
        let mut p = SvcParams {
            kernel: poly(2),
            c: 0.0,
            class_weights: false,
            solver: SolverParams::default(),
        };
        assert!(matches!(fit_svc(&x, &y, &p), Err(Error::Config(_))));
        p.c = 1.0;
        assert!(fit_svc(&x, &vec![Label::Anomalous; x.len()], &p).is_err());
        let o = OcSvmParams {
            kernel: Kernel::Rbf { gamma: 1.0 },
            nu: 0.0,
            solver: SolverParams::default(),
        };
        assert!(fit_one_class(&x, &o).is_err());
    }
}
