//! Regression plus Gaussian-process emulator.
//!
//! `g(q) = h(q)ᵀβ + u(q)` with `h` the monomials of total degree `≤ p` in the
//! standardized inputs and `u` a zero-mean process with covariance
//! `σ² exp(−Σ (q_i − q'_i)² / δ_i²)`. `β` comes from least squares; `σ²` is
//! profiled out of the likelihood of the residuals and the correlation
//! lengths maximize the concentrated likelihood.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::ParameterBounds;
use crate::error::{IdentError, Result};
use crate::lbfgsb::{minimize, LbfgsbOptions};

#[derive(Debug, Clone)]
pub struct EmulatorConfig {
    pub degree: usize,
    pub restarts: usize,
    /// Box for the correlation lengths in standardized units.
    pub delta_min: f64,
    pub delta_max: f64,
    /// Initial diagonal jitter; raised tenfold up to `max_nugget` when the
    /// correlation matrix is not numerically positive definite.
    pub nugget: f64,
    pub max_nugget: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EmulatorConfig {
    fn default() -> Self {
        Self {
            degree: 1,
            restarts: 5,
            delta_min: 0.01,
            delta_max: 10.0,
            nugget: 1e-10,
            max_nugget: 1e-6,
            max_iter: 100,
            seed: 0,
        }
    }
}

/// A conditioned emulator ready for prediction.
#[derive(Debug, Clone)]
pub struct EmulatorModel {
    pub degree: usize,
    pub exponents: Vec<Vec<u32>>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub delta: Vec<f64>,
    pub nugget: f64,
    pub bounds: ParameterBounds,
    /// Design points in standardized coordinates.
    pub x_unit: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Concentrated negative log-likelihood at the fitted hyperparameters.
    pub nll: f64,
    pub warnings: Vec<String>,
    alpha: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    rinv_diag: Vec<f64>,
}

/// Leave-one-out residuals and variances of the conditioned emulator.
#[derive(Debug, Clone)]
pub struct LooResult {
    pub residuals: Vec<f64>,
    pub variances: Vec<f64>,
    pub standardized: Vec<f64>,
}

impl LooResult {
    pub fn fraction_within(&self, z: f64) -> f64 {
        let hit = self.standardized.iter().filter(|e| e.abs() <= z).count();
        hit as f64 / self.standardized.len() as f64
    }
}

/// Multi-indices of total degree `≤ p` in `k` variables, constant first.
pub fn monomial_exponents(k: usize, p: usize) -> Vec<Vec<u32>> {
    fn rec(k: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(k, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=p as u32 {
        let mut level = Vec::new();
        let mut all = Vec::new();
        rec(k, total, &mut Vec::new(), &mut all);
        level.extend(all.into_iter().filter(|e| e.iter().sum::<u32>() == total));
        out.extend(level);
    }
    out
}

fn basis_row(u: &[f64], exps: &[Vec<u32>]) -> Vec<f64> {
    exps.iter()
        .map(|e| {
            e.iter()
                .zip(u)
                .map(|(&p, &x)| if p == 0 { 1.0 } else { x.powi(p as i32) })
                .product()
        })
        .collect()
}

fn correlation(a: &[f64], b: &[f64], delta: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = (a[i] - b[i]) / delta[i];
        s += d * d;
    }
    (-s).exp()
}

fn correlation_matrix(x: &[Vec<f64>], delta: &[f64], nugget: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut r = DMatrix::zeros(n, n);
    for a in 0..n {
        r[(a, a)] = 1.0 + nugget;
        for b in 0..a {
            let v = correlation(&x[a], &x[b], delta);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    r
}

/// Least squares on the monomial basis, lowering the degree while the basis
/// matrix is rank deficient.
fn regress(
    x: &[Vec<f64>],
    y: &[f64],
    degree: usize,
    warnings: &mut Vec<String>,
) -> Result<(usize, Vec<Vec<u32>>, Vec<f64>)> {
    let n = x.len();
    let k = x[0].len();
    let mut p = degree;
    loop {
        let exps = monomial_exponents(k, p);
        let m = exps.len();
        let rows: Vec<f64> = x.iter().flat_map(|u| basis_row(u, &exps)).collect();
        let h = DMatrix::from_row_slice(n, m, &rows);
        let svd = h.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let tol = smax * 1e-10 * n.max(m) as f64;
        let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
        if rank == m {
            let beta = svd
                .solve(&DVector::from_column_slice(y), tol)
                .map_err(|e| IdentError::FitFailed(e.to_string()))?;
            return Ok((p, exps, beta.iter().copied().collect()));
        }
        if p == 0 {
            return Err(IdentError::FitFailed("degenerate regression basis".into()));
        }
        warnings.push(format!(
            "basis of degree {p} is rank deficient ({rank} of {m}); using degree {}",
            p - 1
        ));
        p -= 1;
    }
}

/// Squared coordinate differences for every pair, one matrix per dimension.
struct PairDistances {
    d: Vec<DMatrix<f64>>,
}

impl PairDistances {
    fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let k = x[0].len();
        let d = (0..k)
            .map(|i| DMatrix::from_fn(n, n, |a, b| (x[a][i] - x[b][i]).powi(2)))
            .collect();
        Self { d }
    }
}

/// Concentrated negative log-likelihood `n/2 · ln σ̂² + ½ ln|R|` and its
/// gradient in `θ = ln δ`.
fn nll_and_gradient(
    theta: &[f64],
    x: &[Vec<f64>],
    resid: &DVector<f64>,
    pd: &PairDistances,
    nugget: f64,
) -> Option<(f64, Vec<f64>)> {
    let n = x.len() as f64;
    let delta: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    let r = correlation_matrix(x, &delta, nugget);
    let chol = Cholesky::new(r.clone())?;
    let alpha = chol.solve(resid);
    let quad = resid.dot(&alpha);
    if !(quad > 0.0) {
        return None;
    }
    let sigma2 = quad / n;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let f = 0.5 * n * sigma2.ln() + 0.5 * log_det;
    if !f.is_finite() {
        return None;
    }
    let mut w = chol.inverse();
    w.ger(-1.0 / sigma2, &alpha, &alpha, 1.0);
    let grad = (0..theta.len())
        .map(|i| {
            let scale = 1.0 / (delta[i] * delta[i]);
            let mut s = 0.0;
            for b in 0..x.len() {
                for a in 0..x.len() {
                    if a != b {
                        let r0 = r[(a, b)];
                        s += w[(a, b)] * r0 * pd.d[i][(a, b)];
                    }
                }
            }
            s * scale
        })
        .collect();
    Some((f, grad))
}

impl EmulatorModel {
    /// Conditions an emulator on `(x, y)` for fixed correlation lengths, with
    /// `σ²` set to its profile-likelihood value.
    pub fn condition(
        x: &[Vec<f64>],
        y: &[f64],
        bounds: &ParameterBounds,
        degree: usize,
        delta: &[f64],
        nugget: f64,
    ) -> Result<Self> {
        validate_training(x, y, bounds, 1)?;
        let x_unit: Vec<Vec<f64>> = x.iter().map(|q| bounds.to_unit(q)).collect();
        let mut warnings = Vec::new();
        let (degree, exponents, beta) = regress(&x_unit, y, degree, &mut warnings)?;
        Self::assemble(x_unit, y, bounds, degree, exponents, beta, delta, nugget, warnings)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        x_unit: Vec<Vec<f64>>,
        y: &[f64],
        bounds: &ParameterBounds,
        degree: usize,
        exponents: Vec<Vec<u32>>,
        beta: Vec<f64>,
        delta: &[f64],
        nugget: f64,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let n = x_unit.len();
        let resid = residuals(&x_unit, y, &exponents, &beta);
        let r = correlation_matrix(&x_unit, delta, nugget);
        let chol = Cholesky::new(r).ok_or_else(|| {
            IdentError::FitFailed("correlation matrix is not positive definite".into())
        })?;
        let alpha = chol.solve(&resid);
        let floor = sigma2_floor(y);
        let sigma2 = (resid.dot(&alpha) / n as f64).max(floor);
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let nll = 0.5 * n as f64 * sigma2.ln() + 0.5 * log_det;
        let rinv_diag = chol.inverse().diagonal().iter().copied().collect();
        Ok(Self {
            degree,
            exponents,
            beta,
            sigma2,
            delta: delta.to_vec(),
            nugget,
            bounds: bounds.clone(),
            x_unit,
            y: y.to_vec(),
            nll,
            warnings,
            alpha,
            chol,
            rinv_diag,
        })
    }

    /// Regression mean at standardized coordinates.
    fn trend(&self, u: &[f64]) -> f64 {
        basis_row(u, &self.exponents)
            .iter()
            .zip(&self.beta)
            .map(|(h, b)| h * b)
            .sum()
    }

    /// Posterior mean and variance at `q` (original units). The nugget acts
    /// as a white-noise term, so it contributes only where `q` coincides with
    /// a design point.
    pub fn predict(&self, q: &[f64]) -> (f64, f64) {
        let u = self.bounds.to_unit(q);
        let r = DVector::from_iterator(
            self.x_unit.len(),
            self.x_unit.iter().map(|x| {
                let c = correlation(&u, x, &self.delta);
                if *x == u {
                    c + self.nugget
                } else {
                    c
                }
            }),
        );
        let mean = self.trend(&u) + r.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&r)
            .expect("Cholesky factor has a positive diagonal");
        let var = self.sigma2 * (1.0 - v.norm_squared()).max(0.0);
        (mean, var)
    }

    pub fn predict_many(&self, qs: &[Vec<f64>]) -> Vec<(f64, f64)> {
        qs.par_iter().map(|q| self.predict(q)).collect()
    }

    /// Closed-form leave-one-out: residual `[R⁻¹e]_i / [R⁻¹]_ii` and variance
    /// `σ² / [R⁻¹]_ii`, with the hyperparameters and `β` held fixed.
    pub fn loo(&self) -> LooResult {
        let residuals: Vec<f64> = self
            .alpha
            .iter()
            .zip(&self.rinv_diag)
            .map(|(a, d)| a / d)
            .collect();
        let variances: Vec<f64> = self.rinv_diag.iter().map(|d| self.sigma2 / d).collect();
        let standardized = residuals
            .iter()
            .zip(&variances)
            .map(|(e, v)| e / v.sqrt())
            .collect();
        LooResult {
            residuals,
            variances,
            standardized,
        }
    }
}

fn residuals(x_unit: &[Vec<f64>], y: &[f64], exps: &[Vec<u32>], beta: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        y.len(),
        x_unit.iter().zip(y).map(|(u, &yi)| {
            yi - basis_row(u, exps)
                .iter()
                .zip(beta)
                .map(|(h, b)| h * b)
                .sum::<f64>()
        }),
    )
}

/// Lower bound on `σ²`, relative to the output magnitude.
fn sigma2_floor(y: &[f64]) -> f64 {
    let ms = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    (1e-24 * ms).max(f64::MIN_POSITIVE)
}

fn validate_training(
    x: &[Vec<f64>],
    y: &[f64],
    bounds: &ParameterBounds,
    min_points: usize,
) -> Result<()> {
    bounds.validate()?;
    if x.len() != y.len() || x.len() < min_points {
        return Err(IdentError::InvalidInput(format!(
            "need at least {min_points} design points with one output each, got {} points and {} outputs",
            x.len(),
            y.len()
        )));
    }
    if x.iter().any(|q| q.len() != bounds.dim() || q.iter().any(|v| !v.is_finite())) {
        return Err(IdentError::InvalidInput(
            "design points must be finite and match the bounds dimension".into(),
        ));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(IdentError::InvalidInput(format!("output {i} is not finite")));
    }
    Ok(())
}

/// Fits `β` by least squares, then `δ` by multi-start bounded L-BFGS on the
/// concentrated likelihood.
pub fn fit_emulator(
    x: &[Vec<f64>],
    y: &[f64],
    bounds: &ParameterBounds,
    cfg: &EmulatorConfig,
) -> Result<EmulatorModel> {
    validate_training(x, y, bounds, 2)?;
    let k = bounds.dim();
    let x_unit: Vec<Vec<f64>> = x.iter().map(|q| bounds.to_unit(q)).collect();
    let mut warnings = Vec::new();
    let (degree, exponents, beta) = regress(&x_unit, y, cfg.degree, &mut warnings)?;
    let resid = residuals(&x_unit, y, &exponents, &beta);

    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if resid.amax() <= 1e-9 * scale {
        let delta = vec![0.5_f64.clamp(cfg.delta_min, cfg.delta_max); k];
        return EmulatorModel::assemble(
            x_unit, y, bounds, degree, exponents, beta, &delta, cfg.nugget, warnings,
        );
    }

    let lo = vec![cfg.delta_min.ln(); k];
    let hi = vec![cfg.delta_max.ln(); k];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![vec![0.5_f64.ln().clamp(lo[0], hi[0]); k]];
    while starts.len() < cfg.restarts.max(1) {
        starts.push((0..k).map(|i| rng.random_range(lo[i]..=hi[i])).collect());
    }
    let pd = PairDistances::new(&x_unit);
    let opts = LbfgsbOptions {
        max_iter: cfg.max_iter,
        pg_tol: 1e-5,
        f_rel_tol: 1e-10,
        ..Default::default()
    };

    let mut nugget = cfg.nugget;
    loop {
        let results: Vec<_> = starts
            .par_iter()
            .map(|s| {
                minimize(
                    |t| nll_and_gradient(t, &x_unit, &resid, &pd, nugget),
                    s,
                    &lo,
                    &hi,
                    opts,
                )
            })
            .collect();
        let best = results
            .into_iter()
            .flatten()
            .filter(|m| m.f.is_finite())
            .reduce(|a, b| if b.f < a.f { b } else { a });
        if let Some(m) = best {
            if nugget > cfg.nugget {
                warnings.push(format!("nugget raised to {nugget:e}"));
            }
            let delta: Vec<f64> = m.x.iter().map(|t| t.exp()).collect();
            return EmulatorModel::assemble(
                x_unit, y, bounds, degree, exponents, beta, &delta, nugget, warnings,
            );
        }
        nugget *= 10.0;
        if nugget > cfg.max_nugget {
            return Err(IdentError::FitFailed(
                "likelihood could not be evaluated at any start".into(),
            ));
        }
    }
}
