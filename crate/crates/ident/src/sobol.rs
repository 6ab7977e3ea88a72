//! First-order Sobol indices with the Saltelli (k+2)-matrix scheme.
//!
//! Base points come from an Owen-scrambled Sobol sequence in `2k` dimensions:
//! the first `k` coordinates form matrix `A`, the last `k` form `B`, and
//! `AB_i` is `A` with column `i` taken from `B`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::ParameterBounds;
use crate::error::{IdentError, Result};
use crate::stats::{percentile, population_variance};

/// Largest sample index the scrambled sequence supports.
const MAX_INDEX: usize = 1 << 16;

/// The `A`, `B` and `AB_1..AB_k` matrices, stacked block by block:
/// rows `0..N` are `A`, `N..2N` are `B`, and block `2 + i` is `AB_i`.
#[derive(Debug, Clone)]
pub struct SaltelliDesign {
    pub k: usize,
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl SaltelliDesign {
    pub fn block(&self, b: usize) -> &[Vec<f64>] {
        &self.rows[b * self.n..(b + 1) * self.n]
    }
}

fn scramble_seed(seed: u64) -> u32 {
    (seed ^ (seed >> 32)) as u32
}

/// Rows `A_j` and `B_j` of the base sample at sequence position `index`.
pub fn base_pair(bounds: &ParameterBounds, index: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let k = bounds.dim();
    let s = scramble_seed(seed);
    let coord = |d: usize| sobol_burley::sample(index as u32, d as u32, s) as f64;
    let a: Vec<f64> = (0..k).map(coord).collect();
    let b: Vec<f64> = (k..2 * k).map(coord).collect();
    (bounds.from_unit(&a), bounds.from_unit(&b))
}

/// The `k + 2` rows `A_j, B_j, AB_1j, .., AB_kj` belonging to one base pair.
pub fn radial_rows(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(a.len() + 2);
    rows.push(a.to_vec());
    rows.push(b.to_vec());
    for i in 0..a.len() {
        let mut r = a.to_vec();
        r[i] = b[i];
        rows.push(r);
    }
    rows
}

fn check_dims(bounds: &ParameterBounds, n: usize) -> Result<()> {
    bounds.validate()?;
    if 2 * bounds.dim() > sobol_burley::NUM_DIMENSIONS as usize {
        return Err(IdentError::InvalidInput(format!(
            "at most {} parameters supported",
            sobol_burley::NUM_DIMENSIONS / 2
        )));
    }
    if n < 2 || n > MAX_INDEX / 2 {
        return Err(IdentError::InvalidInput(format!(
            "base sample count must be in 2..={}, got {n}",
            MAX_INDEX / 2
        )));
    }
    Ok(())
}

/// Builds the `N·(k+2)` evaluation matrix. Deterministic under `seed`.
pub fn saltelli_sample(bounds: &ParameterBounds, n: usize, seed: u64) -> Result<SaltelliDesign> {
    check_dims(bounds, n)?;
    let k = bounds.dim();
    let pairs: Vec<_> = (0..n).map(|j| base_pair(bounds, j, seed)).collect();
    let mut rows = Vec::with_capacity(n * (k + 2));
    rows.extend(pairs.iter().map(|(a, _)| a.clone()));
    rows.extend(pairs.iter().map(|(_, b)| b.clone()));
    for i in 0..k {
        rows.extend(pairs.iter().map(|(a, b)| {
            let mut r = a.clone();
            r[i] = b[i];
            r
        }));
    }
    Ok(SaltelliDesign { k, n, rows })
}

/// Point estimates with 95% percentile-bootstrap intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub s: Vec<f64>,
    /// Half-width of the bootstrap interval.
    pub ci: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 200,
            seed: 0,
        }
    }
}

fn estimate(fa: &[f64], fb: &[f64], fab: &[Vec<f64>], idx: &[usize]) -> Option<Vec<f64>> {
    let m = idx.len() as f64;
    let all: Vec<f64> = idx.iter().flat_map(|&j| [fa[j], fb[j]]).collect();
    let var = population_variance(&all);
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    if !(var > 1e-28 * mean * mean) || var == 0.0 {
        return None;
    }
    Some(
        fab.iter()
            .map(|f| idx.iter().map(|&j| fb[j] * (f[j] - fa[j])).sum::<f64>() / m / var)
            .collect(),
    )
}

/// `S_i = mean(f_B · (f_ABi − f_A)) / Var(f_A ∪ f_B)` from outputs laid out as
/// in [`SaltelliDesign`].
pub fn first_order_indices(
    y: &[f64],
    k: usize,
    n: usize,
    boot: BootstrapConfig,
) -> Result<IndexEstimate> {
    if y.len() != n * (k + 2) {
        return Err(IdentError::InvalidInput(format!(
            "expected {} outputs, got {}",
            n * (k + 2),
            y.len()
        )));
    }
    if let Some(p) = y.iter().position(|v| !v.is_finite()) {
        return Err(IdentError::InvalidInput(format!("output {p} is not finite")));
    }
    let fa = &y[..n];
    let fb = &y[n..2 * n];
    let fab: Vec<Vec<f64>> = (0..k)
        .map(|i| y[(2 + i) * n..(3 + i) * n].to_vec())
        .collect();
    estimate_with_bootstrap(fa, fb, &fab, boot)
}

fn estimate_with_bootstrap(
    fa: &[f64],
    fb: &[f64],
    fab: &[Vec<f64>],
    boot: BootstrapConfig,
) -> Result<IndexEstimate> {
    let n = fa.len();
    let k = fab.len();
    let all: Vec<usize> = (0..n).collect();
    let s = estimate(fa, fb, fab, &all).ok_or(IdentError::ConstantOutput)?;

    let mut rng = ChaCha8Rng::seed_from_u64(boot.seed);
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(boot.resamples); k];
    let mut idx = vec![0usize; n];
    for _ in 0..boot.resamples {
        for j in idx.iter_mut() {
            *j = rng.random_range(0..n);
        }
        if let Some(si) = estimate(fa, fb, fab, &idx) {
            for (d, v) in draws.iter_mut().zip(si) {
                d.push(v);
            }
        }
    }
    let mut ci_lo = Vec::with_capacity(k);
    let mut ci_hi = Vec::with_capacity(k);
    for (i, d) in draws.iter_mut().enumerate() {
        if d.is_empty() {
            ci_lo.push(s[i]);
            ci_hi.push(s[i]);
            continue;
        }
        d.sort_by(f64::total_cmp);
        ci_lo.push(percentile(d, 2.5));
        ci_hi.push(percentile(d, 97.5));
    }
    let ci = ci_lo
        .iter()
        .zip(&ci_hi)
        .map(|(lo, hi)| 0.5 * (hi - lo))
        .collect();
    Ok(IndexEstimate { s, ci, ci_lo, ci_hi })
}

#[derive(Debug, Clone, Copy)]
pub struct SobolOptions {
    pub n: usize,
    pub seed: u64,
    pub bootstrap: usize,
}

/// Indices for every output of a vector-valued model, plus bookkeeping on
/// failed base rows.
#[derive(Debug, Clone)]
pub struct SobolRun {
    pub estimates: Vec<IndexEstimate>,
    /// Base rows actually used in the estimate.
    pub n_used: usize,
    pub resampled: usize,
    pub dropped: usize,
    pub evaluations: usize,
}

/// Evaluates `model` on all rows of one base pair; `None` when any row fails.
fn eval_pair<F>(model: &F, a: &[f64], b: &[f64], m: usize) -> (Option<Vec<Vec<f64>>>, usize)
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let rows = radial_rows(a, b);
    let mut out = Vec::with_capacity(rows.len());
    for (used, r) in rows.iter().enumerate() {
        match model(r) {
            Ok(v) if v.len() == m && v.iter().all(|x| x.is_finite()) => out.push(v),
            _ => return (None, used + 1),
        }
    }
    (Some(out), rows.len())
}

/// Runs the Saltelli scheme on a model with `m` outputs.
///
/// A base row with any failing evaluation is replaced once by the next unused
/// point of the sequence. If the replacement fails as well the row is
/// dropped, and the run aborts when more than 1% of rows are dropped.
pub fn analyze<F>(
    bounds: &ParameterBounds,
    opts: SobolOptions,
    m: usize,
    model: F,
) -> Result<SobolRun>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    check_dims(bounds, opts.n)?;
    let k = bounds.dim();
    let first: Vec<_> = (0..opts.n)
        .into_par_iter()
        .map(|j| {
            let (a, b) = base_pair(bounds, j, opts.seed);
            eval_pair(&model, &a, &b, m)
        })
        .collect();

    let mut evaluations: usize = first.iter().map(|r| r.1).sum();
    let failed: Vec<usize> = (0..opts.n).filter(|&j| first[j].0.is_none()).collect();
    let retries: Vec<_> = failed
        .par_iter()
        .enumerate()
        .map(|(r, _)| {
            let (a, b) = base_pair(bounds, opts.n + r, opts.seed);
            eval_pair(&model, &a, &b, m)
        })
        .collect();
    evaluations += retries.iter().map(|r| r.1).sum::<usize>();

    let mut retry_iter = retries.into_iter();
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(opts.n);
    let mut dropped = 0;
    for (res, _) in first {
        match res {
            Some(r) => rows.push(r),
            None => match retry_iter.next().and_then(|r| r.0) {
                Some(r) => rows.push(r),
                None => dropped += 1,
            },
        }
    }
    if dropped * 100 > opts.n {
        return Err(IdentError::TooManyFailures {
            failed: dropped,
            total: opts.n,
        });
    }

    let estimates = (0..m)
        .map(|out| {
            let col = |b: usize| -> Vec<f64> { rows.iter().map(|r| r[b][out]).collect() };
            let fab: Vec<Vec<f64>> = (0..k).map(|i| col(2 + i)).collect();
            estimate_with_bootstrap(
                &col(0),
                &col(1),
                &fab,
                BootstrapConfig {
                    resamples: opts.bootstrap,
                    seed: opts.seed.wrapping_add(out as u64),
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SobolRun {
        estimates,
        n_used: rows.len(),
        resampled: failed.len(),
        dropped,
        evaluations,
    })
}

/// Indices at one time slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub day: u32,
    pub names: Vec<String>,
    pub s: Vec<f64>,
    pub ci: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub n_samples: usize,
}

impl SensitivityResult {
    pub fn from_estimate(day: u32, names: &[String], est: IndexEstimate, n: usize) -> Self {
        Self {
            day,
            names: names.to_vec(),
            s: est.s,
            ci: est.ci,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            n_samples: n,
        }
    }

    pub fn index_of(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.s[i])
    }

    /// Name of the parameter with the largest point estimate.
    pub fn most_sensitive(&self) -> &str {
        let i = (0..self.s.len())
            .max_by(|&a, &b| self.s[a].total_cmp(&self.s[b]))
            .unwrap_or(0);
        &self.names[i]
    }
}

/// CSV with header `day,parameter,S,ci_lo,ci_hi`.
pub fn write_results_csv<W: Write>(results: &[SensitivityResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "parameter", "S", "ci_lo", "ci_hi"])?;
    for r in results {
        for i in 0..r.names.len() {
            w.write_record([
                r.day.to_string(),
                r.names[i].clone(),
                format!("{:?}", r.s[i]),
                format!("{:?}", r.ci_lo[i]),
                format!("{:?}", r.ci_hi[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
