//! Grid-based global minimization by alternating tensor-train cross sweeps.
//!
//! The objective is sampled on a uniform tensor grid with `n` nodes per
//! direction. Each dimension `k` keeps a set of left multi-indices (over
//! dimensions `< k`) and right multi-indices (over dimensions `> k`). A
//! dimension update evaluates the candidate set `left × {0..n} × right`,
//! maps the values through [`mapping_h`], and keeps the rows (forward pass) or
//! columns (backward pass) selected by a greedy cross of the resulting
//! unfolding as the next index set.

use std::collections::HashMap;
use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::{select_cols, select_rows};
use crate::error::{Result, TtError};
use crate::mapping::{adaptive_scale, mapping_h, update_shift};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TTConfig {
    pub b_min: Vec<f64>,
    pub b_max: Vec<f64>,
    /// Nodes per direction, endpoints included.
    pub n: usize,
    pub r_max: usize,
    /// Number of passes; odd passes run forward, even passes backward.
    pub n_tt: usize,
    /// Initial shift of the mapping; the running minimum replaces it.
    /// Absent means `+∞`.
    #[serde(default)]
    pub alpha0: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Stop after this many passes without improvement of the best value.
    #[serde(default)]
    pub stagnation: Option<usize>,
    /// Hard cap on objective evaluations.
    #[serde(default)]
    pub max_evals: Option<usize>,
}

impl TTConfig {
    pub fn new(b_min: Vec<f64>, b_max: Vec<f64>, n: usize, r_max: usize, n_tt: usize) -> Self {
        Self {
            b_min,
            b_max,
            n,
            r_max,
            n_tt,
            alpha0: None,
            seed: 0,
            stagnation: None,
            max_evals: None,
        }
    }

    pub fn d(&self) -> usize {
        self.b_min.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TtError::InvalidConfig(m));
        if self.b_min.is_empty() || self.b_min.len() != self.b_max.len() {
            return bad(format!(
                "bounds need equal, non-zero lengths (got {} and {})",
                self.b_min.len(),
                self.b_max.len()
            ));
        }
        for (i, (lo, hi)) in self.b_min.iter().zip(&self.b_max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("dimension {i}: need finite b_min < b_max, got [{lo}, {hi}]"));
            }
        }
        if self.n < 2 {
            return bad(format!("n must be ≥ 2, got {}", self.n));
        }
        if self.r_max < 1 {
            return bad("r_max must be ≥ 1".into());
        }
        if self.n_tt < 1 {
            return bad("n_tt must be ≥ 1".into());
        }
        Ok(())
    }

    /// Grid node `i` of dimension `k`.
    pub fn node(&self, k: usize, i: usize) -> f64 {
        let (lo, hi) = (self.b_min[k], self.b_max[k]);
        if i + 1 == self.n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(k, &i)| self.node(k, i)).collect()
    }

    /// Grid spacing per dimension.
    pub fn cell_size(&self) -> Vec<f64> {
        self.b_min
            .iter()
            .zip(&self.b_max)
            .map(|(lo, hi)| (hi - lo) / (self.n - 1) as f64)
            .collect()
    }

    /// Upper bound on objective evaluations: `n_tt · d · n · r_max²`.
    pub fn budget(&self) -> usize {
        self.n_tt * self.d() * self.n * self.r_max * self.r_max
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One row per dimension update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iteration: usize,
    pub dimension: usize,
    /// Cumulative distinct objective evaluations.
    pub evaluations: usize,
    pub alpha: f64,
    pub j_best: f64,
}

#[derive(Debug, Clone)]
pub struct TTState {
    pub left: Vec<Vec<Vec<usize>>>,
    pub right: Vec<Vec<Vec<usize>>>,
    pub q_best: Vec<f64>,
    pub idx_best: Vec<usize>,
    pub j_best: f64,
    pub alpha: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct TTResult {
    pub q_best: Vec<f64>,
    pub idx_best: Vec<usize>,
    pub j_best: f64,
    pub evaluations: usize,
    pub failures: Vec<(Vec<f64>, String)>,
    pub log: Vec<LogEntry>,
    pub cell_size: Vec<f64>,
    pub passes: usize,
}

/// Header `iteration,dimension,evaluations,alpha,J_best`.
pub fn write_log_csv<W: Write>(log: &[LogEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "dimension", "evaluations", "alpha", "J_best"])?;
    for e in log {
        w.write_record([
            e.iteration.to_string(),
            e.dimension.to_string(),
            e.evaluations.to_string(),
            format!("{:?}", e.alpha),
            format!("{:?}", e.j_best),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn rank_cap(n: usize, dims: usize, r_max: usize) -> usize {
    let mut size = 1usize;
    for _ in 0..dims {
        size = size.saturating_mul(n);
        if size >= r_max {
            return r_max;
        }
    }
    size.min(r_max)
}

fn random_suffixes(n: usize, len: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(count);
    while out.len() < count {
        let s: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

struct Evaluator<'a, F> {
    cfg: &'a TTConfig,
    f: F,
    cache: HashMap<Vec<usize>, f64>,
    failures: Vec<(Vec<f64>, String)>,
}

impl<F, E> Evaluator<'_, F>
where
    F: Fn(&[f64]) -> std::result::Result<f64, E> + Sync,
    E: Display + Send,
{
    /// Values for `idx`, evaluating the uncached ones concurrently. Failures
    /// come back as `+∞`.
    fn batch(&mut self, idx: &[Vec<usize>], budget_left: usize) -> Result<Vec<f64>> {
        let mut fresh: Vec<Vec<usize>> = Vec::new();
        for i in idx {
            if !self.cache.contains_key(i) && !fresh.contains(i) {
                fresh.push(i.clone());
            }
        }
        if fresh.len() > budget_left {
            return Err(TtError::BudgetExhausted);
        }
        let cfg = self.cfg;
        let f = &self.f;
        let values: Vec<_> = fresh
            .par_iter()
            .map(|i| {
                let q = cfg.point(i);
                match f(&q) {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(v) => Err((q, format!("non-finite value {v}"))),
                    Err(e) => Err((q, e.to_string())),
                }
            })
            .collect();
        for (i, v) in fresh.into_iter().zip(values) {
            let v = match v {
                Ok(v) => v,
                Err(fail) => {
                    self.failures.push(fail);
                    f64::INFINITY
                }
            };
            self.cache.insert(i, v);
        }
        Ok(idx.iter().map(|i| self.cache[i]).collect())
    }
}

/// Minimizes `objective` over the grid of `cfg`.
pub fn tt_optimize<F, E>(objective: F, cfg: &TTConfig) -> Result<TTResult>
where
    F: Fn(&[f64]) -> std::result::Result<f64, E> + Sync,
    E: Display + Send,
{
    cfg.validate()?;
    let d = cfg.d();
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut state = TTState {
        left: (0..=d).map(|_| vec![Vec::new()]).collect(),
        right: (0..=d).map(|_| vec![Vec::new()]).collect(),
        q_best: Vec::new(),
        idx_best: Vec::new(),
        j_best: f64::INFINITY,
        alpha: cfg.alpha0.unwrap_or(f64::INFINITY),
        evaluations: 0,
    };
    for k in 1..d {
        let r = rank_cap(n, d - k, cfg.r_max);
        state.right[k] = random_suffixes(n, d - k, r, &mut rng);
    }

    let cap = cfg.max_evals.unwrap_or(usize::MAX).min(cfg.budget());
    let mut ev = Evaluator {
        cfg,
        f: objective,
        cache: HashMap::new(),
        failures: Vec::new(),
    };
    let mut log = Vec::new();
    let mut passes = 0;
    let mut since_improvement = 0;

    'passes: for pass in 1..=cfg.n_tt {
        let forward = pass % 2 == 1;
        let before = state.j_best;
        let order: Vec<usize> = if forward {
            (0..d).collect()
        } else {
            (0..d).rev().collect()
        };
        for k in order {
            let left = state.left[k].clone();
            let right = state.right[k + 1].clone();
            let (nl, nr) = (left.len(), right.len());
            let mut idx = Vec::with_capacity(nl * n * nr);
            for l in &left {
                for i in 0..n {
                    for r in &right {
                        let mut m = Vec::with_capacity(d);
                        m.extend_from_slice(l);
                        m.push(i);
                        m.extend_from_slice(r);
                        idx.push(m);
                    }
                }
            }
            let values = match ev.batch(&idx, cap - ev.cache.len()) {
                Ok(v) => v,
                Err(TtError::BudgetExhausted) => break 'passes,
                Err(e) => return Err(e),
            };
            if values.iter().all(|v| !v.is_finite()) {
                return Err(TtError::AllFailed {
                    failures: ev.failures.len(),
                });
            }
            state.evaluations = ev.cache.len();
            state.alpha = update_shift(state.alpha, &values);
            for (m, &v) in idx.iter().zip(&values) {
                if v < state.j_best || (v == state.j_best && state.idx_best.is_empty()) {
                    state.j_best = v;
                    state.idx_best = m.clone();
                }
            }
            let scale = adaptive_scale(state.alpha, &values);
            let h: Vec<f64> = values
                .iter()
                .map(|&v| mapping_h(v, state.alpha, scale))
                .collect();

            // Unfolding rows are (left, i) pairs, columns are right suffixes.
            if forward && k + 1 < d {
                let r = rank_cap(n, k + 1, cfg.r_max);
                let rows = select_rows(&h, nl * n, nr, r);
                state.left[k + 1] = rows
                    .into_iter()
                    .map(|row| {
                        let mut m = left[row / n].clone();
                        m.push(row % n);
                        m
                    })
                    .collect();
            } else if !forward && k > 0 {
                // Regroup as rows = left, columns = (i, right).
                let mut g = vec![0.0; h.len()];
                for a in 0..nl {
                    for i in 0..n {
                        for b in 0..nr {
                            g[a * (n * nr) + i * nr + b] = h[(a * n + i) * nr + b];
                        }
                    }
                }
                let r = rank_cap(n, d - k, cfg.r_max);
                let cols = select_cols(&g, nl, n * nr, r);
                state.right[k] = cols
                    .into_iter()
                    .map(|col| {
                        let mut m = vec![col / nr];
                        m.extend_from_slice(&right[col % nr]);
                        m
                    })
                    .collect();
            }
            log.push(LogEntry {
                iteration: pass,
                dimension: k,
                evaluations: state.evaluations,
                alpha: state.alpha,
                j_best: state.j_best,
            });
        }
        passes = pass;
        if state.j_best < before {
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if cfg.stagnation.is_some_and(|s| since_improvement >= s) {
                break;
            }
        }
    }

    if state.idx_best.is_empty() {
        return Err(TtError::AllFailed {
            failures: ev.failures.len(),
        });
    }
    Ok(TTResult {
        q_best: cfg.point(&state.idx_best),
        idx_best: state.idx_best,
        j_best: state.j_best,
        evaluations: ev.cache.len(),
        failures: ev.failures,
        log,
        cell_size: cfg.cell_size(),
        passes,
    })
}
