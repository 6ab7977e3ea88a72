//! Implausibility and history matching over a candidate cloud.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::ParameterBounds;
use crate::error::{IdentError, Result};
use crate::gp::EmulatorModel;
use crate::stats::percentile;

/// `|z − mean| / sqrt(var_gp + var_obs)`.
pub fn implausibility(mean: f64, var_gp: f64, z: f64, var_obs: f64) -> Result<f64> {
    if var_obs < 0.0 {
        return Err(IdentError::InvalidInput("var_obs must be ≥ 0".into()));
    }
    let total = var_gp.max(0.0) + var_obs;
    if !(total > 0.0) {
        return Err(IdentError::DegenerateDenominator);
    }
    Ok((z - mean).abs() / total.sqrt())
}

/// Default observation variance `(0.1 z)²`.
pub fn default_var_obs(z: f64) -> f64 {
    (0.1 * z).powi(2)
}

/// One emulated scalar compared against one observed value. Targets sharing
/// an `observable` label are combined by taking the largest implausibility.
#[derive(Debug, Clone)]
pub struct HistoryTarget {
    pub observable: String,
    pub day: u32,
    pub emulator: EmulatorModel,
    pub z: f64,
    pub var_obs: f64,
}

impl HistoryTarget {
    pub fn implausibility(&self, q: &[f64]) -> Result<f64> {
        let (m, v) = self.emulator.predict(q);
        implausibility(m, v, self.z, self.var_obs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub min: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableDiagnostics {
    pub observable: String,
    /// Candidates this observable alone would accept.
    pub accepted_alone: usize,
    pub min_implausibility: f64,
    pub max_implausibility: f64,
}

/// Candidates not ruled out by any observable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlausibleSpace {
    pub names: Vec<String>,
    pub threshold: f64,
    pub n_candidates: usize,
    pub accepted: Vec<Vec<f64>>,
    /// Empty when nothing was accepted.
    pub summary: Vec<ParameterSummary>,
    pub diagnostics: Vec<ObservableDiagnostics>,
}

impl PlausibleSpace {
    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    /// Min/max box of the accepted points.
    pub fn refined_bounds(&self) -> Option<ParameterBounds> {
        if self.summary.is_empty() {
            return None;
        }
        let mut lo: Vec<f64> = self.summary.iter().map(|s| s.min).collect();
        let mut hi: Vec<f64> = self.summary.iter().map(|s| s.max).collect();
        for i in 0..lo.len() {
            if lo[i] >= hi[i] {
                let pad = 1e-9 * lo[i].abs().max(1.0);
                lo[i] -= pad;
                hi[i] += pad;
            }
        }
        ParameterBounds::new(self.names.clone(), lo, hi).ok()
    }

    /// Header is the parameter names.
    pub fn write_accepted_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.names)?;
        for q in &self.accepted {
            w.write_record(q.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn summarize(names: &[String], accepted: &[Vec<f64>]) -> Vec<ParameterSummary> {
    if accepted.is_empty() {
        return Vec::new();
    }
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut col: Vec<f64> = accepted.iter().map(|q| q[i]).collect();
            col.sort_by(f64::total_cmp);
            ParameterSummary {
                name: name.clone(),
                min: col[0],
                q25: percentile(&col, 25.0),
                q50: percentile(&col, 50.0),
                q75: percentile(&col, 75.0),
                max: col[col.len() - 1],
            }
        })
        .collect()
}

/// Uniform candidates in `bounds`, deterministic under `seed`.
pub fn uniform_candidates(bounds: &ParameterBounds, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: Vec<f64> = (0..bounds.dim()).map(|_| rng.random()).collect();
            bounds.from_unit(&u)
        })
        .collect()
}

/// Per-observable implausibility (max over that observable's targets) for
/// every candidate; rows follow `candidates`, columns follow `labels`.
pub fn implausibility_table(
    targets: &[HistoryTarget],
    labels: &[String],
    candidates: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    candidates
        .par_iter()
        .map(|q| {
            let mut row = vec![0.0f64; labels.len()];
            for t in targets {
                let j = labels.iter().position(|l| *l == t.observable).unwrap_or(0);
                row[j] = row[j].max(t.implausibility(q)?);
            }
            Ok(row)
        })
        .collect()
}

fn observable_labels(targets: &[HistoryTarget]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for t in targets {
        if !labels.contains(&t.observable) {
            labels.push(t.observable.clone());
        }
    }
    labels
}

/// Accepts a candidate iff every observable's implausibility is below
/// `threshold`.
pub fn history_match(
    targets: &[HistoryTarget],
    bounds: &ParameterBounds,
    n_candidates: usize,
    threshold: f64,
    seed: u64,
) -> Result<PlausibleSpace> {
    if targets.is_empty() {
        return Err(IdentError::InvalidInput("no history-matching targets".into()));
    }
    let candidates = uniform_candidates(bounds, n_candidates, seed);
    match_candidates(targets, bounds, candidates, threshold)
}

pub fn match_candidates(
    targets: &[HistoryTarget],
    bounds: &ParameterBounds,
    candidates: Vec<Vec<f64>>,
    threshold: f64,
) -> Result<PlausibleSpace> {
    let labels = observable_labels(targets);
    let table = implausibility_table(targets, &labels, &candidates)?;
    let diagnostics = labels
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let col = table.iter().map(|r| r[j]);
            ObservableDiagnostics {
                observable: l.clone(),
                accepted_alone: table.iter().filter(|r| r[j] < threshold).count(),
                min_implausibility: col.clone().fold(f64::INFINITY, f64::min),
                max_implausibility: col.fold(0.0, f64::max),
            }
        })
        .collect();
    let n_candidates = candidates.len();
    let accepted: Vec<Vec<f64>> = candidates
        .into_iter()
        .zip(&table)
        .filter(|(_, row)| row.iter().all(|&v| v < threshold))
        .map(|(q, _)| q)
        .collect();
    Ok(PlausibleSpace {
        names: bounds.names.clone(),
        threshold,
        n_candidates,
        summary: summarize(&bounds.names, &accepted),
        accepted,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit_emulator, EmulatorConfig};
    use crate::lhs::lhc_sample;

    #[test]
    fn implausibility_examples() {
        assert_eq!(implausibility(2.0, 1.0, 2.0, 0.5).unwrap(), 0.0);
        assert!((implausibility(1.0, 3.0, 7.0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        let a = implausibility(1.0, 1.0, 4.0, 1.0).unwrap();
        let b = implausibility(1.0, 1.0, 4.0, 2.0).unwrap();
        assert!(b < a);
        assert_eq!(
            implausibility(1.0, 0.0, 1.0, 0.0).unwrap_err().to_string(),
            "degenerate denominator"
        );
    }

    #[test]
    fn implausibility_is_scale_consistent() {
        let base = implausibility(3.0, 0.4, 5.0, 0.9).unwrap();
        for lam in [0.01, 2.0, 1e6] {
            let scaled = implausibility(3.0 * lam, 0.4 * lam * lam, 5.0 * lam, 0.9 * lam * lam)
                .unwrap();
            assert!((scaled - base).abs() <= 1e-12 * base);
        }
    }

    fn toy_targets() -> (ParameterBounds, Vec<HistoryTarget>) {
        let b = ParameterBounds::unit(2);
        let d = lhc_sample(&b, 30, 1).unwrap();
        let f1 = |q: &[f64]| q[0] + 0.3 * q[1];
        let f2 = |q: &[f64]| (q[1] - 0.2).powi(2);
        let cfg = EmulatorConfig::default();
        let e1 = fit_emulator(&d.points, &d.points.iter().map(|q| f1(q)).collect::<Vec<_>>(), &b, &cfg)
            .unwrap();
        let e2 = fit_emulator(&d.points, &d.points.iter().map(|q| f2(q)).collect::<Vec<_>>(), &b, &cfg)
            .unwrap();
        let star = [0.4, 0.3];
        let targets = vec![
            HistoryTarget {
                observable: "A".into(),
                day: 1,
                emulator: e1,
                z: f1(&star),
                var_obs: 1e-4,
            },
            HistoryTarget {
                observable: "B".into(),
                day: 1,
                emulator: e2,
                z: f2(&star),
                var_obs: 1e-4,
            },
        ];
        (b, targets)
    }

    #[test]
    fn accepted_set_is_the_intersection() {
        let (b, targets) = toy_targets();
        let cands = uniform_candidates(&b, 500, 3);
        let space = match_candidates(&targets, &b, cands.clone(), 3.0).unwrap();
        let brute: Vec<Vec<f64>> = cands
            .iter()
            .filter(|q| targets.iter().all(|t| t.implausibility(q).unwrap() < 3.0))
            .cloned()
            .collect();
        assert_eq!(space.accepted, brute);
        let alone: Vec<usize> = targets
            .iter()
            .map(|t| cands.iter().filter(|q| t.implausibility(q).unwrap() < 3.0).count())
            .collect();
        assert_eq!(
            space.diagnostics.iter().map(|d| d.accepted_alone).collect::<Vec<_>>(),
            alone
        );
        assert!(space.accepted.len() <= alone.into_iter().min().unwrap());
        assert!(targets.iter().all(|t| t.implausibility(&[0.4, 0.3]).unwrap() < 3.0));
    }

    #[test]
    fn infinite_threshold_accepts_everything() {
        let (b, targets) = toy_targets();
        let space = history_match(&targets, &b, 50_000, f64::INFINITY, 5).unwrap();
        assert_eq!(space.accepted.len(), 50_000);
        for s in &space.summary {
            assert!((s.q50 - 0.5).abs() <= 0.02, "{s:?}");
        }
        let rb = space.refined_bounds().unwrap();
        for i in 0..2 {
            assert!(rb.lo[i] < 1e-3 && rb.hi[i] > 1.0 - 1e-3);
        }
    }

    #[test]
    fn empty_space_reports_diagnostics() {
        let (b, mut targets) = toy_targets();
        targets[0].z = 100.0;
        targets[0].var_obs = 1e-6;
        let space = history_match(&targets, &b, 1000, 3.0, 5).unwrap();
        assert!(space.is_empty());
        assert!(space.refined_bounds().is_none());
        assert!(space.diagnostics[0].min_implausibility >= 3.0);
    }

    #[test]
    fn repeated_observable_uses_the_largest_value() {
        let (b, targets) = toy_targets();
        let mut twice = targets[..1].to_vec();
        let mut other_day = targets[0].clone();
        other_day.day = 2;
        other_day.z += 0.2;
        twice.push(other_day);
        let q = vec![0.1, 0.9];
        let table = implausibility_table(&twice, &["A".to_string()], &[q.clone()]).unwrap();
        let want = twice
            .iter()
            .map(|t| t.implausibility(&q).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(table[0][0], want);
        let _ = b;
    }
}
