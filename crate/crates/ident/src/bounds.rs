//! Named box bounds over the uncertain model parameters.

use std::path::Path;

use seirhcd_core::{ModelError, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{IdentError, Result};

/// An axis-aligned box with one named coordinate per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    pub names: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParameterBounds {
    pub fn new(names: Vec<String>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Self { names, lo, hi };
        b.validate()?;
        Ok(b)
    }

    /// Default search box for the fourteen model parameters. Fractions are
    /// capped at 1 and durations start at one day.
    pub fn reference() -> Self {
        let rows: [(&str, f64, f64); 14] = [
            ("alpha_i", 0.0, 38.9),
            ("alpha_e", 0.0, 9.3),
            ("t_inc", 1.0, 505.0),
            ("t_inf", 1.0, 808.0),
            ("beta", 0.0, 1.0),
            ("eps_hc", 0.0, 1.0),
            ("t_hosp", 1.0, 707.0),
            ("t_imm", 1.0, 17675.0),
            ("mu", 0.0, 1.0),
            ("t_crit", 1.0, 909.0),
            ("v_s", 0.0, 0.005),
            ("v_e", 0.0, 0.101),
            ("v_i", 0.0, 0.001),
            ("v_r", 0.0, 0.005),
        ];
        Self {
            names: rows.iter().map(|r| r.0.to_string()).collect(),
            lo: rows.iter().map(|r| r.1).collect(),
            hi: rows.iter().map(|r| r.2).collect(),
        }
    }

    /// The unit cube `[0, 1]^k` with names `q1..qk`.
    pub fn unit(k: usize) -> Self {
        Self {
            names: (1..=k).map(|i| format!("q{i}")).collect(),
            lo: vec![0.0; k],
            hi: vec![1.0; k],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.names.len();
        if k == 0 {
            return Err(IdentError::InvalidBounds("no parameters".into()));
        }
        if self.lo.len() != k || self.hi.len() != k {
            return Err(IdentError::InvalidBounds(format!(
                "{k} names but {} lower and {} upper bounds",
                self.lo.len(),
                self.hi.len()
            )));
        }
        for (i, name) in self.names.iter().enumerate() {
            let (lo, hi) = (self.lo[i], self.hi[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(IdentError::InvalidBounds(format!(
                    "{name}: need finite lo < hi, got [{lo}, {hi}]"
                )));
            }
            if self.names[..i].contains(name) {
                return Err(IdentError::InvalidBounds(format!("duplicate name {name}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &t)| self.lo[i] + t * self.width(i))
            .collect()
    }

    pub fn to_unit(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.lo[i]) / self.width(i))
            .collect()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dim()
            && q
                .iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lo[i] && v <= self.hi[i])
    }

    /// Copies `point` into `base` by name and validates the result.
    pub fn apply(&self, base: &ModelParams, point: &[f64]) -> Result<ModelParams> {
        let mut p = base.clone();
        for (name, &v) in self.names.iter().zip(point) {
            p.set(name, v)?;
        }
        let violations = p.validate();
        if !violations.is_empty() {
            return Err(ModelError::InvalidParams(violations).into());
        }
        Ok(p)
    }

    /// Intersects with `other` on shared names; other dimensions are kept.
    pub fn restrict(&self, other: &ParameterBounds) -> Result<Self> {
        let mut out = self.clone();
        for (j, name) in other.names.iter().enumerate() {
            if let Some(i) = self.index_of(name) {
                out.lo[i] = self.lo[i].max(other.lo[j]);
                out.hi[i] = self.hi[i].min(other.hi[j]);
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let b: Self = serde_json::from_str(&text)?;
        b.validate()?;
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use seirhcd_core::PARAMETER_NAMES;

    #[test]
    fn defaults_cover_every_parameter_and_contain_the_reference() {
        let b = ParameterBounds::reference();
        b.validate().unwrap();
        assert_eq!(b.names, PARAMETER_NAMES);
        let reference = ModelParams::reference();
        let q: Vec<f64> = b.names.iter().map(|n| reference.get(n).unwrap()).collect();
        assert!(b.contains(&q));
    }

    #[test]
    fn every_corner_is_a_valid_parameter_set() {
        let b = ParameterBounds::reference();
        let base = ModelParams::reference();
        b.apply(&base, &b.lo).unwrap();
        b.apply(&base, &b.hi).unwrap();
    }

    #[test]
    fn unit_round_trip() {
        let b = ParameterBounds::reference();
        let u = vec![0.25; 14];
        let back = b.to_unit(&b.from_unit(&u));
        for x in back {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_bounds_are_rejected() {
        let err = ParameterBounds::new(vec!["a".into()], vec![1.0], vec![1.0]).unwrap_err();
        assert!(err.to_string().contains("a:"));
        assert!(ParameterBounds::new(vec!["a".into(), "a".into()], vec![0.0; 2], vec![1.0; 2])
            .is_err());
    }

    #[test]
    fn restrict_intersects_by_name() {
        let b = ParameterBounds::reference();
        let narrow =
            ParameterBounds::new(vec!["mu".into(), "other".into()], vec![0.2, 0.0], vec![0.3, 1.0])
                .unwrap();
        let r = b.restrict(&narrow).unwrap();
        let i = r.index_of("mu").unwrap();
        assert_eq!((r.lo[i], r.hi[i]), (0.2, 0.3));
        assert_eq!(r.lo[0], b.lo[0]);
        let disjoint =
            ParameterBounds::new(vec!["mu".into()], vec![2.0], vec![3.0]).unwrap();
        assert!(b.restrict(&disjoint).is_err());
    }
}
