//! The PDE model seen as a map from a parameter vector to scalar outputs.

use seirhcd_core::observations::{extract_observables, Observable};
use seirhcd_core::scenario::Scenario;

use crate::bounds::ParameterBounds;
use crate::error::Result;

/// Runs `scenario` with the coordinates of `q` substituted by name and
/// reports each observable on each day. When the scenario leaves `n_t`
/// unset, the step count is chosen per parameter vector.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    pub scenario: Scenario,
    pub bounds: ParameterBounds,
    pub observables: Vec<Observable>,
    pub days: Vec<u32>,
}

impl ForwardModel {
    /// Number of outputs: observables × days.
    pub fn n_outputs(&self) -> usize {
        self.observables.len() * self.days.len()
    }

    /// Outputs ordered observable-major: `[o0 d0, o0 d1, .., o1 d0, ..]`.
    pub fn evaluate(&self, q: &[f64]) -> Result<Vec<f64>> {
        let mut sc = self.scenario.clone();
        sc.params = self.bounds.apply(&sc.params, q)?;
        let run = sc.run()?;
        let series = extract_observables(&run, &sc.params, &self.days)?;
        let mut out = Vec::with_capacity(self.n_outputs());
        for &o in &self.observables {
            out.extend_from_slice(series.get(o).expect("all observables are extracted"));
        }
        Ok(out)
    }

    /// Output index of `(observable, day)`.
    pub fn output_index(&self, o: Observable, day: u32) -> Option<usize> {
        let oi = self.observables.iter().position(|x| *x == o)?;
        let di = self.days.iter().position(|d| *d == day)?;
        Some(oi * self.days.len() + di)
    }
}
