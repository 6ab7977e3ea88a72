//! Well-mixed SEIR-HCD system integrated with classical RK4.
//!
//! States are compartment counts; the transmission terms are normalized by the
//! population `N`, so dividing a trajectory by `N` gives the density form used
//! by the spatial solvers.

use crate::error::{ModelError, Result};
use crate::params::ModelParams;
use crate::reaction::reaction_terms;
use crate::state::{GridSpec, StatePoint};

#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<StatePoint>,
}

impl OdeTrajectory {
    pub fn last(&self) -> StatePoint {
        *self.states.last().expect("trajectory holds at least u0")
    }

    /// State at the step closest to `t`.
    pub fn at(&self, t: f64) -> StatePoint {
        let tau = self.times.get(1).copied().unwrap_or(1.0) - self.times[0];
        let j = ((t - self.times[0]) / tau).round().max(0.0) as usize;
        self.states[j.min(self.states.len() - 1)]
    }
}

fn count_rhs(u: [f64; 7], p: &ModelParams, t: f64) -> [f64; 7] {
    let n = p.population_f64();
    let density = u.map(|v| v / n);
    reaction_terms(density, p, p.beta.at(t)).0.map(|v| v * n)
}

pub fn solve_ode(p: &ModelParams, u0: StatePoint, grid: &GridSpec) -> Result<OdeTrajectory> {
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(ModelError::InvalidParams(violations));
    }
    grid.validate()?;
    if !u0.is_finite() {
        return Err(ModelError::NonFiniteState);
    }

    let tau = grid.tau();
    let mut times = Vec::with_capacity(grid.n_t + 1);
    let mut states = Vec::with_capacity(grid.n_t + 1);
    let mut u = u0.to_array();
    times.push(0.0);
    states.push(u0);

    let axpy = |a: &[f64; 7], k: f64, b: &[f64; 7]| -> [f64; 7] {
        std::array::from_fn(|c| a[c] + k * b[c])
    };

    for j in 0..grid.n_t {
        let t = j as f64 * tau;
        let k1 = count_rhs(u, p, t);
        let k2 = count_rhs(axpy(&u, 0.5 * tau, &k1), p, t + 0.5 * tau);
        let k3 = count_rhs(axpy(&u, 0.5 * tau, &k2), p, t + 0.5 * tau);
        let k4 = count_rhs(axpy(&u, tau, &k3), p, t + tau);
        for c in 0..7 {
            u[c] += tau / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        let t_next = (j + 1) as f64 * tau;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::OdeNonFinite { t: t_next });
        }
        times.push(t_next);
        states.push(StatePoint::from_array(u));
    }
    Ok(OdeTrajectory { times, states })
}
