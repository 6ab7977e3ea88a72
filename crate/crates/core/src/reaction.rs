//! Local SEIR-HCD kinetics, shared by the ODE oracle and both spatial solvers.

use crate::error::{ModelError, Result};
use crate::params::ModelParams;
use crate::state::StatePoint;

/// Reaction derivatives (no diffusion) for densities `u` at time `t`.
pub fn reaction_rhs(u: &StatePoint, p: &ModelParams, t: f64) -> Result<StatePoint> {
    if !u.is_finite() {
        return Err(ModelError::NonFiniteState);
    }
    Ok(reaction_terms(u.to_array(), p, p.beta.at(t)).into())
}

/// Unchecked kernel used in the solver inner loops; `beta` is already
/// evaluated at the current time.
#[inline(always)]
pub(crate) fn reaction_terms(u: [f64; 7], p: &ModelParams, beta: f64) -> Reaction {
    let [s, e, i, r, h, c, _d] = u;
    let infection = p.alpha_i * s * i + p.alpha_e * s * e;
    let waning = r / p.t_imm;
    let incubation = e / p.t_inc;
    let resolved = i / p.t_inf;
    let discharged = h / p.t_hosp;
    let ventilated = c / p.t_crit;
    Reaction([
        -infection + waning,
        infection - incubation,
        incubation - resolved,
        beta * resolved + (1.0 - p.eps_hc) * discharged - waning,
        (1.0 - beta) * resolved + (1.0 - p.mu) * ventilated - discharged,
        p.eps_hc * discharged - ventilated,
        p.mu * ventilated,
    ])
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Reaction(pub [f64; 7]);

impl From<Reaction> for StatePoint {
    fn from(r: Reaction) -> Self {
        StatePoint::from_array(r.0)
    }
}
