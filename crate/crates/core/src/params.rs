//! Epidemiological parameters, initial counts and their validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Share of newly resolved infections that recover without hospitalization.
///
/// Either a constant or a piecewise-constant daily series: day `k` covers
/// `t ∈ [k, k+1)`, and the last value is held past the end of the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Constant(f64),
    Daily(Vec<f64>),
}

impl Beta {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Beta::Constant(b) => *b,
            Beta::Daily(series) => {
                let day = if t <= 0.0 { 0 } else { t.floor() as usize };
                series[day.min(series.len() - 1)]
            }
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Beta::Constant(b) => std::slice::from_ref(b),
            Beta::Daily(series) => series,
        }
    }
}

impl Default for Beta {
    fn default() -> Self {
        Beta::Constant(0.4)
    }
}

/// Rates, durations, fractions and diffusion velocities of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Transmission from infected contacts (1/day).
    pub alpha_i: f64,
    /// Transmission from asymptomatic contacts (1/day).
    pub alpha_e: f64,
    pub beta: Beta,
    /// Fraction of hospitalized cases that become critical.
    pub eps_hc: f64,
    /// Fraction of critical cases that die.
    pub mu: f64,
    pub t_inc: f64,
    pub t_inf: f64,
    pub t_hosp: f64,
    pub t_crit: f64,
    pub t_imm: f64,
    pub v_s: f64,
    pub v_e: f64,
    pub v_i: f64,
    pub v_r: f64,
    pub population: u64,
}

/// The fourteen uncertain model parameters, in the order used for
/// sensitivity analysis and emulation.
pub const PARAMETER_NAMES: [&str; 14] = [
    "alpha_i", "alpha_e", "t_inc", "t_inf", "beta", "eps_hc", "t_hosp", "t_imm", "mu", "t_crit",
    "v_s", "v_e", "v_i", "v_r",
];

/// Population of the Novosibirsk region.
pub const NOVOSIBIRSK_POPULATION: u64 = 2_798_170;

impl ModelParams {
    /// The parameter set used for the reference direct-problem run.
    pub fn reference() -> Self {
        Self {
            alpha_i: 0.3856,
            alpha_e: 0.0922,
            beta: Beta::Constant(0.4),
            eps_hc: 0.0376,
            mu: 0.4754,
            t_inc: 5.0,
            t_inf: 8.0,
            t_hosp: 7.0,
            t_crit: 9.0,
            t_imm: 175.0,
            v_s: 5e-5,
            v_e: 1e-3,
            v_i: 1e-10,
            v_r: 5e-5,
            population: NOVOSIBIRSK_POPULATION,
        }
    }

    pub fn with_zero_velocities(mut self) -> Self {
        self.v_s = 0.0;
        self.v_e = 0.0;
        self.v_i = 0.0;
        self.v_r = 0.0;
        self
    }

    /// Diffusion velocities in compartment order (s, e, i, r).
    #[inline]
    pub fn velocities(&self) -> [f64; 4] {
        [self.v_s, self.v_e, self.v_i, self.v_r]
    }

    pub fn max_velocity(&self) -> f64 {
        self.velocities().into_iter().fold(0.0, f64::max)
    }

    pub fn min_duration(&self) -> f64 {
        [self.t_inc, self.t_inf, self.t_hosp, self.t_crit, self.t_imm]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn population_f64(&self) -> f64 {
        self.population as f64
    }

    /// Value of a scalar parameter by name. A daily `beta` series reports its
    /// first value.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "alpha_i" => self.alpha_i,
            "alpha_e" => self.alpha_e,
            "t_inc" => self.t_inc,
            "t_inf" => self.t_inf,
            "beta" => self.beta.at(0.0),
            "eps_hc" => self.eps_hc,
            "t_hosp" => self.t_hosp,
            "t_imm" => self.t_imm,
            "mu" => self.mu,
            "t_crit" => self.t_crit,
            "v_s" => self.v_s,
            "v_e" => self.v_e,
            "v_i" => self.v_i,
            "v_r" => self.v_r,
            _ => return None,
        })
    }

    /// Sets a scalar parameter by name. Setting `beta` replaces any daily
    /// series with a constant.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "alpha_i" => &mut self.alpha_i,
            "alpha_e" => &mut self.alpha_e,
            "t_inc" => &mut self.t_inc,
            "t_inf" => &mut self.t_inf,
            "beta" => {
                self.beta = Beta::Constant(value);
                return Ok(());
            }
            "eps_hc" => &mut self.eps_hc,
            "t_hosp" => &mut self.t_hosp,
            "t_imm" => &mut self.t_imm,
            "mu" => &mut self.mu,
            "t_crit" => &mut self.t_crit,
            "v_s" => &mut self.v_s,
            "v_e" => &mut self.v_e,
            "v_i" => &mut self.v_i,
            "v_r" => &mut self.v_r,
            _ => return Err(ModelError::UnknownParameter(name.to_string())),
        };
        *slot = value;
        Ok(())
    }

    /// Checks every invariant and reports one entry per violated bound.
    pub fn validate(&self) -> Vec<Violation> {
        validate_params(self)
    }
}

/// A single violated parameter bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: String) -> Self {
        Self {
            field: field.to_string(),
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn validate_params(p: &ModelParams) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut finite = |name: &str, v: f64| {
        if !v.is_finite() {
            out.push(Violation::new(name, format!("{name} must be finite")));
            false
        } else {
            true
        }
    };
    let checks: Vec<(&str, f64, bool)> = [
        ("alpha_i", p.alpha_i),
        ("alpha_e", p.alpha_e),
        ("eps_hc", p.eps_hc),
        ("mu", p.mu),
        ("t_inc", p.t_inc),
        ("t_inf", p.t_inf),
        ("t_hosp", p.t_hosp),
        ("t_crit", p.t_crit),
        ("t_imm", p.t_imm),
        ("v_s", p.v_s),
        ("v_e", p.v_e),
        ("v_i", p.v_i),
        ("v_r", p.v_r),
    ]
    .into_iter()
    .map(|(n, v)| (n, v, finite(n, v)))
    .collect();

    for (name, v, ok) in checks {
        if !ok {
            continue;
        }
        match name {
            "alpha_i" | "alpha_e" | "v_s" | "v_e" | "v_i" | "v_r" => {
                if v < 0.0 {
                    out.push(Violation::new(name, format!("{name} must be ≥ 0")));
                }
            }
            "eps_hc" | "mu" => push_fraction(&mut out, name, v),
            _ => {
                if v <= 0.0 {
                    out.push(Violation::new(name, format!("{name} must be > 0")));
                }
            }
        }
    }

    let betas = p.beta.values();
    if betas.is_empty() {
        out.push(Violation::new("beta", "beta series must not be empty".into()));
    }
    for &b in betas {
        if !b.is_finite() {
            out.push(Violation::new("beta", "beta must be finite".into()));
            break;
        }
        if !(0.0..=1.0).contains(&b) {
            push_fraction(&mut out, "beta", b);
            break;
        }
    }

    if p.population == 0 {
        out.push(Violation::new("population", "population must be > 0".into()));
    }
    out
}

fn push_fraction(out: &mut Vec<Violation>, name: &str, v: f64) {
    if v < 0.0 {
        out.push(Violation::new(name, format!("{name} must be ≥ 0")));
    } else if v > 1.0 {
        out.push(Violation::new(name, format!("{name} must be ≤ 1")));
    }
}

/// Compartment counts at the start of the modelled period (persons).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCounts {
    pub s0: f64,
    pub e0: f64,
    pub i0: f64,
    pub r0: f64,
    pub h0: f64,
    pub c0: f64,
    pub d0: f64,
}

impl InitialCounts {
    /// Novosibirsk region on 31 Jan 2022.
    pub fn novosibirsk_2022() -> Self {
        Self {
            s0: 2_734_917.0,
            e0: 4329.0,
            i0: 3508.0,
            r0: 32_333.0,
            h0: 219.0,
            c0: 54.0,
            d0: 4932.0,
        }
    }

    pub fn to_point(&self) -> crate::StatePoint {
        crate::StatePoint {
            s: self.s0,
            e: self.e0,
            i: self.i0,
            r: self.r0,
            h: self.h0,
            c: self.c0,
            d: self.d0,
        }
    }
}
