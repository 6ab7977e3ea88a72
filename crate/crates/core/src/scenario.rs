//! Scenario files.
//!
//! A scenario is a TOML or JSON document with three tables and an optional
//! solver key. Unknown keys are rejected everywhere.
//!
//! ```toml
//! solver = "fdm"            # or "fem"; optional, defaults to fdm
//!
//! [params]
//! alpha_i = 0.3856          # 1/day
//! alpha_e = 0.0922          # 1/day
//! beta = 0.4                # constant share in [0, 1] ...
//! # beta_series = "beta.csv"  # ... or a daily series (header `day,beta`),
//! #                           #     path relative to the scenario file
//! eps_hc = 0.0376
//! mu = 0.4754
//! t_inc = 5.0               # days
//! t_inf = 8.0
//! t_hosp = 7.0
//! t_crit = 9.0
//! t_imm = 175.0
//! v_s = 5e-5                # 1/(person·day)
//! v_e = 1e-3
//! v_i = 1e-10
//! v_r = 5e-5
//! population = 2798170
//!
//! [grid]
//! n_x = 200                 # spatial intervals on [0, 1]
//! t_end = 200.0             # days
//! n_t = 80000               # optional; chosen from the stability bound if absent
//!
//! [initial]                 # counts (persons); densities are counts / population
//! s0 = 2734917
//! e0 = 4329
//! i0 = 3508
//! r0 = 32333
//! h0 = 219
//! c0 = 54
//! d0 = 4932
//! # source = "source.json"  # optional cap sources; the reference profile otherwise
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::fdm::{recommended_steps, solve_fdm};
use crate::fem::solve_fem;
use crate::observations::{eval_initial_field, reference_initial_field, ForwardSetup, SourceConfig};
use crate::params::{Beta, InitialCounts, ModelParams};
use crate::state::{GridSpec, StateField, StatePoint};
use crate::trajectory::{SolverKind, SolverRun};

/// Text of the bundled scenario.
pub const NOVOSIBIRSK_2022: &str = include_str!("../../../scenarios/novosibirsk-2022.toml");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    solver: Option<SolverKind>,
    params: ParamsFile,
    grid: GridFile,
    initial: InitialFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    alpha_i: f64,
    alpha_e: f64,
    #[serde(default)]
    beta: Option<f64>,
    #[serde(default)]
    beta_series: Option<PathBuf>,
    eps_hc: f64,
    mu: f64,
    t_inc: f64,
    t_inf: f64,
    t_hosp: f64,
    t_crit: f64,
    t_imm: f64,
    v_s: f64,
    v_e: f64,
    v_i: f64,
    v_r: f64,
    population: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    n_x: usize,
    t_end: f64,
    #[serde(default)]
    n_t: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialFile {
    s0: f64,
    e0: f64,
    i0: f64,
    r0: f64,
    h0: f64,
    c0: f64,
    d0: f64,
    #[serde(default)]
    source: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ModelParams,
    pub n_x: usize,
    pub t_end: f64,
    pub n_t: Option<usize>,
    pub counts: InitialCounts,
    pub source: Option<SourceConfig>,
    pub solver: SolverKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

impl Scenario {
    /// The bundled Novosibirsk 2022 scenario.
    pub fn novosibirsk_2022() -> Self {
        Self::parse(NOVOSIBIRSK_2022, Format::Toml, None).expect("bundled scenario is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Scenario(format!("{}: {e}", path.display())))?;
        Self::parse(&text, Format::from_path(path), path.parent())
            .map_err(|e| ModelError::Scenario(format!("{}: {}", path.display(), strip(e))))
    }

    /// Parses scenario text; relative file references resolve against `base`.
    pub fn parse(text: &str, format: Format, base: Option<&Path>) -> Result<Self> {
        let file: ScenarioFile = match format {
            Format::Toml => toml::from_str(text).map_err(|e| ModelError::Scenario(e.to_string()))?,
            Format::Json => {
                serde_json::from_str(text).map_err(|e| ModelError::Scenario(e.to_string()))?
            }
        };
        let resolve = |p: &Path| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        };

        let pf = &file.params;
        let beta = match (pf.beta, &pf.beta_series) {
            (Some(b), None) => Beta::Constant(b),
            (None, Some(path)) => Beta::Daily(read_beta_series(&resolve(path))?),
            (None, None) => {
                return Err(ModelError::Scenario(
                    "params: one of `beta` or `beta_series` is required".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(ModelError::Scenario(
                    "params: `beta` and `beta_series` are mutually exclusive".into(),
                ))
            }
        };
        let params = ModelParams {
            alpha_i: pf.alpha_i,
            alpha_e: pf.alpha_e,
            beta,
            eps_hc: pf.eps_hc,
            mu: pf.mu,
            t_inc: pf.t_inc,
            t_inf: pf.t_inf,
            t_hosp: pf.t_hosp,
            t_crit: pf.t_crit,
            t_imm: pf.t_imm,
            v_s: pf.v_s,
            v_e: pf.v_e,
            v_i: pf.v_i,
            v_r: pf.v_r,
            population: pf.population,
        };
        let violations = params.validate();
        if !violations.is_empty() {
            return Err(ModelError::InvalidParams(violations));
        }

        let init = &file.initial;
        let source = match &init.source {
            Some(path) => {
                let path = resolve(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ModelError::Scenario(format!("{}: {e}", path.display())))?;
                let src: SourceConfig = serde_json::from_str(&text)
                    .map_err(|e| ModelError::Scenario(format!("{}: {e}", path.display())))?;
                src.validate()?;
                Some(src)
            }
            None => None,
        };
        let scenario = Scenario {
            params,
            n_x: file.grid.n_x,
            t_end: file.grid.t_end,
            n_t: file.grid.n_t,
            counts: InitialCounts {
                s0: init.s0,
                e0: init.e0,
                i0: init.i0,
                r0: init.r0,
                h0: init.h0,
                c0: init.c0,
                d0: init.d0,
            },
            source,
            solver: file.solver.unwrap_or(SolverKind::Fdm),
        };
        GridSpec {
            n_x: scenario.n_x,
            n_t: scenario.n_t.unwrap_or(1),
            t_end: scenario.t_end,
        }
        .validate()?;
        Ok(scenario)
    }

    /// Constant densities of the non-source compartments: counts divided by N.
    pub fn background(&self) -> StatePoint {
        let n = self.params.population_f64();
        StatePoint {
            s: 0.0,
            e: 0.0,
            i: self.counts.i0 / n,
            r: self.counts.r0 / n,
            h: self.counts.h0 / n,
            c: self.counts.c0 / n,
            d: self.counts.d0 / n,
        }
    }

    /// Initial field on `n_x` intervals (from the cap sources when given, the
    /// reference profile otherwise).
    pub fn initial_field_on(&self, grid: &GridSpec) -> StateField {
        match &self.source {
            Some(src) => eval_initial_field(src, grid, &self.background()),
            None => reference_initial_field(grid, &self.background()),
        }
    }

    /// The grid with `n_t` filled in from the stability bound when absent.
    pub fn grid(&self) -> GridSpec {
        let probe = GridSpec {
            n_x: self.n_x,
            n_t: 1,
            t_end: self.t_end,
        };
        let n_t = self.n_t.unwrap_or_else(|| {
            recommended_steps(&self.params, self.n_x, self.t_end, &self.initial_field_on(&probe))
        });
        GridSpec {
            n_x: self.n_x,
            n_t,
            t_end: self.t_end,
        }
    }

    pub fn initial_field(&self) -> StateField {
        self.initial_field_on(&self.grid())
    }

    /// Runs the configured solver from the scenario's initial field.
    pub fn run(&self) -> Result<SolverRun> {
        let grid = self.grid();
        let init = self.initial_field_on(&grid);
        match self.solver {
            SolverKind::Fdm => solve_fdm(&self.params, &init, &grid),
            SolverKind::Fem => solve_fem(&self.params, &init, &grid),
        }
    }

    pub fn forward_setup(&self) -> ForwardSetup {
        ForwardSetup {
            params: self.params.clone(),
            grid: self.grid(),
            background: self.background(),
            solver: self.solver,
        }
    }
}

fn strip(e: ModelError) -> String {
    match e {
        ModelError::Scenario(m) => m,
        other => other.to_string(),
    }
}

fn read_beta_series(path: &Path) -> Result<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path)
        .map_err(|e| ModelError::Scenario(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        let v = rec
            .get(1)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| {
                ModelError::Scenario(format!(
                    "{}: row {}: expected `day,beta`",
                    path.display(),
                    k + 2
                ))
            })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(ModelError::Scenario(format!(
            "{}: beta series is empty",
            path.display()
        )));
    }
    Ok(out)
}
