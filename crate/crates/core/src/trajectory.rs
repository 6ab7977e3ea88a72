//! Solver output shared by the finite-difference and finite-element solvers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::ModelParams;
use crate::state::{Compartment, GridSpec, StateField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Fdm,
    Fem,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Fdm => "fdm",
            SolverKind::Fem => "fem",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fdm" => Ok(SolverKind::Fdm),
            "fem" => Ok(SolverKind::Fem),
            other => Err(format!("unknown solver `{other}` (expected fdm or fem)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotCadence {
    /// `t = 0` and every whole day.
    #[default]
    Daily,
    EveryStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: StateField,
}

/// A complete direct-problem run.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: SolverKind,
    pub params: ModelParams,
    pub grid: GridSpec,
    pub init: StateField,
    pub snapshots: Vec<Snapshot>,
    /// Number of negative densities reset to zero over the run.
    pub clamp_count: usize,
}

pub type FdmRun = SolverRun;

impl SolverRun {
    /// Snapshot taken at whole day `day`, if one was stored.
    pub fn at_day(&self, day: u32) -> Option<&StateField> {
        let t = day as f64;
        let tol = 0.5 * self.grid.tau().min(0.5);
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= tol)
            .map(|s| &s.field)
    }

    pub fn final_field(&self) -> &StateField {
        &self.snapshots.last().expect("runs store t = 0").field
    }

    /// Spatial integral of compartment `c` for every stored snapshot.
    pub fn integrals(&self, c: Compartment) -> Vec<(f64, f64)> {
        self.snapshots
            .iter()
            .map(|s| (s.t, s.field.integral(c)))
            .collect()
    }

    /// Long-format CSV: `solver,t,x,s,e,i,r,h,c,d`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["solver", "t", "x", "s", "e", "i", "r", "h", "c", "d"])?;
        for snap in &self.snapshots {
            let xs = snap.field.coords();
            for (k, x) in xs.iter().enumerate() {
                let p = snap.field.point(k).to_array();
                let mut rec = vec![
                    self.solver.name().to_string(),
                    fmt_num(snap.t),
                    fmt_num(*x),
                ];
                rec.extend(p.iter().map(|v| fmt_num(*v)));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal representation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

/// Step indices at which snapshots are stored, paired with their nominal times.
pub(crate) fn snapshot_steps(grid: &GridSpec, cadence: SnapshotCadence) -> Vec<(usize, f64)> {
    match cadence {
        SnapshotCadence::EveryStep => (0..=grid.n_t)
            .map(|j| (j, j as f64 * grid.tau()))
            .collect(),
        SnapshotCadence::Daily => {
            let tau = grid.tau();
            let mut out = vec![(0usize, 0.0)];
            let days = grid.t_end.floor() as usize;
            for day in 1..=days {
                let j = (day as f64 / tau).round() as usize;
                let j = j.min(grid.n_t);
                if out.last().map(|&(last, _)| last) != Some(j) {
                    out.push((j, day as f64));
                }
            }
            out
        }
    }
}
