//! Linear finite elements in space, backward Euler for diffusion.
//!
//! Each step first advances the immobile compartments `h, c, d` with the
//! explicit reaction rule, then solves one tridiagonal system per moving
//! compartment:
//!
//! ```text
//! (M/τ + K + M Λ) u_new = M/τ u_prev + M g
//! ```
//!
//! `K` is the stiffness matrix with coefficient `n v` (element mean of the
//! nodal total density), `M` the consistent mass matrix, and the reaction is
//! split into a loss rate `Λ` (treated implicitly) and a source `g`, both
//! evaluated from the previous state. The four solves only read the previous
//! state, so they are independent of each other.
//!
//! Zero flux at `x = 0` is the natural boundary condition; the last row is
//! replaced by the Dirichlet condition `u = 0`.

use crate::error::{ModelError, Result};
use crate::params::ModelParams;
use crate::reaction::reaction_terms;
use crate::state::{total_density, Compartment, GridSpec, StateField};
use crate::trajectory::{snapshot_steps, Snapshot, SnapshotCadence, SolverKind, SolverRun};

/// Local 2×2 blocks of a linear element of length `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrices {
    pub stiffness: [[f64; 2]; 2],
    pub mass: [[f64; 2]; 2],
}

impl ElementMatrices {
    pub fn new(h: f64) -> Self {
        let k = 1.0 / h;
        let m = h / 6.0;
        Self {
            stiffness: [[k, -k], [-k, k]],
            mass: [[2.0 * m, m], [m, 2.0 * m]],
        }
    }
}

/// Banded system with `sub[0] = 0` and `sup[last] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn zeros(n: usize) -> Self {
        Self {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A x` for the banded matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut v = self.diag[k] * x[k];
                if k > 0 {
                    v += self.sub[k] * x[k - 1];
                }
                if k + 1 < n {
                    v += self.sup[k] * x[k + 1];
                }
                v
            })
            .collect()
    }
}

/// Thomas algorithm.
pub fn tridiagonal_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    thomas_into(sys, &mut c, &mut d, &mut x)?;
    Ok(x)
}

fn thomas_into(sys: &TridiagonalSystem, c: &mut [f64], d: &mut [f64], x: &mut [f64]) -> Result<()> {
    let n = sys.len();
    if n == 0 {
        return Ok(());
    }
    let mut pivot = sys.diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(ModelError::ZeroPivot { row: 0 });
    }
    c[0] = sys.sup[0] / pivot;
    d[0] = sys.rhs[0] / pivot;
    for k in 1..n {
        pivot = sys.diag[k] - sys.sub[k] * c[k - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(ModelError::ZeroPivot { row: k });
        }
        c[k] = if k + 1 < n { sys.sup[k] / pivot } else { 0.0 };
        d[k] = (sys.rhs[k] - sys.sub[k] * d[k - 1]) / pivot;
    }
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    Ok(())
}

/// Global stiffness bands for `∫ n v ψ'_k ψ'_m dx`, with `n` taken as the
/// element mean of the nodal values. No boundary rows are modified.
pub fn assemble_stiffness(n: &[f64], v: f64, h: f64) -> TridiagonalSystem {
    let nodes = n.len();
    let el = ElementMatrices::new(h);
    let mut sys = TridiagonalSystem::zeros(nodes);
    for e in 0..nodes - 1 {
        let coeff = v * 0.5 * (n[e] + n[e + 1]);
        sys.diag[e] += coeff * el.stiffness[0][0];
        sys.sup[e] += coeff * el.stiffness[0][1];
        sys.sub[e + 1] += coeff * el.stiffness[1][0];
        sys.diag[e + 1] += coeff * el.stiffness[1][1];
    }
    sys
}

/// Loss rate and source of compartment `c`, frozen at `u_prev`.
fn split_reaction(c: Compartment, u: [f64; 7], p: &ModelParams, beta: f64) -> (f64, f64) {
    let [s, e, i, r, h, _, _] = u;
    match c {
        Compartment::S => (p.alpha_i * i + p.alpha_e * e, r / p.t_imm),
        Compartment::E => (1.0 / p.t_inc, p.alpha_i * s * i + p.alpha_e * s * e),
        Compartment::I => (1.0 / p.t_inf, e / p.t_inc),
        Compartment::R => (
            1.0 / p.t_imm,
            beta * i / p.t_inf + (1.0 - p.eps_hc) * h / p.t_hosp,
        ),
        _ => unreachable!("only moving compartments are assembled"),
    }
}

/// Assembles the system for one moving compartment at the new time level.
pub fn assemble_step(
    u_prev: &StateField,
    p: &ModelParams,
    grid: &GridSpec,
    t: f64,
    compartment: Compartment,
) -> Result<TridiagonalSystem> {
    u_prev.conforms_to(grid)?;
    if !compartment.is_diffusing() {
        return Err(ModelError::InvalidGrid(format!(
            "compartment {compartment} does not diffuse"
        )));
    }
    let n = total_density(u_prev);
    let mut sys = TridiagonalSystem::zeros(grid.nodes());
    assemble_into(u_prev, &n, p, grid, t, compartment, &mut sys);
    if let Some(row) = sys.diag.iter().position(|&d| d == 0.0) {
        return Err(ModelError::DegenerateAssembly { row });
    }
    Ok(sys)
}

fn assemble_into(
    u_prev: &StateField,
    n: &[f64],
    p: &ModelParams,
    grid: &GridSpec,
    t: f64,
    compartment: Compartment,
    sys: &mut TridiagonalSystem,
) {
    let nodes = grid.nodes();
    let h = grid.h();
    let tau = grid.tau();
    let v = p.velocities()[compartment.index()];
    let beta = p.beta.at(t);
    let el = ElementMatrices::new(h);
    let src = u_prev.arrays();
    let prev = &src[compartment.index()];

    sys.sub.iter_mut().for_each(|x| *x = 0.0);
    sys.diag.iter_mut().for_each(|x| *x = 0.0);
    sys.sup.iter_mut().for_each(|x| *x = 0.0);
    sys.rhs.iter_mut().for_each(|x| *x = 0.0);

    let mut lam_a;
    let mut g_a;
    let point = |k: usize| -> [f64; 7] { std::array::from_fn(|c| src[c][k]) };
    (lam_a, g_a) = split_reaction(compartment, point(0), p, beta);
    for e in 0..nodes - 1 {
        let (lam_b, g_b) = split_reaction(compartment, point(e + 1), p, beta);
        let idx = [e, e + 1];
        let lam = [lam_a, lam_b];
        let g = [g_a, g_b];
        let kcoef = v * 0.5 * (n[e] + n[e + 1]);
        for a in 0..2 {
            let row = idx[a];
            let mut rhs = 0.0;
            for b in 0..2 {
                let m = el.mass[a][b];
                let entry = m / tau + kcoef * el.stiffness[a][b] + m * lam[b];
                match (a, b) {
                    (0, 0) | (1, 1) => sys.diag[row] += entry,
                    (0, 1) => sys.sup[row] += entry,
                    _ => sys.sub[row] += entry,
                }
                rhs += m * (prev[idx[b]] / tau + g[b]);
            }
            sys.rhs[row] += rhs;
        }
        lam_a = lam_b;
        g_a = g_b;
    }

    let last = nodes - 1;
    sys.sub[last] = 0.0;
    sys.diag[last] = 1.0;
    sys.rhs[last] = 0.0;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FemOptions {
    pub cadence: SnapshotCadence,
}

pub fn solve_fem(p: &ModelParams, init: &StateField, grid: &GridSpec) -> Result<SolverRun> {
    solve_fem_with(p, init, grid, FemOptions::default())
}

pub fn solve_fem_with(
    p: &ModelParams,
    init: &StateField,
    grid: &GridSpec,
    opts: FemOptions,
) -> Result<SolverRun> {
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(ModelError::InvalidParams(violations));
    }
    grid.validate()?;
    init.conforms_to(grid)?;

    let nodes = grid.nodes();
    let tau = grid.tau();
    let stops = snapshot_steps(grid, opts.cadence);
    let mut stop_iter = stops.iter().peekable();
    let mut snapshots = Vec::with_capacity(stops.len());
    if let Some(&&(0, t)) = stop_iter.peek() {
        snapshots.push(Snapshot {
            t,
            field: init.clone(),
        });
        stop_iter.next();
    }

    let mut cur = init.clone();
    let mut next = StateField::zeros(grid.n_x);
    let mut sys = TridiagonalSystem::zeros(nodes);
    let (mut cbuf, mut dbuf) = (vec![0.0; nodes], vec![0.0; nodes]);
    let mut clamp_count = 0;

    for j in 0..grid.n_t {
        let t_j = j as f64 * tau;
        let beta = p.beta.at(t_j);
        let n = total_density(&cur);
        {
            let src = cur.arrays();
            let dst = next.arrays_mut();
            for k in 0..nodes {
                let uk: [f64; 7] = std::array::from_fn(|c| src[c][k]);
                let rx = reaction_terms(uk, p, beta).0;
                for c in 4..7 {
                    dst[c][k] = uk[c] + tau * rx[c];
                }
            }
            for c in 4..7 {
                dst[c][nodes - 1] = 0.0;
            }
        }
        for c in Compartment::DIFFUSING {
            assemble_into(&cur, &n, p, grid, t_j, c, &mut sys);
            if let Some(row) = sys.diag.iter().position(|&d| d == 0.0) {
                return Err(ModelError::DegenerateAssembly { row });
            }
            let out = &mut next.arrays_mut()[c.index()];
            thomas_into(&sys, &mut cbuf, &mut dbuf, out)?;
        }
        for arr in next.arrays_mut().iter_mut() {
            for v in arr.iter_mut() {
                if !v.is_finite() {
                    return Err(ModelError::NonFiniteState);
                }
                if *v < 0.0 {
                    *v = 0.0;
                    clamp_count += 1;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if let Some(&&(step, t)) = stop_iter.peek() {
            if step == j + 1 {
                snapshots.push(Snapshot {
                    t,
                    field: cur.clone(),
                });
                stop_iter.next();
            }
        }
    }

    Ok(SolverRun {
        solver: SolverKind::Fem,
        params: p.clone(),
        grid: *grid,
        init: init.clone(),
        snapshots,
        clamp_count,
    })
}
