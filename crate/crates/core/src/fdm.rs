//! Explicit finite-difference solver.
//!
//! Interior nodes `k = 1..n_x-1` advance with forward Euler. The diffusion
//! term of the four moving compartments is discretized in product-rule form,
//!
//! ```text
//! v (n_{k+1} - n_{k-1})/(2h) · (u_{k+1} - u_{k-1})/(2h) + v n_k (u_{k+1} - 2u_k + u_{k-1})/h²
//! ```
//!
//! with `n` recomputed from the current state every step. This is a
//! non-conservative discretization of `∂x(n v ∂x u)`; it differs from a
//! flux-form scheme at `O(h²)`.
//!
//! The left boundary uses the one-sided second-order zero-slope stencil for
//! `s, e, i, r`; `h, c, d` keep their reaction update there. Every compartment
//! is pinned to zero at `x = 1`.

use crate::error::{ModelError, Result};
use crate::params::ModelParams;
use crate::reaction::reaction_terms;
use crate::state::{total_density, GridSpec, StateField};
use crate::trajectory::{snapshot_steps, Snapshot, SnapshotCadence, SolverKind, SolverRun};

/// Fills the boundary nodes of a field whose interior is already updated.
pub fn apply_boundary(mut u: StateField) -> StateField {
    apply_boundary_in_place(&mut u);
    u
}

pub fn apply_boundary_in_place(u: &mut StateField) {
    let last = u.n_x();
    for (c, arr) in u.arrays_mut().iter_mut().enumerate() {
        if c < 4 {
            arr[0] = (4.0 * arr[1] - arr[2]) / 3.0;
        }
        arr[last] = 0.0;
    }
}

/// Diffusion-limited explicit time step `h² / (2 n_max v_max)`.
///
/// Returns `f64::INFINITY` when every velocity (or `n_max`) is zero.
pub fn max_stable_timestep(p: &ModelParams, grid: &GridSpec, n_max: f64) -> f64 {
    let v = p.max_velocity();
    if v <= 0.0 || n_max <= 0.0 {
        return f64::INFINITY;
    }
    let h = grid.h();
    h * h / (2.0 * n_max * v)
}

/// A step size that keeps forward Euler stable for the combined diffusion and
/// reaction operator: `τ (4 n v / h² + λ) ≤ 2`, where `λ` bounds the fastest
/// reaction rate. Always at most [`max_stable_timestep`].
pub fn recommended_timestep(p: &ModelParams, grid: &GridSpec, n_max: f64) -> f64 {
    let h = grid.h();
    let diffusion = 2.0 * n_max.max(0.0) * p.max_velocity() / (h * h);
    let reaction = (1.0 / p.min_duration()).max((p.alpha_i + p.alpha_e) * n_max.max(0.0));
    1.0 / (diffusion + reaction)
}

/// Number of steps over `grid.t_end` at [`recommended_timestep`], rounded up to
/// whole steps per day.
pub fn recommended_steps(p: &ModelParams, n_x: usize, t_end: f64, init: &StateField) -> usize {
    let n_max = total_density(init).into_iter().fold(0.0, f64::max);
    let probe = GridSpec {
        n_x,
        n_t: 1,
        t_end,
    };
    GridSpec::steps_for(t_end, recommended_timestep(p, &probe, n_max))
}

/// Scratch buffers reused across steps.
struct Workspace {
    n: Vec<f64>,
}

/// Advances `u` from `t_j` to `t_j + τ`. Returns the new field and the number of
/// negative densities that were reset to zero.
pub fn fdm_step(
    u: &StateField,
    p: &ModelParams,
    grid: &GridSpec,
    t_j: f64,
    j: usize,
) -> Result<(StateField, usize)> {
    u.conforms_to(grid)?;
    let mut next = StateField::zeros(grid.n_x);
    let mut ws = Workspace {
        n: vec![0.0; grid.nodes()],
    };
    let clamped = step_into(u, &mut next, p, grid, t_j, j, &mut ws)?;
    Ok((next, clamped))
}

fn step_into(
    cur: &StateField,
    next: &mut StateField,
    p: &ModelParams,
    grid: &GridSpec,
    t_j: f64,
    j: usize,
    ws: &mut Workspace,
) -> Result<usize> {
    let n_x = grid.n_x;
    let h = grid.h();
    let tau = grid.tau();
    let inv_2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);
    let beta = p.beta.at(t_j);
    let vel = p.velocities();

    let src = cur.arrays();
    ws.n.iter_mut().for_each(|v| *v = 0.0);
    for arr in src {
        for (acc, v) in ws.n.iter_mut().zip(arr) {
            *acc += v;
        }
    }
    let n = &ws.n;
    let dst = next.arrays_mut();

    for k in 1..n_x {
        let uk: [f64; 7] = std::array::from_fn(|c| src[c][k]);
        let rx = reaction_terms(uk, p, beta).0;
        let dn = (n[k + 1] - n[k - 1]) * inv_2h;
        for c in 0..4 {
            let a = &src[c];
            let du = (a[k + 1] - a[k - 1]) * inv_2h;
            let lap = (a[k + 1] - 2.0 * a[k] + a[k - 1]) * inv_h2;
            let diffusion = vel[c] * (dn * du + n[k] * lap);
            dst[c][k] = uk[c] + tau * (diffusion + rx[c]);
        }
        for c in 4..7 {
            dst[c][k] = uk[c] + tau * rx[c];
        }
    }

    let u0: [f64; 7] = std::array::from_fn(|c| src[c][0]);
    let rx0 = reaction_terms(u0, p, beta).0;
    for c in 4..7 {
        dst[c][0] = u0[c] + tau * rx0[c];
    }

    for arr in dst.iter() {
        if let Some(k) = arr[1..n_x].iter().position(|v| !v.is_finite()) {
            return Err(ModelError::FdmNonFinite { k: k + 1, j });
        }
    }

    let mut clamped = clamp_range(dst, 1..n_x);
    apply_boundary_in_place(next);
    let dst = next.arrays_mut();
    for arr in dst.iter() {
        if !arr[0].is_finite() {
            return Err(ModelError::FdmNonFinite { k: 0, j });
        }
    }
    clamped += clamp_range(dst, 0..1);
    Ok(clamped)
}

fn clamp_range(dst: &mut [Vec<f64>; 7], range: std::ops::Range<usize>) -> usize {
    let mut count = 0;
    for arr in dst.iter_mut() {
        for v in &mut arr[range.clone()] {
            if *v < 0.0 {
                *v = 0.0;
                count += 1;
            }
        }
    }
    count
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FdmOptions {
    pub cadence: SnapshotCadence,
}

pub fn solve_fdm(p: &ModelParams, init: &StateField, grid: &GridSpec) -> Result<SolverRun> {
    solve_fdm_with(p, init, grid, FdmOptions::default())
}

pub fn solve_fdm_with(
    p: &ModelParams,
    init: &StateField,
    grid: &GridSpec,
    opts: FdmOptions,
) -> Result<SolverRun> {
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(ModelError::InvalidParams(violations));
    }
    grid.validate()?;
    init.conforms_to(grid)?;

    let n_max = total_density(init).into_iter().fold(0.0, f64::max);
    let tau_max = max_stable_timestep(p, grid, n_max);
    let tau = grid.tau();
    if tau > tau_max * (1.0 + 1e-12) {
        return Err(ModelError::Unstable {
            tau,
            tau_max,
            suggested_n_t: GridSpec::steps_for(grid.t_end, recommended_timestep(p, grid, n_max)),
        });
    }

    let stops = snapshot_steps(grid, opts.cadence);
    let mut snapshots = Vec::with_capacity(stops.len());
    let mut stop_iter = stops.iter().peekable();
    if let Some(&&(0, t)) = stop_iter.peek() {
        snapshots.push(Snapshot {
            t,
            field: init.clone(),
        });
        stop_iter.next();
    }

    let mut ws = Workspace {
        n: vec![0.0; grid.nodes()],
    };
    let mut cur = init.clone();
    let mut next = StateField::zeros(grid.n_x);
    let mut clamp_count = 0;
    for j in 0..grid.n_t {
        let t_j = j as f64 * tau;
        clamp_count += step_into(&cur, &mut next, p, grid, t_j, j, &mut ws)?;
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
        solver: SolverKind::Fdm,
        params: p.clone(),
        grid: *grid,
        init: init.clone(),
        snapshots,
        clamp_count,
    })
}
