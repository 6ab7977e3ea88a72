use seirhcd_core::fdm::{fdm_step, max_stable_timestep, solve_fdm, solve_fdm_with, FdmOptions};
use seirhcd_core::fem::{solve_fem, solve_fem_with, FemOptions};
use seirhcd_core::observations::{extract_observables, prominent_peaks};
use seirhcd_core::ode::solve_ode;
use seirhcd_core::scenario::Scenario;
use seirhcd_core::{
    total_density, Compartment, GridSpec, InitialCounts, ModelParams, SnapshotCadence,
    StateField, StatePoint,
};

fn reference_density() -> StatePoint {
    let n = ModelParams::reference().population_f64();
    InitialCounts::novosibirsk_2022().to_point() * (1.0 / n)
}

/// Max-norm endpoint error of a spatial solver against RK4 at node `k`.
fn endpoint_error(run_final: &StateField, ode_final: StatePoint, k: usize) -> f64 {
    let a = run_final.point(k).to_array();
    let b = ode_final.to_array();
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn reduction_errors(fem: bool) -> (f64, f64) {
    let p = ModelParams::reference().with_zero_velocities();
    let n = p.population_f64();
    let u0 = reference_density();
    let n_x = 20;
    let probe = n_x / 2;
    let mut errs = Vec::new();
    for n_t in [1000, 2000] {
        let g = GridSpec::new(n_x, n_t, 100.0).unwrap();
        let init = StateField::uniform(n_x, u0);
        let run = if fem {
            solve_fem(&p, &init, &g).unwrap()
        } else {
            solve_fdm(&p, &init, &g).unwrap()
        };
        let ode = solve_ode(&p, u0 * n, &g).unwrap().last() * (1.0 / n);
        errs.push(endpoint_error(run.final_field(), ode, probe));
    }
    (errs[0], errs[1])
}

#[test]
fn fdm_without_diffusion_converges_to_ode_at_first_order() {
    let (e1, e2) = reduction_errors(false);
    let ratio = e1 / e2;
    assert!(e1 < 1e-2, "e1 = {e1}");
    assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn fem_without_diffusion_converges_to_ode_at_first_order() {
    let (e1, e2) = reduction_errors(true);
    let ratio = e1 / e2;
    assert!(e1 < 1e-2, "e1 = {e1}");
    assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn zero_velocity_keeps_interior_total_density() {
    let mut s = Scenario::novosibirsk_2022();
    s.params = s.params.with_zero_velocities();
    s.n_x = 100;
    s.n_t = Some(4000);
    let g = s.grid();
    let init = s.initial_field();
    let run = solve_fdm(&s.params, &init, &g).unwrap();
    let n0 = total_density(&init);
    for snap in &run.snapshots {
        let n = total_density(&snap.field);
        for k in 1..g.n_x {
            let drift = (n[k] - n0[k]).abs() / n0[k];
            assert!(drift <= 1e-10, "t={} k={k} drift {drift:e}", snap.t);
        }
    }
}

#[test]
fn boundary_conditions_hold_at_every_step() {
    let mut s = Scenario::novosibirsk_2022();
    s.n_x = 80;
    s.t_end = 5.0;
    let g = s.grid();
    let run = solve_fdm_with(
        &s.params,
        &s.initial_field(),
        &g,
        FdmOptions {
            cadence: SnapshotCadence::EveryStep,
        },
    )
    .unwrap();
    assert_eq!(run.snapshots.len(), g.n_t + 1);
    let h = g.h();
    for snap in run.snapshots.iter().skip(1) {
        for c in Compartment::ALL {
            assert_eq!(snap.field.get(c)[g.n_x], 0.0);
        }
        for c in Compartment::DIFFUSING {
            let u = snap.field.get(c);
            let residual = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
            assert!(residual.abs() <= 1e-12, "{c} at t={}: {residual:e}", snap.t);
        }
    }
}

#[test]
fn runs_are_bit_reproducible() {
    let mut s = Scenario::novosibirsk_2022();
    s.n_x = 60;
    s.t_end = 30.0;
    let g = s.grid();
    let init = s.initial_field();
    let a = solve_fdm(&s.params, &init, &g).unwrap();
    let b = solve_fdm(&s.params, &init, &g).unwrap();
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(x, y);
    }
    let a = solve_fem(&s.params, &init, &g).unwrap();
    let b = solve_fem(&s.params, &init, &g).unwrap();
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(x, y);
    }
}

/// Straight transcription of the difference equations for a single node,
/// written without the solver's helpers.
#[allow(clippy::too_many_arguments)]
fn transcribed_node(
    s: &[f64],
    e: &[f64],
    i: &[f64],
    r: &[f64],
    hh: &[f64],
    c: &[f64],
    d: &[f64],
    k: usize,
    hx: f64,
    tau: f64,
    p: &ModelParams,
) -> [f64; 7] {
    let n = |m: usize| s[m] + e[m] + i[m] + r[m] + hh[m] + c[m] + d[m];
    let beta = 0.4;
    let dn = (n(k + 1) - n(k - 1)) / (2.0 * hx);
    let diff = |u: &[f64], v: f64| {
        v * dn * (u[k + 1] - u[k - 1]) / (2.0 * hx)
            + v * n(k) * (u[k + 1] - 2.0 * u[k] + u[k - 1]) / (hx * hx)
    };
    let s1 = s[k]
        + tau
            * (diff(s, p.v_s) - p.alpha_i * s[k] * i[k] - p.alpha_e * s[k] * e[k]
                + r[k] / p.t_imm);
    let e1 = e[k]
        + tau
            * (diff(e, p.v_e) + p.alpha_i * s[k] * i[k] + p.alpha_e * s[k] * e[k]
                - e[k] / p.t_inc);
    let i1 = i[k] + tau * (diff(i, p.v_i) + e[k] / p.t_inc - i[k] / p.t_inf);
    let r1 = r[k]
        + tau
            * (diff(r, p.v_r) + beta * i[k] / p.t_inf + (1.0 - p.eps_hc) * hh[k] / p.t_hosp
                - r[k] / p.t_imm);
    let h1 = hh[k]
        + tau * ((1.0 - beta) * i[k] / p.t_inf + (1.0 - p.mu) * c[k] / p.t_crit - hh[k] / p.t_hosp);
    let c1 = c[k] + tau * (p.eps_hc * hh[k] / p.t_hosp - c[k] / p.t_crit);
    let d1 = d[k] + tau * (p.mu * c[k] / p.t_crit);
    [s1, e1, i1, r1, h1, c1, d1]
}

#[test]
fn one_step_matches_scalar_transcription() {
    let s = Scenario::novosibirsk_2022();
    let g = s.grid();
    let u = s.initial_field();
    let (next, _) = fdm_step(&u, &s.params, &g, 0.0, 0).unwrap();
    let [a, b, c, d, e, f, h] = u.arrays().clone();
    for k in 1..g.n_x {
        let want = transcribed_node(&a, &b, &c, &d, &e, &f, &h, k, g.h(), g.tau(), &s.params);
        let got = next.point(k).to_array();
        for (x, y) in got.iter().zip(want) {
            assert!((x - y.max(0.0)).abs() <= 1e-13, "k={k}: {x} vs {y}");
        }
    }
}

#[test]
fn reference_run_is_a_single_decaying_wave() {
    let mut s = Scenario::novosibirsk_2022();
    s.n_x = 100;
    let g = s.grid();
    let run = solve_fdm(&s.params, &s.initial_field(), &g).unwrap();
    let days: Vec<u32> = (0..=200).collect();
    let obs = extract_observables(&run, &s.params, &days).unwrap();
    let i = &obs.i;
    let (peak_day, peak) = i
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(d, v)| (d, *v))
        .unwrap();
    assert!(peak_day > 0 && peak_day < 200, "peak day {peak_day}");
    assert_eq!(prominent_peaks(i, 0.01), vec![peak_day]);
    assert!(i[200] <= 0.5 * peak);
}

#[test]
fn fem_and_fdm_daily_integrals_agree() {
    let mut s = Scenario::novosibirsk_2022();
    s.n_x = 200;
    let init_probe = s.initial_field();
    let g0 = s.grid();
    let n_max = total_density(&init_probe).into_iter().fold(0.0, f64::max);
    let tau = 0.5 * max_stable_timestep(&s.params, &g0, n_max);
    let g = GridSpec::new(200, GridSpec::steps_for(200.0, tau), 200.0).unwrap();
    let init = s.initial_field_on(&g);
    let a = solve_fdm(&s.params, &init, &g).unwrap();
    let b = solve_fem(&s.params, &init, &g).unwrap();
    for c in Compartment::ALL {
        for ((t, x), (_, y)) in a.integrals(c).into_iter().zip(b.integrals(c)) {
            let rel = (x - y).abs() / x.abs().max(1e-12);
            assert!(rel <= 0.02, "{c} at day {t}: {x} vs {y}");
        }
    }
}

/// Smooth profile compatible with both boundary conditions.
fn smooth_field(n_x: usize) -> StateField {
    let mut u = StateField::zeros(n_x);
    for k in 0..=n_x {
        let x = k as f64 / n_x as f64;
        let bump = (std::f64::consts::FRAC_PI_2 * x).cos();
        u.set_point(
            k,
            StatePoint {
                s: 0.8 * bump,
                e: 0.05 * bump * bump,
                i: 0.02 * bump,
                r: 0.1 * bump,
                h: 0.0,
                c: 0.0,
                d: 0.0,
            },
        );
    }
    u
}

#[test]
fn fem_is_second_order_in_space() {
    let p = ModelParams {
        v_s: 0.05,
        v_e: 0.05,
        v_i: 0.05,
        v_r: 0.05,
        ..ModelParams::reference()
    };
    let t_end = 1.0;
    let n_t = 500;
    let solve = |n_x: usize| {
        let g = GridSpec::new(n_x, n_t, t_end).unwrap();
        solve_fem_with(&p, &smooth_field(n_x), &g, FemOptions::default())
            .unwrap()
            .final_field()
            .clone()
    };
    let fine_n = 640;
    let fine = solve(fine_n);
    let err = |n_x: usize| {
        let coarse = solve(n_x);
        let stride = fine_n / n_x;
        (0..=n_x)
            .map(|k| {
                Compartment::DIFFUSING
                    .iter()
                    .map(|&c| (coarse.get(c)[k] - fine.get(c)[k * stride]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(20), err(40));
    assert!(e1 / e2 >= 3.5, "{e1:e} / {e2:e} = {}", e1 / e2);
}
