//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Set `SEIRHCD_ACCEPTANCE_STRICT=1` to exit non-zero when any criterion
//! fails. Pass criterion numbers as arguments to run a subset.

use std::convert::Infallible;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use seirhcd_core::fdm::solve_fdm;
use seirhcd_core::fem::solve_fem;
use seirhcd_core::observations::{
    extract_observables, noise_floor, prominent_peaks, Observable, ObservationSeries, SourceConfig,
};
use seirhcd_core::ode::solve_ode;
use seirhcd_core::reaction::reaction_rhs;
use seirhcd_core::scenario::{Scenario, NOVOSIBIRSK_2022};
use seirhcd_core::{
    total_density, Beta, Compartment, GridSpec, InitialCounts, ModelParams, StateField, StatePoint,
};
use seirhcd_ident::history::default_var_obs;
use seirhcd_ident::{
    analyze, fit_emulator, history_match, lhc_sample, EmulatorConfig, ForwardModel, HistoryTarget,
    ParameterBounds, SobolOptions,
};
use seirhcd_tt::{tt_optimize, TTConfig};

type Outcome = (bool, String);

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("mass balance", mass_balance),
        ("zero-diffusion reduction", zero_diffusion_reduction),
        ("cross-solver consistency", cross_solver),
        ("epidemic wave shape", wave_shape),
        ("Sobol additive oracle", sobol_additive),
        ("Sobol qualitative pattern", sobol_pattern),
        ("emulator interpolation", emulator_interpolation),
        ("history-matching containment", history_containment),
        ("TT optimizer", tt_properties),
        ("inverse crime end-to-end", inverse_crime),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    println!("{failed} criteria failed");
    if failed > 0 && std::env::var_os("SEIRHCD_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

fn mass_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let u = StatePoint::from_array(std::array::from_fn(|_| rng.random_range(0.0..2.0)));
        let p = ModelParams {
            alpha_i: rng.random_range(0.0..40.0),
            alpha_e: rng.random_range(0.0..10.0),
            beta: Beta::Constant(rng.random_range(0.0..=1.0)),
            eps_hc: rng.random_range(0.0..=1.0),
            mu: rng.random_range(0.0..=1.0),
            t_inc: rng.random_range(0.5..100.0),
            t_inf: rng.random_range(0.5..100.0),
            t_hosp: rng.random_range(0.5..100.0),
            t_crit: rng.random_range(0.5..100.0),
            t_imm: rng.random_range(0.5..1000.0),
            ..ModelParams::reference()
        };
        let d = reaction_rhs(&u, &p, 0.0).unwrap().to_array();
        let scale: f64 = d.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        worst = worst.max(d.iter().sum::<f64>().abs() / scale);
    }

    let mut s = Scenario::novosibirsk_2022();
    s.params = s.params.with_zero_velocities();
    s.n_x = 100;
    let g = s.grid();
    let init = s.initial_field();
    let run = solve_fdm(&s.params, &init, &g).unwrap();
    let n0 = total_density(&init);
    let mut drift = 0.0f64;
    for snap in &run.snapshots {
        let n = total_density(&snap.field);
        for k in 1..g.n_x {
            drift = drift.max((n[k] - n0[k]).abs() / n0[k]);
        }
    }
    (
        worst <= 1e-14 && drift <= 1e-10,
        format!("max relative rhs sum {worst:.1e} (<= 1e-14), interior density drift {drift:.1e} (<= 1e-10) over T={}", s.t_end),
    )
}

fn zero_diffusion_reduction() -> Outcome {
    let p = ModelParams::reference().with_zero_velocities();
    let n = p.population_f64();
    let u0 = InitialCounts::novosibirsk_2022().to_point() * (1.0 / n);
    let n_x = 20;
    let mut ratios = Vec::new();
    for fem in [false, true] {
        let mut errs = Vec::new();
        for n_t in [1000, 2000] {
            let g = GridSpec::new(n_x, n_t, 100.0).unwrap();
            let init = StateField::uniform(n_x, u0);
            let run = if fem { solve_fem(&p, &init, &g) } else { solve_fdm(&p, &init, &g) }.unwrap();
            let ode = solve_ode(&p, u0 * n, &g).unwrap().last() * (1.0 / n);
            let a = run.final_field().point(n_x / 2).to_array();
            let e = a.iter().zip(ode.to_array()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            errs.push(e);
        }
        ratios.push((errs[0], errs[0] / errs[1]));
    }
    let pass = ratios.iter().all(|(_, r)| (1.7..=2.3).contains(r));
    (
        pass,
        format!(
            "error ratio FDM {:.3} (e={:.1e}), FEM {:.3} (e={:.1e}); required 2 +- 15%",
            ratios[0].1, ratios[0].0, ratios[1].1, ratios[1].0
        ),
    )
}

fn cross_solver() -> Outcome {
    let mut s = Scenario::novosibirsk_2022();
    s.n_x = 400;
    let g = s.grid();
    let init = s.initial_field();
    let a = solve_fdm(&s.params, &init, &g).unwrap();
    let b = solve_fem(&s.params, &init, &g).unwrap();
    let mut worst = (0.0f64, Compartment::I, 0.0);
    for c in [Compartment::I, Compartment::C, Compartment::D] {
        for ((t, x), (_, y)) in a.integrals(c).into_iter().zip(b.integrals(c)) {
            let rel = (x - y).abs() / x.abs().max(1e-300);
            if rel > worst.0 {
                worst = (rel, c, t);
            }
        }
    }
    (
        worst.0 <= 0.02,
        format!("max relative gap {:.2}% ({} on day {}) at N_x=400, n_t={}", 100.0 * worst.0, worst.1, worst.2, g.n_t),
    )
}

fn wave_shape() -> Outcome {
    let s = Scenario::novosibirsk_2022();
    let run = s.run().unwrap();
    let days: Vec<u32> = (0..=200).collect();
    let i = extract_observables(&run, &s.params, &days).unwrap().i;
    let (peak_day, peak) = i
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(d, v)| (d, *v))
        .unwrap();
    let peaks = prominent_peaks(&i, 0.01);
    let decay = 1.0 - i[200] / peak;
    (
        peaks == vec![peak_day] && peak_day > 0 && decay >= 0.5,
        format!("single peak on day {peak_day} (prominent peaks {peaks:?}), decay {:.0}% by day 200", 100.0 * decay),
    )
}

fn sobol_additive() -> Outcome {
    let bounds = ParameterBounds::unit(2);
    let opts = SobolOptions { n: 1024, seed: 1, bootstrap: 0 };
    let run = analyze(&bounds, opts, 1, |q| Ok(vec![q[0] + 2.0 * q[1]])).unwrap();
    let s = &run.estimates[0].s;
    (
        (s[0] - 0.2).abs() <= 0.05 && (s[1] - 0.8).abs() <= 0.05,
        format!("S = ({:.4}, {:.4}) vs (0.2, 0.8) +- 0.05", s[0], s[1]),
    )
}

fn sobol_pattern() -> Outcome {
    let mut sc = Scenario::novosibirsk_2022();
    sc.n_x = 20;
    sc.n_t = None;
    let bounds = ParameterBounds::reference();
    let days = vec![40, 80, 120, 160, 200];
    let model = ForwardModel {
        scenario: sc,
        bounds: bounds.clone(),
        observables: vec![Observable::I],
        days: days.clone(),
    };
    let opts = SobolOptions { n: 512, seed: 1, bootstrap: 0 };
    let run = analyze(&bounds, opts, days.len(), |q| model.evaluate(q)).unwrap();
    let s = |day: usize, name: &str| run.estimates[day].s[bounds.index_of(name).unwrap()];
    let first = &run.estimates[0].s;
    let top = (0..first.len()).max_by(|&a, &b| first[a].total_cmp(&first[b])).unwrap();
    let top_is_alpha_i = bounds.names[top] == "alpha_i";
    let t_imm_grows = s(days.len() - 1, "t_imm") > s(0, "t_imm");
    let v_max = (0..days.len())
        .flat_map(|d| ["v_s", "v_e", "v_i", "v_r"].map(|v| s(d, v)))
        .fold(f64::NEG_INFINITY, f64::max);
    (
        top_is_alpha_i && t_imm_grows && v_max <= 0.05,
        format!(
            "day 40 max index {} = {:.3} (S(alpha_i) = {:.3}); S(t_imm) {:.3} -> {:.3}; max velocity index {:.3} (<= 0.05)",
            bounds.names[top],
            first[top],
            s(0, "alpha_i"),
            s(0, "t_imm"),
            s(days.len() - 1, "t_imm"),
            v_max
        ),
    )
}

fn emulator_interpolation() -> Outcome {
    let bounds = ParameterBounds::unit(4);
    let f = |q: &[f64]| 3.0 + (3.0 * q[0]).sin() + (2.0 * q[1]).cos() * q[2] + 0.5 * q[3] * q[3];
    let design = lhc_sample(&bounds, 250, 3).unwrap();
    let y: Vec<f64> = design.points.iter().map(|q| f(q)).collect();
    let em = fit_emulator(&design.points, &y, &bounds, &EmulatorConfig::default()).unwrap();
    let worst = design
        .points
        .iter()
        .zip(&y)
        .map(|(q, v)| (em.predict(q).0 - v).abs() / v.abs())
        .fold(0.0, f64::max);
    let within = em.loo().fraction_within(3.0);
    (
        worst <= 1e-6 && within >= 0.9,
        format!("max relative error at design points {worst:.1e} (<= 1e-6), LOO within +-3: {:.1}% (>= 90%)", 100.0 * within),
    )
}

fn history_containment() -> Outcome {
    let mut sc = Scenario::novosibirsk_2022();
    sc.n_x = 20;
    sc.n_t = None;
    let bounds = ParameterBounds::reference();
    let obs = [Observable::H, Observable::R, Observable::D];
    let model = ForwardModel {
        scenario: sc.clone(),
        bounds: bounds.clone(),
        observables: obs.to_vec(),
        days: vec![200],
    };
    let q_star: Vec<f64> = bounds.names.iter().map(|n| sc.params.get(n).unwrap()).collect();
    let z = model.evaluate(&q_star).unwrap();
    let design = lhc_sample(&bounds, 250, 1).unwrap();
    let ys: Vec<Vec<f64>> = design.points.par_iter().map(|q| model.evaluate(q).unwrap()).collect();
    let cfg = EmulatorConfig { seed: 1, ..Default::default() };
    let targets: Vec<HistoryTarget> = obs
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let y: Vec<f64> = ys.iter().map(|r| r[j]).collect();
            HistoryTarget {
                observable: o.to_string(),
                day: 200,
                emulator: fit_emulator(&design.points, &y, &bounds, &cfg).unwrap(),
                z: z[j],
                var_obs: default_var_obs(z[j]),
            }
        })
        .collect();
    let imp: Vec<f64> = targets.iter().map(|t| t.implausibility(&q_star).unwrap()).collect();
    let space = history_match(&targets, &bounds, 50_000, 3.0, 2).unwrap();
    let in_box = !space.is_empty()
        && space.summary.iter().zip(&q_star).all(|(s, q)| s.min <= *q && *q <= s.max);
    let mid = bounds.midpoint();
    let shift = |name: &str| {
        let i = bounds.index_of(name).unwrap();
        space.summary.get(i).map_or(f64::NAN, |s| (s.q50 - mid[i]).abs() / bounds.width(i))
    };
    let (sa, sv) = (shift("alpha_i"), shift("v_i"));
    let not_ruled_out = imp.iter().all(|v| *v < 3.0);
    (
        not_ruled_out && in_box && sa > sv,
        format!(
            "I(q*) H/R/D = {:.2}/{:.2}/{:.2} (< 3), {} of 50000 accepted, q* in accepted box: {in_box}, median shift alpha_i {sa:.3} vs v_i {sv:.3}",
            imp[0],
            imp[1],
            imp[2],
            space.accepted.len()
        ),
    )
}

fn ok(v: f64) -> Result<f64, Infallible> {
    Ok(v)
}

fn rastrigin(q: &[f64]) -> f64 {
    10.0 * q.len() as f64
        + q.iter()
            .map(|x| x * x - 10.0 * (2.0 * std::f64::consts::PI * x).cos())
            .sum::<f64>()
}

fn tt_properties() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let centre = [0.3, 0.7, 0.45];
    let cfg = TTConfig::new(vec![0.0; 3], vec![1.0; 3], 32, 1, 4);
    let bowl = |q: &[f64]| q.iter().zip(centre).map(|(x, c)| (x - c).powi(2)).sum::<f64>();
    let res = tt_optimize(|q| ok(bowl(q)), &cfg).unwrap();
    let nearest: Vec<usize> = centre.iter().map(|c| (c * 31.0).round() as usize).collect();
    pass &= res.idx_best == nearest;
    notes.push(format!("rank-1 bowl node {:?} vs {:?}", res.idx_best, nearest));

    let mut cfg = TTConfig::new(vec![-5.12; 2], vec![5.12; 2], 128, 4, 10);
    cfg.seed = 7;
    let res = tt_optimize(|q| ok(rastrigin(q)), &cfg).unwrap();
    let mut exhaustive = f64::INFINITY;
    for i in 0..cfg.n {
        for j in 0..cfg.n {
            exhaustive = exhaustive.min(rastrigin(&cfg.point(&[i, j])));
        }
    }
    pass &= res.j_best <= 1.0 && res.j_best >= exhaustive;
    notes.push(format!("Rastrigin J_best {:.3} (exhaustive grid {:.3})", res.j_best, exhaustive));
    let monotone = res.log.windows(2).all(|w| w[1].j_best <= w[0].j_best);
    pass &= monotone;
    notes.push(format!("monotone log: {monotone}"));

    let calls = AtomicUsize::new(0);
    let mut cfg = TTConfig::new(vec![-5.12; 3], vec![5.12; 3], 20, 3, 50);
    cfg.max_evals = Some(150);
    let res = tt_optimize(
        |q| {
            calls.fetch_add(1, Ordering::Relaxed);
            ok(rastrigin(q))
        },
        &cfg,
    )
    .unwrap();
    let used = calls.load(Ordering::Relaxed);
    pass &= used <= 150 && res.evaluations == used;
    notes.push(format!("budget 150, calls {used}"));
    (pass, notes.join("; "))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seirhcd"))
}

fn seirhcd(dir: &Path, args: &[&str]) -> Result<(), String> {
    let o = bin().current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{:?} exited {:?}: {}", args, o.status.code(), String::from_utf8_lossy(&o.stderr)))
    }
}

fn write_scenario(dir: &Path, n_x: usize, t_end: f64) {
    let src = serde_json::to_string(&SourceConfig::reference()).unwrap();
    std::fs::write(dir.join("source.json"), src).unwrap();
    let text = NOVOSIBIRSK_2022
        .replace("n_x = 200", &format!("n_x = {n_x}"))
        .replace("t_end = 200.0", &format!("t_end = {t_end:?}"))
        .replace("d0 = 4932", "d0 = 4932\nsource = \"source.json\"");
    std::fs::write(dir.join("scenario.toml"), text).unwrap();
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn inverse_crime() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_scenario(dir, 50, 100.0);
    let truth = SourceConfig::reference();
    let free = ["e1.a", "e1.b", "i0"];
    let q_star: Vec<f64> = free.iter().map(|n| truth.get(n).unwrap()).collect();
    // Each true coordinate sits on node 5, 10 and 5 of a 16-point axis.
    let tt = serde_json::json!({
        "b_min": [0.0, 0.45, 0.0],
        "b_max": [0.15, 0.9, 3.0 * q_star[2]],
        "n": 16, "r_max": 4, "n_tt": 8,
    });
    std::fs::write(dir.join("tt.json"), tt.to_string()).unwrap();

    let mut notes = Vec::new();
    let mut pass = true;
    for (noise, out) in [("0", "clean"), ("0.05", "noisy")] {
        let syn = format!("{out}-syn");
        let inv = format!("{out}-inv");
        if let Err(e) = seirhcd(dir, &["synth", "--config", "scenario.toml", "--noise", noise, "--output-dir", &syn]) {
            return (false, e);
        }
        let data_path = format!("{syn}/observations.csv");
        let args = [
            "invert", "--config", "scenario.toml", "--data", &data_path, "--tt", "tt.json",
            "--free", "e1.a,e1.b,i0", "--output-dir", &inv,
        ];
        if let Err(e) = seirhcd(dir, &args) {
            return (false, e);
        }
        let data = ObservationSeries::read_csv(std::fs::File::open(dir.join(&data_path)).unwrap()).unwrap();
        let r = read_json(&dir.join(&inv).join("result.json"));
        let j = r["j_best"].as_f64().unwrap();
        let q: Vec<f64> = r["q_best"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        let cell: Vec<f64> = r["cell_size"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        let evals = r["evaluations"].as_u64().unwrap();
        if noise == "0" {
            let limit = 1e-6 * data.sum_of_squares();
            let within: Vec<bool> = (0..3).map(|i| (q[i] - q_star[i]).abs() <= cell[i] * (1.0 + 1e-9)).collect();
            pass &= j <= limit && within.iter().all(|w| *w);
            notes.push(format!(
                "noise 0: J_best {j:.3e} (<= {limit:.3e}), cells off {:?}, {evals} evaluations",
                (0..3).map(|i| ((q[i] - q_star[i]) / cell[i]).round() as i64).collect::<Vec<_>>()
            ));
        } else {
            let limit = 2.0 * noise_floor(&data, 0.05);
            pass &= j <= limit;
            notes.push(format!("noise 5%: J_best {j:.3e} (<= {limit:.3e}), {evals} evaluations"));
        }
    }
    (pass, notes.join("; "))
}

fn csv_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_scenario(dir, 10, 40.0);
    std::fs::write(
        dir.join("tt.json"),
        r#"{"b_min":[0.0,0.45],"b_max":[0.15,0.9],"n":8,"r_max":2,"n_tt":2}"#,
    )
    .unwrap();
    if let Err(e) = seirhcd(dir, &["synth", "--config", "scenario.toml", "--noise", "0.05", "--output-dir", "data"]) {
        return (false, e);
    }
    let commands: [&[&str]; 5] = [
        &["simulate", "--fields"],
        &["sensitivity", "--samples", "16", "--bootstrap", "20", "--days", "20,40"],
        &["emulate", "--design", "30", "--candidates", "1000", "--threshold", "1e9"],
        &["synth", "--noise", "0.05"],
        &["invert", "--data", "data/observations.csv", "--tt", "tt.json", "--free", "e1.a,e1.b"],
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for args in commands {
        let mut runs = Vec::new();
        for rep in 0..2 {
            let out = format!("{}-{rep}", args[0]);
            let full = [args, &["--config", "scenario.toml", "--seed", "17", "--output-dir", &out]].concat();
            if let Err(e) = seirhcd(dir, &full) {
                return (false, e);
            }
            runs.push(csv_outputs(&dir.join(&out)));
        }
        let same = !runs[0].is_empty() && runs[0] == runs[1];
        pass &= same;
        notes.push(format!("{} {} ({} csv)", args[0], if same { "identical" } else { "DIFFERS" }, runs[0].len()));
    }
    (pass, notes.join(", "))
}
