use rayon::prelude::*;
use serde::Serialize;
use seirhcd_core::observations::{extract_observables, Observable, ObservationSeries};
use seirhcd_ident::history::{ObservableDiagnostics, ParameterSummary};
use seirhcd_ident::{
    fit_emulator, history_match, lhc_sample, EmulatorConfig, ForwardModel, HistoryTarget,
    ParameterBounds,
};

use super::{csv_bytes, fmt_num, load_observations, load_scenario, resolve_days};
use crate::args::{Common, EmulateArgs};
use crate::error::{CliError, Result};
use crate::manifest::RunContext;
use crate::svg;

const OBSERVABLES: [Observable; 3] = [Observable::H, Observable::R, Observable::D];

#[derive(Debug, Serialize)]
struct EmulatorReport {
    observable: String,
    day: u32,
    z: f64,
    var_obs: f64,
    degree: usize,
    beta: Vec<f64>,
    sigma2: f64,
    delta: Vec<f64>,
    nugget: f64,
    loo_within_3: f64,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    threshold: f64,
    n_design: usize,
    n_design_failed: usize,
    n_candidates: usize,
    n_accepted: usize,
    names: &'a [String],
    summary: &'a [ParameterSummary],
    diagnostics: &'a [ObservableDiagnostics],
    emulators: Vec<EmulatorReport>,
}

fn observed(data: &ObservationSeries, o: Observable, day: u32) -> Result<f64> {
    let col = data
        .get(o)
        .ok_or_else(|| CliError::config(format!("observation data have no {o} column")))?;
    let k = data
        .days
        .iter()
        .position(|&d| d == day)
        .ok_or_else(|| CliError::config(format!("observation data have no row for day {day}")))?;
    Ok(col[k])
}

pub fn run(ctx: &mut RunContext, common: &Common, args: &EmulateArgs) -> Result<()> {
    let sc = load_scenario(ctx, common)?;
    let bounds = match &args.bounds {
        Some(p) => {
            ctx.add_input(p);
            ParameterBounds::load(p)?
        }
        None => ParameterBounds::reference(),
    };
    let days = resolve_days(common, vec![sc.t_end.floor() as u32], sc.t_end)?;
    if args.design < 2 || args.candidates == 0 {
        return Err(CliError::config("--design must be ≥ 2 and --candidates ≥ 1"));
    }
    if !(args.threshold > 0.0) {
        return Err(CliError::config("--threshold must be positive"));
    }
    if !(args.obs_error.is_finite() && args.obs_error >= 0.0) {
        return Err(CliError::config("--obs-error must be ≥ 0"));
    }

    let data = match &args.data {
        Some(p) => load_observations(ctx, p)?,
        None => {
            let run = sc.run()?;
            extract_observables(&run, &sc.params, &days)?
        }
    };

    let model = ForwardModel {
        scenario: sc,
        bounds: bounds.clone(),
        observables: OBSERVABLES.to_vec(),
        days: days.clone(),
    };
    let design = lhc_sample(&bounds, args.design, ctx.next_seed())?;
    let outputs: Vec<_> = design
        .points
        .par_iter()
        .map(|q| model.evaluate(q))
        .collect();
    let mut x = Vec::with_capacity(outputs.len());
    let mut ys = Vec::with_capacity(outputs.len());
    let mut failed = 0;
    for (q, out) in design.points.iter().zip(outputs) {
        match out {
            Ok(y) if y.iter().all(|v| v.is_finite()) => {
                x.push(q.clone());
                ys.push(y);
            }
            Ok(_) => failed += 1,
            Err(e) => {
                failed += 1;
                eprintln!("warning: design run failed: {e}");
            }
        }
    }
    if failed * 10 > args.design {
        return Err(CliError::Numerical(format!(
            "{failed} of {} design runs failed",
            args.design
        )));
    }

    let cfg = EmulatorConfig {
        degree: args.degree,
        restarts: args.restarts,
        seed: ctx.next_seed(),
        ..Default::default()
    };
    let mut targets = Vec::new();
    let mut reports = Vec::new();
    for o in OBSERVABLES {
        for &day in &days {
            let j = model.output_index(o, day).expect("target is part of the model");
            let y: Vec<f64> = ys.iter().map(|r| r[j]).collect();
            let em = fit_emulator(&x, &y, &bounds, &cfg)?;
            for w in &em.warnings {
                eprintln!("warning: emulator {o} day {day}: {w}");
            }
            let z = observed(&data, o, day)?;
            let var_obs = (args.obs_error * z).powi(2);
            reports.push(EmulatorReport {
                observable: o.to_string(),
                day,
                z,
                var_obs,
                degree: em.degree,
                beta: em.beta.clone(),
                sigma2: em.sigma2,
                delta: em.delta.clone(),
                nugget: em.nugget,
                loo_within_3: em.loo().fraction_within(3.0),
                warnings: em.warnings.clone(),
            });
            targets.push(HistoryTarget {
                observable: o.to_string(),
                day,
                emulator: em,
                z,
                var_obs,
            });
        }
    }

    let space = history_match(
        &targets,
        &bounds,
        args.candidates,
        args.threshold,
        ctx.next_seed(),
    )?;
    ctx.write_json(
        "quantiles.json",
        &Report {
            threshold: args.threshold,
            n_design: args.design,
            n_design_failed: failed,
            n_candidates: space.n_candidates,
            n_accepted: space.accepted.len(),
            names: &space.names,
            summary: &space.summary,
            diagnostics: &space.diagnostics,
            emulators: reports,
        },
    )?;
    let bytes = csv_bytes(|buf| Ok(space.write_accepted_csv(buf)?))?;
    ctx.write("accepted.csv", &bytes)?;

    if space.is_empty() {
        for d in &space.diagnostics {
            eprintln!(
                "{}: {} candidates accepted alone, implausibility in [{:.3}, {:.3}]",
                d.observable, d.accepted_alone, d.min_implausibility, d.max_implausibility
            );
        }
        return Err(CliError::EmptySpace(format!(
            "no candidate has implausibility below {} for every observable",
            args.threshold
        )));
    }

    let rows: Vec<(String, [f64; 5])> = space
        .summary
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let u = |v: f64| (v - bounds.lo[i]) / bounds.width(i);
            (s.name.clone(), [u(s.min), u(s.q25), u(s.q50), u(s.q75), u(s.max)])
        })
        .collect();
    let bytes = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["parameter", "min", "q25", "q50", "q75", "max"])?;
        for (name, q) in &rows {
            let mut rec = vec![name.clone()];
            rec.extend(q.iter().map(|v| fmt_num(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    })?;
    ctx.write("boxplot.csv", &bytes)?;
    let chart = svg::box_plot("Plausible space, bounds normalized to [0, 1]", &rows);
    ctx.write("boxplot.svg", chart.as_bytes())?;

    let refined = space
        .refined_bounds()
        .ok_or_else(|| CliError::Numerical("refined bounds are degenerate".into()))?;
    ctx.write_json("refined_bounds.json", &refined)?;
    eprintln!(
        "{} of {} candidates accepted at threshold {}",
        space.accepted.len(),
        space.n_candidates,
        args.threshold
    );
    Ok(())
}
