use serde::Serialize;
use seirhcd_ident::sobol::write_results_csv;
use seirhcd_ident::{analyze, ForwardModel, ParameterBounds, SensitivityResult, SobolOptions};

use super::{csv_bytes, load_scenario, resolve_days};
use crate::args::{Common, SensitivityArgs};
use crate::error::{CliError, Result};
use crate::manifest::RunContext;
use crate::svg;

const DEFAULT_DAYS: [u32; 5] = [40, 80, 120, 160, 200];

#[derive(Debug, Serialize)]
struct Report<'a> {
    output: String,
    samples: usize,
    samples_used: usize,
    resampled: usize,
    dropped: usize,
    evaluations: usize,
    results: &'a [SensitivityResult],
}

pub fn run(ctx: &mut RunContext, common: &Common, args: &SensitivityArgs) -> Result<()> {
    let sc = load_scenario(ctx, common)?;
    let bounds = match &args.bounds {
        Some(p) => {
            ctx.add_input(p);
            ParameterBounds::load(p)?
        }
        None => ParameterBounds::reference(),
    };
    let mut default_days: Vec<u32> = DEFAULT_DAYS
        .into_iter()
        .filter(|&d| d as f64 <= sc.t_end)
        .collect();
    if default_days.is_empty() {
        default_days.push(sc.t_end.floor() as u32);
    }
    let days = resolve_days(common, default_days, sc.t_end)?;
    if args.samples == 0 {
        return Err(CliError::config("--samples must be positive"));
    }
    if !args.samples.is_power_of_two() {
        eprintln!(
            "warning: --samples {} is not a power of two; the Sobol sequence loses its balance properties",
            args.samples
        );
    }
    let model = ForwardModel {
        scenario: sc,
        bounds: bounds.clone(),
        observables: vec![args.output],
        days: days.clone(),
    };
    let opts = SobolOptions {
        n: args.samples,
        seed: ctx.next_seed(),
        bootstrap: args.bootstrap,
    };
    let run = analyze(&bounds, opts, days.len(), |q| model.evaluate(q))?;
    if run.dropped > 0 || run.resampled > 0 {
        eprintln!(
            "warning: {} base rows failed; {} replaced, {} dropped",
            run.resampled,
            run.resampled - run.dropped,
            run.dropped
        );
    }
    let results: Vec<SensitivityResult> = days
        .iter()
        .zip(run.estimates.iter().cloned())
        .map(|(&d, est)| SensitivityResult::from_estimate(d, &bounds.names, est, run.n_used))
        .collect();

    let bytes = csv_bytes(|buf| Ok(write_results_csv(&results, buf)?))?;
    ctx.write("indices.csv", &bytes)?;
    ctx.write_json(
        "indices.json",
        &Report {
            output: args.output.to_string(),
            samples: args.samples,
            samples_used: run.n_used,
            resampled: run.resampled,
            dropped: run.dropped,
            evaluations: run.evaluations,
            results: &results,
        },
    )?;
    let series: Vec<(String, Vec<f64>)> = results
        .iter()
        .map(|r| (format!("day {}", r.day), r.s.clone()))
        .collect();
    let chart = svg::bar_chart(
        &format!("First-order Sobol indices, output {}", args.output),
        &bounds.names,
        &series,
    );
    ctx.write("indices.svg", chart.as_bytes())?;
    for r in &results {
        eprintln!(
            "day {:>4}: most sensitive {} (S = {:.3})",
            r.day,
            r.most_sensitive(),
            r.index_of(r.most_sensitive()).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
