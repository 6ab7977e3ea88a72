use serde::Serialize;
use seirhcd_core::observations::{
    extract_observables, misfit_between, ObservationSeries, SourceConfig,
};
use seirhcd_core::scenario::Scenario;
use seirhcd_core::PARAMETER_NAMES;
use seirhcd_ident::ParameterBounds;
use seirhcd_tt::{tt_optimize, write_log_csv, TTConfig};

use super::{csv_bytes, fmt_num, load_observations, load_scenario, load_source, named_params};
use crate::args::{Common, InvertArgs};
use crate::error::{CliError, Result};
use crate::manifest::RunContext;
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Coordinate {
    Source(usize),
    Param(&'static str),
}

fn resolve(name: &str) -> Result<Coordinate> {
    if let Some(k) = SourceConfig::coordinate_index(name) {
        return Ok(Coordinate::Source(k));
    }
    if let Some(p) = PARAMETER_NAMES.iter().find(|p| **p == name) {
        return Ok(Coordinate::Param(p));
    }
    Err(CliError::config(format!(
        "--free: unknown coordinate `{name}` (source coordinates are s1.a .. e3.c and i0; parameters are {})",
        PARAMETER_NAMES.join(", ")
    )))
}

/// The scenario with the free coordinates set to `q`.
fn instantiate(base: &Scenario, src: &SourceConfig, free: &[Coordinate], q: &[f64]) -> Result<Scenario> {
    let mut sc = base.clone();
    let mut v = src.to_vector();
    for (c, &x) in free.iter().zip(q) {
        match c {
            Coordinate::Source(k) => v[*k] = x,
            Coordinate::Param(name) => sc.params.set(name, x)?,
        }
    }
    let violations = sc.params.validate();
    if !violations.is_empty() {
        return Err(seirhcd_core::ModelError::InvalidParams(violations).into());
    }
    let s = SourceConfig::from_vector(&v)?;
    s.validate()?;
    sc.source = Some(s);
    Ok(sc)
}

fn observe(sc: &Scenario, days: &[u32]) -> Result<ObservationSeries> {
    let run = sc.run()?;
    Ok(extract_observables(&run, &sc.params, days)?)
}

#[derive(Debug, Serialize)]
struct Report {
    free: Vec<String>,
    q_best: Vec<f64>,
    j_best: f64,
    sum_data_sq: f64,
    evaluations: usize,
    budget: usize,
    passes: usize,
    cell_size: Vec<f64>,
    b_min: Vec<f64>,
    b_max: Vec<f64>,
    failures: usize,
    failure_samples: Vec<String>,
    params: std::collections::BTreeMap<String, f64>,
}

pub fn run(ctx: &mut RunContext, common: &Common, args: &InvertArgs) -> Result<()> {
    let sc = load_scenario(ctx, common)?;
    let src = match (&args.source, &sc.source) {
        (Some(p), _) => load_source(ctx, p)?,
        (None, Some(s)) => *s,
        (None, None) => {
            return Err(CliError::config(
                "invert needs a source: pass --source or set initial.source in the scenario",
            ))
        }
    };
    let data = load_observations(ctx, &args.data)?;
    if data.is_empty() {
        return Err(CliError::config("observation data are empty"));
    }
    if let Some(&last) = data.days.last() {
        if last as f64 > sc.t_end {
            return Err(CliError::config(format!(
                "observations reach day {last}, past the horizon t_end = {}",
                sc.t_end
            )));
        }
    }

    let mut cfg = TTConfig::load(&args.tt)?;
    ctx.add_input(&args.tt);
    cfg.seed = common.seed;
    let free: Vec<Coordinate> = args.free.iter().map(|n| resolve(n)).collect::<Result<_>>()?;
    if cfg.d() != free.len() {
        return Err(CliError::config(format!(
            "{}: bounds have {} dimensions but --free names {}",
            args.tt.display(),
            cfg.d(),
            free.len()
        )));
    }
    if let Some(p) = &args.bounds {
        let refined = ParameterBounds::load(p)?;
        ctx.add_input(p);
        for (k, name) in args.free.iter().enumerate() {
            if let Some(i) = refined.index_of(name) {
                cfg.b_min[k] = cfg.b_min[k].max(refined.lo[i]);
                cfg.b_max[k] = cfg.b_max[k].min(refined.hi[i]);
            }
        }
        cfg.validate()
            .map_err(|e| CliError::config(format!("after intersecting with refined bounds: {e}")))?;
    }

    let objective = |q: &[f64]| -> Result<f64> {
        let s = instantiate(&sc, &src, &free, q)?;
        Ok(misfit_between(&observe(&s, &data.days)?, &data))
    };
    let res = tt_optimize(objective, &cfg)?;

    let best = instantiate(&sc, &src, &free, &res.q_best)?;
    let model = observe(&best, &data.days)?;

    let bytes = csv_bytes(|buf| Ok(write_log_csv(&res.log, buf)?))?;
    ctx.write("tt_log.csv", &bytes)?;
    ctx.write_json("tt_config.json", &cfg)?;
    ctx.write_json("source.json", &best.source.expect("instantiated with a source"))?;

    let bytes = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["day", "I_obs", "I_model", "C_obs", "C_model", "D_obs", "D_model"])?;
        for k in 0..data.len() {
            w.write_record([
                data.days[k].to_string(),
                fmt_num(data.i[k]),
                fmt_num(model.i[k]),
                fmt_num(data.c[k]),
                fmt_num(model.c[k]),
                fmt_num(data.d[k]),
                fmt_num(model.d[k]),
            ])?;
        }
        w.flush().map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    })?;
    ctx.write("fit.csv", &bytes)?;
    let pts = |v: &[f64]| -> Vec<(f64, f64)> {
        data.days.iter().zip(v).map(|(&d, &y)| (d as f64, y)).collect()
    };
    let chart = svg::line_chart(
        "Observed and fitted series",
        "day",
        &[
            ("I observed", pts(&data.i)),
            ("I fitted", pts(&model.i)),
            ("C observed", pts(&data.c)),
            ("C fitted", pts(&model.c)),
            ("D observed", pts(&data.d)),
            ("D fitted", pts(&model.d)),
        ],
    );
    ctx.write("fit.svg", chart.as_bytes())?;

    ctx.write_json(
        "result.json",
        &Report {
            free: args.free.clone(),
            q_best: res.q_best.clone(),
            j_best: res.j_best,
            sum_data_sq: data.sum_of_squares(),
            evaluations: res.evaluations,
            budget: cfg.budget(),
            passes: res.passes,
            cell_size: res.cell_size.clone(),
            b_min: cfg.b_min.clone(),
            b_max: cfg.b_max.clone(),
            failures: res.failures.len(),
            failure_samples: res
                .failures
                .iter()
                .take(20)
                .map(|(q, m)| format!("{q:?}: {m}"))
                .collect(),
            params: named_params(&best.params),
        },
    )?;
    for (name, v) in args.free.iter().zip(&res.q_best) {
        eprintln!("{name} = {v:e}");
    }
    eprintln!(
        "J_best = {:e} after {} evaluations ({} failed)",
        res.j_best,
        res.evaluations,
        res.failures.len()
    );
    Ok(())
}
