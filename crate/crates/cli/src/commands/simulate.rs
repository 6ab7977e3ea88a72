use serde::Serialize;
use seirhcd_core::Compartment;

use super::{all_days, csv_bytes, fmt_num, load_scenario, resolve_days};
use crate::args::{Common, SimulateArgs};
use crate::error::{CliError, Result};
use crate::manifest::RunContext;
use crate::svg;

#[derive(Debug, Serialize)]
struct Summary {
    solver: String,
    n_x: usize,
    n_t: usize,
    tau: f64,
    t_end: f64,
    peak_day: u32,
    peak_i: f64,
    final_i: f64,
    clamp_count: usize,
    final_totals: std::collections::BTreeMap<String, f64>,
}

pub fn run(ctx: &mut RunContext, common: &Common, args: &SimulateArgs) -> Result<()> {
    let sc = load_scenario(ctx, common)?;
    let days = resolve_days(common, all_days(sc.t_end, 0), sc.t_end)?;
    let run = sc.run()?;
    let n = sc.params.population_f64();

    let mut rows: Vec<(u32, [f64; 7])> = Vec::with_capacity(days.len());
    for &day in &days {
        let field = run
            .at_day(day)
            .ok_or_else(|| CliError::Numerical(format!("no snapshot for day {day}")))?;
        rows.push((day, Compartment::ALL.map(|c| n * field.integral(c))));
    }

    let names: Vec<String> = Compartment::ALL
        .iter()
        .map(|c| c.name().to_uppercase())
        .collect();
    let bytes = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["day".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        for (day, tot) in &rows {
            let mut rec = vec![day.to_string()];
            rec.extend(tot.iter().map(|v| fmt_num(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| CliError::config(e.to_string()))?;
        Ok(())
    })?;
    ctx.write("trajectory.csv", &bytes)?;

    if args.fields {
        let bytes = csv_bytes(|buf| Ok(run.write_csv(buf)?))?;
        ctx.write("fields.csv", &bytes)?;
    }

    let i_col = Compartment::I.index();
    let (peak_day, peak_i) = rows
        .iter()
        .map(|(d, t)| (*d, t[i_col]))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let last = rows.last().expect("at least one day");
    let grid = run.grid;
    let summary = Summary {
        solver: run.solver.name().to_string(),
        n_x: grid.n_x,
        n_t: grid.n_t,
        tau: grid.tau(),
        t_end: grid.t_end,
        peak_day,
        peak_i,
        final_i: last.1[i_col],
        clamp_count: run.clamp_count,
        final_totals: names.iter().cloned().zip(last.1).collect(),
    };
    ctx.write_json("summary.json", &summary)?;

    let plotted = [Compartment::I, Compartment::H, Compartment::C, Compartment::D];
    let labels = ["I", "H", "C", "D"];
    let series: Vec<(&str, Vec<(f64, f64)>)> = plotted
        .iter()
        .zip(labels)
        .map(|(c, label)| {
            let k = c.index();
            (label, rows.iter().map(|(d, t)| (*d as f64, t[k])).collect())
        })
        .collect();
    let chart = svg::line_chart(
        &format!("Daily totals ({})", run.solver.name()),
        "day",
        &series,
    );
    ctx.write("trajectory.svg", chart.as_bytes())?;
    eprintln!(
        "{}: n_x = {}, n_t = {}, I peaks on day {peak_day} at {peak_i:.0}",
        run.solver.name(),
        grid.n_x,
        grid.n_t
    );
    Ok(())
}
