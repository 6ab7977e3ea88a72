use serde::Serialize;
use seirhcd_core::observations::{add_noise, extract_observables, SourceConfig};
use std::collections::BTreeMap;


use super::{all_days, csv_bytes, load_scenario, load_source, resolve_days};
use crate::args::{Common, SynthArgs};
use crate::error::{CliError, Result};
use crate::manifest::RunContext;

#[derive(Debug, Serialize)]
struct Truth {
    params: BTreeMap<String, f64>,
    source: Option<SourceConfig>,
    noise: f64,
    noise_seed: u64,
}

pub fn run(ctx: &mut RunContext, common: &Common, args: &SynthArgs) -> Result<()> {
    let mut sc = load_scenario(ctx, common)?;
    if let Some(p) = &args.source {
        sc.source = Some(load_source(ctx, p)?);
    }
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(CliError::config(format!("--noise must be ≥ 0, got {}", args.noise)));
    }
    let days = resolve_days(common, all_days(sc.t_end, 1), sc.t_end)?;
    let run = sc.run()?;
    let mut series = extract_observables(&run, &sc.params, &days)?;
    let noise_seed = ctx.next_seed();
    add_noise(&mut series, args.noise, noise_seed);
    let bytes = csv_bytes(|buf| Ok(series.write_csv(buf)?))?;
    ctx.write("observations.csv", &bytes)?;
    ctx.write_json(
        "truth.json",
        &Truth {
            params: super::named_params(&sc.params),
            source: sc.source,
            noise: args.noise,
            noise_seed,
        },
    )?;
    eprintln!("{} days written, noise {}", days.len(), args.noise);
    Ok(())
}
