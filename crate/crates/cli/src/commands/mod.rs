pub mod emulate;
pub mod invert;
pub mod sensitivity;
pub mod simulate;
pub mod synth;

use std::collections::BTreeMap;
use std::path::Path;

use seirhcd_core::observations::{ObservationSeries, SourceConfig};
use seirhcd_core::scenario::Scenario;
use seirhcd_core::{ModelParams, PARAMETER_NAMES};

use crate::args::Common;
use crate::error::{CliError, Result};
use crate::manifest::RunContext;

/// The scenario named by `--config` (bundled otherwise) with `--solver` applied.
pub fn load_scenario(ctx: &mut RunContext, common: &Common) -> Result<Scenario> {
    let mut sc = match &common.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::novosibirsk_2022(),
    };
    if let Some(s) = common.solver {
        sc.solver = s;
    }
    if let Some(p) = &common.config {
        ctx.add_input(p);
    }
    Ok(sc)
}

/// `--days` when given, `default` otherwise; sorted, deduplicated and
/// checked against the horizon.
pub fn resolve_days(common: &Common, default: Vec<u32>, t_end: f64) -> Result<Vec<u32>> {
    let mut days = common.days.clone().unwrap_or(default);
    days.sort_unstable();
    days.dedup();
    if days.is_empty() {
        return Err(CliError::config("--days: no days selected"));
    }
    let last = t_end.floor() as u32;
    if let Some(d) = days.iter().find(|&&d| d > last) {
        return Err(CliError::config(format!(
            "--days: day {d} is past the horizon t_end = {t_end}"
        )));
    }
    Ok(days)
}

pub fn all_days(t_end: f64, from: u32) -> Vec<u32> {
    (from..=t_end.floor() as u32).collect()
}

pub fn load_source(ctx: &mut RunContext, path: &Path) -> Result<SourceConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let src: SourceConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    src.validate()?;
    ctx.add_input(path);
    Ok(src)
}

pub fn load_observations(ctx: &mut RunContext, path: &Path) -> Result<ObservationSeries> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let series = ObservationSeries::read_csv(file)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    ctx.add_input(path);
    Ok(series)
}

pub fn csv_bytes<F>(write: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

/// Scalar parameters by name.
pub fn named_params(p: &ModelParams) -> BTreeMap<String, f64> {
    PARAMETER_NAMES
        .iter()
        .filter_map(|n| p.get(n).map(|v| (n.to_string(), v)))
        .collect()
}
