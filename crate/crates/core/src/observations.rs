//! Initial sources, daily observables, the misfit functional and synthetic data.

use std::fmt;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::fdm::solve_fdm;
use crate::fem::solve_fem;
use crate::params::ModelParams;
use crate::state::{Compartment, GridSpec, StateField, StatePoint};
use crate::trajectory::{fmt_num, SolverKind, SolverRun};

/// Quartic-exponent bump `a · exp(-(x - b)⁴ / c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cap {
    /// Amplitude (density).
    pub a: f64,
    /// Center in `[0, 1]`.
    pub b: f64,
    /// Width, `> 0`.
    pub c: f64,
}

impl Cap {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.b;
        let d2 = d * d;
        self.a * (-(d2 * d2) / self.c).exp()
    }
}

/// Unknowns of the source problem: three caps each for `s` and `e`, plus a
/// uniform initial infected density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub s_caps: [Cap; 3],
    pub e_caps: [Cap; 3],
    pub i0: f64,
}

/// Names of the 19 source coordinates in vector order.
pub const SOURCE_COORDINATES: [&str; 19] = [
    "s1.a", "s1.b", "s1.c", "s2.a", "s2.b", "s2.c", "s3.a", "s3.b", "s3.c", "e1.a", "e1.b",
    "e1.c", "e2.a", "e2.b", "e2.c", "e3.a", "e3.b", "e3.c", "i0",
];

impl SourceConfig {
    /// Three-cap source used as ground truth for synthetic experiments: a broad
    /// background population near the origin, a city at 0.35 and a small dense
    /// settlement at 0.735, with one exposed focus at 0.75.
    pub fn reference() -> Self {
        Self {
            s_caps: [
                Cap::new(1.0, 0.0, 1.0),
                Cap::new(0.9, 0.35, 1e-3),
                Cap::new(0.25, 0.735, 1e-5),
            ],
            e_caps: [
                Cap::new(0.05, 0.75, 1e-5),
                Cap::new(0.0, 0.5, 1e-5),
                Cap::new(0.0, 0.5, 1e-5),
            ],
            i0: 3508.0 / crate::params::NOVOSIBIRSK_POPULATION as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (label, caps) in [("s", &self.s_caps), ("e", &self.e_caps)] {
            for (k, cap) in caps.iter().enumerate() {
                let name = format!("{label}{}", k + 1);
                if !(cap.a.is_finite() && cap.a >= 0.0) {
                    return Err(ModelError::InvalidSource(format!(
                        "{name}.a must be ≥ 0, got {}",
                        cap.a
                    )));
                }
                if !(0.0..=1.0).contains(&cap.b) {
                    return Err(ModelError::InvalidSource(format!(
                        "{name}.b must lie in [0, 1], got {}",
                        cap.b
                    )));
                }
                if !(cap.c.is_finite() && cap.c > 0.0) {
                    return Err(ModelError::InvalidSource(format!(
                        "{name}.c must be > 0, got {}",
                        cap.c
                    )));
                }
            }
        }
        if !(self.i0.is_finite() && self.i0 >= 0.0) {
            return Err(ModelError::InvalidSource(format!(
                "i0 must be ≥ 0, got {}",
                self.i0
            )));
        }
        Ok(())
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(19);
        for cap in self.s_caps.iter().chain(&self.e_caps) {
            v.extend([cap.a, cap.b, cap.c]);
        }
        v.push(self.i0);
        v
    }

    pub fn from_vector(v: &[f64]) -> Result<Self> {
        if v.len() != 19 {
            return Err(ModelError::InvalidSource(format!(
                "expected 19 coordinates, got {}",
                v.len()
            )));
        }
        let cap = |k: usize| Cap::new(v[3 * k], v[3 * k + 1], v[3 * k + 2]);
        Ok(Self {
            s_caps: [cap(0), cap(1), cap(2)],
            e_caps: [cap(3), cap(4), cap(5)],
            i0: v[18],
        })
    }

    pub fn coordinate_index(name: &str) -> Option<usize> {
        SOURCE_COORDINATES.iter().position(|&n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::coordinate_index(name).map(|k| self.to_vector()[k])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let k = Self::coordinate_index(name)
            .ok_or_else(|| ModelError::InvalidSource(format!("unknown coordinate `{name}`")))?;
        let mut v = self.to_vector();
        v[k] = value;
        *self = Self::from_vector(&v)?;
        Ok(())
    }

    pub fn s_at(&self, x: f64) -> f64 {
        self.s_caps.iter().map(|c| c.eval(x)).sum()
    }

    pub fn e_at(&self, x: f64) -> f64 {
        self.e_caps.iter().map(|c| c.eval(x)).sum()
    }
}

impl fmt::Display for SourceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_vector();
        write!(f, "[")?;
        for (k, x) in v.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}={x:e}", SOURCE_COORDINATES[k])?;
        }
        write!(f, "]")
    }
}

/// Initial field from a source configuration: `s` and `e` from the cap sums,
/// `i ≡ i0`, and `r, h, c, d` from the constant densities in `fixed`.
pub fn eval_initial_field(src: &SourceConfig, grid: &GridSpec, fixed: &StatePoint) -> StateField {
    let mut u = StateField::zeros(grid.n_x);
    for k in 0..grid.nodes() {
        let x = grid.x(k);
        u.set_point(
            k,
            StatePoint {
                s: src.s_at(x),
                e: src.e_at(x),
                i: src.i0,
                ..*fixed
            },
        );
    }
    u
}

/// The six-term susceptible profile and single exposed focus of the
/// reference scenario; `i, r, h, c, d` come from `fixed`.
pub fn reference_initial_field(grid: &GridSpec, fixed: &StatePoint) -> StateField {
    let quartic = |x: f64, b: f64| Cap::new(1.0, b, 1e-5).eval(x);
    let mut u = StateField::zeros(grid.n_x);
    for k in 0..grid.nodes() {
        let x = grid.x(k);
        let s = (-(x + 1.0).powi(4)).exp()
            + (-(x - 0.35).powi(2) / 1e-2).exp()
            + (quartic(x, 0.62) + quartic(x, 0.52) + quartic(x, 0.42)) / 8.0
            + quartic(x, 0.735) / 4.0;
        let e = quartic(x, 0.75) / 20.0;
        u.set_point(
            k,
            StatePoint {
                s,
                e,
                ..*fixed
            },
        );
    }
    u
}

/// Scalar daily observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    I,
    C,
    D,
    H,
    R,
}

impl Observable {
    pub const ALL: [Observable; 5] = [
        Observable::I,
        Observable::C,
        Observable::D,
        Observable::H,
        Observable::R,
    ];

    pub fn compartment(self) -> Compartment {
        match self {
            Observable::I => Compartment::I,
            Observable::C => Compartment::C,
            Observable::D => Compartment::D,
            Observable::H => Compartment::H,
            Observable::R => Compartment::R,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Observable::I => "I",
            Observable::C => "C",
            Observable::D => "D",
            Observable::H => "H",
            Observable::R => "R",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "I" => Ok(Observable::I),
            "C" => Ok(Observable::C),
            "D" => Ok(Observable::D),
            "H" => Ok(Observable::H),
            "R" => Ok(Observable::R),
            other => Err(format!("unknown observable `{other}` (expected I, C, D, H or R)")),
        }
    }
}

/// Per-day counts in persons.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSeries {
    pub days: Vec<u32>,
    pub i: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub h: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
}

impl ObservationSeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn get(&self, o: Observable) -> Option<&[f64]> {
        match o {
            Observable::I => Some(&self.i),
            Observable::C => Some(&self.c),
            Observable::D => Some(&self.d),
            Observable::H => self.h.as_deref(),
            Observable::R => self.r.as_deref(),
        }
    }

    fn columns_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut cols = vec![&mut self.i, &mut self.c, &mut self.d];
        if let Some(h) = self.h.as_mut() {
            cols.push(h);
        }
        if let Some(r) = self.r.as_mut() {
            cols.push(r);
        }
        cols
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.days.len();
        let lens = [
            Some(self.i.len()),
            Some(self.c.len()),
            Some(self.d.len()),
            self.h.as_ref().map(Vec::len),
            self.r.as_ref().map(Vec::len),
        ];
        if lens.iter().flatten().any(|&l| l != n) {
            return Err(ModelError::InvalidObservations(
                "columns have unequal lengths".into(),
            ));
        }
        if self.days.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidObservations(
                "days must be strictly increasing".into(),
            ));
        }
        for o in Observable::ALL {
            if let Some(col) = self.get(o) {
                if col.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(ModelError::InvalidObservations(format!(
                        "column {o} has negative or non-finite entries"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Σ data²` over the I, C and D columns.
    pub fn sum_of_squares(&self) -> f64 {
        self.i
            .iter()
            .chain(&self.c)
            .chain(&self.d)
            .map(|v| v * v)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["day", "I", "C", "D"];
        if self.h.is_some() {
            header.push("H");
        }
        if self.r.is_some() {
            header.push("R");
        }
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut rec = vec![
                self.days[k].to_string(),
                fmt_num(self.i[k]),
                fmt_num(self.c[k]),
                fmt_num(self.d[k]),
            ];
            if let Some(h) = &self.h {
                rec.push(fmt_num(h[k]));
            }
            if let Some(r) = &self.r {
                rec.push(fmt_num(r[k]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `day,I,C,D[,H,R]`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let base = ["day", "I", "C", "D"];
        if header.len() < 4 || header[..4] != base {
            return Err(ModelError::InvalidObservations(format!(
                "expected header day,I,C,D[,H,R], got {}",
                header.join(",")
            )));
        }
        let extra = &header[4..];
        let (has_h, has_r) = match extra.iter().map(String::as_str).collect::<Vec<_>>()[..] {
            [] => (false, false),
            ["H"] => (true, false),
            ["R"] => (false, true),
            ["H", "R"] => (true, true),
            _ => {
                return Err(ModelError::InvalidObservations(format!(
                    "unexpected columns after day,I,C,D: {}",
                    extra.join(",")
                )))
            }
        };
        let mut out = ObservationSeries {
            h: has_h.then(Vec::new),
            r: has_r.then(Vec::new),
            ..Default::default()
        };
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |col: &str| {
                ModelError::InvalidObservations(format!(
                    "row {}: cannot parse column {col}",
                    line + 2
                ))
            };
            out.days
                .push(rec[0].trim().parse().map_err(|_| bad("day"))?);
            let num = |k: usize, col: &str| -> Result<f64> {
                rec[k].trim().parse::<f64>().map_err(|_| bad(col))
            };
            out.i.push(num(1, "I")?);
            out.c.push(num(2, "C")?);
            out.d.push(num(3, "D")?);
            let mut k = 4;
            if let Some(h) = out.h.as_mut() {
                h.push(num(k, "H")?);
                k += 1;
            }
            if let Some(r) = out.r.as_mut() {
                r.push(num(k, "R")?);
            }
        }
        out.validate()?;
        Ok(out)
    }
}

/// `N · ∫₀¹ u(x, t_k) dx` (trapezoid rule) for I, C, D, H and R on each day.
pub fn extract_observables(
    run: &SolverRun,
    p: &ModelParams,
    days: &[u32],
) -> Result<ObservationSeries> {
    let n = p.population_f64();
    let mut out = ObservationSeries {
        days: days.to_vec(),
        h: Some(Vec::with_capacity(days.len())),
        r: Some(Vec::with_capacity(days.len())),
        ..Default::default()
    };
    for &day in days {
        let field = run.at_day(day).ok_or(ModelError::MissingSnapshot(day))?;
        out.i.push(n * field.integral(Compartment::I));
        out.c.push(n * field.integral(Compartment::C));
        out.d.push(n * field.integral(Compartment::D));
        out.h.as_mut().unwrap().push(n * field.integral(Compartment::H));
        out.r.as_mut().unwrap().push(n * field.integral(Compartment::R));
    }
    Ok(out)
}

/// Everything but the sources: parameters, grid, constant background
/// densities for `r, h, c, d`, and the solver.
#[derive(Debug, Clone)]
pub struct ForwardSetup {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub background: StatePoint,
    pub solver: SolverKind,
}

impl ForwardSetup {
    pub fn run(&self, src: &SourceConfig) -> Result<SolverRun> {
        src.validate()?;
        let init = eval_initial_field(src, &self.grid, &self.background);
        let out = match self.solver {
            SolverKind::Fdm => solve_fdm(&self.params, &init, &self.grid),
            SolverKind::Fem => solve_fem(&self.params, &init, &self.grid),
        };
        out.map_err(|e| ModelError::ForwardFailed {
            source_desc: src.to_string(),
            inner: Box::new(e),
        })
    }

    pub fn observe(&self, src: &SourceConfig, days: &[u32]) -> Result<ObservationSeries> {
        let run = self.run(src)?;
        extract_observables(&run, &self.params, days)
    }
}

/// `Σ_k |I(t_k) − I_k|² + |C(t_k) − C_k|² + |D(t_k) − D_k|²`.
pub fn misfit(q: &SourceConfig, data: &ObservationSeries, setup: &ForwardSetup) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let model = setup.observe(q, &data.days)?;
    Ok(misfit_between(&model, data))
}

/// The quadratic functional between two aligned series.
pub fn misfit_between(model: &ObservationSeries, data: &ObservationSeries) -> f64 {
    let sq = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum() };
    sq(&model.i, &data.i) + sq(&model.c, &data.c) + sq(&model.d, &data.d)
}

/// Expected misfit at the truth under multiplicative noise: `Σ (noise_rel · data)²`.
pub fn noise_floor(data: &ObservationSeries, noise_rel: f64) -> f64 {
    noise_rel * noise_rel * data.sum_of_squares()
}

/// Forward observables perturbed by multiplicative Gaussian noise
/// `(1 + noise_rel · ξ)`, clipped at zero.
pub fn synthesize_data(
    q_true: &SourceConfig,
    setup: &ForwardSetup,
    days: &[u32],
    noise_rel: f64,
    seed: u64,
) -> Result<ObservationSeries> {
    if !(noise_rel >= 0.0 && noise_rel.is_finite()) {
        return Err(ModelError::InvalidObservations(format!(
            "noise_rel must be ≥ 0, got {noise_rel}"
        )));
    }
    let mut out = setup.observe(q_true, days)?;
    add_noise(&mut out, noise_rel, seed);
    Ok(out)
}

pub fn add_noise(series: &mut ObservationSeries, noise_rel: f64, seed: u64) {
    if noise_rel == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for col in series.columns_mut() {
        for v in col.iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *v = (*v * (1.0 + noise_rel * xi)).max(0.0);
        }
    }
}

/// Indices of local maxima whose topographic prominence is at least
/// `rel_prominence` times the series maximum. End points never count.
pub fn prominent_peaks(series: &[f64], rel_prominence: f64) -> Vec<usize> {
    let n = series.len();
    let top = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_prom = rel_prominence * top.abs();
    let mut peaks = Vec::new();
    for k in 1..n.saturating_sub(1) {
        let v = series[k];
        if !(series[k - 1] < v && series[k + 1] <= v) {
            continue;
        }
        let mut left_min = v;
        for &w in series[..k].iter().rev() {
            if w > v {
                break;
            }
            left_min = left_min.min(w);
        }
        let mut right_min = v;
        for &w in &series[k + 1..] {
            if w > v {
                break;
            }
            right_min = right_min.min(w);
        }
        if v - left_min.max(right_min) >= min_prom {
            peaks.push(k);
        }
    }
    peaks
}
