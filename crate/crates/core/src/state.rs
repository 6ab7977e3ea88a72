//! Compartment states: single points, fields on the spatial grid, and the grid itself.

use std::fmt;
use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compartment {
    S,
    E,
    I,
    R,
    H,
    C,
    D,
}

impl Compartment {
    pub const ALL: [Compartment; 7] = [
        Compartment::S,
        Compartment::E,
        Compartment::I,
        Compartment::R,
        Compartment::H,
        Compartment::C,
        Compartment::D,
    ];

    /// Compartments that move in space.
    pub const DIFFUSING: [Compartment; 4] =
        [Compartment::S, Compartment::E, Compartment::I, Compartment::R];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Compartment::S => "s",
            Compartment::E => "e",
            Compartment::I => "i",
            Compartment::R => "r",
            Compartment::H => "h",
            Compartment::C => "c",
            Compartment::D => "d",
        }
    }

    pub fn is_diffusing(self) -> bool {
        self.index() < 4
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Compartment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s" => Ok(Compartment::S),
            "e" => Ok(Compartment::E),
            "i" => Ok(Compartment::I),
            "r" => Ok(Compartment::R),
            "h" => Ok(Compartment::H),
            "c" => Ok(Compartment::C),
            "d" => Ok(Compartment::D),
            other => Err(format!("unknown compartment `{other}`")),
        }
    }
}

/// Values of all seven compartments at one location (densities) or for the
/// well-mixed system (counts).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StatePoint {
    pub s: f64,
    pub e: f64,
    pub i: f64,
    pub r: f64,
    pub h: f64,
    pub c: f64,
    pub d: f64,
}

impl StatePoint {
    pub const ZERO: StatePoint = StatePoint {
        s: 0.0,
        e: 0.0,
        i: 0.0,
        r: 0.0,
        h: 0.0,
        c: 0.0,
        d: 0.0,
    };

    #[inline]
    pub fn to_array(self) -> [f64; 7] {
        [self.s, self.e, self.i, self.r, self.h, self.c, self.d]
    }

    #[inline]
    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            s: a[0],
            e: a[1],
            i: a[2],
            r: a[3],
            h: a[4],
            c: a[5],
            d: a[6],
        }
    }

    pub fn get(&self, c: Compartment) -> f64 {
        self.to_array()[c.index()]
    }

    pub fn sum(&self) -> f64 {
        self.to_array().iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl Add for StatePoint {
    type Output = StatePoint;

    fn add(self, o: StatePoint) -> StatePoint {
        let (a, b) = (self.to_array(), o.to_array());
        StatePoint::from_array(std::array::from_fn(|k| a[k] + b[k]))
    }
}

impl Mul<f64> for StatePoint {
    type Output = StatePoint;

    fn mul(self, k: f64) -> StatePoint {
        StatePoint::from_array(self.to_array().map(|v| v * k))
    }
}

/// Space-time discretization of `[0, 1] × [0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Number of spatial intervals.
    pub n_x: usize,
    /// Number of time steps.
    pub n_t: usize,
    /// Horizon in days.
    pub t_end: f64,
}

impl GridSpec {
    pub fn new(n_x: usize, n_t: usize, t_end: f64) -> Result<Self> {
        let g = Self { n_x, n_t, t_end };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 2 {
            return Err(ModelError::InvalidGrid(format!(
                "n_x must be ≥ 2, got {}",
                self.n_x
            )));
        }
        if self.n_t < 1 {
            return Err(ModelError::InvalidGrid("n_t must be ≥ 1".into()));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(ModelError::InvalidGrid(format!(
                "t_end must be > 0, got {}",
                self.t_end
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.t_end / self.n_t as f64
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        k as f64 * self.h()
    }

    pub fn nodes(&self) -> usize {
        self.n_x + 1
    }

    /// Smallest number of time steps, rounded up to whole steps per day,
    /// such that `tau ≤ tau_max`.
    pub fn steps_for(t_end: f64, tau_max: f64) -> usize {
        if !tau_max.is_finite() {
            return t_end.ceil().max(1.0) as usize;
        }
        let per_day = (1.0 / tau_max).ceil().max(1.0);
        let n = (per_day * t_end).ceil();
        if t_end.fract() == 0.0 {
            n as usize
        } else {
            (t_end / tau_max).ceil().max(1.0) as usize
        }
    }
}

/// The seven compartment densities sampled at `x_k = k h`, `k = 0..=n_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    values: [Vec<f64>; 7],
}

impl StateField {
    pub fn zeros(n_x: usize) -> Self {
        Self {
            values: std::array::from_fn(|_| vec![0.0; n_x + 1]),
        }
    }

    pub fn uniform(n_x: usize, p: StatePoint) -> Self {
        let a = p.to_array();
        Self {
            values: std::array::from_fn(|c| vec![a[c]; n_x + 1]),
        }
    }

    pub fn from_arrays(values: [Vec<f64>; 7]) -> Result<Self> {
        let n = values[0].len();
        if n < 3 {
            return Err(ModelError::InvalidGrid(format!(
                "a field needs at least 3 nodes, got {n}"
            )));
        }
        if let Some(bad) = values.iter().find(|v| v.len() != n) {
            return Err(ModelError::GridMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.values[0].len()
    }

    #[inline]
    pub fn n_x(&self) -> usize {
        self.nodes() - 1
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n_x() as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.nodes()).map(|k| k as f64 * h).collect()
    }

    #[inline]
    pub fn get(&self, c: Compartment) -> &[f64] {
        &self.values[c.index()]
    }

    #[inline]
    pub fn get_mut(&mut self, c: Compartment) -> &mut [f64] {
        &mut self.values[c.index()]
    }

    pub fn arrays(&self) -> &[Vec<f64>; 7] {
        &self.values
    }

    pub(crate) fn arrays_mut(&mut self) -> &mut [Vec<f64>; 7] {
        &mut self.values
    }

    pub fn point(&self, k: usize) -> StatePoint {
        StatePoint::from_array(std::array::from_fn(|c| self.values[c][k]))
    }

    pub fn set_point(&mut self, k: usize, p: StatePoint) {
        for (c, v) in p.to_array().into_iter().enumerate() {
            self.values[c][k] = v;
        }
    }

    pub fn conforms_to(&self, grid: &GridSpec) -> Result<()> {
        if self.nodes() != grid.nodes() {
            return Err(ModelError::GridMismatch {
                expected: grid.nodes(),
                found: self.nodes(),
            });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 0.0)
    }

    /// Trapezoid-rule integral of one compartment over `[0, 1]`.
    pub fn integral(&self, c: Compartment) -> f64 {
        trapezoid(self.get(c), self.spacing())
    }
}

/// Pointwise total density `n(x) = s + e + i + r + h + c + d`.
pub fn total_density(u: &StateField) -> Vec<f64> {
    let mut n = vec![0.0; u.nodes()];
    for arr in u.arrays() {
        for (acc, v) in n.iter_mut().zip(arr) {
            *acc += v;
        }
    }
    n
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_has_zero_total_density() {
        let u = StateField::zeros(10);
        assert!(total_density(&u).iter().all(|&n| n == 0.0));
    }

    #[test]
    fn total_density_is_pointwise_sum() {
        let mut u = StateField::zeros(4);
        for (ci, c) in Compartment::ALL.into_iter().enumerate() {
            for (k, v) in u.get_mut(c).iter_mut().enumerate() {
                *v = (ci + 1) as f64 * 0.01 + k as f64 * 0.001;
            }
        }
        let n = total_density(&u);
        for (k, nk) in n.iter().enumerate() {
            let expected: f64 = (1..=7).map(|c| c as f64 * 0.01 + k as f64 * 0.001).sum();
            assert!((nk - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn trapezoid_is_exact_for_linear_data() {
        let h = 0.1;
        let v: Vec<f64> = (0..=10).map(|k| 2.0 + 3.0 * k as f64 * h).collect();
        assert!((trapezoid(&v, h) - 3.5).abs() < 1e-14);
    }

    #[test]
    fn grid_rejects_too_few_intervals() {
        assert!(GridSpec::new(1, 10, 1.0).is_err());
        assert!(GridSpec::new(2, 0, 1.0).is_err());
        assert!(GridSpec::new(2, 1, 0.0).is_err());
        let g = GridSpec::new(4, 8, 2.0).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.tau(), 0.25);
    }

    #[test]
    fn steps_for_rounds_to_whole_steps_per_day() {
        assert_eq!(GridSpec::steps_for(200.0, 0.3), 800);
        assert_eq!(GridSpec::steps_for(10.0, 1.0), 10);
        assert_eq!(GridSpec::steps_for(10.0, f64::INFINITY), 10);
    }

    #[test]
    fn compartment_parses_case_insensitively() {
        assert_eq!("D".parse::<Compartment>().unwrap(), Compartment::D);
        assert!("x".parse::<Compartment>().is_err());
    }
}
