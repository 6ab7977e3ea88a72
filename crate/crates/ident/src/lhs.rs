//! Latin hypercube designs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::ParameterBounds;
use crate::error::Result;

/// `n` points in the bounds box with exactly one point per stratum in every
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LhcDesign {
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
}

pub fn lhc_sample(bounds: &ParameterBounds, n: usize, seed: u64) -> Result<LhcDesign> {
    bounds.validate()?;
    let k = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = vec![vec![0.0; k]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for d in 0..k {
        perm.shuffle(&mut rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let jitter: f64 = rng.random();
            unit[i][d] = (stratum as f64 + jitter) / n as f64;
        }
    }
    let points = unit.iter().map(|u| bounds.from_unit(u)).collect();
    Ok(LhcDesign { points, seed })
}
