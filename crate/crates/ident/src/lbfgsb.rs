//! Limited-memory BFGS restricted to a box by gradient projection.
//!
//! Variables sitting on a bound with the gradient pushing outward are frozen
//! for the step; the quasi-Newton direction acts on the rest and the trial
//! point is projected back into the box before the Armijo test.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsbOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient max-norm falls below this.
    pub pg_tol: f64,
    /// Stop when the relative decrease of `f` over one step falls below this.
    pub f_rel_tol: f64,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        Self {
            memory: 7,
            max_iter: 200,
            pg_tol: 1e-6,
            f_rel_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| ((x[i] - g[i]).clamp(lo[i], hi[i]) - x[i]).abs())
        .fold(0.0, f64::max)
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y) in mem.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((a, rho));
    }
    if let Some((s, y)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y), (a, rho)) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += si * (a - b);
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Minimizes `f` over `[lo, hi]` starting from `x0`. The objective returns
/// the value and gradient, or `None` where it cannot be evaluated; the line
/// search then backs off.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: LbfgsbOptions,
) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        if projected_gradient_norm(&x, &g, lo, hi) < opts.pg_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let frozen: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0))
            .collect();
        let masked = |d: &mut Vec<f64>| {
            for i in 0..n {
                if frozen[i] {
                    d[i] = 0.0;
                }
            }
        };

        let mut step = None;
        for attempt in 0..2 {
            let mut d = if attempt == 0 && !mem.is_empty() {
                two_loop(&g, &mem)
            } else {
                mem.clear();
                g.iter().map(|v| -v).collect()
            };
            masked(&mut d);
            if dot(&g, &d) >= 0.0 {
                mem.clear();
                continue;
            }
            let mut t = if mem.is_empty() {
                let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (1.0 / gmax).min(1.0)
            } else {
                1.0
            };
            for _ in 0..40 {
                let mut xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                project(&mut xt, lo, hi);
                let moved: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
                if moved.iter().all(|v| *v == 0.0) {
                    break;
                }
                evaluations += 1;
                if let Some((ft, gt)) = f(&xt) {
                    if ft.is_finite() && ft <= fx + 1e-4 * dot(&g, &moved) {
                        step = Some((xt, ft, gt));
                        break;
                    }
                }
                t *= 0.5;
            }
            if step.is_some() {
                break;
            }
        }
        let Some((xn, fn_, gn)) = step else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            mem.push_back((s, y));
            if mem.len() > opts.memory {
                mem.pop_front();
            }
        }
        let decrease = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if decrease <= opts.f_rel_tol * fx.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Some(Minimum {
        x,
        f: fx,
        iterations,
        evaluations,
        converged,
    })
}
