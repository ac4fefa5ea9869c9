//! Damped fixed-point iteration shared by the classical and quantum
//! mean-field solvers.
//!
//! The update is `x ← (1-λ)x + λ G(x)`.  A run stops once the sup-norm step
//! and the stationarity residual are both at most `tol`, or after `max_iter`
//! updates.  Non-convergence is reported, never raised.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Starting point of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// All magnetizations zero.
    Zero,
    /// The model's own fields mapped to the mean chart (`tanh(h_i)` classically).
    LocalField,
    /// Explicit mean-chart coordinates, flattened; quantum models use `(site, s)` order.
    Explicit(Vec<f64>),
    /// Seeded uniform draw inside the mean-chart domain.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Extra runs from seeded random starts; the best run is returned.
    pub restarts: usize,
    /// Base seed of the restart starts (`seed + r` for restart `r`).
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 10_000,
            init: Init::LocalField,
            restarts: 0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping {} not in (0, 1]",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol {} not positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Convergence evidence for one solver call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Final sup-norm of the stationarity residual.
    pub residual: f64,
    /// Divergence at the returned point, when the exact log-partition is computable.
    pub objective: Option<f64>,
}

/// Iterator over the damped iterates `x_1, x_2, …` of a map `G`.
pub struct DampedIteration<F> {
    state: Vec<f64>,
    damping: f64,
    map: F,
}

impl<F> DampedIteration<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(init: Vec<f64>, damping: f64, map: F) -> Self {
        Self {
            state: init,
            damping,
            map,
        }
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }
}

impl<F> Iterator for DampedIteration<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let g = (self.map)(&self.state);
        let lambda = self.damping;
        for (x, gx) in self.state.iter_mut().zip(g) {
            *x = if lambda == 1.0 {
                gx
            } else {
                (1.0 - lambda) * *x + lambda * gx
            };
        }
        Some(self.state.clone())
    }
}

pub(crate) fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |acc, d| if d.is_nan() { f64::NAN } else { acc.max(d) })
}

/// One damped run from `init`.
pub(crate) fn run_damped<F, R>(
    init: Vec<f64>,
    cfg: &SolverConfig,
    map: F,
    residual: R,
) -> (Vec<f64>, SolveReport)
where
    F: Fn(&[f64]) -> Vec<f64>,
    R: Fn(&[f64]) -> f64,
{
    let mut iter = DampedIteration::new(init, cfg.damping, map);
    let mut prev = iter.state().to_vec();
    for k in 1..=cfg.max_iter {
        let next = iter.next().expect("damped iteration is infinite");
        let step = sup_norm_diff(&next, &prev);
        if step.is_nan() {
            let r = residual(&next);
            return (
                next,
                SolveReport {
                    converged: false,
                    iterations: k,
                    residual: r,
                    objective: None,
                },
            );
        }
        if step <= cfg.tol {
            let r = residual(&next);
            if r <= cfg.tol {
                return (
                    next,
                    SolveReport {
                        converged: true,
                        iterations: k,
                        residual: r,
                        objective: None,
                    },
                );
            }
        }
        prev = next;
    }
    let r = residual(&prev);
    (
        prev,
        SolveReport {
            converged: false,
            iterations: cfg.max_iter,
            residual: r,
            objective: None,
        },
    )
}

type ScalarFn<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

/// Problem-specific pieces of a mean-field solve.
pub(crate) struct FixedPointProblem<'a> {
    pub local_field: Vec<f64>,
    pub random_init: &'a (dyn Fn(u64) -> Vec<f64> + Sync),
    pub check_init: &'a (dyn Fn(&[f64]) -> Result<()> + Sync),
    pub map: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub residual: &'a ScalarFn<'a>,
    pub objective: Option<&'a ScalarFn<'a>>,
}

/// Runs the configured start plus `cfg.restarts` seeded random starts and
/// returns the best run: converged before non-converged, then least
/// objective, then earliest start.
pub(crate) fn solve_fixed_point(
    problem: &FixedPointProblem<'_>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let dim = problem.local_field.len();
    let first = match &cfg.init {
        Init::Zero => vec![0.0; dim],
        Init::LocalField => problem.local_field.clone(),
        Init::Explicit(x) => {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            (problem.check_init)(x)?;
            x.clone()
        }
        Init::Random { seed } => (problem.random_init)(*seed),
    };
    let mut starts = vec![first];
    starts.extend((0..cfg.restarts as u64).map(|r| (problem.random_init)(cfg.seed.wrapping_add(r))));

    let runs: Vec<(Vec<f64>, SolveReport)> = starts
        .into_par_iter()
        .map(|x0| {
            let (x, mut report) = run_damped(x0, cfg, problem.map, problem.residual);
            report.objective = problem.objective.map(|f| f(&x));
            (x, report)
        })
        .collect();

    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, (_, a)), (ib, (_, b))| {
            let key = |r: &SolveReport| {
                let obj = r.objective.filter(|o| !o.is_nan()).unwrap_or(f64::INFINITY);
                (!r.converged, obj)
            };
            let (ca, oa) = key(a);
            let (cb, ob) = key(b);
            ca.cmp(&cb).then(oa.total_cmp(&ob)).then(ia.cmp(ib))
        })
        .map(|(_, run)| run)
        .expect("at least one start");
    Ok(best)
}
