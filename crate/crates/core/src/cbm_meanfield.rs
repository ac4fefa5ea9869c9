//! Naive mean-field approximation of classical third-order models.
//!
//! The e-projection of `p` onto the product family is a critical point of
//! `m̄ ↦ D(p_h̄ ‖ p)`.  Setting its gradient to zero gives
//!
//! ```text
//! tanh⁻¹(m̄_i) = h_i + Σ_{j≠i} w_ij m̄_j + Σ_{{j,k}∌i} v_ijk m̄_j m̄_k
//! ```
//!
//! where the triple sum runs over unordered pairs `{j, k}` disjoint from `i`,
//! each counted once (the exact derivative of `Σ_{i<j<k} v_ijk m̄_i m̄_j m̄_k`).
//! The m-projection instead matches first moments exactly.

use crate::cbm::{
    check_mean, exact_moments_classical, kl_product_with_psi, log_partition_classical,
    CbmParams, ProductCoords, CLASSICAL_SITE_CAP,
};
use crate::error::{Error, Result};
use crate::numeric::atanh_clamped;
use crate::rng::SeededRng;
use crate::solver::{solve_fixed_point, DampedIteration, FixedPointProblem, SolveReport, SolverConfig};

/// Effective field `h_i + Σ w_ij m̄_j + Σ v_ijk m̄_j m̄_k` at every site.
pub fn effective_field_classical(p: &CbmParams, m: &[f64]) -> Vec<f64> {
    let mut field = p.fields().to_vec();
    for ((i, j), w) in p.pair_couplings() {
        field[i] += w * m[j];
        field[j] += w * m[i];
    }
    for ((i, j, k), v) in p.triple_couplings() {
        field[i] += v * m[j] * m[k];
        field[j] += v * m[i] * m[k];
        field[k] += v * m[i] * m[j];
    }
    field
}

/// Stationarity residual `r_i = h̄_i − field_i(m̄)`.
///
/// Natural-chart input uses `h̄` directly; mean-chart input requires `|m̄_i| < 1`.
pub fn mf_residual_classical(p: &CbmParams, c: &ProductCoords) -> Result<Vec<f64>> {
    if c.n() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: c.n(),
        });
    }
    let (hbar, m) = match c {
        ProductCoords::Natural(h) => (h.clone(), c.mean()?),
        ProductCoords::Mean(m) => {
            for &x in m {
                check_mean(x)?;
            }
            (c.natural()?, m.clone())
        }
    };
    let field = effective_field_classical(p, &m);
    Ok(hbar.iter().zip(field).map(|(h, f)| h - f).collect())
}

fn stationarity_sup(p: &CbmParams, m: &[f64]) -> f64 {
    let field = effective_field_classical(p, m);
    m.iter()
        .zip(field)
        .map(|(&x, f)| (atanh_clamped(x) - f).abs())
        .fold(0.0, f64::max)
}

/// The mean-field map `m̄ ↦ tanh(field(m̄))`.
pub fn mean_field_map(p: &CbmParams, m: &[f64]) -> Vec<f64> {
    effective_field_classical(p, m)
        .into_iter()
        .map(f64::tanh)
        .collect()
}

/// Damped iterates of the classical mean-field map from `init`.
pub fn classical_iterates(
    p: &CbmParams,
    init: Vec<f64>,
    damping: f64,
) -> DampedIteration<impl Fn(&[f64]) -> Vec<f64> + '_> {
    DampedIteration::new(init, damping, move |m: &[f64]| mean_field_map(p, m))
}

fn random_start(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    (0..n).map(|_| rng.symmetric()).collect()
}

/// Solves the naive mean-field equations by damped iteration.
///
/// With `cfg.restarts > 0` the extra seeded starts are run as well and the
/// converged run with least `D(p_h̄ ‖ p)` is returned.  The divergence is
/// recorded in the report whenever `n ≤ CLASSICAL_SITE_CAP`.
pub fn solve_naive_mf_classical(
    p: &CbmParams,
    cfg: &SolverConfig,
) -> Result<(ProductCoords, SolveReport)> {
    let n = p.n();
    let psi = if n <= CLASSICAL_SITE_CAP {
        Some(log_partition_classical(p)?)
    } else {
        None
    };
    let random_init = |seed: u64| random_start(n, seed);
    let check_init = |x: &[f64]| -> Result<()> {
        for &v in x {
            if !(v.abs() <= 1.0) {
                return Err(Error::OutsideUnitBall(v.abs()));
            }
        }
        Ok(())
    };
    let map = |m: &[f64]| mean_field_map(p, m);
    let residual = |m: &[f64]| stationarity_sup(p, m);
    let objective = psi.map(|psi| move |m: &[f64]| kl_product_with_psi(m, p, psi));
    let problem = FixedPointProblem {
        local_field: p.fields().iter().map(|h| h.tanh()).collect(),
        random_init: &random_init,
        check_init: &check_init,
        map: &map,
        residual: &residual,
        objective: objective
            .as_ref()
            .map(|f| f as &(dyn Fn(&[f64]) -> f64 + Sync)),
    };
    let (m, report) = solve_fixed_point(&problem, cfg)?;
    Ok((ProductCoords::Mean(m), report))
}

/// e-projection of `p` onto the product family: the naive mean-field
/// solution, with `D(p_h̄ ‖ p)` at the returned point in `report.objective`.
pub fn e_project_classical(
    p: &CbmParams,
    cfg: &SolverConfig,
) -> Result<(ProductCoords, SolveReport)> {
    solve_naive_mf_classical(p, cfg)
}

/// m-projection of `p` onto the product family: `m̄_i = E_p[x_i]`, exactly.
pub fn m_project_classical(p: &CbmParams) -> Result<ProductCoords> {
    Ok(ProductCoords::Mean(exact_moments_classical(p)?.m().to_vec()))
}
