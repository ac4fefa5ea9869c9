//! Naive mean-field approximation of quantum third-order models.
//!
//! For each site `i` and Pauli direction `s` the e-projection satisfies
//!
//! ```text
//! h̄_is = h_is + Σ_{j≠i} Σ_t w_ijst m̄_jt + Σ_{{j,k}∌i} Σ_{t,u} v_ijkstu m̄_jt m̄_ku
//! m̄_is = (h̄_is / ‖h̄_i‖) tanh ‖h̄_i‖
//! ```
//!
//! The solver iterates in the Bloch-vector chart.  On models whose only
//! terms are σ₃ products this reduces to the classical equations.

use crate::error::{Error, Result};
use crate::qbm::{
    first_moments, density_matrix, log_partition_quantum, product_energy, product_neg_entropy,
    site_mean, site_natural_clamped, norm3, QProductCoords, QbmParams,
};
use crate::rng::SeededRng;
use crate::solver::{solve_fixed_point, FixedPointProblem, SolveReport, SolverConfig};

fn effective_field(p: &QbmParams, m: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut field = p.fields().to_vec();
    for ((i, j), b) in p.pair_couplings() {
        for s in 0..3 {
            for t in 0..3 {
                field[i][s] += b[s][t] * m[j][t];
                field[j][t] += b[s][t] * m[i][s];
            }
        }
    }
    for ((i, j, k), b) in p.triple_couplings() {
        for s in 0..3 {
            for t in 0..3 {
                for u in 0..3 {
                    let v = b[s][t][u];
                    if v != 0.0 {
                        field[i][s] += v * m[j][t] * m[k][u];
                        field[j][t] += v * m[i][s] * m[k][u];
                        field[k][u] += v * m[i][s] * m[j][t];
                    }
                }
            }
        }
    }
    field
}

fn check_len(p: &QbmParams, c: &QProductCoords) -> Result<()> {
    if c.n() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: c.n(),
        });
    }
    Ok(())
}

/// Effective fields `h̄(m̄)` of the quantum mean-field equations.
pub fn q_effective_field(p: &QbmParams, c: &QProductCoords) -> Result<QProductCoords> {
    check_len(p, c)?;
    Ok(QProductCoords::Natural(effective_field(p, &c.mean()?)))
}

fn to_sites(x: &[f64]) -> Vec<[f64; 3]> {
    x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// `m̄ ↦ qproduct_to_mean(h̄(m̄))` on flattened `(site, s)` coordinates.
pub fn quantum_mean_field_map(p: &QbmParams, m: &[f64]) -> Vec<f64> {
    effective_field(p, &to_sites(m))
        .iter()
        .flat_map(site_mean)
        .collect()
}

/// Sup-norm over `(i, s)` of both stationarity equations.
fn stationarity_sup(p: &QbmParams, m: &[f64]) -> f64 {
    let m = to_sites(m);
    let field = effective_field(p, &m);
    let mut sup: f64 = 0.0;
    for (mi, fi) in m.iter().zip(&field) {
        let hbar = site_natural_clamped(mi);
        let mbar = site_mean(fi);
        for s in 0..3 {
            sup = sup.max((hbar[s] - fi[s]).abs()).max((mi[s] - mbar[s]).abs());
        }
    }
    sup
}

fn random_start(n: usize, seed: u64) -> Vec<f64> {
    // each component in [-1/√3, 1/√3) keeps every Bloch vector inside the ball
    let mut rng = SeededRng::new(seed);
    let scale = 1.0 / 3f64.sqrt();
    (0..3 * n).map(|_| scale * rng.symmetric()).collect()
}

/// `D(τ_h̄ ‖ ρ)` from precomputed `ψ(h, w, v)`.
pub(crate) fn kl_product_with_psi(m: &[[f64; 3]], p: &QbmParams, psi: f64) -> f64 {
    product_neg_entropy(m) - product_energy(p, m) + psi
}

/// `D(τ_h̄ ‖ ρ_{h,w,v}) = Tr[τ(log τ − log ρ)]` in closed form.
pub fn kl_product_to_qbm(c: &QProductCoords, p: &QbmParams) -> Result<f64> {
    check_len(p, c)?;
    let m = match c {
        QProductCoords::Mean(m) => {
            for mi in m {
                let r = norm3(mi);
                if !(r <= 1.0) {
                    return Err(Error::OutsideUnitBall(r));
                }
            }
            m.clone()
        }
        QProductCoords::Natural(_) => c.mean()?,
    };
    Ok(kl_product_with_psi(&m, p, log_partition_quantum(p)))
}

/// Solves the quantum naive mean-field equations by damped iteration.
///
/// `cfg.init` in explicit form is a flattened `(site, s)` vector of Bloch
/// vectors, each of norm at most 1.
pub fn solve_naive_mf_quantum(
    p: &QbmParams,
    cfg: &SolverConfig,
) -> Result<(QProductCoords, SolveReport)> {
    let n = p.n();
    let psi = log_partition_quantum(p);
    let random_init = |seed: u64| random_start(n, seed);
    let check_init = |x: &[f64]| -> Result<()> {
        for mi in to_sites(x) {
            let r = norm3(&mi);
            if !(r <= 1.0) {
                return Err(Error::OutsideUnitBall(r));
            }
        }
        Ok(())
    };
    let map = |m: &[f64]| quantum_mean_field_map(p, m);
    let residual = |m: &[f64]| stationarity_sup(p, m);
    let objective = |m: &[f64]| kl_product_with_psi(&to_sites(m), p, psi);
    let problem = FixedPointProblem {
        local_field: p.fields().iter().flat_map(site_mean).collect(),
        random_init: &random_init,
        check_init: &check_init,
        map: &map,
        residual: &residual,
        objective: Some(&objective),
    };
    let (m, report) = solve_fixed_point(&problem, cfg)?;
    Ok((QProductCoords::Mean(to_sites(&m)), report))
}

/// e-projection onto product states: the naive mean-field solution, with
/// `D(τ ‖ ρ)` at the returned point in `report.objective`.
pub fn e_project_quantum(
    p: &QbmParams,
    cfg: &SolverConfig,
) -> Result<(QProductCoords, SolveReport)> {
    solve_naive_mf_quantum(p, cfg)
}

/// m-projection onto product states: `m̄_is = Tr[ρ σ_is]`.
pub fn m_project_quantum(p: &QbmParams) -> Result<QProductCoords> {
    Ok(QProductCoords::Mean(first_moments(&density_matrix(p)?)))
}
