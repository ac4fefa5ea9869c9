//! Third-order quantum Boltzmann machines.
//!
//! A model on `n` spin-½ sites is the density matrix
//!
//! ```text
//! ρ = exp{ Σ h_is σ_is + Σ_{i<j} w_ijst σ_is σ_jt + Σ_{i<j<k} v_ijkstu σ_is σ_jt σ_ku − ψ }
//! ```
//!
//! with `ψ = log Tr exp{…}`.  The expectation coordinates are
//! `m_is = Tr[ρ σ_is]`, `μ_ijst = Tr[ρ σ_is σ_jt]` and
//! `ι_ijkstu = Tr[ρ σ_is σ_jt σ_ku]`.  Product states (`w = v = 0`) are
//! parametrized either by their fields `h̄_i ∈ ℝ³` or by their Bloch vectors
//! `m̄_i`, related by `m̄_i = tanh(‖h̄_i‖) h̄_i / ‖h̄_i‖`.

use crate::error::{Error, Result};
use crate::index::{self, num_pairs, num_triples, pair_index, triple_index};
use crate::numeric::{log_sum_exp, log_two_cosh, neumaier_sum, xlogx, MEAN_CLAMP};
use crate::tensor::{
    check_sites, herm_expm, trace_product, HermitianOperator, Pauli, PauliString, Spectrum,
};
use crate::cbm::CbmParams;

/// Pair coupling block `w_ij[s][t]`, indexed by Pauli slot.
pub type PairBlock = [[f64; 3]; 3];
/// Triple coupling block `v_ijk[s][t][u]`, indexed by Pauli slot.
pub type TripleBlock = [[[f64; 3]; 3]; 3];

/// Below this norm the `tanh(r)/r` and `tanh⁻¹(r)/r` factors use their series.
const SERIES_RADIUS: f64 = 1e-6;

/// Tolerance on `Tr ρ = 1` for density matrices.
pub const TRACE_TOL: f64 = 1e-10;

fn check_finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(x))
    }
}

/// Natural coordinates `(h, w, v)` of a third-order quantum model.
#[derive(Debug, Clone, PartialEq)]
pub struct QbmParams {
    n: usize,
    h: Vec<[f64; 3]>,
    w: Vec<PairBlock>,
    v: Vec<TripleBlock>,
}

impl QbmParams {
    pub fn zeros(n: usize) -> Result<Self> {
        check_sites(n)?;
        Ok(Self {
            n,
            h: vec![[0.0; 3]; n],
            w: vec![[[0.0; 3]; 3]; num_pairs(n)],
            v: vec![[[[0.0; 3]; 3]; 3]; num_triples(n)],
        })
    }

    /// Product state fields (`w = v = 0`).
    pub fn from_fields(h: &[[f64; 3]]) -> Result<Self> {
        let mut p = Self::zeros(h.len())?;
        for (i, hi) in h.iter().enumerate() {
            for s in Pauli::ALL {
                p.set_h(i, s, hi[s.slot()])?;
            }
        }
        Ok(p)
    }

    /// Embeds a classical model as a diagonal quantum model (σ₃ components only).
    pub fn from_classical(c: &CbmParams) -> Result<Self> {
        let mut p = Self::zeros(c.n())?;
        for i in 0..c.n() {
            p.h[i][2] = c.h(i);
        }
        for ((i, j), w) in c.pair_couplings() {
            p.w[pair_index(i, j)][2][2] = w;
        }
        for ((i, j, k), v) in c.triple_couplings() {
            p.v[triple_index(i, j, k)][2][2][2] = v;
        }
        Ok(p)
    }

    /// The σ₃ part as a classical model, if every other component is zero.
    pub fn to_classical(&self) -> Option<CbmParams> {
        let z = Pauli::Z.slot();
        let off_h = self.h.iter().any(|h| h[0] != 0.0 || h[1] != 0.0);
        let off_w = self.w.iter().any(|b| {
            (0..3).any(|s| (0..3).any(|t| (s, t) != (z, z) && b[s][t] != 0.0))
        });
        let off_v = self.v.iter().any(|b| {
            (0..3).any(|s| {
                (0..3).any(|t| (0..3).any(|u| (s, t, u) != (z, z, z) && b[s][t][u] != 0.0))
            })
        });
        if off_h || off_w || off_v {
            return None;
        }
        let mut c = CbmParams::zeros(self.n).ok()?;
        for i in 0..self.n {
            c.set_h(i, self.h[i][z]).ok()?;
        }
        for (i, j) in index::pairs(self.n) {
            c.set_w(i, j, self.w[pair_index(i, j)][z][z]).ok()?;
        }
        for (i, j, k) in index::triples(self.n) {
            c.set_v(i, j, k, self.v[triple_index(i, j, k)][z][z][z]).ok()?;
        }
        Some(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self, i: usize, s: Pauli) -> f64 {
        self.h[i][s.slot()]
    }

    pub fn fields(&self) -> &[[f64; 3]] {
        &self.h
    }

    /// `w_ijst`, read symmetrically (`w_jits = w_ijst`), zero for `i = j`.
    pub fn w(&self, i: usize, j: usize, s: Pauli, t: Pauli) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.w[pair_index(i, j)][s.slot()][t.slot()],
            std::cmp::Ordering::Greater => self.w[pair_index(j, i)][t.slot()][s.slot()],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// `v_ijkstu`, read with sites sorted and spins permuted alongside.
    pub fn v(&self, i: usize, j: usize, k: usize, s: Pauli, t: Pauli, u: Pauli) -> f64 {
        let mut sites = [i, j, k];
        let mut spins = [s, t, u];
        if index::canonicalize(usize::MAX, &mut sites, &mut spins).is_err() {
            return 0.0;
        }
        self.v[triple_index(sites[0], sites[1], sites[2])][spins[0].slot()][spins[1].slot()]
            [spins[2].slot()]
    }

    pub fn set_h(&mut self, i: usize, s: Pauli, value: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::SiteOutOfRange { site: i, n: self.n });
        }
        self.h[i][s.slot()] = check_finite(value)?;
        Ok(())
    }

    pub fn set_w(&mut self, i: usize, j: usize, s: Pauli, t: Pauli, value: f64) -> Result<()> {
        let mut sites = [i, j];
        let mut spins = [s, t];
        index::canonicalize(self.n, &mut sites, &mut spins)?;
        self.w[pair_index(sites[0], sites[1])][spins[0].slot()][spins[1].slot()] =
            check_finite(value)?;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn set_v(
        &mut self,
        i: usize,
        j: usize,
        k: usize,
        s: Pauli,
        t: Pauli,
        u: Pauli,
        value: f64,
    ) -> Result<()> {
        let mut sites = [i, j, k];
        let mut spins = [s, t, u];
        index::canonicalize(self.n, &mut sites, &mut spins)?;
        self.v[triple_index(sites[0], sites[1], sites[2])][spins[0].slot()][spins[1].slot()]
            [spins[2].slot()] = check_finite(value)?;
        Ok(())
    }

    /// Pair blocks for `i < j` in lexicographic order.
    pub fn pair_couplings(&self) -> impl Iterator<Item = ((usize, usize), &PairBlock)> + '_ {
        index::pairs(self.n).map(move |(i, j)| ((i, j), &self.w[pair_index(i, j)]))
    }

    /// Triple blocks for `i < j < k` in lexicographic order.
    pub fn triple_couplings(
        &self,
    ) -> impl Iterator<Item = ((usize, usize, usize), &TripleBlock)> + '_ {
        index::triples(self.n)
            .map(move |(i, j, k)| ((i, j, k), &self.v[triple_index(i, j, k)]))
    }

    /// Drops interactions above `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let mut p = self.clone();
        if order < 3 {
            p.v.iter_mut().for_each(|b| *b = [[[0.0; 3]; 3]; 3]);
        }
        if order < 2 {
            p.w.iter_mut().for_each(|b| *b = [[0.0; 3]; 3]);
        }
        p
    }

    /// Multiplies `w` and `v` by `factor`, leaving `h` unchanged.
    pub fn scale_couplings(&self, factor: f64) -> Self {
        let mut p = self.clone();
        for b in p.w.iter_mut().flatten().flatten() {
            *b *= factor;
        }
        for b in p.v.iter_mut().flatten().flatten().flatten() {
            *b *= factor;
        }
        p
    }
}

/// `H = Σ h σ + Σ w σσ + Σ v σσσ`, the exponent of the model.
pub fn qbm_hamiltonian(p: &QbmParams) -> HermitianOperator {
    let n = p.n;
    let mut m = HermitianOperator::zeros(n)
        .expect("validated site count")
        .into_matrix();
    for i in 0..n {
        for s in Pauli::ALL {
            let c = p.h[i][s.slot()];
            if c != 0.0 {
                PauliString::new(n, &[(i, s)])
                    .expect("valid site")
                    .add_scaled_to(c, &mut m);
            }
        }
    }
    for ((i, j), b) in p.pair_couplings() {
        for s in Pauli::ALL {
            for t in Pauli::ALL {
                let c = b[s.slot()][t.slot()];
                if c != 0.0 {
                    PauliString::new(n, &[(i, s), (j, t)])
                        .expect("distinct sites")
                        .add_scaled_to(c, &mut m);
                }
            }
        }
    }
    for ((i, j, k), b) in p.triple_couplings() {
        for s in Pauli::ALL {
            for t in Pauli::ALL {
                for u in Pauli::ALL {
                    let c = b[s.slot()][t.slot()][u.slot()];
                    if c != 0.0 {
                        PauliString::new(n, &[(i, s), (j, t), (k, u)])
                            .expect("distinct sites")
                            .add_scaled_to(c, &mut m);
                    }
                }
            }
        }
    }
    // Pauli strings on distinct sites are Hermitian, so the sum is exactly Hermitian.
    HermitianOperator::new(n, m).expect("sum of Hermitian Pauli strings")
}

/// A strictly positive, unit-trace Hermitian operator with its spectrum.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: HermitianOperator,
    spectrum: Spectrum,
}

impl DensityMatrix {
    /// Validates trace 1 (within [`TRACE_TOL`]) and strict positivity.
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let spectrum = op.eigen();
        Self::with_spectrum(op, spectrum)
    }

    fn with_spectrum(op: HermitianOperator, spectrum: Spectrum) -> Result<Self> {
        let trace = neumaier_sum(spectrum.values().iter().copied());
        if !((trace - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::TraceNotOne { trace });
        }
        let min = spectrum.values()[0];
        if !(min > 0.0) {
            return Err(Error::NotPositive { eigenvalue: min });
        }
        Ok(Self { op, spectrum })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn sites(&self) -> usize {
        self.op.sites()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.values()
    }

    /// `log ρ`.
    pub fn log(&self) -> HermitianOperator {
        self.spectrum.map(f64::ln)
    }

    /// `Tr ρ log ρ`.
    pub fn neg_entropy(&self) -> f64 {
        neumaier_sum(self.eigenvalues().iter().map(|&l| xlogx(l)))
    }

    /// `Re Tr[ρ P]` for a Pauli string.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        p.expectation(&self.op)
    }
}

/// `ψ = log Tr exp H`, from the spectrum of `H`.
pub fn log_partition_quantum(p: &QbmParams) -> f64 {
    let h = qbm_hamiltonian(p);
    let values: Vec<f64> = h.matrix().clone().symmetric_eigenvalues().iter().copied().collect();
    log_sum_exp(&values)
}

/// `ρ = exp(H − ψ I)`.
pub fn density_matrix(p: &QbmParams) -> Result<DensityMatrix> {
    let spec = qbm_hamiltonian(p).eigen();
    let psi = log_sum_exp(spec.values());
    let shifted = spec.with_values(spec.values().iter().map(|l| (l - psi).exp()).collect());
    let op = shifted.map(|x| x);
    DensityMatrix::with_spectrum(op, shifted)
}

/// Expectation coordinates `(m, μ, ι)` of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct QbmMoments {
    n: usize,
    m: Vec<[f64; 3]>,
    mu: Vec<PairBlock>,
    iota: Vec<TripleBlock>,
}

impl QbmMoments {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `Tr[ρ σ_is]`.
    pub fn m(&self, i: usize, s: Pauli) -> f64 {
        self.m[i][s.slot()]
    }

    /// Bloch vectors of all sites.
    pub fn first(&self) -> &[[f64; 3]] {
        &self.m
    }

    /// `Tr[ρ σ_is σ_jt]` for `i ≠ j`.
    pub fn mu(&self, i: usize, j: usize, s: Pauli, t: Pauli) -> f64 {
        assert_ne!(i, j, "pair moment needs distinct sites");
        if i < j {
            self.mu[pair_index(i, j)][s.slot()][t.slot()]
        } else {
            self.mu[pair_index(j, i)][t.slot()][s.slot()]
        }
    }

    /// `Tr[ρ σ_is σ_jt σ_ku]` for distinct sites.
    pub fn iota(&self, i: usize, j: usize, k: usize, s: Pauli, t: Pauli, u: Pauli) -> f64 {
        let mut sites = [i, j, k];
        let mut spins = [s, t, u];
        index::canonicalize(usize::MAX, &mut sites, &mut spins)
            .expect("triple moment needs distinct sites");
        self.iota[triple_index(sites[0], sites[1], sites[2])][spins[0].slot()]
            [spins[1].slot()][spins[2].slot()]
    }
}

/// First moments `Tr[ρ σ_is]` only.
pub fn first_moments(rho: &DensityMatrix) -> Vec<[f64; 3]> {
    let n = rho.sites();
    (0..n)
        .map(|i| {
            let mut m = [0.0; 3];
            for s in Pauli::ALL {
                let ps = PauliString::new(n, &[(i, s)]).expect("valid site");
                m[s.slot()] = rho.expectation(&ps).expect("matching sites");
            }
            m
        })
        .collect()
}

/// All first, second and third moments of `rho`.
pub fn state_moments(rho: &DensityMatrix) -> QbmMoments {
    let n = rho.sites();
    let ev = |f: &[(usize, Pauli)]| {
        rho.expectation(&PauliString::new(n, f).expect("distinct sites"))
            .expect("matching sites")
    };
    let m = first_moments(rho);
    let mut mu = vec![[[0.0; 3]; 3]; num_pairs(n)];
    for (i, j) in index::pairs(n) {
        let b = &mut mu[pair_index(i, j)];
        for s in Pauli::ALL {
            for t in Pauli::ALL {
                b[s.slot()][t.slot()] = ev(&[(i, s), (j, t)]);
            }
        }
    }
    let mut iota = vec![[[[0.0; 3]; 3]; 3]; num_triples(n)];
    for (i, j, k) in index::triples(n) {
        let b = &mut iota[triple_index(i, j, k)];
        for s in Pauli::ALL {
            for t in Pauli::ALL {
                for u in Pauli::ALL {
                    b[s.slot()][t.slot()][u.slot()] = ev(&[(i, s), (j, t), (k, u)]);
                }
            }
        }
    }
    QbmMoments { n, m, mu, iota }
}

/// Expectation coordinates of the model `p`.
pub fn exact_moments_quantum(p: &QbmParams) -> Result<QbmMoments> {
    Ok(state_moments(&density_matrix(p)?))
}

/// `D(ρ‖σ) = Tr[ρ(log ρ − log σ)]`.
///
/// This is the (−1) divergence; the (+1) divergence is the same function with
/// its arguments swapped.
pub fn quantum_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.sites() != sigma.sites() {
        return Err(Error::DimensionMismatch {
            expected: rho.op.dim(),
            found: sigma.op.dim(),
        });
    }
    Ok(rho.neg_entropy() - trace_product(rho.op(), &sigma.log())?)
}

/// Coordinates of a product state, one 3-vector per site.
#[derive(Debug, Clone, PartialEq)]
pub enum QProductCoords {
    /// Natural chart `h̄_is`.
    Natural(Vec<[f64; 3]>),
    /// Expectation chart `m̄_is = Tr[τ σ_is]`.
    Mean(Vec<[f64; 3]>),
}

impl QProductCoords {
    pub fn n(&self) -> usize {
        self.values().len()
    }

    pub fn values(&self) -> &[[f64; 3]] {
        match self {
            QProductCoords::Natural(v) | QProductCoords::Mean(v) => v,
        }
    }

    /// Flattened `(site, s)` order.
    pub fn flat(&self) -> Vec<f64> {
        self.values().iter().flatten().copied().collect()
    }

    pub fn mean(&self) -> Result<Vec<[f64; 3]>> {
        match qproduct_to_mean(self)? {
            QProductCoords::Mean(m) => Ok(m),
            QProductCoords::Natural(_) => unreachable!(),
        }
    }

    pub fn natural(&self) -> Result<Vec<[f64; 3]>> {
        match qmean_to_product(self)? {
            QProductCoords::Natural(h) => Ok(h),
            QProductCoords::Mean(_) => unreachable!(),
        }
    }
}

pub(crate) fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `tanh(r)/r` with its removable singularity.
fn tanh_ratio(r: f64) -> f64 {
    if r < SERIES_RADIUS {
        1.0 - r * r / 3.0
    } else {
        r.tanh() / r
    }
}

/// `tanh⁻¹(r)/r` with its removable singularity.
fn atanh_ratio(r: f64) -> f64 {
    if r < SERIES_RADIUS {
        1.0 + r * r / 3.0
    } else {
        0.5 * ((1.0 + r) / (1.0 - r)).ln() / r
    }
}

/// `m̄_i = tanh(‖h̄_i‖) h̄_i / ‖h̄_i‖` for one site.
pub(crate) fn site_mean(h: &[f64; 3]) -> [f64; 3] {
    let f = tanh_ratio(norm3(h));
    [h[0] * f, h[1] * f, h[2] * f]
}

/// Inverse of [`site_mean`]; `‖m̄_i‖` is clamped to `1 − 1e-12`, values up to 1 accepted.
pub(crate) fn site_natural_clamped(m: &[f64; 3]) -> [f64; 3] {
    let r = norm3(m);
    let (m, r) = if r > MEAN_CLAMP {
        let c = MEAN_CLAMP / r;
        ([m[0] * c, m[1] * c, m[2] * c], MEAN_CLAMP)
    } else {
        (*m, r)
    };
    let f = atanh_ratio(r);
    [m[0] * f, m[1] * f, m[2] * f]
}

/// `m̄_is = (h̄_is/‖h̄_i‖) tanh(‖h̄_i‖)`.  Mean-chart input is returned unchanged.
pub fn qproduct_to_mean(c: &QProductCoords) -> Result<QProductCoords> {
    match c {
        QProductCoords::Mean(_) => Ok(c.clone()),
        QProductCoords::Natural(h) => {
            for x in h.iter().flatten() {
                check_finite(*x)?;
            }
            Ok(QProductCoords::Mean(h.iter().map(site_mean).collect()))
        }
    }
}

/// `h̄_is = (m̄_is/‖m̄_i‖) tanh⁻¹(‖m̄_i‖)`, with `‖m̄_i‖` clamped to `1 − 1e-12`.
/// Requires `‖m̄_i‖ < 1`.  Natural-chart input is returned unchanged.
pub fn qmean_to_product(c: &QProductCoords) -> Result<QProductCoords> {
    match c {
        QProductCoords::Natural(_) => Ok(c.clone()),
        QProductCoords::Mean(m) => {
            for mi in m {
                let r = norm3(mi);
                if !(r < 1.0) {
                    return Err(Error::OutsideUnitBall(r));
                }
            }
            Ok(QProductCoords::Natural(m.iter().map(site_natural_clamped).collect()))
        }
    }
}

/// `ψ(h̄) = Σ_i log(e^{‖h̄_i‖} + e^{−‖h̄_i‖})`.
pub fn product_log_partition(hbar: &[[f64; 3]]) -> f64 {
    neumaier_sum(hbar.iter().map(|h| log_two_cosh(norm3(h))))
}

/// Single-site state `exp{Σ_s h̄_s σ_s − ψ_i}`.
fn site_state(h: &[f64; 3]) -> HermitianOperator {
    let psi = log_two_cosh(norm3(h));
    let mut a = HermitianOperator::identity(1).expect("one site").scale(-psi);
    for s in Pauli::ALL {
        a = a
            .add(&crate::tensor::pauli(s).scale(h[s.slot()]))
            .expect("same dimension");
    }
    herm_expm(&a)
}

/// The product state `τ_h̄ = ⊗_i exp{Σ_s h̄_is σ_s − ψ_i(h̄_i)}`.
pub fn product_state(c: &QProductCoords) -> Result<DensityMatrix> {
    let hbar = c.natural()?;
    let n = hbar.len();
    check_sites(n)?;
    let mut tau = site_state(&hbar[0]);
    for h in &hbar[1..] {
        tau = tau.kron(&site_state(h))?;
    }
    debug_assert!(n > 6 || {
        // global form exp{Σ h̄_is σ_is − ψ(h̄)}
        let mut gen = HermitianOperator::identity(n).unwrap().scale(-product_log_partition(&hbar));
        for (i, h) in hbar.iter().enumerate() {
            for s in Pauli::ALL {
                gen = gen
                    .add(&crate::tensor::site_operator(n, i, s).unwrap().scale(h[s.slot()]))
                    .unwrap();
            }
        }
        herm_expm(&gen).max_abs_diff(&tau) <= 1e-10
    });
    DensityMatrix::new(tau)
}

/// `Σ h m̄ + Σ w m̄ m̄ + Σ v m̄ m̄ m̄`: `Tr[τ H]` for a product state with Bloch vectors `m`.
pub(crate) fn product_energy(p: &QbmParams, m: &[[f64; 3]]) -> f64 {
    let mut terms = Vec::with_capacity(3 * p.n * (1 + p.n * p.n));
    for i in 0..p.n {
        for s in 0..3 {
            terms.push(p.h[i][s] * m[i][s]);
        }
    }
    for ((i, j), b) in p.pair_couplings() {
        for s in 0..3 {
            for t in 0..3 {
                terms.push(b[s][t] * m[i][s] * m[j][t]);
            }
        }
    }
    for ((i, j, k), b) in p.triple_couplings() {
        for s in 0..3 {
            for t in 0..3 {
                for u in 0..3 {
                    terms.push(b[s][t][u] * m[i][s] * m[j][t] * m[k][u]);
                }
            }
        }
    }
    neumaier_sum(terms)
}

/// `Tr τ log τ` of a product state from its Bloch vectors (`‖m̄_i‖ ≤ 1`).
pub(crate) fn product_neg_entropy(m: &[[f64; 3]]) -> f64 {
    neumaier_sum(m.iter().map(|mi| {
        let r = norm3(mi);
        xlogx((1.0 + r) / 2.0) + xlogx((1.0 - r) / 2.0)
    }))
}
