//! Third-order classical Boltzmann machines.
//!
//! A model on `n` spins `x ∈ {-1,+1}^n` has the equilibrium distribution
//!
//! ```text
//! p(x) = exp{ Σ_i h_i x_i + Σ_{i<j} w_ij x_i x_j + Σ_{i<j<k} v_ijk x_i x_j x_k − ψ(h,w,v) }
//! ```
//!
//! The thresholds and couplings `(h, w, v)` are the natural coordinates of
//! this exponential family and the moments `(E[x_i], E[x_i x_j],
//! E[x_i x_j x_k])` are its expectation coordinates.  Everything here is exact
//! and computed by enumerating all `2^n` configurations, so it is limited to
//! [`CLASSICAL_SITE_CAP`] sites.

use crate::error::{Error, Result};
use crate::index::{self, num_pairs, num_triples, pair_index, triple_index};
use crate::numeric::{atanh_clamped, log_sum_exp, neumaier_sum, xlogx};

/// Largest number of spins accepted by the enumeration routines.
pub const CLASSICAL_SITE_CAP: usize = 20;

fn check_cap(n: usize) -> Result<()> {
    if n > CLASSICAL_SITE_CAP {
        Err(Error::SiteCapExceeded {
            n,
            cap: CLASSICAL_SITE_CAP,
        })
    } else {
        Ok(())
    }
}

fn check_finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(x))
    }
}

/// A configuration of `n` spins, each exactly −1 or +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::NoSites);
        }
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfig(format!("spin value {bad} is not ±1")));
        }
        Ok(Self(spins))
    }

    /// The configuration with enumeration index `index` (site 0 is the most
    /// significant bit, a clear bit is +1).
    pub fn from_index(n: usize, index: usize) -> Self {
        Self((0..n).map(|i| crate::index::spin(index, n, i) as i8).collect())
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | usize::from(s == -1))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    /// Every configuration of `n` spins in enumeration order.
    pub fn all(n: usize) -> impl Iterator<Item = SpinConfig> {
        (0..1usize << n).map(move |b| SpinConfig::from_index(n, b))
    }
}

/// Natural coordinates `(h, w, v)` of a third-order classical model.
///
/// Couplings are stored only on strictly increasing index tuples; the
/// accessors read them symmetrically and return 0 for repeated indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CbmParams {
    n: usize,
    h: Vec<f64>,
    w: Vec<f64>,
    v: Vec<f64>,
}

impl CbmParams {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoSites);
        }
        Ok(Self {
            n,
            h: vec![0.0; n],
            w: vec![0.0; num_pairs(n)],
            v: vec![0.0; num_triples(n)],
        })
    }

    /// Product-family member (`w = v = 0`).
    pub fn from_fields(h: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(h.len())?;
        for (i, &x) in h.iter().enumerate() {
            p.set_h(i, x)?;
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self, i: usize) -> f64 {
        self.h[i]
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn w(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.w[pair_index(i, j)],
            std::cmp::Ordering::Greater => self.w[pair_index(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn v(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut t = [i, j, k];
        t.sort_unstable();
        if t[0] == t[1] || t[1] == t[2] {
            return 0.0;
        }
        self.v[triple_index(t[0], t[1], t[2])]
    }

    pub fn set_h(&mut self, i: usize, value: f64) -> Result<()> {
        if i >= self.n {
            return Err(Error::SiteOutOfRange { site: i, n: self.n });
        }
        self.h[i] = check_finite(value)?;
        Ok(())
    }

    pub fn set_w(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let mut t = [i, j];
        index::canonicalize::<()>(self.n, &mut t, &mut [])?;
        self.w[pair_index(t[0], t[1])] = check_finite(value)?;
        Ok(())
    }

    pub fn set_v(&mut self, i: usize, j: usize, k: usize, value: f64) -> Result<()> {
        let mut t = [i, j, k];
        index::canonicalize::<()>(self.n, &mut t, &mut [])?;
        self.v[triple_index(t[0], t[1], t[2])] = check_finite(value)?;
        Ok(())
    }

    /// Non-redundant pair couplings in lexicographic order.
    pub fn pair_couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        index::pairs(self.n).map(move |(i, j)| ((i, j), self.w[pair_index(i, j)]))
    }

    /// Non-redundant triple couplings in lexicographic order.
    pub fn triple_couplings(
        &self,
    ) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        index::triples(self.n)
            .map(move |(i, j, k)| ((i, j, k), self.v[triple_index(i, j, k)]))
    }

    /// Drops interactions above `order` (1 keeps only `h`, 2 keeps `h, w`).
    pub fn truncated(&self, order: usize) -> Self {
        let mut p = self.clone();
        if order < 3 {
            p.v.iter_mut().for_each(|x| *x = 0.0);
        }
        if order < 2 {
            p.w.iter_mut().for_each(|x| *x = 0.0);
        }
        p
    }

    /// Multiplies `w` and `v` by `factor`, leaving `h` unchanged.
    pub fn scale_couplings(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.w.iter_mut().for_each(|x| *x *= factor);
        p.v.iter_mut().for_each(|x| *x *= factor);
        p
    }

    /// `Σ h x + Σ w x x + Σ v x x x` (the exponent before normalization).
    pub fn energy(&self, x: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            e += self.h[i] * x[i];
        }
        for ((i, j), w) in self.pair_couplings() {
            e += w * x[i] * x[j];
        }
        for ((i, j, k), v) in self.triple_couplings() {
            e += v * x[i] * x[j] * x[k];
        }
        e
    }

    /// Same as [`energy`](Self::energy) but only touching non-zero couplings.
    fn energy_sparse(&self, x: &[f64], pairs: &[(usize, usize, f64)], trip: &[(usize, usize, usize, f64)]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            e += self.h[i] * x[i];
        }
        for &(i, j, w) in pairs {
            e += w * x[i] * x[j];
        }
        for &(i, j, k, v) in trip {
            e += v * x[i] * x[j] * x[k];
        }
        e
    }
}

/// Expectation coordinates `(m, μ, ι)` of a classical model.
#[derive(Debug, Clone, PartialEq)]
pub struct CbmMoments {
    n: usize,
    m: Vec<f64>,
    mu: Vec<f64>,
    iota: Vec<f64>,
}

impl CbmMoments {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `E[x_i]` for every site.
    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// `E[x_i x_j]` for `i ≠ j` (symmetric).
    pub fn mu(&self, i: usize, j: usize) -> f64 {
        assert_ne!(i, j, "pair moment needs distinct sites");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.mu[pair_index(a, b)]
    }

    /// `E[x_i x_j x_k]` for distinct sites.
    pub fn iota(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut t = [i, j, k];
        t.sort_unstable();
        assert!(t[0] < t[1] && t[1] < t[2], "triple moment needs distinct sites");
        self.iota[triple_index(t[0], t[1], t[2])]
    }
}

/// Log-weights of every configuration together with ψ.
struct Enumeration {
    energies: Vec<f64>,
    psi: f64,
}

impl Enumeration {
    fn new(p: &CbmParams) -> Result<Self> {
        check_cap(p.n)?;
        let n = p.n;
        let pairs: Vec<_> = p
            .pair_couplings()
            .filter(|&(_, w)| w != 0.0)
            .map(|((i, j), w)| (i, j, w))
            .collect();
        let trip: Vec<_> = p
            .triple_couplings()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j, k), v)| (i, j, k, v))
            .collect();
        let mut x = vec![0.0; n];
        let energies: Vec<f64> = (0..1usize << n)
            .map(|b| {
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = index::spin(b, n, i);
                }
                p.energy_sparse(&x, &pairs, &trip)
            })
            .collect();
        let psi = log_sum_exp(&energies);
        Ok(Self { energies, psi })
    }

    fn log_prob(&self, b: usize) -> f64 {
        self.energies[b] - self.psi
    }

    fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.energies.iter().map(move |e| (e - self.psi).exp())
    }
}

/// ψ(h, w, v) by log-sum-exp over all `2^n` configurations.
pub fn log_partition_classical(p: &CbmParams) -> Result<f64> {
    Ok(Enumeration::new(p)?.psi)
}

/// Equilibrium probability of configuration `x`.
pub fn prob(p: &CbmParams, x: &SpinConfig) -> Result<f64> {
    if x.n() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            found: x.n(),
        });
    }
    let psi = log_partition_classical(p)?;
    let xs: Vec<f64> = x.spins().iter().map(|&s| f64::from(s)).collect();
    Ok((p.energy(&xs) - psi).exp())
}

/// The full probability vector in enumeration order (see [`SpinConfig::from_index`]).
pub fn probabilities(p: &CbmParams) -> Result<Vec<f64>> {
    Ok(Enumeration::new(p)?.probs().collect())
}

/// All first, second and third moments by enumeration.
pub fn exact_moments_classical(p: &CbmParams) -> Result<CbmMoments> {
    let en = Enumeration::new(p)?;
    let n = p.n;
    let mut m = vec![0.0; n];
    let mut mu = vec![0.0; num_pairs(n)];
    let mut iota = vec![0.0; num_triples(n)];
    let mut x = vec![0.0; n];
    for (b, pb) in en.probs().enumerate() {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = index::spin(b, n, i);
        }
        for i in 0..n {
            m[i] += pb * x[i];
        }
        for (i, j) in index::pairs(n) {
            mu[pair_index(i, j)] += pb * x[i] * x[j];
        }
        for (i, j, k) in index::triples(n) {
            iota[triple_index(i, j, k)] += pb * x[i] * x[j] * x[k];
        }
    }
    Ok(CbmMoments { n, m, mu, iota })
}

/// `φ(p) = Σ_x p(x) log p(x)`, the negative entropy.
pub fn neg_entropy(p: &CbmParams) -> Result<f64> {
    let en = Enumeration::new(p)?;
    let phi = neumaier_sum((0..en.energies.len()).map(|b| {
        let lp = en.log_prob(b);
        lp.exp() * lp
    }));
    debug_assert!({
        // Legendre form Σ v ι + Σ w μ + Σ h m − ψ
        let mom = exact_moments_classical(p)?;
        let dual = neumaier_sum(
            p.triple_couplings()
                .map(|((i, j, k), v)| v * mom.iota(i, j, k))
                .chain(p.pair_couplings().map(|((i, j), w)| w * mom.mu(i, j)))
                .chain((0..p.n).map(|i| p.h(i) * mom.m()[i])),
        ) - en.psi;
        (dual - phi).abs() <= 1e-10 * (1.0 + phi.abs())
    });
    Ok(phi)
}

/// `D(q‖p) = Σ_x q(x) log(q(x)/p(x))`.
pub fn kl_divergence(q: &CbmParams, p: &CbmParams) -> Result<f64> {
    if q.n != p.n {
        return Err(Error::DimensionMismatch {
            expected: q.n,
            found: p.n,
        });
    }
    let eq = Enumeration::new(q)?;
    let ep = Enumeration::new(p)?;
    Ok(neumaier_sum((0..eq.energies.len()).map(|b| {
        let lq = eq.log_prob(b);
        lq.exp() * (lq - ep.log_prob(b))
    })))
}

/// Coordinates of a product distribution `Π_i p_i(x_i)`, in one of two charts.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductCoords {
    /// Natural chart `h̄`.
    Natural(Vec<f64>),
    /// Expectation chart `m̄ = E[x]`.
    Mean(Vec<f64>),
}

impl ProductCoords {
    pub fn n(&self) -> usize {
        self.values().len()
    }

    /// The stored values in whichever chart this is.
    pub fn values(&self) -> &[f64] {
        match self {
            ProductCoords::Natural(v) | ProductCoords::Mean(v) => v,
        }
    }

    /// `m̄`, converting from the natural chart if needed.
    pub fn mean(&self) -> Result<Vec<f64>> {
        match product_to_mean(self)? {
            ProductCoords::Mean(m) => Ok(m),
            ProductCoords::Natural(_) => unreachable!(),
        }
    }

    /// `h̄`, converting from the mean chart if needed.
    pub fn natural(&self) -> Result<Vec<f64>> {
        match mean_to_product(self)? {
            ProductCoords::Natural(h) => Ok(h),
            ProductCoords::Mean(_) => unreachable!(),
        }
    }

    /// The product distribution as a model with `w = v = 0`.
    pub fn to_params(&self) -> Result<CbmParams> {
        CbmParams::from_fields(&self.natural()?)
    }
}

/// `m̄_i = tanh(h̄_i)`.  Mean-chart input is returned unchanged.
pub fn product_to_mean(c: &ProductCoords) -> Result<ProductCoords> {
    match c {
        ProductCoords::Mean(_) => Ok(c.clone()),
        ProductCoords::Natural(h) => {
            let m = h
                .iter()
                .map(|&x| check_finite(x).map(f64::tanh))
                .collect::<Result<_>>()?;
            Ok(ProductCoords::Mean(m))
        }
    }
}

/// Validates a mean-chart value: `|m| < 1`.
pub(crate) fn check_mean(m: f64) -> Result<f64> {
    if m.is_finite() && m.abs() < 1.0 {
        Ok(m)
    } else {
        Err(Error::OutsideUnitBall(m.abs()))
    }
}

/// `h̄_i = ½ log((1+m̄_i)/(1−m̄_i))`, with `|m̄_i|` clamped to `1 − 1e-12`.
/// Natural-chart input is returned unchanged.
pub fn mean_to_product(c: &ProductCoords) -> Result<ProductCoords> {
    match c {
        ProductCoords::Natural(_) => Ok(c.clone()),
        ProductCoords::Mean(m) => {
            let h = m
                .iter()
                .map(|&x| check_mean(x).map(atanh_clamped))
                .collect::<Result<_>>()?;
            Ok(ProductCoords::Natural(h))
        }
    }
}

fn mean_values_closed(c: &ProductCoords) -> Result<Vec<f64>> {
    let m = c.mean()?;
    for &x in &m {
        if !(x.abs() <= 1.0) {
            return Err(Error::OutsideUnitBall(x.abs()));
        }
    }
    Ok(m)
}

/// Negative entropy of a product distribution,
/// `Σ_i [ (1+m̄_i)/2 log((1+m̄_i)/2) + (1−m̄_i)/2 log((1−m̄_i)/2) ]`.
///
/// `|m̄_i| = 1` is accepted with `0 log 0 = 0`.
pub fn product_entropy(c: &ProductCoords) -> Result<f64> {
    let m = mean_values_closed(c)?;
    Ok(neumaier_sum(
        m.iter()
            .map(|&x| xlogx((1.0 + x) / 2.0) + xlogx((1.0 - x) / 2.0)),
    ))
}

/// `Σ v m̄m̄m̄ + Σ w m̄m̄ + Σ h m̄`: the model exponent averaged over a product state.
pub(crate) fn product_energy(p: &CbmParams, m: &[f64]) -> f64 {
    neumaier_sum(
        p.triple_couplings()
            .map(|((i, j, k), v)| v * m[i] * m[j] * m[k])
            .chain(p.pair_couplings().map(|((i, j), w)| w * m[i] * m[j]))
            .chain((0..p.n).map(|i| p.h(i) * m[i])),
    )
}

/// `D(p_h̄ ‖ p)` in closed form:
/// `ψ(p) + φ(p_h̄) − Σ v m̄m̄m̄ − Σ w m̄m̄ − Σ h m̄`, with ψ(p) exact.
pub fn kl_product_to_cbm(c: &ProductCoords, p: &CbmParams) -> Result<f64> {
    if c.n() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            found: c.n(),
        });
    }
    let psi = log_partition_classical(p)?;
    Ok(kl_product_with_psi(&mean_values_closed(c)?, p, psi))
}

pub(crate) fn kl_product_with_psi(m: &[f64], p: &CbmParams, psi: f64) -> f64 {
    let phi = neumaier_sum(
        m.iter()
            .map(|&x| xlogx((1.0 + x) / 2.0) + xlogx((1.0 - x) / 2.0)),
    );
    psi + phi - product_energy(p, m)
}
