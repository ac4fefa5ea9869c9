//! Dense Hermitian operators on `(ℂ²)^⊗n`: Pauli matrices, site-embedded
//! Pauli strings, and matrix functions by eigendecomposition.
//!
//! Site 0 is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index, and bit value 0 is the σ₃ eigenvector with
//! eigenvalue +1.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of quantum sites accepted (dimension 1024).
pub const QUANTUM_SITE_CAP: usize = 10;

/// Hermiticity defect below which inputs are silently symmetrized.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Smallest eigenvalue accepted by [`herm_logm`].
pub const LOG_EIGEN_FLOOR: f64 = 1e-300;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// One of the three Pauli matrices σ₁, σ₂, σ₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn new(s: u8) -> Result<Self> {
        match s {
            1 => Ok(Pauli::X),
            2 => Ok(Pauli::Y),
            3 => Ok(Pauli::Z),
            _ => Err(Error::InvalidPauli(s)),
        }
    }

    /// The label 1, 2 or 3.
    pub fn label(self) -> u8 {
        self as u8
    }

    /// Zero-based position, for indexing `[_; 3]` arrays.
    pub fn slot(self) -> usize {
        self as usize - 1
    }

    pub fn from_slot(slot: usize) -> Self {
        Pauli::ALL[slot]
    }
}

impl TryFrom<u8> for Pauli {
    type Error = Error;

    fn try_from(s: u8) -> Result<Self> {
        Pauli::new(s)
    }
}

pub(crate) fn check_sites(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::NoSites)
    } else if n > QUANTUM_SITE_CAP {
        Err(Error::SiteCapExceeded {
            n,
            cap: QUANTUM_SITE_CAP,
        })
    } else {
        Ok(())
    }
}

/// A Hermitian matrix of dimension `2^sites`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    sites: usize,
    matrix: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Wraps `matrix`, symmetrizing it as `(A + A†)/2`.
    ///
    /// Matrices whose Hermiticity defect exceeds [`HERMITIAN_TOL`] are rejected.
    pub fn new(sites: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        check_sites(sites)?;
        let dim = 1usize << sites;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let defect = hermiticity_defect(&matrix);
        if !(defect <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { defect });
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Ok(Self { sites, matrix })
    }

    /// Skips validation; callers guarantee exact Hermiticity.
    pub(crate) fn from_hermitian_unchecked(sites: usize, matrix: DMatrix<Complex64>) -> Self {
        Self { sites, matrix }
    }

    pub fn zeros(sites: usize) -> Result<Self> {
        check_sites(sites)?;
        let dim = 1usize << sites;
        Ok(Self {
            sites,
            matrix: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(sites: usize) -> Result<Self> {
        check_sites(sites)?;
        let dim = 1usize << sites;
        Ok(Self {
            sites,
            matrix: DMatrix::identity(dim, dim),
        })
    }

    /// Real diagonal operator.
    pub fn from_diagonal(sites: usize, diag: &[f64]) -> Result<Self> {
        check_sites(sites)?;
        let dim = 1usize << sites;
        if diag.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: diag.len(),
            });
        }
        let d = DVector::from_iterator(dim, diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Ok(Self {
            sites,
            matrix: DMatrix::from_diagonal(&d),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            sites: self.sites,
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            sites: self.sites,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self {
            sites: self.sites,
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let sites = self.sites + other.sites;
        check_sites(sites)?;
        Ok(Self {
            sites,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues (ascending) and the matching unitary eigenvector matrix.
    pub fn eigen(&self) -> Spectrum {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = eig.eigenvectors.select_columns(order.iter());
        Spectrum {
            sites: self.sites,
            values,
            vectors,
        }
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Maximum of `|a_ij - conj(a_ji)|`; infinite for non-square input.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut defect = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            let d = (m[(r, c)] - m[(c, r)].conj()).norm();
            if d.is_nan() {
                return f64::NAN;
            }
            defect = defect.max(d);
        }
    }
    defect
}

/// Eigendecomposition `A = V diag(λ) V†` of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    sites: usize,
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    /// Same eigenvectors, new eigenvalues (kept in the given order).
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Spectrum {
        Spectrum {
            sites: self.sites,
            values,
            vectors: self.vectors.clone(),
        }
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let mut scaled = self.vectors.clone();
        for (k, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(k).scale_mut(fl);
        }
        let m = scaled * self.vectors.adjoint();
        // products of floating point values drift off Hermiticity by ~1 ulp
        let m = (&m + m.adjoint()).scale(0.5);
        HermitianOperator::from_hermitian_unchecked(self.sites, m)
    }
}

/// The 2×2 Pauli matrix σ_s.
pub fn pauli(s: Pauli) -> HermitianOperator {
    let m = match s {
        Pauli::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    };
    HermitianOperator::from_hermitian_unchecked(1, m)
}

/// `σ_{site,s} = I^{⊗site} ⊗ σ_s ⊗ I^{⊗(n-site-1)}`, with zero-based `site`.
pub fn site_operator(n: usize, site: usize, s: Pauli) -> Result<HermitianOperator> {
    Ok(PauliString::new(n, &[(site, s)])?.to_operator())
}

/// `exp(A)` via the eigendecomposition of `A`.
pub fn herm_expm(a: &HermitianOperator) -> HermitianOperator {
    a.eigen().map(f64::exp)
}

/// `log(P)` for positive definite `P`.
pub fn herm_logm(p: &HermitianOperator) -> Result<HermitianOperator> {
    let spec = p.eigen();
    let min = spec.values[0];
    if !(min > LOG_EIGEN_FLOOR) {
        return Err(Error::NotPositive { eigenvalue: min });
    }
    Ok(spec.map(f64::ln))
}

/// `Re Tr(AB)`.
pub fn trace_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    a.check_same_dim(b)?;
    let dim = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..dim {
        for c in 0..dim {
            acc += a.matrix[(r, c)] * b.matrix[(c, r)];
        }
    }
    debug_assert!(
        acc.im.abs() <= 1e-10 * (1.0 + acc.re.abs()),
        "imaginary trace residue {}",
        acc.im
    );
    Ok(acc.re)
}

/// A tensor product of Pauli matrices on distinct sites, identity elsewhere.
///
/// Every such operator is a signed permutation with phases: column `c` maps
/// to row `c ^ flip` with phase `i^{#Y} (-1)^{popcount(c & sign_mask)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliString {
    sites: usize,
    flip: usize,
    sign_mask: usize,
    y_count: u32,
}

impl PauliString {
    pub fn new(n: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        check_sites(n)?;
        let mut flip = 0usize;
        let mut sign_mask = 0usize;
        let mut used = 0usize;
        let mut y_count = 0;
        for &(site, s) in factors {
            if site >= n {
                return Err(Error::SiteOutOfRange { site, n });
            }
            let bit = 1usize << (n - 1 - site);
            if used & bit != 0 {
                return Err(Error::RepeatedSite(site));
            }
            used |= bit;
            match s {
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign_mask |= bit;
                    y_count += 1;
                }
                Pauli::Z => sign_mask |= bit,
            }
        }
        Ok(Self {
            sites: n,
            flip,
            sign_mask,
            y_count,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Row index and phase of the single non-zero entry in column `col`.
    #[inline]
    pub fn column(&self, col: usize) -> (usize, Complex64) {
        let base = match self.y_count % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        let phase = if (col & self.sign_mask).count_ones().is_multiple_of(2) {
            base
        } else {
            -base
        };
        (col ^ self.flip, phase)
    }

    /// Adds `coeff · P` to `m` in place.
    pub fn add_scaled_to(&self, coeff: f64, m: &mut DMatrix<Complex64>) {
        for col in 0..m.ncols() {
            let (row, phase) = self.column(col);
            m[(row, col)] += phase * coeff;
        }
    }

    pub fn to_operator(&self) -> HermitianOperator {
        let dim = 1usize << self.sites;
        let mut m = DMatrix::zeros(dim, dim);
        self.add_scaled_to(1.0, &mut m);
        HermitianOperator::from_hermitian_unchecked(self.sites, m)
    }

    /// `Re Tr[ρ P]` in `O(dim)` operations.
    pub fn expectation(&self, rho: &HermitianOperator) -> Result<f64> {
        if rho.sites() != self.sites {
            return Err(Error::DimensionMismatch {
                expected: 1usize << self.sites,
                found: rho.dim(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..rho.dim() {
            let (row, phase) = self.column(col);
            acc += rho.matrix[(col, row)] * phase;
        }
        Ok(acc.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn with_spectral_radius(a: HermitianOperator, radius: f64) -> HermitianOperator {
        let r = a.eigen().values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if r == 0.0 {
            a
        } else {
            a.scale(radius / r)
        }
    }

    pub(crate) fn random_hermitian(sites: usize, entries: &[f64]) -> HermitianOperator {
        let dim = 1usize << sites;
        let mut m = DMatrix::zeros(dim, dim);
        let mut it = entries.iter().cycle();
        for r in 0..dim {
            m[(r, r)] = c(*it.next().unwrap(), 0.0);
            for col in r + 1..dim {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                m[(r, col)] = z;
                m[(col, r)] = z.conj();
            }
        }
        HermitianOperator::new(sites, m).unwrap()
    }

    #[test]
    fn pauli_matrices() {
        let x = pauli(Pauli::X);
        assert_eq!(x.entry(0, 1), ONE);
        assert_eq!(x.entry(1, 0), ONE);
        assert_eq!(x.entry(0, 0), ZERO);
        let z = pauli(Pauli::Z);
        assert_eq!(z.entry(0, 0), ONE);
        assert_eq!(z.entry(1, 1), -ONE);
        let y = pauli(Pauli::Y);
        assert_eq!(y.entry(0, 1), -I);
        assert_eq!(y.entry(1, 0), I);
        let y2 = y.matrix() * y.matrix();
        assert_eq!(y2, DMatrix::identity(2, 2));
    }

    #[test]
    fn invalid_pauli_index() {
        assert_eq!(Pauli::new(0), Err(Error::InvalidPauli(0)));
        assert_eq!(Pauli::new(4), Err(Error::InvalidPauli(4)));
    }

    #[test]
    fn pauli_orthogonality() {
        for s in Pauli::ALL {
            for t in Pauli::ALL {
                let tr = trace_product(&pauli(s), &pauli(t)).unwrap();
                assert_eq!(tr, if s == t { 2.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn site_operator_embeddings() {
        assert_eq!(site_operator(1, 0, Pauli::Z).unwrap(), pauli(Pauli::Z));

        let op = site_operator(2, 1, Pauli::X).unwrap();
        let expected = HermitianOperator::identity(1)
            .unwrap()
            .kron(&pauli(Pauli::X))
            .unwrap();
        assert_eq!(op, expected);
        assert_eq!(op.trace(), 0.0);

        let op = site_operator(3, 1, Pauli::Y).unwrap();
        assert_eq!(op.matrix() * op.matrix(), DMatrix::identity(8, 8));

        // leftmost factor is site 0
        let op = site_operator(3, 0, Pauli::Y).unwrap();
        let expected = pauli(Pauli::Y)
            .kron(&HermitianOperator::identity(2).unwrap())
            .unwrap();
        assert_eq!(op, expected);
    }

    #[test]
    fn site_operator_errors() {
        assert!(matches!(
            site_operator(2, 2, Pauli::X),
            Err(Error::SiteOutOfRange { site: 2, n: 2 })
        ));
        assert!(matches!(
            site_operator(11, 0, Pauli::X),
            Err(Error::SiteCapExceeded { n: 11, cap: 10 })
        ));
        assert_eq!(site_operator(0, 0, Pauli::X), Err(Error::NoSites));
    }

    #[test]
    fn site_operators_commute_across_sites() {
        let n = 3;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for s in Pauli::ALL {
                    for t in Pauli::ALL {
                        let a = site_operator(n, i, s).unwrap().into_matrix();
                        let b = site_operator(n, j, t).unwrap().into_matrix();
                        let comm = &a * &b - &b * &a;
                        assert!(comm.norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pauli_string_matches_dense_products() {
        let n = 3;
        for s in Pauli::ALL {
            for t in Pauli::ALL {
                for u in Pauli::ALL {
                    let ps = PauliString::new(n, &[(0, s), (1, t), (2, u)]).unwrap();
                    let dense = site_operator(n, 0, s).unwrap().into_matrix()
                        * site_operator(n, 1, t).unwrap().into_matrix()
                        * site_operator(n, 2, u).unwrap().into_matrix();
                    assert_eq!(ps.to_operator().into_matrix(), dense);
                }
            }
        }
        assert_eq!(
            PauliString::new(3, &[(1, Pauli::X), (1, Pauli::Z)]),
            Err(Error::RepeatedSite(1))
        );
    }

    #[test]
    fn pauli_string_expectation_matches_trace_product() {
        let rho = random_hermitian(2, &[0.3, -0.1, 0.7, 0.2, -0.4, 0.05, 0.9]);
        for s in Pauli::ALL {
            for t in Pauli::ALL {
                let ps = PauliString::new(2, &[(0, s), (1, t)]).unwrap();
                let fast = ps.expectation(&rho).unwrap();
                let dense = trace_product(&rho, &ps.to_operator()).unwrap();
                assert!((fast - dense).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(
            HermitianOperator::new(1, m),
            Err(Error::NotHermitian { .. })
        ));
        // tiny drift is symmetrized away
        let m = DMatrix::from_row_slice(2, 2, &[ONE, c(1.0, 1e-13), ONE, ONE]);
        let h = HermitianOperator::new(1, m).unwrap();
        assert_eq!(hermiticity_defect(h.matrix()), 0.0);
    }

    #[test]
    fn expm_logm_basic_cases() {
        let zero = HermitianOperator::zeros(2).unwrap();
        let e = herm_expm(&zero);
        assert!(e.max_abs_diff(&HermitianOperator::identity(2).unwrap()) < 1e-15);

        let a = 0.7;
        let d = HermitianOperator::from_diagonal(1, &[a, -a]).unwrap();
        let e = herm_expm(&d);
        assert!((e.entry(0, 0).re - a.exp()).abs() < 1e-14);
        assert!((e.entry(1, 1).re - (-a).exp()).abs() < 1e-14);

        let l = herm_logm(&HermitianOperator::identity(3).unwrap()).unwrap();
        assert!(l.max_abs_diff(&HermitianOperator::zeros(3).unwrap()) < 1e-15);

        let half = HermitianOperator::identity(1).unwrap().scale(0.5);
        let l = herm_logm(&half).unwrap();
        let expected = HermitianOperator::identity(1).unwrap().scale(-(2f64.ln()));
        assert!(l.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn logm_rejects_singular() {
        let p = HermitianOperator::from_diagonal(1, &[1.0, -0.5]).unwrap();
        assert_eq!(herm_logm(&p), Err(Error::NotPositive { eigenvalue: -0.5 }));
        let p = HermitianOperator::from_diagonal(1, &[1.0, 0.0]).unwrap();
        assert!(matches!(herm_logm(&p), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn trace_product_cases() {
        let id = HermitianOperator::identity(2).unwrap();
        assert_eq!(trace_product(&id, &id).unwrap(), 4.0);
        assert_eq!(
            trace_product(&pauli(Pauli::Z), &pauli(Pauli::X)).unwrap(),
            0.0
        );
        assert_eq!(
            trace_product(&pauli(Pauli::Y), &pauli(Pauli::Y)).unwrap(),
            2.0
        );
        assert!(matches!(
            trace_product(&id, &pauli(Pauli::X)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn logm_inverts_expm(entries in proptest::collection::vec(-1.0f64..1.0, 64..65), radius in 0.5f64..3.0) {
            let a = with_spectral_radius(random_hermitian(3, &entries), radius);
            let back = herm_logm(&herm_expm(&a)).unwrap();
            prop_assert!(back.max_abs_diff(&a) < 1e-9);
        }

        #[test]
        fn logm_inverts_expm_wide_spectrum(entries in proptest::collection::vec(-1.0f64..1.0, 64..65)) {
            // roundoff grows like e^{2r}; r = 8 still leaves two digits of margin at 1e-8
            let a = with_spectral_radius(random_hermitian(3, &entries), 8.0);
            let back = herm_logm(&herm_expm(&a)).unwrap();
            prop_assert!(back.max_abs_diff(&a) < 1e-8);
        }

        #[test]
        fn expm_spectrum_is_exp_of_spectrum(entries in proptest::collection::vec(-1.5f64..1.5, 64..65)) {
            let a = random_hermitian(3, &entries);
            let la = a.eigen();
            let le = herm_expm(&a).eigen();
            for (x, y) in la.values().iter().zip(le.values()) {
                prop_assert!((x.exp() - y).abs() <= 1e-10 * y.abs());
            }
        }
    }
}
