//! Dense complex linear algebra on a truncated Fock space.
//!
//! Operators and states carry their mode structure (`modes`), a list of
//! per-mode cutoffs whose product is the Hilbert-space dimension. Two-mode
//! objects are always ordered (control, target): basis index
//! `n_c * dim_t + n_t`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DcatError, Result};

pub type C64 = Complex64;

/// Default tail tolerance for states accepted as simulation inputs.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Number of top Fock levels that make up the truncation tail.
pub const TAIL_LEVELS: usize = 5;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    modes: Vec<usize>,
    mat: DMatrix<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    modes: Vec<usize>,
    amps: DVector<C64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(DcatError::InvalidDimension { dim });
    }
    Ok(())
}

impl FockOperator {
    pub fn from_matrix(mat: DMatrix<C64>, modes: Vec<usize>) -> Result<Self> {
        let dim: usize = modes.iter().product();
        if modes.is_empty() || modes.iter().any(|&d| d < 2) {
            return Err(DcatError::InvalidDimension {
                dim: modes.iter().copied().min().unwrap_or(0),
            });
        }
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(DcatError::DimensionMismatch {
                expected: dim,
                actual: mat.nrows(),
            });
        }
        Ok(Self { modes, mat })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            modes: vec![dim],
            mat: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            modes: vec![dim],
            mat: DMatrix::identity(dim, dim),
        })
    }

    /// Identity with the same mode structure as `self`.
    pub fn identity_like(&self) -> Self {
        let d = self.dim();
        Self {
            modes: self.modes.clone(),
            mat: DMatrix::identity(d, d),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let d = self.dim();
        Self {
            modes: self.modes.clone(),
            mat: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            modes: self.modes.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            modes: self.modes.clone(),
            mat: &self.mat * factor,
        }
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        assert_eq!(self.dim(), state.dim(), "operator/state dimension mismatch");
        StateVector {
            modes: self.modes.clone(),
            amps: &self.mat * &state.amps,
        }
    }

    /// `<state| self |state>`.
    pub fn expectation(&self, state: &StateVector) -> C64 {
        state.amps.dotc(&(&self.mat * &state.amps))
    }

    /// `<bra| self |ket>`.
    pub fn matrix_element(&self, bra: &StateVector, ket: &StateVector) -> C64 {
        bra.amps.dotc(&(&self.mat * &ket.amps))
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-norm of `self - self^dagger`, relative to the max-norm of `self`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        let scale = self.max_norm();
        if scale == 0.0 {
            0.0
        } else {
            dev / scale
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITIAN_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(DcatError::NotHermitian { deviation });
        }
        Ok(())
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            modes: self.modes.clone(),
            mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    /// Max-norm deviation of `self * self^dagger` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = &self.mat * self.mat.adjoint();
        let d = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                dev = dev.max((prod[(i, j)] - target).norm());
            }
        }
        dev
    }

    /// Product `self * other` (operator composition).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
        Self {
            modes: self.modes.clone(),
            mat: &self.mat * &other.mat,
        }
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        FockOperator {
            modes: self.modes.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        FockOperator {
            modes: self.modes.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        self.compose(rhs)
    }
}

impl Mul<C64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: C64) -> FockOperator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: f64) -> FockOperator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Neg for &FockOperator {
    type Output = FockOperator;
    fn neg(self) -> FockOperator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl StateVector {
    pub fn from_amplitudes(amps: DVector<C64>, modes: Vec<usize>) -> Result<Self> {
        let dim: usize = modes.iter().product();
        if modes.is_empty() || modes.iter().any(|&d| d < 2) {
            return Err(DcatError::InvalidDimension {
                dim: modes.iter().copied().min().unwrap_or(0),
            });
        }
        if amps.len() != dim {
            return Err(DcatError::DimensionMismatch {
                expected: dim,
                actual: amps.len(),
            });
        }
        Ok(Self { modes, amps })
    }

    /// Number state `|n>`.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(DcatError::InvalidArgument(format!(
                "Fock level {n} outside cutoff {dim}"
            )));
        }
        let mut amps = DVector::zeros(dim);
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { modes: vec![dim], amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            modes: self.modes.clone(),
            amps: &self.amps / C64::new(n, 0.0),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "state dimension mismatch");
        self.amps.dotc(&other.amps)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.amps - &other.amps).norm()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            modes: self.modes.clone(),
            amps: &self.amps * factor,
        }
    }

    /// `a * self + b * other`, unnormalized.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Self {
        assert_eq!(self.dim(), other.dim(), "state dimension mismatch");
        Self {
            modes: self.modes.clone(),
            amps: &self.amps * a + &other.amps * b,
        }
    }

    /// Photon-number distribution of each mode (marginals).
    pub fn marginal_populations(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.modes.iter().map(|&d| vec![0.0; d]).collect();
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            let mut rem = idx;
            for (m, &d) in self.modes.iter().enumerate().rev() {
                out[m][rem % d] += p;
                rem /= d;
            }
        }
        out
    }

    /// Largest per-mode population in the top `TAIL_LEVELS` Fock levels.
    pub fn tail_mass(&self) -> f64 {
        self.marginal_populations()
            .iter()
            .map(|pops| {
                let start = pops.len().saturating_sub(TAIL_LEVELS);
                pops[start..].iter().sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Annihilation operator `a` on `dim` levels.
pub fn annihilation(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let mut mat = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        mat[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(FockOperator { modes: vec![dim], mat })
}

pub fn creation(dim: usize) -> Result<FockOperator> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let mut mat = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        mat[(n, n)] = C64::new(n as f64, 0.0);
    }
    Ok(FockOperator { modes: vec![dim], mat })
}

/// Photon-number parity `(-1)^{a^dagger a}`.
pub fn parity(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let mut mat = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        mat[(n, n)] = C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    Ok(FockOperator { modes: vec![dim], mat })
}

/// Coherent-state amplitudes `e^{-|amp|^2/2} amp^n / sqrt(n!)` for
/// `n < dim`, without any truncation check.
pub fn coherent_amplitudes(amp: C64, dim: usize) -> DVector<C64> {
    let mut amps = DVector::zeros(dim);
    let mut c = C64::new((-amp.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * amp / (n as f64).sqrt();
        }
        amps[n] = c;
    }
    amps
}

/// Poisson mass of a coherent state of mean photon number `mean` that lies
/// in the top `TAIL_LEVELS` levels of a `dim`-level space, together with all
/// the mass above the cutoff.
fn poisson_tail(mean: f64, dim: usize) -> f64 {
    let start = dim.saturating_sub(TAIL_LEVELS);
    // Sum p_n for n >= start via 1 - sum_{n < start}, but computed directly
    // from the upper side to avoid cancellation.
    let mut p = (-mean).exp();
    for n in 1..=start {
        p *= mean / n as f64;
    }
    let mut total = 0.0;
    let mut n = start;
    loop {
        total += p;
        n += 1;
        p *= mean / n as f64;
        if (n as f64) > mean && p < total * 1e-17 {
            break;
        }
        if p == 0.0 {
            break;
        }
    }
    total
}

/// Smallest cutoff whose coherent-state tail for `|amp|` meets `tol`.
pub fn required_dim(amp_abs: f64, tol: f64) -> usize {
    let mean = amp_abs * amp_abs;
    let mut d = 2;
    while poisson_tail(mean, d) >= tol {
        d += 1;
    }
    d
}

/// Default Fock cutoff for amplitudes up to `amp_max`.
///
/// Single mode: `ceil(|a|^2 + 8|a| + 15)`, at least 30. Two-mode (per mode):
/// 25, raised to the smallest cutoff meeting the default tail tolerance.
pub fn default_cutoff(amp_max: f64, two_mode: bool) -> usize {
    let a = amp_max.abs();
    if two_mode {
        required_dim(a, DEFAULT_TAIL_TOL).max(25)
    } else {
        ((a * a + 8.0 * a + 15.0).ceil() as usize).max(30)
    }
}

pub fn coherent_state(amp: C64, dim: usize) -> Result<StateVector> {
    coherent_state_with_tol(amp, dim, DEFAULT_TAIL_TOL)
}

pub fn coherent_state_with_tol(amp: C64, dim: usize, tail_tol: f64) -> Result<StateVector> {
    check_dim(dim)?;
    let tail = poisson_tail(amp.norm_sqr(), dim);
    if tail >= tail_tol {
        return Err(DcatError::Truncation {
            tail,
            tol: tail_tol,
            dim,
            required_dim: required_dim(amp.norm(), tail_tol),
        });
    }
    Ok(StateVector {
        modes: vec![dim],
        amps: coherent_amplitudes(amp, dim),
    })
}

/// Exponential of an anti-Hermitian operator `A`: `exp(A)`, computed from
/// the spectral decomposition of the Hermitian `iA`.
pub(crate) fn exp_anti_hermitian(gen: &DMatrix<C64>) -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    let herm = gen * i;
    let herm = (&herm + herm.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let d = eig.eigenvalues.len();
    let mut scaled = eig.eigenvectors.clone();
    for k in 0..d {
        // exp(A) = exp(-i (iA))
        let phase = C64::new(0.0, -eig.eigenvalues[k]).exp();
        for r in 0..d {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Displacement operator `D(amp) = exp(amp a^dagger - amp^* a)`.
pub fn displacement(amp: C64, dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let tail = poisson_tail(amp.norm_sqr(), dim);
    if tail >= DEFAULT_TAIL_TOL {
        return Err(DcatError::Truncation {
            tail,
            tol: DEFAULT_TAIL_TOL,
            dim,
            required_dim: required_dim(amp.norm(), DEFAULT_TAIL_TOL),
        });
    }
    let a = annihilation(dim)?;
    let gen = a.mat.adjoint() * amp - &a.mat * amp.conj();
    Ok(FockOperator {
        modes: vec![dim],
        mat: exp_anti_hermitian(&gen),
    })
}

/// Kronecker product `a ⊗ b`; `a` is the control (first) mode.
pub fn tensor(a: &FockOperator, b: &FockOperator) -> FockOperator {
    let mut modes = a.modes.clone();
    modes.extend_from_slice(&b.modes);
    FockOperator {
        modes,
        mat: a.mat.kronecker(&b.mat),
    }
}

pub fn tensor_state(x: &StateVector, y: &StateVector) -> StateVector {
    let mut modes = x.modes.clone();
    modes.extend_from_slice(&y.modes);
    StateVector {
        modes,
        amps: x.amps.kronecker(&y.amps),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationReport {
    /// Largest per-mode tail mass.
    pub tail: f64,
    pub per_mode: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
}

pub fn truncation_check(state: &StateVector, tail_tol: f64) -> TruncationReport {
    let per_mode: Vec<f64> = state
        .marginal_populations()
        .iter()
        .map(|pops| {
            let start = pops.len().saturating_sub(TAIL_LEVELS);
            pops[start..].iter().sum()
        })
        .collect();
    let tail = per_mode.iter().copied().fold(0.0, f64::max);
    TruncationReport {
        tail,
        per_mode,
        tol: tail_tol,
        passed: tail < tail_tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn annihilation_small_dims() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(a2.get(0, 1), c(1.0));
        assert_eq!(a2.get(0, 0), c(0.0));
        assert_eq!(a2.get(1, 0), c(0.0));
        assert_eq!(a2.get(1, 1), c(0.0));
        let a3 = annihilation(3).unwrap();
        assert!((a3.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(annihilation(1), Err(DcatError::InvalidDimension { dim: 1 })));
    }

    #[test]
    fn number_operator_eigenvalue() {
        let a = annihilation(10).unwrap();
        let n = &a.adjoint() * &a;
        let ket = StateVector::basis(10, 3).unwrap();
        let out = n.apply(&ket);
        assert!(out.distance(&ket.scale(c(3.0))) < 1e-14);
    }

    #[test]
    fn commutator_is_identity_on_top_block() {
        let d = 20;
        let a = annihilation(d).unwrap();
        let ad = a.adjoint();
        let comm = &(&a * &ad) - &(&ad * &a);
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((comm.get(i, j) - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_vacuum_and_moments() {
        let vac = coherent_state(c(0.0), 10).unwrap();
        assert_eq!(vac, StateVector::basis(10, 0).unwrap());

        let psi = coherent_state(c(1.63), 40).unwrap();
        let a = annihilation(40).unwrap();
        let n = number(40).unwrap();
        assert!((a.expectation(&psi) - c(1.63)).norm() < 1e-6);
        assert!((n.expectation(&psi).re - 2.6569).abs() < 1e-6);
        assert!((psi.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_overlap_formula() {
        let p = coherent_state(c(1.63), 40).unwrap();
        let m = coherent_state(c(-1.63), 40).unwrap();
        let ov = m.inner(&p).re;
        assert!((ov - (-2.0 * 2.6569f64).exp()).abs() < 1e-12);
        assert!((ov - 4.924e-3).abs() < 1e-6);
    }

    #[test]
    fn coherent_eigenvector_residual() {
        let amp = C64::new(1.2, -0.7);
        let d = default_cutoff(amp.norm(), false);
        let psi = coherent_state(amp, d).unwrap();
        let a = annihilation(d).unwrap();
        let res = a.apply(&psi).combine(c(1.0), &psi, -amp);
        assert!(res.norm() < 1e-7);
    }

    #[test]
    fn coherent_rejects_small_cutoff() {
        match coherent_state(c(1.63), 12) {
            Err(DcatError::Truncation { required_dim, .. }) => {
                assert!(required_dim > 12);
                assert!(coherent_state(c(1.63), required_dim).is_ok());
                assert!(coherent_state(c(1.63), required_dim - 1).is_err());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn displacement_identity_and_vacuum() {
        let d0 = displacement(c(0.0), 12).unwrap();
        assert!(d0.max_abs_diff(&d0.identity_like()) < 1e-14);

        let d = 40;
        let disp = displacement(C64::new(0.9, 0.4), d).unwrap();
        assert!(disp.unitarity_deviation() < 1e-9);
        let vac = StateVector::basis(d, 0).unwrap();
        let coh = coherent_state(C64::new(0.9, 0.4), d).unwrap();
        assert!(disp.apply(&vac).distance(&coh) < 1e-8);
    }

    #[test]
    fn displacement_composes_on_real_amplitudes() {
        let d = 40;
        let alpha = 1.63;
        let eta = 0.5 / (4.0 * alpha);
        let shifted = displacement(c(eta), d)
            .unwrap()
            .apply(&coherent_state(c(alpha), d).unwrap());
        let direct = coherent_state(c(alpha + eta), d).unwrap();
        assert!(shifted.fidelity(&direct) > 1.0 - 1e-6);
    }

    #[test]
    fn tensor_identities() {
        let i2 = FockOperator::identity(2).unwrap();
        let i3 = FockOperator::identity(3).unwrap();
        let i6 = tensor(&i2, &i3);
        assert_eq!(i6.modes(), &[2, 3]);
        assert!(i6.max_abs_diff(&FockOperator::identity(6).unwrap()) == 0.0);

        let nc = tensor(&number(4).unwrap(), &FockOperator::identity(7).unwrap());
        let ket = tensor_state(&StateVector::basis(4, 2).unwrap(), &StateVector::basis(7, 5).unwrap());
        assert!(nc.apply(&ket).distance(&ket.scale(c(2.0))) < 1e-14);
    }

    #[test]
    fn truncation_reports() {
        let vac = StateVector::basis(10, 0).unwrap();
        let r = truncation_check(&vac, DEFAULT_TAIL_TOL);
        assert_eq!(r.tail, 0.0);
        assert!(r.passed);

        let coh12 = StateVector::from_amplitudes(coherent_amplitudes(c(1.63), 12), vec![12]).unwrap();
        assert!(!truncation_check(&coh12, DEFAULT_TAIL_TOL).passed);
        let coh40 = coherent_state(c(1.63), 40).unwrap();
        assert!(truncation_check(&coh40, DEFAULT_TAIL_TOL).passed);
    }

    #[test]
    fn default_cutoffs() {
        assert_eq!(default_cutoff(0.0, false), 30);
        assert_eq!(default_cutoff(1.92, false), 35);
        assert_eq!(default_cutoff(3.5, true), required_dim(3.5, DEFAULT_TAIL_TOL));
        assert_eq!(default_cutoff(1.63, true), 25);
    }
}
