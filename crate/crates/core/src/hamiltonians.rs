//! Hamiltonian builders, all in units of the Kerr rate `K`.

use serde::{Deserialize, Serialize};

use crate::cnot::TwoModeParams;
use crate::error::{DcatError, Result};
use crate::fockspace::{annihilation, coherent_state, number, FockOperator, C64};
use crate::propagate::TimeDependentHamiltonian;
use crate::sparse::{SparseOperator, TermStack};
use crate::states::{beta_of, cat_state, CatParams, Parity};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Fails if a coherent state of amplitude `amp` does not fit in `dim`.
fn check_fits(amp: f64, dim: usize) -> Result<()> {
    coherent_state(c(amp), dim).map(|_| ())
}

/// `-(a†² - s)(a² - s*)` for a complex well parameter `s`.
fn kerr_well(dim: usize, s: C64) -> Result<FockOperator> {
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let id = FockOperator::identity(dim)?;
    let left = &(&ad * &ad) - &id.scale(s);
    let right = &(&a * &a) - &id.scale(s.conj());
    Ok((&left * &right).scale(c(-1.0)))
}

/// `R a†a - (a†² - α²)(a² - α²)`.
pub fn detuned_cat(p: &CatParams, dim: usize) -> Result<FockOperator> {
    p.validate()?;
    if p.alpha * p.alpha + 0.5 * p.r >= 0.0 {
        check_fits(beta_of(p.alpha, p.r)?.max(p.alpha), dim)?;
    } else {
        check_fits(p.alpha, dim)?;
    }
    let well = kerr_well(dim, c(p.alpha * p.alpha))?;
    Ok(&well + &number(dim)?.scale(c(p.r)))
}

/// Detuning plus single-photon drive, `R a†a + ε a† + ε* a`.
///
/// For `R ≠ 0` this is assembled as `R (a† + λ*)(a + λ) - R|λ|²`.
pub fn z_drive(p: &CatParams, dim: usize) -> Result<FockOperator> {
    let a = annihilation(dim)?;
    let ad = a.adjoint();
    let id = FockOperator::identity(dim)?;
    match p.lambda() {
        Some(lambda) => {
            let left = &ad + &id.scale(lambda.conj());
            let right = &a + &id.scale(lambda);
            let prod = (&left * &right).scale(c(p.r));
            Ok(&prod - &id.scale(c(p.r * lambda.norm_sqr())))
        }
        None => Ok(&ad.scale(p.eps_z_over_k) + &a.scale(p.eps_z_over_k.conj())),
    }
}

/// `-(a†² - α²)(a² - α²) + R a†a + ε a† + ε* a`.
pub fn full_single_mode(p: &CatParams, dim: usize) -> Result<FockOperator> {
    p.validate()?;
    let mut reach = p.alpha;
    if p.alpha * p.alpha + 0.5 * p.r >= 0.0 {
        let roots = crate::states::gamma_roots(beta_of(p.alpha, p.r)?, p.eps_z_over_k);
        reach = roots.iter().map(|g| g.norm()).fold(reach, f64::max);
    }
    check_fits(reach, dim)?;
    let well = kerr_well(dim, c(p.alpha * p.alpha))?;
    Ok(&well + &z_drive(p, dim)?)
}

/// Counter-diabatic term `-φ̇ (n P + P n)/2`, with `P` the projector onto the
/// instantaneous cat pair `{C+[φ], C-[φ]}` of amplitude `beta_t`.
pub fn sta_correction(beta_t: f64, phi: f64, phidot: f64, dim: usize) -> Result<FockOperator> {
    let plus = cat_state(beta_t, Parity::Even, phi, dim)?;
    let minus = cat_state(beta_t, Parity::Odd, phi, dim)?;
    let proj = plus.amplitudes() * plus.amplitudes().adjoint() + minus.amplitudes() * minus.amplitudes().adjoint();
    let proj = FockOperator::from_matrix(proj, vec![dim])?;
    let n = number(dim)?;
    let sym = &(&n * &proj) + &(&proj * &n);
    Ok(sym.scale(c(-0.5 * phidot)))
}

/// 2x2 matrix of `op` in the orthonormal cat pair `{C+[φ], C-[φ]}`.
pub fn project_onto_cat_pair(op: &FockOperator, beta: f64, phi: f64) -> Result<nalgebra::Matrix2<C64>> {
    let d = op.dim();
    let pair = [
        cat_state(beta, Parity::Even, phi, d)?,
        cat_state(beta, Parity::Odd, phi, d)?,
    ];
    Ok(nalgebra::Matrix2::from_fn(|i, j| op.matrix_element(&pair[i], &pair[j])))
}

/// Fixed operator pieces of the two-mode CNOT Hamiltonian.
///
/// With `c = e^{-2iφ} - 1` the full operator is
/// `H_c - [X X† + c M + c* M† + |c|² Y Y†] + φ̇ W`, where `X = a_t†² - β_t²`,
/// `Y = -β_t² (β_c - a_c†)/(2β_c)`, `M = Y X†` and
/// `W = -a_t†a_t (2β_c - a_c† - a_c)/(4β_c)`.
#[derive(Clone, Debug)]
pub struct CnotTerms {
    modes: Vec<usize>,
    // control, target, cross, cross_adj, conditional, correction
    stack: TermStack,
}

impl CnotTerms {
    pub fn new(beta_c: f64, beta_t: f64, dim_c: usize, dim_t: usize) -> Result<Self> {
        if !(beta_c > 0.0) {
            return Err(DcatError::Domain("control amplitude must be positive".into()));
        }
        check_fits(beta_c, dim_c)?;
        check_fits(beta_t, dim_t)?;
        let ac = annihilation(dim_c)?;
        let acd = ac.adjoint();
        let at = annihilation(dim_t)?;
        let ic = FockOperator::identity(dim_c)?;
        let it = FockOperator::identity(dim_t)?;

        let hc = kerr_well(dim_c, c(beta_c * beta_c))?;
        let ht = kerr_well(dim_t, c(beta_t * beta_t))?;
        let x_adj = &(&at * &at) - &it.scale(c(beta_t * beta_t));
        let y = (&ic.scale(c(beta_c)) - &acd).scale(c(-beta_t * beta_t / (2.0 * beta_c)));
        let yy = &y * &y.adjoint();
        let shift = (&(&ic.scale(c(2.0 * beta_c)) - &acd) - &ac).scale(c(-1.0 / (4.0 * beta_c)));

        // kerr_well already carries the overall minus sign
        let terms = [
            SparseOperator::kron(&hc, &it),
            SparseOperator::kron(&ic, &ht),
            SparseOperator::kron(&y, &x_adj),
            SparseOperator::kron(&y.adjoint(), &x_adj.adjoint()),
            SparseOperator::kron(&yy, &it),
            SparseOperator::kron(&shift, &number(dim_t)?),
        ];
        let refs: Vec<&SparseOperator> = terms.iter().collect();
        Ok(Self {
            modes: vec![dim_c, dim_t],
            stack: TermStack::new(&refs),
        })
    }

    pub fn from_params(p: &TwoModeParams) -> Result<Self> {
        p.validate()?;
        Self::new(p.beta_c, p.beta_t, p.dim_c, p.dim_t)
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// Coefficients of the six stored terms at angle `phi` and rate `phidot`.
    pub fn coefficients(&self, phi: f64, phidot: f64, with_correction: bool) -> [C64; 6] {
        let cc = C64::from_polar(1.0, -2.0 * phi) - c(1.0);
        let corr = if with_correction { phidot } else { 0.0 };
        [c(1.0), c(1.0), -cc, -cc.conj(), c(-cc.norm_sqr()), c(corr)]
    }

    pub fn sparse_at(&self, phi: f64, phidot: f64, with_correction: bool) -> SparseOperator {
        self.stack.combine(&self.coefficients(phi, phidot, with_correction))
    }

    pub fn dense_at(&self, phi: f64, phidot: f64, with_correction: bool) -> FockOperator {
        self.sparse_at(phi, phidot, with_correction)
            .to_dense(self.modes.clone())
    }

    /// The φ̇-proportional piece alone (per unit φ̇).
    pub fn correction_term(&self) -> FockOperator {
        let mut unit = [c(0.0); 6];
        unit[5] = c(1.0);
        self.stack.combine(&unit).to_dense(self.modes.clone())
    }
}

/// Two-mode CNOT Hamiltonian at a fixed rotation angle and rate.
pub fn cnot_hamiltonian(p2: &TwoModeParams, phi: f64, phidot: f64, with_correction: bool) -> Result<FockOperator> {
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&phi) {
        return Err(DcatError::Domain(format!("rotation angle {phi} outside [0, π]")));
    }
    Ok(CnotTerms::from_params(p2)?.dense_at(phi, phidot, with_correction))
}

/// The CNOT Hamiltonian along the linear schedule `φ = π τ / τ_gate`.
#[derive(Clone, Debug)]
pub struct CnotDrive {
    terms: CnotTerms,
    tau_gate: f64,
    with_correction: bool,
}

impl CnotDrive {
    pub fn new(p2: &TwoModeParams) -> Result<Self> {
        Ok(Self {
            terms: CnotTerms::from_params(p2)?,
            tau_gate: p2.tau_gate(),
            with_correction: p2.with_correction,
        })
    }

    pub fn phi_at(&self, tau: f64) -> f64 {
        std::f64::consts::PI * (tau / self.tau_gate).clamp(0.0, 1.0)
    }
}

impl TimeDependentHamiltonian for CnotDrive {
    fn modes(&self) -> Vec<usize> {
        self.terms.modes.clone()
    }

    fn at(&self, tau: f64) -> SparseOperator {
        let phidot = std::f64::consts::PI / self.tau_gate;
        self.terms.sparse_at(self.phi_at(tau), phidot, self.with_correction)
    }

    fn blend(&self, nodes: &[(f64, f64)]) -> SparseOperator {
        let phidot = std::f64::consts::PI / self.tau_gate;
        let mut total = [c(0.0); 6];
        for &(tau, w) in nodes {
            let k = self.terms.coefficients(self.phi_at(tau), phidot, self.with_correction);
            for (t, v) in total.iter_mut().zip(k.iter()) {
                *t += v * w;
            }
        }
        self.terms.stack.combine(&total)
    }
}

/// Restriction `<χ| H |χ>` of a two-mode operator to a fixed control state,
/// leaving an operator on the target mode.
pub fn control_sector(h: &FockOperator, control: &crate::fockspace::StateVector) -> Result<FockOperator> {
    let modes = h.modes();
    if modes.len() != 2 || control.dim() != modes[0] {
        return Err(DcatError::DimensionMismatch {
            expected: modes.first().copied().unwrap_or(0),
            actual: control.dim(),
        });
    }
    let (dc, dt) = (modes[0], modes[1]);
    let chi = control.amplitudes();
    let m = h.matrix();
    let out = nalgebra::DMatrix::from_fn(dt, dt, |i, j| {
        let mut acc = c(0.0);
        for a in 0..dc {
            let ca = chi[a].conj();
            if ca == c(0.0) {
                continue;
            }
            for b in 0..dc {
                acc += ca * m[(a * dt + i, b * dt + j)] * chi[b];
            }
        }
        acc
    });
    FockOperator::from_matrix(out, vec![dt])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianKind {
    DetunedCat,
    ZDrive,
    FullSingleMode,
    Cnot,
    CnotNoCorrection,
    StaCorrection,
}

/// A buildable description of any supported Hamiltonian at fixed time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HamiltonianSpec {
    DetunedCat {
        params: CatParams,
        dim: usize,
    },
    ZDrive {
        params: CatParams,
        dim: usize,
    },
    FullSingleMode {
        params: CatParams,
        dim: usize,
    },
    Cnot {
        params: TwoModeParams,
        phi: f64,
    },
    CnotNoCorrection {
        params: TwoModeParams,
        phi: f64,
    },
    StaCorrection {
        beta_t: f64,
        phi: f64,
        phidot: f64,
        dim: usize,
    },
}

impl HamiltonianSpec {
    pub fn kind(&self) -> HamiltonianKind {
        match self {
            Self::DetunedCat { .. } => HamiltonianKind::DetunedCat,
            Self::ZDrive { .. } => HamiltonianKind::ZDrive,
            Self::FullSingleMode { .. } => HamiltonianKind::FullSingleMode,
            Self::Cnot { .. } => HamiltonianKind::Cnot,
            Self::CnotNoCorrection { .. } => HamiltonianKind::CnotNoCorrection,
            Self::StaCorrection { .. } => HamiltonianKind::StaCorrection,
        }
    }

    pub fn build(&self) -> Result<FockOperator> {
        let op = match self {
            Self::DetunedCat { params, dim } => detuned_cat(params, *dim)?,
            Self::ZDrive { params, dim } => z_drive(params, *dim)?,
            Self::FullSingleMode { params, dim } => full_single_mode(params, *dim)?,
            Self::Cnot { params, phi } => cnot_hamiltonian(params, *phi, params.phidot(), true)?,
            Self::CnotNoCorrection { params, phi } => cnot_hamiltonian(params, *phi, params.phidot(), false)?,
            Self::StaCorrection {
                beta_t,
                phi,
                phidot,
                dim,
            } => sta_correction(*beta_t, *phi, *phidot, *dim)?,
        };
        op.ensure_hermitian()?;
        Ok(op)
    }
}
