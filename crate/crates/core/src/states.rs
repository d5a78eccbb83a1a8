//! Cat-qubit basis geometry: displaced well positions, the cubic for the
//! driven wells, λ-matching of the single-photon drive, and cat states.

use nalgebra::{Matrix3, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{DcatError, Result};
use crate::fockspace::{coherent_amplitudes, coherent_state, StateVector, C64, DEFAULT_TAIL_TOL};

/// Physical and scaled parameters of a single detuned cat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatParams {
    /// Kerr rate `K` (rad/s).
    pub kerr: f64,
    /// Detuning ratio `R = delta / K`.
    pub r: f64,
    /// Coherent amplitude, `eps2 / K = alpha^2`.
    pub alpha: f64,
    /// Single-photon drive `eps_Z / K`.
    pub eps_z_over_k: C64,
}

impl CatParams {
    /// Undriven detuned cat (`eps_Z = 0`).
    pub fn new(kerr: f64, r: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            kerr,
            r,
            alpha,
            eps_z_over_k: C64::new(0.0, 0.0),
        };
        p.validate()?;
        Ok(p)
    }

    /// Drive set so that `alpha = -lambda`, i.e. `eps_Z / K = -R alpha`.
    pub fn lambda_matched(kerr: f64, r: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            kerr,
            r,
            alpha,
            eps_z_over_k: C64::new(lambda_match(alpha, r), 0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_drive(mut self, eps_z_over_k: C64) -> Self {
        self.eps_z_over_k = eps_z_over_k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kerr > 0.0) || !self.kerr.is_finite() {
            return Err(DcatError::Domain(format!(
                "Kerr rate must be positive, got {}",
                self.kerr
            )));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(DcatError::Domain(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !self.r.is_finite() {
            return Err(DcatError::Domain("R must be finite".into()));
        }
        Ok(())
    }

    /// Detuning `delta = R K` (rad/s).
    pub fn delta(&self) -> f64 {
        self.r * self.kerr
    }

    pub fn eps2_over_k(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// `lambda = eps_Z / delta`, undefined at zero detuning.
    pub fn lambda(&self) -> Option<C64> {
        if self.r == 0.0 {
            None
        } else {
            Some(self.eps_z_over_k / self.r)
        }
    }

    pub fn is_lambda_matched(&self) -> bool {
        self.eps_z_over_k.im == 0.0 && self.eps_z_over_k.re == lambda_match(self.alpha, self.r)
    }
}

/// `beta = sqrt(alpha^2 + R/2)`.
pub fn beta_of(alpha: f64, r: f64) -> Result<f64> {
    let arg = alpha * alpha + 0.5 * r;
    if arg < 0.0 {
        return Err(DcatError::Domain(format!(
            "alpha^2 + R/2 = {arg} < 0: no real well position outside the detuned regime"
        )));
    }
    Ok(arg.sqrt())
}

/// Bottom of the left well with the drive λ-matched:
/// `gamma1 = -alpha/2 - sqrt(alpha^2/4 + R/2)`.
pub fn gamma1_of(alpha: f64, r: f64) -> Result<f64> {
    let arg = 0.25 * alpha * alpha + 0.5 * r;
    if arg < 0.0 {
        return Err(DcatError::Domain(format!("alpha^2/4 + R/2 = {arg} < 0")));
    }
    Ok(-0.5 * alpha - arg.sqrt())
}

/// `eps_Z / K = -R alpha`.
pub fn lambda_match(alpha: f64, r: f64) -> f64 {
    let v = -r * alpha;
    // normalise -0.0
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn cubic(beta: f64, eps: C64, g: C64) -> C64 {
    g * g * g - g * (beta * beta) - eps * 0.5
}

/// Roots of `gamma^3 - beta^2 gamma - eps_Z/(2K) = 0`, ascending by real
/// part (ties by imaginary part).
pub fn gamma_roots(beta: f64, eps_z_over_k: C64) -> [C64; 3] {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    // companion matrix of x^3 + 0 x^2 - beta^2 x - eps/2
    let companion = Matrix3::new(
        zero,
        zero,
        eps_z_over_k * 0.5,
        one,
        zero,
        C64::new(beta * beta, 0.0),
        zero,
        one,
        zero,
    );
    let (_, t) = Schur::new(companion).unpack();
    let mut roots = [t[(0, 0)], t[(1, 1)], t[(2, 2)]];
    for g in roots.iter_mut() {
        for _ in 0..3 {
            let f = cubic(beta, eps_z_over_k, *g);
            let df = *g * *g * 3.0 - C64::new(beta * beta, 0.0);
            if df.norm() > 1e-300 {
                let step = f / df;
                if step.is_finite() {
                    *g -= step;
                }
            }
        }
        if g.im.abs() < 1e-12 * (1.0 + g.re.abs()) {
            g.im = 0.0;
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Which rule picks the two computational well positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisConvention {
    /// Two real cubic roots of largest magnitude.
    CubicRoots,
    /// `+alpha` and the closed-form `gamma1`.
    ClosedForm,
}

/// Derived basis geometry for a parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatFrame {
    pub beta: f64,
    pub gamma1: f64,
    pub cubic_roots: [C64; 3],
    /// `e^{-2 beta^2}`.
    pub overlap_mb: f64,
    /// Right and left computational well positions.
    pub plus_point: f64,
    pub minus_point: f64,
    pub convention: BasisConvention,
}

impl CatFrame {
    /// λ-matched drives use `+alpha` and the closed-form `gamma1`; other
    /// drives use the cubic roots.
    pub fn new(p: &CatParams) -> Result<Self> {
        let conv = if p.is_lambda_matched() {
            BasisConvention::ClosedForm
        } else {
            BasisConvention::CubicRoots
        };
        Self::with_convention(p, conv)
    }

    pub fn with_convention(p: &CatParams, convention: BasisConvention) -> Result<Self> {
        p.validate()?;
        let beta = beta_of(p.alpha, p.r)?;
        let roots = gamma_roots(beta, p.eps_z_over_k);
        let mut real: Vec<f64> = roots.iter().filter(|g| g.im.abs() < 1e-9).map(|g| g.re).collect();
        real.sort_by(f64::total_cmp);
        let (gamma1, plus_point, minus_point) = match convention {
            BasisConvention::ClosedForm => {
                let g1 = gamma1_of(p.alpha, p.r)?;
                (g1, p.alpha, g1)
            }
            BasisConvention::CubicRoots => {
                if real.len() < 2 {
                    return Err(DcatError::Domain(
                        "cubic has a single real root: the drive has removed one well".into(),
                    ));
                }
                let lo = real[0];
                let hi = *real.last().unwrap();
                (lo, hi, lo)
            }
        };
        Ok(Self {
            beta,
            gamma1,
            cubic_roots: roots,
            overlap_mb: (-2.0 * beta * beta).exp(),
            plus_point,
            minus_point,
            convention,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// `|C^±_beta[phi]> ∝ |beta e^{i phi}> ± |-beta e^{i phi}>`, normalized.
///
/// Built from the parity-projected coherent amplitudes, so the `beta -> 0`
/// limits (`|0>` and `|1>`) are well defined.
pub fn cat_state(beta: f64, parity: Parity, phi: f64, dim: usize) -> Result<StateVector> {
    let amp = C64::from_polar(beta, phi);
    // validates dim and truncation
    coherent_state(amp, dim)?;
    let mut amps = coherent_amplitudes(amp, dim);
    let keep = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    for n in 0..dim {
        if n % 2 != keep {
            amps[n] = C64::new(0.0, 0.0);
        }
    }
    let norm = amps.norm();
    if norm < 1e-150 {
        // beta = 0: the odd cat limit is |1> (up to the phase of the drive)
        return StateVector::basis(dim, keep);
    }
    StateVector::from_amplitudes(amps / C64::new(norm, 0.0), vec![dim])
}

/// `N± = 1 / sqrt(2 (1 ± e^{-2 beta^2}))`.
pub fn cat_normalization(beta: f64, parity: Parity) -> f64 {
    1.0 / (2.0 * (1.0 + parity.sign() * (-2.0 * beta * beta).exp())).sqrt()
}

/// The four states `{C_alpha^+, C_alpha^-, C_{i alpha}^+, C_{i alpha}^-}` of
/// the extended identity.
pub fn extended_identity_states(alpha: f64, dim: usize) -> Result<[StateVector; 4]> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    Ok([
        cat_state(alpha, Parity::Even, 0.0, dim)?,
        cat_state(alpha, Parity::Odd, 0.0, dim)?,
        cat_state(alpha, Parity::Even, half_pi, dim)?,
        cat_state(alpha, Parity::Odd, half_pi, dim)?,
    ])
}

/// Default tail tolerance re-exported for callers building cat bases.
pub const CAT_TAIL_TOL: f64 = DEFAULT_TAIL_TOL;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{number, parity};
    use std::f64::consts::PI;

    #[test]
    fn beta_values() {
        assert_eq!(beta_of(1.0, 0.0).unwrap(), 1.0);
        assert!((beta_of(1.0, 0.5).unwrap() - 1.118_034).abs() < 1e-6);
        assert!((beta_of(1.63, 2.0).unwrap() - 1.912_303).abs() < 1e-6);
        assert!(matches!(beta_of(0.1, -1.0), Err(DcatError::Domain(_))));
    }

    #[test]
    fn gamma1_values() {
        assert!((gamma1_of(1.7, 0.0).unwrap() + 1.7).abs() < 1e-15);
        assert!((gamma1_of(1.63, 1.0).unwrap() + 1.893_993).abs() < 1e-6);
        assert!((gamma1_of(1.63, 2.0).unwrap() + 2.105_048).abs() < 1e-6);
        assert!(gamma1_of(0.0, -1.0).is_err());
    }

    #[test]
    fn lambda_match_values() {
        assert!((lambda_match(1.63, 1.0) + 1.63).abs() < 1e-15);
        assert!((lambda_match(1.63, 10.0) + 16.3).abs() < 1e-12);
        assert_eq!(lambda_match(2.0, 0.0), 0.0);
        let p = CatParams::lambda_matched(1.0, 1.0, 1.63).unwrap();
        assert!((p.lambda().unwrap().re + 1.63).abs() < 1e-15);
        assert!(p.is_lambda_matched());
    }

    #[test]
    fn cubic_roots_undriven() {
        let r = gamma_roots(1.3, C64::new(0.0, 0.0));
        assert!((r[0] - C64::new(-1.3, 0.0)).norm() < 1e-12);
        assert!(r[1].norm() < 1e-12);
        assert!((r[2] - C64::new(1.3, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cubic_roots_lambda_matched() {
        let beta = beta_of(1.63, 1.0).unwrap();
        let eps = C64::new(lambda_match(1.63, 1.0), 0.0);
        let roots = gamma_roots(beta, eps);
        for g in roots {
            assert!(cubic(beta, eps, g).norm() < 1e-10);
        }
        assert!((roots[0].re - gamma1_of(1.63, 1.0).unwrap()).abs() < 1e-9);
        assert!(roots.iter().any(|g| (g - C64::new(1.63, 0.0)).norm() < 1e-9));
    }

    #[test]
    fn frame_conventions() {
        let matched = CatParams::lambda_matched(1.0, 2.0, 1.63).unwrap();
        let f = CatFrame::new(&matched).unwrap();
        assert_eq!(f.convention, BasisConvention::ClosedForm);
        assert_eq!(f.plus_point, 1.63);
        assert!((f.minus_point + 2.105_048).abs() < 1e-6);
        let cubic = CatFrame::with_convention(&matched, BasisConvention::CubicRoots).unwrap();
        assert!((cubic.minus_point - f.minus_point).abs() < 1e-9);
        assert!((cubic.plus_point - 1.63).abs() < 1e-9);

        let undriven = CatParams::new(1.0, 0.5, 1.0).unwrap();
        let f = CatFrame::new(&undriven).unwrap();
        assert!((f.plus_point - f.beta).abs() < 1e-12);
        assert!((f.minus_point + f.beta).abs() < 1e-12);
        assert!((f.beta * f.beta - 1.25).abs() < 1e-15);
    }

    #[test]
    fn cat_parity_and_orthogonality() {
        let d = 40;
        let plus = cat_state(1.63, Parity::Even, 0.0, d).unwrap();
        let minus = cat_state(1.63, Parity::Odd, 0.0, d).unwrap();
        assert!((plus.norm() - 1.0).abs() < 1e-9);
        for n in (1..d).step_by(2) {
            assert_eq!(plus.amplitudes()[n].norm(), 0.0);
        }
        assert!(minus.inner(&plus).norm() < 1e-10);
        let par = parity(d).unwrap();
        assert!((par.expectation(&plus).re - 1.0).abs() < 1e-12);
        assert!((par.expectation(&minus).re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_phase_pi_flips_odd() {
        let d = 40;
        for par in [Parity::Even, Parity::Odd] {
            let a = cat_state(1.63, par, 0.0, d).unwrap();
            let b = cat_state(1.63, par, PI, d).unwrap();
            assert!(b.distance(&a.scale(C64::new(par.sign(), 0.0))) < 1e-12);
        }
    }

    #[test]
    fn cat_matches_analytic_normalization() {
        let d = 40;
        let beta = 1.2;
        let direct = coherent_state(C64::new(beta, 0.0), d)
            .unwrap()
            .combine(
                C64::new(1.0, 0.0),
                &coherent_state(C64::new(-beta, 0.0), d).unwrap(),
                C64::new(-1.0, 0.0),
            )
            .scale(C64::new(cat_normalization(beta, Parity::Odd), 0.0));
        let cat = cat_state(beta, Parity::Odd, 0.0, d).unwrap();
        assert!(direct.distance(&cat) < 1e-9);
    }

    #[test]
    fn extended_identity_basis() {
        let d = 40;
        let s = extended_identity_states(1.63, d).unwrap();
        assert!(s[0].inner(&s[1]).norm() < 1e-10);
        assert!((s[2].inner(&s[2]).re - 1.0).abs() < 1e-12);
        let n = number(d).unwrap();
        // i*alpha cats share photon statistics with the real ones
        assert!((n.expectation(&s[2]).re - n.expectation(&s[0]).re).abs() < 1e-10);
        let vac = extended_identity_states(0.0, 10).unwrap();
        assert!(vac[0].distance(&StateVector::basis(10, 0).unwrap()) < 1e-15);
        let small = extended_identity_states(1e-4, 10).unwrap();
        assert!(small[0].fidelity(&StateVector::basis(10, 0).unwrap()) > 1.0 - 1e-7);
    }
}
