//! Time evolution.
//!
//! Hamiltonians are dimensionless (units of the Kerr rate `K`); physical
//! time in seconds enters through `K * t`. Static problems use the spectral
//! decomposition directly. Time-dependent problems use piecewise-constant
//! exponentials sampled inside each step, each exponential applied to the
//! state with a Chebyshev expansion, and the step count doubled until the
//! final state stops moving.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{DcatError, Result};
use crate::fockspace::{FockOperator, StateVector, C64};
use crate::sparse::SparseOperator;

const NORM_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Seconds.
    pub t_start: f64,
    /// Seconds.
    pub t_end: f64,
    pub n_points: usize,
    /// Kerr rate `K` in rad/s; converts seconds to the dimensionless `K t`.
    pub unit_scale: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize, unit_scale: f64) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(DcatError::InvalidArgument(format!(
                "time grid needs t_end > t_start (got {t_start} .. {t_end})"
            )));
        }
        if n_points < 2 {
            return Err(DcatError::InvalidArgument("time grid needs at least 2 points".into()));
        }
        if !(unit_scale > 0.0) {
            return Err(DcatError::InvalidArgument("unit scale must be positive".into()));
        }
        Ok(Self {
            t_start,
            t_end,
            n_points,
            unit_scale,
        })
    }

    /// Grid expressed directly in the dimensionless time `K t` (with `K = 1`).
    pub fn dimensionless(tau_start: f64, tau_end: f64, n_points: usize) -> Result<Self> {
        Self::new(tau_start, tau_end, n_points, 1.0)
    }

    pub fn seconds(&self) -> Vec<f64> {
        let n = self.n_points;
        (0..n)
            .map(|k| self.t_start + (self.t_end - self.t_start) * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn scaled(&self) -> Vec<f64> {
        self.seconds().into_iter().map(|t| t * self.unit_scale).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    Spectral,
    Midpoint,
    CommutatorFree4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodInfo {
    pub engine: Engine,
    pub steps: usize,
    /// Distance between the last two step-doubling iterates (0 for spectral).
    pub achieved_tol: f64,
    /// Distance history of the step-doubling sequence.
    pub refinements: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionResult {
    /// Seconds.
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub method: MethodInfo,
}

impl EvolutionResult {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("evolution result holds at least one state")
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Eigendecomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
    modes: Vec<usize>,
}

impl Spectrum {
    pub fn new(h: &FockOperator) -> Result<Self> {
        h.ensure_hermitian()?;
        let herm = h.hermitian_part();
        let eig = SymmetricEigen::new(herm.matrix().clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(h.dim(), h.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self {
            eigenvalues,
            eigenvectors,
            modes: h.modes().to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Components of `state` in the eigenbasis.
    pub fn coefficients(&self, state: &StateVector) -> DVector<C64> {
        self.eigenvectors.adjoint() * state.amplitudes()
    }

    pub fn eigenstate(&self, k: usize) -> StateVector {
        StateVector::from_amplitudes(self.eigenvectors.column(k).into_owned(), self.modes.clone())
            .expect("eigenvector matches operator modes")
    }

    /// `e^{-i H tau} psi` for dimensionless time `tau`.
    pub fn evolve(&self, psi: &StateVector, tau: f64) -> StateVector {
        let mut c = self.coefficients(psi);
        for (k, e) in self.eigenvalues.iter().enumerate() {
            c[k] *= C64::new(0.0, -e * tau).exp();
        }
        StateVector::from_amplitudes(&self.eigenvectors * c, self.modes.clone())
            .expect("evolved state matches operator modes")
    }

    /// Precomputed matrix element `<bra| e^{-i H tau} |ket>` as a function
    /// of `tau`.
    pub fn transition(&self, bra: &StateVector, ket: &StateVector) -> TransitionAmplitude {
        let cb = self.coefficients(bra);
        let ck = self.coefficients(ket);
        let weights = cb.iter().zip(ck.iter()).map(|(b, k)| b.conj() * k).collect();
        TransitionAmplitude {
            energies: self.eigenvalues.clone(),
            weights,
        }
    }
}

/// `tau -> sum_k w_k e^{-i E_k tau}`.
#[derive(Clone, Debug)]
pub struct TransitionAmplitude {
    energies: Vec<f64>,
    weights: Vec<C64>,
}

impl TransitionAmplitude {
    /// Spread of the energies whose weight exceeds `threshold`; sets the
    /// fastest beat in `at`.
    pub fn frequency_span(&self, threshold: f64) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (e, w) in self.energies.iter().zip(self.weights.iter()) {
            if w.norm() > threshold {
                lo = lo.min(*e);
                hi = hi.max(*e);
            }
        }
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }

    /// `at(t0 + k dt)` for `k = 0..n`, by phasor recurrence with an exact
    /// resync every few thousand steps. Terms with weight below `1e-14` are
    /// dropped.
    pub fn sample_uniform(&self, t0: f64, dt: f64, n: usize) -> Vec<C64> {
        const RESYNC: usize = 4096;
        let terms: Vec<(f64, C64)> = self
            .energies
            .iter()
            .zip(self.weights.iter())
            .filter(|(_, w)| w.norm() > 1e-14)
            .map(|(e, w)| (*e, *w))
            .collect();
        let steps: Vec<C64> = terms.iter().map(|(e, _)| C64::new(0.0, -e * dt).exp()).collect();
        let mut phasors: Vec<C64> = Vec::with_capacity(terms.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k % RESYNC == 0 {
                let t = t0 + k as f64 * dt;
                phasors.clear();
                phasors.extend(terms.iter().map(|(e, w)| w * C64::new(0.0, -e * t).exp()));
            }
            out.push(phasors.iter().sum());
            for (p, s) in phasors.iter_mut().zip(steps.iter()) {
                *p *= s;
            }
        }
        out
    }

    pub fn at(&self, tau: f64) -> C64 {
        self.energies
            .iter()
            .zip(self.weights.iter())
            .map(|(e, w)| w * C64::new(0.0, -e * tau).exp())
            .sum()
    }
}

/// Exact evolution under a time-independent Hamiltonian via its spectrum.
pub fn evolve_static(h: &FockOperator, psi0: &StateVector, grid: &TimeGrid) -> Result<EvolutionResult> {
    check_input(h.dim(), psi0)?;
    let spec = Spectrum::new(h)?;
    let times = grid.seconds();
    let states = times.iter().map(|&t| spec.evolve(psi0, t * grid.unit_scale)).collect();
    let result = EvolutionResult {
        times,
        states,
        method: MethodInfo {
            engine: Engine::Spectral,
            steps: 0,
            achieved_tol: 0.0,
            refinements: Vec::new(),
        },
    };
    check_norms(&result)?;
    Ok(result)
}

fn check_input(dim: usize, psi0: &StateVector) -> Result<()> {
    if psi0.dim() != dim {
        return Err(DcatError::DimensionMismatch {
            expected: dim,
            actual: psi0.dim(),
        });
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(DcatError::InvalidArgument(format!(
            "initial state not normalized (norm {})",
            psi0.norm()
        )));
    }
    Ok(())
}

fn check_norms(result: &EvolutionResult) -> Result<()> {
    let dev = result.max_norm_deviation();
    if dev > NORM_TOL {
        return Err(DcatError::InvalidArgument(format!(
            "propagation lost unitarity: norm deviation {dev:.3e}"
        )));
    }
    Ok(())
}

/// A Hamiltonian (units of `K`) as a function of the dimensionless time
/// `tau = K t`.
pub trait TimeDependentHamiltonian: Sync {
    fn modes(&self) -> Vec<usize>;
    fn at(&self, tau: f64) -> SparseOperator;

    /// `sum_k w_k H(tau_k)` for `(tau_k, w_k)` in `nodes`.
    fn blend(&self, nodes: &[(f64, f64)]) -> SparseOperator {
        let ops: Vec<(C64, SparseOperator)> = nodes.iter().map(|&(t, w)| (C64::new(w, 0.0), self.at(t))).collect();
        let refs: Vec<(C64, &SparseOperator)> = ops.iter().map(|(w, o)| (*w, o)).collect();
        SparseOperator::linear_combination(&refs)
    }

    fn dim(&self) -> usize {
        self.modes().iter().product()
    }
}

/// Constant Hamiltonian viewed through the time-dependent interface.
#[derive(Clone, Debug)]
pub struct Constant {
    modes: Vec<usize>,
    op: SparseOperator,
}

impl Constant {
    pub fn new(h: &FockOperator) -> Self {
        Self {
            modes: h.modes().to_vec(),
            op: SparseOperator::from_dense(h),
        }
    }
}

impl TimeDependentHamiltonian for Constant {
    fn modes(&self) -> Vec<usize> {
        self.modes.clone()
    }
    fn at(&self, _tau: f64) -> SparseOperator {
        self.op.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Stepper {
    /// One exponential per step, Hamiltonian sampled at the step midpoint.
    Midpoint,
    /// Two exponentials per step built from the Hamiltonian at the two
    /// Gauss-Legendre nodes (fourth order, commutator free).
    CommutatorFree4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperOptions {
    pub stepper: Stepper,
    /// Target 2-norm distance between the final states of successive
    /// step-doubling iterates.
    pub tol: f64,
    pub initial_steps: usize,
    pub max_steps: usize,
    /// Number of equally spaced intermediate samples to store (0 = only the
    /// initial and final states).
    pub samples: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            stepper: Stepper::CommutatorFree4,
            tol: 1e-8,
            initial_steps: 16,
            max_steps: 1 << 16,
            samples: 0,
        }
    }
}

/// Bessel functions `J_0(z) .. J_{n-1}(z)` for `z >= 0` via Miller's
/// backward recurrence normalized by `J_0 + 2 sum J_{2k} = 1`.
fn bessel_j_sequence(z: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    if z < 1e-300 {
        out[0] = 1.0;
        return out;
    }
    let start = n.max(z as usize) + 30 + (z.sqrt() * 4.0) as usize;
    let start = start + start % 2;
    let mut next = 0.0; // f_{k+1}
    let mut cur = 1e-300; // f_k
    let mut norm = 0.0;
    let mut vals = vec![0.0; start + 1];
    vals[start] = cur;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / z * cur - next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for k in 0..n {
        out[k] = vals[k] / norm;
    }
    out
}

/// `exp(-i H dt) psi` by Chebyshev expansion on the Gershgorin interval of
/// `H`.
pub fn chebyshev_expm_apply(h: &SparseOperator, dt: f64, psi: &DVector<C64>) -> DVector<C64> {
    let (lo, hi) = h.spectral_bounds();
    let center = 0.5 * (hi + lo);
    let radius = (0.5 * (hi - lo)).max(1e-12) * (1.0 + 1e-12);
    let z = radius * dt.abs();
    let sign = dt.signum();
    // J_k(z) decays super-exponentially once k exceeds z.
    let n_max = (z + 12.0 * z.cbrt() + 25.0) as usize;
    let mut bessel = bessel_j_sequence(z, n_max);
    let keep = (0..n_max)
        .rev()
        .find(|&k| k as f64 <= z || bessel[k].abs() > 1e-17)
        .map_or(1, |k| k + 1);
    bessel.truncate(keep.max(2));

    let dim = h.dim();
    let mut hv = vec![C64::new(0.0, 0.0); dim];
    let scaled_apply = |v: &[C64], hv: &mut Vec<C64>, out: &mut Vec<C64>| {
        h.mul_vec_into(v, hv);
        for i in 0..dim {
            out[i] = (hv[i] - v[i] * center) / radius;
        }
    };

    let mut prev: Vec<C64> = psi.as_slice().to_vec();
    let mut cur = vec![C64::new(0.0, 0.0); dim];
    scaled_apply(&prev, &mut hv, &mut cur);

    let mut acc: Vec<C64> = prev.iter().map(|v| v * bessel[0]).collect();
    // coefficient 2 (-i sign)^k J_k(z)
    let minus_i = C64::new(0.0, -sign);
    let mut phase = minus_i;
    let mut next = vec![C64::new(0.0, 0.0); dim];
    for (k, jk) in bessel.iter().enumerate().skip(1) {
        let coeff = phase * (2.0 * jk);
        for i in 0..dim {
            acc[i] += coeff * cur[i];
        }
        if k + 1 == bessel.len() {
            break;
        }
        scaled_apply(&cur, &mut hv, &mut next);
        for i in 0..dim {
            next[i] = next[i] * 2.0 - prev[i];
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        phase *= minus_i;
    }
    let global = C64::new(0.0, -center * dt).exp();
    DVector::from_iterator(dim, acc.into_iter().map(|v| v * global))
}

const CF4_A1: f64 = (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0;
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6

fn step(h: &dyn TimeDependentHamiltonian, stepper: Stepper, tau: f64, dt: f64, psi: &DVector<C64>) -> DVector<C64> {
    match stepper {
        Stepper::Midpoint => chebyshev_expm_apply(&h.at(tau + 0.5 * dt), dt, psi),
        Stepper::CommutatorFree4 => {
            let t1 = tau + (0.5 - GAUSS_OFFSET) * dt;
            let t2 = tau + (0.5 + GAUSS_OFFSET) * dt;
            let early = h.blend(&[(t1, 2.0 * CF4_A2), (t2, 2.0 * CF4_A1)]);
            let late = h.blend(&[(t1, 2.0 * CF4_A1), (t2, 2.0 * CF4_A2)]);
            // each factor carries half the step: a1 + a2 = 1/2
            let mid = chebyshev_expm_apply(&early, 0.5 * dt, psi);
            chebyshev_expm_apply(&late, 0.5 * dt, &mid)
        }
    }
}

fn run_fixed(
    h: &dyn TimeDependentHamiltonian,
    psi0: &DVector<C64>,
    tau_total: f64,
    n_steps: usize,
    stepper: Stepper,
    samples: usize,
) -> Vec<DVector<C64>> {
    let dt = tau_total / n_steps as f64;
    let stride = n_steps.checked_div(samples).unwrap_or(n_steps);
    let mut out = vec![psi0.clone()];
    let mut psi = psi0.clone();
    for k in 0..n_steps {
        psi = step(h, stepper, k as f64 * dt, dt, &psi);
        if (k + 1) % stride == 0 {
            out.push(psi.clone());
        }
    }
    out
}

/// Evolves `psi0` under `h` from `t = 0` to `duration` seconds.
pub fn evolve_timedep(
    h: &dyn TimeDependentHamiltonian,
    psi0: &StateVector,
    duration: f64,
    unit_scale: f64,
    opts: &StepperOptions,
) -> Result<EvolutionResult> {
    check_input(h.dim(), psi0)?;
    if !(duration > 0.0) || !(unit_scale > 0.0) {
        return Err(DcatError::InvalidArgument(
            "duration and unit scale must be positive".into(),
        ));
    }
    let tau_total = duration * unit_scale;
    for tau in [0.0, 0.5 * tau_total, tau_total] {
        let dense = h.at(tau).to_dense(h.modes());
        dense.ensure_hermitian()?;
    }

    let samples = opts.samples;
    let mut n = opts.initial_steps.max(1);
    if samples > 0 {
        n = n.div_ceil(samples) * samples;
    }
    let modes = h.modes();
    let amps0 = psi0.amplitudes().clone();
    let order = match opts.stepper {
        Stepper::Midpoint => 2,
        Stepper::CommutatorFree4 => 4,
    };
    let mut prev = run_fixed(h, &amps0, tau_total, n, opts.stepper, samples);
    let mut refinements: Vec<f64> = Vec::new();
    loop {
        // Once two successive distances show the expected order, skip
        // ahead to the predicted step count and compare it with its half.
        let mut jump = 1usize;
        if let [.., before, last] = refinements[..] {
            let nominal = (1u64 << order) as f64;
            if last > opts.tol && before / last > 0.5 * nominal {
                let per_doubling = (before / last).clamp(nominal, 4.0 * nominal);
                let needed = ((last / opts.tol).ln() / per_doubling.ln()).ceil() as u32;
                if needed >= 2 {
                    jump = 1 << (needed - 1);
                }
            }
        }
        if jump > 1 && n * jump * 2 <= opts.max_steps {
            n *= jump;
            prev = run_fixed(h, &amps0, tau_total, n, opts.stepper, samples);
        }
        let n2 = 2 * n;
        if n2 > opts.max_steps {
            return Err(DcatError::Convergence {
                steps: n,
                distance: refinements.last().copied().unwrap_or(f64::NAN),
            });
        }
        let cur = run_fixed(h, &amps0, tau_total, n2, opts.stepper, samples);
        let dist = (cur.last().unwrap() - prev.last().unwrap()).norm();
        refinements.push(dist);
        prev = cur;
        n = n2;
        if dist < opts.tol {
            break;
        }
    }
    let count = prev.len();
    let times = (0..count).map(|k| duration * k as f64 / (count - 1) as f64).collect();
    let states = prev
        .into_iter()
        .map(|a| StateVector::from_amplitudes(a, modes.clone()))
        .collect::<Result<Vec<_>>>()?;
    let engine = match opts.stepper {
        Stepper::Midpoint => Engine::Midpoint,
        Stepper::CommutatorFree4 => Engine::CommutatorFree4,
    };
    let result = EvolutionResult {
        times,
        states,
        method: MethodInfo {
            engine,
            steps: n,
            achieved_tol: *refinements.last().unwrap(),
            refinements,
        },
    };
    check_norms(&result)?;
    Ok(result)
}
