//! Single-qubit diagnostics: leakage, X and Z gate fidelities and times,
//! speed scans, phase-space densities and the closed-form rate estimates.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DcatError, Result};
use crate::fockspace::{coherent_amplitudes, coherent_state, default_cutoff, StateVector, C64};
use crate::hamiltonians::{detuned_cat, full_single_mode};
use crate::propagate::{Spectrum, TransitionAmplitude};
use crate::states::{beta_of, cat_state, gamma1_of, CatParams, Parity};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

// ---------------------------------------------------------------------------
// sweep container

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dims: Vec<usize>,
    pub tol: f64,
    pub code_version: String,
}

impl Provenance {
    pub fn new(dims: Vec<usize>, tol: f64) -> Self {
        Self {
            dims,
            tol,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Values on the outer product of one or more axes, last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub columns: Vec<Column>,
    pub params: serde_json::Value,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn new(
        axes: Vec<Axis>,
        columns: Vec<Column>,
        params: serde_json::Value,
        provenance: Provenance,
    ) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.values.len()).product();
        for col in &columns {
            if col.values.len() != n {
                return Err(DcatError::DimensionMismatch {
                    expected: n,
                    actual: col.values.len(),
                });
            }
        }
        Ok(Self {
            axes,
            columns,
            params,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Long-format CSV: one column per axis, then one per value column.
    /// Headers carry units in brackets.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let headers: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("{} [{}]", a.name, a.unit))
            .chain(self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)))
            .collect();
        out.push_str(&headers.join(","));
        out.push('\n');
        let shape: Vec<usize> = self.axes.iter().map(|a| a.values.len()).collect();
        let mut idx = vec![0usize; shape.len()];
        for row in 0..self.len() {
            let mut fields: Vec<String> = Vec::with_capacity(headers.len());
            for (a, &i) in self.axes.iter().zip(idx.iter()) {
                fields.push(format!("{:?}", a.values[i]));
            }
            for col in &self.columns {
                fields.push(format!("{:?}", col.values[row]));
            }
            out.push_str(&fields.join(","));
            out.push('\n');
            for k in (0..shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// projections

/// Population of `psi` inside the span of `basis` (Gram-Schmidt
/// orthonormalized, so non-orthogonal inputs are fine).
pub fn span_population(basis: &[StateVector], psi: &StateVector) -> f64 {
    let mut ortho: Vec<StateVector> = Vec::new();
    for b in basis {
        let mut v = b.clone();
        for e in &ortho {
            let proj = e.inner(&v);
            v = v.combine(c(1.0), e, -proj);
        }
        let n = v.norm();
        if n > 1e-12 {
            ortho.push(v.scale(c(1.0 / n)));
        }
    }
    ortho.iter().map(|e| e.inner(psi).norm_sqr()).sum()
}

/// How a target state is compared with the evolved one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FidelityBasis {
    /// Raw squared overlap with the coherent state.
    #[default]
    Raw,
    /// Overlap with the symmetric (Löwdin) orthonormalization of `|±β>`.
    Lowdin,
}

/// Löwdin-orthonormalized pair closest to `(|β>, |-β>)`.
pub fn lowdin_pair(beta: f64, dim: usize) -> Result<(StateVector, StateVector)> {
    let plus = cat_state(beta, Parity::Even, 0.0, dim)?;
    let minus = cat_state(beta, Parity::Odd, 0.0, dim)?;
    let h = c(std::f64::consts::FRAC_1_SQRT_2);
    Ok((plus.combine(h, &minus, h), plus.combine(h, &minus, -h)))
}

// ---------------------------------------------------------------------------
// X gate

/// Leakage diagnostics for an initial `|β>` under the detuned cat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcsTrace {
    /// Seconds.
    pub times: Vec<f64>,
    /// `|<-β|ψ>|² + |<β|ψ>|² - e^{-2β²}`.
    pub p_cs: Vec<f64>,
    pub overlap_minus: Vec<f64>,
    pub overlap_plus: Vec<f64>,
    /// Population in the orthogonal projector onto `span{|β>, |-β>}`.
    pub code_population: Vec<f64>,
}

struct XSystem {
    beta: f64,
    spectrum: Spectrum,
    to_minus: TransitionAmplitude,
    to_plus: TransitionAmplitude,
    to_cat_plus: TransitionAmplitude,
    to_cat_minus: TransitionAmplitude,
    lowdin_minus: TransitionAmplitude,
}

impl XSystem {
    fn new(p: &CatParams, dim: usize) -> Result<Self> {
        if p.eps_z_over_k != c(0.0) {
            return Err(DcatError::InvalidArgument("X-gate analysis needs eps_Z = 0".into()));
        }
        let beta = beta_of(p.alpha, p.r)?;
        let h = detuned_cat(p, dim)?;
        let spectrum = Spectrum::new(&h)?;
        let plus = coherent_state(c(beta), dim)?;
        let minus = coherent_state(c(-beta), dim)?;
        let cp = cat_state(beta, Parity::Even, 0.0, dim)?;
        let cm = cat_state(beta, Parity::Odd, 0.0, dim)?;
        let (_, lm) = lowdin_pair(beta, dim)?;
        Ok(Self {
            beta,
            to_minus: spectrum.transition(&minus, &plus),
            to_plus: spectrum.transition(&plus, &plus),
            to_cat_plus: spectrum.transition(&cp, &plus),
            to_cat_minus: spectrum.transition(&cm, &plus),
            lowdin_minus: spectrum.transition(&lm, &plus),
            spectrum,
        })
    }

    fn fidelity(&self, tau: f64, basis: FidelityBasis) -> f64 {
        match basis {
            FidelityBasis::Raw => self.to_minus.at(tau).norm_sqr(),
            FidelityBasis::Lowdin => self.lowdin_minus.at(tau).norm_sqr(),
        }
    }

    fn p_cs(&self, tau: f64) -> (f64, f64, f64) {
        let m = self.to_minus.at(tau).norm_sqr();
        let p = self.to_plus.at(tau).norm_sqr();
        (m + p - (-2.0 * self.beta * self.beta).exp(), m, p)
    }

    fn code_population(&self, tau: f64) -> f64 {
        self.to_cat_plus.at(tau).norm_sqr() + self.to_cat_minus.at(tau).norm_sqr()
    }

    /// Index of the eigenvector with the largest overlap with `state`.
    fn dominant_level(&self, state: &StateVector) -> usize {
        let coeffs = self.spectrum.coefficients(state);
        let mut best = 0;
        for k in 0..coeffs.len() {
            if coeffs[k].norm() > coeffs[best].norm() {
                best = k;
            }
        }
        best
    }

    /// `E(C-) - E(C+)` of the eigenstates continuously connected to the cats.
    fn splitting(&self, dim: usize) -> Result<f64> {
        let cp = cat_state(self.beta, Parity::Even, 0.0, dim)?;
        let cm = cat_state(self.beta, Parity::Odd, 0.0, dim)?;
        let kp = self.dominant_level(&cp);
        let km = self.dominant_level(&cm);
        if kp == km {
            return Ok(0.0);
        }
        Ok(self.spectrum.eigenvalues[km] - self.spectrum.eigenvalues[kp])
    }

    fn level_span(&self) -> f64 {
        self.to_minus.frequency_span(1e-9)
    }
}

fn x_dim(p: &CatParams) -> Result<usize> {
    Ok(default_cutoff(beta_of(p.alpha, p.r)?.max(p.alpha), false))
}

/// Leakage diagnostics at the given times (seconds), with `dim` Fock levels
/// (`None` = default cutoff).
pub fn p_cs(p: &CatParams, times: &[f64], dim: Option<usize>) -> Result<PcsTrace> {
    let dim = match dim {
        Some(d) => d,
        None => x_dim(p)?,
    };
    let sys = XSystem::new(p, dim)?;
    let mut out = PcsTrace {
        times: times.to_vec(),
        p_cs: Vec::with_capacity(times.len()),
        overlap_minus: Vec::with_capacity(times.len()),
        overlap_plus: Vec::with_capacity(times.len()),
        code_population: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let tau = t * p.kerr;
        let (pcs, m, pl) = sys.p_cs(tau);
        out.p_cs.push(pcs);
        out.overlap_minus.push(m);
        out.overlap_plus.push(pl);
        out.code_population.push(sys.code_population(tau));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XTrace {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// `F / P_cs`.
    pub fidelity_ideal: Vec<f64>,
    pub p_cs: Vec<f64>,
    pub code_population: Vec<f64>,
}

/// `F(t) = |<-β| e^{-iHt} |β>|²` and its leakage-normalized version.
pub fn x_fidelity_trace(p: &CatParams, times: &[f64], dim: Option<usize>, basis: FidelityBasis) -> Result<XTrace> {
    let dim = match dim {
        Some(d) => d,
        None => x_dim(p)?,
    };
    let sys = XSystem::new(p, dim)?;
    let mut tr = XTrace {
        times: times.to_vec(),
        fidelity: Vec::with_capacity(times.len()),
        fidelity_ideal: Vec::with_capacity(times.len()),
        p_cs: Vec::with_capacity(times.len()),
        code_population: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let tau = t * p.kerr;
        let f = sys.fidelity(tau, basis);
        let (pcs, _, _) = sys.p_cs(tau);
        tr.fidelity.push(f);
        tr.fidelity_ideal.push(f / pcs);
        tr.p_cs.push(pcs);
        tr.code_population.push(sys.code_population(tau));
    }
    Ok(tr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XGate {
    /// Seconds.
    pub gate_time: f64,
    /// Units of `1/K`.
    pub tau: f64,
    pub f_max: f64,
    /// +1 or -1: direction of the rotation about the X axis.
    pub direction_sign: f64,
    /// `direction_sign / (K T)`; zero when the splitting vanishes.
    pub speed: f64,
    /// `(E(C-) - E(C+)) / π`, the rate implied by the spectrum alone.
    pub spectral_speed: f64,
    pub diverged: bool,
    pub dim: usize,
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Largest value of `|amp|²` over a uniform grid on `[lo, hi]`, refined by
/// golden section between the neighbouring grid points.
fn scan_max(amp: &TransitionAmplitude, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let step = (hi - lo) / (n - 1) as f64;
    let chunk = 65_536;
    let starts: Vec<usize> = (0..n).step_by(chunk).collect();
    let best = starts
        .par_iter()
        .map(|&k0| {
            let len = chunk.min(n - k0);
            let vals = amp.sample_uniform(lo + k0 as f64 * step, step, len);
            let mut best = (lo + k0 as f64 * step, f64::NEG_INFINITY);
            for (i, v) in vals.iter().enumerate() {
                let f = v.norm_sqr();
                if f > best.1 {
                    best = (lo + (k0 + i) as f64 * step, f);
                }
            }
            best
        })
        .reduce(
            || (lo, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    let f = |t: f64| amp.at(t).norm_sqr();
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let refined = golden_max(&f, a, b, 1e-10 * (1.0 + best.0.abs()));
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}

/// Time of the best `|β> -> |-β>` transfer under the detuned cat.
///
/// The window is centred on the spectral estimate `π / |ΔE|` (half to one
/// and a half of it) and sampled finely enough to resolve the fastest level
/// beat before golden-section refinement.
pub fn gate_time_x(p: &CatParams, dim: Option<usize>) -> Result<XGate> {
    let dim = match dim {
        Some(d) => d,
        None => x_dim(p)?,
    };
    let sys = XSystem::new(p, dim)?;
    let split = sys.splitting(dim)?;
    let spectral_speed = split / PI;
    if split.abs() < 1e-12 {
        return Ok(XGate {
            gate_time: f64::INFINITY,
            tau: f64::INFINITY,
            f_max: sys.fidelity(0.0, FidelityBasis::Raw),
            direction_sign: 1.0,
            speed: 0.0,
            spectral_speed,
            diverged: true,
            dim,
        });
    }
    let t_est = PI / split.abs();
    let (lo, hi) = (0.5 * t_est, 1.5 * t_est);
    let beat = 2.0 * PI / sys.level_span().max(1e-9);
    let n = (((hi - lo) / (0.05 * beat)) as usize).clamp(2001, 4_000_000);
    let (tau, f_max) = scan_max(&sys.to_minus, lo, hi, n);

    let sign = rotation_sign(&sys, t_est);
    Ok(XGate {
        gate_time: tau / p.kerr,
        tau,
        f_max,
        direction_sign: sign,
        speed: sign / tau,
        spectral_speed,
        diverged: f_max < 0.5,
        dim,
    })
}

/// `-sign` of the early-time slope of `arg(<C-|ψ>/<C+|ψ>)`.
fn rotation_sign(sys: &XSystem, t_est: f64) -> f64 {
    let n = 200;
    let span = 0.25 * t_est;
    let mut ts = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut last = 0.0;
    let mut offset = 0.0;
    for k in 0..n {
        let tau = span * k as f64 / (n - 1) as f64;
        let ratio = sys.to_cat_minus.at(tau) / sys.to_cat_plus.at(tau);
        let raw = ratio.arg();
        if k > 0 {
            let d = raw - last;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        last = raw;
        ts.push(tau);
        phases.push(raw + offset);
    }
    let mt = ts.iter().sum::<f64>() / n as f64;
    let mp = phases.iter().sum::<f64>() / n as f64;
    let slope: f64 = ts
        .iter()
        .zip(phases.iter())
        .map(|(t, ph)| (t - mt) * (ph - mp))
        .sum::<f64>();
    if slope > 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XSpeedScan {
    pub sweep: SweepResult,
    pub zero_crossings: Vec<f64>,
}

/// Linear-interpolated sign changes of `values` over `grid`; exact zeros are
/// skipped so a flat run between opposite signs counts once.
pub fn zero_crossings(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(values.iter())
        .filter(|(_, v)| **v != 0.0 && v.is_finite())
        .map(|(g, v)| (*g, *v))
        .collect();
    pts.windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            x0 + (x1 - x0) * y0 / (y0 - y1)
        })
        .collect()
}

/// Signed `1/(K T)` over a detuning grid, with its zero crossings.
pub fn x_speed_scan(alpha: f64, r_grid: &[f64], dim: Option<usize>) -> Result<XSpeedScan> {
    if r_grid.iter().any(|r| !(0.0..=7.0).contains(r)) {
        return Err(DcatError::Domain("detuning grid must lie within [0, 7]".into()));
    }
    let r_max = r_grid.iter().cloned().fold(0.0, f64::max);
    let dim = match dim {
        Some(d) => d,
        None => default_cutoff(beta_of(alpha, r_max)?, false),
    };
    let gates: Vec<Result<Option<XGate>>> = r_grid
        .par_iter()
        .map(|&r| {
            if r == 0.0 {
                return Ok(None);
            }
            let p = CatParams::new(1.0, r, alpha)?;
            gate_time_x(&p, Some(dim)).map(Some)
        })
        .collect();
    let mut speed = Vec::with_capacity(r_grid.len());
    let mut spectral = Vec::with_capacity(r_grid.len());
    let mut fmax = Vec::with_capacity(r_grid.len());
    let mut diverged = Vec::with_capacity(r_grid.len());
    for g in gates {
        match g? {
            None => {
                speed.push(0.0);
                spectral.push(0.0);
                fmax.push(f64::NAN);
                diverged.push(1.0);
            }
            Some(g) => {
                speed.push(g.speed);
                spectral.push(g.spectral_speed);
                fmax.push(g.f_max);
                diverged.push(if g.diverged { 1.0 } else { 0.0 });
            }
        }
    }
    let zero_crossings = zero_crossings(r_grid, &speed);
    let sweep = SweepResult::new(
        vec![Axis {
            name: "R".into(),
            unit: "dimensionless".into(),
            values: r_grid.to_vec(),
        }],
        vec![
            Column {
                name: "speed".into(),
                unit: "1/(K T), dimensionless".into(),
                values: speed,
            },
            Column {
                name: "spectral_speed".into(),
                unit: "1/(K T), dimensionless".into(),
                values: spectral,
            },
            Column {
                name: "f_max".into(),
                unit: "dimensionless".into(),
                values: fmax,
            },
            Column {
                name: "diverged".into(),
                unit: "flag".into(),
                values: diverged,
            },
        ],
        serde_json::json!({ "alpha": alpha }),
        Provenance::new(vec![dim], 0.0),
    )?;
    Ok(XSpeedScan { sweep, zero_crossings })
}

// ---------------------------------------------------------------------------
// Z gate

/// `ω_Z` (rad/s) from the well positions: `ω/K = -(γ1² - α²)² + R (γ1 - α)²`.
pub fn omega_z_analytic(alpha: f64, r: f64, kerr: f64) -> Result<f64> {
    let g = gamma1_of(alpha, r)?;
    let w = -(g * g - alpha * alpha).powi(2) + r * (g - alpha).powi(2);
    Ok(w * kerr)
}

/// Least-squares fit `y ≈ offset + a cos(ω t) + b sin(ω t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineFit {
    pub offset: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
    pub omega: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

fn fit_fixed_omega(t: &[f64], y: &[f64], omega: f64) -> CosineFit {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let row = Vector3::new(1.0, (omega * ti).cos(), (omega * ti).sin());
        ata += row * row.transpose();
        aty += row * yi;
    }
    let coef = ata
        .lu()
        .solve(&aty)
        .unwrap_or_else(|| Vector3::new(y.iter().sum::<f64>() / y.len() as f64, 0.0, 0.0));
    let mut ss = 0.0;
    for (&ti, &yi) in t.iter().zip(y) {
        let m = coef[0] + coef[1] * (omega * ti).cos() + coef[2] * (omega * ti).sin();
        ss += (yi - m).powi(2);
    }
    CosineFit {
        offset: coef[0],
        cos_amp: coef[1],
        sin_amp: coef[2],
        omega,
        rms: (ss / t.len() as f64).sqrt(),
    }
}

/// Fits a single sinusoid with angular frequency searched in `[lo, hi]`.
pub fn fit_cosine(t: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<CosineFit> {
    if t.len() != y.len() || t.len() < 4 {
        return Err(DcatError::InvalidArgument("need at least four samples to fit".into()));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(DcatError::InvalidArgument("invalid frequency bracket".into()));
    }
    let n = 400;
    let step = (hi - lo) / n as f64;
    let mut best = fit_fixed_omega(t, y, lo);
    for k in 1..=n {
        let f = fit_fixed_omega(t, y, lo + k as f64 * step);
        if f.rms < best.rms {
            best = f;
        }
    }
    let neg = |w: f64| -fit_fixed_omega(t, y, w).rms;
    let (w, _) = golden_max(
        &neg,
        (best.omega - step).max(lo),
        (best.omega + step).min(hi),
        1e-12 * best.omega,
    );
    let refined = fit_fixed_omega(t, y, w);
    Ok(if refined.rms <= best.rms { refined } else { best })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZGate {
    /// rad/s.
    pub omega_analytic: f64,
    /// rad/s, from the survival-probability oscillation.
    pub omega_numeric: f64,
    /// `π / ω_analytic` (s).
    pub t_pi: f64,
    pub t_pi_numeric: f64,
    /// Fidelity with `(|α> - |γ1>)/N` at `t_pi`.
    pub fidelity: f64,
    pub code_population: f64,
    /// `‖(H - E)|α>‖`.
    pub eigen_residual: f64,
    pub dim: usize,
}

struct ZSystem {
    spectrum: Spectrum,
    psi0: StateVector,
    target: StateVector,
    well_plus: StateVector,
    well_minus: StateVector,
    eigen_residual: f64,
    dim: usize,
}

fn z_dim(p: &CatParams) -> Result<usize> {
    let g = gamma1_of(p.alpha, p.r)?;
    Ok(default_cutoff(g.abs().max(p.alpha), false))
}

impl ZSystem {
    fn new(p: &CatParams, dim: Option<usize>) -> Result<Self> {
        if !p.is_lambda_matched() {
            return Err(DcatError::InvalidArgument(
                "Z-gate analysis needs the λ-matched drive eps_Z/K = -R α".into(),
            ));
        }
        let dim = match dim {
            Some(d) => d,
            None => z_dim(p)?,
        };
        let gamma1 = gamma1_of(p.alpha, p.r)?;
        let h = full_single_mode(p, dim)?;
        let well_plus = coherent_state(c(p.alpha), dim)?;
        let well_minus = coherent_state(c(gamma1), dim)?;
        let e = h.expectation(&well_plus);
        let eigen_residual = (h.apply(&well_plus).into_amplitudes() - well_plus.amplitudes() * e).norm();
        let psi0 = well_plus.combine(c(1.0), &well_minus, c(1.0)).normalized();
        let target = well_plus.combine(c(1.0), &well_minus, c(-1.0)).normalized();
        Ok(Self {
            spectrum: Spectrum::new(&h)?,
            psi0,
            target,
            well_plus,
            well_minus,
            eigen_residual,
            dim,
        })
    }

    fn ideal_at(&self, omega_tau: f64) -> StateVector {
        self.well_plus
            .combine(c(1.0), &self.well_minus, C64::from_polar(1.0, -omega_tau))
            .normalized()
    }
}

/// Numeric Z rotation for λ-matched parameters.
pub fn z_gate_numeric(p: &CatParams, dim: Option<usize>) -> Result<ZGate> {
    let sys = ZSystem::new(p, dim)?;
    let w_an = omega_z_analytic(p.alpha, p.r, 1.0)?;
    let tpi = PI / w_an;
    let survival = sys.spectrum.transition(&sys.psi0, &sys.psi0);
    let n = 2000;
    let ts: Vec<f64> = (0..n).map(|k| 2.2 * tpi * k as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| survival.at(t).norm_sqr()).collect();
    let fit = fit_cosine(&ts, &ys, 0.5 * w_an, 1.5 * w_an)?;
    let psi = sys.spectrum.evolve(&sys.psi0, tpi);
    Ok(ZGate {
        omega_analytic: w_an * p.kerr,
        omega_numeric: fit.omega * p.kerr,
        t_pi: tpi / p.kerr,
        t_pi_numeric: PI / fit.omega / p.kerr,
        fidelity: sys.target.fidelity(&psi),
        code_population: span_population(&[sys.well_plus.clone(), sys.well_minus.clone()], &psi),
        eigen_residual: sys.eigen_residual,
        dim: sys.dim,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZErrorTrace {
    /// Seconds.
    pub times: Vec<f64>,
    /// Time in units of the numeric `T_π`.
    pub normalized_time: Vec<f64>,
    /// `1 - |<ideal(t)|ψ(t)>|²` against the rotating ideal
    /// `(|α> + e^{-iωt}|γ1>)/N` at the fitted frequency.
    pub error: Vec<f64>,
    /// `1 -` population in `span{|α>, |γ1>}`.
    pub min_error_bound: Vec<f64>,
}

/// Error of a running Z rotation over `n_periods` half-turns.
pub fn z_error_trace(p: &CatParams, n_periods: f64, n_points: usize, dim: Option<usize>) -> Result<ZErrorTrace> {
    if !(n_periods > 0.0) || n_points < 2 {
        return Err(DcatError::InvalidArgument(
            "need a positive span and at least two points".into(),
        ));
    }
    let gate = z_gate_numeric(p, dim)?;
    let sys = ZSystem::new(p, Some(gate.dim))?;
    let omega = gate.omega_numeric / p.kerr;
    let tpi = PI / omega;
    let basis = [sys.well_plus.clone(), sys.well_minus.clone()];
    let taus: Vec<f64> = (0..n_points)
        .map(|k| n_periods * tpi * k as f64 / (n_points - 1) as f64)
        .collect();
    let rows: Vec<(f64, f64)> = taus
        .par_iter()
        .map(|&tau| {
            let psi = sys.spectrum.evolve(&sys.psi0, tau);
            let err = 1.0 - sys.ideal_at(omega * tau).fidelity(&psi);
            let bound = 1.0 - span_population(&basis, &psi);
            (err, bound)
        })
        .collect();
    Ok(ZErrorTrace {
        times: taus.iter().map(|t| t / p.kerr).collect(),
        normalized_time: taus.iter().map(|t| t / tpi).collect(),
        error: rows.iter().map(|r| r.0).collect(),
        min_error_bound: rows.iter().map(|r| r.1).collect(),
    })
}

// ---------------------------------------------------------------------------
// phase space

/// Uniform grid description for Husimi maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl PhaseGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        let pts: Vec<f64> = (0..n)
            .map(|k| -half_width + 2.0 * half_width * k as f64 / (n - 1).max(1) as f64)
            .collect();
        Self {
            re: pts.clone(),
            im: pts,
        }
    }

    /// 161 × 161 points over `[-1.8β, 1.8β]²`.
    pub fn default_for(beta: f64) -> Self {
        Self::square(1.8 * beta.abs().max(0.5), 161)
    }
}

/// `Q(z) = |<z|ψ>|² / π`; rows follow `im`, columns follow `re`.
pub fn husimi_q(state: &StateVector, grid: &PhaseGrid) -> Result<nalgebra::DMatrix<f64>> {
    if state.modes().len() != 1 {
        return Err(DcatError::InvalidArgument("Husimi maps are single-mode".into()));
    }
    let dim = state.dim();
    let psi = state.amplitudes();
    let rows: Vec<Vec<f64>> = grid
        .im
        .par_iter()
        .map(|&y| {
            grid.re
                .iter()
                .map(|&x| {
                    let coh = coherent_amplitudes(C64::new(x, y), dim);
                    let amp: C64 = coh.iter().zip(psi.iter()).map(|(a, b)| a.conj() * b).sum();
                    amp.norm_sqr() / PI
                })
                .collect()
        })
        .collect();
    Ok(nalgebra::DMatrix::from_fn(grid.im.len(), grid.re.len(), |i, j| {
        rows[i][j]
    }))
}

/// Classical energy (units of `K`) of the detuned, driven Hamiltonian with
/// `a → z`: `R|z|² - |z² - α²|² + ε z* + ε* z`.
pub fn classical_energy(p: &CatParams, z: C64) -> f64 {
    let a2 = c(p.alpha * p.alpha);
    let well = (z * z - a2).norm_sqr();
    let drive = 2.0 * (p.eps_z_over_k * z.conj()).re;
    p.r * z.norm_sqr() - well + drive
}

/// `classical_energy` on a grid; rows follow `im`, columns follow `re`.
pub fn energy_surface(p: &CatParams, grid: &PhaseGrid) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(grid.im.len(), grid.re.len(), |i, j| {
        classical_energy(p, C64::new(grid.re[j], grid.im[i]))
    })
}

// ---------------------------------------------------------------------------
// closed forms

/// Closed-form rate estimates for the detuning-driven X rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixRates {
    pub z: f64,
    pub w: f64,
    pub b_plus: f64,
    /// `i b₋`, real.
    pub i_b_minus: f64,
    /// Four-cat extended-identity estimate of `1/(K T)`.
    pub ext_rate: f64,
    /// Two-state projector estimate `2 R α² e^{-2α²} / π`.
    pub small_alpha_rate: f64,
    /// The same with `β(R)` in place of `α`.
    pub small_beta_rate: f64,
}

/// Evaluates the projector-based rate formulas; `eps2_over_k` is normally
/// `α²`.
pub fn appendix_rates(alpha: f64, r: f64, eps2_over_k: f64) -> Result<AppendixRates> {
    if !(alpha > 0.0) {
        return Err(DcatError::Domain("alpha must be positive".into()));
    }
    let a2 = alpha * alpha;
    let z = 0.5 * a2 * (a2.tanh() - 1.0 / a2.tanh());
    let w = 0.5 * a2 * (a2.tanh() + 1.0 / a2.tanh());
    let b_plus = a2.cos() / a2.cosh();
    let s = a2.sin() / a2.sinh();
    let i_b_minus = -s;
    // b₋ = i s, so i b₊ b₋ = -b₊ s and b₋² = -s²
    let ext = r * (-z - b_plus * s * w)
        + 0.5 * a2 * a2 * (b_plus * b_plus - s * s)
        + eps2_over_k * ((1.0 - b_plus * b_plus).sqrt() - (1.0 - s * s).sqrt());
    let beta = beta_of(alpha, r)?;
    let b2 = beta * beta;
    Ok(AppendixRates {
        z,
        w,
        b_plus,
        i_b_minus,
        ext_rate: ext / PI,
        small_alpha_rate: 2.0 * r * a2 * (-2.0 * a2).exp() / PI,
        small_beta_rate: 2.0 * r * b2 * (-2.0 * b2).exp() / PI,
    })
}

/// Largest transfer probability at the `R = 2m` degeneracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapBound {
    /// `max_t |<-β|e^{-iHt}|β>|²`, `β = sqrt(α² + R/2)`.
    pub dcat_max: f64,
    /// `max_t |<-α|e^{-iHt}|α>|²`.
    pub cat_max: f64,
    /// Scan window in units of `1/K`.
    pub window: f64,
    pub revival_period: f64,
}

fn max_over_window(amp: &TransitionAmplitude, window: f64, step: f64) -> f64 {
    let n = ((window / step) as usize).clamp(1000, 40_000_000);
    scan_max(amp, 0.0, window, n).1
}

/// Maximum X transfer at `R = 2m` over at least ten revival periods.
pub fn r2_overlap_bound(alpha: f64, m: u32, dim: Option<usize>) -> Result<OverlapBound> {
    let r = 2.0 * m.max(1) as f64;
    let beta = beta_of(alpha, r)?;
    let dim = match dim {
        Some(d) => d,
        None => default_cutoff(beta, false),
    };
    let p = CatParams::new(1.0, r, alpha)?;
    let spectrum = Spectrum::new(&detuned_cat(&p, dim)?)?;
    let bp = coherent_state(c(beta), dim)?;
    let bm = coherent_state(c(-beta), dim)?;
    let ap = coherent_state(c(alpha), dim)?;
    let am = coherent_state(c(-alpha), dim)?;

    // revival period: slowest non-degenerate beat among populated levels
    let weights = spectrum.coefficients(&bp);
    let levels: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .zip(weights.iter())
        .filter(|(_, w)| w.norm_sqr() > 1e-8)
        .map(|(e, _)| *e)
        .collect();
    let mut min_gap = f64::INFINITY;
    let mut max_gap: f64 = 0.0;
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            let g = (levels[i] - levels[j]).abs();
            if g > 1e-3 {
                min_gap = min_gap.min(g);
            }
            max_gap = max_gap.max(g);
        }
    }
    let revival = if min_gap.is_finite() { 2.0 * PI / min_gap } else { 100.0 };
    let window = (10.0 * revival).max(2000.0);
    let step = 2.0 * PI / max_gap.max(1.0) / 20.0;
    Ok(OverlapBound {
        dcat_max: max_over_window(&spectrum.transition(&bm, &bp), window, step),
        cat_max: max_over_window(&spectrum.transition(&am, &ap), window, step),
        window,
        revival_period: revival,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> f64 {
        crate::units::default_kerr()
    }

    #[test]
    fn classical_minima_at_shifted_amplitude() {
        let p = CatParams::new(1.0, 1.2, 1.63).unwrap();
        let beta = beta_of(1.63, 1.2).unwrap();
        let e = |x: f64| classical_energy(&p, c(x));
        // energy is maximal at ±β (the cat sits at the top of an inverted well)
        for x in [beta, -beta] {
            assert!(e(x) > e(x + 1e-3) && e(x) > e(x - 1e-3));
        }
        let grid = PhaseGrid::square(2.0, 5);
        let surf = energy_surface(&p, &grid);
        assert!((surf[(2, 2)] + 1.63f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn pcs_at_time_zero() {
        let p = CatParams::new(k(), 0.3, 1.5).unwrap();
        let beta = beta_of(1.5, 0.3).unwrap();
        let tr = p_cs(&p, &[0.0], Some(40)).unwrap();
        let want = 1.0 + (-4.0 * beta * beta).exp() - (-2.0 * beta * beta).exp();
        assert!((tr.p_cs[0] - want).abs() < 1e-9);
        assert!((tr.code_population[0] - 1.0).abs() < 1e-9);
        let b: f64 = 1.63;
        assert!((1.0 + (-4.0 * b * b).exp() - (-2.0 * b * b).exp() - 0.995_100).abs() < 2e-6);
    }

    #[test]
    fn pcs_static_without_detuning() {
        let p = CatParams::new(k(), 0.0, 1.63).unwrap();
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 3e-9).collect();
        let tr = p_cs(&p, &times, Some(40)).unwrap();
        let want = 1.0 + (-4.0 * 1.63f64.powi(2)).exp() - (-2.0 * 1.63f64.powi(2)).exp();
        for v in tr.p_cs {
            assert!((v - want).abs() < 1e-8);
        }
    }

    #[test]
    fn x_trace_starts_at_overlap() {
        let p = CatParams::new(k(), 0.4, 1.0).unwrap();
        let beta = beta_of(1.0, 0.4).unwrap();
        let tr = x_fidelity_trace(&p, &[0.0], None, FidelityBasis::Raw).unwrap();
        assert!((tr.fidelity[0] - (-4.0 * beta * beta).exp()).abs() < 1e-10);
    }

    #[test]
    fn fidelity_below_exact_code_population() {
        let p = CatParams::new(1.0, 0.45, 1.0).unwrap();
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
        let tr = x_fidelity_trace(&p, &times, None, FidelityBasis::Raw).unwrap();
        for (f, pop) in tr.fidelity.iter().zip(tr.code_population.iter()) {
            assert!(*f <= pop + 1e-9);
        }
    }

    #[test]
    fn x_gate_small_detuning() {
        let p = CatParams::new(k(), 0.4, 1.0).unwrap();
        let g = gate_time_x(&p, None).unwrap();
        assert!(!g.diverged);
        assert!(g.f_max > 0.999, "{}", g.f_max);
        assert_eq!(g.direction_sign, 1.0);
        assert!((g.speed - 1.0 / g.tau).abs() < 1e-15);
    }

    #[test]
    fn x_gate_diverges_at_even_detuning() {
        let p = CatParams::new(k(), 2.0, 1.63).unwrap();
        let g = gate_time_x(&p, None).unwrap();
        assert!(g.diverged);
        assert!(g.speed.abs() < 1e-3);
    }

    #[test]
    fn zero_crossing_interpolation() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 0.5, 0.0, -0.5, 0.25];
        let z = zero_crossings(&x, &y);
        assert_eq!(z.len(), 2);
        assert!((z[0] - 2.0).abs() < 1e-12);
        assert!((z[1] - (3.0 + 0.5 / 0.75)).abs() < 1e-12);
    }

    #[test]
    fn omega_z_reference_point() {
        let w = omega_z_analytic(1.63, 1.0, 1.0).unwrap();
        assert!((w - 11.5531).abs() < 1e-3, "{w}");
        let tpi = PI / omega_z_analytic(1.63, 1.0, k()).unwrap();
        assert!((tpi * 1e9 - 6.459).abs() < 0.01);
    }

    #[test]
    fn cosine_fit_recovers_frequency() {
        let t: Vec<f64> = (0..300).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|t| 0.3 + 0.6 * (4.2 * t).cos() - 0.1 * (4.2 * t).sin())
            .collect();
        let fit = fit_cosine(&t, &y, 2.0, 6.0).unwrap();
        assert!((fit.omega - 4.2).abs() < 1e-6);
        assert!(fit.rms < 1e-8);
        assert!((fit.offset - 0.3).abs() < 1e-6);
    }

    #[test]
    fn z_gate_reference_point() {
        let p = CatParams::lambda_matched(k(), 1.0, 1.63).unwrap();
        let z = z_gate_numeric(&p, None).unwrap();
        assert!(z.eigen_residual < 1e-6);
        assert!(z.fidelity > 0.995, "{}", z.fidelity);
        assert!((z.omega_numeric / z.omega_analytic - 1.0).abs() < 0.05);
        assert!(z.fidelity <= z.code_population + 1e-12);
    }

    #[test]
    fn z_trace_error_above_bound() {
        let p = CatParams::lambda_matched(k(), 1.0, 1.63).unwrap();
        let tr = z_error_trace(&p, 3.0, 301, None).unwrap();
        assert!(tr.error[0].abs() < 1e-12);
        for (e, b) in tr.error.iter().zip(tr.min_error_bound.iter()) {
            assert!(e + 1e-12 >= *b);
        }
        assert!(tr.error.iter().cloned().fold(0.0, f64::max) < 0.01);
    }

    #[test]
    fn husimi_of_coherent_state() {
        let s = coherent_state(c(1.63), 40).unwrap();
        let grid = PhaseGrid::square(3.26, 81);
        let q = husimi_q(&s, &grid).unwrap();
        let (mut bi, mut bj) = (0, 0);
        for i in 0..q.nrows() {
            for j in 0..q.ncols() {
                assert!(q[(i, j)] >= 0.0);
                if q[(i, j)] > q[(bi, bj)] {
                    bi = i;
                    bj = j;
                }
            }
        }
        assert!((grid.re[bj] - 1.63).abs() < 0.05 && grid.im[bi].abs() < 0.05);
        assert!((q[(bi, bj)] - 1.0 / PI).abs() < 5e-3);
        let cell = (grid.re[1] - grid.re[0]).powi(2);
        let total: f64 = q.iter().sum::<f64>() * cell;
        assert!((total - 1.0).abs() < 0.02, "{total}");
    }

    #[test]
    fn appendix_constants() {
        let r = appendix_rates(1.63, 0.0, 1.63 * 1.63).unwrap();
        assert!((r.b_plus + 0.12355).abs() < 1e-4);
        assert!((r.i_b_minus + 0.06566).abs() < 1e-4);
        assert!(r.ext_rate.is_finite());
        let small = appendix_rates(1.0, 0.1, 1.0).unwrap();
        assert!((small.small_alpha_rate - 0.008615).abs() < 1e-5);
        assert!(small.small_beta_rate < small.small_alpha_rate);
    }

    #[test]
    fn sweep_csv_layout() {
        let s = SweepResult::new(
            vec![
                Axis {
                    name: "R".into(),
                    unit: "dimensionless".into(),
                    values: vec![0.1, 0.2],
                },
                Axis {
                    name: "t".into(),
                    unit: "s".into(),
                    values: vec![1.0, 2.0, 3.0],
                },
            ],
            vec![Column {
                name: "F".into(),
                unit: "dimensionless".into(),
                values: (0..6).map(f64::from).collect(),
            }],
            serde_json::Value::Null,
            Provenance::new(vec![30], 1e-8),
        )
        .unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "R [dimensionless],t [s],F [dimensionless]");
        assert_eq!(lines[1], "0.1,1.0,0.0");
        assert_eq!(lines[4], "0.2,1.0,3.0");
        assert!(SweepResult::new(
            s.axes.clone(),
            vec![Column {
                name: "x".into(),
                unit: "".into(),
                values: vec![1.0]
            }],
            serde_json::Value::Null,
            s.provenance.clone()
        )
        .is_err());
    }
}
