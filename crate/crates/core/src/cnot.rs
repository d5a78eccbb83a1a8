//! Two-mode bias-preserving CNOT between a control and a target cat.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{span_population, Axis, Column, Provenance, SweepResult};
use crate::error::{DcatError, Result};
use crate::fockspace::{
    coherent_state, default_cutoff, tensor_state, truncation_check, StateVector, C64, DEFAULT_TAIL_TOL,
};
use crate::hamiltonians::CnotDrive;
use crate::propagate::{evolve_timedep, StepperOptions};
use crate::states::{cat_state, Parity};

/// Gate parameters. Mode order is (control, target).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoModeParams {
    /// Kerr rate (rad/s).
    pub kerr: f64,
    pub beta_c: f64,
    pub beta_t: f64,
    /// Gate time (s); the rotation angle runs linearly from 0 to π.
    pub gate_time: f64,
    pub with_correction: bool,
    pub dim_c: usize,
    pub dim_t: usize,
}

impl TwoModeParams {
    pub fn new(kerr: f64, beta_c: f64, beta_t: f64, gate_time: f64, with_correction: bool) -> Result<Self> {
        let p = Self {
            kerr,
            beta_c,
            beta_t,
            gate_time,
            with_correction,
            dim_c: default_cutoff(beta_c, true),
            dim_t: default_cutoff(beta_t, true),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_dims(mut self, dim_c: usize, dim_t: usize) -> Self {
        self.dim_c = dim_c;
        self.dim_t = dim_t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kerr > 0.0 && self.kerr.is_finite()) {
            return Err(DcatError::Domain(format!(
                "Kerr rate must be positive, got {}",
                self.kerr
            )));
        }
        if !(self.beta_c > 0.0 && self.beta_t > 0.0) {
            return Err(DcatError::Domain("cat amplitudes must be positive".into()));
        }
        if !(self.gate_time > 0.0 && self.gate_time.is_finite()) {
            return Err(DcatError::Domain(format!(
                "gate time must be positive, got {}",
                self.gate_time
            )));
        }
        if self.dim_c < 2 || self.dim_t < 2 {
            return Err(DcatError::InvalidDimension {
                dim: self.dim_c.min(self.dim_t),
            });
        }
        Ok(())
    }

    /// Gate duration in units of `1/K`.
    pub fn tau_gate(&self) -> f64 {
        self.gate_time * self.kerr
    }

    /// Dimensionless angular rate `dphi/dtau`.
    pub fn phidot(&self) -> f64 {
        std::f64::consts::PI / self.tau_gate()
    }
}

/// Computational basis label: (control bit, target bit), `0 ↔ +β`, `1 ↔ -β`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    B00,
    B01,
    B10,
    B11,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::B00, Basis::B01, Basis::B10, Basis::B11];

    pub fn bits(self) -> (u8, u8) {
        match self {
            Basis::B00 => (0, 0),
            Basis::B01 => (0, 1),
            Basis::B10 => (1, 0),
            Basis::B11 => (1, 1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Basis::B00 => "00",
            Basis::B01 => "01",
            Basis::B10 => "10",
            Basis::B11 => "11",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "00" => Ok(Basis::B00),
            "01" => Ok(Basis::B01),
            "10" => Ok(Basis::B10),
            "11" => Ok(Basis::B11),
            other => Err(DcatError::InvalidArgument(format!("unknown basis state {other:?}"))),
        }
    }
}

fn sign_of(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Relative phase `Φ⁻ - Φ⁺ = 4 φ β² e^{-2β²} / (1 - e^{-4β²})` picked up by
/// the two target cat parities after a rotation by `phi`.
pub fn geometric_phase_closed_form(beta_t: f64, phi: f64) -> f64 {
    let b2 = beta_t * beta_t;
    4.0 * phi * b2 * (-2.0 * b2).exp() / (1.0 - (-4.0 * b2).exp())
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Ideal two-mode state after the target has been rotated by `phi`.
pub fn expected_state(basis: Basis, phi: f64, p2: &TwoModeParams) -> Result<StateVector> {
    let (cb, tb) = basis.bits();
    let control = coherent_state(c(sign_of(cb) * p2.beta_c), p2.dim_c)?;
    if cb == 0 {
        let target = coherent_state(c(sign_of(tb) * p2.beta_t), p2.dim_t)?;
        return Ok(tensor_state(&control, &target));
    }
    let target = coherent_state(C64::from_polar(sign_of(tb) * p2.beta_t, phi), p2.dim_t)?;
    let phase = C64::from_polar(1.0, geometric_phase_closed_form(p2.beta_t, phi));
    Ok(tensor_state(&control, &target).scale(phase))
}

fn initial_state(basis: Basis, p2: &TwoModeParams) -> Result<StateVector> {
    let (cb, tb) = basis.bits();
    Ok(tensor_state(
        &coherent_state(c(sign_of(cb) * p2.beta_c), p2.dim_c)?,
        &coherent_state(c(sign_of(tb) * p2.beta_t), p2.dim_t)?,
    ))
}

fn code_basis(p2: &TwoModeParams) -> Result<Vec<StateVector>> {
    Basis::ALL.iter().map(|b| initial_state(*b, p2)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisRun {
    pub basis: Basis,
    pub fidelity: f64,
    /// `1 -` population in the span of the four coherent product states.
    pub leakage: f64,
    /// Instantaneous fidelity against `expected_state(basis, φ(t))`.
    pub trace_times: Vec<f64>,
    pub trace: Vec<f64>,
    pub steps: usize,
    pub achieved_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnotReport {
    pub params: TwoModeParams,
    pub runs: Vec<BasisRun>,
    pub max_norm_deviation: f64,
}

impl CnotReport {
    pub fn fidelities(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, r) in out.iter_mut().zip(self.runs.iter()) {
            *o = r.fidelity;
        }
        out
    }

    pub fn run(&self, basis: Basis) -> &BasisRun {
        self.runs
            .iter()
            .find(|r| r.basis == basis)
            .expect("all four bases are run")
    }
}

/// Options for the CNOT evolutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnotOptions {
    pub stepper: StepperOptions,
    /// Number of trace intervals (0 = endpoints only).
    pub trace_samples: usize,
    /// Extra levels added per mode when the final tail exceeds tolerance.
    pub grow_step: usize,
    pub max_grow: usize,
    /// Target parity commutes with the Hamiltonian and maps `|x0>` onto
    /// `|x1>`, so the target-bit-1 runs can be copied from the bit-0 runs.
    pub use_parity_symmetry: bool,
}

impl Default for CnotOptions {
    fn default() -> Self {
        Self {
            stepper: StepperOptions::default(),
            trace_samples: 0,
            grow_step: 5,
            max_grow: 3,
            use_parity_symmetry: true,
        }
    }
}

fn evolve_basis(
    drive: &CnotDrive,
    p2: &TwoModeParams,
    basis: Basis,
    opts: &CnotOptions,
) -> Result<(BasisRun, f64, StateVector)> {
    let mut sopts = opts.stepper.clone();
    sopts.samples = opts.trace_samples;
    let psi0 = initial_state(basis, p2)?;
    let res = evolve_timedep(drive, &psi0, p2.gate_time, p2.kerr, &sopts)?;
    let last = res.final_state().clone();
    let expected = expected_state(basis, std::f64::consts::PI, p2)?;
    let code = code_basis(p2)?;
    let mut trace = Vec::with_capacity(res.states.len());
    for (t, s) in res.times.iter().zip(res.states.iter()) {
        let phi = std::f64::consts::PI * (t / p2.gate_time).clamp(0.0, 1.0);
        trace.push(expected_state(basis, phi, p2)?.fidelity(s));
    }
    Ok((
        BasisRun {
            basis,
            fidelity: expected.fidelity(&last),
            leakage: 1.0 - span_population(&code, &last),
            trace_times: res.times.clone(),
            trace,
            steps: res.method.steps,
            achieved_tol: res.method.achieved_tol,
        },
        res.max_norm_deviation(),
        last,
    ))
}

/// Evolves the four coherent product states through the gate.
///
/// The per-mode cutoff is raised by `grow_step` (up to `max_grow` times)
/// when a final state's tail exceeds the default tolerance.
pub fn run_cnot(p2: &TwoModeParams, opts: &CnotOptions) -> Result<CnotReport> {
    let mut p = p2.clone();
    for attempt in 0..=opts.max_grow {
        p.validate()?;
        let drive = CnotDrive::new(&p)?;
        let todo: Vec<Basis> = if opts.use_parity_symmetry {
            vec![Basis::B00, Basis::B10]
        } else {
            Basis::ALL.to_vec()
        };
        let results: Vec<Result<(BasisRun, f64, StateVector)>> =
            todo.par_iter().map(|b| evolve_basis(&drive, &p, *b, opts)).collect();
        let mut runs = Vec::with_capacity(4);
        let mut dev: f64 = 0.0;
        let mut tails_ok = true;
        for r in results {
            let (run, d, last) = r?;
            dev = dev.max(d);
            tails_ok &= truncation_check(&last, DEFAULT_TAIL_TOL).passed;
            if opts.use_parity_symmetry {
                let mut mirror = run.clone();
                mirror.basis = if run.basis == Basis::B00 {
                    Basis::B01
                } else {
                    Basis::B11
                };
                runs.push(run);
                runs.push(mirror);
            } else {
                runs.push(run);
            }
        }
        if tails_ok || attempt == opts.max_grow {
            return Ok(CnotReport {
                params: p,
                runs,
                max_norm_deviation: dev,
            });
        }
        p.dim_c += opts.grow_step;
        p.dim_t += opts.grow_step;
    }
    unreachable!("loop returns on its last iteration")
}

/// Final fidelities over a gate-time grid (seconds), with and without the
/// rotation-rate term.
pub fn fidelity_vs_t(template: &TwoModeParams, t_grid: &[f64], opts: &CnotOptions) -> Result<SweepResult> {
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(DcatError::InvalidArgument("gate times must be positive".into()));
    }
    let jobs: Vec<(usize, bool)> = (0..t_grid.len()).flat_map(|i| [(i, false), (i, true)]).collect();
    let reports: Vec<Result<[f64; 4]>> = jobs
        .par_iter()
        .map(|&(i, corr)| {
            let mut p = template.clone();
            p.gate_time = t_grid[i];
            p.with_correction = corr;
            run_cnot(&p, opts).map(|r| r.fidelities())
        })
        .collect();
    let mut cols: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(t_grid.len())).collect();
    for (k, r) in reports.into_iter().enumerate() {
        let f = r?;
        let offset = if jobs[k].1 { 4 } else { 0 };
        for b in 0..4 {
            cols[offset + b].push(f[b]);
        }
    }
    let mut columns = Vec::with_capacity(8);
    for (k, values) in cols.into_iter().enumerate() {
        let variant = if k < 4 { "plain" } else { "corrected" };
        columns.push(Column {
            name: format!("fidelity_{}_{}", Basis::ALL[k % 4].label(), variant),
            unit: "dimensionless".into(),
            values,
        });
    }
    SweepResult::new(
        vec![Axis {
            name: "gate_time".into(),
            unit: "s".into(),
            values: t_grid.to_vec(),
        }],
        columns,
        serde_json::to_value(template).map_err(|e| DcatError::InvalidArgument(e.to_string()))?,
        Provenance::new(vec![template.dim_c, template.dim_t], opts.stepper.tol),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstantTrace {
    pub basis: Basis,
    /// Seconds.
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub fidelity: Vec<f64>,
}

/// Fidelity against the moving ideal state along one gate, at
/// `samples + 1` points (at least 201).
pub fn instantaneous_trace(
    p2: &TwoModeParams,
    basis: Basis,
    samples: usize,
    opts: &CnotOptions,
) -> Result<InstantTrace> {
    let mut o = opts.clone();
    o.trace_samples = samples.max(200);
    o.max_grow = 0;
    p2.validate()?;
    let drive = CnotDrive::new(p2)?;
    let (run, _, _) = evolve_basis(&drive, p2, basis, &o)?;
    let phi = run
        .trace_times
        .iter()
        .map(|t| std::f64::consts::PI * (t / p2.gate_time).clamp(0.0, 1.0))
        .collect();
    Ok(InstantTrace {
        basis,
        times: run.trace_times,
        phi,
        fidelity: run.trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricPhase {
    pub closed_form: f64,
    /// `arg` of the overlap with the rotated even / odd target cat.
    pub phase_even: f64,
    pub phase_odd: f64,
    /// `phase_even - phase_odd`, wrapped to `(-π, π]`.
    pub relative: f64,
    /// Fidelity of the `|10>` basis state, rebuilt from the two parity runs.
    pub control_one_fidelity: f64,
    /// Set when the rotation rate is not small against the barrier `4β_t²`.
    pub non_adiabatic: bool,
}

fn wrap(x: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let mut y = x % t;
    if y <= -std::f64::consts::PI {
        y += t;
    } else if y > std::f64::consts::PI {
        y -= t;
    }
    y
}

/// Phases acquired by the two target parities with the control at `-β_c`.
pub fn geometric_phase_extract(p2: &TwoModeParams, opts: &CnotOptions) -> Result<GeometricPhase> {
    p2.validate()?;
    let pi = std::f64::consts::PI;
    let drive = CnotDrive::new(p2)?;
    let control = coherent_state(c(-p2.beta_c), p2.dim_c)?;
    let target = coherent_state(c(p2.beta_t), p2.dim_t)?;
    let mut sopts = opts.stepper.clone();
    sopts.samples = 0;
    let mut phases = [0.0; 2];
    let mut rebuilt: Option<StateVector> = None;
    for (k, parity) in [Parity::Even, Parity::Odd].into_iter().enumerate() {
        let cat0 = cat_state(p2.beta_t, parity, 0.0, p2.dim_t)?;
        let start = tensor_state(&control, &cat0);
        let end = tensor_state(&control, &cat_state(p2.beta_t, parity, pi, p2.dim_t)?);
        let res = evolve_timedep(&drive, &start, p2.gate_time, p2.kerr, &sopts)?;
        let last = res.final_state();
        phases[k] = end.inner(last).arg();
        // |β> is exactly the sum of its two parity projections
        let weight = cat0.inner(&target);
        rebuilt = Some(match rebuilt {
            None => last.scale(weight),
            Some(prev) => prev.combine(c(1.0), last, weight),
        });
    }
    let expected = expected_state(Basis::B10, pi, p2)?;
    let barrier = 4.0 * p2.beta_t * p2.beta_t;
    Ok(GeometricPhase {
        closed_form: geometric_phase_closed_form(p2.beta_t, pi),
        phase_even: phases[0],
        phase_odd: phases[1],
        relative: wrap(phases[0] - phases[1]),
        control_one_fidelity: expected.fidelity(&rebuilt.expect("two parity runs")),
        non_adiabatic: p2.phidot() > 0.05 * barrier,
    })
}

/// Population that moved from the even to the odd target cat (control at
/// `-β_c`) by the end of the gate.
pub fn parity_mixing(p2: &TwoModeParams, opts: &CnotOptions) -> Result<f64> {
    let pi = std::f64::consts::PI;
    let drive = CnotDrive::new(p2)?;
    let control = coherent_state(c(-p2.beta_c), p2.dim_c)?;
    let start = tensor_state(&control, &cat_state(p2.beta_t, Parity::Even, 0.0, p2.dim_t)?);
    let odd = tensor_state(&control, &cat_state(p2.beta_t, Parity::Odd, pi, p2.dim_t)?);
    let mut sopts = opts.stepper.clone();
    sopts.samples = 0;
    let res = evolve_timedep(&drive, &start, p2.gate_time, p2.kerr, &sopts)?;
    Ok(odd.fidelity(res.final_state()))
}

impl InstantTrace {
    /// Time (seconds) from the end of the gate back to the nearest local
    /// maximum of the trace; zero when the trace is still rising at the end.
    pub fn endpoint_peak_distance(&self) -> f64 {
        let f = &self.fidelity;
        let n = f.len();
        if n < 3 || f[n - 1] >= f[n - 2] {
            return 0.0;
        }
        let end = self.times[n - 1];
        (1..n - 1)
            .rev()
            .find(|&k| f[k] > f[k - 1] && f[k] >= f[k + 1])
            .map_or(end, |k| end - self.times[k])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakAlignment {
    pub basis: Basis,
    pub gate_times: Vec<f64>,
    pub final_fidelity: Vec<f64>,
    /// Gate times at interior local maxima of `final_fidelity`.
    pub peaks: Vec<f64>,
    /// `endpoint_peak_distance` of the trace at each peak.
    pub distances: Vec<f64>,
    /// Grid spacing plus one trace sample.
    pub resolution: f64,
}

impl PeakAlignment {
    pub fn aligned(&self) -> bool {
        !self.peaks.is_empty() && self.distances.iter().all(|d| *d <= self.resolution)
    }
}

/// Compares local maxima of the final fidelity over an evenly spaced
/// gate-time grid with the shape of the instantaneous trace at those points.
pub fn peak_alignment(
    template: &TwoModeParams,
    basis: Basis,
    t_grid: &[f64],
    opts: &CnotOptions,
) -> Result<PeakAlignment> {
    if t_grid.len() < 3 || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(DcatError::InvalidArgument(
            "need at least three positive gate times".into(),
        ));
    }
    let samples = 200;
    let traces: Vec<Result<InstantTrace>> = t_grid
        .par_iter()
        .map(|&t| {
            let mut p = template.clone();
            p.gate_time = t;
            instantaneous_trace(&p, basis, samples, opts)
        })
        .collect();
    let traces = traces.into_iter().collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = traces
        .iter()
        .map(|t| *t.fidelity.last().expect("non-empty trace"))
        .collect();
    let mut peaks = Vec::new();
    let mut distances = Vec::new();
    for k in 1..finals.len() - 1 {
        if finals[k] > finals[k - 1] && finals[k] >= finals[k + 1] {
            peaks.push(t_grid[k]);
            distances.push(traces[k].endpoint_peak_distance());
        }
    }
    let spacing = t_grid.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    Ok(PeakAlignment {
        basis,
        gate_times: t_grid.to_vec(),
        final_fidelity: finals,
        peaks,
        distances,
        resolution: spacing + t_max / samples as f64,
    })
}
