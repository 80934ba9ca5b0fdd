//! Fixed-step RK4 integration of `i dU/dt = (H₀ + Σ f_n H_n) U` with the
//! feedback fields re-evaluated at every stage.
//!
//! Integration proceeds segment by segment between sample times. A segment
//! that would straddle the switch-off time is split there, so each RK4 step
//! sees either the controlled or the free right-hand side, never both.

use std::io::Write;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::control::{fidelity_unchecked, ControlLaw};
use crate::error::{Error, Result};
use crate::invariants::EquivalenceClass;
use crate::matrix::{reunitarize, unitarity_defect, ComplexMatrix};
use crate::operators::{materialize_h0, rotation_gate, ControlSet, HamiltonianSpec, RotationTarget};

/// Largest unitarity defect accepted by [`rhs`].
pub const RHS_UNITARY_TOL: f64 = 1e-6;
/// Defect at which the integrator gives up instead of repairing.
pub const UNSTABLE_DEFECT: f64 = 1e-6;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_REUNITARIZE_EVERY: usize = 100;

const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub system: HamiltonianSpec,
    pub law: ControlLaw,
    pub t_max: f64,
    /// Upper bound on the RK4 step; each sampling segment is divided into the
    /// smallest number of equal steps not exceeding it.
    pub step: f64,
    pub sample_interval: f64,
    /// Fields are forced to zero for `t ≥ control_off_time`.
    pub control_off_time: Option<f64>,
    /// Record the distance `D` to the class of the law's target at each
    /// sample (two-qubit systems only).
    pub record_invariants: bool,
    pub reunitarize_every: usize,
}

impl SimulationConfig {
    pub fn new(system: HamiltonianSpec, law: ControlLaw, t_max: f64, sample_interval: f64) -> Self {
        Self {
            system,
            law,
            t_max,
            step: DEFAULT_STEP,
            sample_interval,
            control_off_time: None,
            record_invariants: false,
            reunitarize_every: DEFAULT_REUNITARIZE_EVERY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval >= self.step) {
            return bad(format!("sample_interval {} must be at least the step {}", self.sample_interval, self.step));
        }
        if !(self.t_max.is_finite() && self.t_max >= self.sample_interval) {
            return bad(format!("t_max {} must be at least sample_interval {}", self.t_max, self.sample_interval));
        }
        if let Some(off) = self.control_off_time {
            if !(off.is_finite() && (0.0..=self.t_max).contains(&off)) {
                return bad(format!("control_off_time {off} outside [0, {}]", self.t_max));
            }
        }
        if self.reunitarize_every == 0 {
            return bad("reunitarize_every must be positive".into());
        }
        let h0 = materialize_h0(&self.system);
        if h0.dim() != self.law.dim() {
            return Err(Error::DimMismatch { left: h0.dim(), right: self.law.dim() });
        }
        if h0.max_abs_diff(self.law.h0()) > 1e-12 {
            return bad("control law H0 does not match the system specification".into());
        }
        if self.record_invariants && self.law.dim() != 4 {
            return bad("invariants can only be recorded for two-qubit systems".into());
        }
        Ok(())
    }

    fn controls_active_at(&self, t: f64) -> bool {
        self.control_off_time.is_none_or(|off| t < off)
    }
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    pub u: ComplexMatrix,
    pub fields: Vec<f64>,
    pub lyapunov: f64,
    pub fidelity: f64,
    pub distance: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SimulationTrace {
    pub samples: Vec<Sample>,
    pub config: SimulationConfig,
    /// Largest unitarity defect seen before any repair.
    pub max_defect_before_repair: f64,
}

impl SimulationTrace {
    /// Sample with the highest fidelity (earliest on ties).
    pub fn peak(&self) -> &Sample {
        self.samples
            .iter()
            .fold(None::<&Sample>, |best, s| match best {
                Some(b) if b.fidelity >= s.fidelity => Some(b),
                _ => Some(s),
            })
            .expect("trace is never empty")
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.samples.iter().map(|s| unitarity_defect(&s.u)).fold(0.0, f64::max)
    }

    /// Largest increase `V(t_{k+1}) − V(t_k)` over consecutive samples that
    /// both lie in the controlled phase. Negative when V strictly decreases.
    pub fn max_lyapunov_increase(&self) -> f64 {
        self.samples
            .windows(2)
            .filter(|w| self.config.control_off_time.is_none_or(|off| w[1].t <= off + TIME_EPS))
            .map(|w| w[1].lyapunov - w[0].lyapunov)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().find(|s| (s.t - t).abs() <= TIME_EPS * self.config.sample_interval.max(1.0))
    }

    /// Writes `t,V,F,f1[,f2...][,D]` with 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n_fields = self.config.law.controls().len();
        let mut header = String::from("t,V,F");
        for i in 1..=n_fields {
            header.push_str(&format!(",f{i}"));
        }
        let with_d = self.samples.first().is_some_and(|s| s.distance.is_some());
        if with_d {
            header.push_str(",D");
        }
        writeln!(out, "{header}")?;
        for s in &self.samples {
            let mut row = format!("{},{},{}", fmt_float(s.t), fmt_float(s.lyapunov), fmt_float(s.fidelity));
            for f in &s.fields {
                row.push(',');
                row.push_str(&fmt_float(*f));
            }
            if let Some(d) = s.distance {
                row.push(',');
                row.push_str(&fmt_float(d));
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

/// Scientific notation with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// `−i (H₀ + Σ f_n H_n) u` with the fields evaluated at `(u, t)`, or zero
/// fields once `t ≥ control_off_time`.
pub fn rhs(config: &SimulationConfig, u: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let defect = unitarity_defect(u);
    if defect > RHS_UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(derivative(&config.law, u, t, config.controls_active_at(t)))
}

fn derivative(law: &ControlLaw, u: &ComplexMatrix, t: f64, controls_active: bool) -> ComplexMatrix {
    let mut h = law.h0().clone();
    if controls_active && law.gain() != 0.0 {
        let fields = law.control_fields(u, t);
        for (f, hn) in fields.iter().zip(law.controls()) {
            h = h.add_scaled(hn, C64::new(*f, 0.0));
        }
    }
    (&h * u).scale(C64::new(0.0, -1.0))
}

fn rk4_step(law: &ControlLaw, u: &ComplexMatrix, t: f64, h: f64, active: bool) -> ComplexMatrix {
    let half = C64::new(h / 2.0, 0.0);
    let k1 = derivative(law, u, t, active);
    let k2 = derivative(law, &u.add_scaled(&k1, half), t + h / 2.0, active);
    let k3 = derivative(law, &u.add_scaled(&k2, half), t + h / 2.0, active);
    let k4 = derivative(law, &u.add_scaled(&k3, C64::new(h, 0.0)), t + h, active);
    let sum = k1.add_scaled(&k2, C64::new(2.0, 0.0)).add_scaled(&k3, C64::new(2.0, 0.0)).add_scaled(&k4, C64::new(1.0, 0.0));
    u.add_scaled(&sum, C64::new(h / 6.0, 0.0))
}

/// Steps `u` from `t0` to `t1` with equal steps no larger than
/// `config.step`, splitting at the switch-off time.
struct Stepper<'a> {
    config: &'a SimulationConfig,
    steps_taken: usize,
    max_defect: f64,
    repair: bool,
}

impl<'a> Stepper<'a> {
    fn new(config: &'a SimulationConfig, repair: bool) -> Self {
        Self { config, steps_taken: 0, max_defect: 0.0, repair }
    }

    fn advance(&mut self, mut u: ComplexMatrix, t0: f64, t1: f64) -> Result<ComplexMatrix> {
        if let Some(off) = self.config.control_off_time {
            if t0 < off && off < t1 && off - t0 > TIME_EPS && t1 - off > TIME_EPS {
                u = self.advance_uniform(u, t0, off, true)?;
                return self.advance_uniform(u, off, t1, false);
            }
        }
        let active = self.config.controls_active_at(t0 + TIME_EPS.min((t1 - t0) / 2.0));
        self.advance_uniform(u, t0, t1, active)
    }

    fn advance_uniform(&mut self, mut u: ComplexMatrix, t0: f64, t1: f64, active: bool) -> Result<ComplexMatrix> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(u);
        }
        let n = ((span / self.config.step) - TIME_EPS).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let law = &self.config.law;
        for i in 0..n {
            let t = t0 + i as f64 * h;
            u = rk4_step(law, &u, t, h, active);
            self.steps_taken += 1;
            if self.repair && self.steps_taken.is_multiple_of(self.config.reunitarize_every) {
                u = self.repair_state(u, t + h)?;
            }
        }
        Ok(u)
    }

    fn repair_state(&mut self, u: ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        let defect = unitarity_defect(&u);
        self.max_defect = self.max_defect.max(defect);
        if !defect.is_finite() || defect > UNSTABLE_DEFECT {
            return Err(Error::UnstableIntegration { t, defect });
        }
        reunitarize(&u)
    }
}

fn sample_times(t_max: f64, interval: f64) -> Vec<f64> {
    let n = (t_max / interval + TIME_EPS).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * interval).collect();
    if t_max - times[n] > TIME_EPS * interval {
        times.push(t_max);
    }
    times
}

fn make_sample(config: &SimulationConfig, class: Option<&EquivalenceClass>, u: ComplexMatrix, t: f64) -> Result<Sample> {
    let law = &config.law;
    let eval = law.evaluate(&u, t);
    let fields = if config.controls_active_at(t) { eval.fields } else { vec![0.0; law.controls().len()] };
    let distance = class.map(|c| c.distance(&u)).transpose()?;
    Ok(Sample { t, fidelity: fidelity_unchecked(law.target(), &u), lyapunov: eval.lyapunov, fields, distance, u })
}

/// Integrates from `U(0) = I` to `t_max`, sampling every `sample_interval`.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationTrace> {
    config.validate()?;
    let class = if config.record_invariants { Some(EquivalenceClass::of(config.law.target())?) } else { None };
    let times = sample_times(config.t_max, config.sample_interval);

    let mut stepper = Stepper::new(config, true);
    let mut u = ComplexMatrix::identity(config.law.dim());
    let mut samples = Vec::with_capacity(times.len());
    samples.push(make_sample(config, class.as_ref(), u.clone(), 0.0)?);
    for w in times.windows(2) {
        u = stepper.advance(u, w[0], w[1])?;
        let defect = unitarity_defect(&u);
        if !defect.is_finite() || defect > UNSTABLE_DEFECT {
            return Err(Error::UnstableIntegration { t: w[1], defect });
        }
        samples.push(make_sample(config, class.as_ref(), u.clone(), w[1])?);
    }
    let max_defect_before_repair = stepper.max_defect;
    Ok(SimulationTrace { samples, config: config.clone(), max_defect_before_repair })
}

/// Propagates an arbitrary state `u` at time `t0` to `t1` under the trace's
/// dynamics, without re-unitarization.
pub fn propagate_from(config: &SimulationConfig, u: &ComplexMatrix, t0: f64, t1: f64) -> Result<ComplexMatrix> {
    Stepper::new(config, false).advance(u.clone(), t0, t1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateTime {
    pub t: f64,
    pub fidelity: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Earliest sample reaching `threshold`, refined to the nearby fidelity
/// maximum: a scan at the integration step over the neighbouring sample
/// intervals, then a golden-section search around the best scan point.
pub fn find_gate_time(trace: &SimulationTrace, threshold: f64) -> Result<Option<GateTime>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1], got {threshold}")));
    }
    let Some(k) = trace.samples.iter().position(|s| s.fidelity >= threshold) else {
        return Ok(None);
    };
    let config = &trace.config;
    let target = config.law.target();
    let hit = &trace.samples[k];
    let mut best = GateTime { t: hit.t, fidelity: hit.fidelity };

    let start = &trace.samples[k.saturating_sub(1)];
    let end_t = trace.samples.get(k + 1).map_or(hit.t, |s| s.t);
    let span = end_t - start.t;
    if span <= 0.0 {
        return Ok(Some(best));
    }

    // Scan on the step grid.
    let n = ((span / config.step) - TIME_EPS).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut grid = Vec::with_capacity(n + 1);
    let mut u = start.u.clone();
    grid.push((start.t, u.clone(), fidelity_unchecked(target, &u)));
    let mut t = start.t;
    for _ in 0..n {
        u = propagate_from(config, &u, t, t + h)?;
        t += h;
        grid.push((t, u.clone(), fidelity_unchecked(target, &u)));
    }
    let j = (0..grid.len()).fold(0, |b, i| if grid[i].2 > grid[b].2 { i } else { b });
    if grid[j].2 > best.fidelity {
        best = GateTime { t: grid[j].0, fidelity: grid[j].2 };
    }

    // Golden-section on [t_{j-1}, t_{j+1}], propagating from grid point j-1.
    let lo_idx = j.saturating_sub(1);
    let hi_idx = (j + 1).min(grid.len() - 1);
    let (base_t, base_u) = (grid[lo_idx].0, grid[lo_idx].1.clone());
    let f_at = |t: f64| -> Result<f64> {
        let u = propagate_from(config, &base_u, base_t, t)?;
        Ok(fidelity_unchecked(target, &u))
    };
    let (mut a, mut b) = (grid[lo_idx].0, grid[hi_idx].0);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f_at(c)?, f_at(d)?);
    for _ in 0..60 {
        if (b - a).abs() < 1e-12 * (1.0 + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f_at(d)?;
        }
    }
    let (t_gs, f_gs) = if fc >= fd { (c, fc) } else { (d, fd) };
    if f_gs > best.fidelity {
        best = GateTime { t: t_gs, fidelity: f_gs };
    }
    Ok(Some(best))
}

/// Settings for a batch of random single-qubit rotation targets.
#[derive(Clone, Debug)]
pub struct RotationBatchConfig {
    pub system: HamiltonianSpec,
    pub gain: f64,
    pub tau: f64,
    pub t_max: f64,
    pub count: usize,
    pub seed: u64,
    pub step: f64,
    pub sample_interval: f64,
}

impl RotationBatchConfig {
    pub fn new(system: HamiltonianSpec, gain: f64, tau: f64, t_max: f64, count: usize, seed: u64) -> Self {
        Self { system, gain, tau, t_max, count, seed, step: DEFAULT_STEP, sample_interval: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationRecord {
    pub target: RotationTarget,
    pub peak_fidelity: f64,
    pub peak_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationBatch {
    pub records: Vec<RotationRecord>,
    pub median_peak_fidelity: f64,
    pub min_peak_fidelity: f64,
}

impl RotationBatch {
    pub fn fraction_at_least(&self, threshold: f64) -> f64 {
        let hits = self.records.iter().filter(|r| r.peak_fidelity >= threshold).count();
        hits as f64 / self.records.len() as f64
    }

    /// `theta,polar,azimuth,peak_F,peak_t`, one row per record in draw order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "theta,polar,azimuth,peak_F,peak_t")?;
        for r in &self.records {
            let t = &r.target;
            let cols = [t.theta, t.polar, t.azimuth, r.peak_fidelity, r.peak_time].map(fmt_float);
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }
}

/// Uniform draws: θ ∈ [0, 2π), polar ∈ [0, π], azimuth ∈ [0, 2π).
pub fn draw_rotation_targets(count: usize, seed: u64) -> Vec<RotationTarget> {
    use std::f64::consts::{PI, TAU};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let theta = rng.gen_range(0.0..TAU);
            let polar = rng.gen_range(0.0..=PI);
            let azimuth = rng.gen_range(0.0..TAU);
            RotationTarget { theta, polar, azimuth }
        })
        .collect()
}

/// Runs one controlled simulation per target (in parallel) and reports the
/// best sampled fidelity of each.
pub fn run_rotation_targets(config: &RotationBatchConfig, targets: &[RotationTarget]) -> Result<RotationBatch> {
    if targets.is_empty() {
        return Err(Error::InvalidParameter("rotation batch needs at least one target".into()));
    }
    let h0 = materialize_h0(&config.system);
    let records = targets
        .par_iter()
        .map(|target| {
            let law = ControlLaw::new(
                rotation_gate(target),
                config.tau,
                config.gain,
                h0.clone(),
                ControlSet::SigmaXSingle.hamiltonians(),
            )?;
            let mut sim = SimulationConfig::new(config.system, law, config.t_max, config.sample_interval);
            sim.step = config.step;
            let trace = simulate(&sim)?;
            let peak = trace.peak();
            Ok(RotationRecord { target: *target, peak_fidelity: peak.fidelity, peak_time: peak.t })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut peaks: Vec<f64> = records.iter().map(|r| r.peak_fidelity).collect();
    peaks.sort_by(f64::total_cmp);
    let m = peaks.len();
    let median = if m % 2 == 1 { peaks[m / 2] } else { 0.5 * (peaks[m / 2 - 1] + peaks[m / 2]) };
    Ok(RotationBatch { records, median_peak_fidelity: median, min_peak_fidelity: peaks[0] })
}

pub fn rotation_batch(config: &RotationBatchConfig) -> Result<RotationBatch> {
    if config.count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    if config.system.dim() != 2 {
        return Err(Error::InvalidParameter("rotation batches need a single-qubit system".into()));
    }
    run_rotation_targets(config, &draw_rotation_targets(config.count, config.seed))
}
