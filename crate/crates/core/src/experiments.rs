//! Scenario runner: named presets, τ×t fidelity sweeps and the
//! equivalence-class persistence run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::render_scenario;
use crate::control::ControlLaw;
use crate::error::{Error, Result};
use crate::invariants::EquivalenceClass;
use crate::matrix::{expm_herm_scaled, ComplexMatrix};
use crate::operators::{cnot, hadamard, materialize_h0, rotation_gate, ControlSet, HamiltonianSpec, RotationTarget};
use crate::propagator::{
    find_gate_time, fmt_float, simulate, GateTime, SimulationConfig, SimulationTrace, DEFAULT_REUNITARIZE_EVERY,
    DEFAULT_STEP,
};

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &["fig1", "fig2", "fig4", "fig5a", "fig5b"];

/// Fidelity thresholds reported by [`run_scenario`].
pub const GATE_THRESHOLDS: [f64; 2] = [0.99, 0.999];

/// Fields count as settled once `Σ f_n² < SETTLE_RATIO · K²` ...
pub const SETTLE_RATIO: f64 = 1e-6;
/// ... for this long.
pub const SETTLE_WINDOW: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Hadamard,
    Cnot,
    Rotation(RotationTarget),
    Custom { path: PathBuf, matrix: ComplexMatrix },
}

impl TargetSpec {
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            TargetSpec::Hadamard => hadamard(),
            TargetSpec::Cnot => cnot(),
            TargetSpec::Rotation(r) => rotation_gate(r),
            TargetSpec::Custom { matrix, .. } => matrix.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: HamiltonianSpec,
    pub target: TargetSpec,
    pub control_set: ControlSet,
    pub gain: f64,
    pub tau: f64,
    pub t_max: f64,
    pub step: f64,
    pub sample_interval: f64,
    pub control_off_time: Option<f64>,
    pub record_invariants: bool,
    pub reunitarize_every: usize,
    pub output_path: PathBuf,
}

impl ScenarioConfig {
    pub fn law(&self) -> Result<ControlLaw> {
        let target = self.target.matrix();
        let dim = self.system.dim();
        if target.dim() != dim {
            return Err(Error::InvalidParameter(format!(
                "target is {}x{} but the {} system has dimension {dim}",
                target.dim(),
                target.dim(),
                self.system.kind
            )));
        }
        if self.control_set.dim() != dim {
            return Err(Error::InvalidParameter(format!(
                "control set {} does not act on a {} system",
                self.control_set, self.system.kind
            )));
        }
        ControlLaw::new(target, self.tau, self.gain, materialize_h0(&self.system), self.control_set.hamiltonians())
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig> {
        let cfg = SimulationConfig {
            system: self.system,
            law: self.law()?,
            t_max: self.t_max,
            step: self.step,
            sample_interval: self.sample_interval,
            control_off_time: self.control_off_time,
            record_invariants: self.record_invariants,
            reunitarize_every: self.reunitarize_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Named scenarios. Frequencies are in units of ω₁
/// (ω₁ = 1) and times in 1/ω₁.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let base = |name: &str, system: HamiltonianSpec, target, control_set, gain, tau, t_max, sample_interval| {
        ScenarioConfig {
            name: name.to_string(),
            system,
            target,
            control_set,
            gain,
            tau,
            t_max,
            step: DEFAULT_STEP,
            sample_interval,
            control_off_time: None,
            record_invariants: false,
            reunitarize_every: DEFAULT_REUNITARIZE_EVERY,
            output_path: PathBuf::from("out"),
        }
    };
    let ising = HamiltonianSpec::ising(1.0, 2.0, 0.05)?;
    let heisenberg = HamiltonianSpec::heisenberg(1.0, 2.0, 0.2)?;
    let scenario = match name {
        // Hadamard gate: ω = 1, K = 0.05ω, τ = 1/ω.
        "fig1" => base(
            "fig1",
            HamiltonianSpec::single_qubit(1.0)?,
            TargetSpec::Hadamard,
            ControlSet::SigmaXSingle,
            0.05,
            1.0,
            100.0,
            0.01,
        ),
        // CNOT, Ising: ω₂ = 2ω₁, J = 0.05ω₁, K = 0.1ω₁, τ = 0.3/ω₁.
        "fig2" => base("fig2", ising, TargetSpec::Cnot, ControlSet::SigmaX2, 0.1, 0.3, 500.0, 0.05),
        // CNOT, Heisenberg: ω₂ = 2ω₁, J = 0.2ω₁, K = 0.2ω₁, τ = 0.2/ω₁.
        "fig4" => base("fig4", heisenberg, TargetSpec::Cnot, ControlSet::SigmaX2, 0.2, 0.2, 500.0, 0.05),
        "fig5a" => ScenarioConfig {
            record_invariants: true,
            ..base("fig5a", ising, TargetSpec::Cnot, ControlSet::SigmaX2, 0.1, 0.3, 1000.0, 0.05)
        },
        "fig5b" => ScenarioConfig {
            record_invariants: true,
            ..base("fig5b", heisenberg, TargetSpec::Cnot, ControlSet::SigmaX2, 0.2, 0.2, 1000.0, 0.05)
        },
        other => {
            return Err(Error::config(format!("unknown preset `{other}` (expected one of {})", PRESETS.join(", "))));
        }
    };
    Ok(scenario)
}

#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub trace: SimulationTrace,
    /// Best sampled fidelity.
    pub peak: GateTime,
    /// Refined gate times for each entry of [`GATE_THRESHOLDS`].
    pub gate_times: Vec<(f64, Option<GateTime>)>,
    /// The tracked operator produced no field at t = 0.
    pub degenerate_start: bool,
}

impl ScenarioOutcome {
    pub fn summary(&self) -> String {
        let mut s = format!("peak F = {:.6} at t = {:.4}", self.peak.fidelity, self.peak.t);
        for (thr, g) in &self.gate_times {
            match g {
                Some(g) => s.push_str(&format!("; F >= {thr}: t = {:.4} (F = {:.6})", g.t, g.fidelity)),
                None => s.push_str(&format!("; F >= {thr}: not reached")),
            }
        }
        s
    }
}

/// Simulates a scenario without touching the filesystem.
pub fn evaluate_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let sim = config.simulation_config()?;
    let degenerate_start = sim.law.gain() > 0.0 && sim.law.is_degenerate_start();
    let trace = simulate(&sim)?;
    let peak_sample = trace.peak();
    let peak = GateTime { t: peak_sample.t, fidelity: peak_sample.fidelity };
    let gate_times =
        GATE_THRESHOLDS.iter().map(|&thr| Ok((thr, find_gate_time(&trace, thr)?))).collect::<Result<Vec<_>>>()?;
    Ok(ScenarioOutcome { trace, peak, gate_times, degenerate_start })
}

/// Simulates and writes `<dir>/<name>.csv` plus the `<dir>/<name>.meta`
/// sidecar.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let outcome = evaluate_scenario(config)?;
    write_scenario_outputs(config, &outcome)?;
    Ok(outcome)
}

pub fn write_scenario_outputs(config: &ScenarioConfig, outcome: &ScenarioOutcome) -> Result<()> {
    let dir = &config.output_path;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{}.csv", config.name));
    write_with(&csv, |w| outcome.trace.write_csv(w))?;
    let meta = dir.join(format!("{}.meta", config.name));
    let mut text = render_scenario(config);
    text.push_str(&format!("# peak_fidelity = {}\n# peak_time = {}\n", fmt_float(outcome.peak.fidelity), fmt_float(outcome.peak.t)));
    write_with(&meta, |w| w.write_all(text.as_bytes()))
}

fn write_with(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Fidelity over a τ × t grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub tau_values: Vec<f64>,
    pub t_values: Vec<f64>,
    /// `fidelity[i][j]` belongs to `tau_values[i]`, `t_values[j]`.
    pub fidelity: Vec<Vec<f64>>,
}

impl SweepGrid {
    /// `(τ, t, F)` of the largest fidelity, first in (τ, t) order on ties.
    pub fn global_max(&self) -> (f64, f64, f64) {
        let mut best = (self.tau_values[0], self.t_values[0], f64::NEG_INFINITY);
        for (i, row) in self.fidelity.iter().enumerate() {
            for (j, &f) in row.iter().enumerate() {
                if f > best.2 {
                    best = (self.tau_values[i], self.t_values[j], f);
                }
            }
        }
        best
    }

    /// Long format: `tau,t,F`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tau,t,F")?;
        for (tau, row) in self.tau_values.iter().zip(&self.fidelity) {
            for (t, f) in self.t_values.iter().zip(row) {
                writeln!(out, "{},{},{}", fmt_float(*tau), fmt_float(*t), fmt_float(*f))?;
            }
        }
        Ok(())
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| if i == count - 1 { hi } else { lo + i as f64 * step }).collect()
}

/// One simulation per τ value (run in parallel, gathered in τ order).
pub fn tau_sweep_values(base: &ScenarioConfig, tau_values: &[f64], t_max: f64) -> Result<SweepGrid> {
    if tau_values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one tau".into()));
    }
    let rows = tau_values
        .par_iter()
        .map(|&tau| {
            let cfg = ScenarioConfig { tau, t_max, record_invariants: false, ..base.clone() };
            let trace = simulate(&cfg.simulation_config()?)?;
            Ok(trace.samples.iter().map(|s| (s.t, s.fidelity)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let t_values = rows[0].iter().map(|&(t, _)| t).collect();
    let fidelity = rows.into_iter().map(|r| r.into_iter().map(|(_, f)| f).collect()).collect();
    Ok(SweepGrid { tau_values: tau_values.to_vec(), t_values, fidelity })
}

pub fn tau_sweep(base: &ScenarioConfig, tau_min: f64, tau_max: f64, tau_count: usize, t_max: f64) -> Result<SweepGrid> {
    if tau_count < 2 {
        return Err(Error::InvalidParameter("tau_count must be at least 2".into()));
    }
    if !(tau_min.is_finite() && tau_max.is_finite() && tau_min <= tau_max) {
        return Err(Error::InvalidParameter(format!("bad tau range [{tau_min}, {tau_max}]")));
    }
    tau_sweep_values(base, &linspace(tau_min, tau_max, tau_count), t_max)
}

pub fn write_sweep(base: &ScenarioConfig, grid: &SweepGrid) -> Result<PathBuf> {
    let dir = &base.output_path;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}_sweep.csv", base.name));
    write_with(&path, |w| grid.write_csv(w))?;
    Ok(path)
}

/// Earliest time after which `Σ f_n² < SETTLE_RATIO·K²` has held for a full
/// [`SETTLE_WINDOW`]; the returned time is the end of that window.
pub fn settle_time(trace: &SimulationTrace) -> Option<f64> {
    let gain = trace.config.law.gain();
    let floor = SETTLE_RATIO * gain * gain;
    let mut quiet_since: Option<f64> = None;
    for s in &trace.samples {
        let power: f64 = s.fields.iter().map(|f| f * f).sum();
        if power < floor {
            let start = *quiet_since.get_or_insert(s.t);
            if s.t - start >= SETTLE_WINDOW - 1e-9 {
                return Some(s.t);
            }
        } else {
            quiet_since = None;
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct EquivalenceOutcome {
    pub trace: SimulationTrace,
    pub t_off: f64,
    /// `(t, D)` of the uncontrolled propagator `exp(−i H₀ t)`.
    pub baseline: Vec<(f64, f64)>,
    /// The switch-off time came from the settle rule rather than the caller;
    /// `false` when it fell back to `t_max / 2`.
    pub settled: bool,
}

impl EquivalenceOutcome {
    /// Largest D at or after the switch-off.
    pub fn max_distance_after_off(&self) -> f64 {
        self.trace.samples.iter().filter(|s| s.t >= self.t_off).filter_map(|s| s.distance).fold(0.0, f64::max)
    }

    pub fn distance_at_off(&self) -> Option<f64> {
        self.trace.sample_at(self.t_off).and_then(|s| s.distance)
    }

    pub fn min_distance(&self) -> f64 {
        self.trace.samples.iter().filter_map(|s| s.distance).fold(f64::INFINITY, f64::min)
    }
}

/// Drives `U` with the controls on until `t_off` (or the settle time when
/// `None`), then lets it evolve freely, recording the distance to the
/// target's class throughout. Also evaluates the uncontrolled baseline.
pub fn equivalence_run(base: &ScenarioConfig, t_off: Option<f64>) -> Result<EquivalenceOutcome> {
    let mut cfg = ScenarioConfig { record_invariants: true, control_off_time: None, ..base.clone() };
    let (t_off, settled) = match t_off {
        Some(t) => {
            if !(t > 0.0 && t < cfg.t_max) {
                return Err(Error::InvalidParameter(format!("t_off {t} must lie in (0, {})", cfg.t_max)));
            }
            (t, true)
        }
        None => {
            let probe = ScenarioConfig { record_invariants: false, ..cfg.clone() };
            let trace = simulate(&probe.simulation_config()?)?;
            match settle_time(&trace) {
                Some(t) if t < cfg.t_max => (t, true),
                _ => (cfg.t_max / 2.0, false),
            }
        }
    };
    cfg.control_off_time = Some(t_off);
    let sim = cfg.simulation_config()?;
    let trace = simulate(&sim)?;

    let class = EquivalenceClass::of(sim.law.target())?;
    let spectrum = sim.law.h0_spectrum();
    let baseline = trace
        .samples
        .iter()
        .map(|s| Ok((s.t, class.distance(&expm_herm_scaled(spectrum, s.t))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceOutcome { trace, t_off, baseline, settled })
}

/// Writes `<name>.csv` (trace with D), `<name>_baseline.csv` (`t,D`) and the
/// metadata sidecar.
pub fn write_equivalence(base: &ScenarioConfig, outcome: &EquivalenceOutcome) -> Result<()> {
    let dir = &base.output_path;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_with(&dir.join(format!("{}.csv", base.name)), |w| outcome.trace.write_csv(w))?;
    write_with(&dir.join(format!("{}_baseline.csv", base.name)), |w| {
        writeln!(w, "t,D")?;
        for (t, d) in &outcome.baseline {
            writeln!(w, "{},{}", fmt_float(*t), fmt_float(*d))?;
        }
        Ok(())
    })?;
    let effective =
        ScenarioConfig { control_off_time: Some(outcome.t_off), record_invariants: true, ..base.clone() };
    let text = render_scenario(&effective);
    write_with(&dir.join(format!("{}.meta", base.name)), |w| w.write_all(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_reference_parameters() {
        let f1 = preset("fig1").unwrap();
        assert_eq!((f1.system.omega1, f1.gain, f1.tau), (1.0, 0.05, 1.0));
        assert_eq!(f1.target, TargetSpec::Hadamard);
        let f2 = preset("fig2").unwrap();
        assert_eq!(f2.system, HamiltonianSpec::ising(1.0, 2.0, 0.05).unwrap());
        assert_eq!((f2.gain, f2.tau), (0.1, 0.3));
        let f4 = preset("fig4").unwrap();
        assert_eq!(f4.system, HamiltonianSpec::heisenberg(1.0, 2.0, 0.2).unwrap());
        assert_eq!((f4.gain, f4.tau), (0.2, 0.2));
        assert_eq!(preset("fig5a").unwrap().system, f2.system);
        assert_eq!(preset("fig5b").unwrap().system, f4.system);
        assert!(preset("fig3").is_err());
        for name in PRESETS {
            preset(name).unwrap().simulation_config().unwrap();
        }
    }

    #[test]
    fn mismatched_target_is_rejected() {
        let mut s = preset("fig1").unwrap();
        s.target = TargetSpec::Cnot;
        assert!(s.simulation_config().is_err());
        let mut s = preset("fig2").unwrap();
        s.control_set = ControlSet::SigmaXSingle;
        assert!(s.simulation_config().is_err());
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(-1.0, 1.0, 5), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn sweep_argument_checks() {
        let base = preset("fig1").unwrap();
        assert!(tau_sweep(&base, 0.0, 1.0, 1, 1.0).is_err());
        assert!(tau_sweep(&base, 1.0, 0.0, 3, 1.0).is_err());
    }

    #[test]
    fn grid_max_and_csv() {
        let grid = SweepGrid {
            tau_values: vec![0.0, 1.0],
            t_values: vec![0.0, 0.5],
            fidelity: vec![vec![0.1, 0.7], vec![0.7, 0.2]],
        };
        assert_eq!(grid.global_max(), (0.0, 0.5, 0.7));
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().next(), Some("tau,t,F"));
    }

    #[test]
    fn equivalence_rejects_bad_t_off() {
        let base = ScenarioConfig { t_max: 1.0, ..preset("fig5a").unwrap() };
        assert!(equivalence_run(&base, Some(0.0)).is_err());
        assert!(equivalence_run(&base, Some(1.0)).is_err());
    }
}
