//! Flat `key = value` scenario files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Keys:
//!
//! | key                 | value                                                     | default            |
//! |---------------------|-----------------------------------------------------------|--------------------|
//! | `name`              | free text                                                 | `scenario`         |
//! | `hamiltonian`       | `single_qubit`, `ising`, `heisenberg`                     | required           |
//! | `omega1`            | ω₁ (angular frequency)                                    | required           |
//! | `omega2`            | ω₂ (two-qubit kinds)                                      | required for 2q    |
//! | `coupling`          | J (two-qubit kinds)                                       | required for 2q    |
//! | `target`            | `hadamard`, `cnot`, `rotation`, `file`                    | required           |
//! | `rotation_theta`, `rotation_polar`, `rotation_azimuth` | angles for `target = rotation` | required then |
//! | `target_file`       | path of a matrix file for `target = file`                 | required then      |
//! | `control_set`       | `sigma_x_single`, `sigma_x2`, `sigma_x1_plus_x2`          | by qubit count     |
//! | `gain`              | K ≥ 0                                                     | required           |
//! | `tau`               | τ                                                         | `0`                |
//! | `t_max`             | end time                                                  | required           |
//! | `step`              | RK4 step upper bound                                      | `0.001`            |
//! | `sample_interval`   | output spacing                                            | `0.01`             |
//! | `control_off_time`  | time or `none`                                            | `none`             |
//! | `record_invariants` | `true` / `false`                                          | `false`            |
//! | `reunitarize_every` | steps between polar repairs                               | `100`              |
//! | `output_path`       | output directory (relative to the working directory)      | `out`              |
//!
//! Matrix files hold N² lines of `re im`, row-major.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::experiments::{ScenarioConfig, TargetSpec};
use crate::matrix::ComplexMatrix;
use crate::operators::{ControlSet, HamiltonianKind, HamiltonianSpec, RotationTarget};
use crate::propagator::{fmt_float, DEFAULT_REUNITARIZE_EVERY, DEFAULT_STEP};

const KNOWN_KEYS: &[&str] = &[
    "name",
    "hamiltonian",
    "omega1",
    "omega2",
    "coupling",
    "target",
    "rotation_theta",
    "rotation_polar",
    "rotation_azimuth",
    "target_file",
    "control_set",
    "gain",
    "tau",
    "t_max",
    "step",
    "sample_interval",
    "control_off_time",
    "record_invariants",
    "reunitarize_every",
    "output_path",
];

/// Parsed key-value pairs with the line each came from.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
    base_dir: Option<PathBuf>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { line: Some(line_no), message: format!("expected `key = value`, got `{line}`") });
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config { line: Some(line_no), message: format!("unknown key `{key}`") });
            }
            if entries.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
                return Err(Error::Config { line: Some(line_no), message: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries, base_dir: None })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut kv = Self::parse(&text)?;
        kv.base_dir = path.parent().map(Path::to_path_buf);
        Ok(kv)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, value)) => value.parse::<T>().map(Some).map_err(|_| Error::Config {
                line: Some(*line),
                message: format!("cannot parse `{value}` for `{key}`"),
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::config(format!("missing required key `{key}`")))
    }

    fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, value)) => match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(Error::Config { line: Some(*line), message: format!("expected a boolean for `{key}`, got `{value}`") }),
            },
        }
    }

    fn get_optional_time(&self, key: &str) -> Result<Option<Option<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, v)) if v.eq_ignore_ascii_case("none") => Ok(Some(None)),
            Some(_) => Ok(Some(self.get::<f64>(key)?)),
        }
    }

    fn resolve_path(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p,
        }
    }
}

/// Builds a scenario from a complete key-value file.
pub fn scenario_from_kv(kv: &KeyValues) -> Result<ScenarioConfig> {
    let kind: HamiltonianKind = kv.require("hamiltonian")?;
    let omega1 = kv.require("omega1")?;
    let system = match kind {
        HamiltonianKind::SingleQubit => HamiltonianSpec::single_qubit(omega1),
        HamiltonianKind::Ising => HamiltonianSpec::ising(omega1, kv.require("omega2")?, kv.require("coupling")?),
        HamiltonianKind::Heisenberg => HamiltonianSpec::heisenberg(omega1, kv.require("omega2")?, kv.require("coupling")?),
    }
    .map_err(|e| Error::config(e.to_string()))?;
    let default_controls = if kind.qubits() == 1 { ControlSet::SigmaXSingle } else { ControlSet::SigmaX2 };
    let mut scenario = ScenarioConfig {
        name: "scenario".into(),
        system,
        target: parse_target(kv, None)?.ok_or_else(|| Error::config("missing required key `target`"))?,
        control_set: default_controls,
        gain: kv.require("gain")?,
        tau: 0.0,
        t_max: kv.require("t_max")?,
        step: DEFAULT_STEP,
        sample_interval: 0.01,
        control_off_time: None,
        record_invariants: false,
        reunitarize_every: DEFAULT_REUNITARIZE_EVERY,
        output_path: PathBuf::from("out"),
    };
    apply_overrides(&mut scenario, kv)?;
    Ok(scenario)
}

/// Applies every key present in `kv` on top of an existing scenario (used to
/// tweak presets from a file).
pub fn apply_overrides(scenario: &mut ScenarioConfig, kv: &KeyValues) -> Result<()> {
    if let Some(name) = kv.get::<String>("name")? {
        scenario.name = name;
    }
    let kind = kv.get::<HamiltonianKind>("hamiltonian")?.unwrap_or(scenario.system.kind);
    let mut system = scenario.system;
    if kind != system.kind {
        system.kind = kind;
    }
    if let Some(w) = kv.get("omega1")? {
        system.omega1 = w;
    }
    if let Some(w) = kv.get("omega2")? {
        system.omega2 = w;
    }
    if let Some(j) = kv.get("coupling")? {
        system.coupling = j;
    }
    scenario.system = system.validated().map_err(|e| Error::config(e.to_string()))?;
    if let Some(target) = parse_target(kv, Some(&scenario.target))? {
        scenario.target = target;
    }
    if let Some(cs) = kv.get("control_set")? {
        scenario.control_set = cs;
    }
    macro_rules! set {
        ($key:literal, $field:ident) => {
            if let Some(v) = kv.get($key)? {
                scenario.$field = v;
            }
        };
    }
    set!("gain", gain);
    set!("tau", tau);
    set!("t_max", t_max);
    set!("step", step);
    set!("sample_interval", sample_interval);
    set!("reunitarize_every", reunitarize_every);
    if let Some(off) = kv.get_optional_time("control_off_time")? {
        scenario.control_off_time = off;
    }
    if let Some(flag) = kv.get_bool("record_invariants")? {
        scenario.record_invariants = flag;
    }
    if let Some(p) = kv.get::<String>("output_path")? {
        scenario.output_path = PathBuf::from(p);
    }
    Ok(())
}

fn parse_target(kv: &KeyValues, current: Option<&TargetSpec>) -> Result<Option<TargetSpec>> {
    let angles_given = ["rotation_theta", "rotation_polar", "rotation_azimuth"].iter().any(|k| kv.contains(k));
    let kind: Option<String> = kv.get("target")?;
    let kind = match (kind, current) {
        (Some(k), _) => k,
        (None, Some(TargetSpec::Rotation(_))) if angles_given => "rotation".into(),
        (None, _) => return Ok(None),
    };
    let target = match kind.as_str() {
        "hadamard" => TargetSpec::Hadamard,
        "cnot" => TargetSpec::Cnot,
        "rotation" => {
            let prev = match current {
                Some(TargetSpec::Rotation(r)) => Some(*r),
                _ => None,
            };
            let angle = |key: &str, fallback: Option<f64>| -> Result<f64> {
                match kv.get(key)? {
                    Some(v) => Ok(v),
                    None => fallback.ok_or_else(|| Error::config(format!("missing required key `{key}`"))),
                }
            };
            let r = RotationTarget::new(
                angle("rotation_theta", prev.map(|r| r.theta))?,
                angle("rotation_polar", prev.map(|r| r.polar))?,
                angle("rotation_azimuth", prev.map(|r| r.azimuth))?,
            )
            .map_err(|e| Error::config(e.to_string()))?;
            TargetSpec::Rotation(r)
        }
        "file" => {
            let raw: String = kv.require("target_file")?;
            let path = kv.resolve_path(&raw);
            let matrix = read_matrix_file(&path)?;
            TargetSpec::Custom { path, matrix }
        }
        other => return Err(Error::config(format!("unknown target `{other}`"))),
    };
    Ok(Some(target))
}

/// Renders every field of a scenario in the key-value format; the output
/// parses back to an equal scenario.
pub fn render_scenario(s: &ScenarioConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", s.name);
    let _ = writeln!(out, "hamiltonian = {}", s.system.kind);
    let _ = writeln!(out, "omega1 = {}", s.system.omega1);
    if s.system.kind != HamiltonianKind::SingleQubit {
        let _ = writeln!(out, "omega2 = {}", s.system.omega2);
        let _ = writeln!(out, "coupling = {}", s.system.coupling);
    }
    match &s.target {
        TargetSpec::Hadamard => {
            let _ = writeln!(out, "target = hadamard");
        }
        TargetSpec::Cnot => {
            let _ = writeln!(out, "target = cnot");
        }
        TargetSpec::Rotation(r) => {
            let _ = writeln!(out, "target = rotation");
            let _ = writeln!(out, "rotation_theta = {}", r.theta);
            let _ = writeln!(out, "rotation_polar = {}", r.polar);
            let _ = writeln!(out, "rotation_azimuth = {}", r.azimuth);
        }
        TargetSpec::Custom { path, .. } => {
            let _ = writeln!(out, "target = file");
            let _ = writeln!(out, "target_file = {}", path.display());
        }
    }
    let _ = writeln!(out, "control_set = {}", s.control_set);
    let _ = writeln!(out, "gain = {}", s.gain);
    let _ = writeln!(out, "tau = {}", s.tau);
    let _ = writeln!(out, "t_max = {}", s.t_max);
    let _ = writeln!(out, "step = {}", s.step);
    let _ = writeln!(out, "sample_interval = {}", s.sample_interval);
    match s.control_off_time {
        Some(t) => {
            let _ = writeln!(out, "control_off_time = {t}");
        }
        None => {
            let _ = writeln!(out, "control_off_time = none");
        }
    }
    let _ = writeln!(out, "record_invariants = {}", s.record_invariants);
    let _ = writeln!(out, "reunitarize_every = {}", s.reunitarize_every);
    let _ = writeln!(out, "output_path = {}", s.output_path.display());
    out
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Config { line: Some(idx + 1), message: format!("bad number `{s}`") })
        };
        match parts.as_slice() {
            [re, im] => entries.push(C64::new(parse(re)?, parse(im)?)),
            _ => {
                return Err(Error::Config { line: Some(idx + 1), message: "expected `re im`".into() });
            }
        }
    }
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != entries.len() {
        return Err(Error::config(format!("{} entries do not form a square matrix", entries.len())));
    }
    ComplexMatrix::from_vec(n, entries).map_err(|e| Error::config(e.to_string()))
}

pub fn read_matrix_file(path: &Path) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}

pub fn render_matrix(m: &ComplexMatrix) -> String {
    m.as_slice().iter().map(|z| format!("{} {}\n", fmt_float(z.re), fmt_float(z.im))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::cnot;

    const ISING: &str = "
# CNOT with Ising coupling
name = demo
hamiltonian = ising
omega1 = 1
omega2 = 2
coupling = 0.05   # J
target = cnot
gain = 0.1
tau = 0.3
t_max = 10
sample_interval = 0.05
record_invariants = true
";

    #[test]
    fn parses_full_file() {
        let s = scenario_from_kv(&KeyValues::parse(ISING).unwrap()).unwrap();
        assert_eq!(s.name, "demo");
        assert_eq!(s.system, HamiltonianSpec::ising(1.0, 2.0, 0.05).unwrap());
        assert_eq!(s.control_set, ControlSet::SigmaX2);
        assert_eq!(s.tau, 0.3);
        assert!(s.record_invariants);
        assert_eq!(s.control_off_time, None);
        assert_eq!(s.step, DEFAULT_STEP);
    }

    #[test]
    fn render_round_trips() {
        let s = scenario_from_kv(&KeyValues::parse(ISING).unwrap()).unwrap();
        let again = scenario_from_kv(&KeyValues::parse(&render_scenario(&s)).unwrap()).unwrap();
        assert_eq!(render_scenario(&again), render_scenario(&s));
        assert_eq!(again.system, s.system);
        assert_eq!(again.tau, s.tau);
    }

    #[test]
    fn reports_line_numbers() {
        let err = KeyValues::parse("name = x\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(2), .. }), "{err}");
        let err = KeyValues::parse("name = x\nname = y\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(2), .. }));
        let err = KeyValues::parse("just words\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(1), .. }));
        let kv = KeyValues::parse("hamiltonian = ising\nomega1 = fast\n").unwrap();
        assert!(matches!(scenario_from_kv(&kv), Err(Error::Config { line: Some(2), .. })));
    }

    #[test]
    fn missing_keys_are_config_errors() {
        let kv = KeyValues::parse("hamiltonian = single_qubit\nomega1 = 1\n").unwrap();
        let err = scenario_from_kv(&kv).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn rotation_target_needs_angles() {
        let base = "hamiltonian = single_qubit\nomega1 = 1\ngain = 0.05\nt_max = 1\ntarget = rotation\n";
        assert!(scenario_from_kv(&KeyValues::parse(base).unwrap()).is_err());
        let full = format!("{base}rotation_theta = 1\nrotation_polar = 0.5\nrotation_azimuth = 2\n");
        let s = scenario_from_kv(&KeyValues::parse(&full).unwrap()).unwrap();
        assert_eq!(s.target, TargetSpec::Rotation(RotationTarget::new(1.0, 0.5, 2.0).unwrap()));
    }

    #[test]
    fn control_off_none_and_value() {
        let mut s = scenario_from_kv(&KeyValues::parse(ISING).unwrap()).unwrap();
        apply_overrides(&mut s, &KeyValues::parse("control_off_time = 4.5").unwrap()).unwrap();
        assert_eq!(s.control_off_time, Some(4.5));
        apply_overrides(&mut s, &KeyValues::parse("control_off_time = none").unwrap()).unwrap();
        assert_eq!(s.control_off_time, None);
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = parse_matrix(&render_matrix(&cnot())).unwrap();
        assert_eq!(m, cnot());
        assert!(parse_matrix("1 0\n0 0\n0 0\n").is_err());
        assert!(parse_matrix("1 0 0\n").is_err());
        assert!(parse_matrix("").is_err());
    }
}
