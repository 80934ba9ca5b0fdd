use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lyapunov_gates::config::{apply_overrides, read_matrix_file, scenario_from_kv, KeyValues};
use lyapunov_gates::experiments::{
    equivalence_run, preset, run_scenario, tau_sweep, write_equivalence, write_sweep, ScenarioConfig,
};
use lyapunov_gates::invariants::{distance_to_class, makhlin};
use lyapunov_gates::operators::cnot;
use lyapunov_gates::propagator::{rotation_batch, RotationBatchConfig};
use lyapunov_gates::{Error, HamiltonianSpec, Result};

#[derive(Parser)]
#[command(name = "lyagate", version, about = "Quantum gate synthesis by Lyapunov tracking control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write `<name>.csv` and `<name>.meta`.
    Simulate {
        /// Scenario file; its keys override the preset when both are given.
        #[arg(long)]
        config: Option<PathBuf>,
        /// fig1, fig2, fig4, fig5a or fig5b.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fidelity over a grid of τ values; writes `<name>_sweep.csv` (tau,t,F).
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        tau_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau_max: f64,
        #[arg(long, default_value_t = 101)]
        tau_count: usize,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random single-qubit rotation targets; writes `rotations.csv`.
    Rotations {
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.05)]
        gain: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Drive toward the CNOT class, switch the controls off, keep recording D.
    Equivalence {
        /// fig5a (Ising) or fig5b (Heisenberg).
        #[arg(long)]
        preset: String,
        /// Switch-off time; by default the fields' settle time.
        #[arg(long)]
        t_off: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the Makhlin invariants of a 4x4 matrix and its distance to CNOT.
    Invariants {
        /// 16 lines of `re im`, row-major.
        #[arg(long)]
        matrix: PathBuf,
    },
}

fn load_scenario(config: Option<&Path>, preset_name: Option<&str>, out: Option<PathBuf>) -> Result<ScenarioConfig> {
    let mut scenario = match (preset_name, config) {
        (Some(name), Some(path)) => {
            let mut s = preset(name)?;
            apply_overrides(&mut s, &KeyValues::read(path)?)?;
            s
        }
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => scenario_from_kv(&KeyValues::read(path)?)?,
        (None, None) => return Err(Error::config("give --config, --preset or both")),
    };
    if let Some(dir) = out {
        scenario.output_path = dir;
    }
    Ok(scenario)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, preset, out } => {
            let scenario = load_scenario(config.as_deref(), preset.as_deref(), out)?;
            let outcome = run_scenario(&scenario)?;
            if outcome.degenerate_start {
                eprintln!("warning: the control fields vanish at t = 0 (degenerate tau = {})", scenario.tau);
            }
            println!("{}: {}", scenario.name, outcome.summary());
            if scenario.record_invariants {
                if let Some(d) = outcome.trace.samples.last().and_then(|s| s.distance) {
                    println!("final D = {d:.6e}");
                }
            }
            println!("wrote {}", scenario.output_path.join(format!("{}.csv", scenario.name)).display());
        }
        Command::Sweep { config, preset, tau_min, tau_max, tau_count, t_max, out } => {
            let scenario = load_scenario(config.as_deref(), preset.as_deref(), out)?;
            let grid = tau_sweep(&scenario, tau_min, tau_max, tau_count, t_max)?;
            let path = write_sweep(&scenario, &grid)?;
            let (tau, t, f) = grid.global_max();
            println!("{}: max F = {f:.6} at tau = {tau:.4}, t = {t:.4}", scenario.name);
            println!("wrote {}", path.display());
        }
        Command::Rotations { count, seed, omega, gain, tau, t_max, out } => {
            let cfg = RotationBatchConfig::new(HamiltonianSpec::single_qubit(omega)?, gain, tau, t_max, count, seed);
            let batch = rotation_batch(&cfg)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let path = out.join("rotations.csv");
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            batch.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
            println!(
                "{count} targets: median peak F = {:.6}, min = {:.6}, fraction >= 0.99: {:.2}",
                batch.median_peak_fidelity,
                batch.min_peak_fidelity,
                batch.fraction_at_least(0.99)
            );
            println!("wrote {}", path.display());
        }
        Command::Equivalence { preset: name, t_off, out } => {
            if name != "fig5a" && name != "fig5b" {
                return Err(Error::config(format!("equivalence runs use fig5a or fig5b, not `{name}`")));
            }
            let scenario = load_scenario(None, Some(&name), out)?;
            let outcome = equivalence_run(&scenario, t_off)?;
            if !outcome.settled {
                eprintln!("warning: fields never settled; switching off at t_max/2 = {}", outcome.t_off);
            }
            write_equivalence(&scenario, &outcome)?;
            println!(
                "{name}: t_off = {:.4}, D(t_off) = {:.4e}, max D after = {:.4e}, min D = {:.4e}",
                outcome.t_off,
                outcome.distance_at_off().unwrap_or(f64::NAN),
                outcome.max_distance_after_off(),
                outcome.min_distance()
            );
        }
        Command::Invariants { matrix } => {
            let u = read_matrix_file(&matrix)?;
            let inv = makhlin(&u)?;
            println!("{:.12e} {:.12e} {:.12e}", inv.d1 + 0.0, inv.d2 + 0.0, inv.d3 + 0.0);
            println!("D_cnot = {:.12e}", distance_to_class(&u, &cnot())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
