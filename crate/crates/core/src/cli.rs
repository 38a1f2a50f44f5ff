//! The `platoon` command line.
//!
//! Summaries go to standard output as `key=value` lines; diagnostics go to
//! standard error. Exit codes: 0 success or attack found, 1 error,
//! 2 no attack exists, 3 the backend could not decide.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::{self, ScenarioConfig};
use crate::simulator::{self, AttackVector, Injection, SimulationTrace};
use crate::synthesis::{self, backend_by_name, SynthesisOutcome};
use crate::topology::{PlatoonTopology, TopologyKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_FOUND: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub const SOLVER_ENV: &str = "PLATOON_SOLVER";
pub const ATTACK_FILE: &str = "attack.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const NORMALIZED_CONFIG_FILE: &str = "scenario.normalized.cfg";

#[derive(Debug, Parser)]
#[command(
    name = "platoon",
    version,
    about = "Platoon simulation and FDI attack synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the adjacency matrix of a topology.
    Topology {
        /// PF, PLF, TPF, TPLF or custom.
        #[arg(long)]
        kind: TopologyKind,
        /// Number of followers.
        #[arg(long)]
        n: Option<usize>,
        /// Custom matrix, rows split by `;`, e.g. `0,0;1,0`.
        #[arg(long)]
        matrix: Option<String>,
    },
    /// Search for an attack vector and write attack.csv.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the platoon, with attack.csv if one is given or present.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        attack: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize, simulate, verify and plot.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG charts from a trace.csv.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        /// Scenario whose attack window is shaded.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line with process stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the command line against arbitrary output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let mut ctx = Context { out, err };
    match ctx.dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            EXIT_ERROR
        }
    }
}

struct Context<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Context<'_> {
    fn dispatch(&mut self, command: Command) -> Result<i32> {
        match command {
            Command::Topology { kind, n, matrix } => self.topology(kind, n, matrix),
            Command::Synth { config, out } => self.synth(&config, out),
            Command::Simulate {
                config,
                attack,
                out,
            } => self.simulate(&config, attack, out),
            Command::Run { config, out } => self.run(&config, out),
            Command::Plot { trace, config, out } => self.plot(&trace, config, out),
        }
    }

    fn summary(&mut self, key: &str, value: impl std::fmt::Display) -> Result<()> {
        writeln!(self.out, "{key}={value}")?;
        Ok(())
    }

    fn topology(
        &mut self,
        kind: TopologyKind,
        n: Option<usize>,
        matrix: Option<String>,
    ) -> Result<i32> {
        let topo = match (kind, matrix) {
            (TopologyKind::Custom, Some(m)) => {
                let topo = PlatoonTopology::custom(PlatoonTopology::parse_matrix(&m)?)?;
                if let Some(n) = n.filter(|&n| n != topo.followers()) {
                    return Err(Error::Argument(format!(
                        "--n {n} does not match the {} followers of --matrix",
                        topo.followers()
                    )));
                }
                topo
            }
            (TopologyKind::Custom, None) => {
                return Err(Error::Argument("custom topology needs --matrix".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Argument(
                    "--matrix is only valid with --kind custom".into(),
                ))
            }
            (kind, None) => {
                let n = n.ok_or_else(|| Error::Argument("--n is required".into()))?;
                PlatoonTopology::named(kind, n)?
            }
        };
        write!(self.out, "{}", topo.render())?;
        Ok(EXIT_OK)
    }

    /// Parses the config, prepares the output directory and records the
    /// normalized scenario there.
    fn load(&mut self, config: &Path, out: Option<PathBuf>) -> Result<(ScenarioConfig, PathBuf)> {
        let cfg = io::parse_config(config)?;
        let dir = out.unwrap_or_else(|| cfg.run.output_dir.clone());
        std::fs::create_dir_all(&dir)?;
        io::csv::write_atomic(
            &dir.join(NORMALIZED_CONFIG_FILE),
            cfg.to_normalized_string().as_bytes(),
        )?;
        Ok((cfg, dir))
    }

    fn search(&mut self, cfg: &ScenarioConfig) -> Result<SynthesisOutcome> {
        let name = std::env::var(SOLVER_ENV).unwrap_or_default();
        let backend = backend_by_name(&name)?;
        writeln!(self.err, "solver: {}", backend.name())?;
        synthesis::synthesize_with(cfg.scenario(), cfg.attack_spec(), backend.as_ref())
    }

    /// Reports a synthesis outcome, writing attack.csv when one was found.
    fn report_synthesis(&mut self, outcome: &SynthesisOutcome, dir: &Path) -> Result<i32> {
        // A vector left over from an earlier run must not be mistaken for this one.
        let stale = dir.join(ATTACK_FILE);
        if !outcome.is_found() && stale.exists() {
            std::fs::remove_file(stale)?;
        }
        match outcome {
            SynthesisOutcome::Found { vector, disjunct } => {
                let path = dir.join(ATTACK_FILE);
                io::write_attack_csv(&path, vector)?;
                self.summary("feasible", true)?;
                self.summary("violated_vehicle", disjunct.vehicle)?;
                self.summary("violation_step", disjunct.k)?;
                self.summary(
                    "max_abs_delta",
                    vector.deltas.iter().fold(0.0f64, |m, d| m.max(d.abs())),
                )?;
                self.summary("attack", path.display())?;
                Ok(EXIT_OK)
            }
            SynthesisOutcome::NotFound => {
                self.summary("feasible", false)?;
                writeln!(
                    self.err,
                    "no attack vector within the bound violates the goal"
                )?;
                Ok(EXIT_NOT_FOUND)
            }
            SynthesisOutcome::Inconclusive(reason) => {
                self.summary("feasible", "unknown")?;
                writeln!(self.err, "inconclusive: {reason}")?;
                Ok(EXIT_INCONCLUSIVE)
            }
        }
    }

    fn synth(&mut self, config: &Path, out: Option<PathBuf>) -> Result<i32> {
        let (cfg, dir) = self.load(config, out)?;
        let outcome = self.search(&cfg)?;
        self.report_synthesis(&outcome, &dir)
    }

    /// Simulates with `vector` injected (if any), writes trace.csv and
    /// prints the violation summary.
    fn replay(
        &mut self,
        cfg: &ScenarioConfig,
        vector: Option<&AttackVector>,
        dir: &Path,
    ) -> Result<SimulationTrace> {
        let attack = cfg.attack_spec();
        let injection = vector.map(|vector| Injection { attack, vector });
        let trace = simulator::simulate_with_limits(
            cfg.scenario(),
            injection,
            cfg.run.horizon,
            attack.d_min,
            attack.d_max,
        )?;
        let path = dir.join(TRACE_FILE);
        io::write_trace_csv(&path, &trace)?;
        self.summary("attacked", vector.is_some())?;
        self.summary("steps", trace.steps())?;
        if let Some((gap, k, i)) = trace.min_gap() {
            self.summary("min_gap", gap)?;
            self.summary("min_gap_at", format!("{k}:{i}"))?;
        }
        if let Some((gap, _, _)) = trace.max_gap() {
            self.summary("max_gap", gap)?;
        }
        self.summary("violations", trace.events.len())?;
        for kind in [
            simulator::ViolationKind::Safety,
            simulator::ViolationKind::Performance,
            simulator::ViolationKind::Collision,
        ] {
            let count = trace.events.iter().filter(|e| e.kind == kind).count();
            self.summary(&format!("{kind}_violations"), count)?;
        }
        if let Some(first) = trace.events.first() {
            self.summary(
                "first_violation",
                format!("{}:{}:{}", first.kind, first.k, first.vehicle),
            )?;
        }
        self.summary("trace", path.display())?;
        Ok(trace)
    }

    fn simulate(
        &mut self,
        config: &Path,
        attack: Option<PathBuf>,
        out: Option<PathBuf>,
    ) -> Result<i32> {
        let (cfg, dir) = self.load(config, out)?;
        let attack_path = attack.or_else(|| {
            let implicit = dir.join(ATTACK_FILE);
            implicit.is_file().then_some(implicit)
        });
        let vector = match &attack_path {
            Some(path) => {
                writeln!(self.err, "injecting {}", path.display())?;
                let v = io::read_attack_csv(path, Some(cfg.attack.duration))?;
                if let Err(e) = v.check_against(&cfg.attack) {
                    writeln!(self.err, "warning: {e}")?;
                }
                Some(v)
            }
            None => None,
        };
        self.replay(&cfg, vector.as_ref(), &dir)?;
        Ok(EXIT_OK)
    }

    fn run(&mut self, config: &Path, out: Option<PathBuf>) -> Result<i32> {
        let (cfg, dir) = self.load(config, out)?;
        let outcome = self.search(&cfg)?;
        let code = self.report_synthesis(&outcome, &dir)?;
        let trace = self.replay(&cfg, outcome.vector(), &dir)?;
        for path in io::emit_plots(&trace, &dir)? {
            writeln!(self.err, "wrote {}", path.display())?;
        }
        if let Some(vector) = outcome.vector() {
            let report = synthesis::verify_attack(cfg.scenario(), cfg.attack_spec(), vector)?;
            self.summary("verified", report.holds)?;
            self.summary("window_violations", report.violations.len())?;
            if !report.holds {
                writeln!(
                    self.err,
                    "solver and simulator disagree: {:?}",
                    report.failed
                )?;
                return Ok(EXIT_ERROR);
            }
        }
        Ok(code)
    }

    fn plot(&mut self, trace: &Path, config: Option<PathBuf>, out: Option<PathBuf>) -> Result<i32> {
        let mut data = io::read_trace_csv(trace)?;
        if let Some(config) = config {
            let cfg = io::parse_config(&config)?;
            data.attack_window = Some((cfg.attack.onset, cfg.attack.duration));
        }
        let dir = out.unwrap_or_else(|| {
            trace
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
        });
        for path in io::emit_plots(&data, &dir)? {
            self.summary("plot", path.display())?;
        }
        Ok(EXIT_OK)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("platoon").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn topology_prints_matrix() {
        let (code, out, _) = call(&["topology", "--kind", "TPLF", "--n", "4"]);
        assert_eq!(code, 0);
        assert_eq!(
            out,
            "0 0 0 0 0\n1 0 0 0 0\n1 1 0 0 0\n1 1 1 0 0\n1 0 1 1 0\n"
        );
        let (code, out, _) = call(&["topology", "--kind", "custom", "--matrix", "0,0;1,0"]);
        assert_eq!((code, out.as_str()), (0, "0 0\n1 0\n"));
    }

    #[test]
    fn bad_arguments_exit_one() {
        assert_eq!(call(&["topology", "--kind", "ring", "--n", "3"]).0, 1);
        assert_eq!(call(&["topology", "--kind", "PF"]).0, 1);
        assert_eq!(call(&["topology", "--kind", "custom"]).0, 1);
        assert_eq!(call(&["topology", "--kind", "PF", "--n", "0"]).0, 1);
        assert_eq!(call(&["frobnicate"]).0, 1);
        let (code, out, err) = call(&["synth", "--config", "/nonexistent/x.cfg"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn help_is_not_an_error() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("synth"));
    }
}
