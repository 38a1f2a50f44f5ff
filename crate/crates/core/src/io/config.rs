//! Scenario files: flat INI-style sections of `key = value` pairs.
//!
//! ```text
//! [platoon]
//! topology = PF            # PF | PLF | TPF | TPLF | custom
//! n = 4
//! matrix = 0,0;1,0         # custom only: rows split by `;`
//!
//! [dynamics]
//! tau = 0.5
//! ts = 0.1
//! k = 1,2,1
//! d = 20
//! v_init = 20
//! discretization = zoh     # optional, zoh | euler
//! A = ...                  # optional, 9 row-major values (with B)
//! B = ...                  # optional, 3 values
//!
//! [attack]
//! gamma = 0,0,1
//! attacker = 2
//! onset = 10
//! duration = 50
//! theta = 50
//! type = safety            # safety | perf
//! d_min = 5
//! d_max = 60
//! eps_violation = 1e-6     # optional
//!
//! [leader]
//! profile = leader.csv     # optional, constant v_init when absent
//!
//! [run]
//! horizon = 260            # optional, onset + duration + 200
//! output_dir = out         # optional
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use super::csv::read_leader_profile;
use crate::dynamics::{AttackSurface, Discretization, VehicleDynamicsSpec};
use crate::error::{Error, Result};
use crate::simulator::{AttackSpec, LeaderProfile, ScenarioSpec};
use crate::topology::{PlatoonTopology, TopologyKind};

const SCHEMA: &[(&str, &[&str])] = &[
    ("platoon", &["topology", "n", "matrix"]),
    (
        "dynamics",
        &["tau", "ts", "k", "d", "v_init", "discretization", "A", "B"],
    ),
    (
        "attack",
        &[
            "gamma",
            "attacker",
            "onset",
            "duration",
            "theta",
            "type",
            "d_min",
            "d_max",
            "eps_violation",
        ],
    ),
    ("leader", &["profile"]),
    ("run", &["horizon", "output_dir"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonSection {
    pub topology: TopologyKind,
    pub followers: usize,
    /// Present for custom topologies, in `;`/`,` form.
    pub matrix: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSection {
    pub tau: f64,
    pub ts: f64,
    pub gain: [f64; 3],
    pub spacing: f64,
    pub v_init: f64,
    pub discretization: Discretization,
    pub a: Option<[f64; 9]>,
    pub b: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub horizon: usize,
    pub output_dir: PathBuf,
}

/// A fully validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub platoon: PlatoonSection,
    pub dynamics: DynamicsSection,
    pub attack: AttackSpec,
    pub leader_profile: Option<PathBuf>,
    pub run: RunSection,
    scenario: ScenarioSpec,
}

impl ScenarioConfig {
    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn attack_spec(&self) -> &AttackSpec {
        &self.attack
    }

    /// Canonical dump with every default spelled out and paths absolute.
    pub fn to_normalized_string(&self) -> String {
        let mut out = String::new();
        let p = &self.platoon;
        let _ = writeln!(out, "[platoon]");
        let _ = writeln!(out, "topology = {}", p.topology);
        let _ = writeln!(out, "n = {}", p.followers);
        if let Some(m) = &p.matrix {
            let _ = writeln!(out, "matrix = {m}");
        }

        let d = &self.dynamics;
        let _ = writeln!(out, "\n[dynamics]");
        let _ = writeln!(out, "tau = {:?}", d.tau);
        let _ = writeln!(out, "ts = {:?}", d.ts);
        let _ = writeln!(out, "k = {}", join(&d.gain));
        let _ = writeln!(out, "d = {:?}", d.spacing);
        let _ = writeln!(out, "v_init = {:?}", d.v_init);
        let _ = writeln!(out, "discretization = {}", d.discretization);
        if let (Some(a), Some(b)) = (&d.a, &d.b) {
            let _ = writeln!(out, "A = {}", join(a));
            let _ = writeln!(out, "B = {}", join(b));
        }

        let a = &self.attack;
        let _ = writeln!(out, "\n[attack]");
        let gamma: Vec<&str> = a
            .surface
            .gamma
            .iter()
            .map(|&g| if g { "1" } else { "0" })
            .collect();
        let _ = writeln!(out, "gamma = {}", gamma.join(","));
        let _ = writeln!(out, "attacker = {}", a.rogue);
        let _ = writeln!(out, "onset = {}", a.onset);
        let _ = writeln!(out, "duration = {}", a.duration);
        let _ = writeln!(out, "theta = {:?}", a.theta);
        let _ = writeln!(out, "type = {}", a.goal);
        let _ = writeln!(out, "d_min = {:?}", a.d_min);
        let _ = writeln!(out, "d_max = {:?}", a.d_max);
        let _ = writeln!(out, "eps_violation = {:?}", a.eps_violation);

        let _ = writeln!(out, "\n[leader]");
        if let Some(profile) = &self.leader_profile {
            let _ = writeln!(out, "profile = {}", profile.display());
        }

        let _ = writeln!(out, "\n[run]");
        let _ = writeln!(out, "horizon = {}", self.run.horizon);
        let _ = writeln!(out, "output_dir = {}", self.run.output_dir.display());
        out
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read file: {e}")))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn tokenize(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                return Err(Error::config(
                    format!("line {lineno}"),
                    format!("unknown section [{name}]"),
                ));
            }
            if sections.contains_key(name) {
                return Err(Error::config(name, "section appears twice"));
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let Some(section) = &current else {
            return Err(Error::config(
                format!("line {lineno}"),
                "key outside of any section",
            ));
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(
                format!("{section} (line {lineno})"),
                "expected `key = value`",
            ));
        };
        let key = key.trim();
        let location = format!("{section}.{key}");
        let known = SCHEMA
            .iter()
            .find(|(s, _)| s == section)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            return Err(Error::config(location, "unknown key"));
        }
        let entries = sections.get_mut(section).expect("section registered");
        if entries
            .insert(key.to_string(), (lineno, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::config(location, "key appears twice"));
        }
    }
    Ok(sections)
}

/// Drops a trailing ` # comment`; whole-line `#` and `;` comments too.
fn strip_comment(line: &str) -> &str {
    let trimmed = line.trim_start();
    if trimmed.starts_with('#') || trimmed.starts_with(';') {
        return "";
    }
    match line.find(" #") {
        Some(at) => &line[..at],
        None => line,
    }
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)?
            .get(key)
            .map(|(_, v)| v.as_str())
    }

    fn required(&self, section: &str, key: &str) -> Result<&str> {
        self.raw(section, key)
            .ok_or_else(|| Error::config(format!("{section}.{key}"), "missing key"))
    }

    fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.required(section, key)?;
        raw.parse()
            .map_err(|e| Error::config(format!("{section}.{key}"), format!("`{raw}`: {e}")))
    }

    fn parse_opt<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(section, key) {
            None => Ok(None),
            Some(_) => self.parse(section, key).map(Some),
        }
    }

    fn floats<const N: usize>(&self, section: &str, key: &str) -> Result<Option<[f64; N]>> {
        let Some(raw) = self.raw(section, key) else {
            return Ok(None);
        };
        let location = format!("{section}.{key}");
        let values: Vec<f64> = raw
            .split(',')
            .map(|v| {
                let v = v.trim();
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        Error::config(&location, format!("`{v}` is not a finite number"))
                    })
            })
            .collect::<Result<_>>()?;
        let n = values.len();
        values
            .try_into()
            .map(Some)
            .map_err(|_| Error::config(location, format!("expected {N} values, found {n}")))
    }
}

fn finite(location: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::config(location, "must be finite"))
    }
}

/// Parses scenario text; relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<ScenarioConfig> {
    let sections = tokenize(text)?;
    let r = Reader {
        sections: &sections,
    };

    // [platoon]
    let kind: TopologyKind = r.parse("platoon", "topology")?;
    let followers: usize = r.parse("platoon", "n")?;
    let matrix = r.raw("platoon", "matrix").map(str::to_string);
    let topology = match (kind, &matrix) {
        (TopologyKind::Custom, Some(m)) => {
            let rows = PlatoonTopology::parse_matrix(m)
                .map_err(|e| Error::config("platoon.matrix", e.to_string()))?;
            let t = PlatoonTopology::custom(rows)
                .map_err(|e| Error::config("platoon.matrix", e.to_string()))?;
            if t.followers() != followers {
                return Err(Error::config(
                    "platoon.matrix",
                    format!(
                        "matrix describes {} followers but n = {followers}",
                        t.followers()
                    ),
                ));
            }
            t
        }
        (TopologyKind::Custom, None) => {
            return Err(Error::config(
                "platoon.matrix",
                "missing key (required for custom topologies)",
            ))
        }
        (_, Some(_)) => {
            return Err(Error::config(
                "platoon.matrix",
                "only allowed with topology = custom",
            ))
        }
        (kind, None) => PlatoonTopology::named(kind, followers)
            .map_err(|e| Error::config("platoon.n", e.to_string()))?,
    };

    // [dynamics]
    let tau = finite("dynamics.tau", r.parse("dynamics", "tau")?)?;
    let ts = finite("dynamics.ts", r.parse("dynamics", "ts")?)?;
    let gain = r
        .floats::<3>("dynamics", "k")?
        .ok_or_else(|| Error::config("dynamics.k", "missing key"))?;
    let spacing = finite("dynamics.d", r.parse("dynamics", "d")?)?;
    let v_init = finite("dynamics.v_init", r.parse("dynamics", "v_init")?)?;
    let discretization = r
        .parse_opt("dynamics", "discretization")?
        .unwrap_or_default();
    let a = r.floats::<9>("dynamics", "A")?;
    let b = r.floats::<3>("dynamics", "B")?;
    let dyn_location = |key: &str, e: Error| match e {
        Error::Argument(msg) => Error::config(format!("dynamics.{key}"), msg),
        other => other,
    };
    for (key, value) in [("tau", tau), ("ts", ts), ("d", spacing)] {
        if value <= 0.0 {
            return Err(Error::config(
                format!("dynamics.{key}"),
                format!("must be positive, got {value}"),
            ));
        }
    }
    let dynamics_spec = match (a, b) {
        (Some(a), Some(b)) => VehicleDynamicsSpec::with_matrices(
            tau,
            ts,
            Matrix3::from_row_slice(&a),
            Vector3::from_row_slice(&b),
            gain,
            spacing,
            v_init,
        )
        .map_err(|e| dyn_location("A", e))?,
        (None, None) => VehicleDynamicsSpec::new(tau, ts, gain, spacing, v_init, discretization)
            .map_err(|e| dyn_location("tau", e))?,
        (Some(_), None) => return Err(Error::config("dynamics.B", "A given without B")),
        (None, Some(_)) => return Err(Error::config("dynamics.A", "B given without A")),
    };

    // [attack]
    let gamma_raw = r.required("attack", "gamma")?;
    let gamma: Vec<bool> = gamma_raw
        .split(',')
        .map(|g| match g.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::config(
                "attack.gamma",
                format!("entries must be 0 or 1, found `{other}`"),
            )),
        })
        .collect::<Result<_>>()?;
    let gamma: [bool; 3] = gamma
        .try_into()
        .map_err(|_| Error::config("attack.gamma", "expected 3 flags"))?;
    let surface = AttackSurface { gamma };
    if surface.is_empty() {
        return Err(Error::config(
            "attack.gamma",
            "attack surface is empty (no channel flagged)",
        ));
    }
    let attack = AttackSpec {
        surface,
        rogue: r.parse("attack", "attacker")?,
        onset: r.parse("attack", "onset")?,
        duration: r.parse("attack", "duration")?,
        theta: finite("attack.theta", r.parse("attack", "theta")?)?,
        goal: r.parse("attack", "type")?,
        d_min: finite("attack.d_min", r.parse("attack", "d_min")?)?,
        d_max: finite("attack.d_max", r.parse("attack", "d_max")?)?,
        eps_violation: r
            .parse_opt("attack", "eps_violation")?
            .unwrap_or(AttackSpec::DEFAULT_EPS_VIOLATION),
    };
    check_attack(&attack, followers)?;

    // [leader]
    let leader_profile = r.raw("leader", "profile").map(|p| absolute(&base.join(p)));
    let leader = match &leader_profile {
        Some(path) => {
            if !path.is_file() {
                return Err(Error::config(
                    "leader.profile",
                    format!("file {} does not exist", path.display()),
                ));
            }
            read_leader_profile(path)?
        }
        None => LeaderProfile::constant(v_init)?,
    };

    // [run]
    let horizon = r
        .parse_opt("run", "horizon")?
        .unwrap_or_else(|| attack.default_horizon());
    if horizon < attack.window_end() || horizon == 0 {
        return Err(Error::config(
            "run.horizon",
            format!(
                "horizon {horizon} must cover the attack window ending at {}",
                attack.window_end()
            ),
        ));
    }
    let output_dir = absolute(&base.join(r.raw("run", "output_dir").unwrap_or("out")));

    Ok(ScenarioConfig {
        platoon: PlatoonSection {
            topology: kind,
            followers,
            matrix: (kind == TopologyKind::Custom).then(|| topology.to_matrix_string()),
        },
        dynamics: DynamicsSection {
            tau,
            ts,
            gain,
            spacing,
            v_init,
            discretization,
            a,
            b,
        },
        attack,
        leader_profile,
        run: RunSection {
            horizon,
            output_dir,
        },
        scenario: ScenarioSpec::new(dynamics_spec, topology, leader),
    })
}

fn check_attack(attack: &AttackSpec, followers: usize) -> Result<()> {
    if attack.rogue < 1 || attack.rogue > followers {
        return Err(Error::config(
            "attack.attacker",
            format!("must be a follower in 1..={followers}"),
        ));
    }
    if attack.duration < 1 {
        return Err(Error::config("attack.duration", "must be at least 1"));
    }
    if attack.theta < 0.0 {
        return Err(Error::config("attack.theta", "must be non-negative"));
    }
    if attack.d_min >= attack.d_max {
        return Err(Error::config(
            "attack.d_min",
            format!(
                "d_min ({}) must be below d_max ({})",
                attack.d_min, attack.d_max
            ),
        ));
    }
    if !(attack.eps_violation.is_finite() && attack.eps_violation > 0.0) {
        return Err(Error::config("attack.eps_violation", "must be positive"));
    }
    attack
        .validate(followers)
        .map_err(|e| Error::config("attack", e.to_string()))
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}
