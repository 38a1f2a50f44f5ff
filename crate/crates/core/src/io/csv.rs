//! Plain comma-separated files: leader profiles, attack vectors and traces.
//!
//! Writers never quote and readers reject anything a writer could not have
//! produced. Every write goes to a temporary file in the target directory
//! and is renamed into place, so a failed run leaves no partial output.

use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::dynamics::VehicleState;
use crate::error::{Error, Result};
use crate::simulator::{AttackVector, LeaderProfile, SimulationTrace, TraceRecord};

pub const LEADER_HEADER: &str = "k,velocity";
pub const ATTACK_HEADER: &str = "k,delta";
pub const TRACE_HEADER: &str = "k,vehicle,position,velocity,acceleration,control,gap";

/// 17 significant digits: enough for any `f64` to read back bit-exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Data rows of a CSV file as `(line number, fields)`, header checked.
fn rows<'a>(path: &Path, text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == header => {}
        Some((_, h)) => {
            return Err(Error::ingest(
                path,
                1,
                format!("expected header `{header}`, found `{h}`"),
            ))
        }
        None => return Err(Error::ingest(path, 1, "file is empty")),
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if line.contains('"') {
            return Err(Error::ingest(
                path,
                lineno,
                "quoted fields are not supported",
            ));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::ingest(
                path,
                lineno,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        out.push((lineno, fields));
    }
    Ok(out)
}

fn parse_index(path: &Path, line: usize, field: &str, what: &str) -> Result<usize> {
    field.trim().parse().map_err(|_| {
        Error::ingest(
            path,
            line,
            format!("{what} `{field}` is not a non-negative integer"),
        )
    })
}

fn parse_value(path: &Path, line: usize, field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Error::ingest(
                path,
                line,
                format!("{what} `{field}` is not a finite number"),
            )
        })
}

/// Rows must be numbered `0, 1, 2, ...` without gaps.
fn check_contiguous(path: &Path, line: usize, expected: usize, k: usize) -> Result<()> {
    if k == expected {
        Ok(())
    } else {
        Err(Error::ingest(
            path,
            line,
            format!("expected k = {expected}, found {k} (rows must be contiguous from 0)"),
        ))
    }
}

/// Reads a `k,velocity` leader profile.
pub fn read_leader_profile(path: &Path) -> Result<LeaderProfile> {
    let text = std::fs::read_to_string(path)?;
    let mut velocities = Vec::new();
    for (line, fields) in rows(path, &text, LEADER_HEADER)? {
        let k = parse_index(path, line, fields[0], "k")?;
        check_contiguous(path, line, velocities.len(), k)?;
        velocities.push(parse_value(path, line, fields[1], "velocity")?);
    }
    if velocities.is_empty() {
        return Err(Error::ingest(path, 2, "leader profile has no samples"));
    }
    LeaderProfile::new(velocities)
}

pub fn write_leader_profile(path: &Path, profile: &LeaderProfile) -> Result<()> {
    let mut out = format!("{LEADER_HEADER}\n");
    for (k, v) in profile.velocities().iter().enumerate() {
        out.push_str(&format!("{k},{}\n", format_float(*v)));
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_attack_csv(path: &Path, vector: &AttackVector) -> Result<()> {
    let mut out = format!("{ATTACK_HEADER}\n");
    for (k, d) in vector.deltas.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", format_float(*d)));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a `k,delta` attack vector; `expected_len` is the attack duration.
pub fn read_attack_csv(path: &Path, expected_len: Option<usize>) -> Result<AttackVector> {
    let text = std::fs::read_to_string(path)?;
    let mut deltas = Vec::new();
    let mut last_line = 1;
    for (line, fields) in rows(path, &text, ATTACK_HEADER)? {
        let k = parse_index(path, line, fields[0], "k")?;
        check_contiguous(path, line, deltas.len(), k)?;
        deltas.push(parse_value(path, line, fields[1], "delta")?);
        last_line = line;
    }
    if let Some(n) = expected_len {
        if deltas.len() != n {
            return Err(Error::ingest(
                path,
                last_line,
                format!("attack vector has {} rows, duration is {n}", deltas.len()),
            ));
        }
    }
    Ok(AttackVector::new(deltas))
}

pub fn write_trace_csv(path: &Path, trace: &SimulationTrace) -> Result<()> {
    let mut out = String::with_capacity(trace.steps() * trace.vehicles() * 120);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for rec in trace.records.iter().flatten() {
        let gap = rec.gap.map(format_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            rec.k,
            rec.vehicle,
            format_float(rec.state.s),
            format_float(rec.state.v),
            format_float(rec.state.a),
            format_float(rec.control),
            gap
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a trace back. Rows must come in `(k, vehicle)` order with every
/// step listing the same vehicles; gaps are taken from the file.
pub fn read_trace_csv(path: &Path) -> Result<SimulationTrace> {
    let text = std::fs::read_to_string(path)?;
    let mut records: Vec<Vec<TraceRecord>> = Vec::new();
    let mut vehicles: Option<usize> = None;
    for (line, f) in rows(path, &text, TRACE_HEADER)? {
        let k = parse_index(path, line, f[0], "k")?;
        let vehicle = parse_index(path, line, f[1], "vehicle")?;
        if vehicle == 0 {
            if let (Some(width), Some(last)) = (vehicles, records.last()) {
                if last.len() != width {
                    return Err(Error::ingest(
                        path,
                        line,
                        "previous step is missing vehicles",
                    ));
                }
            }
            check_contiguous(path, line, records.len(), k)?;
            records.push(Vec::new());
        }
        let steps = records.len();
        let row = records
            .last_mut()
            .ok_or_else(|| Error::ingest(path, line, "first row must be vehicle 0"))?;
        let too_wide = k > 0 && vehicles.is_some_and(|w| vehicle >= w);
        if k + 1 != steps || vehicle != row.len() || too_wide {
            return Err(Error::ingest(
                path,
                line,
                format!("unexpected row (k = {k}, vehicle = {vehicle})"),
            ));
        }
        let state = VehicleState::new(
            parse_value(path, line, f[2], "position")?,
            parse_value(path, line, f[3], "velocity")?,
            parse_value(path, line, f[4], "acceleration")?,
        );
        let control = parse_value(path, line, f[5], "control")?;
        let gap = match (vehicle, f[6].trim()) {
            (0, "") => None,
            (0, _) => return Err(Error::ingest(path, line, "the leader has no gap")),
            (_, g) => Some(parse_value(path, line, g, "gap")?),
        };
        row.push(TraceRecord {
            k,
            vehicle,
            state,
            control,
            gap,
        });
        if k == 0 {
            vehicles = Some(row.len());
        }
    }
    match (vehicles, records.last()) {
        (Some(width), Some(last)) if width >= 2 && last.len() == width => {}
        _ => {
            return Err(Error::ingest(
                path,
                text.lines().count(),
                "trace needs at least one complete step with a follower",
            ))
        }
    }
    Ok(SimulationTrace {
        records,
        events: Vec::new(),
        attack_window: None,
    })
}
