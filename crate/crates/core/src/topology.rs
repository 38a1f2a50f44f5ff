//! Platoon information-flow graphs.
//!
//! Vehicle 0 is the leader, vehicles `1..=n` are followers. `M[i][j]` is set
//! when vehicle `i` receives the broadcast state of vehicle `j`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    /// Predecessor following.
    Pf,
    /// Predecessor + leader following.
    Plf,
    /// Two-predecessor following.
    Tpf,
    /// Two-predecessor + leader following.
    Tplf,
    /// User-supplied adjacency matrix.
    Custom,
}

impl TopologyKind {
    pub const NAMED: [TopologyKind; 4] = [
        TopologyKind::Pf,
        TopologyKind::Plf,
        TopologyKind::Tpf,
        TopologyKind::Tplf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Pf => "PF",
            TopologyKind::Plf => "PLF",
            TopologyKind::Tpf => "TPF",
            TopologyKind::Tplf => "TPLF",
            TopologyKind::Custom => "custom",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PF" => Ok(TopologyKind::Pf),
            "PLF" => Ok(TopologyKind::Plf),
            "TPF" => Ok(TopologyKind::Tpf),
            "TPLF" => Ok(TopologyKind::Tplf),
            "CUSTOM" => Ok(TopologyKind::Custom),
            other => Err(Error::Argument(format!(
                "unknown topology kind `{other}` (expected PF, PLF, TPF, TPLF or custom)"
            ))),
        }
    }
}

/// Directed information-flow graph over `n + 1` vehicles.
///
/// Immutable once built; every constructor checks the structural invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatoonTopology {
    kind: TopologyKind,
    followers: usize,
    matrix: Vec<Vec<bool>>,
}

impl PlatoonTopology {
    /// Generates the adjacency matrix of one of the four named topologies.
    pub fn named(kind: TopologyKind, followers: usize) -> Result<Self> {
        if kind == TopologyKind::Custom {
            return Err(Error::Argument(
                "custom topologies need an explicit matrix".into(),
            ));
        }
        if followers == 0 {
            return Err(Error::Argument(
                "a platoon needs at least one follower".into(),
            ));
        }
        let size = followers + 1;
        let mut matrix = vec![vec![false; size]; size];
        for (i, row) in matrix.iter_mut().enumerate().skip(1) {
            row[i - 1] = true;
            if matches!(kind, TopologyKind::Tpf | TopologyKind::Tplf) && i >= 2 {
                row[i - 2] = true;
            }
            if matches!(kind, TopologyKind::Plf | TopologyKind::Tplf) {
                row[0] = true;
            }
        }
        let topology = PlatoonTopology {
            kind,
            followers,
            matrix,
        };
        topology.validate()?;
        Ok(topology)
    }

    /// Wraps a user-supplied adjacency matrix after validating it.
    pub fn custom(matrix: Vec<Vec<bool>>) -> Result<Self> {
        let size = matrix.len();
        if size < 2 {
            return Err(Error::TopologyValidation(
                "matrix must cover a leader and at least one follower".into(),
            ));
        }
        if let Some(r) = matrix.iter().position(|row| row.len() != size) {
            return Err(Error::TopologyValidation(format!(
                "matrix must be square: row {r} has {} entries, expected {size}",
                matrix[r].len()
            )));
        }
        let topology = PlatoonTopology {
            kind: TopologyKind::Custom,
            followers: size - 1,
            matrix,
        };
        topology.validate()?;
        Ok(topology)
    }

    /// Parses the row-major `0/1` form used in scenario files: values split by
    /// `,`, rows split by `;`.
    pub fn parse_matrix(text: &str) -> Result<Vec<Vec<bool>>> {
        text.split(';')
            .map(str::trim)
            .filter(|row| !row.is_empty())
            .map(|row| {
                row.split(',')
                    .map(|cell| match cell.trim() {
                        "0" => Ok(false),
                        "1" => Ok(true),
                        other => Err(Error::TopologyValidation(format!(
                            "matrix entries must be 0 or 1, found `{other}`"
                        ))),
                    })
                    .collect()
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        for (i, row) in m.iter().enumerate() {
            if row[i] {
                return Err(Error::TopologyValidation(format!(
                    "self edge at vehicle {i} (M[{i}][{i}] must be 0)"
                )));
            }
        }
        if let Some(j) = m[0].iter().position(|&e| e) {
            return Err(Error::TopologyValidation(format!(
                "the leader receives from no one (M[0][{j}] must be 0)"
            )));
        }
        for (i, row) in m.iter().enumerate().skip(1) {
            if !row[i - 1] {
                return Err(Error::TopologyValidation(format!(
                    "follower {i} must receive from its predecessor (M[{i}][{}] must be 1)",
                    i - 1
                )));
            }
        }
        if self.kind != TopologyKind::Custom {
            for (i, row) in m.iter().enumerate() {
                if let Some(j) = (i..row.len()).find(|&j| row[j]) {
                    return Err(Error::TopologyValidation(format!(
                        "information must flow front to back (M[{i}][{j}] set with {j} >= {i})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    /// Number of followers (leader excluded).
    pub fn followers(&self) -> usize {
        self.followers
    }

    pub fn vehicles(&self) -> usize {
        self.followers + 1
    }

    pub fn matrix(&self) -> &[Vec<bool>] {
        &self.matrix
    }

    pub fn receives(&self, i: usize, j: usize) -> bool {
        self.matrix
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(false)
    }

    /// Neighbor set of vehicle `i`, ascending.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        let row = self.matrix.get(i).ok_or_else(|| {
            Error::Argument(format!(
                "vehicle index {i} out of range 0..={}",
                self.followers
            ))
        })?;
        Ok(row
            .iter()
            .enumerate()
            .filter_map(|(j, &e)| e.then_some(j))
            .collect())
    }

    /// Followers whose control law consumes vehicle `j`'s broadcast.
    pub fn receivers_of(&self, j: usize) -> Vec<usize> {
        (1..self.vehicles())
            .filter(|&i| self.receives(i, j))
            .collect()
    }

    /// The matrix as `0/1` rows, one line per vehicle.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for row in &self.matrix {
            let line: Vec<&str> = row.iter().map(|&e| if e { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// The `;`/`,` encoding accepted by [`PlatoonTopology::parse_matrix`].
    pub fn to_matrix_string(&self) -> String {
        self.matrix
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&e| if e { "1" } else { "0" })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}
