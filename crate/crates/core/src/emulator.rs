//! Virtual band: six vibration nodes on three bands around the forearm.
//!
//! Nodes sit on a 3 x 2 grid mirroring the braille cell (bands are rows,
//! the two sides of the forearm are columns). Motors are modelled as binary
//! on/off with 1 ms resolution.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::{ActuationCommand, CommandOp, WIRED_CHANNELS};

/// Two-point discrimination threshold on the forearm.
pub const FOREARM_TPDT_MM: f64 = 40.0;
pub const DEFAULT_ROW_SPACING_MM: f64 = 50.0;
pub const DEFAULT_COLUMN_SPACING_MM: f64 = 45.0;
pub const NODE_COUNT: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmulatorError {
    #[error("geometry needs exactly 6 nodes, got {0}")]
    WrongNodeCount(usize),
    #[error("dot/slot assignment is not a bijection: {0}")]
    NotBijective(String),
    #[error("{} node pair(s) closer than the two-point threshold", .0.len())]
    TpdtViolation(Vec<Violation>),
    #[error("malformed command stream at command {index}: {reason}")]
    MalformedCommandStream { index: usize, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePlacement {
    pub dot: u8,
    /// Band number, 1 nearest the wrist.
    pub row: u8,
    pub column: Column,
    pub along_mm: f64,
    pub around_mm: f64,
}

impl NodePlacement {
    pub fn distance_mm(&self, other: &NodePlacement) -> f64 {
        (self.along_mm - other.along_mm).hypot(self.around_mm - other.around_mm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub dots: (u8, u8),
    pub distance_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandGeometry {
    nodes: Vec<NodePlacement>,
}

impl Default for BandGeometry {
    fn default() -> Self {
        BandGeometry::grid(DEFAULT_ROW_SPACING_MM, DEFAULT_COLUMN_SPACING_MM)
    }
}

impl BandGeometry {
    /// Standard cell layout: dots 1-3 down the left column, 4-6 down the right.
    pub fn grid(row_spacing_mm: f64, column_spacing_mm: f64) -> Self {
        let nodes = (1..=6u8)
            .map(|dot| {
                let (column, row) = if dot <= 3 {
                    (Column::Left, dot)
                } else {
                    (Column::Right, dot - 3)
                };
                NodePlacement {
                    dot,
                    row,
                    column,
                    along_mm: f64::from(row - 1) * row_spacing_mm,
                    around_mm: if column == Column::Left {
                        0.0
                    } else {
                        column_spacing_mm
                    },
                }
            })
            .collect();
        BandGeometry { nodes }
    }

    /// Checks the node count and the dot/slot bijection, not spacing.
    pub fn from_nodes(nodes: Vec<NodePlacement>) -> Result<Self, EmulatorError> {
        if nodes.len() != NODE_COUNT {
            return Err(EmulatorError::WrongNodeCount(nodes.len()));
        }
        let mut dots_seen = [false; NODE_COUNT];
        let mut slots_seen = [false; NODE_COUNT];
        for n in &nodes {
            if !(1..=6).contains(&n.dot) {
                return Err(EmulatorError::NotBijective(format!(
                    "dot {} out of range",
                    n.dot
                )));
            }
            if !(1..=3).contains(&n.row) {
                return Err(EmulatorError::NotBijective(format!(
                    "row {} out of range",
                    n.row
                )));
            }
            let slot = (n.row as usize - 1) * 2 + usize::from(n.column == Column::Right);
            if std::mem::replace(&mut dots_seen[n.dot as usize - 1], true) {
                return Err(EmulatorError::NotBijective(format!(
                    "dot {} repeated",
                    n.dot
                )));
            }
            if std::mem::replace(&mut slots_seen[slot], true) {
                return Err(EmulatorError::NotBijective(format!(
                    "row {} {:?} used twice",
                    n.row, n.column
                )));
            }
        }
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.dot);
        Ok(BandGeometry { nodes })
    }

    /// Like [`from_nodes`](Self::from_nodes) but also rejects layouts with
    /// any pair closer than `tpdt_mm`.
    pub fn new(nodes: Vec<NodePlacement>, tpdt_mm: f64) -> Result<Self, EmulatorError> {
        let g = Self::from_nodes(nodes)?;
        let violations = validate_geometry(&g, tpdt_mm);
        if violations.is_empty() {
            Ok(g)
        } else {
            Err(EmulatorError::TpdtViolation(violations))
        }
    }

    pub fn nodes(&self) -> &[NodePlacement] {
        &self.nodes
    }

    pub fn node(&self, dot: u8) -> Option<&NodePlacement> {
        self.nodes.iter().find(|n| n.dot == dot)
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodePlacement {
                along_mm: n.along_mm * factor,
                around_mm: n.around_mm * factor,
                ..*n
            })
            .collect();
        BandGeometry { nodes }
    }
}

/// All node pairs strictly closer than `tpdt_mm`, ordered by dot numbers.
pub fn validate_geometry(geometry: &BandGeometry, tpdt_mm: f64) -> Vec<Violation> {
    let nodes = geometry.nodes();
    let mut out = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            let d = a.distance_mm(b);
            if d < tpdt_mm {
                let dots = (a.dot.min(b.dot), a.dot.max(b.dot));
                out.push(Violation {
                    dots,
                    distance_mm: d,
                });
            }
        }
    }
    out.sort_by_key(|v| v.dots);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub on_ms: u64,
    pub off_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInterval {
    pub node: u8,
    pub on_ms: u64,
    pub off_ms: u64,
}

/// Per-node on/off intervals. `horizon_ms` is how far the emulator clock has
/// been driven, which can extend past the last pulse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotorTimeline {
    nodes: [Vec<Interval>; NODE_COUNT],
    horizon_ms: u64,
}

impl MotorTimeline {
    pub fn intervals(&self, node: u8) -> &[Interval] {
        &self.nodes[node as usize - 1]
    }

    pub fn horizon_ms(&self) -> u64 {
        self.horizon_ms
    }

    pub fn extend_to(&mut self, t_ms: u64) {
        self.horizon_ms = self.horizon_ms.max(t_ms);
    }

    /// All intervals flattened and ordered by switch-on time.
    pub fn events(&self) -> Vec<NodeInterval> {
        let mut out: Vec<NodeInterval> = self
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(i, ivs)| {
                ivs.iter().map(move |iv| NodeInterval {
                    node: i as u8 + 1,
                    on_ms: iv.on_ms,
                    off_ms: iv.off_ms,
                })
            })
            .collect();
        out.sort_by_key(|e| (e.on_ms, e.node));
        out
    }

    /// The node vibrating at `t_ms`, if any.
    pub fn active_at(&self, t_ms: u64) -> Option<u8> {
        self.events()
            .into_iter()
            .find(|e| e.on_ms <= t_ms && t_ms < e.off_ms)
            .map(|e| e.node)
    }

    /// `node on_ms off_ms` per line, then `horizon <ms>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in self.events() {
            let _ = writeln!(out, "node {} {} {}", e.node, e.on_ms, e.off_ms);
        }
        let _ = writeln!(out, "horizon {}", self.horizon_ms);
        out
    }
}

/// Drive the motors from a command log. Each pulse needs a channel select
/// immediately before it at the same timestamp, on a wired channel, and may
/// not overlap any earlier pulse on any node.
pub fn apply_commands(cmds: &[ActuationCommand]) -> Result<MotorTimeline, EmulatorError> {
    let mut timeline = MotorTimeline::default();
    let mut selected: Option<(u8, u64)> = None;
    let mut last_off = 0u64;
    for (index, cmd) in cmds.iter().enumerate() {
        let malformed = |reason| EmulatorError::MalformedCommandStream { index, reason };
        match cmd.op {
            CommandOp::SelectChannel { channel } => {
                if selected.is_some() {
                    return Err(malformed("two selects without a pulse"));
                }
                selected = Some((channel, cmd.at_ms));
            }
            CommandOp::TriggerPulse { duration_ms } => {
                let (channel, at) = selected.take().ok_or(malformed("pulse without select"))?;
                if at != cmd.at_ms {
                    return Err(malformed("select and pulse at different times"));
                }
                if channel >= WIRED_CHANNELS {
                    return Err(malformed("pulse on an unwired channel"));
                }
                if cmd.at_ms < last_off {
                    return Err(malformed("pulse overlaps an earlier pulse"));
                }
                let off_ms = cmd.at_ms + duration_ms;
                timeline.nodes[channel as usize].push(Interval {
                    on_ms: cmd.at_ms,
                    off_ms,
                });
                last_off = off_ms;
                timeline.extend_to(off_ms);
            }
        }
    }
    if selected.is_some() {
        return Err(EmulatorError::MalformedCommandStream {
            index: cmds.len(),
            reason: "trailing select",
        });
    }
    Ok(timeline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineSummary {
    /// Index `k` is node `k + 1`.
    pub pulse_counts: [usize; NODE_COUNT],
    pub total_vibration_ms: u64,
    pub makespan_ms: u64,
}

pub fn timeline_summary(timeline: &MotorTimeline) -> TimelineSummary {
    let mut pulse_counts = [0; NODE_COUNT];
    let mut total_vibration_ms = 0;
    for (i, ivs) in timeline.nodes.iter().enumerate() {
        pulse_counts[i] = ivs.len();
        total_vibration_ms += ivs.iter().map(|iv| iv.off_ms - iv.on_ms).sum::<u64>();
    }
    TimelineSummary {
        pulse_counts,
        total_vibration_ms,
        makespan_ms: timeline.horizon_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::link_roundtrip;
    use crate::timing::TimingConfig;

    fn sel(at_ms: u64, channel: u8) -> ActuationCommand {
        ActuationCommand {
            at_ms,
            op: CommandOp::SelectChannel { channel },
        }
    }

    fn pulse(at_ms: u64, duration_ms: u64) -> ActuationCommand {
        ActuationCommand {
            at_ms,
            op: CommandOp::TriggerPulse { duration_ms },
        }
    }

    #[test]
    fn default_geometry_passes() {
        let g = BandGeometry::default();
        assert!(validate_geometry(&g, FOREARM_TPDT_MM).is_empty());
        assert!(BandGeometry::new(g.nodes().to_vec(), FOREARM_TPDT_MM).is_ok());
    }

    #[test]
    fn compressed_pair_is_reported() {
        let mut nodes = BandGeometry::default().nodes().to_vec();
        // pull dot 4 to 30 mm from dot 1 around the forearm
        nodes[3].around_mm = 30.0;
        let g = BandGeometry::from_nodes(nodes.clone()).unwrap();
        let v = validate_geometry(&g, FOREARM_TPDT_MM);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].dots, (1, 4));
        assert!((v[0].distance_mm - 30.0).abs() < 1e-12);
        assert!(matches!(
            BandGeometry::new(nodes, FOREARM_TPDT_MM),
            Err(EmulatorError::TpdtViolation(_))
        ));
    }

    #[test]
    fn zero_threshold_always_ok() {
        let g = BandGeometry::default().scaled(0.01);
        assert!(validate_geometry(&g, 0.0).is_empty());
    }

    #[test]
    fn bijection_checked() {
        let mut nodes = BandGeometry::default().nodes().to_vec();
        nodes[1].dot = 1;
        assert!(matches!(
            BandGeometry::from_nodes(nodes),
            Err(EmulatorError::NotBijective(_))
        ));
        let mut nodes = BandGeometry::default().nodes().to_vec();
        nodes[1].row = 1;
        assert!(BandGeometry::from_nodes(nodes).is_err());
        let nodes = BandGeometry::default().nodes()[..5].to_vec();
        assert_eq!(
            BandGeometry::from_nodes(nodes),
            Err(EmulatorError::WrongNodeCount(5))
        );
    }

    #[test]
    fn single_pulse() {
        let t = apply_commands(&[sel(0, 0), pulse(0, 300)]).unwrap();
        assert_eq!(
            t.intervals(1),
            &[Interval {
                on_ms: 0,
                off_ms: 300
            }]
        );
        for n in 2..=6 {
            assert!(t.intervals(n).is_empty());
        }
        let s = timeline_summary(&t);
        assert_eq!(s.pulse_counts, [1, 0, 0, 0, 0, 0]);
        assert_eq!(s.total_vibration_ms, 300);
    }

    #[test]
    fn empty_log() {
        let t = apply_commands(&[]).unwrap();
        assert!(t.events().is_empty());
        assert_eq!(timeline_summary(&t).makespan_ms, 0);
    }

    #[test]
    fn malformed_streams() {
        let err = apply_commands(&[pulse(0, 300)]).unwrap_err();
        assert_eq!(
            err,
            EmulatorError::MalformedCommandStream {
                index: 0,
                reason: "pulse without select"
            }
        );
        assert!(apply_commands(&[sel(0, 6), pulse(0, 300)]).is_err());
        assert!(apply_commands(&[sel(0, 0), pulse(10, 300)]).is_err());
        assert!(apply_commands(&[sel(0, 0), pulse(0, 300), sel(100, 1), pulse(100, 300)]).is_err());
        assert!(apply_commands(&[sel(0, 0)]).is_err());
    }

    #[test]
    fn repeated_letter_counts() {
        let cfg = TimingConfig::with_char_gap(1000);
        let run = link_roundtrip("aa", &cfg).unwrap();
        let t = apply_commands(&run.commands).unwrap();
        assert_eq!(timeline_summary(&t).pulse_counts[0], 2);
    }

    #[test]
    fn q_makespan_with_horizon() {
        let cfg = TimingConfig::with_char_gap(1000);
        let run = link_roundtrip("q", &cfg).unwrap();
        let mut t = apply_commands(&run.commands).unwrap();
        t.extend_to(run.emissions.end_ms);
        let s = timeline_summary(&t);
        assert_eq!(s.pulse_counts, [1, 1, 1, 1, 1, 0]);
        assert_eq!(s.makespan_ms, 4000);
        assert_eq!(t.active_at(650), Some(2));
        assert_eq!(t.active_at(300), None);
    }

    #[test]
    fn text_export() {
        let t = apply_commands(&[sel(0, 0), pulse(0, 300)]).unwrap();
        assert_eq!(t.to_text(), "node 1 0 300\nhorizon 300\n");
    }
}
