//! Flat trajectory CSV: `step,kind,id,x,y,vx,vy,assignment`.
//!
//! Each step lists its agents (ids ascending) and then its targets. Floats
//! are written with 17 significant digits in scientific notation, which
//! round-trips every `f64` exactly and does not depend on the platform.

use std::io::{Read, Write};

use thiserror::Error;

use crate::geometry::Vec2;
use crate::simulator::{AgentState, Frame, TargetSnapshot, Trajectory};

pub const HEADER: &str = "step,kind,id,x,y,vx,vy,assignment";

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header `{0}`, expected `{HEADER}`")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

/// Fixed 17-significant-digit rendering.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory<W: Write>(mut w: W, trajectory: &Trajectory) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for frame in &trajectory.frames {
        for a in &frame.agents {
            writeln!(
                w,
                "{},agent,{},{},{},{},{},{}",
                frame.step,
                a.id,
                format_f64(a.pos.x),
                format_f64(a.pos.y),
                format_f64(a.vel.x),
                format_f64(a.vel.y),
                a.assigned_target
            )?;
        }
        for t in &frame.targets {
            writeln!(
                w,
                "{},target,{},{},{},{},{},",
                frame.step,
                t.id,
                format_f64(t.pos.x),
                format_f64(t.pos.y),
                format_f64(t.vel.x),
                format_f64(t.vel.y)
            )?;
        }
    }
    Ok(())
}

pub fn trajectory_to_string(trajectory: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory(&mut buf, trajectory).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn row_err(line: u64, message: impl Into<String>) -> TrajectoryError {
    TrajectoryError::Row {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, name: &str, line: u64) -> Result<T, TrajectoryError> {
    field
        .trim()
        .parse()
        .map_err(|_| row_err(line, format!("cannot parse {name} `{field}`")))
}

fn parse_finite(field: &str, name: &str, line: u64) -> Result<f64, TrajectoryError> {
    let v: f64 = parse_num(field, name, line)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(row_err(line, format!("{name} must be finite, got `{field}`")))
    }
}

/// Reads a trajectory, checking that steps are contiguous from 0, ids are
/// dense and ordered, and agent and target counts stay constant.
pub fn read_trajectory<R: Read>(reader: R) -> Result<Trajectory, TrajectoryError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != HEADER {
        return Err(TrajectoryError::Header(header));
    }

    let mut frames: Vec<Frame> = Vec::new();
    let mut agent_count: Option<usize> = None;
    let mut target_count: Option<usize> = None;
    let mut record = csv::StringRecord::new();

    let close_frame = |frame: &Frame,
                       agent_count: &mut Option<usize>,
                       target_count: &mut Option<usize>,
                       line: u64|
     -> Result<(), TrajectoryError> {
        let (na, nt) = (frame.agents.len(), frame.targets.len());
        if *agent_count.get_or_insert(na) != na || *target_count.get_or_insert(nt) != nt {
            return Err(row_err(
                line,
                format!("step {} has {na} agents and {nt} targets, unlike earlier steps", frame.step),
            ));
        }
        if let Some(a) = frame.agents.iter().find(|a| a.assigned_target >= nt) {
            return Err(row_err(
                line,
                format!("agent {} at step {} is assigned to unknown target {}", a.id, frame.step, a.assigned_target),
            ));
        }
        Ok(())
    };

    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        let step: usize = parse_num(&record[0], "step", line)?;
        let kind = &record[1];
        let id: usize = parse_num(&record[2], "id", line)?;
        let pos = Vec2::new(parse_finite(&record[3], "x", line)?, parse_finite(&record[4], "y", line)?);
        let vel = Vec2::new(parse_finite(&record[5], "vx", line)?, parse_finite(&record[6], "vy", line)?);

        let expected_step = frames.last().map_or(0, |f| f.step);
        if frames.is_empty() || step != expected_step {
            let next = if frames.is_empty() { 0 } else { expected_step + 1 };
            if step != next {
                return Err(row_err(line, format!("expected step {next}, found {step}")));
            }
            if let Some(prev) = frames.last() {
                close_frame(prev, &mut agent_count, &mut target_count, line)?;
            }
            frames.push(Frame {
                step,
                agents: Vec::new(),
                targets: Vec::new(),
            });
        }
        let frame = frames.last_mut().expect("frame just ensured");

        match kind {
            "agent" => {
                if !frame.targets.is_empty() {
                    return Err(row_err(line, "agent rows must precede target rows within a step"));
                }
                if id != frame.agents.len() {
                    return Err(row_err(line, format!("expected agent id {}, found {id}", frame.agents.len())));
                }
                let assigned_target = parse_num(&record[7], "assignment", line)?;
                frame.agents.push(AgentState {
                    id,
                    pos,
                    vel,
                    assigned_target,
                });
            }
            "target" => {
                if id != frame.targets.len() {
                    return Err(row_err(line, format!("expected target id {}, found {id}", frame.targets.len())));
                }
                if !record[7].trim().is_empty() {
                    return Err(row_err(line, "target rows must leave assignment empty"));
                }
                frame.targets.push(TargetSnapshot { id, pos, vel });
            }
            other => return Err(row_err(line, format!("unknown kind `{other}`"))),
        }
    }
    if let Some(last) = frames.last() {
        let line = rdr.position().line();
        close_frame(last, &mut agent_count, &mut target_count, line)?;
    }
    Ok(Trajectory { frames })
}

pub fn parse_trajectory_str(text: &str) -> Result<Trajectory, TrajectoryError> {
    read_trajectory(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let frame = |step: usize, shift: f64| Frame {
            step,
            agents: vec![
                AgentState {
                    id: 0,
                    pos: Vec2::new(0.1 + shift, 1.0 / 3.0),
                    vel: Vec2::new(-0.0, 1e-300),
                    assigned_target: 1,
                },
                AgentState {
                    id: 1,
                    pos: Vec2::new(249.999999, std::f64::consts::PI),
                    vel: Vec2::new(4.0, -2.5),
                    assigned_target: 0,
                },
            ],
            targets: vec![
                TargetSnapshot {
                    id: 0,
                    pos: Vec2::new(10.0, 20.0),
                    vel: Vec2::ZERO,
                },
                TargetSnapshot {
                    id: 1,
                    pos: Vec2::new(1.8, 2.6),
                    vel: Vec2::new(0.1, 0.2),
                },
            ],
        };
        Trajectory {
            frames: vec![frame(0, 0.0), frame(1, 0.7)],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = sample();
        let text = trajectory_to_string(&t);
        assert!(text.starts_with(HEADER));
        let back = parse_trajectory_str(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(trajectory_to_string(&back), text);
        assert!(text.contains("0,target,0,1.0000000000000000e1,2.0000000000000000e1,"));
    }

    #[test]
    fn header_only_is_empty() {
        let t = parse_trajectory_str(&format!("{HEADER}\n")).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn rejects_structural_problems() {
        let good = trajectory_to_string(&sample());
        assert!(matches!(
            parse_trajectory_str(&good.replacen("step,kind", "stp,kind", 1)),
            Err(TrajectoryError::Header(_))
        ));
        // skipped step
        let bad = good.replace("\n1,", "\n2,");
        assert!(matches!(parse_trajectory_str(&bad), Err(TrajectoryError::Row { .. })));
        // unknown kind
        let bad = good.replacen("agent", "robot", 1);
        assert!(parse_trajectory_str(&bad).is_err());
        // non-finite
        let bad = good.replacen("1.0000000000000000e1", "NaN", 1);
        assert!(parse_trajectory_str(&bad).is_err());
        // dangling assignment
        let bad = good.replacen(",1\n", ",7\n", 1);
        assert!(parse_trajectory_str(&bad).is_err());
        // missing column
        assert!(parse_trajectory_str(&format!("{HEADER}\n0,agent,0,1,2,3,4\n")).is_err());
    }

    #[test]
    fn truncated_final_step_is_detected() {
        let good = trajectory_to_string(&sample());
        let lines: Vec<&str> = good.lines().collect();
        let cut = lines[..lines.len() - 1].join("\n") + "\n";
        assert!(parse_trajectory_str(&cut).is_err());
        // dropping whole steps is structurally fine
        let cut = lines[..5].join("\n") + "\n";
        assert_eq!(parse_trajectory_str(&cut).unwrap().len(), 1);
    }
}
