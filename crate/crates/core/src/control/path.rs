//! Piecewise-linear paths and the path-following reward.
//!
//! A point's arc coordinate is measured along the segment closest to it:
//! `offset(seg) + clamp(parallel projection, 0, len(seg))`. The per-step reward
//! is `−α·perp(s') + β·(arc(s') − arc(s))`, so summing it over a predicted
//! rollout telescopes to `β·(arc(ŝ_H) − arc(s_t)) − α·Σ perp`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::reward::Reward;
use crate::dynamics::rollout_open_loop;
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub length: f64,
    /// Unit direction from `start` to `end`.
    pub tangent: [f64; 2],
    /// Arc length of the path before `start`.
    pub arc_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Distance along the segment, clamped to `[0, length]`.
    pub parallel: f64,
    /// Distance from the point to the segment.
    pub perpendicular: f64,
}

/// Projection of `p` onto `seg`, clamped to its extent.
pub fn project_point(seg: &Segment, p: [f64; 2]) -> Projection {
    let rx = p[0] - seg.start[0];
    let ry = p[1] - seg.start[1];
    let along = (rx * seg.tangent[0] + ry * seg.tangent[1]).clamp(0.0, seg.length);
    let cx = seg.start[0] + along * seg.tangent[0];
    let cy = seg.start[1] + along * seg.tangent[1];
    Projection {
        parallel: along,
        perpendicular: (p[0] - cx).hypot(p[1] - cy),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub waypoints: Vec<[f64; 2]>,
    /// Weight on perpendicular distance.
    pub alpha: f64,
    /// Weight on forward progress.
    pub beta: f64,
    #[serde(skip)]
    segments: Vec<Segment>,
}

impl PathSpec {
    pub fn new(waypoints: Vec<[f64; 2]>, alpha: f64, beta: f64) -> Result<Self> {
        let segments = path_to_segments(&waypoints)?;
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidArgument("path weights must be finite".into()));
        }
        Ok(Self {
            waypoints,
            alpha,
            beta,
            segments,
        })
    }

    /// Rebuilds segments after deserialization.
    pub fn rebuilt(self) -> Result<Self> {
        Self::new(self.waypoints, self.alpha, self.beta)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.arc_offset + s.length)
    }

    pub fn closest_segment(&self, p: [f64; 2]) -> usize {
        closest_segment(&self.segments, p)
    }

    /// `(segment, arc coordinate, perpendicular distance)` of `p`.
    pub fn locate(&self, p: [f64; 2]) -> (usize, f64, f64) {
        let i = self.closest_segment(p);
        let seg = &self.segments[i];
        let proj = project_point(seg, p);
        (i, seg.arc_offset + proj.parallel, proj.perpendicular)
    }

    pub fn arc_coordinate(&self, p: [f64; 2]) -> f64 {
        self.locate(p).1
    }

    pub fn distance(&self, p: [f64; 2]) -> f64 {
        self.locate(p).2
    }

    pub fn end_point(&self) -> [f64; 2] {
        *self.waypoints.last().expect("validated non-empty")
    }
}

/// Consecutive waypoints become segments; at least two distinct points are needed.
pub fn path_to_segments(waypoints: &[[f64; 2]]) -> Result<Vec<Segment>> {
    if waypoints.len() < 2 {
        return Err(Error::InvalidArgument("a path needs at least two waypoints".into()));
    }
    if waypoints.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("waypoints must be finite".into()));
    }
    let mut offset = 0.0;
    let mut out = Vec::with_capacity(waypoints.len() - 1);
    for (i, w) in waypoints.windows(2).enumerate() {
        let dx = w[1][0] - w[0][0];
        let dy = w[1][1] - w[0][1];
        let length = dx.hypot(dy);
        if length <= 0.0 {
            return Err(Error::InvalidArgument(format!("waypoints {i} and {} coincide", i + 1)));
        }
        out.push(Segment {
            start: w[0],
            end: w[1],
            length,
            tangent: [dx / length, dy / length],
            arc_offset: offset,
        });
        offset += length;
    }
    Ok(out)
}

/// Segment nearest to `p`; the lower index wins ties.
pub fn closest_segment(segments: &[Segment], p: [f64; 2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, seg) in segments.iter().enumerate() {
        let d = project_point(seg, p).perpendicular;
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Per-transition path-following reward.
#[derive(Debug, Clone, PartialEq)]
pub struct PathReward {
    pub path: PathSpec,
    pub x_index: usize,
    pub y_index: usize,
}

impl PathReward {
    fn xy(&self, s: &[f64]) -> [f64; 2] {
        [s[self.x_index], s[self.y_index]]
    }
}

impl Reward for PathReward {
    fn reward(&self, state: &[f64], _: &[f64], next_state: &[f64]) -> f64 {
        let prev = self.path.arc_coordinate(self.xy(state));
        let (_, arc, perp) = self.path.locate(self.xy(next_state));
        -self.path.alpha * perp + self.path.beta * (arc - prev)
    }
}

/// Path reward of an action sequence, predicted by `model` from the true state `s_t`.
pub fn trajectory_reward<D: Dynamics + ?Sized>(
    model: &D,
    s_t: &[f64],
    actions: &[Vec<f64>],
    reward: &PathReward,
) -> Result<f64> {
    let predicted = rollout_open_loop(model, s_t, actions)?;
    let mut prev = s_t;
    let mut total = 0.0;
    for (s, a) in predicted.iter().zip(actions) {
        total += reward.reward(prev, a, s);
        prev = s;
    }
    Ok(total)
}

/// Reads waypoints from a CSV with an `x,y` header.
pub fn read_waypoints_csv(path: &Path) -> Result<Vec<[f64; 2]>> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            hint: "expected a CSV with an `x,y` header".into(),
        });
    }
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(Error::InvalidArgument(format!("{}: header must be `x,y`", path.display())));
    }
    let mut out = Vec::new();
    for (line, rec) in r.deserialize::<(f64, f64)>().enumerate() {
        let (x, y) = rec.map_err(|e| Error::InvalidArgument(format!("{} row {}: {e}", path.display(), line + 2)))?;
        out.push([x, y]);
    }
    Ok(out)
}

pub fn write_waypoints_csv(path: &Path, waypoints: &[[f64; 2]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y"])?;
    for p in waypoints {
        w.write_record([p[0].to_string(), p[1].to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Named path shapes usable from configuration.
pub fn named_path(name: &str, scale: f64) -> Result<Vec<[f64; 2]>> {
    let pts: Vec<[f64; 2]> = match name {
        "straight" => vec![[0.0, 0.0], [1.0, 0.0]],
        "left_turn" => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
        "right_turn" => vec![[0.0, 0.0], [1.0, 0.0], [1.0, -1.0]],
        "u_turn" => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.0, 0.5]],
        "square" => vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.0, 0.0]],
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown path `{other}` (straight, left_turn, right_turn, u_turn, square)"
            )))
        }
    };
    Ok(pts.into_iter().map(|[x, y]| [x * scale, y * scale]).collect())
}
