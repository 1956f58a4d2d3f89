//! Frame/trajectory data model shared by the simulation and analysis halves.

mod binary;
mod text;

pub use binary::{
    append_feature_block, read_blocks, read_trajectory, write_trajectory, DataBlock,
    TrajectoryWriter, BLOCK_TAG_FEATURES, BLOCK_TAG_SOFTNESS,
};
pub use text::{ingest_text_dump, write_text_dump, ColumnMap};

use crate::geometry;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Particle species of the binary mixture. The on-disk encoding reserves a
/// full `u8` so more species can be added without a format bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Species {
    A = 0,
    B = 1,
}

impl Species {
    pub fn from_u8(v: u8) -> Option<Species> {
        match v {
            0 => Some(Species::A),
            1 => Some(Species::B),
            _ => None,
        }
    }

    pub const ALL: [Species; 2] = [Species::A, Species::B];
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Species::A => write!(f, "A"),
            Species::B => write!(f, "B"),
        }
    }
}

/// Whether a frame holds energy-minimized or thermal positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum FrameKind {
    Inherent = 0,
    Instantaneous = 1,
}

impl FrameKind {
    pub fn from_u8(v: u8) -> Option<FrameKind> {
        match v {
            0 => Some(FrameKind::Inherent),
            1 => Some(FrameKind::Instantaneous),
            _ => None,
        }
    }
}

/// One snapshot of particle positions in a periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Time in units of tau.
    pub time: f64,
    /// Box edge lengths, one per dimension.
    pub box_edges: Vec<f64>,
    /// Flat row-major `n x d` positions, wrapped into the box.
    pub positions: Vec<f64>,
    /// Species of each particle.
    pub species: Vec<Species>,
    pub kind: FrameKind,
}

impl Frame {
    pub fn n_particles(&self) -> usize {
        self.species.len()
    }

    pub fn dim(&self) -> usize {
        self.box_edges.len()
    }

    /// Position slice of particle `i`.
    #[inline]
    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    /// Wraps all coordinates into the periodic box.
    pub fn wrap_positions(&mut self) {
        let d = self.dim();
        for (k, x) in self.positions.iter_mut().enumerate() {
            *x = geometry::wrap(*x, self.box_edges[k % d]);
        }
    }
}

/// Run metadata echoed into trajectory files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrajectoryMeta {
    pub temperature: f64,
    pub density: f64,
    pub n_particles: usize,
    pub seed: u64,
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Time-ordered list of frames at uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    /// Frame spacing in tau units.
    pub spacing: f64,
    pub meta: TrajectoryMeta,
}

pub const SPACING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("box mismatch between frames: {0:?} vs {1:?}")]
    BoxMismatch(Vec<f64>, Vec<f64>),
    #[error("frame {index}: expected {expected} particles, found {found}")]
    ParticleCountMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame times not strictly increasing at index {0}")]
    NonMonotonicTimes(usize),
    #[error("frame spacing not uniform at index {index}: {found} vs {expected}")]
    NonUniformSpacing {
        index: usize,
        expected: f64,
        found: f64,
    },
    #[error("particle index {0} out of range ({1} particles)")]
    ParticleOutOfRange(usize, usize),
    #[error("unsupported format version {0}")]
    VersionMismatch(u16),
    #[error("file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("checksum mismatch in frame {0}")]
    ChecksumMismatch(usize),
    #[error("not a trajectory file (bad magic)")]
    BadMagic,
    #[error("corrupt field {0}")]
    Corrupt(&'static str),
    #[error("text dump: {0}")]
    TextDump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Trajectory {
    /// Builds a trajectory and validates the frame invariants.
    pub fn new(frames: Vec<Frame>, meta: TrajectoryMeta) -> Result<Trajectory, TrajectoryError> {
        let spacing = if frames.len() >= 2 {
            frames[1].time - frames[0].time
        } else {
            0.0
        };
        let traj = Trajectory {
            frames,
            spacing,
            meta,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.frames.is_empty() {
            return Ok(());
        }
        let first = &self.frames[0];
        for (idx, f) in self.frames.iter().enumerate() {
            if f.box_edges != first.box_edges {
                return Err(TrajectoryError::BoxMismatch(
                    first.box_edges.clone(),
                    f.box_edges.clone(),
                ));
            }
            if f.n_particles() != first.n_particles() {
                return Err(TrajectoryError::ParticleCountMismatch {
                    index: idx,
                    expected: first.n_particles(),
                    found: f.n_particles(),
                });
            }
            if idx > 0 {
                let dt = f.time - self.frames[idx - 1].time;
                if dt <= 0.0 {
                    return Err(TrajectoryError::NonMonotonicTimes(idx));
                }
                if (dt - self.spacing).abs() > SPACING_TOLERANCE {
                    return Err(TrajectoryError::NonUniformSpacing {
                        index: idx,
                        expected: self.spacing,
                        found: dt,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_particles(&self) -> usize {
        self.frames.first().map_or(0, Frame::n_particles)
    }

    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, Frame::dim)
    }

    pub fn start_time(&self) -> f64 {
        self.frames.first().map_or(0.0, |f| f.time)
    }

    pub fn end_time(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.time)
    }

    /// Index of the frame closest to time `t`.
    pub fn frame_index_at(&self, t: f64) -> usize {
        if self.frames.len() < 2 || self.spacing <= 0.0 {
            return 0;
        }
        let idx = ((t - self.start_time()) / self.spacing).round();
        (idx.max(0.0) as usize).min(self.frames.len() - 1)
    }

    /// Borrowing sub-trajectory over the frame range `[a, b)`.
    pub fn window(&self, a: usize, b: usize) -> Trajectory {
        Trajectory {
            frames: self.frames[a..b].to_vec(),
            spacing: self.spacing,
            meta: self.meta.clone(),
        }
    }
}

/// Minimum-image displacement of particle `i` between two frames,
/// `x_i(frame_b) - x_i(frame_a)`, each component in `(-L/2, L/2]`.
pub fn displacement(
    frame_a: &Frame,
    frame_b: &Frame,
    i: usize,
) -> Result<Vec<f64>, TrajectoryError> {
    if frame_a.box_edges != frame_b.box_edges {
        return Err(TrajectoryError::BoxMismatch(
            frame_a.box_edges.clone(),
            frame_b.box_edges.clone(),
        ));
    }
    if frame_a.n_particles() != frame_b.n_particles() {
        return Err(TrajectoryError::ParticleCountMismatch {
            index: 0,
            expected: frame_a.n_particles(),
            found: frame_b.n_particles(),
        });
    }
    if i >= frame_a.n_particles() {
        return Err(TrajectoryError::ParticleOutOfRange(
            i,
            frame_a.n_particles(),
        ));
    }
    let d = frame_a.dim();
    let mut out = vec![0.0; d];
    geometry::min_image_vec(
        frame_a.position(i),
        frame_b.position(i),
        &frame_a.box_edges,
        &mut out,
    );
    Ok(out)
}
