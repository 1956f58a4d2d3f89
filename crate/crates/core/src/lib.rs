//! Simulation and analysis toolkit for binary Lennard-Jones glass formers.
//!
//! The crate covers the full pipeline from molecular dynamics to
//! structure-dynamics analysis:
//!
//! * [`md`] — NVT dynamics of the Kob-Andersen 80:20 mixture, inherent-structure
//!   quenches, sampling and aging protocols.
//! * [`trajectory`] — frame/trajectory data model, binary persistence and text
//!   dump ingestion.
//! * [`rearrangement`] — the `p_hop` indicator, `D²_min`, event extraction and
//!   labeled training populations.
//! * [`features`] — species-resolved radial symmetry functions embedding local
//!   structure into fixed-length vectors.
//! * [`classifier`] — a linear support-vector machine that defines the softness
//!   field.
//! * [`analysis`] — softness distributions, rearrangement probabilities,
//!   Arrhenius energy/entropy scales, overlap functions, the softness
//!   propagator, facilitated overlap model and aging relations.

pub mod analysis;
pub mod classifier;
pub mod features;
pub mod geometry;
pub mod md;
pub mod rearrangement;
pub mod trajectory;

pub use classifier::{SoftnessModel, TrainReport};
pub use features::FeatureGrid;
pub use md::{MinimizerConfig, PotentialParams, SimulationState, SystemSpec};
pub use rearrangement::{LabeledExample, PhopConfig, RearrangementEvent};
pub use trajectory::{Frame, FrameKind, Species, Trajectory};
