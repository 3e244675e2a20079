//! Density-matrix simulation of layered qubit circuits under Markovian noise,
//! with circuit-group error mitigation, probabilistic error cancellation, and
//! the supporting calibration and analysis routines.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algos;
pub mod analysis;
pub mod calib;
pub mod circuit;
pub mod densim;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod noise;
pub mod observable;
pub mod pec;
pub mod qem;
pub mod shotsim;

pub use circuit::{Circuit, Gate, GateKind, InsertMode, Insertion, Layer, OpTag, PostSelect, Style};
pub use densim::{evolve, EvolutionResult, Rotation};
pub use error::{QemError, Result};
pub use exec::Exec;
pub use linalg::{ComplexMatrix, DensityMatrix, SuperOp, C64};
pub use noise::{Coherence, Generator, NoiseKind, NoiseModel};
pub use observable::Observable;
pub use qem::{CircuitGroup, Engine, QemConfig, QemEstimate};
pub use shotsim::{SampleSeries, ShotConfig};
