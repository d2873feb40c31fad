//! Glauber dynamics for the two-dimensional Ising model in an `l × l` box
//! with an arbitrary boundary field: exact Gibbs measures, exact and
//! iterative spectral gaps, contour energetics, continuous-time simulation
//! and a sweep harness.

pub mod boundary;
pub mod contour;
pub mod error;
pub mod gibbs;
pub mod hamiltonian;
pub mod harness;
pub mod lattice;
pub mod simulate;
pub mod spectral;

pub use boundary::{BoundaryCondition, BoundaryDescriptor, BoundaryKind, MixingReport};
pub use contour::{Contour, Crossing, NonCrossingDecomposition, TrapEvent};
pub use error::{Error, Result};
pub use gibbs::GibbsTable;
pub use harness::{run_plan, transition_study, verify_lemmas, ExperimentPlan, Record, ResultTable};
pub use hamiltonian::{Configuration, InverseTemperature, Model, RateFamily, RateKind, Sign};
pub use simulate::{estimate_relaxation, simulate, Observable, RelaxationEstimate, Trajectory};
pub use spectral::{exact_gap, GapResult, GeneratorOperator};
pub use lattice::{Bond, BoundaryInterval, DualBond, LatticeBox, Side, Site};
