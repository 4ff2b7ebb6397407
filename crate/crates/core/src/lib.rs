//! Exact S̃ invariants of Pauli stabilizer models.
//!
//! The pipeline: build a commuting Weyl-projector model, extract the logical
//! algebra on an annulus, twist-pair fundamental projectors across a cut to
//! get S̃, then read off fusion rules and the anyon group.

pub mod circuit;
pub mod commutant;
pub mod cyclo;
pub mod error;
pub mod lattice;
pub mod model;
pub mod oracle;
pub mod ringlinalg;
pub mod twist;
pub mod weyl;
pub mod witness;

pub use circuit::{Circuit, CliffordGate, InvarianceReport};
pub use commutant::{LogicalAlgebra, StabilityReport};
pub use cyclo::Cyclo;
pub use error::{Error, Result};
pub use lattice::{AnnulusPair, AnnulusSpec, Layout, Region, TorusLattice};
pub use model::{StabilizerModel, StabilizerState};
pub use ringlinalg::AbelianGroupStructure;
pub use twist::{FusionTensor, STilde};
pub use weyl::{Phase, SiteSystem, WeylOp, WeylSpan, WeylSum};
pub use witness::{InvisibilityCertificate, WitnessReport};
