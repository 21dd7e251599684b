//! Q-valued fields on uniform 1-D and 2-D grids and their analyses.

pub mod classify;
pub mod curve;
pub mod cutoff;
pub mod decompose;
pub mod domain;
pub mod energy;
pub mod field;
pub mod frame;
pub mod frequency;
pub mod generators;
pub mod hopf;
pub mod regularity;
pub mod residual;
pub mod singular;
pub mod theta;

pub use curve::{linspace, CurveSeries};
pub use domain::{GridDomain, Mask, Node, NodeKind};
pub use energy::{dirichlet_energy, EdgeEnergies, EnergyDensity};
pub use field::QField;
pub use generators::{branch_value, gen_branch_map, gen_remark_examples, RemarkExample};
pub use frame::{local_frame, LocalFrame};
pub use hopf::{hopf, make_conformal, Conformalized, HopfField};
pub use residual::{inner_residual, outer_residual, Bump, TestField, VectorTestField};
pub use frequency::{blow_up, freq_curve, sample_field};
pub use theta::{theta_admissible_radius, theta_curve};
pub use regularity::{modulus_check, reverse_holder_check, ModulusReport, ReverseHolderReport};
pub use singular::{box_dimension, card_map, singular_candidates, BoxDimension, CandidateRule, SingularCandidate};
pub use classify::{classify_1d, Classification1d};
pub use decompose::{decompose, Component, Decomposition, DecompositionSummary};
