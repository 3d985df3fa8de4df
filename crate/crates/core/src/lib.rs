//! Edge-private release of directed networks and inference in the p0 model.
//!
//! The crate is organised around the life cycle of a private analysis:
//!
//! * [`graph`] holds the dense digraph type, bi-degree extraction, the
//!   Fulkerson–Chen–Anstee graphicality test, edge-list ingestion and
//!   degree-threshold pruning.
//! * [`model`] is the p0 exponential family: edge probabilities, sampling,
//!   the log-likelihood and the linear parameter design used in simulations.
//! * [`privacy`] implements the release mechanisms: independent edge
//!   flipping, pairwise (dyad) flipping, and the discrete Laplace mechanism
//!   for bi-degree sequences.
//! * [`estimation`] solves the moment equations for all four estimators
//!   (non-private MLE, noisy Laplace, denoised Laplace, edge-flipping) and
//!   provides the Jacobian, its approximate inverse and the asymptotic
//!   covariance.
//! * [`denoise`] projects a noisy integer bi-sequence back onto the set of
//!   graphical bi-degree sequences.
//! * [`experiments`] drives seeded, parallel Monte Carlo campaigns and the
//!   real-data pipeline, writing CSV and JSON artefacts.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod model;
pub mod privacy;
pub mod seed;

pub use error::{Error, Result};
pub use graph::{BiDegreeSequence, DirectedGraph, IntegerBiSequence};
pub use model::Theta;
pub use privacy::{PairwiseFlipSpec, PrivacyBudget};
