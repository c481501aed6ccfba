//! Contour integration on soft edge maps.
//!
//! Edge segments (oriented, positioned, strength-weighted pixels) are labelled
//! contour / non-contour by exact MAP inference on a binary conditional random
//! field. Unary energies mix a descriptor-strength logistic with an
//! excitation/inhibition logistic driven by an association field; pairwise
//! energies are Ising terms modulated by that same field. The energy is
//! submodular, so inference reduces to an s-t minimum cut.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line and
//! parallel drivers live in the `contour-crf-cli` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod association;
pub mod energy;
pub mod evaluation;
pub mod extraction;
pub mod maxflow;
pub mod mincut;
pub mod search;
pub mod segment;
pub mod synth;
pub mod training;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use association::FieldParams;
pub use energy::{CrfInstance, ModelParams, PairTerm};
pub use evaluation::{EvalImage, EvalReport, Tolerance};
pub use training::{ParamBox, TrainReport};
pub use search::{global_search, Dimension, SearchResult};
pub use error::{Error, Result};

pub use extraction::{BinaryMap, GrayGrid, SoftEdgeMap};
pub use maxflow::FlowNetwork;
pub use mincut::CutLabeling;
pub use segment::{EdgeSegment, Neighborhood, SegmentField};

