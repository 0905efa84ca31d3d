//! Streaming correlation clustering.
//!
//! Linear sketches for evaluating clusterings of dynamic signed graphs, cut sparsifiers,
//! small-space multiplicative-weights LP and SDP solvers, and multipass algorithms, along
//! with exact oracles for checking all of them on small inputs.

pub mod error;
pub mod graph;
pub mod hash;
pub mod union_find;

pub use error::{Error, Result};
pub use graph::brute::{brute_force_multicut, brute_force_opt, Objective};
pub use graph::eval::{exact_agree, exact_disagree};
pub use graph::gen::{gen_instance, Instance, InstanceKind};
pub use graph::stream::StreamSource;
pub use graph::{Clustering, EdgeUpdate, GraphSnapshot, NodeId, Op, WeightClass};
pub mod gg;
pub mod sketch;
pub mod stats;
pub mod multipass;
pub mod mwu;
pub mod sdp;
pub mod sparsify;
pub mod trace;
