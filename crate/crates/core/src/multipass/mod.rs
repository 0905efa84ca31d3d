//! Multipass algorithms for unit-weight min-disagree: pivot in O(log log n) passes and
//! sample-and-assign min-disagree_k with one sample round per cluster.

pub mod ggk;
pub mod pivot;

pub use ggk::{gg_min_disagree_k, GgkConfig, GgkOutcome};
pub use pivot::{pivot_loglog, pivot_permutation, pivot_reference, PivotConfig, PivotOutcome, WindowReport};
