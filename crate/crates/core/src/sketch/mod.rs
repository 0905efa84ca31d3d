//! Linear sketches of dynamic graph streams and the algorithms built on them.

pub mod bilinear;
pub mod blob;
pub mod node_l1;
pub mod repair;
