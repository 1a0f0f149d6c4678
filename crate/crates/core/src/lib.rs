//! Curvature and stability tools for Einstein 4-manifolds.
//!
//! Metrics are given symbolically ([`expr`], [`gms`]) and turned into
//! pointwise curvature ([`curvature`], [`tensor_point`]) and differential
//! operators on tensor fields ([`fieldops`]). [`catalog`] holds the reference
//! metrics, [`stability`] builds destabilizing directions and evaluates the
//! second variation of the total scalar curvature, and [`identities`] checks
//! the whole stack against exact identities. [`cli`] is the command-line
//! front end.

// Tensor code indexes components the way the formulas do, and interval checks
// are written as `!(x > y)` so that NaN fails them.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod tensor_point;
pub mod curvature;
pub mod fieldops;
pub mod catalog;
pub mod stability;
pub mod gms;
pub mod identities;
pub mod cli;
