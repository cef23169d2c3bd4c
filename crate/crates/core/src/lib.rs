//! Differentially private federated gradient descent over fading wireless
//! channels, with adaptive power control for orthogonal (OMA) and
//! over-the-air (NOMA) gradient aggregation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod numerics;
pub mod data;
pub mod model;
pub mod channel;
pub mod privacy;
pub mod power;
pub mod trainer;
pub mod experiments;
pub mod mnist;
