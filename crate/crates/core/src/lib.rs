//! Conditioning-guided design of feed-forward networks.
//!
//! The stacked matrix of a layer is its weight matrix with the bias row
//! appended. Its 2-norm condition number indicates whether the layer carries
//! more neurons than its neighbours can use. This crate builds three tools on
//! that signal:
//!
//! - [`design::proportion`] shrinks over-conditioned layers of a partially
//!   trained network until every stacked matrix is below a threshold `tau`,
//!   fixing the relative widths of the layers.
//! - [`design::scale_search`] scales all hidden widths by candidate factors,
//!   partially trains each candidate several times and keeps the one with the
//!   smallest `2 * validation_error - train_error`.
//! - [`design::squeeze`] removes the neurons that column-pivoted QR ranks as
//!   least independent from a trained network, leaving everything else intact.
//!
//! Supporting modules provide the dense kernels ([`linalg`]), the network
//! representation ([`network`]), mini-batch Adam training ([`trainer`]), the
//! MNIST and Adult Income feature pipelines ([`data`]) and report emission
//! ([`report`]).

mod bytes;
pub mod data;
pub mod design;
pub mod linalg;
pub mod network;
pub mod report;
pub mod seed;
pub mod trainer;

pub use linalg::{LinalgError, Matrix};
pub use network::{ActivationKind, FeedForwardNet, NetworkSpec};
