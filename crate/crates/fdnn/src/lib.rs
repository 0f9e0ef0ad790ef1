//! Functional deep neural network (FDNN) classification of 1D and 2D
//! functional data.
//!
//! The pipeline: sample curves or surfaces on a tensor grid ([`grid`]),
//! extract functional principal component scores ([`fpca`]), train a
//! sup-norm bounded ReLU network on the hinge loss ([`dnn`]) and select its
//! architecture by an 80/20 split ([`classifier`]). The [`dgp`] module holds
//! simulation designs with closed-form Bayes rules so excess risk can be
//! measured exactly, and [`bench`] runs seeded replication studies and
//! handles on-disk formats.

pub mod bench;
pub mod classifier;
pub mod dgp;
pub mod dnn;
pub mod error;
pub mod fpca;
pub mod grid;
pub mod rng;

pub use classifier::{FdnnModel, HyperGrid, Hyperparams};
pub use dnn::{NetworkArchitecture, NetworkParams, TrainConfig};
pub use error::{FdnnError, Result};
pub use fpca::{EigenSystem, ScoreMatrix};
pub use grid::{inner_product, FunctionalObservation, SamplingGrid};

/// Binary class label in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    /// `+1` for `x >= 0`, `-1` otherwise. Ties go to the positive class.
    pub fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    /// Accepts exactly `1.0` or `-1.0`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x == 1.0 {
            Some(Label::Pos)
        } else if x == -1.0 {
            Some(Label::Neg)
        } else {
            None
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}
