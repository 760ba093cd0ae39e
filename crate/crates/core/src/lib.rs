//! Causal boosted decision trees for conditional average treatment effect
//! estimation.
//!
//! The crate contains a second-order tree learner ([`gbdt`]), a composite
//! loss that adds treatment-aware regularizers to squared error
//! ([`objective`]), a schedule that relaxes those regularizers as training
//! proceeds ([`schedule`]), the boosting loop itself ([`booster`]),
//! meta-learner baselines ([`baselines`]), metrics and statistical tests
//! ([`evaluation`]), rule extraction ([`rules`]), and the experiment
//! protocols used by the command line tool ([`experiment`]).

mod clock;
pub mod dataset;
pub mod error;
pub mod gbdt;
pub mod matrix;
pub mod nuisance;
pub mod objective;
pub mod persist;
pub mod schedule;
pub mod baselines;
pub mod booster;
pub mod estimator;
pub mod evaluation;
pub mod experiment;
pub mod rules;

pub use error::{CbdtError, ErrorKind, Result};
pub use estimator::CateEstimator;
pub use matrix::Matrix;
