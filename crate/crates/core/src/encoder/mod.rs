//! Trainable encoders and minibatch information estimators.
//!
//! Encoders are linear maps over fixed feature bases. The Dirichlet encoder
//! places `W` on the simplex; the Gaussian encoder places it in `R^d` for the
//! VIB and self-supervised losses; the kernel encoder wraps an exact finite
//! channel so the sample estimators can be checked against exact values.
//! Training is two-stage: an encoder loss from [`losses`], then a readout fit
//! by [`decoder::decoder_stage`].

pub mod batch;
pub mod decoder;
pub mod dirichlet;
pub mod family;
pub mod gaussian;
pub mod input;
pub mod linear;
pub mod loo;
pub mod losses;
pub mod plugin;
pub mod regularized;
pub mod train;

pub use batch::Minibatch;
pub use decoder::{decoder_stage, DecoderConfig, DecoderFit};
pub use dirichlet::{DirichletEncoder, ALPHA_MIN};
pub use family::{DirichletParams, GammaNoise, LatentModel};
pub use gaussian::{GaussianEncoder, KernelEncoder, SoftmaxReadout};
pub use input::{FeatureMap, Input};
pub use linear::{LinearMap, Parameters};
pub use loo::{dirichlet_loo_rates, loo_conditional_rate, loo_rates, loo_total_rate, DirichletNoise, LooRates};
pub use losses::{ceb_loss, ib_known_py_loss, self_loss, semi_loss, vib_loss, GaussianNoise, LossEval, VibModel};
pub use plugin::{cluster_partition, gauge_matched_kl, permutations, plugin_estimate, GaugeMatch, PluginEstimate};
pub use regularized::{make_views, train_self, train_semi, SelfConfig, SelfReport, SemiConfig, SemiReport};
pub use train::{toy_problem, train_toy, EpochLoss, Objective, ToyProblem, TrainConfig, TrainReport, TrajectoryPoint};
