//! Differentiable building blocks shared by the encoders, the decoder and the
//! factorization baseline.

mod checkpoint;
mod gradcheck;
mod layers;
mod params;
mod tape;

pub use checkpoint::{load_params, params_from_bytes, params_to_bytes, restore_into, save_params, PARAMS_VERSION};
pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport};
pub use layers::{BiLayer, Embedding, FeedForward, HighwayBiLstm, Linear, Lstm};
pub use params::{Grads, Init, Param, ParamGrad, ParamId, ParamStore};
pub use tape::{dot, log_softmax, sigmoid, softmax, Tape, Var};
