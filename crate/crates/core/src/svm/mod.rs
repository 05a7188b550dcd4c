pub mod kernel;
pub mod multiclass;
pub mod smo;

pub use kernel::{gram_matrix, kernel_eval, KernelSpec};
pub use multiclass::{train_multiclass, MulticlassSvmModel};
pub use smo::{
    dual_objective, predict_binary, train_binary, train_binary_traced, BinarySvmModel, Prediction, SmoTrace,
    SvmParams,
};
