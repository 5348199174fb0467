//! Recurrent regression network: tanh input layer, stacked GRU layers and
//! either the grouped multiple-model head or a plain linear head, with
//! hand-written backpropagation through time and Adam.

mod adam;
mod gradcheck;
mod gru;
mod immm;
mod model;
mod tensor;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, grad_check_against, relative_error, GradCheckReport, ParamSubset, REL_ERROR_FLOOR};
pub use gru::{gru_cell_forward, GruLayerParams};
pub use immm::{group_output, immm_forward, softmax, ImmmOutput, RegimeBank, RegimeGroup};
pub use model::{
    init_model, loss_and_grad, model_forward, sample_loss, Dense, Estimate, Head, HeadKind, ModelConfig, ModelParams,
    Network, OUTPUTS,
};
pub use tensor::Matrix;
pub use train::{apply_update, batch_gradient, finish_batch, train_step, Example};
