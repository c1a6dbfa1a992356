//! The student: a residual linear adapter over frozen base embeddings,
//! trained with the CoSENT ranking loss on teacher-labeled pairs.

mod adapter;
mod loss;
mod train;

pub use adapter::{encode_student, AdapterParams, TrainingProvenance};
pub use loss::{batch_loss, cosent_gradient, cosent_loss, cosent_loss_and_sim_grads, project, TrainPair};
pub use train::{train_adapter, TrainReport};
