//! Graph autoencoder with hand-derived gradients, ADAM and the training loop.

mod adam;
mod checkpoint;
mod layers;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_model, load_state, save_model, save_state};
pub use layers::{
    gcn_backward, gcn_layer, leaky_relu, leaky_relu_backward, pooled_size, power_normalize,
    power_normalize_backward, topk_pool, topk_pool_backward, GcnCache, GcnGrads, LatentCode, NormAdjacency,
    NormCache, PoolCache, Pooled,
};
pub use model::{
    decode, decode_backward, decode_traced, draw_for_model, encode, encode_backward, encode_traced,
    sample_loss_and_grad, Architecture, DecoderParams, DecoderTrace, Dense, EncoderParams, EncoderStage,
    EncoderTrace, GnnModel, Params, STAGES,
};
pub use train::{prepare_training_set, train, train_prepared, EpochLog, TrainSchedule, TrainState};
