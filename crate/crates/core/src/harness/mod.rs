//! Experiment driver: configuration, dataset preparation, training and the
//! evaluation sweeps. Every command is a pure function of the configuration
//! and its master seed.

mod commands;
mod config;

pub use commands::{
    cmd_gen_data, cmd_matrix_eq_precoding, cmd_snapshot, cmd_sweep_overhead, cmd_sweep_snr, cmd_train,
    evaluate_codec, load_data, matrix_rows, snapshot_file_name, sweep_overhead_rows, sweep_snr_rows, train_model,
    write_csv, SnapshotRow, TrainOutcome, DATA_STREAM, EVAL_STREAM, INIT_STREAM, MATRIX_STREAM,
    MATRIX_VARIANTS, TRAIN_STREAM,
};
pub use config::{ChannelGrid, CodecLists, DatasetConfig, ExperimentConfig, SnapshotConfig, TrainConfig};
