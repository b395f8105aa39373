use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::channel::{ChannelConfig, Equalization};
use crate::cloud::io::{load_dataset, save_cloud, save_dataset, CloudFormat, Dataset};
use crate::cloud::synth::{generate_synthetic_dataset, parse_families, SyntheticSpec};
use crate::cloud::PointCloud;
use crate::codecs::{build_codec, mean_std, run_codec_trial, transmit_encoded, CodecSpec, TrialReport};
use crate::error::{invalid, Error, Result};
use crate::neural::{load_model, load_state, save_state, train, EpochLog, GnnModel, TrainState};
use crate::seed;

/// Sub-streams of the master seed.
pub const DATA_STREAM: u64 = 1;
pub const TRAIN_STREAM: u64 = 2;
pub const INIT_STREAM: u64 = 3;
pub const EVAL_STREAM: u64 = 4;
pub const MATRIX_STREAM: u64 = 5;

/// Loads the configured dataset or generates the synthetic one.
pub fn load_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    if let Some(p) = &cfg.dataset.path {
        return load_dataset(p);
    }
    let d = &cfg.dataset;
    let mut clouds = generate_synthetic_dataset(&SyntheticSpec {
        families: parse_families(&d.families)?,
        count: d.train_count + d.test_count,
        points_per_cloud: d.points,
        seed: seed::derive(cfg.seed, DATA_STREAM),
    })?;
    let test = clouds.split_off(d.train_count);
    Ok(Dataset { train: clouds, test })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub struct TrainOutcome {
    pub state: TrainState,
    pub log: Vec<EpochLog>,
}

/// Trains a fresh model (or continues `resume_from`) up to the configured
/// epoch count on `channel`. `stream` separates independently trained models.
pub fn train_model(
    cfg: &ExperimentConfig,
    data: &Dataset,
    channel: &ChannelConfig,
    stream: u64,
    resume_from: Option<TrainState>,
) -> Result<TrainOutcome> {
    let base = seed::derive(cfg.seed, stream);
    let mut state = match resume_from {
        Some(s) => {
            if s.model.arch != cfg.model {
                return Err(invalid("checkpoint architecture differs from the configured model"));
            }
            s
        }
        None => TrainState::new(GnnModel::new(cfg.model.clone(), seed::derive(base, INIT_STREAM))?),
    };
    let mut schedule = cfg.train.schedule;
    schedule.epochs = schedule.epochs.saturating_sub(state.epochs_done);
    let log = train(&mut state, &data.train, channel, &schedule, seed::derive(base, TRAIN_STREAM))?;
    Ok(TrainOutcome { state, log })
}

/// Trains the configured model and writes `train.csv` and the checkpoint.
/// With `resume`, continues from the existing checkpoint and appends to the
/// loss log.
pub fn cmd_train(cfg: &ExperimentConfig, resume: bool) -> Result<TrainOutcome> {
    let data = load_data(cfg)?;
    let ckpt = cfg.model_path();
    let prior = if resume { Some(load_state(&ckpt)?) } else { None };
    let channel = cfg.train.channel(cfg.model.avg_power);
    let outcome = train_model(cfg, &data, &channel, TRAIN_STREAM, prior)?;
    fs::create_dir_all(&cfg.out_dir)?;
    if let Some(dir) = ckpt.parent() {
        fs::create_dir_all(dir)?;
    }
    save_state(&outcome.state, &ckpt)?;
    let log_path = cfg.out_dir.join("train.csv");
    let mut rows = if resume && log_path.is_file() { read_epoch_log(&log_path)? } else { Vec::new() };
    rows.retain(|r| r.epoch + outcome.log.len() <= outcome.state.epochs_done);
    rows.extend_from_slice(&outcome.log);
    write_csv(&log_path, &rows)?;
    log::info!("trained {} epochs, checkpoint at {}", outcome.state.epochs_done, ckpt.display());
    Ok(outcome)
}

fn read_epoch_log(path: &Path) -> Result<Vec<EpochLog>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let parse_err = || Error::Config(format!("malformed row in {}", path.display()));
        out.push(EpochLog {
            epoch: field(0).parse().map_err(|_| parse_err())?,
            mean_loss: field(1).parse().map_err(|_| parse_err())?,
            wall_time: field(2).parse().map_err(|_| parse_err())?,
        });
    }
    Ok(out)
}

pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let data = load_data(cfg)?;
    let dir = cfg.out_dir.join("dataset");
    save_dataset(&dir, &data)?;
    Ok(dir)
}

/// Mean Chamfer distance of one codec over every test cloud and
/// `n_realizations` channel draws. Cloud `c`, realization `r` uses
/// `derive2(seed, c, r)` for every codec, so codecs see the same channels.
/// Overheads are averaged over clouds and rounded.
pub fn evaluate_codec(
    spec: &CodecSpec,
    model: Option<&GnnModel>,
    clouds: &[PointCloud],
    channel: &ChannelConfig,
    cfg: &ExperimentConfig,
) -> Result<TrialReport> {
    let codec = build_codec(spec, model, cfg.model.knn_k, cfg.model.avg_power)?;
    let eval_seed = seed::derive(cfg.seed, EVAL_STREAM);
    let mut chamfers = Vec::with_capacity(clouds.len() * cfg.n_realizations);
    let mut sums = [0usize; 3];
    for (c, cloud) in clouds.iter().enumerate() {
        let (ch, ov) = run_codec_trial(codec.as_ref(), cloud, channel, cfg.n_realizations, seed::derive(eval_seed, c as u64))?;
        chamfers.extend(ch);
        sums[0] += ov.data_symbols;
        sums[1] += ov.metadata_symbols;
        sums[2] += ov.total_symbols;
    }
    let avg = |s: usize| (s as f64 / clouds.len().max(1) as f64).round() as usize;
    let (chamfer_mean, chamfer_std) = mean_std(&chamfers);
    Ok(TrialReport {
        codec: codec.name(),
        snr_db: channel.snr_db,
        equalization: channel.equalization.to_string(),
        precoding: channel.precoding,
        data_symbols: avg(sums[0]),
        metadata_symbols: avg(sums[1]),
        total_symbols: avg(sums[2]),
        chamfer_mean,
        chamfer_std,
        seed: cfg.seed,
    })
}

fn parse_specs(list: &[String]) -> Result<Vec<CodecSpec>> {
    list.iter().map(|s| s.parse()).collect()
}

fn load_model_if_needed(cfg: &ExperimentConfig, specs: &[CodecSpec]) -> Result<Option<GnnModel>> {
    if !specs.iter().any(CodecSpec::needs_model) {
        return Ok(None);
    }
    let path = cfg.model_path();
    if !path.is_file() {
        return Err(Error::Config(format!("missing checkpoint {}; run `train` first", path.display())));
    }
    Ok(Some(load_model(&path)?))
}

pub fn sweep_overhead_rows(cfg: &ExperimentConfig, model: Option<&GnnModel>, test: &[PointCloud]) -> Result<Vec<TrialReport>> {
    let channel = cfg.channel.at(cfg.channel.overhead_snr_db, cfg.model.avg_power);
    parse_specs(&cfg.codecs.overhead_sweep)?
        .iter()
        .map(|s| evaluate_codec(s, model, test, &channel, cfg))
        .collect()
}

/// Rows ordered by codec (config order), then SNR.
pub fn sweep_snr_rows(cfg: &ExperimentConfig, model: Option<&GnnModel>, test: &[PointCloud]) -> Result<Vec<TrialReport>> {
    let mut rows = Vec::new();
    for spec in parse_specs(&cfg.codecs.snr_sweep)? {
        for &snr in &cfg.channel.snr_db {
            rows.push(evaluate_codec(&spec, model, test, &cfg.channel.at(snr, cfg.model.avg_power), cfg)?);
        }
    }
    Ok(rows)
}

/// GNN rows for each (equalization, precoding) model over the SNR grid, in
/// the order the models are given.
pub fn matrix_rows(
    cfg: &ExperimentConfig,
    models: &[(Equalization, bool, GnnModel)],
    test: &[PointCloud],
) -> Result<Vec<TrialReport>> {
    let mut rows = Vec::new();
    for (eq, precoding, model) in models {
        for &snr in &cfg.channel.snr_db {
            let channel = ChannelConfig {
                equalization: *eq,
                precoding: *precoding,
                ..cfg.channel.at(snr, cfg.model.avg_power)
            };
            rows.push(evaluate_codec(&CodecSpec::Gnn, Some(model), test, &channel, cfg)?);
        }
    }
    Ok(rows)
}

pub fn cmd_sweep_overhead(cfg: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    let model = load_model_if_needed(cfg, &parse_specs(&cfg.codecs.overhead_sweep)?)?;
    let data = load_data(cfg)?;
    let rows = sweep_overhead_rows(cfg, model.as_ref(), &data.test)?;
    write_csv(&cfg.out_dir.join("sweep-overhead.csv"), &rows)?;
    Ok(rows)
}

pub fn cmd_sweep_snr(cfg: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    let model = load_model_if_needed(cfg, &parse_specs(&cfg.codecs.snr_sweep)?)?;
    let data = load_data(cfg)?;
    let rows = sweep_snr_rows(cfg, model.as_ref(), &data.test)?;
    write_csv(&cfg.out_dir.join("sweep-snr.csv"), &rows)?;
    Ok(rows)
}

/// The four channel variants of the matrix study, in output order.
pub const MATRIX_VARIANTS: [(Equalization, bool); 4] = [
    (Equalization::Pre, false),
    (Equalization::Pre, true),
    (Equalization::Post, false),
    (Equalization::Post, true),
];

/// Trains one model per (equalization, precoding) pair on a channel that
/// matches its evaluation mode, then evaluates all four over the SNR grid.
/// Checkpoints are written as `model-<eq>-<precoding>.ckpt`.
pub fn cmd_matrix_eq_precoding(cfg: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    let data = load_data(cfg)?;
    let mut models = Vec::new();
    fs::create_dir_all(&cfg.out_dir)?;
    for (i, (eq, precoding)) in MATRIX_VARIANTS.into_iter().enumerate() {
        let channel = ChannelConfig { equalization: eq, precoding, ..cfg.train.channel(cfg.model.avg_power) };
        let stream = seed::derive(MATRIX_STREAM, i as u64);
        let outcome = train_model(cfg, &data, &channel, stream, None)?;
        let tag = if precoding { "on" } else { "off" };
        save_state(&outcome.state, &cfg.out_dir.join(format!("model-{eq}-{tag}.ckpt")))?;
        models.push((eq, precoding, outcome.state.model));
    }
    let rows = matrix_rows(cfg, &models, &data.test)?;
    write_csv(&cfg.out_dir.join("matrix.csv"), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRow {
    pub codec: String,
    pub file: String,
    pub snr_db: f64,
    pub total_symbols: usize,
    pub chamfer: f64,
    pub seed: u64,
}

/// File name of a codec's snapshot, e.g. `givens_300_5.ply`.
pub fn snapshot_file_name(codec: &str) -> String {
    format!("{}.ply", codec.replace([':', '.'], "_"))
}

/// Writes `original.ply`, one reconstruction per snapshot codec and
/// `snapshot.csv` into `<out_dir>/snapshot`.
pub fn cmd_snapshot(cfg: &ExperimentConfig, cloud_id: Option<&str>, snr_db: Option<f64>) -> Result<Vec<SnapshotRow>> {
    let specs = parse_specs(&cfg.codecs.snapshot)?;
    let model = load_model_if_needed(cfg, &specs)?;
    let data = load_data(cfg)?;
    let wanted = cloud_id.map(String::from).or_else(|| cfg.snapshot.cloud_id.clone());
    let cloud = match &wanted {
        Some(id) => data
            .test
            .iter()
            .chain(&data.train)
            .find(|c| &c.id == id)
            .ok_or_else(|| invalid(format!("unknown cloud id '{id}'")))?,
        None => data.test.first().ok_or_else(|| invalid("dataset has no test clouds"))?,
    };
    let snr = snr_db.unwrap_or(cfg.snapshot.snr_db);
    let channel = cfg.channel.at(snr, cfg.model.avg_power);
    let dir = cfg.out_dir.join("snapshot");
    fs::create_dir_all(&dir)?;
    save_cloud(cloud, &dir.join("original.ply"), CloudFormat::Ply)?;
    let trial_seed = seed::derive(cfg.seed, EVAL_STREAM);
    let mut rows = Vec::new();
    for spec in &specs {
        let codec = build_codec(spec, model.as_ref(), cfg.model.knn_k, cfg.model.avg_power)?;
        let output = codec.encode(cloud)?;
        let report = transmit_encoded(codec.as_ref(), cloud, &output, &channel, trial_seed)?;
        let file = snapshot_file_name(&report.codec);
        save_cloud(&report.reconstruction, &dir.join(&file), CloudFormat::Ply)?;
        rows.push(SnapshotRow {
            codec: report.codec,
            file,
            snr_db: snr,
            total_symbols: report.overhead.total_symbols,
            chamfer: report.chamfer,
            seed: cfg.seed,
        });
    }
    write_csv(&dir.join("snapshot.csv"), &rows)?;
    Ok(rows)
}
