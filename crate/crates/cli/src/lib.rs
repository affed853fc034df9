//! Command implementations behind the `gnet` binary.
//!
//! Each `cmd_*` function takes already-parsed arguments and a writer for
//! its progress output, so the commands can be driven from tests without
//! spawning a process.

pub mod config;
pub mod gradcheck;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use gnet::graph::{
    build_windows, load_sequence_dataset, load_tu_dataset, split_dataset, split_sequences,
    write_sequence_dataset, Dataset, SequenceStore, SplitRatios,
};
use gnet::model::GNetModel;
use gnet::synth::{generate, SynthSpec};
use gnet::training::{evaluate, history_csv, train, Checkpoint, Metrics, TrainOutcome};

pub use config::{DataKind, RunConfig, CONFIG_HELP};
pub use gradcheck::{cmd_gradcheck, GradcheckConfig, GRADCHECK_TOLERANCE};

/// Checkpoint metadata key holding the run's effective TOML config.
pub const RUN_CONFIG_KEY: &str = "run_config";

pub const BEST_CHECKPOINT: &str = "best.ckpt.json";
pub const FINAL_CHECKPOINT: &str = "final.ckpt.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_ECHO: &str = "config.toml";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] io::Error),
    #[error(transparent)]
    Core(#[from] gnet::Error),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn out_err(e: io::Error) -> CliError {
    CliError::Io(PathBuf::from("<stdout>"), e)
}

/// The three partitions of a run's data.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    /// Sequences shorter than the window, summed over partitions.
    pub skipped_sequences: usize,
}

impl PreparedData {
    /// Selects `train`, `val`, `test` or `all` (the three concatenated).
    pub fn select(&self, split: &str) -> Result<Dataset> {
        let selected = match split {
            "train" => self.train.clone(),
            "val" => self.val.clone(),
            "test" => self.test.clone(),
            "all" => {
                let mut all = self.train.clone();
                all.samples.extend(self.val.samples.iter().cloned());
                all.samples.extend(self.test.samples.iter().cloned());
                all
            }
            other => {
                return Err(CliError::Usage(format!(
                    "unknown split {other:?}; expected train, val, test or all"
                )))
            }
        };
        if selected.is_empty() {
            return Err(CliError::Usage(format!("split {split:?} selects no samples")));
        }
        Ok(selected)
    }
}

fn windowed(
    store: &SequenceStore,
    config: &RunConfig,
) -> Result<PreparedData> {
    let d = &config.data;
    let (tr, va, te) = split_sequences(store, SplitRatios(d.split), d.split_seed, d.per_class)?;
    let mut skipped = 0;
    let mut cut = |s: &SequenceStore| -> Result<Dataset> {
        let w = build_windows(s, d.window, d.horizon)?;
        skipped += w.skipped_sequences;
        Ok(w.dataset)
    };
    let (train, val, test) = (cut(&tr)?, cut(&va)?, cut(&te)?);
    Ok(PreparedData {
        train,
        val,
        test,
        skipped_sequences: skipped,
    })
}

/// Loads or generates the configured data and splits it.
pub fn prepare_data(config: &RunConfig) -> Result<PreparedData> {
    let d = &config.data;
    match d.kind {
        DataKind::Tu => {
            let dir = d.path.as_deref().expect("validated");
            let name = d.name.as_deref().expect("validated");
            let dataset = load_tu_dataset(dir, name)?;
            let (train, val, test) =
                split_dataset(&dataset, SplitRatios(d.split), d.split_seed, d.per_class)?;
            Ok(PreparedData {
                train,
                val,
                test,
                skipped_sequences: 0,
            })
        }
        DataKind::Sequence => {
            let store = load_sequence_dataset(d.path.as_deref().expect("validated"))?;
            windowed(&store, config)
        }
        DataKind::Synthetic => {
            let spec = SynthSpec::from(&d.synthetic.clone().unwrap_or_default());
            windowed(&generate(&spec)?, config)
        }
    }
}

fn fmt_acc(acc: Option<f64>) -> String {
    acc.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"))
}

fn branch_acc(m: &Metrics) -> (Option<f64>, Option<f64>) {
    (
        m.recognition.as_ref().map(|b| b.accuracy),
        m.prediction.as_ref().map(|b| b.accuracy),
    )
}

/// Writes one confusion table per enabled branch as
/// `{stem}_recognition.txt` / `{stem}_prediction.txt`.
fn write_confusions(dir: &Path, stem: &str, metrics: &Metrics, labels: &[String]) -> Result<()> {
    for (branch, m) in [("recognition", &metrics.recognition), ("prediction", &metrics.prediction)] {
        if let Some(m) = m {
            write_file(
                &dir.join(format!("{stem}_{branch}.txt")),
                &m.confusion.to_table(labels),
            )?;
        }
    }
    Ok(())
}

/// What `cmd_train` produced, for callers that want more than the files.
#[derive(Debug)]
pub struct TrainReport {
    pub outcome: TrainOutcome,
    pub data: PreparedData,
    /// `(checkpoint, split, metrics)` for best/final on val/test.
    pub evaluations: Vec<(&'static str, &'static str, Metrics)>,
}

impl TrainReport {
    pub fn metrics(&self, checkpoint: &str, split: &str) -> Option<&Metrics> {
        self.evaluations
            .iter()
            .find(|(c, s, _)| *c == checkpoint && *s == split)
            .map(|(_, _, m)| m)
    }
}

/// Trains from a run config and writes every artifact into
/// `config.output_dir`.
///
/// Files: the echoed config, best and final checkpoints, the per-epoch
/// history, a summary of best/final accuracy on val and test, and the
/// matching confusion tables.
pub fn cmd_train(config: &RunConfig, out: &mut dyn Write) -> Result<TrainReport> {
    config.validate()?;
    let data = prepare_data(config)?;
    if data.train.is_empty() || data.val.is_empty() || data.test.is_empty() {
        return Err(CliError::Usage(format!(
            "a partition is empty after windowing (train {}, val {}, test {}); \
             {} sequences were shorter than the window",
            data.train.len(),
            data.val.len(),
            data.test.len(),
            data.skipped_sequences
        )));
    }
    let gnet_config = config
        .model
        .gnet(data.train.num_node_classes, data.train.num_graph_classes);
    let model = GNetModel::new(gnet_config, config.model.init_seed)?;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.clone(), e))?;
    let echoed = config.to_toml();
    write_file(&dir.join(CONFIG_ECHO), &echoed)?;

    writeln!(
        out,
        "data {}: train {} / val {} / test {} samples, {} classes, d_in {}",
        data.train.name,
        data.train.len(),
        data.val.len(),
        data.test.len(),
        data.train.num_graph_classes,
        data.train.num_node_classes
    )
    .map_err(out_err)?;

    let mut io_error = None;
    let outcome = train(model, &data.train, &data.val, &config.train.train_config(), |r, secs| {
        let line = format!(
            "epoch {:>4}  train_loss {:.6}  val_loss {:.6}  acc_r {}  acc_p {}  ({secs:.2}s)",
            r.epoch,
            r.train_loss,
            r.val_loss,
            fmt_acc(r.acc_r),
            fmt_acc(r.acc_p)
        );
        if let Err(e) = writeln!(out, "{line}") {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(out_err(e));
    }

    let stamped = |c: &Checkpoint| {
        let mut c = c.clone();
        c.metadata.insert(RUN_CONFIG_KEY.into(), echoed.clone());
        c
    };
    stamped(&outcome.best).save(&dir.join(BEST_CHECKPOINT))?;
    stamped(&outcome.last).save(&dir.join(FINAL_CHECKPOINT))?;
    write_file(&dir.join(METRICS_FILE), &history_csv(&outcome.history))?;

    let threads = config.train.threads;
    let labels = &data.train.graph_labels;
    let mut evaluations = Vec::new();
    let mut summary = String::from("checkpoint,epoch,split,samples,loss,acc_r,acc_p\n");
    for (name, ckpt) in [("best", &outcome.best), ("final", &outcome.last)] {
        for (split, set) in [("val", &data.val), ("test", &data.test)] {
            let m = evaluate(&ckpt.model, set, threads)?;
            let (r, p) = branch_acc(&m);
            summary += &format!(
                "{name},{},{split},{},{:?},{},{}\n",
                ckpt.epoch,
                m.samples,
                m.loss,
                r.map_or(String::new(), |a| format!("{a:?}")),
                p.map_or(String::new(), |a| format!("{a:?}"))
            );
            write_confusions(dir, &format!("confusion_{name}_{split}"), &m, labels)?;
            evaluations.push((name, split, m));
        }
    }
    write_file(&dir.join(SUMMARY_FILE), &summary)?;

    for (name, split, m) in &evaluations {
        if *split == "test" {
            let (r, p) = branch_acc(m);
            writeln!(
                out,
                "{name} checkpoint: test acc_r {}  acc_p {}",
                fmt_acc(r),
                fmt_acc(p)
            )
            .map_err(out_err)?;
        }
    }
    Ok(TrainReport {
        outcome,
        data,
        evaluations,
    })
}

/// Rebuilds the data split a checkpoint was trained with and evaluates it.
///
/// `data` replaces the dataset path stored in the checkpoint; a synthetic
/// run pointed at a file reads it as a sequence dataset. Confusion tables go
/// to `out_dir`, defaulting to the checkpoint's directory.
pub fn cmd_eval(
    checkpoint: &Path,
    data: Option<&Path>,
    split: &str,
    threads: usize,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Metrics> {
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let ckpt = Checkpoint::load(checkpoint)?;
    let stored = ckpt.metadata.get(RUN_CONFIG_KEY).ok_or_else(|| {
        CliError::Config(format!(
            "{} carries no run configuration; cannot rebuild its data split",
            checkpoint.display()
        ))
    })?;
    let mut config: RunConfig = toml::from_str(stored).map_err(|e| {
        CliError::Config(format!("run configuration in {}: {e}", checkpoint.display()))
    })?;
    if let Some(path) = data {
        if config.data.kind == DataKind::Synthetic {
            config.data.kind = DataKind::Sequence;
        }
        config.data.path = Some(path.to_path_buf());
    }
    config.validate()?;

    let prepared = prepare_data(&config)?;
    let dataset = prepared.select(split)?;
    ckpt.model.check_dataset(&dataset).map_err(|e| {
        CliError::Config(format!(
            "checkpoint {} does not fit the data: {e}",
            checkpoint.display()
        ))
    })?;
    let metrics = evaluate(&ckpt.model, &dataset, threads)?;
    let (r, p) = branch_acc(&metrics);
    writeln!(
        out,
        "{split}: {} samples  loss {:.6}  acc_r {}  acc_p {}",
        metrics.samples,
        metrics.loss,
        fmt_acc(r),
        fmt_acc(p)
    )
    .map_err(out_err)?;

    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => checkpoint
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.clone(), e))?;
    write_confusions(&dir, &format!("eval_{split}"), &metrics, &dataset.graph_labels)?;
    Ok(metrics)
}

/// Generates a synthetic sequence dataset and writes it to `out_path`.
pub fn cmd_synth(spec: &SynthSpec, out_path: &Path, out: &mut dyn Write) -> Result<SequenceStore> {
    let store = generate(spec)?;
    write_sequence_dataset(out_path, &store)?;
    writeln!(
        out,
        "wrote {} sequences ({} frames) to {}",
        store.sequences.len(),
        store.num_frames(),
        out_path.display()
    )
    .map_err(out_err)?;
    Ok(store)
}
