use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use taskcomm::codec::{evaluate, train, CodecModel, LabeledSegment, TrainConfig};
use taskcomm::overhead::{report, OverheadLedger, PAPER_SNR_GRID};
use taskcomm::posture::{
    gravity_feature, lowpass_gravity, make_windows, train_forest, ForestConfig, PostureLabel, RandomForest,
};
use taskcomm::sim::config::parse_timeline;
use taskcomm::sim::io::{
    read_accel_csv, read_labeled_segments, read_window_labels, write_accel_csv, write_frames,
    write_labeled_segments, write_window_labels,
};
use taskcomm::sim::{
    codec_dataset, gen_accel_trace, posture_features, run_simulation, Models, NoiseParams, Room, Scenario,
    ScenarioVideo, SimConfig,
};
use taskcomm::tensor::{grad_check, tiny_network, StepDecay};

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "taskcomm", version, about = "Gated semantic video transmission simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic accelerometer traces, labels and video segments.
    GenData(GenData),
    /// Train the video codec end to end through the AWGN channel.
    TrainCodec(TrainCodec),
    /// Train the posture random forest.
    TrainForest(TrainForest),
    /// Compare analytic and finite-difference gradients on a tiny network.
    Gradcheck(Gradcheck),
    /// Print the communication-overhead table.
    Overhead(Overhead),
    /// Run the end-to-end simulation described by a config file.
    Simulate(Simulate),
    /// Sweep test SNRs for one or more codec models and emit CSV.
    Eval(Eval),
}

#[derive(Args)]
struct NoiseArgs {
    /// Accelerometer white noise per axis (g).
    #[arg(long, default_value_t = NoiseParams::default().accel_sigma)]
    accel_noise: f64,
    /// Vertical bounce while walking (g).
    #[arg(long, default_value_t = NoiseParams::default().walk_bounce)]
    walk_bounce: f64,
    /// Pixel noise std on the [0, 1] scale.
    #[arg(long, default_value_t = NoiseParams::default().pixel_sigma)]
    pixel_noise: f64,
}

impl NoiseArgs {
    fn params(&self) -> NoiseParams {
        NoiseParams {
            accel_sigma: self.accel_noise,
            walk_bounce: self.walk_bounce,
            pixel_sigma: self.pixel_noise,
        }
    }
}

#[derive(Args)]
struct GenData {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Labelled codec training segments to write.
    #[arg(long, default_value_t = 200)]
    segments: usize,
    /// `paper` or `activity:seconds, ...`.
    #[arg(long, default_value = "paper")]
    timeline: String,
    /// Also write every camera's full frame stream (about 1.1 GB per room
    /// for the built-in `paper` timeline).
    #[arg(long)]
    frames: bool,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct TrainCodec {
    #[arg(long)]
    out: PathBuf,
    /// Directory written by gen-data; without it a dataset is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    segments: usize,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    #[arg(long, default_value_t = NoiseParams::default().pixel_sigma)]
    pixel_noise: f64,
    #[arg(long, default_value_t = 15)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0.003)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Training SNR in dB, or `inf`.
    #[arg(long, default_value_t = 25.0)]
    snr_train: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct TrainForest {
    #[arg(long)]
    out: PathBuf,
    /// Directory written by gen-data (uses accel.csv and windows.csv);
    /// without it features are generated.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Seconds of each posture when generating.
    #[arg(long, default_value_t = 100)]
    seconds: usize,
    #[arg(long, default_value_t = 3)]
    data_seed: u64,
    #[arg(long, default_value_t = NoiseParams::default().accel_sigma)]
    accel_noise: f64,
    #[arg(long, default_value_t = 10)]
    trees: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 11)]
    seed: u64,
}

#[derive(Args)]
struct Gradcheck {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

#[derive(Args)]
struct Overhead {
    /// Use the reference scenario (L=4840, N_f=1852, N_t=36, N_b=110 MiB).
    #[arg(long, conflicts_with_all = ["l", "n_f", "n_t", "n_b"])]
    paper: bool,
    #[arg(long, default_value_t = 4840)]
    l: u64,
    #[arg(long, default_value_t = 0)]
    n_f: u64,
    #[arg(long, default_value_t = 0)]
    n_t: u64,
    #[arg(long, default_value_t = 0)]
    n_b: u64,
    /// Comma-separated SNRs for the MPEG-4 rows.
    #[arg(long, value_delimiter = ',', default_values_t = PAPER_SNR_GRID)]
    snr_grid: Vec<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Simulate {
    #[arg(long)]
    config: PathBuf,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Eval {
    /// Codec model files; each becomes one curve.
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = PAPER_SNR_GRID)]
    snr_test: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    segments: usize,
    #[arg(long, default_value_t = 2)]
    data_seed: u64,
    #[arg(long, default_value_t = NoiseParams::default().pixel_sigma)]
    pixel_noise: f64,
    /// Channel noise seeds averaged per point.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Writes to stdout, treating a closed pipe (`| head`) as success.
fn emit(text: &str) -> std::io::Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn scenario_from(timeline: &str, seed: u64, noise: NoiseParams) -> Result<Scenario, String> {
    Ok(if timeline == "paper" {
        Scenario::paper(seed, noise)
    } else {
        Scenario::new("custom", parse_timeline(timeline)?, seed, noise)
    })
}

fn gen_data(a: GenData) -> CliResult {
    std::fs::create_dir_all(&a.out)?;
    let scenario = scenario_from(&a.timeline, a.seed, a.noise.params())?;
    scenario.validate(0.0)?;
    let trace = gen_accel_trace(&scenario);
    write_accel_csv(a.out.join("accel.csv"), &trace.samples)?;
    write_window_labels(a.out.join("windows.csv"), &trace.window_postures)?;
    let segments = codec_dataset(a.segments, a.noise.pixel_noise, a.seed);
    write_labeled_segments(a.out.join("segments.semf"), a.out.join("segments.csv"), &segments)?;
    if a.frames {
        let video = ScenarioVideo::new(&scenario);
        for room in Room::ALL {
            let frames = (0..video.total_frames()).map(|k| video.frame(room, k));
            write_frames(a.out.join(format!("frames_{}.semf", room.name())), video.total_frames(), frames)?;
        }
    }
    println!(
        "wrote {} samples, {} windows, {} segments to {}",
        trace.samples.len(),
        trace.window_postures.len(),
        segments.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn train_codec(a: TrainCodec) -> CliResult {
    let data: Vec<LabeledSegment> = match &a.data {
        Some(dir) => read_labeled_segments(dir.join("segments.semf"), dir.join("segments.csv"))?,
        None => codec_dataset(a.segments, a.pixel_noise, a.data_seed),
    };
    let config = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        schedule: StepDecay {
            base: a.lr,
            ..StepDecay::default()
        },
        momentum: a.momentum,
        snr_train_db: a.snr_train,
        seed: a.seed,
    };
    let outcome = train(&data, &config)?;
    for e in &outcome.history {
        println!(
            "epoch {:>2} lr {:.3e} loss {:.4} acc {:.3}",
            e.epoch, e.lr, e.loss, e.accuracy
        );
    }
    outcome.model.save(&a.out)?;
    println!("{} optimizer steps; saved {}", outcome.optimizer_steps, a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn features_from_dir(dir: &Path) -> Result<Vec<(f64, PostureLabel)>, Box<dyn std::error::Error>> {
    let samples = read_accel_csv(dir.join("accel.csv"))?;
    let labels = read_window_labels(dir.join("windows.csv"))?;
    let windows = make_windows(&lowpass_gravity(&samples));
    let mut out = Vec::new();
    for w in windows.iter().filter(|w| w.index < labels.len()) {
        let i = w.index;
        // Skip windows where the filter is still catching up with a change.
        let settling = (i.saturating_sub(1)..=i).any(|k| k > 0 && labels[k] != labels[k - 1]);
        if !settling {
            out.push((gravity_feature(w)?.u, labels[i]));
        }
    }
    Ok(out)
}

fn train_forest_cmd(a: TrainForest) -> CliResult {
    let data = match &a.data {
        Some(dir) => features_from_dir(dir)?,
        None => {
            let noise = NoiseParams {
                accel_sigma: a.accel_noise,
                ..NoiseParams::default()
            };
            posture_features(a.seconds, &noise, a.data_seed)?
        }
    };
    let forest = train_forest(
        &data,
        &ForestConfig {
            n_trees: a.trees,
            max_depth: a.depth,
            seed: a.seed,
        },
    )?;
    let hits = data.iter().filter(|(u, p)| forest.classify(*u) == *p).count();
    println!(
        "{} trees on {} windows, training accuracy {:.4}",
        forest.trees.len(),
        data.len(),
        hits as f64 / data.len() as f64
    );
    forest.save(&a.out)?;
    println!("saved {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn gradcheck(a: Gradcheck) -> CliResult {
    let case = tiny_network(a.seed);
    let err = grad_check(&case.network, &case.input, case.label, a.epsilon)?;
    println!("max relative error {err:.3e}");
    Ok(if err < 1e-4 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn overhead(a: Overhead) -> CliResult {
    let (name, ledger) = if a.paper {
        ("paper", OverheadLedger::paper())
    } else {
        (
            "custom",
            OverheadLedger {
                l: a.l,
                n_f: a.n_f,
                n_t: a.n_t,
                n_b: a.n_b,
                ..OverheadLedger::default()
            },
        )
    };
    let r = report(name, &ledger, &a.snr_grid);
    emit(&if a.json { r.to_json() + "\n" } else { r.to_text() })?;
    Ok(ExitCode::SUCCESS)
}

fn simulate(a: Simulate) -> CliResult {
    let config = SimConfig::load(&a.config)?;
    config.check_inputs()?;
    let (Some(codec_path), Some(forest_path)) = (&config.codec_model, &config.forest_model) else {
        return Err("config must set codec_model and forest_model".into());
    };
    let models = Models {
        codec: CodecModel::load(codec_path)?,
        forest: RandomForest::load(forest_path)?,
    };
    let report = run_simulation(&config, &config.scenario(), &models)?;
    if let Some(p) = &config.report_json {
        std::fs::write(p, report.to_json())?;
    }
    if let Some(p) = &config.event_log {
        std::fs::write(p, report.event_log())?;
    }
    emit(&if a.json { report.to_json() + "\n" } else { report.summary() })?;
    Ok(ExitCode::SUCCESS)
}

fn eval(a: Eval) -> CliResult {
    let models = a
        .models
        .iter()
        .map(CodecModel::load)
        .collect::<Result<Vec<_>, _>>()?;
    let data = codec_dataset(a.segments, a.pixel_noise, a.data_seed);
    let grid: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|m| a.snr_test.iter().map(move |&s| (m, s)))
        .collect();
    let points = grid
        .par_iter()
        .map(|&(m, snr)| -> Result<f64, taskcomm::codec::CodecError> {
            let mut sum = 0.0;
            for seed in 0..a.seeds.max(1) {
                sum += evaluate(&models[m], &data, snr, seed)?;
            }
            Ok(sum / a.seeds.max(1) as f64)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "snr_train_db", "snr_test_db", "accuracy"])?;
    for (&(m, snr), acc) in grid.iter().zip(points) {
        w.write_record([
            a.models[m].display().to_string(),
            models[m].meta.snr_train_db.to_string(),
            snr.to_string(),
            format!("{acc:.4}"),
        ])?;
    }
    let csv = String::from_utf8(w.into_inner()?)?;
    match &a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => emit(&csv)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::TrainCodec(a) => train_codec(a),
        Command::TrainForest(a) => train_forest_cmd(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Overhead(a) => overhead(a),
        Command::Simulate(a) => simulate(a),
        Command::Eval(a) => eval(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
