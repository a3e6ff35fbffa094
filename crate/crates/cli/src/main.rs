//! `tunnelradar`: simulate tunnel radar traffic, correct ghost points, detect
//! and track vehicles, and score the pipeline variants.
//!
//! Exit codes: 0 on success, 2 on a configuration error, 3 on a runtime
//! error.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tunnelradar_core::correction::{
    correct_frame, ghost_outcomes, CorrectedPoint, CorrectionModel, FrameOptions, SelectionStrategy,
    UncorrectablePolicy,
};
use tunnelradar_core::harness::bench::{run_bench, BenchConfig};
use tunnelradar_core::harness::io::{
    self, MetricsRow, CANDIDATES_SCHEMA, CORRECTED_SCHEMA, FRAMES_SCHEMA, TIMING_SCHEMA, TRACKS_SCHEMA,
    TRUTH_SCHEMA,
};
use tunnelradar_core::harness::{
    detect_frames, run_variants, scenarios, CandidateRecord, PipelineConfig, PipelineVariant, Timing,
};
use tunnelradar_core::sim::{prepare_scenario, simulate_with_model, ScenarioConfig, SimFrame};
use tunnelradar_core::tunnel::SegmentedTunnelModel;

#[derive(Parser)]
#[command(name = "tunnelradar", version, about = "Multipath ghost correction for tunnel radars")]
struct Cli {
    /// Scenario seed, used with the built-in scenarios.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Scenario TOML file; replaces `--scenario`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Pipeline settings TOML file (correction, cluster, tracker, matching).
    #[arg(long, global = true)]
    pipeline: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Surface {
    Segmented,
    Curved,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Fused,
    PathLoss,
    SpatialDistance,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write frames.jsonl and truth.jsonl.
    Simulate {
        #[arg(long, default_value = "straight")]
        scenario: String,
    },
    /// Correct the ghosts of every frame and write corrected.jsonl.
    Correct {
        #[arg(long, default_value = "straight")]
        scenario: String,
        /// Frames to read instead of simulating.
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "segmented")]
        model: Surface,
        #[arg(long, value_enum, default_value = "fused")]
        strategy: Strategy,
        /// Also write every ghost's candidates to candidates.jsonl.
        #[arg(long)]
        candidates: bool,
    },
    /// Run one variant through clustering and tracking; write tracks.jsonl.
    Detect {
        #[arg(long, default_value = "straight")]
        scenario: String,
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long, default_value = "full")]
        variant: String,
    },
    /// Score variants against ground truth; write metrics.csv and timing.json.
    Eval {
        /// Scenario name, or `all` for the whole suite.
        #[arg(long, default_value = "all")]
        scenario: String,
        /// Variant name; all variants when omitted.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Time segmented against curved correction; write bench.json.
    Bench {
        #[arg(long, default_value = "curved")]
        scenario: String,
        #[arg(long, default_value_t = 1000)]
        batch: usize,
        #[arg(long, default_value_t = 200)]
        frame_size: usize,
    },
    /// Build the tunnel model and write model.json.
    Model {
        #[arg(long, default_value = "straight")]
        scenario: String,
    },
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_scenario(cli: &Cli, name: &str) -> Result<ScenarioConfig> {
    match &cli.config {
        Some(path) => ScenarioConfig::from_toml_str(&read_to_string(path)?)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
        None => scenarios::by_name(name, cli.seed).ok_or_else(|| {
            CliError::Config(format!(
                "unknown scenario `{name}`, expected one of {}",
                scenarios::NAMES.join(", ")
            ))
        }),
    }
}

fn load_pipeline(cli: &Cli) -> Result<PipelineConfig> {
    let Some(path) = &cli.pipeline else {
        return Ok(PipelineConfig::default());
    };
    let cfg: PipelineConfig =
        toml::from_str(&read_to_string(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.cluster.validate().map_err(config)?;
    cfg.tracker.validate().map_err(config)?;
    Ok(cfg)
}

fn prepare(s: &ScenarioConfig, cfg: &PipelineConfig) -> Result<SegmentedTunnelModel> {
    let model = prepare_scenario(s).map_err(config)?;
    cfg.correction.validate(&model.cross_section).map_err(config)?;
    Ok(model)
}

fn parse_variant(name: &str) -> Result<PipelineVariant> {
    name.parse().map_err(CliError::Config)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_jsonl<T: Serialize>(dir: &Path, name: &str, schema: &str, items: &[T]) -> Result<()> {
    io::write_jsonl(create(dir, name)?, schema, items).map_err(runtime)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    use std::io::Write;
    let mut w = create(dir, name)?;
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(runtime)
}

/// Frames from `path`, or simulated from the scenario.
fn frames(path: Option<&Path>, s: &ScenarioConfig, model: &SegmentedTunnelModel) -> Result<Vec<SimFrame>> {
    match path {
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
            io::read_jsonl(BufReader::new(f), FRAMES_SCHEMA)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
        }
        None => Ok(simulate_with_model(s, model).frames),
    }
}

#[derive(Serialize)]
struct CorrectedRecord {
    frame: usize,
    timestamp: f64,
    dropped: usize,
    points: Vec<CorrectedPoint>,
}

#[derive(Serialize)]
struct TimingRecord<'a> {
    scenario: &'a str,
    variant: PipelineVariant,
    #[serde(flatten)]
    timing: Timing,
    fps: f64,
}

#[derive(Serialize)]
struct Runs<'a> {
    runs: Vec<TimingRecord<'a>>,
}

fn run(cli: &Cli) -> Result<()> {
    let pipeline = load_pipeline(cli)?;
    let out = &cli.out_dir;
    match &cli.command {
        Command::Simulate { scenario } => {
            let s = load_scenario(cli, scenario)?;
            let model = prepare(&s, &pipeline)?;
            let sim = simulate_with_model(&s, &model);
            write_jsonl(out, "frames.jsonl", FRAMES_SCHEMA, &sim.frames)?;
            write_jsonl(out, "truth.jsonl", TRUTH_SCHEMA, &sim.truth)?;
            let points: usize = sim.frames.iter().map(|f| f.points.len()).sum();
            println!("{}: {} frames, {points} points -> {}", s.name, sim.frames.len(), out.display());
        }
        Command::Correct {
            scenario,
            frames: path,
            model: surface,
            strategy,
            candidates,
        } => {
            let s = load_scenario(cli, scenario)?;
            let model = prepare(&s, &pipeline)?;
            let frames = frames(path.as_deref(), &s, &model)?;
            let mut corr = pipeline.correction;
            corr.radar_position = s.radar.position;
            let opts = FrameOptions {
                strategy: match strategy {
                    Strategy::Fused => SelectionStrategy::Fused,
                    Strategy::PathLoss => SelectionStrategy::PathLoss,
                    Strategy::SpatialDistance => SelectionStrategy::SpatialDistance,
                },
                surface: match surface {
                    Surface::Segmented => CorrectionModel::Segmented,
                    Surface::Curved => CorrectionModel::Curved,
                },
                uncorrectable: UncorrectablePolicy::KeepFlagged,
            };
            let mut records = Vec::with_capacity(frames.len());
            let mut dumps = Vec::new();
            for f in &frames {
                let points = f.radar_points();
                let c = correct_frame(&model, &corr, &points, &[], &opts);
                if *candidates {
                    for (k, outcome) in ghost_outcomes(&model, &corr, &points, &[], &opts) {
                        dumps.push(CandidateRecord {
                            frame: f.index,
                            source_index: k,
                            provenance: Some(f.points[k].provenance),
                            outcome,
                        });
                    }
                }
                records.push(CorrectedRecord {
                    frame: f.index,
                    timestamp: f.timestamp,
                    dropped: c.dropped,
                    points: c.points,
                });
            }
            write_jsonl(out, "corrected.jsonl", CORRECTED_SCHEMA, &records)?;
            if *candidates {
                write_jsonl(out, "candidates.jsonl", CANDIDATES_SCHEMA, &dumps)?;
            }
            let corrected: usize = records
                .iter()
                .flat_map(|r| &r.points)
                .filter(|p| matches!(p.status, tunnelradar_core::correction::PointStatus::Corrected { .. }))
                .count();
            println!("{} frames, {corrected} ghosts corrected -> {}", records.len(), out.display());
        }
        Command::Detect {
            scenario,
            frames: path,
            variant,
        } => {
            let variant = parse_variant(variant)?;
            let s = load_scenario(cli, scenario)?;
            let model = prepare(&s, &pipeline)?;
            let frames = frames(path.as_deref(), &s, &model)?;
            let points: Vec<_> = frames.iter().map(|f| f.radar_points()).collect();
            let tracks = detect_frames(&model, &s.radar, &points, variant, &pipeline);
            write_jsonl(out, "tracks.jsonl", TRACKS_SCHEMA, &tracks)?;
            let ids: std::collections::BTreeSet<u64> = tracks.iter().map(|t| t.id).collect();
            println!("{variant}: {} confirmed tracks over {} frames -> {}", ids.len(), frames.len(), out.display());
        }
        Command::Eval { scenario, variant } => {
            let variants = match variant {
                Some(v) => vec![parse_variant(v)?],
                None => PipelineVariant::ALL.to_vec(),
            };
            let list = if cli.config.is_none() && scenario == "all" {
                scenarios::suite(cli.seed)
            } else {
                vec![load_scenario(cli, scenario)?]
            };
            for s in &list {
                prepare(s, &pipeline)?;
            }
            let mut rows = Vec::new();
            let mut timings = Vec::new();
            for s in &list {
                for r in run_variants(s, &variants, &pipeline).map_err(runtime)? {
                    let row = MetricsRow::new(&r.metrics, &r.timing);
                    println!(
                        "{:<18} {:<16} P {:.3} R {:.3} F1 {:.3}",
                        row.scenario, row.variant, row.precision, row.recall, row.f1
                    );
                    rows.push(row);
                    timings.push((s.name.clone(), r.metrics.variant, r.timing));
                }
            }
            io::write_metrics_csv(create(out, "metrics.csv")?, &rows).map_err(runtime)?;
            let runs = Runs {
                runs: timings
                    .iter()
                    .map(|(n, v, t)| TimingRecord {
                        scenario: n,
                        variant: *v,
                        timing: *t,
                        fps: t.fps(),
                    })
                    .collect(),
            };
            write_text(out, "timing.json", &io::to_tagged_json(TIMING_SCHEMA, &runs))?;
        }
        Command::Bench {
            scenario,
            batch,
            frame_size,
        } => {
            if *batch < 1000 {
                return Err(CliError::Config(format!("batch must be at least 1000, got {batch}")));
            }
            let s = load_scenario(cli, scenario)?;
            prepare(&s, &pipeline)?;
            let cfg = BenchConfig {
                batch: *batch,
                frame_size: *frame_size,
                ..BenchConfig::default()
            };
            let r = run_bench(&s, &pipeline, &cfg).map_err(runtime)?;
            if r.batch == 0 {
                return Err(CliError::Runtime(format!("scenario `{}` produced no ghosts", s.name)));
            }
            println!(
                "segmented {:.2} us/point, curved {:.2} us/point ({:.2}x); {}-point frames at {:.0} fps",
                1e6 * r.segmented_per_point_s,
                1e6 * r.curved_per_point_s,
                r.speedup,
                r.frame_size,
                r.pipeline_fps
            );
            write_text(out, "bench.json", &io::to_tagged_json(TIMING_SCHEMA, &r))?;
        }
        Command::Model { scenario } => {
            let s = load_scenario(cli, scenario)?;
            let model = prepare(&s, &pipeline)?;
            let p = &model.params;
            println!(
                "{} roof chords, {} path segments, theta {:.3} deg, delta_phi {:.3} deg, E_c {:.3} m, E_p {:.3} m",
                model.roof_segments.len(),
                model.path_segments.len(),
                p.sector_angle.to_degrees(),
                p.tangent_threshold.to_degrees(),
                model.error_budget.cross_section_bound,
                model.error_budget.path_bound
            );
            for w in &model.warnings {
                eprintln!("warning: {w}");
            }
            write_text(out, "model.json", &io::model_json(&model))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Config(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
