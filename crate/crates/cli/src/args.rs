//! Command-line surface and dispatch.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{ensure, Result};
use clap::{Args, Parser, Subcommand};
use frontkit::frontops::{LengthMetric, LengthPolicy};
use frontkit::fusion::{VoteParams, VoteThreshold};
use frontkit::geodata::ZoneMapping;
use frontkit::metrics::format_mde;
use frontkit::stats::Alternative;

use crate::compare::{load_grouping, run_compare, CompareOptions, RunGroup, RunMetric, TestChoice};
use crate::config::{resolve, ConfigFile};
use crate::evaluate::{run_evaluate, EvaluateOptions, Mode};
use crate::fuse::{run_fuse, FuseOptions};
use crate::report::{parse_group_keys, render, Format};
use crate::synth::{run_synth, Boundary, SynthOptions, SynthParams};

#[derive(Debug, Parser)]
#[command(name = "frontkit", version, about = "Calving-front evaluation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predicted zone or front masks against reference fronts.
    Evaluate(EvaluateArgs),
    /// Fuse annotator fronts and score each annotator against the others.
    Fuse(FuseArgs),
    /// Rank tests across groups of evaluation runs.
    Compare(CompareArgs),
    /// Write a synthetic dataset with analytic fronts.
    Synth(SynthArgs),
    /// Render a stored report as a subset table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of predictions, one `<id>.png` per scene.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Directory of reference front masks.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Directory of `<id>.txt` bounding boxes.
    #[arg(long)]
    pub bboxes: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// zones | front
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub min_front_m: Option<f64>,
    /// pixelcount | geometric
    #[arg(long)]
    pub metric: Option<LengthMetric>,
    /// Gray levels of the zone classes, e.g. `na:0,rock:64,glacier:127,ocean:254`.
    #[arg(long)]
    pub zone_map: Option<ZoneMapping>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const EVALUATE_KEYS: [&str; 10] = [
    "pred", "truth", "bboxes", "manifest", "mode", "min_front_m", "metric", "zone_map", "out", "jobs",
];

impl EvaluateArgs {
    pub fn resolve(self) -> Result<EvaluateOptions> {
        let cfg = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        cfg.check_keys(&EVALUATE_KEYS)?;
        let metric = resolve(self.metric, &cfg, "metric", Some(LengthMetric::PixelCount))?;
        let min = resolve(self.min_front_m, &cfg, "min_front_m", Some(LengthPolicy::BENCHMARK_MIN_M))?;
        let jobs = resolve(self.jobs, &cfg, "jobs", Some(1))?;
        ensure!(jobs > 0, "--jobs must be at least 1");
        Ok(EvaluateOptions {
            pred_dir: resolve(self.pred, &cfg, "pred", None)?,
            truth_dir: resolve(self.truth, &cfg, "truth", None)?,
            bbox_dir: resolve(self.bboxes, &cfg, "bboxes", None)?,
            manifest: resolve(self.manifest, &cfg, "manifest", None)?,
            mode: resolve(self.mode, &cfg, "mode", Some(Mode::Zones))?,
            policy: LengthPolicy::new(metric, min)?,
            zone_map: resolve(self.zone_map, &cfg, "zone_map", Some(ZoneMapping::default()))?,
            out: resolve(self.out, &cfg, "out", Some(PathBuf::from("report.json")))?,
            jobs,
        })
    }
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Annotator directories, or directories of `annotator_<k>` folders.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub annotators: Vec<PathBuf>,
    #[arg(long)]
    pub catchments: Option<PathBuf>,
    /// CSV `scene_id,row,col[,sentinel_row,sentinel_col]`.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub buffer_m: Option<f64>,
    /// auto | K
    #[arg(long)]
    pub threshold: Option<VoteThreshold>,
    #[arg(long)]
    pub min_front_m: Option<f64>,
    #[arg(long)]
    pub metric: Option<LengthMetric>,
    /// Predicted fronts scored against the aggregate of all annotators.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const FUSE_KEYS: [&str; 10] = [
    "annotators", "catchments", "seeds", "manifest", "buffer_m", "threshold", "min_front_m", "metric", "predictions", "out",
];

impl FuseArgs {
    pub fn resolve(self) -> Result<FuseOptions> {
        let cfg = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        cfg.check_keys(&FUSE_KEYS)?;
        let annotators = if self.annotators.is_empty() {
            let list: String = resolve(None, &cfg, "annotators", None)?;
            list.split(',').map(|s| PathBuf::from(s.trim())).collect()
        } else {
            self.annotators
        };
        let defaults = VoteParams::default();
        let params = VoteParams {
            threshold: resolve(self.threshold, &cfg, "threshold", Some(defaults.threshold))?,
            buffer_m: resolve(self.buffer_m, &cfg, "buffer_m", Some(defaults.buffer_m))?,
            min_front_m: resolve(self.min_front_m, &cfg, "min_front_m", Some(defaults.min_front_m))?,
            length_metric: resolve(self.metric, &cfg, "metric", Some(defaults.length_metric))?,
            ..defaults
        };
        let predictions = match self.predictions {
            Some(p) => Some(p),
            None => cfg.get("predictions")?,
        };
        Ok(FuseOptions {
            annotator_dirs: annotators,
            catchments: resolve(self.catchments, &cfg, "catchments", None)?,
            seeds: resolve(self.seeds, &cfg, "seeds", None)?,
            manifest: resolve(self.manifest, &cfg, "manifest", None)?,
            params,
            predictions,
            out: resolve(self.out, &cfg, "out", Some(PathBuf::from("fusion")))?,
        })
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Groups as `LABEL=R1.json,R2.json`, or single report paths.
    #[arg(long, num_args = 1..)]
    pub reports: Vec<RunGroup>,
    /// CSV `report,group[,covariate]` used instead of --reports.
    #[arg(long, conflicts_with = "reports")]
    pub grouping: Option<PathBuf>,
    /// kw | mwu | kendall | cohend
    #[arg(long)]
    pub test: TestChoice,
    #[arg(long, default_value = "less")]
    pub alternative: Alternative,
    /// Number of comparisons for the Bonferroni correction.
    #[arg(long)]
    pub bonferroni: Option<usize>,
    /// mde | nofront
    #[arg(long, default_value = "mde")]
    pub metric: RunMetric,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CompareArgs {
    pub fn resolve(self) -> Result<CompareOptions> {
        let groups = match &self.grouping {
            Some(p) => load_grouping(p)?,
            None => self.reports,
        };
        Ok(CompareOptions {
            groups,
            test: self.test,
            alternative: self.alternative,
            bonferroni_m: self.bonferroni,
            metric: self.metric,
            alpha: self.alpha,
            out: self.out,
        })
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// vertical | sinusoid:AMPLITUDE:PERIOD
    #[arg(long, default_value = "vertical")]
    pub boundary: Boundary,
    /// Meters per pixel.
    #[arg(long, default_value_t = 10.0)]
    pub resolution: f64,
    #[arg(long, default_value_t = 0)]
    pub rock_rows: usize,
    #[arg(long)]
    pub na_corner: bool,
    /// Also write `pred/` zone masks with the boundary moved by this many px.
    #[arg(long, allow_hyphen_values = true)]
    pub pred_shift: Option<i64>,
    /// Comma list of per-annotator front offsets in px.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub annotator_offsets: Vec<i64>,
    #[arg(long)]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn resolve(self) -> SynthOptions {
        SynthOptions {
            params: SynthParams {
                seed: self.seed,
                size: self.size,
                boundary: self.boundary,
                rock_rows: self.rock_rows,
                na_corner: self.na_corner,
                resolution_m: self.resolution,
            },
            n: self.n,
            pred_shift: self.pred_shift,
            annotator_offsets: self.annotator_offsets,
            out: self.out,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// all | season | glacier | sensor | resolution, or a comma list.
    #[arg(long, default_value = "all")]
    pub group_by: String,
    /// csv | md
    #[arg(long, default_value = "csv")]
    pub format: Format,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Evaluate(a) => {
            let opts = a.resolve()?;
            let report = run_evaluate(&opts)?;
            writeln!(
                stdout,
                "scenes: {}  MDE: {} m  no front: {}",
                report.scenes.len(),
                format_mde(report.mde_m),
                report.no_front_count
            )?;
            writeln!(stdout, "report: {}", opts.out.display())?;
        }
        Command::Fuse(a) => {
            let opts = a.resolve()?;
            let outcome = run_fuse(&opts)?;
            write!(stdout, "{}", outcome.breakdown.to_markdown())?;
            if !outcome.table.leaks.is_empty() || !outcome.table.missing_reference.is_empty() {
                eprintln!(
                    "warning: {} leaking ocean fills, {} scenes without a reference front (see warnings.csv)",
                    outcome.table.leaks.len(),
                    outcome.table.missing_reference.len()
                );
            }
        }
        Command::Compare(a) => {
            for row in run_compare(&a.resolve()?)? {
                writeln!(stdout, "{} vs {}: {}", row.group_a, row.group_b, row.summary)?;
            }
        }
        Command::Synth(a) => {
            let opts = a.resolve();
            let scenes = run_synth(&opts)?;
            writeln!(stdout, "wrote {} scenes to {}", scenes.len(), opts.out.display())?;
        }
        Command::Report(a) => {
            let keys = parse_group_keys(&a.group_by)?;
            write!(stdout, "{}", render(&a.input, &a.manifest, &keys, a.format)?)?;
        }
    }
    Ok(())
}
