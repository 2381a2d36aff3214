//! Dataset evaluation: front extraction per scene, distance terms against
//! the reference fronts, report JSON plus subset CSVs.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use frontkit::frontops::{refine_front_mask, zones_to_front, LengthPolicy};
use frontkit::geodata::{load_bbox, load_front_mask, load_manifest, load_zone_mask, Manifest, SceneMeta, ZoneMapping};
use frontkit::metrics::{mde, pair_distance_terms, subset_csv, subset_report, EvalReport, GroupBy, ReportFile};
use rayon::prelude::*;

/// Which prediction format the extraction pipeline expects.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Zone segmentation masks; the front is the glacier/ocean edge.
    #[default]
    Zones,
    /// Front masks; each piece is skeletonized down to its longest path.
    Front,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zones" => Ok(Mode::Zones),
            "front" => Ok(Mode::Front),
            _ => Err(format!("mode must be 'zones' or 'front', got '{s}'")),
        }
    }
}

/// Gray level at or above which a front-mask pixel counts as front.
pub const FRONT_THRESHOLD: u8 = 128;

/// Subset CSVs written next to the report.
pub const SUBSET_KEYS: [GroupBy; 4] = [GroupBy::Season, GroupBy::Glacier, GroupBy::Sensor, GroupBy::ResolutionClass];

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluateOptions {
    pub pred_dir: PathBuf,
    pub truth_dir: PathBuf,
    pub bbox_dir: PathBuf,
    pub manifest: PathBuf,
    pub mode: Mode,
    pub policy: LengthPolicy,
    pub zone_map: ZoneMapping,
    pub out: PathBuf,
    pub jobs: usize,
}

fn eval_scene(opts: &EvaluateOptions, meta: &SceneMeta) -> Result<frontkit::ScenePairResult> {
    let id = &meta.id;
    let png = format!("{id}.png");
    let bbox = load_bbox(opts.bbox_dir.join(format!("{id}.txt")))?;
    let truth = load_front_mask(opts.truth_dir.join(&png), FRONT_THRESHOLD)?;
    let pred_path = opts.pred_dir.join(&png);
    let pred = match opts.mode {
        Mode::Zones => {
            let zones = load_zone_mask(&pred_path, &opts.zone_map)?;
            zones_to_front(&zones, &bbox, meta.resolution_m, &opts.policy)?
        }
        Mode::Front => {
            let raw = load_front_mask(&pred_path, FRONT_THRESHOLD)?;
            refine_front_mask(&raw, &bbox, meta.resolution_m, &opts.policy)?
        }
    };
    Ok(pair_distance_terms(id.clone(), &truth, &pred, meta.resolution_m)?)
}

/// Scores every manifest scene. Results are kept in manifest order, so the
/// report does not depend on the worker count.
pub fn evaluate_manifest(opts: &EvaluateOptions, manifest: &Manifest) -> Result<EvalReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .context("starting worker pool")?;
    let scenes: Vec<&SceneMeta> = manifest.iter().collect();
    let results: Vec<Result<_>> =
        pool.install(|| scenes.par_iter().map(|m| eval_scene(opts, m).with_context(|| format!("scene {}", m.id))).collect());
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(mde(results))
}

pub fn report_json(report: &EvalReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ReportFile::from(report))?;
    s.push('\n');
    Ok(s)
}

/// `<stem>_<key>.csv` next to the report.
pub fn subset_path(out: &Path, key: GroupBy) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}_{}.csv", key.name()))
}

pub fn run_evaluate(opts: &EvaluateOptions) -> Result<EvalReport> {
    let manifest = load_manifest(&opts.manifest)?;
    if manifest.is_empty() {
        return Err(anyhow!("manifest {} lists no scenes", opts.manifest.display()));
    }
    let report = evaluate_manifest(opts, &manifest)?;
    if let Some(parent) = opts.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&opts.out, report_json(&report)?).with_context(|| format!("writing {}", opts.out.display()))?;
    for key in SUBSET_KEYS {
        let rows = subset_report(&report, &manifest, key)?;
        let path = subset_path(&opts.out, key);
        fs::write(&path, subset_csv(&rows, key)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}
