//! Multi-annotator fusion: aggregate fronts, leave-one-out agreement table
//! and optional scoring of predictions against the full aggregate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use frontkit::fusion::{aggregate_all, leave_one_out, score_against_aggregate, Annotator, AnnotatorSet, FusionSite, LooTable, VoteParams};
use frontkit::geodata::{load_catchment, load_front_mask, load_manifest, write_front_mask, FrontMask, Manifest};
use frontkit::metrics::{BreakdownTable, EvalReport, GroupBy};
use serde::Deserialize;

use crate::evaluate::FRONT_THRESHOLD;

pub const TABLE_KEYS: [GroupBy; 4] = [GroupBy::Season, GroupBy::Glacier, GroupBy::Sensor, GroupBy::ResolutionClass];

#[derive(Clone, Debug, PartialEq)]
pub struct FuseOptions {
    /// Each entry is an annotator directory, or a directory holding
    /// `annotator_<k>` subdirectories.
    pub annotator_dirs: Vec<PathBuf>,
    pub catchments: PathBuf,
    pub seeds: PathBuf,
    pub manifest: PathBuf,
    pub params: VoteParams,
    pub predictions: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct FuseOutcome {
    pub annotators: Vec<PathBuf>,
    pub table: LooTable,
    pub predictions: Option<EvalReport>,
    pub breakdown: BreakdownTable,
}

#[derive(Deserialize)]
struct SeedRow {
    scene_id: String,
    row: usize,
    col: usize,
    #[serde(default)]
    sentinel_row: Option<usize>,
    #[serde(default)]
    sentinel_col: Option<usize>,
}

/// Ocean seed and optional sentinel pixel of a scene.
pub type SeedPair = ((usize, usize), Option<(usize, usize)>);

/// `scene_id,row,col[,sentinel_row,sentinel_col]`.
pub fn load_seeds(path: &Path) -> Result<BTreeMap<String, SeedPair>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<SeedRow>().enumerate() {
        let rec = rec.with_context(|| format!("{}: line {}", path.display(), i + 2))?;
        let sentinel = match (rec.sentinel_row, rec.sentinel_col) {
            (Some(r), Some(c)) => Some((r, c)),
            (None, None) => None,
            _ => bail!("{}: line {}: sentinel needs both row and col", path.display(), i + 2),
        };
        if out.insert(rec.scene_id.clone(), ((rec.row, rec.col), sentinel)).is_some() {
            bail!("{}: duplicate seed for scene '{}'", path.display(), rec.scene_id);
        }
    }
    Ok(out)
}

fn annotator_number(path: &Path) -> Option<u64> {
    path.file_name()?.to_str()?.strip_prefix("annotator_")?.parse().ok()
}

/// Expands `annotator_<k>` subdirectories in numeric order; a directory
/// without them is itself one annotator.
pub fn expand_annotator_dirs(dirs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for dir in dirs {
        let entries = fs::read_dir(dir).with_context(|| format!("reading annotator dir {}", dir.display()))?;
        let mut subs: Vec<(u64, PathBuf)> = Vec::new();
        for e in entries {
            let path = e?.path();
            if path.is_dir() {
                if let Some(k) = annotator_number(&path) {
                    subs.push((k, path));
                }
            }
        }
        if subs.is_empty() {
            out.push(dir.clone());
        } else {
            subs.sort();
            out.extend(subs.into_iter().map(|(_, p)| p));
        }
    }
    Ok(out)
}

fn load_fronts(dir: &Path, manifest: &Manifest) -> Result<BTreeMap<String, FrontMask>> {
    manifest
        .iter()
        .map(|m| {
            let f = load_front_mask(dir.join(format!("{}.png", m.id)), FRONT_THRESHOLD)
                .with_context(|| format!("scene {}", m.id))?;
            Ok((m.id.clone(), f))
        })
        .collect()
}

pub fn load_sites(catchments: &Path, seeds: &Path, manifest: &Manifest) -> Result<BTreeMap<String, FusionSite>> {
    let seeds = load_seeds(seeds)?;
    let mut sites = BTreeMap::new();
    for m in manifest.iter() {
        let &(seed, sentinel) = seeds
            .get(&m.id)
            .with_context(|| format!("scene {}: no seed in the seeds file", m.id))?;
        let catchment = load_catchment(catchments.join(format!("{}.png", m.id)))
            .with_context(|| format!("scene {}", m.id))?;
        sites.insert(m.id.clone(), FusionSite { catchment, seed, sentinel });
    }
    Ok(sites)
}

pub fn run_fuse(opts: &FuseOptions) -> Result<FuseOutcome> {
    let manifest = load_manifest(&opts.manifest)?;
    ensure!(!manifest.is_empty(), "manifest {} lists no scenes", opts.manifest.display());
    let dirs = expand_annotator_dirs(&opts.annotator_dirs)?;
    ensure!(dirs.len() >= 2, "fusion needs at least 2 annotators, found {}", dirs.len());
    let mut annotators = Vec::with_capacity(dirs.len());
    for (k, dir) in dirs.iter().enumerate() {
        let fronts = load_fronts(dir, &manifest).with_context(|| format!("annotator {}", dir.display()))?;
        annotators.push(Annotator { id: format!("#{}", k + 1), fronts });
    }
    let set = AnnotatorSet::new(annotators)?;
    let sites = load_sites(&opts.catchments, &opts.seeds, &manifest)?;

    let table = leave_one_out(&set, &manifest, &sites, &opts.params)?;
    let aggregates = aggregate_all(&set, &manifest, &sites, &opts.params)?;

    let agg_dir = opts.out.join("aggregate");
    fs::create_dir_all(&agg_dir).with_context(|| format!("creating {}", agg_dir.display()))?;
    for (id, fused) in &aggregates {
        write_front_mask(agg_dir.join(format!("{id}.png")), &fused.front)?;
    }

    let predictions = match &opts.predictions {
        Some(dir) => {
            let preds = load_fronts(dir, &manifest).with_context(|| format!("predictions {}", dir.display()))?;
            Some(score_against_aggregate(&preds, &aggregates, &manifest, &sites, &opts.params)?)
        }
        None => None,
    };

    let mut breakdown = table.table(&manifest, &TABLE_KEYS)?;
    if let Some(report) = &predictions {
        let extra = frontkit::metrics::breakdown("annotator", &[("predictions".to_string(), report)], &manifest, &TABLE_KEYS)?;
        breakdown.rows.extend(extra.rows);
    }
    write(&opts.out.join("leave_one_out.csv"), &breakdown.to_csv())?;
    write(&opts.out.join("leave_one_out.md"), &breakdown.to_markdown())?;

    let mut map = String::from("label,path\n");
    for (k, d) in dirs.iter().enumerate() {
        map.push_str(&format!("#{},{}\n", k + 1, d.display()));
    }
    write(&opts.out.join("annotators.csv"), &map)?;

    let mut warnings = String::from("kind,annotator,scene\n");
    for (a, s) in &table.leaks {
        warnings.push_str(&format!("leak,{a},{s}\n"));
    }
    for (a, s) in &table.missing_reference {
        warnings.push_str(&format!("no_reference,{a},{s}\n"));
    }
    for (id, fused) in &aggregates {
        for &i in &fused.leaked {
            warnings.push_str(&format!("leak_in_aggregate,#{},{id}\n", i + 1));
        }
    }
    write(&opts.out.join("warnings.csv"), &warnings)?;

    Ok(FuseOutcome { annotators: dirs, table, predictions, breakdown })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_with_and_without_sentinel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("seeds.csv");
        fs::write(&p, "scene_id,row,col,sentinel_row,sentinel_col\na,1,2,3,4\nb,5,6,,\n").unwrap();
        let s = load_seeds(&p).unwrap();
        assert_eq!(s["a"], ((1, 2), Some((3, 4))));
        assert_eq!(s["b"], ((5, 6), None));
        fs::write(&p, "scene_id,row,col,sentinel_row,sentinel_col\na,1,2,3,\n").unwrap();
        assert!(load_seeds(&p).is_err());
    }

    #[test]
    fn annotator_subdirs_sorted_numerically() {
        let dir = tempfile::tempdir().unwrap();
        for k in [10, 2, 1] {
            fs::create_dir(dir.path().join(format!("annotator_{k}"))).unwrap();
        }
        fs::create_dir(dir.path().join("other")).unwrap();
        let got = expand_annotator_dirs(&[dir.path().to_path_buf()]).unwrap();
        let names: Vec<_> = got.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, ["annotator_1", "annotator_2", "annotator_10"]);
        let plain = dir.path().join("other");
        assert_eq!(expand_annotator_dirs(std::slice::from_ref(&plain)).unwrap(), vec![plain]);
    }
}
