//! Multi-annotator front fusion and leave-one-out agreement.
//!
//! Each annotated front is turned into an ocean mask by flood filling from a
//! seed with the front and the catchment acting as barriers. Ocean masks are
//! combined by a per-pixel vote, the coastline of the voted ocean is taken,
//! and the part of it inside the buffered catchment plus any too-short
//! fragment is removed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::frontops::{apply_catchment, filter_short_fronts, LengthMetric, LengthPolicy};
use crate::geodata::{CatchmentMask, FrontMask, Manifest};
use crate::grid::{neighbors, BinaryGrid, Grid, N4};
use crate::metrics::{breakdown, mde, pair_distance_terms, BreakdownTable, EvalReport, GroupBy};
use crate::morph::{erode_with, Border, StructuringElement};

#[derive(Clone, Debug, PartialEq)]
pub struct Annotator {
    pub id: String,
    /// Front per scene id.
    pub fronts: BTreeMap<String, FrontMask>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotatorSet {
    annotators: Vec<Annotator>,
}

impl AnnotatorSet {
    pub fn new(annotators: Vec<Annotator>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for a in &annotators {
            if !ids.insert(a.id.as_str()) {
                return Err(Error::invalid(format!("duplicate annotator id '{}'", a.id)));
            }
        }
        Ok(AnnotatorSet { annotators })
    }

    pub fn count(&self) -> usize {
        self.annotators.len()
    }

    pub fn annotators(&self) -> &[Annotator] {
        &self.annotators
    }

    /// Fronts of every annotator for one scene, in annotator order.
    pub fn scene(&self, scene_id: &str) -> Result<Vec<&FrontMask>> {
        let fronts: Vec<&FrontMask> = self
            .annotators
            .iter()
            .map(|a| {
                a.fronts.get(scene_id).ok_or_else(|| {
                    Error::invalid(format!("annotator '{}' lacks scene '{scene_id}'", a.id))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = fronts.first() {
            for f in &fronts[1..] {
                f.ensure_dims(first.dims())?;
            }
        }
        Ok(fronts)
    }
}

/// Per-scene inputs that turn a front into an ocean area.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionSite {
    pub catchment: CatchmentMask,
    /// Ocean pixel the flood fill starts from.
    pub seed: (usize, usize),
    /// Optional pixel on the glacier side; reaching it flags a leak.
    pub sentinel: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OceanFill {
    pub ocean: BinaryGrid,
    /// The fill reached the sentinel: front and catchment do not separate
    /// ocean from land.
    pub leaked: bool,
}

/// Pixels 4-reachable from the seed without crossing a front pixel or
/// entering the catchment.
pub fn ocean_mask_from_front(
    front: &FrontMask,
    catchment: &CatchmentMask,
    seed: (usize, usize),
    sentinel: Option<(usize, usize)>,
) -> Result<OceanFill> {
    front.ensure_dims(catchment.dims())?;
    let (w, h) = catchment.dims();
    if seed.0 >= h || seed.1 >= w {
        return Err(Error::invalid(format!("seed {seed:?} outside {w}x{h} raster")));
    }
    if front.contains(seed.0, seed.1) {
        return Err(Error::invalid(format!("seed {seed:?} lies on the front")));
    }
    if catchment.at(seed.0, seed.1) {
        return Err(Error::invalid(format!("seed {seed:?} lies inside the catchment")));
    }
    let barrier = Grid::from_fn(w, h, |r, c| catchment.at(r, c) || front.contains(r, c));
    let mut ocean = BinaryGrid::empty(w, h);
    let mut queue = VecDeque::from([seed]);
    ocean.set(seed.0, seed.1, true);
    while let Some((r, c)) = queue.pop_front() {
        for (nr, nc) in neighbors(w, h, r, c, &N4) {
            if !barrier.at(nr, nc) && !ocean.at(nr, nc) {
                ocean.set(nr, nc, true);
                queue.push_back((nr, nc));
            }
        }
    }
    let leaked = sentinel.is_some_and(|(r, c)| r < h && c < w && ocean.at(r, c));
    Ok(OceanFill { ocean, leaked })
}

/// `true` where at least `threshold` masks are set.
pub fn majority_vote(oceans: &[BinaryGrid], threshold: usize) -> Result<BinaryGrid> {
    let first = oceans
        .first()
        .ok_or_else(|| Error::invalid("majority vote needs at least one mask"))?;
    if threshold == 0 || threshold > oceans.len() {
        return Err(Error::invalid(format!(
            "vote threshold {threshold} outside 1..={}",
            oceans.len()
        )));
    }
    for o in &oceans[1..] {
        first.ensure_same_dims(o)?;
    }
    let mut counts = vec![0usize; first.len()];
    for o in oceans {
        for (n, &b) in counts.iter_mut().zip(o.as_slice()) {
            *n += b as usize;
        }
    }
    Grid::from_vec(
        first.width(),
        first.height(),
        counts.into_iter().map(|n| n >= threshold).collect(),
    )
}

/// `ocean \ erode(ocean)`. The ocean is taken to continue past the raster
/// edge, so the frame itself is never coastline.
pub fn coastline_from_ocean(ocean: &BinaryGrid, se: &StructuringElement) -> BinaryGrid {
    ocean.and_not(&erode_with(ocean, se, Border::Foreground))
}

/// Vote threshold: `Auto` is `ceil(n / 2)` for `n` voters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoteThreshold {
    Auto,
    Fixed(usize),
}

impl VoteThreshold {
    pub fn resolve(self, voters: usize) -> Result<usize> {
        let t = match self {
            VoteThreshold::Auto => voters.div_ceil(2),
            VoteThreshold::Fixed(k) => k,
        };
        if t == 0 || t > voters {
            return Err(Error::invalid(format!(
                "vote threshold {t} impossible with {voters} annotators"
            )));
        }
        Ok(t)
    }
}

impl std::str::FromStr for VoteThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(VoteThreshold::Auto);
        }
        s.parse()
            .map(VoteThreshold::Fixed)
            .map_err(|_| Error::invalid(format!("threshold must be 'auto' or an integer, got '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoteParams {
    pub threshold: VoteThreshold,
    pub erosion_se: StructuringElement,
    pub buffer_m: f64,
    pub min_front_m: f64,
    pub length_metric: LengthMetric,
}

impl Default for VoteParams {
    fn default() -> Self {
        VoteParams {
            threshold: VoteThreshold::Auto,
            erosion_se: StructuringElement::Square(3),
            buffer_m: 120.0,
            min_front_m: 750.0,
            length_metric: LengthMetric::PixelCount,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedFront {
    pub front: FrontMask,
    /// Indices of inputs whose ocean fill leaked.
    pub leaked: Vec<usize>,
}

/// Ocean per annotation, vote, coastline, catchment removal and short-front
/// removal.
pub fn aggregate_front(
    fronts: &[&FrontMask],
    site: &FusionSite,
    params: &VoteParams,
    resolution_m: f64,
) -> Result<FusedFront> {
    params.erosion_se.validate()?;
    let threshold = params.threshold.resolve(fronts.len())?;
    let mut oceans = Vec::with_capacity(fronts.len());
    let mut leaked = Vec::new();
    for (i, f) in fronts.iter().enumerate() {
        let fill = ocean_mask_from_front(f, &site.catchment, site.seed, site.sentinel)?;
        if fill.leaked {
            leaked.push(i);
        }
        oceans.push(fill.ocean);
    }
    let ocean = majority_vote(&oceans, threshold)?;
    let coast = FrontMask::from_grid(&coastline_from_ocean(&ocean, &params.erosion_se));
    let front = apply_catchment(&coast, &site.catchment, params.buffer_m, resolution_m)?;
    let policy = LengthPolicy::new(params.length_metric, params.min_front_m)?;
    let front = filter_short_fronts(&front, &policy, resolution_m)?;
    Ok(FusedFront { front, leaked })
}

/// A single annotation run through the same pipeline, so it can be compared
/// with an aggregate on equal terms.
pub fn post_process_single(
    front: &FrontMask,
    site: &FusionSite,
    params: &VoteParams,
    resolution_m: f64,
) -> Result<FusedFront> {
    let single = VoteParams {
        threshold: VoteThreshold::Fixed(1),
        ..*params
    };
    aggregate_front(&[front], site, &single, resolution_m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LooRow {
    pub annotator: String,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LooTable {
    pub rows: Vec<LooRow>,
    /// `(annotator, scene)` pairs whose ocean fill leaked.
    pub leaks: Vec<(String, String)>,
    /// Scenes skipped for an annotator because the aggregate of the others
    /// had no front: `(annotator, scene)`.
    pub missing_reference: Vec<(String, String)>,
}

impl LooTable {
    /// Mean of the per-annotator errors over annotators that have one.
    pub fn mean_mde(&self) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter_map(|r| r.report.mde_m).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Rows `#1..#N` followed by `Mean`.
    pub fn table(&self, manifest: &Manifest, group_keys: &[GroupBy]) -> Result<BreakdownTable> {
        let named: Vec<(String, &EvalReport)> =
            self.rows.iter().map(|r| (r.annotator.clone(), &r.report)).collect();
        let mut table = breakdown("annotator", &named, manifest, group_keys)?;
        let mean = table.column_means();
        table.rows.push(("Mean".to_string(), mean));
        Ok(table)
    }
}

fn site_for<'a>(sites: &'a BTreeMap<String, FusionSite>, id: &str) -> Result<&'a FusionSite> {
    sites
        .get(id)
        .ok_or_else(|| Error::invalid(format!("no catchment/seed for scene '{id}'")))
}

/// Scores each annotator against the aggregate of all the others.
///
/// The held-out annotator is post-processed alone through the same pipeline.
/// With `VoteThreshold::Auto` the remaining `n - 1` annotators vote with
/// threshold `ceil((n - 1) / 2)`.
pub fn leave_one_out(
    annotations: &AnnotatorSet,
    scenes: &Manifest,
    sites: &BTreeMap<String, FusionSite>,
    params: &VoteParams,
) -> Result<LooTable> {
    let n = annotations.count();
    if n < 2 {
        return Err(Error::invalid(format!(
            "leave-one-out needs at least 2 annotators, got {n}"
        )));
    }
    let mut per_annotator: Vec<Vec<_>> = vec![Vec::new(); n];
    let mut leaks = BTreeSet::new();
    let mut missing = Vec::new();
    for meta in scenes.iter() {
        let site = site_for(sites, &meta.id)?;
        let fronts = annotations.scene(&meta.id)?;
        for held in 0..n {
            let annotator = &annotations.annotators()[held].id;
            let others: Vec<&FrontMask> = fronts
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != held)
                .map(|(_, f)| *f)
                .collect();
            let reference = aggregate_front(&others, site, params, meta.resolution_m)?;
            for i in reference.leaked {
                let idx = if i >= held { i + 1 } else { i };
                leaks.insert((annotations.annotators()[idx].id.clone(), meta.id.clone()));
            }
            let own = post_process_single(fronts[held], site, params, meta.resolution_m)?;
            if !own.leaked.is_empty() {
                leaks.insert((annotator.clone(), meta.id.clone()));
            }
            if reference.front.is_empty() {
                missing.push((annotator.clone(), meta.id.clone()));
                continue;
            }
            per_annotator[held].push(pair_distance_terms(
                meta.id.clone(),
                &reference.front,
                &own.front,
                meta.resolution_m,
            )?);
        }
    }
    let rows = annotations
        .annotators()
        .iter()
        .zip(per_annotator)
        .map(|(a, scenes)| LooRow {
            annotator: a.id.clone(),
            report: mde(scenes),
        })
        .collect();
    Ok(LooTable {
        rows,
        leaks: leaks.into_iter().collect(),
        missing_reference: missing,
    })
}

/// Aggregate of all annotators per scene, keyed by scene id.
pub fn aggregate_all(
    annotations: &AnnotatorSet,
    scenes: &Manifest,
    sites: &BTreeMap<String, FusionSite>,
    params: &VoteParams,
) -> Result<BTreeMap<String, FusedFront>> {
    let mut out = BTreeMap::new();
    for meta in scenes.iter() {
        let site = site_for(sites, &meta.id)?;
        let fronts = annotations.scene(&meta.id)?;
        out.insert(
            meta.id.clone(),
            aggregate_front(&fronts, site, params, meta.resolution_m)?,
        );
    }
    Ok(out)
}

/// Scores predicted fronts against the aggregate of *all* annotators, after
/// running each prediction through the single-annotation pipeline.
pub fn score_against_aggregate(
    predictions: &BTreeMap<String, FrontMask>,
    aggregates: &BTreeMap<String, FusedFront>,
    scenes: &Manifest,
    sites: &BTreeMap<String, FusionSite>,
    params: &VoteParams,
) -> Result<EvalReport> {
    let mut results = Vec::new();
    for meta in scenes.iter() {
        let pred = predictions
            .get(&meta.id)
            .ok_or_else(|| Error::invalid(format!("prediction missing for scene '{}'", meta.id)))?;
        let reference = aggregates
            .get(&meta.id)
            .ok_or_else(|| Error::invalid(format!("aggregate missing for scene '{}'", meta.id)))?;
        if reference.front.is_empty() {
            continue;
        }
        let own = post_process_single(pred, site_for(sites, &meta.id)?, params, meta.resolution_m)?;
        results.push(pair_distance_terms(
            meta.id.clone(),
            &reference.front,
            &own.front,
            meta.resolution_m,
        )?);
    }
    Ok(mde(results))
}
