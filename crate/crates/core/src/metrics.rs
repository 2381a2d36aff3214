//! Mean Distance Error between predicted and reference calving fronts.
//!
//! For every image with a predicted front the symmetric sum of
//! nearest-neighbor distances between the reference pixels `P` and the
//! predicted pixels `Q` is accumulated, and the total is divided by the total
//! `|P| + |Q|` over those images. The normalization is global: it is not the
//! mean of per-image errors. Images without predicted front pixels are left
//! out of both sums and counted separately.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{FrontMask, Manifest, SceneMeta};
use crate::morph::distance_transform;

/// Distance terms of one (reference, prediction) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenePairResult {
    pub id: String,
    /// Sum of both directed nearest-distance sums, in meters.
    pub numerator_m: f64,
    /// `|P| + |Q|`; zero when nothing was predicted.
    pub weight: u64,
    pub predicted_empty: bool,
    pub truth_px: u64,
    pub pred_px: u64,
}

impl ScenePairResult {
    /// Per-image error, absent when nothing was predicted.
    pub fn mde_m(&self) -> Option<f64> {
        (!self.predicted_empty).then(|| self.numerator_m / self.weight as f64)
    }
}

/// Nearest-distance sum from every pixel of `from` to the set `to`, in px.
fn directed_sum(from: &FrontMask, to: &FrontMask) -> f64 {
    let dt = distance_transform(&to.to_grid());
    from.pixels().iter().map(|&(r, c)| dt.at(r, c)).sum()
}

pub fn pair_distance_terms(
    id: impl Into<String>,
    truth: &FrontMask,
    pred: &FrontMask,
    resolution_m: f64,
) -> Result<ScenePairResult> {
    truth.ensure_dims(pred.dims())?;
    if !(resolution_m.is_finite() && resolution_m > 0.0) {
        return Err(Error::invalid(format!(
            "resolution must be positive, got {resolution_m}"
        )));
    }
    if truth.is_empty() {
        return Err(Error::GroundTruthMissing);
    }
    let truth_px = truth.len() as u64;
    let pred_px = pred.len() as u64;
    if pred.is_empty() {
        return Ok(ScenePairResult {
            id: id.into(),
            numerator_m: 0.0,
            weight: 0,
            predicted_empty: true,
            truth_px,
            pred_px,
        });
    }
    // per-image conversion to meters before any cross-image sum
    let numerator_px = directed_sum(truth, pred) + directed_sum(pred, truth);
    Ok(ScenePairResult {
        id: id.into(),
        numerator_m: numerator_px * resolution_m,
        weight: truth_px + pred_px,
        predicted_empty: false,
        truth_px,
        pred_px,
    })
}

/// Globally normalized aggregate over a set of scenes.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub scenes: Vec<ScenePairResult>,
    /// Absent when no scene has a predicted front.
    pub mde_m: Option<f64>,
    pub no_front_count: usize,
}

pub fn mde(results: Vec<ScenePairResult>) -> EvalReport {
    let (num, weight, empty) = results.iter().fold((0.0, 0u64, 0usize), |(n, w, e), s| {
        if s.predicted_empty {
            (n, w, e + 1)
        } else {
            (n + s.numerator_m, w + s.weight, e)
        }
    });
    EvalReport {
        mde_m: (weight > 0).then(|| num / weight as f64),
        no_front_count: empty,
        scenes: results,
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: String,
    pub mde_m: Option<f64>,
    pub truth_px: u64,
    pub pred_px: u64,
    pub numerator_m: f64,
}

/// JSON form of an [`EvalReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub scenes: Vec<SceneRecord>,
    pub mde_m: Option<f64>,
    pub no_front_count: usize,
}

impl From<&EvalReport> for ReportFile {
    fn from(r: &EvalReport) -> Self {
        ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            scenes: r
                .scenes
                .iter()
                .map(|s| SceneRecord {
                    id: s.id.clone(),
                    mde_m: s.mde_m(),
                    truth_px: s.truth_px,
                    pred_px: s.pred_px,
                    numerator_m: s.numerator_m,
                })
                .collect(),
            mde_m: r.mde_m,
            no_front_count: r.no_front_count,
        }
    }
}

impl ReportFile {
    pub fn to_report(&self) -> Result<EvalReport> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "report schema version {} is not supported (expected {})",
                self.schema_version, REPORT_SCHEMA_VERSION
            )));
        }
        let scenes = self
            .scenes
            .iter()
            .map(|s| {
                let predicted_empty = s.mde_m.is_none();
                ScenePairResult {
                    id: s.id.clone(),
                    numerator_m: s.numerator_m,
                    weight: if predicted_empty { 0 } else { s.truth_px + s.pred_px },
                    predicted_empty,
                    truth_px: s.truth_px,
                    pred_px: s.pred_px,
                }
            })
            .collect();
        Ok(mde(scenes))
    }
}

/// Subset key for breakdown tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupBy {
    All,
    Season,
    Glacier,
    Sensor,
    /// Resolution rounded to whole meters.
    ResolutionClass,
}

impl std::str::FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(GroupBy::All),
            "season" => Ok(GroupBy::Season),
            "glacier" => Ok(GroupBy::Glacier),
            "sensor" => Ok(GroupBy::Sensor),
            "resolution" => Ok(GroupBy::ResolutionClass),
            other => Err(Error::invalid(format!("unknown group key '{other}'"))),
        }
    }
}

impl GroupBy {
    pub fn key(self, meta: &SceneMeta) -> String {
        match self {
            GroupBy::All => "All".to_string(),
            GroupBy::Season => meta.season.token().to_string(),
            GroupBy::Glacier => meta.glacier.clone(),
            GroupBy::Sensor => meta.sensor.token().to_string(),
            GroupBy::ResolutionClass => format!("{}", meta.resolution_m.round() as i64),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupBy::All => "all",
            GroupBy::Season => "season",
            GroupBy::Glacier => "glacier",
            GroupBy::Sensor => "sensor",
            GroupBy::ResolutionClass => "resolution",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetRow {
    pub group: String,
    pub mde_m: Option<f64>,
    pub no_front_count: usize,
    pub scenes: usize,
}

/// Recomputes the global normalization within each group; rows are sorted
/// by group key.
pub fn subset_report(report: &EvalReport, manifest: &Manifest, group_by: GroupBy) -> Result<Vec<SubsetRow>> {
    let mut groups: BTreeMap<String, Vec<ScenePairResult>> = BTreeMap::new();
    for s in &report.scenes {
        let meta = manifest
            .get(&s.id)
            .ok_or_else(|| Error::invalid(format!("scene '{}' is not in the manifest", s.id)))?;
        groups.entry(group_by.key(meta)).or_default().push(s.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(group, scenes)| {
            let n = scenes.len();
            let r = mde(scenes);
            SubsetRow {
                group,
                mde_m: r.mde_m,
                no_front_count: r.no_front_count,
                scenes: n,
            }
        })
        .collect())
}

/// Table cell for an optional error; `/` when no front was predicted.
pub fn format_mde(mde_m: Option<f64>) -> String {
    match mde_m {
        Some(v) => format!("{v:.1}"),
        None => "/".to_string(),
    }
}

pub fn subset_csv(rows: &[SubsetRow], group_by: GroupBy) -> String {
    let mut out = format!("{},mde_m,no_front_count,scenes\n", group_by.name());
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.group,
            r.mde_m.map_or("/".to_string(), |v| v.to_string()),
            r.no_front_count,
            r.scenes
        ));
    }
    out
}

/// Markdown table with columns padded to a common width.
pub fn subset_markdown(rows: &[SubsetRow], group_by: GroupBy) -> String {
    let header = [group_by.name(), "MDE (m)", "no front", "scenes"].map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.group.clone(),
                format_mde(r.mde_m),
                r.no_front_count.to_string(),
                r.scenes.to_string(),
            ]
        })
        .collect();
    markdown_table(&header, &body)
}

/// First column left-aligned, the rest right-aligned.
pub fn markdown_table(header: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count().max(3)).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        format!("| {} |\n", parts.join(" | "))
    };
    let mut out = line(header);
    let rule: Vec<String> = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| if i == 0 { format!(":{}", "-".repeat(w - 1)) } else { format!("{}:", "-".repeat(w - 1)) })
        .collect();
    out.push_str(&format!("| {} |\n", rule.join(" | ")));
    for row in body {
        out.push_str(&line(row));
    }
    out
}

/// One row per named report, one column per subset: `All` first, then every
/// group of each requested key in sorted order.
#[derive(Clone, Debug, PartialEq)]
pub struct BreakdownTable {
    /// Label of the first column.
    pub label: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

pub fn breakdown(
    label: &str,
    reports: &[(String, &EvalReport)],
    manifest: &Manifest,
    keys: &[GroupBy],
) -> Result<BreakdownTable> {
    let mut columns = vec![(GroupBy::All, "All".to_string())];
    for &g in keys.iter().filter(|&&g| g != GroupBy::All) {
        let groups: std::collections::BTreeSet<String> = manifest.iter().map(|m| g.key(m)).collect();
        columns.extend(groups.into_iter().map(|k| (g, k)));
    }
    let mut rows = Vec::with_capacity(reports.len());
    for (name, report) in reports {
        let mut subsets: BTreeMap<GroupBy, Vec<SubsetRow>> = BTreeMap::new();
        let mut values = Vec::with_capacity(columns.len());
        for (g, k) in &columns {
            if !subsets.contains_key(g) {
                subsets.insert(*g, subset_report(report, manifest, *g)?);
            }
            values.push(subsets[g].iter().find(|s| &s.group == k).and_then(|s| s.mde_m));
        }
        rows.push((name.clone(), values));
    }
    Ok(BreakdownTable {
        label: label.to_string(),
        columns: columns.into_iter().map(|(_, k)| k).collect(),
        rows,
    })
}

impl BreakdownTable {
    /// Column-wise mean over the rows that have a value.
    pub fn column_means(&self) -> Vec<Option<f64>> {
        (0..self.columns.len())
            .map(|i| {
                let v: Vec<f64> = self.rows.iter().filter_map(|(_, r)| r[i]).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect()
    }

    fn header(&self) -> Vec<String> {
        std::iter::once(self.label.clone()).chain(self.columns.iter().cloned()).collect()
    }

    /// Full precision, `/` for missing cells.
    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for (name, values) in &self.rows {
            out.push_str(name);
            for v in values {
                out.push(',');
                out.push_str(&v.map_or("/".to_string(), |x| x.to_string()));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(name, values)| {
                std::iter::once(name.clone())
                    .chain(values.iter().map(|&v| format_mde(v)))
                    .collect()
            })
            .collect();
        markdown_table(&self.header(), &body)
    }
}
