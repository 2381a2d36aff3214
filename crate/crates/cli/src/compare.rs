//! Rank statistics over groups of evaluation runs.
//!
//! A group is a set of report files (one per training run). Each report
//! contributes one value: its MDE or its no-front count.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context, Result};
use frontkit::metrics::{EvalReport, ReportFile};
use frontkit::stats::{
    adjust_p, bonferroni, cohens_d, format_p, kendall_tau, kruskal_wallis, mann_whitney_u, Alternative, Sample,
    StatResult,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestChoice {
    KruskalWallis,
    MannWhitney,
    Kendall,
    CohenD,
}

impl FromStr for TestChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "kw" => Ok(TestChoice::KruskalWallis),
            "mwu" => Ok(TestChoice::MannWhitney),
            "kendall" => Ok(TestChoice::Kendall),
            "cohend" => Ok(TestChoice::CohenD),
            _ => Err(format!("test must be kw, mwu, kendall or cohend, got '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RunMetric {
    #[default]
    Mde,
    NoFront,
}

impl FromStr for RunMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mde" => Ok(RunMetric::Mde),
            "nofront" => Ok(RunMetric::NoFront),
            _ => Err(format!("metric must be 'mde' or 'nofront', got '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunGroup {
    pub label: String,
    /// Per-group value used as the x variable of Kendall's tau.
    pub covariate: Option<f64>,
    pub reports: Vec<PathBuf>,
}

impl FromStr for RunGroup {
    type Err = String;

    /// `LABEL=PATH[,PATH...]` or a single path labeled by its file stem.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (label, paths) = match s.split_once('=') {
            Some((l, p)) => (l.to_string(), p),
            None => {
                let stem = Path::new(s)
                    .file_stem()
                    .and_then(|x| x.to_str())
                    .ok_or_else(|| format!("cannot label report '{s}'"))?;
                (stem.to_string(), s)
            }
        };
        let reports: Vec<PathBuf> = paths.split(',').filter(|p| !p.is_empty()).map(PathBuf::from).collect();
        if label.is_empty() || reports.is_empty() {
            return Err(format!("expected LABEL=PATH[,PATH...], got '{s}'"));
        }
        Ok(RunGroup { label, covariate: None, reports })
    }
}

#[derive(Deserialize)]
struct GroupingRow {
    report: PathBuf,
    group: String,
    #[serde(default)]
    covariate: Option<f64>,
}

/// `report,group[,covariate]`; relative paths resolve against the CSV's
/// directory and groups keep their first-appearance order.
pub fn load_grouping(path: &Path) -> Result<Vec<RunGroup>> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut groups: Vec<RunGroup> = Vec::new();
    for (i, rec) in rdr.deserialize::<GroupingRow>().enumerate() {
        let rec = rec.with_context(|| format!("{}: line {}", path.display(), i + 2))?;
        let report = if rec.report.is_absolute() { rec.report } else { base.join(rec.report) };
        match groups.iter_mut().find(|g| g.label == rec.group) {
            Some(g) => {
                if g.covariate != rec.covariate {
                    bail!("{}: group '{}' has inconsistent covariates", path.display(), g.label);
                }
                g.reports.push(report);
            }
            None => groups.push(RunGroup { label: rec.group, covariate: rec.covariate, reports: vec![report] }),
        }
    }
    Ok(groups)
}

pub fn load_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ReportFile =
        serde_json::from_str(&text).with_context(|| format!("{}: not a report file", path.display()))?;
    file.to_report()
        .map_err(|e| anyhow!("{}: incompatible report: {e}", path.display()))
}

fn run_value(report: &EvalReport, metric: RunMetric, path: &Path) -> Result<f64> {
    match metric {
        RunMetric::Mde => report
            .mde_m
            .ok_or_else(|| anyhow!("{}: no front predicted in any scene, MDE undefined", path.display())),
        RunMetric::NoFront => Ok(report.no_front_count as f64),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareOptions {
    pub groups: Vec<RunGroup>,
    pub test: TestChoice,
    pub alternative: Alternative,
    pub bonferroni_m: Option<usize>,
    pub metric: RunMetric,
    pub alpha: f64,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub test: String,
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub statistic: f64,
    pub df: Option<u32>,
    pub p_value: Option<f64>,
    pub p_adjusted: Option<f64>,
    pub alpha_adjusted: Option<f64>,
    pub significant: Option<bool>,
    pub method: String,
    pub effect_size: Option<f64>,
    pub summary: String,
}

#[allow(clippy::too_many_arguments)]
fn tested_row(
    name: &str,
    a: &str,
    b: &str,
    (n_a, n_b): (usize, usize),
    r: &StatResult,
    m: usize,
    alpha: f64,
    effect: Option<f64>,
) -> Result<CompareRow> {
    let level = bonferroni(alpha, m)?;
    let adjusted = adjust_p(r.p_value, m)?;
    let mut summary = r.to_string();
    if m > 1 {
        let rel = if r.p_value < level { "<" } else { ">=" };
        summary.push_str(&format!(" {rel} {}", format_p(level)));
    }
    Ok(CompareRow {
        test: name.to_string(),
        group_a: a.to_string(),
        group_b: b.to_string(),
        n_a,
        n_b,
        statistic: r.statistic,
        df: r.df,
        p_value: Some(r.p_value),
        p_adjusted: Some(adjusted),
        alpha_adjusted: Some(level),
        significant: Some(r.p_value < level),
        method: format!("{:?}", r.method),
        effect_size: effect,
        summary,
    })
}

pub fn compare(opts: &CompareOptions) -> Result<Vec<CompareRow>> {
    ensure!(opts.groups.len() >= 2, "compare needs at least 2 groups, got {}", opts.groups.len());
    ensure!(opts.alpha > 0.0 && opts.alpha < 1.0, "alpha must lie in (0, 1)");
    let mut values: Vec<Sample> = Vec::with_capacity(opts.groups.len());
    for g in &opts.groups {
        let mut v = Vec::with_capacity(g.reports.len());
        for p in &g.reports {
            v.push(run_value(&load_report(p)?, opts.metric, p)?);
        }
        values.push(Sample::new(v).with_context(|| format!("group '{}'", g.label))?);
    }
    let label = |i: usize| opts.groups[i].label.as_str();
    let pairwise = opts.groups.len() - 1;
    let m = opts.bonferroni_m.unwrap_or(pairwise);
    let mut rows = Vec::new();
    match opts.test {
        TestChoice::KruskalWallis => {
            let r = kruskal_wallis(&values)?;
            let n = values.iter().map(Sample::len).sum();
            rows.push(tested_row("kw", "*", "*", (n, 0), &r, opts.bonferroni_m.unwrap_or(1), opts.alpha, None)?);
        }
        TestChoice::MannWhitney => {
            for j in 1..values.len() {
                let r = mann_whitney_u(&values[0], &values[j], opts.alternative)?;
                let d = cohens_d(&values[0], &values[j]).ok();
                let sizes = (values[0].len(), values[j].len());
                rows.push(tested_row("mwu", label(0), label(j), sizes, &r, m, opts.alpha, d)?);
            }
        }
        TestChoice::CohenD => {
            for j in 1..values.len() {
                let d = cohens_d(&values[0], &values[j])?;
                rows.push(CompareRow {
                    test: "cohend".into(),
                    group_a: label(0).into(),
                    group_b: label(j).into(),
                    n_a: values[0].len(),
                    n_b: values[j].len(),
                    statistic: d,
                    df: None,
                    p_value: None,
                    p_adjusted: None,
                    alpha_adjusted: None,
                    significant: None,
                    method: "PooledSd".into(),
                    effect_size: Some(d),
                    summary: format!("d = {d:.3}"),
                });
            }
        }
        TestChoice::Kendall => {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (g, v) in opts.groups.iter().zip(&values) {
                let c = g
                    .covariate
                    .ok_or_else(|| anyhow!("kendall needs a covariate for group '{}' (use --grouping)", g.label))?;
                x.extend(std::iter::repeat_n(c, v.len()));
                y.extend_from_slice(v.values());
            }
            let n = x.len();
            let r = kendall_tau(&Sample::new(x)?, &Sample::new(y)?)?;
            rows.push(tested_row("kendall", "covariate", "metric", (n, n), &r, opts.bonferroni_m.unwrap_or(1), opts.alpha, None)?);
        }
    }
    Ok(rows)
}

pub fn rows_csv(rows: &[CompareRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

pub fn run_compare(opts: &CompareOptions) -> Result<Vec<CompareRow>> {
    let rows = compare(opts)?;
    if let Some(out) = &opts.out {
        fs::write(out, rows_csv(&rows)?).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_syntax() {
        let g: RunGroup = "best=a.json,b.json".parse().unwrap();
        assert_eq!(g.label, "best");
        assert_eq!(g.reports.len(), 2);
        let g: RunGroup = "runs/r1.json".parse().unwrap();
        assert_eq!(g.label, "r1");
        assert!("x=".parse::<RunGroup>().is_err());
    }

    #[test]
    fn test_tokens() {
        assert_eq!("kw".parse::<TestChoice>().unwrap(), TestChoice::KruskalWallis);
        assert!("t".parse::<TestChoice>().is_err());
        assert_eq!("nofront".parse::<RunMetric>().unwrap(), RunMetric::NoFront);
    }
}
