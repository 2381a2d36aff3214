//! Rendering of a stored report as subset tables.

use std::path::Path;
use std::str::FromStr;

use anyhow::{ensure, Result};
use frontkit::geodata::load_manifest;
use frontkit::metrics::{breakdown, subset_csv, subset_markdown, subset_report, GroupBy};

use crate::compare::load_report;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            _ => Err(format!("format must be 'csv' or 'md', got '{s}'")),
        }
    }
}

/// Parses `season` or a comma list such as `season,glacier,sensor`.
pub fn parse_group_keys(s: &str) -> Result<Vec<GroupBy>> {
    let keys = s
        .split(',')
        .map(|k| k.trim().parse::<GroupBy>())
        .collect::<frontkit::Result<Vec<_>>>()?;
    ensure!(!keys.is_empty(), "no group key given");
    Ok(keys)
}

/// One key gives a row per group with counts; several keys give a single
/// wide row with `All` and one column per group.
pub fn render(report: &Path, manifest: &Path, keys: &[GroupBy], format: Format) -> Result<String> {
    let report = load_report(report)?;
    let manifest = load_manifest(manifest)?;
    if let [key] = keys {
        let rows = subset_report(&report, &manifest, *key)?;
        return Ok(match format {
            Format::Csv => subset_csv(&rows, *key),
            Format::Markdown => subset_markdown(&rows, *key),
        });
    }
    let table = breakdown("run", &[("report".to_string(), &report)], &manifest, keys)?;
    Ok(match format {
        Format::Csv => table.to_csv(),
        Format::Markdown => table.to_markdown(),
    })
}
