//! Synthetic glacier scenes with analytically known calving fronts.
//!
//! Each scene has glacier on the left and ocean on the right of a boundary
//! `b(r)` (first ocean column of row `r`), optional rock rows along the top
//! and an optional no-data corner at the bottom left. The reference front is
//! written from the closed form, then checked against the extraction
//! pipeline before anything is written.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use chrono::{Datelike, Days, NaiveDate};
use frontkit::frontops::{zones_to_front, LengthPolicy};
use frontkit::geodata::{
    write_bbox, write_binary, write_front_mask, write_manifest, write_zone_mask, BoundingBox, CatchmentMask,
    FrontMask, Manifest, Season, SceneMeta, Sensor, ZoneClass, ZoneMapping, ZoneMask,
};
use frontkit::grid::Grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    Vertical,
    Sinusoid { amplitude: f64, period: f64 },
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "vertical" {
            return Ok(Boundary::Vertical);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sinusoid", a, p] => {
                let amplitude: f64 = a.parse().map_err(|_| format!("bad amplitude '{a}'"))?;
                let period: f64 = p.parse().map_err(|_| format!("bad period '{p}'"))?;
                Ok(Boundary::Sinusoid { amplitude, period })
            }
            _ => Err(format!("expected 'vertical' or 'sinusoid:A:P', got '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub size: usize,
    pub boundary: Boundary,
    pub rock_rows: usize,
    pub na_corner: bool,
    pub resolution_m: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            size: 256,
            boundary: Boundary::Vertical,
            rock_rows: 0,
            na_corner: false,
            resolution_m: 10.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.size >= 16, "size must be at least 16 px, got {}", self.size);
        ensure!(
            self.resolution_m.is_finite() && self.resolution_m > 0.0,
            "resolution must be positive, got {}",
            self.resolution_m
        );
        ensure!(
            self.rock_rows < self.size / 2,
            "rock rows ({}) must stay below half the size",
            self.rock_rows
        );
        if let Boundary::Sinusoid { amplitude, period } = self.boundary {
            ensure!(
                amplitude >= 0.0 && amplitude < self.size as f64 / 2.0,
                "amplitude must lie in [0, size/2), got {amplitude}"
            );
            ensure!(period > 0.0, "period must be positive, got {period}");
        }
        let span_m = (self.size - self.rock_rows) as f64 * self.resolution_m;
        ensure!(
            span_m >= LengthPolicy::BENCHMARK_MIN_M,
            "front would span {span_m} m, below the {} m minimum",
            LengthPolicy::BENCHMARK_MIN_M
        );
        Ok(())
    }

    /// Pixels kept between the glacier part of the catchment and the
    /// leftmost boundary column.
    pub fn catchment_margin(&self) -> usize {
        (120.0 / self.resolution_m).ceil() as usize + 12
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthScene {
    pub meta: SceneMeta,
    /// First ocean column of each row; unused for rock rows.
    pub boundary: Vec<usize>,
    pub zones: ZoneMask,
    pub front: FrontMask,
    pub catchment: CatchmentMask,
    pub seed: (usize, usize),
    pub sentinel: (usize, usize),
}

fn boundary_columns(params: &SynthParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let s = params.size as f64;
    let base = rng.gen_range(0.375 * s..0.625 * s);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let (lo, hi) = (params.size / 4, 3 * params.size / 4);
    (0..params.size)
        .map(|r| {
            let x = match params.boundary {
                Boundary::Vertical => base,
                Boundary::Sinusoid { amplitude, period } => {
                    base + amplitude * (2.0 * PI * r as f64 / period + phase).sin()
                }
            };
            (x.round() as usize).clamp(lo, hi)
        })
        .collect()
}

pub fn shift_boundary(boundary: &[usize], shift: i64) -> Vec<usize> {
    let max = boundary.len() as i64 - 1;
    boundary
        .iter()
        .map(|&b| (b as i64 + shift).clamp(1, max) as usize)
        .collect()
}

/// Zone raster for a boundary; the no-data corner has side `na_side`.
pub fn scene_zones(size: usize, rock_rows: usize, na_side: usize, boundary: &[usize]) -> ZoneMask {
    Grid::from_fn(size, size, |r, c| {
        if r < rock_rows {
            ZoneClass::Rock
        } else if r + na_side >= size && c < na_side {
            ZoneClass::NA
        } else if c < boundary[r] {
            ZoneClass::Glacier
        } else {
            ZoneClass::Ocean
        }
    })
}

/// Ocean pixels 8-adjacent to glacier: in row `r` the columns from `b(r)` to
/// the largest boundary among the neighboring glacier rows.
pub fn analytic_front(size: usize, rock_rows: usize, boundary: &[usize]) -> FrontMask {
    let mut px = Vec::new();
    for r in rock_rows..size {
        let reach = (r.saturating_sub(1).max(rock_rows)..=(r + 1).min(size - 1))
            .map(|n| boundary[n])
            .max()
            .unwrap();
        px.extend((boundary[r]..=reach.min(size - 1)).map(|c| (r, c)));
    }
    FrontMask::new(size, size, px).expect("front lies inside the raster")
}

fn scene_meta(i: usize, params: &SynthParams) -> SceneMeta {
    let date = NaiveDate::from_ymd_opt(2015, 1, 15).unwrap() + Days::new(45 * i as u64);
    let season = if (4..=9).contains(&date.month()) {
        Season::Summer
    } else {
        Season::Winter
    };
    SceneMeta {
        id: format!("synth_{i:03}"),
        glacier: ["Mapple", "Columbia"][i % 2].to_string(),
        sensor: [Sensor::S1, Sensor::TsxTdx][(i / 2) % 2],
        date,
        season,
        resolution_m: params.resolution_m,
    }
}

/// Builds `n` scenes from the seed; every reference front is checked
/// against the zone extraction.
pub fn generate(params: &SynthParams, n: usize) -> Result<Vec<SynthScene>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let size = params.size;
    let policy = LengthPolicy::default();
    let mut scenes = Vec::with_capacity(n);
    for i in 0..n {
        let boundary = boundary_columns(params, &mut rng);
        let min_b = boundary[params.rock_rows..].iter().copied().min().unwrap();
        let na_side = if params.na_corner {
            (size / 8).min(min_b.saturating_sub(2))
        } else {
            0
        };
        let zones = scene_zones(size, params.rock_rows, na_side, &boundary);
        let front = analytic_front(size, params.rock_rows, &boundary);
        let meta = scene_meta(i, params);

        let extracted = zones_to_front(&zones, &BoundingBox::full_frame(size, size), params.resolution_m, &policy)?;
        if extracted != front {
            bail!("scene {}: extracted front differs from the analytic front", meta.id);
        }

        let edge = min_b.saturating_sub(params.catchment_margin());
        let catchment = Grid::from_fn(size, size, |r, c| match zones.at(r, c) {
            ZoneClass::Rock | ZoneClass::NA => true,
            ZoneClass::Glacier => c < edge,
            ZoneClass::Ocean => false,
        });
        let mid = params.rock_rows + (size - params.rock_rows) / 2;
        scenes.push(SynthScene {
            meta,
            boundary,
            zones,
            front,
            catchment,
            seed: (mid, size - 1),
            sentinel: (mid, (edge + min_b) / 2),
        });
    }
    Ok(scenes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    pub params: SynthParams,
    pub n: usize,
    /// Writes `pred/` zone masks with the boundary moved by this many columns.
    pub pred_shift: Option<i64>,
    /// Writes `annotator_<k>/` fronts, each shifted by its offset.
    pub annotator_offsets: Vec<i64>,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SeedRow<'a> {
    scene_id: &'a str,
    row: usize,
    col: usize,
    sentinel_row: usize,
    sentinel_col: usize,
}

fn make_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn run_synth(opts: &SynthOptions) -> Result<Vec<SynthScene>> {
    ensure!(opts.n > 0, "--n must be positive");
    let scenes = generate(&opts.params, opts.n)?;
    let p = &opts.params;
    let mapping = ZoneMapping::default();
    let out = &opts.out;
    for sub in ["zones", "fronts", "bboxes", "catchments"] {
        make_dir(&out.join(sub))?;
    }
    if opts.pred_shift.is_some() {
        make_dir(&out.join("pred"))?;
    }
    for k in 1..=opts.annotator_offsets.len() {
        make_dir(&out.join(format!("annotator_{k}")))?;
    }

    let mut manifest = Manifest::new();
    let mut seeds = csv::Writer::from_path(out.join("seeds.csv")).context("creating seeds.csv")?;
    for s in &scenes {
        let id = &s.meta.id;
        let png = format!("{id}.png");
        write_zone_mask(out.join("zones").join(&png), &s.zones, &mapping)?;
        write_front_mask(out.join("fronts").join(&png), &s.front)?;
        write_bbox(out.join("bboxes").join(format!("{id}.txt")), &BoundingBox::full_frame(p.size, p.size))?;
        write_binary(out.join("catchments").join(&png), &s.catchment)?;
        seeds.serialize(SeedRow {
            scene_id: id,
            row: s.seed.0,
            col: s.seed.1,
            sentinel_row: s.sentinel.0,
            sentinel_col: s.sentinel.1,
        })?;
        let na_side = (0..p.size).filter(|&c| s.zones.at(p.size - 1, c) == ZoneClass::NA).count();
        if let Some(shift) = opts.pred_shift {
            let b = shift_boundary(&s.boundary, shift);
            write_zone_mask(out.join("pred").join(&png), &scene_zones(p.size, p.rock_rows, na_side, &b), &mapping)?;
        }
        for (k, &off) in opts.annotator_offsets.iter().enumerate() {
            let b = shift_boundary(&s.boundary, off);
            let front = analytic_front(p.size, p.rock_rows, &b);
            write_front_mask(out.join(format!("annotator_{}", k + 1)).join(&png), &front)?;
        }
        manifest.insert(s.meta.clone())?;
    }
    seeds.flush()?;
    write_manifest(out.join("manifest.csv"), &manifest)?;
    Ok(scenes)
}
