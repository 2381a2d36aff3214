//! Front extraction and the post-processing shared by every pipeline:
//! bounding-box masking, minimum-length filtering and catchment removal.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::geodata::{BoundingBox, CatchmentMask, FrontMask, ZoneClass, ZoneMask};
use crate::grid::{neighbors, BinaryGrid, Connectivity, Grid, N8};
use crate::morph::{self, PixelChain, StructuringElement};

/// How a connected front's length is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LengthMetric {
    /// Pixel count times resolution.
    #[default]
    PixelCount,
    /// Step lengths (1 or √2) along the component's longest path.
    Geometric,
}

impl std::str::FromStr for LengthMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixelcount" => Ok(LengthMetric::PixelCount),
            "geometric" => Ok(LengthMetric::Geometric),
            _ => Err(Error::invalid(format!(
                "length metric must be 'pixelcount' or 'geometric', got '{s}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthPolicy {
    pub metric: LengthMetric,
    pub min_length_m: f64,
}

impl LengthPolicy {
    /// Half of the 1.5 km minimum front length of the benchmark.
    pub const BENCHMARK_MIN_M: f64 = 750.0;

    pub fn new(metric: LengthMetric, min_length_m: f64) -> Result<Self> {
        if !(min_length_m.is_finite() && min_length_m >= 0.0) {
            return Err(Error::invalid(format!(
                "minimum front length must be finite and >= 0, got {min_length_m}"
            )));
        }
        Ok(LengthPolicy {
            metric,
            min_length_m,
        })
    }
}

impl Default for LengthPolicy {
    fn default() -> Self {
        LengthPolicy {
            metric: LengthMetric::PixelCount,
            min_length_m: Self::BENCHMARK_MIN_M,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DistanceMapParams {
    /// When set, distances `d` become `exp(-d / gamma)`.
    pub decay_gamma: Option<f64>,
}

/// Connected fronts of a mask, one longest-path chain per component.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontSet {
    pub width: usize,
    pub height: usize,
    pub chains: Vec<PixelChain>,
}

impl FrontSet {
    pub fn to_mask(&self) -> FrontMask {
        FrontMask::new(
            self.width,
            self.height,
            self.chains.iter().flat_map(|c| c.pixels().iter().copied()),
        )
        .expect("chains stay in bounds")
    }
}

fn check_resolution(resolution_m: f64) -> Result<()> {
    if resolution_m.is_finite() && resolution_m > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "resolution must be positive, got {resolution_m}"
        )))
    }
}

/// Calving front from a zone mask.
///
/// Steps: ocean mask, hole filling, largest 4-connected ocean region (ties
/// to the first in row-major order), ocean pixels 8-adjacent to glacier,
/// bounding-box masking, short-front removal.
///
/// Glacier pixels swallowed by the filled ocean (icebergs) no longer count
/// as glacier, and only pixels that were ocean in the input can be front.
pub fn zones_to_front(
    zones: &ZoneMask,
    bbox: &BoundingBox,
    resolution_m: f64,
    policy: &LengthPolicy,
) -> Result<FrontMask> {
    let (w, h) = zones.dims();
    bbox.validate(w, h)?;
    check_resolution(resolution_m)?;

    let ocean = zones.map(|&z| z == ZoneClass::Ocean);
    let filled = morph::fill_holes(&ocean);
    let labels = morph::connected_components(&filled, Connectivity::Four);
    let ocean_main = if labels.count == 0 {
        BinaryGrid::empty(w, h)
    } else {
        let sizes = labels.sizes();
        // max_by_key keeps the last maximum; scan in reverse so ties go to the lowest label.
        let (best, _) = sizes
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .max_by_key(|&(_, &s)| s)
            .unwrap();
        labels.mask_of(best as u32)
    };
    let glacier = Grid::from_fn(w, h, |r, c| {
        zones.at(r, c) == ZoneClass::Glacier && !ocean_main.at(r, c)
    });
    let pixels = ocean_main.ones().filter(|&(r, c)| {
        zones.at(r, c) == ZoneClass::Ocean
            && neighbors(w, h, r, c, &N8).any(|(nr, nc)| glacier.at(nr, nc))
    });
    let front = FrontMask::new(w, h, pixels.collect::<Vec<_>>())?;
    let front = mask_bbox(&front, bbox)?;
    filter_short_fronts(&front, policy, resolution_m)
}

/// Skeletonizes a predicted front mask and keeps the longest path of each
/// 8-connected piece, then applies bounding-box masking and short-front
/// removal.
pub fn refine_front_mask(
    front: &FrontMask,
    bbox: &BoundingBox,
    resolution_m: f64,
    policy: &LengthPolicy,
) -> Result<FrontMask> {
    let (w, h) = front.dims();
    bbox.validate(w, h)?;
    check_resolution(resolution_m)?;
    let set = front_set(&morph::skeletonize(&front.to_grid()))?;
    let thin = set.to_mask();
    let thin = mask_bbox(&thin, bbox)?;
    filter_short_fronts(&thin, policy, resolution_m)
}

/// Longest-path chain of each 8-connected component, in label order.
pub fn front_set(grid: &BinaryGrid) -> Result<FrontSet> {
    let labels = morph::connected_components(grid, Connectivity::Eight);
    let mut chains = Vec::with_capacity(labels.count as usize);
    for pixels in labels.pixel_lists() {
        chains.push(component_path(grid.dims(), &pixels)?);
    }
    Ok(FrontSet {
        width: grid.width(),
        height: grid.height(),
        chains,
    })
}

fn component_path(dims: (usize, usize), pixels: &[(usize, usize)]) -> Result<PixelChain> {
    let mut comp = BinaryGrid::empty(dims.0, dims.1);
    for &(r, c) in pixels {
        comp.set(r, c, true);
    }
    morph::longest_path(&comp)
}

/// Drops every front pixel outside the inclusive box.
pub fn mask_bbox(front: &FrontMask, bbox: &BoundingBox) -> Result<FrontMask> {
    bbox.validate(front.width(), front.height())?;
    let mut out = front.clone();
    out.retain(|&(r, c)| bbox.contains(r, c));
    Ok(out)
}

/// Removes every 8-connected front shorter than `policy.min_length_m`.
pub fn filter_short_fronts(
    front: &FrontMask,
    policy: &LengthPolicy,
    resolution_m: f64,
) -> Result<FrontMask> {
    check_resolution(resolution_m)?;
    let grid = front.to_grid();
    let labels = morph::connected_components(&grid, Connectivity::Eight);
    let mut keep = Vec::new();
    for pixels in labels.pixel_lists() {
        let length = match policy.metric {
            LengthMetric::PixelCount => pixels.len() as f64 * resolution_m,
            LengthMetric::Geometric => {
                let chain = component_path(grid.dims(), &pixels)?;
                front_length(&chain, resolution_m, LengthMetric::Geometric)?
            }
        };
        if length >= policy.min_length_m {
            keep.extend(pixels);
        }
    }
    FrontMask::new(front.width(), front.height(), keep)
}

/// Length of a chain in meters.
pub fn front_length(chain: &PixelChain, resolution_m: f64, metric: LengthMetric) -> Result<f64> {
    if chain.is_empty() {
        return Err(Error::invalid("front length of an empty chain"));
    }
    check_resolution(resolution_m)?;
    let px = match metric {
        LengthMetric::PixelCount => chain.len() as f64,
        LengthMetric::Geometric => chain
            .pixels()
            .windows(2)
            .map(|p| {
                if p[0].0 != p[1].0 && p[0].1 != p[1].1 {
                    SQRT_2
                } else {
                    1.0
                }
            })
            .sum(),
    };
    Ok(px * resolution_m)
}

/// Removes front pixels inside the catchment dilated by a disk of
/// `round(buffer_m / resolution_m)` pixels.
pub fn apply_catchment(
    front: &FrontMask,
    catchment: &CatchmentMask,
    buffer_m: f64,
    resolution_m: f64,
) -> Result<FrontMask> {
    front.ensure_dims(catchment.dims())?;
    check_resolution(resolution_m)?;
    if !(buffer_m.is_finite() && buffer_m >= 0.0) {
        return Err(Error::invalid(format!("buffer must be >= 0, got {buffer_m}")));
    }
    let radius = (buffer_m / resolution_m).round() as usize;
    let buffered = morph::dilate(catchment, &StructuringElement::Disk(radius));
    let mut out = front.clone();
    out.retain(|&(r, c)| !buffered.at(r, c));
    Ok(out)
}

/// Front label thickened by a `k` x `k` square.
pub fn dilate_front_label(front: &FrontMask, k: usize) -> Result<BinaryGrid> {
    let se = StructuringElement::Square(k);
    se.validate()?;
    Ok(morph::dilate(&front.to_grid(), &se))
}

/// Distance (px) to the nearest front pixel, optionally decayed.
pub fn front_distance_map(front: &FrontMask, params: &DistanceMapParams) -> Result<Grid<f64>> {
    if front.is_empty() {
        return Err(Error::EmptyFront);
    }
    let d = morph::distance_transform(&front.to_grid());
    match params.decay_gamma {
        None => Ok(d),
        Some(g) if g > 0.0 && g.is_finite() => Ok(d.map(|&x| (-x / g).exp())),
        Some(g) => Err(Error::invalid(format!("decay gamma must be > 0, got {g}"))),
    }
}
