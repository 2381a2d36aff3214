//! Patch extraction, overlap merging and longest-side resizing for
//! predictions produced tile by tile.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadPolicy {
    ZeroPad,
    ClampToEdge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileSpec {
    pub patch_w: usize,
    pub patch_h: usize,
    pub overlap_x: usize,
    pub overlap_y: usize,
    pub pad_policy: PadPolicy,
}

impl TileSpec {
    /// Square patches with equal overlap on both axes.
    pub fn square(patch: usize, overlap: usize, pad_policy: PadPolicy) -> Self {
        TileSpec {
            patch_w: patch,
            patch_h: patch,
            overlap_x: overlap,
            overlap_y: overlap,
            pad_policy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_w == 0 || self.patch_h == 0 {
            return Err(Error::invalid("patch size must be positive"));
        }
        if self.overlap_x >= self.patch_w || self.overlap_y >= self.patch_h {
            return Err(Error::invalid(format!(
                "overlap ({}, {}) must be smaller than the patch ({}, {})",
                self.overlap_x, self.overlap_y, self.patch_w, self.patch_h
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    /// Top-left corner `(row, col)` on the canvas.
    pub origin: (usize, usize),
    /// `patch_h` x `patch_w` values.
    pub data: Grid<f64>,
}

/// Tile origins along one axis: stride `patch - overlap`, last tile anchored
/// to the far edge.
pub fn axis_origins(len: usize, patch: usize, overlap: usize) -> Vec<usize> {
    if len <= patch {
        return vec![0];
    }
    let stride = patch - overlap;
    let last = len - patch;
    let mut origins = Vec::new();
    let mut o = 0;
    while o < last {
        origins.push(o);
        o += stride;
    }
    origins.push(last);
    origins
}

pub fn extract_patches(img: &Grid<f64>, spec: &TileSpec) -> Result<Vec<Tile>> {
    spec.validate()?;
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return Err(Error::invalid("cannot tile an empty image"));
    }
    let rows = axis_origins(h, spec.patch_h, spec.overlap_y);
    let cols = axis_origins(w, spec.patch_w, spec.overlap_x);
    let mut tiles = Vec::with_capacity(rows.len() * cols.len());
    for &r0 in &rows {
        for &c0 in &cols {
            let data = Grid::from_fn(spec.patch_w, spec.patch_h, |dr, dc| {
                let (r, c) = (r0 + dr, c0 + dc);
                if r < h && c < w {
                    img.at(r, c)
                } else {
                    match spec.pad_policy {
                        PadPolicy::ZeroPad => 0.0,
                        PadPolicy::ClampToEdge => img.at(r.min(h - 1), c.min(w - 1)),
                    }
                }
            });
            tiles.push(Tile {
                origin: (r0, c0),
                data,
            });
        }
    }
    Ok(tiles)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weighting {
    Uniform,
    /// Gaussian centered on each tile. `None` uses a sigma of one eighth of
    /// the patch size per axis.
    Gaussian(Option<f64>),
}

/// Floor for tile weights so far-out pixels of narrow Gaussians keep a
/// positive total weight.
const MIN_WEIGHT: f64 = 1e-300;

/// Importance of pixel `(dr, dc)` in a `patch_h` x `patch_w` tile.
pub fn tile_weight(weighting: Weighting, patch_w: usize, patch_h: usize, dr: usize, dc: usize) -> f64 {
    match weighting {
        Weighting::Uniform => 1.0,
        Weighting::Gaussian(sigma) => {
            let (sx, sy) = match sigma {
                Some(s) => (s, s),
                None => (patch_w as f64 / 8.0, patch_h as f64 / 8.0),
            };
            let cy = (patch_h as f64 - 1.0) / 2.0;
            let cx = (patch_w as f64 - 1.0) / 2.0;
            let y = dr as f64 - cy;
            let x = dc as f64 - cx;
            let e = y * y / (2.0 * sy * sy) + x * x / (2.0 * sx * sx);
            (-e).exp().max(MIN_WEIGHT)
        }
    }
}

/// Weighted mean of all tiles covering each canvas pixel.
///
/// The mean is clamped to the range of contributing values, so a pixel
/// covered only by equal values gets that value exactly.
pub fn merge_patches(tiles: &[Tile], canvas: (usize, usize), weighting: Weighting) -> Result<Grid<f64>> {
    if let Weighting::Gaussian(Some(s)) = weighting {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("gaussian sigma must be > 0, got {s}")));
        }
    }
    let (w, h) = canvas;
    let mut num = Grid::filled(w, h, 0.0f64);
    let mut den = Grid::filled(w, h, 0.0f64);
    let mut lo = Grid::filled(w, h, f64::INFINITY);
    let mut hi = Grid::filled(w, h, f64::NEG_INFINITY);
    for tile in tiles {
        let (r0, c0) = tile.origin;
        let (pw, ph) = tile.data.dims();
        if r0 >= h || c0 >= w {
            return Err(Error::invalid(format!(
                "tile origin {:?} outside {w}x{h} canvas",
                tile.origin
            )));
        }
        for dr in 0..ph.min(h - r0) {
            for dc in 0..pw.min(w - c0) {
                let (r, c) = (r0 + dr, c0 + dc);
                let v = tile.data.at(dr, dc);
                let wt = tile_weight(weighting, pw, ph, dr, dc);
                *num.get_mut(r, c) += wt * v;
                *den.get_mut(r, c) += wt;
                let l = lo.get_mut(r, c);
                *l = l.min(v);
                let u = hi.get_mut(r, c);
                *u = u.max(v);
            }
        }
    }
    let mut out = Grid::filled(w, h, 0.0);
    for r in 0..h {
        for c in 0..w {
            let d = den.at(r, c);
            if d <= 0.0 {
                return Err(Error::Uncovered { row: r, col: c });
            }
            out.set(r, c, (num.at(r, c) / d).clamp(lo.at(r, c), hi.at(r, c)));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    NearestNeighbor,
    Bilinear,
}

/// Output `(width, height)` with the longer side equal to `target`.
pub fn longest_side_dims(width: usize, height: usize, target: usize) -> (usize, usize) {
    let scaled = |short: usize, long: usize| {
        (((short as f64) * target as f64 / long as f64).round() as usize).max(1)
    };
    if width >= height {
        (target, scaled(height, width))
    } else {
        (scaled(width, height), target)
    }
}

/// Source coordinate of destination index `i` under pixel-center alignment.
#[inline]
fn src_coord(i: usize, scale: f64) -> f64 {
    (i as f64 + 0.5) * scale - 0.5
}

fn nearest_index(i: usize, scale: f64, len: usize) -> usize {
    let s = ((i as f64 + 0.5) * scale).floor() as isize;
    s.clamp(0, len as isize - 1) as usize
}

/// Nearest-neighbor resize; the only choice for class masks.
pub fn resize_nearest<T: Clone>(img: &Grid<T>, target: usize) -> Result<Grid<T>> {
    let (w, h) = img.dims();
    if w == 0 || h == 0 {
        return Err(Error::invalid("cannot resize an empty image"));
    }
    if target == 0 {
        return Err(Error::invalid("resize target must be >= 1"));
    }
    let (ow, oh) = longest_side_dims(w, h, target);
    let sx = w as f64 / ow as f64;
    let sy = h as f64 / oh as f64;
    Ok(Grid::from_fn(ow, oh, |r, c| {
        img.get(nearest_index(r, sy, h), nearest_index(c, sx, w)).clone()
    }))
}

pub fn resize_longest_side(img: &Grid<f64>, target: usize, sampling: Sampling) -> Result<Grid<f64>> {
    match sampling {
        Sampling::NearestNeighbor => resize_nearest(img, target),
        Sampling::Bilinear => {
            let (w, h) = img.dims();
            if w == 0 || h == 0 {
                return Err(Error::invalid("cannot resize an empty image"));
            }
            if target == 0 {
                return Err(Error::invalid("resize target must be >= 1"));
            }
            let (ow, oh) = longest_side_dims(w, h, target);
            let sx = w as f64 / ow as f64;
            let sy = h as f64 / oh as f64;
            let lerp_axis = |x: f64, len: usize| {
                let x = x.clamp(0.0, (len - 1) as f64);
                let i0 = x.floor() as usize;
                let i1 = (i0 + 1).min(len - 1);
                (i0, i1, x - i0 as f64)
            };
            Ok(Grid::from_fn(ow, oh, |r, c| {
                let (r0, r1, fy) = lerp_axis(src_coord(r, sy), h);
                let (c0, c1, fx) = lerp_axis(src_coord(c, sx), w);
                let top = img.at(r0, c0) * (1.0 - fx) + img.at(r0, c1) * fx;
                let bottom = img.at(r1, c0) * (1.0 - fx) + img.at(r1, c1) * fx;
                top * (1.0 - fy) + bottom * fy
            }))
        }
    }
}
