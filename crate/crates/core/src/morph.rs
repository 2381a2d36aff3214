//! Binary raster morphology.
//!
//! Out-of-bounds pixels are background unless an explicit [`Border`] says
//! otherwise. Structuring elements are center-symmetric, so no reflection is
//! needed between dilation and erosion.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{neighbors, BinaryGrid, Connectivity, Grid, N8};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructuringElement {
    /// `k` x `k` square, `k` odd.
    Square(usize),
    /// All offsets with `dr² + dc² <= radius²`.
    Disk(usize),
}

impl StructuringElement {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StructuringElement::Square(k) if k == 0 || k % 2 == 0 => Err(Error::invalid(format!(
                "square structuring element needs an odd side, got {k}"
            ))),
            _ => Ok(()),
        }
    }

    /// Row spans `(dr, half_width)`: row offset `dr` covers `dc ∈ [-half_width, half_width]`.
    fn spans(&self) -> Vec<(isize, usize)> {
        match *self {
            StructuringElement::Square(k) => {
                let h = (k / 2) as isize;
                (-h..=h).map(|dr| (dr, h as usize)).collect()
            }
            StructuringElement::Disk(radius) => {
                let r = radius as isize;
                (-r..=r)
                    .map(|dr| {
                        let rem = (r * r - dr * dr) as usize;
                        (dr, isqrt(rem))
                    })
                    .collect()
            }
        }
    }

    /// Every `(dr, dc)` offset in the element.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        self.spans()
            .into_iter()
            .flat_map(|(dr, h)| {
                let h = h as isize;
                (-h..=h).map(move |dc| (dr, dc))
            })
            .collect()
    }
}

fn isqrt(n: usize) -> usize {
    let mut x = (n as f64).sqrt() as usize;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Value assumed for pixels outside the raster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Border {
    Background,
    Foreground,
}

#[derive(Clone, Copy)]
enum Reduce {
    Any,
    All,
}

/// Per-row prefix counts of set pixels; `prefix[r][c]` counts columns `< c`.
struct RowPrefix {
    width: usize,
    counts: Vec<u32>,
}

impl RowPrefix {
    fn new(g: &BinaryGrid) -> Self {
        let w = g.width();
        let mut counts = Vec::with_capacity((w + 1) * g.height());
        for row in g.as_slice().chunks(w.max(1)).take(g.height()) {
            let mut acc = 0u32;
            counts.push(0);
            for &b in row {
                acc += b as u32;
                counts.push(acc);
            }
        }
        RowPrefix { width: w, counts }
    }

    /// Set pixels in row `r`, columns `[lo, hi)`.
    #[inline]
    fn count(&self, r: usize, lo: usize, hi: usize) -> u32 {
        let base = r * (self.width + 1);
        self.counts[base + hi] - self.counts[base + lo]
    }
}

fn window_reduce(g: &BinaryGrid, se: &StructuringElement, border: Border, mode: Reduce) -> BinaryGrid {
    let (w, h) = g.dims();
    let spans = se.spans();
    let prefix = RowPrefix::new(g);
    let oob = border == Border::Foreground;
    Grid::from_fn(w, h, |r, c| {
        let mut any = false;
        let mut all = true;
        for &(dr, hw) in &spans {
            let rr = r as isize + dr;
            let lo = c as isize - hw as isize;
            let hi = c as isize + hw as isize;
            if rr < 0 || rr >= h as isize {
                any |= oob;
                all &= oob;
            } else {
                let clipped = lo < 0 || hi >= w as isize;
                let lo_c = lo.max(0) as usize;
                let hi_c = (hi.min(w as isize - 1) + 1) as usize;
                let n = prefix.count(rr as usize, lo_c, hi_c);
                let span_len = (hi_c - lo_c) as u32;
                any |= n > 0 || (clipped && oob);
                all &= n == span_len && (!clipped || oob);
            }
            match mode {
                Reduce::Any if any => return true,
                Reduce::All if !all => return false,
                _ => {}
            }
        }
        match mode {
            Reduce::Any => any,
            Reduce::All => all,
        }
    })
}

/// Dilation with background outside the raster.
pub fn dilate(g: &BinaryGrid, se: &StructuringElement) -> BinaryGrid {
    dilate_with(g, se, Border::Background)
}

pub fn dilate_with(g: &BinaryGrid, se: &StructuringElement, border: Border) -> BinaryGrid {
    window_reduce(g, se, border, Reduce::Any)
}

/// Erosion with background outside the raster, so border pixels erode.
pub fn erode(g: &BinaryGrid, se: &StructuringElement) -> BinaryGrid {
    erode_with(g, se, Border::Background)
}

pub fn erode_with(g: &BinaryGrid, se: &StructuringElement, border: Border) -> BinaryGrid {
    window_reduce(g, se, border, Reduce::All)
}

/// Component labels: `0` is background, components are `1..=count` numbered
/// by first pixel in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Labels {
    pub labels: Grid<u32>,
    pub count: u32,
}

impl Labels {
    /// Pixel count per label, indexed by label (index 0 is background).
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count as usize + 1];
        for &l in self.labels.as_slice() {
            sizes[l as usize] += 1;
        }
        sizes
    }

    pub fn mask_of(&self, label: u32) -> BinaryGrid {
        self.labels.map(|&l| l == label)
    }

    /// Pixels of each component in row-major order; entry `i` is label `i + 1`.
    pub fn pixel_lists(&self) -> Vec<Vec<(usize, usize)>> {
        let mut lists = vec![Vec::new(); self.count as usize];
        let w = self.labels.width();
        for (i, &l) in self.labels.as_slice().iter().enumerate() {
            if l > 0 {
                lists[l as usize - 1].push((i / w, i % w));
            }
        }
        lists
    }
}

pub fn connected_components(g: &BinaryGrid, connectivity: Connectivity) -> Labels {
    let (w, h) = g.dims();
    let offsets = connectivity.offsets();
    let mut labels = Grid::filled(w, h, 0u32);
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for r in 0..h {
        for c in 0..w {
            if !g.at(r, c) || labels.at(r, c) != 0 {
                continue;
            }
            count += 1;
            labels.set(r, c, count);
            queue.push_back((r, c));
            while let Some((pr, pc)) = queue.pop_front() {
                for (nr, nc) in neighbors(w, h, pr, pc, offsets) {
                    if g.at(nr, nc) && labels.at(nr, nc) == 0 {
                        labels.set(nr, nc, count);
                        queue.push_back((nr, nc));
                    }
                }
            }
        }
    }
    Labels { labels, count }
}

/// Sets every background region that is not 4-connected to the raster border.
pub fn fill_holes(g: &BinaryGrid) -> BinaryGrid {
    let (w, h) = g.dims();
    let background = connected_components(&g.complement(), Connectivity::Four);
    let mut touches_border = vec![false; background.count as usize + 1];
    for r in 0..h {
        for c in 0..w {
            if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
                touches_border[background.labels.at(r, c) as usize] = true;
            }
        }
    }
    Grid::from_fn(w, h, |r, c| {
        let l = background.labels.at(r, c);
        l == 0 || !touches_border[l as usize]
    })
}

/// Ring neighbors `P2..P9`, clockwise from north, out-of-bounds as unset.
#[inline]
fn ring(g: &BinaryGrid, r: usize, c: usize) -> [bool; 8] {
    const RING: [(isize, isize); 8] = [
        (-1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
        (1, 0),
        (1, -1),
        (0, -1),
        (-1, -1),
    ];
    let mut out = [false; 8];
    for (slot, &(dr, dc)) in out.iter_mut().zip(&RING) {
        let rr = r as isize + dr;
        let cc = c as isize + dc;
        *slot = g.contains(rr, cc) && g.at(rr as usize, cc as usize);
    }
    out
}

/// Thins every 8-connected component to a one-pixel-wide skeleton.
///
/// Zhang-Suen subiterations, but candidates are removed one at a time and
/// re-tested against the current raster. The sequential removal keeps the
/// two-pixel-thick cases (2x2 blocks, thick diagonals) that break the purely
/// parallel scheme from vanishing or splitting. Once thinning stalls, any
/// pixel with all eight neighbors set is deleted and thinning resumes, so the
/// output never contains a full 3x3 block (this may open a one-pixel hole).
pub fn skeletonize(g: &BinaryGrid) -> BinaryGrid {
    let mut out = g.clone();
    let (w, h) = g.dims();
    loop {
        let mut changed = false;
        for first_pass in [true, false] {
            for r in 0..h {
                for c in 0..w {
                    if out.at(r, c) && removable(&out, r, c, first_pass) {
                        out.set(r, c, false);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            // pixels whose ring is all junctions survive thinning; punch them out
            for r in 0..h {
                for c in 0..w {
                    if out.at(r, c) && ring(&out, r, c).iter().all(|&x| x) {
                        out.set(r, c, false);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

fn removable(g: &BinaryGrid, r: usize, c: usize, first_pass: bool) -> bool {
    let p = ring(g, r, c);
    let b = p.iter().filter(|&&x| x).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let transitions = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if transitions != 1 {
        return false;
    }
    let [n, _, e, _, s, _, w, _] = p;
    if first_pass {
        !(n && e && s) && !(e && s && w)
    } else {
        !(n && e && w) && !(n && s && w)
    }
}

/// Ordered pixels where consecutive entries are 8-neighbors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelChain(pub Vec<(usize, usize)>);

impl PixelChain {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.0
    }

    /// True when consecutive pixels are 8-neighbors and no pixel repeats.
    pub fn is_valid(&self) -> bool {
        let steps_ok = self.0.windows(2).all(|p| {
            let dr = p[0].0.abs_diff(p[1].0);
            let dc = p[0].1.abs_diff(p[1].1);
            dr.max(dc) == 1
        });
        let mut seen: Vec<_> = self.0.clone();
        seen.sort_unstable();
        seen.dedup();
        steps_ok && seen.len() == self.0.len()
    }
}

/// BFS over the 8-connected component containing `start`; returns hop
/// distances and predecessors indexed like the raster.
fn bfs(g: &BinaryGrid, start: (usize, usize)) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = g.dims();
    let mut dist = vec![u32::MAX; w * h];
    let mut pred = vec![usize::MAX; w * h];
    let mut queue = VecDeque::new();
    dist[start.0 * w + start.1] = 0;
    queue.push_back(start);
    while let Some((r, c)) = queue.pop_front() {
        let d = dist[r * w + c];
        for (nr, nc) in neighbors(w, h, r, c, &N8) {
            let i = nr * w + nc;
            if g.at(nr, nc) && dist[i] == u32::MAX {
                dist[i] = d + 1;
                pred[i] = r * w + c;
                queue.push_back((nr, nc));
            }
        }
    }
    (dist, pred)
}

/// Farthest reached index; ties go to the smallest row-major index.
fn farthest(dist: &[u32]) -> usize {
    let mut best = 0;
    let mut best_d = 0;
    for (i, &d) in dist.iter().enumerate() {
        if d != u32::MAX && (d > best_d || (d == best_d && dist[best] == u32::MAX)) {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Longest path through a thin 8-connected component by double-sweep BFS.
///
/// Exact on trees. On skeletons with cycles the result is a lower bound on
/// the longest simple path, but never shorter than a single sweep. Only the
/// component containing the first set pixel is searched.
pub fn longest_path(component: &BinaryGrid) -> Result<PixelChain> {
    let w = component.width();
    let start = component.ones().next().ok_or(Error::EmptyComponent)?;
    let (d0, _) = bfs(component, start);
    let u = farthest(&d0);
    let (d1, pred) = bfs(component, (u / w, u % w));
    let v = farthest(&d1);
    let mut path = Vec::with_capacity(d1[v] as usize + 1);
    let mut cur = v;
    loop {
        path.push((cur / w, cur % w));
        if cur == u {
            break;
        }
        cur = pred[cur];
    }
    path.reverse();
    Ok(PixelChain(path))
}

/// 1-D squared Euclidean distance transform of `f` (lower envelope of
/// parabolas). Infinite entries are not sites.
fn edt_1d(f: &[f64], out: &mut [f64], sites: &mut Vec<usize>, bounds: &mut Vec<f64>) {
    sites.clear();
    bounds.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        loop {
            match sites.last() {
                None => {
                    sites.push(q);
                    bounds.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = ((fq + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
                    if s <= *bounds.last().unwrap() {
                        sites.pop();
                        bounds.pop();
                    } else {
                        sites.push(q);
                        bounds.push(s);
                        break;
                    }
                }
            }
        }
    }
    if sites.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < sites.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        let p = sites[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Exact squared Euclidean distance (px²) to the nearest set pixel.
pub fn squared_distance_transform(g: &BinaryGrid) -> Grid<f64> {
    let (w, h) = g.dims();
    let mut out = g.map(|&b| if b { 0.0 } else { f64::INFINITY });
    let mut sites = Vec::new();
    let mut bounds = Vec::new();
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for c in 0..w {
        for (r, v) in col.iter_mut().enumerate() {
            *v = out.at(r, c);
        }
        edt_1d(&col, &mut col_out, &mut sites, &mut bounds);
        for (r, &v) in col_out.iter().enumerate() {
            out.set(r, c, v);
        }
    }
    let mut row_out = vec![0.0; w];
    for r in 0..h {
        let row = &mut out.as_mut_slice()[r * w..(r + 1) * w];
        edt_1d(row, &mut row_out, &mut sites, &mut bounds);
        row.copy_from_slice(&row_out);
    }
    out
}

/// Exact Euclidean distance (px) to the nearest set pixel; `+inf` everywhere
/// when nothing is set.
pub fn distance_transform(g: &BinaryGrid) -> Grid<f64> {
    squared_distance_transform(g).map(|&d| d.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> BinaryGrid {
        let h = rows.len();
        let w = rows[0].len();
        Grid::from_fn(w, h, |r, c| rows[r].as_bytes()[c] == b'#')
    }

    #[test]
    fn even_square_rejected() {
        assert!(StructuringElement::Square(4).validate().is_err());
        assert!(StructuringElement::Square(0).validate().is_err());
        assert!(StructuringElement::Square(5).validate().is_ok());
    }

    #[test]
    fn disk_offsets() {
        let d = StructuringElement::Disk(1).offsets();
        assert_eq!(d.len(), 5);
        let d2 = StructuringElement::Disk(2).offsets();
        assert_eq!(d2.len(), 13);
        assert!(StructuringElement::Disk(0).offsets() == vec![(0, 0)]);
    }

    #[test]
    fn dilate_single_pixel_square5() {
        let mut g = BinaryGrid::empty(12, 12);
        g.set(5, 5, true);
        let d = dilate(&g, &StructuringElement::Square(5));
        for r in 0..12 {
            for c in 0..12 {
                assert_eq!(d.at(r, c), (3..=7).contains(&r) && (3..=7).contains(&c));
            }
        }
        let mut corner = BinaryGrid::empty(6, 6);
        corner.set(0, 0, true);
        assert_eq!(dilate(&corner, &StructuringElement::Square(5)).count_ones(), 9);
    }

    #[test]
    fn dilate_empty_is_empty() {
        let g = BinaryGrid::empty(7, 5);
        assert!(!dilate(&g, &StructuringElement::Disk(3)).any());
    }

    #[test]
    fn erode_full_grid_loses_border() {
        let g = Grid::filled(6, 5, true);
        let e = erode(&g, &StructuringElement::Square(3));
        for r in 0..5 {
            for c in 0..6 {
                assert_eq!(e.at(r, c), r > 0 && c > 0 && r < 4 && c < 5);
            }
        }
        assert_eq!(
            erode_with(&g, &StructuringElement::Square(3), Border::Foreground),
            g
        );
    }

    #[test]
    fn erode_single_pixel_vanishes() {
        let mut g = BinaryGrid::empty(5, 5);
        g.set(2, 2, true);
        assert!(!erode(&g, &StructuringElement::Square(3)).any());
    }

    #[test]
    fn fill_ring() {
        let g = grid(&[
            ".....", //
            ".###.", //
            ".#.#.", //
            ".###.", //
            ".....",
        ]);
        let f = fill_holes(&g);
        assert!(f.at(2, 2));
        assert_eq!(f.count_ones(), 9);
    }

    #[test]
    fn fill_leaves_border_regions() {
        let g = grid(&[
            "###..", //
            "#.#..", //
            "#.###", //
        ]);
        assert_eq!(fill_holes(&g), g);
    }

    #[test]
    fn diagonal_connectivity() {
        let g = grid(&["#.", ".#"]);
        assert_eq!(connected_components(&g, Connectivity::Four).count, 2);
        assert_eq!(connected_components(&g, Connectivity::Eight).count, 1);
        assert_eq!(
            connected_components(&BinaryGrid::empty(3, 3), Connectivity::Eight).count,
            0
        );
    }

    #[test]
    fn labels_follow_row_major_order() {
        let g = grid(&["..#", "#..", "..#"]);
        let l = connected_components(&g, Connectivity::Four);
        assert_eq!(l.labels.at(0, 2), 1);
        assert_eq!(l.labels.at(1, 0), 2);
        assert_eq!(l.labels.at(2, 2), 3);
        assert_eq!(l.sizes(), vec![6, 1, 1, 1]);
    }

    #[test]
    fn thin_lines_survive_skeletonization() {
        let horiz = grid(&["..........", ".########.", ".........."]);
        assert_eq!(skeletonize(&horiz), horiz);
        let diag = Grid::from_fn(8, 8, |r, c| r == c);
        assert_eq!(skeletonize(&diag), diag);
        let bent = grid(&[
            "#.......", //
            ".#......", //
            "..####..", //
            "......#.", //
            ".......#",
        ]);
        assert_eq!(skeletonize(&bent), bent);
        assert!(!skeletonize(&BinaryGrid::empty(4, 4)).any());
    }

    #[test]
    fn two_by_two_block_keeps_a_pixel() {
        let g = grid(&["....", ".##.", ".##.", "...."]);
        let s = skeletonize(&g);
        assert!(s.any());
        assert_eq!(connected_components(&s, Connectivity::Eight).count, 1);
    }

    #[test]
    fn bar_thins_to_chain() {
        let g = Grid::from_fn(24, 7, |r, c| (2..5).contains(&r) && (2..22).contains(&c));
        let s = skeletonize(&g);
        assert!(s.is_subset(&g));
        assert_eq!(connected_components(&s, Connectivity::Eight).count, 1);
        let cols: Vec<usize> = s.ones().map(|(_, c)| c).collect();
        let span = cols.iter().max().unwrap() - cols.iter().min().unwrap() + 1;
        assert!((18..=20).contains(&span), "span {span}");
        let chain = longest_path(&s).unwrap();
        assert_eq!(chain.len(), s.count_ones());
    }

    #[test]
    fn longest_path_basic() {
        let line = Grid::from_fn(12, 3, |r, c| r == 1 && (1..11).contains(&c));
        let chain = longest_path(&line).unwrap();
        assert_eq!(chain.len(), 10);
        assert!(chain.is_valid());
        let mut single = BinaryGrid::empty(3, 3);
        single.set(1, 1, true);
        assert_eq!(longest_path(&single).unwrap().0, vec![(1, 1)]);
        assert!(matches!(
            longest_path(&BinaryGrid::empty(3, 3)),
            Err(Error::EmptyComponent)
        ));
    }

    #[test]
    fn distance_basics() {
        let mut g = BinaryGrid::empty(6, 6);
        g.set(0, 0, true);
        let d = distance_transform(&g);
        assert_eq!(d.at(3, 4), 5.0);
        assert_eq!(d.at(0, 0), 0.0);
        let full = Grid::filled(4, 3, true);
        assert!(distance_transform(&full).as_slice().iter().all(|&x| x == 0.0));
        let none = distance_transform(&BinaryGrid::empty(4, 3));
        assert!(none.as_slice().iter().all(|x| x.is_infinite()));
    }
}
