//! Raster and metadata ingestion.
//!
//! Masks are 8-bit grayscale PNGs on the scene's pixel grid. Coordinates are
//! `(row, col)` with the origin at the top-left corner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Grid};

/// Landscape class of a zone-mask pixel. `Ocean` includes ice mélange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ZoneClass {
    NA,
    Rock,
    Glacier,
    Ocean,
}

impl ZoneClass {
    pub const ALL: [ZoneClass; 4] = [
        ZoneClass::NA,
        ZoneClass::Rock,
        ZoneClass::Glacier,
        ZoneClass::Ocean,
    ];
}

impl FromStr for ZoneClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "na" => Ok(ZoneClass::NA),
            "rock" => Ok(ZoneClass::Rock),
            "glacier" => Ok(ZoneClass::Glacier),
            "ocean" => Ok(ZoneClass::Ocean),
            other => Err(Error::invalid(format!("unknown zone class '{other}'"))),
        }
    }
}

pub type ZoneMask = Grid<ZoneClass>;

/// Gray value assigned to each zone class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZoneMapping {
    pub na: u8,
    pub rock: u8,
    pub glacier: u8,
    pub ocean: u8,
}

impl Default for ZoneMapping {
    fn default() -> Self {
        ZoneMapping {
            na: 0,
            rock: 64,
            glacier: 127,
            ocean: 254,
        }
    }
}

impl ZoneMapping {
    pub fn classify(&self, value: u8) -> Option<ZoneClass> {
        // NA is checked first so a degenerate mapping resolves deterministically.
        ZoneClass::ALL
            .into_iter()
            .find(|&class| self.value_of(class) == value)
    }

    pub fn value_of(&self, class: ZoneClass) -> u8 {
        match class {
            ZoneClass::NA => self.na,
            ZoneClass::Rock => self.rock,
            ZoneClass::Glacier => self.glacier,
            ZoneClass::Ocean => self.ocean,
        }
    }

    fn validate(&self) -> Result<()> {
        let values: BTreeSet<u8> = ZoneClass::ALL.iter().map(|&c| self.value_of(c)).collect();
        if values.len() != 4 {
            return Err(Error::invalid("zone mapping assigns one gray value to two classes"));
        }
        Ok(())
    }
}

/// Parses `na:0,rock:64,glacier:127,ocean:254` (any order, all four required).
impl FromStr for ZoneMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut found: BTreeMap<ZoneClass, u8> = BTreeMap::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (name, value) = item
                .split_once([':', '='])
                .ok_or_else(|| Error::invalid(format!("zone mapping entry '{item}' lacks ':'")))?;
            let class: ZoneClass = name.parse()?;
            let value: u8 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad gray value in '{item}'")))?;
            if found.insert(class, value).is_some() {
                return Err(Error::invalid(format!("zone class '{name}' mapped twice")));
            }
        }
        let get = |class| {
            found
                .get(&class)
                .copied()
                .ok_or_else(|| Error::invalid(format!("zone mapping lacks {class:?}")))
        };
        let mapping = ZoneMapping {
            na: get(ZoneClass::NA)?,
            rock: get(ZoneClass::Rock)?,
            glacier: get(ZoneClass::Glacier)?,
            ocean: get(ZoneClass::Ocean)?,
        };
        mapping.validate()?;
        Ok(mapping)
    }
}

/// Binary calving-front mask as a set of `(row, col)` pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontMask {
    width: usize,
    height: usize,
    pixels: BTreeSet<(usize, usize)>,
}

impl FrontMask {
    pub fn empty(width: usize, height: usize) -> Self {
        FrontMask {
            width,
            height,
            pixels: BTreeSet::new(),
        }
    }

    pub fn new(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let pixels: BTreeSet<_> = pixels.into_iter().collect();
        if let Some(&(r, c)) = pixels.iter().find(|&&(r, c)| r >= height || c >= width) {
            return Err(Error::invalid(format!(
                "front pixel ({r},{c}) outside {width}x{height} raster"
            )));
        }
        Ok(FrontMask {
            width,
            height,
            pixels,
        })
    }

    pub fn from_grid(grid: &BinaryGrid) -> Self {
        FrontMask {
            width: grid.width(),
            height: grid.height(),
            pixels: grid.ones().collect(),
        }
    }

    pub fn to_grid(&self) -> BinaryGrid {
        let mut g = BinaryGrid::empty(self.width, self.height);
        for &(r, c) in &self.pixels {
            g.set(r, c, true);
        }
        g
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &BTreeSet<(usize, usize)> {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.pixels.contains(&(row, col))
    }

    pub(crate) fn retain(&mut self, f: impl FnMut(&(usize, usize)) -> bool) {
        self.pixels.retain(f);
    }

    pub fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Region of interest with inclusive pixel bounds, origin top-left.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BoundingBox {
    pub fn full_frame(width: usize, height: usize) -> Self {
        BoundingBox {
            x_min: 0,
            y_min: 0,
            x_max: width.saturating_sub(1),
            y_max: height.saturating_sub(1),
        }
    }

    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.x_min..=self.x_max).contains(&col) && (self.y_min..=self.y_max).contains(&row)
    }

    /// Checks the box against a `width` x `height` raster.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::invalid(format!("degenerate bounding box {self:?}")));
        }
        if self.x_max >= width || self.y_max >= height {
            return Err(Error::invalid(format!(
                "bounding box {self:?} exceeds {width}x{height} raster"
            )));
        }
        Ok(())
    }
}

impl FromStr for BoundingBox {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(format!("expected 4 integers, got {}", tokens.len()));
        }
        let mut v = [0usize; 4];
        for (slot, tok) in v.iter_mut().zip(&tokens) {
            *slot = tok
                .parse()
                .map_err(|_| format!("'{tok}' is not a non-negative integer"))?;
        }
        let [x_min, y_min, x_max, y_max] = v;
        if x_min > x_max {
            return Err("x_min exceeds x_max".into());
        }
        if y_min > y_max {
            return Err("y_min exceeds y_max".into());
        }
        Ok(BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.x_min, self.y_min, self.x_max, self.y_max
        )
    }
}

/// Rasterized glacier catchment; `true` is inside.
pub type CatchmentMask = BinaryGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sensor {
    Ers,
    Envisat,
    Radarsat,
    Palsar,
    TsxTdx,
    S1,
}

impl Sensor {
    pub const ALL: [Sensor; 6] = [
        Sensor::Ers,
        Sensor::Envisat,
        Sensor::Radarsat,
        Sensor::Palsar,
        Sensor::TsxTdx,
        Sensor::S1,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Sensor::Ers => "ERS",
            Sensor::Envisat => "Envisat",
            Sensor::Radarsat => "RADARSAT",
            Sensor::Palsar => "PALSAR",
            Sensor::TsxTdx => "TSX",
            Sensor::S1 => "S1",
        }
    }
}

impl FromStr for Sensor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Sensor::ALL
            .into_iter()
            .find(|x| x.token() == s)
            .ok_or_else(|| format!("unknown sensor '{s}'"))
    }
}

impl fmt::Display for Sensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Season {
    Summer,
    Winter,
}

impl Season {
    pub fn token(self) -> &'static str {
        match self {
            Season::Summer => "summer",
            Season::Winter => "winter",
        }
    }
}

impl FromStr for Season {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "summer" => Ok(Season::Summer),
            "winter" => Ok(Season::Winter),
            _ => Err(format!("unknown season '{s}'")),
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneMeta {
    pub id: String,
    pub glacier: String,
    pub sensor: Sensor,
    pub date: NaiveDate,
    pub season: Season,
    /// Ground sampling distance in meters per pixel.
    pub resolution_m: f64,
}

/// Scene metadata keyed by scene id, iterated in id order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, SceneMeta>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, meta: SceneMeta) -> Result<()> {
        if meta.id.is_empty() {
            return Err(Error::invalid("scene id is empty"));
        }
        if !(meta.resolution_m.is_finite() && meta.resolution_m > 0.0) {
            return Err(Error::invalid(format!(
                "scene {}: resolution_m must be positive, got {}",
                meta.id, meta.resolution_m
            )));
        }
        if self.entries.contains_key(&meta.id) {
            return Err(Error::invalid(format!("duplicate id '{}'", meta.id)));
        }
        self.entries.insert(meta.id.clone(), meta);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&SceneMeta> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SceneMeta> {
        self.entries.values()
    }
}

pub const MANIFEST_HEADER: [&str; 6] = ["id", "glacier", "sensor", "date", "season", "resolution_m"];

fn read_gray(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.into_luma8())
}

fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

pub fn load_zone_mask(path: impl AsRef<Path>, mapping: &ZoneMapping) -> Result<ZoneMask> {
    let img = read_gray(path.as_ref())?;
    zone_mask_from_gray(&img, mapping)
}

pub fn zone_mask_from_gray(img: &GrayImage, mapping: &ZoneMapping) -> Result<ZoneMask> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut cells = Vec::with_capacity(w * h);
    for (i, px) in img.pixels().enumerate() {
        let value = px.0[0];
        let class = mapping.classify(value).ok_or(Error::UnknownZoneValue {
            value,
            row: i / w,
            col: i % w,
        })?;
        cells.push(class);
    }
    Grid::from_vec(w, h, cells)
}

pub fn write_zone_mask(path: impl AsRef<Path>, mask: &ZoneMask, mapping: &ZoneMapping) -> Result<()> {
    let img = GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([mapping.value_of(mask.at(y as usize, x as usize))])
    });
    write_gray(path.as_ref(), &img)
}

/// Pixels with gray value `>= threshold` are front.
pub fn load_front_mask(path: impl AsRef<Path>, threshold: u8) -> Result<FrontMask> {
    let grid = load_binary(path, threshold)?;
    Ok(FrontMask::from_grid(&grid))
}

/// Writes front pixels as 255 on a 0 background.
pub fn write_front_mask(path: impl AsRef<Path>, mask: &FrontMask) -> Result<()> {
    write_binary(path, &mask.to_grid())
}

/// Thresholded 8-bit raster; used for catchments and annotator masks.
pub fn load_binary(path: impl AsRef<Path>, threshold: u8) -> Result<BinaryGrid> {
    let img = read_gray(path.as_ref())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    Grid::from_vec(w, h, img.pixels().map(|p| p.0[0] >= threshold).collect())
}

pub fn write_binary(path: impl AsRef<Path>, grid: &BinaryGrid) -> Result<()> {
    let img = GrayImage::from_fn(grid.width() as u32, grid.height() as u32, |x, y| {
        Luma([if grid.at(y as usize, x as usize) { 255 } else { 0 }])
    });
    write_gray(path.as_ref(), &img)
}

pub fn load_catchment(path: impl AsRef<Path>) -> Result<CatchmentMask> {
    load_binary(path, 128)
}

pub fn load_bbox(path: impl AsRef<Path>) -> Result<BoundingBox> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse().map_err(|msg: String| Error::parse(path, msg))
}

pub fn write_bbox(path: impl AsRef<Path>, bbox: &BoundingBox) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format!("{bbox}\n")).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_manifest(file).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::parse(path, msg),
        other => other,
    })
}

pub fn read_manifest(reader: impl std::io::Read) -> Result<Manifest> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::invalid(format!("manifest header: {e}")))?;
    if header.iter().ne(MANIFEST_HEADER) {
        return Err(Error::invalid(format!(
            "manifest header must be '{}'",
            MANIFEST_HEADER.join(",")
        )));
    }
    let mut manifest = Manifest::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::invalid(format!("line {line}: {e}")))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let bad = |msg: String| Error::invalid(format!("line {line}: {msg}"));
        let meta = SceneMeta {
            id: field(0).to_string(),
            glacier: field(1).to_string(),
            sensor: field(2).parse().map_err(bad)?,
            date: NaiveDate::parse_from_str(field(3), "%Y-%m-%d")
                .map_err(|e| bad(format!("date '{}': {e}", field(3))))?,
            season: field(4).parse().map_err(bad)?,
            resolution_m: field(5)
                .parse()
                .map_err(|_| bad(format!("resolution_m '{}' is not a number", field(5))))?,
        };
        manifest
            .insert(meta)
            .map_err(|e| bad(e.to_string().trim_start_matches("invalid argument: ").to_string()))?;
    }
    Ok(manifest)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&MANIFEST_HEADER.join(","));
    out.push('\n');
    for m in manifest.iter() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.id,
            m.glacier,
            m.sensor,
            m.date.format("%Y-%m-%d"),
            m.season,
            m.resolution_m
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_raw(path: &Path, w: u32, h: u32, values: &[u8]) {
        let img = GrayImage::from_raw(w, h, values.to_vec()).unwrap();
        img.save(path).unwrap();
    }

    #[test]
    fn default_mapping_decodes_all_classes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.png");
        write_raw(&p, 2, 2, &[0, 64, 127, 254]);
        let z = load_zone_mask(&p, &ZoneMapping::default()).unwrap();
        assert_eq!(
            z.as_slice(),
            &[ZoneClass::NA, ZoneClass::Rock, ZoneClass::Glacier, ZoneClass::Ocean]
        );
    }

    #[test]
    fn unmapped_gray_value_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.png");
        write_raw(&p, 1, 1, &[13]);
        let err = load_zone_mask(&p, &ZoneMapping::default()).unwrap_err();
        assert!(err.to_string().contains("unknown zone value 13"), "{err}");
        assert!(err.to_string().contains("(0,0)"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_front_mask("/nonexistent/front.png", 128).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn front_mask_thresholding() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.png");
        write_raw(&p, 4, 4, &[0; 16]);
        assert!(load_front_mask(&p, 128).unwrap().is_empty());
        let mut v = [0u8; 16];
        v[4 + 2] = 255;
        v[0] = 127;
        write_raw(&p, 4, 4, &v);
        let f = load_front_mask(&p, 128).unwrap();
        assert_eq!(f.pixels().iter().copied().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    #[test]
    fn zone_mapping_parses_and_rejects_collisions() {
        let m: ZoneMapping = "ocean:1, glacier:2, rock:3, na:4".parse().unwrap();
        assert_eq!(m.classify(1), Some(ZoneClass::Ocean));
        assert!("na:0,rock:0,glacier:1,ocean:2".parse::<ZoneMapping>().is_err());
        assert!("na:0,rock:1,glacier:2".parse::<ZoneMapping>().is_err());
    }

    #[test]
    fn bbox_parsing() {
        let b: BoundingBox = "0 0 9 9".parse().unwrap();
        assert_eq!(b, BoundingBox::full_frame(10, 10));
        assert!(b.validate(10, 10).is_ok());
        assert!(b.validate(9, 10).is_err());
        assert_eq!("3 1 2 5".parse::<BoundingBox>().unwrap_err(), "x_min exceeds x_max");
        assert_eq!("0 0 9".parse::<BoundingBox>().unwrap_err(), "expected 4 integers, got 3");
        assert!("0 0 9 x".parse::<BoundingBox>().is_err());
        assert!("0 -1 9 9".parse::<BoundingBox>().is_err());
    }

    #[test]
    fn bbox_file_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.txt");
        fs::write(&p, "3 1 2 5\n").unwrap();
        let err = load_bbox(&p).unwrap_err();
        assert!(err.to_string().contains("x_min exceeds x_max"));
    }

    const HEADER: &str = "id,glacier,sensor,date,season,resolution_m\n";

    #[test]
    fn manifest_single_row() {
        let csv = format!("{HEADER}s1,Mapple,TSX,2011-07-03,summer,7\n");
        let m = read_manifest(csv.as_bytes()).unwrap();
        assert_eq!(m.len(), 1);
        let s = m.get("s1").unwrap();
        assert_eq!(s.sensor, Sensor::TsxTdx);
        assert_eq!(s.season, Season::Summer);
        assert_eq!(s.resolution_m, 7.0);
    }

    #[test]
    fn manifest_rejects_bad_rows() {
        let dup = format!("{HEADER}a,G,S1,2020-01-01,winter,20\na,G,S1,2020-01-02,winter,20\n");
        assert!(read_manifest(dup.as_bytes()).unwrap_err().to_string().contains("duplicate id"));
        let neg = format!("{HEADER}a,G,S1,2020-01-01,winter,-7\n");
        assert!(read_manifest(neg.as_bytes()).is_err());
        let sensor = format!("{HEADER}a,G,Landsat,2020-01-01,winter,20\n");
        assert!(read_manifest(sensor.as_bytes()).unwrap_err().to_string().contains("unknown sensor"));
        let season = format!("{HEADER}a,G,S1,2020-01-01,spring,20\n");
        assert!(read_manifest(season.as_bytes()).is_err());
        let header = "id,glacier,sensor,date,resolution_m,season\n";
        assert!(read_manifest(header.as_bytes()).is_err());
    }

    fn zone_strategy() -> impl Strategy<Value = ZoneMask> {
        (1usize..=32, 1usize..=32).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0usize..4, w * h).prop_map(move |v| {
                Grid::from_vec(w, h, v.into_iter().map(|i| ZoneClass::ALL[i]).collect()).unwrap()
            })
        })
    }

    fn front_strategy() -> impl Strategy<Value = FrontMask> {
        (1usize..=32, 1usize..=32).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::bool::weighted(0.2), w * h)
                .prop_map(move |v| FrontMask::from_grid(&Grid::from_vec(w, h, v).unwrap()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn zone_mask_round_trip(z in zone_strategy()) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("z.png");
            write_zone_mask(&p, &z, &ZoneMapping::default()).unwrap();
            prop_assert_eq!(load_zone_mask(&p, &ZoneMapping::default()).unwrap(), z);
        }

        #[test]
        fn front_mask_round_trip(f in front_strategy()) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("f.png");
            write_front_mask(&p, &f).unwrap();
            let back = load_front_mask(&p, 128).unwrap();
            prop_assert!(back.pixels().iter().all(|&(r, c)| r < back.height() && c < back.width()));
            prop_assert_eq!(back, f);
        }

        #[test]
        fn bbox_round_trip(x0 in 0usize..100, y0 in 0usize..100, dx in 0usize..100, dy in 0usize..100) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("b.txt");
            let b = BoundingBox { x_min: x0, y_min: y0, x_max: x0 + dx, y_max: y0 + dy };
            write_bbox(&p, &b).unwrap();
            prop_assert_eq!(load_bbox(&p).unwrap(), b);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let mut m = Manifest::new();
        for (i, sensor) in Sensor::ALL.into_iter().enumerate() {
            m.insert(SceneMeta {
                id: format!("scene_{i}"),
                glacier: "Columbia".into(),
                sensor,
                date: NaiveDate::from_ymd_opt(2000 + i as i32, 2, 28).unwrap(),
                season: if i % 2 == 0 { Season::Winter } else { Season::Summer },
                resolution_m: 6.5 + i as f64,
            })
            .unwrap();
        }
        write_manifest(&p, &m).unwrap();
        assert_eq!(load_manifest(&p).unwrap(), m);
    }
}
