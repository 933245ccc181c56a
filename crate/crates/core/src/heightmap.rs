//! 4-channel heightmap state: orthographic grid images carrying RGB and
//! height (Z) above the table, plus the pixel/world coordinate mapping.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::error::{BinpickError, Result};

/// Upper bound on stored heights, meters. Covers the 0.20 m bin walls with
/// margin; the Z channel is normalized by this value for network input.
pub const Z_MAX: f32 = 0.30;

/// Geometry of the grid: world position of the (0,0) pixel corner, cell size,
/// and pixel counts. Rows map to y, columns to x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell: f64,
    pub height_px: usize,
    pub width_px: usize,
}

impl GridSpec {
    pub fn new(origin_x: f64, origin_y: f64, cell: f64, height_px: usize, width_px: usize) -> Result<Self> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(BinpickError::InputValidation(format!(
                "cell size must be positive and finite, got {cell}"
            )));
        }
        if height_px < 4 || width_px < 4 {
            return Err(BinpickError::InputValidation(format!(
                "grid must be at least 4x4 pixels, got {height_px}x{width_px}"
            )));
        }
        Ok(GridSpec {
            origin_x,
            origin_y,
            cell,
            height_px,
            width_px,
        })
    }

    /// 76 x 96 cells at 5 mm: 38 cm x 48 cm, the bin outer box plus margin.
    pub fn default_bin() -> Self {
        GridSpec {
            origin_x: 0.0,
            origin_y: 0.0,
            cell: 0.005,
            height_px: 76,
            width_px: 96,
        }
    }

    /// World extent covered by the grid: (width, height) in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width_px as f64 * self.cell,
            self.height_px as f64 * self.cell,
        )
    }

    /// World center of the grid.
    pub fn center(&self) -> (f64, f64) {
        let (w, h) = self.extent();
        (self.origin_x + 0.5 * w, self.origin_y + 0.5 * h)
    }

    pub fn in_bounds(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height_px && (col as usize) < self.width_px
    }
}

/// Map a world coordinate to the pixel containing it.
pub fn world_to_pixel(spec: &GridSpec, x: f64, y: f64) -> Result<(usize, usize)> {
    let col = ((x - spec.origin_x) / spec.cell).floor();
    let row = ((y - spec.origin_y) / spec.cell).floor();
    if col < 0.0 || row < 0.0 || col >= spec.width_px as f64 || row >= spec.height_px as f64 {
        return Err(BinpickError::Range(format!(
            "world point ({x}, {y}) outside grid extent"
        )));
    }
    Ok((row as usize, col as usize))
}

/// World coordinates of a pixel's cell center.
pub fn pixel_to_world(spec: &GridSpec, row: usize, col: usize) -> (f64, f64) {
    (
        spec.origin_x + (col as f64 + 0.5) * spec.cell,
        spec.origin_y + (row as f64 + 0.5) * spec.cell,
    )
}

/// Rotate pixel coordinates by `angle` about the image center, rounding to
/// the nearest pixel. None when the rotated pixel leaves the frame.
pub fn rotate_pixel(spec: &GridSpec, row: usize, col: usize, angle: f64) -> Option<(usize, usize)> {
    let cy = (spec.height_px as f64 - 1.0) * 0.5;
    let cx = (spec.width_px as f64 - 1.0) * 0.5;
    let (sin, cos) = angle.sin_cos();
    let dr = row as f64 - cy;
    let dc = col as f64 - cx;
    let nc = (cx + cos * dc - sin * dr).round();
    let nr = (cy + sin * dc + cos * dr).round();
    let (nr, nc) = (nr as i64, nc as i64);
    spec.in_bounds(nr, nc).then(|| (nr as usize, nc as usize))
}

/// The RL state: per-cell color in [0,1] and height in [0, Z_MAX] meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    pub spec: GridSpec,
    /// H x W x 3, values in [0, 1].
    pub rgb: Array3<f32>,
    /// H x W, meters in [0, Z_MAX].
    pub z: Array2<f32>,
}

impl Heightmap {
    pub fn zeros(spec: GridSpec) -> Self {
        Heightmap {
            spec,
            rgb: Array3::zeros((spec.height_px, spec.width_px, 3)),
            z: Array2::zeros((spec.height_px, spec.width_px)),
        }
    }

    /// Clamp all channels into their invariant ranges.
    pub fn clamp_ranges(&mut self) {
        self.rgb.mapv_inplace(|v| v.clamp(0.0, 1.0));
        self.z.mapv_inplace(|v| v.clamp(0.0, Z_MAX));
    }

    /// Network input tensor: channels (r, g, b, z / Z_MAX), shape [4, H, W].
    pub fn to_network_input(&self) -> Array3<f32> {
        let (h, w) = (self.spec.height_px, self.spec.width_px);
        let mut out = Array3::zeros((4, h, w));
        for r in 0..h {
            for c in 0..w {
                out[[0, r, c]] = self.rgb[[r, c, 0]];
                out[[1, r, c]] = self.rgb[[r, c, 1]];
                out[[2, r, c]] = self.rgb[[r, c, 2]];
                out[[3, r, c]] = self.z[[r, c]] / Z_MAX;
            }
        }
        out
    }

    /// Serialize: magic, version, JSON GridSpec header, then rgb and z as
    /// row-major little-endian f32.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"BPHM")?;
        w.write_u32::<LittleEndian>(1)?;
        let header = serde_json::to_vec(&self.spec)?;
        w.write_u32::<LittleEndian>(header.len() as u32)?;
        w.write_all(&header)?;
        for v in self.rgb.iter() {
            w.write_f32::<LittleEndian>(*v)?;
        }
        for v in self.z.iter() {
            w.write_f32::<LittleEndian>(*v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"BPHM" {
            return Err(BinpickError::Format("bad heightmap magic".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != 1 {
            return Err(BinpickError::Format(format!(
                "unsupported heightmap version {version}"
            )));
        }
        let hlen = r.read_u32::<LittleEndian>()? as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let spec: GridSpec = serde_json::from_slice(&hbuf)?;
        let (h, w) = (spec.height_px, spec.width_px);
        let mut rgb = Array3::zeros((h, w, 3));
        for v in rgb.iter_mut() {
            *v = r.read_f32::<LittleEndian>()?;
        }
        let mut z = Array2::zeros((h, w));
        for v in z.iter_mut() {
            *v = r.read_f32::<LittleEndian>()?;
        }
        Ok(Heightmap { spec, rgb, z })
    }
}

/// A point with color in the robot frame, input to projection.
#[derive(Debug, Clone, Copy)]
pub struct ColoredPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub r: f32,
    pub g: f32,
    pub b: f32,
}

/// Orthographic projection: per-cell maximum z wins and carries its color.
/// Points outside the grid extent are dropped; empty cells stay at z=0 black.
pub fn project_pointcloud(points: &[ColoredPoint], spec: GridSpec) -> Result<Heightmap> {
    for p in points {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(BinpickError::InputValidation(format!(
                "non-finite point coordinates ({}, {}, {})",
                p.x, p.y, p.z
            )));
        }
    }
    let mut hm = Heightmap::zeros(spec);
    let mut occupied = Array2::from_elem((spec.height_px, spec.width_px), false);
    for p in points {
        let Ok((row, col)) = world_to_pixel(&spec, p.x, p.y) else {
            continue;
        };
        let z = (p.z as f32).clamp(0.0, Z_MAX);
        if !occupied[[row, col]] || z > hm.z[[row, col]] {
            occupied[[row, col]] = true;
            hm.z[[row, col]] = z;
            hm.rgb[[row, col, 0]] = p.r.clamp(0.0, 1.0);
            hm.rgb[[row, col, 1]] = p.g.clamp(0.0, 1.0);
            hm.rgb[[row, col, 2]] = p.b.clamp(0.0, 1.0);
        }
    }
    Ok(hm)
}

/// Rotate the heightmap about the image center with nearest-neighbor
/// sampling. Cells rotated in from outside the frame are zero-filled.
pub fn rotate_heightmap(hm: &Heightmap, angle: f64) -> Heightmap {
    let spec = hm.spec;
    let mut out = Heightmap::zeros(spec);
    let cy = (spec.height_px as f64 - 1.0) * 0.5;
    let cx = (spec.width_px as f64 - 1.0) * 0.5;
    let (sin, cos) = angle.sin_cos();
    for r in 0..spec.height_px {
        for c in 0..spec.width_px {
            // Inverse rotation: where did this destination pixel come from?
            let dr = r as f64 - cy;
            let dc = c as f64 - cx;
            let sc = (cx + cos * dc + sin * dr).round();
            let sr = (cy - sin * dc + cos * dr).round();
            if spec.in_bounds(sr as i64, sc as i64) {
                let (sr, sc) = (sr as usize, sc as usize);
                out.z[[r, c]] = hm.z[[sr, sc]];
                for ch in 0..3 {
                    out.rgb[[r, c, ch]] = hm.rgb[[sr, sc, ch]];
                }
            }
        }
    }
    out
}

/// Boolean per-pixel annotation with the same grid as the map it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMask {
    pub spec: GridSpec,
    pub bits: Array2<bool>,
}

impl PixelMask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Row-major list of set pixels.
    pub fn set_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.spec.height_px {
            for c in 0..self.spec.width_px {
                if self.bits[[r, c]] {
                    out.push((r, c));
                }
            }
        }
        out
    }
}

/// Mask of cells whose height differs from the reference by more than
/// `threshold` meters. Symmetric in its two arguments.
pub fn change_mask(current: &Heightmap, reference: &Heightmap, threshold: f64) -> Result<PixelMask> {
    if current.spec != reference.spec {
        return Err(BinpickError::InputValidation(
            "change_mask requires matching grid specs".into(),
        ));
    }
    let spec = current.spec;
    let mut bits = Array2::from_elem((spec.height_px, spec.width_px), false);
    for r in 0..spec.height_px {
        for c in 0..spec.width_px {
            let diff = (current.z[[r, c]] as f64 - reference.z[[r, c]] as f64).abs();
            bits[[r, c]] = diff > threshold;
        }
    }
    Ok(PixelMask { spec, bits })
}

/// 8-bit image panels for the CLI `render` command.
pub fn rgb_panel(hm: &Heightmap) -> image::RgbImage {
    let (h, w) = (hm.spec.height_px as u32, hm.spec.width_px as u32);
    image::RgbImage::from_fn(w, h, |x, y| {
        let (r, c) = (y as usize, x as usize);
        image::Rgb([
            (hm.rgb[[r, c, 0]].clamp(0.0, 1.0) * 255.0).round() as u8,
            (hm.rgb[[r, c, 1]].clamp(0.0, 1.0) * 255.0).round() as u8,
            (hm.rgb[[r, c, 2]].clamp(0.0, 1.0) * 255.0).round() as u8,
        ])
    })
}

pub fn z_panel(hm: &Heightmap) -> image::GrayImage {
    let (h, w) = (hm.spec.height_px as u32, hm.spec.width_px as u32);
    image::GrayImage::from_fn(w, h, |x, y| {
        let v = (hm.z[[y as usize, x as usize]] / Z_MAX).clamp(0.0, 1.0);
        image::Luma([(v * 255.0).round() as u8])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> GridSpec {
        GridSpec::default_bin()
    }

    #[test]
    fn projection_places_point_in_expected_cell() {
        let pts = [ColoredPoint {
            x: 0.1025,
            y: 0.0125,
            z: 0.05,
            r: 0.5,
            g: 0.2,
            b: 0.1,
        }];
        let hm = project_pointcloud(&pts, spec()).unwrap();
        assert!((hm.z[[2, 20]] - 0.05).abs() < 1e-7);
        assert_eq!(hm.z.iter().filter(|v| **v > 0.0).count(), 1);
    }

    #[test]
    fn projection_empty_cloud_is_all_zero() {
        let hm = project_pointcloud(&[], spec()).unwrap();
        assert!(hm.z.iter().all(|v| *v == 0.0));
        assert!(hm.rgb.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn projection_max_rule_keeps_topmost_color() {
        let mk = |z, r| ColoredPoint {
            x: 0.05,
            y: 0.05,
            z,
            r,
            g: 0.0,
            b: 0.0,
        };
        let hm = project_pointcloud(&[mk(0.03, 0.3), mk(0.07, 0.7)], spec()).unwrap();
        let (row, col) = world_to_pixel(&spec(), 0.05, 0.05).unwrap();
        assert!((hm.z[[row, col]] - 0.07).abs() < 1e-7);
        assert!((hm.rgb[[row, col, 0]] - 0.7).abs() < 1e-7);
    }

    #[test]
    fn projection_rejects_non_finite() {
        let pts = [ColoredPoint {
            x: f64::NAN,
            y: 0.0,
            z: 0.0,
            r: 0.0,
            g: 0.0,
            b: 0.0,
        }];
        assert!(matches!(
            project_pointcloud(&pts, spec()),
            Err(BinpickError::InputValidation(_))
        ));
    }

    #[test]
    fn pixel_world_round_trips() {
        let s = spec();
        assert_eq!(pixel_to_world(&s, 0, 0), (0.0025, 0.0025));
        assert_eq!(world_to_pixel(&s, 0.0025, 0.0025).unwrap(), (0, 0));
        let (x, y) = pixel_to_world(&s, 37, 55);
        assert_eq!(world_to_pixel(&s, x, y).unwrap(), (37, 55));
        assert!(world_to_pixel(&s, -0.001, 0.01).is_err());
        assert!(world_to_pixel(&s, 0.481, 0.01).is_err());
    }

    #[test]
    fn rotation_identity_and_pi_involution() {
        let mut hm = Heightmap::zeros(spec());
        hm.z[[10, 30]] = 0.05;
        hm.rgb[[10, 30, 1]] = 0.8;
        let same = rotate_heightmap(&hm, 0.0);
        assert_eq!(same, hm);
        let once = rotate_heightmap(&hm, PI);
        assert!((once.z[[75 - 10, 95 - 30]] - 0.05).abs() < 1e-7);
        let twice = rotate_heightmap(&once, PI);
        assert_eq!(twice, hm);
    }

    #[test]
    fn rotate_pixel_matches_heightmap_rotation() {
        let s = spec();
        let (r, c) = (12, 40);
        assert_eq!(rotate_pixel(&s, r, c, PI), Some((75 - r, 95 - c)));
        assert_eq!(rotate_pixel(&s, r, c, 0.0), Some((r, c)));
        // A corner pixel rotated by pi/2 leaves the non-square frame.
        assert_eq!(rotate_pixel(&s, 0, 0, PI / 2.0), None);
    }

    #[test]
    fn change_mask_thresholding() {
        let reference = Heightmap::zeros(spec());
        let mut current = reference.clone();
        current.z[[5, 5]] = 0.04;
        let empty = change_mask(&reference, &reference, 0.01).unwrap();
        assert_eq!(empty.count(), 0);
        let one = change_mask(&current, &reference, 0.01).unwrap();
        assert_eq!(one.set_pixels(), vec![(5, 5)]);
        let none = change_mask(&current, &reference, 0.05).unwrap();
        assert_eq!(none.count(), 0);
        // Symmetry.
        let flipped = change_mask(&reference, &current, 0.01).unwrap();
        assert_eq!(flipped.bits, one.bits);
    }

    #[test]
    fn heightmap_container_round_trip() {
        let mut hm = Heightmap::zeros(spec());
        hm.z[[3, 4]] = 0.123;
        hm.rgb[[3, 4, 2]] = 0.5;
        let mut buf = Vec::new();
        hm.write_to(&mut buf).unwrap();
        let back = Heightmap::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, hm);
    }
}
