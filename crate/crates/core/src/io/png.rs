use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};

use super::write_file;
use crate::depth::DepthMap;
use crate::normals::NormalMap;
use crate::Result;

/// Decoding parameters for a 16-bit depth PNG: `depth = value * depth_per_unit`,
/// and `value == invalid_value` marks pixels without depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthPngSidecar {
    pub depth_per_unit: f64,
    pub invalid_value: u16,
}

/// Writes the depth as 16-bit grayscale scaled so the largest depth maps to
/// 65535, plus a JSON sidecar (`<path>.json`) with the scale.
pub fn write_depth_png16(path: &Path, depth: &DepthMap) -> Result<DepthPngSidecar> {
    let max = depth
        .as_slice()
        .iter()
        .copied()
        .filter(|z| z.is_finite() && *z > 0.0)
        .fold(0.0, f64::max);
    let unit = if max > 0.0 { max / f64::from(u16::MAX) } else { 1.0 };
    let data: Vec<u16> = depth
        .as_slice()
        .iter()
        .map(|&z| {
            if z.is_finite() && z > 0.0 {
                (z / unit).round().clamp(1.0, f64::from(u16::MAX)) as u16
            } else {
                0
            }
        })
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width() as u32, depth.height() as u32, data).expect("buffer sized to image");
    img.save(path)?;
    let sidecar = DepthPngSidecar {
        depth_per_unit: unit,
        invalid_value: 0,
    };
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    write_file(Path::new(&side), &serde_json::to_vec_pretty(&sidecar).expect("plain struct"))?;
    Ok(sidecar)
}

/// RGB visualization `(n + 1) / 2`; invalid pixels are black.
pub fn write_normal_png(path: &Path, map: &NormalMap) -> Result<()> {
    let to_u8 = |c: f64| ((c + 1.0) * 0.5 * 255.0).round().clamp(0.0, 255.0) as u8;
    let img = ImageBuffer::from_fn(map.width() as u32, map.height() as u32, |x, y| {
        let i = map.normals.index(x as usize, y as usize);
        match map.get(i) {
            Some(n) => Rgb([to_u8(n.x), to_u8(n.y), to_u8(n.z)]),
            None => Rgb([0, 0, 0]),
        }
    });
    img.save(path)?;
    Ok(())
}
