//! Little-endian float rasters.
//!
//! Layout: 4-byte kind tag (`NMAP`, `DMAP` or `BMAP`), `u32` version,
//! `u32` width, `u32` height, then `width * height * channels` `f32`
//! values in row-major, channel-interleaved order. Pixels without data
//! hold NaN in every channel.

use crate::depth::DepthMap;
use crate::grid::Grid;
use crate::metrics::BoundaryPrediction;
use crate::normals::{Normal, NormalMap};
use crate::{Error, Result};

pub const RASTER_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    /// Unit normals, 3 channels.
    Normal,
    /// Depth, 1 channel.
    Depth,
    /// Boundary probabilities (edge, fold), 2 channels.
    Boundary,
}

impl RasterKind {
    pub fn tag(self) -> &'static [u8; 4] {
        match self {
            RasterKind::Normal => b"NMAP",
            RasterKind::Depth => b"DMAP",
            RasterKind::Boundary => b"BMAP",
        }
    }

    pub fn channels(self) -> usize {
        match self {
            RasterKind::Normal => 3,
            RasterKind::Depth => 1,
            RasterKind::Boundary => 2,
        }
    }

    fn from_tag(tag: &[u8]) -> Option<Self> {
        [RasterKind::Normal, RasterKind::Depth, RasterKind::Boundary]
            .into_iter()
            .find(|k| k.tag() == tag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub kind: RasterKind,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Raster {
    pub fn pixel(&self, idx: usize) -> &[f32] {
        let c = self.kind.channels();
        &self.data[idx * c..(idx + 1) * c]
    }
}

pub fn encode_raster(r: &Raster) -> Vec<u8> {
    assert_eq!(r.data.len(), r.width * r.height * r.kind.channels());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * r.data.len());
    out.extend_from_slice(r.kind.tag());
    out.extend_from_slice(&RASTER_VERSION.to_le_bytes());
    out.extend_from_slice(&(r.width as u32).to_le_bytes());
    out.extend_from_slice(&(r.height as u32).to_le_bytes());
    for v in &r.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raster(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("raster header truncated ({} bytes)", bytes.len())));
    }
    let kind = RasterKind::from_tag(&bytes[..4])
        .ok_or_else(|| Error::Format(format!("unknown raster tag {:?}", String::from_utf8_lossy(&bytes[..4]))))?;
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != RASTER_VERSION {
        return Err(Error::Format(format!("unsupported raster version {version}")));
    }
    let (width, height) = (word(8) as usize, word(12) as usize);
    let n = width * height * kind.channels();
    if bytes.len() != HEADER_LEN + 4 * n {
        return Err(Error::Format(format!(
            "raster body is {} bytes, expected {}",
            bytes.len() - HEADER_LEN,
            4 * n
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(Raster {
        kind,
        width,
        height,
        data,
    })
}

pub fn normals_to_raster(map: &NormalMap) -> Raster {
    let mut data = Vec::with_capacity(3 * map.normals.len());
    for i in 0..map.normals.len() {
        match map.get(i) {
            Some(n) => data.extend([n.x as f32, n.y as f32, n.z as f32]),
            None => data.extend([f32::NAN; 3]),
        }
    }
    Raster {
        kind: RasterKind::Normal,
        width: map.width(),
        height: map.height(),
        data,
    }
}

pub fn depth_to_raster(depth: &DepthMap) -> Raster {
    Raster {
        kind: RasterKind::Depth,
        width: depth.width(),
        height: depth.height(),
        data: depth.as_slice().iter().map(|&z| z as f32).collect(),
    }
}

pub fn depth_from_raster(r: &Raster) -> Result<DepthMap> {
    expect_kind(r, RasterKind::Depth)?;
    Ok(Grid::from_vec(r.width, r.height, r.data.iter().map(|&z| z as f64).collect()))
}

/// Normals plus validity (any NaN channel marks the pixel invalid).
pub fn normals_from_raster(r: &Raster) -> Result<NormalMap> {
    expect_kind(r, RasterKind::Normal)?;
    let px = |i: usize| r.pixel(i);
    let valid = Grid::from_vec(r.width, r.height, (0..r.width * r.height).map(|i| px(i).iter().all(|v| v.is_finite())).collect());
    let normals = Grid::from_vec(
        r.width,
        r.height,
        (0..r.width * r.height)
            .map(|i| {
                let p = px(i);
                if valid[i] {
                    Normal::new(p[0] as f64, p[1] as f64, p[2] as f64)
                } else {
                    Normal::z()
                }
            })
            .collect(),
    );
    Ok(NormalMap { normals, valid })
}

pub fn boundary_to_raster(pred: &BoundaryPrediction) -> Raster {
    let mut data = Vec::with_capacity(2 * pred.edge.len());
    for i in 0..pred.edge.len() {
        data.extend([pred.edge[i] as f32, pred.fold[i] as f32]);
    }
    Raster {
        kind: RasterKind::Boundary,
        width: pred.edge.width(),
        height: pred.edge.height(),
        data,
    }
}

/// Edge and fold probabilities; NaN reads as 0.
pub fn boundary_from_raster(r: &Raster) -> Result<BoundaryPrediction> {
    expect_kind(r, RasterKind::Boundary)?;
    let channel = |c: usize| {
        let v = (0..r.width * r.height)
            .map(|i| {
                let x = r.pixel(i)[c] as f64;
                if x.is_nan() {
                    0.0
                } else {
                    x
                }
            })
            .collect();
        Grid::from_vec(r.width, r.height, v)
    };
    Ok(BoundaryPrediction {
        edge: channel(0),
        fold: channel(1),
    })
}

fn expect_kind(r: &Raster, kind: RasterKind) -> Result<()> {
    if r.kind == kind {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "expected a {} raster, found {}",
            String::from_utf8_lossy(kind.tag()),
            String::from_utf8_lossy(r.kind.tag())
        )))
    }
}
