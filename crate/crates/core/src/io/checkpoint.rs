//! Binary checkpoint, all little-endian:
//!
//! ```text
//! "NMBG"  u32 version
//! fg descriptors   u32 N, u32 9, u32 8, N·72 × f32
//! bg descriptors   (same layout)
//! head             u32 in_channels, u32 hidden,
//!                  then w_fg, w_bg, w_out, b_out each as u32 rows, u32 cols, rows·cols × f32
//! split            3 × f64 center, f64 radius
//! ```

use std::path::Path;

use crate::descriptors::{DescriptorSet, FEATURE_DIM, SH_COEFFS};
use crate::diffrender::head::{RenderHeadParams, RGB};
use crate::diffrender::pipeline::SceneModel;
use crate::error::{Error, Result};
use crate::geometry::SceneSplit;
use crate::linalg::Vec3;
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"NMBG";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub fg: DescriptorSet<f32>,
    pub bg: DescriptorSet<f32>,
    pub head: RenderHeadParams<f32>,
    pub split: SceneSplit<f64>,
}

impl Checkpoint {
    pub fn from_model<T: Real>(model: &SceneModel<T>, split: &SceneSplit<T>) -> Self {
        Self {
            fg: model.fg.cast(),
            bg: model.bg.cast(),
            head: model.head.cast(),
            split: SceneSplit {
                center: split.center.cast(),
                radius: split.radius.to_f64_lossy(),
            },
        }
    }

    pub fn model<T: Real>(&self) -> SceneModel<T> {
        SceneModel {
            fg: self.fg.cast(),
            bg: self.bg.cast(),
            head: self.head.cast(),
        }
    }

    pub fn scene_split<T: Real>(&self) -> SceneSplit<T> {
        SceneSplit {
            center: self.split.center.cast(),
            radius: T::lit(self.split.radius),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        for set in [&self.fg, &self.bg] {
            put_u32(&mut out, set.len() as u32);
            put_u32(&mut out, SH_COEFFS as u32);
            put_u32(&mut out, FEATURE_DIM as u32);
            put_f32s(&mut out, set.as_slice());
        }
        let h = &self.head;
        put_u32(&mut out, h.in_channels as u32);
        put_u32(&mut out, h.hidden as u32);
        for (t, (rows, cols)) in h.tensors().into_iter().zip(head_shapes(h.in_channels, h.hidden)) {
            put_u32(&mut out, rows as u32);
            put_u32(&mut out, cols as u32);
            put_f32s(&mut out, t);
        }
        for v in self.split.center.to_array() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.split.radius.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::parse("bad checkpoint magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: VERSION,
            });
        }
        let fg = r.descriptors()?;
        let bg = r.descriptors()?;
        let (c, hidden) = (r.u32()? as usize, r.u32()? as usize);
        let mut head = RenderHeadParams {
            in_channels: c,
            hidden,
            w_fg: Vec::new(),
            w_bg: Vec::new(),
            w_out: Vec::new(),
            b_out: Vec::new(),
        };
        for (slot, (rows, cols)) in head_slots(&mut head).into_iter().zip(head_shapes(c, hidden)) {
            let (r_, c_) = (r.u32()? as usize, r.u32()? as usize);
            if (r_, c_) != (rows, cols) {
                return Err(Error::parse(format!(
                    "head tensor is {r_}x{c_}, expected {rows}x{cols}"
                )));
            }
            *slot = r.f32s(rows.checked_mul(cols).ok_or_else(|| Error::parse("head too large"))?)?;
        }
        head.validate().map_err(|e| Error::parse(e.to_string()))?;
        let center = Vec3::new(r.f64()?, r.f64()?, r.f64()?);
        let radius = r.f64()?;
        let split = SceneSplit::new(center, radius).map_err(|e| Error::parse(e.to_string()))?;
        if r.pos != bytes.len() {
            return Err(Error::parse(format!(
                "{} trailing bytes after checkpoint",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { fg, bg, head, split })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn head_shapes(c: usize, h: usize) -> [(usize, usize); 4] {
    [(c, h), (c, h), (2 * h, RGB), (1, RGB)]
}

fn head_slots(h: &mut RenderHeadParams<f32>) -> [&mut Vec<f32>; 4] {
    [&mut h.w_fg, &mut h.w_bg, &mut h.w_out, &mut h.b_out]
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, data: &[f32]) {
    out.reserve(data.len() * 4);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::parse("checkpoint is truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// Length is checked against the remaining bytes before allocating.
    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::parse("tensor too large"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect())
    }

    fn descriptors(&mut self) -> Result<DescriptorSet<f32>> {
        let (n, k, c) = (self.u32()? as usize, self.u32()? as usize, self.u32()? as usize);
        if (k, c) != (SH_COEFFS, FEATURE_DIM) {
            return Err(Error::parse(format!(
                "descriptor tensor is {n}x{k}x{c}, expected Nx{SH_COEFFS}x{FEATURE_DIM}"
            )));
        }
        let data = self.f32s(n.checked_mul(k * c).ok_or_else(|| Error::parse("tensor too large"))?)?;
        DescriptorSet::from_vec(n, data).map_err(|e| Error::parse(e.to_string()))
    }
}
