//! Flat binary checkpoint.
//!
//! ```text
//! "NLAB" | version u32 | layer count u32 | input rank u32 | input dims u32*rank
//! per layer: kind tag u32 | tensor count u32 | per tensor: rank u32 | dims u32*rank | f64*prod
//! ```
//! All integers and floats little-endian.

use alloc::format;
use alloc::vec::Vec;

use super::{Layer, LayerKind, Network, Tensor};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"NLAB";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, t: &Tensor) {
    put_u32(out, t.shape().len() as u32);
    for &d in t.shape() {
        put_u32(out, d as u32);
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_network(net: &Network) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION);
    put_u32(&mut out, net.layers().len() as u32);
    put_u32(&mut out, net.input_shape().len() as u32);
    for &d in net.input_shape() {
        put_u32(&mut out, d as u32);
    }
    for layer in net.layers() {
        put_u32(&mut out, layer.kind().tag());
        match layer {
            Layer::Dense { weight, bias } | Layer::Conv2d { weight, bias } => {
                put_u32(&mut out, 2);
                put_tensor(&mut out, weight);
                put_tensor(&mut out, bias);
            }
            Layer::Relu | Layer::Flatten => put_u32(&mut out, 0),
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "checkpoint truncated at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn dims(&mut self) -> Result<Vec<usize>> {
        let rank = self.u32()? as usize;
        if rank > 8 {
            return Err(Error::Format(format!("implausible tensor rank {rank}")));
        }
        (0..rank).map(|_| self.u32().map(|d| d as usize)).collect()
    }

    fn tensor(&mut self) -> Result<Tensor> {
        let shape = self.dims()?;
        let n: usize = shape.iter().product();
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::new(shape, data)
    }
}

pub fn decode_network(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = r.u32()? as usize;
    let input_shape = r.dims()?;
    let mut layers = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let tag = r.u32()?;
        let kind = LayerKind::from_tag(tag)
            .ok_or_else(|| Error::Format(format!("unknown layer tag {tag}")))?;
        let tensors = r.u32()?;
        let layer = match (kind, tensors) {
            (LayerKind::Dense, 2) => Layer::Dense {
                weight: r.tensor()?,
                bias: r.tensor()?,
            },
            (LayerKind::Conv2d, 2) => Layer::Conv2d {
                weight: r.tensor()?,
                bias: r.tensor()?,
            },
            (LayerKind::Relu, 0) => Layer::Relu,
            (LayerKind::Flatten, 0) => Layer::Flatten,
            (k, n) => {
                return Err(Error::Format(format!("{k:?} layer with {n} tensors")));
            }
        };
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint",
            bytes.len() - r.pos
        )));
    }
    Network::new(input_shape, layers).map_err(|e| Error::Format(format!("{e}")))
}
