//! Binary model format.
//!
//! ```text
//! magic "VXCN" | version u16 | input_dim, conv1_filters, conv2_filters, kernel, pool,
//! dense_units, param_count: u32 | mean[input_dim] f32 | inv_std[input_dim] f32 |
//! params[param_count] f32 | sha256 of everything before it (32 bytes)
//! ```
//! All integers and floats are little-endian.

use sha2::{Digest, Sha256};

use super::net::{self, Layout};
use super::{CnnError, CnnModel, Standardizer};

pub const MODEL_MAGIC: &[u8; 4] = b"VXCN";
pub const MODEL_VERSION: u16 = 1;
const DIGEST_LEN: usize = 32;
const HEADER_LEN: usize = 4 + 2 + 7 * 4;

pub fn save_model(model: &CnnModel) -> Vec<u8> {
    let layout = model.layout();
    let dim = layout.input_dim;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * (2 * dim + layout.total) + DIGEST_LEN);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [
        dim,
        net::CONV1_FILTERS,
        net::CONV2_FILTERS,
        net::KERNEL,
        net::POOL,
        net::DENSE_UNITS,
        layout.total,
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let std = model.standardizer();
    for v in std.mean.iter().chain(&std.inv_std).chain(model.params()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

fn read_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub fn load_model(bytes: &[u8]) -> Result<CnnModel, CnnError> {
    let corrupt = |m: &str| CnnError::CorruptPayload(m.to_string());
    if bytes.len() < 6 || &bytes[..4] != MODEL_MAGIC {
        return Err(corrupt("missing model magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(CnnError::VersionMismatch {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(corrupt("truncated header"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(corrupt("checksum mismatch"));
    }

    let field = |i: usize| {
        let at = 6 + 4 * i;
        u32::from_le_bytes([body[at], body[at + 1], body[at + 2], body[at + 3]]) as usize
    };
    let dim = field(0);
    let arch = [field(1), field(2), field(3), field(4), field(5)];
    if arch != [net::CONV1_FILTERS, net::CONV2_FILTERS, net::KERNEL, net::POOL, net::DENSE_UNITS] {
        return Err(corrupt("layer specs differ from this build's architecture"));
    }
    let count = field(6);
    if count != Layout::new(dim).total {
        return Err(corrupt("parameter count does not match layer specs"));
    }
    let payload = &body[HEADER_LEN..];
    if payload.len() != 4 * (2 * dim + count) {
        return Err(corrupt("payload length does not match header"));
    }
    let floats = read_f32s(payload);
    let standardizer = Standardizer {
        mean: floats[..dim].to_vec(),
        inv_std: floats[dim..2 * dim].to_vec(),
    };
    CnnModel::from_parts(dim, standardizer, floats[2 * dim..].to_vec())
}
