//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! | bytes          | content                                              |
//! |----------------|------------------------------------------------------|
//! | 8              | magic `b"LNNCKPT\0"`                                 |
//! | 4  (u32)       | format version, currently 1                          |
//! | 8  (u64)       | descriptor length `N`                                |
//! | N              | UTF-8 JSON `{"input_shape": [...], "layers": [...]}` |
//! | 8  (u64)       | array count `M`                                      |
//! | M × (8 + 8·len)| per array: u64 element count, then `f64` LE values   |
//!
//! Arrays follow layer order; within a layer, trainable parameters in
//! declaration order come first, then buffers (batch-norm running mean and
//! variance). See `docs/checkpoint.md` for the per-layer listing.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{LayerSpec, Network, NnError};

pub const MAGIC: &[u8; 8] = b"LNNCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic)")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("malformed descriptor: {0}")]
    Descriptor(#[from] serde_json::Error),
    #[error("array {index}: expected {expected} values, file holds {got}")]
    ArrayLength { index: usize, expected: usize, got: usize },
    #[error("expected {expected} arrays, file holds {got}")]
    ArrayCount { expected: usize, got: usize },
    #[error(transparent)]
    Network(#[from] NnError),
}

#[derive(Debug, Serialize, Deserialize)]
struct Descriptor {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
}

pub fn save<W: Write>(net: &Network, mut out: W) -> Result<(), CheckpointError> {
    let descriptor = serde_json::to_vec(&Descriptor {
        input_shape: net.input_shape().to_vec(),
        layers: net.specs(),
    })?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(descriptor.len() as u64).to_le_bytes())?;
    out.write_all(&descriptor)?;
    let arrays = arrays(net);
    out.write_all(&(arrays.len() as u64).to_le_bytes())?;
    for a in arrays {
        out.write_all(&(a.len() as u64).to_le_bytes())?;
        for v in a {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn arrays(net: &Network) -> Vec<&[f64]> {
    net.layers()
        .iter()
        .flat_map(|l| {
            let mut v = l.params();
            v.extend(l.buffers());
            v
        })
        .collect()
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn load<R: Read>(mut input: R) -> Result<Network, CheckpointError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::Magic);
    }
    let mut version = [0u8; 4];
    input.read_exact(&mut version)?;
    let version = u32::from_le_bytes(version);
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let len = read_u64(&mut input)? as usize;
    let mut descriptor = vec![0u8; len];
    input.read_exact(&mut descriptor)?;
    let descriptor: Descriptor = serde_json::from_slice(&descriptor)?;
    let mut net = Network::new(descriptor.input_shape, &descriptor.layers, 0)?;

    let count = read_u64(&mut input)? as usize;
    let expected = arrays(&net).len();
    if expected != count {
        return Err(CheckpointError::ArrayCount { expected, got: count });
    }

    let mut index = 0;
    for layer in net.layers_mut() {
        for target in layer.params_mut() {
            read_array(&mut input, target, index)?;
            index += 1;
        }
        for target in layer.buffers_mut() {
            read_array(&mut input, target, index)?;
            index += 1;
        }
    }
    Ok(net)
}

fn read_array<R: Read>(input: &mut R, target: &mut [f64], index: usize) -> Result<(), CheckpointError> {
    let len = read_u64(input)? as usize;
    if len != target.len() {
        return Err(CheckpointError::ArrayLength { index, expected: target.len(), got: len });
    }
    let mut buf = [0u8; 8];
    for v in target.iter_mut() {
        input.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LauKind, Mode};
    use crate::tensor::Tensor;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut net = Network::mnist(LauKind::Complex, 4, 12).unwrap();
        for (i, p) in net.params_mut().into_iter().enumerate() {
            for (j, v) in p.iter_mut().enumerate() {
                *v += ((i * 31 + j) as f64).sin() * 1e-3;
            }
        }
        // populate running statistics
        let x = Tensor::new(vec![2, 1, 28, 28], (0..1568).map(|i| (i % 7) as f64 / 7.0).collect()).unwrap();
        net.forward(&x, Mode::Train).unwrap();

        let mut bytes = Vec::new();
        save(&net, &mut bytes).unwrap();
        let mut loaded = load(bytes.as_slice()).unwrap();
        assert_eq!(loaded.specs(), net.specs());
        for (a, b) in loaded.params().iter().zip(net.params()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        for (a, b) in loaded.buffers().iter().zip(net.buffers()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let mut again = Vec::new();
        save(&loaded, &mut again).unwrap();
        assert_eq!(bytes, again);
        assert_eq!(
            loaded.forward(&x, Mode::Inference).unwrap(),
            net.forward(&x, Mode::Inference).unwrap()
        );
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(load(&b"NOTACKPT\x01\0\0\0"[..]), Err(CheckpointError::Magic)));
        let mut bytes = Vec::new();
        save(&Network::tabular(4, 3, LauKind::Real, 3, 0).unwrap(), &mut bytes).unwrap();
        bytes[8] = 9;
        assert!(matches!(load(bytes.as_slice()), Err(CheckpointError::Version(9))));
        let mut bytes = Vec::new();
        save(&Network::tabular(4, 3, LauKind::Real, 3, 0).unwrap(), &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(load(bytes.as_slice()), Err(CheckpointError::Io(_))));
    }
}
