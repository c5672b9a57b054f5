//! Model files: `ACNN` container holding the topology block followed by all
//! kernels and biases as little-endian `f64`.
//!
//! Topology block (all `u32` unless noted): input rows, input cols, input
//! channels, CNN layer count, CNN widths, MLP layer count, MLP widths,
//! kernel size, subsampling factor, activation id (`u8`), pooling id (`u8`).
//! Parameters follow layer by layer (CNN layers, then MLP layers); within a
//! layer, weights ordered by destination neuron, then source neuron, then
//! kernel row-major, followed by the layer's biases.

use std::path::Path;

use super::network::Network;
use super::topology::{Activation, Pooling, Topology};
use crate::container::{self, FormatError, Reader, Writer};
use crate::Error;

pub const MAGIC: [u8; 4] = *b"ACNN";

pub fn to_bytes(net: &Network) -> Vec<u8> {
    let t = net.topology();
    let mut w = Writer::new();
    w.u32(t.input_dims.0 as u32);
    w.u32(t.input_dims.1 as u32);
    w.u32(t.input_channels as u32);
    w.u32(t.cnn_neurons.len() as u32);
    t.cnn_neurons.iter().for_each(|&n| w.u32(n as u32));
    w.u32(t.mlp_neurons.len() as u32);
    t.mlp_neurons.iter().for_each(|&n| w.u32(n as u32));
    w.u32(t.kernel_size as u32);
    w.u32(t.subsample as u32);
    w.u8(t.activation.id());
    w.u8(t.pooling.id());
    for layer in net.layers() {
        w.f64s(&layer.weights);
        w.f64s(&layer.biases);
    }
    container::seal(MAGIC, &w.into_bytes())
}

const MAX_LAYERS: u32 = 64;

pub fn from_bytes(bytes: &[u8]) -> Result<Network, FormatError> {
    let payload = container::open(MAGIC, bytes)?;
    let mut r = Reader::new(payload);
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let input_channels = r.u32()? as usize;
    let widths = |r: &mut Reader| -> Result<Vec<usize>, FormatError> {
        let n = r.u32()?;
        if n > MAX_LAYERS {
            return Err(FormatError::Malformed(format!("{n} layers")));
        }
        (0..n).map(|_| r.u32().map(|v| v as usize)).collect()
    };
    let cnn_neurons = widths(&mut r)?;
    let mlp_neurons = widths(&mut r)?;
    let kernel_size = r.u32()? as usize;
    let subsample = r.u32()? as usize;
    let activation = Activation::from_id(r.u8()?).ok_or_else(|| FormatError::Malformed("activation id".into()))?;
    let pooling = Pooling::from_id(r.u8()?).ok_or_else(|| FormatError::Malformed("pooling id".into()))?;
    let topology = Topology {
        input_dims: (rows, cols),
        input_channels,
        cnn_neurons,
        mlp_neurons,
        kernel_size,
        subsample,
        activation,
        pooling,
    };
    let mut net = Network::zeros(topology).map_err(|e| FormatError::Malformed(e.to_string()))?;
    for layer in net.layers_mut() {
        layer.weights = r.f64s(layer.weights.len())?;
        layer.biases = r.f64s(layer.biases.len())?;
    }
    r.finish()?;
    Ok(net)
}

pub fn save_model(net: &Network, path: &Path) -> Result<(), Error> {
    std::fs::write(path, to_bytes(net)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Network, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(from_bytes(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = Topology { pooling: Pooling::Max, activation: Activation::Sigmoid, ..Topology::small() };
        let net = Network::random(t, 0.1, &mut rng).unwrap();
        let back = from_bytes(&to_bytes(&net)).unwrap();
        assert_eq!(back.topology(), net.topology());
        let a: Vec<u64> = net.params().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.params().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupt_files_rejected() {
        let net = Network::zeros(Topology::small()).unwrap();
        let bytes = to_bytes(&net);
        assert!(matches!(from_bytes(&[]), Err(FormatError::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(FormatError::BadMagic { .. })));
        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 10] ^= 1;
        assert!(matches!(from_bytes(&bad), Err(FormatError::ChecksumMismatch { .. })));
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 1]), Err(FormatError::Truncated { .. })));
        // A sealed payload that is valid bytes but the wrong container kind.
        let svm_like = crate::container::seal(*b"ASVM", &[0; 8]);
        assert!(matches!(from_bytes(&svm_like), Err(FormatError::BadMagic { .. })));
    }
}
