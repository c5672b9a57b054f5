use rand::Rng;
use serde::{Deserialize, Serialize};

use super::map::{avg_pool, conv_valid_acc, max_pool, Map};
use super::topology::{ConvGeometry, Pooling, Topology};
use super::AcnnError;
use crate::imaging::LowResPatch;
use crate::par;

/// Weights and biases of one layer.
///
/// CNN layers store `outputs x inputs` kernels of `K x K` values in
/// destination-major, source-minor, row-major order; MLP layers (including
/// the first one, which reads the scalar outputs of the last CNN layer)
/// store `outputs x inputs` scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(weights: usize, biases: usize) -> Self {
        Self { weights: vec![0.0; weights], biases: vec![0.0; biases] }
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parameters of an adaptive CNN together with its derived geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    topology: Topology,
    geometry: Vec<ConvGeometry>,
    /// CNN layers.
    pub conv: Vec<LayerParams>,
    /// MLP layers, output layer last.
    pub dense: Vec<LayerParams>,
}

impl Network {
    /// Network with every parameter zero.
    pub fn zeros(topology: Topology) -> Result<Self, AcnnError> {
        let geometry = topology.conv_geometry()?;
        let k2 = topology.kernel_size * topology.kernel_size;
        let conv = geometry.iter().map(|g| LayerParams::zeros(g.inputs * g.outputs * k2, g.outputs)).collect();
        let mut dense = Vec::with_capacity(topology.mlp_neurons.len());
        let mut inputs = *topology.cnn_neurons.last().unwrap();
        for &outputs in &topology.mlp_neurons {
            dense.push(LayerParams::zeros(inputs * outputs, outputs));
            inputs = outputs;
        }
        Ok(Self { topology, geometry, conv, dense })
    }

    /// Parameters drawn independently from `U(-range, range)`.
    pub fn random(topology: Topology, range: f64, rng: &mut impl Rng) -> Result<Self, AcnnError> {
        let mut net = Self::zeros(topology)?;
        net.for_each_param_mut(|p| *p = rng.gen_range(-range..=range));
        Ok(net)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn geometry(&self) -> &[ConvGeometry] {
        &self.geometry
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(LayerParams::len).sum()
    }

    /// All layers in storage order (CNN first, then MLP).
    pub fn layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.conv.iter().chain(&self.dense)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut LayerParams> {
        self.conv.iter_mut().chain(self.dense.iter_mut())
    }

    /// Visits every parameter in the persisted traversal order: per layer,
    /// weights then biases.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for layer in self.layers_mut() {
            layer.weights.iter_mut().chain(layer.biases.iter_mut()).for_each(&mut f);
        }
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers().flat_map(|l| l.weights.iter().chain(&l.biases).copied()).collect()
    }

    /// Flat index -> mutable parameter reference.
    pub fn param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for layer in self.layers_mut() {
            let n = layer.weights.len();
            if index < n {
                return Some(&mut layer.weights[index]);
            }
            index -= n;
            let m = layer.biases.len();
            if index < m {
                return Some(&mut layer.biases[index]);
            }
            index -= m;
        }
        None
    }

    fn check_input(&self, input: &[Map]) -> Result<(), AcnnError> {
        if input.len() != self.topology.input_channels {
            return Err(AcnnError::Shape(format!(
                "{} input planes, topology expects {}",
                input.len(),
                self.topology.input_channels
            )));
        }
        if let Some(p) = input.iter().find(|p| p.dims() != self.topology.input_dims) {
            return Err(AcnnError::Shape(format!(
                "input plane is {}x{}, topology expects {}x{}",
                p.rows(),
                p.cols(),
                self.topology.input_dims.0,
                self.topology.input_dims.1
            )));
        }
        Ok(())
    }

    /// Forward propagation; fills `cache` and returns the output-layer
    /// activations.
    pub fn forward(&self, cache: &mut ForwardCache, input: &[Map]) -> Result<Vec<f64>, AcnnError> {
        self.check_input(input)?;
        let act = self.topology.activation;
        let k = self.topology.kernel_size;
        let k2 = k * k;
        cache.input = input.to_vec();
        cache.conv.clear();
        for (j, (g, params)) in self.geometry.iter().zip(&self.conv).enumerate() {
            let prev: &[Map] = if j == 0 { &cache.input } else { &cache.conv[j - 1].s };
            let pooling = self.topology.pooling;
            let neurons: Vec<NeuronState> = par::map_range(g.outputs, |dst| {
                // x_k = b_k + sum_i conv(s_i, w_ik)
                let mut x = Map::filled(g.map_dims.0, g.map_dims.1, params.biases[dst]);
                for (src, s) in prev.iter().enumerate() {
                    let off = (dst * g.inputs + src) * k2;
                    conv_valid_acc(&mut x, s, &params.weights[off..off + k2], k, k);
                }
                let y = x.map(|v| act.apply(v));
                let (s, argmax) = match pooling {
                    Pooling::Average => (avg_pool(&y, g.pool.0, g.pool.1), Vec::new()),
                    Pooling::Max => max_pool(&y, g.pool.0, g.pool.1),
                };
                NeuronState { x, y, s, argmax }
            });
            let mut layer = ConvCache::default();
            for n in neurons {
                layer.x.push(n.x);
                layer.y.push(n.y);
                layer.s.push(n.s);
                layer.argmax.push(n.argmax);
            }
            cache.conv.push(layer);
        }

        cache.dense.clear();
        let mut input_vec: Vec<f64> = cache.conv.last().unwrap().s.iter().map(|s| s.get(0, 0)).collect();
        cache.flat = input_vec.clone();
        for params in &self.dense {
            let n_in = input_vec.len();
            let x: Vec<f64> = params
                .biases
                .iter()
                .enumerate()
                .map(|(dst, &b)| b + dot(&params.weights[dst * n_in..(dst + 1) * n_in], &input_vec))
                .collect();
            let y: Vec<f64> = x.iter().map(|&v| act.apply(v)).collect();
            input_vec = y.clone();
            cache.dense.push(DenseCache { x, y });
        }
        Ok(input_vec)
    }

    /// Forward pass on a network-resolution patch.
    pub fn forward_patch(&self, cache: &mut ForwardCache, patch: &LowResPatch) -> Result<Vec<f64>, AcnnError> {
        self.forward(cache, &input_maps(patch))
    }

    /// Output activations mapped affinely to `[0, 1]`, used as per-class
    /// scores for patch voting.
    pub fn scores(&self, input: &[Map]) -> Result<Vec<f64>, AcnnError> {
        let mut cache = ForwardCache::default();
        let y = self.forward(&mut cache, input)?;
        let (lo, hi) = self.topology.activation.range();
        Ok(y.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect())
    }
}

struct NeuronState {
    x: Map,
    y: Map,
    s: Map,
    argmax: Vec<usize>,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Converts a low-resolution patch into the three input planes.
pub fn input_maps(patch: &LowResPatch) -> Vec<Map> {
    patch
        .planes
        .iter()
        .map(|p| Map::from_vec(patch.size, patch.size, p.clone()).expect("plane length invariant"))
        .collect()
}

/// Per-neuron activations of one CNN layer.
#[derive(Debug, Clone, Default)]
pub struct ConvCache {
    /// Input maps `x_k`.
    pub x: Vec<Map>,
    /// Intermediate outputs `y_k = f(x_k)`.
    pub y: Vec<Map>,
    /// Pooled outputs `s_k`.
    pub s: Vec<Map>,
    /// Max-pool winner positions (empty for average pooling).
    pub argmax: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default)]
pub struct DenseCache {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Activations recorded by [`Network::forward`] for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub input: Vec<Map>,
    pub conv: Vec<ConvCache>,
    /// Scalar outputs of the last CNN layer (input of the first MLP layer).
    pub flat: Vec<f64>,
    pub dense: Vec<DenseCache>,
}

impl ForwardCache {
    pub fn output(&self) -> Option<&[f64]> {
        self.dense.last().map(|d| d.y.as_slice())
    }
}
