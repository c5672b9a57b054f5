use serde::{Deserialize, Serialize};

use super::map::pooled_dims;
use super::AcnnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation output `y = f(x)`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    /// `(on, off)` target values, kept inside the saturation region.
    pub fn target_levels(self) -> (f64, f64) {
        match self {
            Activation::Tanh => (0.95, -0.95),
            Activation::Sigmoid => (0.95, 0.05),
        }
    }

    /// Output range `(lo, hi)`.
    pub fn range(self) -> (f64, f64) {
        match self {
            Activation::Tanh => (-1.0, 1.0),
            Activation::Sigmoid => (0.0, 1.0),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Sigmoid => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = AcnnError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            _ => Err(AcnnError::Config(format!("unknown activation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Average,
    Max,
}

impl Pooling {
    pub fn id(self) -> u8 {
        match self {
            Pooling::Average => 0,
            Pooling::Max => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Pooling::Average),
            1 => Some(Pooling::Max),
            _ => None,
        }
    }
}

impl std::str::FromStr for Pooling {
    type Err = AcnnError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "avg" | "mean" => Ok(Pooling::Average),
            "max" => Ok(Pooling::Max),
            _ => Err(AcnnError::Config(format!("unknown pooling `{s}`"))),
        }
    }
}

/// Network architecture.
///
/// Layer widths run input -> CNN layers -> MLP layers; the last MLP layer is
/// the output layer. The last CNN layer pools its whole map to a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Input map `(rows, cols)`.
    pub input_dims: (usize, usize),
    pub input_channels: usize,
    pub cnn_neurons: Vec<usize>,
    pub mlp_neurons: Vec<usize>,
    pub kernel_size: usize,
    pub subsample: usize,
    pub activation: Activation,
    pub pooling: Pooling,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            input_dims: (64, 64),
            input_channels: 3,
            cnn_neurons: vec![16, 16, 32],
            mlp_neurons: vec![64, 4],
            kernel_size: 5,
            subsample: 2,
            activation: Activation::Tanh,
            pooling: Pooling::Average,
        }
    }
}

/// Derived geometry of one CNN layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub inputs: usize,
    pub outputs: usize,
    /// Dimensions of the incoming maps `s^{l-1}`.
    pub in_dims: (usize, usize),
    /// Dimensions of `x^l` and `y^l`.
    pub map_dims: (usize, usize),
    /// Subsampling factors `(rows, cols)`.
    pub pool: (usize, usize),
    /// Dimensions of `s^l`.
    pub out_dims: (usize, usize),
}

impl Topology {
    /// Small network used for finite-difference gradient checks.
    pub fn small() -> Self {
        Self {
            input_dims: (16, 16),
            input_channels: 3,
            cnn_neurons: vec![8, 8],
            mlp_neurons: vec![16, 4],
            kernel_size: 3,
            subsample: 2,
            activation: Activation::Tanh,
            pooling: Pooling::Average,
        }
    }

    /// Widths of every layer, input layer first.
    pub fn neurons_per_layer(&self) -> Vec<usize> {
        let mut v = vec![self.input_channels];
        v.extend(&self.cnn_neurons);
        v.extend(&self.mlp_neurons);
        v
    }

    pub fn outputs(&self) -> usize {
        *self.mlp_neurons.last().expect("validated topology")
    }

    /// Checks the architecture and derives per-layer geometry.
    pub fn conv_geometry(&self) -> Result<Vec<ConvGeometry>, AcnnError> {
        if self.cnn_neurons.is_empty() || self.mlp_neurons.is_empty() {
            return Err(AcnnError::Config("need at least one CNN and one MLP layer".into()));
        }
        if self.input_channels == 0 || self.neurons_per_layer().contains(&0) {
            return Err(AcnnError::Config("every layer needs at least one neuron".into()));
        }
        if self.kernel_size == 0 || self.subsample == 0 {
            return Err(AcnnError::Config("kernel size and subsampling factor must be positive".into()));
        }
        let k = self.kernel_size;
        let mut dims = self.input_dims;
        let mut inputs = self.input_channels;
        let last = self.cnn_neurons.len() - 1;
        let mut out = Vec::with_capacity(self.cnn_neurons.len());
        for (j, &outputs) in self.cnn_neurons.iter().enumerate() {
            if dims.0 < k || dims.1 < k {
                return Err(AcnnError::Config(format!(
                    "CNN layer {}: {}x{} input map is smaller than the {k}x{k} kernel",
                    j + 1,
                    dims.0,
                    dims.1
                )));
            }
            let map_dims = (dims.0 - k + 1, dims.1 - k + 1);
            let pool = if j == last { map_dims } else { (self.subsample, self.subsample) };
            let out_dims = pooled_dims(map_dims, pool.0, pool.1);
            if out_dims.0 == 0 || out_dims.1 == 0 {
                return Err(AcnnError::Config(format!(
                    "CNN layer {}: {}x{} map vanishes under {}x{} subsampling",
                    j + 1,
                    map_dims.0,
                    map_dims.1,
                    pool.0,
                    pool.1
                )));
            }
            out.push(ConvGeometry { inputs, outputs, in_dims: dims, map_dims, pool, out_dims });
            dims = out_dims;
            inputs = outputs;
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), AcnnError> {
        self.conv_geometry().map(|_| ())
    }
}
