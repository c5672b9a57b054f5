//! Backpropagation for the adaptive CNN.
//!
//! Stages, from the output backwards:
//! 1. MLP layers: ordinary scalar backpropagation of `E = sum (y_i - t_i)^2`.
//! 2. Last CNN layer: its outputs are scalars, so `ds_k = sum_i d_i w_ki`.
//! 3. Intra-neuron: `d_k = up(ds_k) * beta * f'(x_k)` with `beta = 1/(sr*sc)`
//!    for average pooling; max pooling routes `ds_k` to the recorded winners.
//! 4. Between CNN layers: `ds_k = sum_i conv2d_full(d_i, rot180(w_ki))`.
//! 5. Sensitivities: `dE/dw_ki = conv2d_valid(s_k, d_i)`, `dE/db_i = sum d_i`.

use super::map::{conv_transpose_acc, conv_valid_acc, unpool_max, upsample, Map};
use super::network::{ForwardCache, LayerParams, Network};
use super::topology::Pooling;
use super::AcnnError;
use crate::par;

/// Parameter sensitivities plus the intermediate deltas they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    /// `dE/dw`, `dE/db` per CNN layer (same layout as [`Network::conv`]).
    pub conv: Vec<LayerParams>,
    /// `dE/dw`, `dE/db` per MLP layer.
    pub dense: Vec<LayerParams>,
    /// `Delta_k = dE/dx_k` for every CNN neuron.
    pub conv_delta: Vec<Vec<Map>>,
    /// `Delta s_k = dE/ds_k` for every CNN neuron.
    pub conv_s_delta: Vec<Vec<Map>>,
    /// `dE/dx` for every MLP neuron.
    pub dense_delta: Vec<Vec<f64>>,
    /// Squared error `E` of the sample.
    pub error: f64,
}

impl GradientSet {
    pub fn layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.conv.iter().chain(&self.dense)
    }

    /// Flat sensitivities in [`Network::params`] order.
    pub fn flat(&self) -> Vec<f64> {
        self.layers().flat_map(|l| l.weights.iter().chain(&l.biases).copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

/// Squared output error `sum (y_i - t_i)^2`.
pub fn output_error(output: &[f64], target: &[f64]) -> f64 {
    output.iter().zip(target).map(|(y, t)| (y - t) * (y - t)).sum()
}

/// Computes all sensitivities for the sample whose activations are in `cache`.
pub fn backprop(net: &Network, cache: &ForwardCache, target: &[f64]) -> Result<GradientSet, AcnnError> {
    let topo = net.topology();
    let geom = net.geometry();
    if cache.conv.len() != geom.len() || cache.dense.len() != net.dense.len() {
        return Err(AcnnError::Shape("forward cache does not match the network".into()));
    }
    let output = &cache.dense.last().unwrap().y;
    if target.len() != output.len() {
        return Err(AcnnError::Shape(format!("target has {} values, network outputs {}", target.len(), output.len())));
    }
    let act = topo.activation;
    let k = topo.kernel_size;
    let k2 = k * k;

    // MLP layers.
    let n_dense = net.dense.len();
    let mut dense_grads: Vec<LayerParams> = Vec::with_capacity(n_dense);
    let mut dense_delta: Vec<Vec<f64>> = vec![Vec::new(); n_dense];
    let mut delta: Vec<f64> = output
        .iter()
        .zip(target)
        .map(|(&y, &t)| 2.0 * (y - t) * act.derivative_from_output(y))
        .collect();
    let mut flat_delta = Vec::new();
    for d in (0..n_dense).rev() {
        let inputs: &[f64] = if d == 0 { &cache.flat } else { &cache.dense[d - 1].y };
        let params = &net.dense[d];
        let n_in = inputs.len();
        let mut g = LayerParams::zeros(params.weights.len(), params.biases.len());
        for (dst, &dl) in delta.iter().enumerate() {
            g.biases[dst] = dl;
            for (src, &v) in inputs.iter().enumerate() {
                g.weights[dst * n_in + src] = dl * v;
            }
        }
        // dE/d(input_src) = sum_dst delta_dst * w_src,dst
        let mut back = vec![0.0; n_in];
        for (dst, &dl) in delta.iter().enumerate() {
            for (src, b) in back.iter_mut().enumerate() {
                *b += dl * params.weights[dst * n_in + src];
            }
        }
        dense_grads.push(g);
        dense_delta[d] = std::mem::take(&mut delta);
        if d == 0 {
            flat_delta = back;
        } else {
            delta = back
                .iter()
                .zip(&cache.dense[d - 1].y)
                .map(|(&b, &y)| b * act.derivative_from_output(y))
                .collect();
        }
    }
    dense_grads.reverse();

    // CNN layers, last to first.
    let n_conv = geom.len();
    let mut conv_grads: Vec<LayerParams> = vec![LayerParams::zeros(0, 0); n_conv];
    let mut conv_delta: Vec<Vec<Map>> = vec![Vec::new(); n_conv];
    let mut conv_s_delta: Vec<Vec<Map>> = vec![Vec::new(); n_conv];
    conv_s_delta[n_conv - 1] = flat_delta.into_iter().map(|v| Map::filled(1, 1, v)).collect();

    for j in (0..n_conv).rev() {
        let g = &geom[j];
        let layer = &cache.conv[j];
        let s_delta = &conv_s_delta[j];
        // Intra-neuron step.
        let deltas: Vec<Map> = par::map_range(g.outputs, |n| {
            let up = match topo.pooling {
                Pooling::Average => {
                    let beta = 1.0 / (g.pool.0 * g.pool.1) as f64;
                    upsample(&s_delta[n], g.pool.0, g.pool.1, g.map_dims, beta)
                }
                Pooling::Max => unpool_max(&s_delta[n], &layer.argmax[n], g.map_dims),
            };
            let mut d = up;
            for (dv, &y) in d.as_mut_slice().iter_mut().zip(layer.y[n].as_slice()) {
                *dv *= act.derivative_from_output(y);
            }
            d
        });

        let prev: &[Map] = if j == 0 { &cache.input } else { &cache.conv[j - 1].s };
        let params = &net.conv[j];

        // Kernel and bias sensitivities, one destination neuron per task.
        let per_dst: Vec<(Vec<f64>, f64)> = par::map_range(g.outputs, |dst| {
            let mut w = vec![0.0; g.inputs * k2];
            let d = &deltas[dst];
            for (src, s) in prev.iter().enumerate() {
                let mut out = Map::zeros(k, k);
                conv_valid_acc(&mut out, s, d.as_slice(), d.rows(), d.cols());
                w[src * k2..(src + 1) * k2].copy_from_slice(out.as_slice());
            }
            (w, d.sum())
        });
        let mut grads = LayerParams::zeros(0, 0);
        for (w, b) in per_dst {
            grads.weights.extend(w);
            grads.biases.push(b);
        }
        conv_grads[j] = grads;

        // Inter-layer step into the previous CNN layer's outputs.
        if j > 0 {
            let padded: Vec<Map> = deltas.iter().map(|d| d.zero_pad(k - 1, k - 1)).collect();
            conv_s_delta[j - 1] = par::map_range(g.inputs, |src| {
                let mut acc = Map::zeros(g.in_dims.0, g.in_dims.1);
                for (dst, d) in padded.iter().enumerate() {
                    let off = (dst * g.inputs + src) * k2;
                    conv_transpose_acc(&mut acc, d, &params.weights[off..off + k2], k, k);
                }
                acc
            });
        }
        conv_delta[j] = deltas;
    }

    Ok(GradientSet {
        conv: conv_grads,
        dense: dense_grads,
        conv_delta,
        conv_s_delta,
        dense_delta,
        error: output_error(output, target),
    })
}

/// Gradient step `p <- p - lr * dE/dp` on every parameter.
pub fn update(net: &mut Network, grads: &GradientSet, lr: f64) -> Result<(), AcnnError> {
    let shapes_match = net.layers().count() == grads.layers().count()
        && net.layers().zip(grads.layers()).all(|(a, b)| a.weights.len() == b.weights.len() && a.biases.len() == b.biases.len());
    if !shapes_match {
        return Err(AcnnError::Shape("gradient set does not match the network".into()));
    }
    for (p, g) in net.layers_mut().zip(grads.layers()) {
        for (w, dw) in p.weights.iter_mut().zip(&g.weights) {
            *w -= lr * dw;
        }
        for (b, db) in p.biases.iter_mut().zip(&g.biases) {
            *b -= lr * db;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acnn::map::conv2d_full;
    use crate::acnn::topology::{Activation, Topology};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_input(t: &Topology, rng: &mut impl Rng) -> Vec<Map> {
        (0..t.input_channels).map(|_| Map::from_fn(t.input_dims.0, t.input_dims.1, |_, _| rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn zero_error_gives_zero_gradients() {
        let t = Topology::small();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::random(t.clone(), 0.1, &mut rng).unwrap();
        let mut cache = ForwardCache::default();
        let y = net.forward(&mut cache, &random_input(&t, &mut rng)).unwrap();
        let g = backprop(&net, &cache, &y).unwrap();
        assert_eq!(g.error, 0.0);
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    /// One CNN neuron fed by a 1x1 input, one MLP output, every parameter
    /// zero except the kernel weight `w` and output weight `v`:
    /// `E = (tanh(v * tanh(w * a)) - t)^2`.
    #[test]
    fn single_weight_chain_rule() {
        let t = Topology {
            input_dims: (1, 1),
            input_channels: 1,
            cnn_neurons: vec![1],
            mlp_neurons: vec![1],
            kernel_size: 1,
            subsample: 1,
            activation: Activation::Tanh,
            pooling: Pooling::Average,
        };
        let (a, w, v, target) = (0.8, 0.37, -1.3, 0.5);
        let mut net = Network::zeros(t).unwrap();
        net.conv[0].weights[0] = w;
        net.dense[0].weights[0] = v;
        let mut cache = ForwardCache::default();
        net.forward(&mut cache, &[Map::filled(1, 1, a)]).unwrap();
        let g = backprop(&net, &cache, &[target]).unwrap();

        let h = (w * a).tanh();
        let y = (v * h).tanh();
        let de_dy = 2.0 * (y - target);
        let de_dv = de_dy * (1.0 - y * y) * h;
        let de_dw = de_dy * (1.0 - y * y) * v * (1.0 - h * h) * a;
        assert!((g.dense[0].weights[0] - de_dv).abs() < 1e-12);
        assert!((g.conv[0].weights[0] - de_dw).abs() < 1e-12);
        assert!((g.conv[0].biases[0] - de_dw / a).abs() < 1e-12);
    }

    #[test]
    fn inter_layer_delta_is_full_convolution_with_rotated_kernel() {
        let t = Topology::small();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Network::random(t.clone(), 0.3, &mut rng).unwrap();
        let mut cache = ForwardCache::default();
        net.forward(&mut cache, &random_input(&t, &mut rng)).unwrap();
        let g = backprop(&net, &cache, &[0.95, -0.95, -0.95, -0.95]).unwrap();
        let geo = &net.geometry()[1];
        let k = t.kernel_size;
        for src in 0..geo.inputs {
            let mut expected = Map::zeros(geo.in_dims.0, geo.in_dims.1);
            for dst in 0..geo.outputs {
                let off = (dst * geo.inputs + src) * k * k;
                let w = Map::from_vec(k, k, net.conv[1].weights[off..off + k * k].to_vec()).unwrap();
                let full = conv2d_full(&g.conv_delta[1][dst], &w.rot180()).unwrap();
                for (e, f) in expected.as_mut_slice().iter_mut().zip(full.as_slice()) {
                    *e += f;
                }
            }
            for (a, b) in g.conv_s_delta[0][src].as_slice().iter().zip(expected.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn average_pool_delta_accounting() {
        let t = Topology::small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::random(t.clone(), 0.3, &mut rng).unwrap();
        let mut cache = ForwardCache::default();
        net.forward(&mut cache, &random_input(&t, &mut rng)).unwrap();
        let g = backprop(&net, &cache, &[0.95, -0.95, -0.95, -0.95]).unwrap();
        // Undo f' and check each 2x2 block of up(ds) * beta sums back to ds.
        for n in 0..8 {
            let d = &g.conv_delta[0][n];
            let y = &cache.conv[0].y[n];
            let ds = &g.conv_s_delta[0][n];
            for i in 0..ds.rows() {
                for jj in 0..ds.cols() {
                    let mut s = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            let (r, c) = (2 * i + a, 2 * jj + b);
                            s += d.get(r, c) / (1.0 - y.get(r, c).powi(2));
                        }
                    }
                    assert!((s - ds.get(i, jj)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn max_pool_delta_only_at_winners() {
        let t = Topology { pooling: Pooling::Max, ..Topology::small() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network::random(t.clone(), 0.3, &mut rng).unwrap();
        let mut cache = ForwardCache::default();
        net.forward(&mut cache, &random_input(&t, &mut rng)).unwrap();
        let g = backprop(&net, &cache, &[0.95, -0.95, -0.95, -0.95]).unwrap();
        for (n, d) in g.conv_delta[0].iter().enumerate() {
            let winners: std::collections::HashSet<usize> = cache.conv[0].argmax[n].iter().copied().collect();
            for (i, &v) in d.as_slice().iter().enumerate() {
                if !winners.contains(&i) {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn update_rules() {
        let t = Topology::small();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::random(t.clone(), 0.1, &mut rng).unwrap();
        let mut cache = ForwardCache::default();
        net.forward(&mut cache, &random_input(&t, &mut rng)).unwrap();
        let g = backprop(&net, &cache, &[0.95, -0.95, -0.95, -0.95]).unwrap();

        let mut same = net.clone();
        update(&mut same, &g, 0.0).unwrap();
        assert_eq!(same, net);

        let mut zero = g.clone();
        zero.conv.iter_mut().chain(zero.dense.iter_mut()).for_each(|l| {
            l.weights.iter_mut().for_each(|v| *v = 0.0);
            l.biases.iter_mut().for_each(|v| *v = 0.0);
        });
        let mut same = net.clone();
        update(&mut same, &zero, 0.5).unwrap();
        assert_eq!(same, net);

        let mut once = net.clone();
        update(&mut once, &g, 0.02).unwrap();
        let mut twice = net.clone();
        update(&mut twice, &g, 0.01).unwrap();
        update(&mut twice, &g, 0.01).unwrap();
        for (a, b) in once.params().iter().zip(twice.params()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn small_step_decreases_error() {
        let t = Topology::small();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = Network::random(t.clone(), 0.1, &mut rng).unwrap();
        let input = random_input(&t, &mut rng);
        let target = [0.95, -0.95, -0.95, -0.95];
        let mut cache = ForwardCache::default();
        net.forward(&mut cache, &input).unwrap();
        let g = backprop(&net, &cache, &target).unwrap();
        update(&mut net, &g, 1e-3).unwrap();
        let y = net.forward(&mut cache, &input).unwrap();
        assert!(output_error(&y, &target) < g.error);
    }
}
