//! Central finite-difference verification of [`backprop`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::backprop::{backprop, output_error};
use super::map::Map;
use super::network::{ForwardCache, Network};
use super::topology::Topology;
use super::train::TargetVector;
use super::AcnnError;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Finite-difference step.
    pub step: f64,
    /// Pass threshold on `|bp - fd| / (|fd| + 1e-8)`.
    pub tolerance: f64,
    /// Adds this offset to the first analytic sensitivity before comparing
    /// (negative control for the checker itself).
    pub perturb: Option<f64>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { step: 1e-4, tolerance: 1e-5, perturb: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub parameters: usize,
    pub max_relative_error: f64,
    pub worst_parameter: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (numeric.abs() + 1e-8)
}

/// Compares every analytic sensitivity of `net` at `(input, target)` against
/// `(E(p + h) - E(p - h)) / 2h`.
pub fn check_gradients(
    net: &Network,
    input: &[Map],
    target: &[f64],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, AcnnError> {
    let mut cache = ForwardCache::default();
    net.forward(&mut cache, input)?;
    let mut analytic = backprop(net, &cache, target)?.flat();
    if let (Some(delta), Some(first)) = (opts.perturb, analytic.first_mut()) {
        *first += delta;
    }

    let mut probe = net.clone();
    let mut err_at = |probe: &mut Network| -> Result<f64, AcnnError> {
        let y = probe.forward(&mut cache, input)?;
        Ok(output_error(&y, target))
    };
    let mut max_rel = 0.0f64;
    let mut worst = 0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(i).expect("index in range");
        *probe.param_mut(i).unwrap() = orig + opts.step;
        let plus = err_at(&mut probe)?;
        *probe.param_mut(i).unwrap() = orig - opts.step;
        let minus = err_at(&mut probe)?;
        *probe.param_mut(i).unwrap() = orig;
        let numeric = (plus - minus) / (2.0 * opts.step);
        let rel = relative_error(a, numeric);
        if rel > max_rel || rel.is_nan() {
            max_rel = rel;
            worst = i;
        }
    }
    Ok(GradCheckReport {
        parameters: analytic.len(),
        max_relative_error: max_rel,
        worst_parameter: worst,
        tolerance: opts.tolerance,
        passed: max_rel < opts.tolerance,
    })
}

/// Runs [`check_gradients`] on a network initialised from
/// `U(-init_range, init_range)`, a random input in `[-1, 1]` and the one-hot
/// target of a random class, all drawn from `seed`.
pub fn check_random(
    topology: &Topology,
    seed: u64,
    init_range: f64,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, AcnnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Network::random(topology.clone(), init_range, &mut rng)?;
    let (rows, cols) = topology.input_dims;
    let input: Vec<Map> =
        (0..topology.input_channels).map(|_| Map::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))).collect();
    let class = rng.gen_range(0..topology.outputs());
    let target = TargetVector::one_hot(class, topology.outputs(), topology.activation);
    check_gradients(&net, &input, &target.0, opts)
}
