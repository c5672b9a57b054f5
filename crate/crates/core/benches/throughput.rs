//! Throughput of the data-parallel core against a one-thread pool.
//!
//! With the default `parallel` feature each workload runs twice: inside a
//! one-worker rayon pool and inside a pool with every core. Building with
//! `--no-default-features` benchmarks the sequential fallback instead.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use histocnn::acnn::{self, backprop, ForwardCache, Network, Topology, TargetVector};
use histocnn::imaging::{self, SourceImage};
use histocnn::svm::Gram;
use histocnn::{par, synth, texfeat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(label, threads)` configurations to compare.
fn pools() -> Vec<(&'static str, usize)> {
    if cfg!(feature = "parallel") {
        let all = std::thread::available_parallelism().map_or(1, |n| n.get());
        vec![("1-thread", 1), ("all-threads", all)]
    } else {
        vec![("sequential", 1)]
    }
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool").install(f)
}

#[cfg(not(feature = "parallel"))]
fn in_pool<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn sample_images(n: usize) -> Vec<SourceImage> {
    let spec = synth::SyntheticSpec { images_per_class: n.div_ceil(4), seed: 1, ..Default::default() };
    synth::generate(&spec).expect("synthetic data").into_iter().take(n).collect()
}

fn bench_acnn(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let topo = Topology::default();
    let net = Network::random(topo.clone(), 0.1, &mut rng).unwrap();
    let images = sample_images(1);
    let inputs: Vec<Vec<acnn::Map>> = imaging::expand(&images[0])
        .unwrap()
        .iter()
        .map(|p| acnn::input_maps(&imaging::downsample(p)))
        .collect();
    let target = TargetVector::one_hot(rng.gen_range(0..4), 4, topo.activation).0;

    let mut g = c.benchmark_group("acnn");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for (label, threads) in pools() {
        g.bench_function(BenchmarkId::new("forward+backprop", label), |b| {
            let mut cache = ForwardCache::default();
            b.iter(|| {
                in_pool(threads, || {
                    net.forward(&mut cache, &inputs[0]).unwrap();
                    backprop(&net, &cache, &target).unwrap()
                })
            })
        });
        g.bench_function(BenchmarkId::new("score-20-patches", label), |b| {
            b.iter(|| in_pool(threads, || par::map_slice(&inputs, |x| net.scores(x).unwrap())))
        });
    }
    g.finish();
}

fn bench_texfeat(c: &mut Criterion) {
    let images = sample_images(1);
    let grays: Vec<_> = imaging::expand(&images[0]).unwrap().iter().take(8).map(imaging::to_grayscale).collect();
    let mut g = c.benchmark_group("texfeat");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for (label, threads) in pools() {
        for (name, d) in [("lbp", texfeat::Descriptor::Lbp), ("lpq", texfeat::Descriptor::Lpq), ("haralick", texfeat::Descriptor::Haralick)] {
            g.bench_function(BenchmarkId::new(format!("{name}-8-patches"), label), |b| {
                b.iter(|| in_pool(threads, || par::map_slice(&grays, |img| d.extract(img).unwrap())))
            });
        }
        g.bench_function(BenchmarkId::new("rlpq-2-patches", label), |b| {
            b.iter(|| in_pool(threads, || par::map_slice(&grays[..2], |img| texfeat::Descriptor::Rlpq.extract(img).unwrap())))
        });
    }
    g.finish();
}

fn bench_gram(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<Vec<f64>> = (0..600).map(|_| (0..256).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let mut g = c.benchmark_group("svm");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for (label, threads) in pools() {
        g.bench_function(BenchmarkId::new("gram-600x256", label), |b| b.iter(|| in_pool(threads, || Gram::new(&x))));
    }
    g.finish();
}

criterion_group!(benches, bench_acnn, bench_texfeat, bench_gram);
criterion_main!(benches);
