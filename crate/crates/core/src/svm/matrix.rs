use std::num::NonZeroUsize;
use std::rc::Rc;

use lru::LruCache;

use super::kernel::{Gram, KernelSpec};

enum Source<'a> {
    Vectors(&'a [Vec<f64>]),
    Gram { gram: &'a Gram, idx: &'a [usize] },
}

/// Signed kernel matrix `Q_ij = y_i y_j K(x_i, x_j)` over one training
/// problem, with an LRU cache of computed rows bounded by a byte budget.
pub struct KernelMatrix<'a> {
    spec: KernelSpec,
    src: Source<'a>,
    y: Vec<f64>,
    diag: Vec<f64>,
    cache: LruCache<usize, Rc<Vec<f64>>>,
}

impl<'a> KernelMatrix<'a> {
    pub fn from_vectors(spec: KernelSpec, x: &'a [Vec<f64>], y: &[f64], cache_bytes: usize) -> Self {
        Self::build(spec, Source::Vectors(x), y, cache_bytes)
    }

    /// Problem over the rows `idx` of a precomputed Gram matrix.
    pub fn from_gram(spec: KernelSpec, gram: &'a Gram, idx: &'a [usize], y: &[f64], cache_bytes: usize) -> Self {
        Self::build(spec, Source::Gram { gram, idx }, y, cache_bytes)
    }

    fn build(spec: KernelSpec, src: Source<'a>, y: &[f64], cache_bytes: usize) -> Self {
        let n = y.len();
        let rows = (cache_bytes / (n.max(1) * std::mem::size_of::<f64>())).max(2);
        let mut m = Self {
            spec,
            src,
            y: y.to_vec(),
            diag: Vec::new(),
            cache: LruCache::new(NonZeroUsize::new(rows).unwrap()),
        };
        m.diag = (0..n).map(|i| m.kernel(i, i)).collect();
        m
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    /// Unsigned kernel value between problem points `i` and `j`.
    #[inline]
    pub fn kernel(&self, i: usize, j: usize) -> f64 {
        match &self.src {
            Source::Vectors(x) => self.spec.eval_unchecked(&x[i], &x[j]),
            Source::Gram { gram, idx } => gram.kernel(&self.spec, idx[i], idx[j]),
        }
    }

    /// `Q_ii`, which equals `K_ii`.
    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// Row `i` of `Q`, computed on a cache miss.
    pub fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        if let Some(r) = self.cache.get(&i) {
            return Rc::clone(r);
        }
        let yi = self.y[i];
        let row: Vec<f64> = (0..self.len()).map(|j| yi * self.y[j] * self.kernel(i, j)).collect();
        let row = Rc::new(row);
        self.cache.put(i, Rc::clone(&row));
        row
    }
}
