//! Small dense-vector kernels shared by the trainers and evaluation.

use std::marker::PhantomData;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators let the compiler vectorize the reduction
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    for (x, y) in a[..chunks].chunks_exact(4).zip(b[..chunks].chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        sum += x * y;
    }
    sum
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-log(sigmoid(x))`, stable for large |x|.
#[inline]
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Row-major table shared between training threads without locking.
///
/// Concurrent workers may read and write the same rows; such races only
/// perturb the stochastic updates (Hogwild-style SGD). With one worker the
/// access pattern is sequential and results are deterministic.
pub(crate) struct SharedRows<'a> {
    ptr: *mut f64,
    rows: usize,
    dim: usize,
    _marker: PhantomData<&'a mut [f64]>,
}

unsafe impl Send for SharedRows<'_> {}
unsafe impl Sync for SharedRows<'_> {}

impl<'a> SharedRows<'a> {
    pub(crate) fn new(data: &'a mut [f64], dim: usize) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        SharedRows {
            ptr: data.as_mut_ptr(),
            rows: data.len() / dim,
            dim,
            _marker: PhantomData,
        }
    }

    /// # Safety
    /// The caller must not hold two overlapping mutable borrows of the same
    /// row within one thread. Cross-thread aliasing is the accepted Hogwild
    /// race.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn row(&self, i: usize) -> &mut [f64] {
        assert!(i < self.rows);
        std::slice::from_raw_parts_mut(self.ptr.add(i * self.dim), self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let b = vec![1.0; 7];
        assert_eq!(dot(&a, &b), 21.0);
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0).abs() < 1e-300);
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
    }
}
