//! Iterative radix-2 FFT over `Complex64`, power-of-two sizes only.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// FFT plan with precomputed twiddle factors for one transform size.
pub(crate) struct Fft {
    n: usize,
    // exp(-2πi k / n) for k in 0..n/2
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT size must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Fft { n, twiddles }
    }

    /// In-place forward DFT (no scaling).
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must match plan size");
        self.transform(buf, false);
    }

    /// In-place inverse DFT with 1/n scaling.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must match plan size");
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        if n <= 1 {
            return;
        }
        // Bit-reversal permutation.
        let shift = usize::BITS - n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if j > i {
                buf.swap(i, j);
            }
        }
        // Butterflies, stages of width 2, 4, ..., n.
        let mut width = 2;
        while width <= n {
            let stride = n / width;
            for start in (0..n).step_by(width) {
                for k in 0..width / 2 {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + width / 2] * w;
                    buf[start + k] = a + b;
                    buf[start + k + width / 2] = a - b;
                }
            }
            width <<= 1;
        }
    }
}
