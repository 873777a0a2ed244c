//! Multi-dimensional FFT sweeps over flat row-major arrays.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Lines gathered per batch on strided axes.
const BATCH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Plans for a cube of `side^dim` complex values, last axis fastest.
pub(crate) struct CubeFft {
    dim: usize,
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CubeFft {
    pub(crate) fn new(dim: usize, side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dim, side, forward: planner.plan_fft_forward(side), inverse: planner.plan_fft_inverse(side) }
    }

    /// Unnormalized transform in place.
    pub(crate) fn process(&self, data: &mut [Complex64], dir: Direction) {
        debug_assert_eq!(data.len(), self.side.pow(self.dim as u32));
        let fft = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let side = self.side;
        for axis in 0..self.dim {
            let stride = side.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(side * BATCH).for_each(|chunk| {
                    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                    fft.process_with_scratch(chunk, &mut scratch);
                });
                continue;
            }
            data.par_chunks_mut(side * stride).for_each(|chunk| {
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                let mut buf = vec![Complex64::default(); side * BATCH];
                let mut start = 0;
                while start < stride {
                    let lines = BATCH.min(stride - start);
                    for j in 0..side {
                        let row = &chunk[j * stride + start..j * stride + start + lines];
                        for (l, &z) in row.iter().enumerate() {
                            buf[l * side + j] = z;
                        }
                    }
                    fft.process_with_scratch(&mut buf[..lines * side], &mut scratch);
                    for j in 0..side {
                        let row = &mut chunk[j * stride + start..j * stride + start + lines];
                        for (l, z) in row.iter_mut().enumerate() {
                            *z = buf[l * side + j];
                        }
                    }
                    start += lines;
                }
            });
        }
    }
}

/// In-place cosine sum over the nonnegative octant `[0, n]^dim`.
///
/// Along every axis computes `y[x] = c[0] + (-1)^x c[n] + 2 sum_{k=1}^{n-1} c[k] cos(pi k x / n)`
/// for `x = 0..=n`, which is the full torus sum of length `2n` for data even
/// in every coordinate. Two real lines share one complex FFT.
pub(crate) fn even_octant_transform(data: &mut [f64], dim: usize, n: usize) {
    let len = n + 1;
    debug_assert_eq!(data.len(), len.pow(dim as u32));
    let period = 2 * n;
    let fft = FftPlanner::new().plan_fft_forward(period);
    for axis in 0..dim {
        let stride = len.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(len * BATCH).for_each(|chunk| {
                let lines = chunk.len() / len;
                let mut work = PairWork::new(&*fft, n);
                work.run(chunk, lines, |l| l * len, 1);
            });
            continue;
        }
        data.par_chunks_mut(len * stride).for_each(|chunk| {
            let mut work = PairWork::new(&*fft, n);
            let mut start = 0;
            while start < stride {
                let lines = BATCH.min(stride - start);
                work.run(chunk, lines, |l| start + l, stride);
                start += lines;
            }
        });
    }
}

struct PairWork<'a> {
    fft: &'a dyn Fft<f64>,
    n: usize,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl<'a> PairWork<'a> {
    fn new(fft: &'a dyn Fft<f64>, n: usize) -> Self {
        Self {
            fft,
            n,
            buf: vec![Complex64::default(); BATCH.div_ceil(2) * 2 * n],
            scratch: vec![Complex64::default(); fft.get_inplace_scratch_len()],
        }
    }

    /// Transforms `lines` lines starting at `offset(l)` with element step `step`.
    fn run(&mut self, chunk: &mut [f64], lines: usize, offset: impl Fn(usize) -> usize, step: usize) {
        let n = self.n;
        let period = 2 * n;
        let pairs = lines.div_ceil(2);
        for pair in 0..pairs {
            let a = offset(2 * pair);
            let b = (2 * pair + 1 < lines).then(|| offset(2 * pair + 1));
            let line = &mut self.buf[pair * period..(pair + 1) * period];
            for j in 0..=n {
                let re = chunk[a + j * step];
                let im = b.map_or(0.0, |b| chunk[b + j * step]);
                line[j] = Complex64::new(re, im);
                if j > 0 && j < n {
                    line[period - j] = line[j];
                }
            }
        }
        self.fft.process_with_scratch(&mut self.buf[..pairs * period], &mut self.scratch);
        for pair in 0..pairs {
            let a = offset(2 * pair);
            let b = (2 * pair + 1 < lines).then(|| offset(2 * pair + 1));
            let line = &self.buf[pair * period..(pair + 1) * period];
            for (j, z) in line.iter().take(n + 1).enumerate() {
                chunk[a + j * step] = z.re;
                if let Some(b) = b {
                    chunk[b + j * step] = z.im;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(data: &[Complex64], sign: f64) -> Vec<Complex64> {
        let m = data.len();
        (0..m)
            .map(|k| {
                data.iter()
                    .enumerate()
                    .map(|(j, &z)| z * Complex64::from_polar(1.0, sign * 2.0 * PI * (j * k) as f64 / m as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn cube_fft_matches_naive_sum_in_two_dimensions() {
        let side = 6;
        let data: Vec<Complex64> =
            (0..side * side).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut fast = data.clone();
        CubeFft::new(2, side).process(&mut fast, Direction::Forward);
        // Separable naive transform: rows then columns.
        let mut rows = Vec::new();
        for r in 0..side {
            rows.extend(naive_dft(&data[r * side..(r + 1) * side], -1.0));
        }
        let mut expect = rows.clone();
        for c in 0..side {
            let col: Vec<_> = (0..side).map(|r| rows[r * side + c]).collect();
            for (r, z) in naive_dft(&col, -1.0).into_iter().enumerate() {
                expect[r * side + c] = z;
            }
        }
        for (a, b) in fast.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn even_transform_matches_direct_cosine_sum() {
        let n: usize = 5;
        let dim = 3;
        let len = n + 1;
        let coef: Vec<f64> = (0..len.pow(3)).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let mut fast = coef.clone();
        even_octant_transform(&mut fast, dim, n);
        let w = |k: usize| if k == 0 || k == n { 1.0 } else { 2.0 };
        for x in 0..len.pow(3) {
            let xs = [x / (len * len), (x / len) % len, x % len];
            let mut acc = 0.0;
            for k in 0..len.pow(3) {
                let ks = [k / (len * len), (k / len) % len, k % len];
                let mut term = coef[k];
                for a in 0..3 {
                    term *= w(ks[a]) * (PI * (ks[a] * xs[a]) as f64 / n as f64).cos();
                }
                acc += term;
            }
            assert!((fast[x] - acc).abs() < 1e-10, "x={x} {} vs {}", fast[x], acc);
        }
    }
}
