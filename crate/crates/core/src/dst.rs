//! Discrete sine transforms over interior nodes and zero-padded linear
//! convolutions, both backed by complex FFTs.
//!
//! The DST-I of a line `x_1 .. x_{M-1}` is computed from a length `2M` FFT
//! of its odd extension. Two real lines are packed into the real and
//! imaginary parts of one complex buffer, so each FFT transforms two lines.

use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{strides, GridFunction, UniformGrid};

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

/// Shared plan for a transform of length `len`. Plans are created once per
/// length and direction and reused by every caller, from any thread.
pub(crate) fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut planner = planner.lock().unwrap_or_else(|e| e.into_inner());
    planner.plan_fft(len, direction)
}

fn is_seven_smooth(mut n: usize) -> bool {
    if n == 0 {
        return false;
    }
    for p in [2, 3, 5, 7] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}

/// Smallest integer `>= n` whose prime factors are all at most 7.
pub fn fft_friendly_len(n: usize) -> usize {
    (n.max(1)..).find(|&m| is_seven_smooth(m)).unwrap()
}

/// Sine-series coefficients indexed by wavenumbers `k_s = 1 .. panels[s] - 1`,
/// stored densely (wavenumber `k` at position `k - 1`) in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorModeArray {
    grid: UniformGrid,
    coefficients: Vec<f64>,
}

impl InteriorModeArray {
    pub fn new(grid: &UniformGrid, coefficients: Vec<f64>) -> Result<Self> {
        let want: usize = grid.interior_shape().iter().product();
        if coefficients.len() != want {
            return Err(Error::Shape(format!(
                "{} coefficients for {want} interior modes",
                coefficients.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coefficients,
        })
    }

    pub fn zeros(grid: &UniformGrid) -> Self {
        let n = grid.interior_shape().iter().product();
        Self {
            grid: grid.clone(),
            coefficients: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn shape(&self) -> Vec<usize> {
        self.grid.interior_shape()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    /// Coefficient of wavenumber `k` (1-based per axis).
    pub fn get(&self, k: &[usize]) -> f64 {
        let shape = self.shape();
        let flat = k
            .iter()
            .zip(&shape)
            .fold(0, |acc, (&ki, &n)| acc * n + (ki - 1));
        self.coefficients[flat]
    }

    pub fn set(&mut self, k: &[usize], value: f64) {
        let shape = self.shape();
        let flat = k
            .iter()
            .zip(&shape)
            .fold(0, |acc, (&ki, &n)| acc * n + (ki - 1));
        self.coefficients[flat] = value;
    }
}

const LINE_BATCH: usize = 32;

/// Unnormalised DST-I, `X_k = sum_j x_j sin(pi j k / (n + 1))`, applied to
/// every line of a row-major array along `axis`.
pub(crate) fn dst1_axis(data: &mut [f64], shape: &[usize], axis: usize) {
    let n = shape[axis];
    if n == 0 || data.is_empty() {
        return;
    }
    let m = n + 1;
    let len = 2 * m;
    let stride = strides(shape)[axis];
    let outer: usize = shape[..axis].iter().product();
    let starts: Vec<usize> = (0..outer)
        .flat_map(|o| (0..stride).map(move |i| o * n * stride + i))
        .collect();

    let fft = plan(len, FftDirection::Forward);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); len * LINE_BATCH];

    for batch in starts.chunks(2 * LINE_BATCH) {
        let pairs = batch.len().div_ceil(2);
        let work = &mut buf[..pairs * len];
        for (pair, line) in batch.chunks(2).zip(work.chunks_mut(len)) {
            line[0] = Complex64::default();
            line[m] = Complex64::default();
            for j in 1..m {
                let re = data[line_at(pair[0], j - 1, stride)];
                let im = pair
                    .get(1)
                    .map_or(0.0, |&s| data[line_at(s, j - 1, stride)]);
                line[j] = Complex64::new(re, im);
                line[len - j] = Complex64::new(-re, -im);
            }
        }
        fft.process_with_scratch(work, &mut scratch);
        for (pair, line) in batch.chunks(2).zip(work.chunks(len)) {
            for k in 1..m {
                data[line_at(pair[0], k - 1, stride)] = -0.5 * line[k].im;
                if let Some(&s) = pair.get(1) {
                    data[line_at(s, k - 1, stride)] = 0.5 * line[k].re;
                }
            }
        }
    }
}

#[inline]
fn line_at(start: usize, j: usize, stride: usize) -> usize {
    start + j * stride
}

/// Unnormalised multidimensional DST-I of a dense interior array.
pub(crate) fn dst1_all_axes(data: &mut [f64], shape: &[usize]) {
    for axis in 0..shape.len() {
        dst1_axis(data, shape, axis);
    }
}

/// Sine coefficients `beta_k = prod_s (2 / L_s) * sum_interior f sin(..) * h_s`.
pub fn forward_dst(f: &GridFunction) -> Result<InteriorModeArray> {
    let grid = f.grid();
    if grid.panels().iter().any(|&m| m < 2) {
        return Err(Error::Shape("need at least 2 panels per axis".into()));
    }
    let shape = grid.interior_shape();
    let mut data = f.interior_values();
    dst1_all_axes(&mut data, &shape);
    let scale: f64 = grid.panels().iter().map(|&m| 2.0 / m as f64).product();
    data.iter_mut().for_each(|v| *v *= scale);
    InteriorModeArray::new(grid, data)
}

/// Evaluates the sine series at every node; boundary nodes are exactly zero.
pub fn inverse_dst(c: &InteriorModeArray) -> GridFunction {
    let shape = c.shape();
    let mut data = c.coefficients.clone();
    dst1_all_axes(&mut data, &shape);
    let mut out = GridFunction::zeros(&c.grid);
    out.set_interior(&data);
    out
}

/// Complex FFT helper for dense 1D or 2D buffers of a fixed padded shape.
pub(crate) struct PaddedFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scratch: Vec<Complex64>,
    transpose: Vec<Complex64>,
}

impl PaddedFft {
    pub(crate) fn new(shape: &[usize]) -> Self {
        assert!(matches!(shape.len(), 1 | 2));
        let forward: Vec<_> = shape
            .iter()
            .map(|&n| plan(n, FftDirection::Forward))
            .collect();
        let inverse: Vec<_> = shape
            .iter()
            .map(|&n| plan(n, FftDirection::Inverse))
            .collect();
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let transpose = if shape.len() == 2 {
            vec![Complex64::default(); shape[0] * shape[1]]
        } else {
            Vec::new()
        };
        Self {
            shape: shape.to_vec(),
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            transpose,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub(crate) fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Unnormalised transform; inverse followed by forward scales by `len()`.
    pub(crate) fn process(&mut self, buf: &mut [Complex64], direction: FftDirection) {
        let plans = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        match self.shape.len() {
            1 => plans[0].process_with_scratch(buf, &mut self.scratch),
            _ => {
                let (rows, cols) = (self.shape[0], self.shape[1]);
                plans[1].process_with_scratch(buf, &mut self.scratch);
                for r in 0..rows {
                    for c in 0..cols {
                        self.transpose[c * rows + r] = buf[r * cols + c];
                    }
                }
                plans[0].process_with_scratch(&mut self.transpose, &mut self.scratch);
                for c in 0..cols {
                    for r in 0..rows {
                        buf[r * cols + c] = self.transpose[c * rows + r];
                    }
                }
            }
        }
    }
}

/// Copies a real row-major block into the top-left corner of a zeroed
/// complex buffer of shape `padded`, writing into the real (`imag = false`)
/// or imaginary part.
pub(crate) fn load_padded(
    buf: &mut [Complex64],
    padded: &[usize],
    src: &[f64],
    src_shape: &[usize],
    imag: bool,
) {
    let cols = src_shape.last().copied().unwrap_or(1);
    let rows = src.len() / cols.max(1);
    let pcols = padded.last().copied().unwrap_or(1);
    for r in 0..rows {
        for c in 0..cols {
            let v = src[r * cols + c];
            let slot = &mut buf[r * pcols + c];
            if imag {
                slot.im = v;
            } else {
                slot.re = v;
            }
        }
    }
}

/// Full linear convolution `out[n] = sum_q kernel[n - q] * data[q]`,
/// returned for `n` in `wanted`.
pub fn fast_linear_convolution(
    kernel: &[f64],
    data: &[f64],
    wanted: Range<usize>,
) -> Result<Vec<f64>> {
    fast_linear_convolution_nd(kernel, &[kernel.len()], data, &[data.len()], &[wanted])
}

/// Two-dimensional analogue of [`fast_linear_convolution`] for row-major
/// matrices; `wanted` selects rows and columns of the full result.
pub fn fast_linear_convolution_2d(
    kernel: &[f64],
    kernel_shape: [usize; 2],
    data: &[f64],
    data_shape: [usize; 2],
    wanted: [Range<usize>; 2],
) -> Result<Vec<f64>> {
    fast_linear_convolution_nd(kernel, &kernel_shape, data, &data_shape, &wanted)
}

fn fast_linear_convolution_nd(
    kernel: &[f64],
    kernel_shape: &[usize],
    data: &[f64],
    data_shape: &[usize],
    wanted: &[Range<usize>],
) -> Result<Vec<f64>> {
    if kernel.len() != kernel_shape.iter().product::<usize>()
        || data.len() != data_shape.iter().product::<usize>()
    {
        return Err(Error::Shape("array length disagrees with its shape".into()));
    }
    let mut padded = Vec::with_capacity(kernel_shape.len());
    for s in 0..kernel_shape.len() {
        let (k, l) = (kernel_shape[s], data_shape[s]);
        if l == 0 || k < l {
            return Err(Error::Shape(format!(
                "axis {s}: kernel length {k} must be >= data length {l} >= 1"
            )));
        }
        if wanted[s].end > k + l - 1 || wanted[s].start > wanted[s].end {
            return Err(Error::Shape(format!(
                "axis {s}: wanted range {:?} outside 0..{}",
                wanted[s],
                k + l - 1
            )));
        }
        padded.push(fft_friendly_len(k + l - 1));
    }
    let mut fft = PaddedFft::new(&padded);
    let n = fft.len();
    let mut kbuf = vec![Complex64::default(); n];
    let mut dbuf = vec![Complex64::default(); n];
    load_padded(&mut kbuf, &padded, kernel, kernel_shape, false);
    load_padded(&mut dbuf, &padded, data, data_shape, false);
    fft.process(&mut kbuf, FftDirection::Forward);
    fft.process(&mut dbuf, FftDirection::Forward);
    let scale = 1.0 / n as f64;
    for (d, k) in dbuf.iter_mut().zip(&kbuf) {
        *d = *d * *k * scale;
    }
    fft.process(&mut dbuf, FftDirection::Inverse);

    let pcols = padded.last().copied().unwrap();
    let out = match wanted.len() {
        1 => wanted[0].clone().map(|i| dbuf[i].re).collect(),
        _ => wanted[0]
            .clone()
            .flat_map(|r| wanted[1].clone().map(move |c| (r, c)))
            .map(|(r, c)| dbuf[r * pcols + c].re)
            .collect(),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn brute_coefficients(f: &GridFunction) -> Vec<f64> {
        // direct double sum over interior nodes
        let g = f.grid();
        let (mx, my) = (g.panels()[0], g.panels()[1]);
        let (lx, ly) = (g.length(0), g.length(1));
        let (hx, hy) = (g.mesh()[0], g.mesh()[1]);
        let mut out = Vec::new();
        for k1 in 1..mx {
            for k2 in 1..my {
                let mut s = 0.0;
                for i in 1..mx {
                    for j in 1..my {
                        let x = g.coord(0, i) - g.lower()[0];
                        let y = g.coord(1, j) - g.lower()[1];
                        s += f.get(&[i, j])
                            * (k1 as f64 * PI * x / lx).sin()
                            * (k2 as f64 * PI * y / ly).sin()
                            * hx
                            * hy;
                    }
                }
                out.push(s * (2.0 / lx) * (2.0 / ly));
            }
        }
        out
    }

    #[test]
    fn seven_smooth_lengths() {
        let brute = |n: usize| {
            (n..)
                .find(|&m| {
                    let mut r = m;
                    for p in [2, 3, 5, 7] {
                        while r % p == 0 {
                            r /= p;
                        }
                    }
                    r == 1
                })
                .unwrap()
        };
        for n in 1..2000 {
            assert_eq!(fft_friendly_len(n), brute(n));
        }
        assert_eq!(fft_friendly_len(22), 24);
        assert_eq!(fft_friendly_len(241), 243);
        assert_eq!(fft_friendly_len(11), 12);
    }

    #[test]
    fn single_mode_is_isolated() {
        let g = UniformGrid::new(&[-0.5, 1.0], &[1.5, 4.0], &[8, 10]).unwrap();
        let (a, b, c, d) = (-0.5, 1.5, 1.0, 4.0);
        let f = GridFunction::from_fn(&g, |x| {
            (PI * (x[0] - a) / (b - a)).sin() * (PI * (x[1] - c) / (d - c)).sin()
        });
        let beta = forward_dst(&f).unwrap();
        for k1 in 1..8 {
            for k2 in 1..10 {
                let want = if (k1, k2) == (1, 1) { 1.0 } else { 0.0 };
                assert!((beta.get(&[k1, k2]) - want).abs() < 1e-13, "{k1},{k2}");
            }
        }
        let zero = forward_dst(&GridFunction::zeros(&g)).unwrap();
        assert!(zero.coefficients().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_brute_force_sum() {
        // 7 x 9 interior nodes
        let g = UniformGrid::new(&[0.3, -1.0], &[1.1, 2.0], &[8, 10]).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let f = GridFunction::from_fn(&g, |_| rng.gen_range(-1.0..1.0));
        let beta = forward_dst(&f).unwrap();
        let brute = brute_coefficients(&f);
        let scale = brute.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in beta.coefficients().iter().zip(&brute) {
            assert!((a - b).abs() <= 1e-13 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn inverse_of_unit_mode_and_direct_series() {
        let g = UniformGrid::new(&[0.0, 0.0], &[2.0, 1.0], &[6, 5]).unwrap();
        let mut c = InteriorModeArray::zeros(&g);
        c.set(&[1, 1], 1.0);
        let f = inverse_dst(&c);
        for i in 0..=6 {
            for j in 0..=5 {
                let want = (PI * g.coord(0, i) / 2.0).sin() * (PI * g.coord(1, j)).sin();
                assert!((f.get(&[i, j]) - want).abs() < 1e-14);
            }
        }

        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let coeffs: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = InteriorModeArray::new(&g, coeffs).unwrap();
        let f = inverse_dst(&c);
        for i in 0..=6 {
            for j in 0..=5 {
                let mut s = 0.0;
                for k1 in 1..6 {
                    for k2 in 1..5 {
                        s += c.get(&[k1, k2])
                            * (k1 as f64 * PI * g.coord(0, i) / 2.0).sin()
                            * (k2 as f64 * PI * g.coord(1, j)).sin();
                    }
                }
                if i == 0 || j == 0 || i == 6 || j == 5 {
                    assert_eq!(f.get(&[i, j]), 0.0);
                } else {
                    assert!((f.get(&[i, j]) - s).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn three_dimensional_round_trip() {
        let g = UniformGrid::new(&[0.0; 3], &[1.0, 2.0, 3.0], &[5, 6, 7]).unwrap();
        let f = GridFunction::from_fn(&g, |x| {
            (x[0] * x[1]).sin() + x[2] * x[2] - (3.0 * x[0]).cos()
        });
        let back = inverse_dst(&forward_dst(&f).unwrap());
        let (a, b) = (back.interior_values(), f.interior_values());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-13 * f.max_abs());
        }
    }

    fn direct_convolution(kernel: &[f64], data: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; kernel.len() + data.len() - 1];
        for (q, d) in data.iter().enumerate() {
            for (m, k) in kernel.iter().enumerate() {
                out[m + q] += k * d;
            }
        }
        out
    }

    #[test]
    fn convolution_identity_zero_and_random() {
        let data = [1.0, -2.0, 3.5, 0.25, 7.0];
        let mut delta = vec![0.0; 11];
        delta[5] = 1.0;
        let out = fast_linear_convolution(&delta, &data, 5..10).unwrap();
        for (a, b) in out.iter().zip(&data) {
            assert!((a - b).abs() < 1e-14);
        }
        let out = fast_linear_convolution(&delta, &[0.0; 5], 0..15).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-300));

        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let kernel: Vec<f64> = (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let want = direct_convolution(&kernel, &data);
        let got = fast_linear_convolution(&kernel, &data, 0..25).unwrap();
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
        assert!(fast_linear_convolution(&data, &kernel, 0..3).is_err());
        assert!(fast_linear_convolution(&kernel, &data, 0..26).is_err());
    }

    #[test]
    fn convolution_2d_against_brute_force() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let (kr, kc, dr, dc) = (9, 11, 5, 6);
        let kernel: Vec<f64> = (0..kr * kc).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data: Vec<f64> = (0..dr * dc).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (or, oc) = (kr + dr - 1, kc + dc - 1);
        let mut want = vec![0.0; or * oc];
        for a in 0..dr {
            for b in 0..dc {
                for m in 0..kr {
                    for n in 0..kc {
                        want[(a + m) * oc + b + n] += kernel[m * kc + n] * data[a * dc + b];
                    }
                }
            }
        }
        let got =
            fast_linear_convolution_2d(&kernel, [kr, kc], &data, [dr, dc], [0..or, 0..oc])
                .unwrap();
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }

        let mut delta = vec![0.0; kr * kc];
        delta[4 * kc + 5] = 1.0;
        let got =
            fast_linear_convolution_2d(&delta, [kr, kc], &data, [dr, dc], [4..4 + dr, 5..5 + dc])
                .unwrap();
        for (a, b) in got.iter().zip(&data) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_2d_separable() {
        let k1 = [0.5, -1.0, 2.0, 0.25, 1.5, -0.75, 0.1];
        let k2 = [1.0, 0.3, -0.2, 0.7, 0.9];
        let d1 = [1.0, 2.0, -1.0];
        let d2 = [0.5, -0.5, 3.0, 1.0];
        let kernel: Vec<f64> = k1.iter().flat_map(|a| k2.iter().map(move |b| a * b)).collect();
        let data: Vec<f64> = d1.iter().flat_map(|a| d2.iter().map(move |b| a * b)).collect();
        let c1 = fast_linear_convolution(&k1, &d1, 0..9).unwrap();
        let c2 = fast_linear_convolution(&k2, &d2, 0..8).unwrap();
        let got = fast_linear_convolution_2d(&kernel, [7, 5], &data, [3, 4], [0..9, 0..8]).unwrap();
        for r in 0..9 {
            for c in 0..8 {
                assert!((got[r * 8 + c] - c1[r] * c2[c]).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_and_linearity(
            mx in 2usize..12, my in 2usize..12, seed in any::<u64>(), alpha in -3.0f64..3.0,
        ) {
            let g = UniformGrid::new(&[-1.0, 0.0], &[1.0, 0.7], &[mx, my]).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let f = GridFunction::from_fn(&g, |_| rng.gen_range(-1.0..1.0));
            let h = GridFunction::from_fn(&g, |_| rng.gen_range(-1.0..1.0));
            let back = inverse_dst(&forward_dst(&f).unwrap());
            let norm = f.max_abs();
            for (a, b) in back.interior_values().iter().zip(f.interior_values()) {
                prop_assert!((a - b).abs() <= 1e-13 * norm);
            }

            let combo = f.add_scaled(&h, alpha).unwrap();
            let lhs = forward_dst(&combo).unwrap();
            let (bf, bh) = (forward_dst(&f).unwrap(), forward_dst(&h).unwrap());
            let scale = lhs.coefficients().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            for ((l, a), b) in lhs.coefficients().iter().zip(bf.coefficients()).zip(bh.coefficients()) {
                prop_assert!((l - (a + alpha * b)).abs() <= 1e-13 * scale.max(1.0));
            }
        }

        #[test]
        fn convolution_matches_direct_sum(
            l in 1usize..20, extra in 0usize..20, seed in any::<u64>(),
        ) {
            let k = l + extra;
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let kernel: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let data: Vec<f64> = (0..l).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let want = direct_convolution(&kernel, &data);
            let got = fast_linear_convolution(&kernel, &data, 0..k + l - 1).unwrap();
            let scale = want.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }
}
