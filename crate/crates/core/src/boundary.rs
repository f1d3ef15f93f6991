//! Trapezoidal evaluation of the Green's-function integral on the boundary.
//!
//! For a face normal to axis `a`, the sum over interior sources factors into
//! slices: every source plane `p` along `a` contributes the discrete
//! convolution of the plane's density with the Green's function sampled at
//! normal distance `p * h_a` (low face) or `(M_a - p) * h_a` (high face).
//! Both faces normal to `a` share the transform of the density slice: the two
//! real kernels travel in the real and imaginary parts of one complex kernel.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::dirichlet::SUPPORT_TOLERANCE;
use crate::dst::{fft_friendly_len, load_padded, PaddedFft};
use crate::error::{Error, Result};
use crate::greens::{kernel_slice, GreensKernel};
use crate::grid::{face_shape, multi_index, strides, BoundaryValues, Face, GridFunction, Side};

fn check_boundary_free(rho: &GridFunction) -> Result<()> {
    let boundary_max = rho.boundary_max_abs();
    let max = rho.max_abs();
    if boundary_max > SUPPORT_TOLERANCE * max {
        let dim = rho.grid().dim();
        return Err(if dim > 1 {
            Error::Singularity { dim }
        } else {
            Error::SupportViolation { boundary_max, max }
        });
    }
    Ok(())
}

fn cell_volume(rho: &GridFunction) -> f64 {
    rho.grid().mesh().iter().product()
}

/// Direct Trapezoidal sum over interior nodes for every boundary node.
///
/// Costs `O(boundary nodes x interior nodes)`; this is the reference the
/// fast path is checked against.
pub fn boundary_values_naive(rho: &GridFunction) -> Result<BoundaryValues> {
    check_boundary_free(rho)?;
    let grid = rho.grid();
    let dim = grid.dim();
    let kernel = GreensKernel::new(dim)?;
    let shape = grid.shape();
    let weight = cell_volume(rho);

    let mut sources: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut idx = vec![0; dim];
    for (n, &v) in rho.values().iter().enumerate() {
        multi_index(&shape, n, &mut idx);
        if v != 0.0 && !grid.is_boundary(&idx) {
            let x = (0..dim).map(|s| grid.coord(s, idx[s])).collect();
            sources.push((x, v));
        }
    }

    let mut out = BoundaryValues::zeros(grid);
    let mut target = vec![0.0; dim];
    for face in Face::all(dim) {
        let fs = face_shape(grid, face.axis);
        let fixed = face.node_index(grid);
        let mut fidx = vec![0; fs.len()];
        for (n, slot) in out.face_mut(face).iter_mut().enumerate() {
            multi_index(&fs, n, &mut fidx);
            crate::grid::lift_face_index(face.axis, fixed, &fidx, &mut idx);
            for s in 0..dim {
                target[s] = grid.coord(s, idx[s]);
            }
            let sum: f64 = sources
                .iter()
                .map(|(x, v)| {
                    let r2: f64 = x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum();
                    kernel.eval_unchecked(r2.sqrt()) * v
                })
                .sum();
            *slot = sum * weight;
        }
    }
    Ok(out)
}

/// Transform layout shared by the two faces normal to `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceConvolutionPlan {
    pub axis: usize,
    /// Node counts of a face (`M_t + 1` per in-face axis).
    pub face_shape: Vec<usize>,
    /// Kernel extents, offsets `-M_t ..= M_t` per in-face axis.
    pub kernel_shape: Vec<usize>,
    /// Zero-padded transform extents, 7-smooth and `>= kernel + face - 1`.
    pub padded_shape: Vec<usize>,
    /// Source slices `p = 1 .. M_axis - 1` along the face normal.
    pub slices: std::ops::Range<usize>,
}

impl FaceConvolutionPlan {
    pub fn new(grid: &crate::grid::UniformGrid, axis: usize) -> Self {
        let face_shape = face_shape(grid, axis);
        let kernel_shape: Vec<usize> = face_shape.iter().map(|&n| 2 * n - 1).collect();
        let padded_shape = face_shape
            .iter()
            .zip(&kernel_shape)
            .map(|(&l, &k)| fft_friendly_len(k + l - 1))
            .collect();
        Self {
            axis,
            face_shape,
            kernel_shape,
            padded_shape,
            slices: 1..grid.panels()[axis],
        }
    }
}

/// Green's function on the in-face offset lattice at normal distance `d`.
fn face_kernel(grid: &crate::grid::UniformGrid, axis: usize, d: f64) -> Vec<f64> {
    let dim = grid.dim();
    let inface: Vec<usize> = (0..dim).filter(|&s| s != axis).collect();
    let offsets = |t: usize| -> Vec<f64> {
        let m = grid.panels()[t] as i64;
        (-m..=m).map(|k| k as f64 * grid.mesh()[t]).collect()
    };
    // distances are at least d > 0, so the evaluations below cannot fail
    match inface.len() {
        1 => kernel_slice(dim, &[d], &offsets(inface[0])).unwrap(),
        _ => {
            let cols = offsets(inface[1]);
            offsets(inface[0])
                .into_iter()
                .flat_map(|row| kernel_slice(dim, &[d, row], &cols).unwrap())
                .collect()
        }
    }
}

struct SliceWorkspace {
    fft: PaddedFft,
    kernel: Vec<Complex64>,
    data: Vec<Complex64>,
}

impl SliceWorkspace {
    fn new(plan: &FaceConvolutionPlan) -> Self {
        let fft = PaddedFft::new(&plan.padded_shape);
        let n = fft.len();
        Self {
            fft,
            kernel: vec![Complex64::default(); n],
            data: vec![Complex64::default(); n],
        }
    }
}

/// Density on slice `p` with in-face boundary nodes dropped.
fn density_slice(rho: &GridFunction, axis: usize, p: usize) -> Option<Vec<f64>> {
    let grid = rho.grid();
    let shape = grid.shape();
    let st = strides(&shape);
    let fs = face_shape(grid, axis);
    let count: usize = fs.iter().product();
    let mut fidx = vec![0; fs.len()];
    let mut idx = vec![0; shape.len()];
    let mut any = false;
    let out: Vec<f64> = (0..count)
        .map(|n| {
            multi_index(&fs, n, &mut fidx);
            crate::grid::lift_face_index(axis, p, &fidx, &mut idx);
            if grid.is_boundary(&idx) {
                return 0.0;
            }
            let flat: usize = idx.iter().zip(&st).map(|(i, s)| i * s).sum();
            let v = rho.values()[flat];
            any |= v != 0.0;
            v
        })
        .collect();
    any.then_some(out)
}

/// Unscaled contributions of slice `p` to the low and high faces.
fn slice_contribution(
    rho: &GridFunction,
    plan: &FaceConvolutionPlan,
    p: usize,
    data: &[f64],
    ws: &mut SliceWorkspace,
) -> (Vec<f64>, Vec<f64>) {
    let grid = rho.grid();
    let axis = plan.axis;
    let h = grid.mesh()[axis];
    let m = grid.panels()[axis];
    let low = face_kernel(grid, axis, p as f64 * h);
    let high = face_kernel(grid, axis, (m - p) as f64 * h);

    ws.kernel.fill(Complex64::default());
    ws.data.fill(Complex64::default());
    load_padded(&mut ws.kernel, &plan.padded_shape, &low, &plan.kernel_shape, false);
    load_padded(&mut ws.kernel, &plan.padded_shape, &high, &plan.kernel_shape, true);
    load_padded(&mut ws.data, &plan.padded_shape, data, &plan.face_shape, false);
    ws.fft.process(&mut ws.kernel, FftDirection::Forward);
    ws.fft.process(&mut ws.data, FftDirection::Forward);
    let scale = 1.0 / ws.fft.len() as f64;
    for (d, k) in ws.data.iter_mut().zip(&ws.kernel) {
        *d = *d * *k * scale;
    }
    ws.fft.process(&mut ws.data, FftDirection::Inverse);

    // target j sits at full-convolution index j + (face extent - 1)
    let count: usize = plan.face_shape.iter().product();
    let pst = strides(ws.fft.shape());
    let mut fidx = vec![0; plan.face_shape.len()];
    let mut lo = Vec::with_capacity(count);
    let mut hi = Vec::with_capacity(count);
    for n in 0..count {
        multi_index(&plan.face_shape, n, &mut fidx);
        let flat: usize = fidx
            .iter()
            .zip(&plan.face_shape)
            .zip(&pst)
            .map(|((&j, &l), &s)| (j + l - 1) * s)
            .sum();
        lo.push(ws.data[flat].re);
        hi.push(ws.data[flat].im);
    }
    (lo, hi)
}

/// Same sums as [`boundary_values_naive`], computed as per-slice FFT
/// convolutions in `O(N log N)`.
///
/// Slices are convolved on up to `thread_count` threads and reduced serially
/// in ascending slice order, so the result does not depend on the thread
/// count.
pub fn boundary_values_fast(rho: &GridFunction, thread_count: usize) -> Result<BoundaryValues> {
    check_boundary_free(rho)?;
    let grid = rho.grid();
    if grid.dim() == 1 {
        return boundary_values_naive(rho);
    }
    let threads = thread_count.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let weight = cell_volume(rho);
    let mut out = BoundaryValues::zeros(grid);
    for axis in 0..grid.dim() {
        let plan = FaceConvolutionPlan::new(grid, axis);
        let slices: Vec<(usize, Vec<f64>)> = plan
            .slices
            .clone()
            .filter_map(|p| density_slice(rho, axis, p).map(|d| (p, d)))
            .collect();
        let count: usize = plan.face_shape.iter().product();
        let mut low = vec![0.0; count];
        let mut high = vec![0.0; count];

        for chunk in slices.chunks(4 * threads) {
            let parts: Vec<(Vec<f64>, Vec<f64>)> = pool.install(|| {
                chunk
                    .par_iter()
                    .map_init(
                        || SliceWorkspace::new(&plan),
                        |ws, (p, data)| slice_contribution(rho, &plan, *p, data, ws),
                    )
                    .collect()
            });
            for (lo, hi) in parts {
                low.iter_mut().zip(&lo).for_each(|(a, b)| *a += b);
                high.iter_mut().zip(&hi).for_each(|(a, b)| *a += b);
            }
        }
        low.iter_mut().chain(high.iter_mut()).for_each(|v| *v *= weight);
        out.face_mut(Face { axis, side: Side::Low }).copy_from_slice(&low);
        out.face_mut(Face { axis, side: Side::High }).copy_from_slice(&high);
    }
    Ok(out)
}
