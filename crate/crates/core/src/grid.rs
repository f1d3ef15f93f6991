//! Uniform rectangular grids and the node-centred data that lives on them.
//!
//! Storage is row-major over the node multi-index with the x axis slowest,
//! i.e. in 3D the flat index of `(i, j, k)` is `(i * ny + j) * nz + k` with
//! `n_s = panels[s] + 1`. Boundary nodes are stored alongside interior nodes.

use crate::error::{Error, Result};

/// Relative alignment tolerance used when matching nodes of two grids.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-12;

/// Axis-aligned box in 1, 2 or 3 dimensions with a uniform mesh per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    panels: Vec<usize>,
    mesh: Vec<f64>,
}

impl UniformGrid {
    pub fn new(lower: &[f64], upper: &[f64], panels: &[usize]) -> Result<Self> {
        let dim = lower.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if upper.len() != dim || panels.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "bounds/panels lengths ({}, {}, {}) disagree",
                lower.len(),
                upper.len(),
                panels.len()
            )));
        }
        for s in 0..dim {
            if !(lower[s].is_finite() && upper[s].is_finite()) || upper[s] <= lower[s] {
                return Err(Error::InvalidGrid(format!(
                    "axis {s}: need finite lower < upper, got [{}, {}]",
                    lower[s], upper[s]
                )));
            }
            if panels[s] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {s}: need at least 2 panels, got {}",
                    panels[s]
                )));
            }
        }
        let mesh = (0..dim)
            .map(|s| (upper[s] - lower[s]) / panels[s] as f64)
            .collect();
        Ok(Self {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            panels: panels.to_vec(),
            mesh,
        })
    }

    /// Same domain on every axis, e.g. `[-1, 1]^3`.
    pub fn cube(dim: usize, lower: f64, upper: f64, panels: usize) -> Result<Self> {
        Self::new(&vec![lower; dim], &vec![upper; dim], &vec![panels; dim])
    }

    pub fn dim(&self) -> usize {
        self.panels.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn panels(&self) -> &[usize] {
        &self.panels
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Node counts per axis (`panels + 1`).
    pub fn shape(&self) -> Vec<usize> {
        self.panels.iter().map(|&m| m + 1).collect()
    }

    /// Interior node counts per axis (`panels - 1`).
    pub fn interior_shape(&self) -> Vec<usize> {
        self.panels.iter().map(|&m| m - 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.panels.iter().map(|&m| m + 1).product()
    }

    /// Coordinate of node `index` along `axis`. No bounds check.
    #[inline]
    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        self.lower[axis] + index as f64 * self.mesh[axis]
    }

    pub fn node_coordinate(&self, index: &[usize]) -> Result<Vec<f64>> {
        if index.len() != self.dim() || index.iter().zip(&self.panels).any(|(&i, &m)| i > m) {
            return Err(Error::Index {
                index: index.to_vec(),
                panels: self.panels.clone(),
            });
        }
        Ok(index
            .iter()
            .enumerate()
            .map(|(s, &i)| self.coord(s, i))
            .collect())
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        flat_index(&self.shape(), index)
    }

    pub fn is_boundary(&self, index: &[usize]) -> bool {
        index
            .iter()
            .zip(&self.panels)
            .any(|(&i, &m)| i == 0 || i == m)
    }

    /// Grid with identical mesh widths grown outward by `before[s]` panels
    /// below and `after[s]` panels above on each axis.
    pub fn extended(&self, before: &[usize], after: &[usize]) -> Result<Self> {
        let dim = self.dim();
        let lower: Vec<f64> = (0..dim)
            .map(|s| self.lower[s] - before[s] as f64 * self.mesh[s])
            .collect();
        let panels: Vec<usize> = (0..dim)
            .map(|s| self.panels[s] + before[s] + after[s])
            .collect();
        let upper: Vec<f64> = (0..dim)
            .map(|s| lower[s] + panels[s] as f64 * self.mesh[s])
            .collect();
        Self::new(&lower, &upper, &panels)
    }

    /// Per-axis node offset and stride placing `sub` inside `self`.
    pub fn alignment_of(&self, sub: &UniformGrid) -> Result<Vec<(usize, usize)>> {
        if sub.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "dimension {} vs {}",
                sub.dim(),
                self.dim()
            )));
        }
        let mut out = Vec::with_capacity(self.dim());
        for s in 0..self.dim() {
            let h = self.mesh[s];
            let tol = ALIGNMENT_TOLERANCE * h;
            let offset = (sub.lower[s] - self.lower[s]) / h;
            let stride = sub.mesh[s] / h;
            let (o, st) = (offset.round(), stride.round());
            if o < 0.0 || st < 1.0 {
                return Err(Error::Alignment(format!(
                    "axis {s}: subgrid [{}, {}] not inside [{}, {}] on a coarser-or-equal mesh",
                    sub.lower[s], sub.upper[s], self.lower[s], self.upper[s]
                )));
            }
            let (o, st) = (o as usize, st as usize);
            let last = o + st * sub.panels[s];
            if last > self.panels[s] {
                return Err(Error::Alignment(format!(
                    "axis {s}: subgrid extends past upper bound {}",
                    self.upper[s]
                )));
            }
            let first_err = (sub.coord(s, 0) - self.coord(s, o)).abs();
            let last_err = (sub.coord(s, sub.panels[s]) - self.coord(s, last)).abs();
            if first_err > tol || last_err > tol {
                return Err(Error::Alignment(format!(
                    "axis {s}: nodes of [{}, {}] with h = {} miss nodes of [{}, {}] with h = {} \
                     (mismatch {:e})",
                    sub.lower[s],
                    sub.upper[s],
                    sub.mesh[s],
                    self.lower[s],
                    self.upper[s],
                    h,
                    first_err.max(last_err)
                )));
            }
            out.push((o, st));
        }
        Ok(out)
    }
}

pub(crate) fn flat_index(shape: &[usize], index: &[usize]) -> usize {
    index
        .iter()
        .zip(shape)
        .fold(0, |acc, (&i, &n)| acc * n + i)
}

pub(crate) fn multi_index(shape: &[usize], mut flat: usize, out: &mut [usize]) {
    for s in (0..shape.len()).rev() {
        out[s] = flat % shape[s];
        flat /= shape[s];
    }
}

/// Row-major strides for `shape`.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut st = vec![1; shape.len()];
    for s in (0..shape.len().saturating_sub(1)).rev() {
        st[s] = st[s + 1] * shape[s + 1];
    }
    st
}

/// Scalar values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &UniformGrid) -> Self {
        Self {
            values: vec![0.0; grid.node_count()],
            grid: grid.clone(),
        }
    }

    pub fn from_values(grid: &UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Shape(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: &UniformGrid, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> f64,
    {
        let shape = grid.shape();
        let mut idx = vec![0; grid.dim()];
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.node_count())
            .map(|n| {
                multi_index(&shape, n, &mut idx);
                for s in 0..idx.len() {
                    x[s] = grid.coord(s, idx[s]);
                }
                f(&x)
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.grid.flat_index(index)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest magnitude over boundary nodes only.
    pub fn boundary_max_abs(&self) -> f64 {
        let shape = self.grid.shape();
        let mut idx = vec![0; shape.len()];
        let mut m = 0.0f64;
        for (n, v) in self.values.iter().enumerate() {
            multi_index(&shape, n, &mut idx);
            if self.grid.is_boundary(&idx) {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// Interior values packed densely in row-major order, shape `panels - 1`.
    pub fn interior_values(&self) -> Vec<f64> {
        let shape = self.grid.shape();
        let inner = self.grid.interior_shape();
        let count: usize = inner.iter().product();
        let mut idx = vec![0; shape.len()];
        let mut out = Vec::with_capacity(count);
        for n in 0..count {
            multi_index(&inner, n, &mut idx);
            idx.iter_mut().for_each(|i| *i += 1);
            out.push(self.values[flat_index(&shape, &idx)]);
        }
        out
    }

    /// Overwrites interior nodes from a dense interior array.
    pub fn set_interior(&mut self, interior: &[f64]) {
        let shape = self.grid.shape();
        let inner = self.grid.interior_shape();
        let mut idx = vec![0; shape.len()];
        for (n, &v) in interior.iter().enumerate() {
            multi_index(&inner, n, &mut idx);
            idx.iter_mut().for_each(|i| *i += 1);
            self.values[flat_index(&shape, &idx)] = v;
        }
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!(
                "grid {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `self + scale * other`, node by node.
    pub fn add_scaled(&self, other: &GridFunction, scale: f64) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(GridFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    /// Copies this function into a grid that contains it, zero elsewhere.
    pub fn embed(&self, outer: &UniformGrid) -> Result<GridFunction> {
        let align = outer.alignment_of(&self.grid)?;
        if align.iter().any(|&(_, st)| st != 1) {
            return Err(Error::Alignment(
                "embedding requires identical mesh widths".into(),
            ));
        }
        let mut out = GridFunction::zeros(outer);
        let shape = self.grid.shape();
        let outer_shape = outer.shape();
        let mut idx = vec![0; shape.len()];
        for (n, &v) in self.values.iter().enumerate() {
            multi_index(&shape, n, &mut idx);
            for (i, &(o, _)) in idx.iter_mut().zip(&align) {
                *i += o;
            }
            out.values[flat_index(&outer_shape, &idx)] = v;
        }
        Ok(out)
    }
}

/// `max |f - g|` over all nodes.
pub fn max_norm_difference(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.check_same_grid(g)?;
    Ok(f
        .values
        .iter()
        .zip(&g.values)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// Samples `f` at the nodes of `sub`. Every node of `sub` must coincide with
/// a node of `f`'s grid; no interpolation is ever performed.
pub fn restrict_to_subgrid(f: &GridFunction, sub: &UniformGrid) -> Result<GridFunction> {
    let align = f.grid.alignment_of(sub)?;
    let shape = sub.shape();
    let outer_shape = f.grid.shape();
    let mut idx = vec![0; shape.len()];
    let mut outer = vec![0; shape.len()];
    let values = (0..sub.node_count())
        .map(|n| {
            multi_index(&shape, n, &mut idx);
            for s in 0..idx.len() {
                outer[s] = align[s].0 + align[s].1 * idx[s];
            }
            f.values[flat_index(&outer_shape, &outer)]
        })
        .collect();
    Ok(GridFunction {
        grid: sub.clone(),
        values,
    })
}

/// Lower or upper side of an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

/// One face of the box: the nodes whose index on `axis` is `0` or `panels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl Face {
    /// All `2 * dim` faces in storage order (axis-major, low before high).
    pub fn all(dim: usize) -> impl Iterator<Item = Face> {
        (0..dim).flat_map(|axis| {
            [Side::Low, Side::High]
                .into_iter()
                .map(move |side| Face { axis, side })
        })
    }

    fn slot(&self) -> usize {
        2 * self.axis + usize::from(self.side == Side::High)
    }

    pub fn node_index(&self, grid: &UniformGrid) -> usize {
        match self.side {
            Side::Low => 0,
            Side::High => grid.panels()[self.axis],
        }
    }
}

/// Node counts of a face: the grid shape with the face-normal axis removed.
/// Empty in 1D, where a face is a single node.
pub fn face_shape(grid: &UniformGrid, axis: usize) -> Vec<usize> {
    grid.shape()
        .into_iter()
        .enumerate()
        .filter(|&(s, _)| s != axis)
        .map(|(_, n)| n)
        .collect()
}

/// Values on every boundary node, stored face by face.
///
/// Edge and corner nodes appear in every face they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryValues {
    grid: UniformGrid,
    faces: Vec<Vec<f64>>,
}

impl BoundaryValues {
    pub fn zeros(grid: &UniformGrid) -> Self {
        let faces = Face::all(grid.dim())
            .map(|f| vec![0.0; face_shape(grid, f.axis).iter().product()])
            .collect();
        Self {
            grid: grid.clone(),
            faces,
        }
    }

    /// Boundary values sampled from `f`.
    pub fn from_fn<F>(grid: &UniformGrid, f: F) -> Self
    where
        F: FnMut(&[f64]) -> f64,
    {
        Self::from_grid_function(&GridFunction::from_fn(grid, f))
    }

    /// Reads the boundary nodes of `f`.
    pub fn from_grid_function(f: &GridFunction) -> Self {
        let mut out = Self::zeros(f.grid());
        let grid = f.grid().clone();
        for face in Face::all(grid.dim()) {
            let fs = face_shape(&grid, face.axis);
            let fixed = face.node_index(&grid);
            let mut fidx = vec![0; fs.len()];
            let mut idx = vec![0; grid.dim()];
            let data = &mut out.faces[face.slot()];
            for (n, slot) in data.iter_mut().enumerate() {
                multi_index(&fs, n, &mut fidx);
                lift_face_index(face.axis, fixed, &fidx, &mut idx);
                *slot = f.get(&idx);
            }
        }
        out
    }

    pub fn from_faces(grid: &UniformGrid, faces: Vec<Vec<f64>>) -> Result<Self> {
        if faces.len() != 2 * grid.dim() {
            return Err(Error::Shape(format!(
                "{} faces for a {}D grid",
                faces.len(),
                grid.dim()
            )));
        }
        for face in Face::all(grid.dim()) {
            let want: usize = face_shape(grid, face.axis).iter().product();
            if faces[face.slot()].len() != want {
                return Err(Error::Shape(format!(
                    "face {face:?} has {} values, expected {want}",
                    faces[face.slot()].len()
                )));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            faces,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn face(&self, face: Face) -> &[f64] {
        &self.faces[face.slot()]
    }

    pub fn face_mut(&mut self, face: Face) -> &mut [f64] {
        &mut self.faces[face.slot()]
    }

    /// Grid function equal to these values on the boundary and zero inside.
    /// Shared nodes take the value of the first face (in storage order).
    pub fn to_grid_function(&self) -> GridFunction {
        let grid = &self.grid;
        let mut out = GridFunction::zeros(grid);
        let shape = grid.shape();
        for face in Face::all(grid.dim()).collect::<Vec<_>>().into_iter().rev() {
            let fs = face_shape(grid, face.axis);
            let fixed = face.node_index(grid);
            let mut fidx = vec![0; fs.len()];
            let mut idx = vec![0; grid.dim()];
            for (n, &v) in self.faces[face.slot()].iter().enumerate() {
                multi_index(&fs, n, &mut fidx);
                lift_face_index(face.axis, fixed, &fidx, &mut idx);
                out.values[flat_index(&shape, &idx)] = v;
            }
        }
        out
    }

    /// Largest relative disagreement between faces on shared nodes.
    pub fn consistency_error(&self) -> f64 {
        let reference = self.to_grid_function();
        let scale = self
            .faces
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        let grid = &self.grid;
        for face in Face::all(grid.dim()) {
            let fs = face_shape(grid, face.axis);
            let fixed = face.node_index(grid);
            let mut fidx = vec![0; fs.len()];
            let mut idx = vec![0; grid.dim()];
            for (n, &v) in self.faces[face.slot()].iter().enumerate() {
                multi_index(&fs, n, &mut fidx);
                lift_face_index(face.axis, fixed, &fidx, &mut idx);
                worst = worst.max((v - reference.get(&idx)).abs() / scale);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.faces
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` over all face entries.
    pub fn max_norm_difference(&self, other: &BoundaryValues) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Shape("boundary values on different grids".into()));
        }
        Ok(self
            .faces
            .iter()
            .flatten()
            .zip(other.faces.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Expands an in-face index to a full grid index.
pub(crate) fn lift_face_index(axis: usize, fixed: usize, face_idx: &[usize], out: &mut [usize]) {
    let mut t = 0;
    for (s, slot) in out.iter_mut().enumerate() {
        if s == axis {
            *slot = fixed;
        } else {
            *slot = face_idx[t];
            t += 1;
        }
    }
}
