//! Compact harmonic solves against a dense LU solve of the explicitly
//! assembled 9-point / 19-point system.

use fspoisson::grid::{BoundaryValues, GridFunction, UniformGrid};
use fspoisson::harmonic::{sixth_order_rhs, solve_harmonic_4th, solve_harmonic_6th};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

fn offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|o| (-1..=1).map(move |d| [o.clone(), vec![d]].concat()))
            .collect();
    }
    out
}

fn weight(o: i64, h: f64) -> f64 {
    if o == 0 {
        -2.0 / (h * h)
    } else {
        1.0 / (h * h)
    }
}

fn coefficient(o: &[i64], h: &[f64]) -> f64 {
    let dim = o.len();
    let only = |axes: &[usize]| (0..dim).all(|t| axes.contains(&t) || o[t] == 0);
    let mut c = 0.0;
    for s in 0..dim {
        if only(&[s]) {
            c += weight(o[s], h[s]);
        }
        for r in 0..s {
            if only(&[r, s]) {
                c += (h[r] * h[r] + h[s] * h[s]) / 12.0 * weight(o[r], h[r]) * weight(o[s], h[s]);
            }
        }
    }
    c
}

struct Dense {
    grid: UniformGrid,
    interior: Vec<usize>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Boundary coupling: (row, flat node index, coefficient).
    coupling: Vec<(usize, usize, f64)>,
}

impl Dense {
    fn new(grid: &UniformGrid) -> Self {
        let shape = grid.shape();
        let dim = grid.dim();
        let mut index = vec![usize::MAX; grid.node_count()];
        let mut interior = vec![];
        let mut multi = vec![];
        for n in 0..grid.node_count() {
            let mut rem = n;
            let mut idx = vec![0; dim];
            for s in (0..dim).rev() {
                idx[s] = rem % shape[s];
                rem /= shape[s];
            }
            if !grid.is_boundary(&idx) {
                index[n] = interior.len();
                interior.push(n);
                multi.push(idx);
            }
        }
        let k = interior.len();
        let mut a = DMatrix::zeros(k, k);
        let mut coupling = vec![];
        let offs = offsets(dim);
        for (row, idx) in multi.iter().enumerate() {
            for o in &offs {
                let c = coefficient(o, grid.mesh());
                if c == 0.0 {
                    continue;
                }
                let nb: Vec<usize> = idx.iter().zip(o).map(|(&i, &d)| (i as i64 + d) as usize).collect();
                let flat = grid.flat_index(&nb);
                if grid.is_boundary(&nb) {
                    coupling.push((row, flat, c));
                } else {
                    a[(row, index[flat])] += c;
                }
            }
        }
        Self { grid: grid.clone(), interior, lu: a.lu(), coupling }
    }

    /// Solves `L u = f` on the interior with `u = g` on the boundary.
    fn solve(&self, f_interior: &[f64], g: &GridFunction) -> GridFunction {
        let mut rhs = DVector::from_column_slice(f_interior);
        for &(row, flat, c) in &self.coupling {
            rhs[row] -= c * g.values()[flat];
        }
        let x = self.lu.solve(&rhs).expect("nonsingular");
        let mut out = g.values().to_vec();
        for (n, v) in self.interior.iter().zip(x.iter()) {
            out[*n] = *v;
        }
        GridFunction::from_values(&self.grid, out).unwrap()
    }
}

fn relative(a: &GridFunction, b: &GridFunction) -> f64 {
    let d = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / b.max_abs()
}

fn random_boundary(grid: &UniformGrid, seed: u64) -> (BoundaryValues, GridFunction) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let b = BoundaryValues::from_fn(grid, |_| rng.gen_range(-1.0..1.0));
    let ext = b.to_grid_function();
    (b, ext)
}

fn grids() -> Vec<UniformGrid> {
    vec![
        UniformGrid::new(&[-1.0, 0.0], &[1.0, 1.5], &[8, 8]).unwrap(),
        UniformGrid::new(&[0.0, 0.0, 0.0], &[1.0, 1.3, 0.8], &[6, 6, 6]).unwrap(),
        UniformGrid::new(&[0.0, 0.0], &[1.0, 1.0], &[7, 9]).unwrap(),
    ]
}

#[test]
fn fourth_order_matches_dense_solve() {
    for (seed, grid) in grids().iter().enumerate() {
        let dense = Dense::new(grid);
        let (b, ext) = random_boundary(grid, seed as u64);
        let want = dense.solve(&vec![0.0; dense.interior.len()], &ext);
        let got = solve_harmonic_4th(&b).unwrap();
        let err = relative(&got, &want);
        assert!(err <= 1e-10, "{:?}: {err:e}", grid.panels());
    }
}

#[test]
fn sixth_order_matches_two_dense_solves() {
    let grids = [
        UniformGrid::new(&[-1.0, 0.0], &[1.0, 1.5], &[8, 8]).unwrap(),
        UniformGrid::new(&[0.0, 0.0, 0.0], &[1.0, 1.3, 0.8], &[7, 7, 8]).unwrap(),
    ];
    for (seed, grid) in grids.iter().enumerate() {
        let dense = Dense::new(grid);
        let (b, ext) = random_boundary(grid, 10 + seed as u64);
        let u1 = dense.solve(&vec![0.0; dense.interior.len()], &ext);
        let correction = sixth_order_rhs(&u1).unwrap();
        let f: Vec<f64> = dense.interior.iter().map(|&n| correction.values()[n]).collect();
        let want = dense.solve(&f, &ext);
        let got = solve_harmonic_6th(&b).unwrap();
        let err = relative(&got, &want);
        assert!(err <= 1e-10, "{:?}: {err:e}", grid.panels());
    }
}

#[test]
fn stencil_has_nine_and_nineteen_points() {
    let count = |dim: usize| {
        offsets(dim)
            .iter()
            .filter(|o| coefficient(o, &vec![0.1; dim]) != 0.0)
            .count()
    };
    assert_eq!(count(2), 9);
    assert_eq!(count(3), 19);
    // row sums vanish: constants are harmonic
    for h in [[0.1, 0.2, 0.3], [0.5, 0.5, 0.5]] {
        let s: f64 = offsets(3).iter().map(|o| coefficient(o, &h)).sum();
        assert!(s.abs() < 1e-9);
    }
}
