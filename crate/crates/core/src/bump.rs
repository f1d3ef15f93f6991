//! Compactly supported polynomial bump densities and their exact potentials.
//!
//! `B(x) = γ (1 - |x - c|^2 / ε^2)^p` inside the ball of radius `ε`, zero
//! outside, with `γ` chosen for unit integral. `B` has `p - 1` continuous
//! derivatives. Its free-space potential is radial and, outside the support,
//! equals the Green's function of a unit point mass.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::greens::GreensKernel;

/// Centre of the three-dimensional test density, `(1/sqrt(31), 0.2, 0.1)`.
pub fn reference_center_3d() -> [f64; 3] {
    [1.0 / 31f64.sqrt(), 0.2, 0.1]
}

/// Support radius of the reference test density.
pub const REFERENCE_EPSILON: f64 = 0.4;

/// `∫_0^1 (1 - t^2)^p t^(d-1) dt = B(d/2, p+1) / 2 = p! / (2 prod_{j=0}^{p} (d/2 + j))`.
pub fn radial_moment(dim: usize, p: u32) -> f64 {
    let half = dim as f64 / 2.0;
    let mut v = 0.5;
    for j in 0..=p {
        v /= half + j as f64;
        if j > 0 {
            v *= j as f64;
        }
    }
    v
}

/// Measure of the unit sphere `S^(d-1)`: 2, 2π, 4π.
fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyBump {
    dim: usize,
    epsilon: f64,
    p: u32,
    center: Vec<f64>,
    gamma: f64,
    /// Coefficients `a_k` of `sum_k a_k t^(2k+2)` in the interior potential.
    interior: Vec<f64>,
    /// `sum_k a_k`, the interior series at `t = 1`.
    interior_at_edge: f64,
}

impl PolyBump {
    pub fn new(dim: usize, epsilon: f64, p: u32, center: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) || center.len() != dim {
            return Err(Error::Config(format!(
                "bump needs a centre with {dim} in 1..=3 components, got {}",
                center.len()
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if p == 0 {
            return Err(Error::Config("p must be at least 1".into()));
        }
        let gamma = 1.0 / (sphere_measure(dim) * epsilon.powi(dim as i32) * radial_moment(dim, p));

        // φ'(r) = γ Σ_k C(p,k) (-1)^k r^(2k+1) / (ε^(2k) (2k+d)); integrating
        // from r to ε gives the interior series below.
        let mut binom = 1.0;
        let interior: Vec<f64> = (0..=p)
            .map(|k| {
                if k > 0 {
                    binom *= (p - k + 1) as f64 / k as f64;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let k = k as f64;
                sign * binom / ((2.0 * k + dim as f64) * (2.0 * k + 2.0))
            })
            .collect();
        let interior_at_edge = interior.iter().sum();
        Ok(Self {
            dim,
            epsilon,
            p,
            center: center.to_vec(),
            gamma,
            interior,
            interior_at_edge,
        })
    }

    /// Bump with `k` continuous derivatives (`p = k + 1`).
    pub fn with_differentiability(dim: usize, epsilon: f64, k: u32, center: &[f64]) -> Result<Self> {
        Self::new(dim, epsilon, k + 1, center)
    }

    /// The three-dimensional reference density: `ε = 0.4`, centre
    /// `(1/sqrt(31), 0.2, 0.1)`, `k` continuous derivatives.
    pub fn reference_3d(k: u32) -> Self {
        Self::with_differentiability(3, REFERENCE_EPSILON, k, &reference_center_3d())
            .expect("valid reference parameters")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn differentiability(&self) -> u32 {
        self.p - 1
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt()
    }

    /// Density as a function of distance from the centre.
    pub fn radial_profile(&self, r: f64) -> f64 {
        if r >= self.epsilon {
            return 0.0;
        }
        let t = r / self.epsilon;
        self.gamma * (1.0 - t * t).powi(self.p as i32)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let e2 = self.epsilon * self.epsilon;
        if r2 >= e2 {
            return 0.0;
        }
        self.gamma * (1.0 - r2 / e2).powi(self.p as i32)
    }

    /// Potential as a function of distance from the centre.
    pub fn radial_potential(&self, r: f64) -> f64 {
        let kernel = GreensKernel::new(self.dim).expect("validated dimension");
        if r >= self.epsilon {
            return kernel.eval_unchecked(r);
        }
        let t2 = (r / self.epsilon).powi(2);
        // Σ a_k t^(2k+2) by Horner in t^2
        let series = self.interior.iter().rev().fold(0.0, |acc, a| acc * t2 + a) * t2;
        kernel.eval_unchecked(self.epsilon)
            - self.gamma * self.epsilon * self.epsilon * (self.interior_at_edge - series)
    }

    /// Exact free-space potential `∫ G(|x - s|) B(s) ds`.
    pub fn analytic_potential(&self, x: &[f64]) -> f64 {
        self.radial_potential(self.distance(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss-Legendre (5 points) on `n` equal panels.
    fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683,
            0.538_469_310_105_683,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| {
                let m = a + (i as f64 + 0.5) * h;
                X.iter()
                    .zip(&W)
                    .map(|(x, w)| w * f(m + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    #[test]
    fn moments_match_quadrature() {
        for dim in 1..=3 {
            for p in 1..=9 {
                let q = quad(|t| (1.0 - t * t).powi(p as i32) * t.powi(dim as i32 - 1), 0.0, 1.0, 200);
                assert!((radial_moment(dim, p) - q).abs() < 1e-14, "{dim} {p}");
            }
        }
    }

    #[test]
    fn unit_mass() {
        for dim in 1..=3 {
            for p in [1, 3, 5, 7, 9] {
                let b = PolyBump::new(dim, 0.4, p, &vec![0.0; dim]).unwrap();
                let mass = sphere_measure(dim)
                    * quad(|r| b.radial_profile(r) * r.powi(dim as i32 - 1), 0.0, 0.4, 400);
                assert!((mass - 1.0).abs() < 1e-12, "{dim} {p}: {mass}");
            }
        }
    }

    #[test]
    fn peak_and_edge() {
        let b = PolyBump::reference_3d(6);
        assert_eq!(b.p(), 7);
        assert_eq!(b.evaluate(b.center()), b.gamma());
        let c = b.center().to_vec();
        assert_eq!(b.evaluate(&[c[0] + 0.4, c[1], c[2]]), 0.0);
        let gamma = 1.0 / (4.0 * PI * quad(|r| (1.0 - r * r / 0.16).powi(7) * r * r, 0.0, 0.4, 400));
        assert!((b.gamma() - gamma).abs() < 1e-12 * gamma);
    }

    #[test]
    fn far_field_is_point_source() {
        let b = PolyBump::new(3, 0.4, 7, &[0.0; 3]).unwrap();
        assert!((b.radial_potential(0.8) + 1.0 / (8.0 * PI * 0.4)).abs() < 1e-15);
        let b2 = PolyBump::new(2, 0.4, 3, &[0.0; 2]).unwrap();
        for r in [0.4, 0.5, 1.3] {
            assert_eq!(b2.radial_potential(r), r.ln() / (2.0 * PI));
        }
    }

    /// φ(r) = G(ε) - ∫_r^ε m(s) / (|S| s^(d-1)) ds with the enclosed mass
    /// m(s) itself obtained by quadrature of the density.
    fn potential_by_quadrature(b: &PolyBump, r: f64) -> f64 {
        let dim = b.dim() as i32;
        let mass = |s: f64| sphere_measure(b.dim()) * quad(|t| b.radial_profile(t) * t.powi(dim - 1), 0.0, s, 40);
        let flux = |s: f64| mass(s) / (sphere_measure(b.dim()) * s.powi(dim - 1));
        GreensKernel::new(b.dim()).unwrap().eval_unchecked(b.epsilon()) - quad(flux, r, b.epsilon(), 60)
    }

    #[test]
    fn interior_potential_matches_quadrature() {
        let b = PolyBump::new(3, 0.4, 7, &[0.0; 3]).unwrap();
        let want = potential_by_quadrature(&b, 0.2);
        assert!((b.radial_potential(0.2) - want).abs() < 1e-12, "{} vs {want}", b.radial_potential(0.2));
        for dim in 1..=3 {
            for p in [1, 5, 9] {
                let b = PolyBump::new(dim, 0.3, p, &vec![0.0; dim]).unwrap();
                for r in [0.01, 0.1, 0.25] {
                    let want = potential_by_quadrature(&b, r);
                    assert!((b.radial_potential(r) - want).abs() < 1e-11 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn laplacian_of_potential_is_density() {
        let b = PolyBump::new(3, 0.4, 5, &[0.1, -0.2, 0.05]).unwrap();
        let x = [0.2, -0.1, 0.1];
        let lap = |h: f64| {
            let mut s = -6.0 * b.analytic_potential(&x);
            for a in 0..3 {
                for sgn in [-1.0, 1.0] {
                    let mut y = x;
                    y[a] += sgn * h;
                    s += b.analytic_potential(&y);
                }
            }
            s / (h * h) - b.evaluate(&x)
        };
        let (e1, e2) = (lap(1e-2).abs(), lap(5e-3).abs());
        assert!(e2 < e1 / 3.0 && e2 < 1e-2 * b.gamma(), "{e1} {e2}");
    }

    #[test]
    fn potential_is_c1_across_support_edge() {
        for dim in 1..=3 {
            let b = PolyBump::new(dim, 0.4, 3, &vec![0.0; dim]).unwrap();
            let (lo, hi) = (0.4 - 1e-8, 0.4 + 1e-8);
            assert!((b.radial_potential(lo) - b.radial_potential(hi)).abs() < 1e-7);
            let slope = |r: f64| (b.radial_potential(r + 1e-6) - b.radial_potential(r - 1e-6)) / 2e-6;
            let k = GreensKernel::new(dim).unwrap();
            assert!((slope(0.4 - 2e-6) - k.radial_derivative(0.4)).abs() < 1e-4);
        }
    }
}
