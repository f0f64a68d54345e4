//! Unit-sphere states and deterministic low-discrepancy sphere grids.
//!
//! The collapsed chain lives on the unit sphere in R^p. Grids here are used
//! for assumption checks, near-equilibrium tables and worst-case start sets;
//! they deliberately avoid thin bands around threshold hyperplanes and axial
//! planes, where the piecewise coefficient functions are discontinuous.

use crate::error::{Result, TarchError};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

/// A point on the unit sphere in R^p (renormalized on construction).
#[derive(Clone, Debug, PartialEq)]
pub struct SphereState {
    v: Vec<f64>,
}

impl SphereState {
    /// Normalizes `v`; errors on (near-)zero input.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(TarchError::Domain(format!("cannot project {v:?} to the sphere")));
        }
        let v = v.into_iter().map(|x| x / norm).collect();
        Ok(Self { v })
    }

    /// Uniform draw on the sphere.
    pub fn uniform<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            if let Ok(s) = Self::new(v) {
                return s;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.v
    }

    /// Squared norm of the trailing p-1 coordinates (the part of the next
    /// state that does not depend on the innovation).
    pub fn trailing_sq(&self) -> f64 {
        self.v[..self.v.len() - 1].iter().map(|x| x * x).sum()
    }

    pub fn norm_error(&self) -> f64 {
        (self.v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs()
    }

    /// Euclidean distance to another state.
    pub fn dist(&self, other: &SphereState) -> f64 {
        self.v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Van der Corput radical inverse in the given base.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Low-discrepancy sphere grid: Halton points pushed through the normal
/// inverse CDF and normalized. Points closer than `min_axial` to an axial
/// plane or `min_threshold` to a threshold hyperplane are skipped.
///
/// For p = 1 the sphere is the two-point set {-1, +1}.
pub fn sphere_grid(p: usize, n: usize, min_axial: f64, hyperplanes: &[Vec<f64>], min_threshold: f64) -> Vec<SphereState> {
    assert!(p >= 1);
    if p == 1 {
        return vec![
            SphereState::new(vec![-1.0]).unwrap(),
            SphereState::new(vec![1.0]).unwrap(),
        ];
    }
    let normal = Normal::standard();
    let mut out = Vec::with_capacity(n);
    let mut i: u64 = 1;
    while out.len() < n && i < 1_000_000 {
        let v: Vec<f64> = (0..p)
            .map(|j| {
                let u = radical_inverse(i, PRIMES[j % PRIMES.len()]).clamp(1e-12, 1.0 - 1e-12);
                normal.inverse_cdf(u)
            })
            .collect();
        i += 1;
        let state = match SphereState::new(v) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if state.coords().iter().any(|x| x.abs() < min_axial) {
            continue;
        }
        if hyperplanes.iter().any(|h| {
            let dot: f64 = h.iter().zip(state.coords()).map(|(a, b)| a * b).sum();
            dot.abs() < min_threshold
        }) {
            continue;
        }
        out.push(state);
    }
    out
}

/// Grid of points lying exactly on the axial plane {theta_axis = 0},
/// used to probe where the homogeneous volatility may vanish.
pub fn axial_plane_grid(p: usize, axis: usize, n: usize) -> Vec<SphereState> {
    assert!(p >= 2 && axis < p);
    let sub = sphere_grid(p - 1, n, 0.0, &[], 0.0);
    sub.into_iter()
        .take(n)
        .map(|s| {
            let mut v = s.coords().to_vec();
            v.insert(axis, 0.0);
            SphereState::new(v).unwrap()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn states_are_unit_norm() {
        let s = SphereState::new(vec![3.0, 4.0]).unwrap();
        assert!(s.norm_error() <= 1e-12);
        assert_eq!(s.coords(), &[0.6, 0.8]);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(SphereState::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn grid_respects_exclusion_bands() {
        let h = vec![vec![1.0, -1.0]];
        let grid = sphere_grid(2, 500, 1e-3, &h, 1e-3);
        assert_eq!(grid.len(), 500);
        for s in &grid {
            assert!(s.norm_error() <= 1e-12);
            assert!(s.coords().iter().all(|x| x.abs() >= 1e-3));
            let dot = s.coords()[0] - s.coords()[1];
            assert!(dot.abs() >= 1e-3);
        }
    }

    #[test]
    fn grid_for_p1_is_the_two_point_sphere() {
        let grid = sphere_grid(1, 100, 0.0, &[], 0.0);
        assert_eq!(grid.len(), 2);
    }

    #[test]
    fn axial_grid_sits_on_the_plane() {
        let grid = axial_plane_grid(3, 1, 50);
        assert_eq!(grid.len(), 50);
        for s in &grid {
            assert_eq!(s.coords()[1], 0.0);
            assert!(s.norm_error() <= 1e-12);
        }
    }

    #[test]
    fn uniform_sphere_covers_both_hemispheres() {
        let mut rng = RandomStream::from_seed(11);
        let mut pos = 0;
        for _ in 0..200 {
            if SphereState::uniform(3, &mut rng).coords()[0] > 0.0 {
                pos += 1;
            }
        }
        assert!(pos > 50 && pos < 150);
    }

    #[test]
    fn grid_is_roughly_equidistributed() {
        // fraction with first coordinate positive should be near 1/2
        let grid = sphere_grid(3, 2000, 0.0, &[], 0.0);
        let pos = grid.iter().filter(|s| s.coords()[0] > 0.0).count();
        assert!(pos > 900 && pos < 1100, "pos = {pos}");
    }
}
