//! Companion-matrix products for pure ARCH(p) models.
//!
//! The squared lag vector of a pure ARCH model propagates linearly through a
//! random companion matrix whose first row carries the squared loadings
//! scaled by the squared error. Norms of the matrix products give an
//! independent estimator of twice the Lyapunov exponent, and their squared
//! state recursion must track the collapsed chain exactly.
//!
//! ```
//! use tarch::matrixprod::companion_matrix;
//!
//! // first row b_i^2 e^2, ones on the subdiagonal
//! let m = companion_matrix(&[1.0, 2.0, 3.0], 1.0);
//! assert_eq!(m.get(0, 1), 4.0);
//! assert_eq!(m.get(2, 1), 1.0);
//! assert_eq!(m.get(1, 1), 0.0);
//! ```

use crate::dist::ErrorDist;
use crate::error::{Result, TarchError};
use crate::model::ModelSpec;
use crate::rng::RandomStream;
use crate::sphere::SphereState;
use crate::stats::{self, KahanSum};
use rayon::prelude::*;
use serde::Serialize;

/// Matrix norm used for the product accumulator. The limit does not depend
/// on the choice; exposing both makes that checkable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormKind {
    Frobenius,
    MaxRowSum,
}

/// Dense p x p row-major matrix, small p.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for (j, o) in out.data[i * n..(i + 1) * n].iter_mut().enumerate() {
                    *o += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = v.iter().enumerate().map(|(j, vj)| self.get(i, j) * vj).sum();
        }
        out
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Frobenius => self.data.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::MaxRowSum => (0..self.n)
                .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    pub fn scale(&mut self, c: f64) {
        for x in &mut self.data {
            *x *= c;
        }
    }
}

/// The random companion matrix: first row (b_i^2 e^2), ones on the
/// subdiagonal, zeros elsewhere. For p = 1 it is the 1 x 1 matrix (b_1^2 e^2).
pub fn companion_matrix(b_coeffs: &[f64], e: f64) -> Matrix {
    let p = b_coeffs.len();
    assert!(p >= 1);
    let mut m = Matrix::zeros(p);
    for (j, b) in b_coeffs.iter().enumerate() {
        m.set(0, j, b * b * e * e);
    }
    for i in 1..p {
        m.set(i, i - 1, 1.0);
    }
    m
}

/// Running normalized product of companion matrices. The matrix is
/// renormalized to unit norm after every absorb step; the log norms
/// accumulate separately, so products spanning hundreds of orders of
/// magnitude stay representable.
#[derive(Clone, Debug)]
pub struct CompanionProduct {
    b_coeffs: Vec<f64>,
    norm_kind: NormKind,
    log_norm_sum: KahanSum,
    steps: usize,
    current: Matrix,
}

impl CompanionProduct {
    pub fn new(b_coeffs: Vec<f64>, norm_kind: NormKind) -> Self {
        let p = b_coeffs.len();
        Self {
            b_coeffs,
            norm_kind,
            log_norm_sum: KahanSum::new(),
            steps: 0,
            current: Matrix::identity(p),
        }
    }

    /// Multiplies one more companion matrix into the product and returns the
    /// per-step log norm increment.
    pub fn absorb(&mut self, e: f64) -> f64 {
        let b = companion_matrix(&self.b_coeffs, e);
        let mut next = b.matmul(&self.current);
        let norm = next.norm(self.norm_kind);
        let log_norm = norm.ln();
        self.log_norm_sum.add(log_norm);
        next.scale(1.0 / norm);
        self.current = next;
        self.steps += 1;
        log_norm
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// (1/t) log ||M_t||, the running top-exponent estimate.
    pub fn average_log_norm(&self) -> f64 {
        self.log_norm_sum.value() / self.steps as f64
    }

    pub fn current(&self) -> &Matrix {
        &self.current
    }
}

/// Estimate of the top Lyapunov exponent of the companion products.
#[derive(Clone, Debug, Serialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub stderr: f64,
    pub n_steps: usize,
    pub replicates: usize,
    pub norm: NormKind,
    pub stream_key: u64,
}

/// Estimates gamma = lim (1/t) log ||B_t ... B_1|| by replicate-averaged
/// normalized products; pass a pure ARCH model's loading vector.
pub fn top_lyapunov_exponent(
    b_coeffs: &[f64],
    dist: &ErrorDist,
    n_steps: usize,
    replicates: usize,
    stream: &RandomStream,
    norm: NormKind,
) -> Result<GammaEstimate> {
    if b_coeffs.is_empty() {
        return Err(TarchError::Domain("loading vector must be nonempty".into()));
    }
    if replicates < 2 {
        return Err(TarchError::Domain("need at least 2 replicates for a spread-based stderr".into()));
    }
    let per_rep: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.split(i as u64);
            let mut prod = CompanionProduct::new(b_coeffs.to_vec(), norm);
            for _ in 0..n_steps {
                prod.absorb(dist.sample(&mut s));
            }
            prod.average_log_norm()
        })
        .collect();
    let (gamma, stderr) = stats::mean_and_stderr(&per_rep);
    Ok(GammaEstimate {
        gamma,
        stderr,
        n_steps,
        replicates,
        norm,
        stream_key: stream.key(),
    })
}

/// Side-by-side consistency check between the collapsed chain and the
/// matrix recursion on the squared sphere coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct SquaredStateCheck {
    pub n_steps: usize,
    /// max over t of the sup-norm gap between squared collapsed coordinates
    /// and the normalized matrix recursion
    pub max_state_dev: f64,
    /// max over t of |w^2 - ratio of consecutive linear functionals|
    pub max_w2_dev: f64,
}

/// Runs the collapsed chain and the companion-matrix recursion on shared
/// errors from the equi-coordinate start and reports the worst deviation of
/// the squared-state identity and of the squared magnitude multiplier.
pub fn squared_state_crosscheck(
    spec: &ModelSpec,
    b_coeffs: &[f64],
    dist: &ErrorDist,
    n_steps: usize,
    stream: &mut RandomStream,
) -> Result<SquaredStateCheck> {
    let p = b_coeffs.len();
    if spec.p() != p {
        return Err(TarchError::Domain("model order and loading vector length differ".into()));
    }
    // start at the equi-coordinate sphere point; its squared coordinates are
    // the uniform probability vector
    let theta0 = SphereState::new(vec![1.0 / (p as f64).sqrt(); p])?;
    let mut theta = theta0;
    let mut t_vec = vec![1.0 / p as f64; p];

    let mut max_state_dev: f64 = 0.0;
    let mut max_w2_dev: f64 = 0.0;
    for _ in 0..n_steps {
        let u = dist.sample(stream);
        let (next, w) = match crate::collapsed::step(spec, &theta, u)? {
            Some(pair) => pair,
            None => continue, // measure-zero; skip the shared draw entirely
        };
        let b = companion_matrix(b_coeffs, u);
        let unnorm = b.matvec(&t_vec);
        let total: f64 = unnorm.iter().sum();
        let ratio = total; // 1' B_t v / 1' v with v normalized to sum 1
        for (i, x) in unnorm.iter().enumerate() {
            t_vec[i] = x / total;
            let sq = next.coords()[i] * next.coords()[i];
            max_state_dev = max_state_dev.max((t_vec[i] - sq).abs());
        }
        max_w2_dev = max_w2_dev.max((w * w - ratio).abs());
        theta = next;
    }
    Ok(SquaredStateCheck {
        n_steps,
        max_state_dev,
        max_w2_dev,
    })
}
