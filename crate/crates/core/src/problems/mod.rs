//! Test linear systems: finite-difference model problems, a random
//! tridiagonal family, and P1 finite elements on triangle meshes.

mod fem;
mod mesh;
pub mod meshgen;

pub use fem::{assemble_fem_poisson, fem_cjm_bounds, local_stiffness, Spacing};
pub use mesh::{perturbed_mesh, read_mesh, Mesh};

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::solver::StoppingNorm;
use crate::sparsemat::SparseMatrix;
use crate::{Error, Result};

/// A linear system together with its starting point and stopping norm.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub x0: Vec<f64>,
    pub stopping_norm: StoppingNorm,
    /// Jacobi eigenvalue interval `(lo, hi)` used to build Chebyshev
    /// comparator schemes.
    pub cjm_bounds: Option<(f64, f64)>,
    pub label: String,
}

impl ProblemInstance {
    pub fn new(
        matrix: SparseMatrix,
        rhs: Vec<f64>,
        x0: Vec<f64>,
        stopping_norm: StoppingNorm,
        label: impl Into<String>,
    ) -> Result<Self> {
        for len in [rhs.len(), x0.len()] {
            if len != matrix.n() {
                return Err(Error::Dimension {
                    expected: matrix.n(),
                    got: len,
                });
            }
        }
        Ok(Self {
            matrix,
            rhs,
            x0,
            stopping_norm,
            cjm_bounds: None,
            label: label.into(),
        })
    }

    pub fn with_cjm_bounds(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(-1.0 <= lo && lo < hi && hi < 1.0) {
            return Err(Error::Interval { lo, hi });
        }
        self.cjm_bounds = Some((lo, hi));
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Invalid(msg.to_string()))
    }
}

/// `(-1, 2, -1) / dx^2` on `N` interior points of the unit interval.
pub fn poisson_1d(n: usize) -> Result<ProblemInstance> {
    require(n >= 1, "poisson_1d needs N >= 1")?;
    let dx = 1.0 / (n + 1) as f64;
    let s = ((n + 1) * (n + 1)) as f64;
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0 * s));
        if i + 1 < n {
            t.push((i, i + 1, -s));
            t.push((i + 1, i, -s));
        }
    }
    let a = SparseMatrix::from_triplets(n, &t)?;
    let c = (std::f64::consts::PI * dx).cos();
    ProblemInstance::new(a, vec![1.0; n], vec![0.0; n], StoppingNorm::AbsoluteL2, format!("poisson1d:{n}"))?
        .with_cjm_bounds(-c, c)
}

/// Random symmetric tridiagonal system with a weakly dominant diagonal.
///
/// Off-diagonals are drawn first (`N - 1` values), then the diagonal (`N`
/// values), both uniform on `[0, 1)` from a SplitMix64 stream. Each diagonal
/// entry is raised to its row's off-diagonal sum when smaller; the first and
/// last are set to twice their only neighbour.
pub fn random_tridiagonal(n: usize, seed: u64) -> Result<ProblemInstance> {
    require(n >= 2, "random_tridiagonal needs N >= 2")?;
    let mut rng = SplitMix64::seed_from_u64(seed);
    let off: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
    let mut diag: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    for i in 0..n {
        let left = if i > 0 { off[i - 1] } else { 0.0 };
        let right = if i + 1 < n { off[i] } else { 0.0 };
        diag[i] = diag[i].max(left + right);
    }
    diag[0] = 2.0 * off[0];
    diag[n - 1] = 2.0 * off[n - 2];
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, diag[i]));
    }
    for (i, &v) in off.iter().enumerate() {
        t.push((i, i + 1, -v));
        t.push((i + 1, i, -v));
    }
    let a = SparseMatrix::from_triplets(n, &t)?;
    ProblemInstance::new(
        a,
        vec![1.0; n],
        vec![0.0; n],
        StoppingNorm::AbsoluteL2,
        format!("tridiag:{n}:seed={seed}"),
    )
}

/// Uniform `[0, 1)` vector from a SplitMix64 stream.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Pure Neumann Laplacian on an `n x n` grid with ghost-node boundaries.
///
/// Eliminating a ghost node doubles the inward coupling, which makes the raw
/// stencil nonsymmetric. Each boundary row is therefore halved once per
/// boundary side it touches: edge rows become `(2, -1, -1/2, -1/2)` and
/// corner rows `(1, -1/2, -1/2)`, times `1/dx^2`. Row scaling leaves
/// `D^-1 A`, the Jacobi iterates, and the solution-difference norm unchanged.
pub fn laplace_2d_neumann(n: usize, seed: u64) -> Result<ProblemInstance> {
    require(n >= 2, "laplace_2d_neumann needs n >= 2")?;
    let dx = 1.0 / (n + 1) as f64;
    let s = ((n + 1) * (n + 1)) as f64;
    let idx = |i: usize, j: usize| i + n * j;
    let mut t = Vec::with_capacity(5 * n * n);
    for j in 0..n {
        for i in 0..n {
            let sides = (i == 0 || i == n - 1) as i32 + (j == 0 || j == n - 1) as i32;
            let w = 0.5f64.powi(sides);
            let row = idx(i, j);
            t.push((row, row, 4.0 * s * w));
            // Along each axis the two neighbours get weight 1 each, or 2 on
            // the single inward neighbour at a wall.
            let mut axis = |a: usize, to: &dyn Fn(usize) -> usize| {
                if a == 0 {
                    t.push((row, to(1), -2.0 * s * w));
                } else if a == n - 1 {
                    t.push((row, to(n - 2), -2.0 * s * w));
                } else {
                    t.push((row, to(a - 1), -s * w));
                    t.push((row, to(a + 1), -s * w));
                }
            };
            axis(i, &|k| idx(k, j));
            axis(j, &|k| idx(i, k));
        }
    }
    let a = SparseMatrix::from_triplets(n * n, &t)?;
    let mu = ((std::f64::consts::PI * dx).cos() + 1.0) / 2.0;
    ProblemInstance::new(
        a,
        vec![0.0; n * n],
        random_vector(n * n, seed),
        StoppingNorm::SolutionDiffInf,
        format!("laplace2d:{n}:seed={seed}"),
    )?
    .with_cjm_bounds(-mu, mu)
}

/// 7-point Dirichlet Laplacian on an `n x n x n` grid with `f = 1`.
pub fn poisson_3d(n: usize) -> Result<ProblemInstance> {
    require(n >= 2, "poisson_3d needs n >= 2")?;
    let dx = 1.0 / (n + 1) as f64;
    let s = ((n + 1) * (n + 1)) as f64;
    let total = n * n * n;
    let idx = |i: usize, j: usize, k: usize| i + n * (j + n * k);
    let mut t = Vec::with_capacity(7 * total);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let row = idx(i, j, k);
                t.push((row, row, 6.0 * s));
                let c = [i, j, k];
                for axis in 0..3 {
                    for step in [-1i64, 1] {
                        let v = c[axis] as i64 + step;
                        if v < 0 || v >= n as i64 {
                            continue;
                        }
                        let mut nb = c;
                        nb[axis] = v as usize;
                        t.push((row, idx(nb[0], nb[1], nb[2]), -s));
                    }
                }
            }
        }
    }
    let a = SparseMatrix::from_triplets(total, &t)?;
    let c = (std::f64::consts::PI * dx).cos();
    ProblemInstance::new(
        a,
        vec![1.0; total],
        vec![0.0; total],
        StoppingNorm::RelativeL2,
        format!("poisson3d:{n}"),
    )?
    .with_cjm_bounds(-c, c)
}
