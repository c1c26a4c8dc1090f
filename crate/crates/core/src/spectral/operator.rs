use std::sync::Arc;

use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::lanczos::{block_lanczos, LanczosReport};
use super::{BoundaryCondition, EigenBasis, GridVectors, Representation};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Grid};

/// Operators with at most this many unknowns are diagonalised densely.
const DENSE_LIMIT: usize = 1500;

/// Five-point (2D) or seven-point (3D) discretisation of −Δ on the interior nodes.
#[derive(Clone, Debug)]
pub struct SpectralOperator {
    grid: Arc<Grid>,
    domain: DomainSpec,
    bc: BoundaryCondition,
    triplets: Vec<(usize, usize, f64)>,
}

impl SpectralOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    /// Dense copy, for small grids and tests.
    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.size();
        let mut m = Mat::zeros(n, n);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v;
        }
        m
    }

    pub(crate) fn shifted_sparse(&self, shift: f64) -> SparseColMat<usize, f64> {
        let n = self.size();
        let mut t: Vec<_> = self
            .triplets
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        if shift != 0.0 {
            t.extend((0..n).map(|i| Triplet::new(i, i, shift)));
        }
        SparseColMat::try_new_from_triplets(n, n, &t).expect("valid triplets")
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for &(i, j, v) in &self.triplets {
            y[i] += v * x[j];
        }
    }

    /// Gershgorin bound on the largest eigenvalue.
    pub fn norm_bound(&self) -> f64 {
        let mut rows = vec![0.0f64; self.size()];
        for &(i, _, v) in &self.triplets {
            rows[i] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

pub fn assemble_laplacian(grid: Arc<Grid>, bc: BoundaryCondition) -> SpectralOperator {
    let n = grid.dimension();
    let h = grid.spacing();
    let mut triplets = Vec::with_capacity(grid.len() * (2 * n + 1));
    for (node, idx) in grid.nodes().iter().enumerate() {
        let mut diag = 0.0;
        for a in 0..n {
            let w = 1.0 / (h[a] * h[a]);
            for step in [-1i64, 1] {
                let pos = idx[a] as i64 + step;
                let neighbour = if pos < 0 {
                    None
                } else {
                    let mut nb = *idx;
                    nb[a] = pos as usize;
                    grid.node_at(nb)
                };
                match (neighbour, bc) {
                    (Some(m), _) => {
                        triplets.push((node, m, -w));
                        diag += w;
                    }
                    // Dirichlet: the exterior neighbour carries the value 0.
                    (None, BoundaryCondition::Dirichlet) => diag += w,
                    // Neumann: mirrored ghost equals the node, the coupling cancels.
                    (None, BoundaryCondition::Neumann) => {}
                }
            }
        }
        triplets.push((node, node, diag));
    }
    SpectralOperator {
        domain: grid.domain().clone(),
        grid,
        bc,
        triplets,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 0x5eed,
            max_restarts: 300,
        }
    }
}

/// Largest K allowed by the dispersion guard.
pub fn max_modes(nodes: usize) -> usize {
    ((nodes as f64 * 0.05).floor() as usize).max(1).min(nodes)
}

/// K smallest eigenpairs of the grid operator, normalised in the
/// cell-measure-weighted inner product.
pub fn solve_lowest(op: &SpectralOperator, k: usize, opts: SolveOptions) -> Result<EigenBasis> {
    let nodes = op.size();
    let max = max_modes(nodes);
    if k == 0 || k > max {
        return Err(Error::KTooLarge { k, max, nodes });
    }
    let (values, vectors, _report) = if nodes <= DENSE_LIMIT {
        dense_lowest(op, k)?
    } else {
        let shift = match op.bc {
            BoundaryCondition::Dirichlet => 0.0,
            BoundaryCondition::Neumann => {
                let d = op.domain.diameter();
                (std::f64::consts::PI / d).powi(2)
            }
        };
        block_lanczos(op, shift, k, opts)?
    };
    let cell = op.grid.cell_measure();
    let scale = 1.0 / cell.sqrt();
    let gram = vectors.transpose() * &vectors;
    let mut defect = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((gram[(i, j)] - target).abs());
        }
    }
    let mut data = vec![0.0; nodes * k];
    for j in 0..k {
        let col = vectors.col(j);
        for i in 0..nodes {
            data[i * k + j] = col[i] * scale;
        }
    }
    Ok(EigenBasis::new(
        op.bc,
        values,
        Representation::Grid(GridVectors {
            grid: op.grid.clone(),
            count: k,
            values: data,
        }),
        op.domain.clone(),
        defect,
    ))
}

fn dense_lowest(op: &SpectralOperator, k: usize) -> Result<(Vec<f64>, Mat<f64>, LanczosReport)> {
    let a = op.to_dense();
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence {
            k: 1,
            iterations: 0,
            residual: f64::NAN,
        })?;
    let s = eig.S();
    let u = eig.U();
    let values = (0..k).map(|i| s[i]).collect();
    let vectors = Mat::from_fn(op.size(), k, |i, j| u[(i, j)]);
    Ok((values, vectors, LanczosReport::default()))
}
