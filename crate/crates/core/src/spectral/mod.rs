//! Ordered orthonormal eigenbases (λ_k, u_k) of −Δ on Ω with Dirichlet or
//! Neumann conditions, analytic on boxes and computed on grids otherwise.

mod analytic;
pub mod cache;
mod lanczos;
mod operator;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{hex_digest, DomainSpec, Grid, Point};

pub use analytic::analytic_basis_box;
pub use operator::{assemble_laplacian, solve_lowest, SolveOptions, SpectralOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Separable box modes; `modes[k]` holds the per-axis indices of u_{k+1}.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticModes {
    pub lengths: Vec<f64>,
    pub modes: Vec<[u32; 3]>,
}

/// Grid eigenvectors stored node-major: `values[node * count + k]`.
#[derive(Clone, Debug)]
pub struct GridVectors {
    pub grid: Arc<Grid>,
    pub count: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum Representation {
    Analytic(AnalyticModes),
    Grid(GridVectors),
}

#[derive(Clone, Debug)]
pub struct EigenBasis {
    bc: BoundaryCondition,
    eigenvalues: Vec<f64>,
    repr: Representation,
    domain: DomainSpec,
    ortho_defect: f64,
}

impl EigenBasis {
    pub(crate) fn new(
        bc: BoundaryCondition,
        eigenvalues: Vec<f64>,
        repr: Representation,
        domain: DomainSpec,
        ortho_defect: f64,
    ) -> Self {
        Self {
            bc,
            eigenvalues,
            repr,
            domain,
            ortho_defect,
        }
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// λ_1 ≤ … ≤ λ_K.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn ortho_defect(&self) -> f64 {
        self.ortho_defect
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.repr, Representation::Analytic(_))
    }

    /// Content hash of the spectrum and the domain.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.domain.hash().as_bytes());
        hasher.update([self.bc as u8]);
        for l in &self.eigenvalues {
            hasher.update(l.to_le_bytes());
        }
        hex_digest(hasher)
    }

    /// Values of u_1, …, u_count at `p` written to `out[..count]`.
    pub fn eval_modes(&self, p: &Point, count: usize, out: &mut [f64]) {
        debug_assert!(count <= self.len() && out.len() >= count);
        let out = &mut out[..count];
        if !self.domain.contains(p) {
            out.fill(0.0);
            return;
        }
        match &self.repr {
            Representation::Analytic(am) => am.eval(self.bc, p, out),
            Representation::Grid(gv) => gv.eval(p, out),
        }
    }

    /// u_k at the given points; k is 1-based like λ_k.
    pub fn evaluate(&self, k: usize, points: &[Point]) -> Result<Vec<f64>> {
        if k == 0 || k > self.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        let mut buf = vec![0.0; k];
        Ok(points
            .iter()
            .map(|p| {
                self.eval_modes(p, k, &mut buf);
                buf[k - 1]
            })
            .collect())
    }

    /// Copy restricted to the first `k` pairs.
    pub fn truncated(&self, k: usize) -> Result<EigenBasis> {
        if k == 0 || k > self.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        let repr = match &self.repr {
            Representation::Analytic(am) => Representation::Analytic(AnalyticModes {
                lengths: am.lengths.clone(),
                modes: am.modes[..k].to_vec(),
            }),
            Representation::Grid(gv) => {
                let nodes = gv.grid.len();
                let mut values = Vec::with_capacity(nodes * k);
                for node in 0..nodes {
                    values.extend_from_slice(&gv.values[node * gv.count..node * gv.count + k]);
                }
                Representation::Grid(GridVectors {
                    grid: gv.grid.clone(),
                    count: k,
                    values,
                })
            }
        };
        Ok(EigenBasis::new(
            self.bc,
            self.eigenvalues[..k].to_vec(),
            repr,
            self.domain.clone(),
            self.ortho_defect,
        ))
    }
}

/// Per-axis 1D factors φ_j(t) on [0, L] for j = 0..=jmax.
pub(crate) fn axis_table(bc: BoundaryCondition, length: f64, t: f64, jmax: usize, out: &mut Vec<f64>) {
    out.clear();
    let theta = PI * t / length;
    let amp = (2.0 / length).sqrt();
    match bc {
        BoundaryCondition::Dirichlet => {
            out.push(0.0);
            for j in 1..=jmax {
                out.push(amp * (j as f64 * theta).sin());
            }
        }
        BoundaryCondition::Neumann => {
            out.push((1.0 / length).sqrt());
            for j in 1..=jmax {
                out.push(amp * (j as f64 * theta).cos());
            }
        }
    }
}

impl AnalyticModes {
    pub fn max_index(&self) -> [usize; 3] {
        let mut m = [0usize; 3];
        for mode in &self.modes {
            for a in 0..3 {
                m[a] = m[a].max(mode[a] as usize);
            }
        }
        m
    }

    fn eval(&self, bc: BoundaryCondition, p: &Point, out: &mut [f64]) {
        let count = out.len();
        let modes = &self.modes[..count];
        let mut jmax = [0usize; 3];
        for mode in modes {
            for a in 0..self.lengths.len() {
                jmax[a] = jmax[a].max(mode[a] as usize);
            }
        }
        let mut tables: [Vec<f64>; 3] = Default::default();
        for (a, &l) in self.lengths.iter().enumerate() {
            axis_table(bc, l, p[a], jmax[a], &mut tables[a]);
        }
        if self.lengths.len() == 2 {
            for (o, mode) in out.iter_mut().zip(modes) {
                *o = tables[0][mode[0] as usize] * tables[1][mode[1] as usize];
            }
        } else {
            for (o, mode) in out.iter_mut().zip(modes) {
                *o = tables[0][mode[0] as usize]
                    * tables[1][mode[1] as usize]
                    * tables[2][mode[2] as usize];
            }
        }
    }
}

impl GridVectors {
    fn eval(&self, p: &Point, out: &mut [f64]) {
        out.fill(0.0);
        let g = &self.grid;
        let n = g.dimension();
        let origin = g.origin();
        let h = g.spacing();
        let shape = g.shape();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..n {
            let s = (p[a] - origin[a]) / h[a];
            let mut f = s.floor();
            let mut t = s - f;
            // Snap node points so nodal values are reproduced exactly.
            if t > 1.0 - 1e-9 {
                f += 1.0;
                t = 0.0;
            } else if t < 1e-9 {
                t = 0.0;
            }
            if f < 0.0 || f as usize >= shape[a] {
                return;
            }
            base[a] = f as usize;
            frac[a] = t;
        }
        let corners = 1usize << n;
        for c in 0..corners {
            let mut idx = [0usize; 3];
            let mut w = 1.0;
            for a in 0..n {
                let up = (c >> a) & 1 == 1;
                if up {
                    w *= frac[a];
                    idx[a] = base[a] + 1;
                } else {
                    w *= 1.0 - frac[a];
                    idx[a] = base[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            if let Some(node) = g.node_at(idx) {
                let row = &self.values[node * self.count..node * self.count + out.len()];
                for (o, v) in out.iter_mut().zip(row) {
                    *o += w * v;
                }
            }
        }
    }
}
