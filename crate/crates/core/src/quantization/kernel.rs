//! Weyl kernels k(x, y) = h^{-n} ǎ((x+y)/2, (x−y)/h) on tensor node sets and
//! the operators they define.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::quadrature::{composite, Rule};

use super::symbol::{AxisFactor, Symbol};

/// Sorted quadrature nodes along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisNodes {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisNodes {
    /// `count` points start, start + spacing, … each carrying weight `spacing`.
    pub fn lattice(start: f64, spacing: f64, count: usize) -> Self {
        Self {
            nodes: (0..count).map(|i| start + i as f64 * spacing).collect(),
            weights: vec![spacing; count],
        }
    }

    pub fn gauss(a: f64, b: f64, panels: usize, order: usize) -> Self {
        Self::from(composite(a, b, panels, order))
    }

    /// Full lattice lines of a grid (nodes outside Ω included).
    pub fn for_grid(grid: &Grid) -> Vec<Self> {
        let (o, s, shape) = (grid.origin(), grid.spacing(), grid.shape());
        (0..grid.dimension())
            .map(|a| Self::lattice(o[a], s[a], shape[a]))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn span(&self) -> f64 {
        match (self.nodes.first(), self.nodes.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

impl From<Rule> for AxisNodes {
    fn from(r: Rule) -> Self {
        Self {
            nodes: r.nodes,
            weights: r.weights,
        }
    }
}

/// Row-banded matrix; row i holds entries K_ij w_j for j in start..start+len.
#[derive(Clone, Debug)]
pub(crate) struct AxisKernel {
    rows: Vec<(usize, Vec<Complex64>)>,
}

impl AxisKernel {
    pub(crate) fn build(factor: &AxisFactor, h: f64, axis: &AxisNodes) -> Self {
        let x = &axis.nodes;
        if factor.is_multiplier() {
            let rows = x
                .iter()
                .enumerate()
                .map(|(i, &xi)| (i, vec![Complex64::new(factor.multiplier(xi).unwrap(), 0.0)]))
                .collect();
            return Self { rows };
        }
        let reach = factor.transform_reach().map(|r| r * h);
        let rows = x
            .par_iter()
            .map(|&xi| {
                let (lo, hi) = match reach {
                    Some(r) => (x.partition_point(|&t| t < xi - r), x.partition_point(|&t| t <= xi + r)),
                    None => (0, x.len()),
                };
                let row = (lo..hi)
                    .map(|j| {
                        let xj = x[j];
                        factor.inverse_transform(0.5 * (xi + xj), (xi - xj) / h) * (axis.weights[j] / h)
                    })
                    .collect();
                (lo, row)
            })
            .collect();
        Self { rows }
    }

    pub(crate) fn apply_line(&self, input: &[Complex64], out: &mut [Complex64]) {
        for (o, (start, row)) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().zip(&input[*start..]).map(|(k, u)| k * u).sum();
        }
    }

    /// Σ_i w_i f(x_i) Σ_l K_il g(x_l) for real f, g given at the nodes.
    pub(crate) fn bilinear(&self, weights: &[f64], f: &[f64], g: &[f64]) -> Complex64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, (start, row))| {
                let inner: Complex64 = row.iter().zip(&g[*start..]).map(|(k, v)| k * v).sum();
                inner * (weights[i] * f[i])
            })
            .sum()
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        let (start, row) = &self.rows[i];
        if j >= *start && j - start < row.len() {
            row[j - start]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// a^w(x, hD) realised on a tensor product of axis node sets.
#[derive(Clone, Debug)]
pub struct QuantizedOperator {
    symbol: Symbol,
    h: f64,
    axes: Vec<AxisNodes>,
    terms: Vec<(f64, Vec<AxisKernel>)>,
}

/// Builds the kernel on the tensor nodes `axes`; fails when a sampled
/// factor's transform period cannot cover the spread of (x − y)/h.
pub fn build_kernel(symbol: &Symbol, h: f64, axes: &[AxisNodes]) -> Result<QuantizedOperator> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidSymbol(format!("h must be positive, got {h}")));
    }
    if axes.len() != symbol.dimension() || axes.iter().any(AxisNodes::is_empty) {
        return Err(Error::GridMismatch(format!(
            "{} axes for a symbol in dimension {}",
            axes.len(),
            symbol.dimension()
        )));
    }
    for t in symbol.terms() {
        for (f, axis) in t.factors.iter().zip(axes) {
            if let AxisFactor::Sampled(s) = f {
                let required = 2.0 * axis.span() / h;
                if s.period() < required {
                    return Err(Error::NyquistViolation {
                        period: s.period(),
                        required,
                    });
                }
            }
        }
    }
    let terms = symbol
        .terms()
        .iter()
        .map(|t| {
            let kernels = t
                .factors
                .iter()
                .zip(axes)
                .map(|(f, axis)| AxisKernel::build(f, h, axis))
                .collect();
            (t.coeff, kernels)
        })
        .collect();
    Ok(QuantizedOperator {
        symbol: symbol.clone(),
        h,
        axes: axes.to_vec(),
        terms,
    })
}

impl QuantizedOperator {
    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn axes(&self) -> &[AxisNodes] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(AxisNodes::len).collect()
    }

    /// Number of tensor nodes; grid functions are indexed row-major with axis 0 slowest.
    pub fn len(&self) -> usize {
        self.axes.iter().map(AxisNodes::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Product quadrature weight of every tensor node.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![1.0];
        for axis in &self.axes {
            w = w
                .iter()
                .flat_map(|a| axis.weights.iter().map(move |b| a * b))
                .collect();
        }
        w
    }

    /// Coordinates of tensor node `idx`.
    pub fn node(&self, mut idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        for (a, axis) in self.axes.iter().enumerate().rev() {
            p[a] = axis.nodes[idx % axis.len()];
            idx /= axis.len();
        }
        p
    }

    /// Discrete kernel value k(x_i, x_j) at tensor nodes i, j (multiplier
    /// axes contribute their diagonal value divided by the node weight).
    pub fn kernel_entry(&self, i: usize, j: usize) -> Complex64 {
        let shape = self.shape();
        let split = |mut idx: usize| {
            let mut out = vec![0; shape.len()];
            for a in (0..shape.len()).rev() {
                out[a] = idx % shape[a];
                idx /= shape[a];
            }
            out
        };
        let (ii, jj) = (split(i), split(j));
        self.terms
            .iter()
            .map(|(c, kernels)| {
                kernels
                    .iter()
                    .enumerate()
                    .map(|(a, k)| k.entry(ii[a], jj[a]) / self.axes[a].weights[jj[a]])
                    .product::<Complex64>()
                    * *c
            })
            .sum()
    }

    /// (a^w u)(x_i) = Σ_j k(x_i, x_j) w_j u_j.
    pub fn apply(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if u.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "grid function has {} values, lattice has {}",
                u.len(),
                self.len()
            )));
        }
        let shape = self.shape();
        let mut acc = vec![Complex64::new(0.0, 0.0); u.len()];
        let mut work = u.to_vec();
        let mut next = vec![Complex64::new(0.0, 0.0); u.len()];
        for (c, kernels) in &self.terms {
            work.copy_from_slice(u);
            for (a, k) in kernels.iter().enumerate() {
                mode_product(k, &shape, a, &work, &mut next);
                std::mem::swap(&mut work, &mut next);
            }
            for (s, v) in acc.iter_mut().zip(&work) {
                *s += v * *c;
            }
        }
        Ok(acc)
    }

    /// ⟨u, v⟩ with the tensor quadrature weights.
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter()
            .zip(v)
            .zip(self.weights())
            .map(|((a, b), w)| a.conj() * b * w)
            .sum()
    }
}

/// Applies `k` along axis `a` of a row-major tensor.
fn mode_product(k: &AxisKernel, shape: &[usize], a: usize, input: &[Complex64], out: &mut [Complex64]) {
    let len = shape[a];
    let stride: usize = shape[a + 1..].iter().product();
    let outer: usize = shape[..a].iter().product();
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    let mut res = vec![Complex64::new(0.0, 0.0); len];
    for o in 0..outer {
        for r in 0..stride {
            let base = o * len * stride + r;
            for (i, l) in line.iter_mut().enumerate() {
                *l = input[base + i * stride];
            }
            k.apply_line(&line, &mut res);
            for (i, v) in res.iter().enumerate() {
                out[base + i * stride] = *v;
            }
        }
    }
}

/// ⟨u, a^w u⟩ with the weighted inner product of the operator lattice.
pub fn quadratic_form(op: &QuantizedOperator, u: &[Complex64]) -> Result<Complex64> {
    let au = op.apply(u)?;
    Ok(op.inner(u, &au))
}
