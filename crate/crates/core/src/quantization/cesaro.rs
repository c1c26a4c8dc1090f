//! The Cesàro mean N^{-1} Σ_{k≤N} (u_k, a^w(x, N^{-1/n}D) u_k) and its
//! phase-space limit.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::correlation::{check_n, interparticle_scale};
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::quadrature::{composite, midpoint};
use crate::spectral::{axis_table, AnalyticModes, BoundaryCondition, EigenBasis, Representation};
use crate::weyl::gamma;

use super::kernel::{build_kernel, AxisKernel, AxisNodes};
use super::symbol::{AxisFactor, Symbol};

const ORDER: usize = 10;

fn check_symbol(basis: &EigenBasis, symbol: &Symbol) -> Result<()> {
    if symbol.dimension() != basis.dimension() {
        return Err(Error::InvalidSymbol(format!(
            "symbol dimension {} on a basis of dimension {}",
            symbol.dimension(),
            basis.dimension()
        )));
    }
    Ok(())
}

/// Panel width resolving φ_j for j ≤ jmax and the x profile of `factor`.
fn x_panel(factor: &AxisFactor, length: f64, jmax: usize) -> f64 {
    (length / (2.0 * (jmax + 1) as f64)).min(0.5 * factor.x_scale())
}

fn panels(length: f64, width: f64) -> usize {
    ((length / width).ceil() as usize).max(1)
}

/// Mode table φ_j(x_i) stored as table[j][i].
fn mode_table(bc: BoundaryCondition, length: f64, jmax: usize, nodes: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; nodes.len()]; jmax + 1];
    let mut buf = Vec::new();
    for (i, &x) in nodes.iter().enumerate() {
        axis_table(bc, length, x, jmax, &mut buf);
        for j in 0..=jmax {
            table[j][i] = buf[j];
        }
    }
    table
}

/// c ∫_0^L a1 φ_j² for a multiplier factor, j = 0..=jmax.
fn multiplier_diagonal(factor: &AxisFactor, bc: BoundaryCondition, length: f64, jmax: usize) -> Vec<Complex64> {
    let rule = composite(0.0, length, panels(length, x_panel(factor, length, jmax)), ORDER);
    let table = mode_table(bc, length, jmax, &rule.nodes);
    let m: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * factor.multiplier(x).unwrap())
        .collect();
    table
        .iter()
        .map(|phi| Complex64::new(phi.iter().zip(&m).map(|(p, w)| p * p * w).sum(), 0.0))
        .collect()
}

/// ⟨φ_j, A φ_j⟩ for one axis factor, evaluated on (w, z) node pairs.
fn direct_diagonal(factor: &AxisFactor, bc: BoundaryCondition, length: f64, jmax: usize, h: f64) -> Vec<Complex64> {
    if factor.is_multiplier() {
        return multiplier_diagonal(factor, bc, length, jmax);
    }
    let width = x_panel(factor, length, jmax).min(h / factor.xi_bandwidth());
    let axis = AxisNodes::gauss(0.0, length, panels(length, width), ORDER);
    let kernel = AxisKernel::build(factor, h, &axis);
    let table = mode_table(bc, length, jmax, &axis.nodes);
    table
        .par_iter()
        .map(|phi| kernel.bilinear(&axis.weights, phi, phi))
        .collect()
}

/// Quadrature points (x, y, weight) of ∫∫ over {|x − L/2| ≤ L/2 − h|y|/2},
/// the region where both x ± hy/2 lie in [0, L].
fn wigner_pairs(factor: &AxisFactor, length: f64, jmax: usize, h: f64, density: f64) -> Vec<(f64, f64, f64)> {
    let ymax = factor.transform_reach().unwrap_or(f64::INFINITY).min(length / h);
    let ypanel = 0.5 * (1.0 / factor.xi_bandwidth()).min(length / ((jmax + 1) as f64 * h)) / density;
    let xpanel = x_panel(factor, length, jmax) / density;
    let half = composite(0.0, ymax, panels(ymax, ypanel), ORDER);
    let mut out = Vec::new();
    for (&yp, &wy) in half.nodes.iter().zip(&half.weights) {
        let inset = 0.5 * h * yp;
        let span = length - 2.0 * inset;
        if span <= 0.0 {
            continue;
        }
        let xr = composite(inset, length - inset, panels(span, xpanel), ORDER);
        for y in [yp, -yp] {
            for (&x, &wx) in xr.nodes.iter().zip(&xr.weights) {
                out.push((x, y, wx * wy));
            }
        }
    }
    out
}

/// ∫∫ φ_j(x + hy/2) φ_j(x − hy/2) ǎ(x, y) dx dy for one axis factor.
fn wigner_diagonal(
    factor: &AxisFactor,
    bc: BoundaryCondition,
    length: f64,
    jmax: usize,
    h: f64,
    density: f64,
) -> Vec<Complex64> {
    if factor.is_multiplier() {
        return multiplier_diagonal(factor, bc, length, jmax);
    }
    let pairs = wigner_pairs(factor, length, jmax, h, density);
    pairs
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); jmax + 1];
            let (mut p, mut m) = (Vec::new(), Vec::new());
            for &(x, y, w) in chunk {
                axis_table(bc, length, x + 0.5 * h * y, jmax, &mut p);
                axis_table(bc, length, x - 0.5 * h * y, jmax, &mut m);
                let a = factor.inverse_transform(x, y) * w;
                for j in 0..=jmax {
                    acc[j] += a * (p[j] * m[j]);
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![Complex64::new(0.0, 0.0); jmax + 1], |mut s, t| {
            for (a, b) in s.iter_mut().zip(t) {
                *a += b;
            }
            s
        })
}

/// N^{-1} Σ_k Σ_t c_t Π_a D_{t,a}[j_a(k)] from per-axis diagonals.
fn combine(am: &AnalyticModes, symbol: &Symbol, n: usize, diag: impl Fn(&AxisFactor, usize) -> Vec<Complex64>) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for t in symbol.terms() {
        let tables: Vec<Vec<Complex64>> = t.factors.iter().enumerate().map(|(a, f)| diag(f, a)).collect();
        let s: Complex64 = am.modes[..n]
            .iter()
            .map(|m| {
                tables
                    .iter()
                    .enumerate()
                    .map(|(a, tab)| tab[m[a] as usize])
                    .product::<Complex64>()
            })
            .sum();
        total += s * t.coeff;
    }
    total / n as f64
}

fn axis_jmax(am: &AnalyticModes, n: usize, a: usize) -> usize {
    am.modes[..n].iter().map(|m| m[a] as usize).max().unwrap_or(0)
}

/// Cesàro mean with h = N^{-1/n}, computed from the kernel of a^w.
/// Analytic box bases use per-axis Gauss–Legendre node pairs; grid bases
/// apply the kernel on the full grid lattice.
pub fn cesaro_average_direct(basis: &EigenBasis, symbol: &Symbol, n: usize) -> Result<Complex64> {
    check_n(basis, n)?;
    check_symbol(basis, symbol)?;
    let h = interparticle_scale(n, basis.dimension());
    match basis.representation() {
        Representation::Analytic(am) => Ok(combine(am, symbol, n, |f, a| {
            direct_diagonal(f, basis.bc(), am.lengths[a], axis_jmax(am, n, a), h)
        })),
        Representation::Grid(gv) => {
            let axes = AxisNodes::for_grid(&gv.grid);
            let op = build_kernel(symbol, h, &axes)?;
            let shape = gv.grid.shape();
            let sum: Complex64 = (0..n)
                .into_par_iter()
                .map(|k| {
                    let mut u = vec![Complex64::new(0.0, 0.0); op.len()];
                    for (node, idx) in gv.grid.nodes().iter().enumerate() {
                        let flat = (idx[0] * shape[1] + idx[1]) * shape[2] + idx[2];
                        u[flat] = Complex64::new(gv.values[node * gv.count + k], 0.0);
                    }
                    let au = op.apply(&u).expect("lattice sized by construction");
                    op.inner(&u, &au)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .sum();
            Ok(sum / n as f64)
        }
    }
}

/// Cesàro mean as ⟨Q_N, ǎ⟩ = ∫∫ Q_N(x, y) ǎ(x, y) dx dy, the pairing of the
/// partial Fourier transform of Q_N with a. Q_N is integrated in (x, y)
/// coordinates over its support; analytic box bases only.
pub fn cesaro_average_wigner(basis: &EigenBasis, symbol: &Symbol, n: usize) -> Result<Complex64> {
    cesaro_wigner_with(basis, symbol, n, 1.0)
}

pub(crate) fn cesaro_wigner_with(basis: &EigenBasis, symbol: &Symbol, n: usize, density: f64) -> Result<Complex64> {
    check_n(basis, n)?;
    check_symbol(basis, symbol)?;
    let Representation::Analytic(am) = basis.representation() else {
        return Err(Error::LatticeMismatch(
            "the (x, y) lattice of Q_N needs an analytic box basis".into(),
        ));
    };
    let h = interparticle_scale(n, basis.dimension());
    Ok(combine(am, symbol, n, |f, a| {
        wigner_diagonal(f, basis.bc(), am.lengths[a], axis_jmax(am, n, a), h, density)
    }))
}

#[cfg(test)]
pub(crate) fn wigner_pairs_for_test(
    factor: &AxisFactor,
    length: f64,
    jmax: usize,
    h: f64,
    density: f64,
) -> Vec<(f64, f64, f64)> {
    wigner_pairs(factor, length, jmax, h, density)
}

/// ∫_{B_r} f over the n-ball via ξ_0 = r sin θ and recursion on the
/// remaining (n−1)-ball of radius r cos θ.
fn ball_integral(dim: usize, radius: f64, panels: usize, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    fn rec(level: usize, dim: usize, radius: f64, rule: &(Vec<f64>, Vec<f64>), xi: &mut Vec<f64>, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        if level == dim {
            return f(xi);
        }
        let mut acc = 0.0;
        for (&t, &w) in rule.0.iter().zip(&rule.1) {
            let (s, c) = t.sin_cos();
            xi[level] = radius * s;
            acc += w * radius * c * rec(level + 1, dim, radius * c, rule, xi, f);
        }
        acc
    }
    let r = composite(-0.5 * std::f64::consts::PI, 0.5 * std::f64::consts::PI, panels, 16);
    let rule = (r.nodes, r.weights);
    let mut xi = vec![0.0; dim];
    rec(0, dim, radius, &rule, &mut xi, f)
}

fn refine_ball(dim: usize, radius: f64, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let cap = if dim == 3 { 16 } else { 256 };
    let mut p = 2;
    let mut prev = ball_integral(dim, radius, p, f);
    while p < cap {
        p *= 2;
        let next = ball_integral(dim, radius, p, f);
        if (next - prev).abs() <= 1e-12 * next.abs().max(1e-300) {
            return next;
        }
        prev = next;
    }
    prev
}

/// ∫_0^L a(x, ξ) dx for one axis factor at fixed ξ.
fn x_integral(factor: &AxisFactor, lo: f64, hi: f64) -> Box<dyn Fn(f64) -> f64 + Sync + '_> {
    let len = hi - lo;
    let rule = composite(lo, hi, panels(len, 0.5 * factor.x_scale()).max(8), 16);
    match factor {
        AxisFactor::Separable { x, xi } => {
            let ix = rule.integrate(|t| x.value(t));
            Box::new(move |e| ix * xi.value(e))
        }
        AxisFactor::Sampled(_) => Box::new(move |e| rule.integrate(|t| factor.value(t, e))),
    }
}

/// (2π)^{-n} ∫_{Ω×B_γ} a(x, ξ) dx dξ. On boxes the x integral is
/// Gauss–Legendre per axis and the ball integral is refined until stable;
/// other domains integrate x over a cell-centred lattice.
pub fn phase_space_integral(symbol: &Symbol, domain: &DomainSpec) -> Complex64 {
    let n = domain.dimension();
    assert_eq!(symbol.dimension(), n, "symbol and domain dimension differ");
    let g = gamma(domain);
    let norm = (2.0 * std::f64::consts::PI).powi(n as i32);
    let mut total = 0.0;
    if let Some(lengths) = domain.box_lengths() {
        for t in symbol.terms() {
            let fs: Vec<_> = t
                .factors
                .iter()
                .zip(lengths)
                .map(|(f, &l)| x_integral(f, 0.0, l))
                .collect();
            let ball = refine_ball(n, g, &|xi| fs.iter().zip(xi).map(|(f, &e)| f(e)).product());
            total += t.coeff * ball;
        }
    } else {
        let (lo, hi) = domain.bounding_box();
        let cells = if n == 2 { 400 } else { 48 };
        let rules: Vec<_> = (0..n).map(|a| midpoint(lo[a], hi[a], cells)).collect();
        let mut pts = Vec::new();
        crate::geometry::for_each_tensor_point(&rules, |p, w| {
            if domain.contains(&p) {
                pts.push((p, w));
            }
        });
        for t in symbol.terms() {
            let separable = t
                .factors
                .iter()
                .all(|f| matches!(f, AxisFactor::Separable { .. }));
            if separable {
                let xpart: f64 = pts
                    .iter()
                    .map(|(p, w)| {
                        w * t
                            .factors
                            .iter()
                            .enumerate()
                            .map(|(a, f)| match f {
                                AxisFactor::Separable { x, .. } => x.value(p[a]),
                                AxisFactor::Sampled(_) => unreachable!(),
                            })
                            .product::<f64>()
                    })
                    .sum();
                let ball = refine_ball(n, g, &|xi| {
                    t.factors
                        .iter()
                        .zip(xi)
                        .map(|(f, &e)| match f {
                            AxisFactor::Separable { xi, .. } => xi.value(e),
                            AxisFactor::Sampled(_) => unreachable!(),
                        })
                        .product()
                });
                total += t.coeff * xpart * ball;
            } else {
                let s: f64 = pts
                    .par_iter()
                    .map(|(p, w)| {
                        w * ball_integral(n, g, 8, &|xi| {
                            t.factors
                                .iter()
                                .enumerate()
                                .map(|(a, f)| f.value(p[a], xi[a]))
                                .product()
                        })
                    })
                    .collect::<Vec<f64>>()
                    .into_iter()
                    .sum();
                total += t.coeff * s;
            }
        }
    }
    Complex64::new(total / norm, 0.0)
}
