//! Probe-based checks of the symbol calculus: the composition defect
//! ‖a^w b^w − (ab)^w‖ and the Gårding lower bound for a ≥ 0.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermi::standard_normal;

use super::kernel::{build_kernel, AxisNodes, QuantizedOperator};
use super::symbol::Symbol;

/// Points per axis beyond which the lattice is refused.
const MAX_POINTS: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub h: f64,
    pub defect: f64,
    pub lattice_points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GardingReport {
    pub h: f64,
    /// Smallest Ritz value of a^w on the Krylov space of the probes.
    pub min: f64,
    /// Smallest Rayleigh quotient among the probes themselves.
    pub probe_min: f64,
    /// max |Im⟨u, a^w u⟩| / ‖u‖² over the probes.
    pub imag_residue: f64,
}

/// Uniform lattice covering the x supports of all symbols, with spacing
/// δ = πh/η_max so that every kernel row and probe is sampled above Nyquist.
pub fn calculus_lattice(symbols: &[&Symbol], h: f64) -> Result<Vec<AxisNodes>> {
    let n = symbols[0].dimension();
    if symbols.iter().any(|s| s.dimension() != n) {
        return Err(Error::InvalidSymbol("symbols differ in dimension".into()));
    }
    let mut axes = Vec::with_capacity(n);
    let mut total = 1usize;
    for a in 0..n {
        let (mut lo, mut hi, mut eta) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for s in symbols {
            for t in s.terms() {
                let f = &t.factors[a];
                let (l, r) = f.x_extent();
                if l.is_finite() && r.is_finite() {
                    lo = lo.min(l);
                    hi = hi.max(r);
                }
                eta = eta.max(f.xi_reach());
            }
        }
        if !(hi > lo) {
            (lo, hi) = (-1.0, 1.0);
        }
        if eta == 0.0 {
            eta = 1.0;
        }
        let spacing = PI * h / eta;
        let count = ((hi - lo) / spacing).ceil() as usize + 1;
        total = total.saturating_mul(count);
        axes.push(AxisNodes::lattice(lo, spacing, count));
    }
    if total > MAX_POINTS {
        return Err(Error::InvalidSymbol(format!(
            "calculus lattice would need {total} points at h = {h}"
        )));
    }
    Ok(axes)
}

/// Seeded random probes with Fourier content in the lower half of the
/// lattice band, normalised in the weighted norm.
pub fn probe_vectors(axes: &[AxisNodes], count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let shape: Vec<usize> = axes.iter().map(AxisNodes::len).collect();
    let len: usize = shape.iter().product();
    let weight: f64 = axes.iter().map(|a| a.weights[0]).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = FftPlanner::<f64>::new();
    (0..count)
        .map(|_| {
            let mut v = vec![Complex64::new(0.0, 0.0); len];
            for (i, c) in v.iter_mut().enumerate() {
                let mut idx = i;
                let mut low = true;
                for &m in shape.iter().rev() {
                    let k = idx % m;
                    idx /= m;
                    let freq = k.min(m - k);
                    low &= 4 * freq <= m;
                }
                if low {
                    *c = Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng));
                }
            }
            for (a, &m) in shape.iter().enumerate() {
                let fft = planner.plan_fft_inverse(m);
                let stride: usize = shape[a + 1..].iter().product();
                let outer: usize = shape[..a].iter().product();
                let mut line = vec![Complex64::new(0.0, 0.0); m];
                for o in 0..outer {
                    for r in 0..stride {
                        let base = o * m * stride + r;
                        for (i, l) in line.iter_mut().enumerate() {
                            *l = v[base + i * stride];
                        }
                        fft.process(&mut line);
                        for (i, l) in line.iter().enumerate() {
                            v[base + i * stride] = *l;
                        }
                    }
                }
            }
            let norm = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * weight).sqrt();
            v.iter().map(|z| z / norm).collect()
        })
        .collect()
}

fn check_probes(probes: usize) -> Result<()> {
    if probes < 16 {
        return Err(Error::InvalidSymbol(format!("{probes} probes given, at least 16 required")));
    }
    Ok(())
}

fn weighted_norm(op: &QuantizedOperator, u: &[Complex64]) -> f64 {
    op.inner(u, u).re.sqrt()
}

/// max over probes of ‖(a^w b^w − (ab)^w)u‖ / ‖u‖.
pub fn composition_defect(a: &Symbol, b: &Symbol, h: f64, probes: usize, seed: u64) -> Result<DefectReport> {
    check_probes(probes)?;
    let ab = a.times(b)?;
    let axes = calculus_lattice(&[a, b, &ab], h)?;
    let (opa, opb, opab) = (
        build_kernel(a, h, &axes)?,
        build_kernel(b, h, &axes)?,
        build_kernel(&ab, h, &axes)?,
    );
    let mut defect = 0.0f64;
    for u in probe_vectors(&axes, probes, seed) {
        let lhs = opa.apply(&opb.apply(&u)?)?;
        let rhs = opab.apply(&u)?;
        let d: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(p, q)| p - q).collect();
        defect = defect.max(weighted_norm(&opa, &d) / weighted_norm(&opa, &u));
    }
    Ok(DefectReport {
        h,
        defect,
        lattice_points: opa.len(),
    })
}

/// max over probes of |Im⟨u, a^w u⟩| / ‖u‖².
pub fn self_adjointness_residue(a: &Symbol, h: f64, probes: usize, seed: u64) -> Result<f64> {
    check_probes(probes)?;
    let axes = calculus_lattice(&[a], h)?;
    let op = build_kernel(a, h, &axes)?;
    let mut worst = 0.0f64;
    for u in probe_vectors(&axes, probes, seed) {
        let q = op.inner(&u, &op.apply(&u)?);
        worst = worst.max(q.im.abs() / op.inner(&u, &u).re);
    }
    Ok(worst)
}

/// Minimum of ⟨u, a^w u⟩/‖u‖² for a ≥ 0, over the probes and over the
/// Krylov space they span (three powers of a^w, Rayleigh–Ritz).
pub fn garding_min(a: &Symbol, h: f64, probes: usize, seed: u64) -> Result<GardingReport> {
    check_probes(probes)?;
    if !a.is_nonnegative() {
        return Err(Error::InvalidSymbol("garding_min needs a symbol declared nonnegative".into()));
    }
    let axes = calculus_lattice(&[a], h)?;
    let op = build_kernel(a, h, &axes)?;
    let start = probe_vectors(&axes, probes, seed);
    let mut probe_min = f64::INFINITY;
    let mut imag = 0.0f64;
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut block = Vec::new();
    for u in &start {
        let au = op.apply(u)?;
        let q = op.inner(u, &au);
        probe_min = probe_min.min(q.re);
        imag = imag.max(q.im.abs());
        block.push(au);
    }
    let mut candidates: Vec<Vec<Complex64>> = start;
    for _ in 0..3 {
        for v in candidates.drain(..) {
            push_orthonormal(&op, &mut basis, v);
        }
        candidates = std::mem::take(&mut block);
        block = candidates
            .iter()
            .map(|v| op.apply(v))
            .collect::<Result<Vec<_>>>()?;
    }
    for v in candidates {
        push_orthonormal(&op, &mut basis, v);
    }
    let images: Vec<Vec<Complex64>> = basis.iter().map(|v| op.apply(v)).collect::<Result<_>>()?;
    let m = basis.len();
    let gram = Mat::<Complex64>::from_fn(m, m, |i, j| {
        let hij = op.inner(&basis[i], &images[j]);
        let hji = op.inner(&basis[j], &images[i]);
        (hij + hji.conj()) * 0.5
    });
    let eig = gram
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::InvalidSymbol(format!("Ritz eigensolve failed: {e:?}")))?;
    let ritz_min = eig.S().column_vector()[0].re;
    Ok(GardingReport {
        h,
        min: ritz_min.min(probe_min),
        probe_min,
        imag_residue: imag,
    })
}

/// Twice-orthogonalised insertion; vectors already in the span are dropped.
fn push_orthonormal(op: &QuantizedOperator, basis: &mut Vec<Vec<Complex64>>, mut v: Vec<Complex64>) {
    let start = weighted_norm(op, &v);
    for _ in 0..2 {
        for b in basis.iter() {
            let c = op.inner(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let norm = weighted_norm(op, &v);
    if norm > 1e-8 * start {
        basis.push(v.iter().map(|x| x / norm).collect());
    }
}
