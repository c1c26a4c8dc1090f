//! Spin-m free Fermi gas: shell filling, the determinantal one-body matrix,
//! exchange hole and density, their limits, and the exchange energy
//! against the local density approximation.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{
    check_n, interparticle_scale, lattice_gram, norm, shifted, CorrelationField, FieldKind, XSamples,
    YLayout, YSamples,
};
use crate::error::{Error, Result};
use crate::geometry::{CompactSubset, DomainSpec, Point};
use crate::special::ball_profile;
use crate::spectral::EigenBasis;
use crate::weyl;

const DEGENERACY_TOL: f64 = 1e-9;

/// Occupation of an N-particle ground state with m spin states: orbitals
/// 1..=a_N fully occupied and a partially filled degenerate shell
/// a_N+1..=ã_N described by a projector over its (orbital, spin) slots.
#[derive(Clone, Debug)]
pub struct SpinSystem {
    pub m: usize,
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub a_tilde: usize,
    pub b_tilde: usize,
    /// Rank-b_N orthogonal projector on the shell slots; slot
    /// (a_N + 1 + i, s) has index i·m + s.
    pub shell_projector: Mat<f64>,
}

fn gap_after(ev: &[f64], k: usize) -> Option<bool> {
    // λ_0 = −∞, so there is always a gap after index 0.
    if k == 0 {
        return Some(true);
    }
    let (lo, hi) = (*ev.get(k - 1)?, *ev.get(k)?);
    let scale = lo.abs().max(hi.abs());
    Some(hi - lo > DEGENERACY_TOL * scale)
}

/// Shell indices a_N, b_N, ã_N, b̃_N with the default λ-ordered,
/// spin-inner-loop filling of the partial shell.
pub fn shell_fill(eigenvalues: &[f64], n: usize, m: usize) -> Result<SpinSystem> {
    let (a, b, a_tilde, b_tilde) = shell_indices(eigenvalues, n, m)?;
    let slots = (a_tilde - a) * m;
    let shell_projector = Mat::from_fn(slots, slots, |i, j| if i == j && i < b { 1.0 } else { 0.0 });
    Ok(SpinSystem {
        m,
        n,
        a,
        b,
        a_tilde,
        b_tilde,
        shell_projector,
    })
}

/// As [`shell_fill`], but the partial shell holds b_N random orthonormal
/// combinations of its slots drawn from `seed`.
pub fn shell_fill_seeded(eigenvalues: &[f64], n: usize, m: usize, seed: u64) -> Result<SpinSystem> {
    let mut sys = shell_fill(eigenvalues, n, m)?;
    let slots = sys.shell_projector.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Mat::<f64>::from_fn(slots, sys.b, |_, _| standard_normal(&mut rng));
    for j in 0..sys.b {
        for _ in 0..2 {
            for i in 0..j {
                let d: f64 = (0..slots).map(|r| c[(r, i)] * c[(r, j)]).sum();
                for r in 0..slots {
                    let v = c[(r, i)];
                    c[(r, j)] -= d * v;
                }
            }
        }
        let nrm = c.col(j).norm_l2();
        for r in 0..slots {
            c[(r, j)] /= nrm;
        }
    }
    sys.shell_projector = &c * c.transpose();
    Ok(sys)
}

fn shell_indices(ev: &[f64], n: usize, m: usize) -> Result<(usize, usize, usize, usize)> {
    if m == 0 || n == 0 {
        return Err(Error::InsufficientSpectrum(format!("need N >= 1 and m >= 1, got N={n}, m={m}")));
    }
    let short = |k: usize| {
        Error::InsufficientSpectrum(format!(
            "locating the shell around N/m = {} needs λ_{} but only {} eigenvalues are known",
            n as f64 / m as f64,
            k + 1,
            ev.len()
        ))
    };
    let mut a = n / m;
    loop {
        match gap_after(ev, a) {
            Some(true) => break,
            Some(false) => a -= 1,
            None => return Err(short(a)),
        }
    }
    let mut a_tilde = n.div_ceil(m);
    loop {
        match gap_after(ev, a_tilde) {
            Some(true) => break,
            Some(false) => a_tilde += 1,
            None => return Err(short(a_tilde)),
        }
    }
    Ok((a, n - a * m, a_tilde, a_tilde * m - n))
}

impl SpinSystem {
    /// Orbitals that must be available in a basis.
    pub fn orbitals_needed(&self) -> usize {
        if self.b == 0 {
            self.a
        } else {
            self.a_tilde
        }
    }

    pub fn shell_orbitals(&self) -> usize {
        self.a_tilde - self.a
    }

    /// Default occupation as (orbital, spin) pairs, orbitals 1-based and
    /// spins 0-based, in filling order. Seeded fillings have no such list.
    pub fn occupation(&self) -> Vec<(usize, usize)> {
        let mut occ: Vec<_> = (1..=self.a).flat_map(|al| (0..self.m).map(move |s| (al, s))).collect();
        occ.extend((0..self.b).map(|i| (self.a + 1 + i / self.m, i % self.m)));
        occ
    }

    fn check_basis(&self, basis: &EigenBasis) -> Result<()> {
        check_n(basis, self.orbitals_needed().max(1)).map_err(|_| Error::NTooLarge {
            n: self.n,
            available: self.m * basis.len(),
        })
    }

    /// N Q^S_N(s1, s2) from the orbital values at x′ and x″.
    fn kernel(&self, up: &[f64], um: &[f64], out: &mut [f64]) {
        let m = self.m;
        let closed: f64 = up[..self.a].iter().zip(&um[..self.a]).map(|(p, q)| p * q).sum();
        out.fill(0.0);
        for s in 0..m {
            out[s * m + s] = closed;
        }
        let d = self.shell_orbitals();
        if self.b == 0 {
            return;
        }
        let proj = &self.shell_projector;
        for i in 0..d {
            for j in 0..d {
                let uv = up[self.a + i] * um[self.a + j];
                if uv == 0.0 {
                    continue;
                }
                for s1 in 0..m {
                    for s2 in 0..m {
                        out[s1 * m + s2] += uv * proj[(i * m + s1, j * m + s2)];
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinKind {
    QSpin,
    PSpin,
    RhoSpin,
}

/// Spin-resolved field. Q^S stores m² blocks per (x, y) in (s1, s2)
/// row-major order; P^S and ρ^S store a single spin-summed block.
#[derive(Clone, Debug)]
pub struct SpinCorrelationField {
    pub kind: SpinKind,
    pub m: usize,
    pub n_particles: usize,
    pub x: XSamples,
    pub y: YSamples,
    pub values: Vec<Complex64>,
}

impl SpinCorrelationField {
    pub fn blocks(&self) -> usize {
        match self.kind {
            SpinKind::QSpin => self.m * self.m,
            _ => 1,
        }
    }

    pub fn value(&self, ix: usize, iy: usize, s1: usize, s2: usize) -> Complex64 {
        let b = self.blocks();
        let off = if b == 1 { 0 } else { s1 * self.m + s2 };
        self.values[(ix * self.y.len() + iy) * b + off]
    }

    pub fn scalar(&self, ix: usize, iy: usize) -> f64 {
        self.value(ix, iy, 0, 0).re
    }
}

fn spin_field(
    basis: &EigenBasis,
    sys: &SpinSystem,
    x: &XSamples,
    y: &YSamples,
    kind: SpinKind,
) -> Result<SpinCorrelationField> {
    sys.check_basis(basis)?;
    let top = sys.orbitals_needed();
    let h = interparticle_scale(sys.n, basis.dimension());
    let inv = 1.0 / sys.n as f64;
    let m = sys.m;
    let rows: Vec<Vec<Complex64>> = x
        .points
        .par_iter()
        .map(|xp| {
            let mut up = vec![0.0; top];
            let mut um = vec![0.0; top];
            let mut k = vec![0.0; m * m];
            let mut row = Vec::new();
            for yp in &y.points {
                let (a, b) = if kind == SpinKind::RhoSpin { (0.0, 0.0) } else { (0.5 * h, -0.5 * h) };
                basis.eval_modes(&shifted(xp, yp, a), top, &mut up);
                basis.eval_modes(&shifted(xp, yp, b), top, &mut um);
                sys.kernel(&up, &um, &mut k);
                match kind {
                    SpinKind::QSpin => row.extend(k.iter().map(|v| Complex64::new(v * inv, 0.0))),
                    SpinKind::PSpin => {
                        let s: f64 = k.iter().map(|v| v * v).sum();
                        row.push(Complex64::new(-0.5 * s * inv * inv, 0.0));
                    }
                    SpinKind::RhoSpin => {
                        let s: f64 = (0..m).map(|s| k[s * m + s]).sum();
                        row.push(Complex64::new(s * inv, 0.0));
                    }
                }
            }
            row
        })
        .collect();
    Ok(SpinCorrelationField {
        kind,
        m,
        n_particles: sys.n,
        x: x.clone(),
        y: y.clone(),
        values: rows.concat(),
    })
}

/// Q^S_N(x, y, s1, s2) = N^{-1} Σ_i ψ_i(x + hy/2, s1) ψ̄_i(x − hy/2, s2).
pub fn spin_one_body(
    basis: &EigenBasis,
    sys: &SpinSystem,
    x: &XSamples,
    y: &YSamples,
) -> Result<SpinCorrelationField> {
    spin_field(basis, sys, x, y, SpinKind::QSpin)
}

/// P^S_N computed directly from the orbitals, without storing the m² blocks of Q^S_N.
pub fn spin_exchange_hole(
    basis: &EigenBasis,
    sys: &SpinSystem,
    x: &XSamples,
    y: &YSamples,
) -> Result<SpinCorrelationField> {
    spin_field(basis, sys, x, y, SpinKind::PSpin)
}

/// P^S_N = −½ Σ_{s1,s2} |Q^S_N(s1, s2)|².
pub fn spin_pair_correlation(q: &SpinCorrelationField) -> Result<SpinCorrelationField> {
    if q.kind != SpinKind::QSpin {
        return Err(Error::KindMismatch {
            expected: "QSpin".into(),
            got: format!("{:?}", q.kind),
        });
    }
    let b = q.blocks();
    let values = q
        .values
        .chunks(b)
        .map(|c| Complex64::new(-0.5 * c.iter().map(|v| v.norm_sqr()).sum::<f64>(), 0.0))
        .collect();
    Ok(SpinCorrelationField {
        kind: SpinKind::PSpin,
        m: q.m,
        n_particles: q.n_particles,
        x: q.x.clone(),
        y: q.y.clone(),
        values,
    })
}

/// ρ^S_{1,N}(x) = N^{-1} Σ_s Σ_i |ψ_i(x, s)|².
pub fn spin_density(basis: &EigenBasis, sys: &SpinSystem, x: &XSamples) -> Result<SpinCorrelationField> {
    spin_field(basis, sys, x, &YSamples::origin(basis.dimension()), SpinKind::RhoSpin)
}

/// Q^S(y, s1, s2) = δ_{s1 s2} 2^{n/2} Γ(n/2+1) J_{n/2}(p_F|y|) / (m |Ω| (p_F|y|)^{n/2}).
pub fn limit_q_spin(domain: &DomainSpec, m: usize, y: &[Point], s1: usize, s2: usize) -> Vec<f64> {
    if s1 != s2 {
        return vec![0.0; y.len()];
    }
    let pf = weyl::fermi_momentum(domain, m);
    let scale = 1.0 / (m as f64 * domain.volume());
    y.iter()
        .map(|p| scale * ball_profile(domain.dimension(), pf * norm(p)).expect("n is 2 or 3"))
        .collect()
}

/// P^S(y) = −2^{n−1} Γ²(n/2+1) J²_{n/2}(p_F|y|) / (m |Ω|² (p_F|y|)^n).
pub fn limit_p_spin(domain: &DomainSpec, m: usize, y: &[Point]) -> Vec<f64> {
    let pf = weyl::fermi_momentum(domain, m);
    let vol = domain.volume();
    let scale = -1.0 / (2.0 * m as f64 * vol * vol);
    y.iter()
        .map(|p| {
            let q = ball_profile(domain.dimension(), pf * norm(p)).expect("n is 2 or 3");
            scale * q * q
        })
        .collect()
}

/// Three-dimensional closed form −ρ̄²/(2m) (3(sin r − r cos r)/r³)², r = p_F|y|,
/// p_F = (6π²ρ̄/m)^{1/3}.
pub fn limit_p_spin_3d(rho_bar: f64, m: usize, radius: f64) -> f64 {
    let pf = (6.0 * PI * PI * rho_bar / m as f64).cbrt();
    let r = pf * radius;
    let f = if r < 1e-3 {
        1.0 - r * r / 10.0 + r.powi(4) / 280.0
    } else {
        3.0 * (r.sin() - r * r.cos()) / r.powi(3)
    };
    -rho_bar * rho_bar / (2.0 * m as f64) * f * f
}

/// Field holding the limit P^S at every x sample (zero outside Ω).
pub fn limit_p_spin_field(domain: &DomainSpec, m: usize, x: &XSamples, y: &YSamples) -> SpinCorrelationField {
    let p = limit_p_spin(domain, m, &y.points);
    let mut values = Vec::with_capacity(x.len() * y.len());
    for xp in &x.points {
        let inside = domain.contains(xp);
        values.extend(p.iter().map(|v| Complex64::new(if inside { *v } else { 0.0 }, 0.0)));
    }
    SpinCorrelationField {
        kind: SpinKind::PSpin,
        m,
        n_particles: 0,
        x: x.clone(),
        y: y.clone(),
        values,
    }
}

/// Spinless view of an m = 1 field, for reductions.
pub fn as_spinless(field: &SpinCorrelationField) -> CorrelationField {
    let kind = match field.kind {
        SpinKind::QSpin => FieldKind::Q,
        SpinKind::PSpin => FieldKind::P,
        SpinKind::RhoSpin => FieldKind::Rho,
    };
    let b = field.blocks();
    CorrelationField {
        kind,
        n_particles: field.n_particles,
        x: field.x.clone(),
        y: field.y.clone(),
        values: field.values.iter().step_by(b).copied().collect(),
    }
}

/// Lattice L² norm squared of N^{-1} R_N over (x, y), summed over spins:
/// tr(D Ĝ D Ĝ)/N with Ĝ the shell Gram matrix tensored with the spin identity.
pub fn remainder_l2_squared(basis: &EigenBasis, sys: &SpinSystem) -> Result<f64> {
    remainder_form(basis, sys, &sys.shell_projector)
}

/// Lattice L² distance between N^{-1} R_N of two fillings of the same shell.
pub fn remainder_distance(basis: &EigenBasis, a: &SpinSystem, b: &SpinSystem) -> Result<f64> {
    if (a.n, a.m, a.a, a.a_tilde) != (b.n, b.m, b.a, b.a_tilde) {
        return Err(Error::InsufficientSpectrum("fillings describe different shells".into()));
    }
    let diff = &a.shell_projector - &b.shell_projector;
    Ok(remainder_form(basis, a, &diff)?.sqrt())
}

fn remainder_form(basis: &EigenBasis, sys: &SpinSystem, d: &Mat<f64>) -> Result<f64> {
    if sys.b == 0 {
        return Ok(0.0);
    }
    sys.check_basis(basis)?;
    let g = lattice_gram(basis, sys.a_tilde)?;
    let m = sys.m;
    let slots = d.nrows();
    let ghat = Mat::from_fn(slots, slots, |i, j| {
        if i % m == j % m {
            g[(sys.a + i / m, sys.a + j / m)]
        } else {
            0.0
        }
    });
    let t = d * &ghat;
    let tt = &t * &t;
    let trace: f64 = (0..slots).map(|i| tt[(i, i)]).sum();
    Ok(trace / sys.n as f64)
}

/// c_x(m) = 3 (3/(32πm))^{1/3}.
pub fn lda_constant(m: usize) -> f64 {
    3.0 * (3.0 / (32.0 * PI * m as f64)).cbrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExchangeEstimate {
    /// Quadrature value plus the midpoint tail correction.
    pub value: f64,
    pub quadrature: f64,
    /// Bound on |∫_{|y|>R} P/|y||.
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// E_x(A) = ∫_{A×ℝ³} P(x, y)/|y| dx dy on a shell layout: the cell |y| ≤ δ
/// is P(x,0)·2πδ², shells δ..R use the trapezoid rule in r, and the tail
/// beyond R is bounded by an r^{-4} envelope fitted for r ≥ R/10.
pub fn exchange_energy(p: &SpinCorrelationField, a: &CompactSubset) -> Result<ExchangeEstimate> {
    if p.kind != SpinKind::PSpin {
        return Err(Error::KindMismatch {
            expected: "PSpin".into(),
            got: format!("{:?}", p.kind),
        });
    }
    if p.y.dimension != 3 {
        return Err(Error::DimensionUnsupported(p.y.dimension));
    }
    let YLayout::Shells {
        directions,
        direction_weights,
    } = &p.y.layout
    else {
        return Err(Error::LatticeMismatch("exchange energy needs a shell layout in y".into()));
    };
    let nd = directions.len();
    let delta = p.y.spacing;
    let shells = (p.y.len() - 1) / nd;
    let sphere: f64 = direction_weights.iter().sum();

    let mut total = 0.0;
    let mut measure = 0.0;
    let mut profile = vec![0.0; shells];
    for (ix, xp) in p.x.points.iter().enumerate() {
        if !a.contains(xp) {
            continue;
        }
        let wx = p.x.weights[ix];
        measure += wx;
        let mut e = p.scalar(ix, 0) * 2.0 * PI * delta * delta;
        for j in 0..shells {
            let r = (j + 1) as f64 * delta;
            let base = 1 + j * nd;
            let avg: f64 = (0..nd).map(|d| direction_weights[d] * p.scalar(ix, base + d)).sum::<f64>() / sphere;
            profile[j] += wx * avg;
            let trap = if j == 0 || j + 1 == shells { 0.5 } else { 1.0 };
            e += trap * delta * 4.0 * PI * r * avg;
        }
        total += wx * e;
    }
    if measure == 0.0 {
        return Err(Error::LatticeMismatch("no x sample lies in A".into()));
    }
    let cutoff = shells as f64 * delta;
    let envelope = profile
        .iter()
        .enumerate()
        .filter(|(j, _)| (j + 1) as f64 * delta >= cutoff / 10.0)
        .map(|(j, v)| ((j + 1) as f64 * delta).powi(4) * (v / measure).abs())
        .fold(0.0, f64::max);
    let tail = 2.0 * PI * envelope / (cutoff * cutoff) * measure;
    if tail > 0.01 * total.abs() {
        return Err(Error::TailBoundExceeded { tail, value: total });
    }
    Ok(ExchangeEstimate {
        value: total - 0.5 * tail,
        quadrature: total,
        tail_bound: tail,
        cutoff,
    })
}

/// c_x(m) ∫_A ρ^{4/3} by the x-sample quadrature.
pub fn lda_exchange(rho: &SpinCorrelationField, a: &CompactSubset, m: usize) -> Result<f64> {
    if rho.y.dimension != 3 {
        return Err(Error::DimensionUnsupported(rho.y.dimension));
    }
    if rho.kind != SpinKind::RhoSpin {
        return Err(Error::KindMismatch {
            expected: "RhoSpin".into(),
            got: format!("{:?}", rho.kind),
        });
    }
    let mut s = 0.0;
    for (ix, xp) in rho.x.points.iter().enumerate() {
        if a.contains(xp) {
            s += rho.x.weights[ix] * rho.scalar(ix, 0).max(0.0).powf(4.0 / 3.0);
        }
    }
    Ok(lda_constant(m) * s)
}

/// Box–Muller draw from the standard normal distribution.
pub(crate) fn standard_normal(rng: &mut impl rand::Rng) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random::<f64>();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}
