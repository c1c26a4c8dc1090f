//! Spinless correlation fields: the rescaled one-body matrix Q_N, its
//! shifted variant, the one-body density, the exchange hole P_N, their
//! universal Bessel limits and error norms against them.

use std::f64::consts::PI;
use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CompactSubset, DomainSpec, Point};
use crate::quadrature;
use crate::special::{ball_profile, bessel_j, gamma_fn, unit_ball_volume};
use crate::spectral::{axis_table, BoundaryCondition, EigenBasis, Representation};
use crate::weyl;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Q,
    QShifted,
    P,
    Rho,
}

/// Sample points in y-space together with integration weights.
#[derive(Clone, Debug, PartialEq)]
pub enum YLayout {
    /// Cubic lattice of spacing δ restricted to |y| ≤ R; the ordering is
    /// symmetric, so sample `len − 1 − i` is the negative of sample `i`.
    Lattice,
    /// The origin followed by spheres of radii jδ, j = 1..J, each carrying
    /// the same direction set.
    Shells {
        directions: Vec<Point>,
        direction_weights: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct YSamples {
    pub dimension: usize,
    pub radius: f64,
    pub spacing: f64,
    pub layout: YLayout,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl YSamples {
    pub fn lattice(dimension: usize, radius: f64, spacing: f64) -> Self {
        let m = (radius / spacing + 1e-9).floor() as i64;
        let mut points = Vec::new();
        let range = |active: bool| if active { -m..=m } else { 0..=0 };
        for i in range(true) {
            for j in range(true) {
                for k in range(dimension == 3) {
                    let p = [i as f64 * spacing, j as f64 * spacing, k as f64 * spacing];
                    if p.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius * (1.0 + 1e-12) {
                        points.push(p);
                    }
                }
            }
        }
        let w = spacing.powi(dimension as i32);
        Self {
            dimension,
            radius,
            spacing,
            layout: YLayout::Lattice,
            weights: vec![w; points.len()],
            points,
        }
    }

    /// The single point y = 0, used by density fields.
    pub fn origin(dimension: usize) -> Self {
        Self {
            dimension,
            radius: 0.0,
            spacing: 0.0,
            layout: YLayout::Lattice,
            points: vec![[0.0; 3]],
            weights: vec![1.0],
        }
    }

    /// Arbitrary points with unit weights, for pointwise evaluation only.
    pub fn from_points(dimension: usize, points: Vec<Point>) -> Self {
        let radius = points.iter().map(norm).fold(0.0, f64::max);
        let weights = vec![1.0; points.len()];
        Self {
            dimension,
            radius,
            spacing: 0.0,
            layout: YLayout::Lattice,
            points,
            weights,
        }
    }

    /// Spherical shells with a product Gauss direction rule: `polar`
    /// Gauss–Legendre nodes in cos θ times `azimuth` equispaced angles (3D),
    /// or `azimuth` equispaced angles on the circle (2D).
    pub fn shells(dimension: usize, radius: f64, spacing: f64, polar: usize, azimuth: usize) -> Self {
        let mut directions = Vec::new();
        let mut direction_weights = Vec::new();
        let dphi = 2.0 * PI / azimuth as f64;
        if dimension == 2 {
            for a in 0..azimuth {
                let phi = (a as f64 + 0.5) * dphi;
                directions.push([phi.cos(), phi.sin(), 0.0]);
                direction_weights.push(dphi);
            }
        } else {
            let (ct, wt) = quadrature::gauss_legendre(polar);
            for (c, w) in ct.iter().zip(&wt) {
                let s = (1.0 - c * c).sqrt();
                for a in 0..azimuth {
                    let phi = (a as f64 + 0.5) * dphi;
                    directions.push([s * phi.cos(), s * phi.sin(), *c]);
                    direction_weights.push(w * dphi);
                }
            }
        }
        let shells = (radius / spacing + 1e-9).floor() as usize;
        let mut points = vec![[0.0; 3]];
        let ball = unit_ball_volume(dimension) * (0.5 * spacing).powi(dimension as i32);
        let mut weights = vec![ball];
        for j in 1..=shells {
            let r = j as f64 * spacing;
            let trap = if j == shells { 0.5 } else { 1.0 };
            for (d, w) in directions.iter().zip(&direction_weights) {
                points.push([r * d[0], r * d[1], r * d[2]]);
                weights.push(trap * spacing * r.powi(dimension as i32 - 1) * w);
            }
        }
        Self {
            dimension,
            radius: shells as f64 * spacing,
            spacing,
            layout: YLayout::Shells {
                directions,
                direction_weights,
            },
            points,
            weights,
        }
    }

    /// Default lattice: |y| ≤ 12/γ·max(1, γ), spacing 0.1.
    pub fn default_for(domain: &DomainSpec) -> Self {
        let g = weyl::gamma(domain);
        Self::lattice(domain.dimension(), 12.0 / g * g.max(1.0), 0.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.points.iter().map(norm).collect()
    }
}

/// x sample points with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct XSamples {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl XSamples {
    /// Unit weights, for sup-norm work only.
    pub fn from_points(points: Vec<Point>) -> Self {
        let weights = vec![1.0; points.len()];
        Self { points, weights }
    }

    /// Cell-centred lattice over the bounding box of Ω, including points
    /// outside Ω where the fields vanish by zero extension.
    pub fn bounding_box(domain: &DomainSpec, per_axis: usize) -> Self {
        let (lo, hi) = domain.bounding_box();
        let rules: Vec<_> = (0..domain.dimension())
            .map(|a| quadrature::midpoint(lo[a], hi[a], per_axis))
            .collect();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        crate::geometry::for_each_tensor_point(&rules, |p, w| {
            points.push(p);
            weights.push(w);
        });
        Self { points, weights }
    }

    /// Lattice restricted to the compact subset.
    pub fn compact(subset: &CompactSubset, per_axis: usize) -> Self {
        let (points, weights) = subset.lattice_rule(per_axis);
        Self { points, weights }
    }

    /// Default: margin 0.1·diam(Ω) compact, `per_axis` cells.
    pub fn default_for(domain: &DomainSpec, per_axis: usize) -> Result<Self> {
        let subset = crate::geometry::compact_subset(domain, 0.1 * domain.diameter())?;
        Ok(Self::compact(&subset, per_axis))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct CorrelationField {
    pub kind: FieldKind,
    pub n_particles: usize,
    pub x: XSamples,
    pub y: YSamples,
    /// Row-major `[x][y]`.
    pub values: Vec<Complex64>,
}

impl CorrelationField {
    pub fn value(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[ix * self.y.len() + iy]
    }

    pub fn row(&self, ix: usize) -> &[Complex64] {
        &self.values[ix * self.y.len()..(ix + 1) * self.y.len()]
    }

    /// CSV with columns x_1..x_n, y_1..y_n, re, im.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let n = self.y.dimension;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|a| format!("x_{a}")).collect();
        header.extend((1..=n).map(|a| format!("y_{a}")));
        header.extend(["re".to_string(), "im".to_string()]);
        w.write_record(&header)?;
        for (ix, x) in self.x.points.iter().enumerate() {
            for (iy, y) in self.y.points.iter().enumerate() {
                let v = self.value(ix, iy);
                let mut rec: Vec<String> = x[..n].iter().map(f64::to_string).collect();
                rec.extend(y[..n].iter().map(f64::to_string));
                rec.push(v.re.to_string());
                rec.push(v.im.to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

pub(crate) fn check_n(basis: &EigenBasis, n: usize) -> Result<()> {
    if n == 0 || n > basis.len() {
        return Err(Error::NTooLarge {
            n,
            available: basis.len(),
        });
    }
    Ok(())
}

/// h = N^{-1/n}.
pub fn interparticle_scale(n_particles: usize, dimension: usize) -> f64 {
    (n_particles as f64).powf(-1.0 / dimension as f64)
}

pub(crate) fn shifted(x: &Point, y: &Point, s: f64) -> Point {
    [x[0] + s * y[0], x[1] + s * y[1], x[2] + s * y[2]]
}

/// Evaluates N^{-1} Σ_{k≤N} u_k(x + a h y) u_k(x + b h y) over all samples.
fn bilinear_field(
    basis: &EigenBasis,
    n: usize,
    x: &XSamples,
    y: &YSamples,
    a: f64,
    b: f64,
    kind: FieldKind,
) -> Result<CorrelationField> {
    check_n(basis, n)?;
    let h = interparticle_scale(n, basis.dimension());
    let inv = 1.0 / n as f64;
    let rows: Vec<Vec<Complex64>> = x
        .points
        .par_iter()
        .map(|xp| {
            let mut up = vec![0.0; n];
            let mut um = vec![0.0; n];
            y.points
                .iter()
                .map(|yp| {
                    basis.eval_modes(&shifted(xp, yp, a * h), n, &mut up);
                    basis.eval_modes(&shifted(xp, yp, b * h), n, &mut um);
                    let s: f64 = up.iter().zip(&um).map(|(p, q)| p * q).sum();
                    Complex64::new(s * inv, 0.0)
                })
                .collect()
        })
        .collect();
    Ok(CorrelationField {
        kind,
        n_particles: n,
        x: x.clone(),
        y: y.clone(),
        values: rows.concat(),
    })
}

/// Q_N(x, y) = N^{-1} Σ_{k≤N} u_k(x + hy/2) ū_k(x − hy/2), h = N^{-1/n}.
pub fn one_body_matrix(basis: &EigenBasis, n: usize, x: &XSamples, y: &YSamples) -> Result<CorrelationField> {
    bilinear_field(basis, n, x, y, 0.5, -0.5, FieldKind::Q)
}

/// Q̃_N(x, y) = N^{-1} Σ_{k≤N} u_k(x + hy) ū_k(x).
pub fn one_body_matrix_shifted(
    basis: &EigenBasis,
    n: usize,
    x: &XSamples,
    y: &YSamples,
) -> Result<CorrelationField> {
    bilinear_field(basis, n, x, y, 1.0, 0.0, FieldKind::QShifted)
}

/// ρ_{1,N}(x) = N^{-1} Σ_{k≤N} |u_k(x)|², stored with y = 0.
pub fn one_body_density(basis: &EigenBasis, n: usize, x: &XSamples) -> Result<CorrelationField> {
    bilinear_field(basis, n, x, &YSamples::origin(basis.dimension()), 0.0, 0.0, FieldKind::Rho)
}

/// P_N = −½ |Q_N|².
pub fn pair_correlation(q: &CorrelationField) -> Result<CorrelationField> {
    if q.kind != FieldKind::Q {
        return Err(Error::KindMismatch {
            expected: "Q".into(),
            got: format!("{:?}", q.kind),
        });
    }
    Ok(CorrelationField {
        kind: FieldKind::P,
        n_particles: q.n_particles,
        x: q.x.clone(),
        y: q.y.clone(),
        values: q.values.iter().map(|v| Complex64::new(-0.5 * v.norm_sqr(), 0.0)).collect(),
    })
}

/// Q(y) = 2^{n/2} Γ(n/2+1) J_{n/2}(γ|y|) / (|Ω| (γ|y|)^{n/2}).
pub fn limit_q(domain: &DomainSpec, y: &[Point]) -> Vec<f64> {
    let g = weyl::gamma(domain);
    let n = domain.dimension();
    let vol = domain.volume();
    y.iter()
        .map(|p| ball_profile(n, g * norm(p)).expect("n is 2 or 3") / vol)
        .collect()
}

/// P(y) = −½ Q(y)².
pub fn limit_p(domain: &DomainSpec, y: &[Point]) -> Vec<f64> {
    limit_q(domain, y).into_iter().map(|q| -0.5 * q * q).collect()
}

/// ∫_{|y|>R} Q(y)² dy of the limit profile, used as the truncation budget of
/// the Q̃ identity. Uses ∫₀^∞ J_ν(r)²/r dr = 1/(2ν).
pub fn limit_q_tail_l2(domain: &DomainSpec, radius: f64) -> f64 {
    let n = domain.dimension();
    let nu = n as f64 / 2.0;
    let g = weyl::gamma(domain);
    let vol = domain.volume();
    let rho = g * radius;
    let panels = rho.ceil().max(1.0) as usize;
    let head = if rho > 0.0 {
        quadrature::composite(0.0, rho, panels, 20).integrate(|r| {
            let j = bessel_j(nu, r).expect("order in catalogue");
            j * j / r
        })
    } else {
        0.0
    };
    let gam = gamma_fn(nu + 1.0).expect("order in catalogue");
    let sphere = n as f64 * unit_ball_volume(n);
    let scale = 2f64.powi(n as i32) * gam * gam * sphere / (vol * vol * g.powi(n as i32));
    scale * (1.0 / (2.0 * nu) - head)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub sup_on_compact: f64,
    pub l1_global: f64,
    pub l2_global: f64,
}

/// Norms of field − oracle, where the oracle is `oracle_y[j]` at x ∈ Ω and
/// zero outside. The sup runs over x ∈ subset; L¹ and L² use the sample weights.
pub fn error_norms(field: &CorrelationField, oracle_y: &[f64], subset: &CompactSubset) -> Result<ErrorNorms> {
    if oracle_y.len() != field.y.len() {
        return Err(Error::LatticeMismatch(format!(
            "oracle has {} values, field has {} y samples",
            oracle_y.len(),
            field.y.len()
        )));
    }
    let domain = subset.parent();
    let mut sup = 0.0f64;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut any = false;
    for (ix, x) in field.x.points.iter().enumerate() {
        let inside = domain.contains(x);
        let in_subset = subset.contains(x);
        any |= in_subset;
        for (iy, wy) in field.y.weights.iter().enumerate() {
            let target = if inside { oracle_y[iy] } else { 0.0 };
            let e = (field.value(ix, iy) - target).norm();
            if in_subset {
                sup = sup.max(e);
            }
            let w = field.x.weights[ix] * wy;
            l1 += w * e;
            l2 += w * e * e;
        }
    }
    if !any {
        return Err(Error::LatticeMismatch("no x sample lies in the compact subset".into()));
    }
    Ok(ErrorNorms {
        sup_on_compact: sup,
        l1_global: l1,
        l2_global: l2.sqrt(),
    })
}

/// Discrete lattice on which the first modes of an analytic box basis are
/// exactly orthonormal, per axis: (nodes, weight per node).
pub(crate) fn exact_axis_lattice(bc: BoundaryCondition, length: f64, jmax: usize) -> (Vec<f64>, Vec<f64>) {
    let m = jmax + 1;
    match bc {
        BoundaryCondition::Dirichlet => {
            let w = length / (m + 1) as f64;
            ((1..=m).map(|i| i as f64 * w).collect(), vec![w; m])
        }
        BoundaryCondition::Neumann => {
            let w = length / m as f64;
            let nodes = (0..=m).map(|i| i as f64 * w).collect();
            let mut weights = vec![w; m + 1];
            weights[0] *= 0.5;
            weights[m] *= 0.5;
            (nodes, weights)
        }
    }
}

/// Per-axis Gram matrices g_a[j][k] = Σ_i w_i φ_j(t_i) φ_k(t_i), j, k ≤ jmax_a.
pub(crate) fn axis_grams(basis: &EigenBasis, count: usize) -> Vec<Vec<Vec<f64>>> {
    let Representation::Analytic(am) = basis.representation() else {
        unreachable!("analytic basis required")
    };
    let jmax = crate::spectral::AnalyticModes {
        lengths: am.lengths.clone(),
        modes: am.modes[..count].to_vec(),
    }
    .max_index();
    let mut table = Vec::new();
    (0..am.lengths.len())
        .map(|a| {
            let (nodes, weights) = exact_axis_lattice(basis.bc(), am.lengths[a], jmax[a]);
            let mut g = vec![vec![0.0; jmax[a] + 1]; jmax[a] + 1];
            for (t, w) in nodes.iter().zip(&weights) {
                axis_table(basis.bc(), am.lengths[a], *t, jmax[a], &mut table);
                for j in 0..=jmax[a] {
                    for k in 0..=jmax[a] {
                        g[j][k] += w * table[j] * table[k];
                    }
                }
            }
            g
        })
        .collect()
}

/// Lattice Gram matrix G_{kl} = Σ_nodes w u_k u_l of the first `count` modes:
/// the exact orthogonality lattice for analytic bases, the grid itself otherwise.
pub fn lattice_gram(basis: &EigenBasis, count: usize) -> Result<Mat<f64>> {
    check_n(basis, count)?;
    match basis.representation() {
        Representation::Analytic(am) => {
            let grams = axis_grams(basis, count);
            let modes = &am.modes[..count];
            Ok(Mat::from_fn(count, count, |k, l| {
                grams
                    .iter()
                    .enumerate()
                    .map(|(a, g)| g[modes[k][a] as usize][modes[l][a] as usize])
                    .product()
            }))
        }
        Representation::Grid(gv) => {
            let s = gv.grid.cell_measure().sqrt();
            let u = Mat::from_fn(gv.grid.len(), count, |i, k| gv.values[i * gv.count + k] * s);
            Ok(u.transpose() * &u)
        }
    }
}

/// ‖Q_N‖²_{L²(ℝⁿ×ℝⁿ)} on the (w, z) = (x + hy/2, x − hy/2) lattice:
/// Σ_{w,z} |Q_N|² N ω_w ω_z = N^{-1} ‖G‖²_F, equal to 1 for orthonormal modes.
pub fn l2_norm_squared(basis: &EigenBasis, n: usize) -> Result<f64> {
    let g = lattice_gram(basis, n)?;
    Ok(g.squared_norm_l2() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compact_subset;
    use crate::spectral::analytic_basis_box;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn square(k: usize) -> EigenBasis {
        analytic_basis_box(&[1.0, 1.0], BoundaryCondition::Dirichlet, k).unwrap()
    }

    #[test]
    fn lattice_is_symmetric() {
        for n in [2, 3] {
            let y = YSamples::lattice(n, 1.0, 0.25);
            let len = y.len();
            for i in 0..len {
                let (a, b) = (y.points[i], y.points[len - 1 - i]);
                assert_eq!([a[0] + b[0], a[1] + b[1], a[2] + b[2]], [0.0; 3]);
            }
        }
        let y = YSamples::lattice(2, 3.0, 0.1);
        let area: f64 = y.weights.iter().sum();
        assert!((area - 9.0 * PI).abs() < 0.05 * 9.0 * PI);
    }

    #[test]
    fn shells_integrate_radial_functions() {
        let y = YSamples::shells(3, 10.0, 0.05, 8, 16);
        let gauss: f64 = y.points.iter().zip(&y.weights).map(|(p, w)| w * (-norm(p).powi(2)).exp()).sum();
        assert!((gauss - PI.powf(1.5)).abs() < 1e-3);
        let y2 = YSamples::shells(2, 10.0, 0.05, 0, 32);
        let g2: f64 = y2.points.iter().zip(&y2.weights).map(|(p, w)| w * (-norm(p).powi(2)).exp()).sum();
        assert!((g2 - PI).abs() < 1e-3);
    }

    #[test]
    fn density_examples() {
        let b = square(40);
        let x = XSamples::from_points(vec![[0.5, 0.5, 0.0]]);
        let rho = one_body_density(&b, 1, &x).unwrap();
        assert!((rho.values[0].re - 4.0).abs() < 1e-13);
        assert!(matches!(one_body_density(&b, 41, &x), Err(Error::NTooLarge { .. })));
        assert!(matches!(one_body_density(&b, 0, &x), Err(Error::NTooLarge { .. })));

        let xs = XSamples::bounding_box(b.domain(), 13);
        let rho = one_body_density(&b, 40, &xs).unwrap();
        assert!(rho.values.iter().all(|v| v.re >= 0.0 && v.im == 0.0));
    }

    #[test]
    fn zero_y_reduces_to_density() {
        let b = square(60);
        let xs = XSamples::bounding_box(b.domain(), 7);
        let y = YSamples::lattice(2, 2.0, 0.5);
        let q = one_body_matrix(&b, 60, &xs, &y).unwrap();
        let qs = one_body_matrix_shifted(&b, 60, &xs, &y).unwrap();
        let rho = one_body_density(&b, 60, &xs).unwrap();
        let zero = y.len() / 2;
        assert_eq!(y.points[zero], [0.0; 3]);
        for ix in 0..xs.len() {
            assert!((q.value(ix, zero) - rho.values[ix]).norm() <= 1e-14);
            assert!((qs.value(ix, zero) - rho.values[ix]).norm() <= 1e-14);
        }
        let p = pair_correlation(&q).unwrap();
        for ix in 0..xs.len() {
            let r = rho.values[ix].re;
            assert!((p.value(ix, zero).re + 0.5 * r * r).abs() <= 1e-14);
        }
        assert!(p.values.iter().all(|v| v.re <= 0.0));
        assert!(matches!(pair_correlation(&p), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn hermitian_in_y() {
        let b = square(80);
        let xs = XSamples::from_points(vec![[0.3, 0.6, 0.0], [0.5, 0.5, 0.0]]);
        let y = YSamples::lattice(2, 3.0, 0.3);
        let q = one_body_matrix(&b, 80, &xs, &y).unwrap();
        let len = y.len();
        for ix in 0..xs.len() {
            for iy in 0..len {
                let d = q.value(ix, iy) - q.value(ix, len - 1 - iy).conj();
                assert!(d.norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn shifted_matches_coordinate_shift() {
        let b = square(50);
        let h = interparticle_scale(50, 2);
        let x0 = [0.4, 0.55, 0.0];
        let y = YSamples::lattice(2, 1.5, 0.5);
        let xs = XSamples::from_points(vec![x0]);
        let qs = one_body_matrix_shifted(&b, 50, &xs, &y).unwrap();
        for (iy, yp) in y.points.iter().enumerate() {
            let moved = XSamples::from_points(vec![shifted(&x0, yp, 0.5 * h)]);
            let single = YSamples {
                points: vec![*yp],
                weights: vec![1.0],
                ..YSamples::origin(2)
            };
            let q = one_body_matrix(&b, 50, &moved, &single).unwrap();
            assert!((q.values[0] - qs.value(0, iy)).norm() <= 1e-12);
        }
    }

    #[test]
    fn limit_examples() {
        let sq = DomainSpec::unit_square();
        assert_eq!(limit_q(&sq, &[[0.0; 3]]), vec![1.0]);
        let big = DomainSpec::rectangle(&[2.0, 3.0]).unwrap();
        assert!((limit_q(&big, &[[0.0; 3]])[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((limit_p(&big, &[[0.0; 3]])[0] + 1.0 / 72.0).abs() < 1e-15);

        let cube = DomainSpec::unit_cube();
        let g = weyl::gamma(&cube);
        let q = limit_q(&cube, &[[PI / g, 0.0, 0.0]])[0];
        assert!((q - 3.0 / (PI * PI)).abs() < 1e-13);
        assert!((q - 0.30396).abs() < 1e-5);

        // First zero of sin r − r cos r, by bisection.
        let f = |r: f64| r.sin() - r * r.cos();
        let (mut lo, mut hi) = (4.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lo - 4.4934).abs() < 1e-4);
        let p = limit_p(&cube, &[[lo / g, 0.0, 0.0]])[0];
        assert!(p.abs() < 1e-24);
    }

    #[test]
    fn limit_two_forms_agree() {
        // Radial quadrature oracle for χ̂_{B_γ}(y) / |Ω × B_γ|.
        let sq = DomainSpec::rectangle(&[1.0, 1.5]).unwrap();
        let g = weyl::gamma(&sq);
        let rule = quadrature::composite(0.0, 1.0, 8, 20);
        let theta = quadrature::composite(0.0, 2.0 * PI, 16, 20);
        let mass = sq.volume() * PI * g * g;
        let mut rng = 12345u64;
        for _ in 0..100 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let r = (rng >> 11) as f64 / (1u64 << 53) as f64 * 3.0;
            let y = [r, 0.0, 0.0];
            let hat: f64 = rule.integrate(|s| {
                theta.integrate(|t| (g * s * r * t.cos()).cos()) * s * g * g
            });
            let q = limit_q(&sq, &[y])[0];
            assert!((q - hat / mass).abs() < 1e-12, "{q} vs {}", hat / mass);
            let p = limit_p(&sq, &[y])[0];
            assert!((p + 0.5 * q * q).abs() < 1e-14);
        }
    }

    #[test]
    fn l2_identity_on_analytic_square() {
        for n in [256, 1024, 2048] {
            let b = square(n);
            let v = l2_norm_squared(&b, n).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "{n}: {v}");
        }
        let neu = analytic_basis_box(&[1.0, 0.7], BoundaryCondition::Neumann, 300).unwrap();
        assert!((l2_norm_squared(&neu, 300).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn l2_identity_matches_pair_lattice_sum() {
        // Explicit Σ_{w,z} |Q_N(x, y)|² N ω_w ω_z with x = (w+z)/2, y = (w−z)/h.
        let n = 12;
        let b = square(n);
        let Representation::Analytic(am) = b.representation() else { panic!() };
        let jmax = am.max_index();
        let (t0, w0) = exact_axis_lattice(BoundaryCondition::Dirichlet, 1.0, jmax[0]);
        let (t1, w1) = exact_axis_lattice(BoundaryCondition::Dirichlet, 1.0, jmax[1]);
        let mut pts = Vec::new();
        for (a, wa) in t0.iter().zip(&w0) {
            for (c, wc) in t1.iter().zip(&w1) {
                pts.push(([*a, *c, 0.0], wa * wc));
            }
        }
        let h = interparticle_scale(n, 2);
        let mut total = 0.0;
        for (w, ww) in &pts {
            for (z, wz) in &pts {
                let x = [(w[0] + z[0]) / 2.0, (w[1] + z[1]) / 2.0, 0.0];
                let y = [(w[0] - z[0]) / h, (w[1] - z[1]) / h, 0.0];
                let xs = XSamples::from_points(vec![x]);
                let ys = YSamples {
                    points: vec![y],
                    weights: vec![1.0],
                    ..YSamples::origin(2)
                };
                let q = one_body_matrix(&b, n, &xs, &ys).unwrap().values[0];
                total += q.norm_sqr() * n as f64 * ww * wz;
            }
        }
        assert_abs_diff_eq!(total, l2_norm_squared(&b, n).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn error_norms_basic() {
        let b = square(30);
        let sq = b.domain().clone();
        let y = YSamples::lattice(2, 2.0, 0.5);
        let xs = XSamples::bounding_box(&sq, 6);
        let q = one_body_matrix(&b, 30, &xs, &y).unwrap();
        let inner = compact_subset(&sq, 0.3).unwrap();
        let outer = compact_subset(&sq, 0.1).unwrap();

        let mut exact = q.clone();
        let oracle = limit_q(&sq, &y.points);
        for ix in 0..xs.len() {
            for iy in 0..y.len() {
                exact.values[ix * y.len() + iy] = Complex64::new(oracle[iy], 0.0);
            }
        }
        let zero = error_norms(&exact, &oracle, &outer).unwrap();
        assert_eq!((zero.sup_on_compact, zero.l1_global, zero.l2_global), (0.0, 0.0, 0.0));

        let a = error_norms(&q, &oracle, &inner).unwrap();
        let c = error_norms(&q, &oracle, &outer).unwrap();
        assert!(a.sup_on_compact <= c.sup_on_compact);
        assert!(matches!(error_norms(&q, &oracle[1..], &inner), Err(Error::LatticeMismatch(_))));
    }

    #[test]
    fn tail_budget_matches_direct_integral() {
        let sq = DomainSpec::unit_square();
        let total = limit_q_tail_l2(&sq, 0.0);
        assert!((total - 1.0).abs() < 1e-10, "{total}");
        let g = weyl::gamma(&sq);
        let r = 3.0;
        let direct = 2.0 * PI
            * quadrature::composite(0.0, r, 30, 20)
                .integrate(|s| ball_profile(2, g * s).unwrap().powi(2) * s);
        assert!((limit_q_tail_l2(&sq, r) - (1.0 - direct)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn pair_correlation_nonpositive(x0 in 0.05f64..0.95, x1 in 0.05f64..0.95, k in 1usize..40) {
            let b = square(40);
            let xs = XSamples::from_points(vec![[x0, x1, 0.0]]);
            let y = YSamples::lattice(2, 1.0, 0.5);
            let q = one_body_matrix(&b, k, &xs, &y).unwrap();
            let p = pair_correlation(&q).unwrap();
            for v in &p.values {
                prop_assert!(v.re <= 0.0);
            }
        }

        #[test]
        fn limit_p_is_minus_half_q_squared(r in 0.0f64..30.0, t in 0.0f64..6.3) {
            let cube = DomainSpec::rectangle(&[1.0, 2.0, 0.5]).unwrap();
            let y = [r * t.cos(), r * t.sin(), 0.3];
            let q = limit_q(&cube, &[y])[0];
            let p = limit_p(&cube, &[y])[0];
            prop_assert!((p + 0.5 * q * q).abs() <= 1e-14);
        }
    }
}
