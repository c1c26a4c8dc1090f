//! Global Weyl-law diagnostics: the Fermi radius γ(Ω), the counting
//! function and the ratio γ k^{1/n} λ_k^{-1/2}.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::special::{gamma_fn, unit_ball_volume};
use crate::spectral::EigenBasis;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylConstants {
    pub gamma: f64,
    pub volume: f64,
    pub dimension: usize,
}

impl WeylConstants {
    pub fn of(domain: &DomainSpec) -> Self {
        Self {
            gamma: gamma(domain),
            volume: domain.volume(),
            dimension: domain.dimension(),
        }
    }

    /// (2π)^{-n} |Ω × B_γ|, equal to one by construction.
    pub fn phase_space_mass(&self) -> f64 {
        let n = self.dimension as i32;
        self.volume * unit_ball_volume(self.dimension) * self.gamma.powi(n) / (2.0 * PI).powi(n)
    }
}

/// γ(Ω) = 2 π^{1/2} Γ(n/2 + 1)^{1/n} / |Ω|^{1/n}.
pub fn gamma(domain: &DomainSpec) -> f64 {
    gamma_for(domain.dimension(), domain.volume())
}

pub(crate) fn gamma_for(n: usize, volume: f64) -> f64 {
    let nf = n as f64;
    let g = gamma_fn(nf / 2.0 + 1.0).expect("n is 2 or 3");
    2.0 * PI.sqrt() * g.powf(1.0 / nf) / volume.powf(1.0 / nf)
}

/// #{k : λ_k ≤ λ}, with eigenvalues within 1e-12 relative of λ counted as
/// equal. Fails when λ lies beyond the computed part of the spectrum.
pub fn counting(basis: &EigenBasis, lambda: f64) -> Result<usize> {
    let ev = basis.eigenvalues();
    let max = ev.last().copied().unwrap_or(f64::NEG_INFINITY);
    if lambda > max {
        return Err(Error::LambdaBeyondComputed { lambda, max });
    }
    let reach = lambda + 1e-12 * lambda.abs();
    Ok(ev.partition_point(|&l| l <= reach))
}

/// γ k^{1/n} λ_k^{-1/2} for 1-based k.
pub fn weyl_ratio(basis: &EigenBasis, k: usize) -> Result<f64> {
    if k == 0 || k > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: basis.len(),
        });
    }
    let n = basis.dimension() as f64;
    let g = gamma(basis.domain());
    Ok(g * (k as f64).powf(1.0 / n) / basis.eigenvalues()[k - 1].sqrt())
}

/// p_F = γ m^{-1/n}.
pub fn fermi_momentum(domain: &DomainSpec, m: usize) -> f64 {
    assert!(m >= 1, "spin multiplicity must be positive");
    gamma(domain) * (m as f64).powf(-1.0 / domain.dimension() as f64)
}

/// Least-squares slope of log N(λ) against log λ over λ ∈ [λ_K/10, λ_K].
pub fn fit_weyl_exponent(basis: &EigenBasis) -> Result<f64> {
    let ev = basis.eigenvalues();
    let top = *ev.last().ok_or(Error::IndexOutOfRange { index: 1, len: 0 })?;
    let mut pts = Vec::new();
    for &l in ev.iter().filter(|&&l| l >= top / 10.0 && l > 0.0) {
        pts.push((l.ln(), (counting(basis, l)? as f64).ln()));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in &pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylRow {
    pub k: usize,
    pub lambda_k: f64,
    pub h_k: f64,
    pub weyl_ratio: f64,
}

pub fn weyl_table(basis: &EigenBasis) -> Vec<WeylRow> {
    (1..=basis.len())
        .map(|k| {
            let lambda_k = basis.eigenvalues()[k - 1];
            WeylRow {
                k,
                lambda_k,
                h_k: lambda_k.powf(-0.5),
                weyl_ratio: weyl_ratio(basis, k).expect("k in range"),
            }
        })
        .collect()
}

/// CSV with columns k, lambda_k, h_k, weyl_ratio.
pub fn write_weyl_csv(basis: &EigenBasis, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in weyl_table(basis) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{analytic_basis_box, BoundaryCondition};
    use proptest::prelude::*;

    fn lattice_count_2d(lambda: f64) -> usize {
        let r = lambda.sqrt() / PI;
        let jmax = r.floor() as i64 + 1;
        let mut c = 0;
        for i in 1..=jmax {
            for j in 1..=jmax {
                if PI * PI * ((i * i + j * j) as f64) <= lambda {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn gamma_values() {
        let sq = DomainSpec::unit_square();
        assert!((gamma(&sq) - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert!((gamma(&sq) - 3.5449077).abs() < 1e-7);
        let cube = DomainSpec::unit_cube();
        let six = (6.0 * PI * PI).powf(1.0 / 3.0);
        assert!((gamma(&cube) - six).abs() < 1e-13);
        assert!((gamma(&cube) - 3.8977771).abs() < 1e-7);
        let big = DomainSpec::rectangle(&[2.0, 2.0]).unwrap();
        assert!((gamma(&big) - 0.5 * gamma(&sq)).abs() < 1e-14);
    }

    #[test]
    fn phase_space_mass_is_one() {
        let domains = [
            DomainSpec::unit_square(),
            DomainSpec::unit_cube(),
            DomainSpec::disk(0.7).unwrap(),
            DomainSpec::l_shape([1.0, 1.0], [0.5, 0.5]).unwrap(),
            DomainSpec::rectangle(&[0.3, 2.0, 1.5]).unwrap(),
            DomainSpec::polygon(&[[0.0, 0.0], [1.0, 0.0], [0.2, 0.8]]).unwrap(),
        ];
        for d in domains {
            let m = WeylConstants::of(&d).phase_space_mass();
            assert!((m - 1.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn counting_examples() {
        let b = analytic_basis_box(&[1.0, 1.0], BoundaryCondition::Dirichlet, 20).unwrap();
        assert_eq!(counting(&b, 2.0 * PI * PI).unwrap(), 1);
        assert_eq!(counting(&b, 5.0 * PI * PI).unwrap(), 3);
        assert_eq!(counting(&b, 1.0).unwrap(), 0);
        assert!(matches!(counting(&b, 1e6), Err(Error::LambdaBeyondComputed { .. })));
        let top = *b.eigenvalues().last().unwrap();
        for i in 0..200 {
            let l = top * i as f64 / 200.0;
            assert_eq!(counting(&b, l).unwrap(), lattice_count_2d(l));
        }
    }

    #[test]
    fn ratio_examples() {
        let b = analytic_basis_box(&[1.0, 1.0], BoundaryCondition::Dirichlet, 4096).unwrap();
        let r1 = weyl_ratio(&b, 1).unwrap();
        assert!((r1 - 2.0 * PI.sqrt() / (2.0 * PI * PI).sqrt()).abs() < 1e-14);
        assert!((r1 - 0.798).abs() < 1e-3);
        assert!((weyl_ratio(&b, 4096).unwrap() - 1.0).abs() <= 0.03);
        assert!(matches!(weyl_ratio(&b, 4097), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(weyl_ratio(&b, 0), Err(Error::IndexOutOfRange { .. })));

        let slope = fit_weyl_exponent(&b).unwrap();
        assert!((slope - 1.0).abs() <= 0.05, "{slope}");

        let c = analytic_basis_box(&[1.0; 3], BoundaryCondition::Dirichlet, 4096).unwrap();
        assert!((weyl_ratio(&c, 4096).unwrap() - 1.0).abs() <= 0.05);
    }

    #[test]
    fn fermi_momentum_examples() {
        let cube = DomainSpec::unit_cube();
        assert!((fermi_momentum(&cube, 1) - 3.89778).abs() < 1e-5);
        let three = (3.0 * PI * PI).powf(1.0 / 3.0);
        assert!((fermi_momentum(&cube, 2) - three).abs() < 1e-13);
        assert!((fermi_momentum(&cube, 2) - 3.09367).abs() < 1e-5);
        let sq = DomainSpec::unit_square();
        assert_eq!(fermi_momentum(&sq, 1), gamma(&sq));
    }

    #[test]
    fn csv_columns() {
        let b = analytic_basis_box(&[1.0, 1.0], BoundaryCondition::Dirichlet, 3).unwrap();
        let mut buf = Vec::new();
        write_weyl_csv(&b, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,lambda_k,h_k,weyl_ratio");
        assert_eq!(lines.count(), 3);
    }

    proptest! {
        #[test]
        fn ratio_scale_invariant(s in 0.2f64..5.0, k in 1usize..60) {
            let a = analytic_basis_box(&[1.0, 1.3], BoundaryCondition::Dirichlet, 60).unwrap();
            let b = analytic_basis_box(&[s, 1.3 * s], BoundaryCondition::Dirichlet, 60).unwrap();
            let (ra, rb) = (weyl_ratio(&a, k).unwrap(), weyl_ratio(&b, k).unwrap());
            prop_assert!((ra - rb).abs() <= 1e-12 * ra);
        }

        #[test]
        fn counting_monotone(l1 in 0.0f64..1500.0, dl in 0.0f64..500.0) {
            let b = analytic_basis_box(&[1.0, 1.0], BoundaryCondition::Neumann, 200).unwrap();
            prop_assert!(counting(&b, l1).unwrap() <= counting(&b, l1 + dl).unwrap());
        }
    }
}
