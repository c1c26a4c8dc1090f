use std::f64::consts::PI;

use super::{axis_table, AnalyticModes, BoundaryCondition, EigenBasis, Representation};
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::quadrature;
use crate::special::unit_ball_volume;

fn mode_eigenvalue(lengths: &[f64], mode: &[u32; 3]) -> f64 {
    // Sorted summation keeps permuted modes of equal boxes bitwise equal.
    let mut terms = [0.0f64; 3];
    for (a, &l) in lengths.iter().enumerate() {
        let q = mode[a] as f64 / l;
        terms[a] = q * q;
    }
    let t = &mut terms[..lengths.len()];
    t.sort_by(f64::total_cmp);
    PI * PI * t.iter().sum::<f64>()
}

fn enumerate_modes(lengths: &[f64], bc: BoundaryCondition, cutoff: f64) -> Vec<(f64, [u32; 3])> {
    let first = match bc {
        BoundaryCondition::Dirichlet => 1u32,
        BoundaryCondition::Neumann => 0u32,
    };
    let top: Vec<u32> = lengths
        .iter()
        .map(|&l| (l * cutoff.sqrt() / PI).floor() as u32)
        .collect();
    let mut out = Vec::new();
    let mut mode = [0u32; 3];
    let dims = lengths.len();
    let mut push = |mode: [u32; 3]| {
        let lambda = mode_eigenvalue(lengths, &mode);
        if lambda <= cutoff {
            out.push((lambda, mode));
        }
    };
    for i in first..=top[0].max(first) {
        mode[0] = i;
        for j in first..=top[1].max(first) {
            mode[1] = j;
            if dims == 2 {
                push(mode);
            } else {
                for k in first..=top[2].max(first) {
                    mode[2] = k;
                    push(mode);
                }
            }
        }
    }
    out
}

/// The K lowest separable box modes, ordered by (λ, mode index).
pub fn analytic_basis_box(lengths: &[f64], bc: BoundaryCondition, k: usize) -> Result<EigenBasis> {
    let domain = DomainSpec::rectangle(lengths)?;
    if k == 0 {
        return Err(Error::InsufficientSpectrum("K must be at least 1".into()));
    }
    let n = lengths.len();
    let weyl = (k as f64 * (2.0 * PI).powi(n as i32) / (unit_ball_volume(n) * domain.volume()))
        .powf(2.0 / n as f64);
    let floor = mode_eigenvalue(lengths, &[1, 1, 1]);
    let mut cutoff = 1.2 * weyl + 2.0 * floor;
    let mut modes = loop {
        let m = enumerate_modes(lengths, bc, cutoff);
        if m.len() >= k {
            break m;
        }
        cutoff *= 1.3;
    };
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    modes.truncate(k);
    let eigenvalues = modes.iter().map(|m| m.0).collect();
    let am = AnalyticModes {
        lengths: lengths.to_vec(),
        modes: modes.into_iter().map(|m| m.1).collect(),
    };
    let defect = analytic_ortho_defect(&am, bc);
    Ok(EigenBasis::new(bc, eigenvalues, Representation::Analytic(am), domain, defect))
}

/// max |⟨u_j, u_k⟩ − δ_jk| from per-axis Gram matrices computed by Gauss
/// quadrature that is exact for the trigonometric products involved.
fn analytic_ortho_defect(am: &AnalyticModes, bc: BoundaryCondition) -> f64 {
    let jmax = am.max_index();
    let grams: Vec<Vec<Vec<f64>>> = am
        .lengths
        .iter()
        .enumerate()
        .map(|(a, &l)| {
            let rule = quadrature::composite(0.0, l, jmax[a] + 2, 12);
            let mut table = Vec::new();
            let samples: Vec<Vec<f64>> = rule
                .nodes
                .iter()
                .map(|&t| {
                    axis_table(bc, l, t, jmax[a], &mut table);
                    table.clone()
                })
                .collect();
            (0..=jmax[a])
                .map(|i| {
                    (0..=jmax[a])
                        .map(|j| {
                            samples
                                .iter()
                                .zip(&rule.weights)
                                .map(|(s, w)| w * s[i] * s[j])
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut defect = 0.0f64;
    for (p, mp) in am.modes.iter().enumerate() {
        for (q, mq) in am.modes.iter().enumerate() {
            let mut g = 1.0;
            for (a, gram) in grams.iter().enumerate() {
                g *= gram[mp[a] as usize][mq[a] as usize];
            }
            let target = if p == q { 1.0 } else { 0.0 };
            defect = defect.max((g - target).abs());
        }
    }
    defect
}
