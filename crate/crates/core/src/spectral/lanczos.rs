//! Block Lanczos on (A + σ)^{-1} with full reorthogonalisation and thick
//! restart. Only the residual contract of `solve_lowest` is promised.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, MatRef, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SolveOptions;
use super::SpectralOperator;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LanczosReport {
    pub restarts: usize,
    pub max_relative_residual: f64,
}

fn par() -> Par {
    faer::get_global_parallelism()
}

/// Orthonormalises the columns of `w` in place (two Gram–Schmidt passes);
/// returns R with W_in = Q R. Deficient columns are replaced by random
/// directions orthogonal to `basis` and to the earlier columns.
fn block_orthonormalize(w: &mut Mat<f64>, basis: MatRef<'_, f64>, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let (n, b) = (w.nrows(), w.ncols());
    let mut r = Mat::<f64>::zeros(b, b);
    for j in 0..b {
        let original: f64 = w.col(j).norm_l2();
        for _pass in 0..2 {
            for i in 0..j {
                let d = dot(w, i, j);
                r[(i, j)] += d;
                axpy(w, -d, i, j);
            }
        }
        let mut norm = w.col(j).norm_l2();
        if norm <= 1e-10 * original.max(f64::MIN_POSITIVE) || norm == 0.0 {
            for i in 0..n {
                w[(i, j)] = rng.random_range(-1.0..1.0);
            }
            for _pass in 0..2 {
                if basis.ncols() > 0 {
                    let c = basis.transpose() * w.col(j);
                    let mut col = w.col_mut(j);
                    col -= basis * &c;
                }
                for i in 0..j {
                    let d = dot(w, i, j);
                    axpy(w, -d, i, j);
                }
            }
            norm = w.col(j).norm_l2();
            r[(j, j)] = 0.0;
        } else {
            r[(j, j)] = norm;
        }
        let inv = 1.0 / norm;
        for i in 0..n {
            w[(i, j)] *= inv;
        }
    }
    r
}

fn dot(w: &Mat<f64>, a: usize, b: usize) -> f64 {
    let (ca, cb) = (w.col(a), w.col(b));
    let mut s = 0.0;
    for i in 0..w.nrows() {
        s += ca[i] * cb[i];
    }
    s
}

fn axpy(w: &mut Mat<f64>, alpha: f64, src: usize, dst: usize) {
    for i in 0..w.nrows() {
        let v = w[(i, src)];
        w[(i, dst)] += alpha * v;
    }
}

pub(crate) fn block_lanczos(
    op: &SpectralOperator,
    shift: f64,
    k: usize,
    opts: SolveOptions,
) -> Result<(Vec<f64>, Mat<f64>, LanczosReport)> {
    let n = op.size();
    let b = (k / 16).clamp(4, 32).min(n);
    let keep = k + b;
    let extra = (k / 2).max(2 * b);
    let m_max = (keep + extra).div_ceil(b) * b + b;
    assert!(m_max < n, "dense path handles small operators");

    let llt = op
        .shifted_sparse(shift)
        .as_ref()
        .sp_cholesky(Side::Lower)
        .map_err(|_| Error::NoConvergence {
            k: 1,
            iterations: 0,
            residual: f64::NAN,
        })?;
    let norm = op.norm_bound() + shift;
    let lambda_floor = shift.max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v = Mat::<f64>::zeros(n, m_max);
    let mut start = Mat::<f64>::from_fn(n, b, |_, _| rng.random_range(-1.0..1.0));
    block_orthonormalize(&mut start, v.subcols(0, 0), &mut rng);
    v.subcols_mut(0, b).copy_from(&start);
    let mut h = Mat::<f64>::zeros(m_max, m_max);
    let mut cols = b;
    let mut restarts = 0;

    loop {
        let (next_q, next_r) = loop {
            let blk = cols - b;
            let mut w = v.subcols(blk, b).to_owned();
            llt.solve_in_place(w.as_mut());
            let basis = v.subcols(0, cols);
            let mut c = basis.transpose() * &w;
            matmul(w.as_mut(), Accum::Add, basis, c.as_ref(), -1.0, par());
            let c2 = basis.transpose() * &w;
            matmul(w.as_mut(), Accum::Add, basis, c2.as_ref(), -1.0, par());
            c += &c2;
            h.submatrix_mut(0, blk, cols, b).copy_from(&c);
            let r = block_orthonormalize(&mut w, basis, &mut rng);
            if cols + b > m_max {
                break (w, r);
            }
            v.subcols_mut(cols, b).copy_from(&w);
            h.submatrix_mut(cols, blk, b, b).copy_from(&r);
            cols += b;
        };

        let mut hs = Mat::<f64>::zeros(cols, cols);
        for i in 0..cols {
            for j in 0..cols {
                hs[(i, j)] = 0.5 * (h[(i, j)] + h[(j, i)]);
            }
        }
        let eig = hs.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence {
            k: 1,
            iterations: restarts,
            residual: f64::NAN,
        })?;
        let theta: Vec<f64> = (0..cols).map(|i| eig.S()[cols - 1 - i]).collect();
        let s = eig.U();
        // Ritz vectors ordered by decreasing θ, i.e. increasing λ.
        let s_desc = Mat::<f64>::from_fn(cols, cols, |i, j| s[(i, cols - 1 - j)]);
        let coupling = &next_r * s_desc.subrows(cols - b, b);

        let mut worst = None;
        let mut max_rel = 0.0f64;
        for i in 0..k {
            let resid = coupling.col(i).norm_l2();
            let lambda = 1.0 / theta[i] - shift;
            // ‖A y − λ y‖ ≤ ‖A + σ‖ ‖r_B‖ / θ.
            let bound = norm * resid / theta[i];
            let rel = bound / lambda.max(lambda_floor);
            max_rel = max_rel.max(rel);
            if rel > opts.tol && worst.is_none() {
                worst = Some((i, rel));
            }
        }

        if worst.is_none() {
            let y = v.subcols(0, cols) * s_desc.subcols(0, k);
            let values = (0..k).map(|i| 1.0 / theta[i] - shift).collect();
            return Ok((
                values,
                y,
                LanczosReport {
                    restarts,
                    max_relative_residual: max_rel,
                },
            ));
        }
        restarts += 1;
        if restarts > opts.max_restarts {
            let (i, rel) = worst.expect("unconverged pair");
            return Err(Error::NoConvergence {
                k: i + 1,
                iterations: restarts,
                residual: rel,
            });
        }

        let kk = keep.min(cols - b);
        let y = v.subcols(0, cols) * s_desc.subcols(0, kk);
        v.subcols_mut(0, kk).copy_from(&y);
        drop(y);
        v.subcols_mut(kk, b).copy_from(&next_q);
        h.fill(0.0);
        for i in 0..kk {
            h[(i, i)] = theta[i];
        }
        h.submatrix_mut(kk, 0, b, kk).copy_from(coupling.subcols(0, kk));
        cols = kk + b;
    }
}
