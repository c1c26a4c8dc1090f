//! Semiclassical Weyl quantization a^w(x, hD): symbols, kernels, the
//! Cesàro mean over eigenfunctions by two routes, and calculus checks.
//!
//! Fourier convention: ℱv(η) = ∫ e^{−iη·y} v(y) dy, so the kernel of a^w is
//! k(x, y) = h^{-n} ǎ((x+y)/2, (x−y)/h) with ǎ(x, z) = (2π)^{-n} ∫ e^{iz·η} a(x, η) dη.

mod calculus;
mod cesaro;
mod kernel;
mod symbol;

pub use calculus::{
    calculus_lattice, composition_defect, garding_min, probe_vectors, self_adjointness_residue, DefectReport,
    GardingReport,
};
pub use cesaro::{cesaro_average_direct, cesaro_average_wigner, phase_space_integral};
pub use kernel::{build_kernel, quadratic_form, AxisNodes, QuantizedOperator};
pub use symbol::{AxisFactor, Profile, SampledAxis, Symbol, Term};

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One row of a Cesàro convergence table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CesaroRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl CesaroRow {
    pub fn new(n: usize, lhs: f64, rhs: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        Self {
            n,
            lhs,
            rhs,
            abs_err,
            rel_err: abs_err / rhs.abs(),
        }
    }
}

/// CSV with columns N, lhs, rhs, abs_err, rel_err.
pub fn write_cesaro_csv(rows: &[CesaroRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
