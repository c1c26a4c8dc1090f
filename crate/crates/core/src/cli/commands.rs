use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::correlation::{
    error_norms, limit_p, limit_q, limit_q_tail_l2, one_body_density, one_body_matrix, pair_correlation, XSamples,
    YSamples,
};
use crate::error::{Error, Result};
use crate::fermi::{
    exchange_energy, lda_constant, lda_exchange, limit_p_spin_field, shell_fill, spin_density, spin_exchange_hole,
};
use crate::geometry::{build_grid, compact_subset, DomainSpec};
use crate::quantization::{cesaro_average_direct, cesaro_average_wigner, phase_space_integral};
use crate::spectral::cache::{read_basis, write_basis, CacheLock};
use crate::spectral::{analytic_basis_box, assemble_laplacian, solve_lowest, EigenBasis, SolveOptions};
use crate::weyl::{fit_weyl_exponent, weyl_ratio, write_weyl_csv};

use super::config::{BasisSource, ExchangeSource, RunConfig};
use super::manifest::RunManifest;

/// Everything a command needs besides the configuration.
pub struct Context {
    pub config: RunConfig,
    pub domain: DomainSpec,
    pub out: PathBuf,
    pub cache: PathBuf,
}

impl Context {
    fn csv(&self, manifest: &mut RunManifest, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
        manifest.outputs.push(name.into());
        Ok(csv::Writer::from_writer(BufWriter::new(File::create(self.out.join(name))?)))
    }

    fn raw(&self, manifest: &mut RunManifest, name: &str) -> Result<BufWriter<File>> {
        manifest.outputs.push(name.into());
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }
}

fn compute_basis(cfg: &RunConfig, domain: &DomainSpec) -> Result<EigenBasis> {
    let b = &cfg.basis;
    match b.source {
        BasisSource::Analytic => {
            let lengths = domain
                .box_lengths()
                .ok_or_else(|| Error::Config("analytic bases exist only for rectangle domains".into()))?;
            analytic_basis_box(lengths, b.bc, b.k)
        }
        BasisSource::Grid => {
            let grid = Arc::new(build_grid(domain, b.resolution)?);
            let op = assemble_laplacian(grid, b.bc);
            let opts = SolveOptions {
                tol: b.tol,
                seed: cfg.run.seed,
                ..SolveOptions::default()
            };
            solve_lowest(&op, b.k, opts)
        }
    }
}

/// Loads the eigenbasis from the cache or computes and stores it.
pub fn load_basis(ctx: &Context, manifest: &mut RunManifest) -> Result<EigenBasis> {
    if ctx.config.basis.k == 0 {
        return Err(Error::InsufficientSpectrum("K = 0 requested".into()));
    }
    let _lock = CacheLock::acquire(&ctx.cache)?;
    let path = ctx.config.cache_path(&ctx.cache, &ctx.domain);
    let basis = if path.exists() {
        let basis = manifest.stage("basis_read", |_| read_basis(&path, &ctx.domain))?;
        manifest.cached = true;
        manifest.notes.push("cached".into());
        basis
    } else {
        let basis = manifest.stage("basis_solve", |_| compute_basis(&ctx.config, &ctx.domain))?;
        manifest.stage("basis_write", |_| write_basis(&path, &basis))?;
        basis
    };
    manifest.basis_hash = Some(basis.hash());
    manifest.budgets.insert("basis_ortho_defect".into(), basis.ortho_defect());
    Ok(basis)
}

fn n_list(ctx: &Context, basis: &EigenBasis) -> Vec<usize> {
    if ctx.config.run.n.is_empty() {
        vec![basis.len()]
    } else {
        ctx.config.run.n.clone()
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    k: usize,
    lambda: f64,
}

pub fn spectrum(ctx: &Context, manifest: &mut RunManifest) -> Result<()> {
    let basis = load_basis(ctx, manifest)?;
    manifest.stage("write", |m| {
        let mut w = ctx.csv(m, "spectrum.csv")?;
        for (i, &lambda) in basis.eigenvalues().iter().enumerate() {
            w.serialize(SpectrumRow { k: i + 1, lambda })?;
        }
        w.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct WeylSummary {
    k: usize,
    final_ratio: f64,
    fitted_exponent: f64,
    expected_exponent: f64,
}

pub fn weyl(ctx: &Context, manifest: &mut RunManifest) -> Result<()> {
    let basis = load_basis(ctx, manifest)?;
    if basis.is_empty() {
        return Err(Error::InsufficientSpectrum("empty basis".into()));
    }
    let n = basis.dimension();
    let k = basis.len();
    let final_ratio = weyl_ratio(&basis, k)?;
    let fitted_exponent = manifest.stage("fit", |_| fit_weyl_exponent(&basis))?;
    manifest.stage("write", |m| {
        write_weyl_csv(&basis, ctx.raw(m, "weyl.csv")?)?;
        let mut w = ctx.csv(m, "weyl_summary.csv")?;
        w.serialize(WeylSummary {
            k,
            final_ratio,
            fitted_exponent,
            expected_exponent: 2.0 / n as f64,
        })?;
        w.flush()?;
        Ok(())
    })?;
    let tol = if n == 2 {
        ctx.config.check.weyl_ratio_2d
    } else {
        ctx.config.check.weyl_ratio_3d
    };
    manifest.check("weyl_ratio_gap", (final_ratio - 1.0).abs(), tol);
    Ok(())
}

#[derive(Serialize)]
struct LocalWeylRow {
    #[serde(rename = "N")]
    n: usize,
    lhs_direct: f64,
    lhs_wigner: f64,
    rhs: f64,
    abs_err: f64,
    rel_err: f64,
    path_gap: f64,
    flag: &'static str,
}

pub fn localweyl(ctx: &Context, manifest: &mut RunManifest) -> Result<()> {
    let symbol = ctx.config.symbol(&ctx.domain)?;
    let basis = load_basis(ctx, manifest)?;
    let rhs = manifest.stage("phase_space_integral", |_| Ok(phase_space_integral(&symbol, &ctx.domain)))?;
    let mut rows = Vec::new();
    for n in n_list(ctx, &basis) {
        let direct = manifest.stage(&format!("direct_N{n}"), |_| cesaro_average_direct(&basis, &symbol, n))?;
        let wigner = if basis.is_analytic() {
            Some(manifest.stage(&format!("wigner_N{n}"), |_| cesaro_average_wigner(&basis, &symbol, n))?)
        } else {
            None
        };
        let abs_err = (direct - rhs).norm();
        let path_gap = wigner.map_or(f64::NAN, |w| (w - direct).norm());
        let flag = match wigner {
            None => "DIRECT_ONLY",
            Some(_) if path_gap > ctx.config.check.path_gap => "WARN",
            Some(_) => "OK",
        };
        rows.push(LocalWeylRow {
            n,
            lhs_direct: direct.re,
            lhs_wigner: wigner.map_or(f64::NAN, |w| w.re),
            rhs: rhs.re,
            abs_err,
            rel_err: abs_err / rhs.norm(),
            path_gap,
            flag,
        });
    }
    manifest.stage("write", |m| {
        let mut w = ctx.csv(m, "localweyl.csv")?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    let last = rows.last().expect("at least one N");
    let gap = rows.iter().map(|r| r.path_gap).filter(|g| !g.is_nan()).fold(0.0, f64::max);
    manifest.budgets.insert("localweyl_path_gap".into(), gap);
    manifest.check("localweyl_rel_err", last.rel_err, ctx.config.check.localweyl_rel);
    if basis.is_analytic() {
        manifest.check("localweyl_path_gap", gap, ctx.config.check.path_gap);
    }
    Ok(())
}

#[derive(Serialize)]
struct CorrelationRow {
    #[serde(rename = "N")]
    n: usize,
    sup: f64,
    l1: f64,
    l2: f64,
    rho_mean_dev: f64,
    p_sup: f64,
}

pub fn correlation(ctx: &Context, manifest: &mut RunManifest) -> Result<()> {
    let s = &ctx.config.samples;
    let subset = compact_subset(&ctx.domain, s.x_margin)?;
    let basis = load_basis(ctx, manifest)?;
    let dim = ctx.domain.dimension();
    let xs = XSamples::compact(&subset, s.x_per_axis);
    let ys = YSamples::lattice(dim, s.y_radius, s.y_spacing);
    let q_limit = limit_q(&ctx.domain, &ys.points);
    let p_limit = limit_p(&ctx.domain, &ys.points);
    let inv_vol = 1.0 / ctx.domain.volume();
    let ns = n_list(ctx, &basis);
    let mut rows = Vec::new();
    let mut last_field = None;
    for &n in &ns {
        let q = manifest.stage(&format!("q_N{n}"), |_| one_body_matrix(&basis, n, &xs, &ys))?;
        let qn = error_norms(&q, &q_limit, &subset)?;
        let p = pair_correlation(&q)?;
        let pn = error_norms(&p, &p_limit, &subset)?;
        let rho = manifest.stage(&format!("rho_N{n}"), |_| one_body_density(&basis, n, &xs))?;
        let devs: Vec<f64> = xs
            .points
            .iter()
            .enumerate()
            .filter(|(_, x)| subset.contains(x))
            .map(|(i, _)| (rho.value(i, 0).re - inv_vol).abs())
            .collect();
        let rho_mean_dev = devs.iter().sum::<f64>() / devs.len().max(1) as f64;
        rows.push(CorrelationRow {
            n,
            sup: qn.sup_on_compact,
            l1: qn.l1_global,
            l2: qn.l2_global,
            rho_mean_dev,
            p_sup: pn.sup_on_compact,
        });
        last_field = Some(q);
    }
    manifest.stage("write", |m| {
        let mut w = ctx.csv(m, "correlation_summary.csv")?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        if let Some(q) = &last_field {
            q.write_csv(ctx.raw(m, "q_field.csv")?)?;
        }
        Ok(())
    })?;
    manifest
        .budgets
        .insert("q_tail_l2".into(), limit_q_tail_l2(&ctx.domain, s.y_radius));
    let last = rows.last().expect("at least one N");
    manifest.check("correlation_sup", last.sup, ctx.config.check.correlation_sup);
    manifest.check("rho_mean_dev", last.rho_mean_dev, ctx.config.check.rho_mean_dev);
    Ok(())
}

#[derive(Serialize)]
struct ExchangeRow {
    source: &'static str,
    #[serde(rename = "N")]
    n: usize,
    m: usize,
    #[serde(rename = "a_N")]
    a_n: usize,
    #[serde(rename = "b_N")]
    b_n: usize,
    #[serde(rename = "E_x")]
    e_x: f64,
    /// −c_x ∫_A ρ_N^{4/3} with the computed density.
    #[serde(rename = "LDA")]
    lda: f64,
    /// −c_x |Ω|^{-4/3} |A|.
    #[serde(rename = "LDA_limit")]
    lda_limit: f64,
    rel_gap: f64,
    rel_gap_limit: f64,
}

impl ExchangeRow {
    fn new(source: &'static str, n: usize, m: usize, shells: (usize, usize), e_x: f64, lda: f64, lda_limit: f64) -> Self {
        Self {
            source,
            n,
            m,
            a_n: shells.0,
            b_n: shells.1,
            e_x,
            lda,
            lda_limit,
            rel_gap: (e_x / lda - 1.0).abs(),
            rel_gap_limit: (e_x / lda_limit - 1.0).abs(),
        }
    }
}

/// Particle counts at or above this are skipped when `run.skip_heavy` is set.
pub const HEAVY_N: usize = 4096;

pub fn exchange(ctx: &Context, manifest: &mut RunManifest) -> Result<()> {
    let dim = ctx.domain.dimension();
    if dim != 3 {
        return Err(Error::DimensionUnsupported(dim));
    }
    let s = &ctx.config.samples;
    let m = ctx.config.run.m;
    let a = compact_subset(&ctx.domain, s.x_margin)?;
    let xs = XSamples::compact(&a, s.x_per_axis);
    let ys = YSamples::shells(3, s.y_radius, s.y_spacing, s.shells_polar, s.shells_azimuth);
    let lda_limit = -lda_constant(m) * ctx.domain.volume().powf(-4.0 / 3.0) * a.measure();
    let mut rows = Vec::new();
    let mut tail = 0.0f64;
    let tolerance = match ctx.config.run.exchange_source {
        ExchangeSource::Limit => {
            let p = limit_p_spin_field(&ctx.domain, m, &xs, &ys);
            let e = manifest.stage("exchange_limit", |_| exchange_energy(&p, &a))?;
            tail = e.tail_bound;
            rows.push(ExchangeRow::new("limit", 0, m, (0, 0), e.value, lda_limit, lda_limit));
            ctx.config.check.exchange_limit_rel
        }
        ExchangeSource::Basis => {
            let basis = load_basis(ctx, manifest)?;
            for n in n_list(ctx, &basis) {
                if ctx.config.run.skip_heavy && n >= HEAVY_N {
                    manifest.notes.push(format!("skipped N = {n} (skip_heavy)"));
                    continue;
                }
                let sys = shell_fill(basis.eigenvalues(), n, m)?;
                let p = manifest.stage(&format!("exchange_hole_N{n}"), |_| spin_exchange_hole(&basis, &sys, &xs, &ys))?;
                let e = exchange_energy(&p, &a)?;
                let rho = spin_density(&basis, &sys, &xs)?;
                let lda = -lda_exchange(&rho, &a, m)?;
                tail = tail.max(e.tail_bound);
                rows.push(ExchangeRow::new("basis", n, m, (sys.a, sys.b), e.value, lda, lda_limit));
            }
            ctx.config.check.exchange_rel
        }
    };
    manifest.stage("write", |mf| {
        let mut w = ctx.csv(mf, "exchange.csv")?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    manifest.budgets.insert("exchange_tail_bound".into(), tail);
    if let Some(last) = rows.last() {
        manifest.budgets.insert("exchange_rel_gap_own_density".into(), last.rel_gap);
        manifest.check("exchange_rel_gap", last.rel_gap_limit, tolerance);
    }
    Ok(())
}

pub fn default_cache(out: &Path) -> PathBuf {
    out.join("cache")
}
