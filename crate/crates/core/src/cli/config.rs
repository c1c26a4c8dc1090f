//! Run configuration: a TOML file with flat sections `[domain]`, `[basis]`,
//! `[run]`, `[samples]` and `[check]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{hex_digest, DomainKind, DomainSpec};
use crate::quantization::Symbol;
use crate::spectral::BoundaryCondition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    Analytic,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeSource {
    /// Spin exchange hole of the shell-filled eigenbasis.
    Basis,
    /// Closed-form limit P^S.
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
    #[serde(default = "default_source")]
    pub source: BasisSource,
    /// Grid nodes per unit length; ignored for analytic bases.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    pub k: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_symbol")]
    pub symbol: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub skip_heavy: bool,
    #[serde(default = "default_exchange_source")]
    pub exchange_source: ExchangeSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    #[serde(default = "default_y_radius")]
    pub y_radius: f64,
    #[serde(default = "default_y_spacing")]
    pub y_spacing: f64,
    #[serde(default = "default_x_margin")]
    pub x_margin: f64,
    #[serde(default = "default_x_per_axis")]
    pub x_per_axis: usize,
    #[serde(default = "default_polar")]
    pub shells_polar: usize,
    #[serde(default = "default_azimuth")]
    pub shells_azimuth: usize,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self {
            y_radius: default_y_radius(),
            y_spacing: default_y_spacing(),
            x_margin: default_x_margin(),
            x_per_axis: default_x_per_axis(),
            shells_polar: default_polar(),
            shells_azimuth: default_azimuth(),
        }
    }
}

/// Tolerances applied under `--check`; every one is echoed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    #[serde(default = "default_weyl_2d")]
    pub weyl_ratio_2d: f64,
    #[serde(default = "default_weyl_3d")]
    pub weyl_ratio_3d: f64,
    #[serde(default = "default_five_percent")]
    pub localweyl_rel: f64,
    #[serde(default = "default_path_gap")]
    pub path_gap: f64,
    #[serde(default = "default_five_percent")]
    pub correlation_sup: f64,
    #[serde(default = "default_five_percent")]
    pub rho_mean_dev: f64,
    #[serde(default = "default_exchange_rel")]
    pub exchange_rel: f64,
    #[serde(default = "default_exchange_limit_rel")]
    pub exchange_limit_rel: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            weyl_ratio_2d: default_weyl_2d(),
            weyl_ratio_3d: default_weyl_3d(),
            localweyl_rel: default_five_percent(),
            path_gap: default_path_gap(),
            correlation_sup: default_five_percent(),
            rho_mean_dev: default_five_percent(),
            exchange_rel: default_exchange_rel(),
            exchange_limit_rel: default_exchange_limit_rel(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainKind,
    pub basis: BasisSection,
    pub run: RunSection,
    #[serde(default)]
    pub samples: SampleSection,
    #[serde(default)]
    pub check: CheckSection,
}

fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Dirichlet
}
fn default_source() -> BasisSource {
    BasisSource::Analytic
}
fn default_resolution() -> f64 {
    100.0
}
fn default_tol() -> f64 {
    1e-8
}
fn default_m() -> usize {
    1
}
fn default_symbol() -> String {
    "product".into()
}
fn default_exchange_source() -> ExchangeSource {
    ExchangeSource::Basis
}
fn default_y_radius() -> f64 {
    8.0
}
fn default_y_spacing() -> f64 {
    0.25
}
fn default_x_margin() -> f64 {
    0.15
}
fn default_x_per_axis() -> usize {
    15
}
fn default_polar() -> usize {
    12
}
fn default_azimuth() -> usize {
    24
}
fn default_weyl_2d() -> f64 {
    0.03
}
fn default_weyl_3d() -> f64 {
    0.05
}
fn default_five_percent() -> f64 {
    0.05
}
fn default_path_gap() -> f64 {
    1e-6
}
fn default_exchange_rel() -> f64 {
    0.10
}
fn default_exchange_limit_rel() -> f64 {
    1e-4
}

impl RunConfig {
    /// Parses and validates; relative mask paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let DomainKind::Mask { path, .. } = &mut cfg.domain {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<()> {
        let b = &self.basis;
        if !(b.tol > 0.0) {
            return Err(Error::Config(format!("basis.tol = {} must be positive", b.tol)));
        }
        if self.run.m == 0 {
            return Err(Error::Config("run.m must be at least 1".into()));
        }
        if let Some(&n) = self.run.n.iter().find(|&&n| n == 0 || n > self.run.m * b.k) {
            return Err(Error::NTooLarge {
                n,
                available: self.run.m * b.k,
            });
        }
        if b.source == BasisSource::Analytic && !matches!(self.domain, DomainKind::Rectangle { .. }) {
            return Err(Error::Config("analytic bases exist only for rectangle domains".into()));
        }
        let s = &self.samples;
        if !(s.y_radius > 0.0 && s.y_spacing > 0.0 && s.x_per_axis > 0) {
            return Err(Error::Config("samples need positive y_radius, y_spacing and x_per_axis".into()));
        }
        if !(s.x_margin > 0.0) {
            return Err(Error::InvalidMargin(s.x_margin));
        }
        Ok(())
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        DomainSpec::from_kind(&self.domain)
    }

    /// Checks the symbol preset against the domain.
    pub fn symbol(&self, domain: &DomainSpec) -> Result<Symbol> {
        Symbol::preset(&self.run.symbol, domain)
    }

    /// SHA-256 of the parsed configuration.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(self).expect("serialisable"));
        hex_digest(hasher)
    }

    /// Cache key over (domain, bc, source, resolution, K, tol, seed).
    pub fn basis_key(&self, domain: &DomainSpec) -> String {
        let b = &self.basis;
        let mut hasher = Sha256::new();
        hasher.update(domain.hash().as_bytes());
        hasher.update(serde_json::to_vec(&(b.bc, b.source)).expect("serialisable"));
        if b.source == BasisSource::Grid {
            hasher.update(b.resolution.to_le_bytes());
        }
        hasher.update((b.k as u64).to_le_bytes());
        hasher.update(b.tol.to_le_bytes());
        hasher.update(self.run.seed.to_le_bytes());
        hex_digest(hasher)
    }

    pub fn cache_path(&self, dir: &Path, domain: &DomainSpec) -> PathBuf {
        dir.join(format!("{}.wqeb", self.basis_key(domain)))
    }
}
