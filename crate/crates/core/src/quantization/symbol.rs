//! Phase-space symbols a(x, ξ) as finite sums of tensor-product terms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::quadrature::gauss_legendre;

/// Gaussians are treated as zero beyond this many widths from the centre.
const GAUSS_CUTOFF: f64 = 9.2;

/// A one-dimensional profile f(t), used for either the x or the ξ factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// amplitude · exp(−(t − center)² / (2 width²)).
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// amplitude · exp(1 − 1/(1 − s²)) with s = (t − center)/radius, zero for |s| ≥ 1.
    Bump { amplitude: f64, center: f64, radius: f64 },
    Product { factors: Vec<Profile> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        Profile::Gaussian {
            amplitude,
            center,
            width,
        }
    }

    pub fn bump(amplitude: f64, center: f64, radius: f64) -> Self {
        Profile::Bump {
            amplitude,
            center,
            radius,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let s = (t - center) / width;
                amplitude * (-0.5 * s * s).exp()
            }
            Profile::Bump {
                amplitude,
                center,
                radius,
            } => {
                let s = (t - center) / radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            Profile::Product { factors } => factors.iter().map(|f| f.value(t)).product(),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Profile::Constant { value } => Some(*value),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && center.is_finite() && *width > 0.0 && width.is_finite(),
            Profile::Bump {
                amplitude,
                center,
                radius,
            } => amplitude.is_finite() && center.is_finite() && *radius > 0.0 && radius.is_finite(),
            Profile::Product { factors } => {
                for f in factors {
                    f.validate()?;
                }
                true
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSymbol(format!("bad profile {self:?}")))
        }
    }

    /// Interval outside which the profile is zero to double precision.
    pub fn extent(&self) -> (f64, f64) {
        match self {
            Profile::Constant { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Profile::Gaussian { center, width, .. } => {
                (center - GAUSS_CUTOFF * width, center + GAUSS_CUTOFF * width)
            }
            Profile::Bump { center, radius, .. } => (center - radius, center + radius),
            Profile::Product { factors } => factors.iter().fold(
                (f64::NEG_INFINITY, f64::INFINITY),
                |(lo, hi), f| {
                    let (a, b) = f.extent();
                    (lo.max(a), hi.min(b))
                },
            ),
        }
    }

    /// Shortest length over which the profile changes appreciably.
    pub fn scale(&self) -> f64 {
        match self {
            Profile::Constant { .. } => f64::INFINITY,
            Profile::Gaussian { width, .. } => *width,
            Profile::Bump { radius, .. } => 0.25 * radius,
            Profile::Product { factors } => {
                factors.iter().map(Profile::scale).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// max |t| over the region carrying the bulk of the profile.
    fn bandwidth(&self) -> f64 {
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Gaussian { center, width, .. } => center.abs() + 3.0 * width,
            Profile::Bump { center, radius, .. } => center.abs() + radius,
            Profile::Product { .. } => {
                let (lo, hi) = self.extent();
                lo.abs().max(hi.abs())
            }
        }
    }

    fn nonnegative(&self) -> bool {
        match self {
            Profile::Constant { value } => *value >= 0.0,
            Profile::Gaussian { amplitude, .. } | Profile::Bump { amplitude, .. } => *amplitude >= 0.0,
            Profile::Product { factors } => factors.iter().all(Profile::nonnegative),
        }
    }

    fn sup(&self) -> f64 {
        match self {
            Profile::Constant { value } => value.abs(),
            Profile::Gaussian { amplitude, .. } | Profile::Bump { amplitude, .. } => amplitude.abs(),
            Profile::Product { factors } => factors.iter().map(Profile::sup).product(),
        }
    }

    /// Pointwise product, folding constants and merging Gaussians.
    pub fn times(&self, other: &Profile) -> Profile {
        let mut flat = Vec::new();
        for p in [self, other] {
            match p {
                Profile::Product { factors } => flat.extend(factors.iter().cloned()),
                q => flat.push(q.clone()),
            }
        }
        let mut scale = 1.0;
        let mut gauss: Option<(f64, f64, f64)> = None;
        let mut rest = Vec::new();
        for f in flat {
            match f {
                Profile::Constant { value } => scale *= value,
                Profile::Gaussian {
                    amplitude,
                    center,
                    width,
                } => {
                    scale *= amplitude;
                    gauss = Some(match gauss {
                        None => (1.0, center, width),
                        Some((a0, c0, w0)) => {
                            let (p0, p1) = (1.0 / (w0 * w0), 1.0 / (width * width));
                            let var = 1.0 / (p0 + p1);
                            let c = var * (c0 * p0 + center * p1);
                            let d = c0 - center;
                            let a = a0 * (-0.5 * d * d / (w0 * w0 + width * width)).exp();
                            (a, c, var.sqrt())
                        }
                    });
                }
                Profile::Bump {
                    amplitude,
                    center,
                    radius,
                } => {
                    scale *= amplitude;
                    rest.push(Profile::bump(1.0, center, radius));
                }
                Profile::Product { .. } => unreachable!("flattened above"),
            }
        }
        if let Some((a, c, w)) = gauss {
            rest.push(Profile::gaussian(a, c, w));
        }
        match rest.len() {
            0 => Profile::constant(scale),
            _ => {
                match &mut rest[0] {
                    Profile::Gaussian { amplitude, .. } | Profile::Bump { amplitude, .. } => {
                        *amplitude *= scale
                    }
                    _ => unreachable!("only bumps and one Gaussian remain"),
                }
                if rest.len() == 1 {
                    rest.pop().unwrap()
                } else {
                    Profile::Product { factors: rest }
                }
            }
        }
    }

    /// ǎ(z) = (2π)^{-1} ∫ e^{izη} f(η) dη. Constants have no function
    /// transform and return `None`.
    pub fn inverse_transform(&self, z: f64) -> Option<Complex64> {
        match self {
            Profile::Constant { .. } => None,
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let mag = amplitude * width / (2.0 * PI).sqrt() * (-0.5 * width * width * z * z).exp();
                Some(Complex64::from_polar(mag, z * center))
            }
            _ => {
                let (lo, hi) = self.extent();
                let (x, w) = gauss_legendre(16);
                let panels = 16 + ((hi - lo) * z.abs() / PI).ceil() as usize;
                let width = (hi - lo) / panels as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for p in 0..panels {
                    let a = lo + p as f64 * width;
                    for (xi, wi) in x.iter().zip(&w) {
                        let eta = a + 0.5 * width * (xi + 1.0);
                        acc += Complex64::from_polar(0.5 * width * wi * self.value(eta), z * eta);
                    }
                }
                Some(acc / (2.0 * PI))
            }
        }
    }

    /// |z| beyond which the inverse transform is below double precision.
    fn transform_reach(&self) -> Option<f64> {
        match self {
            Profile::Gaussian { width, .. } => Some(9.5 / width),
            _ => None,
        }
    }
}

/// A symbol sampled on a uniform (x, η) lattice for one axis, bilinear
/// between samples and zero outside the η range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledAxis {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub eta0: f64,
    pub deta: f64,
    pub neta: usize,
    /// values[ix * neta + ie]
    pub values: Vec<f64>,
}

impl SampledAxis {
    pub fn from_fn(
        x: (f64, f64, usize),
        eta: (f64, f64, usize),
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let (x0, x1, nx) = x;
        let (e0, e1, neta) = eta;
        if nx < 2 || neta < 2 || !(x1 > x0) || !(e1 > e0) {
            return Err(Error::InvalidSymbol("sampled lattice needs at least 2x2 points".into()));
        }
        let dx = (x1 - x0) / (nx - 1) as f64;
        let deta = (e1 - e0) / (neta - 1) as f64;
        let mut values = Vec::with_capacity(nx * neta);
        for i in 0..nx {
            for j in 0..neta {
                values.push(f(x0 + i as f64 * dx, e0 + j as f64 * deta));
            }
        }
        Ok(Self {
            x0,
            dx,
            nx,
            eta0: e0,
            deta,
            neta,
            values,
        })
    }

    fn x_weights(&self, x: f64) -> (usize, f64) {
        let s = ((x - self.x0) / self.dx).clamp(0.0, (self.nx - 1) as f64);
        let i = (s.floor() as usize).min(self.nx - 2);
        (i, s - i as f64)
    }

    fn column(&self, x: f64, ie: usize) -> f64 {
        let (i, t) = self.x_weights(x);
        (1.0 - t) * self.values[i * self.neta + ie] + t * self.values[(i + 1) * self.neta + ie]
    }

    pub fn value(&self, x: f64, eta: f64) -> f64 {
        let s = (eta - self.eta0) / self.deta;
        if s < 0.0 || s > (self.neta - 1) as f64 {
            return 0.0;
        }
        let j = (s.floor() as usize).min(self.neta - 2);
        let t = s - j as f64;
        (1.0 - t) * self.column(x, j) + t * self.column(x, j + 1)
    }

    /// Riemann sum (2π)^{-1} Σ_m δη e^{izη_m} a(x, η_m); periodic in z.
    pub fn inverse_transform(&self, x: f64, z: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..self.neta {
            let eta = self.eta0 + m as f64 * self.deta;
            acc += Complex64::from_polar(self.column(x, m), z * eta);
        }
        acc * (self.deta / (2.0 * PI))
    }

    /// Period 2π/δη of the discrete transform in z.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.deta
    }
}

/// One axis factor a_i(x_i, ξ_i) of a tensor term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum AxisFactor {
    Separable { x: Profile, xi: Profile },
    Sampled(SampledAxis),
}

impl AxisFactor {
    pub fn separable(x: Profile, xi: Profile) -> Self {
        AxisFactor::Separable { x, xi }
    }

    pub fn one() -> Self {
        Self::separable(Profile::constant(1.0), Profile::constant(1.0))
    }

    pub fn value(&self, x: f64, xi: f64) -> f64 {
        match self {
            AxisFactor::Separable { x: a, xi: b } => a.value(x) * b.value(xi),
            AxisFactor::Sampled(s) => s.value(x, xi),
        }
    }

    /// Multiplication operators (ξ factor constant) quantize to a1(x)·c.
    pub fn multiplier(&self, x: f64) -> Option<f64> {
        match self {
            AxisFactor::Separable { x: a, xi: b } => b.constant_value().map(|c| c * a.value(x)),
            AxisFactor::Sampled(_) => None,
        }
    }

    pub fn is_multiplier(&self) -> bool {
        self.multiplier(0.0).is_some()
    }

    /// ǎ(x, z) = (2π)^{-1} ∫ e^{izη} a(x, η) dη for non-multiplier factors.
    pub fn inverse_transform(&self, x: f64, z: f64) -> Complex64 {
        match self {
            AxisFactor::Separable { x: a, xi: b } => {
                a.value(x) * b.inverse_transform(z).expect("non-multiplier factor")
            }
            AxisFactor::Sampled(s) => s.inverse_transform(x, z),
        }
    }

    pub(crate) fn transform_reach(&self) -> Option<f64> {
        match self {
            AxisFactor::Separable { xi, .. } => xi.transform_reach(),
            AxisFactor::Sampled(_) => None,
        }
    }

    pub(crate) fn x_extent(&self) -> (f64, f64) {
        match self {
            AxisFactor::Separable { x, .. } => x.extent(),
            AxisFactor::Sampled(s) => (s.x0, s.x0 + (s.nx - 1) as f64 * s.dx),
        }
    }

    pub(crate) fn x_scale(&self) -> f64 {
        match self {
            AxisFactor::Separable { x, .. } => x.scale(),
            AxisFactor::Sampled(s) => s.dx,
        }
    }

    /// max |η| over the ξ support; zero for multipliers.
    pub(crate) fn xi_reach(&self) -> f64 {
        match self {
            AxisFactor::Separable { xi, .. } => {
                if xi.constant_value().is_some() {
                    0.0
                } else {
                    let (lo, hi) = xi.extent();
                    lo.abs().max(hi.abs())
                }
            }
            AxisFactor::Sampled(s) => s.eta0.abs().max((s.eta0 + (s.neta - 1) as f64 * s.deta).abs()),
        }
    }

    /// Bulk ξ bandwidth; sets the scale 1/bandwidth on which ǎ(x, ·) varies.
    pub(crate) fn xi_bandwidth(&self) -> f64 {
        match self {
            AxisFactor::Separable { xi, .. } => xi.bandwidth(),
            AxisFactor::Sampled(_) => self.xi_reach(),
        }
    }

    fn nonnegative(&self) -> bool {
        match self {
            AxisFactor::Separable { x, xi } => x.nonnegative() && xi.nonnegative(),
            AxisFactor::Sampled(s) => s.values.iter().all(|&v| v >= 0.0),
        }
    }

    fn sup(&self) -> f64 {
        match self {
            AxisFactor::Separable { x, xi } => x.sup() * xi.sup(),
            AxisFactor::Sampled(s) => s.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn times(&self, other: &AxisFactor) -> AxisFactor {
        match (self, other) {
            (AxisFactor::Separable { x: a, xi: b }, AxisFactor::Separable { x: c, xi: d }) => {
                AxisFactor::Separable {
                    x: a.times(c),
                    xi: b.times(d),
                }
            }
            (AxisFactor::Sampled(s), f) | (f, AxisFactor::Sampled(s)) => {
                let mut out = s.clone();
                for i in 0..s.nx {
                    let x = s.x0 + i as f64 * s.dx;
                    for j in 0..s.neta {
                        out.values[i * s.neta + j] *= f.value(x, s.eta0 + j as f64 * s.deta);
                    }
                }
                AxisFactor::Sampled(out)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<AxisFactor>,
}

/// a(x, ξ) = Σ_t coeff_t Π_i a_{t,i}(x_i, ξ_i).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Symbol {
    dimension: usize,
    terms: Vec<Term>,
    /// Declared sup norms of derivatives of order 0, 1, 2 (metadata only).
    pub certificate: Option<[f64; 3]>,
}

impl Symbol {
    pub fn new(dimension: usize, terms: Vec<Term>) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::DimensionUnsupported(dimension));
        }
        for t in &terms {
            if t.factors.len() != dimension || !t.coeff.is_finite() {
                return Err(Error::InvalidSymbol(format!(
                    "term has {} factors, expected {dimension}",
                    t.factors.len()
                )));
            }
            for f in &t.factors {
                match f {
                    AxisFactor::Separable { x, xi } => {
                        x.validate()?;
                        xi.validate()?;
                    }
                    AxisFactor::Sampled(s) => {
                        if s.values.len() != s.nx * s.neta || s.values.iter().any(|v| !v.is_finite()) {
                            return Err(Error::InvalidSymbol("sampled values malformed".into()));
                        }
                    }
                }
            }
        }
        Ok(Self {
            dimension,
            terms,
            certificate: None,
        })
    }

    pub fn tensor(coeff: f64, factors: Vec<AxisFactor>) -> Result<Self> {
        let n = factors.len();
        Self::new(n, vec![Term { coeff, factors }])
    }

    pub fn constant(dimension: usize, value: f64) -> Self {
        Self::new(
            dimension,
            vec![Term {
                coeff: value,
                factors: vec![AxisFactor::one(); dimension],
            }],
        )
        .expect("valid dimension")
    }

    /// a1(x) ⊗ 1 with the same x profile on every axis.
    pub fn x_only(dimension: usize, x: Profile) -> Result<Self> {
        Self::tensor(1.0, vec![AxisFactor::separable(x, Profile::constant(1.0)); dimension])
    }

    /// 1 ⊗ a2(ξ) with the same ξ profile on every axis.
    pub fn xi_only(dimension: usize, xi: Profile) -> Result<Self> {
        Self::tensor(1.0, vec![AxisFactor::separable(Profile::constant(1.0), xi); dimension])
    }

    /// Named presets: constant, x-bump, gaussian-xi, product.
    pub fn preset(name: &str, domain: &DomainSpec) -> Result<Self> {
        let n = domain.dimension();
        let (lo, hi) = domain.bounding_box();
        let axis = |a: usize| (0.5 * (lo[a] + hi[a]), hi[a] - lo[a]);
        let build = |x: &dyn Fn(f64, f64) -> Profile, xi: Profile| {
            let factors = (0..n)
                .map(|a| {
                    let (c, l) = axis(a);
                    AxisFactor::separable(x(c, l), xi.clone())
                })
                .collect();
            Symbol::tensor(1.0, factors)
        };
        match name {
            "constant" => Ok(Symbol::constant(n, 1.0)),
            "x-bump" => build(&|c, l| Profile::bump(1.0, c, 0.35 * l), Profile::constant(1.0)),
            "gaussian-xi" => build(&|_, _| Profile::constant(1.0), Profile::gaussian(1.0, 0.0, 2.0)),
            "product" => build(&|c, l| Profile::gaussian(1.0, c, 0.15 * l), Profile::gaussian(1.0, 0.0, 2.0)),
            other => Err(Error::InvalidSymbol(format!("unknown preset {other:?}"))),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.factors
                        .iter()
                        .enumerate()
                        .map(|(a, f)| f.value(x[a], xi[a]))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn plus(&self, other: &Symbol) -> Result<Symbol> {
        self.same_dimension(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Symbol::new(self.dimension, terms)
    }

    pub fn scaled(&self, s: f64) -> Symbol {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    /// Pointwise product ab.
    pub fn times(&self, other: &Symbol) -> Result<Symbol> {
        self.same_dimension(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for s in &self.terms {
            for t in &other.terms {
                terms.push(Term {
                    coeff: s.coeff * t.coeff,
                    factors: s.factors.iter().zip(&t.factors).map(|(a, b)| a.times(b)).collect(),
                });
            }
        }
        Symbol::new(self.dimension, terms)
    }

    /// Sufficient check: every term is a nonnegative product.
    pub fn is_nonnegative(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.coeff >= 0.0 && t.factors.iter().all(AxisFactor::nonnegative))
    }

    /// Upper bound Σ |coeff| Π sup|a_i|.
    pub fn sup_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.abs() * t.factors.iter().map(AxisFactor::sup).product::<f64>())
            .sum()
    }

    fn same_dimension(&self, other: &Symbol) -> Result<()> {
        if self.dimension != other.dimension {
            return Err(Error::InvalidSymbol(format!(
                "dimension {} vs {}",
                self.dimension, other.dimension
            )));
        }
        Ok(())
    }
}
