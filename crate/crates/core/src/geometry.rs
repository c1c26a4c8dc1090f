//! Domains Ω ⊂ ℝⁿ (n = 2, 3), uniform Cartesian grids over them and eroded
//! compact subsets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature;

/// Points are stored with three coordinates; the unused one is zero in 2D.
pub type Point = [f64; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    /// Axis-aligned box [0, L_1] × … × [0, L_n].
    Rectangle { lengths: Vec<f64> },
    /// Disk of the given radius centred at the origin.
    Disk { radius: f64 },
    /// [0, outer_x] × [0, outer_y] with the top-right notch removed.
    LShape { outer: [f64; 2], notch: [f64; 2] },
    Polygon { vertices: Vec<[f64; 2]> },
    /// PGM bitmap stretched over [0, extent_x] × [0, extent_y].
    Mask { path: PathBuf, extent: [f64; 2] },
}

/// Decoded mask: row 0 of `pixels` is the top row of the image.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskData {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<bool>,
}

impl MaskData {
    fn inside(&self, col: usize, row: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    fn components(&self) -> usize {
        let mut label = vec![usize::MAX; self.pixels.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.pixels.len() {
            if !self.pixels[start] || label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (r, c) = (idx / self.width, idx % self.width);
                let mut visit = |rr: usize, cc: usize| {
                    let j = rr * self.width + cc;
                    if self.pixels[j] && label[j] == usize::MAX {
                        label[j] = count;
                        stack.push(j);
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < self.height {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < self.width {
                    visit(r, c + 1);
                }
            }
            count += 1;
        }
        count
    }
}

#[derive(Clone, Debug)]
pub struct DomainSpec {
    kind: DomainKind,
    dimension: usize,
    volume: f64,
    mask: Option<Arc<MaskData>>,
}

impl PartialEq for DomainSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.mask == other.mask
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("{what} must be positive, got {v}")))
    }
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: [f64; 2], q: [f64; 2], r: [f64; 2], o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (qx * qx + qy * qy).sqrt()
}

fn rect_distance(p: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
    let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
    (dx * dx + dy * dy).sqrt()
}

impl DomainSpec {
    pub fn rectangle(lengths: &[f64]) -> Result<Self> {
        if lengths.len() != 2 && lengths.len() != 3 {
            return Err(Error::DimensionUnsupported(lengths.len()));
        }
        for &l in lengths {
            positive(l, "side length")?;
        }
        Ok(Self {
            volume: lengths.iter().product(),
            dimension: lengths.len(),
            kind: DomainKind::Rectangle {
                lengths: lengths.to_vec(),
            },
            mask: None,
        })
    }

    pub fn unit_square() -> Self {
        Self::rectangle(&[1.0, 1.0]).expect("valid")
    }

    pub fn unit_cube() -> Self {
        Self::rectangle(&[1.0, 1.0, 1.0]).expect("valid")
    }

    pub fn disk(radius: f64) -> Result<Self> {
        positive(radius, "radius")?;
        Ok(Self {
            kind: DomainKind::Disk { radius },
            dimension: 2,
            volume: PI * radius * radius,
            mask: None,
        })
    }

    pub fn l_shape(outer: [f64; 2], notch: [f64; 2]) -> Result<Self> {
        for v in outer.iter().chain(&notch) {
            positive(*v, "L-shape length")?;
        }
        if notch[0] >= outer[0] || notch[1] >= outer[1] {
            return Err(Error::InvalidDomain("notch must be smaller than the outer box".into()));
        }
        Ok(Self {
            kind: DomainKind::LShape { outer, notch },
            dimension: 2,
            volume: outer[0] * outer[1] - notch[0] * notch[1],
            mask: None,
        })
    }

    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(
                    vertices[i],
                    vertices[(i + 1) % n],
                    vertices[j],
                    vertices[(j + 1) % n],
                ) {
                    return Err(Error::InvalidDomain(format!(
                        "polygon edges {i} and {j} intersect"
                    )));
                }
            }
        }
        let twice: f64 = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        if twice.abs() <= 0.0 {
            return Err(Error::InvalidDomain("polygon has zero area".into()));
        }
        Ok(Self {
            kind: DomainKind::Polygon {
                vertices: vertices.to_vec(),
            },
            dimension: 2,
            volume: 0.5 * twice.abs(),
            mask: None,
        })
    }

    /// Loads a PGM (P2 or P5) bitmap; nonzero pixels are inside.
    pub fn mask_from_pgm(path: &Path, extent: [f64; 2]) -> Result<Self> {
        let img = image::ImageReader::open(path)
            .and_then(|r| r.with_guessed_format())
            .map_err(|e| Error::MaskRead {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?
            .decode()
            .map_err(|e| Error::MaskRead {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?
            .into_luma16();
        let (w, h) = img.dimensions();
        let pixels = img.pixels().map(|p| p.0[0] != 0).collect();
        Self::mask_from_pixels(path.to_path_buf(), w as usize, h as usize, pixels, extent)
    }

    pub fn mask_from_pixels(
        path: PathBuf,
        width: usize,
        height: usize,
        pixels: Vec<bool>,
        extent: [f64; 2],
    ) -> Result<Self> {
        positive(extent[0], "mask extent")?;
        positive(extent[1], "mask extent")?;
        if width * height != pixels.len() || pixels.is_empty() {
            return Err(Error::InvalidDomain("mask pixel count mismatch".into()));
        }
        let data = MaskData {
            width,
            height,
            pixels,
        };
        let count = data.pixels.iter().filter(|&&p| p).count();
        if count == 0 {
            return Err(Error::InvalidDomain("mask has no inside pixels".into()));
        }
        let components = data.components();
        if components != 1 {
            return Err(Error::DisconnectedMask(components));
        }
        let pixel_area = extent[0] / width as f64 * extent[1] / height as f64;
        Ok(Self {
            kind: DomainKind::Mask { path, extent },
            dimension: 2,
            volume: count as f64 * pixel_area,
            mask: Some(Arc::new(data)),
        })
    }

    /// Builds a domain from its serialisable description (mask files are read).
    pub fn from_kind(kind: &DomainKind) -> Result<Self> {
        match kind {
            DomainKind::Rectangle { lengths } => Self::rectangle(lengths),
            DomainKind::Disk { radius } => Self::disk(*radius),
            DomainKind::LShape { outer, notch } => Self::l_shape(*outer, *notch),
            DomainKind::Polygon { vertices } => Self::polygon(vertices),
            DomainKind::Mask { path, extent } => Self::mask_from_pgm(path, *extent),
        }
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Box lengths when the domain is a rectangle.
    pub fn box_lengths(&self) -> Option<&[f64]> {
        match &self.kind {
            DomainKind::Rectangle { lengths } => Some(lengths),
            _ => None,
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        match &self.kind {
            DomainKind::Rectangle { lengths } => hi[..lengths.len()].copy_from_slice(lengths),
            DomainKind::Disk { radius } => {
                lo[..2].copy_from_slice(&[-radius, -radius]);
                hi[..2].copy_from_slice(&[*radius, *radius]);
            }
            DomainKind::LShape { outer, .. } => hi[..2].copy_from_slice(outer),
            DomainKind::Polygon { vertices } => {
                lo[..2].copy_from_slice(&[f64::INFINITY; 2]);
                hi[..2].copy_from_slice(&[f64::NEG_INFINITY; 2]);
                for v in vertices {
                    for a in 0..2 {
                        lo[a] = lo[a].min(v[a]);
                        hi[a] = hi[a].max(v[a]);
                    }
                }
            }
            DomainKind::Mask { extent, .. } => hi[..2].copy_from_slice(extent),
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Disk { radius } => 2.0 * radius,
            _ => {
                let (lo, hi) = self.bounding_box();
                (0..3).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt()
            }
        }
    }

    pub fn center(&self) -> Point {
        let (lo, hi) = self.bounding_box();
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])]
    }

    /// Strict interior membership; boundary points are outside.
    pub fn contains(&self, p: &Point) -> bool {
        match &self.kind {
            DomainKind::Rectangle { lengths } => {
                lengths.iter().enumerate().all(|(a, &l)| p[a] > 0.0 && p[a] < l)
            }
            DomainKind::Disk { radius } => p[0] * p[0] + p[1] * p[1] < radius * radius,
            DomainKind::LShape { outer, notch } => {
                let in_outer = p[0] > 0.0 && p[0] < outer[0] && p[1] > 0.0 && p[1] < outer[1];
                let in_notch = p[0] >= outer[0] - notch[0] && p[1] >= outer[1] - notch[1];
                in_outer && !in_notch
            }
            DomainKind::Polygon { vertices } => {
                let q = [p[0], p[1]];
                let n = vertices.len();
                for i in 0..n {
                    if segment_distance(q, vertices[i], vertices[(i + 1) % n]) == 0.0 {
                        return false;
                    }
                }
                let mut inside = false;
                let mut j = n - 1;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[j]);
                    if (a[1] > q[1]) != (b[1] > q[1]) {
                        let x = a[0] + (q[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if q[0] < x {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
            DomainKind::Mask { extent, .. } => {
                let mask = self.mask.as_ref().expect("mask data present");
                let (dx, dy) = (extent[0] / mask.width as f64, extent[1] / mask.height as f64);
                if !(p[0] > 0.0 && p[0] < extent[0] && p[1] > 0.0 && p[1] < extent[1]) {
                    return false;
                }
                // Every pixel whose closed cell contains p must be inside.
                let cells = |v: f64, d: f64, count: usize| {
                    let s = v / d;
                    let f = s.floor();
                    let hi = (f as usize).min(count - 1);
                    if s == f && f > 0.0 {
                        (hi - 1, hi)
                    } else {
                        (hi, hi)
                    }
                };
                let (c0, c1) = cells(p[0], dx, mask.width);
                let (b0, b1) = cells(p[1], dy, mask.height);
                for c in c0..=c1 {
                    for b in b0..=b1 {
                        if !mask.inside(c, mask.height - 1 - b) {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// Euclidean distance from an interior point to ∂Ω (0 for points outside).
    pub fn distance_to_boundary(&self, p: &Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        match &self.kind {
            DomainKind::Rectangle { lengths } => lengths
                .iter()
                .enumerate()
                .map(|(a, &l)| p[a].min(l - p[a]))
                .fold(f64::INFINITY, f64::min),
            DomainKind::Disk { radius } => radius - (p[0] * p[0] + p[1] * p[1]).sqrt(),
            DomainKind::LShape { outer, notch } => {
                let (ox, oy) = (outer[0], outer[1]);
                let (cx, cy) = (ox - notch[0], oy - notch[1]);
                let poly = [[0.0, 0.0], [ox, 0.0], [ox, cy], [cx, cy], [cx, oy], [0.0, oy]];
                polygon_edge_distance([p[0], p[1]], &poly)
            }
            DomainKind::Polygon { vertices } => polygon_edge_distance([p[0], p[1]], vertices),
            DomainKind::Mask { extent, .. } => {
                let mask = self.mask.as_ref().expect("mask data present");
                let (dx, dy) = (extent[0] / mask.width as f64, extent[1] / mask.height as f64);
                let q = [p[0], p[1]];
                let mut best = q[0].min(extent[0] - q[0]).min(q[1]).min(extent[1] - q[1]);
                for row in 0..mask.height {
                    for col in 0..mask.width {
                        if mask.inside(col, row) {
                            continue;
                        }
                        let b = (mask.height - 1 - row) as f64;
                        let lo = [col as f64 * dx, b * dy];
                        let hi = [lo[0] + dx, lo[1] + dy];
                        best = best.min(rect_distance(q, lo, hi));
                    }
                }
                best
            }
        }
    }

    /// Content hash of the domain description (mask pixels included).
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&self.kind).expect("serialisable"));
        if let Some(mask) = &self.mask {
            hasher.update((mask.width as u64).to_le_bytes());
            hasher.update((mask.height as u64).to_le_bytes());
            hasher.update(mask.pixels.iter().map(|&b| b as u8).collect::<Vec<_>>());
        }
        hex_digest(hasher)
    }

    /// Volume estimated by counting cell centres of a lattice with the given
    /// resolution that fall inside the domain.
    pub fn quadrature_volume(&self, resolution: f64) -> f64 {
        let (lo, hi) = self.bounding_box();
        let n = self.dimension;
        let rules: Vec<_> = (0..n)
            .map(|a| {
                let cells = ((hi[a] - lo[a]) * resolution).ceil().max(1.0) as usize;
                quadrature::midpoint(lo[a], hi[a], cells)
            })
            .collect();
        let mut total = 0.0;
        for_each_tensor_point(&rules, |p, w| {
            if self.contains(&p) {
                total += w;
            }
        });
        total
    }
}

pub(crate) fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn polygon_edge_distance(q: [f64; 2], vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| segment_distance(q, vertices[i], vertices[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Visits every point of a tensor product of 1D rules (2 or 3 axes) with its weight.
pub fn for_each_tensor_point(rules: &[quadrature::Rule], mut f: impl FnMut(Point, f64)) {
    match rules.len() {
        1 => {
            for (x, w) in rules[0].nodes.iter().zip(&rules[0].weights) {
                f([*x, 0.0, 0.0], *w);
            }
        }
        2 => {
            for (x, wx) in rules[0].nodes.iter().zip(&rules[0].weights) {
                for (y, wy) in rules[1].nodes.iter().zip(&rules[1].weights) {
                    f([*x, *y, 0.0], wx * wy);
                }
            }
        }
        3 => {
            for (x, wx) in rules[0].nodes.iter().zip(&rules[0].weights) {
                for (y, wy) in rules[1].nodes.iter().zip(&rules[1].weights) {
                    for (z, wz) in rules[2].nodes.iter().zip(&rules[2].weights) {
                        f([*x, *y, *z], wx * wy * wz);
                    }
                }
            }
        }
        d => panic!("unsupported tensor dimension {d}"),
    }
}

const NO_NODE: u32 = u32::MAX;

/// Uniform Cartesian grid over the bounding box of a domain; unknowns live on
/// the lattice points strictly inside Ω.
#[derive(Clone, Debug)]
pub struct Grid {
    domain: DomainSpec,
    dimension: usize,
    origin: Point,
    spacing: [f64; 3],
    /// Lattice points per axis including both bounding-box endpoints.
    shape: [usize; 3],
    nodes: Vec<[usize; 3]>,
    coords: Vec<Point>,
    lattice_to_node: Vec<u32>,
    resolution: f64,
}

impl Grid {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }
    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }
    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    /// Lattice index (i, j, k) of each interior node, lexicographic.
    pub fn nodes(&self) -> &[[usize; 3]] {
        &self.nodes
    }
    pub fn coordinates(&self) -> &[Point] {
        &self.coords
    }
    pub fn cell_measure(&self) -> f64 {
        self.spacing[..self.dimension].iter().product()
    }

    /// Node number of lattice point (i, j, k), if it is interior.
    pub fn node_at(&self, idx: [usize; 3]) -> Option<usize> {
        if (0..3).any(|a| idx[a] >= self.shape[a]) {
            return None;
        }
        let flat = (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2];
        match self.lattice_to_node[flat] {
            NO_NODE => None,
            n => Some(n as usize),
        }
    }
}

/// Lattice grid with spacing extent/ceil(extent·resolution) per axis.
pub fn build_grid(domain: &DomainSpec, resolution: f64) -> Result<Grid> {
    if !(resolution >= 2.0) || !resolution.is_finite() {
        return Err(Error::InvalidResolution(resolution));
    }
    let n = domain.dimension();
    let (lo, hi) = domain.bounding_box();
    let mut spacing = [1.0; 3];
    let mut shape = [1usize; 3];
    for a in 0..n {
        let extent = hi[a] - lo[a];
        let cells = (extent * resolution - 1e-9).ceil().max(1.0) as usize;
        spacing[a] = extent / cells as f64;
        shape[a] = cells + 1;
    }
    let total = shape[0] * shape[1] * shape[2];
    let mut lattice_to_node = vec![NO_NODE; total];
    let mut nodes = Vec::new();
    let mut coords = Vec::new();
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                let idx = [i, j, k];
                let mut p = [0.0; 3];
                for a in 0..n {
                    p[a] = lo[a] + idx[a] as f64 * spacing[a];
                }
                if domain.contains(&p) {
                    lattice_to_node[(i * shape[1] + j) * shape[2] + k] = nodes.len() as u32;
                    nodes.push(idx);
                    coords.push(p);
                }
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyInterior);
    }
    Ok(Grid {
        domain: domain.clone(),
        dimension: n,
        origin: lo,
        spacing,
        shape,
        nodes,
        coords,
        lattice_to_node,
        resolution,
    })
}

/// Points of Ω at distance ≥ margin from ∂Ω.
#[derive(Clone, Debug)]
pub struct CompactSubset {
    parent: DomainSpec,
    margin: f64,
}

pub fn compact_subset(domain: &DomainSpec, margin: f64) -> Result<CompactSubset> {
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(Error::InvalidMargin(margin));
    }
    let subset = CompactSubset {
        parent: domain.clone(),
        margin,
    };
    let empty = match domain.kind() {
        DomainKind::Rectangle { lengths } => lengths.iter().any(|&l| 2.0 * margin >= l),
        DomainKind::Disk { radius } => margin >= *radius,
        _ => subset.lattice_rule(200).0.is_empty(),
    };
    if empty {
        return Err(Error::EmptyErosion(margin));
    }
    Ok(subset)
}

impl CompactSubset {
    pub fn parent(&self) -> &DomainSpec {
        &self.parent
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.parent.contains(p) && self.parent.distance_to_boundary(p) >= self.margin
    }

    /// Axis-aligned box containing the subset.
    pub fn bounding_box(&self) -> (Point, Point) {
        let (mut lo, mut hi) = self.parent.bounding_box();
        for a in 0..self.parent.dimension() {
            lo[a] += self.margin;
            hi[a] -= self.margin;
        }
        (lo, hi)
    }

    /// True when the subset is itself an axis-aligned box.
    pub fn is_box(&self) -> bool {
        matches!(self.parent.kind(), DomainKind::Rectangle { .. })
    }

    pub fn measure(&self) -> f64 {
        match self.parent.kind() {
            DomainKind::Rectangle { lengths } => {
                lengths.iter().map(|l| l - 2.0 * self.margin).product()
            }
            DomainKind::Disk { radius } => PI * (radius - self.margin).powi(2),
            _ => self.lattice_rule(400).1.iter().sum(),
        }
    }

    /// Cell-centred lattice with `per_axis` cells over the subset's bounding
    /// box, restricted to members.
    pub fn lattice_rule(&self, per_axis: usize) -> (Vec<Point>, Vec<f64>) {
        let (lo, hi) = self.bounding_box();
        let rules: Vec<_> = (0..self.parent.dimension())
            .map(|a| quadrature::midpoint(lo[a], hi[a], per_axis))
            .collect();
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        for_each_tensor_point(&rules, |p, w| {
            if self.contains(&p) {
                pts.push(p);
                wts.push(w);
            }
        });
        (pts, wts)
    }

    /// Quadrature over the subset: tensor Gauss–Legendre (`panels` × `order`
    /// per axis) for boxes, a midpoint lattice otherwise.
    pub fn quadrature(&self, panels: usize, order: usize) -> (Vec<Point>, Vec<f64>) {
        if !self.is_box() {
            return self.lattice_rule(panels * order);
        }
        let (lo, hi) = self.bounding_box();
        let rules: Vec<_> = (0..self.parent.dimension())
            .map(|a| quadrature::composite(lo[a], hi[a], panels, order))
            .collect();
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        for_each_tensor_point(&rules, |p, w| {
            pts.push(p);
            wts.push(w);
        });
        (pts, wts)
    }
}
