//! Binary eigenbasis cache.
//!
//! Layout (little endian): magic `WQEB`, version u32, 64-byte hex domain
//! hash, bc u8, representation u8, K u64, resolution f64, node count u64,
//! ortho defect f64, then K eigenvalues, then per k either the 3 mode
//! indices (analytic) or the node values of u_k (grid).

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{AnalyticModes, BoundaryCondition, EigenBasis, GridVectors, Representation};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, DomainSpec};

const MAGIC: &[u8; 4] = b"WQEB";
const VERSION: u32 = 1;

fn cache_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Cache {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn write_basis(path: &Path, basis: &EigenBasis) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(basis.domain().hash().as_bytes())?;
        w.write_all(&[basis.bc() as u8])?;
        let k = basis.len();
        let (repr, resolution, nodes) = match basis.representation() {
            Representation::Analytic(_) => (0u8, 0.0, 0u64),
            Representation::Grid(g) => (1u8, g.grid.resolution(), g.grid.len() as u64),
        };
        w.write_all(&[repr])?;
        w.write_all(&(k as u64).to_le_bytes())?;
        w.write_all(&resolution.to_le_bytes())?;
        w.write_all(&nodes.to_le_bytes())?;
        w.write_all(&basis.ortho_defect().to_le_bytes())?;
        for l in basis.eigenvalues() {
            w.write_all(&l.to_le_bytes())?;
        }
        match basis.representation() {
            Representation::Analytic(am) => {
                for m in &am.modes {
                    for v in m {
                        w.write_all(&(*v as f64).to_le_bytes())?;
                    }
                }
            }
            Representation::Grid(g) => {
                for j in 0..k {
                    for node in 0..g.grid.len() {
                        w.write_all(&g.values[node * g.count + j].to_le_bytes())?;
                    }
                }
            }
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    Ok(f64::from_le_bytes(read_exact::<8>(r)?))
}

/// Reads a cached basis for `domain`; fails if the stored domain hash differs.
pub fn read_basis(path: &Path, domain: &DomainSpec) -> Result<EigenBasis> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_exact::<4>(&mut r)? != MAGIC {
        return Err(cache_err(path, "bad magic"));
    }
    let version = u32::from_le_bytes(read_exact::<4>(&mut r)?);
    if version != VERSION {
        return Err(cache_err(path, format!("unsupported version {version}")));
    }
    let hash = read_exact::<64>(&mut r)?;
    if hash != domain.hash().as_bytes() {
        return Err(cache_err(path, "domain hash mismatch"));
    }
    let bc = match read_exact::<1>(&mut r)?[0] {
        0 => BoundaryCondition::Dirichlet,
        1 => BoundaryCondition::Neumann,
        other => return Err(cache_err(path, format!("bad bc tag {other}"))),
    };
    let repr = read_exact::<1>(&mut r)?[0];
    let k = u64::from_le_bytes(read_exact::<8>(&mut r)?) as usize;
    let resolution = read_f64(&mut r)?;
    let nodes = u64::from_le_bytes(read_exact::<8>(&mut r)?) as usize;
    let defect = read_f64(&mut r)?;
    let eigenvalues = (0..k).map(|_| read_f64(&mut r)).collect::<std::io::Result<Vec<_>>>()?;
    let representation = match repr {
        0 => {
            let lengths = domain
                .box_lengths()
                .ok_or_else(|| cache_err(path, "analytic basis needs a box domain"))?
                .to_vec();
            let mut modes = Vec::with_capacity(k);
            for _ in 0..k {
                let mut m = [0u32; 3];
                for v in &mut m {
                    *v = read_f64(&mut r)? as u32;
                }
                modes.push(m);
            }
            Representation::Analytic(AnalyticModes { lengths, modes })
        }
        1 => {
            let grid = Arc::new(build_grid(domain, resolution)?);
            if grid.len() != nodes {
                return Err(cache_err(path, "node count mismatch"));
            }
            let mut values = vec![0.0; nodes * k];
            for j in 0..k {
                for node in 0..nodes {
                    values[node * k + j] = read_f64(&mut r)?;
                }
            }
            Representation::Grid(GridVectors {
                grid,
                count: k,
                values,
            })
        }
        other => return Err(cache_err(path, format!("bad representation tag {other}"))),
    };
    Ok(EigenBasis::new(bc, eigenvalues, representation, domain.clone(), defect))
}

/// Advisory lock held for the lifetime of the value; a second holder fails.
#[derive(Debug)]
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(cache_err(&path, "cache directory is locked by another process"))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
