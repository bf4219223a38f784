//! The `CMPD` dataset file format.
//!
//! Layout (all multi-byte values little-endian, floats as IEEE-754 bits):
//!
//! ```text
//! header:
//!   magic            b"CMPD"
//!   version          u16 (currently 1)
//!   scenario tag     u8
//!   n_envs, n_manifold, n_validity, n_distance   u32 each
//!   n_joints, latent_dim, c_dim, grid_resolution u32 each
//!   cell_size, origin_x, origin_y                f64 each
//!   workspace min_x, min_y, max_x, max_y         f64 each
//! environment blocks (n_envs):
//!   n_obstacles u32; per obstacle cx, cy, r (f64)
//!   occupancy   resolution^2 bytes (0/1)
//!   sdf         resolution^2 f64
//! manifold samples (n_manifold):  q (n_joints f64), c (c_dim f64)
//! validity samples (n_validity):  env_id u32, c, z (latent_dim f64), label u8
//! distance samples (n_distance):  env_id u32, c, z, d_min f64
//! ```
//!
//! Header counts are authoritative; readers consume exactly the declared
//! block lengths. Round trips are bit-exact.

use super::{Dataset, DistanceSample, EnvironmentRecord, ManifoldSample, ValiditySample};
use crate::envfield::{Disc, EnvironmentSpec, OccupancyGrid, SignedDistanceField};
use crate::error::Error;
use crate::geom::{Aabb, Point2};
use crate::robot::Configuration;
use crate::scenario::ScenarioId;
use crate::Result;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"CMPD";
pub const VERSION: u16 = 1;

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64s(w: &mut impl Write, vals: &[f64]) -> std::io::Result<()> {
    for v in vals {
        write_f64(w, *v)?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

/// Structural dimensions shared by every block in a file.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dims {
    n_joints: usize,
    latent_dim: usize,
    c_dim: usize,
    resolution: usize,
}

fn infer_dims(set: &Dataset) -> Result<Dims> {
    let n_joints = set
        .manifold
        .first()
        .map(|m| m.q.len())
        .or_else(|| Some(0))
        .unwrap();
    let c_dim = set
        .manifold
        .first()
        .map(|m| m.c.len())
        .or_else(|| set.validity.first().map(|v| v.c.len()))
        .or_else(|| set.distance.first().map(|d| d.c.len()))
        .unwrap_or(0);
    let latent_dim = set
        .validity
        .first()
        .map(|v| v.z.len())
        .or_else(|| set.distance.first().map(|d| d.z.len()))
        .unwrap_or(0);
    let resolution = set
        .environments
        .first()
        .map(|e| e.grid.resolution)
        .unwrap_or(0);
    for e in &set.environments {
        if e.grid.resolution != resolution || e.sdf.resolution != resolution {
            return Err(Error::Dataset("environments disagree on resolution".into()));
        }
    }
    Ok(Dims {
        n_joints,
        latent_dim,
        c_dim,
        resolution,
    })
}

pub fn write_dataset(path: &Path, set: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let dims = infer_dims(set)?;
    let (cell_size, origin, workspace) = match set.environments.first() {
        Some(e) => (e.grid.cell_size, e.grid.origin, e.spec.workspace),
        None => (
            0.0,
            Point2::new(0.0, 0.0),
            Aabb::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
        ),
    };

    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[set.scenario.tag()])?;
    write_u32(&mut w, set.environments.len() as u32)?;
    write_u32(&mut w, set.manifold.len() as u32)?;
    write_u32(&mut w, set.validity.len() as u32)?;
    write_u32(&mut w, set.distance.len() as u32)?;
    write_u32(&mut w, dims.n_joints as u32)?;
    write_u32(&mut w, dims.latent_dim as u32)?;
    write_u32(&mut w, dims.c_dim as u32)?;
    write_u32(&mut w, dims.resolution as u32)?;
    write_f64(&mut w, cell_size)?;
    write_f64(&mut w, origin.x)?;
    write_f64(&mut w, origin.y)?;
    write_f64(&mut w, workspace.min.x)?;
    write_f64(&mut w, workspace.min.y)?;
    write_f64(&mut w, workspace.max.x)?;
    write_f64(&mut w, workspace.max.y)?;

    for e in &set.environments {
        write_u32(&mut w, e.spec.obstacles.len() as u32)?;
        for o in &e.spec.obstacles {
            write_f64(&mut w, o.center.x)?;
            write_f64(&mut w, o.center.y)?;
            write_f64(&mut w, o.radius)?;
        }
        let bytes: Vec<u8> = e.grid.cells.iter().map(|&c| c as u8).collect();
        w.write_all(&bytes)?;
        write_f64s(&mut w, &e.sdf.values)?;
    }
    for m in &set.manifold {
        write_f64s(&mut w, m.q.as_slice())?;
        write_f64s(&mut w, &m.c)?;
    }
    for v in &set.validity {
        write_u32(&mut w, v.env_id)?;
        write_f64s(&mut w, &v.c)?;
        write_f64s(&mut w, &v.z)?;
        w.write_all(&[v.valid as u8])?;
    }
    for d in &set.distance {
        write_u32(&mut w, d.env_id)?;
        write_f64s(&mut w, &d.c)?;
        write_f64s(&mut w, &d.z)?;
        write_f64(&mut w, d.d_min)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::format("not a CMPD file"));
    }
    let mut vbuf = [0u8; 2];
    r.read_exact(&mut vbuf)?;
    let version = u16::from_le_bytes(vbuf);
    if version != VERSION {
        return Err(Error::format(format!("unsupported CMPD version {version}")));
    }
    let scenario = ScenarioId::from_tag(read_u8(&mut r)?)?;
    let n_envs = read_u32(&mut r)? as usize;
    let n_manifold = read_u32(&mut r)? as usize;
    let n_validity = read_u32(&mut r)? as usize;
    let n_distance = read_u32(&mut r)? as usize;
    let n_joints = read_u32(&mut r)? as usize;
    let latent_dim = read_u32(&mut r)? as usize;
    let c_dim = read_u32(&mut r)? as usize;
    let resolution = read_u32(&mut r)? as usize;
    let cell_size = read_f64(&mut r)?;
    let origin = Point2::new(read_f64(&mut r)?, read_f64(&mut r)?);
    let ws_min = Point2::new(read_f64(&mut r)?, read_f64(&mut r)?);
    let ws_max = Point2::new(read_f64(&mut r)?, read_f64(&mut r)?);
    let workspace = Aabb::new(ws_min, ws_max);

    let mut environments = Vec::with_capacity(n_envs);
    for _ in 0..n_envs {
        let n_obs = read_u32(&mut r)? as usize;
        let mut obstacles = Vec::with_capacity(n_obs);
        for _ in 0..n_obs {
            let cx = read_f64(&mut r)?;
            let cy = read_f64(&mut r)?;
            let radius = read_f64(&mut r)?;
            obstacles.push(Disc::new(Point2::new(cx, cy), radius));
        }
        let mut occ = vec![0u8; resolution * resolution];
        r.read_exact(&mut occ)?;
        let cells: Vec<bool> = occ.iter().map(|&b| b != 0).collect();
        let values = read_f64s(&mut r, resolution * resolution)?;
        environments.push(EnvironmentRecord {
            spec: EnvironmentSpec::new(workspace, obstacles)?,
            grid: OccupancyGrid {
                resolution,
                cell_size,
                origin,
                cells,
            },
            sdf: SignedDistanceField {
                resolution,
                cell_size,
                origin,
                values,
            },
        });
    }
    let mut manifold = Vec::with_capacity(n_manifold);
    for _ in 0..n_manifold {
        let q = Configuration::new(read_f64s(&mut r, n_joints)?);
        let c = read_f64s(&mut r, c_dim)?;
        manifold.push(ManifoldSample { q, c });
    }
    let mut validity = Vec::with_capacity(n_validity);
    for _ in 0..n_validity {
        let env_id = read_u32(&mut r)?;
        let c = read_f64s(&mut r, c_dim)?;
        let z = read_f64s(&mut r, latent_dim)?;
        let valid = read_u8(&mut r)? != 0;
        if env_id as usize >= n_envs {
            return Err(Error::format("validity sample references a missing env"));
        }
        validity.push(ValiditySample {
            env_id,
            c,
            z,
            valid,
        });
    }
    let mut distance = Vec::with_capacity(n_distance);
    for _ in 0..n_distance {
        let env_id = read_u32(&mut r)?;
        let c = read_f64s(&mut r, c_dim)?;
        let z = read_f64s(&mut r, latent_dim)?;
        let d_min = read_f64(&mut r)?;
        if env_id as usize >= n_envs {
            return Err(Error::format("distance sample references a missing env"));
        }
        distance.push(DistanceSample {
            env_id,
            c,
            z,
            d_min,
        });
    }
    // The file must end exactly where the declared counts say it does.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::format("trailing bytes after declared blocks"));
    }
    Ok(Dataset {
        scenario,
        environments,
        manifold,
        validity,
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_environments, gen_manifold_dataset};
    use crate::scenario::ScenarioDef;

    fn small_dataset() -> Dataset {
        let s = ScenarioDef::new(ScenarioId::S1);
        let environments = gen_environments(&s, 2, 11).unwrap();
        let manifold = gen_manifold_dataset(&s, 12, 11).unwrap();
        let validity = vec![
            ValiditySample {
                env_id: 0,
                c: vec![0.1],
                z: vec![0.5, -0.25, 1.75],
                valid: true,
            },
            ValiditySample {
                env_id: 1,
                c: vec![-0.2],
                z: vec![0.0, 0.125, -3.5],
                valid: false,
            },
        ];
        let distance = vec![DistanceSample {
            env_id: 1,
            c: vec![0.3],
            z: vec![1.0, 2.0, -1.0],
            d_min: -0.0625,
        }];
        Dataset {
            scenario: ScenarioId::S1,
            environments,
            manifold,
            validity,
            distance,
        }
    }

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let set = small_dataset();
        let dir = std::env::temp_dir().join("cmpd_roundtrip_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("set.cmpd");
        write_dataset(&path, &set).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back, set);
        // Serialized bytes are stable across a write-read-write cycle.
        let path2 = dir.join("set2.cmpd");
        write_dataset(&path2, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let set = small_dataset();
        let dir = std::env::temp_dir().join("cmpd_magic_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("set.cmpd");
        write_dataset(&path, &set).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'Z';
        std::fs::write(&path, bytes).unwrap();
        assert!(read_dataset(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn truncated_file_is_rejected() {
        let set = small_dataset();
        let dir = std::env::temp_dir().join("cmpd_trunc_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("set.cmpd");
        write_dataset(&path, &set).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read_dataset(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
