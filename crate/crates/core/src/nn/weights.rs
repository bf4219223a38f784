//! The `CMPW` weight file format.
//!
//! A file is a sequence of network records, each:
//!
//! ```text
//! magic   b"CMPW"
//! version u16 LE (currently 1)
//! role    u8
//! layers  u16 LE
//! per layer: in_dim u32 LE, out_dim u32 LE, activation u8
//! per layer: weights row-major (out*in f64 LE), then biases (out f64 LE)
//! ```
//!
//! Round trips are bit-exact: floats are copied through their IEEE-754 bit
//! patterns.

use super::{Activation, CvaeModel, DistanceModel, InputNorm, Layer, Mlp, ValidityModel};
use crate::error::Error;
use crate::Result;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"CMPW";
pub const VERSION: u16 = 1;

/// Which of the five task networks a record holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkRole {
    ConfigEncoder = 1,
    ConfigDecoder = 2,
    VoxelEncoder = 3,
    ValidityHead = 4,
    SdfEncoder = 5,
    DistanceHead = 6,
}

impl NetworkRole {
    fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            1 => NetworkRole::ConfigEncoder,
            2 => NetworkRole::ConfigDecoder,
            3 => NetworkRole::VoxelEncoder,
            4 => NetworkRole::ValidityHead,
            5 => NetworkRole::SdfEncoder,
            6 => NetworkRole::DistanceHead,
            _ => return Err(Error::format(format!("unknown network role {v}"))),
        })
    }
}

fn act_tag(a: Activation) -> u8 {
    match a {
        Activation::Identity => 0,
        Activation::Relu => 1,
        Activation::LeakyRelu => 2,
        Activation::Sigmoid => 3,
    }
}

fn act_from_tag(t: u8) -> Result<Activation> {
    Ok(match t {
        0 => Activation::Identity,
        1 => Activation::Relu,
        2 => Activation::LeakyRelu,
        3 => Activation::Sigmoid,
        _ => return Err(Error::format(format!("unknown activation tag {t}"))),
    })
}

fn write_f64s(w: &mut impl Write, vals: &[f64]) -> std::io::Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Writes one network record.
pub fn write_record(w: &mut impl Write, role: NetworkRole, mlp: &Mlp) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[role as u8])?;
    let n_layers = u16::try_from(mlp.layers.len())
        .map_err(|_| Error::format("too many layers for the format"))?;
    w.write_all(&n_layers.to_le_bytes())?;
    for l in &mlp.layers {
        w.write_all(&(l.in_dim as u32).to_le_bytes())?;
        w.write_all(&(l.out_dim as u32).to_le_bytes())?;
        w.write_all(&[act_tag(l.act)])?;
    }
    for l in &mlp.layers {
        write_f64s(w, &l.w)?;
        write_f64s(w, &l.b)?;
    }
    Ok(())
}

/// Reads one record, or `None` at a clean end of file.
pub fn read_record(r: &mut impl Read) -> Result<Option<(NetworkRole, Mlp)>> {
    let mut magic = [0u8; 4];
    // Distinguish "no more records" from a truncated one.
    let mut filled = 0;
    while filled < 4 {
        let n = r.read(&mut magic[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(Error::format("truncated record header"));
        }
        filled += n;
    }
    if magic != MAGIC {
        return Err(Error::format("bad magic bytes"));
    }
    let mut u16buf = [0u8; 2];
    r.read_exact(&mut u16buf)?;
    let version = u16::from_le_bytes(u16buf);
    if version != VERSION {
        return Err(Error::format(format!("unsupported version {version}")));
    }
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte)?;
    let role = NetworkRole::from_u8(byte[0])?;
    r.read_exact(&mut u16buf)?;
    let n_layers = u16::from_le_bytes(u16buf) as usize;
    let mut headers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let in_dim = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let out_dim = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut byte)?;
        headers.push((in_dim, out_dim, act_from_tag(byte[0])?));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for (in_dim, out_dim, act) in headers {
        let w = read_f64s(r, in_dim * out_dim)?;
        let b = read_f64s(r, out_dim)?;
        layers.push(Layer {
            in_dim,
            out_dim,
            act,
            w,
            b,
        });
    }
    let mlp = Mlp { layers };
    for pair in mlp.layers.windows(2) {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::format("inconsistent layer dimensions"));
        }
    }
    Ok(Some((role, mlp)))
}

/// Writes a sequence of records to a file.
pub fn save_networks(path: &Path, records: &[(NetworkRole, &Mlp)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (role, mlp) in records {
        write_record(&mut w, *role, mlp)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads every record in a file.
pub fn load_networks(path: &Path) -> Result<Vec<(NetworkRole, Mlp)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    while let Some(rec) = read_record(&mut r)? {
        out.push(rec);
    }
    Ok(out)
}

fn take_role(records: &mut Vec<(NetworkRole, Mlp)>, role: NetworkRole) -> Result<Mlp> {
    let pos = records
        .iter()
        .position(|(r, _)| *r == role)
        .ok_or_else(|| Error::format(format!("file is missing a {role:?} record")))?;
    Ok(records.swap_remove(pos).1)
}

pub fn save_cvae(path: &Path, model: &CvaeModel) -> Result<()> {
    save_networks(
        path,
        &[
            (NetworkRole::ConfigEncoder, &model.encoder),
            (NetworkRole::ConfigDecoder, &model.decoder),
        ],
    )
}

/// Loads an autoencoder; the standardization is reconstructed from the
/// scenario, not stored in the file.
pub fn load_cvae(
    path: &Path,
    latent_dim: usize,
    q_norm: InputNorm,
    c_norm: InputNorm,
) -> Result<CvaeModel> {
    let mut records = load_networks(path)?;
    let encoder = take_role(&mut records, NetworkRole::ConfigEncoder)?;
    let decoder = take_role(&mut records, NetworkRole::ConfigDecoder)?;
    CvaeModel::from_parts(encoder, decoder, latent_dim, q_norm, c_norm)
}

pub fn save_validity(path: &Path, model: &ValidityModel) -> Result<()> {
    save_networks(
        path,
        &[
            (NetworkRole::VoxelEncoder, &model.voxel_encoder),
            (NetworkRole::ValidityHead, &model.head),
        ],
    )
}

pub fn load_validity(path: &Path, latent_dim: usize, c_norm: InputNorm) -> Result<ValidityModel> {
    let mut records = load_networks(path)?;
    Ok(ValidityModel {
        voxel_encoder: take_role(&mut records, NetworkRole::VoxelEncoder)?,
        head: take_role(&mut records, NetworkRole::ValidityHead)?,
        c_norm,
        latent_dim,
    })
}

pub fn save_distance(path: &Path, model: &DistanceModel) -> Result<()> {
    save_networks(
        path,
        &[
            (NetworkRole::SdfEncoder, &model.sdf_encoder),
            (NetworkRole::DistanceHead, &model.head),
        ],
    )
}

pub fn load_distance(
    path: &Path,
    latent_dim: usize,
    c_norm: InputNorm,
    sdf_scale: f64,
) -> Result<DistanceModel> {
    let mut records = load_networks(path)?;
    Ok(DistanceModel {
        sdf_encoder: take_role(&mut records, NetworkRole::SdfEncoder)?,
        head: take_role(&mut records, NetworkRole::DistanceHead)?,
        c_norm,
        latent_dim,
        sdf_scale,
    })
}
