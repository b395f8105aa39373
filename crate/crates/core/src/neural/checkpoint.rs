//! Little-endian checkpoint format.
//!
//! ```text
//! magic       8 bytes  "SCGNNCKP"
//! version     u32      1
//! n_points    u32
//! knn_k       u32
//! channels    3 x u32
//! ratios      3 x f64
//! dec_hidden  u32
//! leaky_slope f64
//! avg_power   f64
//! flags       u32      bit 0: optimizer state follows the parameters
//! n_tensors   u32
//! tensors     n_tensors x (rows u32, cols u32, rows*cols f64 row-major)
//! [optimizer] step u64, epochs_done u64, first moments, second moments
//!             (same tensor layout as the parameters)
//! ```

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::adam::AdamState;
use super::model::{Architecture, GnnModel, Params, STAGES};
use super::train::TrainState;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SCGNNCKP";
pub const VERSION: u32 = 1;
const FLAG_OPTIMIZER: u32 = 1;

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn write_params(out: &mut Vec<u8>, p: &Params) {
    let shapes = p.shapes();
    out.write_u32::<LittleEndian>(shapes.len() as u32).unwrap();
    for ((r, c), t) in shapes.into_iter().zip(p.tensors()) {
        out.write_u32::<LittleEndian>(r as u32).unwrap();
        out.write_u32::<LittleEndian>(c as u32).unwrap();
        for &v in t {
            out.write_f64::<LittleEndian>(v).unwrap();
        }
    }
}

fn read_params(cur: &mut Cursor<&[u8]>, into: &mut Params) -> Result<()> {
    let expected = into.shapes();
    let n = cur.read_u32::<LittleEndian>()? as usize;
    if n != expected.len() {
        return Err(corrupt(format!("expected {} tensors, found {n}", expected.len())));
    }
    for ((r, c), t) in expected.into_iter().zip(into.tensors_mut()) {
        let (fr, fc) = (cur.read_u32::<LittleEndian>()? as usize, cur.read_u32::<LittleEndian>()? as usize);
        if (fr, fc) != (r, c) {
            return Err(corrupt(format!("tensor shape {fr}x{fc} does not match architecture ({r}x{c})")));
        }
        cur.read_f64_into::<LittleEndian>(t)?;
    }
    Ok(())
}

pub fn encode_checkpoint(model: &GnnModel, optimizer: Option<(&AdamState, usize)>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let a = &model.arch;
    let w32 = |out: &mut Vec<u8>, v: usize| out.write_u32::<LittleEndian>(v as u32).unwrap();
    out.write_u32::<LittleEndian>(VERSION).unwrap();
    w32(&mut out, a.n_points);
    w32(&mut out, a.knn_k);
    for &c in &a.channels {
        w32(&mut out, c);
    }
    for &r in &a.ratios {
        out.write_f64::<LittleEndian>(r).unwrap();
    }
    w32(&mut out, a.decoder_hidden);
    out.write_f64::<LittleEndian>(a.leaky_slope).unwrap();
    out.write_f64::<LittleEndian>(a.avg_power).unwrap();
    out.write_u32::<LittleEndian>(if optimizer.is_some() { FLAG_OPTIMIZER } else { 0 }).unwrap();
    write_params(&mut out, &model.params);
    if let Some((adam, epochs)) = optimizer {
        out.write_u64::<LittleEndian>(adam.t).unwrap();
        out.write_u64::<LittleEndian>(epochs as u64).unwrap();
        write_params(&mut out, &adam.m);
        write_params(&mut out, &adam.v);
    }
    out
}

/// Parses a checkpoint; nothing is returned unless every byte checks out.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(GnnModel, Option<(AdamState, usize)>)> {
    parse(bytes).map_err(|e| match e {
        Error::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => corrupt("truncated checkpoint"),
        other => other,
    })
}

fn parse(bytes: &[u8]) -> Result<(GnnModel, Option<(AdamState, usize)>)> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = cur.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}, expected {VERSION}")));
    }
    let r32 = |cur: &mut Cursor<&[u8]>| cur.read_u32::<LittleEndian>().map(|v| v as usize);
    let n_points = r32(&mut cur)?;
    let knn_k = r32(&mut cur)?;
    let mut channels = [0usize; STAGES];
    for c in &mut channels {
        *c = r32(&mut cur)?;
    }
    let mut ratios = [0.0; STAGES];
    for r in &mut ratios {
        *r = cur.read_f64::<LittleEndian>()?;
    }
    let decoder_hidden = r32(&mut cur)?;
    let leaky_slope = cur.read_f64::<LittleEndian>()?;
    let avg_power = cur.read_f64::<LittleEndian>()?;
    let arch = Architecture { n_points, knn_k, channels, ratios, decoder_hidden, leaky_slope, avg_power };
    arch.validate().map_err(|e| corrupt(format!("bad architecture: {e}")))?;
    let flags = cur.read_u32::<LittleEndian>()?;
    let mut params = Params::init(&arch, 0)?;
    read_params(&mut cur, &mut params)?;
    let optimizer = if flags & FLAG_OPTIMIZER != 0 {
        let t = cur.read_u64::<LittleEndian>()?;
        let epochs = cur.read_u64::<LittleEndian>()? as usize;
        let mut adam = AdamState::new(&params);
        adam.t = t;
        read_params(&mut cur, &mut adam.m)?;
        read_params(&mut cur, &mut adam.v)?;
        Some((adam, epochs))
    } else {
        None
    };
    if (cur.position() as usize) != bytes.len() {
        return Err(corrupt("trailing bytes after checkpoint"));
    }
    Ok((GnnModel { arch, params }, optimizer))
}

pub fn save_model(model: &GnnModel, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(model, None))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GnnModel> {
    Ok(decode_checkpoint(&fs::read(path)?)?.0)
}

pub fn save_state(state: &TrainState, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(&state.model, Some((&state.adam, state.epochs_done))))?;
    Ok(())
}

/// Loads a checkpoint for resumption. A parameters-only file restarts the
/// optimizer from zero moments.
pub fn load_state(path: &Path) -> Result<TrainState> {
    let (model, opt) = decode_checkpoint(&fs::read(path)?)?;
    Ok(match opt {
        Some((adam, epochs_done)) => TrainState { model, adam, epochs_done },
        None => TrainState::new(model),
    })
}
