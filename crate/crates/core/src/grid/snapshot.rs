//! Field snapshots: one raw little-endian `f64` file per tensor component,
//! row-major in grid order, plus a JSON sidecar header.
//!
//! For a stem `u.t0003` and a vector field in 2D the files are
//! `u.t0003.c0.f64`, `u.t0003.c0.json`, `u.t0003.c1.f64`, `u.t0003.c1.json`.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use super::{Field, GridSpec, Rank};
use crate::{Error, Result};

/// Sidecar header of one component file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    /// Tensor order: 0, 1 or 2.
    pub rank: usize,
    pub component: usize,
    pub time: f64,
}

fn component_paths(dir: &FsPath, stem: &str, c: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{stem}.c{c}.f64")),
        dir.join(format!("{stem}.c{c}.json")),
    )
}

/// Writes `f` at time `time`, returning every file created.
pub fn write(dir: &FsPath, stem: &str, f: &Field, time: f64) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let g = f.grid();
    let mut written = Vec::new();
    for c in 0..f.n_components() {
        let (data, header) = component_paths(dir, stem, c);
        let bytes: Vec<u8> = f
            .component(c)
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        fs::write(&data, bytes)?;
        let h = Header {
            d: g.d(),
            n: g.n(),
            length: g.length(),
            rank: f.rank().order(),
            component: c,
            time,
        };
        fs::write(&header, serde_json::to_string_pretty(&h)?)?;
        written.push(data);
        written.push(header);
    }
    Ok(written)
}

/// Reads a snapshot written by [`write`], returning the field and its time.
pub fn read(dir: &FsPath, stem: &str) -> Result<(Field, f64)> {
    let (_, first) = component_paths(dir, stem, 0);
    let h0: Header = serde_json::from_str(&fs::read_to_string(first)?)?;
    let grid = GridSpec::new(h0.d, h0.n, h0.length)?;
    let rank = Rank::from_order(h0.rank)
        .ok_or_else(|| Error::InvalidParameter(format!("snapshot rank {}", h0.rank)))?;
    let mut comps = Vec::new();
    for c in 0..rank.components(grid.d()) {
        let (data, header) = component_paths(dir, stem, c);
        let h: Header = serde_json::from_str(&fs::read_to_string(header)?)?;
        if h.component != c || h.d != h0.d || h.n != h0.n || h.rank != h0.rank {
            return Err(Error::InvalidParameter(format!(
                "inconsistent header for component {c} of {stem}"
            )));
        }
        let bytes = fs::read(data)?;
        if bytes.len() != 8 * grid.len() {
            return Err(Error::InvalidParameter(format!(
                "component {c} of {stem} has {} bytes, expected {}",
                bytes.len(),
                8 * grid.len()
            )));
        }
        comps.push(
            bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                .collect(),
        );
    }
    Ok((Field::from_components(&grid, rank, comps)?, h0.time))
}
