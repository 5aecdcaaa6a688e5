//! On-disk formats: fvecs/bvecs vector files, the index file, and ground
//! truth files. Everything is little-endian.
//!
//! Index file layout (magic "VJIX", version 1):
//!   magic[4] | u32 version | u32 node_count | u32 dimension |
//!   u32 entry_point | u8 has_roles | node records...
//! Each node record: u8 role (only when has_roles = 1; 0 query, 1 data) |
//! f32 avg_data_neighbor_dist | u32 degree | degree * u32 neighbor ids.
//! Vectors are not stored; the store is loaded separately and checked
//! against node_count and dimension at use.
//!
//! Ground truth layout (magic "VJGT", version 1):
//!   magic[4] | u32 version | f32 theta | u64 pair_count |
//!   pair_count * (u32 query, u32 data, f32 distance).
//!
//! fvecs: repeated (i32 dim, dim * f32). bvecs: repeated (i32 dim,
//! dim * u8), widened to f32 on load.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{NodeRole, ProximityGraph};
use crate::oracle::GroundTruth;
use crate::store::{in_range, VectorStore};

const INDEX_MAGIC: &[u8; 4] = b"VJIX";
const TRUTH_MAGIC: &[u8; 4] = b"VJGT";
const FORMAT_VERSION: u32 = 1;

/// Cursor over a fully-read file; all reads produce typed errors instead of
/// panicking, and truncation is reported with the offset that fell short.
struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a str,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    fn new(buf: &'a [u8], path: &'a str, what: &'static str) -> Self {
        ByteReader {
            buf,
            pos: 0,
            path,
            what,
        }
    }

    fn truncated<T>(&self, need: usize) -> Result<T> {
        Err(Error::format(
            self.path,
            self.what,
            format!(
                "truncated: needed {} bytes at offset {}, file has {}",
                need,
                self.pos,
                self.buf.len()
            ),
        ))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return self.truncated(n);
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }

    fn expect_done(&self) -> Result<()> {
        if self.is_done() {
            Ok(())
        } else {
            Err(Error::format(
                self.path,
                self.what,
                format!(
                    "{} trailing bytes after offset {}",
                    self.buf.len() - self.pos,
                    self.pos
                ),
            ))
        }
    }

    /// Checks magic and version together; a bad magic or unknown version is
    /// a Version error, not Format, so callers can tell "not ours" from
    /// "ours but damaged".
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.buf.len() < 8 {
            return self.truncated(8);
        }
        let got = self.take(4)?;
        if got != magic {
            return Err(Error::Version {
                path: self.path.to_string(),
                found: format!("magic {:?}", String::from_utf8_lossy(got)),
            });
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                path: self.path.to_string(),
                found: format!("version {}", version),
            });
        }
        Ok(())
    }

    fn bad(&self, reason: String) -> Error {
        Error::format(self.path, self.what, reason)
    }
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

pub fn save_index(graph: &ProximityGraph, path: &Path) -> Result<()> {
    graph
        .validate()
        .map_err(|e| Error::config(format!("refusing to save invalid graph: {}", e)))?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(INDEX_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(graph.node_count() as u32).to_le_bytes())?;
    w.write_all(&graph.dimension.to_le_bytes())?;
    w.write_all(&graph.entry_point.to_le_bytes())?;
    w.write_all(&[graph.roles.is_some() as u8])?;
    for v in 0..graph.node_count() {
        if let Some(roles) = &graph.roles {
            let byte = match roles[v] {
                NodeRole::Query => 0u8,
                NodeRole::Data => 1u8,
            };
            w.write_all(&[byte])?;
        }
        w.write_all(&graph.avg_data_neighbor_dist[v].to_le_bytes())?;
        let nbrs = &graph.adjacency[v];
        w.write_all(&(nbrs.len() as u32).to_le_bytes())?;
        for &n in nbrs {
            w.write_all(&n.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<ProximityGraph> {
    let p = path_str(path);
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, &p, "index");
    r.header(INDEX_MAGIC)?;
    let node_count = r.u32()? as usize;
    let dimension = r.u32()?;
    let entry_point = r.u32()?;
    let has_roles = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(r.bad(format!("has_roles byte must be 0 or 1, got {}", other))),
    };
    if node_count == 0 {
        return Err(r.bad("node count is zero".to_string()));
    }
    if dimension == 0 {
        return Err(r.bad("dimension is zero".to_string()));
    }
    let mut roles = if has_roles { Some(Vec::new()) } else { None };
    let mut adjacency = Vec::new();
    let mut stats = Vec::new();
    for v in 0..node_count {
        if let Some(roles) = roles.as_mut() {
            let role = match r.u8()? {
                0 => NodeRole::Query,
                1 => NodeRole::Data,
                other => {
                    return Err(r.bad(format!(
                        "node {}: role byte must be 0 or 1, got {}",
                        v, other
                    )))
                }
            };
            roles.push(role);
        }
        stats.push(r.f32()?);
        let degree = r.u32()? as usize;
        if degree >= node_count {
            return Err(r.bad(format!(
                "node {}: degree {} impossible for {} nodes",
                v, degree, node_count
            )));
        }
        let mut nbrs = Vec::with_capacity(degree);
        for _ in 0..degree {
            nbrs.push(r.u32()?);
        }
        adjacency.push(nbrs);
    }
    r.expect_done()?;
    let graph = ProximityGraph {
        dimension,
        adjacency,
        entry_point,
        roles,
        avg_data_neighbor_dist: stats,
    };
    graph
        .validate()
        .map_err(|e| Error::format(&p, "index", e.to_string()))?;
    Ok(graph)
}

pub fn save_ground_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(TRUTH_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&truth.theta.to_le_bytes())?;
    w.write_all(&(truth.pairs.len() as u64).to_le_bytes())?;
    for &(q, d, dist) in &truth.pairs {
        w.write_all(&q.to_le_bytes())?;
        w.write_all(&d.to_le_bytes())?;
        w.write_all(&dist.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let p = path_str(path);
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, &p, "ground truth");
    r.header(TRUTH_MAGIC)?;
    let theta = r.f32()?;
    if !theta.is_finite() || theta < 0.0 {
        return Err(r.bad(format!(
            "theta {} is not a finite non-negative value",
            theta
        )));
    }
    let count = r.u64()?;
    let mut pairs = Vec::new();
    for i in 0..count {
        let q = r.u32()?;
        let d = r.u32()?;
        let dist = r.f32()?;
        if !in_range(dist, theta) {
            return Err(r.bad(format!(
                "pair {} has distance {} outside the open threshold {}",
                i, dist, theta
            )));
        }
        pairs.push((q, d, dist));
    }
    r.expect_done()?;
    Ok(GroundTruth { theta, pairs })
}

pub fn save_fvecs(store: &VectorStore, path: &Path) -> Result<()> {
    if store.is_empty() {
        return Err(Error::config(
            "refusing to save an empty store: fvecs files carry no dimension of their own",
        ));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    let dim = store.dim() as i32;
    for row in store.rows() {
        w.write_all(&dim.to_le_bytes())?;
        for x in row {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_fvecs(path: &Path) -> Result<VectorStore> {
    let p = path_str(path);
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, &p, "fvecs");
    let mut store: Option<VectorStore> = None;
    while !r.is_done() {
        let dim = r.i32()?;
        if dim <= 0 {
            return Err(r.bad(format!("record dimension {} must be positive", dim)));
        }
        let dim = dim as usize;
        match &store {
            None => store = Some(VectorStore::with_dim(dim)?),
            Some(s) if s.dim() != dim => {
                return Err(r.bad(format!(
                    "record dimension {} differs from first record's {}",
                    dim,
                    s.dim()
                )))
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            row.push(r.f32()?);
        }
        store.as_mut().unwrap().push(&row);
    }
    store.ok_or_else(|| r.bad("file is empty".to_string()))
}

pub fn save_bvecs(store: &VectorStore, path: &Path) -> Result<()> {
    if store.is_empty() {
        return Err(Error::config(
            "refusing to save an empty store: bvecs files carry no dimension of their own",
        ));
    }
    for (i, row) in store.rows().enumerate() {
        for &x in row {
            if x.fract() != 0.0 || !(0.0..=255.0).contains(&x) {
                return Err(Error::config(format!(
                    "row {} holds {} which does not fit a byte",
                    i, x
                )));
            }
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    let dim = store.dim() as i32;
    for row in store.rows() {
        w.write_all(&dim.to_le_bytes())?;
        for &x in row {
            w.write_all(&[x as u8])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_bvecs(path: &Path) -> Result<VectorStore> {
    let p = path_str(path);
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, &p, "bvecs");
    let mut store: Option<VectorStore> = None;
    while !r.is_done() {
        let dim = r.i32()?;
        if dim <= 0 {
            return Err(r.bad(format!("record dimension {} must be positive", dim)));
        }
        let dim = dim as usize;
        match &store {
            None => store = Some(VectorStore::with_dim(dim)?),
            Some(s) if s.dim() != dim => {
                return Err(r.bad(format!(
                    "record dimension {} differs from first record's {}",
                    dim,
                    s.dim()
                )))
            }
            _ => {}
        }
        let bytes = r.take(dim)?;
        let row: Vec<f32> = bytes.iter().map(|b| *b as f32).collect();
        store.as_mut().unwrap().push(&row);
    }
    store.ok_or_else(|| r.bad("file is empty".to_string()))
}

/// Loads fvecs or bvecs by file extension.
pub fn load_vectors(path: &Path) -> Result<VectorStore> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bvecs") => load_bvecs(path),
        _ => load_fvecs(path),
    }
}
