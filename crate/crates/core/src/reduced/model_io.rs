//! Binary persistence for trained models.
//!
//! Little-endian, versioned, with a leading magic tag.  Loading is
//! bit-exact: every float survives a save/load round trip unchanged.

use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelFamily};
use crate::nodes::NodeSet;
use crate::numerics::DenseMatrix;
use crate::problems::Problem;

use super::greedy::{GreedyStep, TrainedModel};
use super::tables::ReducedTables;
use super::{AlphaBound, GridKind, TrainingGrid};

const MAGIC: &[u8; 4] = b"R2BF";
const VERSION: u32 = 1;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn count(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("model section exceeds u32 range"));
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::ModelFormat("unexpected end of model file".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(count.checked_mul(8).ok_or_else(|| {
            Error::ModelFormat("model section length overflow".into())
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::ModelFormat("trailing bytes after model data".into()));
        }
        Ok(())
    }
}

/// Serializes a trained model to `path`.
pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);

    let name = model.problem.name.as_bytes();
    w.count(name.len());
    w.buf.extend_from_slice(name);

    w.u8(model.kernel.family().id());
    w.f64(model.kernel.eps());

    let nodes = &model.nodes;
    w.u8(nodes.dim() as u8);
    w.count(nodes.n());
    w.count(nodes.n_interior());
    for p in nodes.coords() {
        w.f64s(p);
    }
    w.count(model.n_loc);

    let grid = &model.training;
    w.u8(match grid.kind() {
        GridKind::Equispaced => 0,
        GridKind::CellCentered => 1,
    });
    w.count(grid.dims()[0]);
    w.count(grid.dims()[1]);
    for range in grid.param_box() {
        w.f64s(&range);
    }
    w.count(model.beta_values.len());
    w.f64s(&model.beta_values);
    w.f64(model.alpha.value);
    w.u8(model.alpha.at_floor as u8);

    w.count(model.selected.len());
    for mu in &model.selected {
        w.f64s(mu);
    }
    w.count(model.snapshots.len());
    for s in &model.snapshots {
        debug_assert_eq!(s.len(), nodes.n());
        w.f64s(s);
    }
    w.count(model.basis.len());
    for b in &model.basis {
        debug_assert_eq!(b.len(), nodes.n());
        w.f64s(b);
    }

    let t = &model.tables;
    debug_assert_eq!(t.n(), model.basis.len());
    w.count(t.qa());
    w.count(t.qf());
    for block in t.m_tables() {
        w.f64s(block.data());
    }
    for v in t.g_tables() {
        w.f64s(v);
    }
    w.f64s(t.f_table().data());

    w.count(model.history.len());
    for step in &model.history {
        w.count(step.n);
        w.f64s(&step.mu);
        w.f64(step.max_estimate);
    }

    std::fs::write(path, &w.buf)?;
    Ok(())
}

/// Loads a model saved by [`save_model`].
pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let data = std::fs::read(path)?;
    let mut r = Reader::new(&data);

    if r.take(4)? != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {version} (expected {VERSION})"
        )));
    }

    let name_len = r.count()?;
    let name = std::str::from_utf8(r.take(name_len)?)
        .map_err(|_| Error::ModelFormat("problem name is not valid text".into()))?;
    let problem = Problem::by_name(name)?;

    let family = KernelFamily::from_id(r.u8()?)?;
    let kernel = Kernel::new(family, r.f64()?)?;

    let dim = r.u8()? as usize;
    if dim != problem.dim() {
        return Err(Error::ModelFormat(format!(
            "node dimension {dim} does not match problem '{name}'"
        )));
    }
    let n = r.count()?;
    let n_interior = r.count()?;
    if n_interior > n || n == 0 {
        return Err(Error::ModelFormat("invalid node counts".into()));
    }
    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        let c = r.f64s(3)?;
        coords.push([c[0], c[1], c[2]]);
    }
    let nodes = NodeSet::new(coords, dim, n_interior);
    let n_loc = r.count()?;

    let kind = match r.u8()? {
        0 => GridKind::Equispaced,
        1 => GridKind::CellCentered,
        k => return Err(Error::ModelFormat(format!("unknown grid kind {k}"))),
    };
    let dims = [r.count()?, r.count()?];
    let mut param_box = [[0.0; 2]; 2];
    for range in &mut param_box {
        let v = r.f64s(2)?;
        range.copy_from_slice(&v);
    }
    let training = TrainingGrid::new(kind, param_box, dims)
        .map_err(|_| Error::ModelFormat("invalid training grid".into()))?;

    let beta_len = r.count()?;
    if beta_len != training.len() {
        return Err(Error::ModelFormat("stability table does not match grid".into()));
    }
    let beta_values = r.f64s(beta_len)?;
    let alpha = AlphaBound { value: r.f64()?, at_floor: r.u8()? != 0 };

    let n_sel = r.count()?;
    let mut selected = Vec::with_capacity(n_sel);
    for _ in 0..n_sel {
        let v = r.f64s(2)?;
        selected.push([v[0], v[1]]);
    }
    let n_snap = r.count()?;
    if n_snap != n_sel {
        return Err(Error::ModelFormat("snapshot count does not match selection".into()));
    }
    let mut snapshots = Vec::with_capacity(n_snap);
    for _ in 0..n_snap {
        snapshots.push(r.f64s(n)?);
    }
    let n_rb = r.count()?;
    if n_rb == 0 || n_rb > n_snap {
        return Err(Error::ModelFormat("invalid basis size".into()));
    }
    let mut basis = Vec::with_capacity(n_rb);
    for _ in 0..n_rb {
        basis.push(r.f64s(n)?);
    }

    let qa = r.count()?;
    if qa != problem.qa() {
        return Err(Error::ModelFormat(format!(
            "table term count {qa} does not match problem '{name}'"
        )));
    }
    let qf = r.count()?;
    let mut m = Vec::with_capacity(qa * qa);
    for _ in 0..qa * qa {
        m.push(DenseMatrix::from_column_major(n_rb, n_rb, r.f64s(n_rb * n_rb)?));
    }
    let mut g = Vec::with_capacity(qa * qf);
    for _ in 0..qa * qf {
        g.push(r.f64s(n_rb)?);
    }
    let f = DenseMatrix::from_column_major(qf, qf, r.f64s(qf * qf)?);
    let tables = ReducedTables::from_parts(m, g, f)?;

    let n_hist = r.count()?;
    let mut history = Vec::with_capacity(n_hist);
    for _ in 0..n_hist {
        history.push(GreedyStep {
            n: r.count()?,
            mu: {
                let v = r.f64s(2)?;
                [v[0], v[1]]
            },
            max_estimate: r.f64()?,
        });
    }
    r.finish()?;

    Ok(TrainedModel {
        problem,
        kernel,
        nodes,
        n_loc,
        training,
        beta_values,
        alpha,
        selected,
        snapshots,
        basis,
        tables,
        history,
    })
}
