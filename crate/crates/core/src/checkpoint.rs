//! Binary learner checkpoints.
//!
//! Layout: `"ACPK"`, a version byte, a little-endian `u32` length and a JSON
//! header, then tagged sections (`[u8; 4]` tag, `u64` byte length, payload).
//! Matrices are stored as `u64` rows, `u64` cols and column-major `f64`.
//! Random projection matrices are not stored: they are regenerated from
//! their seeds, so loading refuses checkpoints written with a different
//! PRNG identifier.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytic::{self, GramAccumulator, RPMatrix};
use crate::classifier::ElmClassifier;
use crate::cp_layer::{CPHead, CPState};
use crate::error::{Error, Result};
use crate::pipeline::{Learner, LearnerConfig, LearnerParts, LearnerPartsRef, TaskDiagnostics};
use crate::stats::{ClassEntry, ClassStats};

pub const MAGIC: &[u8; 4] = b"ACPK";
pub const VERSION: u8 = 1;

const MAX_PROJECTION_ENTRIES: usize = 1 << 31;

const TAG_STATS: &[u8; 4] = b"STAT";
const TAG_CP_HEAD: &[u8; 4] = b"CPHD";
const TAG_ELM: &[u8; 4] = b"ELMC";
const TAG_RIDGE: &[u8; 4] = b"RIDG";

#[derive(Serialize, Deserialize)]
struct Header {
    prng: String,
    config: LearnerConfig,
    dim: usize,
    tasks: Vec<Vec<u32>>,
    diagnostics: Vec<TaskDiagnostics>,
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32s(&mut self, v: &[u32]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|&x| self.u32(x));
    }

    fn vector(&mut self, v: &DVector<f64>) {
        self.u64(v.len() as u64);
        v.iter().for_each(|&x| self.f64(x));
    }

    fn matrix(&mut self, m: &DMatrix<f64>) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        m.iter().for_each(|&x| self.f64(x));
    }

    fn opt_matrix(&mut self, m: Option<&DMatrix<f64>>) {
        match m {
            Some(m) => {
                self.u8(1);
                self.matrix(m);
            }
            None => self.u8(0),
        }
    }

    fn rp(&mut self, rp: &RPMatrix) {
        self.u64(rp.seed);
        self.u64(rp.input_dim() as u64);
        self.u64(rp.output_dim() as u64);
    }

    fn section(&mut self, tag: &[u8; 4], payload: Writer) {
        self.buf.extend_from_slice(tag);
        self.u64(payload.buf.len() as u64);
        self.buf.extend_from_slice(&payload.buf);
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| corrupt("unexpected end of checkpoint"))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn done(&self) -> bool {
        self.pos == self.data.len()
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("size does not fit in memory"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Length prefix checked against the bytes left, so corrupt sizes fail
    /// before allocating.
    fn count(&mut self, elem_size: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(elem_size) > self.data.len() - self.pos {
            return Err(corrupt("length prefix exceeds checkpoint size"));
        }
        Ok(n)
    }

    fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.count(4)?;
        (0..n).map(|_| self.u32()).collect()
    }

    fn vector(&mut self) -> Result<DVector<f64>> {
        let n = self.count(8)?;
        let v: Result<Vec<f64>> = (0..n).map(|_| self.f64()).collect();
        Ok(DVector::from_vec(v?))
    }

    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.saturating_mul(8) <= self.data.len() - self.pos)
            .ok_or_else(|| corrupt("matrix size exceeds checkpoint size"))?;
        let v: Result<Vec<f64>> = (0..n).map(|_| self.f64()).collect();
        Ok(DMatrix::from_vec(rows, cols, v?))
    }

    fn opt_matrix(&mut self) -> Result<Option<DMatrix<f64>>> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.matrix()?)),
            f => Err(corrupt(format!("invalid option flag {f}"))),
        }
    }

    fn rp(&mut self) -> Result<RPMatrix> {
        let seed = self.u64()?;
        let input = self.usize()?;
        let output = self.usize()?;
        if input.checked_mul(output).is_none_or(|n| n > MAX_PROJECTION_ENTRIES) {
            return Err(corrupt(format!("implausible projection shape {input}x{output}")));
        }
        Ok(analytic::random_projection(input, output, seed))
    }

    fn section(&mut self, tag: &[u8; 4]) -> Result<Reader<'a>> {
        let found = self.take(4)?;
        if found != tag {
            return Err(corrupt(format!(
                "expected section {}, found {}",
                String::from_utf8_lossy(tag),
                String::from_utf8_lossy(found)
            )));
        }
        let len = self.usize()?;
        Ok(Reader::new(self.take(len)?))
    }
}

fn write_stats(stats: &ClassStats) -> Writer {
    let mut w = Writer::default();
    w.u64(stats.dim() as u64);
    w.u64(stats.num_classes() as u64);
    for (&class, entry) in stats.entries() {
        w.u32(class);
        w.u64(entry.count);
        w.vector(&entry.sum);
    }
    w.matrix(stats.shared_cov());
    w
}

fn read_stats(mut r: Reader) -> Result<ClassStats> {
    let dim = r.usize()?;
    let n = r.count(12)?;
    let mut classes = BTreeMap::new();
    for _ in 0..n {
        let class = r.u32()?;
        let count = r.u64()?;
        let sum = r.vector()?;
        classes.insert(class, ClassEntry { sum, count });
    }
    let cov = r.matrix()?;
    ClassStats::from_parts(dim, classes, cov)
}

fn write_head(head: &CPHead) -> Writer {
    let mut w = Writer::default();
    w.rp(&head.rp);
    w.matrix(&head.gram);
    w.u64(head.proto_sums.len() as u64);
    for (&class, sum) in &head.proto_sums {
        w.u32(class);
        w.vector(sum);
    }
    w.opt_matrix(head.weights.as_ref());
    w
}

fn read_head(mut r: Reader) -> Result<CPHead> {
    let rp = r.rp()?;
    let gram = r.matrix()?;
    let n = r.count(12)?;
    let mut proto_sums = BTreeMap::new();
    for _ in 0..n {
        let class = r.u32()?;
        proto_sums.insert(class, r.vector()?);
    }
    let weights = r.opt_matrix()?;
    Ok(CPHead {
        rp,
        gram,
        proto_sums,
        weights,
    })
}

fn write_elm(elm: &ElmClassifier) -> Writer {
    let mut w = Writer::default();
    w.rp(&elm.rp);
    w.matrix(&elm.weights);
    w.u32s(&elm.classes);
    w.f64(elm.lambda);
    w
}

fn read_elm(mut r: Reader) -> Result<ElmClassifier> {
    Ok(ElmClassifier {
        rp: r.rp()?,
        weights: r.matrix()?,
        classes: r.u32s()?,
        lambda: r.f64()?,
    })
}

/// Serializes a learner to bytes.
pub fn to_bytes(learner: &Learner) -> Vec<u8> {
    let header = Header {
        prng: analytic::PRNG_ID.to_string(),
        config: learner.config().clone(),
        dim: learner.dim(),
        tasks: learner.tasks().to_vec(),
        diagnostics: learner.diagnostics().to_vec(),
    };
    let json = serde_json::to_vec(&header).expect("checkpoint header serializes");
    let mut w = Writer::default();
    w.buf.extend_from_slice(MAGIC);
    w.u8(VERSION);
    w.u32(json.len() as u32);
    w.buf.extend_from_slice(&json);

    match learner.parts() {
        LearnerPartsRef::Anacp { stats, cp, elm } => {
            w.section(TAG_STATS, write_stats(stats));
            for head in &cp.heads {
                w.section(TAG_CP_HEAD, write_head(head));
            }
            if let Some(elm) = elm {
                w.section(TAG_ELM, write_elm(elm));
            }
        }
        LearnerPartsRef::RawNcm { stats } => w.section(TAG_STATS, write_stats(stats)),
        LearnerPartsRef::Ridge {
            rp,
            acc,
            classes,
            weights,
        } => {
            let mut p = Writer::default();
            match rp {
                Some(rp) => {
                    p.u8(1);
                    p.rp(rp);
                }
                None => p.u8(0),
            }
            p.matrix(&acc.gram);
            p.matrix(&acc.cross);
            p.f64(acc.lambda);
            p.u32s(classes);
            p.opt_matrix(weights);
            w.section(TAG_RIDGE, p);
        }
    }
    w.buf
}

/// Restores a learner written by [`to_bytes`].
pub fn from_bytes(data: &[u8]) -> Result<Learner> {
    let mut r = Reader::new(data);
    if r.take(4).map_err(|_| Error::BadMagic)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let len = r.u32()? as usize;
    let header: Header =
        serde_json::from_slice(r.take(len)?).map_err(|e| corrupt(format!("bad header: {e}")))?;
    if header.prng != analytic::PRNG_ID {
        return Err(corrupt(format!(
            "checkpoint was written with PRNG '{}', this build uses '{}'",
            header.prng,
            analytic::PRNG_ID
        )));
    }
    let config = header.config;
    config.validate()?;
    use crate::pipeline::Method;
    let parts = match config.method {
        Method::Anacp => {
            let stats = read_stats(r.section(TAG_STATS)?)?;
            let mut heads = Vec::with_capacity(config.heads);
            for _ in 0..config.heads {
                heads.push(read_head(r.section(TAG_CP_HEAD)?)?);
            }
            let elm = if r.done() {
                None
            } else {
                Some(read_elm(r.section(TAG_ELM)?)?)
            };
            let mut cp = CPState {
                heads,
                lambda: config.lambda_cp,
                alpha: config.alpha,
                eps_scale: config.eps_scale,
                use_repulsion: config.use_repulsion,
                prototypes: None,
            };
            if stats.num_classes() > 0 {
                cp.prototypes = Some(cp.target_prototypes(&stats)?);
            }
            LearnerParts::Anacp { stats, cp, elm }
        }
        Method::RawNcm => LearnerParts::RawNcm {
            stats: read_stats(r.section(TAG_STATS)?)?,
        },
        Method::IncrementalRidge | Method::RpRidge => {
            let mut p = r.section(TAG_RIDGE)?;
            let rp = match p.u8()? {
                0 => None,
                1 => Some(p.rp()?),
                f => return Err(corrupt(format!("invalid option flag {f}"))),
            };
            let gram = p.matrix()?;
            let cross = p.matrix()?;
            let lambda = p.f64()?;
            let classes = p.u32s()?;
            let weights = p.opt_matrix()?;
            LearnerParts::Ridge {
                rp,
                acc: GramAccumulator { gram, cross, lambda },
                classes,
                weights,
            }
        }
    };
    if !r.done() {
        return Err(Error::TrailingBytes(data.len() - r.pos));
    }
    Learner::from_parts(config, header.dim, header.tasks, header.diagnostics, parts)
}

pub fn save(learner: &Learner, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(learner)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Learner> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&data)
}
