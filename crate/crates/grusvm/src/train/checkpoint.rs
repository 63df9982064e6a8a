//! Versioned binary checkpoint format.
//!
//! Little-endian throughout, with explicit shapes, so files move between
//! platforms; `f64` values are stored as raw bits and round-trip exactly.
//! Loading validates the magic, the version, every declared shape, and that
//! the file ends where the payload ends, so a truncated or corrupt file is
//! rejected without yielding partial state.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gru::GruParams;
use crate::heads::{HeadKind, HeadParams, NUM_CLASSES};
use crate::nn::{AdamState, Matrix};
use crate::train::TrainConfig;

const MAGIC: &[u8; 8] = b"GRUSVMCK";
const VERSION: u32 = 1;

/// Optimizer snapshot: one Adam state per trainable tensor, in the fixed
/// order used by the training loop.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub slots: Vec<AdamState>,
}

/// Everything needed to resume or evaluate a trained model.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub epoch: u64,
    /// One-hot widths of the dataset the model was trained on; evaluation
    /// refuses datasets with a different encoding.
    pub group_widths: Vec<usize>,
    pub gru: GruParams,
    pub head: HeadParams,
    pub optimizer: Option<OptimizerState>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer {
            buf: Vec::with_capacity(4096),
        }
    }

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
        self.u64(v.to_bits());
    }

    fn f64_slice(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for v in vs {
            self.f64(*v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "truncated file: wanted {n} bytes at offset {}, only {} remain",
                self.pos,
                self.buf.len() - self.pos
            )));
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

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64_vec(&mut self, expected: Option<usize>) -> Result<Vec<f64>> {
        let len = self.u64()? as usize;
        if let Some(e) = expected {
            if len != e {
                return Err(Error::Checkpoint(format!(
                    "vector of length {len} where {e} was declared"
                )));
            }
        }
        if len > self.buf.len() / 8 + 1 {
            return Err(Error::Checkpoint(format!("implausible vector length {len}")));
        }
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn write_matrix(w: &mut Writer, m: &Matrix) {
    w.u64(m.rows() as u64);
    w.u64(m.cols() as u64);
    for v in m.data() {
        w.f64(*v);
    }
}

fn read_matrix(r: &mut Reader, rows: usize, cols: usize) -> Result<Matrix> {
    let file_rows = r.u64()? as usize;
    let file_cols = r.u64()? as usize;
    if file_rows != rows || file_cols != cols {
        return Err(Error::Checkpoint(format!(
            "matrix is {file_rows}×{file_cols}, expected {rows}×{cols}"
        )));
    }
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows * cols {
        m.data_mut()[i] = r.f64()?;
    }
    Ok(m)
}

fn write_adam(w: &mut Writer, s: &AdamState) {
    w.u64(s.t);
    w.f64(s.beta1);
    w.f64(s.beta2);
    w.f64(s.epsilon);
    w.f64_slice(&s.m);
    w.f64_slice(&s.v);
}

fn read_adam(r: &mut Reader, len: usize) -> Result<AdamState> {
    let t = r.u64()?;
    let beta1 = r.f64()?;
    let beta2 = r.f64()?;
    let epsilon = r.f64()?;
    let m = r.f64_vec(Some(len))?;
    let v = r.f64_vec(Some(len))?;
    Ok(AdamState {
        m,
        v,
        t,
        beta1,
        beta2,
        epsilon,
    })
}

impl Checkpoint {
    /// Lengths of the trainable tensors in optimizer-slot order.
    pub fn tensor_lens(cell: usize, input: usize) -> [usize; 8] {
        let gate = cell * (cell + input);
        [
            gate,
            gate,
            gate,
            cell,
            cell,
            cell,
            NUM_CLASSES * cell,
            NUM_CLASSES,
        ]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.buf.extend_from_slice(MAGIC);
        w.u32(VERSION);

        let c = &self.config;
        w.u8(match c.head {
            HeadKind::Svm => 0,
            HeadKind::Softmax => 1,
        });
        w.u8(u8::from(c.shuffle));
        w.u64(c.batch_size as u64);
        w.u64(c.cell_size as u64);
        w.u64(c.epochs as u64);
        w.u64(c.seed);
        w.f64(c.dropout_keep);
        w.f64(c.learning_rate);
        w.f64(c.svm_c);
        w.u64(self.epoch);

        w.u64(self.group_widths.len() as u64);
        for width in &self.group_widths {
            w.u64(*width as u64);
        }

        w.u64(self.gru.cell_size() as u64);
        w.u64(self.gru.input_width() as u64);
        write_matrix(&mut w, &self.gru.w_update);
        write_matrix(&mut w, &self.gru.w_reset);
        write_matrix(&mut w, &self.gru.w_cand);
        w.f64_slice(&self.gru.b_update);
        w.f64_slice(&self.gru.b_reset);
        w.f64_slice(&self.gru.b_cand);

        write_matrix(&mut w, &self.head.weights);
        w.f64_slice(&self.head.bias);
        w.f64(self.head.penalty);

        match &self.optimizer {
            None => w.u8(0),
            Some(opt) => {
                w.u8(1);
                w.u64(opt.slots.len() as u64);
                for s in &opt.slots {
                    write_adam(&mut w, s);
                }
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {version}, this build reads version {VERSION}"
            )));
        }

        let head = match r.u8()? {
            0 => HeadKind::Svm,
            1 => HeadKind::Softmax,
            other => return Err(Error::Checkpoint(format!("unknown head tag {other}"))),
        };
        let shuffle = r.u8()? != 0;
        let batch_size = r.u64()? as usize;
        let cell_size = r.u64()? as usize;
        let epochs = r.u64()? as usize;
        let seed = r.u64()?;
        let dropout_keep = r.f64()?;
        let learning_rate = r.f64()?;
        let svm_c = r.f64()?;
        let epoch = r.u64()?;

        let n_widths = r.u64()? as usize;
        let mut group_widths = Vec::with_capacity(n_widths.min(1 << 20));
        for _ in 0..n_widths {
            group_widths.push(r.u64()? as usize);
        }

        let cell = r.u64()? as usize;
        let input = r.u64()? as usize;
        if cell == 0 || input == 0 {
            return Err(Error::Checkpoint("zero-sized network".into()));
        }
        if cell != cell_size {
            return Err(Error::Checkpoint(format!(
                "config cell size {cell_size} disagrees with stored weights ({cell})"
            )));
        }
        let concat = cell + input;
        let gru = GruParams {
            w_update: read_matrix(&mut r, cell, concat)?,
            w_reset: read_matrix(&mut r, cell, concat)?,
            w_cand: read_matrix(&mut r, cell, concat)?,
            b_update: r.f64_vec(Some(cell))?,
            b_reset: r.f64_vec(Some(cell))?,
            b_cand: r.f64_vec(Some(cell))?,
        };
        let head_params = HeadParams {
            weights: read_matrix(&mut r, NUM_CLASSES, cell)?,
            bias: r.f64_vec(Some(NUM_CLASSES))?,
            penalty: r.f64()?,
        };

        let optimizer = match r.u8()? {
            0 => None,
            1 => {
                let n = r.u64()? as usize;
                let lens = Self::tensor_lens(cell, input);
                if n != lens.len() {
                    return Err(Error::Checkpoint(format!(
                        "{n} optimizer slots, expected {}",
                        lens.len()
                    )));
                }
                let mut slots = Vec::with_capacity(n);
                for len in lens {
                    slots.push(read_adam(&mut r, len)?);
                }
                Some(OptimizerState { slots })
            }
            other => return Err(Error::Checkpoint(format!("bad optimizer flag {other}"))),
        };
        r.done()?;

        Ok(Checkpoint {
            config: TrainConfig {
                batch_size,
                cell_size,
                dropout_keep,
                epochs,
                learning_rate,
                svm_c,
                head,
                seed,
                shuffle,
            },
            epoch,
            group_widths,
            gru,
            head: head_params,
            optimizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::util::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_checkpoint() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gru = GruParams::init(4, 6, &mut rng);
        let head = HeadParams::init(4, 0.5, &mut rng);
        let lens = Checkpoint::tensor_lens(4, 6);
        let mut slots: Vec<AdamState> = lens.iter().map(|l| AdamState::new(*l)).collect();
        for s in slots.iter_mut() {
            s.t = 3;
            for (i, m) in s.m.iter_mut().enumerate() {
                *m = i as f64 * 0.01 - 0.3;
            }
            for (i, v) in s.v.iter_mut().enumerate() {
                *v = i as f64 * 0.001;
            }
        }
        Checkpoint {
            config: TrainConfig {
                batch_size: 8,
                cell_size: 4,
                dropout_keep: 0.85,
                epochs: 5,
                learning_rate: 1e-3,
                svm_c: 0.5,
                head: HeadKind::Svm,
                seed: 7,
                shuffle: false,
            },
            epoch: 5,
            group_widths: vec![10, 3, 6],
            gru,
            head,
            optimizer: Some(OptimizerState { slots }),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ckpt = sample_checkpoint();
        let bytes = ckpt.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.gru, ckpt.gru);
        assert_eq!(back.head, ckpt.head);
        assert_eq!(back.optimizer, ckpt.optimizer);
        assert_eq!(back.group_widths, ckpt.group_widths);
        assert_eq!(back.epoch, ckpt.epoch);
        assert_eq!(back.config, ckpt.config);
        // serialize again: byte-identical
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncation_is_rejected_at_every_length() {
        let bytes = sample_checkpoint().to_bytes();
        for cut in [0, 1, 7, 8, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                Checkpoint::from_bytes(&bytes[..cut]).is_err(),
                "cut at {cut} was accepted"
            );
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let mut bytes = sample_checkpoint().to_bytes();
        bytes.push(0);
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let mut bytes = sample_checkpoint().to_bytes();
        bytes[0] = b'X';
        assert!(Checkpoint::from_bytes(&bytes).is_err());
        let mut bytes = sample_checkpoint().to_bytes();
        bytes[8] = 99;
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }
}
