//! On-disk forms of a [`RunRecord`].
//!
//! The CSV holds the dense value trace. The binary trajectory format holds
//! everything and reads back bit-exactly:
//!
//! ```text
//! magic    8 bytes  "ZOPTTRJ1"
//! header   u64 seed, u64 n, u64 num_iters, u64 record_stride,
//!          u64 function_eval_count, u64 best_index, f64 mu, f64 step_size
//! solver   u64 length + UTF-8 bytes
//! values   u64 count + count x f64
//! points   u64 count + count x (u64 k + n x f64)
//! best     n x f64
//! final    n x f64
//! ```
//!
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use crate::error::{Result, ZoptError};
use crate::Vector;

use super::RunRecord;

const MAGIC: &[u8; 8] = b"ZOPTTRJ1";

/// Writes `k,f,best_f` for every iterate, preceded by `#`-comment metadata.
pub fn write_record_csv<W: Write>(record: &RunRecord, mut out: W) -> Result<()> {
    writeln!(out, "# solver={}", record.solver)?;
    writeln!(out, "# seed={}", record.seed)?;
    writeln!(out, "# mu={:e}", record.mu)?;
    writeln!(out, "# step_size={:e}", record.step_size)?;
    writeln!(out, "# num_iters={}", record.num_iters)?;
    writeln!(out, "# function_evals={}", record.function_eval_count)?;
    writeln!(out, "k,f,best_f")?;
    for (k, (f, best)) in record.values.iter().zip(&record.best_so_far).enumerate() {
        writeln!(out, "{k},{f:e},{best:e}")?;
    }
    Ok(())
}

fn put_u64<W: Write>(out: &mut W, v: u64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(out: &mut W, v: f64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_vec<W: Write>(out: &mut W, v: &Vector) -> Result<()> {
    v.iter().try_for_each(|&x| put_f64(out, x))
}

pub fn write_trajectory<W: Write>(record: &RunRecord, mut out: W) -> Result<()> {
    let n = record.final_point.len();
    out.write_all(MAGIC)?;
    for v in [
        record.seed,
        n as u64,
        record.num_iters as u64,
        record.record_stride as u64,
        record.function_eval_count as u64,
        record.best_index as u64,
    ] {
        put_u64(&mut out, v)?;
    }
    put_f64(&mut out, record.mu)?;
    put_f64(&mut out, record.step_size)?;
    put_u64(&mut out, record.solver.len() as u64)?;
    out.write_all(record.solver.as_bytes())?;
    put_u64(&mut out, record.values.len() as u64)?;
    for &v in &record.values {
        put_f64(&mut out, v)?;
    }
    put_u64(&mut out, record.iterates.len() as u64)?;
    for (k, x) in &record.iterates {
        put_u64(&mut out, *k as u64)?;
        put_vec(&mut out, x)?;
    }
    put_vec(&mut out, &record.best_point)?;
    put_vec(&mut out, &record.final_point)?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| ZoptError::Format(format!("truncated trajectory: {e}")))?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64> {
        self.bytes::<8>().map(u64::from_le_bytes)
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| ZoptError::Format("length overflow".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        self.bytes::<8>().map(f64::from_le_bytes)
    }

    fn vector(&mut self, n: usize) -> Result<Vector> {
        let mut v = Vector::zeros(n);
        for x in v.iter_mut() {
            *x = self.f64()?;
        }
        Ok(v)
    }
}

pub fn read_trajectory<R: Read>(input: R) -> Result<RunRecord> {
    let mut r = Reader { inner: input };
    if &r.bytes::<8>()? != MAGIC {
        return Err(ZoptError::Format("not a zopt trajectory file".into()));
    }
    let seed = r.u64()?;
    let n = r.usize()?;
    let num_iters = r.usize()?;
    let record_stride = r.usize()?;
    let function_eval_count = r.usize()?;
    let best_index = r.usize()?;
    let mu = r.f64()?;
    let step_size = r.f64()?;
    let name_len = r.usize()?;
    let mut name = vec![0u8; name_len];
    r.inner
        .read_exact(&mut name)
        .map_err(|e| ZoptError::Format(format!("truncated trajectory: {e}")))?;
    let solver = String::from_utf8(name)
        .map_err(|_| ZoptError::Format("solver name is not UTF-8".into()))?;
    let count = r.usize()?;
    let values = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let count = r.usize()?;
    let iterates = (0..count)
        .map(|_| Ok((r.usize()?, r.vector(n)?)))
        .collect::<Result<Vec<_>>>()?;
    let best_point = r.vector(n)?;
    let final_point = r.vector(n)?;
    let mut best_so_far = Vec::with_capacity(values.len());
    let mut running = f64::INFINITY;
    for &v in &values {
        running = running.min(v);
        best_so_far.push(running);
    }
    Ok(RunRecord {
        solver,
        seed,
        mu,
        step_size,
        num_iters,
        record_stride,
        values,
        best_so_far,
        iterates,
        best_index,
        best_point,
        final_point,
        function_eval_count,
    })
}
