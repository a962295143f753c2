//! Cross-run aggregation and the experiment CSV format.
//!
//! ```text
//! # num_runs=25
//! # f_star=1.2345e-1
//! # <key>=<value>            (free-form metadata, one per line)
//! k,mean_f,std_f,mean_best_f,bound_rhs,avg_gap,avg_gap_se
//! 0,3.1e1,2e-1,3.1e1,9.9e1,3e1,0e0
//! ```
//!
//! `bound_rhs` is present only with a bound, `avg_gap` and `avg_gap_se` only
//! when `f_star` is known. Floats use Rust's shortest round-trip `{:e}`
//! form, so parsing a file reproduces the series bit for bit.

use std::io::{BufRead, Write};

use crate::analysis::{theorem1_rhs, theorem2_curve, BoundInputs};
use crate::error::{Result, ZoptError};
use crate::solvers::RunRecord;

/// Which convergence bound to overlay.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundSpec {
    Theorem1(BoundInputs),
    Theorem2(BoundInputs),
}

impl BoundSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BoundSpec::Theorem1(_) => "theorem1",
            BoundSpec::Theorem2(_) => "theorem2",
        }
    }

    pub fn curve(&self, checkpoints: &[usize]) -> Result<Vec<f64>> {
        match self {
            BoundSpec::Theorem1(inputs) => checkpoints
                .iter()
                .map(|&k| theorem1_rhs(inputs, k))
                .collect(),
            BoundSpec::Theorem2(inputs) => theorem2_curve(inputs, checkpoints),
        }
    }
}

/// Per-checkpoint statistics over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSeries {
    pub num_runs: usize,
    pub opt_value: Option<f64>,
    /// Extra `key=value` header lines, in order.
    pub metadata: Vec<(String, String)>,
    pub checkpoints: Vec<usize>,
    pub mean_f: Vec<f64>,
    /// Sample standard deviation (divisor `R - 1`; 0 for a single run).
    pub std_f: Vec<f64>,
    pub mean_best_f: Vec<f64>,
    pub bound_rhs: Option<Vec<f64>>,
    /// Cross-run mean of `(1/(k+1)) sum_{j<=k} (f(x_j) - f*)`.
    pub avg_gap: Option<Vec<f64>>,
    /// Standard error of `avg_gap`.
    pub avg_gap_se: Option<Vec<f64>>,
}

const RESERVED: [&str; 2] = ["num_runs", "f_star"];

/// Mean and sample standard deviation.
fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / count;
    if count < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1.0);
    (mean, var.sqrt())
}

/// Geometric grid `round(1.15^j)` plus `0` and `num_iters`.
pub fn checkpoint_grid(num_iters: usize) -> Vec<usize> {
    let mut grid = vec![0];
    let mut t = 1.0f64;
    while (t.round() as usize) < num_iters {
        let k = t.round() as usize;
        if grid.last() != Some(&k) {
            grid.push(k);
        }
        t *= 1.15;
    }
    if grid.last() != Some(&num_iters) {
        grid.push(num_iters);
    }
    grid
}

/// Aggregates dense records at `checkpoints`.
pub fn aggregate(
    records: &[RunRecord],
    checkpoints: &[usize],
    opt_value: Option<f64>,
    bound: Option<&BoundSpec>,
) -> Result<AggregateSeries> {
    let first = records
        .first()
        .ok_or_else(|| ZoptError::Degenerate("no completed runs to aggregate".into()))?;
    let len = first.values.len();
    if records
        .iter()
        .any(|r| r.values.len() != len || r.best_so_far.len() != len)
    {
        return Err(ZoptError::Degenerate("mismatched checkpoint grids".into()));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ZoptError::Config(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    if let Some(&last) = checkpoints.last() {
        if last >= len {
            return Err(ZoptError::Config(format!(
                "checkpoint {last} beyond the {} recorded iterates",
                len
            )));
        }
    }
    let runs = records.len() as f64;
    let mut mean_f = Vec::with_capacity(checkpoints.len());
    let mut std_f = Vec::with_capacity(checkpoints.len());
    let mut mean_best_f = Vec::with_capacity(checkpoints.len());
    for &k in checkpoints {
        let (m, s) = mean_std(records.iter().map(|r| r.values[k]));
        mean_f.push(m);
        std_f.push(s);
        mean_best_f.push(records.iter().map(|r| r.best_so_far[k]).sum::<f64>() / runs);
    }

    let (avg_gap, avg_gap_se) = match opt_value {
        Some(f_star) => {
            // per-run running averages at each checkpoint
            let per_run: Vec<Vec<f64>> = records
                .iter()
                .map(|r| {
                    let mut sum = 0.0;
                    let mut out = Vec::with_capacity(checkpoints.len());
                    let mut next = checkpoints.iter().peekable();
                    for (k, v) in r.values.iter().enumerate() {
                        sum += v - f_star;
                        if next.peek() == Some(&&k) {
                            out.push(sum / (k as f64 + 1.0));
                            next.next();
                        }
                    }
                    out
                })
                .collect();
            let (gap, se): (Vec<f64>, Vec<f64>) = (0..checkpoints.len())
                .map(|i| {
                    let (m, s) = mean_std(per_run.iter().map(|g| g[i]));
                    (m, s / runs.sqrt())
                })
                .unzip();
            (Some(gap), Some(se))
        }
        None => (None, None),
    };

    Ok(AggregateSeries {
        num_runs: records.len(),
        opt_value,
        metadata: Vec::new(),
        checkpoints: checkpoints.to_vec(),
        mean_f,
        std_f,
        mean_best_f,
        bound_rhs: bound.map(|b| b.curve(checkpoints)).transpose()?,
        avg_gap,
        avg_gap_se,
    })
}

impl AggregateSeries {
    fn columns(&self) -> Vec<&'static str> {
        let mut cols = vec!["k", "mean_f", "std_f", "mean_best_f"];
        if self.bound_rhs.is_some() {
            cols.push("bound_rhs");
        }
        if self.avg_gap.is_some() {
            cols.extend(["avg_gap", "avg_gap_se"]);
        }
        cols
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# num_runs={}", self.num_runs)?;
        if let Some(f) = self.opt_value {
            writeln!(out, "# f_star={f:e}")?;
        }
        for (key, value) in &self.metadata {
            if RESERVED.contains(&key.as_str()) || key.contains(['=', '\n']) || value.contains('\n')
            {
                return Err(ZoptError::Format(format!(
                    "unwritable metadata key `{key}`"
                )));
            }
            writeln!(out, "# {key}={value}")?;
        }
        writeln!(out, "{}", self.columns().join(","))?;
        for (i, k) in self.checkpoints.iter().enumerate() {
            write!(
                out,
                "{k},{:e},{:e},{:e}",
                self.mean_f[i], self.std_f[i], self.mean_best_f[i]
            )?;
            if let Some(b) = &self.bound_rhs {
                write!(out, ",{:e}", b[i])?;
            }
            if let (Some(g), Some(se)) = (&self.avg_gap, &self.avg_gap_se) {
                write!(out, ",{:e},{:e}", g[i], se[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, msg: String| ZoptError::Format(format!("line {line}: {msg}"));
        let mut num_runs = None;
        let mut opt_value = None;
        let mut metadata = Vec::new();
        let mut columns: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut checkpoints = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if let Some(comment) = line.strip_prefix("# ") {
                if columns.is_some() {
                    return Err(bad(lineno, "header after data".into()));
                }
                let (key, value) = comment
                    .split_once('=')
                    .ok_or_else(|| bad(lineno, "expected `# key=value`".into()))?;
                match key {
                    "num_runs" => {
                        num_runs = Some(value.parse().map_err(|e| bad(lineno, format!("{e}")))?)
                    }
                    "f_star" => {
                        opt_value = Some(value.parse().map_err(|e| bad(lineno, format!("{e}")))?)
                    }
                    _ => metadata.push((key.to_string(), value.to_string())),
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            match &columns {
                None => columns = Some(fields.iter().map(|s| s.to_string()).collect()),
                Some(cols) => {
                    if fields.len() != cols.len() {
                        return Err(bad(
                            lineno,
                            format!("expected {} fields, got {}", cols.len(), fields.len()),
                        ));
                    }
                    checkpoints.push(
                        fields[0]
                            .parse::<usize>()
                            .map_err(|e| bad(lineno, format!("k: {e}")))?,
                    );
                    rows.push(
                        fields[1..]
                            .iter()
                            .map(|s| s.parse::<f64>().map_err(|e| bad(lineno, format!("{e}"))))
                            .collect::<Result<_>>()?,
                    );
                }
            }
        }
        let columns = columns.ok_or_else(|| ZoptError::Format("missing column header".into()))?;
        let col = |name: &str| -> Option<Vec<f64>> {
            let idx = columns.iter().position(|c| c == name)?;
            Some(rows.iter().map(|r| r[idx - 1]).collect())
        };
        let need = |name: &str| {
            col(name).ok_or_else(|| ZoptError::Format(format!("missing column `{name}`")))
        };
        if columns.first().map(String::as_str) != Some("k") {
            return Err(ZoptError::Format("first column must be `k`".into()));
        }
        Ok(Self {
            num_runs: num_runs.ok_or_else(|| ZoptError::Format("missing num_runs".into()))?,
            opt_value,
            metadata,
            mean_f: need("mean_f")?,
            std_f: need("std_f")?,
            mean_best_f: need("mean_best_f")?,
            bound_rhs: col("bound_rhs"),
            avg_gap: col("avg_gap"),
            avg_gap_se: col("avg_gap_se"),
            checkpoints,
        })
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}
