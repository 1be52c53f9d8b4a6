//! Gram matrices over datasets of sequences, and their export formats.

use std::fmt::Display;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{rntk_pair_prepared, self_table, KernelKind, SelfTable};
use crate::params::RntkParams;
use crate::sequence::Sequence;

/// A kernel on sequences with an optional per-sequence precomputation.
pub trait SequenceKernel: Sync {
    type Prepared: Send + Sync;

    fn prepare(&self, x: &Sequence) -> Result<Self::Prepared>;

    fn eval(&self, x: &Sequence, px: &Self::Prepared, y: &Sequence, py: &Self::Prepared) -> Result<f64>;

    /// Kernel kind and hyperparameters, recorded with every Gram matrix.
    fn descriptor(&self) -> String;

    fn pair(&self, x: &Sequence, y: &Sequence) -> Result<f64> {
        let px = self.prepare(x)?;
        let py = self.prepare(y)?;
        self.eval(x, &px, y, &py)
    }
}

/// The analytic RNTK (`Theta`) or its NNGP kernel (`Nngp`).
#[derive(Debug, Clone, PartialEq)]
pub struct RntkKernel {
    pub params: RntkParams,
    pub kind: KernelKind,
}

impl RntkKernel {
    pub fn new(params: RntkParams, kind: KernelKind) -> Self {
        RntkKernel { params, kind }
    }
}

impl SequenceKernel for RntkKernel {
    type Prepared = SelfTable;

    fn prepare(&self, x: &Sequence) -> Result<SelfTable> {
        self_table(&self.params, x)
    }

    fn eval(&self, x: &Sequence, px: &SelfTable, y: &Sequence, py: &SelfTable) -> Result<f64> {
        Ok(rntk_pair_prepared(&self.params, x, px, y, py, false)?.get(self.kind))
    }

    fn descriptor(&self) -> String {
        let kind = match self.kind {
            KernelKind::Theta => "rntk",
            KernelKind::Nngp => "nngp",
        };
        format!("{kind}({})", self.params.descriptor())
    }
}

/// A labelled kernel block `k(rows_i, cols_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramMatrix {
    #[serde(serialize_with = "serialize_rows")]
    pub values: DMatrix<f64>,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub descriptor: String,
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

fn ids(data: &[Sequence]) -> Vec<String> {
    data.iter()
        .enumerate()
        .map(|(i, s)| s.id.clone().unwrap_or_else(|| (i + 1).to_string()))
        .collect()
}

fn check_dataset(data: &[Sequence], what: &str) -> Result<usize> {
    let first = data
        .first()
        .ok_or_else(|| Error::Empty(format!("{what} dataset has no sequences")))?;
    for s in data {
        if s.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                left: first.dim(),
                right: s.dim(),
            });
        }
    }
    Ok(first.dim())
}

fn prepare_all<K: SequenceKernel>(kernel: &K, data: &[Sequence]) -> Result<Vec<K::Prepared>> {
    data.par_iter().map(|s| kernel.prepare(s)).collect()
}

/// Symmetric Gram matrix; each unordered pair is evaluated once.
pub fn gram_with<K: SequenceKernel>(kernel: &K, data: &[Sequence]) -> Result<GramMatrix> {
    check_dataset(data, "input")?;
    let prepared = prepare_all(kernel, data)?;
    let n = data.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| kernel.eval(&data[i], &prepared[i], &data[j], &prepared[j]))
        .collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    let ids = ids(data);
    Ok(GramMatrix {
        values: m,
        row_ids: ids.clone(),
        col_ids: ids,
        descriptor: kernel.descriptor(),
    })
}

/// Rectangular block `k(rows_i, cols_j)`, e.g. test against train.
pub fn cross_gram_with<K: SequenceKernel>(kernel: &K, rows: &[Sequence], cols: &[Sequence]) -> Result<GramMatrix> {
    let dr = check_dataset(rows, "row")?;
    let dc = check_dataset(cols, "column")?;
    if dr != dc {
        return Err(Error::DimensionMismatch { left: dr, right: dc });
    }
    let pr = prepare_all(kernel, rows)?;
    let pc = prepare_all(kernel, cols)?;
    let nc = cols.len();
    let values: Vec<f64> = (0..rows.len() * nc)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nc, k % nc);
            kernel.eval(&rows[i], &pr[i], &cols[j], &pc[j])
        })
        .collect::<Result<_>>()?;
    Ok(GramMatrix {
        values: DMatrix::from_row_slice(rows.len(), nc, &values),
        row_ids: ids(rows),
        col_ids: ids(cols),
        descriptor: kernel.descriptor(),
    })
}

/// RNTK or NNGP Gram matrix of a dataset.
pub fn gram(params: &RntkParams, data: &[Sequence], kind: KernelKind) -> Result<GramMatrix> {
    gram_with(&RntkKernel::new(params.clone(), kind), data)
}

impl GramMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.values.is_square()
    }

    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.values - self.values.transpose()).amax()
    }

    /// Smallest and largest eigenvalue of a square Gram matrix.
    pub fn eigen_range(&self) -> Result<(f64, f64)> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "eigenvalues need a square matrix, got {}x{}",
                self.nrows(),
                self.ncols()
            )));
        }
        let eig = self.values.clone().symmetric_eigenvalues();
        Ok((eig.min(), eig.max()))
    }

    /// CSV with a header of column ids and the row id in the first column.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string()];
        header.extend(self.col_ids.iter().cloned());
        out.write_record(&header).map_err(csv_err)?;
        for (i, row) in self.values.row_iter().enumerate() {
            let mut rec = vec![self.row_ids[i].clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Precomputed-kernel text format: `<label> 0:<row> 1:<k(x,x_1)> 2:<k(x,x_2)> ...`.
    /// Row indices are 1-based.
    pub fn write_precomputed<W: Write, L: Display>(&self, mut w: W, labels: &[L]) -> Result<()> {
        if labels.len() != self.nrows() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.nrows(),
            });
        }
        for (i, row) in self.values.row_iter().enumerate() {
            write!(w, "{} 0:{}", labels[i], i + 1)?;
            for (j, v) in row.iter().enumerate() {
                write!(w, " {}:{}", j + 1, v)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Shape(format!("{other:?}")),
    }
}
