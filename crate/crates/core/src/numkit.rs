//! Dense/CSR linear-algebra kernels shared by the solvers.
//!
//! Everything here works on plain `f64` slices. The two structures that carry
//! state across iterations are [`ArgmaxTracker`], which answers "largest
//! `|r_j|`" queries without a full scan, and [`ScaledVector`], which stores an
//! iterate as `scale * v` so that a convex-combination update toward a sparse
//! vertex costs O(support) instead of O(d).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major, `n * d` values.
    Dense(Vec<f64>),
    Csr {
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

/// The `n x d` data matrix. Read-only after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    d: usize,
    storage: Storage,
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::usage(format!("non-finite matrix entry at storage position {k}"))),
        None => Ok(()),
    }
}

impl DesignMatrix {
    /// Dense matrix from row-major values.
    pub fn dense(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::usage(format!(
                "dense storage has {} values, expected {n}x{d}",
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self { n, d, storage: Storage::Dense(values) })
    }

    /// CSR matrix. Column indices must be strictly increasing within each row
    /// and explicit zeros are rejected.
    pub fn csr(
        n: usize,
        d: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if offsets.len() != n + 1 {
            return Err(Error::usage(format!("row_offsets has {} entries, expected {}", offsets.len(), n + 1)));
        }
        if offsets[0] != 0 || offsets[n] != indices.len() || indices.len() != values.len() {
            return Err(Error::usage("row_offsets must start at 0 and end at nnz"));
        }
        for i in 0..n {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            if lo > hi {
                return Err(Error::usage(format!("row_offsets decrease at row {i}")));
            }
            let row = &indices[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::usage(format!("column indices of row {i} are not strictly increasing")));
            }
            if let Some(&j) = row.last() {
                if j >= d {
                    return Err(Error::usage(format!("column index {j} out of range in row {i} (d = {d})")));
                }
            }
        }
        check_finite(&values)?;
        if let Some(k) = values.iter().position(|&v| v == 0.0) {
            return Err(Error::usage(format!("explicit zero stored at position {k}")));
        }
        Ok(Self { n, d, storage: Storage::Csr { offsets, indices, values } })
    }

    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::usage("ragged rows"));
        }
        Self::dense(n, d, rows.concat())
    }

    /// CSR matrix from per-row `(column, value)` lists; zeros are dropped.
    pub fn from_sparse_rows(d: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in rows {
            for &(j, v) in row {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Self::csr(rows.len(), d, offsets, indices, values)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Csr { .. })
    }

    /// Number of stored entries (`n * d` for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Csr { values, .. } => values.len(),
        }
    }

    pub fn to_dense(&self) -> Self {
        let mut out = vec![0.0; self.n * self.d];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[i * self.d + j] = v;
            }
        }
        Self { n: self.n, d: self.d, storage: Storage::Dense(out) }
    }

    pub fn to_csr(&self) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = (0..self.n).map(|i| self.row(i).collect()).collect();
        // Entries already validated, zeros dropped by from_sparse_rows.
        Self::from_sparse_rows(self.d, &rows).expect("valid matrix converts to CSR")
    }

    /// Entry `(i, j)`; binary search on CSR rows.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.d, "index ({i}, {j}) out of range");
        match &self.storage {
            Storage::Dense(v) => v[i * self.d + j],
            Storage::Csr { offsets, indices, values } => {
                let (lo, hi) = (offsets[i], offsets[i + 1]);
                match indices[lo..hi].binary_search(&j) {
                    Ok(k) => values[lo + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Iterates the stored entries of row `i` as `(column, value)`.
    /// Dense rows yield every column, zeros included.
    pub fn row(&self, i: usize) -> RowIter<'_> {
        assert!(i < self.n, "row {i} out of range (n = {})", self.n);
        match &self.storage {
            Storage::Dense(v) => RowIter::Dense(v[i * self.d..(i + 1) * self.d].iter().enumerate()),
            Storage::Csr { offsets, indices, values } => {
                let (lo, hi) = (offsets[i], offsets[i + 1]);
                RowIter::Sparse(indices[lo..hi].iter().zip(&values[lo..hi]))
            }
        }
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::usage(format!("row index {i} out of range (n = {})", self.n)));
        }
        Ok(())
    }

    fn check_len(&self, what: &str, len: usize, want: usize) -> Result<()> {
        if len != want {
            return Err(Error::usage(format!("{what} has length {len}, expected {want}")));
        }
        Ok(())
    }

    /// `x_i^T w`, touching only the row's stored entries.
    pub fn row_dot(&self, i: usize, w: &[f64]) -> Result<f64> {
        self.check_row(i)?;
        self.check_len("w", w.len(), self.d)?;
        Ok(self.row_dot_raw(i, w))
    }

    pub(crate) fn row_dot_raw(&self, i: usize, w: &[f64]) -> f64 {
        self.row(i).map(|(j, v)| v * w[j]).sum()
    }

    /// `x_i^T s` where `s` is given by its support, sorted by column.
    pub(crate) fn row_dot_support(&self, i: usize, support: &[(usize, f64)]) -> f64 {
        if support.len() <= 4 {
            return support.iter().map(|&(j, v)| self.get(i, j) * v).sum();
        }
        // merge-join of two sorted index lists
        let mut acc = 0.0;
        let mut it = support.iter().peekable();
        for (j, x) in self.row(i) {
            while let Some(&&(k, _)) = it.peek() {
                if k < j {
                    it.next();
                } else {
                    break;
                }
            }
            if let Some(&&(k, v)) = it.peek() {
                if k == j {
                    acc += x * v;
                }
            }
        }
        acc
    }

    /// `r[j] += c * X[i, j]` over the row support. The tracker, when given,
    /// is kept in sync with `r`.
    pub fn scatter_axpy(
        &self,
        r: &mut [f64],
        c: f64,
        i: usize,
        tracker: Option<&mut ArgmaxTracker>,
    ) -> Result<()> {
        self.check_row(i)?;
        self.check_len("r", r.len(), self.d)?;
        if let Some(t) = tracker.as_ref() {
            self.check_len("tracker", t.len(), self.d)?;
        }
        self.scatter_axpy_raw(r, c, i, tracker);
        Ok(())
    }

    pub(crate) fn scatter_axpy_raw(
        &self,
        r: &mut [f64],
        c: f64,
        i: usize,
        mut tracker: Option<&mut ArgmaxTracker>,
    ) {
        if c == 0.0 {
            return;
        }
        for (j, v) in self.row(i) {
            r[j] += c * v;
            if let Some(t) = tracker.as_deref_mut() {
                t.update(j, r[j]);
            }
        }
    }

    /// `X w`.
    pub fn mul_vec(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_len("w", w.len(), self.d)?;
        Ok((0..self.n).map(|i| self.row_dot_raw(i, w)).collect())
    }

    /// `X^T a`.
    pub fn tmul_vec(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_len("alpha", a.len(), self.n)?;
        let mut out = vec![0.0; self.d];
        for (i, &ai) in a.iter().enumerate() {
            self.scatter_axpy_raw(&mut out, ai, i, None);
        }
        Ok(out)
    }

    /// Column norms `||X e_j||_p` for every column.
    pub fn column_norms(&self, p: crate::constraints::Norm) -> Vec<f64> {
        use crate::constraints::Norm;
        let mut acc = vec![0.0f64; self.d];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                match p {
                    Norm::L1 => acc[j] += v.abs(),
                    Norm::L2 => acc[j] += v * v,
                    Norm::Linf => acc[j] = acc[j].max(v.abs()),
                }
            }
        }
        if p == Norm::L2 {
            acc.iter_mut().for_each(|a| *a = a.sqrt());
        }
        acc
    }

    /// `max_ij |X_ij|`.
    pub fn max_abs(&self) -> f64 {
        let vals = match &self.storage {
            Storage::Dense(v) => v,
            Storage::Csr { values, .. } => values,
        };
        vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Iterator over one row's stored entries.
pub enum RowIter<'a> {
    Dense(std::iter::Enumerate<std::slice::Iter<'a, f64>>),
    Sparse(std::iter::Zip<std::slice::Iter<'a, usize>, std::slice::Iter<'a, f64>>),
}

impl Iterator for RowIter<'_> {
    type Item = (usize, f64);

    #[inline]
    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowIter::Dense(it) => it.next().map(|(j, &v)| (j, v)),
            RowIter::Sparse(it) => it.next().map(|(&j, &v)| (j, v)),
        }
    }
}

/// Smallest index maximizing `|r_j|`, with the signed value found there.
pub fn argmax_abs(r: &[f64]) -> Result<(usize, f64)> {
    if r.is_empty() {
        return Err(Error::usage("argmax of an empty vector"));
    }
    let mut best = 0;
    for (j, v) in r.iter().enumerate().skip(1) {
        if v.abs() > r[best].abs() {
            best = j;
        }
    }
    Ok((best, r[best]))
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    mag: f64,
    idx: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // Max-heap on magnitude; among equal magnitudes the smaller index wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.mag.total_cmp(&other.mag).then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Max-|value| index over a vector that changes a few coordinates at a time.
///
/// Updates push a fresh heap entry; entries whose magnitude no longer matches
/// the stored value are discarded lazily at query time. The heap is rebuilt
/// once it holds a few times more entries than coordinates, so both updates
/// and queries are amortized O(log d).
#[derive(Debug, Clone)]
pub struct ArgmaxTracker {
    values: Vec<f64>,
    heap: BinaryHeap<HeapEntry>,
}

impl ArgmaxTracker {
    pub fn new(values: &[f64]) -> Self {
        let mut t = Self { values: values.to_vec(), heap: BinaryHeap::new() };
        t.rebuild();
        t
    }

    fn rebuild(&mut self) {
        let entries: Vec<HeapEntry> = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| HeapEntry { mag: v.abs(), idx })
            .collect();
        self.heap = BinaryHeap::from(entries);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sets coordinate `j` to `value`.
    pub fn update(&mut self, j: usize, value: f64) {
        if self.values[j].to_bits() == value.to_bits() {
            return;
        }
        self.values[j] = value;
        self.heap.push(HeapEntry { mag: value.abs(), idx: j });
        if self.heap.len() > 4 * self.values.len() + 64 {
            self.rebuild();
        }
    }

    /// Smallest index maximizing `|value|`, and the signed value there.
    pub fn query(&mut self) -> Result<(usize, f64)> {
        while let Some(top) = self.heap.peek() {
            let current = self.values[top.idx];
            if current.abs().to_bits() == top.mag.to_bits() {
                return Ok((top.idx, current));
            }
            self.heap.pop();
        }
        Err(Error::usage("argmax of an empty tracker"))
    }
}

/// A vector stored as `scale * raw`.
///
/// `w <- (1 - g) w + g s` becomes `scale <- (1 - g) scale` plus a raw update on
/// the support of `s`. The raw part is folded back into the scale before it can
/// underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledVector {
    scale: f64,
    raw: Vec<f64>,
}

const RESCALE_BELOW: f64 = 1e-100;

impl ScaledVector {
    pub fn from_dense(values: Vec<f64>) -> Self {
        Self { scale: 1.0, raw: values }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn get(&self, j: usize) -> f64 {
        self.scale * self.raw[j]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.raw.iter().map(|v| self.scale * v).collect()
    }

    /// Multiplies the vector by `factor` in O(1) (amortized). Returns the
    /// factor applied to `raw` when the representation had to be folded.
    pub(crate) fn shrink(&mut self, factor: f64) -> Option<f64> {
        if factor == 0.0 {
            self.raw.iter_mut().for_each(|v| *v = 0.0);
            self.scale = 1.0;
            return Some(0.0);
        }
        self.scale *= factor;
        if self.scale.abs() < RESCALE_BELOW {
            let s = self.scale;
            self.raw.iter_mut().for_each(|v| *v *= s);
            self.scale = 1.0;
            return Some(s);
        }
        None
    }

    /// Adds `delta` to the true coordinate `j`; returns the change applied to `raw[j]`.
    pub(crate) fn add(&mut self, j: usize, delta: f64) -> f64 {
        let raw_delta = delta / self.scale;
        self.raw[j] += raw_delta;
        raw_delta
    }
}
