//! Exact rational linear algebra over labeled monomial bases.
//!
//! Matrices are stored column-sparse: column `j` is the image of the `j`-th
//! basis vector of the source. Elimination is incremental and produces
//! reduced row-echelon data with leftmost pivots, so every normal form below
//! is unique for a fixed column order.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::Q;

pub type SparseVec = BTreeMap<usize, Q>;

fn axpy(y: &mut SparseVec, a: &Q, x: &SparseVec) {
    if a.is_zero() {
        return;
    }
    for (&i, xi) in x {
        let e = y.entry(i).or_insert_with(Q::zero);
        *e += a * xi;
        if e.is_zero() {
            y.remove(&i);
        }
    }
}

fn scale(x: &SparseVec, a: &Q) -> SparseVec {
    x.iter().map(|(&i, v)| (i, v * a)).collect()
}

pub fn dense_to_sparse(v: &[Q]) -> SparseVec {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

pub fn sparse_to_dense(v: &SparseVec, dim: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); dim];
    for (&i, x) in v {
        out[i] = x.clone();
    }
    out
}

/// An exact rational matrix, stored by sparse columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    nrows: usize,
    cols: Vec<SparseVec>,
}

impl RationalMatrix {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        RationalMatrix { nrows, cols: vec![SparseVec::new(); ncols] }
    }

    pub fn from_columns(nrows: usize, cols: Vec<SparseVec>) -> Self {
        debug_assert!(cols.iter().all(|c| c.keys().all(|&i| i < nrows)));
        RationalMatrix { nrows, cols }
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut cols = vec![SparseVec::new(); ncols];
        for (i, r) in rows.iter().enumerate() {
            for (j, x) in r.iter().enumerate() {
                if !x.is_zero() {
                    cols[j].insert(i, x.clone());
                }
            }
        }
        RationalMatrix { nrows, cols }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let rows: Vec<Vec<Q>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| crate::poly::q(x)).collect())
            .collect();
        let mut m = RationalMatrix::from_rows(&rows);
        if rows.is_empty() {
            m.nrows = 0;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        RationalMatrix {
            nrows: n,
            cols: (0..n).map(|i| SparseVec::from([(i, Q::one())])).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &SparseVec {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[SparseVec] {
        &self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(BTreeMap::is_empty)
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&j, x) in v {
            axpy(&mut out, x, &self.cols[j]);
        }
        out
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &RationalMatrix) -> Result<RationalMatrix> {
        if self.ncols() != rhs.nrows {
            return Err(Error::Dimension(format!(
                "cannot compose {}x{} with {}x{}",
                self.nrows,
                self.ncols(),
                rhs.nrows,
                rhs.ncols()
            )));
        }
        Ok(RationalMatrix {
            nrows: self.nrows,
            cols: rhs.cols.iter().map(|c| self.apply(c)).collect(),
        })
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.nrows);
        self.cols.iter().filter(|c| e.insert(c)).count()
    }

    /// Image as an echelon basis of the column space.
    pub fn image(&self) -> Echelon {
        let mut e = Echelon::new(self.nrows);
        for c in &self.cols {
            e.insert(c);
        }
        e
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<Q>> {
        let mut rows = vec![vec![Q::zero(); self.ncols()]; self.nrows];
        for (j, c) in self.cols.iter().enumerate() {
            for (&i, x) in c {
                rows[i][j] = x.clone();
            }
        }
        rows
    }

    /// Labeled sparse triplets `row col value`, one per line.
    pub fn dump_triplets(&self) -> String {
        let mut s = format!("# {}x{}\n", self.nrows, self.ncols());
        for (j, c) in self.cols.iter().enumerate() {
            for (&i, x) in c {
                s.push_str(&format!("{i} {j} {x}\n"));
            }
        }
        s
    }
}

/// A subspace in reduced row-echelon form: one row per pivot column, each
/// pivot entry equal to one and absent from every other row.
#[derive(Debug, Clone, PartialEq)]
pub struct Echelon {
    dim: usize,
    rows: BTreeMap<usize, SparseVec>,
}

impl Echelon {
    pub fn new(dim: usize) -> Self {
        Echelon { dim, rows: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    /// Normal form of `v` modulo the subspace.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut out = v.clone();
        for (p, row) in &self.rows {
            if let Some(c) = out.get(p).cloned() {
                axpy(&mut out, &-c, row);
            }
        }
        out
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_empty()
    }

    /// Adds `v` to the spanning set; returns whether the rank grew.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        let r = self.reduce(v);
        let Some((&p, lead)) = r.iter().next() else {
            return false;
        };
        let r = scale(&r, &(Q::one() / lead));
        for row in self.rows.values_mut() {
            if let Some(c) = row.get(&p).cloned() {
                axpy(row, &-c, &r);
            }
        }
        self.rows.insert(p, r);
        true
    }

    /// The echelon rows, ordered by pivot.
    pub fn basis(&self) -> Vec<SparseVec> {
        self.rows.values().cloned().collect()
    }
}

/// Linearly independent vectors with echelon-normalized representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub dim: usize,
    pub vectors: Vec<SparseVec>,
}

impl SubspaceBasis {
    pub fn from_echelon(e: &Echelon) -> Self {
        SubspaceBasis { dim: e.dim(), vectors: e.basis() }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn echelon(&self) -> Echelon {
        let mut e = Echelon::new(self.dim);
        for v in &self.vectors {
            e.insert(v);
        }
        e
    }
}

/// Echelon-normalized basis of `ker m`. Kernel dimension plus rank equals
/// the column count.
pub fn kernel_basis(m: &RationalMatrix) -> SubspaceBasis {
    // Column elimination, tracking each reduced column as a combination of
    // the original ones; a column that reduces to zero yields a kernel vector.
    let mut pivots: BTreeMap<usize, (SparseVec, SparseVec)> = BTreeMap::new();
    let mut kernel = Echelon::new(m.ncols());
    for (j, col) in m.cols.iter().enumerate() {
        let mut v = col.clone();
        let mut combo = SparseVec::from([(j, Q::one())]);
        loop {
            let Some((&p, c)) = v.iter().next() else { break };
            match pivots.get(&p) {
                Some((pv, pc)) => {
                    let c = -c.clone();
                    axpy(&mut v, &c, pv);
                    axpy(&mut combo, &c, pc);
                }
                None => break,
            }
        }
        match v.iter().next() {
            None => {
                kernel.insert(&combo);
            }
            Some((&p, lead)) => {
                let inv = Q::one() / lead;
                pivots.insert(p, (scale(&v, &inv), scale(&combo, &inv)));
            }
        }
    }
    SubspaceBasis::from_echelon(&kernel)
}

/// Coefficients `c` with `v = Σ c_i b_i`, or `None` if `v ∉ span(B)`.
pub fn membership(v: &SparseVec, basis: &SubspaceBasis) -> Result<Option<Vec<Q>>> {
    if v.keys().any(|&i| i >= basis.dim) {
        return Err(Error::Dimension(format!("vector exceeds dimension {}", basis.dim)));
    }
    let mut pivots: BTreeMap<usize, (SparseVec, SparseVec)> = BTreeMap::new();
    for (j, b) in basis.vectors.iter().enumerate() {
        let mut w = b.clone();
        let mut combo = SparseVec::from([(j, Q::one())]);
        reduce_tracked(&pivots, &mut w, &mut combo);
        let Some((&p, lead)) = w.iter().next() else {
            return Err(Error::invalid("basis vectors are linearly dependent"));
        };
        let inv = Q::one() / lead;
        pivots.insert(p, (scale(&w, &inv), scale(&combo, &inv)));
    }
    let mut w = v.clone();
    let mut combo = SparseVec::new();
    reduce_tracked(&pivots, &mut w, &mut combo);
    if !w.is_empty() {
        return Ok(None);
    }
    let n = basis.vectors.len();
    let mut coeffs = vec![Q::zero(); n];
    for (i, c) in combo {
        coeffs[i] = -c;
    }
    Ok(Some(coeffs))
}

fn reduce_tracked(
    pivots: &BTreeMap<usize, (SparseVec, SparseVec)>,
    v: &mut SparseVec,
    combo: &mut SparseVec,
) {
    // Pivot rows are only forward-reduced, so sweep in increasing column order.
    loop {
        let next = v.iter().find(|(p, _)| pivots.contains_key(p)).map(|(&p, c)| (p, c.clone()));
        let Some((p, c)) = next else { break };
        let (pv, pc) = &pivots[&p];
        axpy(v, &-c.clone(), pv);
        axpy(combo, &-c, pc);
    }
}

/// Cohomology of `· --d_in--> V --d_out--> ·` at `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohomology {
    pub dimension: usize,
    /// Echelon-normalized coset representatives of `ker d_out / im d_in`.
    pub representatives: SubspaceBasis,
    pub image: Echelon,
    pub kernel: SubspaceBasis,
}

pub fn cohomology(d_in: &RationalMatrix, d_out: &RationalMatrix) -> Result<Cohomology> {
    if d_in.nrows() != d_out.ncols() {
        return Err(Error::Dimension(format!(
            "incoming map lands in dimension {}, outgoing map starts at {}",
            d_in.nrows(),
            d_out.ncols()
        )));
    }
    let comp = d_out.compose(d_in)?;
    if !comp.is_zero() {
        return Err(Error::NonComplex(
            "outgoing map composed with incoming map is nonzero".into(),
        ));
    }
    let kernel = kernel_basis(d_out);
    let image = d_in.image();
    let mut reps = Echelon::new(d_out.ncols());
    for v in &kernel.vectors {
        reps.insert(&image.reduce(v));
    }
    Ok(Cohomology {
        dimension: kernel.len() - image.rank(),
        representatives: SubspaceBasis::from_echelon(&reps),
        image,
        kernel,
    })
}
