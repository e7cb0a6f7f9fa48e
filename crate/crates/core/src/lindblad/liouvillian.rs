//! Superoperator assembly under column-stacking vectorization,
//! vec(ρ)[i + D j] = ρ_ij, optionally restricted to a subset of matrix
//! elements.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use sprs::CsMat;

use super::hilbert::{HilbertConfig, Label, GROUND};
use super::operator::Operator;
use crate::error::{Error, Result};

const ABSENT: u32 = u32::MAX;

/// The density-matrix elements (i, j) kept as unknowns, in column-stacking
/// order, each tagged with its coherence order k = imbalance(i) - imbalance(j).
#[derive(Debug, Clone)]
pub struct Selection {
    dim: usize,
    pairs: Vec<(u32, u32)>,
    sector: Vec<i32>,
    lookup: Vec<u32>,
}

impl Selection {
    /// Keep the elements (i, j) for which `keep(label_i, label_j)` holds.
    pub fn filtered(h: &HilbertConfig, keep: impl Fn(&Label, &Label) -> bool) -> Result<Self> {
        let dim = h.dim();
        if dim.checked_mul(dim).is_none_or(|d2| d2 >= ABSENT as usize) {
            return Err(Error::Domain(format!("dimension {dim} too large to vectorize")));
        }
        let labels: Vec<Label> = h.labels().collect();
        let mut pairs = Vec::new();
        let mut sector = Vec::new();
        let mut lookup = vec![ABSENT; dim * dim];
        for j in 0..dim {
            for i in 0..dim {
                if keep(&labels[i], &labels[j]) {
                    lookup[i + dim * j] = pairs.len() as u32;
                    pairs.push((i as u32, j as u32));
                    sector.push((labels[i].imbalance() - labels[j].imbalance()) as i32);
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::Domain("selection keeps no matrix elements".into()));
        }
        Ok(Self { dim, pairs, sector, lookup })
    }

    /// Every element: the plain D²-dimensional vectorization.
    pub fn full(h: &HilbertConfig) -> Result<Self> {
        Self::filtered(h, |_, _| true)
    }

    /// Every element of a space without mode structure; all in sector 0.
    pub fn all(dim: usize) -> Result<Self> {
        if dim == 0 || dim.checked_mul(dim).is_none_or(|d2| d2 >= ABSENT as usize) {
            return Err(Error::Domain(format!("cannot vectorize dimension {dim}")));
        }
        let pairs: Vec<(u32, u32)> =
            (0..dim).flat_map(|j| (0..dim).map(move |i| (i as u32, j as u32))).collect();
        let lookup = (0..(dim * dim) as u32).collect();
        Ok(Self { dim, sector: vec![0; pairs.len()], pairs, lookup })
    }

    /// Elements with equal excitation parity and coherence order |k| <= kmax.
    ///
    /// Parity is a symmetry of the full model, so the parity restriction is
    /// exact. The qubit-cavity exchange changes k by one, and coherences of
    /// order k are suppressed roughly as (g sqrt(n)/J)^|k|, so the cutoff
    /// is a controlled truncation.
    pub fn coherence_window(h: &HilbertConfig, kmax: usize) -> Result<Self> {
        Self::filtered(h, |a, b| {
            a.parity() == b.parity() && (a.imbalance() - b.imbalance()).unsigned_abs() as usize <= kmax
        })
    }

    /// The qubit-ground block with k = 0, an exact invariant subspace of
    /// the dispersive model.
    pub fn qubit_ground(h: &HilbertConfig) -> Result<Self> {
        Self::filtered(h, |a, b| a.qubit == GROUND && b.qubit == GROUND && a.imbalance() == b.imbalance())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, p: usize) -> (usize, usize) {
        let (i, j) = self.pairs[p];
        (i as usize, j as usize)
    }

    pub fn sector(&self, p: usize) -> i32 {
        self.sector[p]
    }

    pub fn sectors(&self) -> &[i32] {
        &self.sector
    }

    /// Position of element (i, j) among the unknowns.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        match self.lookup[i + self.dim * j] {
            ABSENT => None,
            p => Some(p as usize),
        }
    }

    /// Positions of the diagonal elements that are kept.
    pub fn diagonal(&self) -> Vec<usize> {
        (0..self.dim).filter_map(|i| self.position(i, i)).collect()
    }
}

/// A dissipator rate·D[op] with the anticommutator operator op†op.
#[derive(Debug, Clone)]
pub struct Dissipator {
    pub rate: f64,
    pub op: Operator,
    pub number: Operator,
}

impl Dissipator {
    pub fn new(rate: f64, op: Operator) -> Self {
        let number = &op.adjoint() * &op;
        Self { rate, op, number }
    }
}

/// Generator of ρ̇ = −i[H, ρ] + Σ rate (L ρ L† − ½{L†L, ρ}) on the
/// unknowns of a [`Selection`].
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub selection: Arc<Selection>,
    pub matrix: CsMat<C64>,
}

impl Liouvillian {
    pub fn len(&self) -> usize {
        self.selection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selection.is_empty()
    }

    /// y = L x
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        csr_apply(&self.matrix, x, y);
    }

    /// Sum of the rows belonging to diagonal elements, i.e. the vectorized
    /// trace functional applied to L. Vanishes for trace-preserving models.
    pub fn trace_row_norm(&self) -> f64 {
        let mut acc = vec![C64::default(); self.len()];
        for p in self.selection.diagonal() {
            let r = self.matrix.indptr().outer_inds_sz(p);
            for (&c, &v) in self.matrix.indices()[r.clone()].iter().zip(&self.matrix.data()[r]) {
                acc[c] += v;
            }
        }
        acc.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub(crate) fn csr_apply(m: &CsMat<C64>, x: &[C64], y: &mut [C64]) {
    let ip = m.indptr();
    let idx = m.indices();
    let val = m.data();
    for (row, out) in y.iter_mut().enumerate() {
        let r = ip.outer_inds_sz(row);
        let mut s = C64::default();
        for (&c, &v) in idx[r.clone()].iter().zip(&val[r]) {
            s += v * x[c];
        }
        *out = s;
    }
}

/// Build the Liouvillian restricted to `selection`.
pub fn liouvillian_on(h: &Operator, dissipators: &[Dissipator], selection: Arc<Selection>) -> Result<Liouvillian> {
    let d = selection.dim();
    if h.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: h.dim() });
    }
    for dis in dissipators {
        if dis.op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: dis.op.dim() });
        }
    }
    // effective non-Hermitian generator H − (i/2) Σ rate L†L
    let mut heff = h.clone();
    for dis in dissipators {
        heff = &heff + &dis.number.scale(C64::new(0.0, -0.5 * dis.rate));
    }
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);

    let n = selection.len();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut data = Vec::new();
    let mut row: Vec<(usize, C64)> = Vec::new();
    indptr.push(0);
    for p in 0..n {
        let (i, j) = selection.pair(p);
        row.clear();
        // −i (Heff ρ)_ij = −i Σ_k Heff_ik ρ_kj
        for (k, v) in heff.row(i) {
            if let Some(q) = selection.position(k, j) {
                row.push((q, minus_i * v));
            }
        }
        // +i (ρ Heff†)_ij = +i Σ_k ρ_ik conj(Heff_jk)
        for (k, v) in heff.row(j) {
            if let Some(q) = selection.position(i, k) {
                row.push((q, plus_i * v.conj()));
            }
        }
        // rate (L ρ L†)_ij = rate Σ_kl L_ik ρ_kl conj(L_jl)
        for dis in dissipators {
            for (k, a) in dis.op.row(i) {
                for (l, b) in dis.op.row(j) {
                    if let Some(q) = selection.position(k, l) {
                        row.push((q, a * b.conj() * dis.rate));
                    }
                }
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        let mut last = usize::MAX;
        for &(q, v) in &row {
            if q == last {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(q);
                data.push(v);
                last = q;
            }
        }
        indptr.push(indices.len());
    }
    let matrix = CsMat::new((n, n), indptr, indices, data);
    Ok(Liouvillian { selection, matrix })
}

/// Full D²×D² Liouvillian for H and a list of (rate, jump operator).
pub fn liouvillian(h: &Operator, collapse: &[(f64, Operator)]) -> Result<Liouvillian> {
    let dis: Vec<Dissipator> = collapse.iter().map(|(r, op)| Dissipator::new(*r, op.clone())).collect();
    liouvillian_on(h, &dis, Arc::new(Selection::all(h.dim())?))
}
