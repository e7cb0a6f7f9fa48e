//! Steady states of a [`Liouvillian`]: one trace row replaces a balance
//! equation, and the resulting nonsingular system is solved directly, by
//! preconditioned GMRES, or by implicit time stepping.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sprs::CsMat;

use super::liouvillian::{csr_apply, Liouvillian};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Gmres,
    TimeEvolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Forced method; `None` picks direct below `direct_max` unknowns and
    /// GMRES above, with time evolution as the fallback.
    pub method: Option<Method>,
    pub direct_max: usize,
    /// Relative residual target of the linear solves.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Diagonal shift that makes the singular sector of the preconditioner
    /// invertible.
    pub shift: f64,
    /// Required ‖Lρ‖ of the result.
    pub residual_tol: f64,
    /// Starting state for time evolution, in selection order.
    pub initial: Option<Vec<C64>>,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: None,
            direct_max: 500,
            tol: 1e-13,
            restart: 80,
            max_iter: 4000,
            shift: 1e-2,
            residual_tol: 1e-8,
            initial: None,
            max_steps: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho: DensityMatrix,
    /// ‖Lρ‖₂ over the selected unknowns, in units of the rates of L.
    pub residual: f64,
    pub method: Method,
    pub iterations: usize,
    pub unknowns: usize,
}

/// Steady state with default options.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyStateResult> {
    steady_state_with(l, &SolverOptions::default())
}

pub fn steady_state_with(l: &Liouvillian, opts: &SolverOptions) -> Result<SteadyStateResult> {
    let n = l.len();
    let diag = l.selection.diagonal();
    if diag.is_empty() {
        return Err(Error::Domain("selection keeps no diagonal elements".into()));
    }
    let method = opts.method.unwrap_or(if n <= opts.direct_max { Method::Direct } else { Method::Gmres });
    let attempt = match method {
        Method::Direct => solve_direct(l, &diag),
        Method::Gmres => solve_gmres(l, &diag, opts),
        Method::TimeEvolution => evolve(l, &diag, opts),
    };
    let (x, iterations, method) = match attempt {
        Ok(v) => (v.0, v.1, method),
        Err(e @ Error::NonUniqueNullspace(_)) => return Err(e),
        Err(_) if opts.method.is_none() => {
            let (x, it) = evolve(l, &diag, opts)?;
            (x, it, Method::TimeEvolution)
        }
        Err(e) => return Err(e),
    };
    finish(l, x, &diag, iterations, method, opts)
}

fn finish(
    l: &Liouvillian,
    mut x: Vec<C64>,
    diag: &[usize],
    iterations: usize,
    method: Method,
    opts: &SolverOptions,
) -> Result<SteadyStateResult> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonUniqueNullspace("steady-state solve produced non-finite values".into()));
    }
    let tr: C64 = diag.iter().map(|&p| x[p]).sum();
    if tr.norm() < 1e-300 {
        return Err(Error::NonUniqueNullspace("steady state has zero trace".into()));
    }
    x.iter_mut().for_each(|v| *v /= tr);
    let residual = residual_norm(&l.matrix, &x);
    if residual >= opts.residual_tol {
        return Err(Error::NoConvergence(format!(
            "steady-state residual {residual:.3e} exceeds {:.1e} ({method:?})",
            opts.residual_tol
        )));
    }
    let rho = DensityMatrix::from_selection(&l.selection, &x)?;
    Ok(SteadyStateResult { rho, residual, method, iterations, unknowns: l.len() })
}

fn residual_norm(m: &CsMat<C64>, x: &[C64]) -> f64 {
    let mut y = vec![C64::default(); x.len()];
    csr_apply(m, x, &mut y);
    norm(&y)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// L with row `p0` (a diagonal element) replaced by the trace functional.
fn trace_replaced(l: &Liouvillian, diag: &[usize], p0: usize) -> CsMat<C64> {
    let m = &l.matrix;
    let mut cols: Vec<usize> = diag.to_vec();
    cols.sort_unstable();
    let n = l.len();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(m.nnz() + cols.len());
    let mut data = Vec::with_capacity(m.nnz() + cols.len());
    indptr.push(0);
    for row in 0..n {
        if row == p0 {
            indices.extend_from_slice(&cols);
            data.extend(cols.iter().map(|_| C64::new(1.0, 0.0)));
        } else {
            let r = m.indptr().outer_inds_sz(row);
            indices.extend_from_slice(&m.indices()[r.clone()]);
            data.extend_from_slice(&m.data()[r]);
        }
        indptr.push(indices.len());
    }
    CsMat::new((n, n), indptr, indices, data)
}

fn unit_rhs(n: usize, p0: usize) -> Vec<C64> {
    let mut b = vec![C64::default(); n];
    b[p0] = C64::new(1.0, 0.0);
    b
}

fn lu_of(n: usize, trips: &[Triplet<usize, usize, C64>]) -> Result<Lu<usize, C64>> {
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, trips)
        .map_err(|e| Error::Domain(format!("sparse assembly failed: {e:?}")))?;
    a.sp_lu().map_err(|e| Error::NonUniqueNullspace(format!("LU factorization failed: {e:?}")))
}

fn solve_in_place(lu: &Lu<usize, C64>, v: &mut [C64]) {
    let n = v.len();
    lu.solve_in_place(MatMut::from_column_major_slice_mut(v, n, 1));
}

fn direct_with_row(l: &Liouvillian, diag: &[usize], p0: usize) -> Result<Vec<C64>> {
    let a = trace_replaced(l, diag, p0);
    let n = l.len();
    let mut trips = Vec::with_capacity(a.nnz());
    for (v, (r, c)) in a.iter() {
        trips.push(Triplet::new(r, c, *v));
    }
    let lu = lu_of(n, &trips)?;
    let mut x = unit_rhs(n, p0);
    solve_in_place(&lu, &mut x);
    // a singular system shows up as a huge or non-finite solution
    let scale = norm(&x);
    if !scale.is_finite() || scale > 1e12 {
        return Err(Error::NonUniqueNullspace(format!(
            "trace-constrained system is singular (solution norm {scale:.3e})"
        )));
    }
    Ok(x)
}

fn solve_direct(l: &Liouvillian, diag: &[usize]) -> Result<(Vec<C64>, usize)> {
    let x = direct_with_row(l, diag, diag[0])?;
    // a degenerate nullspace can still factor to a finite solution; moving
    // the trace row then changes the answer
    if let Some(&other) = diag.last().filter(|&&p| p != diag[0]) {
        let y = direct_with_row(l, diag, other)?;
        let diff: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        if diff > 1e-6 * norm(&x) {
            return Err(Error::NonUniqueNullspace(format!(
                "solution depends on the constrained row (relative change {:.3e})",
                diff / norm(&x)
            )));
        }
    }
    Ok((x, 1))
}

/// Block-Jacobi preconditioner over the coherence sectors of the selection.
struct BlockJacobi {
    blocks: Vec<(Vec<usize>, Lu<usize, C64>)>,
}

impl BlockJacobi {
    /// Factor the sector-diagonal blocks of `a`; rows of sector 0 other than
    /// `keep` get `shift` subtracted on the diagonal.
    fn new(a: &CsMat<C64>, sectors: &[i32], shift: f64, keep: Option<usize>) -> Result<Self> {
        let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (p, &s) in sectors.iter().enumerate() {
            groups.entry(s).or_default().push(p);
        }
        let mut local = vec![usize::MAX; sectors.len()];
        let mut blocks = Vec::with_capacity(groups.len());
        for (s, ix) in groups {
            for (k, &p) in ix.iter().enumerate() {
                local[p] = k;
            }
            let mut trips = Vec::new();
            for (k, &p) in ix.iter().enumerate() {
                let r = a.indptr().outer_inds_sz(p);
                for (&c, &v) in a.indices()[r.clone()].iter().zip(&a.data()[r]) {
                    if sectors[c] == s {
                        trips.push(Triplet::new(k, local[c], v));
                    }
                }
                if s == 0 && keep != Some(p) && shift != 0.0 {
                    trips.push(Triplet::new(k, k, C64::new(-shift, 0.0)));
                }
            }
            let lu = lu_of(ix.len(), &trips)?;
            blocks.push((ix, lu));
        }
        Ok(Self { blocks })
    }

    fn apply(&self, v: &[C64], out: &mut [C64]) {
        let mut buf = Vec::new();
        for (ix, lu) in &self.blocks {
            buf.clear();
            buf.extend(ix.iter().map(|&p| v[p]));
            solve_in_place(lu, &mut buf);
            for (&p, &y) in ix.iter().zip(&buf) {
                out[p] = y;
            }
        }
    }
}

fn solve_gmres(l: &Liouvillian, diag: &[usize], opts: &SolverOptions) -> Result<(Vec<C64>, usize)> {
    let a = trace_replaced(l, diag, diag[0]);
    let pre = BlockJacobi::new(&a, l.selection.sectors(), opts.shift, Some(diag[0]))?;
    let b = unit_rhs(l.len(), diag[0]);
    let x0 = vec![C64::default(); l.len()];
    let out = gmres(
        |x, y| csr_apply(&a, x, y),
        |x, y| pre.apply(x, y),
        &b,
        x0,
        opts.tol,
        opts.restart,
        opts.max_iter,
    );
    if !out.converged {
        return Err(Error::NoConvergence(format!(
            "GMRES reached {} iterations at relative residual {:.3e}",
            out.iterations, out.relative_residual
        )));
    }
    Ok((out.x, out.iterations))
}

/// Backward-Euler steps (I − dt L) x⁺ = x with a growing step until
/// ‖Lx‖ < 1e-10; each step is a preconditioned GMRES solve.
fn evolve(l: &Liouvillian, diag: &[usize], opts: &SolverOptions) -> Result<(Vec<C64>, usize)> {
    let n = l.len();
    let mut x = match &opts.initial {
        Some(v) if v.len() == n => v.clone(),
        Some(v) => return Err(Error::DimensionMismatch { expected: n, found: v.len() }),
        None => {
            let mut v = vec![C64::default(); n];
            let w = 1.0 / diag.len() as f64;
            diag.iter().for_each(|&p| v[p] = C64::new(w, 0.0));
            v
        }
    };
    let target = 1e-10;
    let mut dt = 1.0;
    let mut total = 0;
    for _ in 0..opts.max_steps {
        let tr: C64 = diag.iter().map(|&p| x[p]).sum();
        x.iter_mut().for_each(|v| *v /= tr);
        if residual_norm(&l.matrix, &x) < target {
            return Ok((x, total));
        }
        // A = I − dt L
        let m = &l.matrix;
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(m.nnz() + n);
        let mut data = Vec::with_capacity(m.nnz() + n);
        indptr.push(0);
        for row in 0..n {
            let r = m.indptr().outer_inds_sz(row);
            let mut seen = false;
            for (&c, &v) in m.indices()[r.clone()].iter().zip(&m.data()[r]) {
                let mut w = -v * dt;
                if c == row {
                    w += 1.0;
                    seen = true;
                }
                indices.push(c);
                data.push(w);
            }
            if !seen {
                // keep rows sorted when inserting a missing diagonal
                let start = indptr[row];
                let pos = indices[start..].iter().position(|&c| c > row).map_or(indices.len(), |k| start + k);
                indices.insert(pos, row);
                data.insert(pos, C64::new(1.0, 0.0));
            }
            indptr.push(indices.len());
        }
        let a = CsMat::new((n, n), indptr, indices, data);
        let pre = BlockJacobi::new(&a, l.selection.sectors(), 0.0, None)?;
        let out = gmres(
            |u, y| csr_apply(&a, u, y),
            |u, y| pre.apply(u, y),
            &x,
            x.clone(),
            opts.tol,
            opts.restart,
            opts.max_iter,
        );
        total += out.iterations;
        if !out.converged {
            return Err(Error::NoConvergence(format!(
                "implicit step failed at dt = {dt:.3e} (relative residual {:.3e})",
                out.relative_residual
            )));
        }
        x = out.x;
        dt = (dt * 4.0).min(1e8);
    }
    Err(Error::NoConvergence(format!("time evolution did not reach ‖Lρ‖ < {target:.0e}")))
}

pub(crate) struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Right-preconditioned restarted GMRES for A x = b with M⁻¹ ≈ A⁻¹.
pub(crate) fn gmres(
    apply_a: impl Fn(&[C64], &mut [C64]),
    apply_m: impl Fn(&[C64], &mut [C64]),
    b: &[C64],
    mut x: Vec<C64>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![C64::default(); n];
    let mut w = vec![C64::default(); n];
    let mut z = vec![C64::default(); n];
    let mut iterations = 0;
    let residual = |x: &[C64], r: &mut [C64]| {
        apply_a(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    };
    residual(&x, &mut r);
    let mut beta = norm(&r);
    let m = restart.max(1);
    while beta > tol * bnorm && iterations < max_iter {
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![C64::default(); m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![C64::default(); m];
        let mut g = vec![C64::default(); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < max_iter {
            apply_m(&v[k], &mut z);
            apply_a(&z, &mut w);
            for i in 0..=k {
                let hik = dot(&v[i], &w);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let (a, c) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i] * a + sn[i] * c;
                h[i + 1][k] = -sn[i].conj() * a + cs[i] * c;
            }
            let (a, c) = (h[k][k], h[k + 1][k]);
            let t = (a.norm_sqr() + c.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = C64::new(1.0, 0.0);
            } else {
                cs[k] = a.norm() / t;
                sn[k] = a / a.norm() * c.conj() / t;
            }
            h[k][k] = cs[k] * a + sn[k] * c;
            h[k + 1][k] = C64::default();
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].norm() <= tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wj| wj / hn).collect());
        }
        // back substitution for the k Krylov coefficients
        let mut y = vec![C64::default(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![C64::default(); n];
        for (yi, vi) in y.iter().zip(&v) {
            for (uj, vj) in u.iter_mut().zip(vi) {
                *uj += yi * vj;
            }
        }
        apply_m(&u, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        residual(&x, &mut r);
        let next = norm(&r);
        if !(next < beta) && next > tol * bnorm {
            // no progress over a full cycle
            beta = next;
            break;
        }
        beta = next;
    }
    let relative_residual = beta / bnorm;
    GmresOutcome { x, iterations, relative_residual, converged: relative_residual <= tol * 10.0 }
}
