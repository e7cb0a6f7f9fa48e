use std::io::{BufRead, Write};

use faer::{Mat, Side};
use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::hilbert::{HilbertConfig, EXCITED};
use super::liouvillian::Selection;
use super::operator::Operator;
use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Eigenvalues in [−CLIP_TOL, 0) are set to zero; below that is an error.
pub const CLIP_TOL: f64 = 1e-8;

/// A validated density matrix: unit trace, Hermitian, positive semidefinite
/// within the tolerances above.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Array2<C64>,
}

fn to_faer(a: &Array2<C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Hermitian eigendecomposition (eigenvalues ascending, vectors as columns).
fn eigh(a: &Array2<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = to_faer(a)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let vals = (0..a.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// V diag(f(w)) V†
fn spectral(vals: &[f64], vecs: &Mat<C64>, f: impl Fn(f64) -> f64) -> Array2<C64> {
    let scaled = Mat::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * f(vals[j]));
    from_faer((&scaled * vecs.adjoint()).as_ref())
}

fn max_hermitian_deviation(a: &Array2<C64>) -> f64 {
    let mut worst = 0.0f64;
    for ((i, j), v) in a.indexed_iter() {
        if j >= i {
            worst = worst.max((v - a[[j, i]].conj()).norm());
        }
    }
    worst
}

impl DensityMatrix {
    /// Check the invariants of a state without modifying it.
    pub fn new(data: Array2<C64>) -> Result<Self> {
        let (n, m) = data.dim();
        if n != m || n == 0 {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
        let tr: C64 = data.diag().sum();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Domain(format!("trace {tr} differs from 1")));
        }
        let dev = max_hermitian_deviation(&data);
        if dev > HERMITIAN_TOL {
            return Err(Error::Domain(format!("matrix deviates from Hermitian by {dev:.3e}")));
        }
        let (vals, _) = eigh(&data)?;
        if vals[0] < -CLIP_TOL {
            return Err(Error::NotPositive(vals[0]));
        }
        Ok(Self { data })
    }

    /// Hermitize, normalize and clip small negative eigenvalues of a raw
    /// steady-state estimate.
    pub fn sanitized(raw: Array2<C64>) -> Result<Self> {
        let (n, m) = raw.dim();
        if n != m || n == 0 {
            return Err(Error::DimensionMismatch { expected: n, found: m });
        }
        let mut h = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (raw[[i, j]] + raw[[j, i]].conj()));
        let tr = h.diag().sum().re;
        if !(tr.abs() > 0.0) || !tr.is_finite() {
            return Err(Error::Domain("state has zero trace".into()));
        }
        h.mapv_inplace(|v| v / tr);
        let (vals, vecs) = eigh(&h)?;
        if vals[0] < -CLIP_TOL {
            return Err(Error::NotPositive(vals[0]));
        }
        if vals[0] < 0.0 {
            let kept: f64 = vals.iter().map(|&w| w.max(0.0)).sum();
            h = spectral(&vals, &vecs, |w| w.max(0.0) / kept);
            // restore exact Hermiticity after the round trip
            h = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (h[[i, j]] + h[[j, i]].conj()));
        }
        Ok(Self { data: h })
    }

    /// Scatter a solution vector over `selection` into a full matrix.
    pub fn from_selection(selection: &Selection, x: &[C64]) -> Result<Self> {
        if x.len() != selection.len() {
            return Err(Error::DimensionMismatch { expected: selection.len(), found: x.len() });
        }
        let d = selection.dim();
        let mut m = Array2::zeros((d, d));
        for (p, &v) in x.iter().enumerate() {
            let (i, j) = selection.pair(p);
            m[[i, j]] = v;
        }
        Self::sanitized(m)
    }

    /// Pure state |ψ⟩⟨ψ| of a normalized vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n2: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        if (n2 - 1.0).abs() > TRACE_TOL {
            return Err(Error::Domain(format!("state vector has norm² {n2}")));
        }
        let n = psi.len();
        Self::new(Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_hermitian_deviation(&self.data)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(&self.data)?.0[0])
    }

    /// Tr(ρ O)
    pub fn expect(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        let mut s = C64::default();
        for (v, (i, j)) in op.csr().iter() {
            s += self.data[[j, i]] * v;
        }
        Ok(s)
    }

    /// Text dump: a `dim` header line, then `row,col,re,im` for every
    /// nonzero element.
    pub fn write_text(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.dim())?;
        for ((i, j), v) in self.data.indexed_iter() {
            if *v != C64::default() {
                writeln!(w, "{i},{j},{:.17e},{:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let bad = |l: &str| Error::Config(format!("malformed density-matrix line: {l:?}"));
        let mut lines = r.lines();
        let head = lines.next().ok_or_else(|| Error::Config("empty density-matrix file".into()))??;
        let n: usize = head.trim().parse().map_err(|_| bad(&head))?;
        let mut m = Array2::zeros((n, n));
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(&line));
            }
            let i: usize = f[0].parse().map_err(|_| bad(&line))?;
            let j: usize = f[1].parse().map_err(|_| bad(&line))?;
            let re: f64 = f[2].parse().map_err(|_| bad(&line))?;
            let im: f64 = f[3].parse().map_err(|_| bad(&line))?;
            if i >= n || j >= n {
                return Err(bad(&line));
            }
            m[[i, j]] = C64::new(re, im);
        }
        Self::new(m)
    }
}

/// Uhlmann fidelity Tr√(√ρ₁ ρ₂ √ρ₁), clamped to [0, 1].
pub fn state_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch { expected: rho1.dim(), found: rho2.dim() });
    }
    let (vals, vecs) = eigh(&rho1.data)?;
    let sqrt1 = to_faer(&spectral(&vals, &vecs, |w| w.max(0.0).sqrt()));
    let m = &(&sqrt1 * &to_faer(&rho2.data)) * &sqrt1;
    let m = from_faer(m.as_ref());
    let n = m.nrows();
    let m = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
    let (mu, _) = eigh(&m)?;
    let f: f64 = mu.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Tr(ρ (I ⊗ I ⊗ |e⟩⟨e|)).
pub fn qubit_excited_population(rho: &DensityMatrix, h: &HilbertConfig) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: rho.dim() });
    }
    Ok((0..h.dim()).filter(|i| i % 2 == EXCITED).map(|i| rho.data[[i, i]].re).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_state(p: &[f64]) -> DensityMatrix {
        let n = p.len();
        DensityMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                C64::new(p[i], 0.0)
            } else {
                C64::default()
            }
        }))
        .unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let a = diag_state(&[0.7, 0.2, 0.1]);
        assert!((state_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-10);
        let pe = 0.03;
        let g = diag_state(&[1.0, 0.0]);
        let mix = diag_state(&[1.0 - pe, pe]);
        assert!((state_fidelity(&g, &mix).unwrap() - (1.0 - pe).sqrt()).abs() < 1e-12);
        assert!((state_fidelity(&mix, &g).unwrap() - (1.0 - pe).sqrt()).abs() < 1e-12);
        let b = diag_state(&[0.0, 0.0, 1.0]);
        let c = diag_state(&[1.0, 0.0, 0.0]);
        assert!(state_fidelity(&b, &c).unwrap() < 1e-12);
    }

    #[test]
    fn invariants_enforced() {
        let bad = Array2::from_shape_fn((2, 2), |(i, j)| if i == j { C64::new(0.6, 0.0) } else { C64::default() });
        assert!(DensityMatrix::new(bad).is_err());
        let neg = Array2::from_shape_fn((2, 2), |(i, j)| {
            if i == j {
                C64::new(if i == 0 { 1.1 } else { -0.1 }, 0.0)
            } else {
                C64::default()
            }
        });
        assert!(matches!(DensityMatrix::sanitized(neg), Err(Error::NotPositive(_))));
        let tiny = Array2::from_shape_fn((2, 2), |(i, j)| {
            if i == j {
                C64::new(if i == 0 { 1.0 + 1e-9 } else { -1e-9 }, 0.0)
            } else {
                C64::default()
            }
        });
        let s = DensityMatrix::sanitized(tiny).unwrap();
        assert!(s.min_eigenvalue().unwrap() >= -1e-15);
        assert!((s.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn text_round_trip() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let r = DensityMatrix::pure(&psi).unwrap();
        let mut buf = Vec::new();
        r.write_text(&mut buf).unwrap();
        let back = DensityMatrix::read_text(&buf[..]).unwrap();
        assert_eq!(back, r);
    }
}
