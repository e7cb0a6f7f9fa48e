use std::ops::{Add, Mul, Sub};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use sprs::{CsMat, TriMat};

use super::hilbert::{HilbertConfig, EXCITED, GROUND};
use crate::error::{Error, Result};

/// Square sparse complex matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: CsMat<C64>,
}

impl Operator {
    pub fn from_triplets(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut t = TriMat::new((dim, dim));
        for (i, j, v) in entries {
            t.add_triplet(i, j, v);
        }
        Self { mat: t.to_csr() }
    }

    fn from_csmat(m: CsMat<C64>) -> Self {
        let mat = if m.is_csr() { m } else { m.to_csr() };
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn csr(&self) -> &CsMat<C64> {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat.get(i, j).copied().unwrap_or_default()
    }

    /// Nonzeros of row `i` as (column, value).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.mat.indptr().outer_inds_sz(i);
        self.mat.indices()[r.clone()].iter().copied().zip(self.mat.data()[r].iter().copied())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_csmat(self.mat.transpose_view().map(|v| v.conj()).to_csr())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { mat: self.mat.map(|v| v * c) }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.mat.to_dense()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self - &self.adjoint();
        d.mat.data().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_csmat(&self.mat + &other.mat))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_csmat(&self.mat * &other.mat))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimensions differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self + &rhs.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator dimensions differ")
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

/// Truncated annihilation operator on photon numbers 0..=n_max.
pub fn ladder(n_max: usize) -> Result<Operator> {
    if n_max < 1 {
        return Err(Error::Domain("ladder requires n_max >= 1".into()));
    }
    Ok(Operator::from_triplets(
        n_max + 1,
        (1..=n_max).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    ))
}

pub fn identity(dim: usize) -> Operator {
    Operator::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))))
}

/// Kronecker product a ⊗ b.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator::from_csmat(sprs::kronecker_product(a.mat.view(), b.mat.view()))
}

/// Mode and qubit operators of a [`HilbertConfig`], including the normal-
/// mode operators expressed in its (possibly squeezed) Fock basis.
///
/// Number and pair operators of the normal modes are built from their
/// normal-ordered expansions in b_E, b_O, so they are exact on the truncated
/// space rather than products of truncated matrices.
#[derive(Debug, Clone)]
pub struct Modes {
    pub hilbert: HilbertConfig,
    pub b_even: Operator,
    pub b_odd: Operator,
    pub sigma_minus: Operator,
    pub sigma_z: Operator,
    pub ident: Operator,
    cosh: f64,
    sinh: f64,
}

impl Modes {
    pub fn new(h: &HilbertConfig) -> Result<Self> {
        let ie = identity(h.n_max_even + 1);
        let io = identity(h.n_max_odd + 1);
        let iq = identity(2);
        let sm = Operator::from_triplets(2, [(GROUND, EXCITED, C64::new(1.0, 0.0))]);
        let sz = Operator::from_triplets(
            2,
            [(GROUND, GROUND, C64::new(-1.0, 0.0)), (EXCITED, EXCITED, C64::new(1.0, 0.0))],
        );
        let cav = |a: &Operator, b: &Operator, q: &Operator| tensor(&tensor(a, b), q);
        Ok(Self {
            hilbert: *h,
            b_even: cav(&ladder(h.n_max_even)?, &io, &iq),
            b_odd: cav(&ie, &ladder(h.n_max_odd)?, &iq),
            sigma_minus: cav(&ie, &io, &sm),
            sigma_z: cav(&ie, &io, &sz),
            ident: identity(h.dim()),
            cosh: h.squeeze.cosh(),
            sinh: h.squeeze.sinh(),
        })
    }

    pub fn a_even(&self) -> Operator {
        &(&self.b_even * self.cosh) + &(&self.b_odd.adjoint() * self.sinh)
    }

    pub fn a_odd(&self) -> Operator {
        &(&self.b_odd * self.cosh) + &(&self.b_even.adjoint() * self.sinh)
    }

    fn nb_even(&self) -> Operator {
        &self.b_even.adjoint() * &self.b_even
    }

    fn nb_odd(&self) -> Operator {
        &self.b_odd.adjoint() * &self.b_odd
    }

    fn bb(&self) -> Operator {
        &self.b_even * &self.b_odd
    }

    fn number(&self, own: &Operator, other: &Operator) -> Operator {
        let (c, s) = (self.cosh, self.sinh);
        let bb = self.bb();
        let pair = &bb + &bb.adjoint();
        let t1 = own * (c * c);
        let t2 = &(other + &self.ident) * (s * s);
        let t3 = &pair * (c * s);
        &(&t1 + &t2) + &t3
    }

    /// a_E† a_E
    pub fn n_even(&self) -> Operator {
        self.number(&self.nb_even(), &self.nb_odd())
    }

    /// a_O† a_O
    pub fn n_odd(&self) -> Operator {
        self.number(&self.nb_odd(), &self.nb_even())
    }

    /// a_E† a_E - a_O† a_O, invariant under the frame change.
    pub fn n_diff(&self) -> Operator {
        &self.nb_even() - &self.nb_odd()
    }

    /// a_E a_O
    pub fn pair(&self) -> Operator {
        let (c, s) = (self.cosh, self.sinh);
        let bb = self.bb();
        let t1 = &bb * (c * c);
        let t2 = &bb.adjoint() * (s * s);
        let t3 = &(&(&self.nb_even() + &self.nb_odd()) + &self.ident) * (c * s);
        &(&t1 + &t2) + &t3
    }

    /// |e⟩⟨e| on the qubit.
    pub fn excited_projector(&self) -> Operator {
        &self.sigma_minus.adjoint() * &self.sigma_minus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_basics() {
        let a = ladder(4).unwrap();
        let ad = a.adjoint();
        let comm = &(&a * &ad) - &(&ad * &a);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((comm.get(i, j) - C64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
        for i in 0..5 {
            assert_eq!(a.get(i, 0), C64::default());
        }
        assert_eq!(tensor(&identity(2), &identity(3)), identity(6));
    }

    #[test]
    fn frame_identities() {
        let h = HilbertConfig::squeezed(4, 4, 0.4).unwrap();
        let m = Modes::new(&h).unwrap();
        let d = &(&m.n_even() - &m.n_odd()) - &m.n_diff();
        assert!(d.csr().data().iter().all(|v| v.norm() < 1e-12));
        // away from the truncation edge the exact forms agree with products
        let ae = m.a_even();
        let prod = &ae.adjoint() * &ae;
        let exact = m.n_even();
        let i = h.index(1, 1, 0);
        let j = h.index(0, 0, 0);
        assert!((prod.get(i, j) - exact.get(i, j)).norm() < 1e-12);
        assert!((prod.get(j, j) - exact.get(j, j)).norm() < 1e-12);
    }
}
