use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Qubit basis index of |g⟩.
pub const GROUND: usize = 0;
/// Qubit basis index of |e⟩.
pub const EXCITED: usize = 1;

/// Truncated space even ⊗ odd ⊗ qubit.
///
/// The Fock states are those of the modes b_E, b_O related to the normal
/// modes by a two-mode squeeze of strength `squeeze`:
/// a_E = cosh(r) b_E + sinh(r) b_O†, a_O = cosh(r) b_O + sinh(r) b_E†.
/// With `squeeze = 0` this is the plain Fock basis of a_E, a_O.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertConfig {
    pub n_max_even: usize,
    pub n_max_odd: usize,
    #[serde(default)]
    pub squeeze: f64,
}

/// Quantum numbers of one basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub n_even: usize,
    pub n_odd: usize,
    pub qubit: usize,
}

impl Label {
    /// Photon-number difference n_E - n_O; its bra-ket difference is
    /// conserved by everything except the qubit-cavity exchange.
    pub fn imbalance(&self) -> i64 {
        self.n_even as i64 - self.n_odd as i64
    }

    /// Excitation parity (n_E + n_O + qubit) mod 2, conserved by the full
    /// Hamiltonian.
    pub fn parity(&self) -> usize {
        (self.n_even + self.n_odd + self.qubit) % 2
    }
}

impl HilbertConfig {
    pub fn new(n_max_even: usize, n_max_odd: usize) -> Result<Self> {
        Self::squeezed(n_max_even, n_max_odd, 0.0)
    }

    pub fn squeezed(n_max_even: usize, n_max_odd: usize, squeeze: f64) -> Result<Self> {
        if n_max_even < 1 || n_max_odd < 1 {
            return Err(Error::Domain("truncation n_max must be at least 1".into()));
        }
        if !squeeze.is_finite() {
            return Err(Error::Domain("squeeze parameter must be finite".into()));
        }
        Ok(Self { n_max_even, n_max_odd, squeeze })
    }

    /// Symmetric truncation in the frame that diagonalizes the squeezing of
    /// the undriven steady state at `lambda` (r = atanh(2 lambda/kappa)/2).
    pub fn adapted(n_max: usize, lambda: f64, kappa: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda < kappa / 2.0) {
            return Err(Error::Unstable { lambda, limit: kappa / 2.0 });
        }
        Self::squeezed(n_max, n_max, (2.0 * lambda / kappa).atanh() / 2.0)
    }

    pub fn dim(&self) -> usize {
        (self.n_max_even + 1) * (self.n_max_odd + 1) * 2
    }

    pub fn index(&self, n_even: usize, n_odd: usize, qubit: usize) -> usize {
        (n_even * (self.n_max_odd + 1) + n_odd) * 2 + qubit
    }

    pub fn label(&self, index: usize) -> Label {
        let qubit = index % 2;
        let c = index / 2;
        Label { n_even: c / (self.n_max_odd + 1), n_odd: c % (self.n_max_odd + 1), qubit }
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.dim()).map(|i| self.label(i))
    }

    /// Same truncation with both cutoffs raised by `by`.
    pub fn grown(&self, by: usize) -> Self {
        Self { n_max_even: self.n_max_even + by, n_max_odd: self.n_max_odd + by, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let h = HilbertConfig::new(3, 2).unwrap();
        assert_eq!(h.dim(), 24);
        for i in 0..h.dim() {
            let l = h.label(i);
            assert_eq!(h.index(l.n_even, l.n_odd, l.qubit), i);
        }
        assert!(HilbertConfig::new(0, 2).is_err());
    }
}
