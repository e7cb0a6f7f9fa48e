//! Hamiltonians and cavity dissipators of the dispersive and
//! Jaynes-Cummings models in the frame of a [`HilbertConfig`].

use num_complex::Complex64 as C64;

use super::hilbert::HilbertConfig;
use super::liouvillian::Dissipator;
use super::operator::{Modes, Operator};
use crate::error::Result;
use crate::params::{derive_chi, SystemParams};

/// −iλ(a_E a_O − a_E† a_O†)
fn squeezing_term(m: &Modes, lambda: f64) -> Operator {
    let pair = m.pair();
    let d = &pair - &pair.adjoint();
    d.scale(C64::new(0.0, -lambda))
}

/// J(n_E − n_O) + χ(n_E − n_O)σz − iλ(a_E a_O − a_E† a_O†), with χ
/// derived from J, g and λ.
pub fn build_h_dispersive(p: &SystemParams, h: &HilbertConfig) -> Result<Operator> {
    let chi = derive_chi(p)?;
    build_h_dispersive_chi(p, h, chi)
}

/// Dispersive Hamiltonian with an explicit shift χ.
pub fn build_h_dispersive_chi(p: &SystemParams, h: &HilbertConfig, chi: f64) -> Result<Operator> {
    let m = Modes::new(h)?;
    let nd = m.n_diff();
    let shift = &(&nd * &m.sigma_z) * chi;
    Ok(&(&(&nd * p.j) + &shift) + &squeezing_term(&m, p.lambda))
}

/// J(n_E − n_O) − iλ(a_E a_O − a_E† a_O†) + g/√2 (a_E†σ⁻ + σ⁺a_E + a_O†σ⁻ + σ⁺a_O).
pub fn build_h_jc(p: &SystemParams, h: &HilbertConfig) -> Result<Operator> {
    let m = Modes::new(h)?;
    let sm = &m.sigma_minus;
    let sp = sm.adjoint();
    let mut exch = Operator::from_triplets(h.dim(), []);
    for a in [m.a_even(), m.a_odd()] {
        exch = &exch + &(&a.adjoint() * sm);
        exch = &exch + &(&sp * &a);
    }
    let g = p.g / std::f64::consts::SQRT_2;
    Ok(&(&(&m.n_diff() * p.j) + &squeezing_term(&m, p.lambda)) + &(&exch * g))
}

/// Independent decay κD[a_E] + κD[a_O].
pub fn cavity_dissipators(p: &SystemParams, h: &HilbertConfig) -> Result<Vec<Dissipator>> {
    let m = Modes::new(h)?;
    Ok(vec![Dissipator::new(p.kappa, m.a_even()), Dissipator::new(p.kappa, m.a_odd())])
}
