//! Dispersive versus Jaynes-Cummings steady states.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::hilbert::HilbertConfig;
use super::liouvillian::{liouvillian_on, Selection};
use super::model::{build_h_dispersive, build_h_jc, cavity_dissipators};
use super::operator::Modes;
use super::solver::{steady_state_with, Method, SolverOptions, SteadyStateResult};
use super::state::{qubit_excited_population, state_fidelity};
use crate::error::Result;
use crate::params::{derive_chi, SystemParams};

/// Default Fock cutoff per mode in the squeezed frame.
pub const DEFAULT_N_MAX: usize = 18;
/// Default coherence-order window of the JC solve.
pub const DEFAULT_KMAX: usize = 4;
/// Relative change allowed when both cutoffs grow by two.
pub const CONVERGENCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOptions {
    pub n_max: usize,
    pub kmax: usize,
    pub solver: SolverOptions,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self { n_max: DEFAULT_N_MAX, kmax: DEFAULT_KMAX, solver: SolverOptions::default() }
    }
}

/// The truncated space used for a parameter point: symmetric cutoff in the
/// frame squeezed like the undriven steady state.
pub fn hilbert_for(p: &SystemParams, n_max: usize) -> Result<HilbertConfig> {
    p.require_stable()?;
    HilbertConfig::adapted(n_max, p.lambda, p.kappa)
}

/// Steady state of the dispersive model with the qubit in |g⟩.
pub fn dispersive_steady_state(
    p: &SystemParams,
    h: &HilbertConfig,
    opts: &SolverOptions,
) -> Result<SteadyStateResult> {
    let l = liouvillian_on(
        &build_h_dispersive(p, h)?,
        &cavity_dissipators(p, h)?,
        Arc::new(Selection::qubit_ground(h)?),
    )?;
    steady_state_with(&l, opts)
}

/// Steady state of the JC model within a coherence window of order `kmax`.
/// At g = 0 the qubit decouples and its state is not fixed by the cavity,
/// so the qubit is taken to be in |g⟩ as in the dispersive reference.
pub fn jc_steady_state(
    p: &SystemParams,
    h: &HilbertConfig,
    kmax: usize,
    opts: &SolverOptions,
) -> Result<SteadyStateResult> {
    let sel = if p.g == 0.0 { Selection::qubit_ground(h)? } else { Selection::coherence_window(h, kmax)? };
    let l = liouvillian_on(&build_h_jc(p, h)?, &cavity_dissipators(p, h)?, Arc::new(sel))?;
    steady_state_with(&l, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JcComparison {
    pub lambda: f64,
    pub chi: f64,
    pub n_max: usize,
    pub kmax: usize,
    /// 1 − F(ρ_D, ρ_JC)
    pub full_error: f64,
    /// 1 − √(1 − P_E)
    pub qubit_error: f64,
    pub p_excited: f64,
    pub n_even: f64,
    pub n_odd: f64,
    pub n_even_dispersive: f64,
    pub n_odd_dispersive: f64,
    pub residual_jc: f64,
    pub residual_dispersive: f64,
    pub method: Method,
    pub iterations: usize,
    pub unknowns: usize,
}

pub fn jc_vs_dispersive_error(p: &SystemParams, opts: &ComparisonOptions) -> Result<JcComparison> {
    let h = hilbert_for(p, opts.n_max)?;
    compare_on(p, &h, opts.kmax, &opts.solver)
}

pub fn compare_on(p: &SystemParams, h: &HilbertConfig, kmax: usize, solver: &SolverOptions) -> Result<JcComparison> {
    let chi = derive_chi(p)?;
    let disp = dispersive_steady_state(p, h, solver)?;
    let jc = jc_steady_state(p, h, kmax, solver)?;
    let m = Modes::new(h)?;
    let (ne, no) = (m.n_even(), m.n_odd());
    let p_excited = qubit_excited_population(&jc.rho, h)?;
    let fid = state_fidelity(&disp.rho, &jc.rho)?;
    Ok(JcComparison {
        lambda: p.lambda,
        chi,
        n_max: h.n_max_even,
        kmax,
        full_error: 1.0 - fid,
        qubit_error: 1.0 - (1.0 - p_excited).max(0.0).sqrt(),
        p_excited,
        n_even: jc.rho.expect(&ne)?.re,
        n_odd: jc.rho.expect(&no)?.re,
        n_even_dispersive: disp.rho.expect(&ne)?.re,
        n_odd_dispersive: disp.rho.expect(&no)?.re,
        residual_jc: jc.residual,
        residual_dispersive: disp.residual,
        method: jc.method,
        iterations: jc.iterations,
        unknowns: jc.unknowns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub base: JcComparison,
    pub grown: JcComparison,
    /// Largest relative change of ⟨n_E⟩, ⟨n_O⟩ and both errors.
    pub max_relative_change: f64,
    pub passed: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Compare the solution at `n_max` with the one at `n_max + 2`.
pub fn convergence_check(p: &SystemParams, opts: &ComparisonOptions) -> Result<ConvergenceReport> {
    let base = jc_vs_dispersive_error(p, opts)?;
    let grown = jc_vs_dispersive_error(p, &ComparisonOptions { n_max: opts.n_max + 2, ..opts.clone() })?;
    let max_relative_change = [
        rel(base.n_even, grown.n_even),
        rel(base.n_odd, grown.n_odd),
        rel(base.full_error, grown.full_error),
        rel(base.qubit_error, grown.qubit_error),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(ConvergenceReport { base, grown, max_relative_change, passed: max_relative_change < CONVERGENCE_TOL })
}

/// Smallest even cutoff in [start, max] that passes [`convergence_check`].
pub fn choose_truncation(p: &SystemParams, start: usize, max: usize, opts: &ComparisonOptions) -> Result<usize> {
    let mut n = start;
    while n <= max {
        let rep = convergence_check(p, &ComparisonOptions { n_max: n, ..opts.clone() })?;
        if rep.passed {
            return Ok(n);
        }
        n += 2;
    }
    Err(crate::error::Error::NoConvergence(format!("no cutoff up to {max} passes the convergence check")))
}
