//! Output squeezing spectrum, cavity susceptibility, density of states and
//! the Purcell-suppression rates.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analytic::Readout;
use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Squeezing,
    SqueezingDb,
    DosRight,
    DosLeft,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub kind: SpectrumKind,
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Sample `f` on `omega`, which must be strictly increasing.
    pub fn sample(
        kind: SpectrumKind,
        omega: Vec<f64>,
        f: impl Fn(f64) -> Result<f64>,
    ) -> Result<Self> {
        if omega.is_empty() || omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("frequency grid must be nonempty and strictly increasing".into()));
        }
        let values = omega.iter().map(|&w| f(w)).collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, omega, values })
    }

    /// Indices of strict interior local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        (1..self.values.len().saturating_sub(1))
            .filter(|&i| self.values[i] < self.values[i - 1] && self.values[i] < self.values[i + 1])
            .collect()
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Output spectrum of the measured quadrature (vacuum = 1/2).
pub fn squeezing_spectrum(omega: f64, r: &Readout) -> Result<f64> {
    r.require_stable()?;
    let bl = r.big_lambda();
    let lor = |x: f64| bl / (bl * bl + x * x);
    Ok(0.5 * (1.0 - r.kappa * r.lambda / bl * (lor(omega + r.chi) + lor(omega - r.chi))))
}

/// Squeezing relative to vacuum in dB: 10 log10(2 S).
pub fn spectrum_db(omega: f64, r: &Readout) -> Result<f64> {
    let s = squeezing_spectrum(omega, r)?;
    if s <= 0.0 {
        return Err(Error::Domain(format!("spectrum must be positive for dB, got {s}")));
    }
    Ok(10.0 * (2.0 * s).log10())
}

/// 2x2 susceptibility of the (right, left) cavities at lambda = 0.
pub fn susceptibility(omega: f64, j: f64, kappa: f64) -> Result<[[C64; 2]; 2]> {
    let iw = C64::new(0.0, omega);
    let den = iw * (iw + kappa) + j * j;
    if den.norm() < 1e-14 {
        return Err(Error::Domain(format!("susceptibility is singular at omega = {omega}")));
    }
    let off = C64::new(0.0, -j) / den;
    Ok([[iw / den, off], [off, (iw + kappa) / den]])
}

fn dos_den(omega: f64, j: f64, kappa: f64) -> f64 {
    let w2 = omega * omega;
    kappa * kappa * w2 + (j * j - w2).powi(2)
}

/// Density of states of the right (qubit-side) cavity.
pub fn dos_right(omega: f64, j: f64, kappa: f64) -> f64 {
    2.0 * kappa * omega * omega / dos_den(omega, j, kappa)
}

/// Density of states of the left cavity.
pub fn dos_left(omega: f64, j: f64, kappa: f64) -> f64 {
    2.0 * kappa * j * j / dos_den(omega, j, kappa)
}

/// Qubit-operator content of the dressed cavity operators to leading order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingCoefficients {
    pub sigma_minus_even: f64,
    pub sigma_minus_odd: f64,
    pub sigma_plus: f64,
    pub sigma_minus_right: f64,
    pub sigma_plus_right: f64,
}

pub fn mixing_coefficients(p: &SystemParams) -> Result<MixingCoefficients> {
    if p.j <= 0.0 {
        return Err(Error::Domain("mixing coefficients require J > 0".into()));
    }
    let f = 1.0 / (1.0 + (p.lambda / p.j).powi(2));
    let m = p.g / (std::f64::consts::SQRT_2 * p.j) * f;
    Ok(MixingCoefficients {
        sigma_minus_even: -m,
        sigma_minus_odd: m,
        sigma_plus: m * p.lambda / p.j,
        // the sigma-minus parts of the even and odd modes cancel exactly
        sigma_minus_right: 0.0,
        sigma_plus_right: p.g * p.lambda / (p.j * p.j) * f,
    })
}

/// Qubit heating rate kappa (g lambda / J²)².
pub fn heating_rate(p: &SystemParams) -> Result<f64> {
    if p.j <= 0.0 {
        return Err(Error::Domain("heating rate requires J > 0".into()));
    }
    Ok(p.kappa * (p.g * p.lambda / (p.j * p.j)).powi(2))
}

/// Purcell decay through internal loss of the left cavity, kappa' (g/J)².
pub fn purcell_left_rate(p: &SystemParams) -> Result<f64> {
    if p.j <= 0.0 {
        return Err(Error::Domain("Purcell rate requires J > 0".into()));
    }
    Ok(p.kappa_left_int * (p.g / p.j).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_examples() {
        let r = Readout::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(squeezing_spectrum(3.0, &r).unwrap(), 0.5);
        assert_eq!(spectrum_db(3.0, &r).unwrap(), 0.0);
        let r = Readout::new(0.0, 0.25, 1.0).unwrap();
        assert!((squeezing_spectrum(0.0, &r).unwrap() - 1.0 / 18.0).abs() < 1e-15);
        assert!((spectrum_db(0.0, &r).unwrap() - 10.0 * (1.0f64 / 9.0).log10()).abs() < 1e-12);
        let r = Readout::new(0.5, 0.25, 1.0).unwrap();
        assert!((squeezing_spectrum(0.0, &r).unwrap() - 5.0 / 26.0).abs() < 1e-15);
        assert!((spectrum_db(1.3, &r).unwrap() - spectrum_db(-1.3, &r).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn dos_examples() {
        let (j, k) = (5.0, 1.0);
        assert_eq!(dos_right(0.0, j, k), 0.0);
        assert!((dos_right(j, j, k) - 2.0 / k).abs() < 1e-15);
        assert!((dos_left(0.0, j, k) - 2.0 * k / (j * j)).abs() < 1e-15);
        let s = susceptibility(0.0, j, k).unwrap();
        assert_eq!(s[0][0], C64::new(0.0, 0.0));
        assert!((s[1][1] - C64::new(k / (j * j), 0.0)).norm() < 1e-15);
        assert_eq!(s[0][1], s[1][0]);
    }

    #[test]
    fn mixing_examples() {
        let p = SystemParams { j: 10.0, g: 1.0, lambda: 0.45, ..Default::default() };
        let m = mixing_coefficients(&p).unwrap();
        assert_eq!(m.sigma_minus_right, 0.0);
        assert_eq!(m.sigma_minus_even, -m.sigma_minus_odd);
        assert!((m.sigma_plus_right - 4.5e-3 / 1.002025).abs() < 1e-15);
        let m0 = mixing_coefficients(&SystemParams { lambda: 0.0, ..p }).unwrap();
        assert_eq!(m0.sigma_plus, 0.0);
        assert!((m0.sigma_minus_even + 1.0 / (2f64.sqrt() * 10.0)).abs() < 1e-15);
    }

    #[test]
    fn rate_examples() {
        let p = SystemParams { j: 10.0, g: 1.0, lambda: 0.45, ..Default::default() };
        assert!((heating_rate(&p).unwrap() - 2.025e-5).abs() < 1e-17);
        assert_eq!(heating_rate(&SystemParams { lambda: 0.0, ..p }).unwrap(), 0.0);
        assert_eq!(purcell_left_rate(&p).unwrap(), 0.0);
        let p = SystemParams { kappa_left_int: 0.01, ..p };
        assert!((purcell_left_rate(&p).unwrap() - 1e-4).abs() < 1e-18);
    }
}
