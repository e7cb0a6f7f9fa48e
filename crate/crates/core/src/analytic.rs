//! Closed-form input-output theory: signal, noise, SNR, rates, losses and
//! the measurement time needed for a target fidelity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{derive_chi, SystemParams};
use crate::special::{erfc, erfc_inv};

/// Target readout fidelity used throughout.
pub const F_TARGET: f64 = 0.9999;
/// Upper limit of the measurement-time search, in units of 1/kappa.
pub const TAU_MAX: f64 = 1e4;

/// Below this value of |chi·t| the ratio sin(chi t)/chi is evaluated by series.
const SINC_SWITCH: f64 = 1e-6;
/// Below this value of omega0·t the signal bracket is summed as a power series.
const SERIES_SWITCH: f64 = 0.5;

/// The three rates that fix the readout dynamics of the squeezed subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub chi: f64,
    pub lambda: f64,
    pub kappa: f64,
}

impl Readout {
    pub fn new(chi: f64, lambda: f64, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        if !(chi >= 0.0) || !(lambda >= 0.0) || !chi.is_finite() || !lambda.is_finite() {
            return Err(Error::Domain("chi and lambda must be finite and non-negative".into()));
        }
        Ok(Self { chi, lambda, kappa })
    }

    /// Squeezing at the threshold value lambda = kappa/2 - chi.
    pub fn at_threshold(chi: f64, kappa: f64) -> Result<Self> {
        Self::new(chi, (kappa / 2.0 - chi).max(0.0), kappa)
    }

    /// chi from g, J and lambda; kappa is the output-port rate.
    pub fn from_params(p: &SystemParams) -> Result<Self> {
        Self::new(derive_chi(p)?, p.lambda, p.kappa)
    }

    /// Total decay rate lambda + kappa/2 of the squeezed quadrature.
    pub fn big_lambda(&self) -> f64 {
        self.lambda + self.kappa / 2.0
    }

    fn omega0_sq(&self) -> f64 {
        self.big_lambda().powi(2) + self.chi * self.chi
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.lambda < self.kappa / 2.0 {
            Ok(())
        } else {
            Err(Error::Unstable { lambda: self.lambda, limit: self.kappa / 2.0 })
        }
    }

    fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }
}

/// Drive amplitude, given either as coherent intracavity photons or as the
/// input amplitude |beta|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    Nbar0(f64),
    BetaFlux(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub amplitude: Amplitude,
    /// Qubit eigenvalue, +1 or -1.
    pub sigma: f64,
}

impl DriveConfig {
    pub fn nbar0(n0: f64) -> Self {
        Self { amplitude: Amplitude::Nbar0(n0), sigma: 1.0 }
    }

    pub fn beta(beta: f64) -> Self {
        Self { amplitude: Amplitude::BetaFlux(beta), sigma: 1.0 }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn n0(&self, r: &Readout) -> Result<f64> {
        let n = match self.amplitude {
            Amplitude::Nbar0(n) => n,
            Amplitude::BetaFlux(b) => beta_to_n0(r, b)?,
        };
        if !(n >= 0.0) {
            return Err(Error::Domain(format!("nbar0 must be non-negative, got {n}")));
        }
        Ok(n)
    }

    pub fn beta_flux(&self, r: &Readout) -> Result<f64> {
        match self.amplitude {
            Amplitude::Nbar0(n) => n0_to_beta(r, n),
            Amplitude::BetaFlux(b) => Ok(b.abs()),
        }
    }

    fn check_sigma(&self) -> Result<()> {
        if self.sigma == 1.0 || self.sigma == -1.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("sigma must be +1 or -1, got {}", self.sigma)))
        }
    }
}

/// Coherent intracavity photons for input amplitude |beta|:
/// kappa |beta|² / ((lambda + kappa/2)² + chi²).
pub fn beta_to_n0(r: &Readout, beta: f64) -> Result<f64> {
    r.require_stable()?;
    Ok(r.kappa * beta * beta / r.omega0_sq())
}

pub fn n0_to_beta(r: &Readout, n0: f64) -> Result<f64> {
    r.require_stable()?;
    if n0 < 0.0 {
        return Err(Error::Domain(format!("nbar0 must be non-negative, got {n0}")));
    }
    Ok((n0 * r.omega0_sq() / r.kappa).sqrt())
}

/// sin(chi t)/chi with the chi -> 0 limit.
fn sinc_t(chi: f64, t: f64) -> f64 {
    let x = chi * t;
    if x.abs() < SINC_SWITCH {
        t * (1.0 - x * x / 6.0)
    } else {
        (x).sin() / chi
    }
}

/// Taylor coefficients of the step response f with f'' + 2Λf' + ω0²f = ω0²,
/// f(0) = f'(0) = 0. Returns (f(t), ∫₀ᵗ f).
fn step_response_series(big_l: f64, w2: f64, t: f64) -> (f64, f64) {
    let (mut a_nm1, mut a_n) = (0.0f64, 0.0f64); // a_0, a_1
    let mut f = 0.0;
    let mut int = 0.0;
    let mut tp = t; // t^(n+1) for n = 1 at loop start
    for n in 0..60usize {
        // a_{n+2} from a_{n+1} = a_n (current) and a_n = a_nm1
        let rhs = if n == 0 { w2 } else { 0.0 };
        let nf = n as f64;
        let a_np2 = (rhs - 2.0 * big_l * (nf + 1.0) * a_n - w2 * a_nm1) / ((nf + 2.0) * (nf + 1.0));
        tp *= t; // t^(n+2)
        let term = a_np2 * tp;
        f += term;
        int += term * t / (nf + 3.0);
        a_nm1 = a_n;
        a_n = a_np2;
        if n > 4 && term.abs() <= 1e-18 * f.abs() {
            break;
        }
    }
    (f, int)
}

/// 1 - (cos chi t + Λ sin(chi t)/chi) e^{-Λ t}
fn step_response(r: &Readout, t: f64) -> f64 {
    let bl = r.big_lambda();
    let w2 = r.omega0_sq();
    if w2.sqrt() * t < SERIES_SWITCH {
        return step_response_series(bl, w2, t).0;
    }
    1.0 - ((r.chi * t).cos() + bl * sinc_t(r.chi, t)) * (-bl * t).exp()
}

/// Mean of the measured output quadrature for qubit state sigma at time t
/// after the drive is switched on.
pub fn signal_mean(t: f64, r: &Readout, drive: &DriveConfig) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    drive.check_sigma()?;
    let beta = drive.beta_flux(r)?;
    let pref = -std::f64::consts::SQRT_2 * r.kappa * r.chi * beta * drive.sigma / r.omega0_sq();
    Ok(pref * step_response(r, t))
}

/// Integrated measurement signal M_S(tau) (difference of the two qubit
/// states, so independent of sigma).
pub fn integrated_signal(tau: f64, r: &Readout, n0: f64) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::Domain(format!("tau must be non-negative, got {tau}")));
    }
    r.require_stable()?;
    let bl = r.big_lambda();
    let w2 = r.omega0_sq();
    let pref = -2.0 * (2.0 * n0).sqrt() * r.chi / w2.sqrt();
    let bracket = if w2.sqrt() * tau < SERIES_SWITCH {
        r.kappa * step_response_series(bl, w2, tau).1
    } else {
        let e = (-bl * tau).exp();
        let s = sinc_t(r.chi, tau);
        let c = (r.chi * tau).cos();
        r.kappa * tau
            - r.kappa / w2 * (e * ((r.chi * r.chi - bl * bl) * s - 2.0 * bl * c) + 2.0 * bl)
    };
    Ok(pref * bracket)
}

/// Slope of M_S at long times.
fn signal_slope(r: &Readout, n0: f64) -> f64 {
    -2.0 * (2.0 * n0).sqrt() * r.chi * r.kappa / r.omega0_sq().sqrt()
}

/// Two-time noise correlator: a delta function of weight `delta_weight`
/// plus a smooth part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseKernel {
    pub delta_weight: f64,
    pub smooth: f64,
}

pub fn noise_kernel(t: f64, t_prime: f64, r: &Readout) -> NoiseKernel {
    let bl = r.big_lambda();
    let d = (t - t_prime).abs();
    let smooth = -r.kappa * r.lambda / (2.0 * bl) * (-bl * d).exp() * (r.chi * d).cos();
    NoiseKernel { delta_weight: 0.5, smooth }
}

/// Integrated output noise M_N(tau), independent of the qubit state.
pub fn integrated_noise(tau: f64, r: &Readout) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::Domain(format!("tau must be non-negative, got {tau}")));
    }
    r.require_stable()?;
    let (k, l, chi) = (r.kappa, r.lambda, r.chi);
    let bl = r.big_lambda();
    let w2 = r.omega0_sq();
    let e = (-bl * tau).exp();
    let lin = 0.5 * (1.0 - 2.0 * k * l / w2) * k * tau;
    let osc = (chi * chi - bl * bl) * (1.0 - (chi * tau).cos() * e)
        - 2.0 * chi * bl * (chi * tau).sin() * e;
    Ok(lin - k * k * l / (bl * w2 * w2) * osc)
}

fn noise_slope(r: &Readout) -> f64 {
    let dl = r.lambda - r.kappa / 2.0;
    0.5 * (r.chi * r.chi + dl * dl) / r.omega0_sq() * r.kappa
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrResult {
    pub tau: f64,
    pub signal: f64,
    pub noise: f64,
    pub snr: f64,
    /// Long-time SNR² per unit time for the same model.
    pub rate_longtime: f64,
}

/// Signal-to-noise ratio after integrating for tau.
pub fn snr(tau: f64, r: &Readout, drive: &DriveConfig) -> Result<SnrResult> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let n0 = drive.n0(r)?;
    let signal = integrated_signal(tau, r, n0)?;
    let noise = integrated_noise(tau, r)?;
    let snr = (signal * signal / (2.0 * noise)).sqrt();
    Ok(SnrResult { tau, signal, noise, snr, rate_longtime: gamma_istms(r, n0)? })
}

/// Long-time measurement rate 8 n0 chi² kappa / (chi² + (kappa/2 - lambda)²).
pub fn gamma_istms(r: &Readout, n0: f64) -> Result<f64> {
    r.require_stable()?;
    let dl = r.kappa / 2.0 - r.lambda;
    let den = r.chi * r.chi + dl * dl;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(8.0 * n0 * r.chi * r.chi * r.kappa / den)
}

/// Rate of standard dispersive readout of a single cavity: 4 n kappa at the
/// optimal chi = kappa/2, 2 n (chi/kappa)² kappa for weak coupling.
pub fn gamma_standard(chi: f64, kappa: f64, nbar: f64) -> Result<f64> {
    if (chi - kappa / 2.0).abs() <= 1e-12 * kappa {
        Ok(4.0 * nbar * kappa)
    } else if chi < kappa / 2.0 {
        Ok(2.0 * nbar * (chi / kappa).powi(2) * kappa)
    } else {
        Err(Error::Domain(format!("standard rate formula requires chi <= kappa/2, got chi = {chi}")))
    }
}

/// Ratio of the standard rate to the threshold squeezed rate at equal total
/// photon number, weak-coupling branch: n0 / (n0 + kappa/(4 chi)).
pub fn rate_ratio_weak(r: &Readout, n0: f64) -> Result<f64> {
    if r.chi == 0.0 {
        return Err(Error::Domain("rate ratio requires chi > 0".into()));
    }
    Ok(n0 / (n0 + r.kappa / (4.0 * r.chi)))
}

/// SNR with a fraction eta of the output lost before detection.
pub fn snr_ext(tau: f64, r: &Readout, drive: &DriveConfig, eta: f64) -> Result<SnrResult> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")));
    }
    if eta == 0.0 {
        return snr(tau, r, drive);
    }
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let n0 = drive.n0(r)?;
    let ms = integrated_signal(tau, r, n0)?;
    let mn = integrated_noise(tau, r)?;
    let t = 1.0 - eta;
    let noise = t * mn + eta * r.kappa * tau / 2.0;
    let signal = t.sqrt() * ms;
    let snr = (signal * signal / (2.0 * noise)).sqrt();
    let a = signal_slope(r, n0);
    let b = noise_slope(r);
    let rate = t * a * a / (2.0 * (t * b + eta * r.kappa / 2.0));
    Ok(SnrResult { tau, signal, noise, snr, rate_longtime: rate })
}

/// SNR with internal cavity loss: `r.kappa` is the output-port rate and the
/// total decay is kappa/(1 - eps).
pub fn snr_int(tau: f64, r: &Readout, drive: &DriveConfig, eps: f64) -> Result<SnrResult> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("epsilon must lie in [0, 1), got {eps}")));
    }
    if eps == 0.0 {
        return snr(tau, r, drive);
    }
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let n0 = drive.n0(r)?;
    let rt = r.with_kappa(r.kappa / (1.0 - eps));
    let ms = integrated_signal(tau, &rt, n0)?;
    let mn = integrated_noise(tau, &rt)?;
    let t = 1.0 - eps;
    let noise = t * mn + eps * rt.kappa * tau / 2.0;
    let signal = t * ms;
    let snr = (signal * signal / (2.0 * noise)).sqrt();
    let a = signal_slope(&rt, n0);
    let b = noise_slope(&rt);
    let rate = t * t * a * a / (2.0 * (t * b + eps * rt.kappa / 2.0));
    Ok(SnrResult { tau, signal, noise, snr, rate_longtime: rate })
}

/// Which SNR expression to use in measurement-time searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SnrModel {
    Lossless,
    External(f64),
    Internal(f64),
}

impl SnrModel {
    pub fn eval(&self, tau: f64, r: &Readout, drive: &DriveConfig) -> Result<SnrResult> {
        match *self {
            SnrModel::Lossless => snr(tau, r, drive),
            SnrModel::External(eta) => snr_ext(tau, r, drive, eta),
            SnrModel::Internal(eps) => snr_int(tau, r, drive, eps),
        }
    }
}

/// Assignment fidelity 1 - erfc(SNR/2)/2.
pub fn fidelity_from_snr(snr: f64) -> f64 {
    1.0 - erfc(snr / 2.0) / 2.0
}

/// SNR needed to reach fidelity `f`.
pub fn snr_for_fidelity(f: f64) -> Result<f64> {
    if !(f > 0.5 && f < 1.0) {
        return Err(Error::Domain(format!("target fidelity must lie in (0.5, 1), got {f}")));
    }
    Ok(2.0 * erfc_inv(2.0 * (1.0 - f)))
}

/// Smallest integration time at which the fidelity reaches `f_target`.
pub fn tau_star(r: &Readout, drive: &DriveConfig, f_target: f64, model: SnrModel) -> Result<f64> {
    let target = snr_for_fidelity(f_target)?;
    if r.chi <= 0.0 {
        return Err(Error::Domain("tau* requires chi > 0".into()));
    }
    if drive.n0(r)? <= 0.0 {
        return Err(Error::Domain("tau* requires a nonzero drive".into()));
    }
    let snr_at = |t: f64| model.eval(t, r, drive).map(|s| s.snr);
    let gamma = model.eval(1.0, r, drive)?.rate_longtime;
    let t2 = target * target;
    let mut hi = if gamma > 0.0 { (10.0 * t2 / gamma).min(TAU_MAX) } else { TAU_MAX };
    while snr_at(hi)? < target {
        if hi >= TAU_MAX {
            return Err(Error::NoConvergence(format!(
                "fidelity {f_target} not reached within tau = {TAU_MAX}/kappa"
            )));
        }
        hi = (hi * 2.0).min(TAU_MAX);
    }
    // first crossing on a uniform scan, then bisection inside that cell
    const SAMPLES: usize = 1000;
    let mut lo = 0.0;
    for i in 1..=SAMPLES {
        let t = hi * i as f64 / SAMPLES as f64;
        if snr_at(t)? >= target {
            hi = t;
            break;
        }
        lo = t;
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if snr_at(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Steady-state variance of the squeezed quadrature without qubit
/// (vacuum = 1/2).
pub fn intracavity_variance(lambda: f64, kappa: f64) -> Result<f64> {
    if lambda >= kappa / 2.0 {
        return Err(Error::Unstable { lambda, limit: kappa / 2.0 });
    }
    Ok(kappa / (4.0 * (lambda + kappa / 2.0)))
}
