//! System parameters, derived rates and validity conditions.
//!
//! All rates are in units of the output-port decay rate, so `kappa = 1` by
//! default and times are in units of `1/kappa`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold for the "much less than" conditions.
pub const DEFAULT_TOL: f64 = 0.1;

/// Physical rates and frequencies of the two-cavity setup plus loss channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_q: f64,
    pub omega_p: f64,
    /// Tunnel coupling between the two cavities.
    pub j: f64,
    pub g: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub kappa_int: f64,
    /// Internal decay of the left (qubit-side) cavity.
    pub kappa_left_int: f64,
    /// External transmission loss fraction.
    pub eta: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega_c: 0.0,
            omega_q: 0.0,
            omega_p: 0.0,
            j: 0.0,
            g: 0.0,
            lambda: 0.0,
            kappa: 1.0,
            kappa_int: 0.0,
            kappa_left_int: 0.0,
            eta: 0.0,
        }
    }
}

/// A partial parameter set, as read from a config file or command-line
/// flags; unset keys leave the base value alone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub omega_c: Option<f64>,
    pub omega_q: Option<f64>,
    pub omega_p: Option<f64>,
    pub j: Option<f64>,
    pub g: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_int: Option<f64>,
    pub kappa_left_int: Option<f64>,
    pub eta: Option<f64>,
}

impl ParamOverrides {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn from_toml_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Keys set in `over` win.
    pub fn merged(&self, over: &Self) -> Self {
        Self {
            omega_c: over.omega_c.or(self.omega_c),
            omega_q: over.omega_q.or(self.omega_q),
            omega_p: over.omega_p.or(self.omega_p),
            j: over.j.or(self.j),
            g: over.g.or(self.g),
            lambda: over.lambda.or(self.lambda),
            kappa: over.kappa.or(self.kappa),
            kappa_int: over.kappa_int.or(self.kappa_int),
            kappa_left_int: over.kappa_left_int.or(self.kappa_left_int),
            eta: over.eta.or(self.eta),
        }
    }

    pub fn apply(&self, base: SystemParams) -> SystemParams {
        SystemParams {
            omega_c: self.omega_c.unwrap_or(base.omega_c),
            omega_q: self.omega_q.unwrap_or(base.omega_q),
            omega_p: self.omega_p.unwrap_or(base.omega_p),
            j: self.j.unwrap_or(base.j),
            g: self.g.unwrap_or(base.g),
            lambda: self.lambda.unwrap_or(base.lambda),
            kappa: self.kappa.unwrap_or(base.kappa),
            kappa_int: self.kappa_int.unwrap_or(base.kappa_int),
            kappa_left_int: self.kappa_left_int.unwrap_or(base.kappa_left_int),
            eta: self.eta.unwrap_or(base.eta),
        }
    }
}

impl SystemParams {
    /// Parameters of the numerical comparison with the full model:
    /// J = 10, g = 1, kappa = 1, so that chi is close to kappa/20.
    pub fn comparison_point(lambda: f64) -> Self {
        Self { j: 10.0, g: 1.0, lambda, ..Self::default() }
    }

    /// Parse a flat key-value TOML document. Missing keys take their
    /// defaults; `j` must be given whenever `g` or `lambda` is nonzero.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let raw = ParamOverrides::from_toml_str(src)?;
        let p = raw.apply(Self::default());
        if raw.j.is_none() && (p.g > 0.0 || p.lambda > 0.0) {
            return Err(Error::Config("key `j` is required when g or lambda is nonzero".into()));
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_toml_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Check the sign and range constraints. Stability is not checked here;
    /// it is reported by [`validity_report`] and enforced by operations that
    /// need a steady state.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_c, self.omega_q, self.omega_p, self.j, self.g, self.lambda,
            self.kappa, self.kappa_int, self.kappa_left_int, self.eta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::Domain(format!("kappa must be positive, got {}", self.kappa)));
        }
        if self.j < 0.0 {
            return Err(Error::Domain(format!("J must be non-negative, got {}", self.j)));
        }
        if self.g < 0.0 || self.lambda < 0.0 || self.kappa_int < 0.0 || self.kappa_left_int < 0.0 {
            return Err(Error::Domain("g, lambda and internal decay rates must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Domain(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        Ok(())
    }

    pub fn kappa_tot(&self) -> f64 {
        self.kappa + self.kappa_int
    }

    /// Internal loss fraction kappa_int / kappa_tot.
    pub fn epsilon(&self) -> f64 {
        self.kappa_int / self.kappa_tot()
    }

    /// Copy with the internal decay chosen so that kappa_int/kappa_tot = eps.
    pub fn with_internal_loss(&self, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Domain(format!("epsilon must lie in [0, 1), got {eps}")));
        }
        Ok(Self { kappa_int: self.kappa * eps / (1.0 - eps), ..*self })
    }

    pub fn is_stable(&self) -> bool {
        self.lambda < self.kappa_tot() / 2.0
    }

    pub fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable { lambda: self.lambda, limit: self.kappa_tot() / 2.0 })
        }
    }

    /// True when the qubit sits at the bare cavity frequency and the pump at
    /// twice it, the frame in which the dispersive model is written.
    pub fn rotating_frame_consistent(&self) -> bool {
        let scale = 1.0 + self.omega_c.abs();
        (self.omega_q - self.omega_c).abs() <= 1e-12 * scale
            && (self.omega_p - 2.0 * self.omega_c).abs() <= 1e-12 * scale
    }
}

/// Quantities that follow from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub chi: f64,
    /// Squeezing photons in both modes; `None` above threshold.
    pub n_sqz: Option<f64>,
    /// `None` when chi = 0.
    pub n_crit: Option<f64>,
    pub kappa_tot: f64,
    pub epsilon: f64,
    pub omega_e: f64,
    pub omega_o: f64,
}

impl DerivedQuantities {
    pub fn new(p: &SystemParams) -> Result<Self> {
        let chi = derive_chi(p)?;
        Ok(Self {
            chi,
            n_sqz: n_sqz(p).ok(),
            n_crit: n_crit(p).ok(),
            kappa_tot: p.kappa_tot(),
            epsilon: p.epsilon(),
            omega_e: p.omega_c + p.j,
            omega_o: p.omega_c - p.j,
        })
    }
}

/// Dispersive coupling g²/(2J)·(1 + λ²/J²)⁻¹.
pub fn derive_chi(p: &SystemParams) -> Result<f64> {
    if p.j <= 0.0 {
        return Err(Error::Domain("chi requires J > 0".into()));
    }
    Ok(p.g * p.g / (2.0 * p.j) / (1.0 + (p.lambda / p.j).powi(2)))
}

/// Photons from squeezing alone at total decay `kappa`, both modes.
pub fn squeezed_photons(lambda: f64, kappa: f64) -> Result<f64> {
    let h = kappa / 2.0;
    if lambda >= h {
        return Err(Error::Unstable { lambda, limit: h });
    }
    Ok(lambda * lambda / (h * h - lambda * lambda))
}

/// Photons generated by the squeezing alone, summed over both normal modes:
/// λ²/((κ/2)² − λ²).
pub fn n_sqz(p: &SystemParams) -> Result<f64> {
    squeezed_photons(p.lambda, p.kappa)
}

/// As [`n_sqz`] with κ replaced by κ_tot, for internally lossy cavities.
pub fn n_sqz_lossy(p: &SystemParams) -> Result<f64> {
    squeezed_photons(p.lambda, p.kappa_tot())
}

/// Critical photon number J/(4χ).
pub fn n_crit(p: &SystemParams) -> Result<f64> {
    let chi = derive_chi(p)?;
    if chi == 0.0 {
        return Err(Error::Domain("n_crit requires chi > 0".into()));
    }
    Ok(p.j / (4.0 * chi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityCondition {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub tol: f64,
    pub conditions: Vec<ValidityCondition>,
    pub notes: Vec<String>,
}

impl ValidityReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&ValidityCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<22} {:>14} {:>10}  status", "condition", "value", "threshold")?;
        for c in &self.conditions {
            let status = if c.pass { "ok" } else { "FAIL" };
            writeln!(f, "{:<22} {:>14.6e} {:>10.3e}  {status}", c.name, c.value, c.threshold)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Evaluate every approximation condition. Each passes iff value < threshold.
pub fn validity_report(p: &SystemParams, tol: f64, nbar: Option<f64>) -> ValidityReport {
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    let chi = derive_chi(p).unwrap_or(f64::NAN);
    let mut conditions = Vec::new();
    let mut push = |name: &str, value: f64, threshold: f64| {
        conditions.push(ValidityCondition {
            name: name.to_string(),
            value,
            threshold,
            pass: value < threshold,
        });
    };
    push("lambda < kappa_tot/2", ratio(2.0 * p.lambda, p.kappa_tot()), 1.0);
    push("lambda/(4J)", ratio(p.lambda, 4.0 * p.j), tol);
    push("lambda*chi/(4J^2)", ratio(p.lambda * chi, 4.0 * p.j * p.j), tol);
    push("g/J", ratio(p.g, p.j), tol);
    push("kappa/J", ratio(p.kappa, p.j), tol);
    if let Some(n) = nbar {
        let nc = if chi > 0.0 { p.j / (4.0 * chi) } else { f64::INFINITY };
        push("nbar/n_crit", n / nc, 1.0);
    }

    let mut notes = vec![
        "stability is checked against kappa_tot = kappa + kappa_int".to_string(),
        "conditions pass only under strict inequality; a ratio equal to the threshold fails"
            .to_string(),
    ];
    if !p.rotating_frame_consistent() {
        notes.push("omega_q != omega_c or omega_p != 2 omega_c: the dispersive frame assumes both".into());
    }
    ValidityReport { tol, conditions, notes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_examples() {
        let p = SystemParams { j: 10.0, g: 1.0, ..Default::default() };
        assert!((derive_chi(&p).unwrap() - 0.05).abs() < 1e-15);
        let p = SystemParams { lambda: 0.45, ..p };
        assert!((derive_chi(&p).unwrap() - 0.05 / 1.002025).abs() < 1e-15);
        let p = SystemParams { g: 0.0, ..p };
        assert_eq!(derive_chi(&p).unwrap(), 0.0);
        assert!(derive_chi(&SystemParams::default()).is_err());
    }

    #[test]
    fn sqz_examples() {
        let p = SystemParams { j: 1.0, lambda: 0.25, ..Default::default() };
        assert!((n_sqz(&p).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let p = SystemParams { lambda: 0.45, ..p };
        assert!((n_sqz(&p).unwrap() - 0.2025 / 0.0475).abs() < 1e-13);
        assert!(n_sqz(&SystemParams { lambda: 0.5, ..p }).is_err());
    }

    #[test]
    fn sqz_diverges_at_threshold() {
        let delta = 1e-3;
        let p = SystemParams { j: 1.0, lambda: 0.5 * (1.0 - delta), ..Default::default() };
        assert!(n_sqz(&p).unwrap() > 1.0 / (2.0 * delta) - 1.0);
    }

    #[test]
    fn n_crit_examples() {
        for (chi, expect) in [(0.1f64, 25.0), (0.05, 50.0), (0.01, 250.0)] {
            let p = SystemParams { j: 10.0, g: (2.0 * 10.0 * chi).sqrt(), ..Default::default() };
            assert!((n_crit(&p).unwrap() - expect).abs() < 1e-9 * expect);
            let c = derive_chi(&p).unwrap();
            assert!((n_crit(&p).unwrap() * c - 10.0 / 4.0).abs() < 1e-12 * 2.5);
        }
    }

    #[test]
    fn report_boundary_and_failures() {
        let p = SystemParams::comparison_point(0.45);
        let r = validity_report(&p, DEFAULT_TOL, None);
        assert_eq!(r.conditions.len(), 5);
        assert!(r.get("lambda < kappa_tot/2").unwrap().pass);
        assert!((r.get("lambda/(4J)").unwrap().value - 0.01125).abs() < 1e-15);
        assert!(r.get("lambda*chi/(4J^2)").unwrap().pass);
        // g/J sits exactly on the threshold
        assert!(!r.get("g/J").unwrap().pass);

        let r = validity_report(&SystemParams::comparison_point(0.6), DEFAULT_TOL, None);
        assert!(!r.get("lambda < kappa_tot/2").unwrap().pass);
        let p = SystemParams { j: 1.0, ..Default::default() };
        assert!(!validity_report(&p, DEFAULT_TOL, None).get("kappa/J").unwrap().pass);
        let r = validity_report(&SystemParams::comparison_point(0.1), DEFAULT_TOL, Some(60.0));
        assert!(!r.get("nbar/n_crit").unwrap().pass);
    }

    #[test]
    fn config_parsing() {
        let p = SystemParams::from_toml_str("j = 10\ng = 1\nlambda = 0.45\n").unwrap();
        assert_eq!(p.kappa, 1.0);
        assert_eq!(p.lambda, 0.45);
        assert!(SystemParams::from_toml_str("g = 1\n").is_err());
        assert!(SystemParams::from_toml_str("j = 1\nbogus = 2\n").is_err());
        assert!(SystemParams::from_toml_str("kappa = -1\n").is_err());
        assert_eq!(SystemParams::from_toml_str("").unwrap(), SystemParams::default());
    }

    #[test]
    fn internal_loss() {
        let p = SystemParams::default().with_internal_loss(0.1).unwrap();
        assert!((p.kappa_tot() - 1.0 / 0.9).abs() < 1e-15);
        assert!((p.epsilon() - 0.1).abs() < 1e-15);
    }
}
