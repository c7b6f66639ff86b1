//! Every numerical tolerance the tool applies, overridable from a JSON file
//! (`--tol-file`). Missing keys keep their defaults; unknown keys are
//! rejected so that a typo cannot silently leave a default in force.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{parse_json, read_file, CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    // model loading
    pub hermitian: f64,
    pub basis_unitarity: f64,
    pub state_normalization: f64,
    pub eps_sing: f64,

    // hilbert
    pub unitarity: f64,
    pub spectral_exactness: f64,

    // app
    pub gauge: f64,
    pub normalization: f64,
    pub mixture: f64,
    pub conjugation: f64,
    pub unitary_decomposition: f64,
    /// Accepted band for the residual ratio when dt is halved.
    pub second_order_ratio: [f64; 2],

    // ergodic
    pub ergodic_law: f64,
    pub a_independence: f64,
    /// Accepted band for the residual ratio between T and 2T.
    pub convergence_ratio: [f64; 2],
    pub ergodic_numeric: f64,
    /// Dephasing agreement in units of spectral constant / T.
    pub dephasing_factor: f64,
    pub uncertainty_rel: f64,
    pub grid_independence: f64,

    // semiclassical
    pub legendre_order_ratio: [f64; 2],

    // freespace
    pub phase_identity: f64,
    pub stationary_width: f64,
    pub fresnel_concentration: f64,
    pub window_rel: f64,
    pub tunnel_rel: f64,
    pub tunnel_split: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            basis_unitarity: 1e-10,
            state_normalization: 1e-8,
            eps_sing: ergophase_core::DEFAULT_EPS_SING,
            unitarity: 1e-10,
            spectral_exactness: 1e-10,
            gauge: 1e-12,
            normalization: 1e-10,
            mixture: 1e-10,
            conjugation: 1e-12,
            unitary_decomposition: 1e-10,
            second_order_ratio: [3.5, 4.5],
            ergodic_law: 1e-12,
            a_independence: 1e-12,
            convergence_ratio: [1.6, 2.4],
            ergodic_numeric: 5e-3,
            dephasing_factor: 2.0,
            uncertainty_rel: 1e-4,
            grid_independence: 1e-5,
            legendre_order_ratio: [3.5, 4.5],
            phase_identity: 1e-9,
            stationary_width: 1e-12,
            fresnel_concentration: 1e-2,
            window_rel: 2e-2,
            tunnel_rel: 2e-2,
            tunnel_split: 3e-2,
        }
    }
}

impl Tolerances {
    pub fn load(path: &Path) -> CliResult<Self> {
        let tol: Self = parse_json(&read_file(path)?, &path.display().to_string())?;
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> CliResult<()> {
        let scalars = [
            ("hermitian", self.hermitian),
            ("basis_unitarity", self.basis_unitarity),
            ("state_normalization", self.state_normalization),
            ("eps_sing", self.eps_sing),
            ("unitarity", self.unitarity),
            ("spectral_exactness", self.spectral_exactness),
            ("gauge", self.gauge),
            ("normalization", self.normalization),
            ("mixture", self.mixture),
            ("conjugation", self.conjugation),
            ("unitary_decomposition", self.unitary_decomposition),
            ("ergodic_law", self.ergodic_law),
            ("a_independence", self.a_independence),
            ("ergodic_numeric", self.ergodic_numeric),
            ("dephasing_factor", self.dephasing_factor),
            ("uncertainty_rel", self.uncertainty_rel),
            ("grid_independence", self.grid_independence),
            ("phase_identity", self.phase_identity),
            ("stationary_width", self.stationary_width),
            ("fresnel_concentration", self.fresnel_concentration),
            ("window_rel", self.window_rel),
            ("tunnel_rel", self.tunnel_rel),
            ("tunnel_split", self.tunnel_split),
        ];
        for (name, v) in scalars {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Validation(format!(
                    "tolerance `{name}` must be positive, got {v}"
                )));
            }
        }
        for (name, [lo, hi]) in [
            ("second_order_ratio", self.second_order_ratio),
            ("convergence_ratio", self.convergence_ratio),
            ("legendre_order_ratio", self.legendre_order_ratio),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CliError::Validation(format!(
                    "band `{name}` must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let tol: Tolerances = parse_json(r#"{"gauge": 1e-9}"#, "t").unwrap();
        assert_eq!(tol.gauge, 1e-9);
        assert_eq!(tol.normalization, Tolerances::default().normalization);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_json::<Tolerances>(r#"{"guage": 1e-9}"#, "t").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn inverted_band_is_rejected() {
        let tol = Tolerances {
            convergence_ratio: [2.4, 1.6],
            ..Tolerances::default()
        };
        assert!(tol.validate().is_err());
    }
}
