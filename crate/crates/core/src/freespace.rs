//! Closed-form action phase probabilities for a free particle and for
//! propagation under a constant barrier, with quadrature of their time
//! integrals.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::app::ActionDecomposition;
use crate::error::{Error, Result};
use crate::phase::{arg, C64};
use crate::quad::{integrate, integrate_oscillatory, QuadOptions};

/// Largest stationary width, relative to the window, for which the window
/// integral is expected to follow the stationary-phase value.
pub const MAX_WIDTH_RATIO: f64 = 0.05;

/// Relative accuracy requested from the window quadrature.
pub const WINDOW_REL_TOL: f64 = 1e-9;

/// Relative accuracy requested from the barrier time integral.
pub const TUNNEL_REL_TOL: f64 = 1e-9;

/// One-dimensional particle of mass `m` moving from `x0` to `x`. The
/// propagating branch uses momentum `p`; the barrier branch uses potential
/// `v` above energy `e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeParticleConfig {
    pub m: f64,
    pub p: f64,
    pub x0: f64,
    pub x: f64,
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
}

impl FreeParticleConfig {
    pub fn propagating(m: f64, p: f64, x0: f64, x: f64, hbar: f64) -> Result<Self> {
        let cfg = Self {
            m,
            p,
            x0,
            x,
            hbar,
            v: None,
            e: None,
        };
        cfg.validate()?;
        if p == 0.0 {
            return Err(Error::InvalidGeometry(
                "propagating branch needs p != 0".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn tunneling(m: f64, v: f64, e: f64, x0: f64, x: f64, hbar: f64) -> Result<Self> {
        let cfg = Self {
            m,
            p: 0.0,
            x0,
            x,
            hbar,
            v: Some(v),
            e: Some(e),
        };
        cfg.validate()?;
        cfg.barrier()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m, self.p, self.x0, self.x, self.hbar]
            .iter()
            .chain(self.v.iter())
            .chain(self.e.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(
                "non-finite particle parameter".into(),
            ));
        }
        if !(self.m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {}",
                self.m
            )));
        }
        if !(self.hbar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        Ok(())
    }

    /// `L = x - x0`.
    pub fn length(&self) -> f64 {
        self.x - self.x0
    }

    /// `E_p = p^2 / 2m`.
    pub fn kinetic_energy(&self) -> f64 {
        self.p * self.p / (2.0 * self.m)
    }

    /// Classical arrival time `m L / p`.
    pub fn arrival_time(&self) -> f64 {
        self.m * self.length() / self.p
    }

    /// `(V - E, kappa)` with `kappa = sqrt(2 m (V - E))`.
    fn barrier(&self) -> Result<(f64, f64)> {
        let (v, e) = match (self.v, self.e) {
            (Some(v), Some(e)) => (v, e),
            _ => {
                return Err(Error::InvalidParameter(
                    "barrier branch needs both V and E".into(),
                ))
            }
        };
        if v <= e {
            return Err(Error::NotTunneling {
                potential: v,
                energy: e,
            });
        }
        Ok((v - e, (2.0 * self.m * (v - e)).sqrt()))
    }

    /// `exp(-kappa L / hbar)`, the static barrier suppression.
    pub fn suppression(&self) -> Result<f64> {
        let (_, kappa) = self.barrier()?;
        Ok((-kappa * self.length().abs() / self.hbar).exp())
    }

    fn require_forward(&self) -> Result<()> {
        if !(self.p > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "need p > 0, got {}",
                self.p
            )));
        }
        if !(self.length() > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "need x > x0, got L = {}",
                self.length()
            )));
        }
        Ok(())
    }
}

fn require_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveTime(t))
    }
}

/// `sqrt(m / 2 pi hbar t)`.
fn density_modulus(cfg: &FreeParticleConfig, t: f64) -> f64 {
    (cfg.m / (2.0 * PI * cfg.hbar * t)).sqrt()
}

/// Unwrapped phase `(m / 2 hbar t) (L - p t / m)^2 - pi/4` of [`free_app`].
pub fn free_phase(cfg: &FreeParticleConfig, t: f64) -> f64 {
    let d = cfg.length() - cfg.p * t / cfg.m;
    cfg.m * d * d / (2.0 * cfg.hbar * t) - FRAC_PI_4
}

/// `P(x(t)|x0, p) = sqrt(m / 2 pi hbar t) exp(i (m / 2 hbar t)(L - p t/m)^2 - i pi/4)`.
pub fn free_app(cfg: &FreeParticleConfig, t: f64) -> Result<C64> {
    require_time(t)?;
    Ok(Complex64::from_polar(
        density_modulus(cfg, t),
        free_phase(cfg, t),
    ))
}

/// `S_t = m L^2 / 2t - hbar pi/4`, `S_E = sqrt(2 m E_p) L`, with the total
/// taken from the phase of [`free_app`].
pub fn free_action_split(cfg: &FreeParticleConfig, t: f64) -> Result<ActionDecomposition> {
    require_time(t)?;
    if !(cfg.p > 0.0) {
        return Err(Error::InvalidGeometry(format!("need p > 0, got {}", cfg.p)));
    }
    let l = cfg.length();
    let e_p = cfg.kinetic_energy();
    Ok(ActionDecomposition {
        s_t: cfg.m * l * l / (2.0 * t) - cfg.hbar * FRAC_PI_4,
        e_n_t: e_p * t,
        s_e: (2.0 * cfg.m * e_p).sqrt() * l,
        total: cfg.hbar * arg(free_app(cfg, t)?),
        hbar: cfg.hbar,
    })
}

/// `Delta t = (m / p) sqrt(hbar L / p)`, the stationary-phase width at the
/// classical arrival time.
pub fn stationary_width(cfg: &FreeParticleConfig) -> Result<f64> {
    cfg.require_forward()?;
    Ok(cfg.m / cfg.p * (cfg.hbar * cfg.length() / cfg.p).sqrt())
}

/// `phi''(t_c) = p^3 / (hbar m^2 L)` for the phase of [`free_app`].
pub fn free_phase_curvature(cfg: &FreeParticleConfig) -> Result<f64> {
    cfg.require_forward()?;
    Ok(cfg.p.powi(3) / (cfg.hbar * cfg.m * cfg.m * cfg.length()))
}

/// `H(b, a, t) = m L^2 / 2t^2 - i hbar / 2t` for the free propagator.
pub fn free_weak_energy(cfg: &FreeParticleConfig, t: f64) -> Result<C64> {
    require_time(t)?;
    let l = cfg.length();
    Ok(C64::new(
        cfg.m * l * l / (2.0 * t * t),
        -cfg.hbar / (2.0 * t),
    ))
}

/// Window average of the free action phase probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowIntegral {
    /// `(1/T) int_{t_c - T/2}^{t_c + T/2} P dt`.
    pub numeric: C64,
    /// `m / (T p)`.
    pub claimed: f64,
    pub t_c: f64,
    pub window: f64,
    pub delta_t: f64,
    pub quad_error: f64,
}

impl WindowIntegral {
    pub fn relative_error(&self) -> f64 {
        (self.numeric - self.claimed).norm() / self.claimed
    }

    pub fn width_ratio(&self) -> f64 {
        self.delta_t / self.window
    }
}

/// Averages [`free_app`] over a window of length `T` centred on the
/// classical arrival time.
pub fn partial_ergodic_free(cfg: &FreeParticleConfig, window: f64) -> Result<WindowIntegral> {
    cfg.require_forward()?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "window must be positive, got {window}"
        )));
    }
    let t_c = cfg.arrival_time();
    let (start, end) = (t_c - 0.5 * window, t_c + 0.5 * window);
    if start <= 0.0 {
        return Err(Error::WindowCrossesZero { start, end });
    }
    let delta_t = stationary_width(cfg)?;
    let ratio = delta_t / window;
    if ratio > MAX_WIDTH_RATIO {
        return Err(Error::WidthTooLarge {
            ratio,
            max_ratio: MAX_WIDTH_RATIO,
        });
    }
    let opts = QuadOptions::default().with_rel_tol(WINDOW_REL_TOL);
    let f = |t: f64| Complex64::from_polar(density_modulus(cfg, t), free_phase(cfg, t));
    let r = integrate_oscillatory(f, |t| free_phase(cfg, t), start, end, opts)?;
    Ok(WindowIntegral {
        numeric: r.value / window,
        claimed: cfg.m / (window * cfg.p),
        t_c,
        window,
        delta_t,
        quad_error: r.error / window,
    })
}

/// Integral of [`free_app`] over `t_c +- k Delta t` next to its
/// complex-Gaussian (Fresnel) prediction
/// `sqrt(m / 2 pi hbar t_c) e^{-i pi/4} Delta t int_{-k}^{k} e^{i u^2/2} du`.
pub fn stationary_concentration(cfg: &FreeParticleConfig, k: f64) -> Result<(C64, C64)> {
    let delta_t = stationary_width(cfg)?;
    let t_c = cfg.arrival_time();
    let (start, end) = (t_c - k * delta_t, t_c + k * delta_t);
    if start <= 0.0 {
        return Err(Error::WindowCrossesZero { start, end });
    }
    let opts = QuadOptions::default().with_rel_tol(WINDOW_REL_TOL);
    let f = |t: f64| Complex64::from_polar(density_modulus(cfg, t), free_phase(cfg, t));
    let window = integrate_oscillatory(f, |t| free_phase(cfg, t), start, end, opts)?.value;
    let fresnel = integrate(|u| Complex64::from_polar(1.0, 0.5 * u * u), -k, k, opts)?.value;
    let prediction =
        Complex64::from_polar(density_modulus(cfg, t_c) * delta_t, -FRAC_PI_4) * fresnel;
    Ok((window, prediction))
}

/// Time-dependent factor of the barrier probability:
/// `sqrt(m / 2 pi hbar t) exp(i m L^2 / 2 hbar t - i (V - E) t / hbar - i pi/4)`.
fn tunnel_oscillatory(cfg: &FreeParticleConfig, gap: f64, t: C64) -> C64 {
    let l = cfg.length();
    let phase = C64::new(0.0, 1.0)
        * (cfg.m * l * l / (2.0 * cfg.hbar * t) - gap * t / cfg.hbar - FRAC_PI_4);
    (cfg.m / (2.0 * PI * cfg.hbar * t)).sqrt() * phase.exp()
}

/// `P(x(t)|x0, E)` under a barrier `V > E`: the oscillatory factor times
/// `exp(-kappa L / hbar)`.
pub fn tunnel_app(cfg: &FreeParticleConfig, t: f64) -> Result<C64> {
    let (gap, _) = cfg.barrier()?;
    require_time(t)?;
    Ok(tunnel_oscillatory(cfg, gap, C64::new(t, 0.0)) * cfg.suppression()?)
}

/// `H(b, a, t) = V + m L^2 / 2t^2 - i hbar / 2t`; its real part stays above
/// the energy for all times.
pub fn tunnel_weak_energy(cfg: &FreeParticleConfig, t: f64) -> Result<C64> {
    let (gap, _) = cfg.barrier()?;
    let e = cfg.e.expect("barrier checked");
    Ok(free_weak_energy(cfg, t)? + (e + gap))
}

/// `int_0^inf` of the oscillatory barrier factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeIntegral {
    pub value: C64,
    pub error: f64,
}

/// Integrates the oscillatory barrier factor over `t in (0, inf)`.
///
/// The real axis is kept on `[t1, t2]` around the scale `sqrt(a/c)` with
/// `a = m L^2 / 2 hbar`, `c = (V - E)/hbar`. The head `(0, t1]` is mapped to
/// `s = 1/t` and integrated along `s = 1/t1 + i sigma`, the tail along
/// `t = t2 - i sigma`; both rays make the integrand decay exponentially.
pub fn tunnel_time_integral(cfg: &FreeParticleConfig, rel_tol: f64) -> Result<TimeIntegral> {
    let (gap, _) = cfg.barrier()?;
    let l = cfg.length().abs();
    if l == 0.0 {
        // a = 0: only the tail ray is needed.
        return tail_ray(cfg, gap, 0.0, rel_tol);
    }
    let a = cfg.m * l * l / (2.0 * cfg.hbar);
    let c = gap / cfg.hbar;
    let scale = (a / c).sqrt();
    let (t1, t2) = (0.25 * scale, 16.0 * scale);
    let opts = QuadOptions::default().with_rel_tol(rel_tol);
    let i = C64::new(0.0, 1.0);

    let middle = integrate_oscillatory(
        |t| tunnel_oscillatory(cfg, gap, C64::new(t, 0.0)),
        |t| a / t - c * t,
        t1,
        t2,
        opts,
    )?;

    // Head: t = 1/s, dt = -ds/s^2, s from 1/t1 to inf, then s = s1 + i sigma.
    let s1 = 1.0 / t1;
    let head_decay = a; // |exp(i a s)| = exp(-a sigma)
    let head = ray(
        |sigma| {
            let s = C64::new(s1, sigma);
            tunnel_oscillatory(cfg, gap, 1.0 / s) / (s * s) * i
        },
        head_decay,
        opts,
    )?;

    let tail = tail_ray(cfg, gap, t2, rel_tol)?;
    let value = middle.value + head.value + tail.value;
    let error = middle.error + head.error + tail.error;
    Ok(TimeIntegral { value, error })
}

/// `int_{t0}^{inf}` along `t = t0 - i sigma`.
fn tail_ray(cfg: &FreeParticleConfig, gap: f64, t0: f64, rel_tol: f64) -> Result<TimeIntegral> {
    let opts = QuadOptions::default().with_rel_tol(rel_tol);
    let c = gap / cfg.hbar;
    ray(
        |sigma| tunnel_oscillatory(cfg, gap, C64::new(t0, -sigma)) * C64::new(0.0, -1.0),
        c,
        opts,
    )
}

/// `int_0^inf f(sigma) d sigma` for an integrand decaying like
/// `exp(-rate sigma)`, split into unit-decay panels and cut once the
/// remaining envelope is negligible.
fn ray(f: impl Fn(f64) -> C64, rate: f64, opts: QuadOptions) -> Result<TimeIntegral> {
    const DECAYS: f64 = 40.0;
    let span = DECAYS / rate;
    let mut breaks: Vec<f64> = vec![0.0];
    // Geometric panels near sigma = 0 resolve integrable endpoint behaviour.
    let mut x = span * 1e-8;
    while x < 1.0 / rate {
        breaks.push(x);
        x *= 4.0;
    }
    let mut k = 1.0;
    while k <= DECAYS {
        breaks.push(k / rate);
        k += 1.0;
    }
    let r = crate::quad::integrate_panels(&f, &breaks, opts)
        .map_err(|e| Error::TailNotConverged(format!("contour ray: {e}")))?;
    let envelope_left = f(span).norm() / rate;
    if envelope_left > 1e-4 * r.value.norm().max(opts.abs_tol) {
        return Err(Error::TailNotConverged(format!(
            "remaining envelope {envelope_left:e} after {DECAYS} decay lengths"
        )));
    }
    Ok(TimeIntegral {
        value: r.value,
        error: r.error,
    })
}

/// Time-averaged barrier probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunnelResult {
    /// `|int_0^inf P dt| / T`.
    pub numeric: f64,
    /// The complex integral over `T`; its phase is `-pi/2`.
    pub integral: C64,
    /// `m / (T kappa) exp(-2 kappa L / hbar)`.
    pub claimed: f64,
    pub quad_error: f64,
}

impl TunnelResult {
    pub fn relative_error(&self) -> f64 {
        (self.numeric - self.claimed).abs() / self.claimed
    }
}

pub fn tunnel_ergodic(cfg: &FreeParticleConfig, window: f64) -> Result<TunnelResult> {
    tunnel_ergodic_with(cfg, window, TUNNEL_REL_TOL)
}

pub fn tunnel_ergodic_with(
    cfg: &FreeParticleConfig,
    window: f64,
    rel_tol: f64,
) -> Result<TunnelResult> {
    let (_, kappa) = cfg.barrier()?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "window must be positive, got {window}"
        )));
    }
    let s = cfg.suppression()?;
    let r = tunnel_time_integral(cfg, rel_tol)?;
    let integral = r.value * s / window;
    Ok(TunnelResult {
        numeric: integral.norm(),
        integral,
        claimed: cfg.m / (window * kappa) * s * s,
        quad_error: r.error * s / window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(p: f64, l: f64) -> FreeParticleConfig {
        FreeParticleConfig::propagating(1.0, p, 0.0, l, 1.0).unwrap()
    }

    fn barrier(gap: f64, l: f64) -> FreeParticleConfig {
        FreeParticleConfig::tunneling(1.0, gap, 0.0, 0.0, l, 1.0).unwrap()
    }

    #[test]
    fn free_app_examples() {
        let cfg = unit(1.0, 5.0);
        let v = free_app(&cfg, 5.0).unwrap();
        assert!((v.arg() + FRAC_PI_4).abs() < 1e-15);
        assert!((v.norm() - (1.0 / (10.0 * PI)).sqrt()).abs() < 1e-15);
        let v = free_app(&cfg, 4.0).unwrap();
        assert!((v.arg() - (0.125 - FRAC_PI_4)).abs() < 1e-14);
        let far = FreeParticleConfig::propagating(1.0, 1.0, 0.0, 50.0, 1.0).unwrap();
        assert!((free_app(&far, 4.0).unwrap().norm() - v.norm()).abs() < 1e-15);
        assert_eq!(free_app(&cfg, 0.0), Err(Error::NonpositiveTime(0.0)));
    }

    #[test]
    fn action_split_examples() {
        let cfg = unit(2.0, 8.0);
        let d = free_action_split(&cfg, cfg.arrival_time()).unwrap();
        assert!(d.identity_defect() < 1e-12);
        assert!((d.total + FRAC_PI_4).abs() < 1e-12);
        let zero = FreeParticleConfig::propagating(1.0, 1.0, 3.0, 3.0, 1.0).unwrap();
        let d = free_action_split(&zero, 0.7).unwrap();
        assert_eq!(d.s_e, 0.0);
        assert!((d.s_t + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn stationary_width_examples() {
        assert!((stationary_width(&unit(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-15);
        let w1 = stationary_width(&unit(1.3, 2.0)).unwrap();
        let w4 = stationary_width(&unit(1.3, 8.0)).unwrap();
        assert!((w4 / w1 - 2.0).abs() < 1e-14);
        assert!(matches!(
            stationary_width(&unit(1.0, -1.0)),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn curvature_by_finite_differences() {
        let cfg = FreeParticleConfig::propagating(1.7, 2.3, 0.5, 6.0, 0.8).unwrap();
        let tc = cfg.arrival_time();
        let h = 1e-3 * tc;
        let fd = (free_phase(&cfg, tc + h) - 2.0 * free_phase(&cfg, tc) + free_phase(&cfg, tc - h))
            / (h * h);
        let exact = free_phase_curvature(&cfg).unwrap();
        assert!((fd - exact).abs() / exact < 1e-5);
        let w = stationary_width(&cfg).unwrap();
        assert!((w - 1.0 / exact.sqrt()).abs() < 1e-12 * w);
    }

    #[test]
    fn window_integral_preconditions() {
        let cfg = unit(2.0, 40.0);
        assert!(matches!(
            partial_ergodic_free(&cfg, 10.0),
            Err(Error::WidthTooLarge { .. })
        ));
        assert!(matches!(
            partial_ergodic_free(&cfg, 50.0),
            Err(Error::WindowCrossesZero { .. })
        ));
    }

    #[test]
    fn window_integral_tracks_claim_when_width_is_small() {
        // Delta t = 2, t_c = 400, Delta t / T = 0.005.
        let cfg = FreeParticleConfig::propagating(1.0, 10.0, 0.0, 4000.0, 1.0).unwrap();
        let window = stationary_width(&cfg).unwrap() / 0.005;
        let r = partial_ergodic_free(&cfg, window).unwrap();
        assert!(r.relative_error() < 0.02, "{}", r.relative_error());
        assert!(r.quad_error < 1e-8 * r.claimed);
    }

    #[test]
    fn fresnel_prediction_matches_window() {
        // k Delta t / t_c <= 0.025 keeps cubic phase terms small.
        let cfg = FreeParticleConfig::propagating(1.0, 10.0, 0.0, 4000.0, 1.0).unwrap();
        for k in [1.0, 3.0, 5.0] {
            let (window, prediction) = stationary_concentration(&cfg, k).unwrap();
            assert!((window - prediction).norm() / prediction.norm() < 0.02);
        }
    }

    #[test]
    fn free_weak_energy_crosses_at_arrival() {
        let cfg = unit(2.0, 10.0);
        let h = free_weak_energy(&cfg, cfg.arrival_time()).unwrap();
        assert!((h.re - cfg.kinetic_energy()).abs() < 1e-14);
    }

    #[test]
    fn tunnel_app_examples() {
        let cfg = barrier(0.5, 2.0);
        assert!((cfg.suppression().unwrap() - (-2.0f64).exp()).abs() < 1e-16);
        assert_eq!(barrier(0.5, 0.0).suppression().unwrap(), 1.0);
        let t = 0.9;
        let v = tunnel_app(&cfg, t).unwrap();
        let modulus = (1.0 / (2.0 * PI * t)).sqrt() * (-2.0f64).exp();
        assert!((v.norm() - modulus).abs() < 1e-15);
        let longer = tunnel_app(&barrier(0.5, 3.0), t).unwrap();
        assert!(longer.norm() < v.norm());
        assert!(matches!(
            FreeParticleConfig::tunneling(1.0, 0.5, 0.5, 0.0, 1.0, 1.0),
            Err(Error::NotTunneling { .. })
        ));
    }

    #[test]
    fn time_integral_has_closed_form() {
        // int_0^inf = -i (m / kappa) exp(-kappa L / hbar).
        for (gap, l) in [(0.5, 2.0), (0.25, 1.0), (1.0, 4.0), (2.0, 0.0)] {
            let cfg = barrier(gap, l);
            let kappa = (2.0 * gap).sqrt();
            let exact = C64::new(0.0, -1.0 / kappa * (-kappa * l).exp());
            let r = tunnel_time_integral(&cfg, 1e-10).unwrap();
            assert!(
                (r.value - exact).norm() < 1e-8 * exact.norm(),
                "{gap} {l}: {} vs {exact}",
                r.value
            );
        }
    }

    #[test]
    fn tunnel_ergodic_example() {
        let cfg = barrier(0.5, 2.0);
        let r = tunnel_ergodic(&cfg, 1.0).unwrap();
        assert!((r.claimed - (-4.0f64).exp()).abs() < 1e-15);
        assert!(r.relative_error() < 0.02);
        assert!((r.integral.arg() + PI / 2.0).abs() < 1e-6);
        let loose = tunnel_ergodic_with(&cfg, 1.0, 2e-9).unwrap();
        assert!((loose.numeric - r.numeric).abs() < 1e-3 * r.numeric);
    }

    #[test]
    fn tunnel_weak_energy_stays_above_energy() {
        let cfg = barrier(0.5, 2.0);
        for t in [0.01, 1.0, 100.0, 1e6] {
            assert!(tunnel_weak_energy(&cfg, t).unwrap().re > 0.5);
        }
    }
}
