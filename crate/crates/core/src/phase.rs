//! Branch conventions for complex arguments and actions.
//!
//! Arguments live in `(-pi, pi]`; `-pi` is folded onto `+pi`. Action
//! identities are compared modulo `2 pi hbar`.

use std::f64::consts::PI;

pub type C64 = num_complex::Complex64;

/// `Arg z` in `(-pi, pi]`.
pub fn arg(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Maps `x` into `(-pi, pi]`.
pub fn wrap(x: f64) -> f64 {
    let mut r = (x + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r = PI;
    }
    r
}

/// Distance between two actions modulo `2 pi hbar`, in units of action.
pub fn action_distance(s1: f64, s2: f64, hbar: f64) -> f64 {
    (hbar * wrap((s1 - s2) / hbar)).abs()
}

/// Nearest-branch continuation: each element is shifted by the multiple of
/// `2 pi hbar` that minimizes its jump from the previous (already unwrapped)
/// element.
pub fn unwrap_actions(actions: &[f64], hbar: f64) -> Vec<f64> {
    let period = 2.0 * PI * hbar;
    let mut out = Vec::with_capacity(actions.len());
    for (i, &s) in actions.iter().enumerate() {
        if i == 0 {
            out.push(s);
            continue;
        }
        let prev: f64 = out[i - 1];
        let k = ((prev - s) / period).round();
        out.push(s + k * period);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_is_half_open() {
        assert_eq!(arg(C64::new(-0.25, 0.0)), PI);
        assert_eq!(arg(C64::new(-0.25, -0.0)), PI);
        assert!((arg(C64::new(0.5, 0.5)) - PI / 4.0).abs() < 1e-15);
        assert_eq!(arg(C64::new(2.0, 0.0)), 0.0);
        assert_eq!(wrap(-PI), PI);
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(0.1 + 4.0 * PI) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let hbar = 0.5;
        let truth: Vec<f64> = (0..50).map(|k| 0.3 * k as f64).collect();
        let wrapped: Vec<f64> = truth.iter().map(|s| hbar * wrap(s / hbar)).collect();
        let un = unwrap_actions(&wrapped, hbar);
        for (a, b) in un.iter().zip(&truth) {
            assert!((a - b - (un[0] - truth[0])).abs() < 1e-12);
        }
    }
}
