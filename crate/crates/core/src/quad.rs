//! Quadrature rules used by the ergodic and free-space modules.
//!
//! Complex integrands are integrated with a globally adaptive 21-point
//! Gauss–Kronrod rule. Oscillatory integrands are first cut into panels over
//! which the phase changes by less than `pi/2`. All reductions use pairwise
//! summation in a fixed order so results do not depend on scheduling.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::phase::C64;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_606_645,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// 10-point Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub panels: usize,
}

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_panels: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Max-heap on error; ties broken by position so the split order is fixed.
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

fn gk21(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = C64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += sum * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
    }
}

fn ordered_total(panels: &[Panel]) -> (C64, f64) {
    let mut sorted: Vec<&Panel> = panels.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<C64> = sorted.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = sorted.iter().map(|p| p.error).collect();
    (pairwise_sum_c(&values), pairwise_sum(&errors))
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `breakpoints`
/// (consecutive pairs define the initial panels).
pub fn integrate_panels(
    f: impl Fn(f64) -> C64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two breakpoints".into(),
        ));
    }
    let initial: Vec<Panel> = breakpoints
        .windows(2)
        .map(|w| gk21(&f, w[0], w[1]))
        .collect();
    let (mut value, mut error) = ordered_total(&initial);
    let mut heap: BinaryHeap<Panel> = initial.into_iter().collect();
    loop {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::QuadratureFailure {
                error: f64::INFINITY,
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.norm());
        if error <= target {
            // Recompute in position order so the result is independent of
            // the refinement history.
            let panels = heap.into_vec();
            let (value, error) = ordered_total(&panels);
            return Ok(QuadResult {
                value,
                error,
                panels: panels.len(),
            });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::QuadratureFailure { error });
        }
        let p = heap.pop().expect("nonempty");
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::QuadratureFailure { error });
        }
        let left = gk21(&f, p.a, mid);
        let right = gk21(&f, mid, p.b);
        value += left.value + right.value - p.value;
        error = (error + left.error + right.error - p.error).max(0.0);
        heap.push(left);
        heap.push(right);
    }
}

/// Adaptive integration over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> C64, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_panels(f, &[a, b], opts)
}

/// Breakpoints on `[a, b]` such that the phase varies by less than `pi/2`
/// across every panel (checked at five points per panel).
pub fn phase_resolved_breakpoints(phase: impl Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    fn resolved(phase: &impl Fn(f64) -> f64, a: f64, b: f64) -> bool {
        let samples: Vec<f64> = (0..5)
            .map(|k| phase(a + (b - a) * k as f64 / 4.0))
            .collect();
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo < FRAC_PI_2
    }
    let mut out = vec![a];
    let mut stack = vec![(a, b)];
    // Depth-first, right half pushed first, so breakpoints come out ascending.
    while let Some((l, r)) = stack.pop() {
        if resolved(&phase, l, r) || r - l <= 1e-12 * (a.abs() + b.abs()).max(1.0) {
            out.push(r);
        } else {
            let m = 0.5 * (l + r);
            stack.push((m, r));
            stack.push((l, m));
        }
    }
    out
}

/// Integrates an oscillatory `f` whose phase is `phase(t)`, subdividing so
/// each initial panel spans less than a quarter turn.
pub fn integrate_oscillatory(
    f: impl Fn(f64) -> C64,
    phase: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    let bp = phase_resolved_breakpoints(phase, a, b);
    let opts = QuadOptions {
        max_panels: opts.max_panels.max(4 * bp.len()),
        ..opts
    };
    integrate_panels(f, &bp, opts)
}

/// Gauss–Hermite nodes and weights for `int exp(-x^2) f(x) dx`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite trapezoid on a uniform grid.
pub fn trapezoid_uniform(values: &[C64], dt: f64) -> C64 {
    match values.len() {
        0 | 1 => C64::new(0.0, 0.0),
        n => {
            let interior = pairwise_sum_c(&values[1..n - 1]);
            (interior + 0.5 * (values[0] + values[n - 1])) * dt
        }
    }
}

/// Normalized trapezoid weights for `n >= 2` equispaced nodes on `[a, b]`.
pub fn trapezoid_nodes(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    let total = (b - a).abs();
    (0..n)
        .map(|k| {
            let w = if k == 0 || k == n - 1 { 0.5 * h } else { h };
            let w = if total > 0.0 {
                w.abs() / total
            } else {
                1.0 / n as f64
            };
            (a + h * k as f64, w)
        })
        .collect()
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_c(xs: &[C64]) -> C64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_c(&xs[..mid]) + pairwise_sum_c(&xs[mid..])
}

/// `sqrt(pi)`, the total weight of the Gauss–Hermite rule.
pub const SQRT_PI: f64 = 1.772_453_850_905_516;
