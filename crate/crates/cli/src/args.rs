use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "ergophase",
    version,
    about = "Complex action phase probabilities on finite-dimensional models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Model JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file (stdout when omitted). A `<out>.meta.json` side file is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file overriding any subset of the default tolerances.
    #[arg(long)]
    pub tol_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Grid {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[arg(long)]
    pub t1: f64,
    #[arg(long)]
    pub dt: f64,
}

impl Grid {
    /// `t0, t0 + dt, ...` up to and including `t1` (within rounding).
    pub fn times(&self) -> Result<Vec<f64>, String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("--dt must be positive, got {}", self.dt));
        }
        if !(self.t1 >= self.t0 && self.t0.is_finite() && self.t1.is_finite()) {
            return Err(format!(
                "--t1 ({}) must not precede --t0 ({})",
                self.t1, self.t0
            ));
        }
        let steps = ((self.t1 - self.t0) / self.dt + 1e-9).floor() as usize;
        if steps > 50_000_000 {
            return Err(format!("grid of {steps} steps is too large"));
        }
        Ok((0..=steps).map(|k| self.t0 + k as f64 * self.dt).collect())
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Kirkwood-Dirac joint distribution of two bases in a state.
    KdJoint {
        #[command(flatten)]
        common: Common,
        /// State reference: a state name or basis/label.
        #[arg(long)]
        state: String,
        /// Basis name for the first property.
        #[arg(long)]
        a: String,
        /// Basis name for the second property.
        #[arg(long)]
        b: String,
    },
    /// Conditional action phase probabilities P(n|a,b) over a basis.
    CondApp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Basis of intermediate outcomes n.
        #[arg(long, default_value = "hamiltonian")]
        basis: String,
        /// Condition on degenerate eigenspaces instead of eigenvectors (energy basis only).
        #[arg(long)]
        eigenspace: bool,
    },
    /// Time series of P(b(t)|a,n) for every b in a basis (CSV: t,b_label,re,im,abs,arg).
    EvolveApp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        /// Basis name for the final outcomes.
        #[arg(long)]
        b: String,
        /// Energy level: index, eigenbasis label, or basis/label.
        #[arg(long)]
        n: String,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        eigenspace: bool,
    },
    /// Weak value of the energy H(b,a,t) on a time grid.
    WeakEnergy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Also report the phase-evolution residual of P(b(t)|a,n) for this level.
        #[arg(long)]
        n: Option<String>,
        #[command(flatten)]
        grid: Grid,
    },
    /// Long-time average of P(b(t)|a,n): numeric, analytic and Born values.
    Ergodic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        /// Basis name for the final outcomes.
        #[arg(long)]
        b: String,
        #[arg(long)]
        n: String,
        /// Averaging time.
        #[arg(long = "T", default_value_t = 500.0)]
        t_total: f64,
        /// Trapezoid step; defaults to the largest allowed step capped at 0.01.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        eigenspace: bool,
    },
    /// P(b(t)|a,n) convolved with a temporal kernel.
    PartialErgodic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        n: String,
        /// `gaussian:<sigma>` or `uniform:<half width>`.
        #[arg(long)]
        kernel: String,
        #[command(flatten)]
        grid: Grid,
    },
    /// Energy-time uncertainty product of a temporal kernel.
    Uncertainty {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kernel: String,
        /// Defaults to the model's hbar, or 1 without a model.
        #[arg(long)]
        hbar: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        e_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        e_max: Option<f64>,
        #[arg(long, default_value_t = 4001)]
        e_points: usize,
    },
    /// Classical arrival times, t_nm table and energy coarse-graining sweep.
    Semiclassical {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        n: String,
        #[command(flatten)]
        grid: Grid,
        /// Comma-separated coarse-graining widths.
        #[arg(long, value_delimiter = ',')]
        widths: Vec<f64>,
    },
    /// Closed-form free-particle and barrier results.
    Freespace {
        #[command(subcommand)]
        which: Freespace,
    },
    /// Run the full invariant suite on a model; exit 3 if anything fails.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParticleFlags {
    /// JSON file with any of m, p, v, e, x0, x, hbar, T; flags override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Window length; the window is centred on the classical arrival time.
    #[arg(long = "T")]
    pub t_total: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Freespace {
    /// Free propagation at momentum p: window integral, stationary width.
    Propagate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        particle: ParticleFlags,
        #[arg(long, allow_negative_numbers = true)]
        p: Option<f64>,
    },
    /// Barrier of height V at energy E: ergodic tunneling probability.
    Tunnel {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        particle: ParticleFlags,
        #[arg(long, allow_negative_numbers = true)]
        v: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        e: Option<f64>,
    },
}
