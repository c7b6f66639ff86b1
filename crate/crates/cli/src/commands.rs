//! One function per subcommand. Each returns an [`Artifact`]; writing it out
//! is left to the caller.

use std::fmt::Write as _;
use std::path::Path;

use ergophase_core::app::{
    conditional_app, conditional_app_eigenspaces, conditional_motion, kd_joint,
    phase_evolution_check, weak_energy_series,
};
use ergophase_core::ergodic::{
    decoherence_factor, ergodic_average_numeric, ergodic_convergence, ergodic_law_analytic,
    ergodic_law_eigenspace, max_dt, partial_randomize, uncertainty_product,
};
use ergophase_core::freespace::{
    free_action_split, free_phase_curvature, partial_ergodic_free, stationary_width, tunnel_ergodic,
};
use ergophase_core::phase::arg;
use ergophase_core::semiclassical::{
    classical_arrival, coarse_grain_energy, reduced_actions, tnm_table,
};
use ergophase_core::{
    Error, FreeParticleConfig, MotionApp, OrthonormalBasis, RandomizationKernel, Resolution,
    TimeSeriesSource, C64,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{Grid, ParticleFlags};
use crate::error::{parse_json, read_file, CliError, CliResult};
use crate::model::ModelSystem;
use crate::output::{cplx, csv_escape, envelope, num, push_complex, Artifact, Format};
use crate::tolerances::Tolerances;

fn times(grid: &Grid) -> CliResult<Vec<f64>> {
    grid.times().map_err(CliError::Usage)
}

fn action(z: C64, hbar: f64) -> Value {
    if z == C64::new(0.0, 0.0) {
        Value::Null
    } else {
        num(hbar * arg(z))
    }
}

/// True when `basis` holds exactly the phase-fixed energy eigenvectors.
fn is_energy_basis(model: &ModelSystem, basis: &OrthonormalBasis) -> bool {
    basis
        .vectors()
        .iter()
        .zip(model.spectrum.eigenvectors().vectors())
        .all(|(u, v)| u.amplitudes() == v.amplitudes())
}

fn resolution(eigenspace: bool) -> Resolution {
    if eigenspace {
        Resolution::Eigenspace
    } else {
        Resolution::Eigenvector
    }
}

fn degeneracy_note(model: &ModelSystem, n: usize, eigenspace: bool) -> Option<String> {
    (!eigenspace && model.spectrum.is_degenerate(n)).then(|| {
        format!(
            "level {n} is degenerate; eigenvector-resolved results depend on the phase-fixed basis \
             inside the eigenspace (use --eigenspace for the projector form)"
        )
    })
}

/// `t,b_label,re,im,abs,arg` rows, time-major.
fn series_csv(labels: &[String], times: &[f64], value: impl Fn(usize, usize) -> C64) -> String {
    let mut out = String::from("t,b_label,re,im,abs,arg\n");
    for (k, t) in times.iter().enumerate() {
        for (b, label) in labels.iter().enumerate() {
            let mut line = format!("{t},{},", csv_escape(label));
            push_complex(&mut line, value(b, k));
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

pub fn kd_joint_cmd(model: &ModelSystem, state: &str, a: &str, b: &str) -> CliResult<Artifact> {
    let psi = model.state(state)?;
    let table = kd_joint(&psi, model.basis(a)?, model.basis(b)?)?;
    let mut csv = String::from("a_label,b_label,re,im,abs,arg\n");
    let mut rows = Vec::new();
    for (i, ra) in table.row_labels().iter().enumerate() {
        let mut row = Vec::new();
        for (j, cb) in table.col_labels().iter().enumerate() {
            let z = table.get(i, j);
            let mut line = format!("{},{},", csv_escape(ra), csv_escape(cb));
            push_complex(&mut line, z);
            csv.push_str(&line);
            csv.push('\n');
            row.push(cplx(z));
        }
        rows.push(Value::Array(row));
    }
    let body = json!({
        "state": state,
        "a_basis": a,
        "b_basis": b,
        "a_labels": table.row_labels(),
        "b_labels": table.col_labels(),
        "values": rows,
        "total": cplx(table.total()),
        "normalization_defect": num(table.normalization_defect()),
    });
    Ok(Artifact::json("kd-joint", envelope("kd-joint", body)).with_csv(csv, Format::Json))
}

pub fn cond_app_cmd(
    model: &ModelSystem,
    tol: &Tolerances,
    a: &str,
    b: &str,
    basis: &str,
    eigenspace: bool,
) -> CliResult<Artifact> {
    let (sa, sb) = (model.state(a)?, model.state(b)?);
    let n_basis = model.basis(basis)?;
    let energy = is_energy_basis(model, n_basis);
    let values = if eigenspace {
        if !energy {
            return Err(CliError::Usage(format!(
                "--eigenspace needs an energy eigenbasis, `{basis}` is not one"
            )));
        }
        conditional_app_eigenspaces(&sa, &sb, &model.spectrum, tol.eps_sing)?
    } else {
        conditional_app(&sa, &sb, n_basis, tol.eps_sing)?
    };
    let labels = n_basis.labels();
    let mut csv = String::from("n_label,re,im,abs,arg\n");
    let mut entries = Vec::new();
    for (label, z) in labels.iter().zip(&values) {
        let mut line = format!("{},", csv_escape(label));
        push_complex(&mut line, *z);
        csv.push_str(&line);
        csv.push('\n');
        entries.push(json!({"label": label, "value": cplx(*z), "action": action(*z, model.hbar)}));
    }
    let total: C64 = values.iter().sum();
    let basis_dependent =
        energy && !eigenspace && (0..model.dim).any(|n| model.spectrum.is_degenerate(n));
    let body = json!({
        "a": a,
        "b": b,
        "basis": basis,
        "resolution": resolution(eigenspace),
        "entries": entries,
        "total": cplx(total),
        "basis_dependent": basis_dependent,
    });
    let mut art =
        Artifact::json("cond-app", envelope("cond-app", body)).with_csv(csv, Format::Json);
    if basis_dependent {
        art = art.note("degenerate spectrum: eigenvector-resolved values depend on the basis inside each eigenspace");
    }
    Ok(art)
}

#[allow(clippy::too_many_arguments)]
pub fn evolve_app_cmd(
    model: &ModelSystem,
    tol: &Tolerances,
    a: &str,
    b: &str,
    n: &str,
    grid: &Grid,
    eigenspace: bool,
) -> CliResult<Artifact> {
    let sa = model.state(a)?;
    let b_basis = model.basis(b)?;
    let level = model.level(n)?;
    let ts = times(grid)?;
    let app = MotionApp::new(
        &sa,
        b_basis,
        &model.spectrum,
        level,
        model.hbar,
        tol.eps_sing,
        resolution(eigenspace),
    )?;
    let table = app.table(&ts)?;
    let csv = series_csv(table.row_labels(), &ts, |b, k| table.get(b, k));
    let series: Vec<Value> = (0..table.rows())
        .map(|b| Value::Array(table.row(b).iter().map(|z| cplx(*z)).collect()))
        .collect();
    let body = json!({
        "a": a,
        "b_basis": b,
        "n": level,
        "e_n": num(model.spectrum.energy(level)),
        "resolution": resolution(eigenspace),
        "times": ts,
        "b_labels": table.row_labels(),
        "values": series,
        "normalization_defect": num(table.normalization_defect()),
        "basis_dependent": table.basis_dependent,
    });
    let mut art =
        Artifact::json("evolve-app", envelope("evolve-app", body)).with_csv(csv, Format::Csv);
    if let Some(note) = degeneracy_note(model, level, eigenspace) {
        art = art.note(note);
    }
    Ok(art)
}

pub fn weak_energy_cmd(
    model: &ModelSystem,
    tol: &Tolerances,
    a: &str,
    b: &str,
    n: Option<&str>,
    grid: &Grid,
) -> CliResult<Artifact> {
    let (sa, sb) = (model.state(a)?, model.state(b)?);
    let ts = times(grid)?;
    let weak = weak_energy_series(&sb, &sa, &model.spectrum, &ts, model.hbar, tol.eps_sing)?;
    let mut csv = String::from("t,re,im\n");
    for (t, h) in ts.iter().zip(weak.values()) {
        let _ = writeln!(csv, "{t},{},{}", h.re, h.im);
    }
    let mut body = json!({
        "a": a,
        "b": b,
        "times": ts,
        "values": weak.values().iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
    });
    if let Some(n) = n {
        let level = model.level(n)?;
        let series = conditional_motion(
            &sa,
            &sb,
            &model.spectrum,
            level,
            &ts,
            model.hbar,
            tol.eps_sing,
        )?;
        let e_n = model.spectrum.energy(level);
        let residual = phase_evolution_check(&series, &ts, &weak, e_n, model.hbar)?;
        body["n"] = json!(level);
        body["e_n"] = num(e_n);
        body["phase_evolution_residual"] = num(residual);
    }
    Ok(Artifact::json("weak-energy", envelope("weak-energy", body)).with_csv(csv, Format::Csv))
}

#[allow(clippy::too_many_arguments)]
pub fn ergodic_cmd(
    model: &ModelSystem,
    tol: &Tolerances,
    a: &str,
    b: &str,
    n: &str,
    t_total: f64,
    dt: Option<f64>,
    eigenspace: bool,
) -> CliResult<Artifact> {
    let sa = model.state(a)?;
    let b_basis = model.basis(b)?;
    let level = model.level(n)?;
    let res = resolution(eigenspace);
    let app = MotionApp::new(
        &sa,
        b_basis,
        &model.spectrum,
        level,
        model.hbar,
        tol.eps_sing,
        res,
    )?;
    let dt = dt.unwrap_or_else(|| max_dt(app.max_bohr_energy(), model.hbar).min(0.01));
    let numeric = ergodic_average_numeric(&app, t_total, dt)?;
    // Infinite-time limit: the components that do not oscillate.
    let eps = model.spectrum.eps_deg();
    let analytic: Vec<C64> = app
        .weights()
        .iter()
        .map(|w| {
            w.iter()
                .zip(app.detunings())
                .filter(|(_, d)| d.abs() <= eps)
                .map(|(w, _)| *w)
                .sum()
        })
        .collect();
    let mut outcomes = Vec::new();
    let mut max_dev = 0.0_f64;
    for (k, bv) in b_basis.vectors().iter().enumerate() {
        let law = match res {
            Resolution::Eigenvector => {
                ergodic_law_analytic(&sa, bv, model.spectrum.eigenvector(level), tol.eps_sing)
            }
            Resolution::Eigenspace => {
                ergodic_law_eigenspace(&sa, bv, &model.spectrum, level, tol.eps_sing)
            }
        };
        let born = match res {
            Resolution::Eigenvector => {
                ergophase_core::inner(bv, model.spectrum.eigenvector(level))?.norm_sqr()
            }
            Resolution::Eigenspace => {
                let p = model.spectrum.eigenspace_projector(level);
                let coeffs = p.mul_vec(sa.amplitudes())?;
                let bpa: C64 = bv
                    .amplitudes()
                    .iter()
                    .zip(&coeffs)
                    .map(|(u, v)| u.conj() * v)
                    .sum();
                let apa: f64 = sa
                    .amplitudes()
                    .iter()
                    .zip(&coeffs)
                    .map(|(u, v)| (u.conj() * v).re)
                    .sum();
                bpa.norm_sqr() / apa
            }
        };
        let dev = (numeric[k] - analytic[k]).norm();
        max_dev = max_dev.max(dev);
        let mut entry = json!({
            "label": bv.label(),
            "numeric": cplx(numeric[k]),
            "analytic": cplx(analytic[k]),
            "born": num(born),
            "numeric_minus_analytic": num(dev),
        });
        match law {
            Ok(law) => {
                entry["conditional"] = cplx(law.conditional);
                entry["motion"] = cplx(law.motion);
                entry["product"] = cplx(law.product);
                entry["law_defect"] = num(law.defect());
            }
            Err(Error::SingularCondition { .. }) => {
                entry["conditional"] = Value::Null;
                entry["note"] =
                    json!("<b|a> vanishes; P(n|a,b) undefined, Born value from |<b|n>|^2");
            }
            Err(e) => return Err(e.into()),
        }
        outcomes.push(entry);
    }
    let body = json!({
        "a": a,
        "b_basis": b,
        "n": level,
        "e_n": num(model.spectrum.energy(level)),
        "resolution": res,
        "T": num(t_total),
        "dt": num(dt),
        "outcomes": outcomes,
        "max_numeric_minus_analytic": num(max_dev),
        "tolerance": num(tol.ergodic_numeric),
        "within_tolerance": max_dev <= tol.ergodic_numeric,
        "convergence": convergence_json(&app, &analytic, t_total, dt, tol)?,
        "basis_dependent": app.basis_dependent(),
    });
    let mut art = Artifact::json("ergodic", envelope("ergodic", body));
    if let Some(note) = degeneracy_note(model, level, eigenspace) {
        art = art.note(note);
    }
    Ok(art)
}

/// Running-average envelope at `T` and `2T`; null when nothing oscillates.
fn convergence_json(
    app: &MotionApp,
    limit: &[C64],
    t_total: f64,
    dt: f64,
    tol: &Tolerances,
) -> CliResult<Value> {
    if app.min_bohr_energy().is_none() {
        return Ok(Value::Null);
    }
    let r1 = ergodic_convergence(app, limit, t_total, dt)?;
    let r2 = ergodic_convergence(app, limit, 2.0 * t_total, dt)?;
    let ratio = r1.envelope / r2.envelope;
    let [lo, hi] = tol.convergence_ratio;
    Ok(json!({
        "envelope_T": num(r1.envelope),
        "envelope_2T": num(r2.envelope),
        "ratio": num(ratio),
        "ratio_band": [lo, hi],
        "ratio_in_band": ratio >= lo && ratio <= hi,
    }))
}

#[allow(clippy::too_many_arguments)]
pub fn partial_ergodic_cmd(
    model: &ModelSystem,
    tol: &Tolerances,
    a: &str,
    b: &str,
    n: &str,
    kernel: &str,
    grid: &Grid,
) -> CliResult<Artifact> {
    let sa = model.state(a)?;
    let b_basis = model.basis(b)?;
    let level = model.level(n)?;
    let kernel = RandomizationKernel::parse(kernel)?;
    let ts = times(grid)?;
    let app = MotionApp::new(
        &sa,
        b_basis,
        &model.spectrum,
        level,
        model.hbar,
        tol.eps_sing,
        Resolution::Eigenvector,
    )?;
    let table = partial_randomize(&app, &kernel, &ts)?;
    let e_n = model.spectrum.energy(level);
    let factors: Vec<Value> = model
        .spectrum
        .eigenvalues()
        .iter()
        .map(|&e_m| cplx(decoherence_factor(&kernel, e_n, e_m, model.hbar)))
        .collect();
    let csv = series_csv(table.row_labels(), &ts, |b, k| table.get(b, k));
    let series: Vec<Value> = (0..table.rows())
        .map(|b| Value::Array(table.row(b).iter().map(|z| cplx(*z)).collect()))
        .collect();
    let body = json!({
        "a": a,
        "b_basis": b,
        "n": level,
        "kernel": {"kind": kernel.kind, "center": num(kernel.center), "width": num(kernel.width),
                   "std_dev": num(kernel.std_dev())},
        "decoherence_factors": factors,
        "times": ts,
        "b_labels": table.row_labels(),
        "values": series,
        "normalization_defect": num(table.normalization_defect()),
    });
    let mut art = Artifact::json("partial-ergodic", envelope("partial-ergodic", body))
        .with_csv(csv, Format::Csv);
    if let Some(note) = degeneracy_note(model, level, false) {
        art = art.note(note);
    }
    Ok(art)
}

pub fn uncertainty_cmd(
    kernel: &str,
    hbar: f64,
    e_min: Option<f64>,
    e_max: Option<f64>,
    points: usize,
) -> CliResult<Artifact> {
    let kernel = RandomizationKernel::parse(kernel)?;
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(CliError::Usage(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    let reach = 32.0 * hbar / kernel.std_dev();
    let lo = e_min.unwrap_or(-reach);
    let hi = e_max.unwrap_or(reach);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) || points < 3 {
        return Err(CliError::Usage(format!(
            "energy grid needs e_max > e_min and at least 3 points (got [{lo}, {hi}], {points})"
        )));
    }
    let grid: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    let r = uncertainty_product(&kernel, &grid, hbar)?;
    let body = json!({
        "kernel": {"kind": kernel.kind, "center": num(kernel.center), "width": num(kernel.width)},
        "hbar": num(hbar),
        "energy_grid": {"min": num(lo), "max": num(hi), "points": points},
        "prior": "flat",
        "delta_t": num(r.delta_t),
        "delta_e": num(r.delta_e),
        "mean_e": num(r.mean_e),
        "product_over_hbar": num(r.product_over_hbar),
        "gaussian_bound_over_hbar": num(std::f64::consts::FRAC_1_SQRT_2),
    });
    Ok(Artifact::json("uncertainty", envelope("uncertainty", body))
        .note("energy spread from |D(E)|^2 under a flat prior on the energy grid"))
}

pub fn semiclassical_cmd(
    model: &ModelSystem,
    tol: &Tolerances,
    a: &str,
    b: &str,
    n: &str,
    grid: &Grid,
    widths: &[f64],
) -> CliResult<Artifact> {
    let (sa, sb) = (model.state(a)?, model.state(b)?);
    let level = model.level(n)?;
    let ts = times(grid)?;
    let e_n = model.spectrum.energy(level);
    let weak = weak_energy_series(&sb, &sa, &model.spectrum, &ts, model.hbar, tol.eps_sing)?;
    let arrival = match classical_arrival(&weak, e_n) {
        Ok(outcome) => serde_json::to_value(outcome).expect("serializable"),
        Err(Error::NoCrossing) => json!({"kind": "no_crossing"}),
        Err(e) => return Err(e.into()),
    };
    let actions = reduced_actions(&sa, &sb, &model.spectrum, model.hbar, tol.eps_sing)?;
    let energies = model.spectrum.eigenvalues();
    let tnm = tnm_table(&actions, energies)?;
    let p = conditional_app(&sa, &sb, model.spectrum.eigenvectors(), tol.eps_sing)?;
    let mut sweep = Vec::new();
    for &w in widths {
        let smoothed = coarse_grain_energy(&p, energies, w, model.hbar)?;
        let l1: f64 = smoothed.iter().map(|z| z.im.abs()).sum();
        sweep.push(json!({
            "delta_e": num(w),
            "imag_l1": num(l1),
            "values": smoothed.iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
        }));
    }
    let body = json!({
        "a": a,
        "b": b,
        "n": level,
        "e_n": num(e_n),
        "arrival": arrival,
        "reduced_actions": actions.iter().map(|s| s.map_or(Value::Null, num)).collect::<Vec<_>>(),
        "energies": energies,
        "tnm": serde_json::to_value(&tnm).expect("serializable"),
        "conditional": p.iter().map(|z| cplx(*z)).collect::<Vec<_>>(),
        "imag_l1": num(p.iter().map(|z| z.im.abs()).sum()),
        "coarse_grain": sweep,
        "coarse_grain_kernel": "gaussian",
    });
    Ok(Artifact::json(
        "semiclassical",
        envelope("semiclassical", body),
    ))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParticleParams {
    m: Option<f64>,
    p: Option<f64>,
    v: Option<f64>,
    e: Option<f64>,
    x0: Option<f64>,
    x: Option<f64>,
    hbar: Option<f64>,
    #[serde(rename = "T")]
    t_total: Option<f64>,
}

fn load_params(flags: &ParticleFlags) -> CliResult<ParticleParams> {
    match &flags.params {
        Some(path) => parse_json(&read_file(path)?, &path.display().to_string()),
        None => Ok(ParticleParams::default()),
    }
}

fn required(name: &str, flag: Option<f64>, file: Option<f64>) -> CliResult<f64> {
    flag.or(file).ok_or_else(|| {
        CliError::Usage(format!(
            "missing `{name}` (flag --{name} or key in --params)"
        ))
    })
}

pub fn propagate_cmd(flags: &ParticleFlags, p: Option<f64>) -> CliResult<Artifact> {
    let file = load_params(flags)?;
    if file.v.is_some() || file.e.is_some() {
        return Err(CliError::Usage(
            "`v`/`e` belong to `freespace tunnel`".into(),
        ));
    }
    let cfg = FreeParticleConfig::propagating(
        flags.m.or(file.m).unwrap_or(1.0),
        required("p", p, file.p)?,
        flags.x0.or(file.x0).unwrap_or(0.0),
        required("x", flags.x, file.x)?,
        flags.hbar.or(file.hbar).unwrap_or(1.0),
    )?;
    let window = required("T", flags.t_total, file.t_total)?;
    let w = partial_ergodic_free(&cfg, window)?;
    let split = free_action_split(&cfg, w.t_c)?;
    let body = json!({
        "config": config_json(&cfg),
        "T": num(window),
        "t_c": num(w.t_c),
        "delta_t": num(stationary_width(&cfg)?),
        "phase_curvature": num(free_phase_curvature(&cfg)?),
        "width_ratio": num(w.width_ratio()),
        "numeric": cplx(w.numeric),
        "claimed": num(w.claimed),
        "relative_error": num(w.relative_error()),
        "quad_error": num(w.quad_error),
        "actions_at_t_c": {"s_t": num(split.s_t), "e_t": num(split.e_n_t), "s_e": num(split.s_e),
                            "total": num(split.total)},
    });
    Ok(Artifact::json(
        "freespace-propagate",
        envelope("freespace propagate", body),
    ))
}

pub fn tunnel_cmd(flags: &ParticleFlags, v: Option<f64>, e: Option<f64>) -> CliResult<Artifact> {
    let file = load_params(flags)?;
    if file.p.is_some() {
        return Err(CliError::Usage(
            "`p` belongs to `freespace propagate`".into(),
        ));
    }
    let cfg = FreeParticleConfig::tunneling(
        flags.m.or(file.m).unwrap_or(1.0),
        required("v", v, file.v)?,
        required("e", e, file.e)?,
        flags.x0.or(file.x0).unwrap_or(0.0),
        required("x", flags.x, file.x)?,
        flags.hbar.or(file.hbar).unwrap_or(1.0),
    )?;
    let window = required("T", flags.t_total, file.t_total)?;
    let r = tunnel_ergodic(&cfg, window)?;
    let body = json!({
        "config": config_json(&cfg),
        "T": num(window),
        "numeric": num(r.numeric),
        "claimed": num(r.claimed),
        "relative_error": num(r.relative_error()),
        "time_integral": cplx(r.integral),
        "quad_error": num(r.quad_error),
        "suppression": num(cfg.suppression()?),
    });
    Ok(
        Artifact::json("freespace-tunnel", envelope("freespace tunnel", body))
            .note("probability compared by modulus; the time integral carries a phase of -i"),
    )
}

fn config_json(cfg: &FreeParticleConfig) -> Value {
    let mut v = json!({"m": num(cfg.m), "x0": num(cfg.x0), "x": num(cfg.x), "hbar": num(cfg.hbar)});
    match (cfg.v, cfg.e) {
        (Some(pot), Some(en)) => {
            v["v"] = num(pot);
            v["e"] = num(en);
        }
        _ => v["p"] = num(cfg.p),
    }
    v
}

/// Reads the model named by `--model`.
pub fn require_model(path: Option<&Path>, tol: &Tolerances) -> CliResult<ModelSystem> {
    let path = path.ok_or_else(|| CliError::Usage("this command needs --model <path>".into()))?;
    ModelSystem::load(path, tol)
}
