use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ergophase_cli::load_model;
use ergophase_cli::tolerances::Tolerances;
use serde_json::Value;

const MODELS: [&str; 4] = ["qubit", "random4", "ladder16", "degenerate3"];

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn ergophase<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergophase"))
        .current_dir(root())
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_stdout(out: &Output) -> Value {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn args_file(name: &str) -> Vec<String> {
    let text = std::fs::read_to_string(
        root()
            .join("fixtures/commands")
            .join(format!("{name}.args")),
    )
    .unwrap();
    text.split_whitespace().map(str::to_string).collect()
}

/// The qubit fixture with its Hamiltonian and one basis replaced.
fn qubit_variant(edit: impl FnOnce(&mut Value)) -> String {
    let text = std::fs::read_to_string(root().join("fixtures/qubit.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    edit(&mut v);
    serde_json::to_string_pretty(&v).unwrap()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn bundled_qubit_loads_with_two_levels() {
    let m = load_model(&root().join("fixtures/qubit.json")).unwrap();
    assert_eq!(m.dim, 2);
    assert_eq!(m.spectrum.eigenvalues(), &[-1.0, 1.0]);
    assert!(m.warnings.is_empty());
    assert_eq!(m.basis_names(), vec!["E", "X", "Y", "Z", "hamiltonian"]);
}

#[test]
fn one_args_fixture_per_subcommand_and_each_runs() {
    let dir = root().join("fixtures/commands");
    let mut names = BTreeSet::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let out = ergophase(&args_file(&name));
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
        assert!(!out.stdout.is_empty(), "{name} printed nothing");
        names.insert(name);
    }
    let expected: BTreeSet<String> = [
        "kd-joint",
        "cond-app",
        "evolve-app",
        "weak-energy",
        "ergodic",
        "partial-ergodic",
        "uncertainty",
        "semiclassical",
        "freespace-propagate",
        "freespace-tunnel",
        "check",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    assert_eq!(names, expected);
}

#[test]
fn check_exits_zero_on_every_bundled_model() {
    for name in MODELS {
        let model = format!("fixtures/{name}.json");
        let report = json_stdout(&ergophase(&["check", "--model", &model]));
        let checks = report["checks"].as_array().unwrap();
        let modules: BTreeSet<&str> = checks
            .iter()
            .map(|c| c["module"].as_str().unwrap())
            .collect();
        assert_eq!(
            modules,
            BTreeSet::from(["app", "ergodic", "freespace", "hilbert", "semiclassical"]),
            "{name}"
        );
        for c in checks {
            assert_eq!(c["passed"], Value::Bool(true), "{name}: {c}");
        }
    }
}

#[test]
fn ergodic_on_qubit_reproduces_born_value() {
    let r = json_stdout(&ergophase(&args_file("ergodic")));
    for o in r["outcomes"].as_array().unwrap() {
        assert!((o["born"].as_f64().unwrap() - 0.5).abs() < 1e-15);
        let re = o["numeric"][0].as_f64().unwrap();
        let im = o["numeric"][1].as_f64().unwrap();
        assert!(((re - 0.5).powi(2) + im * im).sqrt() < 5e-3, "{o}");
    }
    assert_eq!(r["within_tolerance"], Value::Bool(true));
    assert_eq!(r["convergence"]["ratio_in_band"], Value::Bool(true));
}

#[test]
fn tunnel_fixture_matches_claimed_probability() {
    let r = json_stdout(&ergophase(&args_file("freespace-tunnel")));
    let claimed = r["claimed"].as_f64().unwrap();
    let numeric = r["numeric"].as_f64().unwrap();
    assert!((claimed - (-4.0f64).exp()).abs() < 1e-15);
    assert!((numeric - claimed).abs() / claimed < 2e-2);
}

#[test]
fn exit_code_one_for_computation_error() {
    let out = ergophase(&[
        "cond-app",
        "--model",
        "fixtures/qubit.json",
        "--a",
        "Z/0",
        "--b",
        "Z/1",
        "--basis",
        "X",
    ]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).starts_with("error[singular_condition]"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn exit_code_two_for_input_errors() {
    let missing = ergophase(&["check", "--model", "fixtures/absent.json"]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("error[io_error]"));

    let bad_label = ergophase(&[
        "kd-joint",
        "--model",
        "fixtures/qubit.json",
        "--state",
        "minus",
        "--a",
        "Z",
        "--b",
        "X",
    ]);
    assert_eq!(code(&bad_label), 2);
    assert!(stderr(&bad_label).contains("error[usage_error]"));

    let no_csv = ergophase(&[
        "ergodic",
        "--model",
        "fixtures/qubit.json",
        "--a",
        "plus",
        "--b",
        "X",
        "--n",
        "0",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&no_csv), 2);

    let bad_grid = ergophase(&[
        "evolve-app",
        "--model",
        "fixtures/qubit.json",
        "--a",
        "plus",
        "--b",
        "X",
        "--n",
        "0",
        "--t1",
        "1",
        "--dt",
        "-0.1",
    ]);
    assert_eq!(code(&bad_grid), 2);

    let no_flag = ergophase(&["kd-joint", "--model", "fixtures/qubit.json"]);
    assert_eq!(code(&no_flag), 2);
}

#[test]
fn exit_code_three_when_an_invariant_fails() {
    let dir = tempfile::tempdir().unwrap();
    let tol = write_temp(&dir, "tight.json", r#"{"window_rel": 1e-9}"#);
    let out = ergophase(&[
        "check".as_ref(),
        "--model".as_ref(),
        "fixtures/qubit.json".as_ref(),
        "--tol-file".as_ref(),
        tol.as_os_str(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("error[invariant_failure]"));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed.len(), 1, "{failed:?}");
}

#[test]
fn parse_error_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = "{\n  \"schema_version\": 1,\n  \"dim\": \"two\",\n  \"hamiltonian\": []\n}\n";
    let p = write_temp(&dir, "bad.json", text);
    let out = ergophase(&["check".as_ref(), "--model".as_ref(), p.as_os_str()]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("error[parse_error]"), "{err}");
    assert!(err.contains(":3:"), "line missing: {err}");
    assert!(err.contains("at `dim`"), "field missing: {err}");
}

#[test]
fn unknown_model_field_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = qubit_variant(|v| v["hbarr"] = Value::from(1.0));
    let p = write_temp(&dir, "typo.json", &text);
    let out = ergophase(&["check".as_ref(), "--model".as_ref(), p.as_os_str()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("hbarr"));
}

#[test]
fn non_hermitian_model_names_the_worst_entry() {
    let dir = tempfile::tempdir().unwrap();
    let text = qubit_variant(|v| v["hamiltonian"][0][1] = serde_json::json!([0.25, 0.0]));
    let p = write_temp(&dir, "nonherm.json", &text);
    let out = ergophase(&["check".as_ref(), "--model".as_ref(), p.as_os_str()]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("error[validation_error]"), "{err}");
    assert!(err.contains("[0][1]") || err.contains("[1][0]"), "{err}");
    assert!(err.contains("2.5e-1"), "{err}");
}

#[test]
fn basis_column_norm_point_nine_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = qubit_variant(|v| {
        v["bases"]["Z"]["matrix"][0][0] = serde_json::json!([0.9, 0.0]);
    });
    let p = write_temp(&dir, "shrunk.json", &text);
    let out = ergophase(&["check".as_ref(), "--model".as_ref(), p.as_os_str()]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("error[validation_error]"), "{err}");
    assert!(err.contains("column 0 has norm 0.9"), "{err}");
}

#[test]
fn unnormalized_state_is_renormalized_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let text = qubit_variant(|v| v["states"]["plus"] = serde_json::json!([[1.0, 0.0], [1.0, 0.0]]));
    let p = write_temp(&dir, "unnorm.json", &text);
    let out_path = dir.path().join("kd.json");
    let out = ergophase(&[
        "kd-joint".as_ref(),
        "--model".as_ref(),
        p.as_os_str(),
        "--state".as_ref(),
        "plus".as_ref(),
        "--a".as_ref(),
        "Z".as_ref(),
        "--b".as_ref(),
        "X".as_ref(),
        "--out".as_ref(),
        out_path.as_os_str(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let meta: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("kd.json.meta.json")).unwrap(),
    )
    .unwrap();
    let warnings = meta["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].as_str().unwrap().contains("renormalized"));

    // Same table as the normalized fixture.
    let got: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let reference = json_stdout(&ergophase(&[
        "kd-joint",
        "--model",
        "fixtures/qubit.json",
        "--state",
        "plus",
        "--a",
        "Z",
        "--b",
        "X",
    ]));
    let mut g = Vec::new();
    let mut r = Vec::new();
    collect_floats(&got["values"], &mut g);
    collect_floats(&reference["values"], &mut r);
    assert_eq!(g.len(), 8);
    for (x, y) in g.iter().zip(&r) {
        assert!((x - y).abs() < 1e-15);
    }
}

#[test]
fn primary_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "evolve-app",
        "ergodic",
        "semiclassical",
        "partial-ergodic",
        "check",
    ] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{name}-{run}.out"));
            let mut args = args_file(name);
            args.push("--out".into());
            args.push(path.to_string_lossy().into_owned());
            let out = ergophase(&args);
            assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
            assert!(out.stdout.is_empty());
            assert!(dir
                .path()
                .join(format!("{name}-{run}.out.meta.json"))
                .exists());
            outputs.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{name}");
    }
}

#[test]
fn json_results_round_trip_bit_exactly() {
    for name in [
        "cond-app",
        "weak-energy",
        "ergodic",
        "uncertainty",
        "semiclassical",
        "freespace-propagate",
    ] {
        let mut args = args_file(name);
        args.extend(["--format".into(), "json".into()]);
        let out = ergophase(&args);
        assert_eq!(code(&out), 0, "{name}");
        let text = String::from_utf8(out.stdout).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        let mut again = serde_json::to_string_pretty(&value).unwrap();
        again.push('\n');
        assert_eq!(text, again, "{name}");
        let mut floats = Vec::new();
        collect_floats(&value, &mut floats);
        for x in floats {
            let back: f64 = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}

fn collect_floats(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.extend(n.as_f64()),
        Value::Array(a) => a.iter().for_each(|x| collect_floats(x, out)),
        Value::Object(m) => m.values().for_each(|x| collect_floats(x, out)),
        _ => {}
    }
}

#[test]
fn evolve_app_csv_has_documented_columns() {
    let out = ergophase(&args_file("evolve-app"));
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,b_label,re,im,abs,arg");
    let rows: Vec<&str> = lines.collect();
    // 126 grid points (0..=6.25 step 0.05) times two labels
    assert_eq!(rows.len(), 126 * 2);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first.len(), 6);
    assert_eq!(first[0], "0");
}

#[test]
fn bundled_tolerance_file_equals_defaults() {
    let tol = Tolerances::load(&root().join("fixtures/tolerances.json")).unwrap();
    assert_eq!(tol, Tolerances::default());
}

#[test]
fn results_carry_schema_version_and_complex_pairs() {
    let r = json_stdout(&ergophase(&args_file("cond-app")));
    assert_eq!(r["schema_version"], Value::from(1));
    assert_eq!(r["command"], Value::from("cond-app"));
    let s = r.to_string();
    assert!(
        !s.contains("\"re\""),
        "complex numbers must be [re, im] pairs"
    );
}
