//! End-to-end checks of the command-line interface.

use std::path::PathBuf;
use std::process::Command;

use num_complex::Complex64;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linkforge"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("linkforge-cli-{}-{name}", std::process::id()));
    p
}

#[test]
fn compile_then_verify_round_trips_deterministically() {
    let out = tmp("sq.json");
    let status = bin()
        .args(["compile", "z1^2", "--vars", "1", "--radius", "1", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.exists());
    assert!(out.with_extension("log.json").exists());

    let run = || {
        bin()
            .args(["verify"])
            .arg(&out)
            .args(["--expr", "z1^2", "--samples", "60", "--seed", "7", "--tol", "1e-9"])
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success(), "verify failed: {}", String::from_utf8_lossy(&first.stdout));
    // Same seed, same file: bit-identical report.
    let second = run();
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn verify_rejects_unachievable_tolerance() {
    let out = tmp("sq-tol.json");
    assert!(bin()
        .args(["compile", "z1^2", "--vars", "1", "--radius", "1", "-o"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let status = bin()
        .args(["verify"])
        .arg(&out)
        .args(["--expr", "z1^2", "--samples", "40", "--seed", "3", "--tol", "1e-15"])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_rejects_wrong_expression() {
    let out = tmp("sq-wrong.json");
    assert!(bin()
        .args(["compile", "z1^2", "--vars", "1", "--radius", "1", "-o"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let status = bin()
        .args(["verify"])
        .arg(&out)
        .args(["--expr", "z1^3", "--samples", "40", "--seed", "3", "--tol", "1e-9"])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn solve_fixes_inputs_and_reports_positions() {
    let out = tmp("mul.json");
    assert!(bin()
        .args(["compile", "z1*z2", "--vars", "2", "--radius", "1", "-o"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let real = tmp("mul-real.json");
    let status = bin()
        .args(["solve"])
        .arg(&out)
        .args(["--fix", "z1=0.5", "--fix", "z2=0.5+0.5i", "--seed", "1", "-o"])
        .arg(&real)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&real).unwrap()).unwrap();
    let z1 = &doc["positions"]["z1"];
    assert!((z1[0].as_f64().unwrap() - 0.5).abs() < 1e-12);
    // 0.5 * (0.5 + 0.5i) = 0.25 + 0.25i at some output vertex.
    let linkage: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let out_name = linkage["io"]["outputs"][0].as_str().unwrap();
    let outp = &doc["positions"][out_name];
    let got = Complex64::new(outp[0].as_f64().unwrap(), outp[1].as_f64().unwrap());
    assert!((got - Complex64::new(0.25, 0.25)).norm() < 1e-6, "output {got}");
}

#[test]
fn render_marks_braces_and_cables_gray() {
    // A gadget with both brace and cable edges.
    let g = linkforge::gadgets::peaucellier(5.0, 4.0, 3.0).unwrap();
    let doc = linkforge::jsonio::LinkageDoc::for_gadget(
        &g,
        linkforge::jsonio::GadgetDoc::Peaucellier { a: 5.0, b: 4.0, c: 3.0 },
    );
    let path = tmp("peau.json");
    doc.write(&path).unwrap();
    let svg_path = tmp("peau.svg");
    let status = bin().args(["render"]).arg(&path).arg("-o").arg(&svg_path).status().unwrap();
    assert!(status.success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.matches("stroke=\"#999\"").count() >= 2, "gray strokes missing");
    assert!(svg.contains("<rect"), "pin squares missing");
}

#[test]
fn trace_emits_csv_rows() {
    let sl = linkforge::gadgets::straight_line(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
        .unwrap();
    let doc = linkforge::jsonio::LinkageDoc::new(&sl.linkage)
        .with_markers(&linkforge::linkage::MarkerSet::new([sl.tracer.clone()]));
    let path = tmp("line.json");
    doc.write(&path).unwrap();
    let arc = sl.drive_arc;
    let mid = (arc.theta_lo + arc.theta_hi) / 2.0;
    let spec = format!(
        "arc {} {} {} {}",
        linkforge::geom::format_complex(arc.center),
        arc.radius,
        mid,
        mid + 0.3
    );
    let output = bin()
        .args(["trace"])
        .arg(&path)
        .args(["--drive", "D", "--path", &spec, "--steps", "8", "--markers", "A", "--seed", "2"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,A_re,A_im");
    assert_eq!(lines.len(), 9, "8 steps plus header: {text}");
    // The tracer stays on the real axis.
    for row in &lines[1..] {
        let im: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(im.abs() < 1e-6);
    }
}

#[test]
fn analyze_reports_and_exits_zero() {
    let out = tmp("an.json");
    assert!(bin()
        .args(["compile", "conj(z1)", "--vars", "1", "--radius", "1", "-o"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let report = tmp("an-report.json");
    let output = bin()
        .args(["analyze"])
        .arg(&out)
        .args(["--samples", "25", "--seed", "4", "-o"])
        .arg(&report)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("validation: ok"));
    assert!(text.contains("cloud:"));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["validation_ok"], true);
}

#[test]
fn malformed_input_fails_cleanly() {
    let status = bin()
        .args(["compile", "z1 +", "--vars", "1", "--radius", "1", "-o", "/tmp/nope.json"])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let missing = bin()
        .args(["verify", "/tmp/definitely-not-here.json", "--expr", "z1"])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(1));
}
