//! Command-line front end: compile expressions to linkages, solve and trace
//! configurations, verify gadget behavior, render SVG diagrams.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use linkforge::analysis::{
    check_compactness, check_invariance, verify_quasifunctional, PointCloud, VerifyOptions,
};
use linkforge::compiler::compile;
use linkforge::expr;
use linkforge::geom::{parse_complex, Side};
use linkforge::jsonio::{LinkageDoc, RealizationDoc};
use linkforge::linkage::{MarkerSet, Realization, VertexId};
use linkforge::render::render_svg;
use linkforge::solver::{solve, InitPolicy, SolveOptions, SolveProblem, SolveStatus, TracePath};

#[derive(Parser)]
#[command(name = "linkforge", version, about = "Planar linkages that compute polynomial maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile an expression into a quasifunctional linkage.
    Compile {
        /// Expression, e.g. "z1^2 + 2*conj(z2) - (0.5+1i)".
        expr: String,
        /// Number of input variables z1..zN.
        #[arg(long)]
        vars: usize,
        /// Radius of the certified input polydisk.
        #[arg(long)]
        radius: f64,
        /// Output linkage JSON; the instantiation log lands next to it.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a gadget document against an expression by domain sampling.
    Verify {
        linkage: PathBuf,
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bound on output error and edge residuals.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Find a realization, optionally with vertices fixed ("D=2+1i").
    Solve {
        linkage: PathBuf,
        #[arg(long = "fix")]
        fixes: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random restarts to attempt before giving up.
        #[arg(long, default_value_t = 200)]
        restarts: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Drive a vertex along a path and record marker positions as CSV.
    Trace {
        linkage: PathBuf,
        #[arg(long)]
        drive: String,
        /// "circle <center> <radius>", "arc <center> <radius> <from> <to>"
        /// (radians) or "segment <from> <to>".
        #[arg(long)]
        path: String,
        #[arg(long, default_value_t = 256)]
        steps: usize,
        /// Comma-separated marker vertices.
        #[arg(long)]
        markers: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw a linkage (solving for a realization unless one is given).
    Render {
        linkage: PathBuf,
        #[arg(long)]
        realization: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sample a marker cloud and run invariance/compactness checks.
    Analyze {
        linkage: PathBuf,
        /// Comma-separated marker vertices (defaults to the document's).
        #[arg(long)]
        markers: Option<String>,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Compile { expr, vars, radius, output } => cmd_compile(&expr, vars, radius, &output),
        Command::Verify { linkage, expr, samples, seed, tol } => {
            cmd_verify(&linkage, &expr, samples, seed, tol)
        }
        Command::Solve { linkage, fixes, seed, restarts, output } => {
            cmd_solve(&linkage, &fixes, seed, restarts, output.as_deref())
        }
        Command::Trace { linkage, drive, path, steps, markers, seed, output } => {
            cmd_trace(&linkage, &drive, &path, steps, &markers, seed, output.as_deref())
        }
        Command::Render { linkage, realization, output } => {
            cmd_render(&linkage, realization.as_deref(), &output)
        }
        Command::Analyze { linkage, markers, samples, seed, output } => {
            cmd_analyze(&linkage, markers.as_deref(), samples, seed, output.as_deref())
        }
    }
}

fn load(path: &Path) -> Result<LinkageDoc, String> {
    LinkageDoc::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_compile(src: &str, vars: usize, radius: f64, output: &Path) -> Result<ExitCode, String> {
    let e = expr::parse(src).map_err(|e| e.to_string())?;
    let compiled = compile(&e, vars, radius).map_err(|e| e.to_string())?;
    let report = compiled.qf.linkage.validate();
    if !report.is_ok() {
        return Err(format!("compiled linkage failed validation: {:?}", report.violations));
    }
    LinkageDoc::for_compiled(&compiled).write(output).map_err(|e| e.to_string())?;
    let log_path = output.with_extension("log.json");
    let log = serde_json::json!({
        "expr": src,
        "vars": vars,
        "radius": radius,
        "vertices": compiled.qf.linkage.vertex_count(),
        "edges": compiled.qf.linkage.edges().len(),
        "instances": compiled.log,
    });
    std::fs::write(&log_path, serde_json::to_string_pretty(&log).unwrap())
        .map_err(|e| e.to_string())?;
    println!(
        "compiled `{src}` into {} vertices / {} edges -> {} (log: {})",
        compiled.qf.linkage.vertex_count(),
        compiled.qf.linkage.edges().len(),
        output.display(),
        log_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(path: &Path, src: &str, samples: usize, seed: u64, tol: f64) -> Result<ExitCode, String> {
    let doc = load(path)?;
    let gadget = doc
        .gadget()
        .map_err(|e| e.to_string())?
        .ok_or("document carries no gadget annotation to verify")?;
    let e = expr::parse(src).map_err(|e| e.to_string())?;
    let opts = VerifyOptions { tol_output: tol, tol_residual: tol, ..VerifyOptions::default() };
    let report = verify_quasifunctional(&gadget, &e, samples, seed, &opts);
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    if report.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn parse_fix(s: &str) -> Result<(VertexId, Complex64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=POINT, got `{s}`"))?;
    Ok((VertexId::new(name.trim()), parse_complex(value)?))
}

fn cmd_solve(
    path: &Path,
    fixes: &[String],
    seed: u64,
    restarts: u64,
    output: Option<&Path>,
) -> Result<ExitCode, String> {
    let doc = load(path)?;
    let l = doc.linkage().map_err(|e| e.to_string())?;
    let opts = SolveOptions::default();
    let fixed: Vec<(VertexId, Complex64)> =
        fixes.iter().map(|f| parse_fix(f)).collect::<Result<_, _>>()?;
    // When the fixes pin exactly a gadget's inputs, its forward placement is
    // the natural warm start; the solver still validates every constraint.
    let warm: Option<Realization> = doc.gadget().ok().flatten().and_then(|qf| {
        let inputs: Option<Vec<Complex64>> = qf
            .inputs
            .iter()
            .map(|v| fixed.iter().find(|(w, _)| w == v).map(|(_, z)| *z))
            .collect();
        inputs.and_then(|ins| qf.forward_place(&ins, Side::Plus).ok())
    });
    let mut best: Option<linkforge::solver::SolveResult> = None;
    for attempt in 0..restarts.max(1) {
        let policy = match (&warm, attempt) {
            (Some(r), 0) => InitPolicy::WarmStart(r.clone()),
            _ => InitPolicy::Seeded(seed.wrapping_add(attempt)),
        };
        let mut problem = SolveProblem::new(&l, policy);
        for (v, z) in &fixed {
            problem = problem.fix(v.clone(), *z);
        }
        let res = solve(&problem, &opts);
        let good = res.status == SolveStatus::Converged;
        let better = match &best {
            None => true,
            Some(b) => res.residual_norm < b.residual_norm,
        };
        if better {
            best = Some(res);
        }
        if good {
            break;
        }
    }
    let res = best.expect("at least one attempt");
    match &res.realization {
        Some(r) => {
            let mut out = RealizationDoc::new(r);
            out.max_edge_residual = Some(res.max_edge_residual);
            let text = serde_json::to_string_pretty(&out).unwrap();
            match output {
                Some(p) => std::fs::write(p, text).map_err(|e| e.to_string())?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        None => Err(format!(
            "no realization found ({} restarts; best residual norm {:.3e})",
            restarts, res.residual_norm
        )),
    }
}

fn parse_path(s: &str) -> Result<TracePath, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    match parts.as_slice() {
        ["circle", center, radius] => Ok(TracePath::Circle {
            center: parse_complex(center)?,
            radius: radius.parse().map_err(|e| format!("bad radius: {e}"))?,
        }),
        ["arc", center, radius, from, to] => Ok(TracePath::Arc {
            center: parse_complex(center)?,
            radius: radius.parse().map_err(|e| format!("bad radius: {e}"))?,
            theta0: from.parse().map_err(|e| format!("bad angle: {e}"))?,
            theta1: to.parse().map_err(|e| format!("bad angle: {e}"))?,
        }),
        ["segment", from, to] => {
            Ok(TracePath::Segment { from: parse_complex(from)?, to: parse_complex(to)? })
        }
        _ => Err(format!("unrecognized path `{s}` (circle/arc/segment)")),
    }
}

fn cmd_trace(
    path: &Path,
    drive: &str,
    path_spec: &str,
    steps: usize,
    markers: &str,
    seed: u64,
    output: Option<&Path>,
) -> Result<ExitCode, String> {
    let doc = load(path)?;
    let l = doc.linkage().map_err(|e| e.to_string())?;
    let curve = parse_path(path_spec)?;
    let marker_set = MarkerSet::new(markers.split(',').map(|m| VertexId::new(m.trim())));
    let drive_id = VertexId::new(drive);
    // A gadget driven at one of its inputs can seed every step from its own
    // placement; the generic previous-step warm start covers the rest.
    let gadget = doc.gadget().ok().flatten();
    let placer = gadget.as_ref().filter(|qf| qf.inputs.contains(&drive_id)).map(|qf| {
        let drive_id = drive_id.clone();
        let curve = curve.clone();
        move |t: f64| -> Option<Realization> {
            let inputs: Vec<Complex64> = qf
                .inputs
                .iter()
                .map(|v| if *v == drive_id { curve.at(t) } else { Complex64::new(0.0, 0.0) })
                .collect();
            qf.forward_place(&inputs, Side::Plus).ok()
        }
    });
    let init = match &placer {
        Some(f) => linkforge::solver::TraceInit::PerStep(f),
        None => linkforge::solver::TraceInit::Generic,
    };
    let tr = linkforge::solver::trace_opts(
        &l,
        &drive_id,
        &curve,
        &marker_set,
        steps,
        seed,
        &SolveOptions::default(),
        init,
    )
    .map_err(|e| e.to_string())?;
    let mut csv = String::from("step");
    for m in &tr.markers {
        csv.push_str(&format!(",{m}_re,{m}_im"));
    }
    csv.push('\n');
    for (k, row) in tr.rows.iter().enumerate() {
        csv.push_str(&k.to_string());
        for z in row {
            csv.push_str(&format!(",{},{}", z.re, z.im));
        }
        csv.push('\n');
    }
    match output {
        Some(p) => std::fs::write(p, csv).map_err(|e| e.to_string())?,
        None => print!("{csv}"),
    }
    if tr.completed < steps {
        eprintln!("trace left the feasible set after {} of {steps} steps", tr.completed);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_render(path: &Path, realization: Option<&Path>, output: &Path) -> Result<ExitCode, String> {
    let doc = load(path)?;
    let l = doc.linkage().map_err(|e| e.to_string())?;
    let r: Realization = match realization {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
            let rd: RealizationDoc = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            rd.realization()
        }
        None => {
            // A gadget document can be placed directly; otherwise solve.
            let placed = doc.gadget().ok().flatten().and_then(|qf| {
                let inputs: Vec<Complex64> = {
                    use rand::SeedableRng;
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
                    qf.domain.sample(&mut rng)
                };
                qf.forward_place(&inputs, Side::Plus).ok()
            });
            match placed {
                Some(r) => r,
                None => (0..200)
                    .find_map(|s| {
                        solve(&SolveProblem::new(&l, InitPolicy::Seeded(s)), &SolveOptions::default())
                            .realization
                    })
                    .ok_or("no realization found to render")?,
            }
        }
    };
    let svg = render_svg(&l, &r, &doc.marker_set());
    std::fs::write(output, svg).map_err(|e| e.to_string())?;
    println!("wrote {}", output.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(
    path: &Path,
    markers: Option<&str>,
    samples: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<ExitCode, String> {
    let doc = load(path)?;
    let l = doc.linkage().map_err(|e| e.to_string())?;
    let validation = l.validate();
    let marker_set = match markers {
        Some(s) => MarkerSet::new(s.split(',').map(|m| VertexId::new(m.trim()))),
        None => doc.marker_set(),
    };
    let marker_set = if marker_set.is_empty() {
        MarkerSet::new(l.vertices().take(2).cloned())
    } else {
        marker_set
    };
    let hint = doc.gadget().ok().flatten();
    let realizations = linkforge::analysis::sample_realizations_opts(
        &l,
        samples,
        seed,
        &SolveOptions::default(),
        hint.as_ref(),
    );
    let cloud = PointCloud {
        markers: marker_set.0.clone(),
        points: realizations.iter().map(|r| r.restrict(&marker_set)).collect(),
        seed,
        restarts: samples,
        converged: realizations.len(),
    };
    let invariance = check_invariance(&l, samples.min(100), seed);
    let compactness = check_compactness(&l, &realizations);

    println!(
        "validation: {}",
        if validation.is_ok() { "ok".to_owned() } else { format!("{:?}", validation.violations) }
    );
    println!(
        "cloud: {}/{} restarts converged over markers {:?}",
        cloud.converged,
        cloud.restarts,
        cloud.markers.iter().map(|m| m.as_str()).collect::<Vec<_>>()
    );
    println!(
        "invariance ({} pins, {}): max residual {:.3e} over {} motions -> {}",
        invariance.pinned_vertices,
        invariance.group,
        invariance.max_residual_after_motion,
        invariance.motions_tested,
        if invariance.pass { "pass" } else { "FAIL" }
    );
    if compactness.applicable {
        println!(
            "compactness: max radius {:.4} within bound {:.4} -> {}",
            compactness.max_observed_radius,
            compactness.bound,
            if compactness.pass { "pass" } else { "FAIL" }
        );
    } else {
        println!("compactness: not applicable (needs a connected, pinned linkage)");
    }
    if let Some(p) = output {
        let report = serde_json::json!({
            "validation_ok": validation.is_ok(),
            "cloud": cloud,
            "invariance": invariance,
            "compactness": compactness,
        });
        std::fs::write(p, serde_json::to_string_pretty(&report).unwrap())
            .map_err(|e| e.to_string())?;
    }
    let ok = validation.is_ok() && invariance.pass && (!compactness.applicable || compactness.pass);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
