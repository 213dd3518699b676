//! Implementations of the validate / classify / evolve / holonomy commands.

use std::path::Path;

use hypoflow::curvature::{
    holonomy_rank, subspace, trace_integral, LeftInvariantMetric, ObstructionConfig,
};
use hypoflow::flow::coframe::{coframe_evolve, CoframeConfig};
use hypoflow::flow::{
    classify_orbit, family_differential, first_integrals, integrate, Family, FamilyPoint,
    FlowError, IvpConfig,
};
use hypoflow::io::{
    differential_from_file, format_form, parse_form_file, trajectory_csv, triple_from_file,
};
use hypoflow::liealg::{fingerprint, iso_class, jacobi_residual, LieDifferential, JACOBI_TOL};
use hypoflow::scalar::{Rational, Scalar};
use hypoflow::su2::{is_hypo, standard_triple, validate};
use hypoflow::torsion::gauge_matrix_at;

use crate::report::{write_atomic, write_json, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

fn parse_family(name: &str) -> Result<Family, String> {
    name.parse::<Family>()
}

fn parse_params_f64(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if let Some((n, d)) = tok.split_once('/') {
                let n: f64 = n.parse().map_err(|_| format!("bad parameter '{tok}'"))?;
                let d: f64 = d.parse().map_err(|_| format!("bad parameter '{tok}'"))?;
                Ok(n / d)
            } else {
                tok.parse().map_err(|_| format!("bad parameter '{tok}'"))
            }
        })
        .collect()
}

fn parse_params_exact(s: &str) -> Result<Vec<Rational>, String> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if let Some((n, d)) = tok.split_once('/') {
                let n: i64 = n.parse().map_err(|_| format!("bad parameter '{tok}'"))?;
                let d: i64 = d.parse().map_err(|_| format!("bad parameter '{tok}'"))?;
                if d == 0 {
                    return Err(format!("zero denominator in '{tok}'"));
                }
                Ok(Rational::new(n.into(), d.into()))
            } else {
                let n: i64 = tok.parse().map_err(|_| {
                    format!("exact mode needs integer or a/b parameters, got '{tok}'")
                })?;
                Ok(Rational::from_integer(n.into()))
            }
        })
        .collect()
}

fn parse_span(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("bad tspan '{s}', expected a:b"))?;
    let a: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad tspan start '{a}'"))?;
    let b: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad tspan end '{b}'"))?;
    if !a.is_finite() || !b.is_finite() {
        return Err("tspan must be finite".into());
    }
    Ok((a, b))
}

pub fn cmd_validate(input: &Path, tol: f64, out: Option<&Path>, seed: u64) -> i32 {
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", input.display());
            return EXIT_USAGE;
        }
    };
    let file = match parse_form_file(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("parse error: {e}");
            return EXIT_USAGE;
        }
    };
    let triple = match triple_from_file(&file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("parse error: {e}");
            return EXIT_USAGE;
        }
    };
    let config = RunConfig::new("validate", seed)
        .arg("input", input.display())
        .arg("tol", tol);
    match validate(&triple, tol) {
        Ok(v) => {
            println!("ACCEPTED: the triple defines an SU(2)-structure");
            println!("  V      = {}", v.v);
            println!("  alpha  = {}", format_form(&v.quadruple.alpha));
            println!("  omega2 = {}", format_form(&v.quadruple.omega2));
            println!("  omega3 = {}", format_form(&v.quadruple.omega3));
            for r in &v.residuals {
                println!("  {:?}: residual {:.3e}", r.condition, r.residual);
            }
            if let Some(dir) = out {
                #[derive(serde::Serialize)]
                struct Payload {
                    accepted: bool,
                    v: f64,
                    alpha: String,
                    omega2: String,
                    omega3: String,
                    residuals: Vec<hypoflow::su2::ConditionResidual>,
                }
                let payload = Payload {
                    accepted: true,
                    v: v.v,
                    alpha: format_form(&v.quadruple.alpha),
                    omega2: format_form(&v.quadruple.omega2),
                    omega3: format_form(&v.quadruple.omega3),
                    residuals: v.residuals.clone(),
                };
                if let Err(e) = write_json(dir, "validate.json", &config, &payload) {
                    eprintln!("error writing report: {e}");
                    return EXIT_NUMERICAL;
                }
            }
            EXIT_OK
        }
        Err(rej) => {
            println!("REJECTED: {rej}");
            for r in &rej.residuals {
                println!(
                    "  {:?}: residual {:.3e} ({})",
                    r.condition,
                    r.residual,
                    if r.passed { "ok" } else { "failed" }
                );
            }
            if let Some(dir) = out {
                let _ = write_json(dir, "validate.json", &config, &rej);
            }
            EXIT_NEGATIVE
        }
    }
}

#[derive(serde::Serialize)]
struct ClassifyPayload {
    jacobi_residual: f64,
    iso_class: Option<String>,
    b1: usize,
    lower_central_dims: Vec<usize>,
    center_dim: usize,
    derived_dim: usize,
    hypo_residual: f64,
    orbit: Option<hypoflow::flow::OrbitLabel>,
    exact: bool,
}

pub fn cmd_classify(
    input: Option<&Path>,
    family: Option<&str>,
    params: Option<&str>,
    exact: bool,
    out: Option<&Path>,
    seed: u64,
) -> i32 {
    let mut config = RunConfig::new("classify", seed).arg("exact", exact);

    // assemble the differential in both precisions as available
    let (d_exact, d_f64, orbit): (
        Option<LieDifferential<Rational>>,
        LieDifferential<f64>,
        Option<hypoflow::flow::OrbitLabel>,
    ) = if let Some(path) = input {
        config = config.arg("input", path.display());
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return EXIT_USAGE;
            }
        };
        let file = match parse_form_file(&text) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("parse error: {e}");
                return EXIT_USAGE;
            }
        };
        match differential_from_file(&file) {
            Ok(d) => {
                let df = d.map(|c| c.to_f64());
                (Some(d), df, None)
            }
            Err(e) => {
                eprintln!("parse error: {e}");
                return EXIT_USAGE;
            }
        }
    } else if let (Some(fam), Some(ps)) = (family, params) {
        config = config.arg("family", fam).arg("params", ps);
        let fam = match parse_family(fam) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        let pf = match parse_params_f64(ps) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        let point = match FamilyPoint::new(fam, pf) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        let orbit = classify_orbit(&point, hypoflow::flow::MEMBERSHIP_TOL);
        let d_exact = if exact {
            match parse_params_exact(ps) {
                Ok(pe) => Some(family_differential(fam, &pe)),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
        } else {
            None
        };
        (d_exact, point.differential(), Some(orbit))
    } else {
        eprintln!("error: provide either --input or --family/--params");
        return EXIT_USAGE;
    };

    let jr = jacobi_residual(&d_f64);
    let hypo = is_hypo(&d_f64, &standard_triple());

    let (class, fp) = if exact {
        let de = match &d_exact {
            Some(d) => d.clone(),
            None => {
                eprintln!("error: --exact requires rational family parameters or a form file");
                return EXIT_USAGE;
            }
        };
        (iso_class(&de, 0.0), fingerprint(&de, 0.0))
    } else {
        (
            iso_class(&d_f64, JACOBI_TOL),
            fingerprint(&d_f64, JACOBI_TOL),
        )
    };

    let fp = match fp {
        Ok(fp) => fp,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NEGATIVE;
        }
    };

    println!("jacobi residual: {jr:.3e}");
    println!(
        "fingerprint: b1 = {}, lower central dims = {:?}, center = {}, derived = {}",
        fp.b1, fp.lower_central_dims, fp.center_dim, fp.derived_dim
    );
    println!("hypo residual (standard triple): {hypo:.3e}");
    let class_label = match &class {
        Ok(c) => {
            println!("isomorphism class: {c}");
            Some(c.label().to_string())
        }
        Err(e) => {
            println!("classification failed: {e}");
            None
        }
    };
    if let Some(o) = &orbit {
        println!(
            "orbit: {:?} (symmetries applied: {:?})",
            o.class, o.applied_symmetry
        );
    }

    if let Some(dir) = out {
        let payload = ClassifyPayload {
            jacobi_residual: jr,
            iso_class: class_label.clone(),
            b1: fp.b1,
            lower_central_dims: fp.lower_central_dims.clone(),
            center_dim: fp.center_dim,
            derived_dim: fp.derived_dim,
            hypo_residual: hypo,
            orbit,
            exact,
        };
        if let Err(e) = write_json(dir, "classify.json", &config, &payload) {
            eprintln!("error writing report: {e}");
            return EXIT_NUMERICAL;
        }
    }
    if class_label.is_some() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    }
}

pub struct EvolveArgs {
    pub family: String,
    pub params: String,
    pub tspan: String,
    pub rtol: f64,
    pub atol: f64,
    pub ceiling: f64,
    pub out: Option<std::path::PathBuf>,
    pub format: String,
    pub plot_data: bool,
    pub trace_w: Option<String>,
    pub seed: u64,
}

pub fn cmd_evolve(args: &EvolveArgs) -> i32 {
    let family = match parse_family(&args.family) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let params = match parse_params_f64(&args.params) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let span = match parse_span(&args.tspan) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if args.rtol <= 0.0 || args.atol <= 0.0 {
        eprintln!("error: tolerances must be positive");
        return EXIT_USAGE;
    }
    let point = match FamilyPoint::new(family, params) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cfg = IvpConfig {
        rtol: args.rtol,
        atol: args.atol,
        norm_ceiling: args.ceiling,
        ..IvpConfig::default()
    };
    let config = RunConfig::new("evolve", args.seed)
        .arg("family", &args.family)
        .arg("params", &args.params)
        .arg("tspan", &args.tspan)
        .arg("rtol", args.rtol)
        .arg("atol", args.atol)
        .arg("ceiling", args.ceiling)
        .arg("format", &args.format);

    let (traj, code) = match integrate(&point, span, &cfg) {
        Ok(t) => (t, EXIT_OK),
        Err(FlowError::StepSizeUnderflow { t, partial }) => {
            eprintln!("integrator failure: step size underflow at t = {t}; partial output kept");
            (*partial, EXIT_NUMERICAL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NUMERICAL;
        }
    };

    println!(
        "integrated {} samples over [{}, {}]; accepted {} / rejected {} steps",
        traj.samples.len(),
        span.0,
        traj.samples.last().map(|s| s.t).unwrap_or(span.0),
        traj.steps_accepted,
        traj.steps_rejected
    );
    if traj.blown_up {
        println!(
            "blow-up flagged near t = {} (state norm exceeded {})",
            traj.samples.last().map(|s| s.t).unwrap_or(f64::NAN),
            args.ceiling
        );
    }
    let set = first_integrals(&point);
    for (i, drift) in traj.integral_drifts().iter().enumerate() {
        match drift {
            Some(dv) => println!("integral {} drift: {:.3e}", set.values[i].name, dv),
            None => println!("integral {} undefined on this orbit", set.values[i].name),
        }
    }

    if let Some(dir) = &args.out {
        let config_json = serde_json::to_string(&config).expect("config json");
        if args.format == "json" || args.format == "both" {
            if let Err(e) = write_json(dir, "trajectory.json", &config, &traj) {
                eprintln!("error writing trajectory: {e}");
                return EXIT_NUMERICAL;
            }
        }
        if args.format == "csv" || args.format == "both" {
            let csv = trajectory_csv(&traj, &config_json);
            if let Err(e) = write_atomic(&dir.join("trajectory.csv"), &csv) {
                eprintln!("error writing trajectory: {e}");
                return EXIT_NUMERICAL;
            }
        }
        if args.plot_data {
            let names = family.param_names();
            for (j, name) in names.iter().enumerate() {
                let mut text = format!("# {config_json}\nt,{name}\n");
                for s in &traj.samples {
                    text.push_str(&format!("{},{}\n", s.t, s.state[j]));
                }
                let _ = write_atomic(&dir.join(format!("plot_{name}.csv")), &text);
            }
            for (j, v) in set.values.iter().enumerate() {
                let mut text = format!("# {config_json}\nt,{}\n", v.name);
                for s in &traj.samples {
                    if let Some(x) = s.integrals[j] {
                        text.push_str(&format!("{},{}\n", s.t, x));
                    }
                }
                let _ = write_atomic(&dir.join(format!("plot_integral_{j}.csv")), &text);
            }
        }
    }

    if let Some(w_name) = &args.trace_w {
        let w = match subspace(w_name) {
            Ok(w) => w,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        match trace_integral(&traj, &w, &ObstructionConfig::default()) {
            Ok(report) => {
                println!(
                    "obstruction report (W = {w_name}, dim {}): verdict {:?}, last partial integral {:.6e}",
                    report.w_dim,
                    report.verdict,
                    report.samples.last().map(|s| s.1).unwrap_or(0.0)
                );
                if let Some(dir) = &args.out {
                    let _ = write_json(dir, "obstruction.json", &config, &report);
                }
            }
            Err(e) => {
                eprintln!("obstruction integration failed: {e}");
                return EXIT_NUMERICAL;
            }
        }
    }
    code
}

#[derive(serde::Serialize)]
struct HolonomySample {
    t: f64,
    rank: usize,
    verdict: String,
}

pub fn cmd_holonomy(
    family: Option<&str>,
    params: Option<&str>,
    t_samples: Option<&str>,
    sweep: Option<&str>,
    out: Option<&Path>,
    seed: u64,
) -> i32 {
    if let Some(grid) = sweep {
        return holonomy_sweep(grid, out, seed);
    }
    let (Some(fam), Some(ps)) = (family, params) else {
        eprintln!("error: provide --family/--params or --sweep");
        return EXIT_USAGE;
    };
    let fam = match parse_family(fam) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let pf = match parse_params_f64(ps) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let point = match FamilyPoint::new(fam, pf.clone()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let config = RunConfig::new("holonomy", seed)
        .arg("family", format!("{fam:?}"))
        .arg("params", ps);
    let d = point.differential();
    let m3 = (fam == Family::M3).then(|| (pf[0], pf[1]));

    let report_at_t0 = {
        let q = match gauge_matrix_at(&d, 1e-8) {
            Ok(q) => q,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_NUMERICAL;
            }
        };
        let m = LeftInvariantMetric::standard(d.clone());
        match holonomy_rank(&m, &q, m3) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_NUMERICAL;
            }
        }
    };
    println!(
        "t = {}: rank {} — {}",
        0.0, report_at_t0.rank, report_at_t0.verdict
    );
    if let Some(irr) = report_at_t0.m3_irreducible {
        println!("closed-form irreducibility inequalities: {irr}");
    }

    let mut series: Vec<HolonomySample> = vec![HolonomySample {
        t: 0.0,
        rank: report_at_t0.rank,
        verdict: report_at_t0.verdict.clone(),
    }];
    if let Some(ts) = t_samples {
        let times: Vec<f64> = match ts
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
        {
            Ok(t) => t,
            Err(_) => {
                eprintln!("error: bad t-samples '{ts}'");
                return EXIT_USAGE;
            }
        };
        let t_end = times.iter().cloned().fold(0.0f64, f64::max) + 1e-6;
        let traj = match coframe_evolve(&d, (0.0, t_end), &CoframeConfig::default(), &times) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_NUMERICAL;
            }
        };
        for &t in &times {
            let Some(idx) = traj
                .ts
                .iter()
                .position(|&s| (s - t).abs() < 1e-10 * t.abs().max(1.0))
            else {
                continue;
            };
            let gram = traj.gram(idx);
            let q_fixed = match traj.gauge_fixed_frame(idx) {
                Some(q) => q,
                None => continue,
            };
            let m = match LeftInvariantMetric::new(d.clone(), gram) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error at t = {t}: {e}");
                    return EXIT_NUMERICAL;
                }
            };
            match holonomy_rank(&m, &q_fixed, None) {
                Ok(r) => {
                    println!("t = {t}: rank {} — {}", r.rank, r.verdict);
                    series.push(HolonomySample {
                        t,
                        rank: r.rank,
                        verdict: r.verdict,
                    });
                }
                Err(e) => {
                    eprintln!("error at t = {t}: {e}");
                    return EXIT_NUMERICAL;
                }
            }
        }
    }

    if let Some(dir) = out {
        #[derive(serde::Serialize)]
        struct Payload {
            report: hypoflow::curvature::HolonomyReport,
            series: Vec<HolonomySample>,
        }
        let payload = Payload {
            report: report_at_t0,
            series,
        };
        if let Err(e) = write_json(dir, "holonomy.json", &config, &payload) {
            eprintln!("error writing report: {e}");
            return EXIT_NUMERICAL;
        }
    }
    EXIT_OK
}

fn parse_range(spec: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("bad range '{spec}', expected a:b:n"));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| format!("bad range start '{}'", parts[0]))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad range end '{}'", parts[1]))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| format!("bad range count '{}'", parts[2]))?;
    if n < 2 {
        return Err("range needs at least 2 points".into());
    }
    Ok((a, b, n))
}

/// Third-family grid sweep of the holonomy rank; parallel across rows,
/// capped by HYPOFLOW_THREADS.
fn holonomy_sweep(grid: &str, out: Option<&Path>, seed: u64) -> i32 {
    let (l_spec, m_spec) = match grid.split_once(',') {
        Some(p) => p,
        None => {
            eprintln!("error: bad sweep '{grid}', expected l0:l1:n,m0:m1:m");
            return EXIT_USAGE;
        }
    };
    let (l0, l1, nl) = match parse_range(l_spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let (m0, m1, nm) = match parse_range(m_spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let threads = std::env::var("HYPOFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });

    let lambdas: Vec<f64> = (0..nl)
        .map(|i| l0 + (l1 - l0) * i as f64 / (nl - 1) as f64)
        .collect();
    let mus: Vec<f64> = (0..nm)
        .map(|i| m0 + (m1 - m0) * i as f64 / (nm - 1) as f64)
        .collect();

    let mut rows: Vec<(f64, f64, usize, bool)> = Vec::with_capacity(nl * nm);
    let chunks: Vec<Vec<f64>> = lambdas
        .chunks(lambdas.len().div_ceil(threads))
        .map(|c| c.to_vec())
        .collect();
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                let mus = &mus;
                scope.spawn(move || {
                    let mut local = Vec::new();
                    for &l in chunk {
                        for &mu in mus {
                            let d = family_differential(Family::M3, &[l, mu]);
                            let entry = gauge_matrix_at(&d, 1e-8)
                                .ok()
                                .and_then(|q| {
                                    holonomy_rank(
                                        &LeftInvariantMetric::standard(d.clone()),
                                        &q,
                                        Some((l, mu)),
                                    )
                                    .ok()
                                })
                                .map(|r| (l, mu, r.rank, r.m3_irreducible.unwrap_or(false)));
                            if let Some(e) = entry {
                                local.push(e);
                            }
                        }
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker"))
            .collect::<Vec<_>>()
    });
    rows.extend(results);
    rows.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());

    let reducible = rows.iter().filter(|r| r.2 < 8).count();
    println!(
        "swept {} points ({} threads): {} reducible, {} rank-8",
        rows.len(),
        threads,
        reducible,
        rows.len() - reducible
    );

    if let Some(dir) = out {
        let config = RunConfig::new("holonomy-sweep", seed).arg("grid", grid);
        let config_json = serde_json::to_string(&config).expect("config json");
        let mut csv = format!("# {config_json}\nlambda,mu,rank,irreducible\n");
        for (l, mu, rank, irr) in &rows {
            csv.push_str(&format!("{l},{mu},{rank},{irr}\n"));
        }
        if let Err(e) = write_atomic(&dir.join("holonomy_sweep.csv"), &csv) {
            eprintln!("error writing sweep: {e}");
            return EXIT_NUMERICAL;
        }
    }
    EXIT_OK
}
