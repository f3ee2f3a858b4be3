use std::path::{Path, PathBuf};

use logsum::combine::{DirectionGrid, FlowSpec, VertexFlow};
use logsum::geom::{box_body, cross_polytope, cube, make_vpoly, regular_polygon, Body, Rep, Subspace};
use logsum::measure::{DensitySpec, SphereQuad};
use logsum::sample::{
    random_sym_hpoly, random_sym_vpoly, random_triangle_centroid, random_unconditional, random_vertex_flow, RadiusLaw,
    SeedSpec,
};
use logsum::verify::{self, CheckReport, HuntParams, HuntSummary, Sampling, ScanReport};
use serde_json::Value;

use crate::io::{emit, input, parse_list, read_json, to_json, write_atomic, CliError, CliResult};
use crate::{CheckArgs, CheckName, Common, GenArgs, GenKind, HuntArgs, ScanArgs, ScanName};

impl Common {
    fn grid(&self, n: usize) -> DirectionGrid {
        match self.dirs {
            Some(c) => DirectionGrid::with_count(n, c),
            None => DirectionGrid::default_for(n),
        }
    }

    fn sampling(&self) -> Sampling {
        Sampling::new(self.samples, self.seed)
    }

    fn density(&self) -> CliResult<DensitySpec> {
        match self.density.as_str() {
            "lebesgue" => Ok(DensitySpec::Lebesgue),
            "gaussian" => Ok(DensitySpec::Gaussian { sigma: self.sigma }),
            path => read_json(Path::new(path)),
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.samples == 0 {
            return input("--samples must be positive");
        }
        if matches!(self.dirs, Some(d) if d < 4) {
            return input("--dirs must be at least 4");
        }
        Ok(())
    }
}

fn body(path: &Option<PathBuf>, flag: &str) -> CliResult<Body> {
    match path {
        Some(p) => read_json(p),
        None => input(format!("--{flag} is required")),
    }
}

fn same_dim(k: &Body, l: &Body) -> CliResult<()> {
    if k.dim() != l.dim() {
        return input(format!("--k has dimension {} but --l has dimension {}", k.dim(), l.dim()));
    }
    Ok(())
}

fn summary(b: &Body) -> String {
    let counts = match b.rep() {
        Rep::H(h) => format!("H-rep, {} facets", h.normals.len()),
        Rep::V(v) => format!("V-rep, {} vertices", v.vertices.len()),
    };
    match b.in_out_radius() {
        Ok((r, big_r)) => format!("n={}, {counts}, inradius={r:.6}, outradius={big_r:.6}", b.dim()),
        Err(_) => format!("n={}, {counts}", b.dim()),
    }
}

/// Prints a one-line summary next to the written JSON: to stdout when the
/// JSON goes to a file, to stderr when it goes to stdout.
fn report_line(out: Option<&Path>, line: &str) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

pub fn gen(a: &GenArgs) -> CliResult<u8> {
    let n = a.dim;
    if n == 0 {
        return input("--dim must be positive");
    }
    let seed = SeedSpec::new(a.seed);
    let out = a.out.as_deref();
    let b = match a.kind {
        GenKind::Cube => cube(n),
        GenKind::Cross => cross_polytope(n),
        GenKind::BallPolygon => {
            if !(a.radius > 0.0 && a.radius.is_finite()) {
                return input("--radius must be positive");
            }
            match n {
                2 => {
                    let m = a.m.unwrap_or(64);
                    if m < 3 {
                        return input("--m must be at least 3");
                    }
                    regular_polygon(m, a.radius, 0.0)
                }
                3 => {
                    let grid = DirectionGrid::fibonacci(a.m.unwrap_or(500).max(4));
                    let pts = grid.directions().iter().map(|d| d.iter().map(|x| x * a.radius).collect()).collect();
                    make_vpoly(pts)?
                }
                _ => return input("ball-polygon needs --dim 2 or 3"),
            }
        }
        GenKind::StripBox => {
            let widths = match &a.half_widths {
                Some(s) => parse_list(s).map_err(CliError::Input)?,
                None => (0..n).map(|i| if i == 0 { 4.0 } else { 0.5 }).collect(),
            };
            if widths.len() != n || widths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return input(format!("--half-widths needs {n} positive numbers"));
            }
            box_body(&widths)
        }
        GenKind::SymVpoly => random_sym_vpoly(n, a.m.unwrap_or(2 * n), RadiusLaw::default(), &seed)?,
        GenKind::SymHpoly => random_sym_hpoly(n, a.m.unwrap_or(2 * n), &seed)?,
        GenKind::Unconditional => random_unconditional(n, a.m.unwrap_or(n + 1), &seed)?,
        GenKind::TriangleCentroid => {
            if n != 2 {
                return input("triangle-centroid is planar (--dim 2)");
            }
            random_triangle_centroid(&seed)?
        }
        GenKind::VertexFlow => {
            let flow = random_vertex_flow(n, a.m.unwrap_or(n + 2), a.symmetric, &seed)?;
            emit(out, &to_json(&flow))?;
            report_line(
                out,
                &format!("n={n}, vertex flow with {} points, window {:?}", flow.points.len(), flow.window),
            );
            return Ok(0);
        }
    };
    emit(out, &to_json(&b))?;
    report_line(out, &summary(&b));
    Ok(0)
}

fn verdict(pass: bool, what: &str, margin: f64, tol: f64) -> u8 {
    eprintln!("{} {what}: margin={margin:e} tolerance={tol:e}", if pass { "PASS" } else { "FAIL" });
    if pass {
        0
    } else {
        1
    }
}

fn parse_basis(s: &str) -> CliResult<Vec<Vec<f64>>> {
    s.split(';').map(|row| parse_list(row).map_err(CliError::Input)).collect()
}

fn run_check(a: &CheckArgs) -> CliResult<CheckReport> {
    let c = &a.common;
    let sampling = c.sampling();
    let pair = || -> CliResult<(Body, Body)> {
        let (k, l) = (body(&a.k, "k")?, body(&a.l, "l")?);
        same_dim(&k, &l)?;
        Ok((k, l))
    };
    let report = match a.name {
        CheckName::LogBm => {
            let (k, l) = pair()?;
            verify::check_log_bm(&k, &l, a.lambda, &c.density()?, &c.grid(k.dim()), &sampling)?
        }
        CheckName::DualLogBm => {
            let (k, l) = pair()?;
            verify::check_dual_log_bm(&k, &l, a.lambda, &c.grid(k.dim()))?
        }
        CheckName::DualQuermass => {
            let (k, l) = pair()?;
            verify::check_dual_quermass(&k, &l, a.lambda, a.p, a.i, &c.grid(k.dim()), &sampling)?
        }
        CheckName::DualQuermassDim => {
            let (k, l) = pair()?;
            verify::check_dual_quermass_dim(&k, &l, a.lambda, a.p, a.i, &c.grid(k.dim()), &sampling)?
        }
        CheckName::TriangleLogbm => {
            let (k, l) = pair()?;
            verify::check_triangle_logbm(&k, &l, a.lambda, &c.grid(2))?
        }
        CheckName::SimplexLowerBound => {
            let flow: VertexFlow = match &a.flow {
                Some(p) => read_json(p)?,
                None => return input("--flow is required"),
            };
            verify::check_simplex_lower_bound(&flow, a.s, a.r)?
        }
        CheckName::SectionContainment => {
            let (k, l) = pair()?;
            let n = k.dim();
            let h = match &a.basis {
                Some(s) => Subspace::new(parse_basis(s)?)?,
                None if n >= 2 => Subspace::coordinate(n, &(0..n - 1).collect::<Vec<_>>()),
                None => return input("section-containment needs dimension ≥ 2"),
            };
            verify::check_section_containment(&k, &l, a.lambda, &h, &c.grid(n), a.probes, &sampling.seed)?
        }
        CheckName::GaussianDilates => {
            let m = body(&a.k, "k")?;
            verify::check_gaussian_dilates(&c.density()?, &m, a.alpha, a.beta, a.lambda, &sampling)?
        }
        CheckName::MomentGap => {
            let (k, l) = pair()?;
            verify::check_moment_gap(&k, &l, a.p, a.a, &c.grid(k.dim()), &sampling)?
        }
        CheckName::IsotropyDerivative => {
            let k = body(&a.k, "k")?;
            let v = a.v.clone().unwrap_or_else(|| (0..k.dim()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect());
            verify::check_isotropy_derivative(&k, a.a, &v, a.h, &sampling)?
        }
        CheckName::VarianceBound => {
            let k = body(&a.k, "k")?;
            verify::check_variance_bound(&k, a.a, &c.grid(k.dim()))?
        }
    };
    Ok(report)
}

fn check_slug(name: CheckName) -> &'static str {
    match name {
        CheckName::LogBm => "log-bm",
        CheckName::DualLogBm => "dual-log-bm",
        CheckName::DualQuermass => "dual-quermass",
        CheckName::DualQuermassDim => "dual-quermass-dim",
        CheckName::TriangleLogbm => "triangle-logbm",
        CheckName::SimplexLowerBound => "simplex-lower-bound",
        CheckName::SectionContainment => "section-containment",
        CheckName::GaussianDilates => "gaussian-dilates",
        CheckName::MomentGap => "moment-gap",
        CheckName::IsotropyDerivative => "isotropy-derivative",
        CheckName::VarianceBound => "variance-bound",
    }
}

fn replay(a: &CheckArgs, path: &Path) -> CliResult<CheckReport> {
    let summary: HuntSummary = read_json(path)?;
    let slug = check_slug(a.name);
    if summary.check != slug {
        return input(format!("{} holds a `{}` hunt, not `{slug}`", path.display(), summary.check));
    }
    let trial = a.trial.expect("clap enforces --trial with --replay");
    let Some(entry) = summary.worst.iter().find(|e| e.trial == trial) else {
        return input(format!("trial {trial} is not among the instances kept in {}", path.display()));
    };
    Ok(entry.instance.run(slug, &summary.params)?)
}

pub fn check(a: &CheckArgs) -> CliResult<u8> {
    a.common.validate()?;
    if !(0.0..=1.0).contains(&a.lambda) {
        return input(format!("--lambda must lie in [0, 1], got {}", a.lambda));
    }
    let mut report = match &a.replay {
        Some(p) => replay(a, p)?,
        None => run_check(a)?,
    };
    if let Some(tol) = a.tol {
        report.tolerance = tol;
        report.pass = report.margin >= -tol;
    }
    emit(a.out.as_deref(), &to_json(&report))?;
    Ok(verdict(report.pass, &report.check_name, report.margin, report.tolerance))
}

fn flow_window(flow: &VertexFlow) -> (f64, f64) {
    let (lo, hi) = flow.window;
    let mid = 0.5 * (lo + hi);
    (mid + 0.9 * (lo - mid), mid + 0.9 * (hi - mid))
}

pub fn scan(a: &ScanArgs) -> CliResult<u8> {
    let c = &a.common;
    c.validate()?;
    let sampling = c.sampling();
    let grid = |default: (f64, f64)| verify::uniform_grid(a.t_min.unwrap_or(default.0), a.t_max.unwrap_or(default.1), a.steps);
    let mut report: ScanReport = match a.name {
        ScanName::B => {
            let k = body(&a.k, "body")?;
            let flow = match &a.flow {
                Some(s) => FlowSpec::new(parse_list(s).map_err(CliError::Input)?)?,
                None => return input("--flow is required (comma-separated exponents)"),
            };
            verify::scan_b(&c.density()?, &k, &flow, &grid((-1.0, 1.0))?, &sampling)?
        }
        ScanName::DualB => {
            let flow: VertexFlow = match &a.flow {
                Some(p) => read_json(Path::new(p))?,
                None => return input("--flow is required (vertex-flow JSON file)"),
            };
            verify::scan_dual_b(&flow, &grid(flow_window(&flow))?)?
        }
        ScanName::DualFamily => {
            let (k, l) = (body(&a.k, "k")?, body(&a.l, "l")?);
            same_dim(&k, &l)?;
            let quad = match a.quad_samples {
                Some(n) => SphereQuad::MonteCarlo { n_samples: n, seed: sampling.seed.clone() },
                None => SphereQuad::Grid(c.grid(k.dim())),
            };
            verify::scan_dual_family(&k, &l, a.p, a.a, &grid((-1.0, 1.0))?, &quad)?
        }
        ScanName::StripB => {
            let k = body(&a.k, "body")?;
            let n = k.dim();
            let u = a.u.clone().unwrap_or_else(|| (0..n).map(|i| if i + 1 == n { 1.0 } else { 0.0 }).collect());
            verify::check_strip_b(&k, &u, a.a, &grid((-1.0, 1.0))?)?
        }
    };
    if let Some(tol) = a.tol {
        report.tolerance = tol;
        report.pass = report.min_second_diff >= -tol;
    }
    emit(a.out.as_deref(), &to_json(&report))?;
    let csv = a.csv.clone().or_else(|| a.out.as_ref().map(|p| p.with_extension("csv")));
    if let Some(p) = csv {
        write_atomic(&p, &report.to_csv())?;
    }
    Ok(verdict(report.pass, &report.check_name, report.min_second_diff, report.tolerance))
}

pub fn hunt(a: &HuntArgs) -> CliResult<u8> {
    let c = &a.common;
    c.validate()?;
    if !verify::HUNT_CHECKS.contains(&a.check.as_str()) {
        return input(format!("unknown check `{}`; expected one of {}", a.check, verify::HUNT_CHECKS.join(", ")));
    }
    if a.trials == 0 {
        return input("--trials must be positive");
    }
    let params = HuntParams {
        m: a.m,
        lambda: a.lambda,
        p: a.p,
        i: a.i,
        grid: c.dirs,
        density: c.density()?,
        n_samples: c.samples,
        keep: a.keep,
    };
    let s = verify::hunt(&a.check, a.dim, a.trials, &params, &SeedSpec::new(c.seed))?;
    emit(a.out.as_deref(), &to_json(&s))?;
    eprintln!(
        "{}: {}/{} within tolerance, worst margin {:e}, {} confirmed violations",
        s.check, s.n_pass, s.n_trials, s.worst_margin, s.confirmed_violations
    );
    Ok(if s.confirmed_violations > 0 { 1 } else { 0 })
}

pub fn merge(files: &[PathBuf], out: Option<&Path>) -> CliResult<u8> {
    let mut reports = Vec::with_capacity(files.len());
    let mut n_fail = 0;
    for f in files {
        let v: Value = read_json(f)?;
        let failed = match v.get("pass") {
            Some(Value::Bool(p)) => !p,
            _ => v.get("confirmed_violations").and_then(Value::as_u64).is_some_and(|c| c > 0),
        };
        n_fail += failed as usize;
        reports.push(serde_json::json!({ "file": f.display().to_string(), "report": v }));
    }
    let merged = serde_json::json!({
        "n_reports": reports.len(),
        "n_fail": n_fail,
        "reports": reports,
    });
    emit(out, &to_json(&merged))?;
    eprintln!("merged {} reports, {n_fail} failing", files.len());
    Ok(if n_fail > 0 { 1 } else { 0 })
}
