use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ddstab::ewald::{
    eval_points, hermitian_eigenvalues, kernel_symbol, lambda0, maxwell_lambda_pm, square_conformal_radius,
    symbol_range_scan, symmetric_grid, EwaldParams, EwaldSymbol, Lambda0Method, LambdaPmMethod,
};
use ddstab::kernels::{BuiltinKernel, Kernel};
use ddstab::lattice::{
    build_domain, write_dense_binary, write_dense_csv, FiniteSectionOperator, GridConvention, LinearOperator, Mode,
    Shape, DEFAULT_DENSE_LIMIT,
};
use ddstab::reference::{MaxEigRow, EX2_MAX_EIG, EX3_MAX_EIG, EX3_SYMBOL_MAX, LAMBDA0, MAXWELL3_MIN_MAX_EIG};
use ddstab::solver::{solve_shifted, SolveMethod};
use ddstab::spectra::{extrapolate, extreme_eigs, numerical_range, EigMethod, EigOptions};
use ddstab::stability::{
    classify, clausius_mossotti, numerical_range_wt, operator_range_wa, permittivity_stability_report,
    ConvexRegion, RangeOptions,
};
use ddstab::{Block, Complex64};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::output::{json_number, open, write_report, write_tables, Table};
use crate::{
    AssembleArgs, CliError, Command, NumrangeArgs, SolveArgs, SpectrumArgs, StabilityArgs, SymbolArgs, TablesArgs,
};

/// Magic of the binary vector format used by `solve`.
const VECTOR_MAGIC: &[u8; 8] = b"DDSTABV1";

type CmdResult = Result<(), CliError>;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> CmdResult {
    match cmd {
        Command::Symbol(a) => symbol(cfg, a),
        Command::Constants => constants(cfg),
        Command::Tables(a) => tables(cfg, a),
        Command::Assemble(a) => assemble(cfg, a),
        Command::Spectrum(a) => spectrum(cfg, a),
        Command::Numrange(a) => numrange(cfg, a),
        Command::Stability(a) => stability(cfg, a),
        Command::Solve(a) => solve(cfg, a),
    }
}

fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number pair re,im")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(bad(format!("'{s}' is not a number pair re,im"))),
    }
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": json_number(z.re), "im": json_number(z.im) })
}

fn operator(cfg: &RunConfig, n: usize, limit: usize) -> Result<FiniteSectionOperator, CliError> {
    let d = cfg.kernel.dim();
    let dom = build_domain(d, n, &Shape::unit_box(d), cfg.grid)?;
    Ok(FiniteSectionOperator::auto(&cfg.kernel, &dom, limit, cfg.par)?)
}

fn write_csv_or_json(cfg: &RunConfig, command: &str, tables: &[(&str, Table)]) -> CmdResult {
    let mut w = open(cfg.out.as_deref())?;
    write_tables(&mut *w, cfg.format.unwrap_or(Format::Csv), &cfg.meta(command), tables)?;
    Ok(())
}

fn report(cfg: &RunConfig, command: &str, value: Value) -> CmdResult {
    let mut w = open(cfg.out.as_deref())?;
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => write_report(&mut *w, &cfg.meta(command), value)?,
        Format::Csv => {
            writeln!(w, "# {}", cfg.meta(command))?;
            writeln!(w, "quantity,value")?;
            let mut flat = Vec::new();
            flatten("", &value, &mut flat);
            for (k, v) in flat {
                writeln!(w, "{k},{v}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Sample points of the requested region, flattened with stride `d`.
fn region_points(region: &str, d: usize, samples: usize) -> Result<Vec<f64>, CliError> {
    let full = symmetric_grid(samples);
    let half: Vec<f64> = (0..samples).map(|i| PI * i as f64 / (samples - 1) as f64).collect();
    let tensor = |axis: &[f64]| {
        let total = axis.len().pow(d as u32);
        let mut pts = Vec::with_capacity(total * d);
        for i in 0..total {
            let mut rest = i;
            let start = pts.len();
            pts.resize(start + d, 0.0);
            for k in (0..d).rev() {
                pts[start + k] = axis[rest % axis.len()];
                rest /= axis.len();
            }
        }
        pts
    };
    match region {
        "full" => Ok(tensor(&full)),
        "quarter" => Ok(tensor(&half)),
        // Diamond with vertices (0,0), (pi,±pi), (2pi,0).
        "lozenge" if d == 2 => Ok(tensor(&full)
            .chunks_exact(2)
            .map(|p| [p[0] + PI, p[1]])
            .filter(|p| (p[0] - PI).abs() + p[1].abs() <= PI * (1.0 + 1e-15))
            .flatten()
            .collect()),
        "lozenge" => Err(bad("the lozenge region needs d = 2")),
        "line" if d == 3 => Ok(full.iter().flat_map(|&y| [PI, y, 0.0]).collect()),
        "line" => Err(bad("the line region (pi, y, 0) needs d = 3")),
        _ => Err(bad(format!("unknown region '{region}' (full, quarter, lozenge, line)"))),
    }
}

fn symbol(cfg: &RunConfig, a: &SymbolArgs) -> CmdResult {
    let d = cfg.kernel.dim();
    let r = cfg.kernel.block();
    let default_samples = match (a.region.as_str(), d) {
        ("line", _) | (_, 1) => 1001,
        (_, 2) => 201,
        _ => 41,
    };
    let points = region_points(&a.region, d, cfg.samples.unwrap_or(default_samples))?;
    // F is 2pi-periodic; the lozenge leaves the centred cell.
    let wrapped: Vec<f64> = points.iter().map(|&t| if t > PI { t - 2.0 * PI } else { t }).collect();
    let values: Vec<Block> = match &cfg.kernel {
        Kernel::Homogeneous(k) => eval_points(&EwaldSymbol::new(k, cfg.params)?, &wrapped, cfg.par)?,
        Kernel::Sawtooth(_) => wrapped
            .chunks_exact(d)
            .map(|t| kernel_symbol(&cfg.kernel, t, cfg.params))
            .collect::<Result<_, _>>()?,
    };
    let mut columns: Vec<String> = (1..=d).map(|i| format!("tau_{i}")).collect();
    let hermitian = cfg.kernel.is_hermitian();
    if a.eigs {
        if hermitian {
            columns.extend((1..=r).map(|i| format!("eig_{i}")));
        } else if r == 1 {
            columns.extend(["re".to_string(), "im".to_string()]);
        } else {
            return Err(bad("--eigs needs a Hermitian or scalar kernel"));
        }
    } else {
        for i in 1..=r {
            for j in 1..=r {
                columns.push(format!("f{i}{j}_re"));
                columns.push(format!("f{i}{j}_im"));
            }
        }
    }
    let mut table = Table::new(columns);
    for (tau, f) in points.chunks_exact(d).zip(&values) {
        let mut row = tau.to_vec();
        if a.eigs && hermitian {
            row.extend(hermitian_eigenvalues(f));
        } else if a.eigs {
            row.extend([f[(0, 0)].re, f[(0, 0)].im]);
        } else {
            for i in 0..r {
                for j in 0..r {
                    row.extend([f[(i, j)].re, f[(i, j)].im]);
                }
            }
        }
        table.push(row);
    }
    write_csv_or_json(cfg, "symbol", &[("symbol", table)])
}

fn constants(cfg: &RunConfig) -> CmdResult {
    let closed = lambda0(Lambda0Method::ClosedForm)?;
    let series = lambda0(Lambda0Method::Series(5))?;
    let radius = square_conformal_radius();
    let (em, ep) = maxwell_lambda_pm(3, LambdaPmMethod::Ewald(EwaldParams::default_for(3)), cfg.par)?;
    let (pm, pp) = maxwell_lambda_pm(3, LambdaPmMethod::CubePartial(200), cfg.par)?;
    let rep = permittivity_stability_report(3, EwaldParams::default_for(3), cfg.par)?;
    let value = json!({
        "lambda0": {
            "closed_form": closed,
            "series_5_terms": series,
            "difference": (closed - series).abs(),
        },
        "square_conformal_radius": radius,
        "conformal_identity_residual": (PI * radius * radius - 2.0 * closed).abs(),
        "maxwell3": {
            "ewald": { "lambda_minus": em, "lambda_plus": ep },
            "cube_partial_200": { "lambda_minus": pm, "lambda_plus": pp },
            "overshoot": rep.overshoot,
            "eps_min": rep.eps_min,
            "eps_max": rep.eps_max,
        },
    });
    report(cfg, "constants", value)
}

fn eig_opts(method: EigMethod, tol: f64, max_iter: usize) -> EigOptions {
    EigOptions {
        tol,
        max_iter,
        method,
        ..EigOptions::default()
    }
}

fn op_for(b: BuiltinKernel, n: usize, grid: GridConvention, cfg: &RunConfig) -> Result<FiniteSectionOperator, CliError> {
    let k = b.build()?;
    let d = k.dim();
    let dom = build_domain(d, n, &Shape::unit_box(d), grid)?;
    Ok(FiniteSectionOperator::auto(&k, &dom, DEFAULT_DENSE_LIMIT, cfg.par)?)
}

fn supf_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let k = ddstab::kernels::builtin(BuiltinKernel::Ex3)?;
    let mut t = Table::new(["M", "maximum", "reference", "diff", "diff_lambda0"]);
    let samples = cfg.samples.unwrap_or(1001);
    for (m, reference) in EX3_SYMBOL_MAX {
        let scan = symbol_range_scan(&k, EwaldParams::with_radius(m)?, samples, cfg.par)?;
        t.push(vec![m as f64, scan.max_eig, reference, scan.max_eig - reference, scan.max_eig - LAMBDA0]);
    }
    Ok(t)
}

/// Fills a largest-eigenvalue table; failures leave NaN rows and are
/// reported after the table is written.
fn max_eig_table(cfg: &RunConfig, b: BuiltinKernel, rows: &[MaxEigRow], limit: f64) -> (Table, Option<String>) {
    let mut t = Table::new([
        "N",
        "lambda_max",
        "reference",
        "diff",
        "extrap",
        "reference_extrap",
        "extrap_diff",
        "diff_limit",
    ]);
    let opts = eig_opts(EigMethod::Lanczos, 1e-11, 800);
    let mut values = Vec::new();
    let mut failure = None;
    for row in rows {
        match op_for(b, row.n, cfg.grid, cfg).map_err(|e| e.to_string()).and_then(|op| {
            extreme_eigs(&op, opts).map_err(|e| e.to_string())
        }) {
            Ok(e) => values.push((row.n, e.lambda_max)),
            Err(e) => {
                failure.get_or_insert(format!("{b} N={}: {e}", row.n));
                values.push((row.n, f64::NAN));
            }
        }
    }
    let extrap = extrapolate(&values).unwrap_or_default();
    for (i, (row, (n, v))) in rows.iter().zip(&values).enumerate() {
        let ex = if i >= 2 { extrap.get(i - 2).map(|e| e.1).unwrap_or(f64::NAN) } else { f64::NAN };
        let rex = row.extrapolated.unwrap_or(f64::NAN);
        t.push(vec![*n as f64, *v, row.lambda_max, v - row.lambda_max, ex, rex, ex - rex, ex - limit]);
    }
    (t, failure)
}

fn maxwell_table(cfg: &RunConfig) -> (Table, Option<String>) {
    let mut t = Table::new([
        "N",
        "lambda_max",
        "lambda_min",
        "spread",
        "reference_max",
        "reference_min",
        "reference_spread",
        "diff_max",
        "diff_min",
        "diff_spread",
    ]);
    let opts = eig_opts(EigMethod::Lanczos, 1e-11, 800);
    let mut failure = None;
    for row in MAXWELL3_MIN_MAX_EIG {
        let (mx, mn) = match op_for(BuiltinKernel::Maxwell(3), row.n, cfg.grid, cfg)
            .map_err(|e| e.to_string())
            .and_then(|op| extreme_eigs(&op, opts).map_err(|e| e.to_string()))
        {
            Ok(e) => (e.lambda_max, e.lambda_min),
            Err(e) => {
                failure.get_or_insert(format!("maxwell3 N={}: {e}", row.n));
                (f64::NAN, f64::NAN)
            }
        };
        t.push(vec![
            row.n as f64,
            mx,
            mn,
            mx - mn,
            row.lambda_max,
            row.lambda_min,
            row.spread,
            mx - row.lambda_max,
            mn - row.lambda_min,
            mx - mn - row.spread,
        ]);
    }
    (t, failure)
}

fn tables(cfg: &RunConfig, a: &TablesArgs) -> CmdResult {
    let names: Vec<&str> = match a.table.as_str() {
        "all" => vec!["supf", "maxev-ex3", "maxev-ex2", "maxwell"],
        t @ ("supf" | "maxev-ex3" | "maxev-ex2" | "maxwell") => vec![t],
        t => return Err(bad(format!("unknown table '{t}' (supf, maxev-ex3, maxev-ex2, maxwell, all)"))),
    };
    let mut out = Vec::new();
    let mut failure = None;
    for name in names {
        let (table, fail) = match name {
            "supf" => (supf_table(cfg)?, None),
            "maxev-ex3" => max_eig_table(cfg, BuiltinKernel::Ex3, &EX3_MAX_EIG, LAMBDA0),
            "maxev-ex2" => max_eig_table(cfg, BuiltinKernel::Ex2, &EX2_MAX_EIG, 0.5),
            _ => maxwell_table(cfg),
        };
        failure = failure.or(fail);
        out.push((name, table));
    }
    write_csv_or_json(cfg, "tables", &out)?;
    match failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn assemble(cfg: &RunConfig, a: &AssembleArgs) -> CmdResult {
    let n = cfg.single_n()?;
    let op = operator(cfg, n, a.limit)?;
    let mut value = json!({
        "rows": op.dim(),
        "points": op.domain().len(),
        "meshwidth": op.domain().meshwidth(),
        "mode": match op.mode() { Mode::Dense => "dense", Mode::Fft => "fft" },
        "circulant_dims": op.circulant_dims(),
        "hermitian": op.is_hermitian(),
    });
    if let Some(path) = &a.dump {
        let m = op.to_dense(a.limit)?;
        let mut w = BufWriter::new(File::create(path)?);
        match a.dump_format.as_str() {
            "binary" => write_dense_binary(&mut w, &m, cfg.kernel.dim(), cfg.kernel.block(), n)?,
            "csv" => write_dense_csv(&mut w, &m)?,
            f => return Err(bad(format!("unknown dump format '{f}' (binary or csv)"))),
        }
        w.flush()?;
        value["dump"] = json!({ "path": path.display().to_string(), "format": a.dump_format });
    }
    report(cfg, "assemble", value)
}

fn parse_method(s: &str) -> Result<EigMethod, CliError> {
    match s {
        "lanczos" => Ok(EigMethod::Lanczos),
        "dense" => Ok(EigMethod::Dense),
        "auto" => Ok(EigMethod::Auto),
        _ => Err(bad(format!("unknown eigensolver '{s}' (lanczos, dense, auto)"))),
    }
}

fn spectrum(cfg: &RunConfig, a: &SpectrumArgs) -> CmdResult {
    let opts = eig_opts(parse_method(&a.method)?, a.tol, a.max_iter);
    let mut values = Vec::new();
    let mut details = Vec::new();
    for &n in &cfg.n {
        let op = operator(cfg, n, DEFAULT_DENSE_LIMIT)?;
        let e = extreme_eigs(&op, opts)?;
        values.push((n, e.lambda_max));
        details.push(e);
    }
    let extrap = if values.len() >= 3 { extrapolate(&values).unwrap_or_default() } else { Vec::new() };
    let mut t = Table::new(["N", "lambda_min", "lambda_max", "extrap", "iterations", "residual_min", "residual_max"]);
    for (i, ((n, _), e)) in values.iter().zip(&details).enumerate() {
        let ex = if i >= 2 { extrap.get(i - 2).map(|x| x.1).unwrap_or(f64::NAN) } else { f64::NAN };
        t.push(vec![
            *n as f64,
            e.lambda_min,
            e.lambda_max,
            ex,
            e.iterations as f64,
            e.residuals[0],
            e.residuals[1],
        ]);
    }
    write_csv_or_json(cfg, "spectrum", &[("spectrum", t)])
}

fn numrange(cfg: &RunConfig, a: &NumrangeArgs) -> CmdResult {
    let n = cfg.single_n()?;
    let op = operator(cfg, n, DEFAULT_DENSE_LIMIT)?;
    let opts = EigOptions { tol: a.tol, ..EigOptions::default() };
    let w = numerical_range(&op, a.angles, opts, cfg.par)?;
    let mut t = Table::new(["theta", "re_p", "im_p", "support"]);
    for ((theta, p), h) in w.angles.iter().zip(&w.points).zip(&w.support) {
        t.push(vec![*theta, p.re, p.im, *h]);
    }
    write_csv_or_json(cfg, "numrange", &[("numrange", t)])?;
    if w.is_partial() {
        return Err(CliError::Numerical(format!("{} angles did not converge", w.failed.len())));
    }
    Ok(())
}

fn region_json(r: &ConvexRegion) -> Value {
    match r {
        ConvexRegion::Interval { lo, hi } => json!({ "kind": "interval", "lo": lo, "hi": hi }),
        ConvexRegion::Polygon(v) => json!({
            "kind": "polygon",
            "vertices": v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        }),
    }
}

fn stability(cfg: &RunConfig, a: &StabilityArgs) -> CmdResult {
    let d = cfg.kernel.dim();
    let (lambda, eps) = match (&a.lambda, &a.eps_r) {
        (Some(l), None) => (parse_complex(l)?, None),
        (None, Some(e)) => {
            let eps = parse_complex(e)?;
            (clausius_mossotti(eps, d)?, Some(eps))
        }
        _ => return Err(bad("give exactly one of --lambda or --eps-r")),
    };
    let grid_n = cfg.samples.unwrap_or(if d <= 2 { 201 } else { 41 });
    let opts = RangeOptions {
        params: cfg.params,
        grid_n,
        line_n: 10 * grid_n,
        ..RangeOptions::default_for(d)
    };
    let region = numerical_range_wt(&cfg.kernel, opts, cfg.par)?;
    let wa = operator_range_wa(&cfg.kernel, opts.sphere_grid_n)?;
    let verdict = classify(lambda, &region);
    let well_posed = !wa.contains(lambda);
    let mut value = json!({
        "lambda": complex_json(lambda),
        "stable": !verdict.in_region,
        "in_region": verdict.in_region,
        "distance": verdict.distance,
        "resolvent_bound": json_number(verdict.resolvent_bound),
        "integral_equation_well_posed": well_posed,
        "unstable_but_well_posed": verdict.in_region && well_posed,
        "region": region_json(&region),
        "region_source": { "kind": "numerical", "grid_n": opts.grid_n, "line_n": opts.line_n },
        "operator_range": region_json(&wa),
    });
    if let Some(e) = eps {
        value["eps_r"] = complex_json(e);
    }
    if let BuiltinKernel::Maxwell(md) = cfg.builtin {
        let r = permittivity_stability_report(md, cfg.params, cfg.par)?;
        value["permittivity"] = json!({
            "lambda_minus": r.lambda_minus,
            "lambda_plus": r.lambda_plus,
            "eps_min": r.eps_min,
            "eps_max": r.eps_max,
            "overshoot": r.overshoot,
            "unstable_lambda_bands": r.unstable_lambda_bands,
            "unstable_eps_bands": r.unstable_eps_bands.map(|(a, b)| [json_number(a), json_number(b)]),
        });
    }
    report(cfg, "stability", value)
}

fn read_vector(path: &Path) -> Result<Vec<Complex64>, CliError> {
    let mut f = File::open(path).map_err(|e| bad(format!("cannot open {}: {e}", path.display())))?;
    let mut head = [0u8; 8];
    let n = f.read(&mut head)?;
    if n == 8 && &head == VECTOR_MAGIC {
        let mut len = [0u8; 8];
        f.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        let mut buf = vec![0u8; len * 16];
        f.read_exact(&mut buf).map_err(|_| bad("truncated binary vector"))?;
        return Ok(buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect());
    }
    let f = File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("re") {
            continue;
        }
        out.push(parse_complex(line)?);
    }
    Ok(out)
}

fn write_vector(path: &Path, v: &[Complex64]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        w.write_all(VECTOR_MAGIC)?;
        w.write_all(&(v.len() as u64).to_le_bytes())?;
        for z in v {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    } else {
        writeln!(w, "re,im")?;
        for z in v {
            writeln!(w, "{:?},{:?}", z.re, z.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn solve(cfg: &RunConfig, a: &SolveArgs) -> CmdResult {
    let n = cfg.single_n()?;
    let lambda = parse_complex(&a.lambda)?;
    let op = operator(cfg, n, DEFAULT_DENSE_LIMIT)?;
    let rhs = match &a.rhs {
        Some(p) => read_vector(p)?,
        None => vec![Complex64::new(1.0, 0.0); op.dim()],
    };
    let rep = solve_shifted(&op, lambda, &rhs, a.tol, a.max_iter, SolveMethod::parse(&a.method)?)?;
    if let Some(p) = &a.solution {
        write_vector(p, &rep.solution)?;
    }
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let value = json!({
        "lambda": complex_json(lambda),
        "method": rep.method.name(),
        "iterations": rep.iterations,
        "relative_residual": rep.relative_residual,
        "converged": rep.converged,
        "near_singular": rep.near_singular,
        "rows": op.dim(),
        "rhs_norm": norm(&rhs),
        "solution_norm": norm(&rep.solution),
        "solution": a.solution.as_ref().map(|p| p.display().to_string()),
    });
    report(cfg, "solve", value)?;
    if rep.near_singular {
        return Err(CliError::Numerical("near-singular shift: lambda sits on an eigenvalue".into()));
    }
    if !rep.converged {
        return Err(CliError::Numerical(format!(
            "no convergence after {} iterations (relative residual {:.3e})",
            rep.iterations, rep.relative_residual
        )));
    }
    Ok(())
}
