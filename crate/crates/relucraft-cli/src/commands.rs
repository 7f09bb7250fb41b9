use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use relucraft::approx::{
    cks_net, error_table, grid_points, holder_interpolant, lipschitz_bounds, lipschitz_net, Builtin, CksTarget,
    HolderTarget, LipschitzSample,
};
use relucraft::calculus::{identity_net, BoundCertificate};
use relucraft::cpwl::{compile_cpwl, derive_maxmin_1d, eval_maxmin, parse_cpwl_document, CpwlDocument, Domain};
use relucraft::minmax::{maxn_net, minn_net};
use relucraft::net::{from_json, to_json, to_json_hexfloat};
use relucraft::regions::{count_pieces_on_segment, he_weights, random_bias_experiment, RandomBiasConfig, Segment};
use relucraft::simplicial::{compile_mesh, MeshLocator, Triangulation};
use relucraft::yarotsky::{mult_net, multn_net, polynomial_net, sawtooth_net, square_net};
use relucraft::{Error, ReluNetwork};
use serde::Serialize;

use crate::{
    CksArgs, Command, CompileArgs, EvalArgs, GadgetArgs, GadgetKind, HolderArgs, OutputArgs, RandomPiecesArgs,
    RegionArgs, VerifyArgs,
};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

/// Mixed into `--seed` for the bias stream so that weights and biases never
/// share a generator stream.
const BIAS_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

pub struct CliError {
    pub code: u8,
    pub message: String,
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Errors raised while building or running a construction.
fn lib_err(e: Error) -> CliError {
    let code = match e {
        Error::InvalidInput(_) => EXIT_USAGE,
        Error::Certificate { .. } => EXIT_VERIFY,
        _ => EXIT_PRECONDITION,
    };
    CliError {
        code,
        message: e.to_string(),
    }
}

/// Errors raised while reading a document: all of them mean the document
/// does not meet the requirements of the command.
fn doc_err(path: &Path, e: Error) -> CliError {
    CliError {
        code: EXIT_PRECONDITION,
        message: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn load_net(path: &Path) -> CliResult<ReluNetwork> {
    from_json(&read(path)?).map_err(|e| doc_err(path, e))
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("cert.json")
}

#[derive(Serialize)]
struct Sidecar<'a> {
    construction: &'a str,
    metrics: relucraft::NetworkMetrics,
    certificate: Option<&'a BoundCertificate>,
    report: Option<serde_json::Value>,
}

fn emit(
    out: &OutputArgs,
    construction: &str,
    net: &ReluNetwork,
    cert: Option<&BoundCertificate>,
    report: Option<serde_json::Value>,
) -> CliResult<()> {
    let doc = if out.hexfloat {
        to_json_hexfloat(net)
    } else {
        to_json(net)
    };
    write(&out.output, &doc)?;
    let side = Sidecar {
        construction,
        metrics: net.metrics(),
        certificate: cert,
        report,
    };
    let text = serde_json::to_string_pretty(&side).expect("sidecar serializes") + "\n";
    write(&sidecar_path(&out.output), &text)?;
    let m = net.metrics();
    println!("size,width,depth");
    println!("{},{},{}", m.size, m.width, m.depth);
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Gadget(a) => gadget(a),
        Command::CompileCpwl(a) => compile_cpwl_cmd(a),
        Command::CompileMesh(a) => compile_mesh_cmd(a),
        Command::Lipschitz(a) => lipschitz_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
        Command::ApproxHoelder(a) => approx_hoelder(a),
        Command::ApproxCks(a) => approx_cks(a),
        Command::CountRegions(a) => count_regions(a),
        Command::RandomPieces(a) => random_pieces(a),
    }
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("gadget {kind} requires --{flag}")))
}

fn gadget(a: GadgetArgs) -> CliResult<()> {
    let (name, net, cert, report) = match a.kind {
        GadgetKind::Identity => {
            let (n, c) = identity_net(a.d, a.depth).map_err(lib_err)?;
            ("identity", n, Some(c), None)
        }
        GadgetKind::Min => {
            let (n, c) = minn_net(need(a.n, "n", "min")?).map_err(lib_err)?;
            ("min", n, Some(c), None)
        }
        GadgetKind::Max => {
            let (n, c) = maxn_net(need(a.n, "n", "max")?).map_err(lib_err)?;
            ("max", n, Some(c), None)
        }
        GadgetKind::Sawtooth => {
            let n = sawtooth_net(need(a.n, "n", "sawtooth")?).map_err(lib_err)?;
            ("sawtooth", n, None, None)
        }
        GadgetKind::Square => {
            let (n, c) = square_net(need(a.n, "n", "square")?).map_err(lib_err)?;
            ("square", n, Some(c), None)
        }
        GadgetKind::Mult => {
            let (n, c) = mult_net(need(a.eps, "eps", "mult")?).map_err(lib_err)?;
            ("mult", n, Some(c), None)
        }
        GadgetKind::Multn => {
            let (n, c) = multn_net(need(a.n, "n", "multn")?, need(a.eps, "eps", "multn")?).map_err(lib_err)?;
            ("multn", n, Some(c), None)
        }
        GadgetKind::Poly => {
            if a.coeffs.is_empty() {
                return Err(usage("gadget poly requires --coeffs"));
            }
            let (n, r) = polynomial_net(&a.coeffs, need(a.eps, "eps", "poly")?).map_err(lib_err)?;
            ("poly", n, None, Some(to_value(&r)))
        }
    };
    emit(&a.out, name, &net, cert.as_ref(), report)
}

fn compile_cpwl_cmd(a: CompileArgs) -> CliResult<()> {
    let doc = parse_cpwl_document(&read(&a.input)?).map_err(|e| doc_err(&a.input, e))?;
    let spec = match doc {
        CpwlDocument::Spec(s) => s,
        CpwlDocument::OneDim(f) => derive_maxmin_1d(&f).map_err(|e| doc_err(&a.input, e))?,
    };
    let (net, cert) = compile_cpwl(&spec).map_err(|e| doc_err(&a.input, e))?;
    emit(&a.out, "cpwl", &net, Some(&cert), None)
}

fn compile_mesh_cmd(a: CompileArgs) -> CliResult<()> {
    let mesh = Triangulation::from_json(&read(&a.input)?).map_err(|e| doc_err(&a.input, e))?;
    let (net, cert) = compile_mesh(&mesh).map_err(|e| doc_err(&a.input, e))?;
    emit(&a.out, "mesh", &net, Some(&cert), None)
}

fn lipschitz_cmd(a: CompileArgs) -> CliResult<()> {
    let sample = LipschitzSample::from_json(&read(&a.input)?).map_err(|e| doc_err(&a.input, e))?;
    let (net, cert) = lipschitz_net(&sample).map_err(lib_err)?;
    emit(&a.out, "lipschitz", &net, Some(&cert), None)
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let net = load_net(&a.net)?;
    let mut out = String::new();
    let header: Vec<String> = (1..=net.input_dim())
        .map(|i| format!("x{i}"))
        .chain((1..=net.output_dim()).map(|i| format!("y{i}")))
        .collect();
    writeln!(out, "{}", header.join(",")).unwrap();
    for crate::Point(x) in &a.at {
        let y = net.evaluate(x).map_err(|e| CliError {
            code: EXIT_PRECONDITION,
            message: e.to_string(),
        })?;
        let row: Vec<String> = x.iter().chain(&y).map(|&v| num(v)).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    print!("{out}");
    Ok(())
}

type Oracle = Box<dyn Fn(&[f64]) -> Option<f64>>;

/// Oracle function, its input dimension (if fixed) and a default box.
fn build_oracle(spec: &str, net_dim: usize) -> CliResult<(Oracle, usize, f64, f64)> {
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("oracle '{spec}' must look like kind:argument")))?;
    let bbox = |pts: &[Vec<f64>]| {
        let lo = pts.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    match kind {
        "builtin" => {
            let b = Builtin::from_str(arg).map_err(lib_err)?;
            Ok((Box::new(move |x: &[f64]| Some(b.eval(x))), net_dim, 0.0, 1.0))
        }
        "maxmin" => {
            let path = PathBuf::from(arg);
            match parse_cpwl_document(&read(&path)?).map_err(|e| doc_err(&path, e))? {
                CpwlDocument::Spec(s) => {
                    let (lo, hi) = match &s.domain {
                        Domain::Box { lo, hi } => (
                            lo.iter().copied().fold(f64::INFINITY, f64::min),
                            hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        ),
                        Domain::AllSpace => (-1.0, 1.0),
                    };
                    eval_maxmin(&s, &vec![0.0; s.dim]).map_err(|e| doc_err(&path, e))?;
                    let dim = s.dim;
                    Ok((Box::new(move |x: &[f64]| eval_maxmin(&s, x).ok()), dim, lo, hi))
                }
                CpwlDocument::OneDim(f) => {
                    let lo = f.breakpoints.first().copied().unwrap_or(0.0) - 1.0;
                    let hi = f.breakpoints.last().copied().unwrap_or(0.0) + 1.0;
                    Ok((Box::new(move |x: &[f64]| Some(f.eval(x[0]))), 1, lo, hi))
                }
            }
        }
        "mesh" => {
            let path = PathBuf::from(arg);
            let mesh = Triangulation::from_json(&read(&path)?).map_err(|e| doc_err(&path, e))?;
            let (lo, hi) = bbox(mesh.vertices());
            let dim = mesh.dim();
            let locator = MeshLocator::new(&mesh);
            Ok((
                Box::new(move |x: &[f64]| {
                    locator.locate(x).map(|(t, lam)| {
                        mesh.simplices()[t]
                            .iter()
                            .zip(&lam)
                            .map(|(&v, l)| mesh.values()[v] * l)
                            .sum()
                    })
                }),
                dim,
                lo,
                hi,
            ))
        }
        "lipschitz" => {
            let path = PathBuf::from(arg);
            let sample = LipschitzSample::from_json(&read(&path)?).map_err(|e| doc_err(&path, e))?;
            let (lo, hi) = bbox(sample.points());
            let dim = sample.dim();
            Ok((
                Box::new(move |x: &[f64]| lipschitz_bounds(&sample, x).ok().map(|b| b.mid)),
                dim,
                lo,
                hi,
            ))
        }
        other => Err(usage(format!(
            "unknown oracle kind '{other}', expected maxmin, mesh, lipschitz or builtin"
        ))),
    }
}

/// Largest `n` with `n^d <= total`, at least 2.
fn per_axis(total: usize, d: usize) -> usize {
    let mut n = 2usize;
    while (n + 1).checked_pow(d as u32).is_some_and(|p| p <= total) {
        n += 1;
    }
    n
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    let net = load_net(&a.net)?;
    let (oracle, dim, lo, hi) = build_oracle(&a.against, net.input_dim())?;
    if dim != net.input_dim() || net.output_dim() != 1 {
        return Err(CliError {
            code: EXIT_PRECONDITION,
            message: format!(
                "network maps R^{} -> R^{} but the oracle expects R^{dim} -> R",
                net.input_dim(),
                net.output_dim()
            ),
        });
    }
    if a.tol.is_nan() || a.tol < 0.0 {
        return Err(usage("--tol must be nonnegative"));
    }
    let (lo, hi) = (a.lo.unwrap_or(lo), a.hi.unwrap_or(hi));
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(usage(format!("empty grid box [{lo}, {hi}]")));
    }
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for x in grid_points(dim, lo, hi, per_axis(a.grid, dim)) {
        if let Some(want) = oracle(&x) {
            checked += 1;
            worst = worst.max((net.eval1(&x) - want).abs());
        }
    }
    let pass = checked > 0 && worst <= a.tol;
    println!("points,max_abs_error,tolerance,status");
    println!(
        "{checked},{},{},{}",
        num(worst),
        num(a.tol),
        if pass { "pass" } else { "fail" }
    );
    if pass {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_VERIFY,
            message: if checked == 0 {
                "no grid point lies in the oracle's domain".into()
            } else {
                format!("max error {worst:e} exceeds tolerance {:e}", a.tol)
            },
        })
    }
}

fn print_table(net: &ReluNetwork, f: &(dyn Fn(&[f64]) -> f64 + Sync), d: usize, per_axis: usize) {
    let rows = error_table(net, f, &grid_points(d, 0.0, 1.0, per_axis));
    let mut out = String::new();
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(out, "{},f,phi,abs_error", header.join(",")).unwrap();
    for r in rows {
        let xs: Vec<String> = r.x.iter().map(|&v| num(v)).collect();
        writeln!(out, "{},{},{},{}", xs.join(","), num(r.f), num(r.phi), num(r.abs_error)).unwrap();
    }
    print!("{out}");
}

fn write_network(out: &OutputArgs, construction: &str, net: &ReluNetwork, report: serde_json::Value) -> CliResult<()> {
    let doc = if out.hexfloat {
        to_json_hexfloat(net)
    } else {
        to_json(net)
    };
    write(&out.output, &doc)?;
    let side = Sidecar {
        construction,
        metrics: net.metrics(),
        certificate: None,
        report: Some(report),
    };
    write(
        &sidecar_path(&out.output),
        &(serde_json::to_string_pretty(&side).expect("sidecar serializes") + "\n"),
    )
}

fn approx_hoelder(a: HolderArgs) -> CliResult<()> {
    let b = Builtin::from_str(&a.target).map_err(lib_err)?;
    let target = HolderTarget::builtin(b, a.d, a.s, a.norm_bound).map_err(lib_err)?;
    let (net, report) = holder_interpolant(&target, a.d, a.m).map_err(lib_err)?;
    write_network(&a.out, "hoelder", &net, to_value(&report))?;
    print_table(&net, &|x: &[f64]| b.eval(x), a.d, a.table);
    Ok(())
}

fn approx_cks(a: CksArgs) -> CliResult<()> {
    let b = Builtin::from_str(&a.target).map_err(lib_err)?;
    let target = CksTarget::builtin(b, a.d, a.k, a.s, a.norm_bound).map_err(lib_err)?;
    let (net, report) = cks_net(&target, a.d, a.n).map_err(lib_err)?;
    write_network(&a.out, "cks", &net, to_value(&report))?;
    print_table(&net, &|x: &[f64]| b.eval(x), a.d, a.table);
    Ok(())
}

fn count_regions(a: RegionArgs) -> CliResult<()> {
    let net = load_net(&a.net)?;
    let seg = Segment::new(a.from.0, a.to.0).map_err(lib_err)?;
    let report = count_pieces_on_segment(&net, &seg).map_err(lib_err)?;
    if a.breakpoints {
        println!("index,t");
        for (i, t) in report.breakpoints.iter().enumerate() {
            println!("{},{}", i + 1, num(*t));
        }
    } else {
        println!("pieces,telgarsky_bound");
        println!("{},{}", report.exact_count, report.telgarsky_bound);
    }
    Ok(())
}

fn random_pieces(a: RandomPiecesArgs) -> CliResult<()> {
    if a.widths.len() < 3 {
        return Err(usage(
            "--widths needs an input width, at least one hidden width and the output width",
        ));
    }
    if a.widths.last() != Some(&1) {
        return Err(usage("--widths must end with the output width 1"));
    }
    let weights = he_weights(&a.widths, a.seed).map_err(lib_err)?;
    let d0 = a.widths[0];
    let axis = |v: f64| {
        let mut p = vec![0.0; d0];
        p[0] = v;
        p
    };
    let seg = Segment::new(
        a.from.map_or_else(|| axis(-0.5), |p| p.0),
        a.to.map_or_else(|| axis(0.5), |p| p.0),
    )
    .map_err(lib_err)?;
    let cfg = RandomBiasConfig {
        weights,
        delta: a.delta,
        trials: a.trials,
        c_nu: a.c_nu,
        seed: a.seed ^ BIAS_SEED_MIX,
    };
    let stats = random_bias_experiment(&cfg, &seg).map_err(lib_err)?;
    let mut out = String::from("trial,pieces\n");
    for (i, p) in stats.pieces.iter().enumerate() {
        writeln!(out, "{i},{p}").unwrap();
    }
    print!("{out}");
    eprintln!(
        "mean_pieces={} bound={} c_nu={}{}",
        num(stats.mean_pieces),
        num(stats.bound),
        num(stats.c_nu),
        if stats.c_nu_estimated { " (estimated)" } else { "" }
    );
    Ok(())
}
