//! `relucraft`: build, evaluate, verify and analyse ReLU networks from the
//! command line. Results go to stdout as CSV with a header row.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or invalid parameters,
//! 3 violated precondition or invalid document, 4 failed verification.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "relucraft", version, about = "Constructive ReLU network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a gadget network.
    Gadget(GadgetArgs),
    /// Compile a CPWL document (max-min form or 1D breakpoints).
    CompileCpwl(CompileArgs),
    /// Compile a simplicial mesh with zero boundary values.
    CompileMesh(CompileArgs),
    /// Build the optimal Lipschitz reconstruction of labelled points.
    Lipschitz(CompileArgs),
    /// Evaluate a network at one or more points.
    Eval(EvalArgs),
    /// Compare a network with an oracle on a grid.
    Verify(VerifyArgs),
    /// Hölder interpolant of a built-in target on a uniform Kuhn mesh.
    ApproxHoelder(HolderArgs),
    /// Partition-of-unity approximation of a built-in C^{k,s} target.
    ApproxCks(CksArgs),
    /// Count the linear pieces of a network along a segment.
    CountRegions(RegionArgs),
    /// Expected-pieces experiment for networks with random biases.
    RandomPieces(RandomPiecesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetKind {
    Identity,
    Min,
    Max,
    Sawtooth,
    Square,
    Mult,
    Multn,
    Poly,
}

#[derive(Args)]
struct OutputArgs {
    /// Network document to write; a `.cert.json` sidecar is written next to it.
    #[arg(short, long)]
    output: PathBuf,
    /// Write weights as hexadecimal floats.
    #[arg(long)]
    hexfloat: bool,
}

#[derive(Args)]
struct GadgetArgs {
    kind: GadgetKind,
    /// Order, number of inputs or number of factors.
    #[arg(long)]
    n: Option<usize>,
    /// Accuracy of multiplication and polynomial gadgets.
    #[arg(long)]
    eps: Option<f64>,
    /// Dimension of the identity.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Depth of the identity.
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Polynomial coefficients c_0,c_1,...
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    coeffs: Vec<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CompileArgs {
    input: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct EvalArgs {
    net: PathBuf,
    /// Comma-separated point; repeat for several points.
    #[arg(long, required = true, value_parser = parse_point, allow_hyphen_values = true)]
    at: Vec<Point>,
}

#[derive(Args)]
struct VerifyArgs {
    net: PathBuf,
    /// maxmin:FILE, mesh:FILE, lipschitz:FILE or builtin:NAME.
    #[arg(long)]
    against: String,
    /// Approximate number of grid points.
    #[arg(long, default_value_t = 10_000)]
    grid: usize,
    /// Largest accepted absolute error.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Lower corner of the grid box (every coordinate).
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    /// Upper corner of the grid box (every coordinate).
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
}

#[derive(Args)]
struct HolderArgs {
    /// Built-in target name.
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Mesh resolution M.
    #[arg(long)]
    m: usize,
    /// Hölder exponent.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Bound on the Hölder norm; defaults to the registry value.
    #[arg(long)]
    norm_bound: Option<f64>,
    /// Grid points per axis in the error table.
    #[arg(long, default_value_t = 101)]
    table: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CksArgs {
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Budget N; M is the smallest integer with M^d >= N.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    #[arg(long)]
    norm_bound: Option<f64>,
    #[arg(long, default_value_t = 101)]
    table: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct RegionArgs {
    net: PathBuf,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    from: Point,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Point,
    /// List the breakpoints instead of the summary.
    #[arg(long)]
    breakpoints: bool,
}

#[derive(Args)]
struct RandomPiecesArgs {
    /// Layer widths d_0,d_1,...,d_L,1.
    #[arg(long, value_delimiter = ',', default_value = "2,5,5,5,1")]
    widths: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Seeds both the fixed weights and the biases.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bound on the maximal internal derivative; estimated if omitted.
    #[arg(long)]
    c_nu: Option<f64>,
    /// Segment start; defaults to (-0.5, 0, ..., 0).
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    from: Option<Point>,
    /// Segment end; defaults to (0.5, 0, ..., 0).
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Option<Point>,
}

/// A comma-separated point such as `0.5,-1`.
#[derive(Clone, Debug)]
struct Point(Vec<f64>);

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()
        .map(Point)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
