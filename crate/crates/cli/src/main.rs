use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use twdiag::boxes::{congruent_diagonal, BoxError, DiagOptions, Diagonalization, Trace, TraceOp};
use twdiag::field::{Exact, Field, Real, DEFAULT_REAL_TOLERANCE};
use twdiag::matrix::{read_matrix_market, SparseSymmetricMatrix};
use twdiag::oracle::{
    bareiss_determinant, dense_congruent_diagonalize, random_instance, replay_trace, verify_replay, DenseSymmetric,
};
use twdiag::spectral::{count_eigenvalues_in, determinant, inertia, rank, tolerance_sensitive, Bound, SpectralError};
use twdiag::treedecomp::pace::{read_td, write_nice_td};
use twdiag::treedecomp::{nicify, NiceTreeDecomposition, TreeDecomposition};

/// Congruence diagonalization of sparse symmetric matrices along tree
/// decompositions.
#[derive(Parser, Debug)]
#[command(name = "twdiag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Matrix in Matrix Market coordinate format (symmetric).
    #[arg(long, global = true, value_name = "PATH")]
    matrix: Option<PathBuf>,

    /// Tree decomposition in PACE `.td` format.
    #[arg(long, global = true, value_name = "PATH")]
    td: Option<PathBuf>,

    /// Use floating-point arithmetic instead of exact rationals.
    #[arg(long, global = true)]
    real: bool,

    /// Relative zero tolerance of the real field.
    #[arg(long, global = true, value_name = "X", requires = "real")]
    tol: Option<f64>,

    /// Keep the input vertex labels instead of renaming by forget order.
    #[arg(long, global = true)]
    no_relabel: bool,

    /// Write the operation trace to PATH (`verify` reads it instead).
    #[arg(long, global = true, value_name = "PATH")]
    trace: Option<PathBuf>,

    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that the decomposition covers the matrix graph.
    Validate,
    /// Print a nice decomposition with an empty root bag.
    Nicify,
    /// Print the congruent diagonal and its summary.
    Diag,
    /// Print rank, determinant and inertia.
    Inertia,
    /// Count eigenvalues in the half-open interval (A, B].
    Locate {
        /// Lower end; `-inf` allowed.
        #[arg(allow_hyphen_values = true)]
        a: String,
        /// Upper end; `inf` allowed.
        #[arg(allow_hyphen_values = true)]
        b: String,
    },
    /// Check a run against the trace replay and the dense oracles.
    Verify,
    /// Tabulate operation counts on random instances.
    Bench {
        /// Matrix orders, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "200,400,800,1600")]
        sizes: Vec<usize>,
        /// Decomposition widths, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "3")]
        k: Vec<usize>,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances per size.
        #[arg(long, default_value_t = 3)]
        count: u64,
    },
}

/// Exit status 2 for bad input, 1 for everything else.
enum Failure {
    Invalid(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(e.into())
    }
}

impl From<BoxError> for Failure {
    fn from(e: BoxError) -> Self {
        match e {
            BoxError::OrderMismatch { .. } | BoxError::Decomposition(_) => Failure::Invalid(e.into()),
            _ => Failure::Internal(e.into()),
        }
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::InvalidInterval => Failure::Invalid(e.into()),
            SpectralError::Diagonalization(e) => e.into(),
        }
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("twdiag: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("twdiag: internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let out = &mut BufWriter::new(io::stdout().lock());
    match &cli.command {
        Command::Nicify => nicify_command(cli, out)?,
        Command::Bench { sizes, k, seed, count } => bench(cli, sizes, k, *seed, *count, out)?,
        _ if cli.real => {
            let tol = cli.tol.unwrap_or(DEFAULT_REAL_TOLERANCE);
            if !(tol.is_finite() && tol > 0.0) {
                return Err(invalid(anyhow!("--tol must be a positive number, got {tol}")));
            }
            matrix_command(cli, Real::new(tol), out)?
        }
        _ => matrix_command(cli, Exact, out)?,
    }
    out.flush()?;
    Ok(())
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    path.as_deref()
        .ok_or_else(|| invalid(anyhow!("this command needs {flag} PATH")))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(Failure::Invalid)
}

fn load_td(path: &Path) -> Result<TreeDecomposition, Failure> {
    read_td(open(path)?)
        .with_context(|| path.display().to_string())
        .map_err(Failure::Invalid)
}

fn load_matrix<F: Field>(field: F, path: &Path) -> Result<SparseSymmetricMatrix<F>, Failure> {
    read_matrix_market(field, open(path)?)
        .with_context(|| path.display().to_string())
        .map_err(Failure::Invalid)
}

/// Uses `td` as is when it is already nice, otherwise nicifies it.
fn nice_form(td: &TreeDecomposition) -> Result<NiceTreeDecomposition, Failure> {
    match NiceTreeDecomposition::try_from_decomposition(td) {
        Ok(nice) => Ok(nice),
        Err(_) => nicify(td).map_err(invalid),
    }
}

fn emit(out: &mut impl Write, cli: &Cli, text: &[String], value: Value) -> io::Result<()> {
    if cli.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("JSON values serialize"))
    } else {
        text.iter().try_for_each(|line| writeln!(out, "{line}"))
    }
}

fn nicify_command(cli: &Cli, out: &mut impl Write) -> Outcome {
    let td = load_td(required(&cli.td, "--td")?)?;
    if let Some(path) = &cli.matrix {
        let m = load_matrix(Exact, path)?;
        td.validate(&m.underlying_graph()).map_err(invalid)?;
    }
    let nice = nicify(&td).map_err(invalid)?;
    let mut text = Vec::new();
    write_nice_td(&nice, &mut text)?;
    let text = String::from_utf8(text).expect("td text is ASCII");
    if cli.json {
        let c = nice.kind_counts();
        let value = json!({
            "width": nice.width(),
            "nodes": nice.node_count(),
            "kinds": {"leaf": c.leaf, "introduce": c.introduce, "forget": c.forget, "join": c.join},
            "td": text,
        });
        emit(out, cli, &[], value)?;
    } else {
        out.write_all(text.as_bytes())?;
    }
    Ok(())
}

fn matrix_command<F: Field>(cli: &Cli, field: F, out: &mut impl Write) -> Outcome {
    let m = load_matrix(field.clone(), required(&cli.matrix, "--matrix")?)?;
    let td = load_td(required(&cli.td, "--td")?)?;
    let graph = m.underlying_graph();

    if let Command::Validate = cli.command {
        let width = td.validate(&graph).map_err(invalid)?;
        return Ok(emit(out, cli, &[format!("valid, width {width}")], json!({"valid": true, "width": width}))?);
    }
    td.validate(&graph).map_err(invalid)?;
    let nice = nice_form(&td)?;
    let options = DiagOptions {
        relabel: !cli.no_relabel,
        trace: cli.trace.is_some() || matches!(cli.command, Command::Verify),
        count: false,
    };

    match &cli.command {
        Command::Diag | Command::Inertia => {
            let run = congruent_diagonal(&m, &nice, options)?;
            if let (Some(path), Some(trace)) = (&cli.trace, &run.trace) {
                write_trace(path, m.field(), trace)?;
            }
            report_diagonal(cli, &run, out)
        }
        Command::Locate { a, b } => {
            let a = parse_bound(m.field(), a)?;
            let b = parse_bound(m.field(), b)?;
            let c = count_eigenvalues_in(&m, &nice, &a, &b)?;
            let mut text = vec![c.count.to_string()];
            let mut warnings = Vec::new();
            if !m.field().is_exact() {
                text.push(unverified_label(m.field()));
                if c.tolerance_sensitive {
                    warnings.push(SENSITIVE.to_string());
                    text.push(format!("# warning: {SENSITIVE}"));
                }
            }
            let value = json!({
                "count": c.count,
                "field": m.field().name(),
                "verified": m.field().is_exact(),
                "warnings": warnings,
            });
            Ok(emit(out, cli, &text, value)?)
        }
        Command::Verify => verify(cli, &m, &nice, options, out),
        Command::Validate | Command::Nicify | Command::Bench { .. } => unreachable!("dispatched in run"),
    }
}

const SENSITIVE: &str = "a diagonal value is within ten times the zero threshold; signs may be wrong";

fn unverified_label<F: Field>(field: &F) -> String {
    match field.zero_tolerance() {
        Some(tol) => format!("# {} field, tolerance {tol:e}: numerically unverified", field.name()),
        None => format!("# {} field: numerically unverified", field.name()),
    }
}

fn parse_bound<F: Field>(field: &F, text: &str) -> Result<Bound<F::Elem>, Failure> {
    match text.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(Bound::PosInfinity),
        "-inf" | "-infinity" => Ok(Bound::NegInfinity),
        _ => field
            .parse(text)
            .map(Bound::Finite)
            .with_context(|| format!("interval end {text:?}"))
            .map_err(Failure::Invalid),
    }
}

fn write_trace<F: Field>(path: &Path, field: &F, trace: &Trace<F::Elem>) -> Outcome {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    trace.write(field, &mut w)?;
    w.flush()?;
    Ok(())
}

fn report_diagonal<F: Field>(cli: &Cli, run: &Diagonalization<F>, out: &mut impl Write) -> Outcome {
    let d = &run.diagonal;
    let f = d.field();
    let i = inertia(d);
    let det = f.render(&determinant(d));
    let summary = format!("rank {} det {} inertia {}", rank(d), det, i);
    let mut text = Vec::new();
    if let Command::Diag = cli.command {
        text.extend(d.pairs().iter().map(|(v, x)| format!("{v} {}", f.render(x))));
    }
    text.push(summary);
    let mut warnings = Vec::new();
    if !f.is_exact() {
        text.push(unverified_label(f));
        if tolerance_sensitive(d) {
            warnings.push(SENSITIVE.to_string());
            text.push(format!("# warning: {SENSITIVE}"));
        }
    }
    let mut value = json!({
        "rank": rank(d),
        "determinant": det,
        "inertia": [i.n_plus, i.n_minus, i.n_zero],
        "field": f.name(),
        "verified": f.is_exact(),
        "warnings": warnings,
    });
    if let Command::Diag = cli.command {
        value["diagonal"] = d
            .pairs()
            .iter()
            .map(|(v, x)| json!({"vertex": v, "value": f.render(x)}))
            .collect();
    }
    Ok(emit(out, cli, &text, value)?)
}

fn verify<F: Field>(
    cli: &Cli,
    m: &SparseSymmetricMatrix<F>,
    nice: &NiceTreeDecomposition,
    options: DiagOptions,
    out: &mut impl Write,
) -> Outcome {
    let f = m.field();
    let run = congruent_diagonal(m, nice, options)?;
    let trace = match &cli.trace {
        Some(path) => Trace::read(f, open(path)?)
            .with_context(|| path.display().to_string())
            .map_err(Failure::Invalid)?,
        None => run.trace.clone().expect("tracing was requested"),
    };
    let d = &run.diagonal;
    let dense = dense_congruent_diagonalize(&DenseSymmetric::from_sparse(m));
    let mut checks: Vec<(&str, bool)> = vec![
        ("dense oracle inertia", inertia(d) == dense.inertia),
        ("dense oracle rank", rank(d) == dense.rank),
    ];
    if f.is_exact() {
        checks.push(("dense oracle determinant", determinant(d) == dense.determinant));
        let replayed = verify_replay(m, &trace).map_err(invalid)?;
        checks.push(("trace replay", replayed));
        if let Some(exact) = as_exact(m) {
            checks.push(("Bareiss determinant", f.render(&determinant(d)) == Exact.render(&bareiss_determinant(&exact))));
        }
    } else {
        let replayed = replay_trace(m, &trace).map_err(invalid)?;
        checks.push(("trace replay within 1000x the zero threshold", replay_close(&replayed, &trace, f)));
    }
    let ok = checks.iter().all(|(_, pass)| *pass);
    let mut text: Vec<String> = checks
        .iter()
        .map(|(name, pass)| format!("{name}: {}", if *pass { "ok" } else { "MISMATCH" }))
        .collect();
    text.push(if ok { "verified".into() } else { "verification failed".into() });
    if !f.is_exact() {
        text.push(unverified_label(f));
    }
    let value = json!({
        "checks": checks.iter().map(|(name, pass)| json!({"check": name, "ok": pass})).collect::<Vec<_>>(),
        "verified": ok,
        "field": f.name(),
    });
    emit(out, cli, &text, value)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Internal(anyhow!("the diagonalization disagrees with the oracles")))
    }
}

/// Re-reads a matrix in the exact field through its text rendering.
fn as_exact<F: Field>(m: &SparseSymmetricMatrix<F>) -> Option<SparseSymmetricMatrix<Exact>> {
    let f = m.field();
    let triples: Option<Vec<_>> = m
        .entries()
        .map(|(u, v, x)| Exact.parse(&f.render(x)).ok().map(|x| (u, v, x)))
        .collect();
    SparseSymmetricMatrix::from_entries(Exact, m.order(), triples?).ok()
}

/// Whether the replayed matrix is the emitted diagonal up to rounding.
fn replay_close<F: Field>(replayed: &DenseSymmetric<F>, trace: &Trace<F::Elem>, f: &F) -> bool {
    let n = replayed.order();
    let mut emitted = vec![f.zero(); n];
    for op in &trace.ops {
        if let TraceOp::Emit(v, d) = op {
            emitted[v - 1] = d.clone();
        }
    }
    (1..=n).all(|u| {
        (1..=n).all(|v| {
            let x = replayed.get(u, v);
            let dev = if u == v { f.sub(x, &emitted[u - 1]) } else { x.clone() };
            f.near_zero(&dev, 1e3)
        })
    })
}

fn bench(cli: &Cli, sizes: &[usize], ks: &[usize], seed: u64, count: u64, out: &mut impl Write) -> Outcome {
    if sizes.contains(&0) || ks.contains(&0) {
        return Err(invalid(anyhow!("sizes and widths must be positive")));
    }
    let mut text = vec!["n k mean_field_ops ops_per_n max_join_row_ops".to_string()];
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    if count > 0 {
        for &k in ks {
            let mut means = Vec::new();
            for &n in sizes {
                let mut total = 0u64;
                let mut worst = 0u32;
                for s in seed..seed + count {
                    let inst = random_instance(n, k, s);
                    let nice = nicify(&inst.td).map_err(|e| anyhow!(e))?;
                    let options = DiagOptions {
                        relabel: !cli.no_relabel,
                        trace: false,
                        count: true,
                    };
                    let run = congruent_diagonal(&inst.matrix, &nice, options).map_err(|e| anyhow!(e))?;
                    let c = run.counter.expect("counting was requested");
                    total += c.field_ops();
                    worst = worst.max(c.max_join_row_ops());
                }
                let mean = total as f64 / count as f64;
                let per_n = format!("{:.2}", mean / n as f64);
                let mean_text = format!("{mean:.1}");
                text.push(format!("{n} {k} {mean_text} {per_n} {worst}"));
                rows.push(json!({
                    "n": n, "k": k, "mean_field_ops": mean_text, "ops_per_n": per_n, "max_join_row_ops": worst,
                }));
                means.push((n, mean));
            }
            // least squares through the origin
            let num: f64 = means.iter().map(|&(n, y)| n as f64 * y).sum();
            let den: f64 = means.iter().map(|&(n, _)| (n as f64).powi(2)).sum();
            let coefficient = format!("{:.2}", num / den);
            text.push(format!("# k {k}: field ops ~ {coefficient} n"));
            fits.push(json!({"k": k, "coefficient": coefficient}));
            for w in means.windows(2) {
                let ((n1, y1), (n2, y2)) = (w[0], w[1]);
                let growth = (y2 / y1) / (n2 as f64 / n1 as f64);
                if growth > 1.25 {
                    let msg = format!("k {k}: super-linear growth from n {n1} to n {n2} ({growth:.2}x linear)");
                    text.push(format!("# warning: {msg}"));
                    warnings.push(msg);
                }
            }
        }
    }
    let value = json!({"rows": rows, "fits": fits, "warnings": warnings});
    Ok(emit(out, cli, &text, value)?)
}
