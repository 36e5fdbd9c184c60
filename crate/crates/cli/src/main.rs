//! Command-line front end: coefficient tables, correlation evaluation,
//! simulation and verification for isotropic random field models.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use isofield::bmodes::{assemble, gram_factor, CholeskyFactor, FieldKind, ModeCovariance};
use isofield::correlation::{correlation, n_function, CorrelationValue, Separation};
use isofield::coupling::gg;
use isofield::io;
use isofield::model::{
    DirectionalDensity, EllipsePoint, Model, ScalarModel, SpectralMeasure, TensorModel, VectorModel,
};
use isofield::simulate::{discretize, PreparedGrid, Sampler, DEFAULT_LMAX};
use isofield::verify::{
    density_report, isotropy_report, mc_report, oracle_report, random_separations, OracleReport, ORACLE_TOL,
};
use isofield::Error;

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser)]
#[command(name = "isofield", version, about = "Isotropic random vector and tensor fields")]
struct Cli {
    /// Worker threads (also read from ISOFIELD_THREADS).
    #[arg(long, global = true, env = "ISOFIELD_THREADS")]
    threads: Option<usize>,
    /// Omit timestamps so reruns produce identical files.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print coefficient tables as CSV.
    Tables {
        #[command(subcommand)]
        table: Table,
    },
    /// Evaluate the closed-form correlation of a model.
    Eval(EvalArgs),
    /// Draw Gaussian realizations of a model on a grid.
    Simulate(SimulateArgs),
    /// Check a model against the independent oracles.
    Verify(VerifyArgs),
    /// Turn tabulated spectral densities into an atomic model file.
    Discretize(DiscretizeArgs),
}

#[derive(Subcommand)]
enum Table {
    /// Real coupling coefficients for all degrees up to --lmax.
    Coupling {
        #[arg(long)]
        lmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mode covariance and its Cholesky factor (nonzero entries).
    Bmatrix {
        #[arg(long, value_enum)]
        kind: BKind,
        #[arg(long)]
        lmax: usize,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        v1: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        v2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The fifteen kernel functions at one argument and shape.
    Nfunctions {
        #[arg(long)]
        lambda_rho: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        v1: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        v2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BKind {
    Vector1,
    Vector2,
    Tensor1,
    Tensor2,
    Tensor3,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Separation in index order, e.g. `0.1,0,-0.3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "curve")]
    xi: Option<Vec<f64>>,
    /// Tabulate along a ray from the origin instead.
    #[arg(long, requires = "rho_max")]
    curve: bool,
    #[arg(long)]
    rho_max: Option<f64>,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Direction of the ray, index order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,0")]
    direction: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV of `r, theta, phi` rows.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_LMAX)]
    lmax: usize,
    #[arg(long, default_value_t = 1)]
    n_realizations: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Monte Carlo check with this many realizations.
    #[arg(long)]
    mc: Option<usize>,
    /// Closed form against the quadrature oracle.
    #[arg(long)]
    oracle: bool,
    /// Rotation invariance of the closed form.
    #[arg(long)]
    isotropy: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Truncation degree for the Monte Carlo check.
    #[arg(long, default_value_t = 8)]
    lmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Scalar,
    Vector,
    Tensor,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Density of the scalar measure (CSV of `lambda, density`).
    #[arg(long)]
    phi: Option<PathBuf>,
    #[arg(long)]
    phi1: Option<PathBuf>,
    #[arg(long)]
    phi2: Option<PathBuf>,
    #[arg(long)]
    phi3: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    atoms: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mean: f64,
    /// Shape attached to every atom of the third tensor measure.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    v1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    v2: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Failures that carry their own exit status.
enum Failure {
    Core(Error),
    Usage(String),
    OracleFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(EXIT_OTHER);
        }
    }
    let result = match &cli.command {
        Command::Tables { table } => tables(table),
        Command::Eval(a) => eval(a),
        Command::Simulate(a) => simulate(a, cli.deterministic),
        Command::Verify(a) => verify(a),
        Command::Discretize(a) => discretize_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::OracleFailed) => {
            eprintln!("error: verification failed");
            ExitCode::from(EXIT_ORACLE)
        }
        Err(Failure::Core(Error::InvalidModel(v))) => {
            eprintln!("error: invalid model");
            for x in v {
                eprintln!("  {x}");
            }
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Core(e @ Error::Consistency(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ORACLE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_OTHER)
        }
    }
}

/// Write to `out` atomically, or to standard output.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => io::write_atomic(p, bytes)?,
        None => std::io::stdout().write_all(bytes).map_err(Error::from)?,
    }
    Ok(())
}

fn tables(t: &Table) -> Outcome {
    match t {
        Table::Coupling { lmax, out } => {
            let mut rows = Vec::new();
            for l in 0..=*lmax {
                for l1 in 0..=*lmax {
                    for l2 in 0..=*lmax {
                        let block = gg(l, l1, l2)?;
                        if block.is_zero() {
                            continue;
                        }
                        for m in -(l as i32)..=l as i32 {
                            for m1 in -(l1 as i32)..=l1 as i32 {
                                for m2 in -(l2 as i32)..=l2 as i32 {
                                    let v = block.get(m, m1, m2);
                                    if v != 0.0 {
                                        rows.push(vec![
                                            l as f64, l1 as f64, l2 as f64, m as f64, m1 as f64, m2 as f64, v,
                                        ]);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            emit(out.as_deref(), &io::table_csv(&["ell", "ell1", "ell2", "m", "m1", "m2", "value"], &rows)?)
        }
        Table::Bmatrix { kind, lmax, v1, v2, out } => {
            let (field, density) = match kind {
                BKind::Vector1 => (FieldKind::Vector, DirectionalDensity::vector_family(1)),
                BKind::Vector2 => (FieldKind::Vector, DirectionalDensity::vector_family(2)),
                BKind::Tensor1 => (FieldKind::Tensor, DirectionalDensity::tensor_family(1)),
                BKind::Tensor2 => (FieldKind::Tensor, DirectionalDensity::tensor_family(2)),
                BKind::Tensor3 => {
                    let v = EllipsePoint::new(*v1, *v2);
                    if !v.is_admissible() {
                        return Err(
                            Error::Domain(format!("shape ({v1}, {v2}) lies outside the elliptic region")).into()
                        );
                    }
                    (FieldKind::Tensor, DirectionalDensity::tensor_shape(v))
                }
            };
            let cov = assemble(field, &density, *lmax)?;
            let factor = gram_factor(field, &density, *lmax)?;
            emit(out.as_deref(), &bmatrix_csv(&cov, &factor)?)
        }
        Table::Nfunctions { lambda_rho, v1, v2, out } => {
            let v = EllipsePoint::new(*v1, *v2);
            let mut rows = Vec::new();
            for n in 1..=3 {
                for q in 1..=5 {
                    rows.push(vec![n as f64, q as f64, n_function(n, q, *lambda_rho, v)?]);
                }
            }
            emit(out.as_deref(), &io::table_csv(&["family", "q", "value"], &rows)?)
        }
    }
}

fn bmatrix_csv(cov: &ModeCovariance, factor: &CholeskyFactor) -> isofield::Result<Vec<u8>> {
    let mut rows = Vec::new();
    for r in 0..cov.dim() {
        let (l, m, a) = cov.mode(r);
        for c in 0..cov.dim() {
            let (b, f) = (cov.get(r, c), factor.get(r, c));
            if b == 0.0 && f == 0.0 {
                continue;
            }
            let (lp, mp, ap) = cov.mode(c);
            rows.push(vec![r as f64, l as f64, m as f64, a as f64, c as f64, lp as f64, mp as f64, ap as f64, b, f]);
        }
    }
    io::table_csv(
        &["row", "row_ell", "row_m", "row_comp", "col", "col_ell", "col_m", "col_comp", "covariance", "factor"],
        &rows,
    )
}

fn entry_names(kind: &CorrelationValue) -> Vec<String> {
    match kind {
        CorrelationValue::Scalar(_) => vec!["r".into()],
        CorrelationValue::Vector(_) => (0..9).map(|k| format!("r_{}{}", k / 3, k % 3)).collect(),
        CorrelationValue::Tensor(_) => {
            (0..81).map(|k| format!("r_{}{}{}{}", k / 27, (k / 9) % 3, (k / 3) % 3, k % 3)).collect()
        }
    }
}

fn eval(a: &EvalArgs) -> Outcome {
    for (name, v) in [("--xi", a.xi.as_deref().unwrap_or(&[0.0; 3])), ("--direction", &a.direction)] {
        if v.len() != 3 {
            return Err(Failure::Usage(format!("{name} needs three comma-separated numbers")));
        }
    }
    let model = io::load_model(&a.model)?;
    let points: Vec<[f64; 3]> = if a.curve {
        let rho_max = a.rho_max.unwrap_or(1.0);
        if !(rho_max >= 0.0) || a.steps == 0 {
            return Err(Failure::Usage("--rho-max must be >= 0 and --steps positive".into()));
        }
        let d = isofield::geometry::Vec3::new(a.direction[0], a.direction[1], a.direction[2]);
        let n = d.norm();
        if !(n > 0.0) {
            return Err(Failure::Usage("--direction must be a nonzero vector".into()));
        }
        (0..=a.steps)
            .map(|k| {
                let x = d / n * (rho_max * k as f64 / a.steps as f64);
                [x[0], x[1], x[2]]
            })
            .collect()
    } else {
        let xi = a.xi.clone().unwrap_or_else(|| vec![0.0; 3]);
        vec![[xi[0], xi[1], xi[2]]]
    };
    let mut rows = Vec::with_capacity(points.len());
    let mut names = None;
    for p in &points {
        let xi = Separation::from_slice(*p)?;
        let r = correlation(&model, &xi)?;
        names.get_or_insert_with(|| entry_names(&r));
        let mut row = vec![p[0], p[1], p[2], xi.rho()];
        row.extend(r.entries());
        rows.push(row);
    }
    let mut header: Vec<String> = ["xi0", "xi1", "xi2", "rho"].iter().map(|s| s.to_string()).collect();
    header.extend(names.unwrap_or_default());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    emit(a.out.as_deref(), &io::table_csv(&header, &rows)?)
}

fn sampler_for(model: &Model, lmax: usize) -> isofield::Result<Sampler> {
    match model {
        Model::Scalar(s) => Sampler::scalar(&s.phi, s.mean, lmax),
        Model::Vector(v) => Sampler::vector(v, lmax),
        Model::Tensor(t) => Sampler::tensor(t, lmax),
    }
}

fn simulate(a: &SimulateArgs, deterministic: bool) -> Outcome {
    let model = io::load_model(&a.model)?;
    let grid = io::load_grid(&a.grid)?;
    let sampler = sampler_for(&model, a.lmax)?;
    let prepared = PreparedGrid::new(&grid, a.lmax)?;
    let reals = sampler.sample_many(&prepared, a.seed, a.n_realizations)?;
    let mut preamble = vec![
        format!("isofield simulate: {} model {}", model.kind(), a.model.display()),
        format!("seed {} lmax {} realizations {}", a.seed, a.lmax, a.n_realizations),
        format!("truncation tail bound {:e}", sampler.tail_bound(&grid)?),
    ];
    if !deterministic {
        let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        preamble.push(format!("generated at unix time {now}"));
    }
    io::write_atomic(&a.out, &io::realizations_csv(&grid, &reals, &preamble)?)?;
    Ok(())
}

fn verify(a: &VerifyArgs) -> Outcome {
    let model = io::load_model(&a.model)?;
    let (oracle, isotropy) =
        if !a.oracle && !a.isotropy && a.mc.is_none() { (true, true) } else { (a.oracle, a.isotropy) };
    let mut reports: Vec<OracleReport> = Vec::new();
    if oracle {
        reports.push(density_report(&model, 100, a.seed)?);
        let seps = random_separations(&model, 20, 5.0, a.seed);
        reports.push(oracle_report(&model, &seps, ORACLE_TOL)?);
    }
    if isotropy {
        let lam = model.max_lambda();
        let rho_max = if lam > 0.0 { 3.0 / lam } else { 3.0 };
        reports.push(isotropy_report(|xi| correlation(&model, xi), 50, 5, rho_max, a.seed)?);
    }
    if let Some(n) = a.mc {
        reports.extend(mc_report(&model, n, a.lmax, 10, a.seed)?);
    }
    let mut text = serde_json::to_string_pretty(&reports).map_err(Error::from)?;
    text.push('\n');
    emit(a.out.as_deref(), text.as_bytes())?;
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::OracleFailed)
    }
}

fn load_measure(path: &Option<PathBuf>, atoms: usize) -> isofield::Result<SpectralMeasure> {
    match path {
        Some(p) => discretize(&io::load_density(p)?, atoms),
        None => Ok(SpectralMeasure::empty()),
    }
}

fn discretize_cmd(a: &DiscretizeArgs) -> Outcome {
    let model = match a.kind {
        KindArg::Scalar => Model::Scalar(ScalarModel { mean: a.mean, phi: load_measure(&a.phi, a.atoms)? }),
        KindArg::Vector => {
            Model::Vector(VectorModel { phi1: load_measure(&a.phi1, a.atoms)?, phi2: load_measure(&a.phi2, a.atoms)? })
        }
        KindArg::Tensor => {
            let phi3 = load_measure(&a.phi3, a.atoms)?;
            let shape = vec![EllipsePoint::new(a.v1, a.v2); phi3.atoms.len()];
            Model::Tensor(TensorModel {
                mean: a.mean,
                phi1: load_measure(&a.phi1, a.atoms)?,
                phi2: load_measure(&a.phi2, a.atoms)?,
                phi3,
                shape,
            })
        }
    };
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations).into());
    }
    io::save_model(&a.out, &model)?;
    Ok(())
}
