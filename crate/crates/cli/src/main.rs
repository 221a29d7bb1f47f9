//! `wavekin`: command-line driver for grid dumps, ensemble runs, kinetic
//! solves, resonance census and plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use wavekin::census::{
    enumerate_resonant_modulus, scan_series, CensusError, ScanOrder, TripleClass,
};
use wavekin::harness::{
    compare_theorem1, emit_outputs, flatness_theorem2, kinetic_csv, plot_from_dir, run_kinetic,
    sample_check, simulate, FormKind, Outcome, Report,
};
use wavekin::manifold::{Branch, CurveQuadrature, WeightRule};
use wavekin::measures::chi_square_product;
use wavekin::{
    DispersionParams, EtaValue, ExperimentConfig, ExperimentKind, FrequencyGrid, HarnessError,
    InitLaw, Wavevector,
};

#[derive(Debug, Parser)]
#[command(name = "wavekin", version, about = "Kinetic-limit experiments for a KP-type lattice model")]
struct Cli {
    /// Validate inputs and print the resolved plan without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ensemble size; overrides `run.ensemble`.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Master seed; overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CensusMode {
    Denominators,
    Modulus,
    Curve,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderArg {
    ThreeWave,
    FourWave,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormArg {
    Lorentzian,
    Resonant,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the lattice modes: i, j, k_x, k_y, omega, gamma, psi.
    Grid {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Refinement; overrides `grid.N`.
        #[arg(long = "N")]
        n: Option<u32>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Per-mode moment check of the initial law at t = 0.
    SampleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ensemble: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// CSV destination; defaults to `<output.dir>/check.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the ensemble and write per-mode and per-cell fluctuations.
    Simulate(RunArgs),
    /// Solve the linearized kinetic equation on the coarse mesh.
    Kinetic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        form: Option<FormArg>,
        /// Lorentzian width; sets `δ = λ/3`.
        #[arg(long)]
        lambda: Option<f64>,
        /// Comma-separated λ values compared against the resonant form.
        #[arg(long, value_delimiter = ',')]
        lambda_sweep: Vec<f64>,
        /// A `.csv` path gets the kinetic table only; otherwise an output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble fluctuations against the Lorentzian kinetic solution.
    Compare(RunArgs),
    /// Deterministic-regime flatness of the fluctuations.
    Flatness(RunArgs),
    /// Resonance census: small denominators, resonant moduli, resonant curves.
    Census {
        #[arg(long, value_enum)]
        mode: CensusMode,
        /// Optional config for the domain and defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        eta: Option<EtaValue>,
        /// Comma-separated refinements.
        #[arg(long = "N", value_delimiter = ',')]
        n: Vec<u32>,
        #[arg(long, value_enum, default_value = "three-wave")]
        order: OrderArg,
        /// Lattice indices `i,j` of the base mode.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        m_index: Vec<i64>,
        /// Base wavevector `x,y` of a resonant curve.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        m: Vec<f64>,
        /// Level of the resonant curve.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z: f64,
        #[arg(long)]
        n_sigma: Option<usize>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the SVG plots of a saved run directory.
    Plot {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Exit status 1 for bad input, 2 for failures while running.
#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            match e {
                HarnessError::Census(c) => c.into(),
                HarnessError::Freq(f) => CliError::Validation(f.to_string()),
                other => CliError::Runtime(other.to_string()),
            }
        }
    }
}

impl From<CensusError> for CliError {
    fn from(e: CensusError) -> Self {
        match e {
            CensusError::StructuralMismatch { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, body).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn emit(path: Option<&Path>, body: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write_file(p, body)?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn build_grid(config: &ExperimentConfig) -> Result<FrequencyGrid, CliError> {
    FrequencyGrid::build(config.domain, config.dispersion()?, config.grid.n).map_err(|e| invalid(e.to_string()))
}

fn print_plan(config: &ExperimentConfig, kind: ExperimentKind) -> Result<(), CliError> {
    let plan = config.plan(kind)?;
    for w in &plan.warnings {
        eprintln!("warning: {w}");
    }
    let doc = serde_json::json!({ "config": config, "plan": plan });
    println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?);
    Ok(())
}

fn apply_run_args(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut c = load_config(&args.config)?;
    if let Some(dir) = &args.out {
        c.output.dir = dir.clone();
    }
    if let Some(r) = args.ensemble {
        c.run.ensemble = r;
    }
    if let Some(s) = args.seed {
        c.run.seed = s;
    }
    if args.workers.is_some() {
        c.run.workers = args.workers;
    }
    Ok(c)
}

fn summarize(outcome: &Outcome) -> String {
    match &outcome.report {
        Some(Report::Comparison(r)) => {
            let mut s = format!(
                "{:?}: N={} members={}/{} saves={} max sup error={:.4e}",
                r.kind,
                r.n,
                r.members,
                r.requested_members,
                r.rows.len(),
                r.max_sup_err()
            );
            if let Some(d) = r.kinetic_drift.as_ref().and_then(|d| d.last()) {
                let _ = write!(s, " kinetic drift={d:.4e}");
            }
            s
        }
        Some(Report::Kinetic(r)) => format!(
            "kinetic: {} active nodes, operator norm {:.4}, final sup {:.4e}",
            r.active_nodes,
            r.operator_norm,
            r.sup_norm.last().copied().unwrap_or(0.0)
        ),
        Some(Report::SampleCheck(r)) => format!(
            "sample check: {} modes, max |z| = {:.3}, {:.1}% within 3 SE",
            r.modes.len(),
            r.max_abs_z,
            100.0 * r.within_3se
        ),
        None => "empty report".into(),
    }
}

fn persist(outcome: &Outcome, config: &ExperimentConfig, started: Instant) -> Result<(), CliError> {
    let dir = &config.output.dir;
    let files = emit_outputs(outcome, config, dir, config.output.svg, started.elapsed().as_secs_f64())
        .map_err(CliError::from)?;
    println!("{}", summarize(outcome));
    println!("{} files in {}", files.len(), dir.display());
    if let Some(Report::Comparison(r)) = &outcome.report {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
        if r.partial {
            return Err(CliError::Runtime(format!(
                "run stopped early after {} of {} members; partial results written to {}",
                r.members,
                r.requested_members,
                dir.display()
            )));
        }
    }
    Ok(())
}

fn ensemble_command(
    args: &RunArgs,
    kind: ExperimentKind,
    dry_run: bool,
    run: fn(&ExperimentConfig) -> Result<Outcome, HarnessError>,
) -> Result<(), CliError> {
    let config = apply_run_args(args)?;
    if dry_run {
        return print_plan(&config, kind);
    }
    let started = Instant::now();
    let outcome = run(&config)?;
    persist(&outcome, &config, started)
}

fn grid_command(
    config: Option<&Path>,
    n: Option<u32>,
    dump: Option<&Path>,
    dry_run: bool,
) -> Result<(), CliError> {
    let mut c = match config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = n {
        c.grid.n = n;
    }
    let grid = build_grid(&c)?;
    if dry_run {
        println!("N={} modes={} full lattice={}", c.grid.n, grid.len(), grid.full_len());
        return Ok(());
    }
    let mut out = String::from("i,j,k_x,k_y,omega,gamma,psi\n");
    for m in grid.modes() {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", m.i, m.j, m.k.x, m.k.y, m.omega, m.gamma, m.psi);
    }
    emit(dump, &out)
}

fn sample_check_command(
    config: &Path,
    ensemble: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<&Path>,
    dry_run: bool,
) -> Result<(), CliError> {
    let mut c = load_config(config)?;
    if let Some(r) = ensemble {
        c.run.ensemble = r;
    }
    if let Some(s) = seed {
        c.run.seed = s;
    }
    if workers.is_some() {
        c.run.workers = workers;
    }
    if dry_run {
        let mut probe = c.clone();
        probe.run.coupled = false;
        probe.run.t_max = Some(0.0);
        return print_plan(&probe, ExperimentKind::SampleCheck);
    }
    let outcome = sample_check(&c)?;
    let Some(Report::SampleCheck(report)) = &outcome.report else {
        return Err(CliError::Runtime("sample check produced no report".into()));
    };
    let grid = build_grid(&c)?;
    let chi2 = match c.init_law() {
        InitLaw::Invariant => Some(0.0),
        InitLaw::ProductPerturbed { profile, alpha } => chi_square_product(&grid, &profile, alpha).ok(),
        _ => None,
    };
    let mut body = String::from("k_x,k_y,gamma,target_variance,sample_mean_action,stderr\n");
    for (m, &(_, _, target, mean, se)) in grid.modes().iter().zip(&report.modes) {
        let _ = writeln!(body, "{},{},{},{target},{mean},{se}", m.k.x, m.k.y, m.gamma);
    }
    let footer = serde_json::json!({
        "chi_square": chi2,
        "members": report.members,
        "max_abs_z": report.max_abs_z,
        "within_3se": report.within_3se,
    });
    let _ = writeln!(body, "# {footer}");
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| c.output.dir.join("check.csv"));
    write_file(&path, &body)?;
    println!("{}", summarize(&outcome));
    println!("wrote {}", path.display());
    Ok(())
}

fn kinetic_command(
    config: &Path,
    form: Option<FormArg>,
    lambda: Option<f64>,
    sweep: &[f64],
    out: Option<&Path>,
    dry_run: bool,
) -> Result<(), CliError> {
    let mut c = load_config(config)?;
    match form {
        Some(FormArg::Lorentzian) => c.kinetic.form = FormKind::Lorentzian,
        Some(FormArg::Resonant) => c.kinetic.form = FormKind::Resonant,
        None => {}
    }
    if let Some(l) = lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {l}")));
        }
        c.physics.delta = l / 3.0;
    }
    if let Some(l) = sweep.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(invalid(format!("lambda sweep values must be positive, got {l}")));
    }
    let csv_only = out.is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
    if let (Some(p), false) = (out, csv_only) {
        c.output.dir = p.to_path_buf();
    }
    if dry_run {
        return print_plan(&c, ExperimentKind::Kinetic);
    }
    let started = Instant::now();
    let outcome = run_kinetic(&c, sweep)?;
    if csv_only {
        let path = out.expect("checked above");
        write_file(path, &kinetic_csv(&outcome))?;
        println!("{}", summarize(&outcome));
        println!("wrote {}", path.display());
        return Ok(());
    }
    persist(&outcome, &c, started)
}

#[allow(clippy::too_many_arguments)]
fn census_command(
    mode: CensusMode,
    config: Option<&Path>,
    eta: Option<EtaValue>,
    ns: &[u32],
    order: OrderArg,
    m_index: &[i64],
    m: &[f64],
    z: f64,
    n_sigma: Option<usize>,
    out: Option<&Path>,
    dry_run: bool,
) -> Result<(), CliError> {
    let base = match config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let eta = eta.unwrap_or(base.physics.eta);
    match mode {
        CensusMode::Denominators => {
            let ns = if ns.is_empty() { vec![base.grid.n] } else { ns.to_vec() };
            let order = match order {
                OrderArg::ThreeWave => ScanOrder::ThreeWave,
                OrderArg::FourWave => ScanOrder::FourWaveOffres,
            };
            if dry_run {
                println!("denominator scan: eta={eta} order={order:?} N={ns:?}");
                return Ok(());
            }
            let series = scan_series(base.domain, &eta, order, &ns)?;
            let mut body = String::from("N,tuples,min_denominator,exact_zeros,identical_zeros\n");
            for r in &series.reports {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{}",
                    r.n,
                    r.tuples,
                    r.min_denominator.map(|v| v.to_string()).unwrap_or_default(),
                    r.exact_zeros.map(|v| v.to_string()).unwrap_or_default(),
                    r.identical_zeros
                );
            }
            emit(out, &body)?;
            if let Some(fit) = &series.fit {
                eprintln!("decay fit: min denominator ~ {:.4e} N^(-{:.3})", fit.c, fit.nu);
            }
            Ok(())
        }
        CensusMode::Modulus => {
            let [mi, mj] = m_index else {
                return Err(invalid("--m-index needs two lattice indices i,j"));
            };
            let ns = if ns.is_empty() { vec![base.grid.n] } else { ns.to_vec() };
            if ns.len() != 1 {
                return Err(invalid("--mode modulus takes a single --N"));
            }
            let dispersion = DispersionParams::new(eta.to_f64()).map_err(|e| invalid(e.to_string()))?;
            let grid = FrequencyGrid::build(base.domain, dispersion, ns[0]).map_err(|e| invalid(e.to_string()))?;
            if dry_run {
                println!("resonant modulus: eta={eta} N={} m=({mi},{mj})", ns[0]);
                return Ok(());
            }
            let rm = enumerate_resonant_modulus(&grid, (*mi, *mj), &eta)?;
            let mut body = String::from("j_i,j_j,k_i,k_j,l_i,l_j,class\n");
            for t in &rm.triples {
                let class = match t.class {
                    TripleClass::TrivialPairing => "trivial_pairing",
                    TripleClass::XSwapFamily => "x_swap_family",
                };
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{},{class}",
                    t.j.0, t.j.1, t.k.0, t.k.1, t.l.0, t.l.1
                );
            }
            emit(out, &body)?;
            eprintln!(
                "{} triples ({} trivial, {} x-swap)",
                rm.len(),
                rm.count(TripleClass::TrivialPairing),
                rm.count(TripleClass::XSwapFamily)
            );
            Ok(())
        }
        CensusMode::Curve => {
            let [mx, my] = m else {
                return Err(invalid("--m needs a wavevector x,y"));
            };
            let dispersion = DispersionParams::new(eta.to_f64()).map_err(|e| invalid(e.to_string()))?;
            let n_sigma = n_sigma.unwrap_or(base.kinetic.n_sigma);
            if n_sigma == 0 {
                return Err(invalid("--n-sigma must be positive"));
            }
            let q = CurveQuadrature::new(
                Wavevector::new(*mx, *my),
                z,
                n_sigma,
                &dispersion,
                &base.domain,
                WeightRule::default(),
            )
            .map_err(|e| invalid(e.to_string()))?;
            if dry_run {
                println!("resonant curve: m=({mx},{my}) z={z} nodes={}", q.nodes.len());
                return Ok(());
            }
            let mut body = String::from("sigma,branch,p_x,p_y,weight\n");
            for n in &q.nodes {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{}",
                    n.sigma,
                    if n.branch == Branch::Plus { "plus" } else { "minus" },
                    n.p.x,
                    n.p.y,
                    n.weight
                );
            }
            emit(out, &body)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let dry = cli.dry_run;
    match cli.command {
        Command::Grid { config, n, dump } => grid_command(config.as_deref(), n, dump.as_deref(), dry),
        Command::SampleCheck { config, ensemble, seed, workers, out } => {
            sample_check_command(&config, ensemble, seed, workers, out.as_deref(), dry)
        }
        Command::Simulate(args) => ensemble_command(&args, ExperimentKind::Simulate, dry, simulate),
        Command::Compare(args) => ensemble_command(&args, ExperimentKind::Theorem1, dry, compare_theorem1),
        Command::Flatness(args) => {
            ensemble_command(&args, ExperimentKind::Theorem2, dry, flatness_theorem2)
        }
        Command::Kinetic { config, form, lambda, lambda_sweep, out } => {
            kinetic_command(&config, form, lambda, &lambda_sweep, out.as_deref(), dry)
        }
        Command::Census { mode, config, eta, n, order, m_index, m, z, n_sigma, out } => census_command(
            mode,
            config.as_deref(),
            eta,
            &n,
            order,
            &m_index,
            &m,
            z,
            n_sigma,
            out.as_deref(),
            dry,
        ),
        Command::Plot { dir } => {
            if dry {
                println!("would re-render plots in {}", dir.display());
                return Ok(());
            }
            if !dir.join("report.json").is_file() {
                return Err(invalid(format!("{} has no report.json", dir.display())));
            }
            let files = plot_from_dir(&dir)?;
            println!("{} plots in {}", files.len(), dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
