use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use paramode::observables::{local_maxima, pumping_fit, WINDOW_THRESHOLD};
use paramode::spectra::ShellDistribution;
use paramode::sweep::{
    emit, evaluate_point, ground_survival_at, write_csv, write_energy_csv, write_json, Axis, OutputKind, PointOutputs,
    PointRequest, System,
};
use paramode::tdse::GridSpec;
use paramode::{
    cross_check, evolve, locate_windows, riccati_oracle, run_sweep, Error, Format, ModeParams, RunRecord, SweepConfig,
    WindowPrediction,
};
use serde::Serialize;

/// Fidelity and Fock-level tolerance for `verify`.
const VERIFY_TOL: f64 = 1e-6;
const VERIFY_LEVELS: usize = 20;
/// Levels of the grid shown by `evolve`.
const PRINT_LEVELS: usize = 10;

#[derive(Parser)]
#[command(name = "paramode", version, about = "Parametrically driven coupled quantum oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the base drive point; print the level grid and the energy.
    Evolve(Common),
    /// Run the configured sweep and write one row per point.
    Sweep(Common),
    /// Shell distribution and decay fits at the base drive point.
    Spectrum(Common),
    /// Energy against the sweep axis, with peaks or the pumping rate.
    Energy(Common),
    /// Reduce the coupling matrices to normal modes and sweep them.
    Nmode(Common),
    /// Compare the Gaussian evolution with the grid solver and the linear oracle.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; data goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Evolve(c) => with_config(c, run_evolve),
        Command::Sweep(c) => with_config(c, run_sweep_command),
        Command::Spectrum(c) => with_config(c, run_spectrum),
        Command::Energy(c) => with_config(c, run_energy),
        Command::Nmode(c) => with_config(c, run_nmode),
        Command::Verify(c) => with_config(c, run_verify),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn with_config(args: &Common, run: fn(&Common, &SweepConfig) -> Outcome) -> Outcome {
    let cfg = SweepConfig::load(&args.config).map_err(|e| Failure::Config(e.to_string()))?;
    cfg.validate()?;
    run(args, &cfg)
}

/// Opens `<out>/<name>.<ext>`, or stdout without `--out`.
fn sink(out: Option<&Path>, name: &str, ext: &str) -> Result<Box<dyn Write>, Failure> {
    match out {
        None => Ok(Box::new(io::stdout().lock())),
        Some(dir) => {
            let path = dir.join(format!("{name}.{ext}"));
            let ctx = |e: io::Error| Failure::Runtime(format!("{}: {e}", path.display()));
            fs::create_dir_all(dir).map_err(ctx)?;
            Ok(Box::new(BufWriter::new(File::create(&path).map_err(ctx)?)))
        }
    }
}

fn write_value<T: Serialize>(out: Option<&Path>, name: &str, value: &T) -> Outcome {
    let mut w = sink(out, name, "json")?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn modes_of(cfg: &SweepConfig) -> Result<Vec<ModeParams>, Failure> {
    Ok(cfg.system()?.modes())
}

fn note_base_point(cfg: &SweepConfig) {
    if cfg.sweep.is_some() {
        eprintln!("note: [sweep] ignored; using the base drive point");
    }
}

/// Every output at the base drive point, with adaptive truncation unless configured.
fn base_point(cfg: &SweepConfig, modes: &[ModeParams]) -> Result<PointOutputs, Failure> {
    note_base_point(cfg);
    let mut output = cfg.output.clone();
    output.include = vec![
        OutputKind::ProbVsDetuning,
        OutputKind::Grid,
        OutputKind::Marginals,
        OutputKind::Shells,
        OutputKind::Energy,
        OutputKind::Windows,
    ];
    let track = cfg.tracked_states(modes.len())?;
    let req = PointRequest {
        integrator: &cfg.integrator,
        truncation: cfg.spectrum.unwrap_or_default(),
        track: &track,
        output: &output,
    };
    Ok(evaluate_point(modes, &cfg.base_timing(), &req)?)
}

fn print_drive(cfg: &SweepConfig, modes: &[ModeParams]) {
    let t = cfg.base_timing();
    let d = &cfg.drive;
    println!(
        "drive: beta0={} beta1={} detuning={} cycles={} tau_f={:.6}",
        d.beta0,
        d.beta1,
        t.detuning,
        t.cycles,
        t.duration()
    );
    for m in modes {
        println!(
            "  {:<6} omega0^2={:.12} modulation={:+.6} depth={:.6}",
            m.label.to_string(),
            m.omega0_sq,
            m.modulation,
            m.depth()
        );
    }
}

fn print_windows(windows: &WindowPrediction) {
    for w in &windows.windows {
        println!("  window {:<6} center={:+.6} half_width={:.6}", w.label.to_string(), w.center, w.half_width);
    }
    if windows.overlap {
        println!("  windows overlap: no mode selectivity");
    }
}

fn run_evolve(args: &Common, cfg: &SweepConfig) -> Outcome {
    let modes = modes_of(cfg)?;
    let out = base_point(cfg, &modes)?;
    print_drive(cfg, &modes);
    for ((m, s), e) in modes.iter().zip(&out.states).zip(&out.energy.per_mode) {
        println!(
            "  {:<6} B={:.12}{:+.12}i energy={:.12}",
            m.label.to_string(),
            s.b.re,
            s.b.im,
            e
        );
    }
    for t in &out.tracked {
        let name: Vec<String> = t.state.iter().map(usize::to_string).collect();
        println!("p_{} = {:.12}", name.join("_"), t.probability);
    }
    println!("p00 = {:.12}", out.p_ground);
    println!(
        "energy: total={:.12} zero_point={:.12} absorbed={:.6e}",
        out.energy.total,
        out.energy.zero_point,
        out.energy.excess()
    );
    println!("n_max={} captured_mass={:.15}", out.n_max, out.captured_mass);
    if let Some(grid) = &out.grid {
        println!("grid p(n+, n-), even levels, rows n+:");
        let shown = grid.n_max.min(PRINT_LEVELS);
        print!("{:>5}", "");
        for b in (0..=shown).step_by(2) {
            print!(" {b:>10}");
        }
        println!();
        for a in (0..=shown).step_by(2) {
            print!("{a:>5}");
            for b in (0..=shown).step_by(2) {
                print!(" {:>10.3e}", grid.get(a, b));
            }
            println!();
        }
    }
    let Some(dir) = args.out.as_deref() else {
        return Ok(());
    };
    match Format::from(args.format) {
        Format::Json => write_value(Some(dir), "point", &out),
        Format::Csv => {
            let mut w = sink(Some(dir), "grid", "csv")?;
            if let Some(grid) = &out.grid {
                writeln!(w, "n_plus,n_minus,probability")?;
                for a in 0..=grid.n_max {
                    for b in 0..=grid.n_max {
                        writeln!(w, "{a},{b},{:.16e}", grid.get(a, b))?;
                    }
                }
            } else if let Some(m) = &out.marginals {
                write_marginals(&mut w, m)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn write_marginals(w: &mut dyn Write, marginals: &[Vec<f64>]) -> io::Result<()> {
    let cols: Vec<String> = (0..marginals.len()).map(|i| format!("p_mode{i}")).collect();
    writeln!(w, "n,{}", cols.join(","))?;
    let levels = marginals.iter().map(Vec::len).max().unwrap_or(0);
    for n in 0..levels {
        let row: Vec<String> = marginals
            .iter()
            .map(|m| m.get(n).map(|p| format!("{p:.16e}")).unwrap_or_default())
            .collect();
        writeln!(w, "{n},{}", row.join(","))?;
    }
    Ok(())
}

fn write_shells(w: &mut dyn Write, shells: &ShellDistribution) -> io::Result<()> {
    writeln!(w, "N,P_N,g_N,P_N_per_state")?;
    for s in &shells.shells {
        writeln!(w, "{},{:.16e},{},{:.16e}", s.n, s.probability, s.degeneracy, s.per_state())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    modes: &'a [ModeParams],
    n_max: usize,
    captured_mass: f64,
    shells: &'a Option<ShellDistribution>,
    classification: &'a Option<paramode::Classification>,
    mode_regimes: &'a [paramode::Classification],
    marginals: &'a Option<Vec<Vec<f64>>>,
}

fn run_spectrum(args: &Common, cfg: &SweepConfig) -> Outcome {
    let modes = modes_of(cfg)?;
    let out = base_point(cfg, &modes)?;
    print_drive(cfg, &modes);
    println!("n_max={} captured_mass={:.15}", out.n_max, out.captured_mass);
    if let Some(c) = &out.classification {
        let fit = |f: Option<paramode::DecayFit>| {
            f.map_or("n/a".to_string(), |f| {
                format!("{:.4} (r2 {:.4}, N in [{}, {}])", f.exponent, f.r_squared, f.fit_range.min, f.fit_range.max)
            })
        };
        println!("regime={}{}", c.regime.as_str(), if c.degenerate { " (too few levels to fit)" } else { "" });
        println!("alpha_pow={}", fit(c.power_law));
        println!("alpha_exp={}", fit(c.exponential));
    }
    for (m, c) in modes.iter().zip(&out.mode_regimes) {
        println!("  {:<6} marginal regime={}", m.label.to_string(), c.regime.as_str());
    }
    if args.out.is_none() {
        if let (Format::Csv, Some(shells)) = (Format::from(args.format), &out.shells) {
            return Ok(write_shells(&mut io::stdout().lock(), shells)?);
        }
    }
    let Some(dir) = args.out.as_deref() else {
        return Ok(());
    };
    match Format::from(args.format) {
        Format::Json => write_value(
            Some(dir),
            "spectrum",
            &SpectrumReport {
                modes: &modes,
                n_max: out.n_max,
                captured_mass: out.captured_mass,
                shells: &out.shells,
                classification: &out.classification,
                mode_regimes: &out.mode_regimes,
                marginals: &out.marginals,
            },
        ),
        Format::Csv => {
            if let Some(shells) = &out.shells {
                let mut w = sink(Some(dir), "shells", "csv")?;
                write_shells(&mut w, shells)?;
                w.flush()?;
            }
            if let Some(m) = &out.marginals {
                let mut w = sink(Some(dir), "marginals", "csv")?;
                write_marginals(&mut w, m)?;
                w.flush()?;
            }
            Ok(())
        }
    }
}

/// Runs the sweep and reports point failures: all failed is a runtime error,
/// some failed is a warning.
fn sweep_records(args: &Common, cfg: &SweepConfig) -> Result<Vec<RunRecord>, Failure> {
    let start = Instant::now();
    let records = run_sweep(cfg, args.threads)?;
    let failed: Vec<&RunRecord> = records.iter().filter(|r| r.failed()).collect();
    eprintln!(
        "{} points in {:.1}s, {} failed",
        records.len(),
        start.elapsed().as_secs_f64(),
        failed.len()
    );
    for r in &failed {
        if let paramode::sweep::PointOutcome::Failed { error } = &r.outcome {
            eprintln!("warning: point {} (axis {}) failed: {error}", r.index, r.axis_value);
        }
    }
    Ok(records)
}

fn check_failures(records: &[RunRecord]) -> Outcome {
    if !records.is_empty() && records.iter().all(RunRecord::failed) {
        return Err(Failure::Runtime("every sweep point failed".into()));
    }
    Ok(())
}

fn emit_records(args: &Common, cfg: &SweepConfig, records: &[RunRecord], name: &str) -> Outcome {
    let modes = modes_of(cfg)?.len();
    let track = cfg.tracked_states(modes)?;
    let format = Format::from(args.format);
    match args.out.as_deref() {
        Some(dir) => {
            let path = dir.join(format!("{name}.{}", format.extension()));
            emit(records, &track, modes, format, &path)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut w = io::stdout().lock();
            match format {
                Format::Csv => write_csv(records, &track, modes, &mut w)?,
                Format::Json => write_json(records, &mut w)?,
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn report_windows(cfg: &SweepConfig, modes: &[ModeParams], records: &[RunRecord]) -> Result<(), Failure> {
    let detuning_axis = cfg.sweep.as_ref().is_some_and(|s| s.axis == Axis::Detuning);
    if !detuning_axis || !cfg.output.wants(OutputKind::Windows) {
        return Ok(());
    }
    let curve: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.outputs().map(|o| (r.axis_value, o.p_ground)))
        .collect();
    let base = cfg.base_timing();
    let measured = locate_windows(&curve, WINDOW_THRESHOLD, |d| {
        ground_survival_at(modes, &base.with_detuning(d), &cfg.integrator)
    })?;
    eprintln!("predicted windows:");
    for w in paramode::predict_mode_windows(modes).windows {
        eprintln!("  {:<6} [{:+.5}, {:+.5}]", w.label.to_string(), w.lower(), w.upper());
    }
    eprintln!("measured windows (p00 < {WINDOW_THRESHOLD}):");
    for w in &measured {
        eprintln!(
            "  [{:+.5}, {:+.5}] minimum p00={:.4} at {:+.5}",
            w.lower, w.upper, w.min_p00, w.min_detuning
        );
    }
    Ok(())
}

fn run_sweep_command(args: &Common, cfg: &SweepConfig) -> Outcome {
    let records = sweep_records(args, cfg)?;
    emit_records(args, cfg, &records, "sweep")?;
    report_windows(cfg, &modes_of(cfg)?, &records)?;
    check_failures(&records)
}

fn run_energy(args: &Common, cfg: &SweepConfig) -> Outcome {
    let modes = modes_of(cfg)?;
    let records = sweep_records(args, cfg)?;
    match (Format::from(args.format), args.out.as_deref()) {
        (Format::Csv, out) => {
            let mut w = sink(out, "energy", "csv")?;
            write_energy_csv(&records, modes.len(), &mut w)?;
            w.flush()?;
        }
        (Format::Json, out) => {
            let mut w = sink(out, "energy", "json")?;
            write_json(&records, &mut w)?;
            w.flush()?;
        }
    }
    let done: Vec<(&RunRecord, &PointOutputs)> = records.iter().filter_map(|r| r.outputs().map(|o| (r, o))).collect();
    match cfg.sweep.as_ref().map(|s| s.axis) {
        Some(Axis::Cycles) => {
            let points: Vec<_> = done.iter().map(|(r, o)| (r.timing.cycles, o.energy.clone())).collect();
            match pumping_fit(&points) {
                Ok(fit) => eprintln!(
                    "ln(absorbed energy) = {:.6} + {:.6e} * cycles (r2 {:.6})",
                    fit.intercept, fit.slope, fit.r_squared
                ),
                Err(e) => eprintln!("no pumping fit: {e}"),
            }
        }
        _ => {
            let floor = modes.iter().map(|m| m.omega0 / 2.0).sum::<f64>() + 0.1;
            let curve: Vec<(f64, f64)> = done.iter().map(|(r, o)| (r.axis_value, o.energy.total)).collect();
            for (x, e) in local_maxima(&curve, floor) {
                eprintln!("energy peak {e:.6} at {x:+.5}");
            }
        }
    }
    check_failures(&records)
}

fn run_nmode(args: &Common, cfg: &SweepConfig) -> Outcome {
    let System::Coupled(red) = cfg.system()? else {
        return Err(Failure::Config("nmode needs a [coupling] section".into()));
    };
    eprintln!("{} normal modes, off-diagonal residual {:.3e}", red.n(), red.residual);
    for (k, (l0, l1)) in red.lambda0.iter().zip(&red.lambda1).enumerate() {
        let v: Vec<String> = red.eigvecs.iter().map(|row| format!("{:+.6}", row[k])).collect();
        eprintln!("  mode{k} omega0^2={l0:.12} modulation={l1:+.6} vector=[{}]", v.join(", "));
    }
    let prediction = paramode::predict_mode_windows(&red.modes());
    for w in &prediction.windows {
        eprintln!("  window {:<6} [{:+.5}, {:+.5}]", w.label.to_string(), w.lower(), w.upper());
    }
    if prediction.overlap {
        eprintln!("  windows overlap: no mode selectivity");
    }
    let records = sweep_records(args, cfg)?;
    emit_records(args, cfg, &records, "nmode")?;
    check_failures(&records)
}

#[derive(Serialize)]
struct ModeCheck {
    mode: ModeParams,
    oracle_relative_error: f64,
    grid: paramode::CrossCheck,
    pass: bool,
}

fn run_verify(args: &Common, cfg: &SweepConfig) -> Outcome {
    let modes = modes_of(cfg)?;
    note_base_point(cfg);
    print_drive(cfg, &modes);
    if let System::TwoMode(d) = cfg.system()? {
        print_windows(&paramode::predict_windows(&d));
    }
    let timing = cfg.base_timing();
    let grid = GridSpec::default();
    let mut checks = Vec::new();
    for m in &modes {
        let b = evolve(m, &timing, &cfg.integrator)?.b;
        let oracle = riccati_oracle(m, &timing, &cfg.integrator)?;
        let oracle_relative_error = (b - oracle).norm() / oracle.norm();
        let check = cross_check(m, &timing, &grid, &cfg.integrator, VERIFY_LEVELS)?;
        let pass = oracle_relative_error < VERIFY_TOL
            && check.fidelity > 1.0 - VERIFY_TOL
            && check.max_fock_deviation < VERIFY_TOL;
        println!(
            "{:<6} {} oracle {:.2e}  1-fidelity {:.2e}  fock {:.2e}  kurtosis {:+.2e}  norm {:.2e}",
            m.label.to_string(),
            if pass { "PASS" } else { "FAIL" },
            oracle_relative_error,
            1.0 - check.fidelity,
            check.max_fock_deviation,
            check.excess_kurtosis,
            check.norm_deviation
        );
        checks.push(ModeCheck {
            mode: *m,
            oracle_relative_error,
            grid: check,
            pass,
        });
    }
    if args.out.is_some() {
        write_value(args.out.as_deref(), "verify", &checks)?;
    }
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("cross-checks above tolerance {VERIFY_TOL:e}")))
    }
}
