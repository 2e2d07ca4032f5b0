use caplb::assets::{mini_plexus, MURINE_VISCOSITY_CSV};
use caplb::geometry::{
    diameter_histogram, lattice_diameter_percentiles, length_fraction_above, save_domain, voxelize, VesselSkeleton,
    VoxelizeOptions,
};
use caplb::io::{config_schema, execute, write_json, SimConfig};
use caplb::lbm::{env_workers, SolverOptions};
use caplb::rheology::{fit_cy_default, read_samples_csv, read_samples_file};
use caplb::simulation::{opp_sweep, ConvergenceMonitor};
use caplb::units::{UnitBridge, DEFAULT_BLOOD_DENSITY};
use caplb::validation::{
    grid_refinement, run_benchmark_suite, run_inclined_cylinder, write_benchmark_table, InclinedCylinderSpec,
    REPORT_BINS,
};
use caplb::{Error, Rheology};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Lattice-Boltzmann blood flow in voxelized microvascular networks.
#[derive(Parser)]
#[command(name = "caplb", version)]
struct Cli {
    /// More logging (-v debug, -vv trace). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Worker threads (defaults to CAPLB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a skeleton into a CLBD domain file.
    Voxelize {
        #[arg(long)]
        skeleton: PathBuf,
        /// Lattice spacing (micrometres).
        #[arg(long)]
        dx: f64,
        #[arg(long)]
        out: PathBuf,
        /// Accept vessels thinner than three lattice spacings.
        #[arg(long)]
        min_d_override: bool,
    },
    /// Run a configured simulation to steady state.
    Run {
        #[arg(long, required_unless_present = "print_schema")]
        config: Option<PathBuf>,
        /// Print the configuration JSON schema and exit.
        #[arg(long)]
        print_schema: bool,
    },
    /// Analytic benchmarks.
    Bench {
        #[command(subcommand)]
        which: Bench,
    },
    /// Peak velocity against ocular perfusion pressure.
    SweepOpp(SweepArgs),
    /// Fit Carreau-Yasuda parameters to viscosity samples.
    FitRheology {
        /// CSV with shear_rate_per_s,viscosity_mpas,source columns; the bundled murine table when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Length-weighted vessel diameter histogram with a lognormal fit.
    Histogram {
        #[arg(long)]
        skeleton: PathBuf,
        /// Bin width (micrometres).
        #[arg(long, default_value_t = 0.5)]
        bin: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Bench {
    /// Flow-rate and stress errors on the inclined cylinder.
    Poiseuille {
        /// Lattice diameters, comma separated.
        #[arg(long = "D", value_delimiter = ',', default_value = "3,5,7,10,15")]
        diameters: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.8")]
        tau: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radial stress error profile on the inclined cylinder.
    Shear {
        #[arg(long = "D", default_value_t = 15.0)]
        diameter: f64,
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid refinement on a cylinder of fixed physical diameter.
    Refine {
        /// Diameter (micrometres).
        #[arg(long, default_value_t = 30.0)]
        diameter: f64,
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        /// Coarse spacings (micrometres).
        #[arg(long, value_delimiter = ',', default_value = "8,4,2")]
        dx: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        reference_dx: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Perfusion pressures (mmHg), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "25,35,45,55,65")]
    list: Vec<f64>,
    /// Network skeleton; the bundled mini-plexus when omitted.
    #[arg(long)]
    skeleton: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    dx: f64,
    /// Newtonian viscosity (Pa s).
    #[arg(long, default_value_t = 3.265e-3)]
    eta: f64,
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    #[arg(long, default_value_t = 11.6)]
    outlet_mmhg: f64,
    /// Convergence reference velocity (m/s).
    #[arg(long, default_value_t = 0.05)]
    v_ref: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps_tol: f64,
    /// CSV of the sweep rows.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON with the rows and the linear fit.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Json(_) | Error::Skeleton(_) | Error::Config(_) | Error::Format(_) | Error::Csv(_) => 2,
        Error::MinDiameter { .. } => 3,
        Error::Io(_) => 4,
        _ => 1,
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let mut v = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": exit_code(e),
    });
    match e {
        Error::Json(j) => {
            v["line"] = j.line().into();
            v["column"] = j.column().into();
        }
        Error::MinDiameter { segment, diameter_um, min_um } => {
            v["segment"] = (*segment).into();
            v["diameter_um"] = (*diameter_um).into();
            v["min_um"] = (*min_um).into();
        }
        Error::Timeout { steps, last_residual, .. } => {
            v["steps"] = (*steps).into();
            v["last_residual"] = (*last_residual).into();
        }
        Error::Instability { step, .. } => {
            v["step"] = (*step).into();
        }
        _ => {}
    }
    v
}

/// Writes `text` to `out`, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> caplb::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json_text<T: serde::Serialize>(v: &T) -> caplb::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn solver_options(threads: Option<usize>) -> SolverOptions {
    SolverOptions { workers: threads.or_else(env_workers), ..SolverOptions::default() }
}

fn voxelize_cmd(skeleton: &Path, dx: f64, out: &Path, allow_thin: bool) -> caplb::Result<()> {
    let s = VesselSkeleton::from_file(skeleton)?;
    let domain = voxelize(&s, dx, VoxelizeOptions { allow_thin_vessels: allow_thin })?;
    save_domain(&domain, out)?;
    let pct = [5.0, 25.0, 50.0, 75.0, 95.0];
    let d = lattice_diameter_percentiles(&s, dx, &pct);
    let frac7 = length_fraction_above(&s, dx, 7.0);
    println!("fluid sites: {}", domain.fluid_count());
    println!("wall links: {}", domain.wall_links.len());
    println!("grid: {} x {} x {}", domain.dims[0], domain.dims[1], domain.dims[2]);
    println!("lattice diameter percentiles (length weighted):");
    for (p, v) in pct.iter().zip(&d) {
        println!("  {p:>4}%  D/dx = {v:.3}");
    }
    println!(
        "length fraction with D/dx >= 7: {:.1}% ({})",
        100.0 * frac7,
        if frac7 >= 0.95 { "95% rule met" } else { "95% rule not met" }
    );
    Ok(())
}

fn run_cmd(config: Option<&Path>, print_schema: bool) -> caplb::Result<()> {
    if print_schema {
        return emit(None, &json_text(&config_schema())?);
    }
    let cfg = SimConfig::load(config.expect("clap requires --config"))?;
    let (report, _) = execute(&cfg)?;
    emit(None, &json_text(&report)?)
}

fn bench_cmd(which: &Bench, opts: SolverOptions) -> caplb::Result<()> {
    match which {
        Bench::Poiseuille { diameters, tau, out } => {
            let rows = run_benchmark_suite(diameters, tau, opts)?;
            let mut buf = Vec::new();
            write_benchmark_table(&rows, &mut buf, false)?;
            emit(out.as_deref(), &String::from_utf8(buf).expect("ascii table"))?;
            if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
                return Err(Error::Config(format!(
                    "benchmark D {} tau {} failed: {}",
                    r.diameter,
                    r.tau,
                    r.error.as_deref().unwrap_or_default()
                )));
            }
            Ok(())
        }
        Bench::Shear { diameter, tau, out } => {
            let spec = InclinedCylinderSpec::new(*diameter, *tau)?;
            let run = run_inclined_cylinder(&spec, None, None, opts)?;
            let mut text = String::from("r_lo,r_hi,sites,mean_error,max_error,mean_norm,mean_norm_analytic,underestimates\n");
            for b in run.stress_bins(&REPORT_BINS)? {
                text += &format!(
                    "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{}\n",
                    b.r_lo,
                    b.r_hi,
                    b.sites,
                    b.mean_error,
                    b.max_error,
                    b.mean_norm,
                    b.mean_norm_analytic,
                    b.underestimates()
                );
            }
            emit(out.as_deref(), &text)
        }
        Bench::Refine { diameter, tau, dx, reference_dx, out } => {
            let study = grid_refinement(*diameter, *tau, dx, *reference_dx, opts)?;
            emit(out.as_deref(), &json_text(&study)?)
        }
    }
}

fn sweep_cmd(a: &SweepArgs, opts: SolverOptions) -> caplb::Result<()> {
    let skeleton = match &a.skeleton {
        Some(p) => VesselSkeleton::from_file(p)?,
        None => mini_plexus(),
    };
    let domain = voxelize(&skeleton, a.dx, VoxelizeOptions::default())?;
    let bridge = UnitBridge::for_relaxation_time(a.eta, a.tau, a.dx * 1e-6, DEFAULT_BLOOD_DENSITY)?;
    let rheology = Rheology::newtonian_physical(a.eta, &bridge)?;
    let monitor = ConvergenceMonitor::physical(a.v_ref, &bridge).with_tolerance(a.eps_tol);
    let sweep = opp_sweep(&domain, rheology, &bridge, &a.list, a.outlet_mmhg, &monitor, opts)?;
    let mut csv = String::from("opp_mmhg,peak_velocity_m_per_s,steps,seconds\n");
    for r in &sweep.rows {
        csv += &format!("{},{:.9e},{},{:.3}\n", r.opp_mmhg, r.peak_velocity_m_per_s, r.steps, r.seconds);
    }
    emit(a.out.as_deref(), &csv)?;
    match &a.report {
        Some(p) => write_json(p, &sweep),
        None if a.out.is_some() => emit(None, &json_text(&sweep.fit)?),
        None => Ok(()),
    }
}

fn fit_cmd(data: Option<&Path>, out: Option<&Path>) -> caplb::Result<()> {
    let samples = match data {
        Some(p) => read_samples_file(p)?,
        None => read_samples_csv(MURINE_VISCOSITY_CSV.as_bytes())?,
    };
    let report = fit_cy_default(&samples)?;
    emit(out, &json_text(&report)?)
}

fn histogram_cmd(skeleton: &Path, bin: f64, out: Option<&Path>) -> caplb::Result<()> {
    let s = VesselSkeleton::from_file(skeleton)?;
    emit(out, &json_text(&diameter_histogram(&s, bin)?)?)
}

fn dispatch(cli: &Cli) -> caplb::Result<()> {
    let opts = solver_options(cli.threads);
    match &cli.command {
        Command::Voxelize { skeleton, dx, out, min_d_override } => voxelize_cmd(skeleton, *dx, out, *min_d_override),
        Command::Run { config, print_schema } => run_cmd(config.as_deref(), *print_schema),
        Command::Bench { which } => bench_cmd(which, opts),
        Command::SweepOpp(a) => sweep_cmd(a, opts),
        Command::FitRheology { data, out } => fit_cmd(data.as_deref(), out.as_deref()),
        Command::Histogram { skeleton, bin, out } => histogram_cmd(skeleton, *bin, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
