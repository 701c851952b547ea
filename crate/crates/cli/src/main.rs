//! `justiv` — finite-sample properties of just-identified IV under the
//! bivariate-normal reduced-form model: rejection surfaces, endogeneity
//! cutoffs, median-bias curves, study calibration, Monte Carlo
//! simulation, and closed-form-vs-oracle verification.

mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use justiv_core::bias;
use justiv_core::endogeneity;
use justiv_core::grid::{lin_spaced, log_spaced};
use justiv_core::model::{canonical_model, DesignPoint};
use justiv_core::oracle::{self, Screen, SimulationPlan};
use justiv_core::rejection::{self, RHO_CAP};
use output::{emit, fmt_f, render_csv, render_json, Format, OutArgs};

const EXIT_OK: i32 = 0;
const EXIT_VERIFY_FAIL: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_PARTIAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "justiv",
    version,
    about = "Finite-sample properties of just-identified IV: Wald rejection surfaces, \
             bias bounds, endogeneity calibration, Monte Carlo verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rejection-rate grid over (E\[F\], rho), columns: ef, rho, rate
    Contour(ContourArgs),
    /// Largest |rho| keeping the worst-case rejection rate at or below a target
    Cutoff(CutoffArgs),
    /// Median-bias bounds and rho-variation bands over an E\[F\] grid
    Bias(BiasArgs),
    /// Endogeneity calibration report from study-summary records
    Rho(RhoArgs),
    /// Monte Carlo simulation reports over an (E\[F\], rho) grid
    Simulate(SimulateArgs),
    /// Quadrature-vs-Monte-Carlo cross-validation; exits 1 on any failed check
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EfGridArgs {
    /// Smallest E\[F\] on the (log-spaced) grid
    #[arg(long, default_value_t = 1.0)]
    ef_min: f64,
    /// Largest E\[F\] on the grid
    #[arg(long, default_value_t = 1e4)]
    ef_max: f64,
    /// Number of E\[F\] grid values
    #[arg(long, default_value_t = 20)]
    ef_steps: usize,
}

impl EfGridArgs {
    fn values(&self) -> Result<Vec<f64>, String> {
        if self.ef_min < 1.0 {
            return Err(format!("--ef-min must be >= 1, got {}", self.ef_min));
        }
        log_spaced(self.ef_min, self.ef_max, self.ef_steps).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct RhoGridArgs {
    /// Number of rho grid values (symmetric around 0)
    #[arg(long, default_value_t = 41)]
    rho_steps: usize,
    /// Largest |rho| on the grid (capped at 0.999)
    #[arg(long, default_value_t = 0.999)]
    rho_max: f64,
}

impl RhoGridArgs {
    fn values(&self) -> Result<Vec<f64>, String> {
        if !(self.rho_max > 0.0 && self.rho_max <= RHO_CAP) {
            return Err(format!(
                "--rho-max must lie in (0, {RHO_CAP}], got {}",
                self.rho_max
            ));
        }
        lin_spaced(-self.rho_max, self.rho_max, self.rho_steps).map_err(|e| e.to_string())
    }
}

fn check_alpha(alpha: f64) -> Result<(), String> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(format!("--alpha must lie in (0, 1), got {alpha}"))
    }
}

#[derive(Args)]
struct ContourArgs {
    /// Nominal level of the Wald test
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Condition on the estimated first stage being positive (R^c_W)
    #[arg(long)]
    screened: bool,
    #[command(flatten)]
    ef: EfGridArgs,
    #[command(flatten)]
    rho: RhoGridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CutoffArgs {
    /// Target worst-case rejection rate (must be >= alpha)
    #[arg(long)]
    target: f64,
    /// Nominal level of the Wald test
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Condition on the estimated first stage being positive
    #[arg(long)]
    screened: bool,
}

#[derive(Args)]
struct BiasArgs {
    #[command(flatten)]
    ef: EfGridArgs,
    /// Number of |rho| values in the band grid (spread over [0.02, 0.98])
    #[arg(long, default_value_t = 49)]
    rho_steps: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RhoArgs {
    /// Study-summary records (.csv or .json)
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1.0)]
    ef_min: f64,
    #[arg(long, default_value_t = 1e4)]
    ef_max: f64,
    #[arg(long, default_value_t = 5)]
    ef_steps: usize,
    #[arg(long, default_value_t = 5)]
    rho_steps: usize,
    #[arg(long, default_value_t = 0.9)]
    rho_max: f64,
    /// Draws per grid cell
    #[arg(long, default_value_t = 200_000)]
    draws: u64,
    /// Master seed; each cell gets a derived stream
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep only draws with a positive first-stage estimate
    #[arg(long)]
    screened: bool,
    /// Nominal level of the Wald test
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Draws per grid point
    #[arg(long, default_value_t = 200_000)]
    draws: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Allowed disagreement in Monte Carlo standard errors
    #[arg(long, default_value_t = 3.0)]
    tolerance: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Serialize)]
struct ContourRow {
    ef: f64,
    rho: f64,
    rate: f64,
}

#[derive(Serialize)]
struct SimRow {
    ef: f64,
    rho: f64,
    n_draws: u64,
    n_kept: u64,
    rejection_rate: f64,
    rejection_se: f64,
    median_scaled_iv: f64,
    median_scaled_u: f64,
    mean_scaled_u: f64,
    mean_scaled_u_se: f64,
    corr_tar_t1: f64,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Contour(args) => cmd_contour(args),
        Command::Cutoff(args) => cmd_cutoff(args),
        Command::Bias(args) => cmd_bias(args),
        Command::Rho(args) => cmd_rho(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_contour(args: ContourArgs) -> Result<i32, String> {
    check_alpha(args.alpha)?;
    let efs = args.ef.values()?;
    let rhos = args.rho.values()?;
    let threshold = if args.screened {
        0.0
    } else {
        f64::NEG_INFINITY
    };

    let grid = rejection::rejection_grid(&efs, &rhos, args.alpha, threshold);
    let failed = grid.failed_cells();

    let content = match args.out.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = grid
                .cells
                .iter()
                .map(|c| vec![fmt_f(c.ef), fmt_f(c.rho), fmt_f(c.value)])
                .collect();
            render_csv(&["ef", "rho", "rate"], &rows)
        }
        Format::Json => {
            let rows: Vec<ContourRow> = grid
                .cells
                .iter()
                .map(|c| ContourRow {
                    ef: c.ef,
                    rho: c.rho,
                    rate: c.value,
                })
                .collect();
            render_json(&rows)?
        }
    };
    emit(args.out.out.as_deref(), &content).map_err(|e| e.to_string())?;
    if failed > 0 {
        eprintln!("{failed} grid cell(s) failed and were emitted as NaN");
        Ok(EXIT_PARTIAL)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_cutoff(args: CutoffArgs) -> Result<i32, String> {
    check_alpha(args.alpha)?;
    if args.target < args.alpha {
        return Err(format!(
            "--target {} below --alpha {} is unattainable",
            args.target, args.alpha
        ));
    }
    let threshold = if args.screened {
        0.0
    } else {
        f64::NEG_INFINITY
    };
    let rho_star = rejection::endogeneity_cutoff(args.target, args.alpha, threshold)
        .map_err(|e| e.to_string())?;
    let kind = if args.screened {
        "sign-screened"
    } else {
        "unconditional"
    };
    println!(
        "rho_star = {rho_star:.4} ({kind} worst-case rejection <= {target} at alpha = {alpha}; \
         search tolerance {tol} in rho)",
        target = args.target,
        alpha = args.alpha,
        tol = rejection::CUTOFF_RHO_TOL,
    );
    Ok(EXIT_OK)
}

fn cmd_bias(args: BiasArgs) -> Result<i32, String> {
    let efs = args.ef.values()?;
    if args.rho_steps == 0 {
        return Err("--rho-steps must be >= 1".to_string());
    }
    let band_grid = if args.rho_steps == 1 {
        vec![0.5]
    } else {
        lin_spaced(0.02, 0.98, args.rho_steps).map_err(|e| e.to_string())?
    };
    let rows = bias::bias_curve(&efs, &band_grid).map_err(|e| e.to_string())?;
    let failed = rows
        .iter()
        .filter(|r| r.band_uncond_max.is_nan() || r.band_cond_max.is_nan())
        .count();

    let content = match args.out.format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f(r.ef),
                        fmt_f(r.lambda),
                        fmt_f(r.bound_uncond),
                        fmt_f(r.bound_cond),
                        fmt_f(r.band_uncond_min),
                        fmt_f(r.band_uncond_max),
                        fmt_f(r.band_cond_min),
                        fmt_f(r.band_cond_max),
                        r.bound_cond_limit_only.to_string(),
                    ]
                })
                .collect();
            render_csv(
                &[
                    "ef",
                    "lambda",
                    "bound_uncond",
                    "bound_cond",
                    "band_uncond_min",
                    "band_uncond_max",
                    "band_cond_min",
                    "band_cond_max",
                    "bound_cond_limit_only",
                ],
                &table,
            )
        }
        Format::Json => render_json(&rows)?,
    };
    emit(args.out.out.as_deref(), &content).map_err(|e| e.to_string())?;
    if failed > 0 {
        eprintln!("{failed} bias row(s) contain failed band cells (NaN)");
        Ok(EXIT_PARTIAL)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_rho(args: RhoArgs) -> Result<i32, String> {
    let records = endogeneity::read_study_records(&args.input).map_err(|e| e.to_string())?;
    if records.is_empty() {
        return Err(format!("no study records in {}", args.input.display()));
    }
    let mut rows: Vec<endogeneity::CalibrationRow> = Vec::with_capacity(records.len());
    let mut bad_records = 0usize;
    for (i, rec) in records.iter().enumerate() {
        match rec {
            Ok(s) => {
                let mut row = endogeneity::calibration_report(std::slice::from_ref(s))
                    .pop()
                    .expect("one row per study");
                row.study = i;
                for note in &row.notes {
                    eprintln!("study {i}: {note}");
                }
                rows.push(row);
            }
            Err(msg) => {
                bad_records += 1;
                eprintln!("study {i}: record error: {msg}");
                rows.push(endogeneity::CalibrationRow {
                    study: i,
                    rho_hat: f64::NAN,
                    rho_ovb: f64::NAN,
                    ef_hat: f64::NAN,
                    rho_bound_reliability: f64::NAN,
                    notes: vec![msg.clone()],
                });
            }
        }
    }
    let content = match args.out.format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.study.to_string(),
                        fmt_f(r.rho_hat),
                        fmt_f(r.rho_ovb),
                        fmt_f(r.ef_hat),
                        fmt_f(r.rho_bound_reliability),
                    ]
                })
                .collect();
            render_csv(
                &[
                    "study",
                    "rho_hat",
                    "rho_ovb",
                    "ef_hat",
                    "rho_bound_reliability",
                ],
                &table,
            )
        }
        Format::Json => render_json(&rows)?,
    };
    emit(args.out.out.as_deref(), &content).map_err(|e| e.to_string())?;
    if bad_records == records.len() {
        Err("every study record failed to parse".to_string())
    } else if bad_records > 0 {
        Ok(EXIT_PARTIAL)
    } else {
        Ok(EXIT_OK)
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32, String> {
    check_alpha(args.alpha)?;
    if args.draws == 0 {
        return Err("--draws must be >= 1".to_string());
    }
    let efs = EfGridArgs {
        ef_min: args.ef_min,
        ef_max: args.ef_max,
        ef_steps: args.ef_steps,
    }
    .values()?;
    let rhos = RhoGridArgs {
        rho_steps: args.rho_steps,
        rho_max: args.rho_max,
    }
    .values()?;
    let screen = if args.screened {
        Screen::KeepT1Positive
    } else {
        Screen::None
    };

    let mut rows = Vec::with_capacity(efs.len() * rhos.len());
    let mut failed = 0usize;
    for (idx, (ef, rho)) in efs
        .iter()
        .flat_map(|&ef| rhos.iter().map(move |&rho| (ef, rho)))
        .enumerate()
    {
        let cell = DesignPoint::new(ef, rho)
            .and_then(|d| {
                SimulationPlan::new(
                    canonical_model(&d),
                    args.draws,
                    oracle::derived_seed(args.seed, idx as u64),
                    screen,
                )
            })
            .and_then(|plan| oracle::simulation_report(&plan, args.alpha));
        match cell {
            Ok(rep) => rows.push(SimRow {
                ef,
                rho,
                n_draws: rep.n_draws,
                n_kept: rep.n_kept,
                rejection_rate: rep.rejection_rate_wald.value,
                rejection_se: rep.rejection_rate_wald.std_error,
                median_scaled_iv: rep.median_scaled_iv,
                median_scaled_u: rep.median_scaled_u,
                mean_scaled_u: rep.mean_scaled_u.value,
                mean_scaled_u_se: rep.mean_scaled_u.std_error,
                corr_tar_t1: rep.empirical_corr_tar_t1,
            }),
            Err(e) => {
                failed += 1;
                eprintln!("cell (ef={ef}, rho={rho}) failed: {e}");
                rows.push(SimRow {
                    ef,
                    rho,
                    n_draws: args.draws,
                    n_kept: 0,
                    rejection_rate: f64::NAN,
                    rejection_se: f64::NAN,
                    median_scaled_iv: f64::NAN,
                    median_scaled_u: f64::NAN,
                    mean_scaled_u: f64::NAN,
                    mean_scaled_u_se: f64::NAN,
                    corr_tar_t1: f64::NAN,
                });
            }
        }
    }

    let content = match args.out.format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f(r.ef),
                        fmt_f(r.rho),
                        r.n_draws.to_string(),
                        r.n_kept.to_string(),
                        fmt_f(r.rejection_rate),
                        fmt_f(r.rejection_se),
                        fmt_f(r.median_scaled_iv),
                        fmt_f(r.median_scaled_u),
                        fmt_f(r.mean_scaled_u),
                        fmt_f(r.mean_scaled_u_se),
                        fmt_f(r.corr_tar_t1),
                    ]
                })
                .collect();
            render_csv(
                &[
                    "ef",
                    "rho",
                    "n_draws",
                    "n_kept",
                    "rejection_rate",
                    "rejection_se",
                    "median_scaled_iv",
                    "median_scaled_u",
                    "mean_scaled_u",
                    "mean_scaled_u_se",
                    "corr_tar_t1",
                ],
                &table,
            )
        }
        Format::Json => render_json(&rows)?,
    };
    emit(args.out.out.as_deref(), &content).map_err(|e| e.to_string())?;
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, String> {
    if args.draws == 0 {
        return Err("--draws must be >= 1".to_string());
    }
    if args.tolerance <= 0.0 || args.tolerance.is_nan() {
        return Err(format!(
            "--tolerance must be positive, got {}",
            args.tolerance
        ));
    }
    let rows =
        oracle::cross_validate(args.draws, args.seed, args.tolerance).map_err(|e| e.to_string())?;

    let content = match args.out.format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.check.clone(),
                        fmt_f(r.ef),
                        fmt_f(r.rho),
                        fmt_f(r.theory),
                        fmt_f(r.monte_carlo),
                        fmt_f(r.std_error),
                        fmt_f(r.sigmas),
                        (r.pass as u8).to_string(),
                    ]
                })
                .collect();
            render_csv(
                &[
                    "check",
                    "ef",
                    "rho",
                    "theory",
                    "monte_carlo",
                    "std_error",
                    "sigmas",
                    "pass",
                ],
                &table,
            )
        }
        Format::Json => render_json(&rows)?,
    };
    // With --out the file carries the full report; stdout keeps the
    // summary. Without it, the report goes to stdout.
    match &args.out.out {
        Some(path) => emit(Some(path), &content).map_err(|e| e.to_string())?,
        None => emit(None, &content).map_err(|e| e.to_string())?,
    }

    let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    println!(
        "verify: {} checks, {} failed (tolerance {} s.e., draws {}, seed {})",
        rows.len(),
        failed.len(),
        args.tolerance,
        args.draws,
        args.seed
    );
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        for r in &failed {
            eprintln!(
                "FAIL {} at (ef={}, rho={}): theory {} vs mc {} ({} s.e.)",
                r.check,
                fmt_f(r.ef),
                fmt_f(r.rho),
                fmt_f(r.theory),
                fmt_f(r.monte_carlo),
                fmt_f(r.sigmas)
            );
        }
        Ok(EXIT_VERIFY_FAIL)
    }
}
