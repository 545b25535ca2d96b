//! Command-line surface for General Hazard fitting, redundancy diagnosis,
//! profile-likelihood export, and the scenario harness.
//!
//! Exit codes: 0 success, 2 input error, 3 numeric failure. Diagnostic
//! verdicts never change the exit code.

use clap::{Args, Parser, Subcommand};
use ghsurv::io::{
    load_dataset, parse_scenario_config, write_classification_csv, write_json,
    write_profile_csv, ColumnMap,
};
use ghsurv::profile::free_param_names;
use ghsurv::{
    bootstrap_probabilities, diagnose, fit_mle, profile_scan, BaselineFamily, DiagnosticConfig,
    Error, FitConfig, FitResult, HazardStructure, ProfileConfig, SurvivalDataset,
};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ghsurv",
    about = "General Hazard survival regression with near-redundancy and identifiability diagnostics",
    version
)]
struct Cli {
    /// Size of the thread pool for bootstrap and simulation replicates
    /// (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,

    /// Column holding follow-up times.
    #[arg(long, default_value = "time")]
    time_col: String,

    /// Column holding the event indicator (1 event, 0 censored).
    #[arg(long, default_value = "status")]
    status_col: String,

    /// Comma-separated hazard-level covariate columns (beta).
    #[arg(long, value_delimiter = ',')]
    hlevel: Vec<String>,

    /// Comma-separated time-level covariate columns (alpha). Defaults to
    /// --hlevel for the AFT structure.
    #[arg(long, value_delimiter = ',')]
    tlevel: Vec<String>,

    /// Columns to z-score (sample sd) on load.
    #[arg(long, value_delimiter = ',')]
    standardize: Vec<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// Baseline family: weibull, pgw, ew, gg, lognormal.
    #[arg(long)]
    family: String,

    /// Hazard structure: gh, ph, aft, ah.
    #[arg(long, default_value = "gh")]
    structure: String,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one family/structure pair by maximum likelihood.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Seed for the multi-start jitters.
        #[arg(long, default_value_t = 20260822)]
        seed: u64,
        /// Write the fit as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit, then run all near-redundancy screens (KL, Hellinger, Hessian).
    Diagnose {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// KL threshold scale M.
        #[arg(long, default_value_t = 0.05)]
        m: f64,
        /// KL threshold exponent on the parameter count (1 or 2).
        #[arg(long, default_value_t = 1)]
        k_exponent: u32,
        /// Hellinger misclassification budget kappa.
        #[arg(long, default_value_t = 0.05)]
        kappa: f64,
        /// Censoring weight in the effective sample size.
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Cutoff for the smallest standardized Hessian eigenvalue.
        #[arg(long, default_value_t = 0.001)]
        hessian_cutoff: f64,
        /// Bootstrap replicate count; pass the flag without a value for the
        /// conventional 1000.
        #[arg(long, num_args = 0..=1, default_missing_value = "1000")]
        bootstrap: Option<usize>,
        #[arg(long, default_value_t = 20260822)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Profile-likelihood scans with PNI verdicts; curves exported as CSV.
    Profile {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Parameters to scan: comma-separated fitting-scale names
        /// (e.g. beta_age), or 'regression' (all alpha and beta), or 'all'.
        #[arg(long, default_value = "regression")]
        params: String,
        /// Scan half-width for regression coefficients.
        #[arg(long, default_value_t = 3.0)]
        delta: f64,
        /// Grid points per scan (even counts are bumped to odd).
        #[arg(long, default_value_t = 41)]
        grid_points: usize,
        /// Relative-likelihood level defining the region.
        #[arg(long, default_value_t = 0.147)]
        level: f64,
        #[arg(long, default_value_t = 20260822)]
        seed: u64,
        /// Write curves as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario of the simulation study from a key-value config.
    Simulate {
        /// Flat key-value file: scenario, n, censoring, replicates, seed.
        #[arg(long)]
        config: PathBuf,
        /// Directory for the JSON and CSV classification tables.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn column_map(d: &DataArgs, structure: HazardStructure) -> ColumnMap {
    let time_covariates = if d.tlevel.is_empty() && structure == HazardStructure::Aft {
        d.hlevel.clone()
    } else {
        d.tlevel.clone()
    };
    ColumnMap {
        time: d.time_col.clone(),
        status: d.status_col.clone(),
        hazard_covariates: d.hlevel.clone(),
        time_covariates,
        standardize: d.standardize.clone(),
    }
}

fn parse_model(m: &ModelArgs) -> Result<(BaselineFamily, HazardStructure), Error> {
    Ok((
        BaselineFamily::parse(&m.family)?,
        HazardStructure::parse(&m.structure)?,
    ))
}

fn print_fit_table(fit: &FitResult, data: &SurvivalDataset) {
    println!(
        "model: {} baseline, {} structure | n={} events={} censored={}",
        fit.family.name(),
        fit.structure.name(),
        fit.n,
        fit.n_events,
        fit.n - fit.n_events
    );
    println!("{:<24}{:>14}", "parameter", "estimate");
    let b = &fit.theta_hat.baseline;
    for (name, value) in fit.family.param_names().iter().zip(&b.xi) {
        println!("{name:<24}{value:>14.4}");
    }
    for (name, value) in data.time_names.iter().zip(&fit.theta_hat.alpha) {
        println!("{:<24}{value:>14.4}", format!("alpha_{name}"));
    }
    for (name, value) in data.hazard_names.iter().zip(&fit.theta_hat.beta) {
        println!("{:<24}{value:>14.4}", format!("beta_{name}"));
    }
    println!("{:<24}{:>14.4}", "loglik", fit.loglik);
    println!("{:<24}{:>14.4}", "AIC", fit.aic);
    println!("{:<24}{:>14}", "k", fit.k);
    println!("{:<24}{:>14}", "converged", fit.converged);
}

#[derive(Serialize)]
struct Envelope<C: Serialize, R: Serialize> {
    command: &'static str,
    defaults: C,
    result: R,
}

fn emit<C: Serialize, R: Serialize>(
    out: &Option<PathBuf>,
    command: &'static str,
    defaults: C,
    result: R,
) -> Result<(), Error> {
    let envelope = Envelope {
        command,
        defaults,
        result,
    };
    match out {
        Some(path) => write_json(path, &envelope)?,
        None => println!("{}", serde_json::to_string_pretty(&envelope)?),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(t) = cli.threads {
        // ignore failure: the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Fit {
            data,
            model,
            seed,
            out,
        } => {
            let (family, structure) = parse_model(&model)?;
            let ds = load_dataset(&data.data, &column_map(&data, structure))?;
            let fit_config = FitConfig {
                seed,
                ..FitConfig::default()
            };
            let fit = fit_mle(&ds, family, structure, &fit_config)?;
            print_fit_table(&fit, &ds);
            let converged = fit.converged;
            emit(&out, "fit", &fit_config, &fit)?;
            if !converged {
                return Err(Error::NonConvergence(
                    "no start passed the gradient check; best point reported".into(),
                ));
            }
            Ok(())
        }
        Command::Diagnose {
            data,
            model,
            m,
            k_exponent,
            kappa,
            rho,
            hessian_cutoff,
            bootstrap,
            seed,
            out,
        } => {
            let (family, structure) = parse_model(&model)?;
            let ds = load_dataset(&data.data, &column_map(&data, structure))?;
            let fit_config = FitConfig {
                seed,
                ..FitConfig::default()
            };
            let diag_config = DiagnosticConfig {
                kl_m: m,
                kl_k_exponent: k_exponent,
                kappa,
                rho,
                hessian_cutoff,
            };
            let fit = fit_mle(&ds, family, structure, &fit_config)?;
            if !fit.converged {
                return Err(Error::NonConvergence(
                    "fit did not converge; diagnosis aborted".into(),
                ));
            }
            let mut report = diagnose(&fit, &diag_config)?;
            if let Some(b) = bootstrap {
                report.bootstrap = Some(bootstrap_probabilities(
                    &ds,
                    &fit,
                    b,
                    seed,
                    &fit_config,
                    &diag_config,
                )?);
            }
            let verdict = |flag: bool| if flag { "near-redundant" } else { "not near-redundant" };
            println!(
                "KL:        distance {:.6} vs threshold {:.6} -> {}",
                report.kl.distance,
                report.kl_threshold,
                verdict(report.flags.nr_kl)
            );
            println!(
                "Hellinger: distance {:.6} vs threshold {:.6} -> {}",
                report.hellinger.distance,
                report.hellinger_threshold,
                verdict(report.flags.nr_hellinger)
            );
            println!(
                "Hessian:   smallest eigenvalue ratio {:.3e} vs cutoff {:.3e} -> {}",
                report.hessian.smallest_ratio,
                report.hessian.cutoff,
                verdict(report.flags.nr_hessian)
            );
            if let Some(b) = &report.bootstrap {
                println!(
                    "bootstrap (B={}, {} failures{}): P(KL)={:.3} P(Hellinger)={:.3} P(Hessian)={:.3}",
                    b.n_replicates,
                    b.n_failures,
                    if b.unreliable { ", UNRELIABLE" } else { "" },
                    b.p_kl,
                    b.p_hellinger,
                    b.p_hessian
                );
            }
            emit(&out, "diagnose", &diag_config, &report)?;
            Ok(())
        }
        Command::Profile {
            data,
            model,
            params,
            delta,
            grid_points,
            level,
            seed,
            out,
        } => {
            let (family, structure) = parse_model(&model)?;
            let ds = load_dataset(&data.data, &column_map(&data, structure))?;
            let fit_config = FitConfig {
                seed,
                ..FitConfig::default()
            };
            let fit = fit_mle(&ds, family, structure, &fit_config)?;
            if !fit.converged {
                return Err(Error::NonConvergence(
                    "fit did not converge; profile aborted".into(),
                ));
            }
            let names = free_param_names(&fit, &ds);
            let r = family.arity();
            let indices: Vec<usize> = match params.as_str() {
                "all" => (0..names.len()).collect(),
                "regression" => (r..names.len()).collect(),
                list => {
                    let mut idx = Vec::new();
                    for want in list.split(',').map(str::trim) {
                        let i = names.iter().position(|n| n == want).ok_or_else(|| {
                            Error::Domain(format!(
                                "unknown parameter '{want}'; available: {}",
                                names.join(", ")
                            ))
                        })?;
                        idx.push(i);
                    }
                    idx
                }
            };
            let profile_config = ProfileConfig {
                n_grid: grid_points,
                delta,
                level,
            };
            let mut curves = Vec::new();
            for i in indices {
                let c = profile_scan(&ds, &fit, i, &profile_config, &fit_config)?;
                println!(
                    "{}: psi_hat={:.4} region=[{}, {}] pni={}",
                    c.param_name,
                    c.psi_hat,
                    c.region_left.map_or("-inf*".into(), |v| format!("{v:.4}")),
                    c.region_right.map_or("+inf*".into(), |v| format!("{v:.4}")),
                    c.pni_flag
                );
                curves.push(c);
            }
            println!("(* region open at the scan boundary)");
            if let Some(path) = &out {
                write_profile_csv(path, &curves)?;
            }
            Ok(())
        }
        Command::Simulate { config, out_dir } => {
            let text = std::fs::read_to_string(&config)?;
            let spec = parse_scenario_config(&text)?;
            let fit_config = FitConfig::default();
            let diag_config = DiagnosticConfig::default();
            let result = ghsurv::run_scenario(&spec, &fit_config, &diag_config)?;
            let t = &result.table;
            println!(
                "scenario {} | n={} target_censoring={} replicates={} seed={}",
                spec.scenario_id, spec.n, spec.target_censoring, spec.replicates, spec.seed
            );
            println!(
                "c_adm={:.4} achieved_censoring={:.3} failures={}",
                t.c_adm, t.mean_achieved_censoring, t.replicate_failures
            );
            println!("{:<12}{:>8}{:>9}{:>10}{:>9}", "method", "NR&PNI", "NR only", "PNI only", "neither");
            for (name, cells) in [
                ("hellinger", &t.hellinger),
                ("kl", &t.kl),
                ("hessian", &t.hessian),
            ] {
                let p = cells.proportions();
                println!(
                    "{name:<12}{:>8.3}{:>9.3}{:>10.3}{:>9.3}",
                    p[0], p[1], p[2], p[3]
                );
            }
            std::fs::create_dir_all(&out_dir)?;
            let stem = format!(
                "scenario{}_n{}_c{}",
                spec.scenario_id,
                spec.n,
                (spec.target_censoring * 100.0).round() as u32
            );
            write_json(&out_dir.join(format!("{stem}.json")), &result)?;
            write_classification_csv(&out_dir.join(format!("{stem}.csv")), t)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
