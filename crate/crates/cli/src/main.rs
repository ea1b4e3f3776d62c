//! `didcap` — capacity bounds for the dependent insertion-deletion
//! channel. Subcommands compute the Markov lower bound, the window-`L`
//! upper bounds, the low-noise expansion, Monte Carlo rate estimates, the
//! trivializing construction, the structural verification suites, and
//! combined parameter sweeps. Results are emitted as CSV rows sorted by
//! `(p_i, p_d, quantity, L)` so repeated runs are byte-identical.

mod config;
mod rows;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use didcap::lower::{genie_erasure, iud_lower_bound, lower_bound};
use didcap::lownoise::{b_sign_map, expansion};
use didcap::simrate::{
    estimate_conditional_entropy_rate, estimate_info_rate, estimate_output_entropy_rate,
};
use didcap::upper::{
    build_problem, check_not_stationary, objective_and_gradient, solve, TrivializeOutcome,
};
use didcap::{ChannelParams, MarkovInput};

use config::ConfigFile;
use rows::{write_pivot, write_rows, CsvRow};

/// Probabilities exactly 0 or 1 are moved this far into the open interval;
/// endpoint parameters are understood as limits.
const ENDPOINT_NUDGE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "didcap",
    version,
    about = "Capacity bounds for the DID recording channel"
)]
struct Cli {
    /// Optional key=value file mirroring the flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path for CSV/reports (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct GridArgs {
    /// Comma list of symmetric parameters; sets p_i = p_d per value.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Comma list of insertion probabilities (crossed with --pd).
    #[arg(long, value_delimiter = ',')]
    pi: Vec<f64>,
    /// Comma list of deletion probabilities (crossed with --pi).
    #[arg(long, value_delimiter = ',')]
    pd: Vec<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Markov lower bound, its i.u.d. restriction, and the genie bound.
    Lower {
        #[command(flatten)]
        grid: GridArgs,
        /// Series/search tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Window-L upper bounds by concave maximization.
    Upper {
        #[command(flatten)]
        grid: GridArgs,
        /// Comma list of window parameters.
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        /// Include the bit-symmetry constraint rows.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        bitsym: Option<bool>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Low-noise series expansion; optionally the B-coefficient sign map.
    Lownoise {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        tol: Option<f64>,
        /// Emit the sign map of the quadratic coefficient instead.
        #[arg(long)]
        bsign: bool,
        /// Sign-map grid for the first deviation.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta1: Vec<f64>,
        /// Sign-map grid for the second deviation.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta2: Vec<f64>,
        /// Series cap for the sign map.
        #[arg(long, default_value_t = 2000)]
        kmax: usize,
    },
    /// Monte Carlo entropy/information rate estimates.
    Simrate {
        #[command(flatten)]
        grid: GridArgs,
        /// Input flip probability.
        #[arg(long)]
        alpha: Option<f64>,
        /// Path length per sample.
        #[arg(long)]
        n: Option<usize>,
        /// Independent sample paths.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Which rates to estimate: info, hy, hyx, or all.
        #[arg(long, default_value = "info")]
        quantity: String,
    },
    /// The non-stationary two-string input that drives the bound to 1.
    Trivialize {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "L")]
        l: Option<usize>,
    },
    /// Structural verification suites; nonzero exit on any violation.
    Verify {
        /// all, consistency, stationarity, symmetrization,
        /// superadditivity, or feinstein.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Combined sweep over a parameter grid.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        /// Quantities: lower,genie,upper,expansion (comma list).
        #[arg(long, value_delimiter = ',')]
        quantities: Vec<String>,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        bitsym: Option<bool>,
        #[arg(long)]
        tol: Option<f64>,
        /// Pivot output: one column per quantity.
        #[arg(long)]
        pivot: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.config.as_deref().map(ConfigFile::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("didcap: bad config file: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cli, &config) {
        Ok(code) => code,
        Err(AppError::Usage(msg)) => {
            eprintln!("didcap: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Internal(msg)) => {
            eprintln!("didcap: {msg}");
            ExitCode::from(1)
        }
    }
}

enum AppError {
    /// Invalid arguments: exit code 2.
    Usage(String),
    /// Computation or I/O failure: exit code 1.
    Internal(String),
}

impl From<didcap::Error> for AppError {
    fn from(e: didcap::Error) -> Self {
        match e {
            didcap::Error::InvalidProbability(_)
            | didcap::Error::DegenerateParams
            | didcap::Error::SizeGuard(_) => AppError::Usage(e.to_string()),
            other => AppError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Internal(e.to_string())
    }
}

/// Builds the parameter grid from the flags (and config fallbacks).
/// With `nudge` set, exact endpoints move into the open interval and the
/// values are read as limits; series operations whose domain includes the
/// endpoints skip the nudge.
fn make_grid(
    grid: &GridArgs,
    config: &ConfigFile,
    nudge: bool,
) -> Result<Vec<ChannelParams>, AppError> {
    let p = or_config_list(&grid.p, config, "p");
    let pi = or_config_list(&grid.pi, config, "pi");
    let pd = or_config_list(&grid.pd, config, "pd");
    if !p.is_empty() && (!pi.is_empty() || !pd.is_empty()) {
        return Err(AppError::Usage(
            "--p cannot be combined with --pi/--pd".into(),
        ));
    }
    let clamp = |v: f64| {
        if nudge {
            v.clamp(ENDPOINT_NUDGE, 1.0 - ENDPOINT_NUDGE)
        } else {
            v
        }
    };
    let mut out = Vec::new();
    if !p.is_empty() {
        for &v in &p {
            check_unit(v)?;
            out.push(ChannelParams::symmetric(clamp(v)).map_err(AppError::from)?);
        }
    } else {
        if pi.is_empty() || pd.is_empty() {
            return Err(AppError::Usage("provide --p, or both --pi and --pd".into()));
        }
        for &a in &pi {
            for &b in &pd {
                check_unit(a)?;
                check_unit(b)?;
                out.push(ChannelParams::new(clamp(a), clamp(b)).map_err(AppError::from)?);
            }
        }
    }
    Ok(out)
}

fn check_unit(v: f64) -> Result<(), AppError> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(AppError::Usage(format!("probability {v} outside [0, 1]")));
    }
    Ok(())
}

fn or_config_list(flag: &[f64], config: &ConfigFile, key: &str) -> Vec<f64> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        config.float_list(key)
    }
}

fn run(cli: Cli, config: &ConfigFile) -> Result<ExitCode, AppError> {
    let out_path = cli.out.clone().or_else(|| config.path("out"));
    match cli.cmd {
        Cmd::Lower { grid, tol } => {
            let tol = resolve_tol(tol, config)?;
            let grid = make_grid(&grid, config, true)?;
            let rows = cmd_lower(&grid, tol)?;
            write_rows(out_path.as_deref(), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Upper {
            grid,
            l,
            bitsym,
            tol,
        } => {
            let tol = resolve_tol(tol, config)?;
            let grid = make_grid(&grid, config, true)?;
            let ls = if l.is_empty() {
                config.usize_list("L")
            } else {
                l
            };
            if ls.is_empty() {
                return Err(AppError::Usage("--L is required for upper".into()));
            }
            let bitsym = bitsym.or_else(|| config.boolean("bitsym")).unwrap_or(true);
            let rows = cmd_upper(&grid, &ls, bitsym, tol)?;
            let failed = rows.iter().any(|r| !r.converged);
            write_rows(out_path.as_deref(), &rows)?;
            Ok(if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Cmd::Lownoise {
            grid,
            tol,
            bsign,
            delta1,
            delta2,
            kmax,
        } => {
            let tol = resolve_tol(tol, config)?;
            let grid_params = make_grid(&grid, config, false)?;
            if bsign {
                let d1 = if delta1.is_empty() {
                    default_delta_grid()
                } else {
                    delta1
                };
                let d2 = if delta2.is_empty() {
                    default_delta_grid()
                } else {
                    delta2
                };
                let ps: Vec<f64> = grid_params.iter().map(|c| c.p_i()).collect();
                let pts = b_sign_map(&ps, &d1, &d2, kmax);
                let mut text = String::from("p_id,delta1,delta2,B_value,sign\n");
                for pt in pts {
                    text.push_str(&format!(
                        "{},{},{},{},{}\n",
                        rows::sig10(pt.p_id),
                        rows::sig10(pt.delta1),
                        rows::sig10(pt.delta2),
                        rows::sig10(pt.b_value),
                        pt.sign
                    ));
                }
                rows::write_text(out_path.as_deref(), &text)?;
                return Ok(ExitCode::SUCCESS);
            }
            let mut rows = Vec::new();
            for &cp in &grid_params {
                if cp.p_i() != cp.p_d() {
                    return Err(AppError::Usage(
                        "lownoise expects symmetric parameters (--p)".into(),
                    ));
                }
                let r = expansion(cp.p_i(), tol)?;
                rows.push(CsvRow::new(cp, "expansion", None, r.value).aux(format!("{}", r.k_used)));
            }
            write_rows(out_path.as_deref(), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Simrate {
            grid,
            alpha,
            n,
            samples,
            seed,
            quantity,
        } => {
            let grid = make_grid(&grid, config, true)?;
            let alpha = alpha.or_else(|| config.float("alpha")).unwrap_or(0.5);
            let n = n.or_else(|| config.usize("n")).unwrap_or(1_000_000);
            let samples = samples.or_else(|| config.usize("samples")).unwrap_or(10);
            let seed = seed.or_else(|| config.u64("seed")).unwrap_or(0);
            let input = MarkovInput::new(alpha).map_err(AppError::from)?;
            let mut rows = Vec::new();
            for &cp in &grid {
                let wanted: Vec<&str> = match quantity.as_str() {
                    "all" => vec!["info", "hy", "hyx"],
                    q @ ("info" | "hy" | "hyx") => vec![q],
                    other => {
                        return Err(AppError::Usage(format!(
                            "unknown quantity {other}; use info, hy, hyx, or all"
                        )))
                    }
                };
                for q in wanted {
                    let (name, est) = match q {
                        "info" => ("sim_rate", estimate_info_rate(cp, input, n, samples, seed)?),
                        "hy" => (
                            "sim_rate_hy",
                            estimate_output_entropy_rate(cp, input, n, samples, seed)?,
                        ),
                        _ => (
                            "sim_rate_hyx",
                            estimate_conditional_entropy_rate(cp, input, n, samples, seed)?,
                        ),
                    };
                    rows.push(
                        CsvRow::new(cp, name, None, est.mean).aux(rows::sig10(est.half_width)),
                    );
                }
            }
            write_rows(out_path.as_deref(), &rows)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Trivialize { grid, l } => {
            let grid = make_grid(&grid, config, true)?;
            let l = l.or_else(|| config.usize("L")).unwrap_or(3);
            let mut text = String::new();
            for &cp in &grid {
                match didcap::upper::trivializing_input(cp, l)? {
                    TrivializeOutcome::Found(dist) => {
                        let prob = build_problem(cp, l, false)?;
                        let (obj, _) = objective_and_gradient(&prob, &dist)?;
                        let nonstat = check_not_stationary(&dist);
                        let blocks: Vec<String> = dist
                            .probs()
                            .iter()
                            .enumerate()
                            .filter(|(_, &p)| p > 1e-12)
                            .map(|(b, &p)| format!("{}:{}", format_block(b, l + 1), rows::sig10(p)))
                            .collect();
                        text.push_str(&format!(
                            "p_i={} p_d={} L={l} feasible=true objective={} \
                             stationary={} blocks=[{}]\n",
                            rows::sig10(cp.p_i()),
                            rows::sig10(cp.p_d()),
                            rows::sig10(obj),
                            !nonstat,
                            blocks.join(" ")
                        ));
                    }
                    TrivializeOutcome::Infeasible { detail } => {
                        text.push_str(&format!(
                            "p_i={} p_d={} L={l} feasible=false reason={detail}\n",
                            rows::sig10(cp.p_i()),
                            rows::sig10(cp.p_d()),
                        ));
                    }
                }
            }
            rows::write_text(out_path.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { suite, seed } => {
            let seed = seed.or_else(|| config.u64("seed")).unwrap_or(2024);
            let (text, ok) = run_verify(&suite, seed)?;
            rows::write_text(out_path.as_deref(), &text)?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Sweep {
            grid,
            quantities,
            l,
            bitsym,
            tol,
            pivot,
        } => {
            let tol = resolve_tol(tol, config)?;
            let grid = make_grid(&grid, config, true)?;
            let quantities = if quantities.is_empty() {
                vec!["lower".into(), "genie".into()]
            } else {
                quantities
            };
            let ls = if l.is_empty() {
                config.usize_list("L")
            } else {
                l
            };
            let bitsym = bitsym.or_else(|| config.boolean("bitsym")).unwrap_or(true);
            let mut rows = Vec::new();
            for q in &quantities {
                match q.as_str() {
                    "lower" => rows.extend(cmd_lower(&grid, tol)?),
                    "genie" => {
                        for &cp in &grid {
                            rows.push(CsvRow::new(cp, "genie", None, genie_erasure(cp)?));
                        }
                    }
                    "upper" => {
                        if ls.is_empty() {
                            return Err(AppError::Usage("upper sweep needs --L".into()));
                        }
                        rows.extend(cmd_upper(&grid, &ls, bitsym, tol)?);
                    }
                    "expansion" => {
                        for &cp in &grid {
                            if cp.p_i() != cp.p_d() {
                                return Err(AppError::Usage(
                                    "expansion sweep needs symmetric parameters".into(),
                                ));
                            }
                            let r = expansion(cp.p_i(), tol)?;
                            rows.push(
                                CsvRow::new(cp, "expansion", None, r.value)
                                    .aux(format!("{}", r.k_used)),
                            );
                        }
                    }
                    other => {
                        return Err(AppError::Usage(format!("unknown sweep quantity {other}")))
                    }
                }
            }
            // dedupe: lower emits genie as well; drop repeats
            rows.sort_by(rows::row_order);
            rows.dedup_by(|a, b| rows::row_order(a, b) == std::cmp::Ordering::Equal);
            if pivot {
                write_pivot(out_path.as_deref(), &rows)?;
            } else {
                write_rows(out_path.as_deref(), &rows)?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn resolve_tol(tol: Option<f64>, config: &ConfigFile) -> Result<f64, AppError> {
    let t = tol.or_else(|| config.float("tol")).unwrap_or(1e-9);
    if t <= 0.0 || t.is_nan() {
        return Err(AppError::Usage(format!("tolerance {t} must be positive")));
    }
    Ok(t)
}

fn default_delta_grid() -> Vec<f64> {
    (-5..=15).map(|i| i as f64 * 0.05).collect()
}

/// Block as a left-to-right symbol string (earliest symbol first).
fn format_block(block: usize, len: usize) -> String {
    (0..len)
        .map(|i| if (block >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn cmd_lower(grid: &[ChannelParams], tol: f64) -> Result<Vec<CsvRow>, AppError> {
    let results = didcap::parallel::map_indexed(grid.len(), |i| -> didcap::Result<_> {
        let cp = grid[i];
        let lb = lower_bound(cp, tol)?;
        let iud = iud_lower_bound(cp, tol)?;
        let genie = genie_erasure(cp)?;
        Ok((cp, lb, iud, genie))
    });
    let mut rows = Vec::new();
    for r in results {
        let (cp, lb, iud, genie) = r.map_err(AppError::from)?;
        rows.push(CsvRow::new(cp, "lower", None, lb.value).aux(rows::sig10(lb.alpha_opt)));
        rows.push(CsvRow::new(cp, "iud_lower", None, iud).aux(rows::sig10(0.5)));
        rows.push(CsvRow::new(cp, "genie", None, genie));
    }
    Ok(rows)
}

fn cmd_upper(
    grid: &[ChannelParams],
    ls: &[usize],
    bitsym: bool,
    tol: f64,
) -> Result<Vec<CsvRow>, AppError> {
    let tasks: Vec<(ChannelParams, usize)> = grid
        .iter()
        .flat_map(|&cp| ls.iter().map(move |&l| (cp, l)))
        .collect();
    let solved = didcap::parallel::map_indexed(tasks.len(), |i| -> didcap::Result<_> {
        let (cp, l) = tasks[i];
        let prob = build_problem(cp, l, bitsym)?;
        let r = solve(&prob, tol)?;
        Ok((cp, l, r))
    });
    let mut rows = Vec::new();
    let mut prev: Option<(ChannelParams, f64)> = None;
    for r in solved {
        let (cp, l, res) = r.map_err(AppError::from)?;
        // window values for one parameter point must not increase with L
        let mut aux = format!("{}", res.iterations);
        if let Some((pcp, pval)) = prev {
            if pcp == cp && res.value > pval + 1e-8 {
                aux.push_str(";nonmonotone");
            }
        }
        prev = Some((cp, res.value));
        rows.push(
            CsvRow::new(cp, "upper_L", Some(l), res.value)
                .aux(aux)
                .converged(res.converged),
        );
    }
    Ok(rows)
}

fn run_verify(suite: &str, seed: u64) -> Result<(String, bool), AppError> {
    let mut text = String::new();
    let mut all_ok = true;
    let params = [
        ChannelParams::new(0.2, 0.3).unwrap(),
        ChannelParams::new(0.5, 0.5).unwrap(),
        ChannelParams::new(0.7, 0.1).unwrap(),
        ChannelParams::new(0.05, 0.8).unwrap(),
    ];
    let want = |name: &str| suite == "all" || suite == name;
    let known = [
        "all",
        "consistency",
        "stationarity",
        "symmetrization",
        "superadditivity",
        "feinstein",
    ];
    if !known.contains(&suite) {
        return Err(AppError::Usage(format!(
            "unknown suite {suite}; choose from {}",
            known.join(", ")
        )));
    }
    let start = Instant::now();
    if want("consistency") {
        let mut worst = 0.0f64;
        for &cp in &params {
            worst = worst.max(didcap::channel::check_consistency(cp, 5)?.max_violation);
        }
        let ok = worst < 1e-10;
        all_ok &= ok;
        text.push_str(&verdict("consistency", ok, worst));
    }
    if want("stationarity") {
        let mut shift = 0.0f64;
        let mut neg = 0.0f64;
        for &cp in &params {
            let r = didcap::channel::check_stationarity_and_bitsymmetry(cp, 4, 3)?;
            shift = shift.max(r.shift_violation);
            neg = neg.max(r.negation_violation);
        }
        let ok = shift < 1e-10 && neg < 1e-10;
        all_ok &= ok;
        text.push_str(&verdict("stationarity", ok, shift));
        text.push_str(&verdict("bit-symmetry", ok, neg));
    }
    if want("symmetrization") {
        let mut worst = 0.0f64;
        let mut viol = 0usize;
        for (i, &cp) in params.iter().enumerate() {
            let r = didcap::info::check_symmetrization_gain(cp, 3, 25, seed + i as u64)?;
            worst = worst.min(r.min_margin).abs();
            viol += r.violations;
        }
        let ok = viol == 0;
        all_ok &= ok;
        text.push_str(&verdict("symmetrization", ok, worst));
    }
    if want("superadditivity") {
        let r = didcap::info::check_superadditivity(200, seed);
        let ok = r.violations == 0;
        all_ok &= ok;
        text.push_str(&verdict("superadditivity", ok, r.min_margin.min(0.0).abs()));
    }
    if want("feinstein") {
        let r = didcap::info::check_feinstein_stationarity(50, seed)?;
        let ok = r.violations == 0;
        all_ok &= ok;
        text.push_str(&verdict("feinstein", ok, r.min_margin.abs()));
    }
    text.push_str(&format!(
        "verify: {} in {:.2}s\n",
        if all_ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    ));
    Ok((text, all_ok))
}

fn verdict(name: &str, ok: bool, worst: f64) -> String {
    format!(
        "{name}: {} (worst {:.3e})\n",
        if ok { "PASS" } else { "FAIL" },
        worst
    )
}
