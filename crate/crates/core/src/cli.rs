//! Command-line front end. Flags override the JSON config; EDGECRIT_DIGITS
//! overrides the working precision unless --digits is given.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::GlobalConfig;
use crate::equilibrium::{constants, EquilibriumData, SupportInterval};
use crate::error::{Error, Result};
use crate::harness::{
    bulk_and_airy_experiment_with, build_context, emit_report, kernel_experiment_with, recurrence_experiment_with,
};
use crate::lax::LaxSolver;
use crate::orthopoly::{recurrence_table, PrecisionConfig};
use crate::pi2::{lax_points, solve_y};
use crate::poly::{parse_rational, rational_to_f64};
use crate::potentials::DeformedFamily;
use crate::verify::{run_suite, Suite};

pub const DIGITS_ENV: &str = "EDGECRIT_DIGITS";

#[derive(Parser, Debug)]
#[command(name = "edgecrit", version, about = "Critical-edge universality experiments")]
pub struct Cli {
    /// JSON config; flags take precedence over its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for independent (n, s, t) items.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Support, h-polynomials, variational constant and critical constants.
    Equilibrium {
        #[arg(long, default_value = "eq.json")]
        out: PathBuf,
    },
    /// Solves P_I^2 on [-L, L] at fixed t.
    Pi2 {
        #[arg(long, allow_hyphen_values = true)]
        t: Option<String>,
        #[arg(long = "L", alias = "l")]
        l: Option<String>,
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long, default_value = "pi2.csv")]
        out: PathBuf,
    },
    /// The limiting kernel on a (u, v) grid.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        s0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<String>,
        /// Comma-separated u values, or lo:hi:count.
        #[arg(long, alias = "u-grid", allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, alias = "v-grid", allow_hyphen_values = true)]
        v: Option<String>,
        #[arg(long, default_value = "kernel.csv")]
        out: PathBuf,
    },
    /// Recurrence coefficients a_k, b_k for e^{-n V_{s,t}}.
    Recurrence {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        s: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        t: String,
        #[command(flatten)]
        precision: PrecisionArgs,
        #[arg(long, default_value = "recurrence.csv")]
        out: PathBuf,
    },
    /// Runs the check battery; exits 1 if anything fails.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        suite: SuiteArg,
    },
    /// Runs an experiment and writes <out-dir>/<kind>.csv and .json.
    Report {
        #[arg(long, value_enum)]
        kind: ReportKind,
        #[arg(long, allow_hyphen_values = true)]
        s0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<String>,
        /// Comma-separated list of n.
        #[arg(long)]
        n_list: Option<String>,
        #[command(flatten)]
        precision: PrecisionArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct PrecisionArgs {
    #[arg(long)]
    pub digits: Option<usize>,
    /// Skip the doubled-precision validation run.
    #[arg(long)]
    pub no_validate: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SuiteArg {
    Fast,
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ReportKind {
    Recurrence,
    Kernel,
    Bulk,
}

fn num(text: &str) -> Result<f64> {
    let v = rational_to_f64(&parse_rational(text)?);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{text:?} is not a finite number")))
    }
}

fn num_list(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if let [lo, hi, count] = parts[..] {
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad grid count in {text:?}")))?;
        if count < 2 || lo >= hi {
            return Err(Error::Config(format!("grid {text:?} needs lo < hi and count >= 2")));
        }
        return Ok((0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect());
    }
    text.split(',').map(|s| num(s)).collect()
}

fn digits_from_env() -> Result<Option<usize>> {
    match std::env::var(DIGITS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{DIGITS_ENV}={v:?} is not a digit count"))),
        Err(_) => Ok(None),
    }
}

fn apply_precision(cfg: &mut GlobalConfig, p: &PrecisionArgs) {
    if let Some(d) = p.digits {
        cfg.precision.digits = Some(d);
    }
    if p.no_validate {
        cfg.precision.validate = false;
    }
}

/// Writes JSON with a trailing newline.
fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Config echo next to a CSV artifact: `x.csv` gets `x.meta.json`.
fn write_meta(csv: &Path, cfg: &GlobalConfig, extra: serde_json::Value) -> Result<()> {
    let meta = csv.with_extension("meta.json");
    write_json(&meta, &json!({ "config": cfg, "run": extra }))
}

fn resolve(cfg: &GlobalConfig, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        cfg.output_dir.join(path)
    }
}

/// Parses argv, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("edgecrit: {e}");
            e.exit_code()
        }
    }
}

/// Ok(false) means the command ran but a check failed.
pub fn execute(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => GlobalConfig::load(p)?,
        None => GlobalConfig::default(),
    };
    if let Some(d) = digits_from_env()? {
        cfg.precision.digits = Some(d);
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match cli.command {
        Command::Equilibrium { out } => {
            cfg.validate()?;
            let f = DeformedFamily::from_spec(&cfg.family)?;
            let eq = EquilibriumData::compute(&f, SupportInterval::new(cfg.support_guess.0, cfg.support_guess.1)?)?;
            let k = constants(&eq)?;
            let path = resolve(&cfg, &out);
            write_json(
                &path,
                &json!({
                    "config": cfg,
                    "support": eq.support,
                    "h0": eq.h0.coeffs(),
                    "h1": eq.h1.coeffs(),
                    "h2": eq.h2.coeffs(),
                    "ell": eq.ell,
                    "constants": k,
                }),
            )?;
            println!("support [{}, {}], c = {}, c1 = {}, c2 = {}", eq.support.a, eq.support.b, k.c, k.c1, k.c2);
            Ok(true)
        }
        Command::Pi2 { t, l, mesh, out } => {
            if let Some(t) = t {
                cfg.pi2.t = num(&t)?;
            }
            if let Some(l) = l {
                cfg.pi2.l = num(&l)?;
            }
            if let Some(m) = mesh {
                cfg.pi2.mesh = num(&m)?;
            }
            cfg.validate()?;
            let p = &cfg.pi2;
            let n = (2.0 * p.l / p.mesh).round() as usize + 1;
            let sol = solve_y(p.t, p.l, n, p.tol)?;
            let path = resolve(&cfg, &out);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["s", "y", "y_s", "y_ss", "y_sss", "y_ssss", "h"])?;
            for i in 0..sol.grid.len() {
                w.write_record(
                    [sol.grid[i], sol.y[i], sol.ys[i], sol.yss[i], sol.ysss[i], sol.yssss[i], sol.h[i]]
                        .iter()
                        .map(|x| format!("{x:e}")),
                )?;
            }
            w.flush()?;
            write_meta(&path, &cfg, json!({ "residual_norm": sol.residual_norm, "newton_steps": sol.newton_steps }))?;
            println!("y(0, {}) on {} nodes, residual {:e}", p.t, n, sol.residual_norm);
            Ok(true)
        }
        Command::Kernel { s0, t0, u, v, out } => {
            if let Some(s) = s0 {
                cfg.harness.s0 = num(&s)?;
            }
            if let Some(t) = t0 {
                cfg.harness.t0 = num(&t)?;
            }
            if let Some(u) = u {
                cfg.harness.u_grid = num_list(&u)?;
            }
            if let Some(v) = v {
                cfg.harness.v_grid = num_list(&v)?;
            }
            cfg.validate()?;
            let p = &cfg.pi2;
            let sol = solve_y(cfg.harness.t0, p.l, lax_points(cfg.harness.t0, p.l, p.mesh), p.tol)?;
            let lax = LaxSolver::new(cfg.harness.s0, cfg.harness.t0, &sol, cfg.lax.to_lax())?;
            let grid = lax.kernel_grid(&cfg.harness.u_grid, &cfg.harness.v_grid)?;
            let path = resolve(&cfg, &out);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["u", "v", "k", "est_error"])?;
            for row in &grid {
                for kv in row {
                    w.write_record([kv.u, kv.v, kv.k, kv.est_error].iter().map(|x| format!("{x:e}")))?;
                }
            }
            w.flush()?;
            write_meta(&path, &cfg, json!({ "s0": cfg.harness.s0, "t0": cfg.harness.t0 }))?;
            Ok(true)
        }
        Command::Recurrence { n, s, t, precision, out } => {
            apply_precision(&mut cfg, &precision);
            cfg.validate()?;
            let (s, t) = (num(&s)?, num(&t)?);
            let f = DeformedFamily::from_spec(&cfg.family)?;
            let mut pc = PrecisionConfig::default_for(&f, n, s, t)?;
            if let Some(d) = cfg.precision.digits {
                pc = pc.with_digits(d);
            }
            pc.validate = cfg.precision.validate;
            let tab = recurrence_table(&f, n, s, t, &pc)?;
            let path = resolve(&cfg, &out);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["k", "a_k", "b_k"])?;
            for k in 0..=n {
                let a = if k == 0 { String::new() } else { format!("{:e}", tab.a_at(k)) };
                w.write_record([k.to_string(), a, format!("{:e}", tab.b_at(k))])?;
            }
            w.flush()?;
            write_meta(
                &path,
                &cfg,
                json!({ "n": n, "s": s, "t": t, "precision": pc, "window": tab.window, "validation_delta": tab.validation_delta }),
            )?;
            println!("a_{n} = {}, b_{n} = {}, digits {}", tab.a_at(n), tab.b_at(n), pc.digits);
            Ok(true)
        }
        Command::Verify { suite } => {
            cfg.validate()?;
            let suite = match suite {
                SuiteArg::Fast => Suite::Fast,
                SuiteArg::All => Suite::All,
            };
            let mut ok = true;
            for o in run_suite(suite, &cfg) {
                for c in &o.report.checks {
                    println!(
                        "{} [{}] {}: {:e} (bound {:e})",
                        if c.pass { "PASS" } else { "FAIL" },
                        o.name,
                        c.name,
                        c.value,
                        c.bound
                    );
                }
                println!("-- {} {:.2}s", o.name, o.seconds);
                ok &= o.pass();
            }
            Ok(ok)
        }
        Command::Report { kind, s0, t0, n_list, precision, out_dir } => {
            apply_precision(&mut cfg, &precision);
            if let Some(s) = s0 {
                cfg.harness.s0 = num(&s)?;
            }
            if let Some(t) = t0 {
                cfg.harness.t0 = num(&t)?;
            }
            if let Some(list) = n_list {
                cfg.harness.n_list = list
                    .split(',')
                    .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad n {x:?}"))))
                    .collect::<Result<Vec<_>>>()?;
            }
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            cfg.validate()?;
            let e = cfg.experiment();
            let ctx = build_context(&e)?;
            let (rep, name) = match kind {
                ReportKind::Recurrence => (recurrence_experiment_with(&e, &ctx)?, "recurrence"),
                ReportKind::Kernel => (kernel_experiment_with(&e, &ctx)?, "kernel"),
                ReportKind::Bulk => (bulk_and_airy_experiment_with(&e, &ctx)?, "bulk_and_airy"),
            };
            emit_report(&rep, &cfg.output_dir.join(name))?;
            for c in &rep.checks.checks {
                println!("{} {}: {:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            Ok(rep.all_pass())
        }
    }
}
