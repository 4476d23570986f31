use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use prymlab::cli::{
    curve_info, parse_window, prym_search, run, selftest, sweep, Job, JobConfig, SweepCfg, EXIT_CONFIG, EXIT_FAIL,
    EXIT_PASS, EXIT_WINDOW,
};
use prymlab::vseries::{Case, Model};
use prymlab::Error;

#[derive(Parser)]
#[command(name = "prymlab", version, about = "Exact checks on Sato Grassmannians of cyclic covers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Job config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Window `lo:hi`, overriding the config.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Jet degree cap per block of flow times.
    #[arg(long = "jet-cap")]
    jet_cap: Option<u32>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent checks.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the checks listed in a config.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Rerun a config along a growing schedule of windows, caps and depths.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated windows, e.g. `-30:12,-34:16`.
        #[arg(long, allow_hyphen_values = true)]
        windows: Option<String>,
        /// Comma-separated jet caps.
        #[arg(long)]
        caps: Option<String>,
        /// Comma-separated tangent depths.
        #[arg(long)]
        depths: Option<String>,
    },
    /// Index, genus and gaps of `y^p = f(x)`.
    CurveInfo {
        #[arg(long)]
        p: u32,
        /// Ascending coefficients of `f`, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a single residue identity.
    Identity {
        #[command(flatten)]
        common: Common,
        /// Identity tag, e.g. `SIGMA_R`, `MOD_NR_2`, `CONN_1`.
        #[arg(long)]
        tag: String,
    },
    /// Scan the tail exponent `N` of `U_n` for isotropy.
    PrymSearch {
        #[arg(long)]
        p: u32,
        /// `R` or `NR`.
        #[arg(long, default_value = "R")]
        case: String,
        #[arg(long, default_value_t = 1)]
        n: i64,
        #[arg(long, default_value_t = 4, allow_hyphen_values = true)]
        start: i64,
        #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
        stop: i64,
        #[arg(long, allow_hyphen_values = true, default_value = "-24:12")]
        window: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized property suites.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("serializable report") + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_job(common: &Common, tag: Option<&str>) -> Result<Job, Error> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config: JobConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(w) = &common.window {
        config.window = Some(parse_window(w)?);
    }
    if let Some(d) = common.jet_cap {
        config.jet_cap = d;
    }
    if let Some(t) = tag {
        config.checks = vec![t.to_string()];
    }
    Job::new(config)
}

fn list<T: std::str::FromStr>(s: &Option<String>, what: &str) -> Result<Vec<T>, Error> {
    match s {
        None => Ok(Vec::new()),
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<T>().map_err(|_| Error::Config(format!("bad {what} `{x}`"))))
            .collect(),
    }
}

fn out_path(common: &Common, job: &Job) -> Option<PathBuf> {
    common.out.clone().or_else(|| job.config.output.as_ref().map(PathBuf::from))
}

fn dispatch(cmd: Cmd) -> Result<i32, Error> {
    match cmd {
        Cmd::Check { common } => {
            let job = load_job(&common, None)?;
            let report = run(&job, common.parallel);
            emit(&report, out_path(&common, &job).as_ref())?;
            Ok(report.exit_code())
        }
        Cmd::Identity { common, tag } => {
            let job = load_job(&common, Some(&tag))?;
            let report = run(&job, 1);
            emit(&report, out_path(&common, &job).as_ref())?;
            Ok(report.exit_code())
        }
        Cmd::Sweep { common, windows, caps, depths } => {
            let job = load_job(&common, None)?;
            let mut schedule = job.config.sweep.clone().unwrap_or_default();
            if let Some(w) = &windows {
                schedule.windows = w.split(',').map(parse_window).collect::<Result<_, _>>()?;
            }
            if caps.is_some() {
                schedule.caps = list(&caps, "cap")?;
            }
            if depths.is_some() {
                schedule.depths = list(&depths, "depth")?;
            }
            if schedule == SweepCfg::default() {
                return Err(Error::Config("sweep needs a schedule (config `sweep` or --windows/--caps/--depths)".into()));
            }
            let report = sweep(&job, &schedule, common.parallel)?;
            emit(&report, out_path(&common, &job).as_ref())?;
            Ok(report.outcome.exit_code())
        }
        Cmd::CurveInfo { p, f, out } => {
            let coeffs: Vec<String> = f.split(',').map(|s| s.trim().to_string()).collect();
            let info = curve_info(p, &coeffs).map_err(|e| match e {
                Error::InvalidCurve(m) | Error::Parse(m) => Error::Config(m),
                other => other,
            })?;
            emit(&info, out.as_ref())?;
            Ok(EXIT_PASS)
        }
        Cmd::PrymSearch { p, case, n, start, stop, window, out } => {
            let case = match case.as_str() {
                "R" => Case::Ramified,
                "NR" => Case::NonRamified,
                _ => return Err(Error::Config(format!("case must be R or NR, got `{case}`"))),
            };
            if !prymlab::scalars::is_prime(p) {
                return Err(Error::Config(format!("{p} is not prime")));
            }
            let report = prym_search(&Model::standard(p, case), n, start, stop, parse_window(&window)?)?;
            emit(&report, out.as_ref())?;
            Ok(if report.found.is_some() { EXIT_PASS } else { EXIT_FAIL })
        }
        Cmd::Selftest { seed, cases } => {
            let lines = selftest(seed, cases);
            let mut code = EXIT_PASS;
            for l in &lines {
                println!("{} {} ({} cases){}", if l.pass { "PASS" } else { "FAIL" }, l.suite, l.cases,
                    l.witness.as_ref().map_or(String::new(), |w| format!(": {w}")));
                if !l.pass {
                    code = EXIT_FAIL;
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e @ Error::WindowInsufficient { .. }) => {
            eprintln!("error: {e}");
            EXIT_WINDOW
        }
        Err(e @ (Error::Config(_) | Error::Parse(_) | Error::EmptyWindow { .. })) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    };
    ExitCode::from(code as u8)
}
