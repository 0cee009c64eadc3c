use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gica::measures::{AnalysisInfo, Measure, FULL_BAND};
use gica::restricted::DEFAULT_RESTRICTED_LAG;
use gica::sim::{
    run_confounded_study, simulate, theoretical_profiles, ConfoundedStudyConfig, S2Setting, SimSpec, System,
};
use gica::spectral::{SpectralProfile, DEFAULT_GRID_POINTS};
use gica::surrogate::{run_surrogate_test, Hypothesis, MeasurePipeline, SurrogateConfig, DEFAULT_ALPHA};
use gica::timeseries::{load_pair, write_pair, ColumnSpec, DEFAULT_DETREND_CUTOFF_HZ};
use gica::var::{aic_profile, fit_var, DEFAULT_MAX_ORDER};
use gica::{analyze_model, Band, FrequencyGrid, MeasureReport, MeasureSet};

#[derive(Parser)]
#[command(name = "gica", version, about = "Granger causality, isolation and autonomy of bivariate series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a bivariate AR model to a two-column CSV and report all measures.
    Analyze(AnalyzeArgs),
    /// Write one realization of a simulated system as CSV.
    Simulate(SimulateArgs),
    /// Exact measures of a simulated system from its true parameters.
    Theoretical(TheoreticalArgs),
    /// Averaged estimated profiles over realizations of the confounded system.
    ConfoundedStudy(ConfoundedArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// Sampling frequency in Hz.
    #[arg(long, default_value_t = 1.0)]
    fs: f64,
    /// Columns for X and Y, by 0-based index or header name.
    #[arg(long, default_value = "0,1")]
    columns: ColumnSpec,
    /// High-pass cutoff in Hz, or "off".
    #[arg(long, default_value_t = DEFAULT_DETREND_CUTOFF_HZ.to_string())]
    detrend: String,
    /// Model order: "aic" or a fixed positive integer.
    #[arg(long, default_value = "aic")]
    order: String,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    p_max: usize,
    #[command(flatten)]
    common: MeasureArgs,
    /// Frequency band as NAME:LO:HI in Hz; repeatable. Defaults to VLF and LF.
    #[arg(long = "band")]
    bands: Vec<String>,
    /// Number of surrogate pairs; 0 disables significance testing.
    #[arg(long, default_value_t = 0)]
    surrogates: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = HypothesisArg::Both)]
    hypothesis: HypothesisArg,
    #[arg(long, env = "GICA_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct MeasureArgs {
    /// Lag of the restricted models.
    #[arg(long, default_value_t = DEFAULT_RESTRICTED_LAG)]
    q: usize,
    /// Points of the frequency grid on [0, fs/2].
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid: usize,
    /// Also write every profile as columns of one whitespace-separated
    /// table (plot_data.txt).
    #[arg(long)]
    plot_data: bool,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum HypothesisArg {
    H1,
    H2,
    Both,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq, Debug)]
#[value(rename_all = "snake_case")]
enum SystemArg {
    OpenLoop,
    ClosedLoop,
    Confounded,
    SupplementS2,
}

#[derive(Args, Clone)]
struct SystemArgs {
    #[arg(long, value_enum)]
    system: SystemArg,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Setting of the four-setting system: i, ii, iii or iv.
    #[arg(long)]
    setting: Option<S2Setting>,
}

impl SystemArgs {
    fn system(&self) -> Result<System> {
        Ok(match self.system {
            SystemArg::OpenLoop => System::OpenLoop { b: self.b, c: self.c },
            SystemArg::ClosedLoop => System::ClosedLoop {
                b: self.b,
                c: self.c,
                d: self.d,
            },
            SystemArg::Confounded => System::Confounded { a: self.a, b: self.b },
            SystemArg::SupplementS2 => System::SupplementS2 {
                setting: self
                    .setting
                    .ok_or_else(|| anyhow!("--setting is required for supplement_s2"))?,
            },
        })
    }

    fn with(&self, param: &str, value: f64) -> Result<Self> {
        let mut s = self.clone();
        match param {
            "a" => s.a = value,
            "b" => s.b = value,
            "c" => s.c = value,
            "d" => s.d = value,
            _ => bail!("unknown sweep parameter {param:?}, expected a, b, c or d"),
        }
        Ok(s)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, env = "GICA_SEED", default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TheoreticalArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    common: MeasureArgs,
    /// Parameter to sweep (a, b, c or d).
    #[arg(long, requires = "values")]
    sweep: Option<String>,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', requires = "sweep")]
    values: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfoundedArgs {
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    p_max: usize,
    #[command(flatten)]
    common: MeasureArgs,
    #[arg(long, env = "GICA_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Theoretical(a) => cmd_theoretical(&a),
        Command::ConfoundedStudy(a) => cmd_confounded(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn parse_band(s: &str) -> Result<Band> {
    let parts: Vec<&str> = s.split(':').collect();
    let [name, lo, hi] = parts[..] else {
        bail!("band {s:?} is not of the form NAME:LO:HI");
    };
    let lo: f64 = lo.trim().parse().with_context(|| format!("band {s:?}: lower edge"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("band {s:?}: upper edge"))?;
    Ok(Band::new(name.trim(), lo, hi))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let bands = if args.bands.is_empty() {
        Band::defaults()
    } else {
        args.bands.iter().map(|b| parse_band(b)).collect::<Result<_>>()?
    };
    let cutoff = match args.detrend.as_str() {
        "off" => None,
        v => Some(v.parse::<f64>().with_context(|| format!("invalid --detrend {v:?}"))?),
    };
    let grid = FrequencyGrid::new(args.common.grid, args.fs).context("frequency grid")?;

    let raw = load_pair(&args.input, args.fs, &args.columns).context("loading input")?;
    let pair = raw.preconditioned(cutoff).context("preconditioning")?;

    let (p, aic) = match args.order.as_str() {
        "aic" => {
            let aic = aic_profile(&pair, args.p_max).context("order selection")?;
            let mut best = 0;
            for (i, v) in aic.iter().enumerate() {
                if *v < aic[best] {
                    best = i;
                }
            }
            (best + 1, Some(aic))
        }
        v => (
            v.parse::<usize>()
                .ok()
                .filter(|p| *p > 0)
                .ok_or_else(|| anyhow!("--order must be \"aic\" or a positive integer, got {v:?}"))?,
            None,
        ),
    };
    let model = fit_var(&pair, p).context("fitting the full model")?;
    let set = analyze_model(&model, args.common.q, &grid).context("computing measures")?;
    let mut report = set.report(&bands).context("band integration")?;
    report.analysis = Some(AnalysisInfo {
        n: pair.len(),
        fs: args.fs,
        order: p,
        order_method: if aic.is_some() { "aic".into() } else { "fixed".into() },
        aic,
        q: args.common.q,
        grid_points: args.common.grid,
        detrend_cutoff_hz: cutoff,
        residual_correlation: model.residual_correlation(),
    });

    if args.surrogates > 0 {
        let hyps: &[Hypothesis] = match args.hypothesis {
            HypothesisArg::H1 => &[Hypothesis::H1],
            HypothesisArg::H2 => &[Hypothesis::H2],
            HypothesisArg::Both => &[Hypothesis::H1, Hypothesis::H2],
        };
        let pipeline = MeasurePipeline {
            p,
            q: args.common.q,
            grid,
            bands: bands.clone(),
        };
        for &h in hyps {
            let cfg = SurrogateConfig::new(args.surrogates, args.alpha, args.seed, h)?;
            let verdicts = run_surrogate_test(&pair, &report, &pipeline, &cfg)
                .with_context(|| format!("surrogate testing under {h}"))?;
            report.significance.extend(verdicts);
        }
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_json(&args.out.join("report.json"), &report)?;
    write_json(&args.out.join("model.json"), &model)?;
    write_profiles(&args.out, &set, args.common.plot_data)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", summary_table(&report));
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let system = args.system.system()?;
    let pair = simulate(&SimSpec::new(system, args.n, args.seed)).with_context(|| format!("simulating {system}"))?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_pair(&args.out, &pair)?;
    Ok(())
}

fn theoretical_set(system: &SystemArgs, common: MeasureArgs) -> Result<(System, MeasureSet)> {
    let system = system.system()?;
    let grid = FrequencyGrid::new(common.grid, 1.0)?;
    let set = theoretical_profiles(&system, common.q, &grid).with_context(|| format!("measures of {system}"))?;
    Ok((system, set))
}

fn cmd_theoretical(args: &TheoreticalArgs) -> Result<()> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let Some(param) = &args.sweep else {
        let (_, set) = theoretical_set(&args.system, args.common)?;
        let report = set.report(&Band::defaults())?;
        write_json(&args.out.join("report.json"), &report)?;
        write_profiles(&args.out, &set, args.common.plot_data)?;
        print!("{}", summary_table(&report));
        return Ok(());
    };
    let mut summary = format!("{param},F_xy,F_y,A_y\n");
    for &v in &args.values {
        let (_, set) = theoretical_set(&args.system.with(param, v)?, args.common)?;
        let report = set.report(&Band::defaults())?;
        let dir = args.out.join(format!("{param}_{v}"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join("report.json"), &report)?;
        write_profiles(&dir, &set, args.common.plot_data)?;
        writeln!(summary, "{v},{},{},{}", report.f_xy, report.f_y, report.a_y)?;
    }
    write_text(&args.out.join("sweep.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_confounded(args: &ConfoundedArgs) -> Result<()> {
    let grid = FrequencyGrid::new(args.common.grid, 1.0)?;
    let cfg = ConfoundedStudyConfig {
        a: args.a,
        b: args.b,
        n_runs: args.runs,
        n: args.n,
        seed: args.seed,
        p_max: args.p_max,
        q: args.common.q,
    };
    let study = run_confounded_study(&cfg, &grid).context("confounded study")?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for prof in [&study.gc, &study.gi, &study.ga] {
        write_profile(&args.out.join(format!("{}.csv", prof.name)), prof)?;
    }
    if args.common.plot_data {
        let cols = [("gc", &study.gc), ("gi", &study.gi), ("ga", &study.ga)];
        write_plot_data(&args.out.join("plot_data.txt"), &cols)?;
    }
    let mut orders = String::from("run_order\n");
    for p in &study.orders {
        writeln!(orders, "{p}")?;
    }
    write_text(&args.out.join("orders.csv"), &orders)?;
    let (f_gc, v_gc) = study.gc.argmax();
    let (f_ga, v_ga) = study.ga.argmax();
    println!(
        "runs {} (failed {}), GC peak {:.4} nats at {:.4} Hz, GA peak {:.4} nats at {:.4} Hz",
        study.orders.len(),
        study.failures,
        v_gc,
        f_gc,
        v_ga,
        f_ga
    );
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

fn write_profile(path: &Path, prof: &SpectralProfile) -> Result<()> {
    let mut s = String::from("frequency_hz,value\n");
    for (i, v) in prof.values.iter().enumerate() {
        writeln!(s, "{},{}", prof.grid.hz(i), v)?;
    }
    write_text(path, &s)
}

fn write_profiles(dir: &Path, set: &MeasureSet, plot_data: bool) -> Result<()> {
    let sp = &set.spectra;
    let profiles = [
        ("psd_x", &sp.psd.p_x),
        ("psd_y", &sp.psd.p_y),
        ("dc_driver", &sp.dc.from_driver),
        ("dc_target", &sp.dc.from_target),
        ("gc", &sp.gc),
        ("gi", &sp.gi),
        ("ga", &sp.ga.a),
        ("ga_bar", &sp.ga.a_bar),
        ("h_yy_sq", &sp.ga.h_yy_sq),
        ("g_yy_sq", &sp.ga.g_yy_sq),
    ];
    for (name, prof) in profiles {
        write_profile(&dir.join(format!("{name}.csv")), prof)?;
    }
    if plot_data {
        write_plot_data(&dir.join("plot_data.txt"), &profiles)?;
    }
    Ok(())
}

fn write_plot_data(path: &Path, cols: &[(&str, &SpectralProfile)]) -> Result<()> {
    let mut s = String::from("# frequency_hz");
    for (name, _) in cols {
        write!(s, " {name}")?;
    }
    s.push('\n');
    let grid = cols[0].1.grid;
    for i in 0..grid.len() {
        write!(s, "{}", grid.hz(i))?;
        for (_, prof) in cols {
            write!(s, " {}", prof.values[i])?;
        }
        s.push('\n');
    }
    write_text(path, &s)
}

fn fmt_nats(v: f64) -> String {
    if v == f64::INFINITY {
        "inf (isolated)".to_string()
    } else {
        format!("{v:.4}")
    }
}

fn summary_table(report: &MeasureReport) -> String {
    let bands = report.band_names();
    let mut out = format!("{:<8}", "measure");
    for b in &bands {
        let _ = write!(out, "{b:>18}");
    }
    out.push('\n');
    for m in Measure::ALL {
        let _ = write!(out, "{:<8}", m.name().to_uppercase());
        for b in &bands {
            let v = report.value(m, b).unwrap_or(f64::NAN);
            let mark = report
                .significance
                .iter()
                .find(|s| s.measure == m && &s.band == b)
                .map(|s| if s.significant { "*" } else { " " })
                .unwrap_or(" ");
            let _ = write!(out, "{:>17}{mark}", fmt_nats(v));
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "values in nats; {FULL_BAND} = time domain, bands = band means{}",
        if report.significance.is_empty() { "" } else { "; * significant" }
    );
    out
}
