use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use stdiff::adaptive::{build_schedule, verify_schedule};
use stdiff::harness::{parse_observable, run_file, sweep};
use stdiff::maximal::{
    builtin_family, strong_type_campaign, summarize, weak_type_campaign, ConstantKind, MaximalOperator, MaximalSetting,
    RatioRow, Truncation,
};
use stdiff::numeric::Z95;
use stdiff::spectral::{frequency_tag, gauss_coefficient, gauss_partial_sums, EigenTag};
use stdiff::systems::BernoulliWeights;
use stdiff::{Angle, MetricSpec, Observable, PartitionSequence, SystemSpec};

const OUT_ENV: &str = "STDIFF_OUT_DIR";

#[derive(Parser)]
#[command(name = "stdiff", version, about = "Spatial-temporal differentiation experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (defaults to $STDIFF_OUT_DIR, then ./stdiff-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run every config in a directory.
    Sweep { dir: PathBuf },
    /// Estimate maximal-operator constants.
    Constants(ConstantsArgs),
    /// Tabulate Gauss coefficients against their partial sums.
    Gauss(GaussArgs),
    /// Build and verify an adaptive decay schedule.
    Adaptive(AdaptiveArgs),
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value = "hl")]
    operator: String,
    /// Strong-type exponents; weak type (1,1) when omitted.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.5])]
    epsilon_grid: Vec<f64>,
    /// `builtin`, or a substring selecting builtin members.
    #[arg(long, default_value = "builtin")]
    family: String,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "rotation:sqrt2_minus_1")]
    system: String,
    /// `torus` or `ultrametric`.
    #[arg(long, default_value = "torus")]
    metric: String,
    #[arg(long, default_value_t = 64)]
    k_cap: usize,
    #[arg(long, default_value_t = 8)]
    levels: usize,
}

#[derive(Args)]
struct GaussArgs {
    #[arg(long, default_value_t = 100_000)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    /// Angles `t` of `lambda = e(t)`: fractions `p/q` or named irrationals.
    #[arg(long, value_delimiter = ',', default_values_t = ["0/1", "1/2", "1/4", "1/3", "sqrt2_minus_1", "golden"].map(String::from))]
    angles: Vec<String>,
}

#[derive(Args)]
struct AdaptiveArgs {
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "doubling")]
    system: String,
    /// Inline TOML table body, e.g. `kind = "indicator", lo = 0.0, hi = 0.5`.
    #[arg(long, default_value = r#"kind = "indicator", lo = 0.0, hi = 0.5"#)]
    observable: String,
}

fn parse_system(text: &str) -> anyhow::Result<SystemSpec> {
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    Ok(match kind {
        "identity" => SystemSpec::Identity,
        "doubling" => SystemSpec::DoublingMap,
        "rotation" => SystemSpec::CircleRotation(Angle::parse(arg, None)?),
        "product" => SystemSpec::ProductRotationIdentity(Angle::parse(arg, None)?),
        "shift" => SystemSpec::ShiftBernoulli(BernoulliWeights::uniform(arg.parse().context("shift:<symbols>")?)?),
        other => bail!("unknown system `{other}` (identity, doubling, rotation:<angle>, product:<angle>, shift:<n>)"),
    })
}

fn out_dir(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("stdiff-out"))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| path.display().to_string())?))
}

fn cmd_run(config: &Path, out: &Path) -> anyhow::Result<bool> {
    let (report, csv) = run_file(config, out)?;
    print!("{}", report.emit_summary());
    println!("  csv: {}", csv.display());
    Ok(report.passed())
}

fn cmd_sweep(dir: &Path, out: &Path) -> anyhow::Result<bool> {
    let results = sweep(dir, out)?;
    if results.is_empty() {
        bail!("no .toml configs in {}", dir.display());
    }
    let mut all = true;
    for (path, result) in results {
        let (report, csv) = result.with_context(|| path.display().to_string())?;
        print!("{}", report.emit_summary());
        println!("  csv: {}", csv.display());
        all &= report.passed();
    }
    Ok(all)
}

fn cmd_constants(a: &ConstantsArgs, out: &Path) -> anyhow::Result<bool> {
    let op = MaximalOperator::parse(&a.operator)?;
    let system = parse_system(&a.system)?;
    let (metric, truncation) = match a.metric.as_str() {
        "torus" => (MetricSpec::torus(1)?, Truncation::torus(0.5, a.levels, a.k_cap)?),
        "ultrametric" => {
            let partitions = match &system {
                SystemSpec::ShiftBernoulli(w) => PartitionSequence::cylinders(w.clone(), a.levels),
                _ => PartitionSequence::dyadic(a.levels),
            };
            (MetricSpec::PartitionUltrametric(partitions), Truncation::ultrametric(a.levels, a.k_cap)?)
        }
        other => bail!("unknown metric `{other}` (torus, ultrametric)"),
    };
    let family: Vec<(String, Observable)> = builtin_family()
        .into_iter()
        .filter(|(name, _)| a.family == "builtin" || name.contains(&a.family))
        .collect();
    if family.is_empty() {
        bail!("family `{}` selects no members", a.family);
    }
    let sample = system.sample(a.samples, a.seed);
    let setting = MaximalSetting { system, metric, truncation };
    let (kind, rows): (ConstantKind, Vec<RatioRow>) = if a.p.is_empty() {
        (ConstantKind::WeakOneOne, weak_type_campaign(op, &setting, &family, &a.epsilon_grid, &sample)?)
    } else {
        let p = a.p.iter().copied().fold(f64::MIN, f64::max);
        (ConstantKind::StrongP(p), strong_type_campaign(op, &setting, &family, &a.p, &sample)?)
    };
    let path = out.join("constants.csv");
    let mut w = create(&path)?;
    writeln!(w, "operator,family_member,epsilon_or_p,ratio,stderr,truncation_desc")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{},\"{}\"",
            r.operator.name(),
            r.member,
            r.parameter,
            r.estimate.ratio,
            r.estimate.standard_error,
            r.truncation
        )?;
    }
    w.flush()?;
    if let Some(c) = summarize(kind, &rows) {
        println!(
            "{} {:?}: largest ratio {:.4} (se {:.4}) at {} parameter {}, n = {}, {}",
            op.name(),
            c.kind,
            c.value,
            c.standard_error,
            c.maximizer,
            c.parameter,
            c.sample_size,
            c.truncation
        );
    }
    println!("csv: {}", path.display());
    Ok(true)
}

fn angle_tag(text: &str) -> anyhow::Result<EigenTag> {
    let angle = Angle::parse(text, None)?;
    frequency_tag(&SystemSpec::CircleRotation(angle), 1)?.context("angle has no eigenvalue tag")
}

fn cmd_gauss(a: &GaussArgs, out: &Path) -> anyhow::Result<bool> {
    let path = out.join("gauss.csv");
    let mut w = create(&path)?;
    writeln!(w, "tag,exact_re,exact_im,partial_re,partial_im,gap")?;
    let mut ok = true;
    for text in &a.angles {
        let tag = angle_tag(text)?;
        let partial = gauss_partial_sums(&tag, &[a.k])[0];
        match gauss_coefficient(&tag, a.k, a.tol) {
            Ok(c) => writeln!(
                w,
                "{},{},{},{},{},{}",
                tag.label(),
                c.value.re,
                c.value.im,
                partial.re,
                partial.im,
                (partial - c.value).norm()
            )?,
            Err(e) => {
                ok = false;
                eprintln!("{}: {e}", tag.label());
                writeln!(w, "{},,,{},{},", tag.label(), partial.re, partial.im)?;
            }
        }
    }
    w.flush()?;
    print!("{}", std::fs::read_to_string(&path)?);
    Ok(ok)
}

fn cmd_adaptive(a: &AdaptiveArgs, out: &Path) -> anyhow::Result<bool> {
    let system = parse_system(&a.system)?;
    let table: toml::Value = toml::from_str(&format!("observable = {{ {} }}", a.observable)).context("--observable")?;
    let f = parse_observable(&table["observable"], "observable")?;
    let metric = MetricSpec::torus(1)?;
    let sample = system.sample(a.samples, a.seed);
    let schedule = build_schedule(&system, &metric, &f, a.kmax, &sample)?;
    let rows = verify_schedule(&system, &metric, &f, &schedule, &sample)?;

    let sched_path = out.join("schedule.csv");
    let mut w = create(&sched_path)?;
    writeln!(w, "k,delta_k,empirical_bad_mass,confidence")?;
    for k in 1..=schedule.k_max {
        let bad = schedule.bad_mass[k - 1];
        writeln!(w, "{},{},{},{}", k, schedule.deltas[k - 1], bad.estimate(), bad.wilson(Z95).1)?;
    }
    w.flush()?;

    let ver_path = out.join("verification.csv");
    let mut w = create(&ver_path)?;
    writeln!(w, "x,k,lhs,rhs_bound,pass")?;
    for r in &rows {
        writeln!(w, "{},{},{},{},{}", sample[r.x_index].repr(), r.k, r.lhs, r.rhs, r.pass)?;
    }
    w.flush()?;

    let failures = rows.iter().filter(|r| !r.pass).count();
    let certified = schedule.certified_from.iter().filter(|c| c.is_some()).count();
    println!(
        "schedule k <= {}: {certified}/{} points certified, {} checks, {failures} failures",
        schedule.k_max,
        sample.len(),
        rows.len()
    );
    println!("csv: {}, {}", sched_path.display(), ver_path.display());
    Ok(failures == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = out_dir(&cli.out);
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config, &out),
        Command::Sweep { dir } => cmd_sweep(dir, &out),
        Command::Constants(a) => cmd_constants(a, &out),
        Command::Gauss(a) => cmd_gauss(a, &out),
        Command::Adaptive(a) => cmd_adaptive(a, &out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
