use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rfm_core::derangement::{
    count_derangements, enumerate_derangements_until, sample_derangement, DEFAULT_ENUMERATION_CAP,
};
use rfm_core::rfm::{
    expected_family_mean, rfm_test, Center, Mode, RfmConfig, RfmResult, StatisticKind,
};
use rfm_core::stats::{
    kde_density, kde_density_weighted, pearson_r, shapiro_wilk, t_statistic, t_two_sided_p,
    Bandwidth, KdeConfig, PairedSample, SwResult,
};

use crate::error::{CliError, Result};
use crate::input::{read_table, read_values};
use crate::report::{
    write_density_csv, write_distribution_csv, write_json, ClassicalTest, ConfigInfo, FamilyInfo,
    InputInfo, KdeInfo, KdeSource, OutputReport, SCHEMA_VERSION, TOOL_NAME, TOOL_VERSION,
};

/// Draws used for the normality check when the family values were not kept.
const SHAPIRO_FALLBACK_DRAWS: u64 = 5000;

#[derive(Debug, Parser)]
#[command(
    name = "rfm",
    version,
    about = "Permutation tests restricted to derangements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the number of derangements of n elements
    Count { n: usize },
    /// Print every derangement of 1..n in lexicographic order, one per line
    Enumerate {
        n: usize,
        /// Stop after this many lines
        #[arg(long)]
        limit: Option<u64>,
        /// Largest n accepted without complaint
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        max_n: usize,
    },
    /// Print uniformly drawn derangements of 1..n
    Sample {
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the random family test on a two-column CSV file
    Test(TestArgs),
    /// Gaussian kernel density of a list of values (one per line)
    Kde(KdeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Slope,
    Pearson,
    Cov,
}

impl From<StatArg> for StatisticKind {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Slope => StatisticKind::OlsSlope,
            StatArg::Pearson => StatisticKind::PearsonR,
            StatArg::Cov => StatisticKind::Covariance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CenterArg {
    Mean,
    Zero,
}

fn parse_bandwidth(s: &str) -> std::result::Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("silverman") {
        return Ok(Bandwidth::Silverman);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
        _ => Err(format!(
            "expected 'silverman' or a positive number, got {s:?}"
        )),
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Two-column CSV (x, y); a non-numeric first row is read as a header
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = StatArg::Slope)]
    pub stat: StatArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Number of Monte Carlo draws (mc mode only, default 100000)
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json: full report; csv: histogram and density grid in long format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Include a kernel density estimate of the family distribution
    #[arg(long)]
    pub kde: bool,
    /// Include a Shapiro-Wilk normality check of the family distribution
    #[arg(long)]
    pub shapiro: bool,
    #[arg(long, default_value_t = 256)]
    pub bins: usize,
    /// Center of the two-sided test
    #[arg(long, value_enum, default_value_t = CenterArg::Mean)]
    pub center: CenterArg,
    /// Worker threads; results do not depend on this
    #[arg(long, env = "RFM_THREADS")]
    pub threads: Option<usize>,
    /// Largest n for exact enumeration
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub max_exact_n: usize,
    /// Keep individual family values up to this many
    #[arg(long, default_value_t = 1 << 24)]
    pub retention_cap: usize,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// 'silverman' or a positive number
    #[arg(long, default_value = "silverman", value_parser = parse_bandwidth)]
    pub kde_bandwidth: Bandwidth,
    #[arg(long, default_value_t = 512)]
    pub kde_grid: usize,
    /// Record wall-clock duration in the report (makes it non-reproducible)
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    /// File with one value per line
    pub values: PathBuf,
    /// 'silverman' or a positive number
    #[arg(long, default_value = "silverman", value_parser = parse_bandwidth)]
    pub bandwidth: Bandwidth,
    /// Number of grid points
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run<W: Write>(cli: Cli, stdout: &mut W) -> Result<()> {
    match cli.command {
        Command::Count { n } => cmd_count(n, stdout),
        Command::Enumerate { n, limit, max_n } => cmd_enumerate(n, limit, max_n, stdout),
        Command::Sample { n, count, seed } => cmd_sample(n, count, seed, stdout),
        Command::Test(args) => cmd_test(&args, stdout),
        Command::Kde(args) => cmd_kde(&args, stdout),
    }
}

pub fn cmd_count<W: Write>(n: usize, out: &mut W) -> Result<()> {
    let count = count_derangements(n)?;
    writeln!(out, "{count}")?;
    Ok(())
}

pub fn cmd_enumerate<W: Write>(
    n: usize,
    limit: Option<u64>,
    max_n: usize,
    out: &mut W,
) -> Result<()> {
    if limit == Some(0) {
        return Ok(());
    }
    let mut written = 0u64;
    let mut failure = None;
    enumerate_derangements_until(n, max_n, |d| {
        if let Err(e) = writeln!(out, "{d}") {
            failure = Some(e);
            return ControlFlow::Break(());
        }
        written += 1;
        if limit.is_some_and(|l| written >= l) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

pub fn cmd_sample<W: Write>(n: usize, count: u64, seed: u64, out: &mut W) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        writeln!(out, "{}", sample_derangement(n, &mut rng)?)?;
    }
    Ok(())
}

fn config_from(args: &TestArgs) -> Result<RfmConfig> {
    let mode = match (args.mode, args.samples) {
        (ModeArg::Exact, Some(_)) => {
            return Err(CliError::Usage(
                "--samples only applies with --mode mc".into(),
            ));
        }
        (ModeArg::Exact, None) => Mode::Exact,
        (ModeArg::Mc, samples) => Mode::MonteCarlo {
            samples: samples.unwrap_or(100_000),
        },
    };
    Ok(RfmConfig {
        statistic: args.stat.into(),
        mode,
        seed: args.seed,
        retention_cap: args.retention_cap,
        histogram_bins: args.bins,
        max_exact_n: args.max_exact_n,
        center: match args.center {
            CenterArg::Mean => Center::FamilyMean,
            CenterArg::Zero => Center::Zero,
        },
        threads: args.threads,
    })
}

fn classical_test(sample: &PairedSample) -> Option<ClassicalTest> {
    let r = pearson_r(sample).ok()?;
    let t = t_statistic(r, sample.len()).ok()?;
    let df = (sample.len() - 2) as u32;
    Some(ClassicalTest {
        r,
        t,
        df,
        p_two_sided: t_two_sided_p(t, df),
    })
}

fn family_values(sample: &PairedSample, result: &RfmResult, cfg: &RfmConfig) -> Result<Vec<f64>> {
    if let Some(values) = result.family.retained() {
        return Ok(values.to_vec());
    }
    info!("family values not retained; drawing {SHAPIRO_FALLBACK_DRAWS} derangements for the normality check");
    let draw_cfg = RfmConfig {
        mode: Mode::MonteCarlo {
            samples: SHAPIRO_FALLBACK_DRAWS,
        },
        retention_cap: SHAPIRO_FALLBACK_DRAWS as usize,
        ..cfg.clone()
    };
    let draws = rfm_test(sample, &draw_cfg)?;
    Ok(draws.family.retained().unwrap_or_default().to_vec())
}

fn shapiro_check(
    sample: &PairedSample,
    result: &RfmResult,
    cfg: &RfmConfig,
) -> Result<Option<SwResult>> {
    let values = family_values(sample, result, cfg)?;
    let drawn = result.family.retained().is_none();
    match shapiro_wilk(&values, cfg.seed) {
        Ok(mut sw) => {
            sw.subsampled |= drawn;
            Ok(Some(sw))
        }
        Err(e) => {
            warn!("Shapiro-Wilk check skipped: {e}");
            Ok(None)
        }
    }
}

fn kde_estimate(result: &RfmResult, args: &TestArgs) -> Option<KdeInfo> {
    let cfg = KdeConfig {
        bandwidth: args.kde_bandwidth,
        grid_points: args.kde_grid,
        grid_range: None,
    };
    let (source, grid) = match result.family.retained() {
        Some(values) => (KdeSource::Values, kde_density(values, &cfg)),
        None => {
            let points: Vec<(f64, f64)> = result
                .family
                .histogram()
                .midpoints()
                .map(|(m, c)| (m, c as f64))
                .collect();
            (
                KdeSource::HistogramMidpoints,
                kde_density_weighted(&points, &cfg),
            )
        }
    };
    match grid {
        Ok(grid) => Some(KdeInfo::new(source, grid)),
        Err(e) => {
            warn!("density estimate skipped: {e}");
            None
        }
    }
}

pub fn build_report(args: &TestArgs) -> Result<OutputReport> {
    let cfg = config_from(args)?;
    if !args.delimiter.is_ascii() {
        return Err(CliError::Usage(
            "--delimiter must be a single ASCII character".into(),
        ));
    }
    let table = read_table(&args.input, args.delimiter as u8)?;
    let n = table.len();
    let columns = table.header.clone();
    let sample = PairedSample::new(table.x, table.y)?;

    let start = Instant::now();
    let result = rfm_test(&sample, &cfg)?;
    let elapsed = start.elapsed();
    info!(
        "{} over {} family members: observed {}, family mean {}, sd {}, percentile {:.3}",
        cfg.statistic.name(),
        result.family_size,
        result.observed,
        result.family.mean(),
        result.family.sd(),
        result.percentile_of_observed
    );

    let shapiro = if args.shapiro {
        shapiro_check(&sample, &result, &cfg)?
    } else {
        None
    };
    let kde = if args.kde {
        kde_estimate(&result, args)
    } else {
        None
    };

    Ok(OutputReport {
        schema_version: SCHEMA_VERSION,
        tool: TOOL_NAME.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        input: InputInfo {
            path: args.input.display().to_string(),
            n,
            columns,
        },
        config: ConfigInfo {
            statistic: cfg.statistic,
            mode: cfg.mode,
            seed: cfg.seed,
            center: cfg.center,
            histogram_bins: cfg.histogram_bins,
            retention_cap: cfg.retention_cap,
            max_exact_n: cfg.max_exact_n,
        },
        observed: result.observed,
        center: result.center,
        expected_family_mean: expected_family_mean(&sample, cfg.statistic)?,
        family_size: result.family_size,
        p_upper: result.p_upper,
        p_lower: result.p_lower,
        p_two_sided: result.p_two_sided,
        percentile_of_observed: result.percentile_of_observed,
        family: FamilyInfo::from_result(&result),
        histogram: result.family.histogram().clone(),
        classical: classical_test(&sample),
        kde,
        shapiro_wilk: shapiro,
        duration_ms: args.timing.then_some(elapsed.as_secs_f64() * 1e3),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn cmd_test<W: Write>(args: &TestArgs, stdout: &mut W) -> Result<()> {
    let report = build_report(args)?;
    let emit = |w: &mut dyn Write| -> Result<()> {
        match args.format {
            FormatArg::Json => write_json(&report, w)?,
            FormatArg::Csv => write_distribution_csv(&report, w)?,
        }
        Ok(())
    };
    match &args.out {
        Some(path) => {
            let mut file = create(path)?;
            emit(&mut file)?;
            file.flush()?;
        }
        None => emit(stdout)?,
    }
    Ok(())
}

pub fn cmd_kde<W: Write>(args: &KdeArgs, stdout: &mut W) -> Result<()> {
    let values = read_values(&args.values)?;
    let cfg = KdeConfig {
        bandwidth: args.bandwidth,
        grid_points: args.grid,
        grid_range: None,
    };
    let grid = kde_density(&values, &cfg)?;
    info!("bandwidth {}", grid.bandwidth);
    match &args.out {
        Some(path) => {
            let mut file = create(path)?;
            write_density_csv(&grid, &mut file)?;
            file.flush()?;
        }
        None => write_density_csv(&grid, stdout)?,
    }
    Ok(())
}
