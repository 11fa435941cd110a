use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use homeadv::error::{Error, ErrorKind, Result};
use homeadv::match_data::{group_by_season, Season};
use homeadv::pipeline::{
    self, Dataset, RunConfig, SeasonFilter, DEFAULT_SEED, DEFAULT_TRIALS, ESTIMATES_FILE,
    TESTS_BY_LEAGUE_FILE, TESTS_OVERALL_FILE,
};
use homeadv::rating_engine::{self, FitConfig};
use homeadv::rolling;
use homeadv::stats::{self, CorrelationKind};
use homeadv::win_calibration::FOOTBALL_UNITS;

#[derive(Parser, Debug)]
#[command(name = "homeadv", version, about = "Home advantage from rolling team-rating fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate input files and print per-season match counts.
    Ingest(Common),
    /// Fit ratings and home advantage on a single window.
    Rate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        league: String,
        #[arg(long)]
        season: String,
        /// Last matchweek of the window; the whole season when omitted.
        #[arg(long)]
        end_matchweek: Option<u32>,
    },
    /// Rolling home-advantage estimates.
    Series(Common),
    /// Rank-sum tests between attendance classes of an estimates file.
    Test {
        #[command(flatten)]
        common: Common,
        /// Estimates CSV; defaults to `<out>/estimates.csv`.
        #[arg(long)]
        estimates: Option<PathBuf>,
    },
    /// Full pipeline: every table plus the text report.
    Report(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` file with defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    matches: Option<PathBuf>,
    #[arg(long)]
    calendar: Option<PathBuf>,
    /// Comma-separated league identifiers.
    #[arg(long)]
    leagues: Option<String>,
    /// `S1..S2` range or comma-separated season labels.
    #[arg(long)]
    seasons: Option<String>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    units: Option<u32>,
    #[arg(long, conflicts_with = "beta_from_data")]
    beta: Option<f64>,
    #[arg(long = "beta-from-data")]
    beta_from_data: bool,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// pearson or spearman.
    #[arg(long)]
    correlation: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("invalid value `{raw}` for {key}")))
}

impl Common {
    /// Merges the config file (if any) under the command-line flags.
    fn resolve(&self, needs_inputs: bool) -> Result<RunConfig> {
        let file: BTreeMap<String, String> = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|_| {
                    Error::Config(format!("config file `{}` cannot be read", path.display()))
                })?;
                pipeline::parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        const KNOWN: [&str; 15] = [
            "matches", "calendar", "leagues", "seasons", "width", "alpha", "max-iters", "tol",
            "units", "beta", "beta-from-data", "trials", "seed", "correlation", "out",
        ];
        if let Some(unknown) = file.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown config key `{unknown}`")));
        }
        let from_file = |key: &str| file.get(key).map(String::as_str);

        let path = |flag: &Option<PathBuf>, key: &str| -> Option<PathBuf> {
            flag.clone().or_else(|| from_file(key).map(PathBuf::from))
        };
        let matches = path(&self.matches, "matches");
        let calendar = path(&self.calendar, "calendar");
        if needs_inputs && (matches.is_none() || calendar.is_none()) {
            return Err(Error::Config("--matches and --calendar are required".into()));
        }

        let mut config = RunConfig::new(
            matches.unwrap_or_default(),
            calendar.unwrap_or_default(),
            path(&self.out, "out").unwrap_or_else(|| PathBuf::from("out")),
        );

        macro_rules! pick {
            ($flag:expr, $key:literal) => {
                match (&$flag, from_file($key)) {
                    (Some(v), _) => Some(v.clone()),
                    (None, Some(raw)) => Some(parse_value($key, raw)?),
                    (None, None) => None,
                }
            };
        }

        if let Some(leagues) = pick!(self.leagues, "leagues") {
            let leagues: String = leagues;
            config.leagues = Some(leagues.split(',').map(|l| l.trim().to_string()).collect());
        }
        if let Some(seasons) = pick!(self.seasons, "seasons") {
            let seasons: String = seasons;
            config.seasons = Some(SeasonFilter::parse(&seasons)?);
        }
        config.width = pick!(self.width, "width").unwrap_or(rolling::DEFAULT_WIDTH);
        let defaults = FitConfig::default();
        config.fit = FitConfig {
            step_size: pick!(self.alpha, "alpha").unwrap_or(defaults.step_size),
            max_iterations: pick!(self.max_iters, "max-iters").unwrap_or(defaults.max_iterations),
            convergence_tolerance: pick!(self.tol, "tol").unwrap_or(defaults.convergence_tolerance),
            initial_rating: defaults.initial_rating,
        };
        config.units = pick!(self.units, "units").unwrap_or(FOOTBALL_UNITS);
        config.beta = if self.beta_from_data {
            None
        } else if self.beta.is_some() {
            self.beta
        } else if from_file("beta-from-data") == Some("true") {
            None
        } else {
            from_file("beta").map(|raw| parse_value("beta", raw)).transpose()?
        };
        config.trials = pick!(self.trials, "trials").unwrap_or(DEFAULT_TRIALS);
        config.seed = pick!(self.seed, "seed").unwrap_or(DEFAULT_SEED);
        if let Some(kind) = pick!(self.correlation, "correlation") {
            let kind: String = kind;
            config.correlation = match kind.as_str() {
                "pearson" => CorrelationKind::Pearson,
                "spearman" => CorrelationKind::Spearman,
                other => {
                    return Err(Error::Config(format!(
                        "unknown correlation `{other}` (pearson|spearman)"
                    )))
                }
            };
        }
        if needs_inputs {
            config.validate()?;
        }
        Ok(config)
    }

    fn out_given(&self) -> bool {
        self.out.is_some()
    }
}

fn load(config: &RunConfig) -> Result<Dataset> {
    Ok(Dataset::load(&config.matches, &config.calendar)?
        .filtered(config.leagues.as_deref(), config.seasons.as_ref()))
}

fn ingest(common: &Common) -> Result<()> {
    let config = common.resolve(true)?;
    let dataset = load(&config)?;
    let mut out = io::stdout().lock();
    let w = |e: io::Error| Error::io("<stdout>", e);
    writeln!(out, "league,season,teams,total_matches,normal_matches,closed_matches").map_err(w)?;
    for s in dataset.summaries()? {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.league, s.season, s.teams, s.total_matches, s.normal_matches, s.closed_matches
        )
        .map_err(w)?;
    }
    Ok(())
}

fn rate(common: &Common, league: &str, season: &str, end: Option<u32>) -> Result<()> {
    let config = common.resolve(true)?;
    let dataset = load(&config)?;
    let season = Season::parse(season).map_err(|e| Error::Config(e.to_string()))?;
    let groups = group_by_season(&dataset.records);
    let records = groups
        .get(&(league.to_string(), season.clone()))
        .ok_or_else(|| Error::InvalidData(format!("no matches for {league} {season}")))?;
    let selected: Vec<_> = match end {
        Some(end) => {
            let start = end.saturating_sub(config.width - 1).max(1);
            records
                .iter()
                .filter(|r| (start..=end).contains(&r.matchweek))
                .cloned()
                .collect()
        }
        None => records.clone(),
    };
    let fit = rating_engine::fit_window(&selected, &config.fit)?;

    let mut out = io::stdout().lock();
    let w = |e: io::Error| Error::io("<stdout>", e);
    writeln!(
        out,
        "# {league} {season}: {} matches, loss {:.6e}, {} iterations, converged {}",
        selected.len(),
        fit.loss,
        fit.iterations,
        fit.converged
    )
    .map_err(w)?;
    writeln!(out, "team,rating").map_err(w)?;
    let mut ratings: Vec<_> = fit.params.ratings.iter().collect();
    ratings.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
    for (team, rating) in ratings {
        writeln!(out, "{team},{rating:.6}").map_err(w)?;
    }
    writeln!(out, "home_adv,{:.6}", fit.params.home_adv).map_err(w)?;
    Ok(())
}

fn series(common: &Common) -> Result<()> {
    let config = common.resolve(true)?;
    let dataset = load(&config)?;
    let output = pipeline::build_series(&dataset, &config)?;
    let mut buf = Vec::new();
    rolling::write_series_csv(&output.estimates, &mut buf)?;
    if common.out_given() {
        pipeline::write_artifacts(
            &config.out,
            &[
                (ESTIMATES_FILE, buf),
                (
                    pipeline::METADATA_FILE,
                    pipeline::metadata_text(&config, &output.calibrations).into_bytes(),
                ),
            ],
        )
    } else {
        io::stdout()
            .lock()
            .write_all(&buf)
            .map_err(|e| Error::io("<stdout>", e))
    }
}

fn test(common: &Common, estimates: Option<&PathBuf>) -> Result<()> {
    let config = common.resolve(false)?;
    let path = estimates
        .cloned()
        .unwrap_or_else(|| config.out.join(ESTIMATES_FILE));
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let series = rolling::read_series_csv(io::BufReader::new(file))?;
    let (overall, by_league) = pipeline::compare_classes(&series)?;
    let mut overall_buf = Vec::new();
    stats::write_test_table(&overall.rows, false, &mut overall_buf)?;
    let mut league_buf = Vec::new();
    stats::write_test_table(&by_league.rows, true, &mut league_buf)?;
    for notice in overall.notices.iter().chain(&by_league.notices) {
        eprintln!("note: {notice}");
    }
    if common.out_given() {
        pipeline::write_artifacts(
            &config.out,
            &[(TESTS_OVERALL_FILE, overall_buf), (TESTS_BY_LEAGUE_FILE, league_buf)],
        )
    } else {
        let mut out = io::stdout().lock();
        out.write_all(&overall_buf)
            .and_then(|_| out.write_all(b"\n"))
            .and_then(|_| out.write_all(&league_buf))
            .map_err(|e| Error::io("<stdout>", e))
    }
}

fn report(common: &Common) -> Result<()> {
    let config = common.resolve(true)?;
    let output = pipeline::run_pipeline(&config)?;
    print!("{}", output.report);
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numeric => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Ingest(common) => ingest(common),
        Command::Rate {
            common,
            league,
            season,
            end_matchweek,
        } => rate(common, league, season, *end_matchweek),
        Command::Series(common) => series(common),
        Command::Test { common, estimates } => test(common, estimates.as_ref()),
        Command::Report(common) => report(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(err.kind()))
        }
    }
}
