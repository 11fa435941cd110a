//! End-to-end run: ingest, rolling fits, scale calibration, tests and
//! artifact emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::match_data::{
    self, group_by_season, parse_calendar_file, parse_match_file, resolve_attendance, Attendance,
    CalendarSet, MatchRecord, SeasonSummary,
};
use crate::rating_engine::FitConfig;
use crate::report::{
    self, BasicStatsRow, BoxplotSummary, HomeBalance, LeagueCalibration, ReportInputs,
};
use crate::rolling::{self, HomeAdvEstimate, WindowFit, DEFAULT_WIDTH};
use crate::stats::{self, ComparisonTable, CorrelationKind, Grouping};
use crate::win_calibration::{self, ScoringProcessConfig, FOOTBALL_UNITS};

pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const BOXPLOT_FILE: &str = "boxplot.csv";
pub const TESTS_OVERALL_FILE: &str = "tests_overall.csv";
pub const TESTS_BY_LEAGUE_FILE: &str = "tests_by_league.csv";
pub const BASIC_STATS_FILE: &str = "basic_stats.csv";
pub const METADATA_FILE: &str = "metadata.txt";
pub const REPORT_FILE: &str = "report.txt";

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_200_614;

/// Inclusive season range by starting year, or an explicit list of labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeasonFilter {
    Range { first: i32, last: i32 },
    List(Vec<String>),
}

impl SeasonFilter {
    /// Parses `2010/11..2019/20` or `2018/19,2019/20`.
    pub fn parse(text: &str) -> Result<Self> {
        if let Some((a, b)) = text.split_once("..") {
            let first = match_data::Season::parse(a)
                .map_err(|e| Error::Config(e.to_string()))?
                .start_year();
            let last = match_data::Season::parse(b)
                .map_err(|e| Error::Config(e.to_string()))?
                .start_year();
            if first > last {
                return Err(Error::Config(format!("empty season range `{text}`")));
            }
            return Ok(SeasonFilter::Range { first, last });
        }
        let list: Vec<String> = text
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if list.is_empty() {
            return Err(Error::Config("empty season filter".into()));
        }
        Ok(SeasonFilter::List(list))
    }

    pub fn accepts(&self, season: &match_data::Season) -> bool {
        match self {
            SeasonFilter::Range { first, last } => (*first..=*last).contains(&season.start_year()),
            SeasonFilter::List(labels) => labels.iter().any(|l| l == season.label()),
        }
    }

    fn describe(&self) -> String {
        match self {
            SeasonFilter::Range { first, last } => format!("{first}..{last}"),
            SeasonFilter::List(labels) => labels.join(","),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub matches: PathBuf,
    pub calendar: PathBuf,
    pub leagues: Option<Vec<String>>,
    pub seasons: Option<SeasonFilter>,
    pub width: u32,
    pub fit: FitConfig,
    pub units: u32,
    /// `None` derives the scoring intensity from each league's goals.
    pub beta: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub correlation: CorrelationKind,
}

impl RunConfig {
    pub fn new(matches: impl Into<PathBuf>, calendar: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            matches: matches.into(),
            calendar: calendar.into(),
            leagues: None,
            seasons: None,
            width: DEFAULT_WIDTH,
            fit: FitConfig::default(),
            units: FOOTBALL_UNITS,
            beta: None,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            out: out.into(),
            correlation: CorrelationKind::Pearson,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, path) in [("matches file", &self.matches), ("calendar file", &self.calendar)] {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "{what} `{}` does not exist",
                    path.display()
                )));
            }
        }
        if self.width == 0 {
            return Err(Error::Config("window width must be at least 1".into()));
        }
        self.fit.validate()?;
        if self.units == 0 || self.trials == 0 {
            return Err(Error::Config("units and trials must be positive".into()));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::Config(format!("beta must lie in (0, 1], got {beta}")));
            }
        }
        Ok(())
    }

    /// Flat `key = value` echo of the configuration, one entry per line.
    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("matches".into(), self.matches.display().to_string()),
            ("calendar".into(), self.calendar.display().to_string()),
            (
                "leagues".into(),
                self.leagues.as_ref().map(|l| l.join(",")).unwrap_or_else(|| "all".into()),
            ),
            (
                "seasons".into(),
                self.seasons.as_ref().map(SeasonFilter::describe).unwrap_or_else(|| "all".into()),
            ),
            ("width".into(), self.width.to_string()),
            ("alpha".into(), format!("{:?}", self.fit.step_size)),
            ("max-iters".into(), self.fit.max_iterations.to_string()),
            ("tol".into(), format!("{:?}", self.fit.convergence_tolerance)),
            ("units".into(), self.units.to_string()),
            (
                "beta".into(),
                self.beta.map(|b| format!("{b:?}")).unwrap_or_else(|| "from-data".into()),
            ),
            ("trials".into(), self.trials.to_string()),
            ("seed".into(), self.seed.to_string()),
            (
                "correlation".into(),
                match self.correlation {
                    CorrelationKind::Pearson => "pearson".into(),
                    CorrelationKind::Spearman => "spearman".into(),
                },
            ),
        ]
    }
}

/// Reads a flat `key = value` config file. Blank lines and lines starting
/// with `#` are ignored. Keys are the long CLI flag names without dashes.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            // Bare keys act as boolean switches.
            None => (line, "true"),
        };
        if key.is_empty() {
            return Err(Error::Config(format!("config line {}: missing key", i + 1)));
        }
        values.insert(key.to_string(), value.to_string());
    }
    Ok(values)
}

/// Ingested, attendance-resolved matches and their calendars.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<MatchRecord>,
    pub calendars: CalendarSet,
}

impl Dataset {
    pub fn load(matches: &Path, calendar: &Path) -> Result<Self> {
        let match_file = fs::File::open(matches).map_err(|e| Error::io(matches, e))?;
        let records = parse_match_file(std::io::BufReader::new(match_file))
            .map_err(|e| e.context(format!("reading {}", matches.display())))?;
        let calendar_file = fs::File::open(calendar).map_err(|e| Error::io(calendar, e))?;
        let calendars = parse_calendar_file(std::io::BufReader::new(calendar_file))
            .map_err(|e| e.context(format!("reading {}", calendar.display())))?;
        Dataset::new(records, calendars)
    }

    pub fn new(mut records: Vec<MatchRecord>, calendars: CalendarSet) -> Result<Self> {
        resolve_attendance(&mut records, &calendars)?;
        Ok(Dataset { records, calendars })
    }

    pub fn filtered(&self, leagues: Option<&[String]>, seasons: Option<&SeasonFilter>) -> Self {
        Dataset {
            records: self
                .records
                .iter()
                .filter(|r| leagues.is_none_or(|ls| ls.contains(&r.league)))
                .filter(|r| seasons.is_none_or(|s| s.accepts(&r.season)))
                .cloned()
                .collect(),
            calendars: self.calendars.clone(),
        }
    }

    pub fn summaries(&self) -> Result<Vec<SeasonSummary>> {
        group_by_season(&self.records)
            .into_iter()
            .map(|((league, season), recs)| {
                match_data::summarize_season(&recs, self.calendars.require(&league, &season)?)
            })
            .collect()
    }

    pub fn leagues(&self) -> Vec<String> {
        let mut leagues: Vec<String> = self.records.iter().map(|r| r.league.clone()).collect();
        leagues.sort();
        leagues.dedup();
        leagues
    }
}

/// Fits every window of every season of one league, in season order.
pub fn fit_league(dataset: &Dataset, league: &str, fit: &FitConfig, width: u32) -> Result<Vec<WindowFit>> {
    let seasons: Vec<_> = group_by_season(&dataset.records)
        .into_iter()
        .filter(|((l, _), _)| l == league)
        .collect();
    let per_season = seasons
        .par_iter()
        .map(|((l, season), recs)| {
            let calendar = dataset.calendars.require(l, season)?;
            rolling::fit_windows(recs, calendar, fit, width)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_season.into_iter().flatten().collect())
}

/// Rolling estimates and per-league scale factors.
#[derive(Debug, Clone)]
pub struct SeriesOutput {
    pub estimates: Vec<HomeAdvEstimate>,
    pub calibrations: Vec<LeagueCalibration>,
}

pub fn build_series(dataset: &Dataset, config: &RunConfig) -> Result<SeriesOutput> {
    let leagues = dataset.leagues();
    if leagues.is_empty() {
        return Err(Error::EmptyInput("no matches left after filtering"));
    }
    let per_league = leagues
        .par_iter()
        .map(|league| -> Result<(Vec<HomeAdvEstimate>, LeagueCalibration)> {
            let fits = fit_league(dataset, league, &config.fit, config.width)
                .map_err(|e| e.context(format!("rating stage, {league}")))?;
            let league_records: Vec<MatchRecord> = dataset
                .records
                .iter()
                .filter(|r| &r.league == league)
                .cloned()
                .collect();
            let beta = match config.beta {
                Some(b) => b,
                None => win_calibration::beta_from_matches(&league_records, config.units)
                    .map_err(|e| e.context(format!("calibration stage, {league}")))?,
            };
            let gaps: Vec<f64> = fits.iter().flat_map(|f| f.rating_gaps.iter().copied()).collect();
            let scoring = ScoringProcessConfig {
                units: config.units,
                scoring_intensity: beta,
                trials: config.trials,
                seed: config.seed,
            };
            let scale = win_calibration::calibrate_scale(&gaps, &scoring)
                .map_err(|e| e.context(format!("calibration stage, {league}")))?;
            let estimates = fits.iter().map(|f| f.to_estimate(&scale)).collect();
            Ok((
                estimates,
                LeagueCalibration {
                    league: league.clone(),
                    scoring_intensity: beta,
                    scale,
                    n_gaps: gaps.len(),
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut estimates = Vec::new();
    let mut calibrations = Vec::new();
    for (e, c) in per_league {
        estimates.extend(e);
        calibrations.push(c);
    }
    rolling::sort_series(&mut estimates);
    Ok(SeriesOutput {
        estimates,
        calibrations,
    })
}

pub fn compare_classes(estimates: &[HomeAdvEstimate]) -> Result<(ComparisonTable, ComparisonTable)> {
    Ok((
        stats::compare_all_classes(estimates, Grouping::Overall)?,
        stats::compare_all_classes(estimates, Grouping::PerLeague)?,
    ))
}

/// Correlation of closed-period home-match counts with final standings for
/// every season that had closed matches.
pub fn home_balance(dataset: &Dataset, kind: CorrelationKind) -> Vec<HomeBalance> {
    group_by_season(&dataset.records)
        .into_iter()
        .filter_map(|((league, season), recs)| {
            let closed: Vec<MatchRecord> = recs
                .iter()
                .filter(|r| r.effective_attendance() == Attendance::BehindClosedDoors)
                .cloned()
                .collect();
            if closed.is_empty() {
                return None;
            }
            let correlation = stats::compute_standings(&recs)
                .and_then(|standings| stats::home_balance_correlation(&closed, &standings, kind))
                .map_err(|e| e.to_string());
            Some(HomeBalance {
                league,
                season: season.label().to_string(),
                correlation,
            })
        })
        .collect()
}

/// All artifacts of a full run, rendered but not yet written.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub estimates: Vec<HomeAdvEstimate>,
    pub calibrations: Vec<LeagueCalibration>,
    pub boxplots: Vec<BoxplotSummary>,
    pub overall: ComparisonTable,
    pub by_league: ComparisonTable,
    pub basic: Vec<BasicStatsRow>,
    pub home_balance: Vec<HomeBalance>,
    pub report: String,
}

pub fn analyze(dataset: &Dataset, config: &RunConfig) -> Result<PipelineOutput> {
    let series = build_series(dataset, config)?;
    let boxplots = report::emit_boxplot_data(&series.estimates);
    let (overall, by_league) =
        compare_classes(&series.estimates).map_err(|e| e.context("test stage"))?;
    let basic = report::basic_stats_table(&dataset.records).map_err(|e| e.context("statistics stage"))?;
    let home_balance = home_balance(dataset, config.correlation);
    let report = report::emit_report(&ReportInputs {
        estimates: &series.estimates,
        calibrations: &series.calibrations,
        overall: &overall,
        by_league: &by_league,
        basic: &basic,
        home_balance: &home_balance,
    });
    Ok(PipelineOutput {
        estimates: series.estimates,
        calibrations: series.calibrations,
        boxplots,
        overall,
        by_league,
        basic,
        home_balance,
        report,
    })
}

fn render<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn metadata_text(config: &RunConfig, calibrations: &[LeagueCalibration]) -> String {
    let mut lines = vec![
        format!("tool = {}", env!("CARGO_PKG_NAME")),
        format!("version = {}", env!("CARGO_PKG_VERSION")),
        "rng = chacha8, one stream per trial index".to_string(),
    ];
    lines.extend(config.echo().into_iter().map(|(k, v)| format!("{k} = {v}")));
    for c in calibrations {
        lines.push(format!("beta.{} = {:?}", c.league, c.scoring_intensity));
        lines.push(format!("scale.{} = {:?}", c.league, c.scale.value));
    }
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

/// Writes each file to a temporary name in `dir` and renames it into place.
pub fn write_artifacts(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, bytes) in files {
        let target = dir.join(name);
        let staging = dir.join(format!(".{name}.tmp"));
        fs::write(&staging, bytes).map_err(|e| Error::io(&staging, e))?;
        fs::rename(&staging, &target).map_err(|e| Error::io(&target, e))?;
    }
    Ok(())
}

pub fn render_artifacts(config: &RunConfig, output: &PipelineOutput) -> Result<Vec<(&'static str, Vec<u8>)>> {
    Ok(vec![
        (
            ESTIMATES_FILE,
            render(|b| rolling::write_series_csv(&output.estimates, b))?,
        ),
        (
            BOXPLOT_FILE,
            render(|b| report::write_boxplot_csv(&output.boxplots, b))?,
        ),
        (
            TESTS_OVERALL_FILE,
            render(|b| stats::write_test_table(&output.overall.rows, false, b))?,
        ),
        (
            TESTS_BY_LEAGUE_FILE,
            render(|b| stats::write_test_table(&output.by_league.rows, true, b))?,
        ),
        (
            BASIC_STATS_FILE,
            render(|b| report::write_basic_stats_csv(&output.basic, b))?,
        ),
        (
            METADATA_FILE,
            metadata_text(config, &output.calibrations).into_bytes(),
        ),
        (REPORT_FILE, output.report.clone().into_bytes()),
    ])
}

/// Runs the whole analysis and writes every artifact into `config.out`.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let dataset = Dataset::load(&config.matches, &config.calendar)
        .map_err(|e| e.context("ingest stage"))?
        .filtered(config.leagues.as_deref(), config.seasons.as_ref());
    let output = analyze(&dataset, config)?;
    let files = render_artifacts(config, &output)?;
    write_artifacts(&config.out, &files).map_err(|e| e.context("output stage"))?;
    Ok(output)
}
