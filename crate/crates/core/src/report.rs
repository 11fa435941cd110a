//! Plot-ready tables and the human-readable summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::match_data::{Attendance, MatchRecord};
use crate::rolling::{AttendanceClass, HomeAdvEstimate, REFERENCE_SEASON_START};
use crate::stats::{self, BasicStats, ClassComparison, ComparisonTable};
use crate::win_calibration::ScaleFactor;

/// Label used for groups pooled over every league.
pub const ALL_LEAGUES: &str = "ALL";

pub const BOXPLOT_HEADER: [&str; 8] = ["league", "class", "n", "min", "q1", "median", "q3", "max"];
pub const BASIC_STATS_HEADER: [&str; 5] = [
    "league",
    "period",
    "n_matches",
    "goals_diff_per_match",
    "win_ratio_diff",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotSummary {
    pub league: String,
    pub class: AttendanceClass,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxplotSummary {
    pub fn from_values(league: &str, class: AttendanceClass, values: &[f64]) -> Result<Self> {
        Ok(BoxplotSummary {
            league: league.to_string(),
            class,
            n: values.len(),
            min: stats::quantile(values, 0.0)?,
            q1: stats::quantile(values, 0.25)?,
            median: stats::quantile(values, 0.5)?,
            q3: stats::quantile(values, 0.75)?,
            max: stats::quantile(values, 1.0)?,
        })
    }
}

/// One five-number summary per `(league, class)` group of win-unit home
/// advantage, followed by the groups pooled across leagues.
pub fn emit_boxplot_data(estimates: &[HomeAdvEstimate]) -> Vec<BoxplotSummary> {
    let mut groups: BTreeMap<(String, AttendanceClass), Vec<f64>> = BTreeMap::new();
    for e in estimates {
        groups
            .entry((e.league.clone(), e.attendance_class))
            .or_default()
            .push(e.home_adv_win_units);
        groups
            .entry((ALL_LEAGUES.to_string(), e.attendance_class))
            .or_default()
            .push(e.home_adv_win_units);
    }
    groups
        .iter()
        .filter(|((league, _), _)| league != ALL_LEAGUES)
        .chain(groups.iter().filter(|((league, _), _)| league == ALL_LEAGUES))
        .filter_map(|((league, class), values)| {
            BoxplotSummary::from_values(league, *class, values).ok()
        })
        .collect()
}

fn csv_err(what: &'static str) -> impl Fn(csv::Error) -> Error {
    move |e| Error::InvalidData(format!("writing {what}: {e}"))
}

pub fn write_boxplot_csv<W: Write>(rows: &[BoxplotSummary], sink: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    let err = csv_err("boxplot table");
    wtr.write_record(BOXPLOT_HEADER).map_err(&err)?;
    for r in rows {
        wtr.write_record([
            r.league.clone(),
            r.class.name().to_string(),
            r.n.to_string(),
            format!("{:?}", r.min),
            format!("{:?}", r.q1),
            format!("{:?}", r.median),
            format!("{:?}", r.q3),
            format!("{:?}", r.max),
        ])
        .map_err(&err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidData(format!("writing boxplot table: {e}")))
}

/// Match period used by the descriptive statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MatchPeriod {
    Past,
    Normal,
    Closed,
}

impl MatchPeriod {
    pub fn of(record: &MatchRecord) -> Self {
        if record.season.start_year() < REFERENCE_SEASON_START {
            MatchPeriod::Past
        } else if record.effective_attendance() == Attendance::BehindClosedDoors {
            MatchPeriod::Closed
        } else {
            MatchPeriod::Normal
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MatchPeriod::Past => "Past",
            MatchPeriod::Normal => "Normal",
            MatchPeriod::Closed => "Closed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicStatsRow {
    pub league: String,
    pub period: MatchPeriod,
    pub stats: BasicStats,
}

/// Goal and win-ratio differences per league and period, then pooled.
pub fn basic_stats_table(records: &[MatchRecord]) -> Result<Vec<BasicStatsRow>> {
    let mut groups: BTreeMap<(String, MatchPeriod), Vec<MatchRecord>> = BTreeMap::new();
    for r in records {
        let period = MatchPeriod::of(r);
        groups
            .entry((r.league.clone(), period))
            .or_default()
            .push(r.clone());
        groups
            .entry((ALL_LEAGUES.to_string(), period))
            .or_default()
            .push(r.clone());
    }
    let ordered = groups
        .iter()
        .filter(|((l, _), _)| l != ALL_LEAGUES)
        .chain(groups.iter().filter(|((l, _), _)| l == ALL_LEAGUES));
    ordered
        .map(|((league, period), matches)| {
            Ok(BasicStatsRow {
                league: league.clone(),
                period: *period,
                stats: stats::basic_stats(matches, &format!("{league} {}", period.name()))?,
            })
        })
        .collect()
}

pub fn write_basic_stats_csv<W: Write>(rows: &[BasicStatsRow], sink: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    let err = csv_err("basic statistics");
    wtr.write_record(BASIC_STATS_HEADER).map_err(&err)?;
    for r in rows {
        wtr.write_record([
            r.league.clone(),
            r.period.name().to_string(),
            r.stats.n_matches.to_string(),
            format!("{:?}", r.stats.goals_diff_per_match),
            format!("{:?}", r.stats.win_ratio_diff),
        ])
        .map_err(&err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidData(format!("writing basic statistics: {e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeagueCalibration {
    pub league: String,
    pub scoring_intensity: f64,
    pub scale: ScaleFactor,
    pub n_gaps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeBalance {
    pub league: String,
    pub season: String,
    pub correlation: std::result::Result<f64, String>,
}

/// Everything the text report draws on.
pub struct ReportInputs<'a> {
    pub estimates: &'a [HomeAdvEstimate],
    pub calibrations: &'a [LeagueCalibration],
    pub overall: &'a ComparisonTable,
    pub by_league: &'a ComparisonTable,
    pub basic: &'a [BasicStatsRow],
    pub home_balance: &'a [HomeBalance],
}

fn write_rows(out: &mut String, rows: &[ClassComparison]) {
    let _ = writeln!(
        out,
        "  {:<10} {:<8} {:<8} {:>6} {:>6} {:>12} {:>8} {:>12}",
        "league", "X", "Y", "N_X", "N_Y", "p-value", "z-value", "ranksum"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "  {:<10} {:<8} {:<8} {:>6} {:>6} {:>12.3e} {:>8.3} {:>12}",
            r.league.as_deref().unwrap_or(ALL_LEAGUES),
            r.sample_x.name(),
            r.sample_y.name(),
            r.result.n_x,
            r.result.n_y,
            r.result.p_value,
            r.result.z_value,
            r.result.rank_sum
        );
    }
}

/// Renders the summary report. Output depends only on the inputs.
pub fn emit_report(inputs: &ReportInputs<'_>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Home advantage by attendance class");
    let _ = writeln!(out, "==================================");
    let _ = writeln!(out);

    let _ = writeln!(out, "Win-probability scale per league");
    for c in inputs.calibrations {
        let _ = writeln!(
            out,
            "  {:<16} beta = {:.6}  D* = {:.6}  (objective {:.6}, {} rating gaps)",
            c.league, c.scoring_intensity, c.scale.value, c.scale.objective, c.n_gaps
        );
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Median home advantage (win units)");
    let mut leagues: Vec<&str> = inputs.estimates.iter().map(|e| e.league.as_str()).collect();
    leagues.sort_unstable();
    leagues.dedup();
    leagues.push(ALL_LEAGUES);
    for league in leagues {
        let mut cells = Vec::new();
        for class in AttendanceClass::ALL {
            let values: Vec<f64> = inputs
                .estimates
                .iter()
                .filter(|e| (league == ALL_LEAGUES || e.league == league) && e.attendance_class == class)
                .map(|e| e.home_adv_win_units)
                .collect();
            cells.push(match stats::median(&values) {
                Ok(m) => format!("{}={:+.4} (n={})", class.name(), m, values.len()),
                Err(_) => format!("{}=absent", class.name()),
            });
        }
        let _ = writeln!(out, "  {:<16} {}", league, cells.join("  "));
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Rank-sum tests, all leagues");
    write_rows(&mut out, &inputs.overall.rows);
    let _ = writeln!(out);
    let _ = writeln!(out, "Rank-sum tests by league");
    write_rows(&mut out, &inputs.by_league.rows);
    for notice in inputs.overall.notices.iter().chain(&inputs.by_league.notices) {
        let _ = writeln!(out, "  note: {notice}");
    }
    let _ = writeln!(out);

    let significant: Vec<&ClassComparison> = inputs
        .overall
        .rows
        .iter()
        .chain(&inputs.by_league.rows)
        .filter(|r| r.result.p_value < 0.05)
        .collect();
    let _ = writeln!(out, "Significant differences (p < 0.05)");
    if significant.is_empty() {
        let _ = writeln!(out, "  none");
    }
    for r in significant {
        let _ = writeln!(
            out,
            "  {} {} vs {}: p = {:.3e}, z = {:.3}",
            r.league.as_deref().unwrap_or(ALL_LEAGUES),
            r.sample_x.name(),
            r.sample_y.name(),
            r.result.p_value,
            r.result.z_value
        );
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Basic statistics");
    let _ = writeln!(
        out,
        "  {:<16} {:<8} {:>8} {:>12} {:>12}",
        "league", "period", "matches", "goal diff", "win diff"
    );
    for r in inputs.basic {
        let _ = writeln!(
            out,
            "  {:<16} {:<8} {:>8} {:>12.4} {:>12.4}",
            r.league,
            r.period.name(),
            r.stats.n_matches,
            r.stats.goals_diff_per_match,
            r.stats.win_ratio_diff
        );
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Closed-period home matches vs final standing");
    if inputs.home_balance.is_empty() {
        let _ = writeln!(out, "  no closed matches");
    }
    for h in inputs.home_balance {
        match &h.correlation {
            Ok(r) => {
                let _ = writeln!(out, "  {:<16} {:<8} r = {:+.4}", h.league, h.season, r);
            }
            Err(why) => {
                let _ = writeln!(out, "  {:<16} {:<8} undefined ({why})", h.league, h.season);
            }
        }
    }
    out
}
