//! Per-matchweek home advantage from sliding matchweek windows.
//!
//! For every matchweek `m ≥ w` of a season, the matches of matchweeks
//! `m - w + 1 ..= m` are fitted on their own. Windows never span two
//! seasons. Each estimate is labelled by the attendance make-up of its
//! window.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::match_data::{classify_attendance, Attendance, LeagueCalendar, MatchRecord, Season};
use crate::rating_engine::{FitConfig, FitResult, ScoreRatioProblem};
use crate::win_calibration::ScaleFactor;

pub const DEFAULT_WIDTH: u32 = 5;
/// First season whose windows are compared against earlier ones.
pub const REFERENCE_SEASON_START: i32 = 2019;

pub const SERIES_HEADER: [&str; 7] = [
    "league",
    "season",
    "end_matchweek",
    "class",
    "home_adv_raw",
    "home_adv_win_units",
    "n_matches",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttendanceClass {
    Past,
    Normal,
    Mixed,
    Closed,
}

impl AttendanceClass {
    pub const ALL: [AttendanceClass; 4] = [
        AttendanceClass::Past,
        AttendanceClass::Normal,
        AttendanceClass::Mixed,
        AttendanceClass::Closed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttendanceClass::Past => "Past",
            AttendanceClass::Normal => "Normal",
            AttendanceClass::Mixed => "Mixed",
            AttendanceClass::Closed => "Closed",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Class of a window given its season and how many of its matches were
    /// played with and without spectators. `None` for an empty window.
    pub fn from_composition(
        season: &Season,
        with_spectators: usize,
        behind_closed_doors: usize,
    ) -> Option<Self> {
        if with_spectators + behind_closed_doors == 0 {
            return None;
        }
        Some(if season.start_year() < REFERENCE_SEASON_START {
            AttendanceClass::Past
        } else if with_spectators == 0 {
            AttendanceClass::Closed
        } else if behind_closed_doors == 0 {
            AttendanceClass::Normal
        } else {
            AttendanceClass::Mixed
        })
    }
}

impl fmt::Display for AttendanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub league: String,
    pub season: Season,
    pub start_matchweek: u32,
    pub end_matchweek: u32,
    /// Matches with attendance resolved against the calendar.
    pub matches: Vec<MatchRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeAdvEstimate {
    pub league: String,
    pub season: Season,
    pub end_matchweek: u32,
    pub home_adv_raw: f64,
    pub home_adv_win_units: f64,
    pub attendance_class: AttendanceClass,
    pub n_matches: usize,
}

/// A fitted window before conversion to win-probability units.
#[derive(Debug, Clone)]
pub struct WindowFit {
    pub league: String,
    pub season: Season,
    pub end_matchweek: u32,
    pub attendance_class: AttendanceClass,
    pub fit: FitResult,
    /// `r_home + h - r_away` for every match of the window.
    pub rating_gaps: Vec<f64>,
}

impl WindowFit {
    pub fn to_estimate(&self, scale: &ScaleFactor) -> HomeAdvEstimate {
        HomeAdvEstimate {
            league: self.league.clone(),
            season: self.season.clone(),
            end_matchweek: self.end_matchweek,
            home_adv_raw: self.fit.params.home_adv,
            home_adv_win_units: self.fit.params.home_adv * scale.value,
            attendance_class: self.attendance_class,
            n_matches: self.fit.residuals.len(),
        }
    }
}

/// Windows ending at matchweeks `width ..= last played matchweek`.
pub fn enumerate_windows(
    records: &[MatchRecord],
    calendar: &LeagueCalendar,
    width: u32,
) -> Result<Vec<Window>> {
    if width == 0 {
        return Err(Error::Config("window width must be at least 1".into()));
    }
    let mut resolved = Vec::with_capacity(records.len());
    for record in records {
        let mut r = record.clone();
        r.attendance = Some(classify_attendance(record, calendar)?);
        resolved.push(r);
    }
    let Some(last) = resolved.iter().map(|r| r.matchweek).max() else {
        return Ok(Vec::new());
    };

    Ok((width..=last)
        .map(|end| {
            let start = end + 1 - width;
            Window {
                league: calendar.league.clone(),
                season: calendar.season.clone(),
                start_matchweek: start,
                end_matchweek: end,
                matches: resolved
                    .iter()
                    .filter(|r| (start..=end).contains(&r.matchweek))
                    .cloned()
                    .collect(),
            }
        })
        .collect())
}

pub fn classify_window(window: &Window, season: &Season) -> Result<AttendanceClass> {
    let closed = window
        .matches
        .iter()
        .filter(|m| m.effective_attendance() == Attendance::BehindClosedDoors)
        .count();
    AttendanceClass::from_composition(season, window.matches.len() - closed, closed).ok_or_else(
        || {
            Error::InvalidData(format!(
                "{} {} window ending at matchweek {} has no matches",
                window.league, window.season, window.end_matchweek
            ))
        },
    )
}

/// Window classes implied by a calendar alone, assuming every matchweek up
/// to `played_through` (default: the full calendar) was played.
pub fn plan_window_classes(
    calendar: &LeagueCalendar,
    width: u32,
    played_through: Option<u32>,
) -> Vec<(u32, AttendanceClass)> {
    let last = played_through.unwrap_or(calendar.matchweeks);
    if width == 0 {
        return Vec::new();
    }
    (width..=last)
        .filter_map(|end| {
            let (mut open, mut closed) = (0, 0);
            for mw in end + 1 - width..=end {
                match calendar.attendance_of(mw) {
                    Attendance::Spectators => open += 1,
                    Attendance::BehindClosedDoors => closed += 1,
                }
            }
            AttendanceClass::from_composition(&calendar.season, open, closed).map(|c| (end, c))
        })
        .collect()
}

fn fit_one(window: &Window, config: &FitConfig) -> Result<Option<WindowFit>> {
    if window.matches.is_empty() {
        return Ok(None);
    }
    let class = classify_window(window, &window.season)?;
    let identify = |e: Error| {
        e.context(format!(
            "fitting {} {} window {}-{}",
            window.league, window.season, window.start_matchweek, window.end_matchweek
        ))
    };
    let fit = ScoreRatioProblem::from_matches(&window.matches)
        .and_then(|p| p.fit(config))
        .map_err(identify)?;
    let rating_gaps = window
        .matches
        .iter()
        .map(|m| fit.params.rating_gap(&m.home_team, &m.away_team))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(WindowFit {
        league: window.league.clone(),
        season: window.season.clone(),
        end_matchweek: window.end_matchweek,
        attendance_class: class,
        fit,
        rating_gaps,
    }))
}

/// Fits every window of one league season. Output is ordered by end
/// matchweek; windows with no matches are skipped.
pub fn fit_windows(
    records: &[MatchRecord],
    calendar: &LeagueCalendar,
    config: &FitConfig,
    width: u32,
) -> Result<Vec<WindowFit>> {
    config.validate()?;
    let windows = enumerate_windows(records, calendar, width)?;
    let fits = windows
        .par_iter()
        .map(|w| fit_one(w, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(fits.into_iter().flatten().collect())
}

pub fn estimate_series(
    records: &[MatchRecord],
    calendar: &LeagueCalendar,
    config: &FitConfig,
    width: u32,
    scale: &ScaleFactor,
) -> Result<Vec<HomeAdvEstimate>> {
    Ok(fit_windows(records, calendar, config, width)?
        .iter()
        .map(|f| f.to_estimate(scale))
        .collect())
}

/// Orders estimates by league, season and end matchweek.
pub fn sort_series(series: &mut [HomeAdvEstimate]) {
    series.sort_by(|a, b| {
        (a.league.as_str(), &a.season, a.end_matchweek).cmp(&(
            b.league.as_str(),
            &b.season,
            b.end_matchweek,
        ))
    });
}

pub fn write_series_csv<W: Write>(series: &[HomeAdvEstimate], sink: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    let err = |e: csv::Error| Error::InvalidData(format!("writing series: {e}"));
    wtr.write_record(SERIES_HEADER).map_err(err)?;
    for e in series {
        wtr.write_record([
            e.league.clone(),
            e.season.label().to_string(),
            e.end_matchweek.to_string(),
            e.attendance_class.name().to_string(),
            format!("{:?}", e.home_adv_raw),
            format!("{:?}", e.home_adv_win_units),
            e.n_matches.to_string(),
        ])
        .map_err(err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidData(format!("writing series: {e}")))
}

pub fn read_series_csv<R: Read>(source: R) -> Result<Vec<HomeAdvEstimate>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut rows = rdr.records();
    let parse_err = |line: u64, message: String| Error::Parse { line, message };
    let header = rows
        .next()
        .ok_or(Error::EmptyInput("series file is empty"))?
        .map_err(|e| parse_err(0, e.to_string()))?;
    if header.iter().map(str::trim).collect::<Vec<_>>() != SERIES_HEADER {
        return Err(parse_err(1, format!("expected header `{}`", SERIES_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| parse_err(0, e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != SERIES_HEADER.len() {
            return Err(parse_err(line, format!("expected 7 columns, found {}", row.len())));
        }
        let num = |i: usize| -> Result<f64> {
            row[i]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("`{}` is not a number", &row[i])))
        };
        out.push(HomeAdvEstimate {
            league: row[0].trim().to_string(),
            season: Season::parse(&row[1]).map_err(|e| parse_err(line, e.to_string()))?,
            end_matchweek: row[2]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad matchweek `{}`", &row[2])))?,
            attendance_class: AttendanceClass::parse(row[3].trim())
                .ok_or_else(|| parse_err(line, format!("unknown class `{}`", &row[3])))?,
            home_adv_raw: num(4)?,
            home_adv_win_units: num(5)?,
            n_matches: row[6]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad match count `{}`", &row[6])))?,
        });
    }
    Ok(out)
}

/// Leagues present in a series, sorted.
pub fn leagues_of(series: &[HomeAdvEstimate]) -> BTreeSet<String> {
    series.iter().map(|e| e.league.clone()).collect()
}
