//! Match records, league calendars and attendance classification.
//!
//! Match files are UTF-8 CSV with the header
//!
//! ```text
//! league,season,matchweek,date,home_team,away_team,home_goals,away_goals[,attendance]
//! ```
//!
//! where the optional `attendance` column holds `normal` or `closed`.
//! Calendar files carry one row per league season:
//!
//! ```text
//! league,season,matchweeks,first_closed_matchweek,teams
//! ```
//!
//! with an empty `first_closed_matchweek` when the whole season was played
//! with spectators.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const MATCH_HEADER: [&str; 8] = [
    "league",
    "season",
    "matchweek",
    "date",
    "home_team",
    "away_team",
    "home_goals",
    "away_goals",
];
pub const ATTENDANCE_COLUMN: &str = "attendance";
pub const CALENDAR_HEADER: [&str; 5] = [
    "league",
    "season",
    "matchweeks",
    "first_closed_matchweek",
    "teams",
];

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attendance {
    Spectators,
    BehindClosedDoors,
}

impl Attendance {
    pub fn token(self) -> &'static str {
        match self {
            Attendance::Spectators => "normal",
            Attendance::BehindClosedDoors => "closed",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "normal" => Some(Attendance::Spectators),
            "closed" => Some(Attendance::BehindClosedDoors),
            _ => None,
        }
    }
}

/// Season label such as `2019/20`, ordered by its starting year.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Season {
    label: String,
    start_year: i32,
}

impl Season {
    /// Accepts `2019/20`, `2019-20`, `2019/2020` or a bare `2019`.
    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        let head = label.split(['/', '-']).next().unwrap_or_default();
        let start_year = head
            .parse::<i32>()
            .ok()
            .filter(|_| head.len() == 4)
            .ok_or_else(|| Error::InvalidData(format!("unrecognized season label `{label}`")))?;
        Ok(Season {
            label: label.to_string(),
            start_year,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }
}

impl Ord for Season {
    fn cmp(&self, other: &Self) -> Ordering {
        self.start_year
            .cmp(&other.start_year)
            .then_with(|| self.label.cmp(&other.label))
    }
}

impl PartialOrd for Season {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// One played match.
///
/// `attendance` is `Some` when the source file states it explicitly or after
/// [`resolve_attendance`] has applied the calendar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchRecord {
    pub league: String,
    pub season: Season,
    pub matchweek: u32,
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    pub home_goals: u32,
    pub away_goals: u32,
    pub attendance: Option<Attendance>,
}

impl MatchRecord {
    /// Declared attendance, defaulting to spectators.
    pub fn effective_attendance(&self) -> Attendance {
        self.attendance.unwrap_or(Attendance::Spectators)
    }

    pub fn goal_difference(&self) -> i64 {
        i64::from(self.home_goals) - i64::from(self.away_goals)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeagueCalendar {
    pub league: String,
    pub season: Season,
    pub matchweeks: u32,
    pub first_closed_matchweek: Option<u32>,
    pub teams: u32,
}

impl LeagueCalendar {
    pub fn validate(&self) -> Result<()> {
        if self.matchweeks == 0 {
            return Err(Error::InvalidData(format!(
                "{} {}: matchweek count must be positive",
                self.league, self.season
            )));
        }
        if let Some(first) = self.first_closed_matchweek {
            if first == 0 || first > self.matchweeks {
                return Err(Error::InvalidData(format!(
                    "{} {}: first closed matchweek {first} outside 1..={}",
                    self.league, self.season, self.matchweeks
                )));
            }
        }
        Ok(())
    }

    /// Number of closed matchweeks when the season was completed.
    pub fn closed_matchweeks(&self) -> u32 {
        self.first_closed_matchweek
            .map_or(0, |first| self.matchweeks - first + 1)
    }

    /// Calendar-implied attendance of a matchweek.
    pub fn attendance_of(&self, matchweek: u32) -> Attendance {
        match self.first_closed_matchweek {
            Some(first) if matchweek >= first => Attendance::BehindClosedDoors,
            _ => Attendance::Spectators,
        }
    }

    fn describe(&self) -> String {
        format!("{} {}", self.league, self.season)
    }
}

/// Calendars keyed by `(league, season)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CalendarSet {
    calendars: BTreeMap<(String, Season), LeagueCalendar>,
}

impl CalendarSet {
    pub fn new(calendars: impl IntoIterator<Item = LeagueCalendar>) -> Result<Self> {
        let mut set = CalendarSet::default();
        for calendar in calendars {
            calendar.validate()?;
            let key = (calendar.league.clone(), calendar.season.clone());
            if set.calendars.insert(key, calendar.clone()).is_some() {
                return Err(Error::InvalidData(format!(
                    "duplicate calendar for {}",
                    calendar.describe()
                )));
            }
        }
        Ok(set)
    }

    pub fn get(&self, league: &str, season: &Season) -> Option<&LeagueCalendar> {
        self.calendars.get(&(league.to_string(), season.clone()))
    }

    pub fn require(&self, league: &str, season: &Season) -> Result<&LeagueCalendar> {
        self.get(league, season)
            .ok_or_else(|| Error::InvalidData(format!("no calendar for {league} {season}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &LeagueCalendar> {
        self.calendars.values()
    }

    pub fn len(&self) -> usize {
        self.calendars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calendars.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeasonSummary {
    pub league: String,
    pub season: Season,
    pub total_matches: usize,
    pub normal_matches: usize,
    pub closed_matches: usize,
    pub teams: u32,
}

fn normalize_id(raw: &str) -> String {
    raw.trim().to_string()
}

fn parse_field<T: std::str::FromStr>(raw: &str, what: &str, line: u64) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        message: format!("{what} `{}` is not a valid integer", raw.trim()),
    })
}

fn parse_goals(raw: &str, what: &str, line: u64) -> Result<u32> {
    let goals: i64 = parse_field(raw, what, line)?;
    if goals < 0 {
        return Err(Error::Parse {
            line,
            message: format!("{what} must be non-negative, got {goals}"),
        });
    }
    u32::try_from(goals).map_err(|_| Error::Parse {
        line,
        message: format!("{what} {goals} out of range"),
    })
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source)
}

/// Parses a match file. Records come back in file order.
pub fn parse_match_file<R: Read>(source: R) -> Result<Vec<MatchRecord>> {
    let mut rdr = reader(source);
    let mut rows = rdr.records();

    let header = match rows.next() {
        None => return Err(Error::EmptyInput("match file is empty")),
        Some(row) => row.map_err(csv_error)?,
    };
    let columns: Vec<&str> = header.iter().map(str::trim).collect();
    let has_attendance = if columns == MATCH_HEADER {
        false
    } else if columns.len() == 9 && columns[..8] == MATCH_HEADER && columns[8] == ATTENDANCE_COLUMN
    {
        true
    } else {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "unexpected header `{}`; expected `{}[,{ATTENDANCE_COLUMN}]`",
                columns.join(","),
                MATCH_HEADER.join(",")
            ),
        });
    };
    let width = if has_attendance { 9 } else { 8 };

    let mut records = Vec::new();
    for row in rows {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} columns, found {}", row.len()),
            });
        }

        let season = Season::parse(&row[1]).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let matchweek: u32 = parse_field(&row[2], "matchweek", line)?;
        if matchweek == 0 {
            return Err(Error::Parse {
                line,
                message: "matchweek must be at least 1".into(),
            });
        }
        let date = NaiveDate::parse_from_str(row[3].trim(), DATE_FORMAT).map_err(|_| {
            Error::Parse {
                line,
                message: format!("date `{}` is not YYYY-MM-DD", row[3].trim()),
            }
        })?;
        let home_team = normalize_id(&row[4]);
        let away_team = normalize_id(&row[5]);
        if home_team.is_empty() || away_team.is_empty() {
            return Err(Error::Parse {
                line,
                message: "team identifier is empty".into(),
            });
        }
        if home_team == away_team {
            return Err(Error::Parse {
                line,
                message: format!("team `{home_team}` cannot play itself"),
            });
        }
        let home_goals = parse_goals(&row[6], "home_goals", line)?;
        let away_goals = parse_goals(&row[7], "away_goals", line)?;
        let attendance = if has_attendance {
            let token = row[8].trim();
            if token.is_empty() {
                None
            } else {
                Some(Attendance::from_token(token).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("unknown attendance token `{token}` (expected normal|closed)"),
                })?)
            }
        } else {
            None
        };

        records.push(MatchRecord {
            league: normalize_id(&row[0]),
            season,
            matchweek,
            date,
            home_team,
            away_team,
            home_goals,
            away_goals,
            attendance,
        });
    }

    if records.is_empty() {
        return Err(Error::EmptyInput("match file has no data rows"));
    }
    Ok(records)
}

/// Writes records in the match file format. The attendance column is emitted
/// only when at least one record carries an explicit attendance.
pub fn write_match_file<W: Write>(records: &[MatchRecord], sink: W) -> Result<()> {
    let with_attendance = records.iter().any(|r| r.attendance.is_some());
    let mut wtr = csv::Writer::from_writer(sink);
    let write_err = |e: csv::Error| Error::InvalidData(format!("writing match file: {e}"));

    let mut header: Vec<&str> = MATCH_HEADER.to_vec();
    if with_attendance {
        header.push(ATTENDANCE_COLUMN);
    }
    wtr.write_record(&header).map_err(write_err)?;
    for r in records {
        let mut row = vec![
            r.league.clone(),
            r.season.label().to_string(),
            r.matchweek.to_string(),
            r.date.format(DATE_FORMAT).to_string(),
            r.home_team.clone(),
            r.away_team.clone(),
            r.home_goals.to_string(),
            r.away_goals.to_string(),
        ];
        if with_attendance {
            row.push(r.attendance.map(Attendance::token).unwrap_or("").to_string());
        }
        wtr.write_record(&row).map_err(write_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidData(format!("writing match file: {e}")))
}

pub fn parse_calendar_file<R: Read>(source: R) -> Result<CalendarSet> {
    let mut rdr = reader(source);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Err(Error::EmptyInput("calendar file is empty")),
        Some(row) => row.map_err(csv_error)?,
    };
    let columns: Vec<&str> = header.iter().map(str::trim).collect();
    if columns != CALENDAR_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "unexpected calendar header `{}`; expected `{}`",
                columns.join(","),
                CALENDAR_HEADER.join(",")
            ),
        });
    }

    let mut calendars = Vec::new();
    for row in rows {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != CALENDAR_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 columns, found {}", row.len()),
            });
        }
        let season = Season::parse(&row[1]).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let first_closed = match row[3].trim() {
            "" => None,
            raw => Some(parse_field::<u32>(raw, "first_closed_matchweek", line)?),
        };
        let calendar = LeagueCalendar {
            league: normalize_id(&row[0]),
            season,
            matchweeks: parse_field(&row[2], "matchweeks", line)?,
            first_closed_matchweek: first_closed,
            teams: parse_field(&row[4], "teams", line)?,
        };
        calendar.validate().map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        calendars.push(calendar);
    }
    if calendars.is_empty() {
        return Err(Error::EmptyInput("calendar file has no data rows"));
    }
    CalendarSet::new(calendars)
}

pub fn write_calendar_file<W: Write>(calendars: &CalendarSet, sink: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    let write_err = |e: csv::Error| Error::InvalidData(format!("writing calendar file: {e}"));
    wtr.write_record(CALENDAR_HEADER).map_err(write_err)?;
    for c in calendars.iter() {
        wtr.write_record([
            c.league.clone(),
            c.season.label().to_string(),
            c.matchweeks.to_string(),
            c.first_closed_matchweek.map(|m| m.to_string()).unwrap_or_default(),
            c.teams.to_string(),
        ])
        .map_err(write_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidData(format!("writing calendar file: {e}")))
}

/// Attendance of a match given its calendar. An explicit attendance on the
/// record wins over the calendar.
pub fn classify_attendance(record: &MatchRecord, calendar: &LeagueCalendar) -> Result<Attendance> {
    if record.league != calendar.league || record.season != calendar.season {
        return Err(Error::CalendarMismatch {
            record: format!("{} {}", record.league, record.season),
            calendar: calendar.describe(),
        });
    }
    Ok(record
        .attendance
        .unwrap_or_else(|| calendar.attendance_of(record.matchweek)))
}

/// Checks every record against its calendar and fills in attendance.
pub fn resolve_attendance(records: &mut [MatchRecord], calendars: &CalendarSet) -> Result<()> {
    for record in records.iter_mut() {
        let calendar = calendars.require(&record.league, &record.season)?;
        if record.matchweek > calendar.matchweeks {
            return Err(Error::InvalidData(format!(
                "{} {}: {} vs {} has matchweek {} beyond the calendar's {}",
                record.league,
                record.season,
                record.home_team,
                record.away_team,
                record.matchweek,
                calendar.matchweeks
            )));
        }
        record.attendance = Some(classify_attendance(record, calendar)?);
    }
    Ok(())
}

pub fn summarize_season(records: &[MatchRecord], calendar: &LeagueCalendar) -> Result<SeasonSummary> {
    let first = records
        .first()
        .ok_or(Error::EmptyInput("cannot summarize an empty record list"))?;
    if records
        .iter()
        .any(|r| r.league != first.league || r.season != first.season)
    {
        return Err(Error::InvalidData(
            "records span more than one league season".into(),
        ));
    }

    let mut closed = 0;
    for record in records {
        if classify_attendance(record, calendar)? == Attendance::BehindClosedDoors {
            closed += 1;
        }
    }
    Ok(SeasonSummary {
        league: first.league.clone(),
        season: first.season.clone(),
        total_matches: records.len(),
        normal_matches: records.len() - closed,
        closed_matches: closed,
        teams: calendar.teams,
    })
}

/// Splits records by `(league, season)` preserving file order within a group.
pub fn group_by_season(records: &[MatchRecord]) -> BTreeMap<(String, Season), Vec<MatchRecord>> {
    let mut groups: BTreeMap<(String, Season), Vec<MatchRecord>> = BTreeMap::new();
    for record in records {
        groups
            .entry((record.league.clone(), record.season.clone()))
            .or_default()
            .push(record.clone());
    }
    groups
}

/// Distinct team identifiers, sorted.
pub fn teams_of(records: &[MatchRecord]) -> BTreeSet<String> {
    records
        .iter()
        .flat_map(|r| [r.home_team.clone(), r.away_team.clone()])
        .collect()
}
