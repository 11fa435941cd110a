//! Short-window team ratings and league-wide home advantage from football
//! scores.
//!
//! The crate fits a logistic score-share model on rolling matchweek windows,
//! rescales the fitted home advantage into win-probability units through a
//! simulated play-unit scoring process, and compares the resulting
//! distributions across spectator-attendance classes with rank-sum tests.
//!
//! Modules follow the pipeline order:
//!
//! - [`match_data`]: CSV ingestion, calendars, attendance.
//! - [`rating_engine`]: ratings and home advantage for one set of matches.
//! - [`win_calibration`]: scoring-process simulation and the scale factor.
//! - [`rolling`]: per-matchweek windows and attendance classes.
//! - [`stats`]: rank-sum tests, medians, descriptive statistics.
//! - [`report`] and [`pipeline`]: tables, text report, end-to-end run.

pub mod error;
pub mod match_data;
pub mod pipeline;
pub mod rating_engine;
pub mod report;
pub mod rolling;
pub mod stats;
pub mod synth;
pub mod win_calibration;

pub use error::{Error, ErrorKind, Result};
pub use match_data::{Attendance, LeagueCalendar, MatchRecord, Season};
pub use rating_engine::{FitConfig, FitResult, RatingParams};
pub use rolling::{AttendanceClass, HomeAdvEstimate};
pub use stats::RankSumResult;
pub use win_calibration::{OutcomeRecord, ScaleFactor, ScoringProcessConfig};
