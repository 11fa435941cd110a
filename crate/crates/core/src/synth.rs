//! Synthetic fixtures and seasons for tests, demos and the bundled toy data.

use chrono::{Duration, NaiveDate};

use crate::error::{Error, Result};
use crate::match_data::{Attendance, MatchRecord, Season};
use crate::rating_engine::predict_score_ratio;
use crate::win_calibration::{simulate_match, trial_rng, ScoringProcessConfig};

/// Double round-robin by the circle method. Returns one list of
/// `(home, away)` index pairs per matchweek; the second half mirrors the
/// first with venues swapped. Requires an even team count of at least 2.
pub fn double_round_robin(n_teams: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    if n_teams < 2 || !n_teams.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "round-robin needs an even number of teams, got {n_teams}"
        )));
    }
    let rounds = n_teams - 1;
    let mut rotation: Vec<usize> = (1..n_teams).collect();
    let mut first_half = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let mut pairs = Vec::with_capacity(n_teams / 2);
        let fixed = if round % 2 == 0 { (0, rotation[0]) } else { (rotation[0], 0) };
        pairs.push(fixed);
        for k in 1..n_teams / 2 {
            let a = rotation[k];
            let b = rotation[rounds - k];
            pairs.push(if k % 2 == 0 { (a, b) } else { (b, a) });
        }
        first_half.push(pairs);
        rotation.rotate_right(1);
    }
    let second_half: Vec<Vec<(usize, usize)>> = first_half
        .iter()
        .map(|round| round.iter().map(|&(h, a)| (a, h)).collect())
        .collect();
    Ok(first_half.into_iter().chain(second_half).collect())
}

/// A league with known strengths whose scores follow the play-unit
/// scoring process.
#[derive(Debug, Clone)]
pub struct SyntheticLeague {
    pub league: String,
    pub teams: Vec<String>,
    pub ratings: Vec<f64>,
    pub home_adv: f64,
    pub units: u32,
    pub scoring_intensity: f64,
}

impl SyntheticLeague {
    /// Simulates a full double round-robin season. Matches from
    /// `first_closed` onwards are marked as played behind closed doors.
    pub fn simulate_season(
        &self,
        season: &str,
        first_closed: Option<u32>,
        seed: u64,
    ) -> Result<Vec<MatchRecord>> {
        if self.teams.len() != self.ratings.len() {
            return Err(Error::Config("one rating per team required".into()));
        }
        let season = Season::parse(season)?;
        let schedule = double_round_robin(self.teams.len())?;
        let config = ScoringProcessConfig {
            units: self.units,
            scoring_intensity: self.scoring_intensity,
            trials: 1,
            seed,
        };
        config.validate()?;
        let opening = NaiveDate::from_ymd_opt(season.start_year(), 8, 10)
            .ok_or_else(|| Error::Config("season start date out of range".into()))?;

        let mut records = Vec::new();
        let mut index = 0u64;
        for (round, pairs) in schedule.iter().enumerate() {
            let matchweek = round as u32 + 1;
            let attendance = match first_closed {
                Some(first) if matchweek >= first => Attendance::BehindClosedDoors,
                _ => Attendance::Spectators,
            };
            for &(h, a) in pairs {
                let p = predict_score_ratio(self.ratings[h], self.ratings[a], self.home_adv);
                let (home_goals, away_goals) =
                    simulate_match(p, &config, &mut trial_rng(seed, index));
                index += 1;
                records.push(MatchRecord {
                    league: self.league.clone(),
                    season: season.clone(),
                    matchweek,
                    date: opening + Duration::days(7 * round as i64),
                    home_team: self.teams[h].clone(),
                    away_team: self.teams[a].clone(),
                    home_goals,
                    away_goals,
                    attendance: Some(attendance),
                });
            }
        }
        Ok(records)
    }
}
