#![allow(dead_code)]

use chrono::NaiveDate;
use homeadv::match_data::{LeagueCalendar, MatchRecord, Season};
use homeadv::rating_engine::{predict_score_ratio, RatioObservation, ScoreRatioProblem};
use homeadv::synth::double_round_robin;

pub fn game(season: &str, matchweek: u32, home: &str, away: &str, hg: u32, ag: u32) -> MatchRecord {
    MatchRecord {
        league: "Test".into(),
        season: Season::parse(season).unwrap(),
        matchweek,
        date: NaiveDate::from_ymd_opt(2019, 8, 1).unwrap(),
        home_team: home.into(),
        away_team: away.into(),
        home_goals: hg,
        away_goals: ag,
        attendance: None,
    }
}

pub fn calendar(league: &str, season: &str, matchweeks: u32, first_closed: Option<u32>, teams: u32) -> LeagueCalendar {
    LeagueCalendar {
        league: league.into(),
        season: Season::parse(season).unwrap(),
        matchweeks,
        first_closed_matchweek: first_closed,
        teams,
    }
}

pub fn team_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i:02}")).collect()
}

/// Double round-robin whose targets are the model's own predictions.
pub fn noiseless_problem(ratings: &[f64], home_adv: f64) -> ScoreRatioProblem {
    let observations = double_round_robin(ratings.len())
        .unwrap()
        .into_iter()
        .flatten()
        .map(|(h, a)| RatioObservation {
            home: h,
            away: a,
            target: predict_score_ratio(ratings[h], ratings[a], home_adv),
        })
        .collect();
    ScoreRatioProblem::new(team_names(ratings.len()), observations).unwrap()
}

/// Uniform draw on `[lo, hi)` from a plain LCG, so oracles do not share the
/// generator used by the code under test.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next_u64() as f64 / (1u64 << 53) as f64)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `P(win) + 0.5·P(draw)` and `E[w^2]` by enumerating the trinomial
/// distribution of (home goals, away goals) directly.
pub fn trinomial_outcome_moments(units: u32, beta: f64, p: f64) -> (f64, f64) {
    let n = u64::from(units);
    let (ph, pa, p0) = (beta * p, beta * (1.0 - p), 1.0 - beta);
    let (mut mean, mut second) = (0.0, 0.0);
    for h in 0..=n {
        for a in 0..=n - h {
            let rest = n - h - a;
            let prob = binomial(n, h) * binomial(n - h, a) * ph.powi(h as i32) * pa.powi(a as i32) * p0.powi(rest as i32);
            let w = match h.cmp(&a) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
            mean += prob * w;
            second += prob * w * w;
        }
    }
    (mean, second)
}

/// Two-sided p-value from listing every way to pick the X ranks.
pub fn brute_force_p(n_x: usize, n_y: usize, observed: usize) -> f64 {
    let n = n_x + n_y;
    let (mut total, mut below, mut above) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n_x {
            continue;
        }
        let sum: usize = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).sum();
        total += 1;
        if sum <= observed {
            below += 1;
        }
        if sum >= observed {
            above += 1;
        }
    }
    (2.0 * below.min(above) as f64 / total as f64).min(1.0)
}
