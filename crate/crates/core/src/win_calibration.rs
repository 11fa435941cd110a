//! Conversion of score-share ratings into win-probability units.
//!
//! A match is modelled as `N` independent play units. In each unit the home
//! side scores with probability `β·p`, the away side with `β·(1 - p)`, and
//! nothing happens otherwise, where `p` is the predicted score share. The
//! final score gives a win (1), draw (0.5) or loss (0). A single scale
//! factor `D` is then fitted so that `logistic(D · gap)` tracks those
//! outcomes in the least-squares sense, and ratings are multiplied by it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::match_data::MatchRecord;
use crate::rating_engine::{logistic, RatingParams};

pub const FOOTBALL_UNITS: u32 = 90;
/// Upper end of the scale-factor search interval.
pub const SCALE_SEARCH_MAX: f64 = 50.0;
pub const SCALE_SEARCH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringProcessConfig {
    pub units: u32,
    /// Probability that a play unit produces a goal for either side.
    pub scoring_intensity: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ScoringProcessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.units == 0 {
            return Err(Error::Config("units must be positive".into()));
        }
        if !(self.scoring_intensity > 0.0 && self.scoring_intensity <= 1.0) {
            return Err(Error::Config(format!(
                "scoring intensity must lie in (0, 1], got {}",
                self.scoring_intensity
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of a single simulated or played match, seen from the home side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeRecord {
    pub rating_gap: f64,
    pub outcome: f64,
}

impl OutcomeRecord {
    pub fn new(rating_gap: f64, outcome: f64) -> Result<Self> {
        if !rating_gap.is_finite() || !(0.0..=1.0).contains(&outcome) {
            return Err(Error::InvalidData(format!(
                "outcome record ({rating_gap}, {outcome}) out of range"
            )));
        }
        Ok(OutcomeRecord {
            rating_gap,
            outcome,
        })
    }

    pub fn from_scores(rating_gap: f64, home: u32, away: u32) -> Self {
        OutcomeRecord {
            rating_gap,
            outcome: outcome_value(home, away),
        }
    }
}

/// 1 for a home win, 0.5 for a draw, 0 for an away win.
pub fn outcome_value(home: u32, away: u32) -> f64 {
    match home.cmp(&away) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactor {
    pub value: f64,
    /// Residual sum of squares at `value`.
    pub objective: f64,
}

impl ScaleFactor {
    pub fn identity() -> Self {
        ScaleFactor {
            value: 1.0,
            objective: 0.0,
        }
    }
}

/// RNG stream for one trial. Streams depend only on `(seed, trial)`, so
/// results do not depend on how trials are scheduled.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn simulate_match<R: Rng + ?Sized>(
    score_ratio: f64,
    config: &ScoringProcessConfig,
    rng: &mut R,
) -> (u32, u32) {
    let beta = config.scoring_intensity;
    let home_threshold = beta * score_ratio;
    let (mut home, mut away) = (0, 0);
    for _ in 0..config.units {
        let u: f64 = rng.gen();
        if u < home_threshold {
            home += 1;
        } else if u < beta {
            away += 1;
        }
    }
    (home, away)
}

/// Monte Carlo estimate of `P(win) + 0.5·P(draw)` at a rating gap.
pub fn estimate_win_probability(rating_gap: f64, config: &ScoringProcessConfig) -> Result<f64> {
    config.validate()?;
    let p = logistic(rating_gap);
    // Points in half-units: win 2, draw 1, loss 0.
    let points: u64 = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let (h, a) = simulate_match(p, config, &mut trial_rng(config.seed, t));
            match h.cmp(&a) {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            }
        })
        .sum();
    Ok(points as f64 / (2.0 * config.trials as f64))
}

/// Exact `P(win) + 0.5·P(draw)` for the scoring process, by dynamic
/// programming over the running goal difference.
pub fn exact_win_probability(rating_gap: f64, units: u32, scoring_intensity: f64) -> f64 {
    let p = logistic(rating_gap);
    let up = scoring_intensity * p;
    let down = scoring_intensity * (1.0 - p);
    let stay = 1.0 - scoring_intensity;
    let n = units as usize;
    // Index `k` holds the probability of difference `k - n`.
    let mut dist = vec![0.0; 2 * n + 1];
    dist[n] = 1.0;
    let mut next = vec![0.0; 2 * n + 1];
    for step in 0..n {
        next.iter_mut().for_each(|v| *v = 0.0);
        for k in (n - step)..=(n + step) {
            let mass = dist[k];
            if mass == 0.0 {
                continue;
            }
            next[k] += mass * stay;
            next[k + 1] += mass * up;
            next[k - 1] += mass * down;
        }
        std::mem::swap(&mut dist, &mut next);
    }
    let win: f64 = dist[n + 1..].iter().sum();
    win + 0.5 * dist[n]
}

/// Simulates `config.trials` outcome records, cycling through `gaps`.
pub fn simulate_outcomes(gaps: &[f64], config: &ScoringProcessConfig) -> Result<Vec<OutcomeRecord>> {
    config.validate()?;
    if gaps.is_empty() {
        return Err(Error::EmptyInput("no rating gaps to simulate"));
    }
    if let Some(bad) = gaps.iter().find(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite rating gap {bad}")));
    }
    Ok((0..config.trials)
        .into_par_iter()
        .map(|t| {
            let gap = gaps[(t % gaps.len() as u64) as usize];
            let (h, a) = simulate_match(logistic(gap), config, &mut trial_rng(config.seed, t));
            OutcomeRecord::from_scores(gap, h, a)
        })
        .collect())
}

pub fn scale_objective(records: &[OutcomeRecord], scale: f64) -> f64 {
    records
        .iter()
        .map(|r| {
            let e = r.outcome - logistic(scale * r.rating_gap);
            e * e
        })
        .sum()
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_minimize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tolerance: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tolerance {
        // Ties keep the left part, favouring smaller arguments.
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(c, fc), (mid, fm), (d, fd)]
        .into_iter()
        .fold((mid, fm), |best, cand| if cand.1 < best.1 { cand } else { best })
        .0
}

/// Least-squares scale factor on `[0, 50]`.
pub fn fit_scale_factor(records: &[OutcomeRecord]) -> Result<ScaleFactor> {
    if records.is_empty() {
        return Err(Error::EmptyInput("cannot fit a scale factor without outcomes"));
    }
    let objective = |d: f64| scale_objective(records, d);
    let mut value = golden_section_minimize(
        objective,
        0.0,
        SCALE_SEARCH_MAX,
        SCALE_SEARCH_TOLERANCE,
    );
    let mut best = objective(value);
    let at_zero = objective(0.0);
    if at_zero <= best {
        value = 0.0;
        best = at_zero;
    }
    if !best.is_finite() {
        return Err(Error::Numeric("scale factor objective is not finite".into()));
    }
    Ok(ScaleFactor {
        value,
        objective: best,
    })
}

/// Multiplies every rating and the home advantage by the scale factor.
pub fn convert_ratings(params: &RatingParams, scale: &ScaleFactor) -> RatingParams {
    RatingParams {
        ratings: params
            .ratings
            .iter()
            .map(|(t, r)| (t.clone(), r * scale.value))
            .collect(),
        home_adv: params.home_adv * scale.value,
    }
}

/// Scoring intensity implied by the mean total goals per match.
pub fn beta_from_matches(matches: &[MatchRecord], units: u32) -> Result<f64> {
    if matches.is_empty() {
        return Err(Error::EmptyInput("cannot estimate scoring intensity without matches"));
    }
    if units == 0 {
        return Err(Error::Config("units must be positive".into()));
    }
    let goals: u64 = matches
        .iter()
        .map(|m| u64::from(m.home_goals) + u64::from(m.away_goals))
        .sum();
    let beta = goals as f64 / matches.len() as f64 / f64::from(units);
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Numeric(format!(
            "scoring intensity {beta} from data lies outside (0, 1]; adjust --units"
        )));
    }
    Ok(beta)
}

/// Simulates outcomes at the supplied gaps and fits the scale factor to them.
pub fn calibrate_scale(gaps: &[f64], config: &ScoringProcessConfig) -> Result<ScaleFactor> {
    fit_scale_factor(&simulate_outcomes(gaps, config)?)
}
