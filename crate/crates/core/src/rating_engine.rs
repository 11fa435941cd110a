//! Least-squares fit of team ratings and a league-wide home advantage.
//!
//! A home team `i` facing away team `j` is expected to take the share
//!
//! ```text
//! p = 1 / (1 + exp(-(r_i + h - r_j)))
//! ```
//!
//! of the (goal + 1) smoothed score. Ratings and `h` are found by full-batch
//! steepest descent on the summed squared residual between observed and
//! predicted shares; afterwards ratings are shifted so the best team sits at
//! zero.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::match_data::MatchRecord;

/// Share of the smoothed score taken by the home side, `(h + 1) / (h + a + 2)`.
pub fn modified_score_ratio(home_goals: u32, away_goals: u32) -> f64 {
    let home = f64::from(home_goals) + 1.0;
    let away = f64::from(away_goals) + 1.0;
    home / (home + away)
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn predict_score_ratio(r_home: f64, r_away: f64, home_adv: f64) -> f64 {
    logistic(r_home + home_adv - r_away)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingParams {
    pub ratings: BTreeMap<String, f64>,
    pub home_adv: f64,
}

impl RatingParams {
    pub fn uniform<I, S>(teams: I, rating: f64, home_adv: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RatingParams {
            ratings: teams.into_iter().map(|t| (t.into(), rating)).collect(),
            home_adv,
        }
    }

    pub fn rating(&self, team: &str) -> Result<f64> {
        self.ratings
            .get(team)
            .copied()
            .ok_or_else(|| Error::UnknownTeam(team.to_string()))
    }

    /// `r_home + h - r_away`.
    pub fn rating_gap(&self, home: &str, away: &str) -> Result<f64> {
        Ok(self.rating(home)? + self.home_adv - self.rating(away)?)
    }

    pub fn predict(&self, home: &str, away: &str) -> Result<f64> {
        Ok(predict_score_ratio(
            self.rating(home)?,
            self.rating(away)?,
            self.home_adv,
        ))
    }
}

/// Partial derivatives of the squared-error loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub ratings: BTreeMap<String, f64>,
    pub home_adv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub step_size: f64,
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the loss by less than this.
    pub convergence_tolerance: f64,
    pub initial_rating: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            step_size: 0.5,
            max_iterations: 10_000,
            convergence_tolerance: 1e-10,
            initial_rating: 0.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!(
                "step size must be positive and finite, got {}",
                self.step_size
            )));
        }
        if self.convergence_tolerance.is_nan() || self.convergence_tolerance <= 0.0 {
            return Err(Error::Config(format!(
                "convergence tolerance must be positive, got {}",
                self.convergence_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max iterations must be at least 1".into()));
        }
        if !self.initial_rating.is_finite() {
            return Err(Error::Config("initial rating must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Normalized so the top rating is zero.
    pub params: RatingParams,
    pub loss: f64,
    /// Observed minus predicted ratio, one per match in input order.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Step size in effect when the descent stopped; smaller than the
    /// configured one when steps had to be shortened.
    pub final_step_size: f64,
    pub initial_loss: f64,
}

/// One home/away pairing with its observed score share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioObservation {
    pub home: usize,
    pub away: usize,
    pub target: f64,
}

/// Teams indexed densely plus the observations that constrain them.
#[derive(Debug, Clone)]
pub struct ScoreRatioProblem {
    teams: Vec<String>,
    observations: Vec<RatioObservation>,
}

impl ScoreRatioProblem {
    pub fn new(teams: Vec<String>, observations: Vec<RatioObservation>) -> Result<Self> {
        for (k, obs) in observations.iter().enumerate() {
            if obs.home >= teams.len() || obs.away >= teams.len() {
                return Err(Error::InvalidData(format!(
                    "observation {k} references a team index out of range"
                )));
            }
            if obs.home == obs.away {
                return Err(Error::InvalidData(format!(
                    "observation {k} pairs a team with itself"
                )));
            }
            if !(obs.target > 0.0 && obs.target < 1.0) {
                return Err(Error::InvalidData(format!(
                    "observation {k} target {} outside (0, 1)",
                    obs.target
                )));
            }
        }
        Ok(ScoreRatioProblem {
            teams,
            observations,
        })
    }

    /// Builds the problem from played matches. Only teams that appear in
    /// `matches` get a parameter, in sorted order.
    pub fn from_matches(matches: &[MatchRecord]) -> Result<Self> {
        let teams: Vec<String> = crate::match_data::teams_of(matches).into_iter().collect();
        let index: HashMap<&str, usize> = teams
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let observations = matches
            .iter()
            .map(|m| RatioObservation {
                home: index[m.home_team.as_str()],
                away: index[m.away_team.as_str()],
                target: modified_score_ratio(m.home_goals, m.away_goals),
            })
            .collect();
        ScoreRatioProblem::new(teams, observations)
    }

    pub fn teams(&self) -> &[String] {
        &self.teams
    }

    pub fn observations(&self) -> &[RatioObservation] {
        &self.observations
    }

    pub fn residuals(&self, ratings: &[f64], home_adv: f64) -> Vec<f64> {
        self.observations
            .iter()
            .map(|o| o.target - predict_score_ratio(ratings[o.home], ratings[o.away], home_adv))
            .collect()
    }

    pub fn loss(&self, ratings: &[f64], home_adv: f64) -> f64 {
        self.observations
            .iter()
            .map(|o| {
                let e = o.target - predict_score_ratio(ratings[o.home], ratings[o.away], home_adv);
                e * e
            })
            .sum()
    }

    /// Returns `(d/d ratings, d/d home_adv)`.
    pub fn gradient(&self, ratings: &[f64], home_adv: f64) -> (Vec<f64>, f64) {
        let mut grad = vec![0.0; ratings.len()];
        let mut grad_home = 0.0;
        for o in &self.observations {
            let p = predict_score_ratio(ratings[o.home], ratings[o.away], home_adv);
            let e = o.target - p;
            let g = -2.0 * e * p * (1.0 - p);
            grad[o.home] += g;
            grad[o.away] -= g;
            grad_home += g;
        }
        (grad, grad_home)
    }

    pub fn fit(&self, config: &FitConfig) -> Result<FitResult> {
        config.validate()?;
        if self.observations.is_empty() {
            return Err(Error::EmptyInput("cannot fit ratings without matches"));
        }

        let mut ratings = vec![config.initial_rating; self.teams.len()];
        let mut home_adv = 0.0;
        let mut current = self.loss(&ratings, home_adv);
        let initial_loss = current;
        let mut step = config.step_size;
        let mut iterations = 0;
        let mut converged = false;

        let mut trial = vec![0.0; ratings.len()];
        'descent: while iterations < config.max_iterations {
            iterations += 1;
            let (grad, grad_home) = self.gradient(&ratings, home_adv);

            // Halve the step until it no longer raises the loss.
            let (next_home, next_loss) = loop {
                for (t, (r, g)) in trial.iter_mut().zip(ratings.iter().zip(&grad)) {
                    *t = r - step * g;
                }
                let h = home_adv - step * grad_home;
                let candidate = self.loss(&trial, h);
                if !candidate.is_finite() || trial.iter().any(|r| !r.is_finite()) || !h.is_finite()
                {
                    return Err(Error::Divergence {
                        iteration: iterations,
                        step_size: step,
                    });
                }
                if candidate <= current {
                    break (h, candidate);
                }
                step *= 0.5;
                if step < f64::MIN_POSITIVE {
                    converged = true;
                    break 'descent;
                }
            };

            let decrease = current - next_loss;
            std::mem::swap(&mut ratings, &mut trial);
            home_adv = next_home;
            current = next_loss;
            if decrease < config.convergence_tolerance {
                converged = true;
                break;
            }
        }

        let params = RatingParams {
            ratings: self.teams.iter().cloned().zip(ratings.iter().copied()).collect(),
            home_adv,
        };
        Ok(FitResult {
            params: normalize(&params),
            loss: current,
            residuals: self.residuals(&ratings, home_adv),
            iterations,
            converged,
            final_step_size: step,
            initial_loss,
        })
    }
}

fn dense_ratings(params: &RatingParams, matches: &[MatchRecord]) -> Result<Vec<(f64, f64, f64)>> {
    matches
        .iter()
        .map(|m| {
            Ok((
                params.rating(&m.home_team)?,
                params.rating(&m.away_team)?,
                modified_score_ratio(m.home_goals, m.away_goals),
            ))
        })
        .collect()
}

/// Summed squared error of the model over `matches`.
pub fn loss(params: &RatingParams, matches: &[MatchRecord]) -> Result<f64> {
    Ok(dense_ratings(params, matches)?
        .into_iter()
        .map(|(rh, ra, s)| {
            let e = s - predict_score_ratio(rh, ra, params.home_adv);
            e * e
        })
        .sum())
}

pub fn gradient(params: &RatingParams, matches: &[MatchRecord]) -> Result<Gradient> {
    let mut out = Gradient {
        ratings: params.ratings.keys().map(|t| (t.clone(), 0.0)).collect(),
        home_adv: 0.0,
    };
    for (m, (rh, ra, s)) in matches.iter().zip(dense_ratings(params, matches)?) {
        let p = predict_score_ratio(rh, ra, params.home_adv);
        let g = -2.0 * (s - p) * p * (1.0 - p);
        *out.ratings.get_mut(&m.home_team).expect("checked above") += g;
        *out.ratings.get_mut(&m.away_team).expect("checked above") -= g;
        out.home_adv += g;
    }
    Ok(out)
}

/// Fits ratings and home advantage on one set of matches.
pub fn fit_window(matches: &[MatchRecord], config: &FitConfig) -> Result<FitResult> {
    if matches.is_empty() {
        return Err(Error::EmptyInput("cannot fit ratings without matches"));
    }
    ScoreRatioProblem::from_matches(matches)?.fit(config)
}

/// Shifts ratings so the maximum is zero. Home advantage is left untouched.
pub fn normalize(params: &RatingParams) -> RatingParams {
    let top = params
        .ratings
        .values()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return params.clone();
    }
    RatingParams {
        ratings: params
            .ratings
            .iter()
            .map(|(t, r)| (t.clone(), r - top))
            .collect(),
        home_adv: params.home_adv,
    }
}
