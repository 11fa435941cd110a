//! Rank-sum comparisons of home-advantage samples and descriptive match
//! statistics.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::match_data::MatchRecord;
use crate::rolling::{AttendanceClass, HomeAdvEstimate};

/// Largest pooled sample size handled by exact enumeration.
pub const EXACT_MAX_TOTAL: usize = 12;

pub const TEST_TABLE_HEADER: [&str; 7] = [
    "sample_x", "sample_y", "n_x", "n_y", "p_value", "z_value", "rank_sum",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSumMethod {
    Exact,
    NormalApproximation,
}

impl RankSumMethod {
    pub fn name(self) -> &'static str {
        match self {
            RankSumMethod::Exact => "exact",
            RankSumMethod::NormalApproximation => "normal_approximation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSumResult {
    pub n_x: usize,
    pub n_y: usize,
    /// Sum of the pooled (mid)ranks of sample X.
    pub rank_sum: f64,
    /// Positive when X tends to be larger.
    pub z_value: f64,
    pub p_value: f64,
    pub method: RankSumMethod,
}

/// Midranks of `values`, 1-based.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Sizes of the groups of tied values (only groups larger than one).
fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut run = 1;
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            run += 1;
        } else {
            if run > 1 {
                groups.push(run);
            }
            run = 1;
        }
    }
    if run > 1 {
        groups.push(run);
    }
    groups
}

/// `counts[s]` = number of `k`-subsets of `{1..=n}` with sum `s`.
fn subset_sum_counts(n: usize, k: usize) -> Vec<Vec<u128>> {
    let max_sum = n * (n + 1) / 2;
    // table[j][s]: subsets of size j with sum s, over the ranks seen so far.
    let mut table = vec![vec![0u128; max_sum + 1]; k + 1];
    table[0][0] = 1;
    for rank in 1..=n {
        for j in (1..=k.min(rank)).rev() {
            for s in (rank..=max_sum).rev() {
                table[j][s] += table[j - 1][s - rank];
            }
        }
    }
    table
}

/// Two-sided exact p-value for a tie-free rank sum.
fn exact_p_value(n_x: usize, n_y: usize, rank_sum: usize) -> f64 {
    let n = n_x + n_y;
    let table = subset_sum_counts(n, n_x);
    let counts = &table[n_x];
    let total: u128 = counts.iter().sum();
    let lower: u128 = counts[..=rank_sum].iter().sum();
    let upper: u128 = counts[rank_sum..].iter().sum();
    let tail = lower.min(upper);
    (2.0 * tail as f64 / total as f64).min(1.0)
}

/// Two-sided Wilcoxon rank-sum test of X against Y.
///
/// Small tie-free samples (`n_x + n_y <= 12`) use the exact null
/// distribution; otherwise the normal approximation with tie-corrected
/// variance and a 0.5 continuity correction.
pub fn rank_sum_test(x: &[f64], y: &[f64]) -> Result<RankSumResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("rank-sum test needs two non-empty samples"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Numeric("rank-sum test input contains NaN".into()));
    }
    let (n_x, n_y) = (x.len(), y.len());
    let n = n_x + n_y;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum: f64 = ranks[..n_x].iter().sum();

    let (nxf, nyf, nf) = (n_x as f64, n_y as f64, n as f64);
    let expected = nxf * (nf + 1.0) / 2.0;
    let ties = tie_groups(&pooled);
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let variance = if n > 1 {
        nxf * nyf / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)))
    } else {
        0.0
    };
    let sd = variance.sqrt();
    let deviation = rank_sum - expected;

    if ties.is_empty() && n <= EXACT_MAX_TOTAL {
        let z_value = if sd > 0.0 { deviation / sd } else { 0.0 };
        return Ok(RankSumResult {
            n_x,
            n_y,
            rank_sum,
            z_value,
            p_value: exact_p_value(n_x, n_y, rank_sum.round() as usize),
            method: RankSumMethod::Exact,
        });
    }

    let (z_value, p_value) = if sd > 0.0 {
        let corrected = deviation - 0.5 * deviation.signum();
        let corrected = if corrected.signum() != deviation.signum() { 0.0 } else { corrected };
        let z = corrected / sd;
        (z, erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0))
    } else {
        (0.0, 1.0)
    };
    Ok(RankSumResult {
        n_x,
        n_y,
        rank_sum,
        z_value,
        p_value,
        method: RankSumMethod::NormalApproximation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    Overall,
    PerLeague,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassComparison {
    /// `None` for the pooled comparison across leagues.
    pub league: Option<String>,
    pub sample_x: AttendanceClass,
    pub sample_y: AttendanceClass,
    pub result: RankSumResult,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ClassComparison>,
    pub notices: Vec<String>,
}

fn compare_group(
    league: Option<&str>,
    estimates: &[&HomeAdvEstimate],
    classes: &[AttendanceClass],
    table: &mut ComparisonTable,
) -> Result<()> {
    let label = league.unwrap_or("overall");
    let sample = |class: AttendanceClass| -> Vec<f64> {
        estimates
            .iter()
            .filter(|e| e.attendance_class == class)
            .map(|e| e.home_adv_win_units)
            .collect()
    };
    let present: Vec<AttendanceClass> = classes
        .iter()
        .copied()
        .filter(|c| estimates.iter().any(|e| e.attendance_class == *c))
        .collect();
    if present.len() < 2 {
        table.notices.push(format!(
            "{label}: fewer than two attendance classes present, nothing to compare"
        ));
        return Ok(());
    }
    for (i, &cx) in classes.iter().enumerate() {
        for &cy in &classes[i + 1..] {
            let (x, y) = (sample(cx), sample(cy));
            if x.is_empty() || y.is_empty() {
                table
                    .notices
                    .push(format!("{label}: skipped {cx} vs {cy}, one sample is empty"));
                continue;
            }
            table.rows.push(ClassComparison {
                league: league.map(str::to_string),
                sample_x: cx,
                sample_y: cy,
                result: rank_sum_test(&x, &y)?,
            });
        }
    }
    Ok(())
}

/// Pairwise rank-sum tests between attendance classes.
///
/// The overall grouping pools every league and compares all four classes.
/// The per-league grouping compares Past, Normal and Closed within each
/// league; Mixed windows are too few per league to test.
pub fn compare_all_classes(estimates: &[HomeAdvEstimate], grouping: Grouping) -> Result<ComparisonTable> {
    let mut table = ComparisonTable::default();
    match grouping {
        Grouping::Overall => {
            let all: Vec<&HomeAdvEstimate> = estimates.iter().collect();
            compare_group(None, &all, &AttendanceClass::ALL, &mut table)?;
        }
        Grouping::PerLeague => {
            let mut by_league: BTreeMap<&str, Vec<&HomeAdvEstimate>> = BTreeMap::new();
            for e in estimates {
                by_league.entry(e.league.as_str()).or_default().push(e);
            }
            let classes = [
                AttendanceClass::Past,
                AttendanceClass::Normal,
                AttendanceClass::Closed,
            ];
            for (league, group) in by_league {
                compare_group(Some(league), &group, &classes, &mut table)?;
            }
        }
    }
    Ok(table)
}

fn fmt_float(v: f64) -> String {
    format!("{v:.6e}")
}

/// Writes comparison rows. With `with_league` a leading `league` column is
/// added.
pub fn write_test_table<W: Write>(rows: &[ClassComparison], with_league: bool, sink: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    let err = |e: csv::Error| Error::InvalidData(format!("writing test table: {e}"));
    let mut header = Vec::new();
    if with_league {
        header.push("league");
    }
    header.extend(TEST_TABLE_HEADER);
    wtr.write_record(&header).map_err(err)?;
    for row in rows {
        let mut fields = Vec::new();
        if with_league {
            fields.push(row.league.clone().unwrap_or_default());
        }
        fields.extend([
            row.sample_x.name().to_string(),
            row.sample_y.name().to_string(),
            row.result.n_x.to_string(),
            row.result.n_y.to_string(),
            fmt_float(row.result.p_value),
            format!("{:.3}", row.result.z_value),
            format!("{}", row.result.rank_sum),
        ]);
        wtr.write_record(&fields).map_err(err)?;
    }
    wtr.flush()
        .map_err(|e| Error::InvalidData(format!("writing test table: {e}")))
}

/// Median with the two central order statistics averaged for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

/// Quantile with midpoint interpolation: at fractional position
/// `q·(n - 1)` the two neighbouring order statistics are averaged.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Ok(if lo == hi {
        sorted[lo]
    } else {
        (sorted[lo] + sorted[hi]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicStats {
    pub label: String,
    pub goals_diff_per_match: f64,
    pub win_ratio_diff: f64,
    pub n_matches: usize,
}

pub fn basic_stats(matches: &[MatchRecord], label: &str) -> Result<BasicStats> {
    if matches.is_empty() {
        return Err(Error::EmptyInput("basic statistics need at least one match"));
    }
    let n = matches.len() as f64;
    let goal_diff: i64 = matches.iter().map(MatchRecord::goal_difference).sum();
    let home_wins = matches.iter().filter(|m| m.home_goals > m.away_goals).count() as f64;
    let away_wins = matches.iter().filter(|m| m.home_goals < m.away_goals).count() as f64;
    Ok(BasicStats {
        label: label.to_string(),
        goals_diff_per_match: goal_diff as f64 / n,
        win_ratio_diff: (home_wins - away_wins) / n,
        n_matches: matches.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationKind {
    #[default]
    Pearson,
    Spearman,
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numeric(
            "correlation undefined: one variable has zero variance".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between each team's number of home matches in `closed_matches`
/// and its final standing (1 = champion).
pub fn home_balance_correlation(
    closed_matches: &[MatchRecord],
    final_standings: &BTreeMap<String, usize>,
    kind: CorrelationKind,
) -> Result<f64> {
    let mut home_counts: BTreeMap<&str, f64> = BTreeMap::new();
    for m in closed_matches {
        *home_counts.entry(m.home_team.as_str()).or_default() += 1.0;
        home_counts.entry(m.away_team.as_str()).or_default();
    }
    if home_counts.len() < 2 {
        return Err(Error::InvalidData(
            "correlation needs at least two teams".into(),
        ));
    }
    let mut counts = Vec::with_capacity(home_counts.len());
    let mut ranks = Vec::with_capacity(home_counts.len());
    for (team, count) in home_counts {
        let rank = final_standings
            .get(team)
            .ok_or_else(|| Error::UnknownTeam(team.to_string()))?;
        counts.push(count);
        ranks.push(*rank as f64);
    }
    match kind {
        CorrelationKind::Pearson => pearson(&counts, &ranks),
        CorrelationKind::Spearman => pearson(&midranks(&counts), &midranks(&ranks)),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableRow {
    pub team: String,
    pub points: u32,
    pub goals_for: u32,
    pub goals_against: u32,
}

impl TableRow {
    pub fn goal_difference(&self) -> i64 {
        i64::from(self.goals_for) - i64::from(self.goals_against)
    }
}

/// League table ordered by points, goal difference, goals scored, then team
/// name.
pub fn league_table(season_matches: &[MatchRecord]) -> Result<Vec<TableRow>> {
    if season_matches.is_empty() {
        return Err(Error::EmptyInput("standings need at least one match"));
    }
    let mut rows: HashMap<&str, TableRow> = HashMap::new();
    for m in season_matches {
        let (home_pts, away_pts) = match m.home_goals.cmp(&m.away_goals) {
            std::cmp::Ordering::Greater => (3, 0),
            std::cmp::Ordering::Equal => (1, 1),
            std::cmp::Ordering::Less => (0, 3),
        };
        for (team, pts, gf, ga) in [
            (&m.home_team, home_pts, m.home_goals, m.away_goals),
            (&m.away_team, away_pts, m.away_goals, m.home_goals),
        ] {
            let row = rows.entry(team.as_str()).or_insert_with(|| TableRow {
                team: team.clone(),
                ..TableRow::default()
            });
            row.points += pts;
            row.goals_for += gf;
            row.goals_against += ga;
        }
    }
    let mut table: Vec<TableRow> = rows.into_values().collect();
    table.sort_by(|a, b| {
        b.points
            .cmp(&a.points)
            .then(b.goal_difference().cmp(&a.goal_difference()))
            .then(b.goals_for.cmp(&a.goals_for))
            .then(a.team.cmp(&b.team))
    });
    Ok(table)
}

/// Final rank (1 = champion) of every team in a season.
pub fn compute_standings(season_matches: &[MatchRecord]) -> Result<BTreeMap<String, usize>> {
    Ok(league_table(season_matches)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| (row.team, i + 1))
        .collect())
}
