//! Regenerates the bundled toy dataset under `data/toy/`.
//!
//! ```text
//! cargo run -p homeadv --example make_toy -- data/toy
//! ```

use std::fs::File;
use std::path::PathBuf;

use homeadv::match_data::{write_calendar_file, write_match_file, CalendarSet, LeagueCalendar, Season};
use homeadv::synth::SyntheticLeague;

fn main() -> homeadv::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/toy".into()));
    std::fs::create_dir_all(&dir).map_err(|e| homeadv::Error::io(&dir, e))?;

    // (league, ratings, first closed matchweek in 2019/20)
    let leagues = [
        ("Alpha", vec![0.0, -0.1, -0.25, -0.3, -0.45, -0.6], 6),
        ("Beta", vec![0.0, -0.05, -0.2, -0.2, -0.35, -0.4, -0.5, -0.7], 9),
    ];
    let seasons = ["2017/18", "2018/19", "2019/20"];

    let mut records = Vec::new();
    let mut calendars = Vec::new();
    for (k, (name, ratings, first_closed)) in leagues.iter().enumerate() {
        let league = SyntheticLeague {
            league: name.to_string(),
            teams: (0..ratings.len()).map(|i| format!("{name} {}", (b'A' + i as u8) as char)).collect(),
            ratings: ratings.clone(),
            home_adv: 0.3,
            units: 90,
            scoring_intensity: 0.03,
        };
        for (s, season) in seasons.iter().enumerate() {
            let closed = (*season == "2019/20").then_some(*first_closed);
            let seed = 1_000 + (k * 10 + s) as u64;
            let mut played = league.simulate_season(season, closed, seed)?;
            // Attendance comes from the calendar file.
            played.iter_mut().for_each(|m| m.attendance = None);
            records.extend(played);
            calendars.push(LeagueCalendar {
                league: name.to_string(),
                season: Season::parse(season)?,
                matchweeks: 2 * (ratings.len() as u32 - 1),
                first_closed_matchweek: closed,
                teams: ratings.len() as u32,
            });
        }
    }

    let matches_path = dir.join("matches.csv");
    let file = File::create(&matches_path).map_err(|e| homeadv::Error::io(&matches_path, e))?;
    write_match_file(&records, file)?;
    let calendar_path = dir.join("calendar.csv");
    let file = File::create(&calendar_path).map_err(|e| homeadv::Error::io(&calendar_path, e))?;
    write_calendar_file(&CalendarSet::new(calendars)?, file)?;
    println!("wrote {} matches to {}", records.len(), dir.display());
    Ok(())
}
