//! Regenerate the CSV fixtures under `fixtures/`.
//!
//! ```text
//! cargo run -p elecmarket-core --example make_fixtures -- fixtures
//! ```

use std::fs::File;
use std::path::PathBuf;

use elecmarket::synthetic::archetype_year;
use elecmarket::temporal::{DailySeriesMatrix, DayProfile, HOURS_PER_DAY, KINDS};

/// Eight days of off-peak load between 2.0 and 3.8 GW with a 5 GW evening peak on three of them.
fn market_power_days() -> DailySeriesMatrix {
    let mut days = Vec::new();
    for day in 0..8 {
        let mut d: DayProfile = [[0.0; HOURS_PER_DAY]; KINDS];
        for h in 0..HOURS_PER_DAY {
            let shape = 0.5 - 0.5 * ((h as f64 - 3.0) / 24.0 * std::f64::consts::TAU).cos();
            d[0][h] = 2000.0 + 1800.0 * shape * (0.9 + 0.0125 * day as f64);
            if day % 3 == 0 && (h == 18 || h == 19) {
                d[0][h] = 5000.0;
            }
        }
        days.push(d);
    }
    let dates = (1..=8).map(|i| format!("2018-01-{i:02}")).collect();
    DailySeriesMatrix::new(dates, days).expect("valid fixture")
}

/// Eight identical days: 3 GW in the first twelve hours, 9 GW in the last twelve.
fn two_regime_days() -> DailySeriesMatrix {
    let mut d: DayProfile = [[0.0; HOURS_PER_DAY]; KINDS];
    for h in 0..HOURS_PER_DAY {
        d[0][h] = if h < 12 { 3000.0 } else { 9000.0 };
    }
    let dates = (1..=8).map(|i| format!("2018-02-{i:02}")).collect();
    DailySeriesMatrix::new(dates, vec![d; 8]).expect("valid fixture")
}

fn main() -> elecmarket::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).expect("create fixture directory");
    let write = |name: &str, data: &DailySeriesMatrix| -> elecmarket::Result<()> {
        let path = dir.join(name);
        data.to_csv_writer(File::create(&path).expect("create fixture file"))?;
        println!("wrote {}", path.display());
        Ok(())
    };
    write("synthetic_365.csv", &archetype_year(4, 365, 2018))?;
    write("market_power_days.csv", &market_power_days())?;
    write("two_regime_days.csv", &two_regime_days())?;
    Ok(())
}
