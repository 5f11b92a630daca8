//! Day files: the order-flow and exogenous-series record replayed by the
//! trading environment, its CSV serialization, a seeded synthetic-day
//! generator, and train/test splitting.

pub mod split;
pub mod synthetic;

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::market::{Price, Side, UnitError, Volume};

pub const DAY_FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DayFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{file}:{line}: {reason}")]
    Parse { file: String, line: usize, reason: String },
    #[error("unsupported day file version {got}, this build reads {want}")]
    Version { got: String, want: u32 },
}

/// One resting-order arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEvent {
    pub product: usize,
    pub side: Side,
    pub price: Price,
    pub volume: Volume,
}

/// Exogenous series snapshot attached to a step: day-ahead hourly prices and
/// the imbalance price / system imbalance of the last four settled quarter
/// hours, newest last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExogStep {
    pub da_prices_eur: [f64; 24],
    pub imbalance_price_eur: [f64; 4],
    pub system_imbalance_mw: [f64; 4],
}

impl Default for ExogStep {
    fn default() -> Self {
        ExogStep {
            da_prices_eur: [0.0; 24],
            imbalance_price_eur: [0.0; 4],
            system_imbalance_mw: [0.0; 4],
        }
    }
}

/// Everything that happens in one trading-grid interval: the orders arriving
/// in `(t - step, t]` and the exogenous snapshot at `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DayStep {
    pub orders: Vec<OrderEvent>,
    pub exog: ExogStep,
}

/// A full replayable trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    /// Calendar date in `YYYY-MM-DD` form; doubles as the file identity.
    pub day: String,
    /// Indexed by trading-grid step, `0..=K`.
    pub steps: Vec<DayStep>,
}

impl DayRecord {
    /// Checks that every order event references a product whose gate is
    /// still open at its step's grid time.
    pub fn validate(&self, calendar: &crate::market::MarketCalendar) -> Result<(), DayFileError> {
        let grid = calendar.trading_grid();
        if self.steps.len() != grid.len() {
            return Err(DayFileError::Parse {
                file: self.day.clone(),
                line: 0,
                reason: format!(
                    "day has {} steps, calendar expects {}",
                    self.steps.len(),
                    grid.len()
                ),
            });
        }
        for (t, step) in self.steps.iter().enumerate() {
            let open = calendar.open_products(grid[t]).map_err(|e| DayFileError::Parse {
                file: self.day.clone(),
                line: 0,
                reason: e.to_string(),
            })?;
            for ev in &step.orders {
                if !open.contains(&ev.product) {
                    return Err(DayFileError::Parse {
                        file: self.day.clone(),
                        line: 0,
                        reason: format!("step {t}: product {} is past gate closure", ev.product),
                    });
                }
            }
        }
        Ok(())
    }
}

fn format_price(p: Price) -> String {
    let cents = p.cents();
    let sign = if cents < 0 { "-" } else { "" };
    let a = cents.abs();
    format!("{sign}{}.{:02}", a / 100, a % 100)
}

fn format_volume(v: Volume) -> String {
    let micro = v.micro();
    format!("{}.{:03}", micro / 1_000_000, (micro % 1_000_000) / 1_000)
}

/// Serializes a day record to the versioned CSV format:
/// a `version,day` header row, then one `step,EXOG,...` row per step and a
/// `step,ORDER,product,side,price,volume` row per arrival.
pub fn save_day(record: &DayRecord, path: &Path) -> Result<(), DayFileError> {
    let mut out = String::new();
    out.push_str("version,day\n");
    let _ = writeln!(out, "{DAY_FILE_VERSION},{}", record.day);
    for (t, step) in record.steps.iter().enumerate() {
        let _ = write!(out, "{t},EXOG");
        for v in step
            .exog
            .da_prices_eur
            .iter()
            .chain(step.exog.imbalance_price_eur.iter())
            .chain(step.exog.system_imbalance_mw.iter())
        {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
        for ev in &step.orders {
            let _ = writeln!(
                out,
                "{t},ORDER,{},{},{},{}",
                ev.product,
                match ev.side {
                    Side::Buy => "B",
                    Side::Sell => "S",
                },
                format_price(ev.price),
                format_volume(ev.volume),
            );
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a day file back; strict about structure so fixture errors surface
/// with a file, line, and reason.
pub fn load_day(path: &Path) -> Result<DayRecord, DayFileError> {
    let name = path.display().to_string();
    let fail = |line: usize, reason: String| DayFileError::Parse {
        file: name.clone(),
        line,
        reason,
    };
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(1, "empty file".into()))?;
    if header?.trim() != "version,day" {
        return Err(fail(1, "expected `version,day` header".into()));
    }
    let (_, id_line) = lines
        .next()
        .ok_or_else(|| fail(2, "missing version row".into()))?;
    let id_line = id_line?;
    let (version, day) = id_line
        .split_once(',')
        .ok_or_else(|| fail(2, "expected `<version>,<day>`".into()))?;
    if version.trim() != DAY_FILE_VERSION.to_string() {
        return Err(DayFileError::Version { got: version.trim().to_string(), want: DAY_FILE_VERSION });
    }
    let day = day.trim().to_string();
    if parse_day_id(&day).is_none() {
        return Err(fail(2, format!("day id `{day}` is not YYYY-MM-DD")));
    }

    let mut steps: Vec<DayStep> = Vec::new();
    let mut exog_seen: Vec<bool> = Vec::new();
    let mut last_step: Option<usize> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let step: usize = fields
            .next()
            .unwrap()
            .trim()
            .parse()
            .map_err(|_| fail(lineno, "step is not a non-negative integer".into()))?;
        if let Some(prev) = last_step {
            if step < prev {
                return Err(fail(lineno, format!("step {step} after step {prev}")));
            }
        }
        last_step = Some(step);
        while steps.len() <= step {
            steps.push(DayStep::default());
            exog_seen.push(false);
        }
        let kind = fields
            .next()
            .ok_or_else(|| fail(lineno, "missing row kind".into()))?
            .trim();
        match kind {
            "EXOG" => {
                if exog_seen[step] {
                    return Err(fail(lineno, format!("step {step} has two EXOG rows")));
                }
                let values: Vec<f64> = fields
                    .map(|f| f.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| fail(lineno, format!("bad numeric field: {e}")))?;
                if values.len() != 32 {
                    return Err(fail(lineno, format!("EXOG row has {} fields, expected 32", values.len())));
                }
                let mut exog = ExogStep::default();
                exog.da_prices_eur.copy_from_slice(&values[..24]);
                exog.imbalance_price_eur.copy_from_slice(&values[24..28]);
                exog.system_imbalance_mw.copy_from_slice(&values[28..32]);
                steps[step].exog = exog;
                exog_seen[step] = true;
            }
            "ORDER" => {
                let mut next = |what: &str| -> Result<String, DayFileError> {
                    fields
                        .next()
                        .map(|f| f.trim().to_string())
                        .ok_or_else(|| fail(lineno, format!("missing {what}")))
                };
                let product: usize = next("product")?
                    .parse()
                    .map_err(|_| fail(lineno, "product is not an index".into()))?;
                let side = match next("side")?.as_str() {
                    "B" => Side::Buy,
                    "S" => Side::Sell,
                    other => return Err(fail(lineno, format!("side `{other}` is not S or B"))),
                };
                let unit_err = |e: UnitError| fail(lineno, e.to_string());
                let price_text = next("price")?;
                let price_val: f64 = price_text
                    .parse()
                    .map_err(|_| fail(lineno, format!("price `{price_text}` is not a number")))?;
                let price = Price::from_eur_per_mwh(price_val).map_err(unit_err)?;
                let volume_text = next("volume")?;
                let volume_val: f64 = volume_text
                    .parse()
                    .map_err(|_| fail(lineno, format!("volume `{volume_text}` is not a number")))?;
                if volume_val <= 0.0 {
                    return Err(fail(lineno, format!("volume {volume_val} must be positive")));
                }
                let volume = Volume::from_mw(volume_val).map_err(unit_err)?;
                if fields.next().is_some() {
                    return Err(fail(lineno, "trailing fields after volume".into()));
                }
                steps[step].orders.push(OrderEvent { product, side, price, volume });
            }
            other => return Err(fail(lineno, format!("unknown row kind `{other}`"))),
        }
    }
    for (t, seen) in exog_seen.iter().enumerate() {
        if !seen {
            return Err(fail(0, format!("step {t} has no EXOG row")));
        }
    }
    if steps.is_empty() {
        return Err(fail(0, "day has no steps".into()));
    }
    Ok(DayRecord { day, steps })
}

/// Parses `YYYY-MM-DD` into `(year, month, day)` with range checks.
pub fn parse_day_id(id: &str) -> Option<(i64, u32, u32)> {
    let mut it = id.split('-');
    let y: i64 = it.next()?.parse().ok()?;
    let m: u32 = it.next()?.parse().ok()?;
    let d: u32 = it.next()?.parse().ok()?;
    if it.next().is_some() || !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return None;
    }
    Some((y, m, d))
}

/// Days since 1970-01-01 of a civil date (proleptic Gregorian).
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = y - if m <= 2 { 1 } else { 0 };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (m as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (y + if m <= 2 { 1 } else { 0 }, m, d)
}

/// The day id `offset` days after `id`.
pub fn offset_day_id(id: &str, offset: i64) -> Option<String> {
    let (y, m, d) = parse_day_id(id)?;
    let (y, m, d) = civil_from_days(days_from_civil(y, m, d) + offset);
    Some(format!("{y:04}-{m:02}-{d:02}"))
}

/// True for Saturday and Sunday.
pub fn day_is_weekend(id: &str) -> Option<bool> {
    let (y, m, d) = parse_day_id(id)?;
    // 1970-01-01 was a Thursday.
    let wd = (days_from_civil(y, m, d) + 4).rem_euclid(7);
    Some(wd == 5 || wd == 6)
}

/// Month number of the day id, 1..=12.
pub fn day_month(id: &str) -> Option<u32> {
    parse_day_id(id).map(|(_, m, _)| m)
}
