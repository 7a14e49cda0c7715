//! CSV readers and writers for run logs and summaries.
//!
//! Floats serialize with 17 significant digits ({:.16e}), which round-trips
//! every finite f64 exactly, and files are assembled as whole strings with
//! '\n' endings so identical data produces identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{SummaryRow, ThresholdCrossing};
use crate::runtime::RoundRecord;

/// Shortest-exact would be nicer to read, but a fixed 17-significant-digit
/// scientific form keeps the column format stable and still exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> std::result::Result<f64, std::num::ParseFloatError> {
    s.parse::<f64>()
}

fn csv_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    name: &str,
    path: &Path,
    line: usize,
) -> Result<T> {
    field
        .parse::<T>()
        .map_err(|_| csv_err(path, line, format!("bad {name} value '{field}'")))
}

pub fn round_csv_header(k: usize) -> String {
    let mut h =
        String::from("run_id,round,cumulative_episodes,mean_reward,ema_reward,mean_loss,grad_norm");
    for i in 0..k {
        let _ = write!(h, ",agent_{i}_reward,agent_{i}_weight");
    }
    h
}

/// Writes one run's round records. Weight cells are empty for strategies
/// without per-agent weights.
pub fn write_round_csv(path: &Path, k: usize, records: &[RoundRecord]) -> Result<()> {
    let mut out = round_csv_header(k);
    out.push('\n');
    for rec in records {
        if rec.agents.len() != k {
            return Err(Error::ShapeMismatch {
                what: "round record agents",
                expected: k,
                actual: rec.agents.len(),
            });
        }
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            rec.run_id,
            rec.round,
            rec.cumulative_episodes,
            fmt_f64(rec.mean_reward),
            fmt_f64(rec.ema_reward),
            fmt_f64(rec.mean_loss),
            fmt_f64(rec.grad_norm),
        );
        for a in &rec.agents {
            let _ = write!(out, ",{}", fmt_f64(a.reward));
            match a.weight {
                Some(w) => {
                    let _ = write!(out, ",{}", fmt_f64(w));
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One parsed row of a round CSV. Per-agent losses are not logged, so this
/// is narrower than the in-memory record.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRoundRow {
    pub run_id: usize,
    pub round: usize,
    pub cumulative_episodes: usize,
    pub mean_reward: f64,
    pub ema_reward: f64,
    pub mean_loss: f64,
    pub grad_norm: f64,
    pub agent_rewards: Vec<f64>,
    pub agent_weights: Vec<Option<f64>>,
}

/// Reads a round CSV, returning the agent count from the header and the
/// rows.
pub fn read_round_csv(path: &Path) -> Result<(usize, Vec<CsvRoundRow>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_err(path, 1, "missing header"))?;

    let fixed = 7;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < fixed || !(cols.len() - fixed).is_multiple_of(2) {
        return Err(csv_err(path, 1, "malformed header"));
    }
    let k = (cols.len() - fixed) / 2;
    if header != round_csv_header(k) {
        return Err(csv_err(path, 1, "unexpected header columns"));
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != fixed + 2 * k {
            return Err(csv_err(
                path,
                lineno,
                format!("expected {} fields, got {}", fixed + 2 * k, fields.len()),
            ));
        }
        let mut agent_rewards = Vec::with_capacity(k);
        let mut agent_weights = Vec::with_capacity(k);
        for i in 0..k {
            agent_rewards.push(parse_field(
                fields[fixed + 2 * i],
                "agent reward",
                path,
                lineno,
            )?);
            let w = fields[fixed + 2 * i + 1];
            agent_weights.push(if w.is_empty() {
                None
            } else {
                Some(parse_field(w, "agent weight", path, lineno)?)
            });
        }
        rows.push(CsvRoundRow {
            run_id: parse_field(fields[0], "run_id", path, lineno)?,
            round: parse_field(fields[1], "round", path, lineno)?,
            cumulative_episodes: parse_field(fields[2], "cumulative_episodes", path, lineno)?,
            mean_reward: parse_field(fields[3], "mean_reward", path, lineno)?,
            ema_reward: parse_field(fields[4], "ema_reward", path, lineno)?,
            mean_loss: parse_field(fields[5], "mean_loss", path, lineno)?,
            grad_norm: parse_field(fields[6], "grad_norm", path, lineno)?,
            agent_rewards,
            agent_weights,
        });
    }
    Ok((k, rows))
}

/// Cross-run averaged series row.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedRow {
    pub round: usize,
    pub mean_reward: f64,
    pub ema_reward: f64,
}

pub const AVERAGED_HEADER: &str = "round,mean_reward,ema_reward";

pub fn write_averaged_csv(path: &Path, rows: &[AveragedRow]) -> Result<()> {
    let mut out = String::from(AVERAGED_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.round,
            fmt_f64(r.mean_reward),
            fmt_f64(r.ema_reward)
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_averaged_csv(path: &Path) -> Result<Vec<AveragedRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == AVERAGED_HEADER => {}
        _ => return Err(csv_err(path, 1, "unexpected header columns")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(csv_err(path, lineno, "expected 3 fields"));
        }
        rows.push(AveragedRow {
            round: parse_field(fields[0], "round", path, lineno)?,
            mean_reward: parse_field(fields[1], "mean_reward", path, lineno)?,
            ema_reward: parse_field(fields[2], "ema_reward", path, lineno)?,
        });
    }
    Ok(rows)
}

pub const SUMMARY_HEADER: &str =
    "algorithm,avgRew,avgEndRew,percentAvg,percentEnd,threshold_episode";

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        if r.algorithm.contains(',') || r.algorithm.contains('\n') {
            return Err(Error::invalid("algorithm names must be csv-safe"));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.algorithm,
            fmt_f64(r.avg_rew),
            opt_f64(r.avg_end_rew),
            opt_f64(r.percent_avg),
            opt_f64(r.percent_end),
            r.threshold_episode,
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SUMMARY_HEADER => {}
        _ => return Err(csv_err(path, 1, "unexpected header columns")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(csv_err(path, lineno, "expected 6 fields"));
        }
        let opt = |f: &str, name: &str| -> Result<Option<f64>> {
            if f.is_empty() {
                Ok(None)
            } else {
                parse_field(f, name, path, lineno).map(Some)
            }
        };
        rows.push(SummaryRow {
            algorithm: fields[0].to_string(),
            avg_rew: parse_field(fields[1], "avgRew", path, lineno)?,
            avg_end_rew: opt(fields[2], "avgEndRew")?,
            percent_avg: opt(fields[3], "percentAvg")?,
            percent_end: opt(fields[4], "percentEnd")?,
            threshold_episode: ThresholdCrossing::parse(fields[5])
                .map_err(|e| csv_err(path, lineno, e.to_string()))?,
        });
    }
    Ok(rows)
}

/// Human-readable summary table: fixed two-decimal floats, percents with a
/// '%' suffix, '-' for unavailable values, columns padded to fit.
pub fn write_summary_text(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let headers = [
        "algorithm",
        "avgRew",
        "avgEndRew",
        "percentAvg",
        "percentEnd",
        "threshold",
    ];
    let fmt2 = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
    let pct = |v: Option<f64>| v.map(|x| format!("{x:.2}%")).unwrap_or_else(|| "-".into());
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.algorithm.clone(),
                format!("{:.2}", r.avg_rew),
                fmt2(r.avg_end_rew),
                pct(r.percent_avg),
                pct(r.percent_end),
                r.threshold_episode.to_string(),
            ]
        })
        .collect();

    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(c.len());
        }
    }

    let mut out = String::new();
    for (i, h) in headers.iter().enumerate() {
        if i > 0 {
            out.push_str("  ");
        }
        if i == 0 {
            let _ = write!(out, "{h:<width$}", width = widths[i]);
        } else {
            let _ = write!(out, "{h:>width$}", width = widths[i]);
        }
    }
    out.push('\n');
    for row in &cells {
        for (i, c) in row.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                let _ = write!(out, "{c:<width$}", width = widths[i]);
            } else {
                let _ = write!(out, "{c:>width$}", width = widths[i]);
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
