//! Number formatting and the schedule CSV format.
//!
//! Console and JSON output round to 12 significant digits. CSV files use the
//! shortest decimal that parses back to the same `f64`.
//!
//! A schedule file starts with a `# kind=<strategy> period=<seconds>` line,
//! followed by a header and one row per epoch:
//!
//! ```text
//! # kind=minmax period=30.0
//! fraction,decode_order,power_1,power_2,rate_1,rate_2
//! 0.6333333333333333,2>1,47.99999999999999,14.999999999999998,1.0,2.0
//! 0.3666666666666667,1>2,3.0,59.99999999999999,1.0,2.0
//! ```

use std::io::Write;

use crate::error::{Error, Result};
use crate::scheduling::{Epoch, Schedule, StrategyKind};
use crate::types::{Permutation, PowerVector, RateVector};

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn sig12_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(sig12).collect()
}

/// Shortest round-trip decimal.
pub fn shortest(x: f64) -> String {
    format!("{x:?}")
}

/// `(a, b, c)` with every entry rounded by [`sig12`].
pub fn tuple(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| sig12(x).to_string()).collect();
    format!("({})", parts.join(", "))
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidValue {
        field: "schedule csv",
        reason: e.to_string(),
    }
}

pub fn write_schedule_csv<W: Write>(s: &Schedule, out: W) -> Result<()> {
    let n = s.n_nodes();
    let mut out = out;
    writeln!(out, "# kind={} period={}", s.kind, shortest(s.period)).map_err(csv_err)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["fraction".to_string(), "decode_order".to_string()];
    header.extend((1..=n).map(|i| format!("power_{i}")));
    header.extend((1..=n).map(|i| format!("rate_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for e in &s.epochs {
        let mut row = vec![shortest(e.duration_fraction), e.decode_order.to_string()];
        row.extend(e.powers.as_slice().iter().map(|&p| shortest(p)));
        row.extend(e.rates.as_slice().iter().map(|&r| shortest(r)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

pub fn schedule_csv_string(s: &Schedule) -> Result<String> {
    let mut buf = Vec::new();
    write_schedule_csv(s, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Parses a schedule file and checks the structural schedule invariants.
pub fn parse_schedule_csv(text: &str) -> Result<Schedule> {
    let mut lines = text.splitn(2, '\n');
    let meta = lines.next().unwrap_or("");
    let body = lines.next().unwrap_or("");
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| csv_err("missing `# kind=… period=…` line"))?;
    let mut kind = None;
    let mut period = None;
    for tok in meta.split_whitespace() {
        match tok.split_once('=') {
            Some(("kind", v)) => kind = Some(v.parse::<StrategyKind>()?),
            Some(("period", v)) => period = Some(v.parse::<f64>().map_err(|_| csv_err(format!("bad period `{v}`")))?),
            _ => return Err(csv_err(format!("unexpected header token `{tok}`"))),
        }
    }
    let kind = kind.ok_or_else(|| csv_err("header lacks kind"))?;
    let period = period.ok_or_else(|| csv_err("header lacks period"))?;

    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < 4 || (header.len() - 2) % 2 != 0 || &header[0] != "fraction" || &header[1] != "decode_order" {
        return Err(csv_err("header must be fraction,decode_order,power_1..N,rate_1..N"));
    }
    let n = (header.len() - 2) / 2;
    let mut epochs = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| csv_err(format!("row {}: column {} is not a number", k + 1, &header[j])))
        };
        let powers = (0..n).map(|i| num(2 + i)).collect::<Result<Vec<_>>>()?;
        let rates = (0..n).map(|i| num(2 + n + i)).collect::<Result<Vec<_>>>()?;
        epochs.push(Epoch {
            duration_fraction: num(0)?,
            decode_order: Permutation::parse_wire(&rec[1])?,
            powers: PowerVector::new(powers)?,
            rates: RateVector::new(rates)?,
        });
    }
    let s = Schedule { kind, epochs, period };
    s.validate()?;
    Ok(s)
}
