//! Quantities written as `"<number> <unit>"`, converted to SI.

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Length,
    Frequency,
    Time,
    Angle,
    Speed,
    Snr,
}

impl Kind {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Kind::Length => &[("m", 1.0), ("km", 1e3), ("cm", 1e-2), ("mm", 1e-3)],
            Kind::Frequency => &[
                ("Hz", 1.0),
                ("kHz", 1e3),
                ("KHz", 1e3),
                ("MHz", 1e6),
                ("GHz", 1e9),
            ],
            Kind::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)],
            Kind::Angle => &[("rad", 1.0), ("deg", PI / 180.0)],
            Kind::Speed => &[("m/s", 1.0), ("km/h", 1.0 / 3.6)],
            Kind::Snr => &[("lin", 1.0)],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Length => "length",
            Kind::Frequency => "frequency",
            Kind::Time => "time",
            Kind::Angle => "angle",
            Kind::Speed => "speed",
            Kind::Snr => "SNR",
        }
    }
}

/// Parses `text` as a quantity of `kind`. SNRs accept `dB` or `lin`.
pub fn parse(text: &str, kind: Kind) -> Result<f64, String> {
    let t = text.trim();
    let (num, unit) = t.split_once(char::is_whitespace).ok_or_else(|| {
        format!(
            "`{t}` has no unit; write the {} as e.g. `{}`",
            kind.name(),
            example(kind)
        )
    })?;
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("`{num}` is not a number"))?;
    let unit = unit.trim();
    if kind == Kind::Snr && unit == "dB" {
        return Ok(10f64.powf(value / 10.0));
    }
    let scale = kind
        .units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            let known: Vec<&str> = kind.units().iter().map(|(u, _)| *u).collect();
            format!(
                "unknown {} unit `{unit}` (expected one of {})",
                kind.name(),
                known.join(", ")
            )
        })?;
    let v = value * scale;
    if !v.is_finite() {
        return Err(format!("`{t}` is not finite"));
    }
    Ok(v)
}

fn example(kind: Kind) -> &'static str {
    match kind {
        Kind::Length => "50 m",
        Kind::Frequency => "100 MHz",
        Kind::Time => "10 ms",
        Kind::Angle => "90 deg",
        Kind::Speed => "30 m/s",
        Kind::Snr => "30 dB",
    }
}
