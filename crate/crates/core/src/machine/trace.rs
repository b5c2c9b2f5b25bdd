use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;

/// What to sample along an evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceConfig {
    /// Record every `stride` steps (plus the final step); 0 disables tracing.
    pub stride: usize,
    /// Include full σ and X snapshots.
    pub states: bool,
    /// Include continuous coordinates ξ (turns on winding tracking).
    pub xi: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            stride: 100,
            states: false,
            xi: false,
        }
    }
}

impl TraceConfig {
    pub fn off() -> Self {
        TraceConfig {
            stride: 0,
            ..Self::default()
        }
    }

    pub fn full(stride: usize) -> Self {
        TraceConfig {
            stride,
            states: true,
            xi: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub t: f64,
    pub cut: f64,
    pub relaxed_cut: f64,
    pub sigma: Option<Vec<i8>>,
    pub x: Option<Vec<f64>>,
    pub xi: Option<Vec<f64>>,
}

/// Sampled records in strictly increasing step order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    records: Vec<TraceRecord>,
}

impl Trajectory {
    pub(crate) fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.last_step().is_none_or(|s| s < record.step));
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last_step(&self) -> Option<usize> {
        self.records.last().map(|r| r.step)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes `step,t,cut,relaxed_cut` followed by `sigma_i`, `x_i` and
    /// `xi_i` columns when those were sampled.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let first = self.records.first();
        let n_sigma = first.and_then(|r| r.sigma.as_ref()).map_or(0, Vec::len);
        let n_x = first.and_then(|r| r.x.as_ref()).map_or(0, Vec::len);
        let n_xi = first.and_then(|r| r.xi.as_ref()).map_or(0, Vec::len);

        let mut line = String::from("step,t,cut,relaxed_cut");
        for (prefix, n) in [("sigma", n_sigma), ("x", n_x), ("xi", n_xi)] {
            for i in 0..n {
                let _ = write!(line, ",{prefix}_{i}");
            }
        }
        writeln!(out, "{line}")?;

        for r in &self.records {
            line.clear();
            let _ = write!(
                line,
                "{},{},{},{}",
                r.step,
                format_g9(r.t),
                format_g9(r.cut),
                format_g9(r.relaxed_cut)
            );
            if let Some(sigma) = &r.sigma {
                for s in sigma {
                    let _ = write!(line, ",{s}");
                }
            }
            for values in [&r.x, &r.xi].into_iter().flatten() {
                for v in values {
                    let _ = write!(line, ",{}", format_g9(*v));
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Nine significant digits, `%g` style: fixed notation for moderate
/// exponents with trailing zeros removed, scientific otherwise.
pub fn format_g9(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // exponent after rounding to 9 digits
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        let (mantissa, e) = sci.split_at(sci.find('e').unwrap());
        format!("{}{}", trim_zeros(mantissa), e)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_formatting() {
        assert_eq!(format_g9(0.0), "0");
        assert_eq!(format_g9(1.0), "1");
        assert_eq!(format_g9(0.25), "0.25");
        assert_eq!(format_g9(-3.5), "-3.5");
        assert_eq!(format_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_g9(123456789.4), "123456789");
        assert_eq!(format_g9(1234567894.0), "1.23456789e9");
        assert_eq!(format_g9(0.00001234), "1.234e-5");
        assert_eq!(format_g9(0.0001234), "0.0001234");
        assert_eq!(format_g9(0.01 * 3.0), "0.03");
    }

    #[test]
    fn csv_header_and_rows() {
        let mut t = Trajectory::default();
        t.push(TraceRecord {
            step: 0,
            t: 0.0,
            cut: 1.0,
            relaxed_cut: 1.25,
            sigma: Some(vec![1, -1]),
            x: Some(vec![0.5, -0.125]),
            xi: None,
        });
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "step,t,cut,relaxed_cut,sigma_0,sigma_1,x_0,x_1\n0,0,1,1.25,1,-1,0.5,-0.125\n"
        );
    }
}
