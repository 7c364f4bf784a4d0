//! CSV emission, number formatting and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::matrixkit::vec_norm;
use crate::neuron::SpikeEvent;
use crate::simulator::SimResult;

pub const DEFAULT_PRECISION: usize = 9;

/// `%g`-style rendering with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // the exponent after rounding decides the layout
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header `t,x1..xn,xbar1..xbarn,xtilde_norm`, one row per sample.
pub fn trajectory_csv(sim: &SimResult, precision: usize) -> String {
    let nx = sim.states.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=nx {
        write!(out, ",x{i}").unwrap();
    }
    for i in 1..=nx {
        write!(out, ",xbar{i}").unwrap();
    }
    out.push_str(",xtilde_norm\n");
    for k in 0..sim.times.len() {
        out.push_str(&fmt_sig(sim.times[k], precision));
        for v in sim.states[k].iter().chain(&sim.reference[k]) {
            out.push(',');
            out.push_str(&fmt_sig(*v, precision));
        }
        out.push(',');
        out.push_str(&fmt_sig(vec_norm(&sim.state_error[k]), precision));
        out.push('\n');
    }
    out
}

/// Header `t,neuron_id,channel,signed_amplitude`, one row per spike.
pub fn spikes_csv(spikes: &[SpikeEvent], precision: usize) -> String {
    let mut out = String::from("t,neuron_id,channel,signed_amplitude\n");
    for s in spikes {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_sig(s.time, precision),
            s.neuron_id,
            s.channel,
            fmt_sig(s.signed_amplitude, precision)
        )
        .unwrap();
    }
    out
}

/// Parses a numeric CSV with one header line.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty CSV")?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 2)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!(
                "line {}: {} fields, expected {}",
                n + 2,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0, 9), "0");
        assert_eq!(fmt_sig(1.0, 9), "1");
        assert_eq!(fmt_sig(-2.5, 9), "-2.5");
        assert_eq!(fmt_sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(fmt_sig(123_456_789.4, 9), "123456789");
        assert_eq!(fmt_sig(1_234_567_891.0, 9), "1.23456789e9");
        assert_eq!(fmt_sig(1.5e-7, 9), "1.5e-7");
        assert_eq!(fmt_sig(0.000_123_456_789_12, 9), "0.000123456789");
        assert_eq!(fmt_sig(9.999_999_999_7, 9), "10");
    }

    #[test]
    fn round_trip_precision() {
        for &v in &[std::f64::consts::PI, -1e-9 / 7.0, 12345.678901234, 5.51] {
            let back: f64 = fmt_sig(v, 9).parse().unwrap();
            assert!((back - v).abs() <= 5e-9 * v.abs(), "{v} -> {back}");
        }
    }

    #[test]
    fn spike_rows() {
        let s = [SpikeEvent {
            time: 0.5,
            neuron_id: 3,
            channel: 1,
            signed_amplitude: -0.04,
        }];
        assert_eq!(
            spikes_csv(&s, 9),
            "t,neuron_id,channel,signed_amplitude\n0.5,3,1,-0.04\n"
        );
        let (h, rows) = parse_csv(&spikes_csv(&s, 9)).unwrap();
        assert_eq!(h.len(), 4);
        assert_eq!(rows, vec![vec![0.5, 3.0, 1.0, -0.04]]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b");
        assert!(!dir.path().join("sub/out.csv.tmp").exists());
    }
}
