//! CSV writers. Numbers carry 12 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cptshift_core::units::to_hz;
use cptshift_core::{RootLocation, SweepRecord};
use sha2::{Digest, Sha256};

pub const RECORD_HEADER: [&str; 5] = ["m", "E2", "delta0_Hz", "dDelta0_dE2", "flags"];
pub const ROOT_HEADER: [&str; 6] = ["axis_value", "kind", "ordinal", "m", "delta0_Hz", "pzd_gap_m"];

pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn open(path: &Path) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(f)))
}

/// One row per grid point; δ_0 in Hz, the derivative in internal units.
pub fn emit_csv(records: &[SweepRecord], path: &Path) -> anyhow::Result<()> {
    let mut w = open(path)?;
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            num(r.m),
            num(r.e2),
            num(to_hz(r.delta0)),
            num(r.d_delta0_d_e2),
            r.flags.label(),
        ])?;
    }
    w.into_inner()?.flush()?;
    Ok(())
}

pub struct RootRow<'a> {
    pub axis_value: Option<f64>,
    pub root: &'a RootLocation,
    pub ordinal: usize,
}

pub fn emit_roots(rows: &[RootRow<'_>], path: &Path) -> anyhow::Result<()> {
    let mut w = open(path)?;
    w.write_record(ROOT_HEADER)?;
    for r in rows {
        let kind = match r.root.kind {
            cptshift_core::sweep::RootKind::Ip => "IP",
            cptshift_core::sweep::RootKind::Pzd => "PZD",
        };
        w.write_record([
            r.axis_value.map(num).unwrap_or_default(),
            kind.to_string(),
            r.ordinal.to_string(),
            num(r.root.m),
            num(to_hz(r.root.delta0)),
            r.root.pzd_gap_m.map(num).unwrap_or_default(),
        ])?;
    }
    w.into_inner()?.flush()?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cptshift_core::sweep::RecordFlags;

    fn record(m: f64) -> SweepRecord {
        SweepRecord {
            m,
            e2: 1.234e12,
            delta0: -12.5,
            d_delta0_d_e2: 3.3e-12,
            flags: RecordFlags {
                ip: true,
                ..Default::default()
            },
        }
    }

    #[test]
    fn one_record_gives_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        emit_csv(&[record(2.5)], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.ends_with('\n'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "m,E2,delta0_Hz,dDelta0_dE2,flags");
        assert!(lines[1].ends_with(",IP"));
    }

    #[test]
    fn empty_list_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        emit_csv(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "m,E2,delta0_Hz,dDelta0_dE2,flags\n");
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(num(-1234.5), "-1.23450000000e3");
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let p = Path::new("/nonexistent-dir/x.csv");
        assert!(emit_csv(&[], p).is_err());
    }
}
