//! CSV and JSON emitters.
//!
//! Every CSV starts with a header, even when there are no rows. Floating
//! values use Rust's shortest round-trip formatting, so identical inputs
//! give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::barriers::{BarrierEval, Region};
use crate::error::Result;
use crate::solver::Trajectory;
use crate::verifier::Sample;

pub const BARRIER_HEADER: &[&str] =
    &["r", "t", "value", "du_dt", "dum_dr", "d2um_dr2", "lap_um", "F_or_G", "region"];
pub const SNAPSHOT_HEADER: &[&str] = &["t", "r", "u"];
pub const SERIES_HEADER: &[&str] = &["t", "supnorm", "front"];
pub const SAMPLE_HEADER: &[&str] =
    &["r", "t", "value", "profile", "region", "residual", "tolerance", "margin"];

/// Write `rows` under `header`; the row type must serialize its fields in
/// header order.
pub fn write_csv<W: Write, T: Serialize>(out: W, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Serialize)]
struct BarrierRow {
    r: f64,
    t: f64,
    value: f64,
    du_dt: f64,
    dum_dr: f64,
    d2um_dr2: f64,
    lap_um: f64,
    profile: f64,
    region: Region,
}

pub fn write_barrier_rows<W: Write>(out: W, rows: &[(f64, f64, BarrierEval)]) -> Result<()> {
    write_csv(
        out,
        BARRIER_HEADER,
        rows.iter().map(|&(r, t, ev)| BarrierRow {
            r,
            t,
            value: ev.value,
            du_dt: ev.du_dt,
            dum_dr: ev.dum_dr,
            d2um_dr2: ev.d2um_dr2,
            lap_um: ev.lap_um,
            profile: ev.profile,
            region: ev.region,
        }),
    )
}

/// Long format `(t, r, u)`, one row per node per snapshot.
pub fn write_snapshots<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let h = traj.grid.h();
    write_csv(
        out,
        SNAPSHOT_HEADER,
        traj.snapshots
            .iter()
            .flat_map(|s| s.u.iter().enumerate().map(move |(i, &u)| (s.t, i as f64 * h, u))),
    )
}

pub fn write_series<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    write_csv(
        out,
        SERIES_HEADER,
        traj.supnorm_series
            .iter()
            .zip(&traj.front_series)
            .map(|(&(t, n), &(_, f))| (t, n, f)),
    )
}

pub fn write_samples<W: Write>(out: W, samples: &[Sample]) -> Result<()> {
    write_csv(out, SAMPLE_HEADER, samples.iter())
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_keeps_header() {
        let mut buf = Vec::new();
        write_samples(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SAMPLE_HEADER.join(",") + "\n");
    }

    #[test]
    fn barrier_rows_follow_header() {
        let ev = BarrierEval {
            value: 0.5,
            du_dt: -0.25,
            dum_dr: -0.1,
            d2um_dr2: 0.01,
            lap_um: 0.0,
            profile: 0.5,
            region: Region::PositiveCore,
        };
        let mut buf = Vec::new();
        write_barrier_rows(&mut buf, &[(0.0, 0.0, ev)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "0.0,0.0,0.5,-0.25,-0.1,0.01,0.0,0.5,positive_core");
    }
}
