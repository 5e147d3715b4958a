//! Run output: the per-level CSV, the timing CSV and the JSON summary.
//!
//! Floating-point columns are written in shortest round-trip form, so a CSV
//! read back with [`read_levels`] reproduces the records exactly.

use crate::adapt::{AdaptiveRun, LevelRecord, LevelTiming, RunSummary};
use crate::error::AdaptError;
use crate::vtk::write_vtk;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

pub const LEVELS_FILE: &str = "levels.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn write_levels<W: Write>(out: W, levels: &[LevelRecord]) -> Result<(), AdaptError> {
    let mut w = csv::Writer::from_writer(out);
    for l in levels {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_levels<R: Read>(input: R) -> Result<Vec<LevelRecord>, AdaptError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_timings<W: Write>(out: W, timings: &[LevelTiming]) -> Result<(), AdaptError> {
    let mut w = csv::Writer::from_writer(out);
    for t in timings {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `levels.csv`, `timing.csv`, `summary.json` and one VTK file per
/// snapshot into `dir`, creating it if needed. Returns the summary.
pub fn write_run(dir: &Path, run: &AdaptiveRun) -> Result<RunSummary, AdaptError> {
    fs::create_dir_all(dir)?;
    write_levels(BufWriter::new(File::create(dir.join(LEVELS_FILE))?), &run.levels)?;
    write_timings(BufWriter::new(File::create(dir.join(TIMING_FILE))?), &run.timings)?;
    let summary = RunSummary::of(run);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(dir.join(SUMMARY_FILE), json + "\n")?;
    for s in &run.snapshots {
        let mut w = BufWriter::new(File::create(dir.join(format!("mesh_{:03}.vtk", s.level)))?);
        write_vtk(
            &mut w,
            &s.mesh,
            &format!("{} level {}", run.config.problem, s.level),
            &[("u", &s.solution.values)],
            &[("indicator", &s.indicators)],
        )?;
        w.flush()?;
    }
    Ok(summary)
}
