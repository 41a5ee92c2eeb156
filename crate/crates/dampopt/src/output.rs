//! results.csv, summary.json and trace.jsonl.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::sweep::{average_time_ratio, RowResult};

pub const CSV_COLUMNS: [&str; 14] = [
    "config_id",
    "j",
    "k",
    "problem",
    "mode",
    "g1_star",
    "g2_star",
    "hinf_value",
    "outer_iters",
    "rom_dim",
    "rel_gain_err",
    "rel_hinf_err",
    "wall_seconds",
    "termination_reason",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// One CSV record per row. Failed rows keep their ids and carry `error: …`
/// as the termination reason.
pub fn write_results_csv<W: Write>(w: W, rows: &[RowResult], timing: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in rows {
        let o = r.outcome.as_ref();
        let g = |i: usize| o.and_then(|o| o.g_star.get(i).copied()).map(num).unwrap_or_default();
        let oracle = o.and_then(|o| o.oracle.as_ref());
        let reason = match (o, &r.error) {
            (Some(o), _) => o.termination.clone(),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => String::new(),
        };
        out.write_record([
            r.config_id.to_string(),
            opt(r.j),
            opt(r.k),
            r.problem.clone(),
            r.mode.clone(),
            g(0),
            g(1),
            o.map(|o| num(o.hinf_value)).unwrap_or_default(),
            opt(o.map(|o| o.outer_iters)),
            opt(o.map(|o| o.rom_dim)),
            oracle.map(|x| num(x.rel_gain_err)).unwrap_or_default(),
            oracle.map(|x| num(x.rel_hinf_err)).unwrap_or_default(),
            o.filter(|_| timing).map(|o| num(o.wall_seconds)).unwrap_or_default(),
            reason,
        ])?;
    }
    out.flush().map_err(|source| CliError::Io { path: "results.csv".into(), source })?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    rows: &'a [RowResult],
    average_time_ratio: Option<f64>,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    config_id: usize,
    iteration: usize,
    gains: &'a [f64],
    omega: f64,
    reduced_value: f64,
    full_value: f64,
    rom_dimension: usize,
    inner_iterations: usize,
    hermite_repairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

pub fn write_trace<W: Write>(mut w: W, rows: &[RowResult]) -> Result<()> {
    for r in rows {
        let Some(o) = &r.outcome else { continue };
        for t in &o.trace {
            let line = TraceLine {
                config_id: r.config_id,
                iteration: t.iteration,
                gains: &t.gains,
                omega: t.omega,
                reduced_value: t.reduced_value,
                full_value: t.full_value,
                rom_dimension: t.rom_dimension,
                inner_iterations: t.inner_iterations,
                hermite_repairs: t.hermite_repairs,
                note: t.note.as_deref(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(io_err(Path::new("trace.jsonl")))?;
        }
    }
    Ok(())
}

/// Writes all three outputs into `dir`, creating it if needed.
pub fn write_all(dir: &Path, cfg: &RunConfig, rows: &[RowResult]) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let p = dir.join("results.csv");
    write_results_csv(File::create(&p).map_err(io_err(&p))?, rows, cfg.csv_timing)?;

    let p = dir.join("summary.json");
    let f = BufWriter::new(File::create(&p).map_err(io_err(&p))?);
    serde_json::to_writer_pretty(f, &Summary { config: cfg, rows, average_time_ratio: average_time_ratio(rows) })?;

    let p = dir.join("trace.jsonl");
    let mut f = BufWriter::new(File::create(&p).map_err(io_err(&p))?);
    write_trace(&mut f, rows)?;
    f.flush().map_err(io_err(&p))?;
    Ok(())
}
