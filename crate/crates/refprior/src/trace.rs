//! Per-iteration training traces.

use std::io::Write;

use crate::csvio::fmt_f64;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub elapsed_ms: f64,
}

/// Objective value and wall time per iteration, plus optional snapshots of the
/// variational parameters every `snapshot_every` iterations (0 disables them).
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub rows: Vec<TraceRow>,
    pub snapshot_every: usize,
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

impl TrainTrace {
    pub fn new(snapshot_every: usize) -> Self {
        TrainTrace { rows: Vec::new(), snapshot_every, snapshots: Vec::new() }
    }

    pub fn record(&mut self, iteration: usize, objective: f64, elapsed_ms: f64, lambda: &[f64]) {
        self.rows.push(TraceRow { iteration, objective, elapsed_ms });
        if self.snapshot_every > 0 && iteration % self.snapshot_every == 0 {
            self.snapshots.push((iteration, lambda.to_vec()));
        }
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    /// Full export: iteration, objective, elapsed_ms.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "iteration,objective,elapsed_ms")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.iteration, fmt_f64(r.objective), fmt_f64(r.elapsed_ms))?;
        }
        Ok(())
    }

    /// Export without the wall-time column. This is what the CLI writes, so
    /// that reruns with the same config and seed stay byte-identical.
    pub fn write_csv_deterministic<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "iteration,objective")?;
        for r in &self.rows {
            writeln!(w, "{},{}", r.iteration, fmt_f64(r.objective))?;
        }
        Ok(())
    }
}
