//! Per-iteration solver records.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Error-level bisection: objective is the upper end of the bracket,
    /// residual is `sum p - P`, step is the bracket width.
    Bisection,
    /// MM outer loop: residual is the largest relative rate-bound violation.
    Mm,
    /// Mirror-prox: residual is the normalized sup-norm move of the
    /// iterate, step is the step size in effect.
    MirrorProx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
    pub step: f64,
    /// Seconds since the solver started.
    pub elapsed: f64,
    /// Set when the iterate was reset (mirror-prox divergence guard).
    pub restarted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub kind: TraceKind,
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn new(kind: TraceKind) -> Self {
        Self {
            kind,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.iteration < record.iteration));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn restarts(&self) -> usize {
        self.records.iter().filter(|r| r.restarted).count()
    }

    /// Seconds until the objective first reached `target`, if it did.
    pub fn time_to(&self, target: f64) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.objective <= target)
            .map(|r| r.elapsed)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        match self.kind {
            TraceKind::Bisection => w.write_record([
                "iteration",
                "mu_high",
                "power_excess",
                "bracket_width",
                "elapsed_s",
            ])?,
            TraceKind::Mm => w.write_record(["iteration", "objective", "max_bound_residual", "elapsed_s"])?,
            TraceKind::MirrorProx => w.write_record([
                "iteration",
                "delta_p_inf",
                "objective",
                "step_size",
                "restarted",
                "elapsed_s",
            ])?,
        }
        let f = |x: f64| format!("{x:.11e}");
        for r in &self.records {
            let it = r.iteration.to_string();
            match self.kind {
                TraceKind::Bisection => {
                    w.write_record([it, f(r.objective), f(r.residual), f(r.step), f(r.elapsed)])?
                }
                TraceKind::Mm => w.write_record([it, f(r.objective), f(r.residual), f(r.elapsed)])?,
                TraceKind::MirrorProx => w.write_record([
                    it,
                    f(r.residual),
                    f(r.objective),
                    f(r.step),
                    u8::from(r.restarted).to_string(),
                    f(r.elapsed),
                ])?,
            }
        }
        w.flush()?;
        Ok(())
    }
}
