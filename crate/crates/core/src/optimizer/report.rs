use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SpmlError};
use crate::scalar::Scalar;

/// Diagnostics for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    /// Step size of the single metric, or of the common metric in
    /// multi-task runs.
    pub eta: T,
    /// Violated triplets among the sampled batch, one entry per tracked
    /// stream (one per task for multi-task runs).
    pub violated: Vec<usize>,
    /// Running mean of the per-iteration batch hinge loss.
    pub hinge_running: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    pub records: Vec<IterationRecord<T>>,
    /// Whether the closing projection ran (per-step projection off).
    pub final_projection: bool,
}

impl<T: Scalar> TrainReport<T> {
    pub(crate) fn with_capacity(iterations: usize) -> Self {
        Self { records: Vec::with_capacity(iterations), final_projection: false }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn streams(&self) -> usize {
        self.records.first().map_or(0, |r| r.violated.len())
    }

    /// Violated-count series of stream `q`.
    pub fn violated_series(&self, q: usize) -> Vec<usize> {
        self.records.iter().map(|r| r.violated[q]).collect()
    }

    /// Tab-delimited table: `iteration eta violated_1..violated_Q hinge_avg`,
    /// one header line, plus a trailing `# final_projection=` comment.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("iteration\teta");
        for q in 1..=self.streams() {
            let _ = write!(out, "\tviolated_{q}");
        }
        out.push_str("\thinge_avg\n");
        for r in &self.records {
            let _ = write!(out, "{}\t{:e}", r.iteration, r.eta);
            for v in &r.violated {
                let _ = write!(out, "\t{v}");
            }
            let _ = writeln!(out, "\t{:e}", r.hinge_running);
        }
        let _ = writeln!(out, "# final_projection={}", self.final_projection);
        out
    }

    pub fn from_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| SpmlError::parse(origin, 1, "empty report"))?;
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() < 3 || cols[0] != "iteration" || cols[1] != "eta" || cols[cols.len() - 1] != "hinge_avg" {
            return Err(SpmlError::parse(origin, 1, "not a training report header"));
        }
        let streams = cols.len() - 3;
        let mut report = TrainReport { records: Vec::new(), final_projection: false };
        for (k, line) in lines {
            let no = k + 1;
            if let Some(rest) = line.strip_prefix("# final_projection=") {
                report.final_projection = rest.trim() == "true";
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(SpmlError::parse(origin, no, format!("expected {} columns", cols.len())));
            }
            let bad = |what: &str| SpmlError::parse(origin, no, format!("invalid {what}"));
            let iteration = fields[0].parse().map_err(|_| bad("iteration"))?;
            let eta = fields[1].parse::<T>().map_err(|_| bad("eta"))?;
            let violated = fields[2..2 + streams]
                .iter()
                .map(|f| f.parse::<usize>().map_err(|_| bad("violated count")))
                .collect::<Result<Vec<_>>>()?;
            let hinge_running = fields[2 + streams].parse::<T>().map_err(|_| bad("hinge average"))?;
            report.records.push(IterationRecord { iteration, eta, violated, hinge_running });
        }
        Ok(report)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| SpmlError::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SpmlError::io(path, e))?;
        Self::from_tsv(&text, path)
    }
}
