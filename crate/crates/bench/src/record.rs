//! Per-trial result rows and their CSV encoding.

use std::io::Write;

pub const CSV_HEADER: &str =
    "experiment,method,D,shape_x,shape_y,K,K_over_M,seed,snr_db,runtime_s,residual_energy,status";

/// Index of the `runtime_s` column, the only non-reproducible field.
pub const RUNTIME_COLUMN: usize = 9;

/// Outcome of a single trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    /// The flattened dictionary would have had this many elements.
    Capped(u128),
    Failed(String),
}

impl TrialStatus {
    fn encode(&self) -> String {
        match self {
            TrialStatus::Ok => "ok".into(),
            TrialStatus::Capped(n) => format!("capped:{n}"),
            TrialStatus::Failed(msg) => {
                let clean: String = msg
                    .chars()
                    .map(|c| if c == ',' || c == '\n' { ';' } else { c })
                    .collect();
                format!("failed:{clean}")
            }
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: String,
    pub method: String,
    pub order: usize,
    pub shape_x: Vec<usize>,
    pub shape_y: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    /// `None` when undefined (all-zero ground truth or a failed trial).
    pub snr_db: Option<f64>,
    pub runtime_s: Option<f64>,
    pub residual_energy: Option<f64>,
    pub status: TrialStatus,
}

impl TrialRecord {
    /// Total number of measurements `M = ∏ M_d`.
    pub fn m_total(&self) -> usize {
        self.shape_y.iter().product()
    }

    pub fn k_over_m(&self) -> f64 {
        self.k as f64 / self.m_total() as f64
    }

    /// Fields in [`CSV_HEADER`] order.
    pub fn csv_fields(&self) -> Vec<String> {
        let shape = |s: &[usize]| s.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v}"));
        vec![
            self.experiment.clone(),
            self.method.clone(),
            self.order.to_string(),
            shape(&self.shape_x),
            shape(&self.shape_y),
            self.k.to_string(),
            self.k_over_m().to_string(),
            self.seed.to_string(),
            opt(self.snr_db),
            self.runtime_s
                .map_or_else(|| "undefined".into(), |t| format!("{t:.6}")),
            opt(self.residual_energy),
            self.status.encode(),
        ]
    }

    pub fn to_csv_row(&self) -> String {
        self.csv_fields().join(",")
    }
}

pub fn write_csv<W: Write>(records: &[TrialRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER.split(','))?;
    for r in records {
        out.write_record(r.csv_fields())?;
    }
    out.flush()?;
    Ok(())
}

/// Drops the runtime column from every line, for reproducibility checks.
pub fn strip_runtime(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(i, _)| *i != RUNTIME_COLUMN)
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
