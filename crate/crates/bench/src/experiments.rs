//! Reproductions of the recovery-quality, phase-transition and timing
//! experiments.
//!
//! Every trial owns a [`SeededRng`] derived from the master seed and its
//! coordinates, so trials are independent and may run in any order; rows are
//! always emitted in coordinate order.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use hdsl0::textio::save_tensor;
use hdsl0::{
    derive_seed, label_tag, recover, snr_db, Config, DictionarySet, Error, Matrix, SeededRng,
    Tensor, DEFAULT_KRON_CAP, SNR_CAP_DB,
};

use crate::instance::{build_equivalent_problems, generate_instance, Instance, NoiseLevel};
use crate::record::{write_csv, TrialRecord, TrialStatus};

/// Mean SNR below which recovery counts as collapsed.
pub const COLLAPSE_SNR_DB: f64 = 20.0;

/// A recovery is "all zero" when every entry is at most this in magnitude.
pub const ZERO_TOL: f64 = 1e-6;

/// Settings shared by all experiments.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub trials: usize,
    pub solver: Config,
    pub noise: NoiseLevel,
    pub cap_elements: usize,
    /// Run trials concurrently. Timing runs ignore this unless set explicitly.
    pub parallel: bool,
    /// Replaces the sparsity of both simulation-1 cases.
    pub k_override: Option<usize>,
    /// Names of the simulation-1 cases to run.
    pub sim1_cases: Vec<String>,
    pub sim2_ratios: Vec<f64>,
    /// Skip the remaining points of an order once its mean SNR collapses.
    pub sim2_stop_at_collapse: bool,
    pub sim2_orders: Vec<usize>,
    pub sim3_sizes: Vec<usize>,
}

impl ExperimentSpec {
    pub fn new(seed: u64, trials: usize) -> Self {
        Self {
            seed,
            trials,
            solver: Config::noisy(),
            noise: NoiseLevel::default(),
            cap_elements: DEFAULT_KRON_CAP,
            parallel: false,
            k_override: None,
            sim1_cases: sim1_cases().iter().map(|c| c.name.to_string()).collect(),
            sim2_ratios: default_sim2_ratios(),
            sim2_stop_at_collapse: false,
            sim2_orders: vec![1, 2, 3],
            sim3_sizes: vec![10, 20, 30, 40, 50],
        }
    }
}

/// `K/M ∈ {0.025, 0.05, …, 0.7}`.
pub fn default_sim2_ratios() -> Vec<f64> {
    (1..=28).map(|i| i as f64 * 0.025).collect()
}

fn trial_seed(spec: &ExperimentSpec, experiment: &str, point: u64, trial: u64) -> u64 {
    derive_seed(spec.seed, &[label_tag(experiment), point, trial])
}

fn map_trials<I, F, R>(parallel: bool, items: Vec<I>, f: F) -> Vec<R>
where
    I: Send,
    R: Send,
    F: Fn(I) -> R + Sync + Send,
{
    if parallel {
        items.into_par_iter().map(f).collect()
    } else {
        items.into_iter().map(f).collect()
    }
}

/// Fraction of true nonzeros whose recovered magnitude exceeds ten times the
/// largest recovered magnitude off the true support. `None` for an empty
/// support.
pub fn support_recovery_fraction(x_true: &Tensor, x_hat: &Tensor) -> Option<f64> {
    let support: Vec<usize> = (0..x_true.len())
        .filter(|&i| x_true.data()[i] != 0.0)
        .collect();
    if support.is_empty() {
        return None;
    }
    let off = x_true
        .data()
        .iter()
        .zip(x_hat.data())
        .filter(|(t, _)| **t == 0.0)
        .fold(0.0f64, |m, (_, h)| m.max(h.abs()));
    let hits = support
        .iter()
        .filter(|&&i| x_hat.data()[i].abs() > 10.0 * off)
        .count();
    Some(hits as f64 / support.len() as f64)
}

struct SolveInput<'a> {
    experiment: &'a str,
    method: String,
    dicts: Vec<Matrix>,
    y: Tensor,
    x_true: &'a Tensor,
    k: usize,
    seed: u64,
}

/// Solves one problem, mapping the estimate back to the shape of `x_true`.
fn solve_trial(input: SolveInput<'_>, cfg: &Config) -> (TrialRecord, Option<Tensor>) {
    let mut record = TrialRecord {
        experiment: input.experiment.to_string(),
        method: input.method,
        order: input.dicts.len(),
        shape_x: input.dicts.iter().map(Matrix::cols).collect(),
        shape_y: input.dicts.iter().map(Matrix::rows).collect(),
        k: input.k,
        seed: input.seed,
        snr_db: None,
        runtime_s: None,
        residual_energy: None,
        status: TrialStatus::Ok,
    };
    let outcome = DictionarySet::new(input.dicts)
        .and_then(|set| recover(&input.y, &set, cfg))
        .and_then(|rep| {
            let x_hat = rep.x_hat.clone().reshape(input.x_true.shape())?;
            Ok((rep, x_hat))
        });
    match outcome {
        Ok((rep, x_hat)) => {
            record.runtime_s = Some(rep.elapsed_s);
            record.residual_energy = Some(rep.residual_energy);
            record.snr_db = snr_db(input.x_true, &x_hat).ok();
            (record, Some(x_hat))
        }
        Err(e) => {
            record.status = TrialStatus::Failed(e.to_string());
            (record, None)
        }
    }
}

fn tensor_method(order: usize) -> String {
    format!("tensor-{order}d")
}

// ---------------------------------------------------------------------------
// Simulation 1

/// One fixed recovery setup of simulation 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim1Case {
    pub name: &'static str,
    pub extents_x: Vec<usize>,
    pub extents_y: Vec<usize>,
    pub k: usize,
}

impl Sim1Case {
    /// `1 − M/N`.
    pub fn compression(&self) -> f64 {
        let m: usize = self.extents_y.iter().product();
        let n: usize = self.extents_x.iter().product();
        1.0 - m as f64 / n as f64
    }
}

/// 50×50 with two 30×50 dictionaries, K = 150; and 20×20×20 with three
/// 12×20 dictionaries, K = 100.
pub fn sim1_cases() -> Vec<Sim1Case> {
    vec![
        Sim1Case {
            name: "sim1-2d",
            extents_x: vec![50, 50],
            extents_y: vec![30, 30],
            k: 150,
        },
        Sim1Case {
            name: "sim1-3d",
            extents_x: vec![20, 20, 20],
            extents_y: vec![12, 12, 12],
            k: 100,
        },
    ]
}

#[derive(Debug, Clone)]
pub struct Sim1Trial {
    pub record: TrialRecord,
    pub x_true: Tensor,
    pub x_hat: Option<Tensor>,
    pub support_fraction: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Sim1CaseResult {
    pub case: Sim1Case,
    pub trials: Vec<Sim1Trial>,
}

impl Sim1CaseResult {
    pub fn mean_snr_db(&self) -> Option<f64> {
        mean(self.trials.iter().filter_map(|t| t.record.snr_db))
    }

    pub fn mean_support_fraction(&self) -> Option<f64> {
        mean(self.trials.iter().filter_map(|t| t.support_fraction))
    }
}

#[derive(Debug, Clone)]
pub struct Sim1Outcome {
    pub cases: Vec<Sim1CaseResult>,
}

impl Sim1Outcome {
    pub fn records(&self) -> Vec<TrialRecord> {
        self.cases
            .iter()
            .flat_map(|c| c.trials.iter().map(|t| t.record.clone()))
            .collect()
    }

    pub fn case(&self, name: &str) -> Option<&Sim1CaseResult> {
        self.cases.iter().find(|c| c.case.name == name)
    }

    /// Writes `trials.csv`, `sim1_summary.csv`, and for the first trial of
    /// each case the true/recovered value pairs and both tensors.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_records(&self.records(), &dir.join("trials.csv"))?;
        let mut summary =
            String::from("case,trials,K,compression,mean_snr_db,mean_support_fraction\n");
        for c in &self.cases {
            summary.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.case.name,
                c.trials.len(),
                c.trials.first().map_or(c.case.k, |t| t.record.k),
                c.case.compression(),
                fmt_opt(c.mean_snr_db()),
                fmt_opt(c.mean_support_fraction())
            ));
            if let Some(first) = c.trials.first() {
                save_tensor(
                    &first.x_true,
                    dir.join(format!("{}_x_true.txt", c.case.name)),
                )?;
                if let Some(x_hat) = &first.x_hat {
                    save_tensor(x_hat, dir.join(format!("{}_x_hat.txt", c.case.name)))?;
                    let mut values = String::from("index,true,recovered\n");
                    for (i, (t, h)) in first.x_true.data().iter().zip(x_hat.data()).enumerate() {
                        values.push_str(&format!("{i},{t},{h}\n"));
                    }
                    fs::write(dir.join(format!("{}_values.csv", c.case.name)), values)?;
                }
            }
        }
        fs::write(dir.join("sim1_summary.csv"), summary)?;
        Ok(())
    }
}

fn run_instance_trial(
    experiment: &str,
    inst: &Instance,
    k: usize,
    seed: u64,
    cfg: &Config,
) -> (TrialRecord, Option<Tensor>) {
    solve_trial(
        SolveInput {
            experiment,
            method: tensor_method(inst.dicts.len()),
            dicts: inst.dicts.clone(),
            y: inst.y.clone(),
            x_true: &inst.x_true,
            k,
            seed,
        },
        cfg,
    )
}

fn failed_record(
    experiment: &str,
    method: String,
    extents_x: &[usize],
    extents_y: &[usize],
    k: usize,
    seed: u64,
    msg: String,
) -> TrialRecord {
    TrialRecord {
        experiment: experiment.into(),
        method,
        order: extents_x.len(),
        shape_x: extents_x.to_vec(),
        shape_y: extents_y.to_vec(),
        k,
        seed,
        snr_db: None,
        runtime_s: None,
        residual_energy: None,
        status: TrialStatus::Failed(msg),
    }
}

pub fn run_sim1(spec: &ExperimentSpec) -> Sim1Outcome {
    let cases = sim1_cases()
        .into_iter()
        .enumerate()
        .filter(|(_, c)| spec.sim1_cases.iter().any(|n| n == c.name))
        .map(|(ci, mut case)| {
            if let Some(k) = spec.k_override {
                case.k = k;
            }
            let coords: Vec<u64> = (0..spec.trials as u64).collect();
            let trials = map_trials(spec.parallel, coords, |t| {
                let seed = trial_seed(spec, case.name, ci as u64, t);
                let mut rng = SeededRng::new(seed);
                match generate_instance(
                    &mut rng,
                    &case.extents_x,
                    &case.extents_y,
                    case.k,
                    spec.noise,
                ) {
                    Ok(inst) => {
                        let (record, x_hat) =
                            run_instance_trial(case.name, &inst, case.k, seed, &spec.solver);
                        let support_fraction = x_hat
                            .as_ref()
                            .and_then(|h| support_recovery_fraction(&inst.x_true, h));
                        Sim1Trial {
                            record,
                            x_true: inst.x_true,
                            x_hat,
                            support_fraction,
                        }
                    }
                    Err(e) => Sim1Trial {
                        record: failed_record(
                            case.name,
                            tensor_method(case.extents_x.len()),
                            &case.extents_x,
                            &case.extents_y,
                            case.k,
                            seed,
                            e.to_string(),
                        ),
                        x_true: Tensor::zeros(&case.extents_x).expect("valid case extents"),
                        x_hat: None,
                        support_fraction: None,
                    },
                }
            });
            Sim1CaseResult { case, trials }
        })
        .collect();
    Sim1Outcome { cases }
}

// ---------------------------------------------------------------------------
// Simulation 2

/// Dictionary sizes of the phase-transition sweep: one 120×200 dictionary
/// for D = 1, 12×20 per mode otherwise.
pub fn sim2_dims(order: usize) -> (Vec<usize>, Vec<usize>) {
    if order == 1 {
        (vec![200], vec![120])
    } else {
        (vec![20; order], vec![12; order])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sim2Point {
    pub order: usize,
    pub k: usize,
    pub m_total: usize,
    pub trials: usize,
    /// Mean over trials with a defined SNR. For K = 0 the point is at the
    /// cap when every recovery is zero.
    pub mean_snr_db: Option<f64>,
}

impl Sim2Point {
    pub fn k_over_m(&self) -> f64 {
        self.k as f64 / self.m_total as f64
    }
}

#[derive(Debug, Clone)]
pub struct Sim2Outcome {
    pub records: Vec<TrialRecord>,
    pub points: Vec<Sim2Point>,
}

impl Sim2Outcome {
    /// First `K/M` whose mean SNR drops below [`COLLAPSE_SNR_DB`].
    pub fn collapse_point(&self, order: usize) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.order == order)
            .find(|p| p.mean_snr_db.is_none_or(|s| s < COLLAPSE_SNR_DB))
            .map(Sim2Point::k_over_m)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("D,K,K_over_M,trials,mean_snr_db\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                p.order,
                p.k,
                p.k_over_m(),
                p.trials,
                fmt_opt(p.mean_snr_db)
            ));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_records(&self.records, &dir.join("trials.csv"))?;
        fs::write(dir.join("sim2_summary.csv"), self.summary_csv())?;
        Ok(())
    }
}

pub fn run_sim2(spec: &ExperimentSpec) -> Sim2Outcome {
    let mut records = Vec::new();
    let mut points = Vec::new();
    for &order in &spec.sim2_orders {
        let (ex, ey) = sim2_dims(order);
        let m_total: usize = ey.iter().product();
        for (p, &ratio) in spec.sim2_ratios.iter().enumerate() {
            let k = (ratio * m_total as f64).round() as usize;
            let point = (order as u64) << 32 | p as u64;
            let trials: Vec<u64> = (0..spec.trials as u64).collect();
            let results = map_trials(spec.parallel, trials, |t| {
                let seed = trial_seed(spec, "sim2", point, t);
                let mut rng = SeededRng::new(seed);
                match generate_instance(&mut rng, &ex, &ey, k, spec.noise) {
                    Ok(inst) => {
                        let (rec, x_hat) = run_instance_trial("sim2", &inst, k, seed, &spec.solver);
                        let zero = x_hat.is_some_and(|h| h.max_abs() <= ZERO_TOL);
                        (rec, zero)
                    }
                    Err(e) => (
                        failed_record(
                            "sim2",
                            tensor_method(order),
                            &ex,
                            &ey,
                            k,
                            seed,
                            e.to_string(),
                        ),
                        false,
                    ),
                }
            });
            let mean_snr_db = if k == 0 {
                results.iter().all(|(_, zero)| *zero).then_some(SNR_CAP_DB)
            } else {
                mean(results.iter().filter_map(|(r, _)| r.snr_db))
            };
            let collapsed = mean_snr_db.is_none_or(|s| s < COLLAPSE_SNR_DB);
            points.push(Sim2Point {
                order,
                k,
                m_total,
                trials: results.len(),
                mean_snr_db,
            });
            records.extend(results.into_iter().map(|(r, _)| r));
            if collapsed && spec.sim2_stop_at_collapse {
                break;
            }
        }
    }
    Sim2Outcome { records, points }
}

// ---------------------------------------------------------------------------
// Simulation 3

pub const SIM3_METHODS: [&str; 3] = ["tensor-3d", "flat-2d", "flat-1d"];

#[derive(Debug, Clone, PartialEq)]
pub struct Sim3Row {
    pub n_x: usize,
    pub method: &'static str,
    pub trials_ok: usize,
    pub mean_runtime_s: Option<f64>,
    pub mean_snr_db: Option<f64>,
    /// Would-be element count when the flattened dictionary was capped.
    pub capped_elements: Option<u128>,
}

impl Sim3Row {
    pub fn n_total(&self) -> usize {
        self.n_x.pow(3)
    }
}

#[derive(Debug, Clone)]
pub struct Sim3Outcome {
    pub records: Vec<TrialRecord>,
    pub rows: Vec<Sim3Row>,
}

impl Sim3Outcome {
    pub fn row(&self, n_x: usize, method: &str) -> Option<&Sim3Row> {
        self.rows
            .iter()
            .find(|r| r.n_x == n_x && r.method == method)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("N_x,N,method,trials,mean_runtime_s,mean_snr_db,status\n");
        for r in &self.rows {
            let status = r
                .capped_elements
                .map_or_else(|| "ok".to_string(), |n| format!("capped:{n}"));
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n_x,
                r.n_total(),
                r.method,
                r.trials_ok,
                r.mean_runtime_s
                    .map_or_else(|| "undefined".into(), |t| format!("{t:.6}")),
                fmt_opt(r.mean_snr_db),
                status
            ));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_records(&self.records, &dir.join("trials.csv"))?;
        fs::write(dir.join("sim3_summary.csv"), self.summary_csv())?;
        Ok(())
    }
}

/// Dictionaries `(N_x/2) × N_x` in every mode and `K = (N_x/5)³`.
pub fn sim3_setup(n_x: usize) -> (Vec<usize>, Vec<usize>, usize) {
    let k = (n_x as f64 / 5.0).powi(3).round() as usize;
    (vec![n_x; 3], vec![n_x / 2; 3], k)
}

fn sim3_trial(spec: &ExperimentSpec, si: usize, n_x: usize, t: usize) -> Vec<TrialRecord> {
    const EXP: &str = "sim3";
    let (ex, ey, k) = sim3_setup(n_x);
    let seed = trial_seed(spec, EXP, si as u64, t as u64);
    let mut rng = SeededRng::new(seed);
    let inst = match generate_instance(&mut rng, &ex, &ey, k, spec.noise) {
        Ok(i) => i,
        Err(e) => {
            return SIM3_METHODS
                .iter()
                .map(|m| failed_record(EXP, m.to_string(), &ex, &ey, k, seed, e.to_string()))
                .collect()
        }
    };
    let mut out = vec![run_instance_trial(EXP, &inst, k, seed, &spec.solver).0];
    let eq = match build_equivalent_problems(&inst.dicts, spec.cap_elements) {
        Ok(eq) => eq,
        Err(e) => {
            for m in &SIM3_METHODS[1..] {
                out.push(failed_record(
                    EXP,
                    m.to_string(),
                    &ex,
                    &ey,
                    k,
                    seed,
                    e.to_string(),
                ));
            }
            return out;
        }
    };
    for (method, flat) in [("flat-2d", eq.flat_2d), ("flat-1d", eq.flat_1d)] {
        let rec = match flat {
            Ok(flat) => match flat.flatten_y(&inst.y) {
                Ok(y) => {
                    solve_trial(
                        SolveInput {
                            experiment: EXP,
                            method: method.into(),
                            dicts: flat.dicts,
                            y,
                            x_true: &inst.x_true,
                            k,
                            seed,
                        },
                        &spec.solver,
                    )
                    .0
                }
                Err(e) => failed_record(EXP, method.into(), &ex, &ey, k, seed, e.to_string()),
            },
            Err(Error::CapExceeded {
                rows,
                cols,
                elements,
                ..
            }) => {
                let (sx, sy) = if method == "flat-1d" {
                    (vec![cols as usize], vec![rows as usize])
                } else {
                    (
                        vec![ex[0], ex[1..].iter().product()],
                        vec![ey[0], ey[1..].iter().product()],
                    )
                };
                let mut r = failed_record(EXP, method.into(), &sx, &sy, k, seed, String::new());
                r.status = TrialStatus::Capped(elements);
                r
            }
            Err(e) => failed_record(EXP, method.into(), &ex, &ey, k, seed, e.to_string()),
        };
        out.push(rec);
    }
    out
}

/// Times the tensor solver against its flattened equivalents on identical
/// instances. Runs serially unless `spec.parallel` is set.
pub fn run_sim3(spec: &ExperimentSpec) -> Sim3Outcome {
    let jobs: Vec<(usize, usize, usize)> = spec
        .sim3_sizes
        .iter()
        .enumerate()
        .flat_map(|(si, &n)| (0..spec.trials).map(move |t| (si, n, t)))
        .collect();
    let per_trial = map_trials(spec.parallel, jobs.clone(), |(si, n, t)| {
        sim3_trial(spec, si, n, t)
    });

    let mut rows = Vec::new();
    for &n_x in &spec.sim3_sizes {
        for method in SIM3_METHODS {
            let recs: Vec<&TrialRecord> = jobs
                .iter()
                .zip(&per_trial)
                .filter(|((_, n, _), _)| *n == n_x)
                .flat_map(|(_, rs)| rs.iter().filter(|r| r.method == method))
                .collect();
            let ok: Vec<&&TrialRecord> = recs
                .iter()
                .filter(|r| r.status == TrialStatus::Ok)
                .collect();
            let capped_elements = recs.iter().find_map(|r| match r.status {
                TrialStatus::Capped(n) => Some(n),
                _ => None,
            });
            rows.push(Sim3Row {
                n_x,
                method,
                trials_ok: ok.len(),
                mean_runtime_s: mean(ok.iter().filter_map(|r| r.runtime_s)),
                mean_snr_db: mean(ok.iter().filter_map(|r| r.snr_db)),
                capped_elements,
            });
        }
    }
    Sim3Outcome {
        records: per_trial.into_iter().flatten().collect(),
        rows,
    }
}

// ---------------------------------------------------------------------------

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v}"))
}

pub fn write_records(records: &[TrialRecord], path: &Path) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(records, BufWriter::new(f)).with_context(|| format!("writing {}", path.display()))
}
