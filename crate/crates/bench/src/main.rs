use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hdsl0::textio::{load_matrix, load_tensor, save_tensor, write_tensor};
use hdsl0::{
    gaussian_matrix, recover, spark_bruteforce, uniqueness_check, Config, DictionarySet, Error,
    Matrix, SeededRng, Verdict, DEFAULT_SPARK_CAP,
};
use hdsl0_bench::config::ConfigFile;
use hdsl0_bench::experiments::{run_sim1, run_sim2, run_sim3, ExperimentSpec};
use hdsl0_bench::instance::NoiseLevel;

#[derive(Parser, Debug)]
#[command(
    name = "hdsl0",
    version,
    about = "Tensor smoothed-l0 sparse recovery experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trials per point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory (file for `recover` and `analyze`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value file with defaults for these flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    sigma_min: Option<f64>,
    #[arg(long, global = true)]
    sigma_decay: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    inner_iters: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Per-entry noise std on Y; default targets 60 dB measurement SNR.
    #[arg(long, global = true)]
    noise_std: Option<f64>,
    /// Largest flattened dictionary, in elements.
    #[arg(long, global = true)]
    cap_elements: Option<usize>,
    /// Run trials concurrently.
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recovery quality on the 50×50 and 20×20×20 setups.
    Sim1 {
        #[arg(long, value_parser = ["2d", "3d", "both"], default_value = "both")]
        case: String,
        /// Override the sparsity of both cases.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Mean SNR versus K/M for several orders.
    Sim2 {
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<usize>>,
    },
    /// Runtime of tensor recovery against flattened equivalents.
    Sim3 {
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Recover X from measurement and dictionary files.
    Recover {
        #[arg(long)]
        y: PathBuf,
        /// One per mode, in mode order.
        #[arg(long = "dict", required = true)]
        dicts: Vec<PathBuf>,
        /// Stop projecting once the residual energy is within epsilon.
        #[arg(long)]
        noisy: bool,
    },
    /// Uniqueness bounds for a sparsity level.
    Analyze {
        #[arg(long)]
        k: usize,
        /// Dictionary files, one per mode.
        #[arg(long = "dict", conflicts_with = "generate")]
        dicts: Vec<PathBuf>,
        /// Gaussian dictionaries of these sizes, e.g. `12x20,12x20`.
        #[arg(long, value_delimiter = ',')]
        generate: Option<Vec<String>>,
        /// Enumerate exact sparks (exponential in the column count).
        #[arg(long)]
        exact_spark: bool,
    },
}

const CONFIG_KEYS: &[&str] = &[
    "seed",
    "trials",
    "out",
    "sigma-min",
    "sigma-decay",
    "mu",
    "inner-iters",
    "epsilon",
    "noise-std",
    "cap-elements",
    "parallel",
];

/// CLI values over config-file values.
struct Resolved {
    seed: u64,
    trials: Option<usize>,
    out: Option<PathBuf>,
    noise_std: Option<f64>,
    cap_elements: Option<usize>,
    parallel: bool,
    sigma_min: Option<f64>,
    sigma_decay: Option<f64>,
    mu: Option<f64>,
    inner_iters: Option<usize>,
    epsilon: Option<f64>,
}

impl Resolved {
    fn new(c: &Common) -> Result<Self> {
        let file = match &c.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let Some(k) = file.keys().find(|k| !CONFIG_KEYS.contains(k)) {
            bail!("unknown config key {k:?}");
        }
        Ok(Self {
            seed: c.seed.or(file.get("seed")?).unwrap_or(0),
            trials: c.trials.or(file.get("trials")?),
            out: c.out.clone().or(file.get("out")?),
            noise_std: c.noise_std.or(file.get("noise-std")?),
            cap_elements: c.cap_elements.or(file.get("cap-elements")?),
            parallel: c.parallel || file.get("parallel")?.unwrap_or(false),
            sigma_min: c.sigma_min.or(file.get("sigma-min")?),
            sigma_decay: c.sigma_decay.or(file.get("sigma-decay")?),
            mu: c.mu.or(file.get("mu")?),
            inner_iters: c.inner_iters.or(file.get("inner-iters")?),
            epsilon: c.epsilon.or(file.get("epsilon")?),
        })
    }

    fn solver(&self, mut cfg: Config) -> Result<Config> {
        if let Some(v) = self.sigma_min {
            cfg.sigma_min = v;
        }
        if let Some(v) = self.sigma_decay {
            cfg.sigma_decay = v;
        }
        if let Some(v) = self.mu {
            cfg.step_mu = v;
        }
        if let Some(v) = self.inner_iters {
            cfg.inner_iters = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn spec(&self, default_trials: usize) -> Result<ExperimentSpec> {
        let trials = self.trials.unwrap_or(default_trials);
        if trials == 0 {
            bail!(UsageError("--trials must be at least 1".into()));
        }
        let mut spec = ExperimentSpec::new(self.seed, trials);
        spec.solver = self.solver(Config::noisy())?;
        if let Some(s) = self.noise_std {
            if !(s >= 0.0 && s.is_finite()) {
                bail!(UsageError(format!(
                    "--noise-std must be a finite non-negative number, got {s}"
                )));
            }
            spec.noise = NoiseLevel::Std(s);
        }
        if let Some(c) = self.cap_elements {
            spec.cap_elements = c;
        }
        spec.parallel = self.parallel;
        Ok(spec)
    }

    fn out_dir(&self, name: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| Path::new("results").join(name))
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (m, n) = s
        .split_once('x')
        .with_context(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    Ok((m.trim().parse()?, n.trim().parse()?))
}

fn fmt_bound(v: Option<f64>) -> String {
    match v {
        None => "undefined".into(),
        Some(b) if b.is_infinite() => "unbounded".into(),
        Some(b) => format!("{b}"),
    }
}

fn verdict_report(v: &Verdict, sparks: Option<&[usize]>) -> String {
    let pass = |b: bool| if b { "pass" } else { "fail" };
    let mut s = format!("k = {}\n", v.k);
    s.push_str(&format!("coherence = {}\n", fmt_bound(v.coherence)));
    s.push_str(&format!(
        "coherence bound (k < b) = {} : {}\n",
        fmt_bound(v.coherence_bound),
        pass(v.passes_coherence)
    ));
    match (sparks, v.spark_bound, v.passes_spark) {
        (Some(sp), Some(b), Some(p)) => {
            s.push_str(&format!("sparks = {sp:?}\n"));
            s.push_str(&format!("spark bound (k <= b) = {b} : {}\n", pass(p)));
        }
        _ => s.push_str("spark bound = not computed\n"),
    }
    let source = match v.eq31_source {
        hdsl0::SparkSource::Computed => "exact sparks",
        hdsl0::SparkSource::RowCount => "spark = rows",
    };
    s.push_str(&format!(
        "random-support bound (k <= b, {source}) = {} : {}\n",
        v.eq31_bound,
        pass(v.passes_eq31)
    ));
    s
}

fn run(cli: Cli) -> Result<()> {
    let r = Resolved::new(&cli.common)?;
    match cli.command {
        Command::Sim1 { case, k } => {
            let mut spec = r.spec(20)?;
            spec.k_override = k;
            if case != "both" {
                spec.sim1_cases = vec![format!("sim1-{case}")];
            }
            let out = run_sim1(&spec);
            let dir = r.out_dir("sim1");
            out.write(&dir)?;
            for c in &out.cases {
                println!(
                    "{}: trials={} mean_snr_db={} support_fraction={}",
                    c.case.name,
                    c.trials.len(),
                    fmt_bound(c.mean_snr_db()),
                    fmt_bound(c.mean_support_fraction())
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Sim2 { orders } => {
            let mut spec = r.spec(20)?;
            if let Some(o) = orders {
                spec.sim2_orders = o;
            }
            let out = run_sim2(&spec);
            let dir = r.out_dir("sim2");
            out.write(&dir)?;
            for &d in &spec.sim2_orders {
                println!("D={d}: collapse K/M = {}", fmt_bound(out.collapse_point(d)));
            }
            println!("wrote {}", dir.display());
        }
        Command::Sim3 { sizes } => {
            let mut spec = r.spec(5)?;
            if let Some(s) = sizes {
                spec.sim3_sizes = s;
            }
            let out = run_sim3(&spec);
            let dir = r.out_dir("sim3");
            out.write(&dir)?;
            print!("{}", out.summary_csv());
            println!("wrote {}", dir.display());
        }
        Command::Recover { y, dicts, noisy } => {
            let base = if noisy {
                Config::noisy()
            } else {
                Config::default()
            };
            let cfg = r.solver(base)?;
            let y = load_tensor::<f64>(&y)?;
            let mats = dicts
                .iter()
                .map(load_matrix::<f64>)
                .collect::<hdsl0::Result<Vec<_>>>()?;
            let set = DictionarySet::new(mats)?;
            let rep = recover(&y, &set, &cfg)?;
            match &r.out {
                Some(p) => save_tensor(&rep.x_hat, p)?,
                None => write_tensor(&rep.x_hat, std::io::stdout().lock())?,
            }
            eprintln!(
                "stages={} iterations={} residual_energy={} elapsed_s={:.6}",
                rep.outer_stages, rep.inner_iterations, rep.residual_energy, rep.elapsed_s
            );
        }
        Command::Analyze {
            k,
            dicts,
            generate,
            exact_spark,
        } => {
            let mats: Vec<Matrix> = match generate {
                Some(sizes) => {
                    let mut rng = SeededRng::new(r.seed);
                    sizes
                        .iter()
                        .map(|s| parse_size(s).map(|(m, n)| gaussian_matrix(&mut rng, m, n)))
                        .collect::<Result<_>>()?
                }
                None if dicts.is_empty() => {
                    bail!(UsageError(
                        "analyze needs --dict files or --generate sizes".into()
                    ))
                }
                None => dicts
                    .iter()
                    .map(load_matrix::<f64>)
                    .collect::<hdsl0::Result<_>>()?,
            };
            let sparks = if exact_spark {
                Some(
                    mats.iter()
                        .map(|a| spark_bruteforce(a, DEFAULT_SPARK_CAP))
                        .collect::<hdsl0::Result<Vec<_>>>()?,
                )
            } else {
                None
            };
            let v = uniqueness_check(k, &mats, sparks.as_deref());
            let report = verdict_report(&v, sparks.as_deref());
            print!("{report}");
            if let Some(p) = &r.out {
                std::fs::write(p, &report).with_context(|| format!("writing {}", p.display()))?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::SingularGram { .. }) => 2,
        Some(Error::CapExceeded { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
