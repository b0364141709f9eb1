use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qsd_entropy::harness::{
    default_out_dir, emit_run, fmt_float, run_ensemble_with_threads, write_csv, Case, CaseConfig, EnsembleStats,
    Manifest, Purify, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "qsd-entropy", version, about = "Entropy production of measured spin pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one case and write its datasets and manifest.
    Run(RunArgs),
    /// Run a case at several measurement strengths and tabulate the rates.
    SweepStrength(RunArgs),
    /// Summarise the manifests found under a directory.
    Report {
        #[arg(env = OUT_DIR_ENV, default_value = "out")]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// case1, case2, caseA … caseE.
    case: String,
    /// Number of trajectories (default: the case's reference size)
    #[arg(long)]
    ntraj: Option<usize>,
    /// Time step
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    /// Simulated time (default: the case's reference duration)
    #[arg(long)]
    duration: Option<f64>,
    /// Base seed; trajectory i draws from its own stream
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measurement strength; repeat for several runs.
    #[arg(long = "a")]
    a: Vec<f64>,
    /// Strength of the second spin's measurement (single-spin cases).
    #[arg(long)]
    a2: Option<f64>,
    /// Output directory (default: out)
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Dynamical coordinates, e.g. `s3` or `s1,s12`.
    #[arg(long = "dyn", value_delimiter = ',')]
    dynamical: Vec<String>,
    /// Extra channel for caseD: s2 or sz2.
    #[arg(long)]
    purify: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Steps between stored samples.
    #[arg(long)]
    sample_every: Option<usize>,
}

fn parse_coordinate(s: &str) -> Result<usize> {
    let n: usize = s
        .trim()
        .trim_start_matches(['s', 'S'])
        .parse()
        .map_err(|_| anyhow!("bad coordinate {s:?}, expected s1 … s15"))?;
    if !(1..=15).contains(&n) {
        bail!("coordinate {s:?} out of range s1 … s15");
    }
    Ok(n - 1)
}

impl RunArgs {
    fn case(&self) -> Result<Case> {
        Case::parse(&self.case).ok_or_else(|| anyhow!("unknown case {:?}", self.case))
    }

    fn config(&self, a: Option<f64>) -> Result<CaseConfig> {
        let case = self.case()?;
        let mut cfg = CaseConfig::new(case).with_seed(self.seed);
        cfg.dt = self.dt;
        if let Some(n) = self.ntraj {
            cfg = cfg.with_trajectories(n);
        }
        if let Some(d) = self.duration {
            cfg = cfg.with_duration(d);
        }
        if let Some(a) = a {
            cfg = cfg.with_strength(a);
        }
        if let Some(a2) = self.a2 {
            cfg.a2 = a2;
        }
        if !self.dynamical.is_empty() {
            let dynamical = self.dynamical.iter().map(|s| parse_coordinate(s)).collect::<Result<Vec<_>>>()?;
            let (d, s) = case.default_coordinates();
            if let Some(c) = dynamical.iter().find(|c| !d.contains(c) && !s.contains(c)) {
                bail!("s{} is not in the coordinate group of {}", c + 1, case.name());
            }
            cfg = cfg.with_dynamical(dynamical);
        }
        if let Some(p) = &self.purify {
            cfg = cfg.with_purify(Some(Purify::parse(p).ok_or_else(|| anyhow!("unknown purifier {p:?}, expected s2 or sz2"))?));
        }
        if let Some(k) = self.sample_every {
            cfg.sample_every = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn strengths(&self, default: &[f64]) -> Vec<Option<f64>> {
        let list = if self.a.is_empty() { default } else { &self.a[..] };
        if list.is_empty() {
            vec![None]
        } else {
            list.iter().map(|&a| Some(a)).collect()
        }
    }

    fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(default_out_dir)
    }

    fn threads(&self) -> usize {
        self.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn run_one(cfg: &CaseConfig, dir: &Path, threads: usize) -> Result<EnsembleStats> {
    eprintln!("{}: {} trajectories, duration {}, a = {} -> {}", cfg.case.name(), cfg.n_traj, cfg.duration, cfg.a1, dir.display());
    let ens = run_ensemble_with_threads(cfg, threads)?;
    let stats = EnsembleStats::from_ensemble(&ens);
    emit_run(dir, &ens, &stats).with_context(|| format!("writing {}", dir.display()))?;
    print_summary(&Manifest::read(dir)?);
    Ok(stats)
}

fn strength_dir(base: &Path, a: f64) -> PathBuf {
    base.join(format!("a_{a}"))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let case = args.case()?;
    let base = args.out().join(case.name());
    let strengths = args.strengths(&[]);
    if strengths.len() == 1 {
        run_one(&args.config(strengths[0])?, &base, args.threads())?;
        return Ok(());
    }
    let configs = strengths.iter().map(|&a| args.config(a)).collect::<Result<Vec<_>>>()?;
    let mut names = vec!["t".to_string()];
    let mut columns = Vec::new();
    let mut times = Vec::new();
    for cfg in &configs {
        let stats = run_one(cfg, &strength_dir(&base, cfg.a1), args.threads())?;
        if let Some(m) = &stats.mean_entropy {
            names.push(format!("a={}", cfg.a1));
            columns.push(m.mean.clone());
            times = stats.times.clone();
        }
    }
    if !columns.is_empty() {
        let rows = (0..times.len()).map(|j| std::iter::once(times[j]).chain(columns.iter().map(|c| c[j])).collect());
        write_csv(&base.join("mean_entropy_by_strength.csv"), &names, rows)?;
    }
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> Result<()> {
    let case = args.case()?;
    let base = args.out().join(format!("{}_sweep", case.name()));
    let defaults = [std::f64::consts::FRAC_1_SQRT_2, 1.0, std::f64::consts::SQRT_2];
    let mut rows = Vec::new();
    for a in args.strengths(&defaults) {
        let cfg = args.config(a)?;
        let stats = run_one(&cfg, &strength_dir(&base, cfg.a1), args.threads())?;
        let fit = stats.rate.or(stats.rate_trailing);
        let (rate, err) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.stderr));
        rows.push(vec![cfg.a1, rate, err, rate / (cfg.a1 * cfg.a1)]);
    }
    let header = ["a", "rate", "stderr", "rate_over_a2"].map(String::from);
    write_csv(&base.join("strength_rates.csv"), &header, rows.clone())?;
    println!("a, rate, stderr, rate/a^2");
    for r in rows {
        println!("{}", r.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(", "));
    }
    Ok(())
}

fn print_summary(m: &Manifest) {
    let c = &m.config;
    println!(
        "{} a={} ntraj={} duration={} seed={} complete={} meets_reference={}",
        c.case.name(),
        c.a1,
        m.n_traj,
        c.duration,
        c.seed,
        m.complete,
        m.meets_reference
    );
    println!("  excluded {} ({:.1}%)", m.n_excluded, 100.0 * m.exclusion_fraction);
    if let Some(why) = &m.entropy_unavailable {
        println!("  entropy: {why}");
    }
    match (&m.rate, &m.rate_trailing) {
        (Some(r), _) => println!("  rate {:.4} ± {:.4} over [{:.2}, {:.2}]", r.slope, r.stderr, r.t_start, r.t_end),
        (None, Some(r)) => println!(
            "  rate {:.4} ± {:.4} over trailing [{:.2}, {:.2}] ({})",
            r.slope,
            r.stderr,
            r.t_start,
            r.t_end,
            m.rate_error.as_deref().unwrap_or("")
        ),
        (None, None) => println!("  rate unavailable: {}", m.rate_error.as_deref().unwrap_or("no entropy")),
    }
    for (o, n) in &m.outcome_counts {
        println!("  {o:?}: {n}");
    }
}

fn find_manifests(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if dir.join("manifest.json").is_file() {
        out.push(dir.to_path_buf());
    }
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        find_manifests(&e, out)?;
    }
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let mut dirs = Vec::new();
    find_manifests(dir, &mut dirs)?;
    if dirs.is_empty() {
        bail!("no manifest under {}", dir.display());
    }
    let mut incomplete = 0;
    for d in &dirs {
        let m = Manifest::read(d)?;
        println!("{}", d.display());
        print_summary(&m);
        incomplete += usize::from(!m.complete);
    }
    if incomplete > 0 {
        bail!("{incomplete} run(s) are incomplete");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepStrength(args) => cmd_sweep(args),
        Command::Report { dir } => cmd_report(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
