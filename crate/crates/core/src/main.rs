use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use subspace_merge::error::{Error, Result};
use subspace_merge::geometry::DataSet;
use subspace_merge::metrics::{abs_l_error, clustering_error, nmi, LabelPair};
use subspace_merge::pipeline::{
    angle_histograms, bound_table, run_bench, run_clustering, BenchReport, Histogram, InitSource,
    ModelSpec, RunOutput, HIST_BINS,
};

/// Subspace clustering by bottom-up merging of angle statistics.
#[derive(Parser)]
#[command(name = "subspace-merge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV dataset; writes report.json and labels.csv.
    Cluster(RunArgs),
    /// Generate a synthetic dataset as CSV (points plus a trailing label).
    Synth {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a two-column (truth, pred) label CSV; prints JSON.
    Eval {
        #[arg(long)]
        input: PathBuf,
        /// Also write the JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeded synthetic trials; writes bench.csv and bench.json.
    Bench {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster and write the score trace and angle histograms.
    Trace(RunArgs),
    /// Tabulate the sample-count bounds.
    Bounds {
        /// Sample counts; defaults to the minimum sufficient count per row.
        #[arg(long, value_delimiter = ',')]
        t: Vec<usize>,
        /// Normalized mean separations M.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        m: Vec<f64>,
        /// Variance ratios R.
        #[arg(long = "r", value_delimiter = ',', default_value = "3")]
        ratio: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// The last CSV column holds integer ground-truth labels.
    #[arg(long)]
    labeled: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// File with one initial cluster label per line, replacing the built-in
    /// initial clustering.
    #[arg(long)]
    init_labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Normal,
    Uniform,
    Dependent,
    Dp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Model::Normal)]
    model: Model,
    /// Ambient dimension.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Subspace dimension.
    #[arg(long, default_value_t = 10)]
    r: usize,
    /// Number of subspaces.
    #[arg(long = "L", default_value_t = 4)]
    l: usize,
    /// Number of points.
    #[arg(long = "N", default_value_t = 500)]
    n_points: usize,
    /// Centroid spread (dp model).
    #[arg(long, default_value_t = 9.0)]
    rho: f64,
    /// Spread around centroids (dp model).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Concentration (dp model).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

impl ModelArgs {
    fn spec(&self) -> ModelSpec {
        let (n, r, l, n_points) = (self.n, self.r, self.l, self.n_points);
        match self.model {
            Model::Normal => ModelSpec::Normal { n, r, l, n_points },
            Model::Uniform => ModelSpec::Uniform { n, r, l, n_points },
            Model::Dependent => ModelSpec::Dependent { n, r, l, n_points },
            Model::Dp => ModelSpec::Dp {
                n,
                n_points,
                rho: self.rho,
                sigma: self.sigma,
                alpha: self.alpha,
            },
        }
    }
}

fn read_label_column(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            l.parse::<usize>().map_err(|_| {
                Error::Invalid(format!(
                    "{}: line {}: bad label {l:?}",
                    path.display(),
                    i + 1
                ))
            })
        })
        .collect()
}

fn read_label_pairs(path: &Path) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Invalid(format!(
                "row {}: expected 2 columns, got {}",
                i + 1,
                rec.len()
            )));
        }
        match (rec[0].parse::<usize>(), rec[1].parse::<usize>()) {
            (Ok(t), Ok(p)) => {
                truth.push(t);
                pred.push(p);
            }
            // header row
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Invalid(format!(
                    "row {}: labels must be non-negative integers",
                    i + 1
                )))
            }
        }
    }
    Ok((truth, pred))
}

fn run_from_args(args: &RunArgs) -> Result<(DataSet, RunOutput)> {
    let data = DataSet::read_csv(&args.input, args.labeled)?;
    let init = match &args.init_labels {
        Some(path) => InitSource::Labels(read_label_column(path)?),
        None => InitSource::Allies { seed: args.seed },
    };
    let out = run_clustering(&data, &init)?;
    Ok((data, out))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn cmd_cluster(args: &RunArgs) -> Result<bool> {
    let (data, out) = run_from_args(args)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("report.json"), &out.report)?;
    let mut w = csv::Writer::from_path(args.out.join("labels.csv"))?;
    match data.labels() {
        Some(truth) => {
            w.write_record(["truth", "pred"])?;
            for (t, p) in truth.iter().zip(&out.report.labels) {
                w.write_record([t.to_string(), p.to_string()])?;
            }
        }
        None => {
            w.write_record(["pred"])?;
            for p in &out.report.labels {
                w.write_record([p.to_string()])?;
            }
        }
    }
    w.flush()?;
    let r = &out.report;
    eprintln!(
        "L_hat = {} ({} initial clusters, {:.1} ms){}",
        r.l_hat,
        r.initial_clusters,
        r.wall_ms,
        if r.crossed {
            ""
        } else {
            "; no score crossed its threshold"
        }
    );
    Ok(r.crossed)
}

fn write_histogram(path: &Path, h: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for ((lo, hi), c) in h.lo.iter().zip(&h.hi).zip(&h.counts) {
        w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_trace(args: &RunArgs) -> Result<bool> {
    let (_, out) = run_from_args(args)?;
    fs::create_dir_all(&args.out)?;
    let mut w = csv::Writer::from_path(args.out.join("trace.csv"))?;
    w.write_record(["K", "gamma", "zeta", "t", "i", "j"])?;
    if let Some(run) = &out.merge {
        for e in &run.trace.entries {
            w.write_record([
                e.k.to_string(),
                e.gamma.to_string(),
                if e.zeta.is_finite() {
                    e.zeta.to_string()
                } else {
                    "inf".into()
                },
                e.t.to_string(),
                e.pair.0.to_string(),
                e.pair.1.to_string(),
            ])?;
        }
    }
    w.flush()?;
    let (within, between) = angle_histograms(&out.selection.labels, &out.angles, HIST_BINS);
    write_histogram(&args.out.join("hist_within.csv"), &within)?;
    write_histogram(&args.out.join("hist_between.csv"), &between)?;
    Ok(out.report.crossed)
}

fn cmd_eval(input: &Path, out: Option<&Path>) -> Result<()> {
    let (truth, pred) = read_label_pairs(input)?;
    let pair = LabelPair::from_raw(&truth, &pred)?;
    let value = serde_json::json!({
        "n_points": pair.len(),
        "l_true": pair.l_truth(),
        "l_pred": pair.l_pred(),
        "ce": clustering_error(&pair),
        "nmi": nmi(&pair),
        "abs_l_error": abs_l_error(pair.l_truth(), pair.l_pred()),
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    if let Some(path) = out {
        write_json(path, &value)?;
    }
    Ok(())
}

fn write_bench(dir: &Path, report: &BenchReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("bench.json"), report)?;
    let mut w = csv::Writer::from_path(dir.join("bench.csv"))?;
    w.write_record([
        "trial",
        "seed",
        "l_true",
        "l_hat",
        "crossed",
        "ce",
        "nmi",
        "abs_l_error",
        "clean_crossing",
        "wall_ms",
    ])?;
    for t in &report.trials {
        w.write_record([
            t.trial.to_string(),
            t.seed.to_string(),
            t.l_true.to_string(),
            t.l_hat.to_string(),
            t.crossed.to_string(),
            t.ce.to_string(),
            t.nmi.to_string(),
            t.abs_l_error.to_string(),
            t.clean_crossing.to_string(),
            format!("{:.3}", t.wall_ms),
        ])?;
    }
    let rows = [
        (
            "mean",
            report.ce.mean,
            report.nmi.mean,
            report.abs_l_error.mean,
        ),
        (
            "median",
            report.ce.median,
            report.nmi.median,
            report.abs_l_error.median,
        ),
        ("std", report.ce.std, report.nmi.std, report.abs_l_error.std),
    ];
    for (name, ce, nmi, l) in rows {
        w.write_record([
            name,
            "",
            "",
            "",
            "",
            &ce.to_string(),
            &nmi.to_string(),
            &l.to_string(),
            "",
            "",
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_bounds(
    ts: &[usize],
    ms: &[f64],
    rs: &[f64],
    format: Format,
    out: Option<&Path>,
) -> Result<()> {
    let rows = bound_table(ms, rs, ts)?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "M",
                "R",
                "t",
                "t_min",
                "threshold",
                "one_minus_eps",
                "one_minus_delta",
                "psi",
            ])?;
            for row in &rows {
                let mut rec = vec![row.m.to_string(), row.r.to_string()];
                match &row.report {
                    Some(b) => rec.extend([
                        b.t.to_string(),
                        b.t_min.map_or("NoFiniteT".into(), |t| t.to_string()),
                        b.threshold.to_string(),
                        format!("{:.6}", 1.0 - b.eps_t),
                        format!("{:.6}", 1.0 - b.delta_t),
                        b.psi_ab.to_string(),
                    ]),
                    None => rec.extend([
                        "NoFiniteT".into(),
                        "NoFiniteT".into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]),
                }
                w.write_record(&rec)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?)
                .expect("csv output is utf-8")
        }
    };
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let not_crossed = |crossed: bool| {
        if crossed {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(2)
        }
    };
    match cli.command {
        Command::Cluster(args) => cmd_cluster(&args).map(not_crossed),
        Command::Trace(args) => cmd_trace(&args).map(not_crossed),
        Command::Synth { model, seed, out } => {
            model.spec().generate(seed)?.write_csv(&out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { input, out } => {
            cmd_eval(&input, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            model,
            trials,
            seed,
            out,
        } => {
            let report = run_bench(&model.spec(), trials, seed)?;
            write_bench(&out, &report)?;
            eprintln!(
                "{} trials: CE mean {:.4}, NMI mean {:.4}, |L - L_hat| mean {:.2}",
                report.trials.len(),
                report.ce.mean,
                report.nmi.mean,
                report.abs_l_error.mean
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds {
            t,
            m,
            ratio,
            format,
            out,
        } => {
            cmd_bounds(&t, &m, &ratio, format, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
