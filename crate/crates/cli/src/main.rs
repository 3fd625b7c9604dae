//! `dualbeam`: generate labeled datasets, evaluate beam predictors, inspect
//! files and export codebooks.
//!
//! Exit codes: 0 ok, 1 other error, 2 config/usage error, 3 IO error,
//! 4 dataset without labels, 5 misaligned scores, 6 malformed file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dualbeam::codebook::build_codebook;
use dualbeam::dataset::{
    generate_dataset, read_dataset, write_dataset, Dataset, FLAG_LABELS, FLAG_LINKED,
    FLAG_LOCATIONS, FLAG_MMWAVE,
};
use dualbeam::eval::{evaluate_predictor, predictor_by_name, write_report_csv};
use dualbeam::exec::{with_threads, Execution};
use dualbeam::{Error, RunConfig, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "dualbeam",
    version,
    about = "Sub-6 GHz to mmWave beam prediction toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one labeled dataset file per configured input SNR.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score predictors on a labeled dataset and write a CSV report.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// Geometry, mmWave SNR and defaults for --n/--predictor.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma list of oracle, random, persistence, file.
        #[arg(long, value_delimiter = ',')]
        predictor: Option<Vec<String>>,
        /// Scores file for the `file` predictor.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Seed of the random predictor.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print a dataset header and the first sample's labels.
    Inspect {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Write the configured codebook as CSV.
    CodebookExport {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::ConfigSyntax { .. } | Error::UnknownKey { .. } => 2,
        Error::Io(_) => 3,
        Error::MissingLabels => 4,
        Error::Alignment(_) => 5,
        Error::Format { .. } | Error::TruncatedSample { .. } => 6,
        _ => 1,
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Error> {
    fs::read_to_string(path)?.parse()
}

fn snr_tag(snr_db: f64) -> String {
    if snr_db == f64::INFINITY {
        "inf".into()
    } else {
        format!("{snr_db}").replace('-', "m")
    }
}

fn generate(config: &Path, seed: Option<u64>, threads: Option<usize>) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.scenario.seed = seed;
    }
    let threads = threads.unwrap_or(cfg.threads);
    for &snr in &cfg.input_snr_db {
        let path = format!("{}_snr_{}.dbbp", cfg.output_prefix, snr_tag(snr));
        let start = Instant::now();
        let ds = with_threads(threads, || {
            generate_dataset(&cfg.scenario, cfg.sample_count, snr)
        })?;
        let wall = start.elapsed().as_secs_f64();
        write_dataset(&ds, &path)?;
        println!(
            "file={path} samples={} input_snr_db={snr} label_wall_s={wall:.3}",
            ds.len()
        );
    }
    Ok(())
}

/// Scenario matching the dataset: the given config, or the desk defaults
/// with the header's dimensions.
fn scenario_for(ds: &Dataset, cfg: Option<&RunConfig>) -> Result<ScenarioConfig, Error> {
    let h = &ds.header;
    if let Some(cfg) = cfg {
        if !h.matches(&cfg.scenario) {
            return Err(Error::Config(
                "config dimensions do not match the dataset header".into(),
            ));
        }
        return Ok(cfg.scenario.clone());
    }
    let mut s = ScenarioConfig::desk();
    s.seq_len = h.seq_len;
    s.sub6_subcarriers = h.sub6_subcarriers;
    s.mmwave_subcarriers = h.mmwave_subcarriers;
    s.rf_chains = h.rf_chains;
    s.streams = s.streams.min(h.rf_chains);
    s.codebook_size = h.codebook_size;
    if !h.matches(&s) {
        return Err(Error::Config(
            "dataset antenna geometry differs from the defaults; pass --config".into(),
        ));
    }
    s.validate()?;
    Ok(s)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    dataset: &Path,
    config: Option<&Path>,
    predictors: Option<Vec<String>>,
    scores: Option<&Path>,
    n: Option<Vec<usize>>,
    report: Option<&Path>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<(), Error> {
    let cfg = config.map(load_config).transpose()?;
    let ds = read_dataset(dataset)?;
    if !ds.has_labels() {
        return Err(Error::MissingLabels);
    }
    let scenario = scenario_for(&ds, cfg.as_ref())?;
    let defaults = cfg.clone().unwrap_or_default();
    let n_list = n.unwrap_or(defaults.n_list.clone());
    dualbeam::config::validate_n_list(&n_list, scenario.codebook_size)?;
    let names = predictors.unwrap_or(defaults.predictors.clone());
    let seed = seed.unwrap_or(scenario.seed);
    let threads = threads.unwrap_or(defaults.threads);
    let cb = build_codebook(&scenario)?;
    let rho = scenario.mmwave_snr_linear();

    let mut rows = Vec::new();
    for name in &names {
        let predictor = predictor_by_name(name, seed, scores)?;
        if !predictor.supports(&ds) {
            println!("skipped={name} reason=needs_trajectory_linked_samples");
            continue;
        }
        let r = with_threads(threads, || {
            evaluate_predictor(
                &ds,
                predictor.as_ref(),
                &n_list,
                &cb,
                rho,
                Execution::Parallel,
            )
        })?;
        for row in &r {
            println!(
                "predictor={} n={} A_best_n={} ratio={} configs_evaluated={} S={}",
                row.predictor,
                row.n,
                row.accuracy,
                row.ratio,
                row.configs_evaluated,
                row.sample_count
            );
        }
        rows.extend(r);
    }
    match report {
        Some(path) => {
            let mut f = io::BufWriter::new(fs::File::create(path)?);
            write_report_csv(&rows, &mut f)?;
            f.flush()?;
            println!("report={}", path.display());
        }
        None => write_report_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn inspect(dataset: &Path) -> Result<(), Error> {
    let ds = read_dataset(dataset)?;
    let h = &ds.header;
    let mut out = io::stdout().lock();
    writeln!(out, "magic=DBBP")?;
    writeln!(out, "version={}", dualbeam::dataset::FORMAT_VERSION)?;
    writeln!(out, "flags={:#06x}", h.flags)?;
    for (key, flag) in [
        ("has_labels", FLAG_LABELS),
        ("has_locations", FLAG_LOCATIONS),
        ("has_mmwave", FLAG_MMWAVE),
        ("trajectory_linked", FLAG_LINKED),
    ] {
        writeln!(out, "{key}={}", h.has(flag))?;
    }
    writeln!(out, "seq_len={}", h.seq_len)?;
    writeln!(out, "sub6_subcarriers={}", h.sub6_subcarriers)?;
    writeln!(out, "mmwave_subcarriers={}", h.mmwave_subcarriers)?;
    writeln!(out, "n_tx_sub6={}", h.n_tx_sub6)?;
    writeln!(out, "n_tx={}", h.n_tx)?;
    writeln!(out, "n_rx={}", h.n_rx)?;
    writeln!(out, "rf_chains={}", h.rf_chains)?;
    writeln!(out, "codebook_size={}", h.codebook_size)?;
    writeln!(out, "sample_count={}", ds.len())?;
    writeln!(out, "input_snr_db={}", h.input_snr_db())?;
    if let Some(label) = ds.samples.first().and_then(|s| s.label.as_ref()) {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        writeln!(out, "first_label_plus45={}", join(&label.selection.plus45))?;
        writeln!(
            out,
            "first_label_minus45={}",
            join(&label.selection.minus45)
        )?;
        writeln!(out, "first_optimal_mi={}", label.optimal_mi)?;
    }
    Ok(())
}

fn codebook_export(config: Option<&Path>, out: Option<&Path>) -> Result<(), Error> {
    let cfg = config.map(load_config).transpose()?.unwrap_or_default();
    let cb = build_codebook(&cfg.scenario)?;
    match out {
        Some(path) => {
            let mut f = io::BufWriter::new(fs::File::create(path)?);
            cb.write_csv(&mut f)?;
            f.flush()?;
            println!("file={} codewords={}", path.display(), cb.len());
        }
        None => cb.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            config,
            seed,
            threads,
        } => generate(&config, seed, threads),
        Command::Evaluate {
            dataset,
            config,
            predictor,
            scores,
            n,
            report,
            seed,
            threads,
        } => evaluate(
            &dataset,
            config.as_deref(),
            predictor,
            scores.as_deref(),
            n,
            report.as_deref(),
            seed,
            threads,
        ),
        Command::Inspect { dataset } => inspect(&dataset),
        Command::CodebookExport { config, out } => {
            codebook_export(config.as_deref(), out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
