//! Beam predictors, best-n accuracy and reduced-search spectral efficiency.

use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::codebook::Codebook;
use crate::dataset::{read_scores, Dataset, ScoresFile};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::precoding::RfSelection;
use crate::rng::{rng_for, Stream};
use crate::scores::{rank_of, PredictionScores};
use crate::search::{candidate_lists, SearchKernel};

/// Produces one score set per dataset sample.
pub trait Predictor: Sync {
    fn name(&self) -> &str;

    fn version(&self) -> u32 {
        1
    }

    /// Whether the predictor can run on `ds` at all.
    fn supports(&self, _ds: &Dataset) -> bool {
        true
    }

    fn predict(&self, ds: &Dataset) -> Result<Vec<PredictionScores>>;
}

fn labels(ds: &Dataset) -> Result<Vec<&RfSelection>> {
    ds.samples
        .iter()
        .map(|s| {
            s.label
                .as_ref()
                .map(|l| &l.selection)
                .ok_or(Error::MissingLabels)
        })
        .collect()
}

/// One-hot on the stored label.
pub struct OraclePredictor;

impl Predictor for OraclePredictor {
    fn name(&self) -> &str {
        "oracle"
    }

    fn predict(&self, ds: &Dataset) -> Result<Vec<PredictionScores>> {
        let h = &ds.header;
        labels(ds)?
            .into_iter()
            .map(|sel| PredictionScores::one_hot(h.rf_chains, h.codebook_size, &sel.tuple()))
            .collect()
    }
}

/// Independent uniform scores, seeded per sample.
pub struct RandomPredictor {
    pub seed: u64,
}

impl Predictor for RandomPredictor {
    fn name(&self) -> &str {
        "random"
    }

    fn predict(&self, ds: &Dataset) -> Result<Vec<PredictionScores>> {
        let h = &ds.header;
        (0..ds.len())
            .map(|i| random_scores(self.seed, i as u64, h.rf_chains, h.codebook_size))
            .collect()
    }
}

pub fn random_scores(
    seed: u64,
    index: u64,
    rf_chains: usize,
    codebook_size: usize,
) -> Result<PredictionScores> {
    let mut rng = rng_for(seed, Stream::Predictor, index);
    let values = (0..2 * rf_chains * codebook_size)
        .map(|_| rng.random::<f32>())
        .collect();
    PredictionScores::new(rf_chains, codebook_size, values)
}

/// Reuses the previous window's optimal beams. The first sample has no
/// history and gets all-zero scores.
pub struct PersistencePredictor;

impl Predictor for PersistencePredictor {
    fn name(&self) -> &str {
        "persistence"
    }

    fn supports(&self, ds: &Dataset) -> bool {
        ds.is_linked()
    }

    fn predict(&self, ds: &Dataset) -> Result<Vec<PredictionScores>> {
        if !ds.is_linked() {
            return Err(Error::invalid(
                "persistence needs trajectory-linked samples",
            ));
        }
        let h = &ds.header;
        let labels = labels(ds)?;
        (0..ds.len())
            .map(|i| match i {
                0 => PredictionScores::new(
                    h.rf_chains,
                    h.codebook_size,
                    vec![0.0; 2 * h.rf_chains * h.codebook_size],
                ),
                _ => {
                    PredictionScores::one_hot(h.rf_chains, h.codebook_size, &labels[i - 1].tuple())
                }
            })
            .collect()
    }
}

/// Scores read from a `DBPR` file, aligned by sample index.
pub struct FilePredictor {
    pub file: ScoresFile,
}

impl FilePredictor {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            file: read_scores(path)?,
        })
    }
}

impl Predictor for FilePredictor {
    fn name(&self) -> &str {
        "file"
    }

    fn predict(&self, ds: &Dataset) -> Result<Vec<PredictionScores>> {
        let h = &ds.header;
        if self.file.scores.len() != ds.len() {
            return Err(Error::Alignment(format!(
                "scores file has {} samples, dataset has {}",
                self.file.scores.len(),
                ds.len()
            )));
        }
        if self.file.rf_chains != h.rf_chains || self.file.codebook_size != h.codebook_size {
            return Err(Error::Alignment(format!(
                "scores are {} chains x {} codewords, dataset is {} x {}",
                self.file.rf_chains, self.file.codebook_size, h.rf_chains, h.codebook_size
            )));
        }
        Ok(self.file.scores.clone())
    }
}

/// Builds a predictor from its command-line name.
pub fn predictor_by_name(
    name: &str,
    seed: u64,
    scores: Option<&Path>,
) -> Result<Box<dyn Predictor>> {
    Ok(match name {
        "oracle" => Box::new(OraclePredictor),
        "random" => Box::new(RandomPredictor { seed }),
        "persistence" => Box::new(PersistencePredictor),
        "file" => {
            let path = scores.ok_or_else(|| Error::invalid("the file predictor needs --scores"))?;
            Box::new(FilePredictor::open(path)?)
        }
        other => return Err(Error::invalid(format!("unknown predictor {other:?}"))),
    })
}

fn check_n(n: usize, codebook_size: usize) -> Result<()> {
    if n == 0 || n > codebook_size {
        return Err(Error::invalid(format!(
            "n = {n} outside 1..={codebook_size}"
        )));
    }
    Ok(())
}

/// 1 iff every chain's true index is among that chain's top-n scores.
pub fn best_n_indicator(scores: &PredictionScores, label: &RfSelection, n: usize) -> Result<bool> {
    check_n(n, scores.codebook_size())?;
    let tuple = label.tuple();
    if tuple.len() != scores.rows() {
        return Err(Error::invalid("label and scores disagree on N_rf"));
    }
    Ok(tuple
        .iter()
        .enumerate()
        .all(|(r, &i)| rank_of(scores.row(r), i) < n))
}

/// Number of chains whose true index is in the top-n.
fn chains_hit(scores: &PredictionScores, tuple: &[usize], n: usize) -> usize {
    tuple
        .iter()
        .enumerate()
        .filter(|&(r, &i)| rank_of(scores.row(r), i) < n)
        .count()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyReport {
    pub predictor: String,
    pub input_snr_db: f64,
    pub n_values: Vec<usize>,
    /// Strict all-chains accuracy per n.
    pub accuracy: Vec<f64>,
    /// Fraction of individual chains hit, per n (supplementary).
    pub per_chain_accuracy: Vec<f64>,
    pub sample_count: usize,
}

fn check_alignment(ds: &Dataset, scores: &[PredictionScores]) -> Result<()> {
    if scores.len() != ds.len() {
        return Err(Error::Alignment(format!(
            "{} score sets for {} samples",
            scores.len(),
            ds.len()
        )));
    }
    let h = &ds.header;
    if let Some(i) = scores
        .iter()
        .position(|s| s.rf_chains() != h.rf_chains || s.codebook_size() != h.codebook_size)
    {
        return Err(Error::Alignment(format!(
            "score set {i} has the wrong shape"
        )));
    }
    Ok(())
}

fn check_n_list(n_list: &[usize], codebook_size: usize) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::invalid("n list is empty"));
    }
    n_list.iter().try_for_each(|&n| check_n(n, codebook_size))
}

pub fn best_n_accuracy(
    ds: &Dataset,
    predictor: &dyn Predictor,
    n_list: &[usize],
) -> Result<AccuracyReport> {
    let labels = labels(ds)?;
    let scores = predictor.predict(ds)?;
    accuracy_from_scores(ds, &labels, &scores, predictor.name(), n_list)
}

fn accuracy_from_scores(
    ds: &Dataset,
    labels: &[&RfSelection],
    scores: &[PredictionScores],
    name: &str,
    n_list: &[usize],
) -> Result<AccuracyReport> {
    check_alignment(ds, scores)?;
    check_n_list(n_list, ds.header.codebook_size)?;
    let s = ds.len();
    let chains = 2 * ds.header.rf_chains;
    let mut accuracy = Vec::with_capacity(n_list.len());
    let mut per_chain = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut all = 0usize;
        let mut hits = 0usize;
        for (sc, label) in scores.iter().zip(labels) {
            let h = chains_hit(sc, &label.tuple(), n);
            hits += h;
            all += usize::from(h == chains);
        }
        accuracy.push(ratio_or_zero(all, s));
        per_chain.push(ratio_or_zero(hits, s * chains));
    }
    Ok(AccuracyReport {
        predictor: name.to_string(),
        input_snr_db: ds.header.input_snr_db(),
        n_values: n_list.to_vec(),
        accuracy,
        per_chain_accuracy: per_chain,
        sample_count: s,
    })
}

fn ratio_or_zero(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Spectral efficiency of the reduced search for one n.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeRow {
    pub n: usize,
    /// Mean candidate-set MI per subcarrier, bits/s/Hz.
    pub mean_se: f64,
    pub exhaustive_se: f64,
    /// Candidate-set over exhaustive, as a ratio of sums.
    pub ratio: f64,
    /// Configurations searched per sample, `n^(2 N_rf)`.
    pub configs_evaluated: u64,
}

pub fn spectral_efficiency_report(
    ds: &Dataset,
    predictor: &dyn Predictor,
    n_list: &[usize],
    cb: &Codebook,
    rho: f64,
    exec: Execution,
) -> Result<Vec<SeRow>> {
    let scores = predictor.predict(ds)?;
    se_from_scores(ds, &scores, n_list, cb, rho, exec)
}

/// Per-sample optimum: the stored label MI when present, otherwise a fresh
/// exhaustive search.
fn se_from_scores(
    ds: &Dataset,
    scores: &[PredictionScores],
    n_list: &[usize],
    cb: &Codebook,
    rho: f64,
    exec: Execution,
) -> Result<Vec<SeRow>> {
    check_alignment(ds, scores)?;
    check_n_list(n_list, ds.header.codebook_size)?;
    if !ds.header.has(crate::dataset::FLAG_MMWAVE) {
        return Err(Error::MissingChannels);
    }
    if cb.len() != ds.header.codebook_size {
        return Err(Error::invalid("codebook size differs from the dataset's"));
    }
    let h = &ds.header;
    let kbar = h.mmwave_subcarriers as f64;
    let chains = 2 * h.rf_chains;
    let all: Vec<usize> = (0..cb.len()).collect();
    // Samples in parallel, the candidate search inside each one sequential.
    let per_sample = map_indexed(exec, ds.len(), |i| -> Result<(f64, Vec<f64>)> {
        let sample = &ds.samples[i];
        let hm = sample.mmwave_matrices(h).ok_or(Error::MissingChannels)?;
        let kernel = SearchKernel::new(&hm, cb, h.rf_chains, rho)?;
        let best = match &sample.label {
            Some(l) => l.optimal_mi,
            None => {
                kernel
                    .search(&vec![all.clone(); chains], Execution::Sequential)?
                    .mi
            }
        };
        let cand = n_list
            .iter()
            .map(|&n| {
                let lists = candidate_lists(&scores[i], n)?;
                Ok(kernel.search(&lists, Execution::Sequential)?.mi)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((best, cand))
    });
    let per_sample = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
    let s = ds.len() as f64;
    let exhaustive_sum: f64 = per_sample.iter().map(|(b, _)| b).sum();
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let cand_sum: f64 = per_sample.iter().map(|(_, c)| c[j]).sum();
            let per = |sum: f64| if s > 0.0 { sum / s / kbar } else { 0.0 };
            SeRow {
                n,
                mean_se: per(cand_sum),
                exhaustive_se: per(exhaustive_sum),
                ratio: if exhaustive_sum > 0.0 {
                    cand_sum / exhaustive_sum
                } else {
                    1.0
                },
                configs_evaluated: (n as u64).pow(chains as u32),
            }
        })
        .collect())
}

/// One CSV line: a (predictor, n) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub predictor: String,
    pub input_snr_db: f64,
    pub n: usize,
    pub accuracy: f64,
    pub mean_se: f64,
    pub exhaustive_se: f64,
    pub ratio: f64,
    pub configs_evaluated: u64,
    pub sample_count: usize,
    pub per_chain_accuracy: f64,
}

/// Accuracy and spectral efficiency for one predictor, sharing one
/// prediction pass.
pub fn evaluate_predictor(
    ds: &Dataset,
    predictor: &dyn Predictor,
    n_list: &[usize],
    cb: &Codebook,
    rho: f64,
    exec: Execution,
) -> Result<Vec<ReportRow>> {
    let labels = labels(ds)?;
    let scores = predictor.predict(ds)?;
    let acc = accuracy_from_scores(ds, &labels, &scores, predictor.name(), n_list)?;
    let se = se_from_scores(ds, &scores, n_list, cb, rho, exec)?;
    Ok(se
        .iter()
        .enumerate()
        .map(|(j, row)| ReportRow {
            predictor: acc.predictor.clone(),
            input_snr_db: acc.input_snr_db,
            n: row.n,
            accuracy: acc.accuracy[j],
            mean_se: row.mean_se,
            exhaustive_se: row.exhaustive_se,
            ratio: row.ratio,
            configs_evaluated: row.configs_evaluated,
            sample_count: acc.sample_count,
            per_chain_accuracy: acc.per_chain_accuracy[j],
        })
        .collect())
}

pub const CSV_HEADER: &str = "predictor,input_snr_db,n,A_best_n,mean_se_bits_per_subcarrier,\
exhaustive_se,ratio,configs_evaluated,S,per_chain_accuracy_supplementary";

pub fn write_report_csv(rows: &[ReportRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.predictor,
            r.input_snr_db,
            r.n,
            r.accuracy,
            r.mean_se,
            r.exhaustive_se,
            r.ratio,
            r.configs_evaluated,
            r.sample_count,
            r.per_chain_accuracy
        )?;
    }
    Ok(())
}
