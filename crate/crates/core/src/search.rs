//! Exhaustive and candidate-set RF precoder search.
//!
//! The search maximizes the RF-only mutual information over codeword index
//! tuples `(plus45_1..plus45_N, minus45_1..minus45_N)`. For every subcarrier,
//! chain, polarization and codeword the kernel caches the effective column
//! `H[k][:, block] c_i`, so a candidate only costs `N_rf` column sums, an
//! `N_rf x N_rf` Gram and a small Cholesky per subcarrier.
//!
//! Ties on the objective go to the lexicographically smallest tuple. The
//! candidate space is cut into contiguous chunks whose winners are reduced
//! in chunk order, so parallel and sequential runs agree bit for bit.

use crate::codebook::Codebook;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::exec::{map_chunks, Execution};
use crate::linalg::{CMat, C64};
use crate::precoding::RfSelection;
use crate::scores::PredictionScores;

const CHUNK: u64 = 2048;
/// Running determinant products are folded into the log sum above this.
const FLUSH_AT: f64 = 1e200;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub selection: RfSelection,
    /// Objective in bits, summed over subcarriers.
    pub mi: f64,
    /// Number of configurations evaluated.
    pub evaluated: u64,
}

/// Cached effective columns for one channel realization.
pub struct SearchKernel {
    rf_chains: usize,
    codewords: usize,
    rx: usize,
    subcarriers: usize,
    rho: f64,
    /// `[k][r][pol][i][rx]`
    eff: Vec<C64>,
    cw_norm_sqr: Vec<f64>,
}

impl SearchKernel {
    pub fn new(h_all: &[CMat], cb: &Codebook, rf_chains: usize, rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::invalid("SNR must be non-negative and finite"));
        }
        if cb.is_empty() || rf_chains == 0 {
            return Err(Error::invalid("empty codebook or zero RF chains"));
        }
        let sub = cb.codeword_len();
        let n_tx = sub * rf_chains;
        let rx = h_all.first().map_or(0, CMat::rows);
        for h in h_all {
            if h.shape() != (rx, 2 * n_tx) {
                return Err(Error::invalid(format!(
                    "channel matrix {:?} does not match {rx} x {}",
                    h.shape(),
                    2 * n_tx
                )));
            }
            if !h.is_finite() {
                return Err(Error::Numerical(
                    "channel contains non-finite entries".into(),
                ));
            }
        }
        let n_cw = cb.len();
        let mut eff = Vec::with_capacity(h_all.len() * rf_chains * 2 * n_cw * rx);
        for h in h_all {
            for r in 0..rf_chains {
                for pol in 0..2 {
                    let col0 = pol * n_tx + r * sub;
                    for cw in &cb.codewords {
                        for row in 0..rx {
                            let hrow = &h.row(row)[col0..col0 + sub];
                            let mut acc = C64::new(0.0, 0.0);
                            for (a, b) in hrow.iter().zip(&cw.f) {
                                acc += a * b;
                            }
                            eff.push(acc);
                        }
                    }
                }
            }
        }
        let cw_norm_sqr = cb
            .codewords
            .iter()
            .map(|c| c.f.iter().map(|v| v.norm_sqr()).sum())
            .collect();
        Ok(Self {
            rf_chains,
            codewords: n_cw,
            rx,
            subcarriers: h_all.len(),
            rho,
            eff,
            cw_norm_sqr,
        })
    }

    pub fn rf_chains(&self) -> usize {
        self.rf_chains
    }

    pub fn codebook_size(&self) -> usize {
        self.codewords
    }

    #[inline]
    fn column(&self, k: usize, r: usize, pol: usize, i: usize) -> &[C64] {
        let idx = (((k * self.rf_chains + r) * 2 + pol) * self.codewords + i) * self.rx;
        &self.eff[idx..idx + self.rx]
    }

    /// Objective in bits for a flat index tuple.
    pub fn evaluate(&self, tuple: &[usize]) -> Result<f64> {
        let mut scratch = Scratch::new(self.rf_chains, self.rx);
        self.evaluate_with(tuple, &mut scratch)
    }

    fn evaluate_with(&self, tuple: &[usize], s: &mut Scratch) -> Result<f64> {
        let n = self.rf_chains;
        for r in 0..n {
            s.gram[r] = self.cw_norm_sqr[tuple[r]] + self.cw_norm_sqr[tuple[n + r]];
        }
        let det_gram = cholesky_det(diag_matrix(&s.gram, &mut s.q), n)?;

        let mut log_sum = 0.0;
        let mut product = 1.0;
        for k in 0..self.subcarriers {
            for r in 0..n {
                let plus = self.column(k, r, 0, tuple[r]);
                let minus = self.column(k, r, 1, tuple[n + r]);
                let dst = &mut s.cols[r * self.rx..(r + 1) * self.rx];
                for ((d, a), b) in dst.iter_mut().zip(plus).zip(minus) {
                    *d = a + b;
                }
            }
            for i in 0..n {
                let ci = &s.cols[i * self.rx..(i + 1) * self.rx];
                for j in 0..=i {
                    let cj = &s.cols[j * self.rx..(j + 1) * self.rx];
                    let mut acc = C64::new(0.0, 0.0);
                    for (x, y) in ci.iter().zip(cj) {
                        acc += x * y.conj();
                    }
                    let mut v = acc * self.rho;
                    if i == j {
                        v = C64::new(s.gram[i] + v.re, 0.0);
                    }
                    s.q[i * n + j] = v;
                }
            }
            let ratio = (cholesky_det(&mut s.q, n)? / det_gram).max(1.0);
            product *= ratio;
            if product > FLUSH_AT {
                log_sum += product.ln();
                product = 1.0;
            }
        }
        Ok((log_sum + product.ln()) / std::f64::consts::LN_2)
    }

    /// Best tuple over the Cartesian product of per-position candidate lists.
    pub fn search(&self, lists: &[Vec<usize>], exec: Execution) -> Result<SearchOutcome> {
        let n = self.rf_chains;
        if lists.len() != 2 * n || lists.iter().any(Vec::is_empty) {
            return Err(Error::invalid(
                "need one non-empty candidate list per chain",
            ));
        }
        if lists.iter().flatten().any(|&i| i >= self.codewords) {
            return Err(Error::invalid("candidate index out of codebook range"));
        }
        let total = lists
            .iter()
            .try_fold(1u64, |acc, l| acc.checked_mul(l.len() as u64))
            .ok_or_else(|| Error::invalid("candidate space overflows u64"))?;

        let chunk_best = map_chunks(exec, total, CHUNK, |start, end| {
            self.search_range(lists, start, end)
        });
        let mut best: Option<(f64, Vec<usize>)> = None;
        for cb in chunk_best {
            let (mi, tuple) = cb?;
            if is_better(mi, &tuple, best.as_ref()) {
                best = Some((mi, tuple));
            }
        }
        let (mi, tuple) = best.expect("non-empty candidate space");
        Ok(SearchOutcome {
            selection: RfSelection::from_tuple(&tuple),
            mi,
            evaluated: total,
        })
    }

    fn search_range(
        &self,
        lists: &[Vec<usize>],
        start: u64,
        end: u64,
    ) -> Result<(f64, Vec<usize>)> {
        let positions = lists.len();
        // Mixed-radix digits of `start`, most significant first.
        let mut digits = vec![0usize; positions];
        let mut rem = start;
        for p in (0..positions).rev() {
            let base = lists[p].len() as u64;
            digits[p] = (rem % base) as usize;
            rem /= base;
        }
        let mut tuple: Vec<usize> = (0..positions).map(|p| lists[p][digits[p]]).collect();
        let mut scratch = Scratch::new(self.rf_chains, self.rx);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for _ in start..end {
            let mi = self.evaluate_with(&tuple, &mut scratch)?;
            if is_better(mi, &tuple, best.as_ref()) {
                best = Some((mi, tuple.clone()));
            }
            for p in (0..positions).rev() {
                digits[p] += 1;
                if digits[p] < lists[p].len() {
                    tuple[p] = lists[p][digits[p]];
                    break;
                }
                digits[p] = 0;
                tuple[p] = lists[p][0];
            }
        }
        Ok(best.expect("non-empty range"))
    }
}

#[inline]
fn is_better(mi: f64, tuple: &[usize], best: Option<&(f64, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((b, bt)) => mi > *b || (mi == *b && tuple < bt.as_slice()),
    }
}

struct Scratch {
    gram: Vec<f64>,
    cols: Vec<C64>,
    q: Vec<C64>,
}

impl Scratch {
    fn new(n: usize, rx: usize) -> Self {
        Self {
            gram: vec![0.0; n],
            cols: vec![C64::new(0.0, 0.0); n * rx],
            q: vec![C64::new(0.0, 0.0); n * n],
        }
    }
}

fn diag_matrix<'a>(d: &[f64], buf: &'a mut [C64]) -> &'a mut [C64] {
    let n = d.len();
    buf.fill(C64::new(0.0, 0.0));
    for i in 0..n {
        buf[i * n + i] = C64::new(d[i], 0.0);
    }
    buf
}

/// Determinant of a Hermitian positive-definite matrix (lower triangle) as
/// the product of its Cholesky pivots.
fn cholesky_det(a: &mut [C64], n: usize) -> Result<f64> {
    let mut det = 1.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !d.is_finite() || d <= 0.0 {
            return Err(Error::Numerical(format!(
                "Gram matrix not positive definite (pivot {d:e})"
            )));
        }
        det *= d;
        let l = d.sqrt();
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / l;
        }
        a[j * n + j] = C64::new(l, 0.0);
    }
    Ok(det)
}

fn check_cfg(cb: &Codebook, cfg: &ScenarioConfig) -> Result<()> {
    if cb.codeword_len() * cfg.rf_chains != cfg.n_tx() {
        return Err(Error::invalid(format!(
            "codebook of {}-element codewords does not match {} chains on {} elements",
            cb.codeword_len(),
            cfg.rf_chains,
            cfg.n_tx()
        )));
    }
    Ok(())
}

/// Exhaustive search over all `|C|^(2 N_rf)` configurations.
pub fn exhaustive_search(
    h_all: &[CMat],
    cb: &Codebook,
    cfg: &ScenarioConfig,
    rho: f64,
) -> Result<SearchOutcome> {
    exhaustive_search_with(h_all, cb, cfg, rho, Execution::Parallel)
}

pub fn exhaustive_search_with(
    h_all: &[CMat],
    cb: &Codebook,
    cfg: &ScenarioConfig,
    rho: f64,
    exec: Execution,
) -> Result<SearchOutcome> {
    check_cfg(cb, cfg)?;
    let kernel = SearchKernel::new(h_all, cb, cfg.rf_chains, rho)?;
    let all: Vec<usize> = (0..cb.len()).collect();
    kernel.search(&vec![all; 2 * cfg.rf_chains], exec)
}

/// Candidate lists: the top-`n` scored codewords of every chain.
pub fn candidate_lists(scores: &PredictionScores, n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n > scores.codebook_size() {
        return Err(Error::invalid(format!(
            "n = {n} outside 1..={}",
            scores.codebook_size()
        )));
    }
    Ok((0..scores.rows()).map(|r| scores.top_n(r, n)).collect())
}

/// Search restricted to the top-`n` beams per chain and polarization,
/// `n^(2 N_rf)` configurations.
pub fn candidate_set_search(
    h_all: &[CMat],
    cb: &Codebook,
    cfg: &ScenarioConfig,
    rho: f64,
    scores: &PredictionScores,
    n: usize,
) -> Result<SearchOutcome> {
    candidate_set_search_with(h_all, cb, cfg, rho, scores, n, Execution::Parallel)
}

pub fn candidate_set_search_with(
    h_all: &[CMat],
    cb: &Codebook,
    cfg: &ScenarioConfig,
    rho: f64,
    scores: &PredictionScores,
    n: usize,
    exec: Execution,
) -> Result<SearchOutcome> {
    check_cfg(cb, cfg)?;
    if scores.rf_chains() != cfg.rf_chains || scores.codebook_size() != cb.len() {
        return Err(Error::invalid("score shape does not match configuration"));
    }
    let lists = candidate_lists(scores, n)?;
    let kernel = SearchKernel::new(h_all, cb, cfg.rf_chains, rho)?;
    kernel.search(&lists, exec)
}
