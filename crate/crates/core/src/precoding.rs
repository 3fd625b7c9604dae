//! RF precoder representation and the mutual-information objectives.

use crate::codebook::Codebook;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Codeword indices for the +45 deg chains followed by the -45 deg chains.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RfSelection {
    pub plus45: Vec<usize>,
    pub minus45: Vec<usize>,
}

impl RfSelection {
    pub fn new(plus45: Vec<usize>, minus45: Vec<usize>) -> Self {
        Self { plus45, minus45 }
    }

    pub fn zeros(rf_chains: usize) -> Self {
        Self::new(vec![0; rf_chains], vec![0; rf_chains])
    }

    /// Builds a selection from the flat tuple `(plus45..., minus45...)`.
    pub fn from_tuple(tuple: &[usize]) -> Self {
        let n = tuple.len() / 2;
        Self::new(tuple[..n].to_vec(), tuple[n..].to_vec())
    }

    pub fn rf_chains(&self) -> usize {
        self.plus45.len()
    }

    /// `(plus45..., minus45...)`, the order used for tie-breaking.
    pub fn tuple(&self) -> Vec<usize> {
        self.plus45.iter().chain(&self.minus45).copied().collect()
    }

    pub fn validate(&self, codebook_size: usize) -> Result<()> {
        if self.plus45.len() != self.minus45.len() {
            return Err(Error::invalid("plus45 and minus45 chain counts differ"));
        }
        if let Some(&i) = self.tuple().iter().find(|&&i| i >= codebook_size) {
            return Err(Error::invalid(format!(
                "codeword index {i} out of range for a codebook of {codebook_size}"
            )));
        }
        Ok(())
    }
}

/// `2 N_tx x N_rf` block-diagonal RF precoder.
#[derive(Clone, Debug, PartialEq)]
pub struct RfPrecoder {
    pub f_rf: CMat,
}

impl RfPrecoder {
    pub fn gram(&self) -> CMat {
        self.f_rf.adjoint().matmul(&self.f_rf).expect("conforming")
    }
}

/// One `N_rf x N_s` baseband precoder per mmWave subcarrier.
#[derive(Clone, Debug, PartialEq)]
pub struct DigitalPrecoder {
    pub f: Vec<CMat>,
}

impl DigitalPrecoder {
    /// `sum_k ||F_rf F[k]||_F^2`
    pub fn total_power(&self, rf: &RfPrecoder) -> Result<f64> {
        self.f
            .iter()
            .map(|fk| Ok(rf.f_rf.matmul(fk)?.frobenius_norm_sqr()))
            .sum()
    }
}

/// Stacks the selected codewords into `[blkdiag(+45); blkdiag(-45)]`.
pub fn assemble_precoder(
    sel: &RfSelection,
    cb: &Codebook,
    cfg: &ScenarioConfig,
) -> Result<RfPrecoder> {
    sel.validate(cb.len())?;
    let n_rf = cfg.rf_chains;
    if sel.rf_chains() != n_rf {
        return Err(Error::invalid(format!(
            "selection has {} chains, configuration has {n_rf}",
            sel.rf_chains()
        )));
    }
    let n_tx = cfg.n_tx();
    let sub = cfg.subarray_len();
    if sub != cb.codeword_len() {
        return Err(Error::invalid(format!(
            "codeword length {} does not match subarray size {sub}",
            cb.codeword_len()
        )));
    }
    let mut f_rf = CMat::zeros(2 * n_tx, n_rf);
    for r in 0..n_rf {
        let plus = &cb.codewords[sel.plus45[r]].f;
        let minus = &cb.codewords[sel.minus45[r]].f;
        for i in 0..sub {
            f_rf[(r * sub + i, r)] = plus[i];
            f_rf[(n_tx + r * sub + i, r)] = minus[i];
        }
    }
    Ok(RfPrecoder { f_rf })
}

/// `y = H F_rf F s + n`
pub fn received_signal(
    h: &CMat,
    f_rf: &RfPrecoder,
    f_dig: &CMat,
    s: &[C64],
    n: &[C64],
) -> Result<Vec<C64>> {
    if h.cols() != f_rf.f_rf.rows() || f_rf.f_rf.cols() != f_dig.rows() {
        return Err(Error::invalid(format!(
            "channel {:?}, RF precoder {:?} and digital precoder {:?} do not conform",
            h.shape(),
            f_rf.f_rf.shape(),
            f_dig.shape()
        )));
    }
    if s.len() != f_dig.cols() || n.len() != h.rows() {
        return Err(Error::invalid(format!(
            "symbol length {} / noise length {} do not match {} streams / {} receive ports",
            s.len(),
            n.len(),
            f_dig.cols(),
            h.rows()
        )));
    }
    let x = f_rf
        .f_rf
        .matmul(&f_dig.matmul(&CMat::column(s.to_vec()))?)?;
    let y = h.matmul(&x)?;
    Ok(y.as_slice().iter().zip(n).map(|(a, b)| a + b).collect())
}

/// RF-only objective:
/// `sum_k log2 det(I + rho H F (F^H F)^-1 F^H H^H)`, evaluated through the
/// `N_rf x N_rf` identity `det(F^H F + rho F^H H^H H F) / det(F^H F)`.
pub fn mutual_information_rf(h_all: &[CMat], rf: &RfPrecoder, rho: f64) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::invalid("SNR must be non-negative"));
    }
    let gram = rf.gram();
    let ld_gram = gram
        .hermitian_logdet()
        .map_err(|_| Error::Numerical("RF precoder Gram matrix is singular".into()))?;
    let mut total = 0.0;
    for h in h_all {
        let a = h.matmul(&rf.f_rf)?;
        let m = a.adjoint().matmul(&a)?;
        let q = gram.add(&m.scale(C64::new(rho, 0.0)))?;
        let term = (q.hermitian_logdet()? - ld_gram).max(0.0);
        total += term;
    }
    Ok(total / std::f64::consts::LN_2)
}

/// Joint objective without the power constraint:
/// `sum_k log2 det(I + rho H F_rf F F^H F_rf^H H^H)`.
pub fn joint_objective(
    h_all: &[CMat],
    rf: &RfPrecoder,
    dig: &DigitalPrecoder,
    rho: f64,
) -> Result<f64> {
    if h_all.len() != dig.f.len() {
        return Err(Error::invalid(format!(
            "{} channel subcarriers but {} digital precoders",
            h_all.len(),
            dig.f.len()
        )));
    }
    let mut total = 0.0;
    for (h, fk) in h_all.iter().zip(&dig.f) {
        let b = h.matmul(&rf.f_rf)?.matmul(fk)?;
        let cov = b.matmul(&b.adjoint())?;
        let q = CMat::identity(h.rows()).add(&cov.scale(C64::new(rho, 0.0)))?;
        total += q.hermitian_logdet()?.max(0.0);
    }
    Ok(total / std::f64::consts::LN_2)
}

/// Joint objective with the total power constraint
/// `sum_k ||F_rf F[k]||^2 = K N_s` enforced to within `1e-6`.
pub fn mutual_information_joint(
    h_all: &[CMat],
    rf: &RfPrecoder,
    dig: &DigitalPrecoder,
    rho: f64,
) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::invalid("SNR must be non-negative"));
    }
    let streams = dig.f.first().map_or(0, CMat::cols);
    let target = (dig.f.len() * streams) as f64;
    let power = dig.total_power(rf)?;
    if (power - target).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "power constraint violated: sum ||F_rf F[k]||^2 = {power}, expected {target}"
        )));
    }
    joint_objective(h_all, rf, dig, rho)
}

/// `F[k] = (F_rf^H F_rf)^(-1/2) U` for every subcarrier. The Gram matrix of
/// a codebook precoder is diagonal, so the inverse square root is taken
/// entrywise; a non-diagonal Gram is rejected.
pub fn digital_precoder_for(
    rf: &RfPrecoder,
    unitary: &CMat,
    subcarriers: usize,
) -> Result<DigitalPrecoder> {
    let gram = rf.gram();
    let n = gram.rows();
    if unitary.rows() != n {
        return Err(Error::invalid("unitary must have N_rf rows"));
    }
    let mut inv_sqrt = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && gram[(i, j)].norm() > 1e-12 {
                return Err(Error::invalid("RF precoder Gram matrix is not diagonal"));
            }
        }
        let d = gram[(i, i)].re;
        if d.is_nan() || d <= 0.0 {
            return Err(Error::Numerical(
                "RF precoder Gram matrix is singular".into(),
            ));
        }
        inv_sqrt[(i, i)] = C64::new(1.0 / d.sqrt(), 0.0);
    }
    let fk = inv_sqrt.matmul(unitary)?;
    Ok(DigitalPrecoder {
        f: vec![fk; subcarriers],
    })
}
