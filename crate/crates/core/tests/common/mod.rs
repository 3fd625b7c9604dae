//! Reference computations on nalgebra, shared by the integration tests.
#![allow(dead_code)]

use dualbeam::codebook::Codebook;
use dualbeam::config::{Panel, ScenarioConfig};
use dualbeam::linalg::{CMat, C64};
use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type NMat = DMatrix<Complex<f64>>;

pub fn to_na(m: &CMat) -> NMat {
    NMat::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

pub fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_channel(rng: &mut ChaCha8Rng, rows: usize, cols: usize, k: usize) -> Vec<CMat> {
    (0..k)
        .map(|_| CMat::from_fn(rows, cols, |_, _| cn(rng)))
        .collect()
}

pub fn cfg_for(panel: Panel, ue: Panel, rf_chains: usize, codebook_size: usize) -> ScenarioConfig {
    ScenarioConfig {
        bs_mmwave_panel: panel,
        ue_mmwave_panel: ue,
        rf_chains,
        streams: rf_chains,
        codebook_size,
        ..ScenarioConfig::default()
    }
}

/// F_rf built directly from codeword vectors: column r carries the +45
/// codeword on rows [r L, (r+1) L) and the -45 codeword on the same rows of
/// the lower half.
pub fn naive_precoder(cb: &Codebook, plus: &[usize], minus: &[usize], n_tx: usize) -> NMat {
    let l = cb.codeword_len();
    let mut f = NMat::zeros(2 * n_tx, plus.len());
    for r in 0..plus.len() {
        for i in 0..l {
            f[(r * l + i, r)] = cb.codewords[plus[r]].f[i];
            f[(n_tx + r * l + i, r)] = cb.codewords[minus[r]].f[i];
        }
    }
    f
}

/// `sum_k log2 det(I + rho H F (F^H F)^-1 F^H H^H)` in the receive space.
pub fn naive_mi(h: &[NMat], f: &NMat, rho: f64) -> f64 {
    let gram_inv = (f.adjoint() * f).try_inverse().expect("invertible Gram");
    let proj = f * gram_inv * f.adjoint();
    h.iter()
        .map(|hk| {
            let m = NMat::identity(hk.nrows(), hk.nrows()) + (hk * &proj * hk.adjoint()).scale(rho);
            m.lu().determinant().re.ln()
        })
        .sum::<f64>()
        / std::f64::consts::LN_2
}

pub fn tuples(c: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..c).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

/// Nested loops over +45 tuples and then -45 tuples, keeping the first
/// strict maximum.
pub fn naive_search(
    h: &[NMat],
    cb: &Codebook,
    n_rf: usize,
    n_tx: usize,
    rho: f64,
) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for plus in tuples(cb.len(), n_rf) {
        for minus in tuples(cb.len(), n_rf) {
            let mi = naive_mi(h, &naive_precoder(cb, &plus, &minus, n_tx), rho);
            if mi > best.1 {
                best = ([plus.clone(), minus].concat(), mi);
            }
        }
    }
    best
}

/// Random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> NMat {
    let g = NMat::from_fn(n, n, |_, _| cn(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix the phase of each column so the distribution is Haar.
    let d = NMat::from_fn(n, n, |i, j| {
        if i == j {
            r[(i, i)] / r[(i, i)].norm()
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    q * d
}

/// Inverse square root of a Hermitian positive definite matrix through its
/// eigendecomposition.
pub fn inv_sqrt(m: &NMat) -> NMat {
    let eig = m.clone().symmetric_eigen();
    let d = NMat::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            Complex::new(1.0 / eig.eigenvalues[i].sqrt(), 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}
