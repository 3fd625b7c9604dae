//! UPA steering vectors and the DFT subarray codebook.

use std::f64::consts::PI;
use std::io::Write;

use crate::config::{Panel, ScenarioConfig};
use crate::error::Result;
use crate::linalg::C64;

/// Array response for direction cosines `(u_az, u_el)` with half-wavelength
/// spacing. Element `(m, n)` (row, column) sits at index `m * cols + n` and
/// carries phase `pi * (n * u_az + m * u_el)`.
pub fn upa_response(panel: Panel, u_az: f64, u_el: f64) -> Vec<C64> {
    let norm = 1.0 / (panel.elements() as f64).sqrt();
    let mut out = Vec::with_capacity(panel.elements());
    for m in 0..panel.rows {
        for n in 0..panel.cols {
            let phase = PI * (n as f64 * u_az + m as f64 * u_el);
            out.push(C64::from_polar(norm, phase));
        }
    }
    out
}

/// Unit-norm UPA steering vector. Azimuth and elevation are measured from
/// broadside along the panel's horizontal and vertical axes respectively.
pub fn steering_vector(panel: Panel, azimuth_rad: f64, elevation_rad: f64) -> Vec<C64> {
    upa_response(panel, azimuth_rad.sin(), elevation_rad.sin())
}

/// A constant-modulus, unit-norm beamforming vector for one subarray.
#[derive(Clone, Debug, PartialEq)]
pub struct Codeword {
    pub elevation_rad: f64,
    pub azimuth_rad: f64,
    pub f: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub subarray: Panel,
    pub elevation_grid: Vec<f64>,
    pub azimuth_grid: Vec<f64>,
    /// Elevation-major, azimuth-minor.
    pub codewords: Vec<Codeword>,
}

/// Uniform spatial-frequency grid of `count` points centered on broadside.
fn dft_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|g| (2.0 * g as f64 + 1.0 - count as f64) / count as f64)
        .collect()
}

impl Codebook {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self> {
        let subarray = cfg.subarray_panel()?;
        let (n_el, n_az) = cfg.codebook_grid()?;
        let u_el = dft_grid(n_el);
        let u_az = dft_grid(n_az);
        let mut codewords = Vec::with_capacity(n_el * n_az);
        for &ue in &u_el {
            for &ua in &u_az {
                codewords.push(Codeword {
                    elevation_rad: ue.asin(),
                    azimuth_rad: ua.asin(),
                    f: upa_response(subarray, ua, ue),
                });
            }
        }
        Ok(Self {
            subarray,
            elevation_grid: u_el.iter().map(|u| u.asin()).collect(),
            azimuth_grid: u_az.iter().map(|u| u.asin()).collect(),
            codewords,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    #[inline]
    pub fn codeword_len(&self) -> usize {
        self.subarray.elements()
    }

    pub fn get(&self, index: usize) -> Option<&Codeword> {
        self.codewords.get(index)
    }

    /// `index,elevation_rad,azimuth_rad,re0,im0,re1,im1,...`
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "index,elevation_rad,azimuth_rad")?;
        for i in 0..self.codeword_len() {
            write!(w, ",re{i},im{i}")?;
        }
        writeln!(w)?;
        for (i, cw) in self.codewords.iter().enumerate() {
            write!(w, "{i},{:?},{:?}", cw.elevation_rad, cw.azimuth_rad)?;
            for v in &cw.f {
                write!(w, ",{:?},{:?}", v.re, v.im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn build_codebook(cfg: &ScenarioConfig) -> Result<Codebook> {
    Codebook::build(cfg)
}
