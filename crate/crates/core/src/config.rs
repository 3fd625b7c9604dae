//! Scenario and run configuration.
//!
//! `ScenarioConfig` is the single source of array, OFDM, codebook and
//! mobility dimensions. `RunConfig` wraps it with the knobs the command line
//! needs and is read from a flat `key = value` text file.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Minimum horizontal BS-to-UE distance a trajectory may reach, in meters.
pub const MIN_UE_DISTANCE_M: f64 = 50.0;

/// Rows x columns of a uniform planar array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Panel {
    pub rows: usize,
    pub cols: usize,
}

impl Panel {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    #[inline]
    pub const fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for Panel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected <rows>x<cols>, got `{s}`"))?;
        let rows = r
            .trim()
            .parse()
            .map_err(|_| format!("bad row count `{r}`"))?;
        let cols = c
            .trim()
            .parse()
            .map_err(|_| format!("bad column count `{c}`"))?;
        Ok(Panel { rows, cols })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub sub6_carrier_hz: f64,
    pub mmwave_carrier_hz: f64,
    pub sub6_bandwidth_hz: f64,
    pub mmwave_bandwidth_hz: f64,
    /// K
    pub sub6_subcarriers: usize,
    /// K-bar
    pub mmwave_subcarriers: usize,
    pub bs_sub6_panel: Panel,
    pub bs_mmwave_panel: Panel,
    pub ue_mmwave_panel: Panel,
    pub rf_chains: usize,
    pub streams: usize,
    pub codebook_size: usize,
    /// Input sequence length T.
    pub seq_len: usize,
    pub ue_speed_mps: f64,
    pub sample_interval_s: f64,
    pub cluster_count: usize,
    /// Cross-polarization ratio; `f64::INFINITY` disables cross coupling.
    pub xpr_db: f64,
    /// SNR used for labeling and for spectral-efficiency evaluation.
    pub mmwave_snr_db: f64,
    /// Samples are consecutive windows of one trajectory instead of
    /// independent segments.
    pub trajectory_linked: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Full-scale parameters: 4x4 sub-6 panel, 8x8 mmWave panel, 2x2 UE,
    /// K = 32, K-bar = 512, two RF chains, 32 codewords, T = 5, 30 km/h.
    fn default() -> Self {
        Self {
            sub6_carrier_hz: 3.6e9,
            mmwave_carrier_hz: 26e9,
            sub6_bandwidth_hz: 20e6,
            mmwave_bandwidth_hz: 800e6,
            sub6_subcarriers: 32,
            mmwave_subcarriers: 512,
            bs_sub6_panel: Panel::new(4, 4),
            bs_mmwave_panel: Panel::new(8, 8),
            ue_mmwave_panel: Panel::new(2, 2),
            rf_chains: 2,
            streams: 2,
            codebook_size: 32,
            seq_len: 5,
            ue_speed_mps: 30.0 / 3.6,
            sample_interval_s: 0.1,
            cluster_count: 8,
            xpr_db: 8.0,
            mmwave_snr_db: 30.0,
            trajectory_linked: false,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Desk-scale preset: eight codewords and 16 mmWave subcarriers, so that
    /// labeling a sample costs 8^4 candidate evaluations.
    pub fn desk() -> Self {
        Self {
            codebook_size: 8,
            mmwave_subcarriers: 16,
            ..Self::default()
        }
    }

    pub fn n_tx_sub6(&self) -> usize {
        self.bs_sub6_panel.elements()
    }

    pub fn n_tx(&self) -> usize {
        self.bs_mmwave_panel.elements()
    }

    pub fn n_rx(&self) -> usize {
        self.ue_mmwave_panel.elements()
    }

    pub fn subarray_len(&self) -> usize {
        self.n_tx() / self.rf_chains
    }

    pub fn sub6_subcarrier_spacing_hz(&self) -> f64 {
        self.sub6_bandwidth_hz / self.sub6_subcarriers as f64
    }

    pub fn mmwave_subcarrier_spacing_hz(&self) -> f64 {
        self.mmwave_bandwidth_hz / self.mmwave_subcarriers as f64
    }

    pub fn step_distance_m(&self) -> f64 {
        self.ue_speed_mps * self.sample_interval_s
    }

    /// Bound on the per-step change of any cluster departure angle.
    ///
    /// Cluster departure angles are fixed offsets from the line-of-sight
    /// direction, and a UE moving `d` meters while staying at least
    /// `MIN_UE_DISTANCE_M` away subtends at most `2 asin(d / 2 r_min)`.
    pub fn max_drift_rad(&self) -> f64 {
        let x = (self.step_distance_m() / (2.0 * MIN_UE_DISTANCE_M)).min(1.0);
        2.0 * x.asin()
    }

    pub fn mmwave_snr_linear(&self) -> f64 {
        10f64.powf(self.mmwave_snr_db / 10.0)
    }

    /// Shape of one RF chain's subarray.
    ///
    /// Each chain drives a contiguous row-major run of `N_tx / N_rf`
    /// elements, which must be either a whole number of panel rows or a
    /// piece of a single row.
    pub fn subarray_panel(&self) -> Result<Panel> {
        let p = self.bs_mmwave_panel;
        let len = self.subarray_len();
        if self.rf_chains == 0 || !p.elements().is_multiple_of(self.rf_chains) {
            return Err(Error::Config(format!(
                "{} panel cannot be split into {} equal subarrays",
                p, self.rf_chains
            )));
        }
        if len.is_multiple_of(p.cols) {
            Ok(Panel::new(len / p.cols, p.cols))
        } else if p.cols.is_multiple_of(len) {
            Ok(Panel::new(1, len))
        } else {
            Err(Error::Config(format!(
                "subarray of {len} elements does not tile the {p} panel rows"
            )))
        }
    }

    /// (elevation count, azimuth count) of the codebook grid.
    ///
    /// Chooses the factorization of `codebook_size` whose aspect ratio is
    /// closest to the subarray's, preferring grids no denser than the
    /// subarray; ties go to more azimuth beams.
    pub fn codebook_grid(&self) -> Result<(usize, usize)> {
        let sub = self.subarray_panel()?;
        let target = sub.cols as f64 / sub.rows as f64;
        let mut best: Option<(bool, f64, usize, usize)> = None;
        for az in (1..=self.codebook_size).rev() {
            if !self.codebook_size.is_multiple_of(az) {
                continue;
            }
            let el = self.codebook_size / az;
            let oversampled = az > sub.cols || el > sub.rows;
            let err = ((az as f64 / el as f64).ln() - target.ln()).abs();
            let better = match best {
                None => true,
                Some((o, e, _, _)) => (oversampled, err) < (o, e - 1e-12),
            };
            if better {
                best = Some((oversampled, err, el, az));
            }
        }
        best.map(|(_, _, el, az)| (el, az)).ok_or_else(|| {
            Error::Config(format!(
                "codebook size {} does not factor into a grid on the {} subarray",
                self.codebook_size, sub
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("sub6_subcarriers", self.sub6_subcarriers),
            ("mmwave_subcarriers", self.mmwave_subcarriers),
            ("rf_chains", self.rf_chains),
            ("streams", self.streams),
            ("codebook_size", self.codebook_size),
            ("seq_len", self.seq_len),
            ("cluster_count", self.cluster_count),
            ("bs_sub6_panel", self.bs_sub6_panel.elements()),
            ("bs_mmwave_panel", self.bs_mmwave_panel.elements()),
            ("ue_mmwave_panel", self.ue_mmwave_panel.elements()),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.streams > self.rf_chains {
            return Err(Error::Config(format!(
                "streams ({}) must not exceed rf_chains ({})",
                self.streams, self.rf_chains
            )));
        }
        if self.codebook_size > u16::MAX as usize + 1 {
            return Err(Error::Config("codebook_size must fit a u16 index".into()));
        }
        let positive = [
            ("sub6_carrier_hz", self.sub6_carrier_hz),
            ("mmwave_carrier_hz", self.mmwave_carrier_hz),
            ("sub6_bandwidth_hz", self.sub6_bandwidth_hz),
            ("mmwave_bandwidth_hz", self.mmwave_bandwidth_hz),
            ("sample_interval_s", self.sample_interval_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(self.ue_speed_mps.is_finite() && self.ue_speed_mps >= 0.0) {
            return Err(Error::Config("ue_speed_mps must be non-negative".into()));
        }
        if self.xpr_db.is_nan() || self.xpr_db == f64::NEG_INFINITY {
            return Err(Error::Config("xpr_db must be a number or inf".into()));
        }
        if !self.mmwave_snr_db.is_finite() {
            return Err(Error::Config("mmwave_snr_db must be finite".into()));
        }
        self.codebook_grid()?;
        Ok(())
    }
}

/// Everything the command line reads from a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub sample_count: usize,
    /// Input (sub-6) SNRs; one dataset file is written per entry.
    pub input_snr_db: Vec<f64>,
    pub output_prefix: String,
    pub n_list: Vec<usize>,
    pub predictors: Vec<String>,
    /// 0 means all available cores.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::desk(),
            sample_count: 400,
            input_snr_db: vec![f64::INFINITY],
            output_prefix: "dataset".into(),
            n_list: vec![1, 3, 5],
            predictors: vec!["oracle".into(), "random".into()],
            threads: 0,
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("bad list entry `{s}`")))
        .collect()
}

fn parse_value<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("cannot parse `{value}`"))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true/false, got `{value}`")),
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    /// Parses `key = value` lines; `#` starts a comment. Keys not given keep
    /// their desk-scale defaults.
    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::ConfigSyntax {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            let s = &mut cfg.scenario;
            let res: std::result::Result<(), String> = match key {
                "seed" => parse_value(value).map(|v| s.seed = v),
                "sub6_carrier_hz" => parse_value(value).map(|v| s.sub6_carrier_hz = v),
                "mmwave_carrier_hz" => parse_value(value).map(|v| s.mmwave_carrier_hz = v),
                "sub6_bandwidth_hz" => parse_value(value).map(|v| s.sub6_bandwidth_hz = v),
                "mmwave_bandwidth_hz" => parse_value(value).map(|v| s.mmwave_bandwidth_hz = v),
                "sub6_subcarriers" => parse_value(value).map(|v| s.sub6_subcarriers = v),
                "mmwave_subcarriers" => parse_value(value).map(|v| s.mmwave_subcarriers = v),
                "bs_sub6_panel" => parse_value(value).map(|v| s.bs_sub6_panel = v),
                "bs_mmwave_panel" => parse_value(value).map(|v| s.bs_mmwave_panel = v),
                "ue_mmwave_panel" => parse_value(value).map(|v| s.ue_mmwave_panel = v),
                "rf_chains" => parse_value(value).map(|v| s.rf_chains = v),
                "streams" => parse_value(value).map(|v| s.streams = v),
                "codebook_size" => parse_value(value).map(|v| s.codebook_size = v),
                "seq_len" => parse_value(value).map(|v| s.seq_len = v),
                "ue_speed_mps" => parse_value(value).map(|v| s.ue_speed_mps = v),
                "ue_speed_kmh" => parse_value::<f64>(value).map(|v| s.ue_speed_mps = v / 3.6),
                "sample_interval_s" => parse_value(value).map(|v| s.sample_interval_s = v),
                "cluster_count" => parse_value(value).map(|v| s.cluster_count = v),
                "xpr_db" => parse_value(value).map(|v| s.xpr_db = v),
                "mmwave_snr_db" => parse_value(value).map(|v| s.mmwave_snr_db = v),
                "trajectory_linked" => parse_bool(value).map(|v| s.trajectory_linked = v),
                "sample_count" => parse_value(value).map(|v| cfg.sample_count = v),
                "input_snr_db" => parse_list(value).map(|v| cfg.input_snr_db = v),
                "output_prefix" => {
                    cfg.output_prefix = value.to_string();
                    Ok(())
                }
                "n_list" => parse_list(value).map(|v| cfg.n_list = v),
                "predictors" => parse_list(value).map(|v| cfg.predictors = v),
                "threads" => parse_value(value).map(|v| cfg.threads = v),
                _ => {
                    return Err(Error::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                }
            };
            res.map_err(|message| Error::ConfigSyntax {
                line: line_no,
                message: format!("{key}: {message}"),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.input_snr_db.is_empty() {
            return Err(Error::Config("input_snr_db list must not be empty".into()));
        }
        if self.input_snr_db.iter().any(|v| v.is_nan()) {
            return Err(Error::Config(
                "input_snr_db entries must be numbers or inf".into(),
            ));
        }
        validate_n_list(&self.n_list, self.scenario.codebook_size)?;
        Ok(())
    }
}

/// n-lists must be non-empty, strictly ascending and within `1..=|C|`.
pub fn validate_n_list(n_list: &[usize], codebook_size: usize) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::Config("n list must not be empty".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("n list must be sorted ascending".into()));
    }
    if n_list[0] == 0 || *n_list.last().unwrap() > codebook_size {
        return Err(Error::Config(format!(
            "n values must lie in 1..={codebook_size}"
        )));
    }
    Ok(())
}
