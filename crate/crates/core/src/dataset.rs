//! Labeled dataset generation, splitting and the binary file formats.
//!
//! Dataset file (`DBBP`, little-endian):
//!
//! ```text
//! magic "DBBP" | version u16 = 1 | flags u16
//! u32: T, K, Kbar, N_tx_sub6, N_tx, N_rx, N_rf, |C|, sample_count
//! i32: input SNR in millibel (i32::MIN = +inf)
//! per sample:
//!   sub-6     T*K*(2 N_tx_sub6) x (f32 re, f32 im)   t, k, port
//!   locations T x (f32 x, y, z)                       if flags & 2
//!   mmWave    Kbar*(2 N_rx)*(2 N_tx) x (f32, f32)     k, rx, tx   if flags & 4
//!   labels    2 N_rf x u16 (+45 chains, -45 chains), f64 optimal MI   if flags & 1
//! ```
//!
//! Flag bit 3 marks samples that are consecutive windows of one trajectory.
//!
//! Scores file (`DBPR`): magic, version u16 = 1, u32 sample_count, u32 N_rf,
//! u32 |C|, then `2 N_rf |C|` f32 scores per sample, chain-major with +45
//! deg chains first.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex32;
use rand::seq::SliceRandom;

use crate::channel::{
    add_measurement_noise, generate_trajectory_seeded, mmwave_channel_at, sub6_channel_at,
    Trajectory,
};
use crate::codebook::build_codebook;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::linalg::{CMat, C64};
use crate::precoding::RfSelection;
use crate::rng::{derive_seed, rng_for, Stream};
use crate::scores::PredictionScores;
use crate::search::exhaustive_search_with;

pub const DATASET_MAGIC: [u8; 4] = *b"DBBP";
pub const SCORES_MAGIC: [u8; 4] = *b"DBPR";
pub const FORMAT_VERSION: u16 = 1;

pub const FLAG_LABELS: u16 = 1 << 0;
pub const FLAG_LOCATIONS: u16 = 1 << 1;
pub const FLAG_MMWAVE: u16 = 1 << 2;
pub const FLAG_LINKED: u16 = 1 << 3;
const KNOWN_FLAGS: u16 = FLAG_LABELS | FLAG_LOCATIONS | FLAG_MMWAVE | FLAG_LINKED;

/// Sentinel for an infinite (noiseless) input SNR.
pub const SNR_INF_MILLIBEL: i32 = i32::MIN;

const HEADER_LEN: usize = 4 + 2 + 2 + 9 * 4 + 4;
const SCORES_HEADER_LEN: usize = 4 + 2 + 3 * 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetHeader {
    pub flags: u16,
    pub seq_len: usize,
    pub sub6_subcarriers: usize,
    pub mmwave_subcarriers: usize,
    pub n_tx_sub6: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    pub rf_chains: usize,
    pub codebook_size: usize,
    pub input_snr_millibel: i32,
}

impl DatasetHeader {
    pub fn for_config(cfg: &ScenarioConfig, flags: u16, input_snr_db: f64) -> Self {
        Self {
            flags,
            seq_len: cfg.seq_len,
            sub6_subcarriers: cfg.sub6_subcarriers,
            mmwave_subcarriers: cfg.mmwave_subcarriers,
            n_tx_sub6: cfg.n_tx_sub6(),
            n_tx: cfg.n_tx(),
            n_rx: cfg.n_rx(),
            rf_chains: cfg.rf_chains,
            codebook_size: cfg.codebook_size,
            input_snr_millibel: snr_to_millibel(input_snr_db),
        }
    }

    pub fn has(&self, flag: u16) -> bool {
        self.flags & flag != 0
    }

    pub fn input_snr_db(&self) -> f64 {
        millibel_to_snr(self.input_snr_millibel)
    }

    pub fn sub6_len(&self) -> usize {
        self.seq_len * self.sub6_subcarriers * 2 * self.n_tx_sub6
    }

    pub fn mmwave_len(&self) -> usize {
        self.mmwave_subcarriers * 2 * self.n_rx * 2 * self.n_tx
    }

    /// Encoded size of one sample in bytes.
    pub fn sample_bytes(&self) -> usize {
        let mut n = self.sub6_len() * 8;
        if self.has(FLAG_LOCATIONS) {
            n += self.seq_len * 12;
        }
        if self.has(FLAG_MMWAVE) {
            n += self.mmwave_len() * 8;
        }
        if self.has(FLAG_LABELS) {
            n += 2 * self.rf_chains * 2 + 8;
        }
        n
    }

    /// Checks that the header describes the same geometry as `cfg`.
    pub fn matches(&self, cfg: &ScenarioConfig) -> bool {
        *self == Self::for_config(cfg, self.flags, self.input_snr_db())
    }
}

pub fn snr_to_millibel(snr_db: f64) -> i32 {
    if snr_db == f64::INFINITY {
        SNR_INF_MILLIBEL
    } else {
        (snr_db * 100.0).round() as i32
    }
}

pub fn millibel_to_snr(mb: i32) -> f64 {
    if mb == SNR_INF_MILLIBEL {
        f64::INFINITY
    } else {
        mb as f64 / 100.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Label {
    pub selection: RfSelection,
    pub optimal_mi: f64,
}

/// One record: `T` sub-6 snapshots and locations, the mmWave channel one
/// step later, and its optimal beams.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSample {
    /// `t`-major, then subcarrier, then antenna port.
    pub sub6: Vec<Complex32>,
    pub locations: Option<Vec<[f32; 3]>>,
    /// Subcarrier-major, then receive port, then transmit port.
    pub mmwave: Option<Vec<Complex32>>,
    pub label: Option<Label>,
}

impl ChannelSample {
    pub fn sub6_entry(&self, header: &DatasetHeader, t: usize, k: usize, port: usize) -> Complex32 {
        let ports = 2 * header.n_tx_sub6;
        self.sub6[(t * header.sub6_subcarriers + k) * ports + port]
    }

    /// mmWave channel as `f64` matrices, one per subcarrier.
    pub fn mmwave_matrices(&self, header: &DatasetHeader) -> Option<Vec<CMat>> {
        let data = self.mmwave.as_ref()?;
        let (rows, cols) = (2 * header.n_rx, 2 * header.n_tx);
        Some(
            data.chunks_exact(rows * cols)
                .map(|chunk| {
                    let v = chunk
                        .iter()
                        .map(|c| C64::new(c.re as f64, c.im as f64))
                        .collect();
                    CMat::from_vec(rows, cols, v).expect("chunk size")
                })
                .collect(),
        )
    }

    fn check(&self, header: &DatasetHeader, index: usize) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::invalid(format!(
                "sample {index}: {what} does not match the header"
            )))
        };
        if self.sub6.len() != header.sub6_len() {
            return bad("sub-6 block length");
        }
        match (&self.locations, header.has(FLAG_LOCATIONS)) {
            (Some(l), true) if l.len() == header.seq_len => {}
            (None, false) => {}
            _ => return bad("locations block"),
        }
        match (&self.mmwave, header.has(FLAG_MMWAVE)) {
            (Some(m), true) if m.len() == header.mmwave_len() => {}
            (None, false) => {}
            _ => return bad("mmWave block"),
        }
        match (&self.label, header.has(FLAG_LABELS)) {
            (Some(l), true) => {
                if l.selection.rf_chains() != header.rf_chains {
                    return bad("label chain count");
                }
                l.selection.validate(header.codebook_size)?;
            }
            (None, false) => {}
            _ => return bad("label block"),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<ChannelSample>,
}

impl Dataset {
    pub fn empty(header: DatasetHeader) -> Self {
        Self {
            header,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_labels(&self) -> bool {
        self.header.has(FLAG_LABELS)
    }

    pub fn is_linked(&self) -> bool {
        self.header.has(FLAG_LINKED)
    }

    pub fn validate(&self) -> Result<()> {
        if self.header.flags & !KNOWN_FLAGS != 0 {
            return Err(Error::invalid(format!(
                "unknown flag bits {:#x}",
                self.header.flags
            )));
        }
        if self.header.codebook_size > u16::MAX as usize + 1 {
            return Err(Error::invalid("codebook too large for u16 labels"));
        }
        self.samples
            .iter()
            .enumerate()
            .try_for_each(|(i, s)| s.check(&self.header, i))
    }
}

fn quantize(v: C64) -> Complex32 {
    Complex32::new(v.re as f32, v.im as f32)
}

/// Generates `sample_count` labeled samples from `cfg.seed`.
pub fn generate_dataset(
    cfg: &ScenarioConfig,
    sample_count: usize,
    input_snr_db: f64,
) -> Result<Dataset> {
    generate_dataset_with(cfg, sample_count, input_snr_db, Execution::Parallel)
}

pub fn generate_dataset_with(
    cfg: &ScenarioConfig,
    sample_count: usize,
    input_snr_db: f64,
    exec: Execution,
) -> Result<Dataset> {
    cfg.validate()?;
    if input_snr_db.is_nan() {
        return Err(Error::invalid("input SNR must be a number or +inf"));
    }
    let mut flags = FLAG_LABELS | FLAG_LOCATIONS | FLAG_MMWAVE;
    if cfg.trajectory_linked {
        flags |= FLAG_LINKED;
    }
    let header = DatasetHeader::for_config(cfg, flags, input_snr_db);
    let cb = build_codebook(cfg)?;
    let rho = cfg.mmwave_snr_linear();
    let t_len = cfg.seq_len;

    let shared = if cfg.trajectory_linked && sample_count > 0 {
        let seed = derive_seed(cfg.seed, Stream::Sample, 0);
        Some(generate_trajectory_seeded(cfg, sample_count + t_len, seed)?)
    } else {
        None
    };

    let samples = map_indexed(exec, sample_count, |i| -> Result<ChannelSample> {
        let own;
        let (traj, start): (&Trajectory, usize) = match &shared {
            Some(t) => (t, i),
            None => {
                let seed = derive_seed(cfg.seed, Stream::Sample, i as u64);
                own = generate_trajectory_seeded(cfg, t_len + 1, seed)?;
                (&own, 0)
            }
        };
        let noise_base = derive_seed(cfg.seed, Stream::Noise, i as u64);
        let mut sub6 = Vec::with_capacity(header.sub6_len());
        let mut locations = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let clean = sub6_channel_at(cfg, traj, start + t)?;
            let noisy = add_measurement_noise(
                &clean,
                input_snr_db,
                derive_seed(noise_base, Stream::Noise, t as u64),
            );
            for k in 0..cfg.sub6_subcarriers {
                for p in 0..2 * cfg.n_tx_sub6() {
                    sub6.push(quantize(noisy.h[(p, k)]));
                }
            }
            let loc = &traj.steps[start + t].location;
            locations.push([loc.x_m as f32, loc.y_m as f32, loc.z_m as f32]);
        }
        let target = mmwave_channel_at(cfg, traj, start + t_len)?;
        let mmwave: Vec<Complex32> = target
            .h
            .iter()
            .flat_map(|m| m.as_slice().iter().map(|&v| quantize(v)))
            .collect();
        let mut sample = ChannelSample {
            sub6,
            locations: Some(locations),
            mmwave: Some(mmwave),
            label: None,
        };
        // Label the stored (f32) channel so evaluation on a read-back file
        // reproduces the optimum exactly.
        let h = sample.mmwave_matrices(&header).expect("mmwave present");
        let best = exhaustive_search_with(&h, &cb, cfg, rho, exec)?;
        sample.label = Some(Label {
            selection: best.selection,
            optimal_mi: best.mi,
        });
        Ok(sample)
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Dataset { header, samples })
}

/// Shuffles with `seed` and splits off `round(fraction * S)` training samples
/// (halves round up).
pub fn split_dataset(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng_for(seed, Stream::Split, 0));
    let n_train = ((train_fraction * ds.len() as f64) + 0.5).floor() as usize;
    let n_train = n_train.min(ds.len());
    let mut header = ds.header;
    header.flags &= !FLAG_LINKED;
    let pick = |idx: &[usize]| Dataset {
        header,
        samples: idx.iter().map(|&i| ds.samples[i].clone()).collect(),
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::invalid(format!("{v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_c32(out: &mut Vec<u8>, v: Complex32) {
    out.extend_from_slice(&v.re.to_le_bytes());
    out.extend_from_slice(&v.im.to_le_bytes());
}

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    ds.validate()?;
    let h = &ds.header;
    let mut out = Vec::with_capacity(HEADER_LEN + ds.len() * h.sample_bytes());
    out.extend_from_slice(&DATASET_MAGIC);
    put_u16(&mut out, FORMAT_VERSION);
    put_u16(&mut out, h.flags);
    for v in [
        h.seq_len,
        h.sub6_subcarriers,
        h.mmwave_subcarriers,
        h.n_tx_sub6,
        h.n_tx,
        h.n_rx,
        h.rf_chains,
        h.codebook_size,
        ds.len(),
    ] {
        put_u32(&mut out, v)?;
    }
    out.extend_from_slice(&h.input_snr_millibel.to_le_bytes());
    for s in &ds.samples {
        for &v in &s.sub6 {
            put_c32(&mut out, v);
        }
        if let Some(locs) = &s.locations {
            for l in locs {
                for c in l {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        if let Some(m) = &s.mmwave {
            for &v in m {
                put_c32(&mut out, v);
            }
        }
        if let Some(label) = &s.label {
            for i in label.selection.tuple() {
                put_u16(&mut out, i as u16);
            }
            out.extend_from_slice(&label.optimal_mi.to_le_bytes());
        }
    }
    Ok(out)
}

/// Little-endian cursor that reports byte offsets in its errors.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!("unexpected end of file reading {what}"),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }

    fn i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> f32 {
        let v = f32::from_le_bytes(self.buf[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        v
    }

    fn f64(&mut self) -> f64 {
        let v = f64::from_le_bytes(self.buf[self.pos..self.pos + 8].try_into().unwrap());
        self.pos += 8;
        v
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn check_magic(r: &mut Reader<'_>, magic: &[u8; 4]) -> Result<()> {
    let got = r.take(4, "magic")?;
    if got != magic {
        return Err(Error::format(
            0,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            ),
        ));
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    Ok(())
}

/// Header and declared sample count.
pub fn decode_dataset_header(buf: &[u8]) -> Result<(DatasetHeader, usize)> {
    let mut r = Reader::new(buf);
    check_magic(&mut r, &DATASET_MAGIC)?;
    let flags = r.u16("flags")?;
    if flags & !KNOWN_FLAGS != 0 {
        return Err(Error::format(6, format!("unknown flag bits {flags:#06x}")));
    }
    let mut dims = [0usize; 9];
    for (i, d) in dims.iter_mut().enumerate() {
        *d = r.u32("header dimensions")?;
        if i < 8 && *d == 0 {
            return Err(Error::format(
                8 + 4 * i as u64,
                "dimension must be at least 1",
            ));
        }
    }
    let header = DatasetHeader {
        flags,
        seq_len: dims[0],
        sub6_subcarriers: dims[1],
        mmwave_subcarriers: dims[2],
        n_tx_sub6: dims[3],
        n_tx: dims[4],
        n_rx: dims[5],
        rf_chains: dims[6],
        codebook_size: dims[7],
        input_snr_millibel: r.i32("input SNR")?,
    };
    Ok((header, dims[8]))
}

pub fn decode_dataset(buf: &[u8]) -> Result<Dataset> {
    let (header, count) = decode_dataset_header(buf)?;
    let mut r = Reader::new(buf);
    r.pos = HEADER_LEN;
    let sample_bytes = header.sample_bytes();
    let mut samples = Vec::with_capacity(count.min(r.remaining() / sample_bytes.max(1) + 1));
    for index in 0..count {
        if r.remaining() < sample_bytes {
            return Err(Error::TruncatedSample {
                index,
                offset: r.pos as u64,
            });
        }
        let mut c32 = |n: usize| -> Vec<Complex32> {
            (0..n)
                .map(|_| {
                    let re = r.f32();
                    Complex32::new(re, r.f32())
                })
                .collect()
        };
        let sub6 = c32(header.sub6_len());
        let locations = header.has(FLAG_LOCATIONS).then(|| {
            (0..header.seq_len)
                .map(|_| [r.f32(), r.f32(), r.f32()])
                .collect()
        });
        let mmwave = header.has(FLAG_MMWAVE).then(|| {
            (0..header.mmwave_len())
                .map(|_| {
                    let re = r.f32();
                    Complex32::new(re, r.f32())
                })
                .collect()
        });
        let label = if header.has(FLAG_LABELS) {
            let at = r.pos as u64;
            let mut tuple = Vec::with_capacity(2 * header.rf_chains);
            for _ in 0..2 * header.rf_chains {
                tuple.push(r.u16("label")? as usize);
            }
            if let Some(&bad) = tuple.iter().find(|&&i| i >= header.codebook_size) {
                return Err(Error::format(
                    at,
                    format!("sample {index}: label index {bad} >= codebook size"),
                ));
            }
            Some(Label {
                selection: RfSelection::from_tuple(&tuple),
                optimal_mi: r.f64(),
            })
        } else {
            None
        };
        samples.push(ChannelSample {
            sub6,
            locations,
            mmwave,
            label,
        });
    }
    if r.remaining() != 0 {
        return Err(Error::format(
            r.pos as u64,
            format!("{} trailing bytes after the last sample", r.remaining()),
        ));
    }
    Ok(Dataset { header, samples })
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_dataset(ds)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?)
}

/// Contents of a `DBPR` prediction-scores file.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoresFile {
    pub rf_chains: usize,
    pub codebook_size: usize,
    pub scores: Vec<PredictionScores>,
}

pub fn encode_scores(file: &ScoresFile) -> Result<Vec<u8>> {
    let per = 2 * file.rf_chains * file.codebook_size;
    let mut out = Vec::with_capacity(SCORES_HEADER_LEN + file.scores.len() * per * 4);
    out.extend_from_slice(&SCORES_MAGIC);
    put_u16(&mut out, FORMAT_VERSION);
    put_u32(&mut out, file.scores.len())?;
    put_u32(&mut out, file.rf_chains)?;
    put_u32(&mut out, file.codebook_size)?;
    for (i, s) in file.scores.iter().enumerate() {
        if s.rf_chains() != file.rf_chains || s.codebook_size() != file.codebook_size {
            return Err(Error::invalid(format!("score set {i} has the wrong shape")));
        }
        for v in s.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_scores(buf: &[u8]) -> Result<ScoresFile> {
    let mut r = Reader::new(buf);
    check_magic(&mut r, &SCORES_MAGIC)?;
    let count = r.u32("sample count")?;
    let rf_chains = r.u32("N_rf")?;
    let codebook_size = r.u32("codebook size")?;
    if rf_chains == 0 || codebook_size == 0 {
        return Err(Error::format(
            10,
            "N_rf and codebook size must be at least 1",
        ));
    }
    let per = 2 * rf_chains * codebook_size;
    let mut scores = Vec::with_capacity(count.min(r.remaining() / (per * 4) + 1));
    for index in 0..count {
        if r.remaining() < per * 4 {
            return Err(Error::TruncatedSample {
                index,
                offset: r.pos as u64,
            });
        }
        let at = r.pos as u64;
        let values: Vec<f32> = (0..per).map(|_| r.f32()).collect();
        let s = PredictionScores::new(rf_chains, codebook_size, values)
            .map_err(|e| Error::format(at, format!("sample {index}: {e}")))?;
        scores.push(s);
    }
    if r.remaining() != 0 {
        return Err(Error::format(
            r.pos as u64,
            format!("{} trailing bytes after the last score set", r.remaining()),
        ));
    }
    Ok(ScoresFile {
        rf_chains,
        codebook_size,
        scores,
    })
}

pub fn write_scores(file: &ScoresFile, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_scores(file)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoresFile> {
    decode_scores(&fs::read(path)?)
}
