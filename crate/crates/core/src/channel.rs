//! Dual-band clustered geometric channel model.
//!
//! A trajectory is a straight UE route seen from a single base station.
//! Each cluster keeps fixed angular offsets from the line-of-sight direction,
//! a fixed excess delay, power and polarization coupling; only the geometry
//! (LOS direction, distance, radial speed) changes as the UE moves. Both
//! bands are synthesized from the same `ClusterState`s and differ only in
//! carrier-dependent Doppler phase, array response and per-band power
//! weighting.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};

use crate::codebook::steering_vector;
use crate::config::{ScenarioConfig, MIN_UE_DISTANCE_M};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::rng::{derive_seed, rng_for, Stream};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const BS_HEIGHT_M: f64 = 25.0;
const UE_HEIGHT_M: f64 = 1.5;
const MAX_START_DISTANCE_M: f64 = 200.0;
const MAX_START_AZIMUTH_RAD: f64 = PI / 3.0;
const AOD_AZ_SPREAD_RAD: f64 = 20.0 * PI / 180.0;
const AOD_EL_SPREAD_RAD: f64 = 5.0 * PI / 180.0;
const AOA_AZ_SPREAD_RAD: f64 = 40.0 * PI / 180.0;
const AOA_EL_SPREAD_RAD: f64 = 10.0 * PI / 180.0;
const MEAN_EXCESS_DELAY_S: f64 = 100e-9;
const SHADOWING_DB: f64 = 3.0;
/// mmWave cluster powers are `P^MMWAVE_POWER_EXPONENT`, renormalized, which
/// concentrates energy in the strongest clusters.
const MMWAVE_POWER_EXPONENT: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterState {
    pub azimuth_aod_rad: f64,
    pub elevation_aod_rad: f64,
    pub azimuth_aoa_rad: f64,
    pub elevation_aoa_rad: f64,
    pub delay_s: f64,
    /// Reference (sub-6) power; powers of one step sum to one.
    pub power_linear: f64,
    /// UE velocity projected on the arrival direction.
    pub radial_speed_mps: f64,
    /// `[ue_pol][bs_pol]`, index 0 = +45 deg, 1 = -45 deg.
    pub polarization_coupling: [[C64; 2]; 2],
}

impl ClusterState {
    pub fn doppler_hz(&self, carrier_hz: f64) -> f64 {
        self.radial_speed_mps * carrier_hz / SPEED_OF_LIGHT
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocationSample {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    pub timestamp_s: f64,
}

impl LocationSample {
    pub fn distance_to(&self, other: &LocationSample) -> f64 {
        ((self.x_m - other.x_m).powi(2)
            + (self.y_m - other.y_m).powi(2)
            + (self.z_m - other.z_m).powi(2))
        .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep {
    pub location: LocationSample,
    pub clusters: Vec<ClusterState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn step(&self, index: usize) -> Result<&TrajectoryStep> {
        self.steps.get(index).ok_or_else(|| {
            Error::invalid(format!(
                "step {index} out of range for a trajectory of {} steps",
                self.steps.len()
            ))
        })
    }
}

/// Uplink sub-6 snapshot: `2 N_tx_sub6 x K`, +45 deg ports first.
#[derive(Clone, Debug, PartialEq)]
pub struct Sub6Snapshot {
    pub h: CMat,
    pub timestamp_s: f64,
}

/// Downlink mmWave channel: one `2 N_rx x 2 N_tx` matrix per subcarrier,
/// laid out `[[H_+45, H_+-45], [H_-+45, H_-45]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MmWaveChannel {
    pub h: Vec<CMat>,
    pub timestamp_s: f64,
}

impl MmWaveChannel {
    pub fn new(h: Vec<CMat>) -> Self {
        Self {
            h,
            timestamp_s: 0.0,
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.h.len()
    }
}

/// Per-trajectory cluster parameters that do not change along the route.
struct ClusterSeed {
    aod_az_offset: f64,
    aod_el_offset: f64,
    aoa_az_offset: f64,
    aoa_el: f64,
    excess_delay_s: f64,
    power: f64,
    coupling: [[C64; 2]; 2],
}

fn draw_clusters<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<ClusterSeed> {
    let kappa = cross_power_ratio(cfg.xpr_db);
    let delay = Exp::new(1.0 / MEAN_EXCESS_DELAY_S).expect("positive rate");
    let shadow = Normal::new(0.0, SHADOWING_DB).expect("positive spread");
    let mut seeds: Vec<ClusterSeed> = (0..cfg.cluster_count)
        .map(|c| {
            let z: f64 = rng.sample(StandardNormal);
            let aod_az_offset = if c == 0 { 0.0 } else { z * AOD_AZ_SPREAD_RAD };
            let z: f64 = rng.sample(StandardNormal);
            let aod_el_offset = if c == 0 { 0.0 } else { z * AOD_EL_SPREAD_RAD };
            let z: f64 = rng.sample(StandardNormal);
            let aoa_az_offset = z * AOA_AZ_SPREAD_RAD;
            let z: f64 = rng.sample(StandardNormal);
            let aoa_el = z * AOA_EL_SPREAD_RAD;
            let excess_delay_s = if c == 0 { 0.0 } else { delay.sample(rng) };
            let sh: f64 = shadow.sample(rng);
            let power = (-excess_delay_s / MEAN_EXCESS_DELAY_S).exp() * 10f64.powf(-sh / 10.0);
            let mut phase = || C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
            let co0 = phase();
            let x01 = phase() * kappa.sqrt();
            let x10 = phase() * kappa.sqrt();
            let co1 = phase();
            ClusterSeed {
                aod_az_offset,
                aod_el_offset,
                aoa_az_offset,
                aoa_el,
                excess_delay_s,
                power,
                coupling: [[co0, x01], [x10, co1]],
            }
        })
        .collect();
    let total: f64 = seeds.iter().map(|s| s.power).sum();
    for s in &mut seeds {
        s.power /= total;
    }
    seeds
}

/// Cross-polarized to co-polarized power ratio, `10^(-XPR/10)`.
fn cross_power_ratio(xpr_db: f64) -> f64 {
    if xpr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-xpr_db / 10.0)
    }
}

/// Generates a trajectory from `cfg.seed`.
pub fn generate_trajectory(cfg: &ScenarioConfig, steps: usize) -> Result<Trajectory> {
    generate_trajectory_seeded(cfg, steps, derive_seed(cfg.seed, Stream::Trajectory, 0))
}

/// Generates a trajectory of `steps` samples from an explicit stream seed.
pub fn generate_trajectory_seeded(
    cfg: &ScenarioConfig,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if steps < cfg.seq_len + 1 {
        return Err(Error::invalid(format!(
            "a trajectory needs at least T+1 = {} steps, got {steps}",
            cfg.seq_len + 1
        )));
    }
    let mut rng = rng_for(seed, Stream::Trajectory, 0);
    let r0 = rng.random_range(MIN_UE_DISTANCE_M..MAX_START_DISTANCE_M);
    let phi0 = rng.random_range(-MAX_START_AZIMUTH_RAD..MAX_START_AZIMUTH_RAD);
    // Heading within +-90 deg of the outward radial keeps the UE from
    // approaching the BS, so the distance never drops below r0.
    let heading = phi0 + rng.random_range(-PI / 2.0..PI / 2.0);
    let clusters = draw_clusters(cfg, &mut rng);

    let (x0, y0) = (r0 * phi0.cos(), r0 * phi0.sin());
    let (vx, vy) = (
        cfg.ue_speed_mps * heading.cos(),
        cfg.ue_speed_mps * heading.sin(),
    );

    let steps = (0..steps)
        .map(|s| {
            let t = s as f64 * cfg.sample_interval_s;
            let location = LocationSample {
                x_m: x0 + vx * t,
                y_m: y0 + vy * t,
                z_m: UE_HEIGHT_M,
                timestamp_s: t,
            };
            TrajectoryStep {
                clusters: cluster_states(&clusters, &location, heading, cfg.ue_speed_mps),
                location,
            }
        })
        .collect();
    Ok(Trajectory { steps })
}

fn cluster_states(
    seeds: &[ClusterSeed],
    loc: &LocationSample,
    heading: f64,
    speed: f64,
) -> Vec<ClusterState> {
    let horizontal = loc.x_m.hypot(loc.y_m);
    let dz = loc.z_m - BS_HEIGHT_M;
    let los_az = loc.y_m.atan2(loc.x_m);
    let los_el = dz.atan2(horizontal);
    let los_delay = horizontal.hypot(dz) / SPEED_OF_LIGHT;
    // Direction from the UE back towards the BS.
    let back_az = los_az + PI;
    seeds
        .iter()
        .map(|s| {
            let aoa_az = back_az + s.aoa_az_offset;
            ClusterState {
                azimuth_aod_rad: los_az + s.aod_az_offset,
                elevation_aod_rad: los_el + s.aod_el_offset,
                azimuth_aoa_rad: aoa_az,
                elevation_aoa_rad: s.aoa_el,
                delay_s: los_delay + s.excess_delay_s,
                power_linear: s.power,
                radial_speed_mps: speed * (heading - aoa_az).cos(),
                polarization_coupling: s.coupling,
            }
        })
        .collect()
}

#[inline]
fn unit_modulus_response(panel: crate::config::Panel, az: f64, el: f64) -> Vec<C64> {
    let scale = (panel.elements() as f64).sqrt();
    steering_vector(panel, az, el)
        .into_iter()
        .map(|v| v * scale)
        .collect()
}

/// Scale that brings the expected per-entry power to one given unit total
/// cluster power and random coupling phases.
fn polarization_normalization(xpr_db: f64) -> f64 {
    (2.0 / (1.0 + cross_power_ratio(xpr_db))).sqrt()
}

/// Uplink sub-6 channel at a trajectory step.
///
/// The single-antenna UE is modeled as radiating equally into both
/// polarizations, so BS port polarization `p` sees
/// `(X[0][p] + X[1][p]) / sqrt(2)` from each cluster.
pub fn sub6_channel_at(
    cfg: &ScenarioConfig,
    traj: &Trajectory,
    step: usize,
) -> Result<Sub6Snapshot> {
    let st = traj.step(step)?;
    let t = st.location.timestamp_s;
    let n = cfg.n_tx_sub6();
    let k_count = cfg.sub6_subcarriers;
    let df = cfg.sub6_subcarrier_spacing_hz();
    let norm = polarization_normalization(cfg.xpr_db);
    let mut h = CMat::zeros(2 * n, k_count);
    for c in &st.clusters {
        let a = unit_modulus_response(cfg.bs_sub6_panel, c.azimuth_aod_rad, c.elevation_aod_rad);
        let x = &c.polarization_coupling;
        let pol = [
            (x[0][0] + x[1][0]) * FRAC_1_SQRT_2,
            (x[0][1] + x[1][1]) * FRAC_1_SQRT_2,
        ];
        let base = C64::from_polar(
            c.power_linear.sqrt() * norm,
            2.0 * PI * c.doppler_hz(cfg.sub6_carrier_hz) * t,
        );
        for k in 0..k_count {
            let g = base * C64::from_polar(1.0, -2.0 * PI * k as f64 * df * c.delay_s);
            for (p, &pg) in pol.iter().enumerate() {
                let gp = g * pg;
                for (i, &ai) in a.iter().enumerate() {
                    h[(p * n + i, k)] += gp * ai;
                }
            }
        }
    }
    Ok(Sub6Snapshot { h, timestamp_s: t })
}

/// Downlink mmWave channel at a trajectory step:
/// `H[k] = sum_c g_c[k] (X_c kron a_rx a_tx^H)`.
pub fn mmwave_channel_at(
    cfg: &ScenarioConfig,
    traj: &Trajectory,
    step: usize,
) -> Result<MmWaveChannel> {
    let st = traj.step(step)?;
    let t = st.location.timestamp_s;
    let (n_rx, n_tx) = (cfg.n_rx(), cfg.n_tx());
    let df = cfg.mmwave_subcarrier_spacing_hz();
    let norm = polarization_normalization(cfg.xpr_db);

    let weights: Vec<f64> = st
        .clusters
        .iter()
        .map(|c| c.power_linear.powf(MMWAVE_POWER_EXPONENT))
        .collect();
    let total: f64 = weights.iter().sum();

    // Per-cluster spatial signature, shared by all subcarriers.
    let signatures: Vec<CMat> = st
        .clusters
        .iter()
        .map(|c| {
            let a_rx =
                unit_modulus_response(cfg.ue_mmwave_panel, c.azimuth_aoa_rad, c.elevation_aoa_rad);
            let a_tx =
                unit_modulus_response(cfg.bs_mmwave_panel, c.azimuth_aod_rad, c.elevation_aod_rad);
            let x = &c.polarization_coupling;
            CMat::from_fn(2 * n_rx, 2 * n_tx, |r, col| {
                let (q, i) = (r / n_rx, r % n_rx);
                let (p, j) = (col / n_tx, col % n_tx);
                x[q][p] * a_rx[i] * a_tx[j].conj()
            })
        })
        .collect();

    let h = (0..cfg.mmwave_subcarriers)
        .map(|k| {
            let mut m = CMat::zeros(2 * n_rx, 2 * n_tx);
            for ((c, sig), w) in st.clusters.iter().zip(&signatures).zip(&weights) {
                let g = C64::from_polar(
                    (w / total).sqrt() * norm,
                    2.0 * PI
                        * (c.doppler_hz(cfg.mmwave_carrier_hz) * t - k as f64 * df * c.delay_s),
                );
                for (o, &s) in m.as_mut_slice().iter_mut().zip(sig.as_slice()) {
                    *o += g * s;
                }
            }
            m
        })
        .collect();
    Ok(MmWaveChannel { h, timestamp_s: t })
}

/// Adds circular complex Gaussian noise with per-entry variance equal to the
/// snapshot's mean per-entry power divided by the linear SNR. `+inf` returns
/// the input unchanged.
pub fn add_measurement_noise(h: &Sub6Snapshot, snr_db: f64, noise_seed: u64) -> Sub6Snapshot {
    if snr_db == f64::INFINITY {
        return h.clone();
    }
    let entries = h.h.as_slice();
    let signal = entries.iter().map(|v| v.norm_sqr()).sum::<f64>() / entries.len().max(1) as f64;
    let sigma = (signal / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    let mut rng = rng_for(noise_seed, Stream::Noise, 0);
    let mut out = h.clone();
    for v in out.h.as_mut_slice() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += C64::new(re * sigma, im * sigma);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Panel;

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            mmwave_subcarriers: 8,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn step_spacing_matches_speed() {
        let cfg = small_cfg();
        let traj = generate_trajectory(&cfg, 6).unwrap();
        assert_eq!(traj.len(), 6);
        for w in traj.steps.windows(2) {
            let d = w[0].location.distance_to(&w[1].location);
            assert!((d - 30.0 / 3.6 * 0.1).abs() < 1e-9, "{d}");
        }
    }

    #[test]
    fn too_few_steps_rejected() {
        let cfg = small_cfg();
        assert!(matches!(
            generate_trajectory(&cfg, cfg.seq_len),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn stationary_ue_keeps_clusters() {
        let cfg = ScenarioConfig {
            ue_speed_mps: 0.0,
            ..small_cfg()
        };
        let traj = generate_trajectory(&cfg, 6).unwrap();
        for s in &traj.steps[1..] {
            assert_eq!(s.clusters, traj.steps[0].clusters);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let cfg = small_cfg();
        let a = generate_trajectory(&cfg, 8).unwrap();
        let b = generate_trajectory(&cfg, 8).unwrap();
        assert_eq!(a, b);
        let other = ScenarioConfig {
            seed: 2,
            ..small_cfg()
        };
        assert_ne!(a, generate_trajectory(&other, 8).unwrap());
    }

    #[test]
    fn azimuth_drift_is_bounded() {
        let cfg = ScenarioConfig {
            ue_speed_mps: 30.0,
            sample_interval_s: 0.5,
            ..small_cfg()
        };
        for seed in 0..50 {
            let traj = generate_trajectory_seeded(&cfg, 40, seed).unwrap();
            for w in traj.steps.windows(2) {
                for (a, b) in w[0].clusters.iter().zip(&w[1].clusters) {
                    let d = (b.azimuth_aod_rad - a.azimuth_aod_rad).abs();
                    assert!(d <= cfg.max_drift_rad() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn table_shapes() {
        let cfg = small_cfg();
        let traj = generate_trajectory(&cfg, 6).unwrap();
        let s = sub6_channel_at(&cfg, &traj, 0).unwrap();
        assert_eq!(s.h.shape(), (32, 32));
        let m = mmwave_channel_at(&cfg, &traj, 5).unwrap();
        assert_eq!(m.h.len(), 8);
        assert_eq!(m.h[0].shape(), (8, 128));
        assert!(m.h.iter().all(CMat::is_finite));
        assert!(sub6_channel_at(&cfg, &traj, 6).is_err());
    }

    #[test]
    fn infinite_xpr_zeroes_cross_blocks() {
        let cfg = ScenarioConfig {
            xpr_db: f64::INFINITY,
            ..small_cfg()
        };
        let traj = generate_trajectory(&cfg, 6).unwrap();
        let m = mmwave_channel_at(&cfg, &traj, 2).unwrap();
        let (n_rx, n_tx) = (cfg.n_rx(), cfg.n_tx());
        for hk in &m.h {
            for r in 0..2 * n_rx {
                for c in 0..2 * n_tx {
                    if (r < n_rx) != (c < n_tx) {
                        assert_eq!(hk[(r, c)], C64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn infinite_xpr_minus45_ports_are_pure_copolar() {
        let cfg = ScenarioConfig {
            xpr_db: f64::INFINITY,
            cluster_count: 1,
            ..small_cfg()
        };
        let traj = generate_trajectory(&cfg, 6).unwrap();
        let s = sub6_channel_at(&cfg, &traj, 1).unwrap();
        let c = &traj.steps[1].clusters[0];
        assert_eq!(c.polarization_coupling[0][1], C64::new(0.0, 0.0));
        assert_eq!(c.polarization_coupling[1][0], C64::new(0.0, 0.0));
        // -45 rows equal the +45 rows rotated by the ratio of co-polar terms.
        let x = c.polarization_coupling;
        let ratio = x[1][1] / x[0][0];
        let n = cfg.n_tx_sub6();
        for k in 0..cfg.sub6_subcarriers {
            for i in 0..n {
                let expect = s.h[(i, k)] * ratio;
                assert!((s.h[(n + i, k)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_broadside_cluster_is_rank_one_per_block() {
        let cfg = ScenarioConfig {
            xpr_db: f64::INFINITY,
            cluster_count: 1,
            ue_mmwave_panel: Panel::new(2, 2),
            ..small_cfg()
        };
        let traj = generate_trajectory(&cfg, 6).unwrap();
        let m = mmwave_channel_at(&cfg, &traj, 0).unwrap();
        let (n_rx, n_tx) = (cfg.n_rx(), cfg.n_tx());
        // Every 2x2 minor of the +45 block vanishes.
        let h = &m.h[3];
        for r in 1..n_rx {
            for c in 1..n_tx {
                let minor = h[(0, 0)] * h[(r, c)] - h[(0, c)] * h[(r, 0)];
                assert!(minor.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_infinite_snr_is_identity() {
        let cfg = small_cfg();
        let traj = generate_trajectory(&cfg, 6).unwrap();
        let s = sub6_channel_at(&cfg, &traj, 0).unwrap();
        assert_eq!(add_measurement_noise(&s, f64::INFINITY, 3), s);
        let a = add_measurement_noise(&s, 10.0, 3);
        let b = add_measurement_noise(&s, 10.0, 3);
        assert_eq!(a, b);
        assert_ne!(a, s);
    }

    #[test]
    fn noise_power_matches_snr() {
        let clean = Sub6Snapshot {
            h: CMat::from_fn(100, 1000, |r, c| {
                C64::from_polar(1.0, (r * 31 + c * 7) as f64)
            }),
            timestamp_s: 0.0,
        };
        let noisy = add_measurement_noise(&clean, 0.0, 11);
        let noise: f64 = noisy
            .h
            .as_slice()
            .iter()
            .zip(clean.h.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / 1e5;
        assert!((0.95..=1.05).contains(&noise), "{noise}");
    }
}
