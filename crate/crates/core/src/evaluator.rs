//! Symmetric rate accounting and Monte Carlo SNR sweeps.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformer::oracle::{maximize, OracleOptions};
use crate::beamformer::{optimize, transmission_rate, zf_beamformers, KktOptions, StreamLayout};
use crate::channel::{sample_channels, snr_to_power};
use crate::combinatorics::{binomial, UserSet};
use crate::config::NetworkConfig;
use crate::delivery::DeliveryPlan;
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Mixed into the top-level seed so oracle starts differ from solver starts.
pub(crate) const ORACLE_SALT: u64 = 0x6f72_6163;

/// Beamforming scheme evaluated in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    KktLmmse,
    Zf,
    OracleSmallscale,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::KktLmmse, Scheme::Zf, Scheme::OracleSmallscale];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::KktLmmse => "kkt_lmmse",
            Scheme::Zf => "zf",
            Scheme::OracleSmallscale => "oracle_smallscale",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme '{s}' (expected kkt_lmmse, zf or oracle_smallscale)"
                ))
            })
    }
}

/// `K·Θ / Σ_i 1/R_i`.
pub fn symmetric_rate(rates: &[f64], users: usize, subpacketization: u64) -> Result<f64> {
    symmetric_rate_extrapolated(rates, users, subpacketization, rates.len())
}

/// Symmetric rate when `rates` cover a subsample of a plan with `total`
/// transmissions: the reciprocal sum is scaled by `total / rates.len()`.
pub fn symmetric_rate_extrapolated(
    rates: &[f64],
    users: usize,
    subpacketization: u64,
    total: usize,
) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::InvalidPoint("no transmission rates".into()));
    }
    if let Some((i, r)) = rates
        .iter()
        .enumerate()
        .find(|(_, r)| !(**r > 0.0) || !r.is_finite())
    {
        return Err(Error::InvalidPoint(format!(
            "transmission {i} has rate {r}"
        )));
    }
    let inv: f64 = rates.iter().map(|r| 1.0 / r).sum::<f64>() * total as f64 / rates.len() as f64;
    Ok(users as f64 * subpacketization as f64 / inv)
}

/// Sweep settings shared by every scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub snr_db: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Optimize only this many serving subsets per realization.
    pub subsample: Option<usize>,
    pub kkt: KktOptions,
    pub oracle: OracleOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            snr_db: vec![0.0, 10.0, 20.0, 30.0],
            realizations: 20,
            seed: 0,
            subsample: None,
            kkt: KktOptions::default(),
            oracle: OracleOptions::default(),
        }
    }
}

/// Outcome of one channel realization at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationRecord {
    pub realization: usize,
    /// `R_i` of each evaluated transmission, in the order of `RateReport::evaluated`.
    pub rates: Vec<f64>,
    pub rsym: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub records: Vec<RealizationRecord>,
    pub mean_rsym: f64,
    pub stderr: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Mean over successful realizations of the harmonic mean of `R_i`.
    pub mean_harmonic_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub users: usize,
    pub gain: usize,
    pub omega: usize,
    pub beta: usize,
    pub substreams: usize,
    pub subpacketization: u64,
    pub transmissions: usize,
    /// Indices of the transmissions actually optimized.
    pub evaluated: Vec<usize>,
    pub seed: u64,
    pub realizations: usize,
    pub points: Vec<SweepPoint>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RateReport {
    pub fn point(&self, scheme: Scheme, snr_db: f64) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.scheme == scheme && p.snr_db == snr_db)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "scheme,snr_db,mean_rsym,stderr,n_ok,n_failed,seed")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.scheme, p.snr_db, p.mean_rsym, p.stderr, p.n_ok, p.n_failed, self.seed
            )?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii csv")
    }

    /// Whitespace-separated mean curves, one column per scheme (gnuplot `using 1:n`).
    pub fn write_plot_data<W: Write>(&self, mut out: W) -> Result<()> {
        let mut schemes: Vec<Scheme> = self.points.iter().map(|p| p.scheme).collect();
        schemes.dedup();
        schemes.sort();
        schemes.dedup();
        let mut snrs: Vec<f64> = self.points.iter().map(|p| p.snr_db).collect();
        snrs.sort_by(f64::total_cmp);
        snrs.dedup();
        write!(out, "# snr_db")?;
        for s in &schemes {
            write!(out, " {s} {s}_stderr")?;
        }
        writeln!(out)?;
        for snr in snrs {
            write!(out, "{snr}")?;
            for &s in &schemes {
                match self.point(s, snr) {
                    Some(p) => write!(out, " {} {}", p.mean_rsym, p.stderr)?,
                    None => write!(out, " NaN NaN")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Seeded subset of transmission indices, sorted.
pub fn subsample_transmissions(total: usize, keep: Option<usize>, seed: u64) -> Vec<usize> {
    match keep {
        Some(m) if m < total => {
            let mut rng = substream(seed, Stream::Subsample, 0, 0);
            let mut idx = sample(&mut rng, total, m).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..total).collect(),
    }
}

/// Rate of one transmission under one scheme.
pub fn scheme_rate(
    scheme: Scheme,
    layout: &StreamLayout,
    channels: &[crate::beamformer::CMatrix],
    power: f64,
    noise: f64,
    kkt: &KktOptions,
    oracle: &OracleOptions,
) -> Result<f64> {
    match scheme {
        Scheme::KktLmmse => {
            let out = optimize(layout, channels, power, noise, kkt)?;
            Ok(transmission_rate(
                layout,
                &out.state.w,
                &out.state.u,
                channels,
                noise,
            ))
        }
        Scheme::Zf => {
            let zf = zf_beamformers(layout, channels, power, noise)?;
            Ok(transmission_rate(layout, &zf.w, &zf.u, channels, noise))
        }
        Scheme::OracleSmallscale => Ok(maximize(layout, channels, power, noise, oracle).rate),
    }
}

/// Seed of the solver start for transmission `transmission` of realization `realization`.
pub(crate) fn init_seed(seed: u64, realization: usize, transmission: usize) -> u64 {
    substream(seed, Stream::Init, realization as u64, transmission as u64).next_u64()
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Paired Monte Carlo sweep: realization `r` uses the same channels for every
/// scheme and SNR point. Results do not depend on the worker count.
pub fn monte_carlo_sweep(
    config: &NetworkConfig,
    plan: &DeliveryPlan,
    schemes: &[Scheme],
    options: &SweepOptions,
) -> Result<RateReport> {
    config.validate()?;
    let started = Instant::now();
    let evaluated =
        subsample_transmissions(plan.transmissions.len(), options.subsample, options.seed);
    let layouts: Vec<(UserSet, StreamLayout)> = evaluated
        .iter()
        .map(|&i| {
            let tx = &plan.transmissions[i];
            (
                tx.users,
                StreamLayout::from_transmission(tx, plan.substreams),
            )
        })
        .collect();

    // cells[r][scheme][snr] -> per-transmission results
    let cells: Vec<Vec<Vec<std::result::Result<Vec<f64>, String>>>> = (0..options.realizations)
        .into_par_iter()
        .map(|r| {
            let all = sample_channels(
                options.seed,
                r as u64,
                config.users,
                config.rx_dims,
                config.tx_dims,
            );
            schemes
                .iter()
                .map(|&scheme| {
                    options
                        .snr_db
                        .iter()
                        .map(|&snr| {
                            let power = snr_to_power(snr, config.noise);
                            layouts
                                .iter()
                                .zip(&evaluated)
                                .map(|((users, layout), &i)| {
                                    let members: Vec<usize> = users.iter().collect();
                                    let channels = all.select(&members);
                                    let kkt = KktOptions {
                                        init_seed: init_seed(options.seed, r, i),
                                        ..options.kkt.clone()
                                    };
                                    let oracle = OracleOptions {
                                        seed: init_seed(options.seed ^ ORACLE_SALT, r, i),
                                        ..options.oracle.clone()
                                    };
                                    scheme_rate(
                                        scheme,
                                        layout,
                                        &channels,
                                        power,
                                        config.noise,
                                        &kkt,
                                        &oracle,
                                    )
                                    .map_err(|e| format!("transmission {i}: {e}"))
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let theta = plan.subpacketization();
    let total = plan.transmissions.len();
    let mut points = Vec::new();
    for (si, &scheme) in schemes.iter().enumerate() {
        for (pi, &snr) in options.snr_db.iter().enumerate() {
            let records: Vec<RealizationRecord> = cells
                .iter()
                .enumerate()
                .map(|(r, cell)| match &cell[si][pi] {
                    Ok(rates) => match symmetric_rate_extrapolated(rates, plan.users, theta, total)
                    {
                        Ok(rsym) => RealizationRecord {
                            realization: r,
                            rates: rates.clone(),
                            rsym: Some(rsym),
                            failure: None,
                        },
                        Err(e) => RealizationRecord {
                            realization: r,
                            rates: rates.clone(),
                            rsym: None,
                            failure: Some(e.to_string()),
                        },
                    },
                    Err(msg) => RealizationRecord {
                        realization: r,
                        rates: Vec::new(),
                        rsym: None,
                        failure: Some(msg.clone()),
                    },
                })
                .collect();
            let ok: Vec<f64> = records.iter().filter_map(|r| r.rsym).collect();
            let harmonic: Vec<f64> = records
                .iter()
                .filter(|r| r.rsym.is_some())
                .map(|r| r.rates.len() as f64 / r.rates.iter().map(|x| 1.0 / x).sum::<f64>())
                .collect();
            let (mean_rsym, stderr) = mean_stderr(&ok);
            points.push(SweepPoint {
                scheme,
                snr_db: snr,
                n_ok: ok.len(),
                n_failed: records.len() - ok.len(),
                mean_rsym,
                stderr,
                mean_harmonic_rate: mean_stderr(&harmonic).0,
                records,
            });
        }
    }

    Ok(RateReport {
        users: plan.users,
        gain: plan.gain,
        omega: plan.omega,
        beta: plan.beta,
        substreams: plan.substreams,
        subpacketization: theta,
        transmissions: total,
        evaluated,
        seed: options.seed,
        realizations: options.realizations,
        points,
        elapsed: started.elapsed(),
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// High-SNR slope of rate in bits per dB expressed in streams:
/// one interference-free stream gains `log2(10)/10` bits per dB.
pub fn slope_in_streams(snr_db: &[f64], rates: &[f64]) -> f64 {
    fitted_slope(snr_db, rates) / (10f64.log2() / 10.0)
}

/// Number of serving subsets of a plan, `C(K, Ω)`.
pub fn serving_subsets(users: usize, omega: usize) -> u64 {
    binomial(users, omega)
}
