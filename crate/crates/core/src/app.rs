//! Command workflows behind the `mimo-cc` binary: run configuration, `plan`,
//! `verify-delivery`, `simulate` and `sweep`.
//!
//! Every command reads one TOML file with the sections `[network]`, `[plan]`,
//! `[solver]`, `[sweep]`, `[delivery]` and `[output]`; only `[network]` is
//! mandatory. All randomness derives from `sweep.seed` through named
//! substreams.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beamformer::oracle::{maximize, OracleOptions};
use crate::beamformer::{optimize, transmission_rate, zf_beamformers, KktOptions, StreamLayout};
use crate::channel::{sample_channels, snr_to_power};
use crate::config::NetworkConfig;
use crate::delivery::{
    audit_delivery, build_codewords, build_placement, plan_transmissions, write_plan_dump,
    DeliveryAudit, DeliveryPlan, Library,
};
use crate::dof::{beta_bound, plan_for_omega, PlannerReport};
use crate::error::{Error, Result};
use crate::evaluator::{
    init_seed, monte_carlo_sweep, symmetric_rate, RateReport, Scheme, SweepOptions, ORACLE_SALT,
};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanOverrides {
    pub omega: Option<usize>,
    pub beta: Option<usize>,
    pub substreams: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Serving subsets optimized per realization; all when absent.
    pub subsample: Option<usize>,
    pub schemes: Vec<Scheme>,
    pub oracle_restarts: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            snr_db: vec![0.0, 10.0, 20.0, 30.0],
            realizations: 20,
            seed: 0,
            subsample: None,
            schemes: vec![Scheme::KktLmmse, Scheme::Zf],
            oracle_restarts: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeliveryConfig {
    /// Largest `K` accepted by `verify-delivery`.
    pub max_users: usize,
    /// Test mode: flip the first bit of the first codeword of this transmission.
    pub corrupt_transmission: Option<usize>,
}

impl Default for DeliveryConfig {
    fn default() -> Self {
        DeliveryConfig {
            max_users: 8,
            corrupt_transmission: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub plan: PlanOverrides,
    #[serde(default)]
    pub solver: KktOptions,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub delivery: DeliveryConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub schemes: Option<Vec<Scheme>>,
    pub out: Option<PathBuf>,
}

/// Resolved `(Ω, β, q)` together with the delivery plan.
#[derive(Debug, Clone)]
pub struct ResolvedPlan {
    pub report: PlannerReport,
    pub omega: usize,
    pub beta: usize,
    pub substreams: usize,
    pub delivery: DeliveryPlan,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.sweep.seed = s;
        }
        if let Some(s) = &o.snr_db {
            self.sweep.snr_db = s.clone();
        }
        if let Some(n) = o.realizations {
            self.sweep.realizations = n;
        }
        if let Some(s) = &o.schemes {
            self.sweep.schemes = s.clone();
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        self.validate()
    }

    /// Cross-field checks of the network, planner and sweep settings.
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.resolve_plan()?;
        if self.sweep.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("sweep.snr_db entries must be finite".into()));
        }
        if self.sweep.subsample == Some(0) {
            return Err(Error::Config("sweep.subsample must be positive".into()));
        }
        if self.solver.restarts == 0 {
            return Err(Error::Config("solver.restarts must be positive".into()));
        }
        if !(self.network.noise > 0.0) {
            return Err(Error::Config("network.noise must be positive".into()));
        }
        Ok(())
    }

    /// Planner choice with the `[plan]` overrides applied.
    pub fn resolve_plan(&self) -> Result<ResolvedPlan> {
        let net = &self.network;
        let t = net.caching_gain()?;
        let report = PlannerReport::capped(net.tx_dims, net.rx_dims, t, net.users, self.plan.omega)
            .map_err(|e| Error::Config(e.to_string()))?;
        let omega = report.chosen.omega;
        let base = plan_for_omega(net.tx_dims, net.rx_dims, t, omega)?;
        let beta = match self.plan.beta {
            Some(b) => {
                let bound = beta_bound(net.tx_dims, net.rx_dims, t, omega)?;
                if b == 0 || b as f64 > bound + 1e-12 {
                    return Err(Error::Config(format!(
                        "plan.beta = {b} outside 1..={} for omega = {omega}",
                        bound.floor()
                    )));
                }
                b
            }
            None => base.beta,
        };
        let substreams = match self.plan.substreams {
            Some(q) => q,
            None => crate::dof::substream_count(beta, omega, t),
        };
        if omega > net.users {
            return Err(Error::Config(format!(
                "omega = {omega} exceeds K = {}",
                net.users
            )));
        }
        let delivery = plan_transmissions(net, omega, beta, substreams)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(ResolvedPlan {
            report,
            omega,
            beta,
            substreams,
            delivery,
        })
    }

    fn kkt(&self) -> KktOptions {
        self.solver.clone()
    }

    fn oracle(&self) -> OracleOptions {
        OracleOptions {
            restarts: self.sweep.oracle_restarts,
            ..OracleOptions::default()
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

/// Ω scan, chosen `(Ω, β, q, DoF)`, `Θ` and transmission count. Also writes
/// `plan.jsonl` to the output directory.
pub fn cmd_plan(cfg: &RunConfig) -> Result<String> {
    let r = cfg.resolve_plan()?;
    let mut s = format!("{}\n", r.report);
    let p = &r.delivery;
    writeln!(
        s,
        "plan: K={} t={} omega={} beta={} q={} dof={}",
        p.users,
        p.gain,
        r.omega,
        r.beta,
        r.substreams,
        r.omega * r.beta
    )
    .unwrap();
    writeln!(s, "subpacketization: {}", p.subpacketization()).unwrap();
    writeln!(s, "transmissions: {}", p.transmissions.len()).unwrap();
    writeln!(
        s,
        "streams per transmission: {}",
        p.streams_per_transmission()
    )
    .unwrap();
    create_dir(&cfg.output.dir)?;
    let f = fs::File::create(cfg.output.dir.join("plan.jsonl"))?;
    write_plan_dump(p, BufWriter::new(f))?;
    Ok(s)
}

/// Random library and requests, full encode/decode round trip.
pub fn cmd_verify_delivery(cfg: &RunConfig) -> Result<(DeliveryAudit, String)> {
    let net = &cfg.network;
    if net.users > cfg.delivery.max_users {
        return Err(Error::Config(format!(
            "K = {} exceeds delivery.max_users = {}",
            net.users, cfg.delivery.max_users
        )));
    }
    let r = cfg.resolve_plan()?;
    let seed = cfg.sweep.seed;
    let library = Library::random(
        net.library_size,
        net.file_size_bits,
        &mut substream(seed, Stream::Library, 0, 0),
    );
    let mut rng = substream(seed, Stream::Requests, 0, 0);
    let requests: Vec<usize> = (0..net.users)
        .map(|_| rand::Rng::random_range(&mut rng, 0..net.library_size))
        .collect();
    let placement = build_placement(net, &library)?;
    let mut codewords = build_codewords(&r.delivery, &requests, &placement)?;
    if let Some(tx) = cfg.delivery.corrupt_transmission {
        let cw = codewords
            .codewords
            .iter_mut()
            .find(|c| c.transmission == tx)
            .ok_or_else(|| Error::Config(format!("no transmission {tx} to corrupt")))?;
        let bit = !cw.substreams[0][0];
        cw.substreams[0].set(0, bit);
        let bit = !cw.payload[0];
        cw.payload.set(0, bit);
    }
    let audit = audit_delivery(&r.delivery, &codewords, &placement, &requests, &library)?;
    let mut s = String::new();
    writeln!(s, "requests: {requests:?}").unwrap();
    writeln!(
        s,
        "transmissions: {}  users verified: {}",
        audit.transmissions, audit.users_verified
    )
    .unwrap();
    let f = &audit.freshness;
    writeln!(
        s,
        "freshness: delivered {} demanded {} duplicates {} missing {} unexpected {}",
        f.delivered,
        f.demanded,
        f.duplicates.len(),
        f.missing.len(),
        f.unexpected.len()
    )
    .unwrap();
    let cache_ok = audit
        .cache_bits
        .iter()
        .all(|&b| b == audit.expected_cache_bits);
    writeln!(
        s,
        "cache bits per user: {:?} (expected {})",
        audit.cache_bits, audit.expected_cache_bits
    )
    .unwrap();
    if let Some(r) = f
        .missing
        .first()
        .or(f.duplicates.first())
        .or(f.unexpected.first())
    {
        return Err(Error::IncompleteDelivery {
            user: r.user,
            subset: r.subset,
            index: r.index,
        });
    }
    if !cache_ok {
        return Err(Error::Domain(
            "cache occupancy differs from M·F bits".into(),
        ));
    }
    writeln!(s, "PASS").unwrap();
    Ok((audit, s))
}

/// Per-transmission rates of one scheme at one SNR.
#[derive(Debug, Clone, Serialize)]
pub struct SimulatedPoint {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub rates: Vec<f64>,
    pub rsym: Option<f64>,
    /// ZF only: `max |uᴴHw|²/P_T` over nulled pairs, per transmission.
    pub zf_leakage: Vec<f64>,
    pub zf_fallback: Vec<bool>,
}

/// One channel realization (index 0): optimizes every transmission for each
/// scheme and SNR, writing KKT traces to `trace_<snr>dB_tx<i>.jsonl`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(Vec<SimulatedPoint>, String)> {
    let r = cfg.resolve_plan()?;
    let net = &cfg.network;
    let plan = &r.delivery;
    let seed = cfg.sweep.seed;
    let channels = sample_channels(seed, 0, net.users, net.rx_dims, net.tx_dims);
    create_dir(&cfg.output.dir)?;
    let mut points = Vec::new();
    let mut text = String::new();
    let gains: Vec<String> = channels
        .matrices
        .iter()
        .map(|h| format!("{:.6}", h.norm_squared()))
        .collect();
    writeln!(
        text,
        "realization 0 channel gains ||H_k||_F^2: [{}]",
        gains.join(", ")
    )
    .unwrap();
    for &scheme in &cfg.sweep.schemes {
        for &snr in &cfg.sweep.snr_db {
            let power = snr_to_power(snr, net.noise);
            let mut rates = Vec::new();
            let mut leak = Vec::new();
            let mut fallback = Vec::new();
            for tx in &plan.transmissions {
                let layout = StreamLayout::from_transmission(tx, plan.substreams);
                let members: Vec<usize> = tx.users.iter().collect();
                let h = channels.select(&members);
                let rate = match scheme {
                    Scheme::KktLmmse => {
                        let opts = KktOptions {
                            record_trace: true,
                            init_seed: init_seed(seed, 0, tx.index),
                            ..cfg.kkt()
                        };
                        let path = cfg
                            .output
                            .dir
                            .join(format!("trace_{snr}dB_tx{}.jsonl", tx.index));
                        match optimize(&layout, &h, power, net.noise, &opts) {
                            Ok(out) => {
                                write_trace(&path, &out.trace)?;
                                transmission_rate(
                                    &layout,
                                    &out.state.w,
                                    &out.state.u,
                                    &h,
                                    net.noise,
                                )
                            }
                            Err(Error::Solver { message, trace }) => {
                                write_trace(&path, &trace)?;
                                return Err(Error::Solver { message, trace });
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    Scheme::Zf => {
                        let z = zf_beamformers(&layout, &h, power, net.noise)?;
                        leak.push(z.max_leakage);
                        fallback.push(z.used_fallback());
                        transmission_rate(&layout, &z.w, &z.u, &h, net.noise)
                    }
                    Scheme::OracleSmallscale => {
                        let opts = OracleOptions {
                            seed: init_seed(seed ^ ORACLE_SALT, 0, tx.index),
                            ..cfg.oracle()
                        };
                        maximize(&layout, &h, power, net.noise, &opts).rate
                    }
                };
                rates.push(rate);
            }
            let rsym = symmetric_rate(&rates, plan.users, plan.subpacketization()).ok();
            let rate_list: Vec<String> = rates.iter().map(|r| format!("{r:.6}")).collect();
            writeln!(text, "{scheme} snr={snr}dB R_i=[{}]", rate_list.join(", ")).unwrap();
            match rsym {
                Some(v) => writeln!(text, "{scheme} snr={snr}dB R_sym={v:.6}").unwrap(),
                None => writeln!(
                    text,
                    "{scheme} snr={snr}dB R_sym=invalid (zero-rate transmission)"
                )
                .unwrap(),
            }
            if scheme == Scheme::Zf {
                let worst = leak.iter().copied().fold(0.0, f64::max);
                writeln!(
                    text,
                    "zf leakage audit: max |u^H H w|^2 / P_T = {worst:.3e} over nulled pairs, fallback on {} of {} transmissions",
                    fallback.iter().filter(|&&f| f).count(),
                    fallback.len()
                )
                .unwrap();
            }
            points.push(SimulatedPoint {
                scheme,
                snr_db: snr,
                rates,
                rsym,
                zf_leakage: leak,
                zf_fallback: fallback,
            });
        }
    }
    let f = fs::File::create(cfg.output.dir.join("simulate.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &points)
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok((points, text))
}

fn write_trace(path: &Path, trace: &[crate::beamformer::TraceRecord]) -> Result<()> {
    use std::io::Write;
    let mut out = BufWriter::new(fs::File::create(path)?);
    for rec in trace {
        serde_json::to_writer(&mut out, rec).map_err(|e| Error::Config(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Monte Carlo sweep over every configured scheme. Writes `sweep.csv`,
/// `sweep.dat` (gnuplot) and `sweep.json` (per-realization rates).
pub fn cmd_sweep(cfg: &RunConfig) -> Result<(RateReport, String)> {
    let r = cfg.resolve_plan()?;
    let opts = SweepOptions {
        snr_db: cfg.sweep.snr_db.clone(),
        realizations: cfg.sweep.realizations,
        seed: cfg.sweep.seed,
        subsample: cfg.sweep.subsample,
        kkt: cfg.kkt(),
        oracle: cfg.oracle(),
    };
    let report = monte_carlo_sweep(&cfg.network, &r.delivery, &cfg.sweep.schemes, &opts)?;
    create_dir(&cfg.output.dir)?;
    report.write_csv(BufWriter::new(fs::File::create(
        cfg.output.dir.join("sweep.csv"),
    )?))?;
    report.write_plot_data(BufWriter::new(fs::File::create(
        cfg.output.dir.join("sweep.dat"),
    )?))?;
    let f = fs::File::create(cfg.output.dir.join("sweep.json"))?;
    serde_json::to_writer(BufWriter::new(f), &report).map_err(|e| Error::Config(e.to_string()))?;
    let mut s = report.csv_string();
    writeln!(
        s,
        "# transmissions evaluated: {} of {}; elapsed {:.1}s",
        report.evaluated.len(),
        report.transmissions,
        report.elapsed.as_secs_f64()
    )
    .unwrap();
    Ok((report, s))
}
