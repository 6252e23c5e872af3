//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary (`harness = false`) so the lines are always
//! shown by `cargo test`.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use mimo_cc::app::{cmd_sweep, RunConfig};
use mimo_cc::beamformer::oracle::{maximize, OracleOptions};
use mimo_cc::beamformer::{
    lmmse_receivers, optimize, total_power, transmission_rate, update_tx_beamformers, CMatrix,
    CVector, KktOptions, KktOutcome, StreamLayout,
};
use mimo_cc::channel::{complex_gaussian, sample_channels, snr_to_power};
use mimo_cc::combinatorics::UserSet;
use mimo_cc::delivery::{
    audit_delivery, build_codewords, build_placement, plan_transmissions, Bits, CodewordSet,
    Library, PlacementMap,
};
use mimo_cc::dof::optimize_dof;
use mimo_cc::evaluator::{monte_carlo_sweep, slope_in_streams, Scheme, SweepOptions};
use mimo_cc::{Complex, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed <= limit {
        Ok(format!("{detail}; {:.1}s", elapsed.as_secs_f64()))
    } else {
        Err(format!(
            "{detail}; took {:.1}s, limit {:.0}s",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ))
    }
}

// ---------------------------------------------------------------- criterion 1

/// Decoder written against the placement alone: strip every cached part
/// from each codeword addressed to `user`, then reassemble the file.
fn reference_decode(
    user: usize,
    requests: &[usize],
    cw: &CodewordSet,
    placement: &PlacementMap,
) -> Result<Bits, String> {
    let sb = cw.subpacket_bits;
    let mut received: BTreeMap<(UserSet, usize), Bits> = BTreeMap::new();
    for word in cw.codewords.iter().filter(|w| w.group.contains(user)) {
        let mut joined = Bits::new();
        for s in &word.substreams {
            joined.extend_from_bitslice(s);
        }
        joined.truncate(sb);
        if joined != word.payload {
            return Err(format!(
                "tx {} substreams do not rebuild the payload",
                word.transmission
            ));
        }
        let mut mine = None;
        for part in &word.parts {
            if part.user == user {
                mine = Some((part.subset, part.index));
                continue;
            }
            let sub = placement
                .cached_subfile(user, part.file, part.subset)
                .ok_or_else(|| format!("user {user} lacks W{}[{}]", part.file, part.subset))?;
            let mut piece = sub
                [(part.index * sb).min(sub.len())..((part.index + 1) * sb).min(sub.len())]
                .to_bitvec();
            piece.resize(sb, false);
            joined ^= piece;
        }
        let key = mine.ok_or_else(|| {
            format!(
                "codeword in tx {} has no part for {user}",
                word.transmission
            )
        })?;
        if received.insert(key, joined).is_some() {
            return Err(format!("user {user} received {:?} twice", key));
        }
    }
    let file = requests[user];
    let mut out = Bits::new();
    for &p in placement.subfile_sets() {
        if p.contains(user) {
            out.extend_from_bitslice(placement.cached_subfile(user, file, p).unwrap());
        } else {
            let mut sub = Bits::new();
            for i in 0..cw.subpackets_per_subfile {
                let piece = received
                    .get(&(p, i))
                    .ok_or_else(|| format!("user {user} missing subpacket {p} #{i}"))?;
                sub.extend_from_bitslice(piece);
            }
            sub.truncate(placement.subfile_bits());
            out.extend_from_bitslice(&sub);
        }
    }
    out.truncate(placement.file_bits());
    Ok(out)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for k in 1..=6usize {
        for t in 0..=2usize.min(k - 1) {
            for omega in t + 1..=k {
                let mut cfg =
                    NetworkConfig::with_gain(k, omega - t, 2, t).map_err(|e| e.to_string())?;
                for trial in 0..20 {
                    let q = 1 + trial % 2;
                    cfg.file_size_bits = rng.random_range(1..400);
                    let plan = plan_transmissions(&cfg, omega, 1, q).map_err(|e| e.to_string())?;
                    let library = Library::random(cfg.library_size, cfg.file_size_bits, &mut rng);
                    let requests: Vec<usize> = (0..k)
                        .map(|_| rng.random_range(0..cfg.library_size))
                        .collect();
                    let placement = build_placement(&cfg, &library).map_err(|e| e.to_string())?;
                    let cw =
                        build_codewords(&plan, &requests, &placement).map_err(|e| e.to_string())?;
                    let audit = audit_delivery(&plan, &cw, &placement, &requests, &library)
                        .map_err(|e| format!("K={k} t={t} Ω={omega}: {e}"))?;
                    let f = &audit.freshness;
                    if !f.duplicates.is_empty() || !f.missing.is_empty() || !f.unexpected.is_empty()
                    {
                        return Err(format!("K={k} t={t} Ω={omega}: freshness audit not clean"));
                    }
                    for user in 0..k {
                        let got = reference_decode(user, &requests, &cw, &placement)
                            .map_err(|e| format!("K={k} t={t} Ω={omega}: {e}"))?;
                        if &got != library.file(requests[user]).unwrap() {
                            return Err(format!(
                                "K={k} t={t} Ω={omega}: user {user} decoded wrong bits"
                            ));
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    within(
        start.elapsed(),
        Duration::from_secs(30),
        format!("{cases} round trips exact, audits clean"),
    )
}

// ---------------------------------------------------------------- criterion 2

fn choose(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut r = 1u64;
    for i in 0..k as u64 {
        r = r * (n as u64 - i) / (i + 1);
    }
    r
}

/// Brute force over every `(Ω, β)` pair with exact rational feasibility.
fn brute_force_dof(l: usize, g: usize, t: usize) -> (usize, usize, usize, usize) {
    let mut best = (0, 0, 0, 0);
    for omega in t + 1..=t + l {
        let cc = choose(omega - 1, t);
        let num = l as u64 * cc;
        let den = 1 + (omega - t - 1) as u64 * cc;
        for beta in (1..=g).rev() {
            if beta as u64 * den <= num {
                let q = (1..).find(|q| q * cc >= beta as u64).unwrap() as usize;
                if omega * beta > best.2 {
                    best = (omega, beta, omega * beta, q);
                }
                break;
            }
        }
    }
    best
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut n = 0;
    for l in 1..=10 {
        for g in 1..=10 {
            for t in 0..=4 {
                let p = optimize_dof(l, g, t).map_err(|e| e.to_string())?;
                let want = brute_force_dof(l, g, t);
                if (p.omega, p.beta, p.dof, p.substreams) != want {
                    return Err(format!(
                        "L={l} G={g} t={t}: planner ({}, {}, {}, {}) vs brute force {want:?}",
                        p.omega, p.beta, p.dof, p.substreams
                    ));
                }
                n += 1;
            }
        }
    }
    let a = optimize_dof(3, 2, 1).map_err(|e| e.to_string())?;
    let b = optimize_dof(8, 4, 1).map_err(|e| e.to_string())?;
    if a.dof != 6 || b.dof != 12 || b.substreams != 2 {
        return Err(format!(
            "anchors: (3,2,1) DoF {}, (8,4,1) DoF {} q {}",
            a.dof, b.dof, b.substreams
        ));
    }
    within(
        start.elapsed(),
        Duration::from_secs(1),
        format!("{n} cases match; anchors DoF 6 and 12 with q=2"),
    )
}

// ---------------------------------------------------- invariant bookkeeping (5)

#[derive(Default)]
struct Invariants {
    runs: usize,
    power_ratio: f64,
    normalization: f64,
    residual: f64,
    receiver_drop: f64,
}

impl Invariants {
    fn record(
        &mut self,
        layout: &StreamLayout,
        h: &[CMatrix],
        power: f64,
        noise: f64,
        out: &KktOutcome,
    ) {
        self.runs += 1;
        let d = &out.diagnostics;
        let st = &out.state;
        self.power_ratio = self
            .power_ratio
            .max(total_power(&st.w) / power)
            .max(d.max_power_ratio);

        // (1/q) Σ_{T∋k, i} v = 1 for every user
        for links in &layout.user_links {
            let s: f64 = links.iter().map(|&l| st.v[l]).sum::<f64>() / layout.substreams as f64;
            self.normalization = self.normalization.max((s - 1.0).abs());
        }
        self.normalization = self.normalization.max(d.max_normalization_error);

        // gradient of the Lagrangian in W at the returned duals
        let (w, _) =
            update_tx_beamformers(layout, &st.u, &st.lambda, st.mu, h).expect("transmit solve");
        let mut grad = &w * c(st.mu);
        let mut rhs = CMatrix::zeros(w.nrows(), w.ncols());
        for ((link, ul), &lam) in layout.links.iter().zip(&st.u).zip(&st.lambda) {
            let a = h[link.user].adjoint() * ul;
            for s in 0..w.ncols() {
                let g = (&a * (a.adjoint() * w.column(s))) * c(lam);
                let mut col = grad.column_mut(s);
                col += g;
            }
            let mut col = grad.column_mut(link.stream);
            col -= &a * c(lam);
            let mut r = rhs.column_mut(link.stream);
            r += &a * c(lam);
        }
        if rhs.norm() > 0.0 {
            self.residual = self
                .residual
                .max(grad.norm() / rhs.norm())
                .max(d.max_residual);
        }

        // a receiver update never lowers the objective
        let fresh = lmmse_receivers(layout, &st.w, h, noise).expect("receivers");
        let before = transmission_rate(layout, &st.w, &st.u, h, noise);
        let after = transmission_rate(layout, &st.w, &fresh, h, noise);
        self.receiver_drop = self
            .receiver_drop
            .max(before - after)
            .max(d.max_receiver_drop);
    }
}

// ---------------------------------------------------------------- criterion 3

fn criterion_3(inv: &mut Invariants) -> Outcome {
    let start = Instant::now();
    let layout = StreamLayout::new(&[0], 0, 1);
    let h = vec![CMatrix::from_element(1, 1, c(1.0))];
    let mut worst: f64 = 0.0;
    for snr in [0.0, 10.0, 20.0] {
        let p = snr_to_power(snr, 1.0);
        let out =
            optimize(&layout, &h, p, 1.0, &KktOptions::default()).map_err(|e| e.to_string())?;
        inv.record(&layout, &h, p, 1.0, &out);
        let gap = (out.rate - (1.0 + p).log2()).abs();
        if gap > 1e-3 {
            return Err(format!(
                "{snr} dB: rate {} vs capacity {}",
                out.rate,
                (1.0 + p).log2()
            ));
        }
        worst = worst.max(gap);
    }
    within(
        start.elapsed(),
        Duration::from_secs(5),
        format!("max gap {worst:.1e} bits"),
    )
}

// ---------------------------------------------------------------- criterion 4

fn criterion_4(inv: &mut Invariants) -> Outcome {
    let start = Instant::now();
    let layout = StreamLayout::new(&[0, 1], 1, 2);
    let power = snr_to_power(20.0, 1.0);
    let mut worst = f64::INFINITY;
    for r in 0..10 {
        let h = sample_channels(4, r, 2, 2, 2).matrices;
        let kkt = optimize(
            &layout,
            &h,
            power,
            1.0,
            &KktOptions {
                init_seed: r,
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())?;
        inv.record(&layout, &h, power, 1.0, &kkt);
        let oracle = maximize(
            &layout,
            &h,
            power,
            1.0,
            &OracleOptions {
                restarts: 200,
                seed: 1000 + r,
                ..Default::default()
            },
        );
        let achieved = transmission_rate(&layout, &kkt.state.w, &kkt.state.u, &h, 1.0);
        let ratio = achieved / oracle.rate;
        if ratio < 0.98 {
            return Err(format!(
                "channel {r}: kkt {achieved:.4} vs reference {:.4}",
                oracle.rate
            ));
        }
        worst = worst.min(ratio);
    }
    within(
        start.elapsed(),
        Duration::from_secs(600),
        format!("worst kkt/reference {:.4} over 10 channels", worst),
    )
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5(inv: &mut Invariants) -> Outcome {
    // extra runs on the scheme-ordering setup, every transmission, low to high SNR
    let cfg = NetworkConfig::with_gain(4, 3, 2, 1).map_err(|e| e.to_string())?;
    let plan = plan_transmissions(&cfg, 3, 2, 1).map_err(|e| e.to_string())?;
    for r in 0..2 {
        let all = sample_channels(21, r, 4, 2, 3);
        for tx in &plan.transmissions {
            let layout = StreamLayout::from_transmission(tx, plan.substreams);
            let h = all.select(&tx.users.to_vec());
            for snr in [0.0, 15.0, 30.0] {
                let p = snr_to_power(snr, 1.0);
                let out = optimize(&layout, &h, p, 1.0, &KktOptions::default())
                    .map_err(|e| e.to_string())?;
                inv.record(&layout, &h, p, 1.0, &out);
            }
        }
    }
    let detail = format!(
        "{} runs: power ratio {:.9}, normalization {:.1e}, residual {:.1e}, receiver drop {:.1e}",
        inv.runs, inv.power_ratio, inv.normalization, inv.residual, inv.receiver_drop
    );
    let ok = inv.power_ratio <= 1.0 + 1e-6
        && inv.normalization <= 1e-9
        && inv.residual <= 1e-8
        && inv.receiver_drop <= 1e-6;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_identity: f64 = 0.0;
    let mut worst_closed_form: f64 = 0.0;
    let mut worst_perturbation = f64::INFINITY;
    let mut worst_sinr_gain = f64::NEG_INFINITY;
    for inst in 0..100u64 {
        let t = rng.random_range(0..2usize);
        let omega = rng.random_range(t + 1..=t + 3);
        let q = rng.random_range(1..=2usize);
        let l = rng.random_range(1..=4usize);
        let g = rng.random_range(1..=3usize);
        let noise = rng.random_range(0.1..2.0);
        let users: Vec<usize> = (0..omega).collect();
        let layout = StreamLayout::new(&users, t, q);
        let s = layout.num_streams();
        let w = CMatrix::from_fn(l, s, |_, _| {
            complex_gaussian(&mut rng) * c(rng.random_range(0.2..3.0))
        });
        let h = sample_channels(600, inst, omega, g, l).matrices;
        let u = lmmse_receivers(&layout, &w, &h, noise).map_err(|e| e.to_string())?;
        for (link, ul) in layout.links.iter().zip(&u) {
            let hk = &h[link.user];
            let mse = |v: &CVector| -> f64 {
                let mut e = noise * v.norm_squared() + 1.0;
                for j in 0..s {
                    let gj = (v.adjoint() * hk * w.column(j))[0];
                    e += gj.norm_sqr();
                    if j == link.stream {
                        e -= 2.0 * gj.re;
                    }
                }
                e
            };
            let direct = hk * w.column(link.stream);
            let mut cov = CMatrix::identity(g, g) * c(noise);
            for j in 0..s {
                let hw = hk * w.column(j);
                cov += &hw * hw.adjoint();
            }
            let ustar = cov
                .clone()
                .lu()
                .solve(&direct)
                .ok_or("singular covariance")?;
            worst_closed_form =
                worst_closed_form.max((ul - &ustar).norm() / ustar.norm().max(1e-300));

            let sinr_of = |v: &CVector| -> f64 {
                let signal = (v.adjoint() * &direct)[0].norm_sqr();
                let interference: f64 = (0..s)
                    .filter(|&j| j != link.stream)
                    .map(|j| (v.adjoint() * hk * w.column(j))[0].norm_sqr())
                    .sum();
                signal / (interference + noise * v.norm_squared())
            };
            let sinr = sinr_of(ul);
            worst_identity = worst_identity.max((mse(ul) - 1.0 / (1.0 + sinr)).abs());

            let base = mse(ul);
            for scale in [1e-4, 1e-2, 1.0] {
                let d = CVector::from_fn(g, |_, _| complex_gaussian(&mut rng))
                    * c(scale * ul.norm().max(1e-3));
                worst_perturbation = worst_perturbation.min(mse(&(ul + d)) - base);
            }
            for _ in 0..100 {
                let d =
                    CVector::from_fn(g, |_, _| complex_gaussian(&mut rng)).normalize() * c(1e-3);
                worst_sinr_gain = worst_sinr_gain.max(sinr_of(&(ul + d)) - sinr);
            }
        }
    }
    let detail = format!(
        "identity err {worst_identity:.1e}, closed-form err {worst_closed_form:.1e}, min MSE increase {worst_perturbation:.1e}, max SINR gain {worst_sinr_gain:.1e}"
    );
    if worst_identity > 1e-9
        || worst_closed_form > 1e-9
        || worst_perturbation < -1e-12
        || worst_sinr_gain > 1e-12
    {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(60), detail)
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cfg = NetworkConfig::with_gain(4, 3, 2, 1).map_err(|e| e.to_string())?;
    let plan = plan_transmissions(&cfg, 3, 2, 1).map_err(|e| e.to_string())?;
    let opts = SweepOptions {
        snr_db: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        realizations: 50,
        seed: 7,
        ..Default::default()
    };
    let rep = monte_carlo_sweep(&cfg, &plan, &[Scheme::KktLmmse, Scheme::Zf], &opts)
        .map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for &snr in &opts.snr_db {
        let kkt = rep
            .point(Scheme::KktLmmse, snr)
            .ok_or("missing kkt point")?;
        let zf = rep.point(Scheme::Zf, snr).ok_or("missing zf point")?;
        if kkt.n_ok != 50 || zf.n_ok != 50 {
            return Err(format!(
                "{snr} dB: failed realizations ({}, {})",
                kkt.n_failed, zf.n_failed
            ));
        }
        lines.push(format!("{snr}dB {:.2}/{:.2}", kkt.mean_rsym, zf.mean_rsym));
        if kkt.mean_rsym < zf.mean_rsym {
            return Err(format!(
                "{snr} dB: kkt {:.3} < zf {:.3}",
                kkt.mean_rsym, zf.mean_rsym
            ));
        }
    }
    let k30 = rep.point(Scheme::KktLmmse, 30.0).unwrap().mean_rsym;
    let z30 = rep.point(Scheme::Zf, 30.0).unwrap().mean_rsym;
    if k30 < 1.05 * z30 {
        return Err(format!(
            "30 dB separation {:.1}% < 5%",
            100.0 * (k30 / z30 - 1.0)
        ));
    }
    within(
        start.elapsed(),
        Duration::from_secs(1200),
        format!(
            "kkt/zf {}; +{:.1}% at 30 dB",
            lines.join(", "),
            100.0 * (k30 / z30 - 1.0)
        ),
    )
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let cfg = NetworkConfig::with_gain(4, 2, 2, 1).map_err(|e| e.to_string())?;
    let snr = vec![20.0, 25.0, 30.0];
    let opts = SweepOptions {
        snr_db: snr.clone(),
        realizations: 50,
        seed: 8,
        ..Default::default()
    };
    let mut curves = Vec::new();
    for (beta, q) in [(1, 1), (2, 2)] {
        let plan = plan_transmissions(&cfg, 2, beta, q).map_err(|e| e.to_string())?;
        let rep = monte_carlo_sweep(&cfg, &plan, &[Scheme::KktLmmse], &opts)
            .map_err(|e| e.to_string())?;
        curves.push(rep.points.iter().map(|p| p.mean_rsym).collect::<Vec<f64>>());
    }
    let (one, two) = (&curves[0], &curves[1]);
    let ratio = slope_in_streams(&snr, two) / slope_in_streams(&snr, one);
    let detail = format!(
        "30 dB q=2 {:.2} vs q=1 {:.2}; slope ratio {ratio:.3}",
        two[2], one[2]
    );
    if two[2] <= one[2] || (ratio - 2.0).abs() > 0.3 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(1200), detail)
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let text = r#"
[network]
users = 3
tx_dims = 2
rx_dims = 1
library_size = 3
cache_size = 1
file_size_bits = 96

[sweep]
snr_db = [0.0, 10.0, 20.0]
realizations = 4
seed = 99
subsample = 2
schemes = ["kkt_lmmse", "zf"]
"#;
    let mut outputs = Vec::new();
    for threads in [1, 2, 1] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut cfg = RunConfig::from_toml(text).map_err(|e| e.to_string())?;
        cfg.output.dir = dir.path().to_path_buf();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| cmd_sweep(&cfg))
            .map_err(|e| e.to_string())?;
        let csv = std::fs::read(dir.path().join("sweep.csv")).map_err(|e| e.to_string())?;
        let dat = std::fs::read(dir.path().join("sweep.dat")).map_err(|e| e.to_string())?;
        outputs.push((csv, dat));
    }
    if outputs.windows(2).all(|p| p[0] == p[1]) {
        Ok(format!(
            "3 runs (1, 2, 1 workers) byte-identical, {} CSV bytes",
            outputs[0].0.len()
        ))
    } else {
        Err("CSV or plot data differ between runs".into())
    }
}

fn main() {
    let mut inv = Invariants::default();
    let results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3(&mut inv)),
        (4, criterion_4(&mut inv)),
        (5, criterion_5(&mut inv)),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
    ];
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(d) => println!("criterion {n}: PASS ({d})"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL ({d})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
