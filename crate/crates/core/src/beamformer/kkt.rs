//! Alternating LMMSE-receiver / Lagrangian transmit-beamformer solver.
//!
//! Outer loop: LMMSE receivers for the current transmit vectors and a new SCA
//! point `t̄ = log2(1/ε)` per link. Inner loop, receivers fixed: closed-form
//! transmit update for the MSE duals `λ` and power dual `μ`, quadratic-form
//! MSEs, per-user rates, a step on the rate duals, and
//! `λ = Ω ζ_k v / (ε ln 2)`.
//!
//! [`DualUpdate::Mirror`] keeps the SCA point fixed over the inner loop, so the
//! inner loop is dual descent on one convex subproblem: exponentiated steps on
//! the user weights `ζ` and on `v` (normalized over each user's groups per
//! substream), driven by the linearized rates `(ζ̄ - ε) / ᾱ`, with the
//! transmit vectors averaged over the inner iterations.
//! [`DualUpdate::Subgradient`] is the plain projected subgradient on `v` with
//! `ε` and `t̄` refreshed at every inner iteration and uniform `ζ`.

use std::f64::consts::LN_2;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::Complex;

use super::metrics::{min_user_rate, mses, objective_from_sinr, sinrs};
use super::sca::{sca_coefficients, ScaCoefficients};
use super::{lmmse_receivers, total_power, CMatrix, CVector, StreamLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuMode {
    /// `μ = (N0 / P_T) Σ λ ‖u‖²`, refined by bisection only if the budget is exceeded.
    ClosedForm,
    /// Bisection on `μ` until the budget is met with equality.
    Bisection,
}

/// Reference rate in the subgradient `v ← v + η (reference + log2 ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualGradient {
    /// Common rate `r_c`.
    CommonRate,
    /// Per-user substream rate `r_k^i`.
    UserRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualUpdate {
    /// Exponentiated dual descent at a fixed SCA point with averaged primal iterates.
    Mirror,
    /// Projected subgradient on `v`, per-user normalization, uniform `ζ`.
    Subgradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KktOptions {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Independent random starts; the best is returned.
    pub restarts: usize,
    /// Dual step `η`. `None` means 2 for the mirror update (divided by the
    /// mean user rate and `sqrt(n + 1)` at inner iteration `n`) and `0.1 q`
    /// for the subgradient update.
    pub step_size: Option<f64>,
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub mu_mode: MuMode,
    pub dual_update: DualUpdate,
    /// Used by the subgradient update only.
    pub gradient: DualGradient,
    /// With `q > 1`, one extra start with power on substream 0 of every group
    /// only. Random starts rarely find optima that leave substreams unused.
    pub single_substream_start: bool,
    /// Seed of the random initial transmit vectors.
    pub init_seed: u64,
    pub record_trace: bool,
}

impl Default for KktOptions {
    fn default() -> Self {
        KktOptions {
            outer_iterations: 500,
            inner_iterations: 10,
            restarts: 4,
            step_size: None,
            tol_inner: 1e-9,
            tol_outer: 1e-7,
            mu_mode: MuMode::Bisection,
            dual_update: DualUpdate::Mirror,
            gradient: DualGradient::CommonRate,
            single_substream_start: true,
            init_seed: 0,
            record_trace: false,
        }
    }
}

impl KktOptions {
    /// Plain subgradient settings: common-rate gradient, closed-form `μ`,
    /// 30 outer and 20 inner iterations, one start.
    pub fn subgradient() -> Self {
        KktOptions {
            outer_iterations: 30,
            inner_iterations: 20,
            restarts: 1,
            tol_inner: 1e-4,
            tol_outer: 1e-4,
            mu_mode: MuMode::ClosedForm,
            dual_update: DualUpdate::Subgradient,
            gradient: DualGradient::CommonRate,
            single_substream_start: false,
            ..Self::default()
        }
    }

    pub fn step(&self, substreams: usize) -> f64 {
        self.step_size.unwrap_or(match self.dual_update {
            DualUpdate::Mirror => 2.0,
            DualUpdate::Subgradient => 0.1 * substreams as f64,
        })
    }
}

/// Primal and dual iterates. Per-link vectors follow `StreamLayout::links`.
#[derive(Debug, Clone)]
pub struct BeamformerState {
    pub w: CMatrix,
    pub u: Vec<CVector>,
    pub lambda: Vec<f64>,
    pub v: Vec<f64>,
    pub mu: f64,
    /// `ζ_k`, summing to one.
    pub user_weights: Vec<f64>,
    /// SCA points `t̄ = log2(1/ε)` in bits.
    pub sca_points: Vec<f64>,
    pub mse: Vec<f64>,
    /// `r_k^i`, indexed `[user][substream]`.
    pub rates: Vec<Vec<f64>>,
    pub common_rate: f64,
}

impl BeamformerState {
    /// `λ`, `ζ` at `1/Ω`; `v` uniform over each user's groups of a substream
    /// (so `(1/q) Σ v = 1`); receivers and rates empty.
    pub fn new(layout: &StreamLayout, w: CMatrix) -> Self {
        let n = layout.links.len();
        let k = layout.num_users();
        let init = 1.0 / k as f64;
        let mut v = vec![0.0; n];
        for block in substream_blocks(layout) {
            for &l in &block.1 {
                v[l] = 1.0 / block.1.len() as f64;
            }
        }
        BeamformerState {
            w,
            u: Vec::new(),
            lambda: vec![init; n],
            v,
            mu: 0.0,
            user_weights: vec![init; k],
            sca_points: vec![0.0; n],
            mse: vec![1.0; n],
            rates: vec![vec![0.0; layout.substreams]; k],
            common_rate: 0.0,
        }
    }
}

/// `(user, links of that user on one substream)` for every user and substream.
fn substream_blocks(layout: &StreamLayout) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::with_capacity(layout.num_users() * layout.substreams);
    for (a, links) in layout.user_links.iter().enumerate() {
        for i in 0..layout.substreams {
            let block = links
                .iter()
                .copied()
                .filter(|&l| layout.links[l].sub == i)
                .collect();
            out.push((a, block));
        }
    }
    out
}

/// One inner iteration of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub start: usize,
    pub outer: usize,
    pub inner: usize,
    /// `min_k Σ_i min_T` of the per-link rates driving the duals.
    pub objective: f64,
    pub power: f64,
    pub mu: f64,
    /// Relative residual of the transmit stationarity condition.
    pub residual: f64,
    pub common_rate: f64,
}

/// Worst-case invariant checks gathered over a solver run (all starts).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    /// `max Σ‖w‖² / P_T` over all transmit iterates, averaged ones included.
    pub max_power_ratio: f64,
    pub max_residual: f64,
    /// `max |(1/q) Σ v - 1|` over users and inner iterations.
    pub max_normalization_error: f64,
    /// `max |ζ̄ - ᾱ t̄ - 2^{-t̄}|`.
    pub max_tangency_error: f64,
    /// Largest objective decrease caused by a receiver update (should be ≤ 0).
    pub max_receiver_drop: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Objective after each receiver update, for the returned start.
    pub outer_objectives: Vec<f64>,
}

impl SolverDiagnostics {
    fn absorb(&mut self, other: &SolverDiagnostics) {
        self.max_power_ratio = self.max_power_ratio.max(other.max_power_ratio);
        self.max_residual = self.max_residual.max(other.max_residual);
        self.max_normalization_error = self
            .max_normalization_error
            .max(other.max_normalization_error);
        self.max_tangency_error = self.max_tangency_error.max(other.max_tangency_error);
        self.max_receiver_drop = self.max_receiver_drop.max(other.max_receiver_drop);
        self.outer_iterations += other.outer_iterations;
        self.inner_iterations += other.inner_iterations;
    }
}

#[derive(Debug, Clone)]
pub struct KktOutcome {
    pub state: BeamformerState,
    /// `R_i` of the returned beamformers.
    pub rate: f64,
    pub trace: Vec<TraceRecord>,
    pub diagnostics: SolverDiagnostics,
}

/// Normal equations of the transmit update for fixed receivers and `λ`:
/// `(Σ λ Hᴴu uᴴH + μ I) w_s = Σ_{k ∈ T} λ Hᴴ u`.
struct TxSystem {
    gram: CMatrix,
    rhs: CMatrix,
}

impl TxSystem {
    fn new(layout: &StreamLayout, u: &[CVector], lambda: &[f64], channels: &[CMatrix]) -> Self {
        let l_dim = channels[0].ncols();
        let mut gram = CMatrix::zeros(l_dim, l_dim);
        let mut rhs = CMatrix::zeros(l_dim, layout.num_streams());
        for ((link, ul), &lam) in layout.links.iter().zip(u).zip(lambda) {
            let hu = channels[link.user].adjoint() * ul;
            gram += (&hu * hu.adjoint()) * Complex::from(lam);
            let mut col = rhs.column_mut(link.stream);
            col += &hu * Complex::from(lam);
        }
        TxSystem { gram, rhs }
    }

    fn solve(&self, mu: f64) -> Result<(CMatrix, f64)> {
        if self.rhs.iter().all(|z| *z == Complex::from(0.0)) {
            return Ok((CMatrix::zeros(self.rhs.nrows(), self.rhs.ncols()), 0.0));
        }
        let n = self.gram.nrows();
        let a = &self.gram + CMatrix::identity(n, n) * Complex::from(mu);
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::solver(format!("transmit system singular at μ = {mu:e}")))?;
        let w = chol.solve(&self.rhs);
        let residual = (&a * &w - &self.rhs).norm() / self.rhs.norm();
        Ok((w, residual))
    }

    /// Transmit power at `μ`; an ill-conditioned solve counts as infinite power.
    fn power(&self, mu: f64) -> Result<f64> {
        let p = total_power(&self.solve(mu)?.0);
        Ok(if p.is_finite() { p } else { f64::INFINITY })
    }

    fn closed_form_mu(u: &[CVector], lambda: &[f64], power: f64, noise: f64) -> f64 {
        noise / power
            * u.iter()
                .zip(lambda)
                .map(|(ul, &l)| l * ul.norm_squared())
                .sum::<f64>()
    }

    /// Smallest `μ` (to relative 1e-6 in power) with `Σ‖w(μ)‖² ≤ P_T`.
    fn bisect_mu(&self, power: f64, start: f64) -> Result<f64> {
        let lo_power = self.power(MU_FLOOR).unwrap_or(f64::INFINITY);
        if lo_power <= power {
            return Ok(MU_FLOOR);
        }
        let mut lo = MU_FLOOR;
        let mut hi = start.max(1e-6);
        let mut doublings = 0;
        while self.power(hi)? > power {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 || !hi.is_finite() {
                return Err(Error::solver(format!(
                    "μ bracket failed: power {:e} still above {power:e} at μ = {hi:e}",
                    self.power(hi)?
                )));
            }
        }
        for _ in 0..300 {
            let p_hi = self.power(hi)?;
            if (power - p_hi) / power <= 1e-6 {
                break;
            }
            let mid = if hi / lo > 4.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if self.power(mid)? > power {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// Smallest power dual the bisection returns; a slack budget yields exactly
/// this value.
pub const MU_FLOOR: f64 = 1e-12;

/// Closed-form transmit update; returns the beamformers and the relative
/// stationarity residual of the solve.
pub fn update_tx_beamformers(
    layout: &StreamLayout,
    u: &[CVector],
    lambda: &[f64],
    mu: f64,
    channels: &[CMatrix],
) -> Result<(CMatrix, f64)> {
    TxSystem::new(layout, u, lambda, channels).solve(mu)
}

/// Power dual for the current `λ` and receivers.
pub fn update_mu(
    layout: &StreamLayout,
    lambda: &[f64],
    u: &[CVector],
    channels: &[CMatrix],
    power: f64,
    noise: f64,
    mode: MuMode,
) -> Result<f64> {
    let sys = TxSystem::new(layout, u, lambda, channels);
    mu_for(&sys, u, lambda, power, noise, mode)
}

fn mu_for(
    sys: &TxSystem,
    u: &[CVector],
    lambda: &[f64],
    power: f64,
    noise: f64,
    mode: MuMode,
) -> Result<f64> {
    let closed = TxSystem::closed_form_mu(u, lambda, power, noise);
    match mode {
        MuMode::Bisection => sys.bisect_mu(power, closed),
        MuMode::ClosedForm => {
            let feasible = closed > 0.0
                && sys
                    .power(closed)
                    .map(|p| p <= power * (1.0 + 1e-7))
                    .unwrap_or(false);
            if feasible {
                Ok(closed)
            } else {
                sys.bisect_mu(power, closed)
            }
        }
    }
}

/// `v`-weighted mean over each user's groups of per-link rates, and
/// `r_c = Σ_k ζ_k Σ_i r_k^i`.
fn weighted_rates(
    layout: &StreamLayout,
    v: &[f64],
    link_rates: &[f64],
    user_weights: &[f64],
) -> (Vec<Vec<f64>>, f64) {
    let mut rates = vec![vec![0.0; layout.substreams]; layout.num_users()];
    for (a, links) in layout.user_links.iter().enumerate() {
        for (i, rate) in rates[a].iter_mut().enumerate() {
            let sub: Vec<usize> = links
                .iter()
                .copied()
                .filter(|&l| layout.links[l].sub == i)
                .collect();
            let den: f64 = sub.iter().map(|&l| v[l]).sum();
            let (num, den) = if den > 0.0 {
                (sub.iter().map(|&l| v[l] * link_rates[l]).sum::<f64>(), den)
            } else {
                warn!("rate duals of user {a}, substream {i} vanished; using uniform weights");
                (
                    sub.iter().map(|&l| link_rates[l]).sum::<f64>(),
                    sub.len() as f64,
                )
            };
            *rate = num / den;
        }
    }
    let common = rates
        .iter()
        .zip(user_weights)
        .map(|(r, &z)| z * r.iter().sum::<f64>())
        .sum();
    (rates, common)
}

/// Per-user substream rates `r_k^i` (v-weighted mean of `log2(1/ε)` over the
/// user's groups) and the common rate `r_c = Σ_k ζ_k Σ_i r_k^i`.
pub fn update_rates(
    layout: &StreamLayout,
    v: &[f64],
    mse: &[f64],
    user_weights: &[f64],
) -> (Vec<Vec<f64>>, f64) {
    let link_rates: Vec<f64> = mse.iter().map(|e| -e.log2()).collect();
    weighted_rates(layout, v, &link_rates, user_weights)
}

/// Subgradient step on `v`, per-user normalization `(1/q) Σ_{T,i} v = 1`,
/// then `λ = Ω ζ_k v / (ε ln 2)`.
pub fn update_duals(
    layout: &StreamLayout,
    state: &BeamformerState,
    step: f64,
    gradient: DualGradient,
) -> (Vec<f64>, Vec<f64>) {
    let q = layout.substreams as f64;
    let mut v: Vec<f64> = layout
        .links
        .iter()
        .enumerate()
        .map(|(l, link)| {
            let reference = match gradient {
                DualGradient::CommonRate => state.common_rate,
                DualGradient::UserRate => state.rates[link.user][link.sub],
            };
            (state.v[l] + step * (reference + state.mse[l].log2())).max(0.0)
        })
        .collect();
    for (a, links) in layout.user_links.iter().enumerate() {
        let total: f64 = links.iter().map(|&l| v[l]).sum();
        if total > 0.0 && total.is_finite() {
            for &l in links {
                v[l] *= q / total;
            }
        } else {
            warn!("all rate duals of user {a} vanished; resetting to uniform");
            for &l in links {
                v[l] = q / links.len() as f64;
            }
        }
    }
    let lambda = lambda_from(layout, &v, &state.mse, &state.user_weights);
    (v, lambda)
}

/// `λ = Ω ζ_k v / (ε ln 2)`.
fn lambda_from(layout: &StreamLayout, v: &[f64], mse: &[f64], user_weights: &[f64]) -> Vec<f64> {
    let users = layout.num_users() as f64;
    layout
        .links
        .iter()
        .enumerate()
        .map(|(l, link)| users * user_weights[link.user] * v[l] / (mse[l] * LN_2))
        .collect()
}

/// `x_j ← x_j exp(-step g_j)`, renormalized to sum `total`. Computed in the
/// log domain; entries are kept above `1e-12 · total` so no weight is lost for good.
fn exponentiated_step(x: &mut [f64], g: &[f64], step: f64, total: f64) {
    let logs: Vec<f64> = x
        .iter()
        .zip(g)
        .map(|(xj, gj)| {
            let d = step * gj;
            xj.max(f64::MIN_POSITIVE).ln() - if d.is_finite() { d } else { 0.0 }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (xj, lj) in x.iter_mut().zip(&logs) {
        *xj = (lj - top).exp().max(1e-12);
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|xj| *xj *= total / s);
}

/// Mirror-descent step on `ζ` (driven by user rates) and on `v` within each
/// user's groups of a substream (driven by linearized link rates).
fn mirror_step(layout: &StreamLayout, state: &mut BeamformerState, link_rates: &[f64], step: f64) {
    let totals: Vec<f64> = state.rates.iter().map(|r| r.iter().sum()).collect();
    for (_, block) in substream_blocks(layout) {
        let mut v: Vec<f64> = block.iter().map(|&l| state.v[l]).collect();
        let g: Vec<f64> = block.iter().map(|&l| link_rates[l]).collect();
        exponentiated_step(&mut v, &g, step, 1.0);
        for (&l, x) in block.iter().zip(v) {
            state.v[l] = x;
        }
    }
    exponentiated_step(&mut state.user_weights, &totals, step, 1.0);
}

/// Seeded complex Gaussian transmit vectors scaled to total power `power`.
pub(crate) fn random_beamformers(
    tx_dims: usize,
    streams: usize,
    power: f64,
    seed: u64,
    salt: u64,
) -> CMatrix {
    let mut rng = substream(seed, Stream::Init, salt, 0);
    let w = DMatrix::from_fn(tx_dims, streams, |_, _| complex_gaussian(&mut rng));
    let p = total_power(&w);
    w * Complex::from((power / p).sqrt())
}

fn solver_error(message: String, trace: &[TraceRecord]) -> Error {
    Error::Solver {
        message,
        trace: trace.to_vec(),
    }
}

/// Optimize one transmission from `restarts` seeded random starts (plus the
/// single-substream start, if enabled) and return the best. Each start returns the best iterate seen at an outer boundary
/// (receivers LMMSE-matched to the transmit vectors).
pub fn optimize(
    layout: &StreamLayout,
    channels: &[CMatrix],
    power: f64,
    noise: f64,
    options: &KktOptions,
) -> Result<KktOutcome> {
    if channels.len() != layout.num_users() {
        return Err(Error::Input(format!(
            "{} channel matrices for {} users",
            channels.len(),
            layout.num_users()
        )));
    }
    if !(power > 0.0) {
        return Err(Error::Domain(format!(
            "power budget {power} must be positive"
        )));
    }
    let tx_dims = channels[0].ncols();
    let mut best: Option<KktOutcome> = None;
    let mut diag = SolverDiagnostics::default();
    let mut trace = Vec::new();
    let random = options.restarts.max(1);
    let extra = usize::from(options.single_substream_start && layout.substreams > 1);
    for start in 0..random + extra {
        let mut w0 = random_beamformers(
            tx_dims,
            layout.num_streams(),
            power,
            options.init_seed,
            start as u64,
        );
        if start == random {
            // only substream 0 of each group carries power
            for s in 0..layout.num_streams() {
                if s % layout.substreams != 0 {
                    w0.column_mut(s).fill(Complex::from(0.0));
                }
            }
            w0 *= Complex::from((power / total_power(&w0)).sqrt());
        }
        let out = run(layout, channels, power, noise, options, w0, start)?;
        diag.absorb(&out.diagnostics);
        trace.extend(out.trace.iter().cloned());
        if best.as_ref().is_none_or(|b| out.rate > b.rate) {
            best = Some(out);
        }
    }
    let mut best = best.expect("at least one start");
    diag.outer_objectives = std::mem::take(&mut best.diagnostics.outer_objectives);
    best.diagnostics = diag;
    best.trace = trace;
    Ok(best)
}

/// Single start of the solver from explicit initial transmit vectors.
pub fn optimize_from(
    layout: &StreamLayout,
    channels: &[CMatrix],
    power: f64,
    noise: f64,
    options: &KktOptions,
    w0: CMatrix,
) -> Result<KktOutcome> {
    run(layout, channels, power, noise, options, w0, 0)
}

fn run(
    layout: &StreamLayout,
    channels: &[CMatrix],
    power: f64,
    noise: f64,
    options: &KktOptions,
    w0: CMatrix,
    start: usize,
) -> Result<KktOutcome> {
    let step = options.step(layout.substreams);
    let q = layout.substreams as f64;
    let mut state = BeamformerState::new(layout, w0);
    let mut trace = Vec::new();
    let mut diag = SolverDiagnostics::default();
    let mut best: Option<(f64, CMatrix, Vec<CVector>)> = None;
    let mut prev_outer = f64::NEG_INFINITY;
    let mut pending_check: Option<f64> = None;

    for outer in 0..=options.outer_iterations {
        state.u = lmmse_receivers(layout, &state.w, channels, noise)?;
        let sinr = sinrs(layout, &state.w, &state.u, channels, noise);
        let objective = objective_from_sinr(layout, &sinr);
        if !objective.is_finite() {
            return Err(solver_error(
                format!("non-finite objective at outer {outer}"),
                &trace,
            ));
        }
        if let Some(before) = pending_check.take() {
            diag.max_receiver_drop = diag.max_receiver_drop.max(before - objective);
        }
        diag.outer_objectives.push(objective);
        if best.as_ref().is_none_or(|(b, _, _)| objective > *b) {
            best = Some((objective, state.w.clone(), state.u.clone()));
        }
        if outer == options.outer_iterations
            || (objective > 0.0 && (objective - prev_outer).abs() < options.tol_outer)
        {
            break;
        }
        prev_outer = objective;
        diag.outer_iterations += 1;

        // SCA point and MSE at the LMMSE receivers: ε = 1/(1 + γ)
        let eps_bar: Vec<f64> = sinr.iter().map(|g| 1.0 / (1.0 + g)).collect();
        let t_bar: Vec<f64> = eps_bar.iter().map(|e| -e.log2()).collect();
        let coefs: Vec<ScaCoefficients> = t_bar.iter().map(|&t| sca_coefficients(t)).collect();
        for (c, &t) in coefs.iter().zip(&t_bar) {
            diag.max_tangency_error = diag
                .max_tangency_error
                .max((c.bound(t) - (-t).exp2()).abs());
        }
        let mirror = options.dual_update == DualUpdate::Mirror;
        if mirror {
            state.mse = eps_bar.clone();
            state.sca_points = t_bar.clone();
            state.lambda = lambda_from(layout, &state.v, &eps_bar, &state.user_weights);
        }
        // mirror steps are scale-free in the rate
        let rate_scale = {
            let users: Vec<f64> = (0..layout.num_users())
                .map(|a| user_total(layout, a, &t_bar))
                .collect();
            (users.iter().sum::<f64>() / users.len() as f64).max(1e-3)
        };
        let mut w_avg = CMatrix::zeros(state.w.nrows(), state.w.ncols());
        let mut avg_weight = 0.0;

        let mut prev_inner = f64::NEG_INFINITY;
        for inner in 0..options.inner_iterations {
            let sys = TxSystem::new(layout, &state.u, &state.lambda, channels);
            state.mu = mu_for(&sys, &state.u, &state.lambda, power, noise, options.mu_mode)
                .map_err(|e| solver_error(e.to_string(), &trace))?;
            let (w, residual) = sys
                .solve(state.mu)
                .map_err(|e| solver_error(e.to_string(), &trace))?;
            if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(solver_error(
                    format!("NaN in transmit vectors at {outer}/{inner}"),
                    &trace,
                ));
            }
            let p = total_power(&w);
            diag.max_power_ratio = diag.max_power_ratio.max(p / power);
            diag.max_residual = diag.max_residual.max(residual);

            // quadratic-form ε with this outer iteration's receivers
            let eps = mses(layout, &w, &state.u, channels, noise);
            let link_rates: Vec<f64> = if mirror {
                let eta = step / (rate_scale * ((inner + 1) as f64).sqrt());
                w_avg += &w * Complex::from(eta);
                avg_weight += eta;
                let t_hat: Vec<f64> = eps
                    .iter()
                    .zip(&coefs)
                    .map(|(e, c)| (c.zeta - e) / c.alpha)
                    .collect();
                let (rates, common) = weighted_rates(layout, &state.v, &t_hat, &state.user_weights);
                state.rates = rates;
                state.common_rate = common;
                mirror_step(layout, &mut state, &t_hat, eta);
                state.lambda = lambda_from(layout, &state.v, &eps_bar, &state.user_weights);
                t_hat
            } else {
                state.mse = eps
                    .into_iter()
                    .map(|e| e.clamp(f64::MIN_POSITIVE, 1.0))
                    .collect();
                state.sca_points = state.mse.iter().map(|e| -e.log2()).collect();
                let (rates, common) =
                    update_rates(layout, &state.v, &state.mse, &state.user_weights);
                state.rates = rates;
                state.common_rate = common;
                let (v, lambda) = update_duals(layout, &state, step, options.gradient);
                state.v = v;
                state.lambda = lambda;
                state.sca_points.clone()
            };
            state.w = w;
            for links in &layout.user_links {
                let s: f64 = links.iter().map(|&l| state.v[l]).sum::<f64>() / q;
                diag.max_normalization_error = diag.max_normalization_error.max((s - 1.0).abs());
            }
            diag.inner_iterations += 1;

            let inner_objective = min_user_rate(layout, &link_rates);
            if options.record_trace {
                trace.push(TraceRecord {
                    start,
                    outer,
                    inner,
                    objective: inner_objective,
                    power: p,
                    mu: state.mu,
                    residual,
                    common_rate: state.common_rate,
                });
            }
            if (inner_objective - prev_inner).abs() < options.tol_inner {
                break;
            }
            prev_inner = inner_objective;
        }
        if mirror && avg_weight > 0.0 {
            state.w = w_avg * Complex::from(1.0 / avg_weight);
            diag.max_power_ratio = diag.max_power_ratio.max(total_power(&state.w) / power);
        }
        // objective of the new transmit vectors under the old receivers
        pending_check = Some(objective_from_sinr(
            layout,
            &sinrs(layout, &state.w, &state.u, channels, noise),
        ));
    }

    let (rate, w, u) = best.expect("at least one outer evaluation");
    state.w = w;
    state.u = u;
    Ok(KktOutcome {
        state,
        rate,
        trace,
        diagnostics: diag,
    })
}

/// `Σ_i min_{T ∋ a} x` for local user `a`.
fn user_total(layout: &StreamLayout, a: usize, x: &[f64]) -> f64 {
    (0..layout.substreams)
        .map(|i| {
            layout.user_links[a]
                .iter()
                .filter(|&&l| layout.links[l].sub == i)
                .map(|&l| x[l])
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}
