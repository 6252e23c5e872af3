//! SINR, MSE and rate evaluation for fixed transmit and receive vectors.

use crate::Complex;

use super::{CMatrix, CVector, Link, StreamLayout};

/// `uᴴ H w_j` for every stream `j`.
pub fn link_gains(u: &CVector, h: &CMatrix, w: &CMatrix) -> Vec<Complex> {
    let row = u.adjoint() * h;
    (0..w.ncols()).map(|j| (&row * w.column(j))[0]).collect()
}

/// SINR of one link; interference counts every other stream of the transmission.
pub fn link_sinr(link: &Link, u: &CVector, h: &CMatrix, w: &CMatrix, noise: f64) -> f64 {
    let gains = link_gains(u, h, w);
    let signal = gains[link.stream].norm_sqr();
    if signal == 0.0 {
        return 0.0;
    }
    let interference: f64 = gains
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != link.stream)
        .map(|(_, g)| g.norm_sqr())
        .sum();
    signal / (interference + noise * u.norm_squared())
}

/// MSE quadratic form `|1 - uᴴHw_s|² + Σ_{j≠s} |uᴴHw_j|² + N0‖u‖²`.
pub fn link_mse(link: &Link, u: &CVector, h: &CMatrix, w: &CMatrix, noise: f64) -> f64 {
    let gains = link_gains(u, h, w);
    let mut e = noise * u.norm_squared();
    for (j, g) in gains.iter().enumerate() {
        e += if j == link.stream {
            (Complex::from(1.0) - g).norm_sqr()
        } else {
            g.norm_sqr()
        };
    }
    e
}

pub fn sinrs(
    layout: &StreamLayout,
    w: &CMatrix,
    u: &[CVector],
    channels: &[CMatrix],
    noise: f64,
) -> Vec<f64> {
    layout
        .links
        .iter()
        .zip(u)
        .map(|(l, ul)| link_sinr(l, ul, &channels[l.user], w, noise))
        .collect()
}

pub fn mses(
    layout: &StreamLayout,
    w: &CMatrix,
    u: &[CVector],
    channels: &[CMatrix],
    noise: f64,
) -> Vec<f64> {
    layout
        .links
        .iter()
        .zip(u)
        .map(|(l, ul)| link_mse(l, ul, &channels[l.user], w, noise))
        .collect()
}

/// `min_k Σ_i min_{T ∋ k} rate(k, T, i)` given a per-link rate in bits.
pub(crate) fn min_user_rate(layout: &StreamLayout, link_rate: &[f64]) -> f64 {
    layout
        .user_links
        .iter()
        .map(|links| {
            (0..layout.substreams)
                .map(|i| {
                    links
                        .iter()
                        .filter(|&&l| layout.links[l].sub == i)
                        .map(|&l| link_rate[l])
                        .fold(f64::INFINITY, f64::min)
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Multicast rate objective `min_k Σ_i min_T log2(1 + γ)` from per-link SINRs.
pub fn objective_from_sinr(layout: &StreamLayout, sinr: &[f64]) -> f64 {
    let rates: Vec<f64> = sinr.iter().map(|g| (1.0 + g).log2()).collect();
    min_user_rate(layout, &rates)
}

/// Rate `R_i` of a transmission, recomputed from its beamformers.
pub fn transmission_rate(
    layout: &StreamLayout,
    w: &CMatrix,
    u: &[CVector],
    channels: &[CMatrix],
    noise: f64,
) -> f64 {
    objective_from_sinr(layout, &sinrs(layout, w, u, channels, noise))
}
