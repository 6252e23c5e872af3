//! Zero-forcing baseline.
//!
//! Receivers start as eigenmode matched filters: the `m`-th link of a user
//! takes the user's `m`-th left singular vector. Each stream is then steered
//! into the null space of the effective rows `uᴴ H_k` of every link of every
//! served user outside its group (users inside the group separate their
//! overlapping streams with their receive dimensions). Streams get equal
//! power and final receivers are LMMSE.

use nalgebra::SVD;

use crate::error::Result;
use crate::Complex;

use super::{lmmse_receivers, CMatrix, CVector, StreamLayout};

#[derive(Debug, Clone)]
pub struct ZfDesign {
    pub w: CMatrix,
    /// LMMSE receivers for `w`.
    pub u: Vec<CVector>,
    /// Receivers the nulling was computed against.
    pub nulling_receivers: Vec<CVector>,
    /// Streams that fell back to regularized inversion.
    pub fallback_streams: Vec<usize>,
    /// `max |uᴴ H w_s|² / P_T` over nulled (link, stream) pairs, with the
    /// nulling receivers.
    pub max_leakage: f64,
    pub nulled_pairs: usize,
}

impl ZfDesign {
    pub fn used_fallback(&self) -> bool {
        !self.fallback_streams.is_empty()
    }
}

/// Left singular vectors of `h`, ordered by decreasing singular value.
fn left_modes(h: &CMatrix) -> Vec<CVector> {
    let svd = SVD::new(h.clone(), true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order
        .into_iter()
        .map(|j| u.column(j).into_owned())
        .collect()
}

pub fn zf_beamformers(
    layout: &StreamLayout,
    channels: &[CMatrix],
    power: f64,
    noise: f64,
) -> Result<ZfDesign> {
    let tx_dims = channels[0].ncols();
    let streams = layout.num_streams();

    let mut receivers = vec![CVector::zeros(0); layout.links.len()];
    for (a, links) in layout.user_links.iter().enumerate() {
        let modes = left_modes(&channels[a]);
        for (m, &l) in links.iter().enumerate() {
            receivers[l] = modes[m % modes.len()].clone();
        }
    }
    // effective rows uᴴ H, stored as column vectors Hᴴ u
    let effective: Vec<CVector> = layout
        .links
        .iter()
        .zip(&receivers)
        .map(|(link, u)| channels[link.user].adjoint() * u)
        .collect();

    let mut w = CMatrix::zeros(tx_dims, streams);
    let mut fallback_streams = Vec::new();
    let mut nulled_pairs = 0;
    let ridge = noise * streams as f64 / power;
    for s in 0..streams {
        let group = layout.groups[s / layout.substreams];
        let mut target = CVector::zeros(tx_dims);
        let mut nulled = Vec::new();
        for (l, link) in layout.links.iter().enumerate() {
            if link.stream == s {
                target += &effective[l];
            } else if !group.contains(layout.users[link.user]) {
                nulled.push(l);
            }
        }
        nulled_pairs += nulled.len();

        let beam = if nulled.is_empty() {
            Some(target.clone())
        } else {
            let rows =
                CMatrix::from_fn(nulled.len(), tx_dims, |r, c| effective[nulled[r]][c].conj());
            let svd = SVD::new(rows.clone(), false, true);
            let v_t = svd.v_t.expect("requested Vᴴ");
            let smax = svd.singular_values.max();
            let tol = smax * 1e-10 * tx_dims as f64;
            let rank = svd.singular_values.iter().filter(|&&x| x > tol).count();
            let null_beam = if rank >= tx_dims {
                None
            } else {
                let mut proj = target.clone();
                for (j, &sv) in svd.singular_values.iter().enumerate() {
                    if sv > tol {
                        let vj: CVector = v_t.row(j).adjoint();
                        let coef = (vj.adjoint() * &target)[0];
                        proj -= vj * coef;
                    }
                }
                (proj.norm() > 1e-10 * target.norm().max(f64::MIN_POSITIVE)).then_some(proj)
            };
            match null_beam {
                Some(b) => Some(b),
                None => {
                    fallback_streams.push(s);
                    let gram = rows.adjoint() * &rows
                        + CMatrix::identity(tx_dims, tx_dims) * Complex::from(ridge);
                    gram.cholesky().map(|c| c.solve(&target))
                }
            }
        };
        let beam = beam.unwrap_or_else(|| target.clone());
        let n = beam.norm();
        if n > 0.0 {
            let scaled = beam * Complex::from((power / streams as f64).sqrt() / n);
            w.set_column(s, &scaled);
        }
    }

    let mut max_leakage: f64 = 0.0;
    for (l, link) in layout.links.iter().enumerate() {
        for s in 0..streams {
            let group = layout.groups[s / layout.substreams];
            if s != link.stream
                && !group.contains(layout.users[link.user])
                && !fallback_streams.contains(&s)
            {
                let g = (effective[l].adjoint() * w.column(s))[0];
                max_leakage = max_leakage.max(g.norm_sqr() / power);
            }
        }
    }

    let u = lmmse_receivers(layout, &w, channels, noise)?;
    Ok(ZfDesign {
        w,
        u,
        nulling_receivers: receivers,
        fallback_streams,
        max_leakage,
        nulled_pairs,
    })
}
