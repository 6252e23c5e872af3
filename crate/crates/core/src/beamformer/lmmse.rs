use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Complex;

use super::{CMatrix, CVector, StreamLayout};

/// LMMSE receive vectors `u = (H W Wᴴ Hᴴ + N0 I)⁻¹ H w_s`, one per link.
pub fn lmmse_receivers(
    layout: &StreamLayout,
    w: &CMatrix,
    channels: &[CMatrix],
    noise: f64,
) -> Result<Vec<CVector>> {
    if noise <= 0.0 {
        return Err(Error::Domain(format!(
            "noise variance {noise} must be positive"
        )));
    }
    let mut out = vec![CVector::zeros(0); layout.links.len()];
    for (a, links) in layout.user_links.iter().enumerate() {
        let h = &channels[a];
        let hw = h * w;
        let g = h.nrows();
        let cov = &hw * hw.adjoint() + DMatrix::<Complex>::identity(g, g) * Complex::from(noise);
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::solver("receive covariance not positive definite"))?;
        for &l in links {
            out[l] = chol.solve(&hw.column(layout.links[l].stream).into_owned());
        }
    }
    Ok(out)
}
