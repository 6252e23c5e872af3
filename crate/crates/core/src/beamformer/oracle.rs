//! Brute-force reference maximizer of the multicast rate objective for small
//! instances.
//!
//! Kept deliberately separate from the LMMSE/KKT code path: SINRs use the
//! closed-form MMSE expression `γ = w_sᴴHᴴ(Σ_{j≠s} H w_j w_jᴴ Hᴴ + N0 I)⁻¹ H w_s`
//! (LU solves), the objective is maximized directly over the transmit
//! vectors by projected gradient ascent on a soft-min smoothing with
//! finite-difference gradients, from many random starts on the power sphere.

use nalgebra::DMatrix;

use crate::channel::complex_gaussian;
use crate::rng::{substream, Stream};
use crate::Complex;

use super::{CMatrix, StreamLayout};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Soft-min sharpness schedule (one stage per entry).
    pub sharpness: Vec<f64>,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            restarts: 200,
            iterations: 120,
            sharpness: vec![4.0, 32.0, 256.0],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub w: CMatrix,
    pub rate: f64,
}

struct Problem<'a> {
    layout: &'a StreamLayout,
    channels: &'a [CMatrix],
    noise: f64,
    power: f64,
}

impl Problem<'_> {
    /// Per-(user, substream, group) rates in bits, flattened in layout link order.
    fn link_rates(&self, w: &CMatrix) -> Vec<f64> {
        let g_dim = self.channels[0].nrows();
        let mut out = Vec::with_capacity(self.layout.links.len());
        let mut cache: Option<(usize, CMatrix)> = None;
        for link in &self.layout.links {
            if cache.as_ref().is_none_or(|(a, _)| *a != link.user) {
                cache = Some((link.user, &self.channels[link.user] * w));
            }
            let hw = &cache.as_ref().unwrap().1;
            let mut r = DMatrix::<Complex>::identity(g_dim, g_dim) * Complex::from(self.noise);
            for j in 0..hw.ncols() {
                if j != link.stream {
                    let c = hw.column(j);
                    r += c * c.adjoint();
                }
            }
            let hs = hw.column(link.stream).into_owned();
            let gamma = match r.lu().solve(&hs) {
                Some(x) => (hs.adjoint() * x)[0].re.max(0.0),
                None => 0.0,
            };
            out.push((1.0 + gamma).log2());
        }
        out
    }

    fn aggregate(&self, rates: &[f64], mut min: impl FnMut(&[f64]) -> f64) -> f64 {
        let layout = self.layout;
        let per_user: Vec<f64> = layout
            .user_links
            .iter()
            .map(|links| {
                (0..layout.substreams)
                    .map(|i| {
                        let xs: Vec<f64> = links
                            .iter()
                            .filter(|&&l| layout.links[l].sub == i)
                            .map(|&l| rates[l])
                            .collect();
                        min(&xs)
                    })
                    .sum()
            })
            .collect();
        min(&per_user)
    }

    fn exact(&self, w: &CMatrix) -> f64 {
        self.aggregate(&self.link_rates(w), |xs| {
            xs.iter().copied().fold(f64::INFINITY, f64::min)
        })
    }

    fn smooth(&self, w: &CMatrix, kappa: f64) -> f64 {
        self.aggregate(&self.link_rates(w), |xs| soft_min(xs, kappa))
    }

    fn project(&self, w: &mut CMatrix) {
        let p: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        if p > 0.0 {
            *w *= Complex::from((self.power / p).sqrt());
        }
    }

    fn gradient(&self, w: &CMatrix, kappa: f64) -> CMatrix {
        let h = 1e-6 * (self.power / w.len() as f64).sqrt();
        let mut g = CMatrix::zeros(w.nrows(), w.ncols());
        let mut probe = w.clone();
        for idx in 0..w.len() {
            for (part, unit) in [(0, Complex::new(1.0, 0.0)), (1, Complex::new(0.0, 1.0))] {
                let orig = probe[idx];
                probe[idx] = orig + unit * h;
                let up = self.smooth(&probe, kappa);
                probe[idx] = orig - unit * h;
                let down = self.smooth(&probe, kappa);
                probe[idx] = orig;
                let d = (up - down) / (2.0 * h);
                if part == 0 {
                    g[idx].re = d;
                } else {
                    g[idx].im = d;
                }
            }
        }
        g
    }
}

fn soft_min(xs: &[f64], kappa: f64) -> f64 {
    let m = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = xs.iter().map(|x| (-kappa * (x - m)).exp()).sum();
    m - s.ln() / kappa
}

/// Best objective over `options.restarts` projected-gradient runs.
pub fn maximize(
    layout: &StreamLayout,
    channels: &[CMatrix],
    power: f64,
    noise: f64,
    options: &OracleOptions,
) -> OracleResult {
    let prob = Problem {
        layout,
        channels,
        noise,
        power,
    };
    let tx_dims = channels[0].ncols();
    let streams = layout.num_streams();
    let mut best = OracleResult {
        w: CMatrix::zeros(tx_dims, streams),
        rate: f64::NEG_INFINITY,
    };
    for restart in 0..options.restarts {
        let mut rng = substream(options.seed, Stream::Oracle, restart as u64, 0);
        let mut w = DMatrix::from_fn(tx_dims, streams, |_, _| complex_gaussian(&mut rng));
        prob.project(&mut w);
        let mut step = 0.1 * power.sqrt();
        for &kappa in &options.sharpness {
            let mut f = prob.smooth(&w, kappa);
            for _ in 0..options.iterations {
                let g = prob.gradient(&w, kappa);
                let gn = g.norm();
                if gn < 1e-12 {
                    break;
                }
                // backtracking along the normalized ascent direction
                let mut accepted = false;
                while step > 1e-9 * power.sqrt() {
                    let mut cand = &w + &g * Complex::from(step / gn);
                    prob.project(&mut cand);
                    let fc = prob.smooth(&cand, kappa);
                    if fc > f {
                        w = cand;
                        f = fc;
                        step *= 1.5;
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let exact = prob.exact(&w);
            if exact > best.rate {
                best = OracleResult {
                    w: w.clone(),
                    rate: exact,
                };
            }
            step = step.max(1e-3 * power.sqrt());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_capacity() {
        let layout = StreamLayout::new(&[0], 0, 1);
        let h = vec![CMatrix::from_element(1, 1, Complex::from(1.0))];
        let opts = OracleOptions {
            restarts: 3,
            ..Default::default()
        };
        let r = maximize(&layout, &h, 10.0, 1.0, &opts);
        assert!((r.rate - 11f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn soft_min_bounds() {
        let xs = [1.0, 2.0, 3.0];
        let s = soft_min(&xs, 50.0);
        assert!(s <= 1.0 && s > 1.0 - 0.05);
    }

    #[test]
    fn two_user_multicast_beats_random() {
        let layout = StreamLayout::new(&[0, 1], 1, 2);
        let ch = crate::channel::sample_channels(3, 0, 2, 2, 2);
        let opts = OracleOptions {
            restarts: 5,
            ..Default::default()
        };
        let r = maximize(&layout, &ch.matrices, 100.0, 1.0, &opts);
        let prob = Problem {
            layout: &layout,
            channels: &ch.matrices,
            noise: 1.0,
            power: 100.0,
        };
        let mut rng = substream(99, Stream::Oracle, 0, 0);
        let mut w = DMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng));
        prob.project(&mut w);
        assert!(r.rate >= prob.exact(&w));
    }
}
