//! Seeded i.i.d. complex Gaussian channel realizations and SNR bookkeeping.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::Complex;

/// Per-user `G × L` channel matrices of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub seed: u64,
    pub realization: u64,
    pub matrices: Vec<DMatrix<Complex>>,
}

impl ChannelSet {
    /// Wrap explicit matrices (tests, fixed scenarios).
    pub fn from_matrices(matrices: Vec<DMatrix<Complex>>) -> Result<Self> {
        if let Some(first) = matrices.first() {
            let shape = first.shape();
            if matrices.iter().any(|m| m.shape() != shape) {
                return Err(Error::Input("channel matrices differ in shape".into()));
            }
        }
        Ok(ChannelSet {
            seed: 0,
            realization: 0,
            matrices,
        })
    }

    pub fn users(&self) -> usize {
        self.matrices.len()
    }

    pub fn rx_dims(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    pub fn tx_dims(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.ncols())
    }

    pub fn user(&self, k: usize) -> &DMatrix<Complex> {
        &self.matrices[k]
    }

    /// Channels of the listed users, in the given order.
    pub fn select(&self, users: &[usize]) -> Vec<DMatrix<Complex>> {
        users.iter().map(|&k| self.matrices[k].clone()).collect()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let dump = ChannelDump {
            seed: self.seed,
            realization: self.realization,
            rows: self.rx_dims(),
            cols: self.tx_dims(),
            users: self
                .matrices
                .iter()
                .map(|m| {
                    let mut re = Vec::with_capacity(m.len());
                    let mut im = Vec::with_capacity(m.len());
                    for r in 0..m.nrows() {
                        for c in 0..m.ncols() {
                            re.push(m[(r, c)].re);
                            im.push(m[(r, c)].im);
                        }
                    }
                    MatrixDump { re, im }
                })
                .collect(),
        };
        serde_json::to_writer_pretty(out, &dump).map_err(std::io::Error::from)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let dump: ChannelDump = serde_json::from_reader(input)
            .map_err(|e| Error::Input(format!("channel dump: {e}")))?;
        let n = dump.rows * dump.cols;
        let matrices = dump
            .users
            .into_iter()
            .map(|m| {
                if m.re.len() != n || m.im.len() != n {
                    return Err(Error::Input("channel dump entry count mismatch".into()));
                }
                Ok(DMatrix::from_fn(dump.rows, dump.cols, |r, c| {
                    Complex::new(m.re[r * dump.cols + c], m.im[r * dump.cols + c])
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelSet {
            seed: dump.seed,
            realization: dump.realization,
            matrices,
        })
    }
}

/// Dump format: row-major real and imaginary parts per user.
#[derive(Serialize, Deserialize)]
struct ChannelDump {
    seed: u64,
    realization: u64,
    rows: usize,
    cols: usize,
    users: Vec<MatrixDump>,
}

#[derive(Serialize, Deserialize)]
struct MatrixDump {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Draw a `CN(0, 1)` sample: real and imaginary parts each of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel realization `realization` for `users` users. User `k`'s matrix
/// depends only on `(seed, realization, k)`.
pub fn sample_channels(
    seed: u64,
    realization: u64,
    users: usize,
    rx_dims: usize,
    tx_dims: usize,
) -> ChannelSet {
    let matrices = (0..users)
        .map(|k| {
            let mut rng = substream(seed, Stream::Channels, realization, k as u64);
            // column-major fill order is part of the reproducibility contract
            DMatrix::from_fn(rx_dims, tx_dims, |_, _| complex_gaussian(&mut rng))
        })
        .collect();
    ChannelSet {
        seed,
        realization,
        matrices,
    }
}

/// `P_T = N0 · 10^(snr_db / 10)`.
pub fn snr_to_power(snr_db: f64, noise: f64) -> f64 {
    noise * 10f64.powf(snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed_and_index() {
        let a = sample_channels(7, 3, 4, 2, 3);
        let b = sample_channels(7, 3, 4, 2, 3);
        assert_eq!(a, b);
        let c = sample_channels(7, 4, 4, 2, 3);
        assert_ne!(a.matrices[0], c.matrices[0]);
    }

    #[test]
    fn shapes() {
        let s = sample_channels(1, 0, 1, 2, 3);
        assert_eq!(s.users(), 1);
        assert_eq!(s.user(0).shape(), (2, 3));
    }

    #[test]
    fn user_matrix_independent_of_user_count() {
        let small = sample_channels(9, 1, 2, 2, 2);
        let large = sample_channels(9, 1, 6, 2, 2);
        assert_eq!(small.matrices[0], large.matrices[0]);
        assert_eq!(small.matrices[1], large.matrices[1]);
    }

    #[test]
    fn unit_variance_entries() {
        // 10^5 entries: 2500 users of 4x10
        let s = sample_channels(123, 0, 2500, 4, 10);
        let (mut sum, mut mean_re, mut mean_im, mut n) = (0.0, 0.0, 0.0, 0.0);
        for m in &s.matrices {
            for z in m.iter() {
                sum += z.norm_sqr();
                mean_re += z.re;
                mean_im += z.im;
                n += 1.0;
            }
        }
        assert_eq!(n, 1e5);
        assert!((sum / n - 1.0).abs() < 0.02, "E|h|^2 = {}", sum / n);
        assert!((mean_re / n).abs() < 0.01 && (mean_im / n).abs() < 0.01);
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_power(0.0, 1.0), 1.0);
        assert!((snr_to_power(10.0, 1.0) - 10.0).abs() < 1e-12);
        assert!((snr_to_power(20.0, 0.5) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let s = sample_channels(5, 2, 3, 2, 2);
        let mut buf = Vec::new();
        s.write_json(&mut buf).unwrap();
        let back = ChannelSet::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }
}
