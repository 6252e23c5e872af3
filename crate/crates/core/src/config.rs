use serde::{Deserialize, Serialize};

use crate::combinatorics::MAX_USERS;
use crate::error::{Error, Result};

/// Scenario parameters shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Number of users `K`.
    pub users: usize,
    /// Transmit spatial dimensions `L`.
    pub tx_dims: usize,
    /// Receive spatial dimensions per user `G`.
    pub rx_dims: usize,
    /// Library size in files `N`.
    pub library_size: usize,
    /// Cache size per user, in files `M`.
    pub cache_size: usize,
    pub file_size_bits: usize,
    /// Transmit power budget `P_T` (linear).
    #[serde(default = "default_power")]
    pub power: f64,
    /// Noise variance `N0` (linear).
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_power() -> f64 {
    1.0
}

fn default_noise() -> f64 {
    1.0
}

impl NetworkConfig {
    /// Convenience constructor; `cache_size` is derived from the requested
    /// caching gain as `t * N / K` (must be integral).
    pub fn with_gain(users: usize, tx_dims: usize, rx_dims: usize, gain: usize) -> Result<Self> {
        let library_size = users;
        let cfg = NetworkConfig {
            users,
            tx_dims,
            rx_dims,
            library_size,
            cache_size: gain,
            file_size_bits: 1024,
            power: 1.0,
            noise: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Coded-caching gain `t = K M / N`.
    pub fn caching_gain(&self) -> Result<usize> {
        let num = self.users * self.cache_size;
        if self.library_size == 0 || !num.is_multiple_of(self.library_size) {
            return Err(Error::Config(format!(
                "K*M/N = {}*{}/{} is not an integer",
                self.users, self.cache_size, self.library_size
            )));
        }
        Ok(num / self.library_size)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("users", self.users),
            ("tx_dims", self.tx_dims),
            ("rx_dims", self.rx_dims),
            ("library_size", self.library_size),
            ("file_size_bits", self.file_size_bits),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.users > MAX_USERS {
            return Err(Error::Config(format!(
                "at most {MAX_USERS} users are supported"
            )));
        }
        if self.cache_size > self.library_size {
            return Err(Error::Config("cache_size exceeds library_size".into()));
        }
        let t = self.caching_gain()?;
        if t >= self.users {
            return Err(Error::Config(format!(
                "caching gain t = {t} must be smaller than K = {}",
                self.users
            )));
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return Err(Error::Config("noise must be positive".into()));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::Config("power must be non-negative".into()));
        }
        Ok(())
    }
}
