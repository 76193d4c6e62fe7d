//! Reproducible Brownian increments.
//!
//! Every increment is a pure function of `(seed, path index, channel, step)`:
//! the ChaCha stream id is `(path_index << 8) | channel` and step `k` reads the
//! 64-bit word at position `2k`. Uniforms become normals by the inverse CDF.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest supported noise dimension; channels occupy the low byte of the stream id.
pub const MAX_CHANNELS: usize = 256;

/// A `n_steps × m` block of increments, stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    dt: f64,
    m: usize,
    data: Vec<f64>,
}

impl Increments {
    /// `data[k * m + j]` is the increment of channel `j` over step `k`.
    pub fn new(dt: f64, m: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || !data.len().is_multiple_of(m) {
            return Err(Error::Dimension {
                what: "increment data length must be a multiple of the noise dimension",
                expected: m,
                got: data.len(),
            });
        }
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("step size {dt} must be positive")));
        }
        Ok(Self { dt, m, data })
    }

    /// All-zero noise.
    pub fn zeros(dt: f64, m: usize, n_steps: usize) -> Self {
        Self {
            dt,
            m,
            data: vec![0.0; m * n_steps],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn noise_dim(&self) -> usize {
        self.m
    }

    pub fn n_steps(&self) -> usize {
        self.data.len() / self.m
    }

    /// Increment vector of step `k`.
    pub fn step(&self, k: usize) -> &[f64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sums aligned blocks of `factor` steps.
    ///
    /// Blocks are summed by recursive halving, so for power-of-two factors
    /// coarsening by `a` then `b` is bit-identical to coarsening by `a·b`.
    pub fn coarsen(&self, factor: usize) -> Result<Increments> {
        let n = self.n_steps();
        if factor == 0 || !n.is_multiple_of(factor) {
            return Err(Error::Divisibility { len: n, factor });
        }
        let m = self.m;
        let n_out = n / factor;
        let mut data = vec![0.0; n_out * m];
        for k in 0..n_out {
            for j in 0..m {
                data[k * m + j] = self.block_sum(k * factor, factor, j);
            }
        }
        Ok(Increments {
            dt: self.dt * factor as f64,
            m,
            data,
        })
    }

    fn block_sum(&self, start: usize, len: usize, channel: usize) -> f64 {
        if len == 1 {
            return self.data[start * self.m + channel];
        }
        let half = len / 2;
        self.block_sum(start, half, channel) + self.block_sum(start + half, len - half, channel)
    }
}

/// Fine-grid noise for one Monte Carlo path.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    seed: u64,
    path_index: u64,
    increments: Increments,
}

impl BrownianPath {
    /// Generates `n_fine` increments of variance `fine_dt` on each of `m` channels.
    pub fn generate(seed: u64, path_index: u64, m: usize, fine_dt: f64, n_fine: usize) -> Result<Self> {
        if m == 0 || m > MAX_CHANNELS {
            return Err(Error::Parameter(format!(
                "noise dimension {m} is outside 1..={MAX_CHANNELS}"
            )));
        }
        if path_index >= 1 << 56 {
            return Err(Error::Parameter(format!("path index {path_index} is too large")));
        }
        if !(fine_dt > 0.0 && fine_dt.is_finite()) {
            return Err(Error::Parameter(format!("step size {fine_dt} must be positive")));
        }
        if n_fine == 0 {
            return Err(Error::Parameter("need at least one fine step".into()));
        }
        let scale = fine_dt.sqrt();
        let mut data = vec![0.0; m * n_fine];
        for j in 0..m {
            let mut rng = channel_rng(seed, path_index, j);
            for k in 0..n_fine {
                data[k * m + j] = scale * standard_normal(rng.next_u64());
            }
        }
        Ok(Self {
            seed,
            path_index,
            increments: Increments {
                dt: fine_dt,
                m,
                data,
            },
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn increments(&self) -> &Increments {
        &self.increments
    }

    pub fn fine_dt(&self) -> f64 {
        self.increments.dt
    }

    pub fn n_fine(&self) -> usize {
        self.increments.n_steps()
    }

    pub fn coarsen(&self, factor: usize) -> Result<Increments> {
        self.increments.coarsen(factor)
    }
}

/// Free-function form of [`BrownianPath::generate`].
pub fn generate_brownian(seed: u64, path_index: u64, m: usize, fine_dt: f64, n_fine: usize) -> Result<BrownianPath> {
    BrownianPath::generate(seed, path_index, m, fine_dt, n_fine)
}

/// ChaCha stream for one channel, positioned at step 0.
pub(crate) fn channel_rng(seed: u64, stream_key: u64, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream_key << 8) | channel as u64);
    rng
}

/// Maps 64 random bits to a standard normal through `u = (⌊bits/2¹¹⌋ + ½)·2⁻⁵³`.
pub(crate) fn standard_normal(bits: u64) -> f64 {
    let u = ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    unit_normal().inverse_cdf(u)
}

fn unit_normal() -> &'static Normal {
    static N: std::sync::OnceLock<Normal> = std::sync::OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("unit normal"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regeneration_is_bit_identical() {
        let a = BrownianPath::generate(42, 3, 2, 1e-3, 500).unwrap();
        let b = BrownianPath::generate(42, 3, 2, 1e-3, 500).unwrap();
        assert_eq!(a, b);
        let c = BrownianPath::generate(43, 3, 2, 1e-3, 500).unwrap();
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn increments_are_keyed_by_step() {
        // a longer path extends a shorter one
        let short = BrownianPath::generate(9, 1, 3, 0.01, 10).unwrap();
        let long = BrownianPath::generate(9, 1, 3, 0.01, 40).unwrap();
        assert_eq!(short.increments().as_slice(), &long.increments().as_slice()[..30]);
    }

    #[test]
    fn step_k_reads_word_2k() {
        let p = BrownianPath::generate(5, 2, 2, 1.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        rng.set_stream((2 << 8) | 1);
        rng.set_word_pos(2 * 6);
        assert_eq!(p.increments().step(6)[1], standard_normal(rng.next_u64()));
    }

    #[test]
    fn moments_of_one_million_increments() {
        let dt = 0.01;
        let p = BrownianPath::generate(1, 0, 1, dt, 1_000_000).unwrap();
        let x = p.increments().as_slice();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 * (dt / n).sqrt(), "mean {mean}");
        assert!((var / dt - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn neighbouring_paths_are_uncorrelated() {
        let n = 100_000;
        let a = BrownianPath::generate(7, 0, 1, 1.0, n).unwrap();
        let b = BrownianPath::generate(7, 1, 1, 1.0, n).unwrap();
        let (x, y) = (a.increments().as_slice(), b.increments().as_slice());
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let cov: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
        let sx: f64 = x.iter().map(|u| (u - mx).powi(2)).sum();
        let sy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
        let rho = cov / (sx * sy).sqrt();
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "correlation {rho}");
    }

    #[test]
    fn coarsen_identity_total_and_block_sums() {
        let p = BrownianPath::generate(3, 0, 2, 0.25, 16).unwrap();
        assert_eq!(&p.coarsen(1).unwrap(), p.increments());
        let total = p.coarsen(16).unwrap();
        assert_eq!(total.n_steps(), 1);
        assert_eq!(total.dt(), 4.0);
        for j in 0..2 {
            let s: f64 = (0..16).map(|k| p.increments().step(k)[j]).sum();
            assert!((total.step(0)[j] - s).abs() < 1e-12);
        }
        let c2 = p.coarsen(2).unwrap();
        assert_eq!(c2.step(3)[1], p.increments().step(6)[1] + p.increments().step(7)[1]);
    }

    #[test]
    fn coarsening_is_associative() {
        let p = BrownianPath::generate(11, 4, 3, 1e-4, 1 << 12).unwrap();
        for (a, b) in [(2, 2), (2, 4), (4, 2), (8, 16), (1, 64), (32, 1)] {
            assert_eq!(
                p.coarsen(a).unwrap().coarsen(b).unwrap(),
                p.coarsen(a * b).unwrap(),
                "{a} x {b}"
            );
        }
    }

    #[test]
    fn indivisible_factor_is_rejected() {
        let p = BrownianPath::generate(0, 0, 1, 1.0, 10).unwrap();
        assert_eq!(p.coarsen(3), Err(Error::Divisibility { len: 10, factor: 3 }));
        assert!(p.coarsen(0).is_err());
        assert!(BrownianPath::generate(0, 0, 0, 1.0, 10).is_err());
        assert!(BrownianPath::generate(0, 0, 1, 0.0, 10).is_err());
    }
}
