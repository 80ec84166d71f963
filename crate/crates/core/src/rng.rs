//! Counter-based random streams addressed by `(seed, stream)`.
//!
//! Every trial of an experiment owns its own stream, so a draw sequence depends
//! only on its address and never on scheduling. Uniforms come from the ChaCha
//! block function (a counter-mode generator); normals use the Box–Muller
//! transform, consuming two uniforms per pair of variates.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// The stream `offset` positions further along under the same seed.
    pub fn offset(self, offset: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_add(offset),
        }
    }

    pub fn normals(self) -> NormalStream {
        NormalStream::new(self)
    }
}

/// Standard normal variates from one `(seed, stream)` address.
#[derive(Clone)]
pub struct NormalStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(spec: RngSpec) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        rng.set_stream(spec.stream);
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`; safe as a logarithm argument.
    fn uniform_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One N(0, 1) variate.
    pub fn standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// One N(0, variance) variate.
    pub fn normal(&mut self, variance: f64) -> f64 {
        variance.sqrt() * self.standard()
    }

    pub fn fill_normal(&mut self, out: &mut [f64], variance: f64) {
        let sd = variance.sqrt();
        for v in out.iter_mut() {
            *v = sd * self.standard();
        }
    }
}
