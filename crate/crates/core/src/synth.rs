//! Seeded synthetic regression datasets.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Friedman1,
    Friedman1D100,
    SyntheticStep,
    SyntheticPiecewise,
    SyntheticMultithreshold,
}

impl SynthKind {
    pub const ALL: [SynthKind; 5] = [
        SynthKind::Friedman1,
        SynthKind::Friedman1D100,
        SynthKind::SyntheticStep,
        SynthKind::SyntheticPiecewise,
        SynthKind::SyntheticMultithreshold,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SynthKind::Friedman1 => "friedman1",
            SynthKind::Friedman1D100 => "friedman1_d100",
            SynthKind::SyntheticStep => "synthetic_step",
            SynthKind::SyntheticPiecewise => "synthetic_piecewise",
            SynthKind::SyntheticMultithreshold => "synthetic_multithreshold",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            SynthKind::Friedman1 => 5,
            SynthKind::Friedman1D100 => 100,
            SynthKind::SyntheticStep => 8,
            SynthKind::SyntheticPiecewise => 5,
            SynthKind::SyntheticMultithreshold => 6,
        }
    }

    /// Friedman #1 is generated noise-free by default (as `make_friedman1`
    /// does); the synthetic_* sets carry N(0, 0.3²) noise.
    pub fn default_noise(&self) -> f64 {
        match self {
            SynthKind::Friedman1 | SynthKind::Friedman1D100 => 0.0,
            _ => 0.3,
        }
    }

    fn uniform_inputs(&self) -> bool {
        matches!(self, SynthKind::Friedman1 | SynthKind::Friedman1D100)
    }

    /// Noise-free target for one feature row.
    pub fn target(&self, x: &[f64]) -> f64 {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        let pos = |v: f64| v.max(0.0);
        match self {
            SynthKind::Friedman1 | SynthKind::Friedman1D100 => {
                10.0 * (std::f64::consts::PI * x[0] * x[1]).sin()
                    + 20.0 * (x[2] - 0.5).powi(2)
                    + 10.0 * x[3]
                    + 5.0 * x[4]
            }
            SynthKind::SyntheticStep => {
                2.0 * ind(x[0] > 0.0) + 3.0 * ind(x[1] > 0.5) - 1.5 * ind(x[2] < -0.5)
                    + ind(x[0] > 0.0) * ind(x[1] > 0.0)
            }
            SynthKind::SyntheticPiecewise => {
                2.0 * pos(x[0]) + 1.5 * pos(-x[1]) + pos(x[2] - 0.5) - pos(x[0] + x[1])
            }
            SynthKind::SyntheticMultithreshold => {
                3.0 * ind(x[0] > 0.0)
                    + 2.0 * ind(x[1] > 0.5)
                    + 1.5 * ind(x[2] < -0.3)
                    + ind(x[3].abs() < 1.0)
                    + 0.5 * ind(x[0] > 0.0) * ind(x[1] > 0.0)
            }
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown synthetic dataset kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    /// `None` uses the kind's default.
    #[serde(default)]
    pub noise_std: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, n: usize, seed: u64) -> Self {
        Self { kind, n, noise_std: None, seed }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = Some(noise_std);
        self
    }

    pub fn noise(&self) -> f64 {
        self.noise_std.unwrap_or_else(|| self.kind.default_noise())
    }
}

/// Features are drawn row by row, then one noise draw per row.
pub fn gen(spec: &SynthSpec) -> Result<Dataset> {
    let SynthSpec { kind, n, .. } = *spec;
    let noise = spec.noise();
    if n < 10 {
        return Err(Error::InvalidInput(format!("synthetic datasets need n >= 10, got {n}")));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::InvalidInput(format!("noise_std must be finite and >= 0, got {noise}")));
    }
    let d = kind.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        rows.push(if kind.uniform_inputs() { rng.random::<f64>() } else { rng.sample::<f64, _>(StandardNormal) });
    }
    let x = DMatrix::from_row_slice(n, d, &rows);
    let y = (0..n)
        .map(|i| {
            let eps: f64 = rng.sample(StandardNormal);
            kind.target(&rows[i * d..(i + 1) * d]) + noise * eps
        })
        .collect();
    let names = (0..d).map(|j| format!("x{j}")).collect();
    Dataset::new(x, y, names)
}
