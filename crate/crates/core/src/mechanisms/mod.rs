//! Gaussian noise, Haar masking and the three release settings:
//!
//! - A: `Y = X + C`
//! - B: `Y = A(X + C)`
//! - C: `Y = AX + C`
//!
//! with `C` an n×p matrix of i.i.d. N(0, σ²) and `A` Haar on O(n). One user
//! seed fans out into independent ChaCha streams for `A` and `C`, so every
//! release can be replayed bit for bit from its seed.

mod haar;
mod matrix;

pub use haar::{orthogonality_residual, sample_haar_orthogonal, HaarSampler, OrthogonalMatrix};
pub use matrix::{gram, left_multiply, max_abs_diff, ols_from_gram, DataMatrix};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest n accepted for dense Haar sampling.
pub const MAX_DIM: usize = 16_384;

const STREAM_MASK: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// RNG for sub-stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    A,
    B,
    C,
}

impl Setting {
    pub fn is_masked(self) -> bool {
        !matches!(self, Setting::A)
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Setting::A),
            "B" | "b" => Ok(Setting::B),
            "C" | "c" => Ok(Setting::C),
            other => Err(Error::domain(format!(
                "unknown setting {other:?}; expected A, B or C"
            ))),
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Setting::A => "A",
            Setting::B => "B",
            Setting::C => "C",
        };
        f.write_str(s)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "sigma must be positive and finite, got {sigma}"
        )))
    }
}

/// Fills `out` with i.i.d. N(0, σ²).
pub fn fill_noise<R: Rng + ?Sized>(out: &mut [f64], sigma: f64, rng: &mut R) {
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = sigma * z;
    }
}

/// n×p i.i.d. N(0, σ²) entries, row-major, deterministic in `seed`.
pub fn sample_noise(n: usize, p: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let mut out = vec![0.0; n * p];
    fill_noise(&mut out, sigma, &mut substream(seed, 0));
    Ok(out)
}

/// Released pseudo-data plus what is needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseArtifact {
    pub n: usize,
    pub p: usize,
    pub setting: Setting,
    pub sigma: f64,
    pub seed: u64,
    /// Row-major n×p.
    pub pseudo_data: Vec<f64>,
}

/// JSON sidecar persisted next to the pseudo-data CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSidecar {
    pub setting: Setting,
    pub sigma: f64,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
}

impl ReleaseArtifact {
    pub fn sidecar(&self) -> ReleaseSidecar {
        ReleaseSidecar {
            setting: self.setting,
            sigma: self.sigma,
            seed: self.seed,
            n: self.n,
            p: self.p,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pseudo_data[i * self.p + j]
    }
}

/// The random pieces of one release, regenerated from its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseComponents {
    pub mask: Option<OrthogonalMatrix>,
    pub noise: Vec<f64>,
}

/// Regenerates the mask and noise a release with this seed used.
pub fn release_components(
    n: usize,
    p: usize,
    setting: Setting,
    sigma: f64,
    seed: u64,
) -> Result<ReleaseComponents> {
    check_sigma(sigma)?;
    if setting.is_masked() && n > MAX_DIM {
        return Err(Error::Refused(format!(
            "n = {n} exceeds the dense Haar sampling cap of {MAX_DIM}"
        )));
    }
    let mask = if setting.is_masked() {
        Some(haar::haar_from_rng(
            n,
            seed,
            &mut substream(seed, STREAM_MASK),
        ))
    } else {
        None
    };
    let mut noise = vec![0.0; n * p];
    fill_noise(&mut noise, sigma, &mut substream(seed, STREAM_NOISE));
    Ok(ReleaseComponents { mask, noise })
}

/// Applies one of the three mechanisms to `data`.
pub fn release(
    data: &DataMatrix,
    setting: Setting,
    sigma: f64,
    seed: u64,
) -> Result<ReleaseArtifact> {
    let (n, p) = (data.n(), data.p());
    let parts = release_components(n, p, setting, sigma, seed)?;
    let pseudo_data = combine(
        data.values(),
        n,
        p,
        setting,
        parts.mask.as_ref().map(|m| m.values()),
        &parts.noise,
    );
    Ok(ReleaseArtifact {
        n,
        p,
        setting,
        sigma,
        seed,
        pseudo_data,
    })
}

/// Builds Y from X, an optional row-major n×n mask, and noise.
pub(crate) fn combine(
    x: &[f64],
    n: usize,
    p: usize,
    setting: Setting,
    mask: Option<&[f64]>,
    noise: &[f64],
) -> Vec<f64> {
    match setting {
        Setting::A => x.iter().zip(noise).map(|(a, c)| a + c).collect(),
        Setting::B => {
            let noisy: Vec<f64> = x.iter().zip(noise).map(|(a, c)| a + c).collect();
            left_multiply(mask.expect("setting B needs a mask"), &noisy, n, p)
        }
        Setting::C => {
            let mut y = left_multiply(mask.expect("setting C needs a mask"), x, n, p);
            for (v, c) in y.iter_mut().zip(noise) {
                *v += c;
            }
            y
        }
    }
}

/// Two data sets that differ only in row `row_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPair {
    pub base: DataMatrix,
    pub variant: DataMatrix,
    pub row_index: usize,
    pub delta_norm: f64,
}

impl NeighborPair {
    /// The row difference `variant[row] − base[row]`.
    pub fn delta_row(&self) -> Vec<f64> {
        self.variant
            .row(self.row_index)
            .iter()
            .zip(self.base.row(self.row_index))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// The same pair with base and variant swapped.
    pub fn swapped(&self) -> NeighborPair {
        NeighborPair {
            base: self.variant.clone(),
            variant: self.base.clone(),
            row_index: self.row_index,
            delta_norm: self.delta_norm,
        }
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn p(&self) -> usize {
        self.base.p()
    }
}

/// Replaces row `row` of `base` by `base[row] + delta`. The difference must
/// have Euclidean norm at most 1 and the new row must stay inside [-1, 1].
pub fn make_neighbor(base: &DataMatrix, row: usize, delta: &[f64]) -> Result<NeighborPair> {
    if row >= base.n() {
        return Err(Error::domain(format!(
            "row {row} out of range for n = {}",
            base.n()
        )));
    }
    if delta.len() != base.p() {
        return Err(Error::domain(format!(
            "delta has {} entries, expected p = {}",
            delta.len(),
            base.p()
        )));
    }
    let norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    // allow roundoff in user-supplied unit vectors
    if !(norm <= 1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "neighbor difference norm {norm} exceeds 1"
        )));
    }
    let mut values = base.values().to_vec();
    let p = base.p();
    for (j, d) in delta.iter().enumerate() {
        values[row * p + j] += d;
    }
    let variant = DataMatrix::new(base.n(), p, values)?;
    Ok(NeighborPair {
        base: base.clone(),
        variant,
        row_index: row,
        delta_norm: norm,
    })
}
