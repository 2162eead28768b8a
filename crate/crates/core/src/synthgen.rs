//! Synthetic motif streams with Bernoulli substitution noise.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, so a
//! `(spec, seed)` pair reproduces the same stream on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequences::{parse_symbols, Alphabet, Dataset, Symbol};

pub const RNG_NAME: &str = "chacha8/seed_from_u64";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotifMode {
    /// The first motif tiled `repetitions` times.
    RepeatSingle { repetitions: usize },
    /// Motifs drawn uniformly per block until `target_length` symbols exist;
    /// the last block is truncated.
    UniformMixture { target_length: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifSpec {
    pub alphabet: Alphabet,
    pub motifs: Vec<Vec<Symbol>>,
    pub mode: MotifMode,
    pub noise_p: f64,
    pub seed: u64,
    /// Multiclass replacement skips the original symbol when set.
    #[serde(default)]
    pub exclude_original: bool,
    /// Mask only positions whose symbol actually changed.
    #[serde(default)]
    pub mask_effective_only: bool,
}

impl MotifSpec {
    pub fn repeat(alphabet: Alphabet, motif: Vec<Symbol>, repetitions: usize, noise_p: f64, seed: u64) -> Self {
        Self {
            alphabet,
            motifs: vec![motif],
            mode: MotifMode::RepeatSingle { repetitions },
            noise_p,
            seed,
            exclude_original: false,
            mask_effective_only: false,
        }
    }

    pub fn mixture(alphabet: Alphabet, motifs: Vec<Vec<Symbol>>, target_length: usize, noise_p: f64, seed: u64) -> Self {
        Self {
            alphabet,
            motifs,
            mode: MotifMode::UniformMixture { target_length },
            noise_p,
            seed,
            exclude_original: false,
            mask_effective_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.motifs.is_empty() || self.motifs.iter().any(Vec::is_empty) {
            return Err(Error::Domain("at least one non-empty motif is required".into()));
        }
        if let Some(&s) = self.motifs.iter().flatten().find(|&&s| !self.alphabet.contains(s)) {
            return Err(Error::SymbolOutOfAlphabet {
                symbol: s as i64,
                position: 0,
                alphabet_size: self.alphabet.size(),
            });
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(Error::Domain(format!("noise probability {} not in [0, 1]", self.noise_p)));
        }
        Ok(())
    }
}

/// The standard binary motif `[-1, -1, +1, +1]`.
pub fn binary_motif() -> Vec<Symbol> {
    vec![0, 0, 1, 1]
}

/// Parses a comma- or whitespace-separated motif in the stream file syntax.
pub fn parse_motif(text: &str, alphabet: Alphabet) -> Result<Vec<Symbol>> {
    parse_symbols(&text.replace(',', " "), alphabet)
}

fn corrupt_block(
    block: &[Symbol],
    spec: &MotifSpec,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Symbol>,
    mask: &mut Vec<bool>,
) {
    let k = spec.alphabet.size() as Symbol;
    for &s in block {
        if rng.random_bool(spec.noise_p) {
            let replaced = if spec.alphabet.is_binary() {
                1 - s
            } else if spec.exclude_original {
                let r = rng.random_range(0..k - 1);
                if r >= s {
                    r + 1
                } else {
                    r
                }
            } else {
                rng.random_range(0..k)
            };
            out.push(replaced);
            mask.push(!spec.mask_effective_only || replaced != s);
        } else {
            out.push(s);
            mask.push(false);
        }
    }
}

/// Per-stream seeds derived from one base seed.
pub fn derive_seeds(base: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    (0..n).map(|_| rng.random::<u64>()).collect()
}

/// Builds the stream with its corruption mask and all-zero side information.
pub fn generate(spec: &MotifSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    let mut mask = Vec::new();
    match spec.mode {
        MotifMode::RepeatSingle { repetitions } => {
            let motif = &spec.motifs[0];
            for _ in 0..repetitions {
                corrupt_block(motif, spec, &mut rng, &mut out, &mut mask);
            }
        }
        MotifMode::UniformMixture { target_length } => {
            while out.len() < target_length {
                let pick = rng.random_range(0..spec.motifs.len());
                corrupt_block(&spec.motifs[pick], spec, &mut rng, &mut out, &mut mask);
            }
            out.truncate(target_length);
            mask.truncate(target_length);
        }
    }
    Dataset::new(spec.alphabet, out, None, Some(mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_tiling() {
        let spec = MotifSpec::repeat(Alphabet::binary(), binary_motif(), 100, 0.0, 3);
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.len(), 400);
        assert!(ds.output.chunks(4).all(|c| c == [0, 0, 1, 1]));
        assert!(ds.corruption_mask.as_ref().unwrap().iter().all(|&m| !m));
        assert_eq!(ds.input.dim(), 0);
    }

    #[test]
    fn full_noise_flips_everything() {
        let spec = MotifSpec::repeat(Alphabet::binary(), binary_motif(), 10, 1.0, 3);
        let ds = generate(&spec).unwrap();
        assert!(ds.output.chunks(4).all(|c| c == [1, 1, 0, 0]));
        assert!(ds.corruption_mask.unwrap().iter().all(|&m| m));
    }

    #[test]
    fn mask_density_concentrates() {
        let mut total = 0.0;
        for seed in 0..20 {
            let spec = MotifSpec::repeat(Alphabet::binary(), binary_motif(), 100, 0.2, seed);
            let mask = generate(&spec).unwrap().corruption_mask.unwrap();
            total += mask.iter().filter(|&&m| m).count() as f64 / 400.0;
        }
        let mean = total / 20.0;
        assert!((mean - 0.2).abs() <= 0.04, "{mean}");
    }

    #[test]
    fn same_seed_same_stream() {
        let k5 = Alphabet::new(5).unwrap();
        let spec = MotifSpec::repeat(k5, vec![1, 2, 3, 4, 1, 3], 100, 0.3, 11);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = MotifSpec { seed: 12, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn clean_positions_follow_the_tiling() {
        let k5 = Alphabet::new(5).unwrap();
        let motif = vec![1, 2, 3, 4, 1, 3];
        let spec = MotifSpec::repeat(k5, motif.clone(), 50, 0.4, 5);
        let ds = generate(&spec).unwrap();
        let mask = ds.corruption_mask.as_ref().unwrap();
        for (i, &s) in ds.output.iter().enumerate() {
            if !mask[i] {
                assert_eq!(s, motif[i % motif.len()]);
            }
        }
    }

    #[test]
    fn exclude_original_always_changes() {
        let k5 = Alphabet::new(5).unwrap();
        let mut spec = MotifSpec::repeat(k5, vec![1, 2, 3, 4, 1, 3], 20, 1.0, 5);
        spec.exclude_original = true;
        let ds = generate(&spec).unwrap();
        for (i, &s) in ds.output.iter().enumerate() {
            assert_ne!(s, spec.motifs[0][i % 6]);
        }
    }

    #[test]
    fn mixture_reaches_target_length() {
        let spec = MotifSpec::mixture(Alphabet::binary(), vec![vec![0, 0, 1, 1], vec![1, 0, 1, 0]], 202, 0.1, 9);
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.len(), 202);
        assert_eq!(ds.corruption_mask.unwrap().len(), 202);
    }

    #[test]
    fn standard_lengths() {
        for (reps, len) in [(25, 100), (50, 200), (100, 400), (200, 800)] {
            let spec = MotifSpec::repeat(Alphabet::binary(), binary_motif(), reps, 0.1, 1);
            assert_eq!(generate(&spec).unwrap().len(), len);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let spec = MotifSpec::repeat(Alphabet::binary(), vec![], 4, 0.1, 1);
        assert!(generate(&spec).is_err());
        let spec = MotifSpec::repeat(Alphabet::binary(), binary_motif(), 4, 1.5, 1);
        assert!(generate(&spec).is_err());
        let spec = MotifSpec::repeat(Alphabet::new(3).unwrap(), vec![0, 5], 4, 0.1, 1);
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seeds(7, 20);
        assert_eq!(a, derive_seeds(7, 20));
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 20);
        assert_eq!(derive_seeds(7, 3), a[..3]);
    }

    #[test]
    fn motif_parsing() {
        assert_eq!(parse_motif("-1,-1,+1,+1", Alphabet::binary()).unwrap(), binary_motif());
    }
}
