//! Brownian-sheet increments on the space-time grid.
//!
//! Every replica draws from its own ChaCha8 stream. The key is expanded
//! from the master seed and the stream number packs `(replica_id, tag)`, so
//! distinct triples never share key material and replicas can be generated
//! in any order. Each time slice starts at a fixed word offset, which makes
//! [`sample_slice`] randomly addressable: the same `(stream, time_index)`
//! always yields the same increments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SpaceTimeGrid;

/// Seed used when neither the CLI nor the config supplies one.
pub const DEFAULT_MASTER_SEED: u64 = 0x5DE_5EED;

/// Words reserved per time slice (`2^36` 32-bit words).
const SLICE_WORDS_LOG2: u32 = 36;

/// Largest slice width that cannot overrun its word budget.
pub const MAX_CELLS: usize = 1 << 28;

const TAG_BITS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamTag {
    Solution = 0,
    Frozen = 1,
    Bootstrap = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replica_id: u64,
    pub tag: StreamTag,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replica_id: u64, tag: StreamTag) -> Self {
        SeedSpec { master_seed, replica_id, tag }
    }

    pub fn solution(master_seed: u64, replica_id: u64) -> Self {
        Self::new(master_seed, replica_id, StreamTag::Solution)
    }

    pub fn with_tag(self, tag: StreamTag) -> Self {
        SeedSpec { tag, ..self }
    }
}

/// Deterministic generator for one `(master_seed, replica_id, tag)` triple.
///
/// Single consumer: a handle is owned by one replica worker at a time.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    seed: SeedSpec,
}

pub fn derive_stream(seed: SeedSpec) -> NoiseStream {
    assert!(
        seed.replica_id < 1 << (64 - TAG_BITS),
        "replica id {} does not fit the stream layout",
        seed.replica_id
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed.master_seed);
    rng.set_stream((seed.replica_id << TAG_BITS) | seed.tag as u64);
    NoiseStream { rng, seed }
}

impl NoiseStream {
    pub fn seed(&self) -> SeedSpec {
        self.seed
    }

    /// Standard normal draws continuing from the current position.
    pub fn standard_normals(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(&mut self.rng);
        }
    }

    /// Jump to the start of the block reserved for `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos((index as u128) << SLICE_WORDS_LOG2);
    }

    /// Fill `out` with the increments of slice `time_index` scaled to
    /// variance `dt·dx`, without allocating.
    pub fn fill_slice(&mut self, grid: &SpaceTimeGrid, time_index: usize, out: &mut [f64]) -> Result<()> {
        if time_index >= grid.n_time {
            return Err(Error::Bounds { index: time_index, limit: grid.n_time });
        }
        if out.len() != grid.n_space || grid.n_space > MAX_CELLS {
            return Err(Error::Data(format!(
                "noise buffer of length {} does not match {} cells",
                out.len(),
                grid.n_space
            )));
        }
        let scale = (grid.dt * grid.dx).sqrt();
        self.seek(time_index as u64);
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v = scale * z;
        }
        Ok(())
    }
}

/// Increments `W([t_k, t_{k+1}) × [x_i, x_{i+1}))` for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSlice {
    pub values: Vec<f64>,
    pub time_index: usize,
    pub n_space: usize,
    pub dt: f64,
    pub dx: f64,
}

impl NoiseSlice {
    pub fn matches(&self, grid: &SpaceTimeGrid) -> bool {
        self.n_space == grid.n_space && self.values.len() == grid.n_space && self.dt == grid.dt && self.dx == grid.dx
    }
}

pub fn sample_slice(stream: &mut NoiseStream, grid: &SpaceTimeGrid, time_index: usize) -> Result<NoiseSlice> {
    let mut values = vec![0.0; grid.n_space];
    stream.fill_slice(grid, time_index, &mut values)?;
    Ok(NoiseSlice {
        values,
        time_index,
        n_space: grid.n_space,
        dt: grid.dt,
        dx: grid.dx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn draws(seed: SeedSpec, n: usize) -> Vec<f64> {
        let mut s = derive_stream(seed);
        let mut v = vec![0.0; n];
        s.standard_normals(&mut v);
        v
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    fn grid(n_space: usize, n_time: usize, dx: f64, dt: f64) -> SpaceTimeGrid {
        SpaceTimeGrid::new(dx, dt, n_space, n_time, 0.0).unwrap()
    }

    #[test]
    fn same_seed_same_draws() {
        let s = SeedSpec::solution(7, 3);
        assert_eq!(draws(s, 1000), draws(s, 1000));
    }

    #[test]
    fn replicas_are_uncorrelated() {
        let a = draws(SeedSpec::solution(11, 0), 10_000);
        let b = draws(SeedSpec::solution(11, 1), 10_000);
        assert!(correlation(&a, &b).abs() < 0.05);
    }

    #[test]
    fn tags_give_distinct_sequences() {
        let a = draws(SeedSpec::new(11, 4, StreamTag::Solution), 64);
        let b = draws(SeedSpec::new(11, 4, StreamTag::Frozen), 64);
        let c = draws(SeedSpec::new(11, 4, StreamTag::Bootstrap), 64);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn per_cell_variance() {
        // 10⁶ draws of N(0, dt·dx) with dt = 1e-4, dx = 1e-2.
        let g = grid(1000, 1000, 1e-2, 1e-4);
        let mut s = derive_stream(SeedSpec::solution(5, 0));
        let mut buf = vec![0.0; g.n_space];
        let mut sum_sq = 0.0;
        for k in 0..g.n_time {
            s.fill_slice(&g, k, &mut buf).unwrap();
            sum_sq += buf.iter().map(|v| v * v).sum::<f64>();
        }
        let var = sum_sq / 1e6;
        assert!((var / 1e-6 - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn rectangle_sums_follow_sheet_covariance() {
        // W([0,t] × [0,x]) has variance t·x; disjoint rectangles are independent.
        let g = grid(16, 32, 1.0 / 16.0, 1.0 / 32.0);
        let (kt, ix) = (20, 6);
        let expected = g.time(kt) * g.x(ix);
        let replicas = 4000;
        let mut first = Vec::with_capacity(replicas);
        let mut disjoint = Vec::with_capacity(replicas);
        for r in 0..replicas {
            let mut s = derive_stream(SeedSpec::solution(9, r as u64));
            let (mut a, mut b) = (0.0, 0.0);
            for k in 0..g.n_time {
                let slice = sample_slice(&mut s, &g, k).unwrap();
                if k < kt {
                    a += slice.values[..ix].iter().sum::<f64>();
                } else {
                    b += slice.values[ix..].iter().sum::<f64>();
                }
            }
            first.push(a);
            disjoint.push(b);
        }
        let var = first.iter().map(|v| v * v).sum::<f64>() / replicas as f64;
        let se = expected * (2.0 / replicas as f64).sqrt();
        assert!((var - expected).abs() < 3.0 * se, "{var} vs {expected}");
        assert!(correlation(&first, &disjoint).abs() < 5.0 / (replicas as f64).sqrt());
    }

    #[test]
    fn zero_area_rectangle_is_zero() {
        let g = grid(8, 8, 0.125, 0.01);
        let mut s = derive_stream(SeedSpec::solution(1, 0));
        let slice = sample_slice(&mut s, &g, 0).unwrap();
        let empty: f64 = slice.values[3..3].iter().sum();
        assert_eq!(empty, 0.0);
    }

    #[test]
    fn slices_are_randomly_addressable() {
        let g = grid(50, 10, 0.02, 0.001);
        let mut s = derive_stream(SeedSpec::solution(2, 8));
        let forward: Vec<_> = (0..10).map(|k| sample_slice(&mut s, &g, k).unwrap()).collect();
        let mut t = derive_stream(SeedSpec::solution(2, 8));
        for k in (0..10).rev() {
            assert_eq!(sample_slice(&mut t, &g, k).unwrap(), forward[k]);
        }
        assert_ne!(forward[0].values, forward[1].values);
    }

    #[test]
    fn out_of_range_slice_is_rejected() {
        let g = grid(4, 3, 0.25, 0.01);
        let mut s = derive_stream(SeedSpec::solution(2, 0));
        assert_eq!(sample_slice(&mut s, &g, 3).unwrap_err(), Error::Bounds { index: 3, limit: 3 });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn slice_has_one_value_per_cell(n in 2usize..200, k in 0usize..5, seed in any::<u64>()) {
            let g = grid(n, 5, 1.0 / n as f64, 1e-3);
            let mut s = derive_stream(SeedSpec::solution(seed, 0));
            let slice = sample_slice(&mut s, &g, k).unwrap();
            prop_assert_eq!(slice.values.len(), n);
            prop_assert!(slice.matches(&g));
            prop_assert!(slice.values.iter().all(|v| v.is_finite()));
        }

        #[test]
        fn ensemble_is_a_pure_function_of_the_seed(seed in any::<u64>(), r in 0u64..1000) {
            let g = grid(10, 4, 0.1, 1e-3);
            let mut a = derive_stream(SeedSpec::solution(seed, r));
            let mut b = derive_stream(SeedSpec::solution(seed, r));
            prop_assert_eq!(sample_slice(&mut a, &g, 2).unwrap(), sample_slice(&mut b, &g, 2).unwrap());
        }
    }
}
