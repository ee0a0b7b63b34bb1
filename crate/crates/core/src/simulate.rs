//! Infection draws, the two testing stages, and replication statistics.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pooling::{sample_design, PoolingDesign};
use crate::seed::{replication_seed, rng_from_seed, splitmix64};
use crate::types::{DesignParams, InfectionModel, ProblemInstance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfectionOutcome {
    /// Sorted, distinct individual indices.
    pub infected: Vec<usize>,
}

impl InfectionOutcome {
    pub fn new(mut infected: Vec<usize>) -> Self {
        infected.sort_unstable();
        infected.dedup();
        Self { infected }
    }

    pub fn len(&self) -> usize {
        self.infected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infected.is_empty()
    }
}

/// Fixed `k`: a uniform `k`-subset. Binomial: independent inclusion with
/// probability `p`.
pub fn draw_infected<R: Rng + ?Sized>(inst: &ProblemInstance, rng: &mut R) -> InfectionOutcome {
    let n = inst.n() as usize;
    match inst.model() {
        InfectionModel::FixedK { k } => InfectionOutcome::new(index::sample(rng, n, k as usize).into_vec()),
        InfectionModel::Binomial { p } => InfectionOutcome {
            infected: (0..n).filter(|_| rng.random_bool(p)).collect(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOneResult {
    pub pool_positive: Vec<bool>,
}

/// A pool is positive iff it holds at least one infected member.
pub fn stage_one(design: &PoolingDesign, infection: &InfectionOutcome) -> StageOneResult {
    let mut pool_positive = vec![false; design.m()];
    for &i in &infection.infected {
        for &j in design.pools_of(i) {
            pool_positive[j] = true;
        }
    }
    StageOneResult { pool_positive }
}

/// Individuals that belong to no negative pool. Someone in zero pools is
/// never cleared.
pub fn decode_suspects(design: &PoolingDesign, stage1: &StageOneResult) -> Result<Vec<usize>> {
    if stage1.pool_positive.len() != design.m() {
        return Err(Error::DimensionMismatch {
            expected: design.m(),
            got: stage1.pool_positive.len(),
        });
    }
    Ok(design
        .membership()
        .iter()
        .enumerate()
        .filter(|(_, pools)| pools.iter().all(|&j| stage1.pool_positive[j]))
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoStageResult {
    pub stage1: StageOneResult,
    pub suspects: Vec<usize>,
    pub stage1_tests: usize,
    pub stage2_tests: usize,
    pub total_tests: usize,
    pub identified_infected: Vec<usize>,
}

/// Screens with the pools, then tests every suspect individually.
pub fn run_two_stage(design: &PoolingDesign, infection: &InfectionOutcome) -> TwoStageResult {
    let stage1 = stage_one(design, infection);
    let suspects = decode_suspects(design, &stage1).expect("stage one built from this design");
    let identified_infected = suspects
        .iter()
        .copied()
        .filter(|i| infection.infected.binary_search(i).is_ok())
        .collect();
    let (stage1_tests, stage2_tests) = (design.m(), suspects.len());
    TwoStageResult {
        stage1,
        suspects,
        stage1_tests,
        stage2_tests,
        total_tests: stage1_tests + stage2_tests,
        identified_infected,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub reps: usize,
    pub mean_total: f64,
    /// Standard error of `mean_total`; 0 when `reps == 1`.
    pub stderr_total: f64,
    pub stderr_defined: bool,
    /// Replications whose identified set differed from the infected set.
    pub identification_failures: usize,
    /// Hash of the per-replication totals in replication order.
    pub token: u64,
}

/// Runs `reps` independent replications, each sampling a fresh design and a
/// fresh infection from the stream `replication_seed(seed, r)`.
///
/// The result depends only on the arguments, not on thread scheduling.
pub fn run_replications(
    inst: &ProblemInstance,
    params: &DesignParams,
    reps: usize,
    seed: u64,
) -> Result<ReplicationSummary> {
    if reps == 0 {
        return Err(Error::InvalidParams("reps must be at least 1".into()));
    }
    params.validate(inst.n())?;
    params.pool_count()?;
    let n = inst.n() as usize;

    let outcomes = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(replication_seed(seed, r));
            let design = sample_design(n, params, &mut rng)?;
            let infection = draw_infected(inst, &mut rng);
            let result = run_two_stage(&design, &infection);
            Ok((
                result.total_tests as u64,
                result.identified_infected == infection.infected,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let sum: u128 = outcomes.iter().map(|&(t, _)| t as u128).sum();
    let mean = sum as f64 / reps as f64;
    let (stderr, defined) = if reps > 1 {
        let ss: f64 = outcomes.iter().map(|&(t, _)| (t as f64 - mean).powi(2)).sum();
        ((ss / (reps - 1) as f64 / reps as f64).sqrt(), true)
    } else {
        (0.0, false)
    };
    let token = outcomes.iter().fold(0u64, |acc, &(t, _)| splitmix64(acc ^ t));
    Ok(ReplicationSummary {
        reps,
        mean_total: mean,
        stderr_total: stderr,
        stderr_defined: defined,
        identification_failures: outcomes.iter().filter(|(_, ok)| !ok).count(),
        token,
    })
}
