//! Realized first-stage pools.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::types::{DesignParams, Scheme};

/// Individual-to-pool incidence, stored individual-major.
///
/// Each individual's list is sorted ascending and free of duplicates. An
/// empty list is legal (FTP and RP can leave individuals out of every pool).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingDesign {
    m: usize,
    membership: Vec<Vec<usize>>,
}

impl PoolingDesign {
    pub fn from_membership(m: usize, membership: Vec<Vec<usize>>) -> Result<Self> {
        for (i, pools) in membership.iter().enumerate() {
            if pools.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParams(format!(
                    "pools of individual {i} are not strictly increasing"
                )));
            }
            if let Some(&last) = pools.last() {
                if last >= m {
                    return Err(Error::InvalidParams(format!(
                        "individual {i} references pool {last}, only {m} pools"
                    )));
                }
            }
        }
        Ok(Self { m, membership })
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn pools_of(&self, individual: usize) -> &[usize] {
        &self.membership[individual]
    }

    pub fn membership(&self) -> &[Vec<usize>] {
        &self.membership
    }

    /// Pool-major view: members of each pool, ascending.
    pub fn pool_members(&self) -> Vec<Vec<usize>> {
        let mut pools = vec![Vec::new(); self.m];
        for (i, mine) in self.membership.iter().enumerate() {
            for &j in mine {
                pools[j].push(i);
            }
        }
        pools
    }

    /// Text dump, one line per individual: `index: pool,pool,...`.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for (i, pools) in self.membership.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for (pos, j) in pools.iter().enumerate() {
                out.push(if pos == 0 { ' ' } else { ',' });
                let _ = write!(out, "{j}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`to_dump`](Self::to_dump) output. The dump does not record
    /// the pool count, so it is passed in.
    pub fn from_dump(text: &str, m: usize) -> Result<Self> {
        let mut membership = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let err = |reason: String| Error::Parse {
                line: line_no + 1,
                reason,
            };
            if line.trim().is_empty() {
                continue;
            }
            let (idx, rest) = line.split_once(':').ok_or_else(|| err("missing `:`".into()))?;
            let idx: usize = idx.trim().parse().map_err(|e| err(format!("bad index: {e}")))?;
            if idx != membership.len() {
                return Err(err(format!("expected individual {}, found {idx}", membership.len())));
            }
            let rest = rest.trim();
            let pools = if rest.is_empty() {
                Vec::new()
            } else {
                rest.split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|e| err(format!("bad pool: {e}"))))
                    .collect::<Result<Vec<_>>>()?
            };
            membership.push(pools);
        }
        Self::from_membership(m, membership)
    }
}

/// Draws a first-stage design.
///
/// FTP: every pool independently takes a uniform `b`-subset of individuals.
/// FTI: every individual independently takes a uniform `d`-subset of pools.
/// RP: every (individual, pool) pair is included independently with
/// probability `a`.
pub fn sample_design<R: Rng + ?Sized>(n: usize, params: &DesignParams, rng: &mut R) -> Result<PoolingDesign> {
    params.validate(n as u64)?;
    let m = params.pool_count()?;
    let mut membership = vec![Vec::new(); n];
    match params.scheme {
        Scheme::Ftp => {
            let b = params.secondary_count()?;
            // Pools are visited in order, so every list comes out sorted.
            for pool in 0..m {
                for i in index::sample(rng, n, b) {
                    membership[i].push(pool);
                }
            }
        }
        Scheme::Fti => {
            let d = params.secondary_count()?;
            for pools in membership.iter_mut() {
                let mut picked = index::sample(rng, m, d).into_vec();
                picked.sort_unstable();
                *pools = picked;
            }
        }
        Scheme::Rp => {
            // Skip over non-members geometrically; same law as m coin flips.
            let gap = Geometric::new(params.secondary)
                .map_err(|e| Error::InvalidParams(format!("a = {}: {e}", params.secondary)))?;
            for pools in membership.iter_mut() {
                let mut pos = 0u64;
                loop {
                    pos = pos.saturating_add(gap.sample(rng));
                    if pos >= m as u64 {
                        break;
                    }
                    pools.push(pos as usize);
                    pos += 1;
                }
            }
        }
    }
    Ok(PoolingDesign { m, membership })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignStats {
    pub individual_degrees: Vec<usize>,
    pub pool_degrees: Vec<usize>,
    /// degree -> number of individuals with that degree
    pub individual_histogram: BTreeMap<usize, usize>,
    /// degree -> number of pools with that degree
    pub pool_histogram: BTreeMap<usize, usize>,
    pub total_incidence: usize,
}

pub fn design_stats(design: &PoolingDesign) -> DesignStats {
    let individual_degrees: Vec<usize> = design.membership.iter().map(Vec::len).collect();
    let mut pool_degrees = vec![0; design.m];
    for pools in &design.membership {
        for &j in pools {
            pool_degrees[j] += 1;
        }
    }
    let histogram = |degrees: &[usize]| {
        let mut h = BTreeMap::new();
        for &d in degrees {
            *h.entry(d).or_insert(0) += 1;
        }
        h
    };
    DesignStats {
        individual_histogram: histogram(&individual_degrees),
        pool_histogram: histogram(&pool_degrees),
        total_incidence: individual_degrees.iter().sum(),
        individual_degrees,
        pool_degrees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn ftp_full_pool() {
        let design = sample_design(3, &DesignParams::ftp(1.0, 3.0), &mut rng_from_seed(1)).unwrap();
        assert_eq!(design.membership(), &[vec![0], vec![0], vec![0]]);
    }

    #[test]
    fn fti_every_pool() {
        let design = sample_design(5, &DesignParams::fti(4.0, 4.0), &mut rng_from_seed(1)).unwrap();
        assert!(design.membership().iter().all(|p| p == &[0, 1, 2, 3]));
    }

    #[test]
    fn small_ftp_and_fti_degrees() {
        let mut rng = rng_from_seed(7);
        let ftp = sample_design(12, &DesignParams::ftp(5.0, 4.0), &mut rng).unwrap();
        let stats = design_stats(&ftp);
        assert!(stats.pool_degrees.iter().all(|&d| d == 4));
        assert_eq!(stats.total_incidence, 20);

        let fti = sample_design(12, &DesignParams::fti(5.0, 2.0), &mut rng).unwrap();
        let stats = design_stats(&fti);
        assert!(stats.individual_degrees.iter().all(|&d| d == 2));
        assert_eq!(stats.total_incidence, 24);
        assert_eq!(stats.pool_degrees.iter().sum::<usize>(), 24);
    }

    #[test]
    fn rp_can_leave_everyone_out() {
        let mut rng = rng_from_seed(3);
        let design = sample_design(5, &DesignParams::rp(2.0, 1e-12), &mut rng).unwrap();
        let stats = design_stats(&design);
        assert_eq!(stats.total_incidence, 0);
        assert_eq!(stats.individual_histogram.get(&0), Some(&5));
        assert_eq!(stats.pool_histogram.get(&0), Some(&2));
    }

    #[test]
    fn rp_with_a_one_is_complete() {
        let design = sample_design(4, &DesignParams::rp(3.0, 1.0), &mut rng_from_seed(3)).unwrap();
        assert!(design.membership().iter().all(|p| p == &[0, 1, 2]));
    }

    #[test]
    fn rejects_bad_params() {
        let mut rng = rng_from_seed(0);
        assert!(sample_design(10, &DesignParams::ftp(2.0, 11.0), &mut rng).is_err());
        assert!(sample_design(10, &DesignParams::ftp(2.5, 3.0), &mut rng).is_err());
        assert!(sample_design(10, &DesignParams::fti(3.0, 1.5), &mut rng).is_err());
        assert!(sample_design(10, &DesignParams::fti(3.0, 4.0), &mut rng).is_err());
        assert!(sample_design(10, &DesignParams::rp(3.0, 1.5), &mut rng).is_err());
    }

    #[test]
    fn dump_format() {
        let design = PoolingDesign::from_membership(3, vec![vec![0, 2], vec![], vec![1]]).unwrap();
        assert_eq!(design.to_dump(), "0: 0,2\n1:\n2: 1\n");
        assert_eq!(PoolingDesign::from_dump(&design.to_dump(), 3).unwrap(), design);
        assert!(PoolingDesign::from_dump("0: 3\n", 3).is_err());
        assert!(PoolingDesign::from_dump("1: 0\n", 3).is_err());
        assert!(PoolingDesign::from_dump("0: 1,0\n", 3).is_err());
    }

    #[test]
    fn pool_major_view() {
        let design = PoolingDesign::from_membership(3, vec![vec![0, 2], vec![], vec![0, 1]]).unwrap();
        assert_eq!(design.pool_members(), vec![vec![0, 2], vec![2], vec![0]]);
    }
}
