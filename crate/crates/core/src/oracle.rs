//! Exact expected test counts for tiny instances, by enumerating every
//! design together with every infected set.
//!
//! Individuals and pools are held as `u64` bit masks, which caps `n` (and `m`
//! for FTI) at 64; the state budget bites long before that in practice.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::types::{DesignParams, ProblemInstance, Scheme};

pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    pub exact_expected_total: BigRational,
    pub expected_total: f64,
    pub design_count: u128,
    pub infection_count: u128,
    /// `design_count * infection_count`
    pub state_count: u128,
}

fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // Exact at every step: acc is C(n, i+1) after the division.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

fn saturating_pow(base: u128, exp: u64) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}

/// All `r`-subsets of `0..n` as bit masks, in lexicographic order.
fn subsets(n: usize, r: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    if r > n {
        return out;
    }
    loop {
        out.push(idx.iter().fold(0u64, |m, &i| m | 1 << i));
        // Advance the rightmost index that still has room.
        let Some(pos) = (0..r).rev().find(|&p| idx[p] < n - r + p) else {
            return out;
        };
        idx[pos] += 1;
        for q in pos + 1..r {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Stage-two size for one design (pool member masks) and one infected set.
fn suspect_count(pools: &[u64], infected: u64, everyone: u64) -> u32 {
    let cleared = pools
        .iter()
        .filter(|&&p| p & infected == 0)
        .fold(0u64, |acc, &p| acc | p);
    (everyone & !cleared).count_ones()
}

/// Advances a mixed-radix counter; returns false after the last value.
fn odometer(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Exact `E[T]` over all equiprobable (design, infected set) pairs. RP
/// incidence patterns are weighted by `a^c (1-a)^(nm-c)`, with `a` taken as
/// the exact binary value of the float.
pub fn enumerate_expected_tests(
    inst: &ProblemInstance,
    params: &DesignParams,
    budget: u128,
) -> Result<EnumerationResult> {
    let k = inst
        .fixed_k_count()
        .ok_or_else(|| Error::InvalidInstance("enumeration needs a fixed infected count".into()))?;
    params.validate(inst.n())?;
    let n = inst.n();
    let m = params.pool_count()? as u64;

    let infection_count = binomial(n, k);
    let design_count = match params.scheme {
        Scheme::Ftp => saturating_pow(binomial(n, params.secondary_count()? as u64), m),
        Scheme::Fti => saturating_pow(binomial(m, params.secondary_count()? as u64), n),
        Scheme::Rp => saturating_pow(2, n.saturating_mul(m)),
    };
    let state_count = design_count.saturating_mul(infection_count);
    if state_count > budget {
        return Err(Error::BudgetExceeded {
            states: state_count,
            budget,
        });
    }
    if n > 64 || (params.scheme == Scheme::Fti && m > 64) {
        return Err(Error::InvalidInstance(
            "enumeration supports at most 64 individuals and pools".into(),
        ));
    }

    let (n, m) = (n as usize, m as usize);
    let everyone = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let infections = subsets(n, k as usize);
    let sum_over_infections = |pools: &[u64]| -> u128 {
        infections
            .iter()
            .map(|&inf| (m as u128) + suspect_count(pools, inf, everyone) as u128)
            .sum()
    };

    let exact = match params.scheme {
        Scheme::Ftp => {
            let choices = subsets(n, params.secondary_count()?);
            let mut digits = vec![0usize; m];
            let mut pools = vec![0u64; m];
            let mut total: u128 = 0;
            loop {
                for (p, &d) in pools.iter_mut().zip(&digits) {
                    *p = choices[d];
                }
                total += sum_over_infections(&pools);
                if !odometer(&mut digits, choices.len()) {
                    break;
                }
            }
            ratio(total, state_count)
        }
        Scheme::Fti => {
            let choices = subsets(m, params.secondary_count()?);
            let mut digits = vec![0usize; n];
            let mut pools = vec![0u64; m];
            let mut total: u128 = 0;
            loop {
                pools.iter_mut().for_each(|p| *p = 0);
                for (i, &d) in digits.iter().enumerate() {
                    let mut picked = choices[d];
                    while picked != 0 {
                        let j = picked.trailing_zeros() as usize;
                        pools[j] |= 1 << i;
                        picked &= picked - 1;
                    }
                }
                total += sum_over_infections(&pools);
                if !odometer(&mut digits, choices.len()) {
                    break;
                }
            }
            ratio(total, state_count)
        }
        Scheme::Rp => {
            let cells = n * m;
            // by_count[c]: summed T over patterns with c memberships.
            let mut by_count = vec![0u128; cells + 1];
            let mut pools = vec![0u64; m];
            for pattern in 0u128..(1u128 << cells) {
                pools.iter_mut().for_each(|p| *p = 0);
                for cell in 0..cells {
                    if pattern >> cell & 1 == 1 {
                        pools[cell % m] |= 1 << (cell / m);
                    }
                }
                by_count[pattern.count_ones() as usize] += sum_over_infections(&pools);
            }
            let a = BigRational::from_float(params.secondary)
                .ok_or_else(|| Error::InvalidParams("a is not finite".into()))?;
            let not_a = BigRational::one() - &a;
            let mut acc = BigRational::zero();
            for (c, s) in by_count.iter().enumerate() {
                if *s == 0 {
                    continue;
                }
                let weight = pow(&a, c) * pow(&not_a, cells - c);
                acc += weight * BigRational::from_integer(BigInt::from(*s));
            }
            acc / BigRational::from_integer(BigInt::from(infection_count))
        }
    };

    Ok(EnumerationResult {
        expected_total: exact.to_f64().unwrap_or(f64::NAN),
        exact_expected_total: exact,
        design_count,
        infection_count,
        state_count,
    })
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}
