//! Domain types shared by every module: the population being screened, the
//! pooling scheme and its parameters.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// How infections are distributed across the population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfectionModel {
    /// Exactly `k` individuals are infected, chosen uniformly.
    FixedK { k: u64 },
    /// Each individual is infected independently with probability `p`.
    Binomial { p: f64 },
}

/// A population of `n` individuals together with its infection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemInstance {
    n: u64,
    model: InfectionModel,
}

impl ProblemInstance {
    /// `k = 0` is accepted so that the degenerate "nobody infected" case can
    /// be evaluated and simulated; the optimizers reject it.
    pub fn fixed_k(n: u64, k: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInstance(format!("n must be at least 2, got {n}")));
        }
        if k >= n {
            return Err(Error::InvalidInstance(format!("k must be below n, got k={k}, n={n}")));
        }
        Ok(Self {
            n,
            model: InfectionModel::FixedK { k },
        })
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInstance(format!("n must be at least 2, got {n}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidInstance(format!("p must lie in (0, 1), got {p}")));
        }
        Ok(Self {
            n,
            model: InfectionModel::Binomial { p },
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn model(&self) -> InfectionModel {
        self.model
    }

    /// Mean infected count: `k` or `n * p`.
    pub fn kbar(&self) -> f64 {
        match self.model {
            InfectionModel::FixedK { k } => k as f64,
            InfectionModel::Binomial { p } => self.n as f64 * p,
        }
    }

    pub fn fixed_k_count(&self) -> Option<u64> {
        match self.model {
            InfectionModel::FixedK { k } => Some(k),
            InfectionModel::Binomial { .. } => None,
        }
    }
}

/// First-stage pooling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Fixed number of individuals per pool: each pool draws `b` individuals.
    Ftp,
    /// Fixed number of pools per individual: each individual joins `d` pools.
    Fti,
    /// Randomized pooling: each (individual, pool) pair included with probability `a`.
    Rp,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ftp, Scheme::Fti, Scheme::Rp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Ftp => "ftp",
            Scheme::Fti => "fti",
            Scheme::Rp => "rp",
        }
    }

    /// Name of the scheme's second parameter.
    pub fn secondary_name(&self) -> &'static str {
        match self {
            Scheme::Ftp => "b",
            Scheme::Fti => "d",
            Scheme::Rp => "a",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ftp" => Ok(Scheme::Ftp),
            "fti" => Ok(Scheme::Fti),
            "rp" => Ok(Scheme::Rp),
            other => Err(Error::InvalidParams(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Pool count and the scheme's second parameter.
///
/// `secondary` is `b` (individuals per pool) for FTP, `d` (pools per
/// individual) for FTI and `a` (membership probability) for RP. Both fields
/// are real so the same type carries continuous optima and realized designs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignParams {
    pub scheme: Scheme,
    pub m: f64,
    pub secondary: f64,
}

impl DesignParams {
    pub fn new(scheme: Scheme, m: f64, secondary: f64) -> Self {
        Self { scheme, m, secondary }
    }

    pub fn ftp(m: f64, b: f64) -> Self {
        Self::new(Scheme::Ftp, m, b)
    }

    pub fn fti(m: f64, d: f64) -> Self {
        Self::new(Scheme::Fti, m, d)
    }

    pub fn rp(m: f64, a: f64) -> Self {
        Self::new(Scheme::Rp, m, a)
    }

    /// Checks the range invariants against a population of size `n`.
    pub fn validate(&self, n: u64) -> Result<()> {
        let (m, s) = (self.m, self.secondary);
        if !m.is_finite() || m < 1.0 {
            return Err(Error::InvalidParams(format!("m must be at least 1, got {m}")));
        }
        let ok = match self.scheme {
            Scheme::Ftp => s >= 1.0 && s <= n as f64,
            Scheme::Fti => s >= 1.0 && s <= m,
            Scheme::Rp => s > 0.0 && s <= 1.0,
        };
        if !ok {
            let range = match self.scheme {
                Scheme::Ftp => format!("[1, {n}]"),
                Scheme::Fti => format!("[1, {m}]"),
                Scheme::Rp => "(0, 1]".to_string(),
            };
            return Err(Error::InvalidParams(format!(
                "{} = {s} outside {range}",
                self.scheme.secondary_name()
            )));
        }
        Ok(())
    }

    /// Integer pool count, or an error when `m` is fractional.
    pub fn pool_count(&self) -> Result<usize> {
        as_count(self.m, "m")
    }

    /// Integer `b` or `d`; RP has no integer secondary.
    pub fn secondary_count(&self) -> Result<usize> {
        as_count(self.secondary, self.scheme.secondary_name())
    }
}

pub(crate) fn as_count(x: f64, name: &str) -> Result<usize> {
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(Error::InvalidParams(format!("{name} must be a whole number, got {x}")))
    }
}

/// Numeric constants of the closed-form optima.
pub mod constants {
    pub const E: f64 = std::f64::consts::E;
    pub const LN2: f64 = std::f64::consts::LN_2;
    /// `ln(2)^2`
    pub const LN2_SQ: f64 = LN2 * LN2;

    /// `(1/2)^ln 2`, the per-unit-of-`m/k` decay of the optimal FTI objective.
    pub fn beta() -> f64 {
        0.5f64.powf(LN2)
    }

    /// Coefficient of `k` in the optimal FTI expected test count.
    pub fn fti_linear_coeff() -> f64 {
        1.0 + 1.0 / LN2_SQ + 2.0 * LN2.ln() / LN2_SQ
    }

    /// Coefficient of `k ln((n-k)/k)` in the optimal FTI expected test count.
    pub fn fti_log_coeff() -> f64 {
        1.0 / LN2_SQ
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kbar_follows_model() {
        assert_eq!(ProblemInstance::fixed_k(1000, 10).unwrap().kbar(), 10.0);
        assert_eq!(ProblemInstance::binomial(1000, 0.05).unwrap().kbar(), 1000.0 * 0.05);
    }

    #[test]
    fn instance_ranges() {
        assert!(ProblemInstance::fixed_k(1, 0).is_err());
        assert!(ProblemInstance::fixed_k(10, 10).is_err());
        assert!(ProblemInstance::binomial(10, 0.0).is_err());
        assert!(ProblemInstance::binomial(10, 1.0).is_err());
        assert!(ProblemInstance::binomial(10, f64::NAN).is_err());
    }

    #[test]
    fn params_ranges() {
        assert!(DesignParams::ftp(5.0, 4.0).validate(12).is_ok());
        assert!(DesignParams::ftp(5.0, 13.0).validate(12).is_err());
        assert!(DesignParams::fti(5.0, 6.0).validate(12).is_err());
        assert!(DesignParams::fti(0.5, 0.5).validate(12).is_err());
        assert!(DesignParams::rp(5.0, 0.0).validate(12).is_err());
        assert!(DesignParams::rp(5.0, 1.0).validate(12).is_ok());
    }

    #[test]
    fn scheme_parse() {
        assert_eq!("FTI".parse::<Scheme>().unwrap(), Scheme::Fti);
        assert!("xyz".parse::<Scheme>().is_err());
    }

    #[test]
    fn beta_log_identity() {
        assert!((constants::beta().ln() + constants::LN2_SQ).abs() < 1e-12);
        assert!((constants::fti_log_coeff() - 2.0814).abs() < 1e-4);
        assert!((constants::fti_linear_coeff() - 1.55567).abs() < 1e-5);
    }
}
