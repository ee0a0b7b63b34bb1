//! Closed-form probabilities, expected test counts and parameter optima for
//! the three pooling schemes.
//!
//! Every formula is written in terms of the mean infected count `kbar`, so a
//! binomial instance with `n * p = k` evaluates identically to a fixed-`k`
//! instance. All logarithms are natural.
//!
//! Two evaluation forms are offered:
//!
//! * [`Form::PaperApprox`] uses the exponential substitution `1 - x ~ e^{-x}`
//!   for the pool-negative probability and treats pools as independent.
//! * [`Form::Exact`] keeps the pre-exponential expressions. For FTP it uses
//!   the without-replacement (hypergeometric) avoidance probability, and the
//!   uninfected-suspect probability is conditioned on the pool containing the
//!   individual. FTP and RP pools are independent given the infected set, so
//!   for fixed `k` this form is the true expectation for those two schemes.
//!   FTI is exact only when `d = 1` or `k = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{as_count, constants, DesignParams, ProblemInstance, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Form {
    #[default]
    PaperApprox,
    Exact,
}

/// How [`optimal_m`] solves for the pool count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolCountRule {
    /// Root of the derivative of the expected-test expression.
    #[default]
    ExactStationary,
    /// The `ln(1 - 1/(e k)) ~ -1/(e k)` simplification (FTP and RP only; FTI
    /// has a single closed form).
    PaperApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticPrediction {
    /// Probability that a given pool does not select a given individual.
    pub non_selection_prob: f64,
    pub pool_negative_prob: f64,
    pub pool_positive_prob: f64,
    /// Probability that an uninfected individual survives stage one.
    pub uninfected_suspect_prob: f64,
    pub expected_total_tests: f64,
}

/// `n` and `kbar` as reals; lets the optimizers run at a misestimated `k`.
#[derive(Debug, Clone, Copy)]
struct Population {
    n: f64,
    kbar: f64,
}

impl From<&ProblemInstance> for Population {
    fn from(inst: &ProblemInstance) -> Self {
        Self {
            n: inst.n() as f64,
            kbar: inst.kbar(),
        }
    }
}

impl Population {
    fn require_positive_mean(&self) -> Result<()> {
        if self.kbar > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroMean)
        }
    }
}

/// Probability that `draws` picks without replacement from `pop` items avoid
/// all `bad` of them: `prod_{i<draws} (pop - bad - i) / (pop - i)`.
///
/// `bad` may be fractional (binomial mean); any nonpositive factor yields 0.
fn avoidance_prob(pop: f64, bad: f64, draws: usize) -> f64 {
    let mut prob = 1.0;
    for i in 0..draws {
        let i = i as f64;
        let good = pop - bad - i;
        if good <= 0.0 {
            return 0.0;
        }
        prob *= good / (pop - i);
    }
    prob
}

/// Probability that a single pool tests negative.
///
/// `PaperApprox` gives `(1-b/n)^k`, `(1-d/m)^k` or `(1-a)^k`. `Exact` differs
/// only for FTP, where it is `C(n-k, b) / C(n, b)` and requires whole `b`.
pub fn pool_negative_prob(inst: &ProblemInstance, params: &DesignParams, form: Form) -> Result<f64> {
    params.validate(inst.n())?;
    let pop = Population::from(inst);
    let (m, s) = (params.m, params.secondary);
    let prob = match (params.scheme, form) {
        (Scheme::Ftp, Form::PaperApprox) => (1.0 - s / pop.n).powf(pop.kbar),
        (Scheme::Ftp, Form::Exact) => {
            let b = as_count(s, "b")?;
            avoidance_prob(pop.n, pop.kbar, b)
        }
        (Scheme::Fti, _) => (1.0 - s / m).powf(pop.kbar),
        (Scheme::Rp, _) => (1.0 - s).powf(pop.kbar),
    };
    Ok(prob)
}

/// Expected total number of tests `m + kbar + (n - kbar) * t` together with
/// the intermediate probabilities.
pub fn expected_total_tests(inst: &ProblemInstance, params: &DesignParams, form: Form) -> Result<AnalyticPrediction> {
    params.validate(inst.n())?;
    predict(Population::from(inst), params, form)
}

fn predict(pop: Population, params: &DesignParams, form: Form) -> Result<AnalyticPrediction> {
    let Population { n, kbar } = pop;
    let (m, s) = (params.m, params.secondary);
    let (non_selection, negative, suspect) = match (params.scheme, form) {
        (Scheme::Ftp, Form::PaperApprox) => {
            let negative = (-kbar * s / n).exp();
            (1.0 - s / n, negative, (1.0 - s / n * negative).powf(m))
        }
        (Scheme::Ftp, Form::Exact) => {
            let b = as_count(s, "b")?;
            let negative = avoidance_prob(n, kbar, b);
            // Pool holds this (uninfected) individual plus b-1 of the other n-1.
            let negative_given_member = avoidance_prob(n - 1.0, kbar, b - 1);
            (1.0 - s / n, negative, (1.0 - s / n * negative_given_member).powf(m))
        }
        (Scheme::Fti, form) => {
            let negative = match form {
                Form::PaperApprox => (-kbar * s / m).exp(),
                Form::Exact => (1.0 - s / m).powf(kbar),
            };
            (1.0 - s / m, negative, (1.0 - negative).powf(s))
        }
        (Scheme::Rp, form) => {
            let negative = match form {
                Form::PaperApprox => (-kbar * s).exp(),
                Form::Exact => (1.0 - s).powf(kbar),
            };
            (1.0 - s, negative, (1.0 - s * negative).powf(m))
        }
    };
    Ok(AnalyticPrediction {
        non_selection_prob: non_selection,
        pool_negative_prob: negative,
        pool_positive_prob: 1.0 - negative,
        uninfected_suspect_prob: suspect,
        expected_total_tests: m + kbar + (n - kbar) * suspect,
    })
}

/// Optimal `b`, `d` or `a` for a given pool count: `n/k`, `(m/k) ln 2`, `1/k`.
pub fn optimal_secondary(inst: &ProblemInstance, scheme: Scheme, m: f64) -> Result<f64> {
    secondary_at(Population::from(inst), scheme, m)
}

fn secondary_at(pop: Population, scheme: Scheme, m: f64) -> Result<f64> {
    pop.require_positive_mean()?;
    match scheme {
        Scheme::Ftp => Ok(pop.n / pop.kbar),
        Scheme::Fti => {
            if m > 0.0 {
                Ok(m / pop.kbar * constants::LN2)
            } else {
                Err(Error::InvalidParams(format!("m must be positive, got {m}")))
            }
        }
        Scheme::Rp => Ok(1.0 / pop.kbar),
    }
}

/// Continuous optimal pool count.
///
/// FTP and RP share one expression once `b = n/k` (or `a = 1/k`) is
/// substituted. FTI uses `(k / ln^2 2) ln(((n-k)/k) ln^2 2)` for either rule.
pub fn optimal_m(inst: &ProblemInstance, scheme: Scheme, rule: PoolCountRule) -> Result<f64> {
    pool_count_at(Population::from(inst), scheme, rule)
}

fn pool_count_at(pop: Population, scheme: Scheme, rule: PoolCountRule) -> Result<f64> {
    pop.require_positive_mean()?;
    let Population { n, kbar: k } = pop;
    if n - k <= 0.0 {
        return Err(Error::Infeasible(format!("no uninfected individuals (n={n}, k={k})")));
    }
    let m = match (scheme, rule) {
        (Scheme::Ftp | Scheme::Rp, PoolCountRule::ExactStationary) => {
            let base = 1.0 - 1.0 / (constants::E * k);
            if base <= 0.0 {
                return Err(Error::Infeasible(format!("k = {k} is below 1/e")));
            }
            let log_base = base.ln();
            (-1.0 / ((n - k) * log_base)).ln() / log_base
        }
        (Scheme::Ftp | Scheme::Rp, PoolCountRule::PaperApprox) => {
            constants::E * k * ((n - k) / k).ln() - constants::E * k
        }
        (Scheme::Fti, _) => k / constants::LN2_SQ * ((n - k) / k * constants::LN2_SQ).ln(),
    };
    if m.is_finite() && m > 0.0 {
        Ok(m)
    } else {
        Err(Error::Infeasible(format!(
            "optimal pool count is not positive for n={n}, k={k} ({scheme})"
        )))
    }
}

/// Expected tests at the continuous optimum, in closed form.
///
/// FTP/RP: `k + e k ln((n-k)/k)`. FTI: `c1 k + c2 k ln((n-k)/k)` with the
/// coefficients from [`constants`].
pub fn closed_form_expected_tests(inst: &ProblemInstance, scheme: Scheme) -> Result<f64> {
    closed_form_at(Population::from(inst), scheme)
}

fn closed_form_at(pop: Population, scheme: Scheme) -> Result<f64> {
    pop.require_positive_mean()?;
    let Population { n, kbar: k } = pop;
    if n - k <= 0.0 {
        return Err(Error::Infeasible(format!("no uninfected individuals (n={n}, k={k})")));
    }
    let log_ratio = ((n - k) / k).ln();
    Ok(match scheme {
        Scheme::Ftp | Scheme::Rp => k + constants::E * k * log_ratio,
        Scheme::Fti => constants::fti_linear_coeff() * k + constants::fti_log_coeff() * k * log_ratio,
    })
}

/// Continuous optimum `(m*, secondary*)` for `scheme`.
pub fn continuous_optimum(inst: &ProblemInstance, scheme: Scheme, rule: PoolCountRule) -> Result<DesignParams> {
    continuous_at(Population::from(inst), scheme, rule)
}

fn continuous_at(pop: Population, scheme: Scheme, rule: PoolCountRule) -> Result<DesignParams> {
    let m = pool_count_at(pop, scheme, rule)?;
    let secondary = secondary_at(pop, scheme, m)?;
    Ok(DesignParams::new(scheme, m, secondary))
}

/// Rounds a continuous optimum to a realizable design.
///
/// Pool counts `round(m*) - 2 ..= round(m*) + 2` (at least 1) are tried, each
/// with the floor and ceiling of the secondary optimum recomputed for that
/// pool count (`a` stays real). The candidate with the lowest
/// [`Form::PaperApprox`] expected total wins; ties go to the smaller `m`, then
/// the smaller secondary.
pub fn integer_refine(inst: &ProblemInstance, continuous: &DesignParams) -> Result<DesignParams> {
    refine_at(Population::from(inst), continuous)
}

fn refine_at(pop: Population, continuous: &DesignParams) -> Result<DesignParams> {
    let scheme = continuous.scheme;
    let center = continuous.m.round() as i64;
    let mut best: Option<(f64, DesignParams)> = None;
    for m in (center - 2).max(1)..=(center + 2).max(1) {
        let m = m as f64;
        let target = secondary_at(pop, scheme, m)?;
        let mut candidates = match scheme {
            Scheme::Ftp => vec![target.floor().clamp(1.0, pop.n), target.ceil().clamp(1.0, pop.n)],
            Scheme::Fti => vec![target.floor().clamp(1.0, m), target.ceil().clamp(1.0, m)],
            Scheme::Rp => vec![target.min(1.0)],
        };
        candidates.dedup();
        for secondary in candidates {
            let params = DesignParams::new(scheme, m, secondary);
            let total = predict(pop, &params, Form::PaperApprox)?.expected_total_tests;
            // Strict comparison keeps the earlier (smaller) candidate on ties.
            if best.as_ref().is_none_or(|(t, _)| total < *t) {
                best = Some((total, params));
            }
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::Infeasible("no candidate designs".into()))
}

/// Continuous optimum followed by [`integer_refine`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizedDesign {
    pub continuous: DesignParams,
    pub realized: DesignParams,
}

pub fn optimize(inst: &ProblemInstance, scheme: Scheme, rule: PoolCountRule) -> Result<OptimizedDesign> {
    optimize_at(Population::from(inst), scheme, rule)
}

fn optimize_at(pop: Population, scheme: Scheme, rule: PoolCountRule) -> Result<OptimizedDesign> {
    let continuous = continuous_at(pop, scheme, rule)?;
    let realized = refine_at(pop, &continuous)?;
    Ok(OptimizedDesign { continuous, realized })
}

/// Design optimized as if `k_est` individuals were infected, in the same
/// population of `n`.
pub fn design_for_estimate(n: u64, scheme: Scheme, k_est: f64) -> Result<OptimizedDesign> {
    check_estimate(k_est)?;
    optimize_at(
        Population {
            n: n as f64,
            kbar: k_est,
        },
        scheme,
        PoolCountRule::ExactStationary,
    )
}

fn check_estimate(k_est: f64) -> Result<()> {
    if k_est.is_finite() && k_est > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "k estimate must be positive, got {k_est}"
        )))
    }
}

/// Ratio of the expected tests of a design optimized for `k_est` to those of
/// a design optimized for the true mean, both evaluated at the true mean
/// with [`Form::PaperApprox`] and integer-refined designs.
pub fn misspecification_inflation(inst_true: &ProblemInstance, scheme: Scheme, k_est: f64) -> Result<f64> {
    let truth = Population::from(inst_true);
    let misfit = design_for_estimate(inst_true.n(), scheme, k_est)?.realized;
    let fit = optimize_at(truth, scheme, PoolCountRule::ExactStationary)?.realized;
    let misfit_total = predict(truth, &misfit, Form::PaperApprox)?.expected_total_tests;
    let fit_total = predict(truth, &fit, Form::PaperApprox)?.expected_total_tests;
    Ok(misfit_total / fit_total)
}

/// As [`misspecification_inflation`] but on the continuous optima, where the
/// ratio is never below one.
pub fn misspecification_inflation_continuous(inst_true: &ProblemInstance, scheme: Scheme, k_est: f64) -> Result<f64> {
    check_estimate(k_est)?;
    let truth = Population::from(inst_true);
    let est = Population {
        n: truth.n,
        kbar: k_est,
    };
    let misfit = continuous_at(est, scheme, PoolCountRule::ExactStationary)?;
    let fit = continuous_at(truth, scheme, PoolCountRule::ExactStationary)?;
    let misfit_total = predict(truth, &misfit, Form::PaperApprox)?.expected_total_tests;
    let fit_total = predict(truth, &fit, Form::PaperApprox)?.expected_total_tests;
    Ok(misfit_total / fit_total)
}

/// The per-pool objective each optimizer minimizes, for a fixed instance.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveCurve {
    pub scheme: Scheme,
    n: f64,
    kbar: f64,
    m: f64,
}

impl ObjectiveCurve {
    /// `m` only matters for FTI.
    pub fn new(inst: &ProblemInstance, scheme: Scheme, m: f64) -> Self {
        Self {
            scheme,
            n: inst.n() as f64,
            kbar: inst.kbar(),
            m,
        }
    }

    /// `G(b) = 1 - (b/n) e^{-kb/n}`, `f(d) = (1 - e^{-kd/m})^d` or
    /// `G(a) = 1 - a e^{-ka}`.
    pub fn objective(&self, secondary: f64) -> f64 {
        let k = self.kbar;
        match self.scheme {
            Scheme::Ftp => 1.0 - secondary / self.n * (-k * secondary / self.n).exp(),
            Scheme::Fti => (1.0 - (-k * secondary / self.m).exp()).powf(secondary),
            Scheme::Rp => 1.0 - secondary * (-k * secondary).exp(),
        }
    }

    /// `y = m / k`
    pub fn normalized_pool_count(&self, m: f64) -> f64 {
        m / self.kbar
    }

    /// `g(y) = 1 + y + ((n-k)/k) beta^y`; the optimal FTI expected total is
    /// `k g(m/k)`.
    pub fn normalized_objective(&self, y: f64) -> f64 {
        1.0 + y + (self.n - self.kbar) / self.kbar * constants::beta().powf(y)
    }
}
