//! SRJ schemes: relaxation factors, the scheme-level ladder, and the order in
//! which a cycle applies its factors.

use std::sync::OnceLock;

use crate::chebyshev::{cheb_roots, lambda_star, AmplificationPolynomial};
use crate::{Error, Result};

/// Longest scheme accepted by [`generate_srj_scheme`].
pub const MAX_SCHEME_LENGTH: usize = 10_000;

/// Scheme length `M` for levels `0..=24`.
pub const LEVEL_TABLE: [usize; 25] = [
    1, 2, 3, 5, 7, 10, 14, 19, 26, 35, 47, 63, 84, 111, 147, 194, 256, 338, 446, 589, 778, 1027,
    1356, 1790, 2362,
];

/// Highest scheme level.
pub const MAX_LEVEL: usize = LEVEL_TABLE.len() - 1;

/// One cycle's worth of relaxation factors.
///
/// `omegas` are stored in root order (descending Chebyshev roots, so
/// descending factors); `application_order` is the permutation a cycle
/// follows.
#[derive(Debug, Clone, PartialEq)]
pub struct SrjScheme {
    pub m: usize,
    pub omegas: Vec<f64>,
    pub application_order: Vec<usize>,
    pub level: Option<usize>,
}

impl SrjScheme {
    fn from_omegas(omegas: Vec<f64>, level: Option<usize>) -> Self {
        let application_order = order_for_stability(&omegas);
        Self {
            m: omegas.len(),
            omegas,
            application_order,
            level,
        }
    }

    /// Factors in application order.
    pub fn ordered(&self) -> impl Iterator<Item = f64> + '_ {
        self.application_order.iter().map(|&j| self.omegas[j])
    }

    /// Position of each factor within the application order.
    pub fn order_positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.m];
        for (p, &j) in self.application_order.iter().enumerate() {
            pos[j] = p;
        }
        pos
    }

    /// `prod_i (1 - w_i + w_i lam)`, evaluated in application order.
    pub fn amplification(&self, lam: f64) -> f64 {
        self.ordered().map(|w| 1.0 - w + w * lam).product()
    }
}

/// The degree-`m` SRJ scheme: `w_j = (l* + 1) / (2 (l* - x_j))` over the
/// Chebyshev roots `x_j`.
pub fn generate_srj_scheme(m: usize) -> Result<SrjScheme> {
    if m == 0 || m > MAX_SCHEME_LENGTH {
        return Err(Error::SchemeLength(m));
    }
    let ls = lambda_star(m);
    let omegas = cheb_roots(m)?
        .into_iter()
        .map(|x| (ls + 1.0) / (2.0 * (ls - x)))
        .collect();
    let level = LEVEL_TABLE.iter().position(|&lm| lm == m);
    Ok(SrjScheme::from_omegas(omegas, level))
}

/// Chebyshev scheme on an explicit Jacobi-eigenvalue interval.
///
/// The Chebyshev roots are mapped affinely onto `[lam_lo, lam_hi]` and each
/// mapped root `r` contributes `w = 1 / (1 - r)`.
pub fn generate_cjm_scheme(m: usize, lam_lo: f64, lam_hi: f64) -> Result<SrjScheme> {
    if m == 0 || m > MAX_SCHEME_LENGTH {
        return Err(Error::SchemeLength(m));
    }
    if !(lam_lo >= -1.0 && lam_lo < lam_hi && lam_hi < 1.0) {
        return Err(Error::Interval {
            lo: lam_lo,
            hi: lam_hi,
        });
    }
    let mid = 0.5 * (lam_hi + lam_lo);
    let half = 0.5 * (lam_hi - lam_lo);
    let omegas = cheb_roots(m)?
        .into_iter()
        .map(|x| 1.0 / (1.0 - (mid + half * x)))
        .collect();
    Ok(SrjScheme::from_omegas(omegas, None))
}

/// `G_M'(1)`: how hard the scheme pulls eigenvalues near 1 away from 1.
pub fn stiffness_slope(m: usize) -> f64 {
    AmplificationPolynomial::new(m).slope_at_one()
}

/// Order in which a cycle applies its factors.
///
/// Each step applies the factor whose root sits where the running product
/// `prod |1 - w + w lam|` of the factors already applied is currently
/// largest, i.e. it removes the error mode that has been damped least so far.
/// The running product is tracked at the roots themselves
/// (`lam_j = 1 - 1/w_j`) in log space. The first step sees a flat product,
/// so ties go to the larger factor. This is a Leja ordering of the roots.
pub fn order_for_stability(omegas: &[f64]) -> Vec<usize> {
    let m = omegas.len();
    let roots: Vec<f64> = omegas.iter().map(|w| 1.0 - 1.0 / w).collect();
    let mut log_prod = vec![0.0f64; m];
    let mut used = vec![false; m];
    let mut order = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<usize> = None;
        for j in (0..m).filter(|&j| !used[j]) {
            best = match best {
                None => Some(j),
                Some(b) => {
                    let better = log_prod[j] > log_prod[b]
                        || (log_prod[j] == log_prod[b] && omegas[j] > omegas[b]);
                    Some(if better { j } else { b })
                }
            };
        }
        let pick = best.expect("an unused factor remains");
        used[pick] = true;
        order.push(pick);
        let w = omegas[pick];
        for j in (0..m).filter(|&j| !used[j]) {
            log_prod[j] += (1.0 - w + w * roots[j]).abs().ln();
        }
    }
    order
}

/// `(level, M)` pairs of the scheme ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeLevelTable {
    pub levels: Vec<(usize, usize)>,
}

impl SchemeLevelTable {
    /// The pinned 25-level ladder used by the solver.
    pub fn standard() -> Self {
        Self {
            levels: LEVEL_TABLE.iter().copied().enumerate().collect(),
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.levels.iter().map(|&(_, m)| m).collect()
    }

    pub fn m_for_level(&self, level: usize) -> Option<usize> {
        self.levels.get(level).map(|&(_, m)| m)
    }
}

/// Greedy stiffness-slope filter: starting from `M = 1`, admit the smallest
/// `M` whose [`stiffness_slope`] is at least `growth` times that of the level
/// admitted before it.
pub fn build_level_table(max_level: usize, growth: f64) -> Result<SchemeLevelTable> {
    if max_level > 30 {
        return Err(Error::Invalid(format!("max_level {max_level} > 30")));
    }
    if !(growth > 1.0) {
        return Err(Error::Invalid(format!("growth {growth} must exceed 1")));
    }
    let mut levels = vec![(0, 1)];
    let mut prev = stiffness_slope(1);
    let mut m = 1;
    while levels.len() <= max_level {
        m += 1;
        let s = stiffness_slope(m);
        if s >= growth * prev {
            levels.push((levels.len(), m));
            prev = s;
        }
    }
    Ok(SchemeLevelTable { levels })
}

/// The scheme of a ladder level, generated once per process.
pub fn level_scheme(level: usize) -> Result<&'static SrjScheme> {
    static CACHE: [OnceLock<SrjScheme>; LEVEL_TABLE.len()] = [const { OnceLock::new() }; 25];
    let cell = CACHE.get(level).ok_or(Error::Level(level, MAX_LEVEL))?;
    Ok(cell.get_or_init(|| {
        generate_srj_scheme(LEVEL_TABLE[level]).expect("ladder lengths are in range")
    }))
}
