//! Generalized stochastic systems on a finite configuration space.
//!
//! Configurations are indexed from zero. Transition matrices are column-stochastic:
//! entry `(i, j)` is the probability of configuration `i` at time `t` given
//! configuration `j` at time zero.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, RMatrix};
use crate::random::rng_from_seed;

/// Absolute tolerance for non-negativity and normalization on construction.
pub const PROB_TOL: f64 = 1e-12;

/// Condition number above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// True iff every entry is `>= -tol` and every column sums to `1 +- tol`.
pub fn is_column_stochastic(m: &RMatrix, tol: f64) -> bool {
    m.iter().all(|&x| x >= -tol && x.is_finite())
        && m.column_iter().all(|col| (col.sum() - 1.0).abs() <= tol)
}

/// Column sums that deviate from one by more than `tol`, with their sums.
pub fn bad_columns(m: &RMatrix, tol: f64) -> Vec<(usize, f64)> {
    m.column_iter()
        .enumerate()
        .filter_map(|(j, col)| {
            let sum = col.sum();
            let negative = col.iter().any(|&x| x < -tol);
            ((sum - 1.0).abs() > tol || negative).then_some((j, sum))
        })
        .collect()
}

/// Inverse of a square real matrix with its 2-norm condition number.
pub fn inverse_with_condition(m: &RMatrix) -> Result<(RMatrix, f64)> {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::Singular { condition });
    }
    let inv = m.clone().try_inverse().ok_or(Error::Singular { condition })?;
    Ok((inv, condition))
}

/// An `n x n` column-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    gamma: RMatrix,
}

impl StochasticMatrix {
    pub fn new(gamma: RMatrix) -> Result<Self> {
        if gamma.nrows() != gamma.ncols() || gamma.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "stochastic matrix must be square, got {}x{}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        if let Some((j, sum)) = bad_columns(&gamma, PROB_TOL).first() {
            return Err(Error::InvalidProbability(format!(
                "column {j} is not a probability vector (sum {sum:.17})"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            gamma: RMatrix::identity(n, n),
        }
    }

    /// Permutation matrix sending configuration `j` to `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut gamma = RMatrix::zeros(n, n);
        for (j, &i) in perm.iter().enumerate() {
            if i >= n {
                return Err(Error::OutOfRange { index: i, dim: n });
            }
            gamma[(i, j)] = 1.0;
        }
        Self::new(gamma)
    }

    /// The sinusoidal 2x2 family `[[cos^2 wt, sin^2 wt], [sin^2 wt, cos^2 wt]]`.
    pub fn sinusoidal(omega_t: f64) -> Self {
        let (s, co) = omega_t.sin_cos();
        Self {
            gamma: RMatrix::from_row_slice(2, 2, &[co * co, s * s, s * s, co * co]),
        }
    }

    /// The Gaussian-decay 2x2 family with diagonal `exp(-t^2 / tau^2)`.
    pub fn exponential(t: f64, tau: f64) -> Self {
        let stay = (-(t * t) / (tau * tau)).exp();
        Self {
            gamma: RMatrix::from_row_slice(2, 2, &[stay, 1.0 - stay, 1.0 - stay, stay]),
        }
    }

    pub fn n(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.gamma
    }

    pub fn into_matrix(self) -> RMatrix {
        self.gamma
    }

    pub fn to_complex(&self) -> CMatrix {
        self.gamma.map(|x| c(x, 0.0))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gamma[(i, j)]
    }

    /// Column `j` as the distribution at time `t` conditioned on `j` at time zero.
    pub fn column(&self, j: usize) -> Result<ProbabilityVector> {
        if j >= self.n() {
            return Err(Error::OutOfRange { index: j, dim: self.n() });
        }
        ProbabilityVector::new(self.gamma.column(j).iter().copied().collect())
    }

    /// Composition `self * rhs`, which stays column-stochastic.
    pub fn compose(&self, rhs: &StochasticMatrix) -> Result<StochasticMatrix> {
        if self.n() != rhs.n() {
            return Err(Error::Dimension(format!(
                "cannot compose {0}x{0} with {1}x{1}",
                self.n(),
                rhs.n()
            )));
        }
        StochasticMatrix::new(&self.gamma * &rhs.gamma)
    }

    pub fn power(&self, k: u32) -> StochasticMatrix {
        let mut out = RMatrix::identity(self.n(), self.n());
        for _ in 0..k {
            out = &self.gamma * out;
        }
        StochasticMatrix { gamma: out }
    }

    pub fn row_sum_residual(&self) -> f64 {
        self.gamma
            .row_iter()
            .map(|row| (row.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.row_sum_residual() <= tol
    }

    /// True iff every entry is within `tol` of 0 or 1 and each column has one 1.
    pub fn is_permutation(&self, tol: f64) -> bool {
        self.gamma.column_iter().all(|col| {
            let ones = col.iter().filter(|&&x| (x - 1.0).abs() <= tol).count();
            let zeros = col.iter().filter(|&&x| x.abs() <= tol).count();
            ones == 1 && ones + zeros == col.len()
        }) && self.gamma.row_iter().all(|row| row.iter().any(|&x| (x - 1.0).abs() <= tol))
    }
}

/// A probability distribution over configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    p: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Dimension("probability vector must be non-empty".into()));
        }
        if let Some((i, &x)) = p.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < -PROB_TOL) {
            return Err(Error::InvalidProbability(format!("entry {i} is {x}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidProbability(format!(
                "entries sum to {sum:.17}, not 1"
            )));
        }
        Ok(Self { p })
    }

    /// Point mass on configuration `j`.
    pub fn point(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::OutOfRange { index: j, dim: n });
        }
        let mut p = vec![0.0; n];
        p[j] = 1.0;
        Ok(Self { p })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn max_abs_diff(&self, other: &ProbabilityVector) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        csv_index_value(&self.p)
    }
}

/// Configuration-space random variable with magnitudes `a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    magnitudes: Vec<f64>,
}

impl RandomVariable {
    pub fn new(magnitudes: Vec<f64>) -> Result<Self> {
        if magnitudes.is_empty() || magnitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::Precondition(
                "random variable magnitudes must be finite and non-empty".into(),
            ));
        }
        Ok(Self { magnitudes })
    }

    pub fn n(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// The diagonal matrix `sum_i a_i P_i`.
    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n(),
            self.magnitudes.iter().map(|&a| c(a, 0.0)),
        ))
    }
}

/// `p(t) = Gamma(t) p(0)`.
pub fn propagate(gamma: &StochasticMatrix, p0: &ProbabilityVector) -> Result<ProbabilityVector> {
    if gamma.n() != p0.n() {
        return Err(Error::Dimension(format!(
            "transition matrix is {0}x{0} but distribution has {1} entries",
            gamma.n(),
            p0.n()
        )));
    }
    let p = nalgebra::DVector::from_column_slice(p0.as_slice());
    ProbabilityVector::new((gamma.matrix() * p).iter().copied().collect())
}

/// `<A> = sum_i a_i p_i`.
pub fn expectation(a: &RandomVariable, p: &ProbabilityVector) -> Result<f64> {
    if a.n() != p.n() {
        return Err(Error::Dimension(format!(
            "random variable has {} magnitudes but distribution has {} entries",
            a.n(),
            p.n()
        )));
    }
    Ok(a.magnitudes.iter().zip(p.as_slice()).map(|(a, p)| a * p).sum())
}

/// Outcome of a divisibility test at a pair of times.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisibilityCheck {
    pub divisible: bool,
    /// `Gamma(t) Gamma(t')^{-1}`, which may leave the stochastic matrices.
    pub candidate: RMatrix,
    pub condition: f64,
}

/// Decides whether `Gamma(t) = X Gamma(t')` for some stochastic `X`.
///
/// For invertible `Gamma(t')` the only linear solution is `Gamma(t) Gamma(t')^{-1}`,
/// so divisibility reduces to that candidate being column-stochastic. A singular
/// `Gamma(t')` is reported as [`Error::Singular`].
pub fn check_divisible_at(
    gamma_t: &StochasticMatrix,
    gamma_tp: &StochasticMatrix,
    tol: f64,
) -> Result<DivisibilityCheck> {
    if gamma_t.n() != gamma_tp.n() {
        return Err(Error::Dimension("transition matrices differ in size".into()));
    }
    let (inv, condition) = inverse_with_condition(gamma_tp.matrix())?;
    let candidate = gamma_t.matrix() * inv;
    Ok(DivisibilityCheck {
        divisible: is_column_stochastic(&candidate, tol),
        candidate,
        condition,
    })
}

/// Whether the inverse of `gamma` is itself stochastic.
///
/// A stochastic matrix with a stochastic inverse must be a permutation; a
/// non-permutation passing the test is reported as [`Error::Internal`].
pub fn stochastic_inverse_is_permutation(gamma: &StochasticMatrix, tol: f64) -> Result<bool> {
    let (inv, _) = inverse_with_condition(gamma.matrix())?;
    let stochastic = is_column_stochastic(&inv, tol);
    if stochastic && !gamma.is_permutation(tol) {
        return Err(Error::Internal(format!(
            "non-permutation stochastic matrix with stochastic inverse: {}",
            gamma.matrix()
        )));
    }
    Ok(stochastic)
}

/// Histogram of `draws` i.i.d. samples from `p`, using a seeded ChaCha8 stream.
pub fn sample_distribution(p: &ProbabilityVector, draws: u64, seed: u64) -> Result<Vec<u64>> {
    if draws == 0 {
        return Err(Error::Precondition("draws must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(p.n());
    let mut acc = 0.0;
    for &x in p.as_slice() {
        acc += x.max(0.0);
        cumulative.push(acc);
    }
    let last_supported = p
        .as_slice()
        .iter()
        .rposition(|&x| x > 0.0)
        .unwrap_or(p.n() - 1);
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0u64; p.n()];
    for _ in 0..draws {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cumulative
            .iter()
            .position(|&cum| u < cum)
            .unwrap_or(last_supported);
        counts[k] += 1;
    }
    Ok(counts)
}

/// Samples configurations at time `t` given configuration `j0` at time zero.
pub fn sample_marginal(
    gamma: &StochasticMatrix,
    j0: usize,
    draws: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    let column = gamma.column(j0)?;
    sample_distribution(&column, draws, seed)
}

/// Formats a real number with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with header `index,value` and one row per configuration.
pub fn csv_index_value(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", format_real(*v)));
    }
    out
}

/// Histogram CSV with header `index,count`.
pub fn csv_histogram(counts: &[u64]) -> String {
    let mut out = String::from("index,count\n");
    for (i, n) in counts.iter().enumerate() {
        out.push_str(&format!("{i},{n}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{self, rng_from_seed};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn half() -> StochasticMatrix {
        StochasticMatrix::new(RMatrix::from_element(2, 2, 0.5)).unwrap()
    }

    fn pv(p: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_columns() {
        let bad = RMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.4, 0.5]);
        assert!(matches!(StochasticMatrix::new(bad), Err(Error::InvalidProbability(_))));
        let negative = RMatrix::from_row_slice(2, 2, &[1.1, 0.0, -0.1, 1.0]);
        assert!(StochasticMatrix::new(negative).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
    }

    #[test]
    fn propagate_examples() {
        let p0 = pv(&[0.3, 0.7]);
        assert_eq!(propagate(&StochasticMatrix::identity(2), &p0).unwrap(), p0);

        let p = propagate(&half(), &pv(&[1.0, 0.0])).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.5]);

        let p = propagate(&StochasticMatrix::sinusoidal(PI / 3.0), &pv(&[1.0, 0.0])).unwrap();
        assert!((p.as_slice()[0] - 0.25).abs() < 1e-15);
        assert!((p.as_slice()[1] - 0.75).abs() < 1e-15);

        assert!(matches!(
            propagate(&half(), &pv(&[1.0, 0.0, 0.0])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn expectation_examples() {
        let ones = RandomVariable::new(vec![1.0, 1.0]).unwrap();
        assert!((expectation(&ones, &pv(&[0.2, 0.8])).unwrap() - 1.0).abs() < 1e-15);
        let spin = RandomVariable::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(expectation(&spin, &pv(&[0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(expectation(&spin, &pv(&[0.25, 0.75])).unwrap(), -0.5);
        assert!(expectation(&spin, &pv(&[1.0])).is_err());
    }

    #[test]
    fn divisibility_examples() {
        let swap = StochasticMatrix::permutation(&[1, 0]).unwrap();
        let check = check_divisible_at(&swap, &swap, 1e-12).unwrap();
        assert!(check.divisible);
        assert_eq!(check.candidate, RMatrix::identity(2, 2));

        // sinusoidal family at wt = pi/2 against wt' = pi/4: Gamma(t') = all 1/2 is singular
        let sing = check_divisible_at(
            &StochasticMatrix::sinusoidal(PI / 2.0),
            &StochasticMatrix::sinusoidal(PI / 4.0),
            1e-12,
        );
        assert!(matches!(sing, Err(Error::Singular { .. })));

        // wt' = pi/6: brute-force 2x2 inverse of [[3/4, 1/4], [1/4, 3/4]] is [[3/2, -1/2], [-1/2, 3/2]]
        let check = check_divisible_at(
            &StochasticMatrix::sinusoidal(PI / 2.0),
            &StochasticMatrix::sinusoidal(PI / 6.0),
            1e-12,
        )
        .unwrap();
        assert!(!check.divisible);
        let expected = RMatrix::from_row_slice(2, 2, &[-0.5, 1.5, 1.5, -0.5]);
        assert!(crate::linalg::max_abs_diff_real(&check.candidate, &expected) < 1e-14);

        let g = StochasticMatrix::new(random::stochastic(4, &mut rng_from_seed(3))).unwrap();
        let check = check_divisible_at(&g, &StochasticMatrix::identity(4), 1e-12).unwrap();
        assert!(check.divisible);
        assert_eq!(&check.candidate, g.matrix());
    }

    #[test]
    fn inverse_lemma_examples() {
        let perm = StochasticMatrix::permutation(&[2, 0, 1]).unwrap();
        assert!(stochastic_inverse_is_permutation(&perm, 1e-12).unwrap());
        assert!(matches!(
            stochastic_inverse_is_permutation(&half(), 1e-12),
            Err(Error::Singular { .. })
        ));
        let g = StochasticMatrix::sinusoidal(0.3);
        assert!(!stochastic_inverse_is_permutation(&g, 1e-12).unwrap());
    }

    #[test]
    fn sampling_examples() {
        let counts = sample_marginal(&StochasticMatrix::identity(3), 0, 100, 1).unwrap();
        assert_eq!(counts, vec![100, 0, 0]);

        let draws = 100_000u64;
        let sigma = (draws as f64 * 0.25).sqrt();
        let counts = sample_marginal(&half(), 1, draws, 2024).unwrap();
        for &k in &counts {
            assert!((k as f64 - 50_000.0).abs() <= 3.0 * sigma);
        }

        let g = StochasticMatrix::sinusoidal(PI / 3.0);
        let counts = sample_marginal(&g, 0, draws, 17).unwrap();
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        assert!((counts[0] as f64 - 25_000.0).abs() <= 3.0 * sigma);

        assert_eq!(
            sample_marginal(&g, 0, draws, 17).unwrap(),
            counts,
            "same seed must reproduce the histogram"
        );
        assert!(matches!(sample_marginal(&g, 2, 10, 0), Err(Error::OutOfRange { .. })));
        assert!(sample_marginal(&g, 0, 0, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            pv(&[0.25, 0.75]).to_csv(),
            "index,value\n0,2.5000000000000000e-1\n1,7.5000000000000000e-1\n"
        );
        assert_eq!(csv_histogram(&[3, 4]), "index,count\n0,3\n1,4\n");
    }

    proptest! {
        #[test]
        fn propagate_stays_on_simplex(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = rng_from_seed(seed);
            let g = StochasticMatrix::new(random::stochastic(n, &mut rng)).unwrap();
            let p = pv(&random::probability(n, &mut rng));
            let out = propagate(&g, &p).unwrap();
            prop_assert!(out.as_slice().iter().all(|&x| x >= 0.0));
            prop_assert!((out.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn products_are_stochastic(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = rng_from_seed(seed);
            let a = StochasticMatrix::new(random::stochastic(n, &mut rng)).unwrap();
            let b = StochasticMatrix::new(random::stochastic(n, &mut rng)).unwrap();
            prop_assert!(a.compose(&b).is_ok());
        }

        #[test]
        fn constructed_factorizations_are_divisible(seed in any::<u64>(), n in 2usize..5) {
            let mut rng = rng_from_seed(seed);
            let x = StochasticMatrix::new(random::stochastic(n, &mut rng)).unwrap();
            let gtp = StochasticMatrix::new(random::stochastic(n, &mut rng)).unwrap();
            let gt = x.compose(&gtp).unwrap();
            if let Ok(check) = check_divisible_at(&gt, &gtp, 1e-9) {
                if check.condition < 1e6 {
                    prop_assert!(check.divisible, "condition {}", check.condition);
                }
            }
        }
    }
}
