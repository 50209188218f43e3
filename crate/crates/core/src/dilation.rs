//! Dilations: evolution operators on a base space tensored with an internal space,
//! their dictionary, block-wise gauge freedom, the real two-dimensional
//! representation, and the Stinespring lift of a Kraus set to a unitary on `N^3`
//! dimensions.

use crate::correspondence::{EvolutionOperator, KrausSet};
use crate::error::{Error, Result};
use crate::linalg::{
    c, complete_isometry, configuration_projector, ensure_unitary, identity, is_unitary,
    max_abs_diff_real, partial_trace, tensor, trace, CMatrix, Keep, Pvm, RMatrix, DEFAULT_TOL,
};
use crate::stochastic::StochasticMatrix;

/// Tolerance on the dilated dictionary reproducing the input transition matrix.
pub const DILATION_TOL: f64 = 1e-10;

/// An evolution operator on `N x D` with base index major: row `i * D + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedSystem {
    base_dim: usize,
    internal_dim: usize,
    gamma_label: usize,
    internal_pvm: Pvm,
    evolution: CMatrix,
}

impl DilatedSystem {
    pub fn new(evolution: CMatrix, base_dim: usize, internal_pvm: Pvm, gamma_label: usize) -> Result<Self> {
        let internal_dim = internal_pvm.dim();
        check_dims(&evolution, base_dim, internal_dim)?;
        internal_pvm.projector(gamma_label)?;
        let sys = Self {
            base_dim,
            internal_dim,
            gamma_label,
            internal_pvm,
            evolution,
        };
        sys.gamma()?;
        Ok(sys)
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn internal_dim(&self) -> usize {
        self.internal_dim
    }

    pub fn gamma_label(&self) -> usize {
        self.gamma_label
    }

    pub fn evolution(&self) -> &CMatrix {
        &self.evolution
    }

    pub fn internal_pvm(&self) -> &Pvm {
        &self.internal_pvm
    }

    pub fn gamma(&self) -> Result<StochasticMatrix> {
        dilated_dictionary(&self.evolution, self.base_dim, &self.internal_pvm, self.gamma_label)
    }
}

fn check_dims(m: &CMatrix, n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 || m.nrows() != n * d || m.ncols() != n * d {
        return Err(Error::Dimension(format!(
            "{}x{} operator does not act on {n} x {d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `Gamma_ij = tr(tr_I(Theta~^† [P_i (x) 1] Theta~ [P_j (x) P_gamma]))`.
pub fn dilated_dictionary(theta: &CMatrix, base_dim: usize, internal_pvm: &Pvm, gamma_label: usize) -> Result<StochasticMatrix> {
    let d = internal_pvm.dim();
    check_dims(theta, base_dim, d)?;
    let p_gamma = internal_pvm.projector(gamma_label)?;
    let n = base_dim;
    let id_int = identity(d);
    let theta_dag = theta.adjoint();
    let mut gamma = RMatrix::zeros(n, n);
    for i in 0..n {
        let left = &theta_dag * tensor(&configuration_projector(n, i), &id_int) * theta;
        for j in 0..n {
            let inner = &left * tensor(&configuration_projector(n, j), p_gamma);
            let reduced = partial_trace(&inner, (n, d), Keep::First)?;
            gamma[(i, j)] = trace(&reduced).re;
        }
    }
    StochasticMatrix::new(gamma).map_err(|e| match e {
        Error::InvalidProbability(msg) => Error::InvalidProbability(format!(
            "dilated operator violates the column summation condition: {msg}"
        )),
        other => other,
    })
}

fn check_block_grid(blocks: &[Vec<CMatrix>], n: usize, d: usize) -> Result<()> {
    if blocks.len() != n || blocks.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension(format!("expected {n} x {n} blocks")));
    }
    for v in blocks.iter().flatten() {
        if v.shape() != (d, d) {
            return Err(Error::Dimension(format!("blocks must be {d}x{d}")));
        }
    }
    Ok(())
}

/// Replaces each `D x D` block `[Theta_ij]` with `V_(ij) [Theta_ij]`.
pub fn block_gauge(theta: &CMatrix, base_dim: usize, internal_dim: usize, v_blocks: &[Vec<CMatrix>]) -> Result<CMatrix> {
    let (n, d) = (base_dim, internal_dim);
    check_dims(theta, n, d)?;
    check_block_grid(v_blocks, n, d)?;
    for v in v_blocks.iter().flatten() {
        ensure_unitary(v, DEFAULT_TOL)?;
    }
    let mut out = theta.clone();
    for i in 0..n {
        for j in 0..n {
            let block = theta.view((i * d, j * d), (d, d));
            out.view_mut((i * d, j * d), (d, d)).copy_from(&(&v_blocks[i][j] * block));
        }
    }
    Ok(out)
}

/// Real `2N x 2N` form of a complex evolution operator, substituting
/// `a + bi -> [[a, -b], [b, a]]`.
pub fn realify(theta: &EvolutionOperator) -> Result<DilatedSystem> {
    let n = theta.n();
    let m = theta.matrix();
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(2 * i, 2 * j)] = c(z.re, 0.0);
            out[(2 * i, 2 * j + 1)] = c(-z.im, 0.0);
            out[(2 * i + 1, 2 * j)] = c(z.im, 0.0);
            out[(2 * i + 1, 2 * j + 1)] = c(z.re, 0.0);
        }
    }
    DilatedSystem::new(out, n, Pvm::configuration(2), 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StinespringResult {
    pub kraus_in: KrausSet,
    /// Unitary on `N^3` with row `(i, b, m)` at `i * N^2 + b * N + m`.
    pub unitary_out: CMatrix,
    pub ancilla_label: usize,
    /// `max |Gamma_dilated - sum_b |K_b|^2|`.
    pub residual: f64,
}

impl StinespringResult {
    pub fn system(&self) -> Result<DilatedSystem> {
        let n = self.kraus_in.n();
        DilatedSystem::new(self.unitary_out.clone(), n, Pvm::configuration(n * n), self.ancilla_label)
    }
}

/// Lifts `N` Kraus operators on `N` configurations to a unitary on `N^3`.
///
/// Column `(j, l)` with `l < N` sits at `j * N^2 + l` and carries
/// `K_{s_i(b), ij} delta_lm` in row `(i, b, m)`, where `s_i` swaps `0` and `i`. The
/// relabeling leaves every transition probability alone and makes the Kraus set of
/// the identity map to the identity. Gram-Schmidt completion columns fill the
/// remaining slots in ascending order.
pub fn stinespring_dilate(kraus: &KrausSet) -> Result<StinespringResult> {
    let n = kraus.n();
    if kraus.len() != n {
        return Err(Error::Precondition(format!(
            "Stinespring construction needs {n} Kraus operators, got {}",
            kraus.len()
        )));
    }
    let (n2, n3) = (n * n, n * n * n);
    let ops = kraus.operators();
    let mut v = CMatrix::zeros(n3, n2);
    for i in 0..n {
        for b in 0..n {
            let src = if b == 0 {
                i
            } else if b == i {
                0
            } else {
                b
            };
            for j in 0..n {
                let k = ops[src][(i, j)];
                for l in 0..n {
                    v[(i * n2 + b * n + l, j * n + l)] = k;
                }
            }
        }
    }
    let completed = complete_isometry(&v)?;
    let mut slots: Vec<usize> = (0..n)
        .flat_map(|j| (0..n).map(move |l| j * n2 + l))
        .collect();
    let used: std::collections::BTreeSet<usize> = slots.iter().copied().collect();
    slots.extend((0..n3).filter(|s| !used.contains(s)));
    let mut unitary = CMatrix::zeros(n3, n3);
    for (src, &dst) in slots.iter().enumerate() {
        unitary.set_column(dst, &completed.column(src));
    }
    if !is_unitary(&unitary, DILATION_TOL) {
        return Err(Error::Internal("completed dilation is not unitary".into()));
    }

    let mut target = RMatrix::zeros(n, n);
    for k in ops {
        target += k.map(|z| z.norm_sqr());
    }
    let ancilla_label = 0;
    let gamma = dilated_dictionary(&unitary, n, &Pvm::configuration(n2), ancilla_label)?;
    let residual = max_abs_diff_real(gamma.matrix(), &target);
    if residual > DILATION_TOL {
        return Err(Error::Internal(format!(
            "dilated dictionary misses the Kraus transition matrix by {residual:.3e}"
        )));
    }
    Ok(StinespringResult {
        kraus_in: kraus.clone(),
        unitary_out: unitary,
        ancilla_label,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{kraus_from_evolution, stochastic_from_evolution};
    use crate::linalg::{max_abs_diff, rotation};
    use crate::random::{self, rng_from_seed};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn product_dilation_reproduces_dictionary() {
        let theta = EvolutionOperator::new(random::unit_column_matrix(3, &mut rng_from_seed(3))).unwrap();
        let plain = stochastic_from_evolution(&theta).unwrap();
        for d in 1..=3 {
            let dilated = tensor(theta.matrix(), &identity(d));
            for g in 0..d {
                let gamma = dilated_dictionary(&dilated, 3, &Pvm::configuration(d), g).unwrap();
                assert!(max_abs_diff_real(gamma.matrix(), plain.matrix()) < 1e-14);
            }
        }
    }

    #[test]
    fn dictionary_rejects_bad_inputs() {
        let bad = CMatrix::from_element(4, 4, c(1.0, 0.0));
        assert!(matches!(
            dilated_dictionary(&bad, 2, &Pvm::configuration(2), 0),
            Err(Error::InvalidProbability(_))
        ));
        assert!(dilated_dictionary(&identity(5), 2, &Pvm::configuration(2), 0).is_err());
        assert!(dilated_dictionary(&identity(4), 2, &Pvm::configuration(2), 2).is_err());
    }

    #[test]
    fn block_gauge_examples() {
        let mut rng = rng_from_seed(17);
        let theta = tensor(&random::unitary(2, &mut rng), &identity(2));
        let pvm = Pvm::configuration(2);
        let before = dilated_dictionary(&theta, 2, &pvm, 1).unwrap();
        let ids = vec![vec![identity(2); 2]; 2];
        assert_eq!(block_gauge(&theta, 2, 2, &ids).unwrap(), theta);
        let phase = vec![vec![identity(2) * c(0.6, 0.8); 2]; 2];
        let after = dilated_dictionary(&block_gauge(&theta, 2, 2, &phase).unwrap(), 2, &pvm, 1).unwrap();
        assert!(max_abs_diff_real(before.matrix(), after.matrix()) < 1e-14);
        let bad = vec![vec![identity(2).scale(2.0); 2]; 2];
        assert!(matches!(block_gauge(&theta, 2, 2, &bad), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn realify_examples() {
        let real = EvolutionOperator::new(rotation(0.3)).unwrap();
        let sys = realify(&real).unwrap();
        assert!(max_abs_diff(&sys.evolution().view((0, 0), (2, 2)).into_owned(), &identity(2).scale(0.3f64.cos())) < 1e-16);

        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0)]));
        let sys = realify(&EvolutionOperator::new(diag).unwrap()).unwrap();
        let j = crate::linalg::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert_eq!(sys.evolution().view((0, 0), (2, 2)).into_owned(), j);
        assert_eq!(sys.evolution().view((2, 2), (2, 2)).into_owned(), identity(2));
    }

    #[test]
    fn stinespring_examples() {
        let id = stinespring_dilate(&kraus_from_evolution(&EvolutionOperator::identity(3))).unwrap();
        assert_eq!(id.unitary_out, identity(27));

        let rot = stinespring_dilate(&kraus_from_evolution(&EvolutionOperator::new(rotation(FRAC_PI_4)).unwrap())).unwrap();
        assert_eq!(rot.unitary_out.shape(), (8, 8));
        let gamma = rot.system().unwrap().gamma().unwrap();
        assert!(max_abs_diff_real(gamma.matrix(), &RMatrix::from_element(2, 2, 0.5)) < 1e-10);

        let theta = EvolutionOperator::new(random::unit_column_matrix(3, &mut rng_from_seed(4))).unwrap();
        let out = stinespring_dilate(&kraus_from_evolution(&theta)).unwrap();
        assert!(is_unitary(&out.unitary_out, 1e-10));
        assert!(out.residual < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn dilation_soundness(seed in any::<u64>(), n in 1usize..=4) {
            let theta = EvolutionOperator::new(random::unit_column_matrix(n, &mut rng_from_seed(seed))).unwrap();
            let out = stinespring_dilate(&kraus_from_evolution(&theta)).unwrap();
            let plain = stochastic_from_evolution(&theta).unwrap();
            let gamma = out.system().unwrap().gamma().unwrap();
            prop_assert!(max_abs_diff_real(gamma.matrix(), plain.matrix()) < 1e-10);
            prop_assert!(is_unitary(&out.unitary_out, 1e-10));
        }

        #[test]
        fn random_block_gauges_preserve_gamma(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=3) {
            let mut rng = rng_from_seed(seed);
            let theta = tensor(&random::unit_column_matrix(n, &mut rng), &identity(d));
            let blocks: Vec<Vec<CMatrix>> = (0..n).map(|_| (0..n).map(|_| random::unitary(d, &mut rng)).collect()).collect();
            let pvm = Pvm::configuration(d);
            let before = dilated_dictionary(&theta, n, &pvm, 0).unwrap();
            let after = dilated_dictionary(&block_gauge(&theta, n, d, &blocks).unwrap(), n, &pvm, 0).unwrap();
            prop_assert!(max_abs_diff_real(before.matrix(), after.matrix()) < 1e-12);
        }

        #[test]
        fn realify_commutes_with_dictionary(seed in any::<u64>(), n in 1usize..=4) {
            let mut rng = rng_from_seed(seed);
            for theta in [random::unit_column_matrix(n, &mut rng), random::unitary(n, &mut rng)] {
                let op = EvolutionOperator::new(theta.clone()).unwrap();
                let sys = realify(&op).unwrap();
                prop_assert!(sys.evolution().iter().all(|z| z.im == 0.0));
                let plain = stochastic_from_evolution(&op).unwrap();
                prop_assert!(max_abs_diff_real(sys.gamma().unwrap().matrix(), plain.matrix()) < 1e-12);
                prop_assert_eq!(is_unitary(sys.evolution(), 1e-10), is_unitary(&theta, 1e-10));
            }
        }
    }
}
