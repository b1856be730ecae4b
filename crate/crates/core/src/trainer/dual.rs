//! Dual problems of the weighted subproblems and the convex baselines.
//!
//! All duals are box-constrained QPs over blocks of length `n` whose Hessian
//! is built from the label-signed Gram matrix `G = D K D` plus diagonal
//! terms. [`BlockHessian`] evaluates columns on the fly so the `2n x 2n` (or
//! `4n x 4n`) matrix is never stored.
//!
//! # Weighted ε-AEN dual
//!
//! For weights `ω > 0` the subproblem
//! `min ½|w|² + Σ ω_i L(1 - y_i wᵀφ(x_i))` with `L` the ε-insensitive
//! asymmetric elastic net loss is written with slacks `ξ₊, ξ₋ >= 0`:
//!
//! ```text
//! ξ₊ >= 1 - ε - y wᵀφ,   ξ₋ >= y wᵀφ - 1 - ε/τ
//! cost  ω (p/2 ξ₊² + (1-p) ξ₊) + ω τ (p/2 ξ₋² + (1-p) ξ₋)
//! ```
//!
//! With multipliers `α, β` for the margin constraints and `γ₊, γ₋` for the
//! sign constraints on the slacks, the dual over `u = (α, β, γ₊, γ₋) >= 0` is
//! `min ½ uᵀHu - qᵀu` with `a = 1/(pω)`, `b = 1/(τpω)` and
//!
//! ```text
//!       | G + diag(a)   -G            diag(a)   0       |        | 1 - ε + (1-p)/p   |
//!   H = | -G            G + diag(b)   0         diag(b) |    q = | -1 - ε/τ + (1-p)/p|
//!       | diag(a)       0             diag(a)   0       |        | (1-p)/p           |
//!       | 0             diag(b)       0         diag(b) |        | (1-p)/p           |
//! ```
//!
//! The primal is recovered through `w = Σ y_i (α_i - β_i) φ(x_i)`, and the
//! optimal values satisfy `primal = -(qp objective) - Σ ω_i (1+τ)(1-p)²/(2p)`.
//!
//! [`DualForm::Printed`] keeps the two-block variant without the slack sign
//! constraints, `H = [[G + Ω⁻¹/p, -G], [-G, G + (2-τ)Ω⁻¹/p]]` with
//! `q = (1 + (1-p)/p - ε, -1 + τ(1-p)(2-τ)/p - ε/τ)`. It coincides with the
//! exact dual only when `p = 1` and `τ = 1`, and is retained for comparison.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossParams;
use crate::qp::{Hessian, QpProblem};

/// Label-signed kernel matrix `G_ij = y_i y_j K_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGram {
    n: usize,
    data: Vec<f64>,
}

impl SignedGram {
    pub fn new(kernel: &Array2<f64>, labels: &[i8]) -> Result<Self> {
        let n = labels.len();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: kernel.nrows(),
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = kernel[[i, j]];
                data.push(if labels[i] == labels[j] { k } else { -k });
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `G v`.
    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(g, x)| g * x).sum())
            .collect()
    }
}

/// One `n x n` block of a [`BlockHessian`].
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Zero,
    /// `±G`, plus an optional diagonal.
    Gram { negate: bool, diag: Option<Vec<f64>> },
    Diag(Vec<f64>),
}

impl Block {
    fn gram(diag: Option<Vec<f64>>) -> Self {
        Block::Gram { negate: false, diag }
    }

    fn neg_gram() -> Self {
        Block::Gram { negate: true, diag: None }
    }
}

/// Symmetric matrix assembled from `n x n` blocks over a shared [`SignedGram`].
#[derive(Debug, Clone)]
pub struct BlockHessian<'g> {
    gram: &'g SignedGram,
    blocks: Vec<Vec<Block>>,
}

impl<'g> BlockHessian<'g> {
    pub fn new(gram: &'g SignedGram, blocks: Vec<Vec<Block>>) -> Self {
        debug_assert!(blocks.iter().all(|row| row.len() == blocks.len()));
        Self { gram, blocks }
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    fn block_entry(&self, block: &Block, k: usize, l: usize) -> f64 {
        match block {
            Block::Zero => 0.0,
            Block::Diag(d) => {
                if k == l {
                    d[l]
                } else {
                    0.0
                }
            }
            Block::Gram { negate, diag } => {
                let g = self.gram.get(k, l);
                let v = if *negate { -g } else { g };
                match diag {
                    Some(d) if k == l => v + d[l],
                    _ => v,
                }
            }
        }
    }
}

impl Hessian for BlockHessian<'_> {
    fn dim(&self) -> usize {
        self.blocks.len() * self.gram.len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.gram.len();
        self.block_entry(&self.blocks[i / n][j / n], i % n, j % n)
    }

    fn axpy_column(&self, j: usize, scale: f64, out: &mut [f64]) {
        let n = self.gram.len();
        let (bc, l) = (j / n, j % n);
        for (br, row_blocks) in self.blocks.iter().enumerate() {
            let seg = &mut out[br * n..(br + 1) * n];
            match &row_blocks[bc] {
                Block::Zero => {}
                Block::Diag(d) => seg[l] += scale * d[l],
                Block::Gram { negate, diag } => {
                    // G is symmetric, so column l is row l
                    let grow = self.gram.row(l);
                    for (k, o) in seg.iter_mut().enumerate() {
                        let g = grow[k];
                        let v = if *negate { -g } else { g };
                        let v = match diag {
                            Some(d) if k == l => v + d[l],
                            _ => v,
                        };
                        *o += scale * v;
                    }
                }
            }
        }
    }
}

/// Which algebraic form of the weighted ε-AEN dual to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualForm {
    /// Four blocks `(α, β, γ₊, γ₋)` with nonnegative slacks.
    #[default]
    Exact,
    /// Two blocks `(α, β)` as printed in the original derivation.
    Printed,
}

impl DualForm {
    pub fn n_blocks(&self) -> usize {
        match self {
            DualForm::Exact => 4,
            DualForm::Printed => 2,
        }
    }
}

impl std::fmt::Display for DualForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DualForm::Exact => "exact",
            DualForm::Printed => "printed",
        })
    }
}

impl std::str::FromStr for DualForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(DualForm::Exact),
            "printed" => Ok(DualForm::Printed),
            other => Err(Error::InvalidParameter(format!("unknown dual form {other:?}"))),
        }
    }
}

/// A weighted ε-AEN subproblem: per-sample weights over a signed Gram matrix.
#[derive(Debug, Clone)]
pub struct WeightedSubproblem<'g> {
    pub omega: Vec<f64>,
    pub gram: &'g SignedGram,
}

impl<'g> WeightedSubproblem<'g> {
    pub fn new(omega: Vec<f64>, gram: &'g SignedGram) -> Result<Self> {
        if omega.len() != gram.len() {
            return Err(Error::DimensionMismatch {
                expected: gram.len(),
                got: omega.len(),
            });
        }
        if let Some(w) = omega.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("weights must be positive and finite, got {w}")));
        }
        Ok(Self { omega, gram })
    }
}

/// Builds the box QP of a weighted subproblem in the requested form.
pub fn assemble_weighted_dual<'g>(
    sub: &WeightedSubproblem<'g>,
    loss: &LossParams,
    form: DualForm,
) -> Result<QpProblem<BlockHessian<'g>>> {
    let n = sub.gram.len();
    let (p, tau, eps) = (loss.p, loss.tau, loss.eps);
    let lin = (1.0 - p) / p;
    let a: Vec<f64> = sub.omega.iter().map(|w| 1.0 / (p * w)).collect();
    let (blocks, q) = match form {
        DualForm::Printed => {
            let b: Vec<f64> = sub.omega.iter().map(|w| -(tau - 2.0) / (p * w)).collect();
            let q_alpha = 1.0 + lin - eps;
            let q_beta = -1.0 + tau * (1.0 - p) * (2.0 - tau) / p - eps / tau;
            let mut q = vec![q_alpha; n];
            q.extend(std::iter::repeat_n(q_beta, n));
            (
                vec![
                    vec![Block::gram(Some(a)), Block::neg_gram()],
                    vec![Block::neg_gram(), Block::gram(Some(b))],
                ],
                q,
            )
        }
        DualForm::Exact => {
            let b: Vec<f64> = sub.omega.iter().map(|w| 1.0 / (tau * p * w)).collect();
            let mut q = vec![1.0 - eps + lin; n];
            q.extend(std::iter::repeat_n(-1.0 - eps / tau + lin, n));
            q.extend(std::iter::repeat_n(lin, 2 * n));
            (
                vec![
                    vec![Block::gram(Some(a.clone())), Block::neg_gram(), Block::Diag(a.clone()), Block::Zero],
                    vec![Block::neg_gram(), Block::gram(Some(b.clone())), Block::Zero, Block::Diag(b.clone())],
                    vec![Block::Diag(a.clone()), Block::Zero, Block::Diag(a), Block::Zero],
                    vec![Block::Zero, Block::Diag(b.clone()), Block::Zero, Block::Diag(b)],
                ],
                q,
            )
        }
    };
    QpProblem::nonnegative(BlockHessian::new(sub.gram, blocks), q)
}

/// Constant separating the exact dual's QP optimum from the primal optimum:
/// `primal = -(qp objective) - exact_dual_offset`.
pub fn exact_dual_offset(omega: &[f64], loss: &LossParams) -> f64 {
    let c = (1.0 + loss.tau) * (1.0 - loss.p).powi(2) / (2.0 * loss.p);
    omega.iter().map(|w| w * c).sum()
}

/// Hinge dual: `min ½ λᵀGλ - eᵀλ`, `0 <= λ <= C`.
pub fn assemble_hinge_dual(gram: &SignedGram, c: f64) -> Result<QpProblem<BlockHessian<'_>>> {
    let n = gram.len();
    QpProblem::new(
        BlockHessian::new(gram, vec![vec![Block::gram(None)]]),
        vec![1.0; n],
        vec![0.0; n],
        vec![c; n],
    )
}

/// ε-insensitive pinball dual with the intercept absorbed into the kernel.
///
/// With `ε = 0` this is the single block `-τC <= λ <= C`. With `ε > 0` the
/// coefficient is split as `λ = λ₊ - λ₋`, `0 <= λ₊ <= C`, `0 <= λ₋ <= τC`, and
/// the band adds `ε λ₊ + (ε/τ) λ₋` to the objective; at the optimum at most
/// one of the pair is nonzero.
pub fn assemble_pinball_dual(gram: &SignedGram, c: f64, tau: f64, eps: f64) -> Result<QpProblem<BlockHessian<'_>>> {
    let n = gram.len();
    if eps == 0.0 {
        return QpProblem::new(
            BlockHessian::new(gram, vec![vec![Block::gram(None)]]),
            vec![1.0; n],
            vec![-tau * c; n],
            vec![c; n],
        );
    }
    let mut q = vec![1.0 - eps; n];
    q.extend(std::iter::repeat_n(-1.0 - eps / tau, n));
    let mut hi = vec![c; n];
    hi.extend(std::iter::repeat_n(tau * c, n));
    QpProblem::new(
        BlockHessian::new(
            gram,
            vec![vec![Block::gram(None), Block::neg_gram()], vec![Block::neg_gram(), Block::gram(None)]],
        ),
        q,
        vec![0.0; 2 * n],
        hi,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::{clipdcd_solve, DenseHessian};
    use ndarray::array;

    fn unit_gram() -> SignedGram {
        SignedGram::new(&array![[1.0]], &[1]).unwrap()
    }

    fn params(p: f64, tau: f64, eps: f64) -> LossParams {
        LossParams {
            lambda: 1.0,
            eta: 1.0,
            p,
            tau,
            eps,
        }
    }

    #[test]
    fn printed_form_unit_instance() {
        let g = unit_gram();
        let sub = WeightedSubproblem::new(vec![1.0], &g).unwrap();
        let prob = assemble_weighted_dual(&sub, &params(1.0, 1.0, 0.0), DualForm::Printed).unwrap();
        let h = DenseHessian::materialize(&prob.h);
        assert_eq!(h, DenseHessian::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap());
        assert_eq!(prob.q, vec![1.0, -1.0]);
        // 2x2 nonnegative QP by enumeration of active sets
        let mut best = f64::INFINITY;
        let mut arg = [0.0, 0.0];
        for cand in [[0.0, 0.0], [0.5, 0.0], [0.0, -0.5], [1.0 / 3.0, -1.0 / 3.0]] {
            if cand.iter().all(|&v| v >= 0.0) {
                let f = prob.objective(&cand);
                if f < best {
                    best = f;
                    arg = cand;
                }
            }
        }
        let sol = clipdcd_solve(&prob, 1e-12, 100).unwrap();
        assert!((sol.u[0] - arg[0]).abs() < 1e-12 && (sol.u[1] - arg[1]).abs() < 1e-12);
        assert_eq!(arg, [0.5, 0.0]);
    }

    #[test]
    fn printed_form_diagonal_corrections() {
        let k = Array2::zeros((3, 3));
        let g = SignedGram::new(&k, &[1, -1, 1]).unwrap();
        let sub = WeightedSubproblem::new(vec![1.0; 3], &g).unwrap();
        let prob = assemble_weighted_dual(&sub, &params(0.5, 0.5, 0.0), DualForm::Printed).unwrap();
        assert_eq!(prob.dim(), 6);
        assert_eq!(prob.q.len(), 6);
        for i in 0..3 {
            assert_eq!(prob.h.entry(i, i), 2.0);
            assert_eq!(prob.h.entry(3 + i, 3 + i), 3.0);
        }
    }

    #[test]
    fn operator_matches_materialized_matrix() {
        let k = array![[2.0, 0.5, -0.3], [0.5, 1.5, 0.2], [-0.3, 0.2, 1.0]];
        let g = SignedGram::new(&k, &[1, -1, 1]).unwrap();
        let sub = WeightedSubproblem::new(vec![0.7, 1.3, 0.2], &g).unwrap();
        for form in [DualForm::Exact, DualForm::Printed] {
            let prob = assemble_weighted_dual(&sub, &params(0.4, 0.6, 0.1), form).unwrap();
            let dense = DenseHessian::materialize(&prob.h);
            let d = prob.dim();
            for i in 0..d {
                for j in 0..d {
                    assert_eq!(dense.entry(i, j), dense.entry(j, i));
                }
                let mut a = vec![0.0; d];
                let mut b = vec![0.0; d];
                prob.h.axpy_column(i, 1.7, &mut a);
                dense.axpy_column(i, 1.7, &mut b);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn signed_gram_flips_cross_class_entries() {
        let k = array![[1.0, 0.5], [0.5, 1.0]];
        let g = SignedGram::new(&k, &[1, -1]).unwrap();
        assert_eq!(g.get(0, 1), -0.5);
        assert_eq!(g.get(1, 1), 1.0);
        assert_eq!(g.mul(&[1.0, 2.0]), vec![0.0, 1.5]);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        let g = unit_gram();
        assert!(WeightedSubproblem::new(vec![0.0], &g).is_err());
        assert!(WeightedSubproblem::new(vec![1.0, 1.0], &g).is_err());
    }
}
