//! Pair matrix over type pairs and its Perron-Frobenius analysis.
//!
//! The pair matrix couples two offspring kernels through child
//! multiplicities. Its definitional orientation indexes rows by child
//! pairs (a, â) and columns by parent pairs (b, b̂); the display
//! orientation is the transpose (rows by parent pairs), which is the
//! orientation whose right Perron vector reproduces the worked mutation
//! example. Both are available; [`stationary_pair`] returns the
//! display-orientation right eigenvector, i.e. the left eigenvector of
//! the definitional matrix.

use crate::model::{multiplicity, GwModel};
use crate::{Error, Result};

/// Dense nonnegative square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "matrix data length {} does not match dimension {n}",
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "matrix entry {bad} is not finite"
            )));
        }
        Ok(Matrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transposed(&self) -> Matrix {
        let mut data = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                data[j * self.n + i] = self.data[i * self.n + j];
            }
        }
        Matrix { n: self.n, data }
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// y = M x (right) or y = Mᵀ x (left).
    fn apply(&self, x: &[f64], orientation: Orientation, y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        match orientation {
            Orientation::Right => {
                for i in 0..self.n {
                    let row = &self.data[i * self.n..(i + 1) * self.n];
                    y[i] = row.iter().zip(x).map(|(m, v)| m * v).sum();
                }
            }
            Orientation::Left => {
                for i in 0..self.n {
                    let xi = x[i];
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &self.data[i * self.n..(i + 1) * self.n];
                    for j in 0..self.n {
                        y[j] += row[j] * xi;
                    }
                }
            }
        }
    }
}

/// Which eigenvector of the given matrix: `Right` solves M v = λ v,
/// `Left` solves vᵀ M = λ vᵀ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Left,
    Right,
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Orientation::Left => write!(f, "left"),
            Orientation::Right => write!(f, "right"),
        }
    }
}

/// Dominant eigenpair of a plain nonnegative matrix.
#[derive(Debug, Clone)]
pub struct PerronCore {
    pub eigenvalue: f64,
    /// Probability-normalized eigenvector.
    pub vector: Vec<f64>,
    pub orientation: Orientation,
    pub iterations: usize,
    /// Max-norm of (M·v − λ·v), orientation-adjusted.
    pub residual: f64,
    /// Set when a second start vector converged to a visibly different
    /// eigenvector at the same eigenvalue (reducible matrix with tied
    /// dominant classes).
    pub tie_warning: bool,
}

/// Default residual tolerance for [`perron`].
pub const PERRON_TOL: f64 = 1e-12;
/// Default iteration budget for [`perron`].
pub const PERRON_MAX_ITERS: usize = 100_000;

fn power_iteration(
    m: &Matrix,
    orientation: Orientation,
    start: &[f64],
    tol: f64,
    max_iters: usize,
) -> (f64, Vec<f64>, f64, usize) {
    let n = m.dim();
    let mut v: Vec<f64> = start.to_vec();
    let norm: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    let mut best = (0.0, v.clone(), f64::INFINITY, 0usize);
    let mut stall = 0usize;

    for iter in 1..=max_iters {
        m.apply(&v, orientation, &mut w);
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            // Dominant class unreachable from the current iterate.
            return (0.0, v, 0.0, iter);
        }
        lambda = total;
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).abs())
            .fold(0.0, f64::max);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / total;
        }
        if residual < best.2 {
            best = (lambda, v.clone(), residual, iter);
            stall = 0;
        } else {
            stall += 1;
        }
        if residual <= tol {
            return (lambda, v, residual, iter);
        }
        // Restart by mixing toward uniform when the residual plateaus
        // (periodic or badly scaled iterates).
        if stall >= 500 {
            let u = 1.0 / n as f64;
            for vi in v.iter_mut() {
                *vi = 0.5 * *vi + 0.5 * u;
            }
            stall = 0;
        }
    }
    let _ = lambda;
    best
}

/// Perron-Frobenius eigenpair by power iteration from the uniform vector.
/// Errors: `DegenerateMatrix` for the zero matrix, `NoConvergence` when
/// the residual stays above `tol` after `max_iters` iterations.
pub fn perron(
    m: &Matrix,
    orientation: Orientation,
    tol: f64,
    max_iters: usize,
) -> Result<PerronCore> {
    let n = m.dim();
    if n == 0 || m.is_zero() {
        return Err(Error::DegenerateMatrix);
    }
    let uniform = vec![1.0 / n as f64; n];
    let (lambda, vector, residual, iterations) =
        power_iteration(m, orientation, &uniform, tol, max_iters);
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }

    // Probe for non-uniqueness: a geometric-weight start converging to a
    // different vector at the same eigenvalue flags a tie.
    let mut tie_warning = false;
    if n > 1 {
        let mut probe: Vec<f64> = (0..n).map(|i| 0.5f64.powi(i as i32 + 1)).collect();
        let total: f64 = probe.iter().sum();
        probe.iter_mut().for_each(|x| *x /= total);
        let (l2, v2, r2, _) = power_iteration(m, orientation, &probe, tol, max_iters);
        if r2 <= tol && (l2 - lambda).abs() <= 1e-6 * (1.0 + lambda.abs()) {
            let tv: f64 = v2
                .iter()
                .zip(&vector)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0;
            tie_warning = tv > 1e-6;
        }
    }

    Ok(PerronCore {
        eigenvalue: lambda,
        vector,
        orientation,
        iterations,
        residual,
        tie_warning,
    })
}

/// Best-effort spectral radius estimate: power iteration on M + I (the
/// shift breaks periodicity without moving eigenvectors). Returns
/// (estimate, residual); never fails.
pub(crate) fn dominant_eigenvalue(m: &Matrix) -> (f64, f64) {
    let n = m.dim();
    if n == 0 || m.is_zero() {
        return (0.0, 0.0);
    }
    let mut shifted = m.clone();
    for i in 0..n {
        shifted.data[i * n + i] += 1.0;
    }
    let uniform = vec![1.0 / n as f64; n];
    let (lambda, _, residual, _) =
        power_iteration(&shifted, Orientation::Right, &uniform, PERRON_TOL, PERRON_MAX_ITERS);
    (lambda - 1.0, residual)
}

/// Left Perron vector of a nonnegative matrix (stationary type law),
/// probability-normalized; `None` if the iteration collapses.
pub(crate) fn left_perron_vector(m: &Matrix) -> Option<Vec<f64>> {
    let n = m.dim();
    if n == 0 || m.is_zero() {
        return None;
    }
    let mut shifted = m.clone();
    for i in 0..n {
        shifted.data[i * n + i] += 1.0;
    }
    let uniform = vec![1.0 / n as f64; n];
    let (_, v, residual, _) =
        power_iteration(&shifted, Orientation::Left, &uniform, PERRON_TOL, PERRON_MAX_ITERS);
    if residual.is_finite() {
        Some(v)
    } else {
        None
    }
}

/// Matrix over type pairs coupling two kernels:
/// entry at child pair (a, â), parent pair (b, b̂) is
/// Σ over string pairs (c, ĉ) of m(a,c)·m(â,ĉ)·Kx{c|b}·Ky{ĉ|b̂}.
/// Pair indices are lexicographic in the alphabet index.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    n_types: usize,
    /// Definitional orientation: rows = child pairs.
    matrix: Matrix,
}

impl PairMatrix {
    pub fn n_types(&self) -> usize {
        self.n_types
    }

    /// Dimension |X|².
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn pair_index(&self, pair: (usize, usize)) -> usize {
        pair.0 * self.n_types + pair.1
    }

    /// Entry in the definitional orientation.
    pub fn get(&self, child_pair: (usize, usize), parent_pair: (usize, usize)) -> f64 {
        self.matrix
            .get(self.pair_index(child_pair), self.pair_index(parent_pair))
    }

    /// Entry in the display orientation (rows indexed by parent pairs).
    pub fn display_get(&self, parent_pair: (usize, usize), child_pair: (usize, usize)) -> f64 {
        self.get(child_pair, parent_pair)
    }

    /// Definitional matrix (rows = child pairs).
    pub fn definitional(&self) -> &Matrix {
        &self.matrix
    }

    /// Display matrix (rows = parent pairs), i.e. the transpose.
    pub fn display(&self) -> Matrix {
        self.matrix.transposed()
    }
}

/// Build the pair matrix of two models over the same alphabet from the
/// defining sum over offspring-string pairs.
pub fn pair_matrix(model_x: &GwModel, model_y: &GwModel) -> Result<PairMatrix> {
    if model_x.alphabet() != model_y.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let n = model_x.n_types();
    let dim = n * n;
    let mut data = vec![0.0; dim * dim];
    for b in 0..n {
        for bh in 0..n {
            let col = b * n + bh;
            for (c, px) in model_x.kernel().support(b) {
                for (ch, py) in model_y.kernel().support(bh) {
                    let w = px * py;
                    for a in 0..n {
                        let ma = multiplicity(a, c);
                        if ma == 0 {
                            continue;
                        }
                        for ah in 0..n {
                            let mah = multiplicity(ah, ch);
                            if mah == 0 {
                                continue;
                            }
                            let row = a * n + ah;
                            data[row * dim + col] += (ma * mah) as f64 * w;
                        }
                    }
                }
            }
        }
    }
    Ok(PairMatrix {
        n_types: n,
        matrix: Matrix::new(dim, data)?,
    })
}

/// Stationary pair law of two critical models: eigenvalue, the
/// probability-normalized Perron vector π over type pairs in the display
/// orientation (right eigenvector of the parent-pair-row matrix), and its
/// coordinate marginals.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub eigenvalue: f64,
    /// π over type pairs (a, â), lexicographic index.
    pub pi: Vec<f64>,
    /// First marginal π₁(a) = Σ_â π(a, â).
    pub pi1: Vec<f64>,
    /// Second marginal π₂(â) = Σ_a π(a, â).
    pub pi2: Vec<f64>,
    pub orientation: Orientation,
    pub iterations: usize,
    pub residual: f64,
    pub tie_warning: bool,
}

impl PerronData {
    pub fn n_types(&self) -> usize {
        self.pi1.len()
    }
}

/// Compute π for a pair of validated critical models. The display-side
/// right eigenvector equals the left eigenvector of the definitional
/// matrix, which is what gets iterated here. Errors with `NotCritical`
/// when the pair eigenvalue is off 1 by more than `tol`.
pub fn stationary_pair(model_x: &GwModel, model_y: &GwModel, tol: f64) -> Result<PerronData> {
    let pm = pair_matrix(model_x, model_y)?;
    let core = perron(pm.definitional(), Orientation::Left, PERRON_TOL, PERRON_MAX_ITERS)?;
    if (core.eigenvalue - 1.0).abs() > tol {
        return Err(Error::NotCritical {
            eigenvalue: core.eigenvalue,
        });
    }
    Ok(pair_perron_data(&pm, core))
}

/// Marginalize a pair-indexed Perron vector into [`PerronData`].
pub fn pair_perron_data(pm: &PairMatrix, core: PerronCore) -> PerronData {
    let n = pm.n_types();
    let mut pi1 = vec![0.0; n];
    let mut pi2 = vec![0.0; n];
    for a in 0..n {
        for ah in 0..n {
            let w = core.vector[a * n + ah];
            pi1[a] += w;
            pi2[ah] += w;
        }
    }
    PerronData {
        eigenvalue: core.eigenvalue,
        pi: core.vector,
        pi1,
        pi2,
        orientation: core.orientation,
        iterations: core.iterations,
        residual: core.residual,
        tie_warning: core.tie_warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{mtdna_model, uniform_binary_model, Alphabet, GwModel, KernelTable,
        OffspringString};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn mtdna_pair(alpha: f64) -> PairMatrix {
        let m = mtdna_model(alpha).unwrap();
        pair_matrix(&m, &m).unwrap()
    }

    /// The display rows as closed forms in alpha.
    fn expected_display(alpha: f64) -> [[f64; 4]; 4] {
        let a = alpha;
        [
            [1.0, 0.0, 0.0, 0.0],
            [a, 1.0 - a, 0.0, 0.0],
            [a, 0.0, 1.0 - a, 0.0],
            [a * a, a * (1.0 - a), a * (1.0 - a), (1.0 - a) * (1.0 - a)],
        ]
    }

    #[test]
    fn mtdna_display_matches_closed_forms() {
        for &alpha in &[0.1, 0.5, 0.9] {
            let pm = mtdna_pair(alpha);
            let want = expected_display(alpha);
            for (r, row) in want.iter().enumerate() {
                for (c, &w) in row.iter().enumerate() {
                    let got = pm.display_get((r / 2, r % 2), (c / 2, c % 2));
                    assert!(
                        (got - w).abs() < 1e-12,
                        "alpha={alpha} row={r} col={c}: {got} vs {w}"
                    );
                }
            }
        }
    }

    #[test]
    fn mtdna_alpha_squared_entry_and_absorbing_column() {
        let alpha = 0.3;
        let pm = mtdna_pair(alpha);
        // Definitional A[(0,0),(1,1)] = alpha².
        assert!((pm.get((0, 0), (1, 1)) - alpha * alpha).abs() < 1e-15);
        // Parent pair (0,0) feeds only child pair (0,0), with weight 1.
        for a in 0..2 {
            for ah in 0..2 {
                let want = if (a, ah) == (0, 0) { 1.0 } else { 0.0 };
                assert!((pm.get((a, ah), (0, 0)) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deterministic_same_type_kernels_give_identity() {
        let alphabet = Alphabet::new(vec!["a", "b"]).unwrap();
        let rows = (0..2)
            .map(|t| vec![(OffspringString::new(vec![t]), 1.0)])
            .collect();
        let kernel = KernelTable::new(2, rows).unwrap();
        let model = GwModel::new(alphabet, vec![0.5, 0.5], kernel, 1).unwrap();
        let pm = pair_matrix(&model, &model).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(pm.definitional().get(i, j), want);
            }
        }
    }

    #[test]
    fn pair_matrix_is_tensor_product_of_means() {
        let models = [
            mtdna_model(0.3).unwrap(),
            mtdna_model(0.7).unwrap(),
            uniform_binary_model(),
        ];
        for mx in &models {
            for my in &models {
                let pm = pair_matrix(mx, my).unwrap();
                let ex = mx.mean_matrix();
                let ey = my.mean_matrix();
                let n = mx.n_types();
                for b in 0..n {
                    for bh in 0..n {
                        for a in 0..n {
                            for ah in 0..n {
                                let want = ex.get(b, a) * ey.get(bh, ah);
                                let got = pm.display_get((b, bh), (a, ah));
                                assert!((got - want).abs() < 1e-14);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn perron_on_symmetric_two_by_two() {
        let m = Matrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let core = perron(&m, Orientation::Right, 1e-12, 100_000).unwrap();
        assert!((core.eigenvalue - 3.0).abs() < 1e-10);
        assert!((core.vector[0] - 0.5).abs() < 1e-10);
        assert!((core.vector[1] - 0.5).abs() < 1e-10);
        assert!(core.residual <= 1e-12);
    }

    /// Independent oracle: dominant root of the characteristic polynomial
    /// of a 3x3 matrix, located by scanning down from the row-sum bound
    /// and bisecting the first sign change.
    fn char_poly_dominant_root(m: &Matrix) -> f64 {
        assert_eq!(m.dim(), 3);
        let a = |i: usize, j: usize| m.get(i, j);
        let tr = a(0, 0) + a(1, 1) + a(2, 2);
        let minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0) + a(0, 0) * a(2, 2)
            - a(0, 2) * a(2, 0)
            + a(1, 1) * a(2, 2)
            - a(1, 2) * a(2, 1);
        let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        let p = |x: f64| x * x * x - tr * x * x + minors * x - det;
        let hi0 = (0..3).map(|i| a(i, 0) + a(i, 1) + a(i, 2)).fold(0.0, f64::max) + 1.0;
        // Scan down for the first sign change from the top.
        let steps = 20_000;
        let mut hi = hi0;
        let mut lo = hi0;
        for k in 1..=steps {
            let x = hi0 * (1.0 - k as f64 / steps as f64);
            if p(x) < 0.0 {
                lo = x;
                break;
            }
            hi = x;
        }
        assert!(p(lo) < 0.0 && p(hi) >= 0.0, "no bracket found");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn perron_matches_char_poly_root_on_random_positive_matrices() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let data: Vec<f64> = (0..9).map(|_| rng.random_range(0.05..3.0)).collect();
            let m = Matrix::new(3, data).unwrap();
            let core = perron(&m, Orientation::Right, 1e-12, 100_000).unwrap();
            let oracle = char_poly_dominant_root(&m);
            assert!(
                (core.eigenvalue - oracle).abs() < 1e-8,
                "{} vs {}",
                core.eigenvalue,
                oracle
            );
        }
    }

    #[test]
    fn perron_rejects_zero_matrix() {
        let m = Matrix::new(2, vec![0.0; 4]).unwrap();
        assert!(matches!(
            perron(&m, Orientation::Right, 1e-12, 1000),
            Err(Error::DegenerateMatrix)
        ));
    }

    #[test]
    fn stationary_pair_mtdna_is_uniform() {
        for &alpha in &[0.1, 0.5, 0.9] {
            let m = mtdna_model(alpha).unwrap();
            let pd = stationary_pair(&m, &m, 1e-9).unwrap();
            assert!((pd.eigenvalue - 1.0).abs() <= 1e-10, "alpha={alpha}");
            for &w in &pd.pi {
                assert!((w - 0.25).abs() < 1e-10, "alpha={alpha}: pi={:?}", pd.pi);
            }
            assert!((pd.pi1[0] - 0.5).abs() < 1e-10);
            assert!((pd.pi2[1] - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_pair_uniform_binary_marginals() {
        let m = uniform_binary_model();
        let pd = stationary_pair(&m, &m, 1e-9).unwrap();
        assert!((pd.pi1[0] - 0.5).abs() < 1e-10);
        assert!((pd.pi1[1] - 0.5).abs() < 1e-10);
        assert!((pd.pi2[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn stationary_pair_rejects_subcritical_models() {
        let alphabet = Alphabet::new(vec!["x"]).unwrap();
        let kernel = KernelTable::new(
            1,
            vec![vec![
                (OffspringString::empty(), 0.6),
                (OffspringString::new(vec![0, 0]), 0.4),
            ]],
        )
        .unwrap();
        let model = GwModel::new(alphabet, vec![1.0], kernel, 2).unwrap();
        assert!(matches!(
            stationary_pair(&model, &model, 1e-9),
            Err(Error::NotCritical { .. })
        ));
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let m1 = mtdna_model(0.5).unwrap();
        let alphabet = Alphabet::new(vec!["a", "b"]).unwrap();
        let rows = (0..2)
            .map(|t| vec![(OffspringString::new(vec![t]), 1.0)])
            .collect();
        let kernel = KernelTable::new(2, rows).unwrap();
        let m2 = GwModel::new(alphabet, vec![0.5, 0.5], kernel, 1).unwrap();
        assert!(matches!(pair_matrix(&m1, &m2), Err(Error::AlphabetMismatch)));
    }
}
