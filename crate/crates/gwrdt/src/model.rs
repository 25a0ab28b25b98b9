//! Multitype Galton-Watson model definitions and validation.
//!
//! A model is an alphabet of vertex types, a root law, and an offspring
//! kernel mapping each parent type to a probability distribution over
//! ordered offspring strings of bounded length. Validation checks row
//! stochasticity, the offspring cap, criticality (mean-matrix spectral
//! radius 1), and reachability-based irreducibility.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered, duplicate-free list of type labels. The index of a label is
/// stable for the life of the model and is the integer type id used by
/// every other module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: Vec<S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidParameter("alphabet must be non-empty".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate symbol {s:?} in alphabet"
                )));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Index of a label, or `InvalidSymbol`.
    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::InvalidSymbol(symbol.to_string()))
    }

    pub fn symbol(&self, idx: usize) -> &str {
        &self.symbols[idx]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

/// Ordered offspring string: the children's type ids, left to right.
/// Two strings with the same multiset but different order are distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OffspringString(Vec<usize>);

impl OffspringString {
    pub fn new(children: Vec<usize>) -> Self {
        OffspringString(children)
    }

    pub fn empty() -> Self {
        OffspringString(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn types(&self) -> &[usize] {
        &self.0
    }

    /// Render as the concatenation of child labels, e.g. `10` for (1,0).
    pub fn label(&self, alphabet: &Alphabet) -> String {
        self.0.iter().map(|&t| alphabet.symbol(t)).collect()
    }
}

impl fmt::Display for OffspringString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Count of occurrences of type `a` in the offspring string `c`.
pub fn multiplicity(a: usize, c: &OffspringString) -> usize {
    c.types().iter().filter(|&&t| t == a).count()
}

/// Offspring kernel: for each parent type, a list of (string, probability)
/// atoms. Atoms are kept sorted by string so iteration order is canonical;
/// zero-probability atoms are dropped at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    n_types: usize,
    rows: Vec<Vec<(OffspringString, f64)>>,
}

impl KernelTable {
    /// Build a kernel over `n_types` types. Hard errors: unknown type ids,
    /// negative or non-finite probabilities, duplicate strings per parent.
    /// Row sums are *not* forced to 1 here; that is what validation reports.
    pub fn new(n_types: usize, rows: Vec<Vec<(OffspringString, f64)>>) -> Result<Self> {
        if rows.len() != n_types {
            return Err(Error::InvalidParameter(format!(
                "kernel has {} rows for {} types",
                rows.len(),
                n_types
            )));
        }
        let mut clean = Vec::with_capacity(n_types);
        for (parent, row) in rows.into_iter().enumerate() {
            let mut atoms: Vec<(OffspringString, f64)> = Vec::with_capacity(row.len());
            for (string, p) in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "kernel probability {p} for parent {parent} is not a finite nonnegative number"
                    )));
                }
                if let Some(&bad) = string.types().iter().find(|&&t| t >= n_types) {
                    return Err(Error::InvalidSymbol(format!("type id {bad}")));
                }
                if p > 0.0 {
                    atoms.push((string, p));
                }
            }
            atoms.sort_by(|a, b| a.0.cmp(&b.0));
            for w in atoms.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate offspring string {} for parent {parent}",
                        w[0].0
                    )));
                }
            }
            clean.push(atoms);
        }
        Ok(KernelTable {
            n_types,
            rows: clean,
        })
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    /// Probability of offspring string `c` for a parent of type `parent`;
    /// 0 for atoms outside the support.
    pub fn prob(&self, parent: usize, c: &OffspringString) -> f64 {
        self.rows[parent]
            .binary_search_by(|(s, _)| s.cmp(c))
            .map(|i| self.rows[parent][i].1)
            .unwrap_or(0.0)
    }

    /// Support atoms of a parent type, sorted by string.
    pub fn support(&self, parent: usize) -> &[(OffspringString, f64)] {
        &self.rows[parent]
    }

    pub fn row_sum(&self, parent: usize) -> f64 {
        self.rows[parent].iter().map(|(_, p)| p).sum()
    }

    /// Longest offspring string present in any row.
    pub fn max_string_len(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|(s, _)| s.len()))
            .max()
            .unwrap_or(0)
    }
}

/// Mean offspring matrix: entry `(b, a)` is the expected number of
/// type-`a` children of a type-`b` parent.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    n: usize,
    data: Vec<f64>,
}

impl MeanMatrix {
    pub fn n_types(&self) -> usize {
        self.n
    }

    pub fn get(&self, parent: usize, child: usize) -> f64 {
        self.data[parent * self.n + child]
    }

    pub fn row_sum(&self, parent: usize) -> f64 {
        (0..self.n).map(|a| self.get(parent, a)).sum()
    }

    pub(crate) fn as_matrix(&self) -> crate::spectral::Matrix {
        crate::spectral::Matrix::new(self.n, self.data.clone()).expect("square by construction")
    }
}

/// Built-in model identities, used to surface closed-form reference values
/// in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelPreset {
    Mtdna { alpha: f64 },
    UniformBinary,
}

/// A validated-shape multitype Galton-Watson specification: alphabet,
/// root law, offspring kernel, offspring cap. Structural invariants
/// (symbol validity, cap, nonnegativity) hold by construction; soft
/// properties (stochasticity, criticality, irreducibility) are checked by
/// [`GwModel::validate`]. Immutable after construction, safe to share
/// across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct GwModel {
    alphabet: Alphabet,
    root_law: Vec<f64>,
    kernel: KernelTable,
    cap: usize,
    preset: Option<ModelPreset>,
}

impl GwModel {
    pub fn new(
        alphabet: Alphabet,
        root_law: Vec<f64>,
        kernel: KernelTable,
        cap: usize,
    ) -> Result<Self> {
        if cap == 0 {
            return Err(Error::InvalidParameter("offspring cap must be positive".into()));
        }
        if root_law.len() != alphabet.len() {
            return Err(Error::InvalidParameter(format!(
                "root law has {} entries for {} types",
                root_law.len(),
                alphabet.len()
            )));
        }
        if kernel.n_types() != alphabet.len() {
            return Err(Error::InvalidParameter(format!(
                "kernel covers {} types, alphabet has {}",
                kernel.n_types(),
                alphabet.len()
            )));
        }
        if let Some(&p) = root_law.iter().find(|&&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "root law probability {p} is not a finite nonnegative number"
            )));
        }
        if kernel.max_string_len() > cap {
            return Err(Error::InvalidParameter(format!(
                "kernel contains a string longer than the cap {cap}"
            )));
        }
        Ok(GwModel {
            alphabet,
            root_law,
            kernel,
            cap,
            preset: None,
        })
    }

    fn with_preset(mut self, preset: ModelPreset) -> Self {
        self.preset = Some(preset);
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_types(&self) -> usize {
        self.alphabet.len()
    }

    pub fn root_law(&self) -> &[f64] {
        &self.root_law
    }

    pub fn kernel(&self) -> &KernelTable {
        &self.kernel
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn preset(&self) -> Option<ModelPreset> {
        self.preset
    }

    /// Mean offspring matrix `m[b][a] = Σ_c K{c|b} · multiplicity(a, c)`.
    pub fn mean_matrix(&self) -> MeanMatrix {
        let n = self.n_types();
        let mut data = vec![0.0; n * n];
        for b in 0..n {
            for (c, p) in self.kernel.support(b) {
                for &child in c.types() {
                    data[b * n + child] += p;
                }
            }
        }
        MeanMatrix { n, data }
    }

    /// Full validation report: probability-sum violations, cap violations,
    /// criticality of the mean matrix, and reachability analysis.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.n_types();
        let mut sum_violations = Vec::new();

        let root_sum: f64 = self.root_law.iter().sum();
        if (root_sum - 1.0).abs() > PROB_SUM_TOL {
            sum_violations.push(("root_law".to_string(), root_sum));
        }
        for b in 0..n {
            let s = self.kernel.row_sum(b);
            if (s - 1.0).abs() > PROB_SUM_TOL {
                sum_violations.push((self.alphabet.symbol(b).to_string(), s));
            }
        }

        // Cap violations cannot occur post-construction; kept for report shape.
        let cap_violations: Vec<String> = Vec::new();

        let mean = self.mean_matrix();
        let (eigenvalue, residual) = crate::spectral::dominant_eigenvalue(&mean.as_matrix());
        let critical = (eigenvalue - 1.0).abs() <= tol;

        // Type-reachability digraph: edge b -> a iff mean[b][a] > 0.
        let root_support: Vec<usize> = (0..n).filter(|&a| self.root_law[a] > 0.0).collect();
        let mut reachable = vec![false; n];
        let mut stack: Vec<usize> = root_support.clone();
        for &a in &root_support {
            reachable[a] = true;
        }
        while let Some(b) = stack.pop() {
            for a in 0..n {
                if mean.get(b, a) > 0.0 && !reachable[a] {
                    reachable[a] = true;
                    stack.push(a);
                }
            }
        }

        // Stationary type law: left Perron vector of the mean matrix.
        let stationary = crate::spectral::left_perron_vector(&mean.as_matrix());
        let stationary_support: Vec<usize> = (0..n)
            .filter(|&a| stationary.as_ref().map_or(false, |v| v[a] > 1e-9))
            .collect();
        let weakly_irreducible = !stationary_support.is_empty()
            && stationary_support.iter().all(|&a| reachable[a]);

        // Strong irreducibility: every type reaches every type.
        let strongly_irreducible = (0..n).all(|start| {
            let mut seen = vec![false; n];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(b) = stack.pop() {
                for a in 0..n {
                    if mean.get(b, a) > 0.0 && !seen[a] {
                        seen[a] = true;
                        stack.push(a);
                    }
                }
            }
            seen.iter().all(|&s| s)
        });

        ValidationReport {
            probability_sum_violations: sum_violations,
            cap_violations,
            mean_eigenvalue: eigenvalue,
            eigen_residual: residual,
            criticality_tol: tol,
            critical,
            reachable_types: (0..n).filter(|&a| reachable[a]).collect(),
            stationary_support,
            weakly_irreducible,
            strongly_irreducible,
        }
    }

    /// Strict validation: raises `StochasticityViolation` or
    /// `CriticalityViolation` instead of only reporting them.
    pub fn validate_strict(&self, tol: f64) -> Result<ValidationReport> {
        let report = self.validate(tol);
        if let Some((parent, sum)) = report.probability_sum_violations.first() {
            return Err(Error::StochasticityViolation {
                parent: parent.clone(),
                sum: *sum,
            });
        }
        if !report.critical {
            return Err(Error::CriticalityViolation {
                eigenvalue: report.mean_eigenvalue,
            });
        }
        Ok(report)
    }
}

/// Kernel rows must sum to 1 within this absolute tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Default tolerance on |spectral radius - 1| for the criticality check.
/// User-entered decimal kernels rarely hit 1 exactly.
pub const CRITICALITY_TOL: f64 = 1e-9;

/// Outcome of [`GwModel::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// (row label, actual sum) for every probability vector off 1 by more
    /// than `PROB_SUM_TOL`; the root law reports under label "root_law".
    pub probability_sum_violations: Vec<(String, f64)>,
    pub cap_violations: Vec<String>,
    /// Spectral radius of the mean matrix (best power-iteration estimate).
    pub mean_eigenvalue: f64,
    pub eigen_residual: f64,
    pub criticality_tol: f64,
    pub critical: bool,
    /// Types reachable from the root-law support in the mean-matrix digraph.
    pub reachable_types: Vec<usize>,
    /// Support of the stationary (left Perron) type law.
    pub stationary_support: Vec<usize>,
    /// Every type in the stationary support is reachable from the root.
    pub weakly_irreducible: bool,
    /// The mean-matrix digraph is a single strongly connected component.
    pub strongly_irreducible: bool,
}

impl ValidationReport {
    /// Pass = stochastic rows, no cap violations, critical mean matrix.
    /// Irreducibility verdicts are informational.
    pub fn passed(&self) -> bool {
        self.probability_sum_violations.is_empty() && self.cap_violations.is_empty() && self.critical
    }
}

/// Two-type mutation model: types "0" (mutant) and "1" (normal), started
/// from one normal ancestor. Each parent either leaves no offspring
/// (probability 1/2) or two children drawn independently from the
/// single-symbol mutation law: a normal child stays normal with
/// probability 1-alpha and mutates with probability alpha; mutants breed
/// true. The empty-offspring mass 1/2 is the unique completion that makes
/// the process critical.
pub fn mtdna_model(alpha: f64) -> Result<GwModel> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mutation rate alpha={alpha} outside [0, 1]"
        )));
    }
    let alphabet = Alphabet::new(vec!["0", "1"])?;
    let (mutant, normal) = (0usize, 1usize);
    // Single-symbol law K_alpha{child | parent}.
    let k_alpha = |child: usize, parent: usize| -> f64 {
        if parent == mutant {
            if child == mutant {
                1.0
            } else {
                0.0
            }
        } else if child == mutant {
            alpha
        } else {
            1.0 - alpha
        }
    };
    let mut rows = Vec::new();
    for parent in 0..2 {
        let mut row = vec![(OffspringString::empty(), 0.5)];
        for c1 in 0..2 {
            for c2 in 0..2 {
                let p = 0.5 * k_alpha(c1, parent) * k_alpha(c2, parent);
                row.push((OffspringString::new(vec![c1, c2]), p));
            }
        }
        rows.push(row);
    }
    let kernel = KernelTable::new(2, rows)?;
    let root_law = vec![0.0, 1.0];
    debug_assert_eq!(alphabet.index_of("1")?, normal);
    Ok(GwModel::new(alphabet, root_law, kernel, 2)?.with_preset(ModelPreset::Mtdna { alpha }))
}

/// The closed-form distortion threshold reported alongside the mtDNA
/// rate-distortion curve: 3/4·(1-alpha) + 1/4·alpha·(1-alpha)^3.
pub fn mtdna_distortion_threshold(alpha: f64) -> f64 {
    0.75 * (1.0 - alpha) + 0.25 * alpha * (1.0 - alpha).powi(3)
}

/// Symmetric two-type test model: each parent has no offspring with
/// probability 1/2, or two children with probability 1/2, each child type
/// uniform. Critical and strongly irreducible; uniform root law.
pub fn uniform_binary_model() -> GwModel {
    let alphabet = Alphabet::new(vec!["0", "1"]).expect("static alphabet");
    let mut rows = Vec::new();
    for _parent in 0..2 {
        let mut row = vec![(OffspringString::empty(), 0.5)];
        for c1 in 0..2 {
            for c2 in 0..2 {
                row.push((OffspringString::new(vec![c1, c2]), 0.5 * 0.25));
            }
        }
        rows.push(row);
    }
    let kernel = KernelTable::new(2, rows).expect("static kernel");
    GwModel::new(alphabet, vec![0.5, 0.5], kernel, 2)
        .expect("static model")
        .with_preset(ModelPreset::UniformBinary)
}

// --- Config file schema -----------------------------------------------

/// JSON model config:
/// `{ "alphabet": [...], "root_law": {sym: p}, "cap": k,
///    "kernel": { parent: [ { "children": [...], "p": x }, ... ] } }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alphabet: Vec<String>,
    pub root_law: BTreeMap<String, f64>,
    pub cap: usize,
    pub kernel: BTreeMap<String, Vec<KernelAtomConfig>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelAtomConfig {
    pub children: Vec<String>,
    pub p: f64,
}

impl ModelConfig {
    pub fn build(&self) -> Result<GwModel> {
        let alphabet = Alphabet::new(self.alphabet.clone())?;
        let mut root_law = vec![0.0; alphabet.len()];
        for (sym, &p) in &self.root_law {
            let idx = alphabet
                .index_of(sym)
                .map_err(|_| Error::Config(format!("root_law: unknown symbol {sym:?}")))?;
            root_law[idx] = p;
        }
        let mut rows = vec![Vec::new(); alphabet.len()];
        for (parent, atoms) in &self.kernel {
            let pidx = alphabet
                .index_of(parent)
                .map_err(|_| Error::Config(format!("kernel: unknown parent symbol {parent:?}")))?;
            for (i, atom) in atoms.iter().enumerate() {
                let mut children = Vec::with_capacity(atom.children.len());
                for sym in &atom.children {
                    children.push(alphabet.index_of(sym).map_err(|_| {
                        Error::Config(format!(
                            "kernel[{parent:?}][{i}].children: unknown symbol {sym:?}"
                        ))
                    })?);
                }
                if children.len() > self.cap {
                    return Err(Error::Config(format!(
                        "kernel[{parent:?}][{i}]: string of length {} exceeds cap {}",
                        children.len(),
                        self.cap
                    )));
                }
                rows[pidx].push((OffspringString::new(children), atom.p));
            }
        }
        let kernel = KernelTable::new(alphabet.len(), rows)?;
        GwModel::new(alphabet, root_law, kernel, self.cap)
    }
}

/// Parse a model from its JSON config; parse errors cite line/column,
/// semantic errors cite the offending field.
pub fn model_from_json(text: &str) -> Result<GwModel> {
    let config: ModelConfig = serde_json::from_str(text)?;
    config.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn multiplicity_counts_occurrences() {
        let c = OffspringString::new(vec![0, 1, 0]);
        assert_eq!(multiplicity(0, &c), 2);
        assert_eq!(multiplicity(1, &OffspringString::empty()), 0);
    }

    #[test]
    fn multiplicity_sums_to_length() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let len = rng.random_range(0..=6);
            let c = OffspringString::new((0..len).map(|_| rng.random_range(0..4)).collect());
            let total: usize = (0..4).map(|a| multiplicity(a, &c)).sum();
            assert_eq!(total, c.len());
        }
    }

    #[test]
    fn mtdna_mean_matrix() {
        let m = mtdna_model(0.5).unwrap().mean_matrix();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((m.get(0, 1) - 0.0).abs() < 1e-15);
        assert!((m.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((m.get(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mtdna_mean_rows_sum_to_one() {
        for i in 0..=10 {
            let alpha = i as f64 / 10.0;
            let m = mtdna_model(alpha).unwrap().mean_matrix();
            assert!((m.row_sum(0) - 1.0).abs() < 1e-12, "alpha={alpha}");
            assert!((m.row_sum(1) - 1.0).abs() < 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn deterministic_same_type_kernel_has_identity_mean() {
        let alphabet = Alphabet::new(vec!["a", "b", "c"]).unwrap();
        let rows = (0..3)
            .map(|t| vec![(OffspringString::new(vec![t]), 1.0)])
            .collect();
        let kernel = KernelTable::new(3, rows).unwrap();
        let model = GwModel::new(alphabet, vec![1.0, 0.0, 0.0], kernel, 1).unwrap();
        let m = model.mean_matrix();
        for b in 0..3 {
            for a in 0..3 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_eq!(m.get(b, a), expect);
            }
        }
    }

    #[test]
    fn mtdna_kernel_values() {
        let model = mtdna_model(0.5).unwrap();
        let normal = model.alphabet().index_of("1").unwrap();
        let pair_11 = OffspringString::new(vec![normal, normal]);
        assert!((model.kernel().prob(normal, &pair_11) - 0.125).abs() < 1e-15);

        let model0 = mtdna_model(0.0).unwrap();
        assert!((model0.kernel().prob(normal, &pair_11) - 0.5).abs() < 1e-15);
        // At alpha=0 a normal never produces a mutant.
        for (c, _) in model0.kernel().support(normal) {
            assert!(c.types().iter().all(|&t| t == normal));
        }
        for i in 0..=10 {
            let m = mtdna_model(i as f64 / 10.0).unwrap();
            for parent in 0..2 {
                assert!((m.kernel().prob(parent, &OffspringString::empty()) - 0.5).abs() < 1e-15);
                assert!((m.kernel().row_sum(parent) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mtdna_rejects_bad_alpha() {
        assert!(matches!(mtdna_model(-0.1), Err(Error::InvalidParameter(_))));
        assert!(matches!(mtdna_model(1.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(mtdna_model(f64::NAN), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn mtdna_validates_on_alpha_grid() {
        for i in 0..=10 {
            let alpha = i as f64 / 10.0;
            let report = mtdna_model(alpha).unwrap().validate(CRITICALITY_TOL);
            assert!(report.passed(), "alpha={alpha}: {report:?}");
            assert!((report.mean_eigenvalue - 1.0).abs() <= 1e-9);
        }
        let report = mtdna_model(0.3).unwrap().validate(CRITICALITY_TOL);
        assert!(report.critical);
        assert!(report.weakly_irreducible);
        assert!(!report.strongly_irreducible);
    }

    #[test]
    fn substochastic_row_raises_in_strict_mode() {
        let alphabet = Alphabet::new(vec!["x"]).unwrap();
        let kernel = KernelTable::new(
            1,
            vec![vec![
                (OffspringString::empty(), 0.5),
                (OffspringString::new(vec![0]), 0.4),
            ]],
        )
        .unwrap();
        let model = GwModel::new(alphabet, vec![1.0], kernel, 1).unwrap();
        let report = model.validate(CRITICALITY_TOL);
        assert_eq!(report.probability_sum_violations.len(), 1);
        assert!(matches!(
            model.validate_strict(CRITICALITY_TOL),
            Err(Error::StochasticityViolation { .. })
        ));
    }

    #[test]
    fn subcritical_kernel_raises_criticality_violation() {
        // Single type: die w.p. 0.6, two children w.p. 0.4 -> mean 0.8.
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
        match model.validate_strict(CRITICALITY_TOL) {
            Err(Error::CriticalityViolation { eigenvalue }) => {
                assert!((eigenvalue - 0.8).abs() < 1e-9);
            }
            other => panic!("expected CriticalityViolation, got {other:?}"),
        }
    }

    #[test]
    fn uniform_binary_is_critical_and_strongly_irreducible() {
        let report = uniform_binary_model().validate(CRITICALITY_TOL);
        assert!(report.passed());
        assert!(report.strongly_irreducible);
        assert!(report.weakly_irreducible);
    }

    #[test]
    fn config_roundtrip_and_field_errors() {
        let text = r#"{
            "alphabet": ["0", "1"],
            "root_law": {"1": 1.0},
            "cap": 2,
            "kernel": {
                "0": [{"children": [], "p": 0.5}, {"children": ["0", "0"], "p": 0.5}],
                "1": [{"children": [], "p": 0.5}, {"children": ["1", "1"], "p": 0.5}]
            }
        }"#;
        let model = model_from_json(text).unwrap();
        assert_eq!(model.n_types(), 2);
        assert!(model.validate(CRITICALITY_TOL).passed());

        let bad = text.replace("\"1\": 1.0", "\"2\": 1.0");
        match model_from_json(&bad) {
            Err(Error::Config(msg)) => assert!(msg.contains("root_law"), "{msg}"),
            other => panic!("expected Config error, got {other:?}"),
        }

        let syntactically_bad = "{ not json";
        assert!(matches!(model_from_json(syntactically_bad), Err(Error::Json(_))));
    }

    #[test]
    fn threshold_formula() {
        assert!((mtdna_distortion_threshold(0.5) - 0.390625).abs() < 1e-15);
        assert!((mtdna_distortion_threshold(0.0) - 0.75).abs() < 1e-15);
        assert!((mtdna_distortion_threshold(1.0) - 0.0).abs() < 1e-15);
    }
}
