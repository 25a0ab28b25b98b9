//! Empirical measures on vertex marks and mark pairs.
//!
//! A size-n tree induces the empirical offspring measure (1/n)·Σ_v δ at
//! its marks; a pair of size-n trees induces the joint measure over mark
//! pairs with vertices paired by BFS index. The joint measure has two
//! equivalent keyings related by a mass-preserving bijection: the
//! marked-pair view keys by ((a, c), (â, ĉ)) and the paired-marks view by
//! ((a, â), (c, ĉ)). [`reindex`] toggles between them and is an
//! involution.

use std::collections::BTreeMap;

use crate::model::{multiplicity, OffspringString};
use crate::trees::{vertex_marks, Tree, VertexMark};
use crate::{Error, Result};

/// Probability table over single vertex marks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarkMeasure {
    weights: BTreeMap<VertexMark, f64>,
}

impl MarkMeasure {
    pub fn from_weights(weights: BTreeMap<VertexMark, f64>) -> Self {
        MarkMeasure { weights }
    }

    pub fn weights(&self) -> &BTreeMap<VertexMark, f64> {
        &self.weights
    }

    pub fn get(&self, mark: &VertexMark) -> f64 {
        self.weights.get(mark).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Total-variation distance to another mark measure.
    pub fn tv_distance(&self, other: &MarkMeasure) -> f64 {
        let mut tv = 0.0;
        for (k, w) in &self.weights {
            tv += (w - other.get(k)).abs();
        }
        for (k, w) in &other.weights {
            if !self.weights.contains_key(k) {
                tv += w.abs();
            }
        }
        tv / 2.0
    }
}

/// Which keying a [`PairMeasure`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairView {
    /// Keys are pairs of marks ((a, c), (â, ĉ)).
    MarkedPair,
    /// Keys are a type pair plus a string pair ((a, â), (c, ĉ)).
    PairedMarks,
}

/// Key of a pair measure in one of the two views.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairKey {
    Marks(VertexMark, VertexMark),
    Paired((usize, usize), (OffspringString, OffspringString)),
}

impl PairKey {
    /// The underlying mark pair, independent of view.
    pub fn as_marks(&self) -> (VertexMark, VertexMark) {
        match self {
            PairKey::Marks(x, y) => (x.clone(), y.clone()),
            PairKey::Paired((a, ah), (c, ch)) => (
                VertexMark::new(*a, c.clone()),
                VertexMark::new(*ah, ch.clone()),
            ),
        }
    }
}

/// Sparse probability table over mark pairs, in either view.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMeasure {
    view: PairView,
    weights: BTreeMap<PairKey, f64>,
}

impl PairMeasure {
    pub fn new(view: PairView) -> Self {
        PairMeasure {
            view,
            weights: BTreeMap::new(),
        }
    }

    /// Build a marked-pair measure from mark-pair weights.
    pub fn from_mark_weights(weights: BTreeMap<(VertexMark, VertexMark), f64>) -> Self {
        let mut out = PairMeasure::new(PairView::MarkedPair);
        for ((x, y), w) in weights {
            out.add_marks(x, y, w);
        }
        out
    }

    pub fn view(&self) -> PairView {
        self.view
    }

    pub fn weights(&self) -> &BTreeMap<PairKey, f64> {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Accumulate weight on a mark pair, keyed per the current view.
    pub fn add_marks(&mut self, x: VertexMark, y: VertexMark, w: f64) {
        let key = match self.view {
            PairView::MarkedPair => PairKey::Marks(x, y),
            PairView::PairedMarks => PairKey::Paired((x.vtype, y.vtype), (x.offspring, y.offspring)),
        };
        *self.weights.entry(key).or_insert(0.0) += w;
    }

    /// Weight of a mark pair regardless of view.
    pub fn get_marks(&self, x: &VertexMark, y: &VertexMark) -> f64 {
        let key = match self.view {
            PairView::MarkedPair => PairKey::Marks(x.clone(), y.clone()),
            PairView::PairedMarks => PairKey::Paired(
                (x.vtype, y.vtype),
                (x.offspring.clone(), y.offspring.clone()),
            ),
        };
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    /// Marginal mark measure of coordinate 0 or 1.
    pub fn marginal(&self, coordinate: usize) -> MarkMeasure {
        let mut weights: BTreeMap<VertexMark, f64> = BTreeMap::new();
        for (key, w) in &self.weights {
            let (x, y) = key.as_marks();
            let mark = if coordinate == 0 { x } else { y };
            *weights.entry(mark).or_insert(0.0) += w;
        }
        MarkMeasure::from_weights(weights)
    }

    /// Marginal law of the type pair (a, â).
    pub fn type_pair_marginal(&self) -> BTreeMap<(usize, usize), f64> {
        let mut out: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (key, w) in &self.weights {
            let (x, y) = key.as_marks();
            *out.entry((x.vtype, y.vtype)).or_insert(0.0) += w;
        }
        out
    }

    /// Largest type id mentioned anywhere (vertex types or inside strings);
    /// `None` for the empty measure.
    fn max_type_id(&self) -> Option<usize> {
        self.weights
            .keys()
            .map(|key| {
                let (x, y) = key.as_marks();
                let m = x.vtype.max(y.vtype);
                let mx = x.offspring.types().iter().copied().max().unwrap_or(0);
                let my = y.offspring.types().iter().copied().max().unwrap_or(0);
                m.max(mx).max(my)
            })
            .max()
    }
}

/// Empirical offspring measure of a tree: (1/n)·Σ_v δ at (type(v), offspring(v)).
pub fn offspring_measure(t: &Tree) -> MarkMeasure {
    let n = t.n() as f64;
    let mut weights: BTreeMap<VertexMark, f64> = BTreeMap::new();
    for mark in vertex_marks(t) {
        *weights.entry(mark).or_insert(0.0) += 1.0 / n;
    }
    MarkMeasure::from_weights(weights)
}

/// Joint empirical measure of two size-n trees with vertices paired by
/// BFS index, in the marked-pair view. Errors with `SizeMismatch` when the
/// trees differ in size.
pub fn joint_measure(tx: &Tree, ty: &Tree) -> Result<PairMeasure> {
    if tx.n() != ty.n() {
        return Err(Error::SizeMismatch {
            left: tx.n(),
            right: ty.n(),
        });
    }
    let n = tx.n() as f64;
    let mut out = PairMeasure::new(PairView::MarkedPair);
    let marks_x = vertex_marks(tx);
    let marks_y = vertex_marks(ty);
    for (x, y) in marks_x.into_iter().zip(marks_y) {
        out.add_marks(x, y, 1.0 / n);
    }
    Ok(out)
}

/// Mass-preserving bijective re-keying between the two pair views;
/// `reindex(reindex(m)) == m`.
pub fn reindex(m: &PairMeasure) -> PairMeasure {
    let target = match m.view {
        PairView::MarkedPair => PairView::PairedMarks,
        PairView::PairedMarks => PairView::MarkedPair,
    };
    let mut out = PairMeasure::new(target);
    for (key, &w) in &m.weights {
        let (x, y) = key.as_marks();
        out.add_marks(x, y, w);
    }
    out
}

/// Per-type defects of the two shift-invariance identities
/// ν_{i,1}(a) = Σ_{(b,c)} m(a, c) ν_i(b, c), for both coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDefect {
    pub per_type_first: Vec<f64>,
    pub per_type_second: Vec<f64>,
    pub max_defect: f64,
}

/// Shift-invariance defect of a pair measure. The identities are stated
/// on the marked-pair form; a paired-marks input is re-keyed first.
pub fn shift_defect(m: &PairMeasure) -> ShiftDefect {
    let marked;
    let m = if m.view == PairView::MarkedPair {
        m
    } else {
        marked = reindex(m);
        &marked
    };
    let n_types = m.max_type_id().map_or(0, |t| t + 1);
    let mut defects = [vec![0.0; n_types], vec![0.0; n_types]];
    for coordinate in 0..2 {
        let marginal = m.marginal(coordinate);
        for a in 0..n_types {
            let type_mass: f64 = marginal
                .weights()
                .iter()
                .filter(|(k, _)| k.vtype == a)
                .map(|(_, w)| w)
                .sum();
            let child_mass: f64 = marginal
                .weights()
                .iter()
                .map(|(k, w)| multiplicity(a, &k.offspring) as f64 * w)
                .sum();
            defects[coordinate][a] = (type_mass - child_mass).abs();
        }
    }
    let max_defect = defects
        .iter()
        .flat_map(|d| d.iter().copied())
        .fold(0.0, f64::max);
    let [per_type_first, per_type_second] = defects;
    ShiftDefect {
        per_type_first,
        per_type_second,
        max_defect,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{mtdna_model, uniform_binary_model, GwModel};
    use crate::trees::{sample_conditioned_with, stream_rng, Tree};

    fn mark(t: usize, children: Vec<usize>) -> VertexMark {
        VertexMark::new(t, OffspringString::new(children))
    }

    #[test]
    fn offspring_measure_single_vertex() {
        let m = offspring_measure(&Tree::single(1));
        assert_eq!(m.weights().len(), 1);
        assert_eq!(m.get(&mark(1, vec![])), 1.0);
    }

    #[test]
    fn offspring_measure_three_vertices() {
        let t = Tree::from_bfs(vec![1, 1, 0], vec![2, 0, 0]).unwrap();
        let m = offspring_measure(&t);
        assert!((m.get(&mark(1, vec![1, 0])) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.get(&mark(1, vec![])) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.get(&mark(0, vec![])) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn offspring_measure_normalized_on_random_trees() {
        let model = uniform_binary_model();
        let mut rng = stream_rng(17, 0);
        for _ in 0..100 {
            if let crate::trees::Sampled::Complete(t) =
                crate::trees::sample_tree_with(&mut rng, &model, 400)
            {
                assert!((offspring_measure(&t).total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_measure_diagonal_when_trees_equal() {
        let t = Tree::from_bfs(vec![1, 1, 0], vec![2, 0, 0]).unwrap();
        let j = joint_measure(&t, &t).unwrap();
        for (key, _) in j.weights() {
            let (x, y) = key.as_marks();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn joint_measure_bfs_pairing() {
        let tx = Tree::from_bfs(vec![1, 1, 1], vec![2, 0, 0]).unwrap();
        let ty = Tree::from_bfs(vec![1, 1, 0], vec![2, 0, 0]).unwrap();
        let j = joint_measure(&tx, &ty).unwrap();
        assert_eq!(j.len(), 3);
        let w = 1.0 / 3.0;
        assert!((j.get_marks(&mark(1, vec![1, 1]), &mark(1, vec![1, 0])) - w).abs() < 1e-15);
        assert!((j.get_marks(&mark(1, vec![]), &mark(1, vec![])) - w).abs() < 1e-15);
        assert!((j.get_marks(&mark(1, vec![]), &mark(0, vec![])) - w).abs() < 1e-15);
    }

    #[test]
    fn joint_marginal_is_offspring_measure() {
        let model = mtdna_model(0.5).unwrap();
        let mut rng = stream_rng(23, 0);
        for _ in 0..20 {
            let tx = sample_conditioned_with(&mut rng, &model, 5, 1_000_000).unwrap();
            let ty = sample_conditioned_with(&mut rng, &model, 5, 1_000_000).unwrap();
            let j = joint_measure(&tx, &ty).unwrap();
            assert!(j.marginal(0).tv_distance(&offspring_measure(&tx)) < 1e-12);
            assert!(j.marginal(1).tv_distance(&offspring_measure(&ty)) < 1e-12);
        }
    }

    #[test]
    fn joint_measure_size_mismatch() {
        let tx = Tree::single(1);
        let ty = Tree::from_bfs(vec![1, 1, 0], vec![2, 0, 0]).unwrap();
        assert!(matches!(
            joint_measure(&tx, &ty),
            Err(Error::SizeMismatch { left: 1, right: 3 })
        ));
    }

    #[test]
    fn reindex_point_mass() {
        let mut m = PairMeasure::new(PairView::MarkedPair);
        m.add_marks(mark(1, vec![1, 0]), mark(0, vec![]), 1.0);
        let r = reindex(&m);
        assert_eq!(r.view(), PairView::PairedMarks);
        let key = PairKey::Paired(
            (1, 0),
            (OffspringString::new(vec![1, 0]), OffspringString::empty()),
        );
        assert_eq!(r.weights().get(&key), Some(&1.0));
    }

    fn random_pair_measure(model: &GwModel, seed: u64) -> PairMeasure {
        let mut rng = stream_rng(seed, 1);
        let tx = sample_conditioned_with(&mut rng, model, 7, 1_000_000).unwrap();
        let ty = sample_conditioned_with(&mut rng, model, 7, 1_000_000).unwrap();
        joint_measure(&tx, &ty).unwrap()
    }

    #[test]
    fn reindex_is_a_mass_preserving_involution() {
        let model = mtdna_model(0.4).unwrap();
        for seed in 0..100 {
            let m = random_pair_measure(&model, seed);
            let r = reindex(&m);
            assert!((r.total() - m.total()).abs() < 1e-14);
            assert_eq!(reindex(&r), m);
        }
    }

    #[test]
    fn shift_defect_of_joint_measures_is_at_most_one_over_n() {
        let models = [mtdna_model(0.5).unwrap(), uniform_binary_model()];
        let mut rng = stream_rng(31, 0);
        let mut checked = 0;
        while checked < 1000 {
            let model = &models[checked % 2];
            let n = 3 + 2 * (checked % 4); // 3, 5, 7, 9
            let tx = sample_conditioned_with(&mut rng, model, n, 10_000_000).unwrap();
            let ty = sample_conditioned_with(&mut rng, model, n, 10_000_000).unwrap();
            let j = joint_measure(&tx, &ty).unwrap();
            let d = shift_defect(&j);
            assert!(
                d.max_defect <= 1.0 / n as f64 + 1e-12,
                "n={n} defect={}",
                d.max_defect
            );
            checked += 1;
        }
    }

    #[test]
    fn shift_defect_exact_values_on_the_three_vertex_pair() {
        let tx = Tree::from_bfs(vec![1, 1, 1], vec![2, 0, 0]).unwrap();
        let ty = Tree::from_bfs(vec![1, 1, 0], vec![2, 0, 0]).unwrap();
        let j = joint_measure(&tx, &ty).unwrap();
        let d = shift_defect(&j);
        assert!((d.per_type_first[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.per_type_first[0] - 0.0).abs() < 1e-15);
        assert!((d.per_type_second[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.per_type_second[0] - 0.0).abs() < 1e-15);
        assert!((d.max_defect - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_product_measure_has_vanishing_defect() {
        // (π₁⊗Kx)×(π₂⊗Ky) for the strongly irreducible uniform-binary model,
        // with π the stationary type law (1/2, 1/2).
        let model = uniform_binary_model();
        let pi = [0.5, 0.5];
        let mut m = PairMeasure::new(PairView::MarkedPair);
        for a in 0..2 {
            for (cx, px) in model.kernel().support(a) {
                for ah in 0..2 {
                    for (cy, py) in model.kernel().support(ah) {
                        m.add_marks(
                            VertexMark::new(a, cx.clone()),
                            VertexMark::new(ah, cy.clone()),
                            pi[a] * px * pi[ah] * py,
                        );
                    }
                }
            }
        }
        assert!((m.total() - 1.0).abs() < 1e-12);
        let d = shift_defect(&m);
        assert!(d.max_defect <= 1e-10, "defect={}", d.max_defect);
    }

    #[test]
    fn shift_defect_view_independent() {
        let model = mtdna_model(0.3).unwrap();
        for seed in 0..20 {
            let m = random_pair_measure(&model, seed + 500);
            let d1 = shift_defect(&m);
            let d2 = shift_defect(&reindex(&m));
            assert_eq!(d1, d2);
        }
    }
}
