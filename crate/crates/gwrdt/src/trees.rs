//! Finite typed trees in canonical breadth-first layout, with conditioned
//! sampling and exact enumeration.
//!
//! The BFS index is the vertex identity used everywhere downstream
//! (cross-tree pairing, empirical measures): children of vertex i are
//! contiguous and follow all children of vertices before i. A tree is
//! therefore fully determined by its per-vertex types and child counts in
//! BFS order, which makes equality decidable and the layout canonical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Alphabet, GwModel, OffspringString};
use crate::{Error, Result};

/// Splittable RNG scheme: worker task `index` under base `seed` draws from
/// an independent ChaCha8 stream. Deterministic in (seed, index) so merged
/// results do not depend on worker count.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Finite typed tree in breadth-first layout.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    types: Vec<usize>,
    child_counts: Vec<usize>,
}

impl Tree {
    /// Build from BFS-ordered types and child counts, checking the layout:
    /// counts must sum to n-1 and every vertex's children must lie inside
    /// the tree.
    pub fn from_bfs(types: Vec<usize>, child_counts: Vec<usize>) -> Result<Tree> {
        if types.is_empty() {
            return Err(Error::InvalidTree("tree must have at least one vertex".into()));
        }
        if types.len() != child_counts.len() {
            return Err(Error::InvalidTree(format!(
                "{} types vs {} child counts",
                types.len(),
                child_counts.len()
            )));
        }
        let n = types.len();
        let total: usize = child_counts.iter().sum();
        if total != n - 1 {
            return Err(Error::InvalidTree(format!(
                "child counts sum to {total}, expected {}",
                n - 1
            )));
        }
        // In BFS layout the first child of vertex v sits right after all
        // children of vertices < v; the ranges tile [1, n) and a parent
        // must precede its children.
        let mut next = 1usize;
        for (v, &c) in child_counts.iter().enumerate() {
            if c > 0 && next <= v {
                return Err(Error::InvalidTree(format!(
                    "children of vertex {v} would precede it"
                )));
            }
            next += c;
            if next > n {
                return Err(Error::InvalidTree("child range exceeds vertex count".into()));
            }
        }
        Ok(Tree {
            types,
            child_counts,
        })
    }

    /// Single-vertex tree.
    pub fn single(root_type: usize) -> Tree {
        Tree {
            types: vec![root_type],
            child_counts: vec![0],
        }
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn vtype(&self, v: usize) -> usize {
        self.types[v]
    }

    pub fn child_count(&self, v: usize) -> usize {
        self.child_counts[v]
    }

    pub fn types(&self) -> &[usize] {
        &self.types
    }

    pub fn child_counts(&self) -> &[usize] {
        &self.child_counts
    }

    /// Index of the first child of `v`.
    pub fn child_start(&self, v: usize) -> usize {
        1 + self.child_counts[..v].iter().sum::<usize>()
    }

    /// BFS indices of the children of `v`.
    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let start = self.child_start(v);
        start..start + self.child_counts[v]
    }

    /// Parent of each vertex (root = None), derived from the layout.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.n()];
        for v in 0..self.n() {
            for c in self.children(v) {
                parent[c] = Some(v);
            }
        }
        parent
    }

    /// Offspring string of `v`: the ordered types of its children.
    pub fn offspring(&self, v: usize) -> OffspringString {
        OffspringString::new(self.children(v).map(|c| self.types[c]).collect())
    }

    /// Text form: `n` then BFS `type:childcount` tokens.
    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let mut out = self.n().to_string();
        for v in 0..self.n() {
            out.push(' ');
            out.push_str(alphabet.symbol(self.types[v]));
            out.push(':');
            out.push_str(&self.child_counts[v].to_string());
        }
        out
    }

    /// Parse the text form produced by [`Tree::to_text`].
    pub fn from_text(line: &str, alphabet: &Alphabet) -> Result<Tree> {
        let mut parts = line.split_whitespace();
        let n: usize = parts
            .next()
            .ok_or_else(|| Error::InvalidTree("empty tree line".into()))?
            .parse()
            .map_err(|e| Error::InvalidTree(format!("bad vertex count: {e}")))?;
        let mut types = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for token in parts {
            let (sym, count) = token
                .rsplit_once(':')
                .ok_or_else(|| Error::InvalidTree(format!("bad token {token:?}")))?;
            types.push(alphabet.index_of(sym)?);
            counts.push(
                count
                    .parse()
                    .map_err(|e| Error::InvalidTree(format!("bad child count {count:?}: {e}")))?,
            );
        }
        if types.len() != n {
            return Err(Error::InvalidTree(format!(
                "line declares {n} vertices but lists {}",
                types.len()
            )));
        }
        Tree::from_bfs(types, counts)
    }
}

/// A vertex's mark: its type and ordered offspring string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexMark {
    pub vtype: usize,
    pub offspring: OffspringString,
}

impl VertexMark {
    pub fn new(vtype: usize, offspring: OffspringString) -> Self {
        VertexMark { vtype, offspring }
    }

    /// Serialized as `type|c₁c₂…` using alphabet labels.
    pub fn label(&self, alphabet: &Alphabet) -> String {
        format!(
            "{}|{}",
            alphabet.symbol(self.vtype),
            self.offspring.label(alphabet)
        )
    }
}

/// Marks in BFS vertex order; length n.
pub fn vertex_marks(t: &Tree) -> Vec<VertexMark> {
    (0..t.n())
        .map(|v| VertexMark::new(t.vtype(v), t.offspring(v)))
        .collect()
}

/// Rebuild the tree from its BFS mark sequence (inverse of
/// [`vertex_marks`]): child types must agree with the offspring strings.
pub fn tree_from_marks(marks: &[VertexMark]) -> Result<Tree> {
    let types: Vec<usize> = marks.iter().map(|m| m.vtype).collect();
    let counts: Vec<usize> = marks.iter().map(|m| m.offspring.len()).collect();
    let tree = Tree::from_bfs(types, counts)?;
    for (v, mark) in marks.iter().enumerate() {
        if tree.offspring(v) != mark.offspring {
            return Err(Error::InvalidTree(format!(
                "offspring string of vertex {v} does not match its children"
            )));
        }
    }
    Ok(tree)
}

/// Probability of the tree under the model: root-law factor times the
/// kernel factor of every vertex's offspring string. Zero when any factor
/// is outside the kernel support. Structural invalidity (types outside
/// the alphabet, counts above the cap) is an error instead.
pub fn tree_prob(model: &GwModel, t: &Tree) -> Result<f64> {
    let n_types = model.n_types();
    for v in 0..t.n() {
        if t.vtype(v) >= n_types {
            return Err(Error::InvalidTree(format!(
                "vertex {v} has type id {} outside the alphabet",
                t.vtype(v)
            )));
        }
        if t.child_count(v) > model.cap() {
            return Err(Error::InvalidTree(format!(
                "vertex {v} has {} children, cap is {}",
                t.child_count(v),
                model.cap()
            )));
        }
    }
    let mut p = model.root_law()[t.vtype(0)];
    for v in 0..t.n() {
        if p == 0.0 {
            return Ok(0.0);
        }
        p *= model.kernel().prob(t.vtype(v), &t.offspring(v));
    }
    Ok(p)
}

/// Outcome of unconditioned sampling: overflow past the size cap is an
/// ordinary value (critical trees are finite a.s. but heavy-tailed).
#[derive(Debug, Clone, PartialEq)]
pub enum Sampled {
    Complete(Tree),
    Overflow { generated: usize },
}

/// Default vertex cap for unconditioned sampling.
pub const SAMPLE_SIZE_CAP: usize = 1_000_000;

fn sample_offspring<'a, R: Rng>(
    rng: &mut R,
    model: &'a GwModel,
    parent: usize,
) -> &'a OffspringString {
    let support = model.kernel().support(parent);
    let mut u: f64 = rng.random::<f64>() * model.kernel().row_sum(parent);
    for (s, p) in support {
        u -= p;
        if u <= 0.0 {
            return s;
        }
    }
    // Rounding left us past the end; the row is non-empty by construction.
    &support[support.len() - 1].0
}

/// One unconditioned realization, generated breadth-first with the given
/// RNG. Stops with `Overflow` as soon as the vertex count would exceed
/// `size_cap`.
pub fn sample_tree_with<R: Rng>(rng: &mut R, model: &GwModel, size_cap: usize) -> Sampled {
    let root = {
        let mut u: f64 = rng.random::<f64>();
        let mut choice = model.n_types() - 1;
        for (a, &p) in model.root_law().iter().enumerate() {
            u -= p;
            if u <= 0.0 {
                choice = a;
                break;
            }
        }
        choice
    };
    let mut types = vec![root];
    let mut counts: Vec<usize> = Vec::new();
    let mut next = 0usize;
    while next < types.len() {
        let offspring = sample_offspring(rng, model, types[next]);
        if types.len() + offspring.len() > size_cap {
            return Sampled::Overflow {
                generated: types.len(),
            };
        }
        counts.push(offspring.len());
        types.extend_from_slice(offspring.types());
        next += 1;
    }
    Sampled::Complete(Tree {
        types,
        child_counts: counts,
    })
}

/// Seeded unconditioned sample; identical tree on repeated calls with the
/// same seed.
pub fn sample_tree(model: &GwModel, seed: u64, size_cap: usize) -> Sampled {
    let mut rng = stream_rng(seed, 0);
    sample_tree_with(&mut rng, model, size_cap)
}

/// Whether any tree of exactly `n` vertices has positive probability:
/// dynamic program over achievable subtree sizes per type.
pub fn size_achievable(model: &GwModel, n: usize) -> bool {
    if n == 0 {
        return false;
    }
    let n_types = model.n_types();
    // reach[a][s] = a subtree rooted at type a can have exactly s vertices.
    let mut reach = vec![vec![false; n + 1]; n_types];
    for s in 1..=n {
        for a in 0..n_types {
            'atoms: for (c, _) in model.kernel().support(a) {
                if c.is_empty() {
                    if s == 1 {
                        reach[a][s] = true;
                        break 'atoms;
                    }
                    continue;
                }
                if s == 1 {
                    continue;
                }
                // Can the children partition s-1 vertices?
                let mut feasible = vec![false; s];
                feasible[0] = true;
                for &child in c.types() {
                    let mut next = vec![false; s];
                    for m in 0..s {
                        if !feasible[m] {
                            continue;
                        }
                        for sub in 1..s - m {
                            if reach[child][sub] {
                                next[m + sub] = true;
                            }
                        }
                    }
                    feasible = next;
                }
                if feasible[s - 1] {
                    reach[a][s] = true;
                    break 'atoms;
                }
            }
        }
    }
    (0..n_types).any(|a| model.root_law()[a] > 0.0 && reach[a][n])
}

/// Rejection-sample a tree conditioned on having exactly `n` vertices.
/// Fails fast with `NoSuchSize` when the size is structurally impossible,
/// and with `ConditioningFailed` (including an acceptance-rate estimate)
/// when `max_rejects` attempts all miss.
pub fn sample_conditioned(model: &GwModel, n: usize, seed: u64, max_rejects: u64) -> Result<Tree> {
    let mut rng = stream_rng(seed, 0);
    sample_conditioned_with(&mut rng, model, n, max_rejects)
}

/// As [`sample_conditioned`] but drawing from a caller-provided stream,
/// so worker tasks can consume consecutive conditioned samples.
pub fn sample_conditioned_with<R: Rng>(
    rng: &mut R,
    model: &GwModel,
    n: usize,
    max_rejects: u64,
) -> Result<Tree> {
    if n == 0 || !size_achievable(model, n) {
        return Err(Error::NoSuchSize { n });
    }
    for attempt in 1..=max_rejects {
        // Generation past n vertices counts as a reject; aborting there
        // keeps the expected work per attempt at O(n).
        if let Sampled::Complete(t) = sample_tree_with(rng, model, n) {
            if t.n() == n {
                return Ok(t);
            }
        }
        if attempt == max_rejects {
            return Err(Error::ConditioningFailed {
                attempts: max_rejects,
                acceptance: 1.0 / max_rejects as f64,
            });
        }
    }
    unreachable!("loop returns or errors on the last attempt")
}

/// All trees of exactly `n` vertices with positive probability, with
/// exact probabilities. `total` is P(|V(T)| = n).
#[derive(Debug, Clone)]
pub struct WeightedTreeList {
    pub items: Vec<(Tree, f64)>,
    pub total: f64,
}

impl WeightedTreeList {
    /// Conditional probabilities given size n (weights / total).
    pub fn conditional(&self) -> Vec<f64> {
        self.items.iter().map(|(_, w)| w / self.total).collect()
    }
}

/// Default search-node budget for [`enumerate_trees`].
pub const ENUMERATION_BUDGET: usize = 20_000_000;

/// Exhaustive enumeration of size-`n` trees by BFS-frontier expansion.
/// The search walks partial trees in canonical order, so the output list
/// is sorted and duplicate-free. `CountExceeded` guards runaway searches.
pub fn enumerate_trees_budget(model: &GwModel, n: usize, budget: usize) -> Result<WeightedTreeList> {
    struct Search<'a> {
        model: &'a GwModel,
        n: usize,
        budget: usize,
        nodes: usize,
        types: Vec<usize>,
        counts: Vec<usize>,
        items: Vec<(Tree, f64)>,
        total: f64,
    }

    impl Search<'_> {
        fn expand(&mut self, next: usize, prob: f64) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::CountExceeded {
                    budget: self.budget,
                });
            }
            if next == self.types.len() {
                if self.types.len() == self.n {
                    let tree = Tree {
                        types: self.types.clone(),
                        child_counts: self.counts.clone(),
                    };
                    self.items.push((tree, prob));
                    self.total += prob;
                }
                return Ok(());
            }
            let parent_type = self.types[next];
            let n_atoms = self.model.kernel().support(parent_type).len();
            for atom in 0..n_atoms {
                let (string, p) = {
                    let (s, p) = &self.model.kernel().support(parent_type)[atom];
                    (s.clone(), *p)
                };
                if self.types.len() + string.len() > self.n {
                    continue;
                }
                self.counts.push(string.len());
                self.types.extend_from_slice(string.types());
                self.expand(next + 1, prob * p)?;
                self.types.truncate(self.types.len() - string.len());
                self.counts.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        model,
        n,
        budget,
        nodes: 0,
        types: Vec::with_capacity(n),
        counts: Vec::with_capacity(n),
        items: Vec::new(),
        total: 0.0,
    };
    for root in 0..model.n_types() {
        let mu = model.root_law()[root];
        if mu == 0.0 {
            continue;
        }
        search.types.push(root);
        search.expand(0, mu)?;
        search.types.pop();
    }
    Ok(WeightedTreeList {
        items: search.items,
        total: search.total,
    })
}

/// [`enumerate_trees_budget`] with the default budget.
pub fn enumerate_trees(model: &GwModel, n: usize) -> Result<WeightedTreeList> {
    enumerate_trees_budget(model, n, ENUMERATION_BUDGET)
}
