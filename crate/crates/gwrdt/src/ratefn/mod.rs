//! Relative entropy, pair rate functions, log-MGFs, and the
//! Legendre-transform route to rate-distortion curves.
//!
//! Everything here is in nats. Infinite rates are a tagged sentinel
//! ([`Rate::Infinite`]), never a floating-point overflow, so comparisons
//! and reports stay total.

mod entropy;
mod irho;
mod legendre;
mod mgf;

pub use entropy::{distortion_mean, rate_i1, rate_i2, rel_entropy, rel_entropy_vec};
pub use irho::{i_rho, IRhoOpts};
pub use legendre::{rd_function, rd_summary, LambdaSample, RdOpts, RdSummary};
pub use mgf::{d_average, d_min_n, lambda_inf, lambda_n, Estimate, MgfOrder};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::empirical::{PairMeasure, ShiftDefect};
use crate::model::{Alphabet, GwModel, OffspringString};
use crate::trees::{Tree, VertexMark};
use crate::{Error, Result};

/// A nonnegative rate, possibly the +∞ sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Finite(f64),
    Infinite,
}

impl Rate {
    pub fn is_finite(&self) -> bool {
        matches!(self, Rate::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Rate::Finite(v) => Some(*v),
            Rate::Infinite => None,
        }
    }

    /// Finite value or panic; for tests and callers that already checked.
    pub fn expect_finite(&self) -> f64 {
        self.finite().expect("rate is infinite")
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Finite(v) => write!(f, "{v}"),
            Rate::Infinite => write!(f, "inf"),
        }
    }
}

/// Outcome of a rate-function evaluation. `argmin` is populated by the
/// constrained minimization ([`i_rho`]); the defect records how close the
/// evaluated or minimizing measure is to shift-invariance.
#[derive(Debug, Clone)]
pub struct RateValue {
    pub value: Rate,
    pub argmin: Option<PairMeasure>,
    pub defect: Option<ShiftDefect>,
    /// |⟨ρ, ν⟩ − z| of the argmin, where applicable.
    pub moment_residual: Option<f64>,
}

/// Exact vs Monte Carlo evaluation of finite-n quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Mc,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Mc => write!(f, "mc"),
        }
    }
}

/// Bounded single-letter distortion over vertex-mark pairs.
///
/// Built-ins: `type_hamming` (1 when the vertex types differ) and
/// `mark_hamming` (type mismatch plus per-position offspring mismatches,
/// normalized by 1 + cap). Arbitrary tables fall back to a default value
/// for pairs they do not list, so a value exists for every mark pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionTable {
    kind: DistortionKind,
    bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum DistortionKind {
    TypeHamming,
    MarkHamming {
        cap: usize,
    },
    Table {
        values: BTreeMap<(VertexMark, VertexMark), f64>,
        default: f64,
    },
}

impl DistortionTable {
    /// 1 if the vertex types differ, else 0.
    pub fn type_hamming() -> Self {
        DistortionTable {
            kind: DistortionKind::TypeHamming,
            bound: 1.0,
        }
    }

    /// (type mismatch + per-position offspring mismatches) / (1 + cap);
    /// positions where only one string has a child count as mismatches.
    pub fn mark_hamming(cap: usize) -> Self {
        DistortionTable {
            kind: DistortionKind::MarkHamming { cap },
            bound: 1.0,
        }
    }

    /// Explicit table with a default for unlisted pairs. All values must
    /// be finite and nonnegative (rates rely on a bounded distortion).
    pub fn from_entries(
        values: BTreeMap<(VertexMark, VertexMark), f64>,
        default: f64,
    ) -> Result<Self> {
        if !default.is_finite() || default < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "distortion default {default} must be finite and nonnegative"
            )));
        }
        let mut bound = default;
        for v in values.values() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "distortion value {v} must be finite and nonnegative"
                )));
            }
            bound = bound.max(*v);
        }
        Ok(DistortionTable {
            kind: DistortionKind::Table { values, default },
            bound,
        })
    }

    /// Single-letter distortion of a mark pair.
    pub fn eval(&self, x: &VertexMark, y: &VertexMark) -> f64 {
        match &self.kind {
            DistortionKind::TypeHamming => {
                if x.vtype != y.vtype {
                    1.0
                } else {
                    0.0
                }
            }
            DistortionKind::MarkHamming { cap } => {
                let mut mismatches = if x.vtype != y.vtype { 1.0 } else { 0.0 };
                let (cx, cy) = (x.offspring.types(), y.offspring.types());
                for i in 0..cx.len().max(cy.len()) {
                    match (cx.get(i), cy.get(i)) {
                        (Some(a), Some(b)) if a == b => {}
                        _ => mismatches += 1.0,
                    }
                }
                mismatches / (1.0 + *cap as f64)
            }
            DistortionKind::Table { values, default } => values
                .get(&(x.clone(), y.clone()))
                .copied()
                .unwrap_or(*default),
        }
    }

    /// Maximum value the distortion can take.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Average per-vertex distortion ρ⁽ⁿ⁾ of two size-n trees under BFS
    /// vertex pairing.
    pub fn tree_distortion(&self, tx: &Tree, ty: &Tree) -> Result<f64> {
        if tx.n() != ty.n() {
            return Err(Error::SizeMismatch {
                left: tx.n(),
                right: ty.n(),
            });
        }
        let n = tx.n();
        let mut total = 0.0;
        for v in 0..n {
            total += self.eval(
                &VertexMark::new(tx.vtype(v), tx.offspring(v)),
                &VertexMark::new(ty.vtype(v), ty.offspring(v)),
            );
        }
        Ok(total / n as f64)
    }
}

/// All marks (type, offspring string) with positive kernel probability
/// under the model, in canonical order. This is the support on which
/// mark laws and the constrained optimizer live.
pub fn support_marks(model: &GwModel) -> Vec<VertexMark> {
    let mut out = Vec::new();
    for a in 0..model.n_types() {
        for (c, _) in model.kernel().support(a) {
            out.push(VertexMark::new(a, c.clone()));
        }
    }
    out
}

// --- Distortion table file schema ---------------------------------------

/// JSON distortion table:
/// `{ "default": v, "entries": [ { "x": {"type": s, "children": [...]},
///    "y": {...}, "value": v }, ... ] }`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionConfig {
    pub default: f64,
    #[serde(default)]
    pub entries: Vec<DistortionEntryConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionEntryConfig {
    pub x: MarkConfig,
    pub y: MarkConfig,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkConfig {
    #[serde(rename = "type")]
    pub vtype: String,
    #[serde(default)]
    pub children: Vec<String>,
}

impl MarkConfig {
    fn build(&self, alphabet: &Alphabet) -> Result<VertexMark> {
        let vtype = alphabet.index_of(&self.vtype)?;
        let mut children = Vec::with_capacity(self.children.len());
        for c in &self.children {
            children.push(alphabet.index_of(c)?);
        }
        Ok(VertexMark::new(vtype, OffspringString::new(children)))
    }
}

impl DistortionConfig {
    pub fn build(&self, alphabet: &Alphabet) -> Result<DistortionTable> {
        let mut values = BTreeMap::new();
        for (i, entry) in self.entries.iter().enumerate() {
            let x = entry
                .x
                .build(alphabet)
                .map_err(|e| Error::Config(format!("entries[{i}].x: {e}")))?;
            let y = entry
                .y
                .build(alphabet)
                .map_err(|e| Error::Config(format!("entries[{i}].y: {e}")))?;
            values.insert((x, y), entry.value);
        }
        DistortionTable::from_entries(values, self.default)
    }
}

/// Parse a distortion table from JSON against a model alphabet.
pub fn distortion_from_json(text: &str, alphabet: &Alphabet) -> Result<DistortionTable> {
    let config: DistortionConfig = serde_json::from_str(text)?;
    config.build(alphabet)
}
