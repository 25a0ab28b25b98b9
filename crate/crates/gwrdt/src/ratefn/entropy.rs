//! Relative entropy and the pair rate functions.

use std::collections::BTreeMap;

use super::{DistortionTable, Rate, RateValue};
use crate::empirical::{reindex, shift_defect, PairKey, PairMeasure, PairView};
use crate::model::GwModel;

/// Relative entropy H(ν‖μ) = Σ ν log(ν/μ) in nats over a shared support
/// universe, with the conventions 0·log(0/q) = 0 and ν(x) > 0 with
/// μ(x) = 0 giving +∞.
pub fn rel_entropy<K: Ord>(nu: &BTreeMap<K, f64>, mu: &BTreeMap<K, f64>) -> Rate {
    let mut h = 0.0;
    for (k, &p) in nu {
        if p <= 0.0 {
            continue;
        }
        let q = mu.get(k).copied().unwrap_or(0.0);
        if q <= 0.0 {
            return Rate::Infinite;
        }
        h += p * (p / q).ln();
    }
    Rate::Finite(h)
}

/// [`rel_entropy`] over dense index-aligned vectors.
pub fn rel_entropy_vec(nu: &[f64], mu: &[f64]) -> Rate {
    debug_assert_eq!(nu.len(), mu.len());
    let mut h = 0.0;
    for (&p, &q) in nu.iter().zip(mu) {
        if p <= 0.0 {
            continue;
        }
        if q <= 0.0 {
            return Rate::Infinite;
        }
        h += p * (p / q).ln();
    }
    Rate::Finite(h)
}

/// Mean distortion ⟨ρ, μ⟩ of a pair measure, in whichever view it is
/// keyed; the two views give the same value.
pub fn distortion_mean(rho: &DistortionTable, mu: &PairMeasure) -> f64 {
    let mut total = 0.0;
    for (key, &w) in mu.weights() {
        let (x, y) = key.as_marks();
        total += w * rho.eval(&x, &y);
    }
    total
}

fn type_marginal(mu: &PairMeasure, coordinate: usize, n_types: usize) -> Vec<f64> {
    let mut law = vec![0.0; n_types];
    for (key, &w) in mu.weights() {
        let (x, y) = key.as_marks();
        let t = if coordinate == 0 { x.vtype } else { y.vtype };
        law[t] += w;
    }
    law
}

/// Process-level rate function on mark-pair measures: the relative
/// entropy of ν against the product base ν_{1,1}⊗Kx × ν_{2,1}⊗Ky, gated
/// to +∞ when ν is not shift-invariant within `tol`. A paired-marks
/// input is re-keyed to the marked-pair view first.
pub fn rate_i1(nu: &PairMeasure, model_x: &GwModel, model_y: &GwModel, tol: f64) -> RateValue {
    let marked;
    let nu = if nu.view() == PairView::MarkedPair {
        nu
    } else {
        marked = reindex(nu);
        &marked
    };
    let defect = shift_defect(nu);
    if defect.max_defect > tol {
        return RateValue {
            value: Rate::Infinite,
            argmin: None,
            defect: Some(defect),
            moment_residual: None,
        };
    }
    let nu11 = type_marginal(nu, 0, model_x.n_types());
    let nu21 = type_marginal(nu, 1, model_y.n_types());
    let mut h = 0.0;
    let mut value = None;
    for (key, &w) in nu.weights() {
        if w <= 0.0 {
            continue;
        }
        let (x, y) = key.as_marks();
        let base = nu11[x.vtype]
            * model_x.kernel().prob(x.vtype, &x.offspring)
            * nu21[y.vtype]
            * model_y.kernel().prob(y.vtype, &y.offspring);
        if base <= 0.0 {
            value = Some(Rate::Infinite);
            break;
        }
        h += w * (w / base).ln();
    }
    RateValue {
        value: value.unwrap_or(Rate::Finite(h)),
        argmin: None,
        defect: Some(defect),
        moment_residual: None,
    }
}

/// Rate function on paired-marks measures: relative entropy of ω against
/// ω₁⊗Kx×Ky, where ω₁ is the type-pair marginal and the base factorizes
/// as ω₁(a,b)·Kx{c_a|a}·Ky{c_b|b}. Same shift-invariance gate as
/// [`rate_i1`]; a marked-pair input is re-keyed first.
pub fn rate_i2(omega: &PairMeasure, model_x: &GwModel, model_y: &GwModel, tol: f64) -> RateValue {
    let paired;
    let omega = if omega.view() == PairView::PairedMarks {
        omega
    } else {
        paired = reindex(omega);
        &paired
    };
    let defect = shift_defect(omega);
    if defect.max_defect > tol {
        return RateValue {
            value: Rate::Infinite,
            argmin: None,
            defect: Some(defect),
            moment_residual: None,
        };
    }
    let omega1 = omega.type_pair_marginal();
    let mut h = 0.0;
    let mut value = None;
    for (key, &w) in omega.weights() {
        if w <= 0.0 {
            continue;
        }
        let PairKey::Paired((a, b), (ca, cb)) = key else {
            unreachable!("paired view holds paired keys");
        };
        let base = omega1.get(&(*a, *b)).copied().unwrap_or(0.0)
            * model_x.kernel().prob(*a, ca)
            * model_y.kernel().prob(*b, cb);
        if base <= 0.0 {
            value = Some(Rate::Infinite);
            break;
        }
        h += w * (w / base).ln();
    }
    RateValue {
        value: value.unwrap_or(Rate::Finite(h)),
        argmin: None,
        defect: Some(defect),
        moment_residual: None,
    }
}
