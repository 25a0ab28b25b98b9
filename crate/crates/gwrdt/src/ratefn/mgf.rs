//! Log moment generating functions of the distortion, at finite n by
//! exact enumeration or Monte Carlo, and in the limit through the
//! stationary pair law.

use rand::Rng;

use super::{support_marks, DistortionTable, Mode};
use crate::model::GwModel;
use crate::spectral::PerronData;
use crate::trees::{
    enumerate_trees_budget, sample_conditioned_with, stream_rng, vertex_marks, Tree, VertexMark,
    ENUMERATION_BUDGET,
};
use crate::{Error, Result};

/// Rejection budget for Monte Carlo conditioned draws.
pub(crate) const MC_MAX_REJECTS: u64 = 50_000_000;

/// Which side sits inside the log in the limiting log-MGF. The default
/// averages over codebook-side marks outside the log and takes the
/// log-MGF over source-side marks inside, matching the displayed limit;
/// the swapped ordering is available for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgfOrder {
    /// Outer average over π₂⊗Ky, inner log-MGF over π₁⊗Kx.
    CodebookOuter,
    /// Outer average over π₁⊗Kx, inner log-MGF over π₂⊗Ky.
    SourceOuter,
}

/// Point estimate with an optional standard error (absent for exact
/// evaluations).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Mark law π_i ⊗ K: weight π_i(a)·K{c|a} on each support mark (a, c).
fn mark_law(model: &GwModel, type_law: &[f64]) -> Vec<(VertexMark, f64)> {
    support_marks(model)
        .into_iter()
        .map(|m| {
            let w = type_law[m.vtype] * model.kernel().prob(m.vtype, &m.offspring);
            (m, w)
        })
        .collect()
}

/// log Σ wᵢ·exp(sᵢ) with max-shift stabilization; weights must sum to a
/// positive total.
fn log_sum_exp(terms: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let max = terms
        .clone()
        .filter(|(w, _)| *w > 0.0)
        .map(|(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, s)| w * (s - max).exp())
        .sum();
    max + sum.ln()
}

/// Limiting log-MGF of the single-letter distortion under the stationary
/// pair marginals: an outer average of inner log-MGFs over independent
/// mark laws π₁⊗Kx and π₂⊗Ky.
pub fn lambda_inf(
    t: f64,
    pi: &PerronData,
    model_x: &GwModel,
    model_y: &GwModel,
    rho: &DistortionTable,
    order: MgfOrder,
) -> f64 {
    let px = mark_law(model_x, &pi.pi1);
    let py = mark_law(model_y, &pi.pi2);
    let (outer, inner, swap) = match order {
        MgfOrder::CodebookOuter => (&py, &px, false),
        MgfOrder::SourceOuter => (&px, &py, true),
    };
    let mut total = 0.0;
    for (om, ow) in outer {
        if *ow <= 0.0 {
            continue;
        }
        let lse = log_sum_exp(inner.iter().map(|(im, iw)| {
            let r = if swap {
                rho.eval(om, im)
            } else {
                rho.eval(im, om)
            };
            (*iw, t * r)
        }));
        total += ow * lse;
    }
    total
}

/// Mean distortion under independent marks 𝒜_X ~ π₁⊗Kx, 𝒜_Y ~ π₂⊗Ky;
/// equals the derivative of [`lambda_inf`] at t = 0.
pub fn d_average(
    pi: &PerronData,
    model_x: &GwModel,
    model_y: &GwModel,
    rho: &DistortionTable,
) -> f64 {
    let px = mark_law(model_x, &pi.pi1);
    let py = mark_law(model_y, &pi.pi2);
    let mut total = 0.0;
    for (xm, xw) in &px {
        if *xw <= 0.0 {
            continue;
        }
        for (ym, yw) in &py {
            total += xw * yw * rho.eval(xm, ym);
        }
    }
    total
}

/// Exact size-n conditioned laws of a model pair with the pairwise
/// distortion matrix between their supports. The backbone of every exact
/// finite-n computation.
#[derive(Debug, Clone)]
pub(crate) struct SizeConditioned {
    pub n: usize,
    /// Conditional probabilities of the x-side support.
    pub px: Vec<f64>,
    /// Conditional probabilities of the y-side support.
    pub qy: Vec<f64>,
    pub ln_qy: Vec<f64>,
    /// Row-major [x-index * ny + y-index] values of ρ⁽ⁿ⁾.
    pub rho: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub trees_y: Vec<Tree>,
}

impl SizeConditioned {
    pub fn build(
        model_x: &GwModel,
        model_y: &GwModel,
        n: usize,
        rho: &DistortionTable,
        budget: usize,
    ) -> Result<SizeConditioned> {
        let lx = enumerate_trees_budget(model_x, n, budget)?;
        let ly = enumerate_trees_budget(model_y, n, budget)?;
        if lx.total <= 0.0 || ly.total <= 0.0 {
            return Err(Error::NoSuchSize { n });
        }
        let px = lx.conditional();
        let qy = ly.conditional();
        let ln_qy: Vec<f64> = qy.iter().map(|q| q.ln()).collect();
        let marks_x: Vec<Vec<VertexMark>> = lx.items.iter().map(|(t, _)| vertex_marks(t)).collect();
        let marks_y: Vec<Vec<VertexMark>> = ly.items.iter().map(|(t, _)| vertex_marks(t)).collect();
        let (nx, ny) = (marks_x.len(), marks_y.len());
        let mut dist = vec![0.0; nx * ny];
        for (i, mx) in marks_x.iter().enumerate() {
            for (j, my) in marks_y.iter().enumerate() {
                let total: f64 = mx.iter().zip(my).map(|(a, b)| rho.eval(a, b)).sum();
                dist[i * ny + j] = total / n as f64;
            }
        }
        Ok(SizeConditioned {
            n,
            px,
            qy,
            ln_qy,
            rho: dist,
            nx,
            ny,
            trees_y: ly.items.into_iter().map(|(t, _)| t).collect(),
        })
    }

    /// Λ_n(t) = (1/n)·Σ_x P_n(x)·log Σ_y Q_n(y)·exp(n·t·ρ⁽ⁿ⁾(x, y)).
    pub fn lambda(&self, t: f64) -> f64 {
        let n = self.n as f64;
        let mut total = 0.0;
        for i in 0..self.nx {
            let row = &self.rho[i * self.ny..(i + 1) * self.ny];
            let max = row
                .iter()
                .zip(&self.ln_qy)
                .map(|(r, lq)| lq + n * t * r)
                .fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row
                .iter()
                .zip(&self.ln_qy)
                .map(|(r, lq)| (lq + n * t * r - max).exp())
                .sum();
            total += self.px[i] * (max + sum.ln());
        }
        total / n
    }

    /// Average over P_n of the minimum distortion against supp Q_n.
    pub fn d_min(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nx {
            let row = &self.rho[i * self.ny..(i + 1) * self.ny];
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            total += self.px[i] * min;
        }
        total
    }

    /// E_{P_n × Q_n}[ρ⁽ⁿ⁾] = Λ_n'(0).
    pub fn d_av(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nx {
            let row = &self.rho[i * self.ny..(i + 1) * self.ny];
            let inner: f64 = row.iter().zip(&self.qy).map(|(r, q)| r * q).sum();
            total += self.px[i] * inner;
        }
        total
    }
}

fn mean_and_stderr(values: &[f64]) -> Estimate {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return Estimate {
            value: mean,
            stderr: None,
        };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    Estimate {
        value: mean,
        stderr: Some((var / m).sqrt()),
    }
}

/// Finite-n log-MGF Λ_n(t). Exact mode enumerates both conditioned laws;
/// MC mode draws the outer conditioning tree and keeps the inner sum
/// exact when the y-side enumerates within budget, sampling it otherwise.
pub fn lambda_n(
    t: f64,
    model_x: &GwModel,
    model_y: &GwModel,
    n: usize,
    rho: &DistortionTable,
    mode: Mode,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    match mode {
        Mode::Exact => {
            let sc = SizeConditioned::build(model_x, model_y, n, rho, ENUMERATION_BUDGET)?;
            Ok(Estimate {
                value: sc.lambda(t),
                stderr: None,
            })
        }
        Mode::Mc => {
            let inner = InnerLaw::build(model_y, n, rho)?;
            let mut values = Vec::with_capacity(samples);
            for i in 0..samples {
                let mut rng = stream_rng(seed, i as u64);
                let x = sample_conditioned_with(&mut rng, model_x, n, MC_MAX_REJECTS)?;
                let lse = inner.log_mgf(&x, n as f64 * t, samples, &mut rng)?;
                values.push(lse / n as f64);
            }
            Ok(mean_and_stderr(&values))
        }
    }
}

/// Expected minimum distortion d_min⁽ⁿ⁾ = E_{P_n}[min over supp Q_n of
/// ρ⁽ⁿ⁾(X, ·)]. MC mode notes: a sampled inner minimum can only
/// overestimate the essential infimum.
pub fn d_min_n(
    model_x: &GwModel,
    model_y: &GwModel,
    n: usize,
    rho: &DistortionTable,
    mode: Mode,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    match mode {
        Mode::Exact => {
            let sc = SizeConditioned::build(model_x, model_y, n, rho, ENUMERATION_BUDGET)?;
            Ok(Estimate {
                value: sc.d_min(),
                stderr: None,
            })
        }
        Mode::Mc => {
            let inner = InnerLaw::build(model_y, n, rho)?;
            let mut values = Vec::with_capacity(samples);
            for i in 0..samples {
                let mut rng = stream_rng(seed, i as u64);
                let x = sample_conditioned_with(&mut rng, model_x, n, MC_MAX_REJECTS)?;
                values.push(inner.min_distortion(&x, samples, &mut rng)?);
            }
            Ok(mean_and_stderr(&values))
        }
    }
}

/// Inner y-side law for MC estimators: exact enumeration when it fits in
/// a reduced budget, otherwise per-draw conditioned samples.
struct InnerLaw<'a> {
    model: &'a GwModel,
    n: usize,
    rho: &'a DistortionTable,
    exact: Option<(Vec<Vec<VertexMark>>, Vec<f64>)>,
}

const MC_INNER_BUDGET: usize = 500_000;

impl<'a> InnerLaw<'a> {
    fn build(model: &'a GwModel, n: usize, rho: &'a DistortionTable) -> Result<Self> {
        let exact = match enumerate_trees_budget(model, n, MC_INNER_BUDGET) {
            Ok(list) => {
                if list.total <= 0.0 {
                    return Err(Error::NoSuchSize { n });
                }
                let q = list.conditional();
                let marks = list.items.iter().map(|(t, _)| vertex_marks(t)).collect();
                Some((marks, q))
            }
            Err(Error::CountExceeded { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(InnerLaw {
            model,
            n,
            rho,
            exact,
        })
    }

    fn distortion_to(&self, marks_x: &[VertexMark], marks_y: &[VertexMark]) -> f64 {
        let total: f64 = marks_x
            .iter()
            .zip(marks_y)
            .map(|(a, b)| self.rho.eval(a, b))
            .sum();
        total / self.n as f64
    }

    /// log ∫ exp(s·ρ⁽ⁿ⁾(x, y)) dQ_n(y), exact or sampled.
    fn log_mgf<R: Rng>(&self, x: &Tree, s: f64, samples: usize, rng: &mut R) -> Result<f64> {
        let marks_x = vertex_marks(x);
        match &self.exact {
            Some((marks_y, q)) => Ok(log_sum_exp(marks_y.iter().zip(q.iter()).map(|(my, qy)| {
                (*qy, s * self.distortion_to(&marks_x, my))
            }))),
            None => {
                let mut terms = Vec::with_capacity(samples);
                for _ in 0..samples {
                    let y = sample_conditioned_with(rng, self.model, self.n, MC_MAX_REJECTS)?;
                    terms.push(s * self.distortion_to(&marks_x, &vertex_marks(&y)));
                }
                let w = 1.0 / samples as f64;
                Ok(log_sum_exp(terms.iter().map(|&v| (w, v))))
            }
        }
    }

    fn min_distortion<R: Rng>(&self, x: &Tree, samples: usize, rng: &mut R) -> Result<f64> {
        let marks_x = vertex_marks(x);
        match &self.exact {
            Some((marks_y, _)) => Ok(marks_y
                .iter()
                .map(|my| self.distortion_to(&marks_x, my))
                .fold(f64::INFINITY, f64::min)),
            None => {
                let mut min = f64::INFINITY;
                for _ in 0..samples {
                    let y = sample_conditioned_with(rng, self.model, self.n, MC_MAX_REJECTS)?;
                    min = min.min(self.distortion_to(&marks_x, &vertex_marks(&y)));
                }
                Ok(min)
            }
        }
    }
}
