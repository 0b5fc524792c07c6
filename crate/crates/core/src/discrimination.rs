//! Channel discrimination with a probe state.
//!
//! A task draws channel Λᵢ with probability pᵢ, sends the probe through it and
//! guesses i from the outcome of a POVM {Mᵢ}. The advantage of ρ over free
//! probes is the ratio of its success probability to the best free one; the
//! latter is a free value, because p_succ(σ) = Tr[Aσ] with
//! A = Σᵢ pᵢ Λᵢ†(Mᵢ).

use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::free_sets::{free_value, FreeSetModel, FreeValueResult};
use crate::linalg::{self, CMatrix, HermitianEigen};
use crate::random;
use crate::solver::Witness;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const PROB_TOL: f64 = 1e-12;
const POVM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    Identity,
    /// ρ ↦ Tr[ρ]·target.
    Replacer {
        #[serde(with = "crate::io::cmatrix")]
        target: CMatrix,
    },
    Kraus {
        #[serde(with = "crate::io::cmatrix_list")]
        operators: Vec<CMatrix>,
    },
}

impl Channel {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Channel::Identity => Ok(()),
            Channel::Replacer { target } => {
                if target.shape() != (dim, dim) {
                    return Err(Error::ShapeMismatch(format!(
                        "replacer target {:?} on {dim} levels",
                        target.shape()
                    )));
                }
                let min = linalg::min_eigenvalue(&linalg::hermitize(target));
                if min < -POVM_TOL {
                    return Err(Error::NotPsd(min));
                }
                let dev = (target.trace().re - 1.0).abs();
                if dev > POVM_TOL {
                    return Err(Error::NotTracePreserving(dev));
                }
                Ok(())
            }
            Channel::Kraus { operators } => {
                if operators.is_empty() {
                    return Err(Error::InvalidTask("empty Kraus list".into()));
                }
                if operators.iter().any(|k| k.shape() != (dim, dim)) {
                    return Err(Error::ShapeMismatch(format!("Kraus operators on {dim} levels")));
                }
                let comp = crate::fock::kraus_completeness(operators);
                let dev = linalg::max_abs_diff(&comp, &CMatrix::identity(dim, dim));
                if dev > POVM_TOL {
                    return Err(Error::NotTracePreserving(dev));
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        match self {
            Channel::Identity => rho.clone(),
            Channel::Replacer { target } => target.scale(rho.trace().re),
            Channel::Kraus { operators } => operators
                .iter()
                .fold(CMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| {
                    acc + k * rho * k.adjoint()
                }),
        }
    }

    /// Heisenberg-picture map Λ†, defined by Tr[M Λ(ρ)] = Tr[Λ†(M) ρ].
    pub fn adjoint(&self, m: &CMatrix) -> CMatrix {
        match self {
            Channel::Identity => m.clone(),
            Channel::Replacer { target } => {
                let d = m.nrows();
                CMatrix::identity(d, d).scale(linalg::trace_product(m, target).re)
            }
            Channel::Kraus { operators } => operators
                .iter()
                .fold(CMatrix::zeros(m.nrows(), m.ncols()), |acc, k| acc + k.adjoint() * m * k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub probability: f64,
    pub channel: Channel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTask")]
pub struct DiscriminationTask {
    pub ensemble: Vec<Branch>,
    #[serde(with = "crate::io::cmatrix_list")]
    pub povm: Vec<CMatrix>,
}

#[derive(Deserialize)]
struct RawTask {
    ensemble: Vec<Branch>,
    #[serde(with = "crate::io::cmatrix_list")]
    povm: Vec<CMatrix>,
}

impl TryFrom<RawTask> for DiscriminationTask {
    type Error = Error;

    fn try_from(raw: RawTask) -> Result<Self> {
        Self::new(raw.ensemble, raw.povm)
    }
}

impl DiscriminationTask {
    pub fn new(ensemble: Vec<Branch>, povm: Vec<CMatrix>) -> Result<Self> {
        let task = Self { ensemble, povm };
        task.validate()?;
        Ok(task)
    }

    pub fn dim(&self) -> usize {
        self.povm.first().map_or(0, |m| m.nrows())
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensemble.is_empty() {
            return Err(Error::InvalidTask("empty ensemble".into()));
        }
        if self.ensemble.len() != self.povm.len() {
            return Err(Error::InvalidTask(format!(
                "{} channels but {} POVM elements",
                self.ensemble.len(),
                self.povm.len()
            )));
        }
        if self.ensemble.iter().any(|b| !(b.probability >= 0.0)) {
            return Err(Error::InvalidTask("negative probability".into()));
        }
        let total: f64 = self.ensemble.iter().map(|b| b.probability).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidTask(format!("probabilities sum to {total}")));
        }
        let d = self.dim();
        let mut sum = CMatrix::zeros(d, d);
        for m in &self.povm {
            if m.shape() != (d, d) {
                return Err(Error::ShapeMismatch("POVM elements differ in size".into()));
            }
            let herm = linalg::hermiticity_error(m);
            if herm > POVM_TOL {
                return Err(Error::InvalidTask(format!("POVM element not Hermitian ({herm:e})")));
            }
            let min = linalg::min_eigenvalue(&linalg::hermitize(m));
            if min < -POVM_TOL {
                return Err(Error::NotPsd(min));
            }
            sum += m;
        }
        let dev = linalg::max_abs_diff(&sum, &CMatrix::identity(d, d));
        if dev > POVM_TOL {
            return Err(Error::InvalidTask(format!("POVM sums to identity only within {dev:e}")));
        }
        for b in &self.ensemble {
            b.channel.validate(d)?;
        }
        Ok(())
    }

    /// A = Σᵢ pᵢ Λᵢ†(Mᵢ); p_succ(ρ) = Tr[Aρ].
    pub fn effective_observable(&self) -> CMatrix {
        let d = self.dim();
        let a = self
            .ensemble
            .iter()
            .zip(&self.povm)
            .fold(CMatrix::zeros(d, d), |acc, (b, m)| {
                acc + b.channel.adjoint(m).scale(b.probability)
            });
        linalg::hermitize(&a)
    }
}

fn check_dim(rho: &DensityOperator, task: &DiscriminationTask) -> Result<()> {
    if rho.dim() != task.dim() {
        return Err(Error::ShapeMismatch(format!(
            "state on {} levels, task on {}",
            rho.dim(),
            task.dim()
        )));
    }
    Ok(())
}

/// Σᵢ pᵢ Tr[Mᵢ Λᵢ(ρ)].
pub fn p_success(rho: &DensityOperator, task: &DiscriminationTask) -> Result<f64> {
    check_dim(rho, task)?;
    Ok(task
        .ensemble
        .iter()
        .zip(&task.povm)
        .map(|(b, m)| b.probability * linalg::trace_product(m, &b.channel.apply(rho.matrix())).re)
        .sum())
}

/// Two equiprobable channels: the identity and the replacer onto the top
/// eigenvector |e⟩ of W, read out by M₁ = W/‖W‖∞, M₂ = 𝟙 − M₁.
///
/// ⟨e|M₂|e⟩ = 0, so the replacer branch never succeeds and
/// p_succ(ρ) = Tr[Wρ]/(2‖W‖∞): the advantage ratio is Tr[Wρ]/free_value(W)
/// whatever the scale of W.
pub fn optimal_binary_task(w: &Witness) -> Result<DiscriminationTask> {
    let op = linalg::hermitize(&w.operator);
    let eig = HermitianEigen::new(&op);
    let top = eig.max();
    if !(top > 0.0) {
        return Err(Error::ZeroWitness);
    }
    let d = op.nrows();
    let e = eig.vector(d - 1);
    let m1 = op.unscale(top);
    let m2 = linalg::hermitize(&(CMatrix::identity(d, d) - &m1));
    DiscriminationTask::new(
        vec![
            Branch {
                probability: 0.5,
                channel: Channel::Identity,
            },
            Branch {
                probability: 0.5,
                channel: Channel::Replacer {
                    target: linalg::projector(&e),
                },
            },
        ],
        vec![m1, m2],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub p_rho: f64,
    pub p_free_best: f64,
    pub ratio: f64,
    pub free_maximizer: FreeValueResult,
}

/// p_succ(ρ)/sup_{σ∈F} p_succ(σ), the supremum taken by [`free_value`].
pub fn advantage_ratio(
    rho: &DensityOperator,
    task: &DiscriminationTask,
    model: &FreeSetModel,
) -> Result<AdvantageReport> {
    check_dim(rho, task)?;
    let a = task.effective_observable();
    let best = free_value(&a, model)?;
    if !(best.value > 0.0) {
        return Err(Error::ZeroWitness);
    }
    let p_rho = linalg::trace_product(&a, rho.matrix()).re;
    Ok(AdvantageReport {
        p_rho,
        p_free_best: best.value,
        ratio: p_rho / best.value,
        free_maximizer: best,
    })
}

/// Task `index` of a seeded family: random probabilities, a random channel
/// per branch (identity, replacer or two-operator Kraus) and a random POVM.
pub fn random_task(dim: usize, branches: usize, seed: u64, index: u64) -> DiscriminationTask {
    let mut rng = random::rng(seed, index);
    let p = random::probabilities(&mut rng, branches);
    let ensemble = p
        .into_iter()
        .map(|probability| {
            let channel = match rand::Rng::gen_range(&mut rng, 0..3) {
                0 => Channel::Identity,
                1 => Channel::Replacer {
                    target: random::density_matrix(&mut rng, dim, dim),
                },
                _ => Channel::Kraus {
                    operators: random::kraus_channel(&mut rng, dim, 2),
                },
            };
            Branch { probability, channel }
        })
        .collect();
    let povm = random::povm(&mut rng, dim, branches);
    DiscriminationTask::new(ensemble, povm).expect("random tasks are valid by construction")
}

/// Advantage ratios of tasks `0..count`, evaluated in parallel and returned
/// in index order.
pub fn random_search(
    rho: &DensityOperator,
    model: &FreeSetModel,
    branches: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<AdvantageReport>> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| advantage_ratio(rho, &random_task(rho.dim(), branches, seed, k), model))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_state, StateSpec};
    use crate::free_sets::CoherentGrid;
    use crate::linalg::{CVector, C64};

    fn basis_projector(d: usize, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = C64::new(1.0, 0.0);
        m
    }

    #[test]
    fn two_identity_channels() {
        let task = DiscriminationTask::new(
            vec![
                Branch {
                    probability: 0.5,
                    channel: Channel::Identity,
                },
                Branch {
                    probability: 0.5,
                    channel: Channel::Identity,
                },
            ],
            vec![basis_projector(2, 0), basis_projector(2, 1)],
        )
        .unwrap();
        let rho = DensityOperator::single(basis_projector(2, 0)).unwrap();
        assert!((p_success(&rho, &task).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_branch_always_succeeds() {
        let task = DiscriminationTask::new(
            vec![Branch {
                probability: 1.0,
                channel: Channel::Identity,
            }],
            vec![CMatrix::identity(3, 3)],
        )
        .unwrap();
        let rho = DensityOperator::single(random::density_matrix(&mut random::rng(0, 0), 3, 2)).unwrap();
        assert!((p_success(&rho, &task).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kraus_task_matches_heisenberg_contraction() {
        let task = random_task(4, 3, 11, 0);
        let rho = DensityOperator::single(random::density_matrix(&mut random::rng(12, 0), 4, 4)).unwrap();
        let schrodinger = p_success(&rho, &task).unwrap();
        // contract the other way: adjoint channels on the POVM, then one trace
        let heisenberg = linalg::trace_product(&task.effective_observable(), rho.matrix()).re;
        assert!((schrodinger - heisenberg).abs() < 1e-12);
        assert!((0.0..=1.0 + 1e-9).contains(&schrodinger));
    }

    #[test]
    fn invalid_tasks_rejected() {
        let id = || Branch {
            probability: 0.5,
            channel: Channel::Identity,
        };
        let povm = vec![basis_projector(2, 0), basis_projector(2, 1)];
        assert!(matches!(
            DiscriminationTask::new(vec![id()], povm.clone()),
            Err(Error::InvalidTask(_))
        ));
        let mut skewed = vec![id(), id()];
        skewed[0].probability = 0.5 + 1e-9;
        assert!(matches!(
            DiscriminationTask::new(skewed, povm.clone()),
            Err(Error::InvalidTask(_))
        ));
        let bad_povm = vec![basis_projector(2, 0), basis_projector(2, 0)];
        assert!(matches!(
            DiscriminationTask::new(vec![id(), id()], bad_povm),
            Err(Error::InvalidTask(_))
        ));
        let leaky = Branch {
            probability: 0.5,
            channel: Channel::Kraus {
                operators: vec![basis_projector(2, 0)],
            },
        };
        assert!(matches!(
            DiscriminationTask::new(vec![id(), leaky], povm),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn trivial_witness_gives_no_advantage() {
        let model = FreeSetModel::incoherent();
        let w = Witness::evaluate(CMatrix::identity(4, 4), &model).unwrap();
        let task = optimal_binary_task(&w).unwrap();
        for k in 0..5 {
            let rho = DensityOperator::single(random::density_matrix(&mut random::rng(5, k), 4, 2)).unwrap();
            let r = advantage_ratio(&rho, &task, &model).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_witness_ratio() {
        let mut v = CVector::zeros(4);
        v[0] = C64::new(1.0, 0.0);
        v[3] = C64::new(1.0, 0.0);
        let model = FreeSetModel::separable((2, 2));
        let w = Witness::evaluate(linalg::projector(&v), &model)
            .unwrap()
            .rescale()
            .unwrap();
        let task = optimal_binary_task(&w).unwrap();
        let bell = DensityOperator::new(vec![2, 2], linalg::projector(&v.unscale(2f64.sqrt())), 0.0).unwrap();
        let r = advantage_ratio(&bell, &task, &model).unwrap();
        assert!((r.ratio - 2.0).abs() < 1e-9, "{}", r.ratio);
    }

    #[test]
    fn replacer_branch_never_succeeds() {
        let g = random::gaussian_matrix(&mut random::rng(9, 0), 5, 5);
        let w = Witness::evaluate(&g * g.adjoint(), &FreeSetModel::incoherent()).unwrap();
        let task = optimal_binary_task(&w).unwrap();
        for k in 0..20 {
            let rho = random::density_matrix(&mut random::rng(10, k), 5, 3);
            let out = task.ensemble[1].channel.apply(&rho);
            assert!((out.trace().re - rho.trace().re).abs() < 1e-12);
            assert!(linalg::trace_product(&task.povm[1], &out).re.abs() < 1e-10);
        }
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let model = FreeSetModel::incoherent();
        let g = random::gaussian_matrix(&mut random::rng(13, 0), 4, 4);
        let rho = DensityOperator::single(random::density_matrix(&mut random::rng(14, 0), 4, 1)).unwrap();
        let base = &g * g.adjoint();
        let ratio = |c: f64| {
            let w = Witness::evaluate(base.scale(c), &model).unwrap();
            advantage_ratio(&rho, &optimal_binary_task(&w).unwrap(), &model)
                .unwrap()
                .ratio
        };
        let r1 = ratio(1.0);
        for c in [1e-3, 0.7, 42.0] {
            assert!((ratio(c) - r1).abs() < 1e-9);
        }
    }

    #[test]
    fn coherent_probe_has_no_advantage() {
        let dim = 20;
        let model = FreeSetModel::classical(CoherentGrid::new(4.0, 0.2, 32).unwrap());
        let rho = make_state(&StateSpec::Coherent { re: 0.8, im: -0.3 }, dim)
            .unwrap()
            .density();
        for r in random_search(&rho, &model, 2, 4, 21).unwrap() {
            assert!(r.ratio <= 1.0 + 1e-6, "{}", r.ratio);
            assert!((0.0..=1.0 + 1e-9).contains(&r.p_free_best));
        }
    }

    #[test]
    fn random_search_is_deterministic() {
        let rho = make_state(&StateSpec::Fock { n: 1 }, 6).unwrap().density();
        let model = FreeSetModel::incoherent();
        let a = random_search(&rho, &model, 2, 6, 3).unwrap();
        let b = random_search(&rho, &model, 2, 6, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn task_json_validates_on_load() {
        let task = random_task(3, 2, 1, 0);
        let text = serde_json::to_string(&task).unwrap();
        let back: DiscriminationTask = serde_json::from_str(&text).unwrap();
        assert_eq!(back.dim(), 3);
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["ensemble"][0]["probability"] = serde_json::json!(2.5);
        assert!(serde_json::from_value::<DiscriminationTask>(value).is_err());
    }
}
