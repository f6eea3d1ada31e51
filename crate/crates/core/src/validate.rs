//! Driver-by-driver comparison of game-theoretic policies with empirical
//! ones, the uniform benchmark and the summary statistics built on top.

use crate::actions::Action;
use crate::dqn::{boltzmann_probabilities, DqnError};
use crate::env::{bin_observation, encode_binned, level0_policy, BinnedObservation, EnvConfig, RawObservation};
use crate::ingest::{floor_and_normalize, EmpiricalPolicy, PDF_FLOOR};
use crate::kstest::{ks_test, KsError, KsOutcome};
use crate::levelk::{Policy, PolicyRef};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub type Pdf = [f64; Action::COUNT];

/// Default minimum number of visits for a state to be compared.
pub const DEFAULT_N_LIMIT: u64 = 3;

/// Width of a color-map bucket in percentage points.
pub const BUCKET_WIDTH: f64 = 10.0;
pub const BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidateError {
    #[error("n_limit must be at least 1")]
    BadLimit,
    #[error("no policies given")]
    NoPolicies,
    #[error("driver {0} has no uniform-benchmark counterpart")]
    UnpairedDriver(u64),
    #[error(transparent)]
    Ks(#[from] KsError),
    #[error(transparent)]
    Dqn(#[from] DqnError),
}

/// Floored action pdfs per binned state, one per level of the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtStatePolicy {
    pub levels: Vec<u32>,
    pub states: BTreeMap<u64, Vec<Pdf>>,
    /// Used for states absent from `states`.
    pub fallback: Option<Vec<Pdf>>,
}

impl GtStatePolicy {
    pub fn pdfs(&self, state: u64) -> Option<&[Pdf]> {
        self.states.get(&state).or(self.fallback.as_ref()).map(|v| v.as_slice())
    }
}

pub fn floored(p: &[f64]) -> Pdf {
    let mut out = [0.0; Action::COUNT];
    out.copy_from_slice(&floor_and_normalize(p, PDF_FLOOR));
    out
}

/// The unfloored pdf of `policy` in binned state `obs`, averaging over
/// `probes` when the policy reads continuous observations.
pub fn state_pdf(
    policy: &PolicyRef,
    obs: &BinnedObservation,
    probes: &[RawObservation],
    env: &EnvConfig,
) -> Result<Option<Pdf>, DqnError> {
    let mut p = [0.0; Action::COUNT];
    match &policy.policy {
        Policy::LevelZero => p[level0_policy(obs).index()] = 1.0,
        Policy::Uniform => p = [1.0 / Action::COUNT as f64; Action::COUNT],
        Policy::Network {
            net,
            encoding: crate::env::Encoding::Binned,
            temperature,
        } => {
            let q = net.forward(&encode_binned(obs))?;
            if q.len() != Action::COUNT {
                return Err(DqnError::DimensionMismatch {
                    expected: Action::COUNT,
                    got: q.len(),
                });
            }
            p.copy_from_slice(&boltzmann_probabilities(&q, *temperature));
        }
        Policy::Network { .. } => {
            if probes.is_empty() {
                return Ok(None);
            }
            for raw in probes {
                let q = policy.pdf(raw, env)?;
                for (acc, v) in p.iter_mut().zip(q) {
                    *acc += v;
                }
            }
            for v in &mut p {
                *v /= probes.len() as f64;
            }
        }
    }
    Ok(Some(p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtDerivation {
    pub policy: GtStatePolicy,
    /// States skipped because a continuous policy had no probe in them.
    pub missing_probes: Vec<u64>,
}

/// Binned states visited in the data, with the continuous observations
/// behind the visits.
pub fn collect_probes(empirical: &[EmpiricalPolicy]) -> BTreeMap<u64, Vec<RawObservation>> {
    let mut out: BTreeMap<u64, Vec<RawObservation>> = BTreeMap::new();
    for emp in empirical {
        for s in &emp.states {
            out.entry(s.state_index).or_default().extend(s.probes.iter().copied());
        }
    }
    out
}

/// Per-state floored pdfs of every policy in `family` over the states of
/// `probes`.
pub fn derive_gt_state_policy(
    family: &[PolicyRef],
    probes: &BTreeMap<u64, Vec<RawObservation>>,
    env: &EnvConfig,
) -> Result<GtDerivation, ValidateError> {
    if family.is_empty() {
        return Err(ValidateError::NoPolicies);
    }
    let mut states = BTreeMap::new();
    let mut missing = Vec::new();
    for (&index, raws) in probes {
        let obs = match raws.first() {
            Some(raw) => bin_observation(raw),
            None => match BinnedObservation::from_index(index) {
                Some(obs) => obs,
                None => {
                    missing.push(index);
                    continue;
                }
            },
        };
        let mut pdfs = Vec::with_capacity(family.len());
        for policy in family {
            match state_pdf(policy, &obs, raws, env)? {
                Some(p) => pdfs.push(floored(&p)),
                None => break,
            }
        }
        if pdfs.len() == family.len() {
            states.insert(index, pdfs);
        } else {
            missing.push(index);
        }
    }
    Ok(GtDerivation {
        policy: GtStatePolicy {
            levels: family.iter().map(|p| p.level).collect(),
            states,
            fallback: None,
        },
        missing_probes: missing,
    })
}

/// Probability 1/7 for every action in every state.
pub fn uniform_benchmark() -> GtStatePolicy {
    GtStatePolicy {
        levels: vec![0],
        states: BTreeMap::new(),
        fallback: Some(vec![floored(&[1.0; Action::COUNT])]),
    }
}

/// MAE under the three reporting conventions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MaeTriple {
    /// Mean over the 7 actions.
    pub mae: f64,
    /// Plain sum of absolute differences.
    pub sum_abs: f64,
    /// Sum scaled by the action count.
    pub scaled: f64,
}

impl MaeTriple {
    pub fn of(p: &Pdf, q: &Pdf) -> Self {
        let sum_abs: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
        MaeTriple {
            mae: sum_abs / Action::COUNT as f64,
            sum_abs,
            scaled: sum_abs * Action::COUNT as f64,
        }
    }

    fn mean(items: &[MaeTriple]) -> Option<MaeTriple> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let mut out = MaeTriple::default();
        for m in items {
            out.mae += m.mae / n;
            out.sum_abs += m.sum_abs / n;
            out.scaled += m.scaled / n;
        }
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateComparison {
    pub state_index: u64,
    pub visits: u64,
    /// One outcome per level of the family, in family order.
    pub levels: Vec<KsOutcome>,
    /// Family member with the largest critical level.
    pub best: usize,
    pub retained: bool,
    pub error: MaeTriple,
    pub uniform: KsOutcome,
    pub uniform_error: MaeTriple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverReport {
    pub driver_id: u64,
    pub n_comparisons: usize,
    pub n_success: usize,
    pub success_pct: Option<f64>,
    /// Successes of each family member taken alone.
    pub level_success: Vec<usize>,
    pub ud_success: usize,
    pub ud_success_pct: Option<f64>,
    /// Qualifying states the family has no pdf for.
    pub skipped: Vec<u64>,
    pub states: Vec<StateComparison>,
}

impl DriverReport {
    pub fn is_empty(&self) -> bool {
        self.n_comparisons == 0
    }

    pub fn diff(&self) -> Option<f64> {
        Some(self.success_pct? - self.ud_success_pct?)
    }
}

fn pct(k: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| 100.0 * k as f64 / n as f64)
}

/// Test every state the driver visited at least `n_limit` times against
/// the family; a state is modeled when any member is not rejected. The
/// uniform benchmark is tested on the same states.
pub fn compare_driver(
    emp: &EmpiricalPolicy,
    gt: &GtStatePolicy,
    n_limit: u64,
    alpha: f64,
) -> Result<DriverReport, ValidateError> {
    if n_limit == 0 {
        return Err(ValidateError::BadLimit);
    }
    let ud = floored(&[1.0; Action::COUNT]);
    let mut states = Vec::new();
    let mut skipped = Vec::new();
    let mut level_success = vec![0; gt.levels.len()];
    for s in emp.states.iter().filter(|s| s.visits >= n_limit) {
        let Some(pdfs) = gt.pdfs(s.state_index) else {
            skipped.push(s.state_index);
            continue;
        };
        let mut levels = Vec::with_capacity(pdfs.len());
        for (k, pdf) in pdfs.iter().enumerate() {
            let outcome = ks_test(pdf, &s.counts, alpha)?;
            if !outcome.rejected {
                if let Some(c) = level_success.get_mut(k) {
                    *c += 1;
                }
            }
            levels.push(outcome);
        }
        let best = (0..levels.len())
            .max_by(|&a, &b| levels[a].p_two_sided.total_cmp(&levels[b].p_two_sided).then(b.cmp(&a)))
            .unwrap_or(0);
        let uniform = ks_test(&ud, &s.counts, alpha)?;
        states.push(StateComparison {
            state_index: s.state_index,
            visits: s.visits,
            retained: levels.iter().any(|o| !o.rejected),
            error: MaeTriple::of(&pdfs[best], &s.pdf),
            best,
            levels,
            uniform,
            uniform_error: MaeTriple::of(&ud, &s.pdf),
        });
    }
    let n = states.len();
    let n_success = states.iter().filter(|c| c.retained).count();
    let ud_success = states.iter().filter(|c| !c.uniform.rejected).count();
    Ok(DriverReport {
        driver_id: emp.driver_id,
        n_comparisons: n,
        n_success,
        success_pct: pct(n_success, n),
        level_success,
        ud_success,
        ud_success_pct: pct(ud_success, n),
        skipped,
        states,
    })
}

pub fn compare_all(
    empirical: &[EmpiricalPolicy],
    gt: &GtStatePolicy,
    n_limit: u64,
    alpha: f64,
) -> Result<Vec<DriverReport>, ValidateError> {
    empirical.iter().map(|e| compare_driver(e, gt, n_limit, alpha)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorCell {
    pub ud_bucket: usize,
    pub gt_bucket: usize,
    pub count: usize,
}

pub fn bucket(pct: f64) -> usize {
    ((pct / BUCKET_WIDTH) as usize).min(BUCKETS - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Drivers with at least one comparison.
    pub drivers: usize,
    pub excluded_drivers: usize,
    pub comparisons: usize,
    pub mean_gt_pct: Option<f64>,
    pub mean_ud_pct: Option<f64>,
    pub mean_diff: Option<f64>,
    pub level_mean_pct: Vec<Option<f64>>,
    pub retained: usize,
    pub rejected: usize,
    pub amae: Option<MaeTriple>,
    pub rmae: Option<MaeTriple>,
    pub ud_amae: Option<MaeTriple>,
    pub ud_rmae: Option<MaeTriple>,
    /// Row-major, `BUCKETS * BUCKETS` cells, UD bucket outer.
    pub color_map: Vec<ColorCell>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Means over drivers with comparisons, error means over retained and
/// rejected comparisons and the UD-by-GT success histogram.
pub fn aggregate(reports: &[DriverReport]) -> Summary {
    let used: Vec<&DriverReport> = reports.iter().filter(|r| !r.is_empty()).collect();
    let levels = used.iter().map(|r| r.level_success.len()).max().unwrap_or(0);
    let level_mean_pct = (0..levels)
        .map(|k| {
            mean(used.iter().map(|r| {
                100.0 * r.level_success.get(k).copied().unwrap_or(0) as f64 / r.n_comparisons as f64
            }))
        })
        .collect();

    let comparisons: Vec<&StateComparison> = used.iter().flat_map(|r| r.states.iter()).collect();
    let split = |pick: &dyn Fn(&StateComparison) -> (bool, MaeTriple)| {
        let (mut kept, mut lost) = (Vec::new(), Vec::new());
        for c in &comparisons {
            let (retained, e) = pick(c);
            if retained {
                kept.push(e)
            } else {
                lost.push(e)
            }
        }
        (kept, lost)
    };
    let (kept, lost) = split(&|c| (c.retained, c.error));
    let (ud_kept, ud_lost) = split(&|c| (!c.uniform.rejected, c.uniform_error));

    let mut grid = vec![0usize; BUCKETS * BUCKETS];
    for r in &used {
        if let (Some(gt), Some(ud)) = (r.success_pct, r.ud_success_pct) {
            grid[bucket(ud) * BUCKETS + bucket(gt)] += 1;
        }
    }
    let color_map = grid
        .iter()
        .enumerate()
        .map(|(i, &count)| ColorCell {
            ud_bucket: i / BUCKETS,
            gt_bucket: i % BUCKETS,
            count,
        })
        .collect();

    Summary {
        drivers: used.len(),
        excluded_drivers: reports.len() - used.len(),
        comparisons: comparisons.len(),
        mean_gt_pct: mean(used.iter().filter_map(|r| r.success_pct)),
        mean_ud_pct: mean(used.iter().filter_map(|r| r.ud_success_pct)),
        mean_diff: mean(used.iter().filter_map(|r| r.diff())),
        level_mean_pct,
        retained: kept.len(),
        rejected: lost.len(),
        amae: MaeTriple::mean(&kept),
        rmae: MaeTriple::mean(&lost),
        ud_amae: MaeTriple::mean(&ud_kept),
        ud_rmae: MaeTriple::mean(&ud_lost),
        color_map,
    }
}

/// Every driver in `reports` must appear in `ud_reports`.
pub fn check_pairing(reports: &[DriverReport], ud_reports: &[DriverReport]) -> Result<(), ValidateError> {
    for r in reports {
        if !ud_reports.iter().any(|u| u.driver_id == r.driver_id) {
            return Err(ValidateError::UnpairedDriver(r.driver_id));
        }
    }
    Ok(())
}
