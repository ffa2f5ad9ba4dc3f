//! Scheduling over a finite set of channel states.
//!
//! Each link rate takes one of `n` levels, giving `n²` joint states. The
//! scheduler cannot observe the state; it commits to an *assumed* state and
//! transmits at that state's cross-point rates. The slot succeeds only when
//! the assumed state is element-wise `<=` the actual one, otherwise nothing
//! is delivered. The best static policy puts all its mass on the assumed
//! state with the largest success-weighted sum rate `alpha`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::rates::{cross_point, Backlog, LinkCapacities, RatePoint};

const PMF_TOLERANCE: f64 = 1e-12;
const ARGMAX_TIE_TOLERANCE: f64 = 1e-12;

/// Strictly increasing positive rate levels `s_1 < ... < s_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLevels(Vec<f64>);

impl RateLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Distribution("at least one rate level is required".into()));
        }
        for &s in &levels {
            positive("rate level", s)?;
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Distribution(
                "rate levels must be strictly increasing".into(),
            ));
        }
        Ok(Self(levels))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One joint channel state, identified by the level index of each link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub level1: usize,
    pub level2: usize,
    pub caps: LinkCapacities,
}

impl ChannelState {
    /// Element-wise `<=` on the rate vector.
    pub fn dominated_by(&self, other: &ChannelState) -> bool {
        self.level1 <= other.level1 && self.level2 <= other.level2
    }
}

/// All `n²` level pairs in lexicographic `(level1, level2)` order.
pub fn enumerate_states(levels: &RateLevels) -> Vec<ChannelState> {
    let s = levels.as_slice();
    let mut out = Vec::with_capacity(s.len() * s.len());
    for (i, &c1) in s.iter().enumerate() {
        for (j, &c2) in s.iter().enumerate() {
            out.push(ChannelState {
                level1: i,
                level2: j,
                caps: LinkCapacities::new(c1, c2).expect("levels are validated positive"),
            });
        }
    }
    out
}

fn validate_pmf(what: &str, probs: &[f64], expected_len: usize) -> Result<()> {
    if probs.len() != expected_len {
        return Err(Error::Distribution(format!(
            "{what} has {} entries, expected {expected_len}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::Distribution(format!("{what} has invalid entry {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::Distribution(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Joint state space with its probability mass function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteStateModel {
    levels: RateLevels,
    states: Vec<ChannelState>,
    probs: Vec<f64>,
}

impl FiniteStateModel {
    pub fn new(levels: RateLevels, probs: Vec<f64>) -> Result<Self> {
        let states = enumerate_states(&levels);
        validate_pmf("state pmf", &probs, states.len())?;
        Ok(Self {
            levels,
            states,
            probs,
        })
    }

    pub fn uniform(levels: RateLevels) -> Self {
        let m = levels.len() * levels.len();
        let states = enumerate_states(&levels);
        Self {
            levels,
            states,
            probs: vec![1.0 / m as f64; m],
        }
    }

    pub fn levels(&self) -> &RateLevels {
        &self.levels
    }

    pub fn states(&self) -> &[ChannelState] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Probability that a transmission at assumed state `i` succeeds.
    pub fn success_probability(&self, i: usize) -> f64 {
        success_set(i, self).into_iter().map(|k| self.probs[k]).sum()
    }
}

/// Indices of the actual states under which assumed state `i` succeeds.
pub fn success_set(i: usize, model: &FiniteStateModel) -> Vec<usize> {
    let assumed = &model.states[i];
    model
        .states
        .iter()
        .enumerate()
        .filter(|(_, actual)| assumed.dominated_by(actual))
        .map(|(k, _)| k)
        .collect()
}

/// Distribution over assumed states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePolicy {
    q: Vec<f64>,
}

impl StatePolicy {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        let n = q.len();
        validate_pmf("policy", &q, n)?;
        Ok(Self { q })
    }

    /// All mass on state `index` of an `len`-state model.
    pub fn degenerate(index: usize, len: usize) -> Self {
        let mut q = vec![0.0; len];
        q[index] = 1.0;
        Self { q }
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// The state carrying all the mass, if the policy is degenerate.
    pub fn selected(&self) -> Option<usize> {
        let mut it = self.q.iter().enumerate().filter(|(_, &w)| w > 0.0);
        match (it.next(), it.next()) {
            (Some((i, &1.0)), None) => Some(i),
            _ => None,
        }
    }
}

/// Success-weighted cross-point sum rate of every assumed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub alphas: Vec<f64>,
}

fn state_rates(model: &FiniteStateModel, backlog: Backlog) -> Result<Vec<RatePoint>> {
    model
        .states
        .iter()
        .map(|s| cross_point(s.caps, backlog))
        .collect()
}

pub fn alpha_coefficients(model: &FiniteStateModel, backlog: Backlog) -> Result<AlphaVector> {
    let rates = state_rates(model, backlog)?;
    let alphas = rates
        .iter()
        .enumerate()
        .map(|(i, r)| model.success_probability(i) * r.sum())
        .collect();
    Ok(AlphaVector { alphas })
}

/// Index of the largest alpha; near-ties go to the lexicographically smallest
/// state, which has the higher success probability.
pub fn argmax_alpha(alphas: &AlphaVector) -> usize {
    let mut best = 0;
    for (i, &a) in alphas.alphas.iter().enumerate().skip(1) {
        let incumbent = alphas.alphas[best];
        if a > incumbent + ARGMAX_TIE_TOLERANCE * incumbent.abs().max(a.abs()) {
            best = i;
        }
    }
    best
}

pub fn optimal_policy(model: &FiniteStateModel, backlog: Backlog) -> Result<StatePolicy> {
    let alphas = alpha_coefficients(model, backlog)?;
    Ok(StatePolicy::degenerate(argmax_alpha(&alphas), model.len()))
}

/// Expected per-slot delivered rate of each source under `policy`.
pub fn expected_rate(
    model: &FiniteStateModel,
    policy: &StatePolicy,
    backlog: Backlog,
) -> Result<(f64, f64)> {
    if policy.q.len() != model.len() {
        return Err(Error::Distribution(format!(
            "policy has {} entries, model has {} states",
            policy.q.len(),
            model.len()
        )));
    }
    let rates = state_rates(model, backlog)?;
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    for (i, (&q, r)) in policy.q.iter().zip(&rates).enumerate() {
        if q == 0.0 {
            continue;
        }
        let ps = model.success_probability(i);
        e1 += q * ps * r.x;
        e2 += q * ps * r.y;
    }
    Ok((e1, e2))
}

/// Knobs for [`simulate_finite_state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSimOptions {
    /// Give up after this many slots.
    pub slot_cap: usize,
    /// Re-derive the optimal policy from the remaining backlog at every slot
    /// instead of using the supplied policy.
    pub recompute_each_slot: bool,
}

impl Default for FiniteSimOptions {
    fn default() -> Self {
        Self {
            slot_cap: 10_000_000,
            recompute_each_slot: false,
        }
    }
}

/// Simulates one transmission of `backlog` and returns its span in slots,
/// counting only the used fraction of the final slot.
pub fn simulate_finite_state<R: Rng + ?Sized>(
    model: &FiniteStateModel,
    backlog: Backlog,
    policy: &StatePolicy,
    rng: &mut R,
    options: FiniteSimOptions,
) -> Result<f64> {
    if backlog.is_empty() {
        return Ok(0.0);
    }
    if policy.q.len() != model.len() {
        return Err(Error::Distribution(format!(
            "policy has {} entries, model has {} states",
            policy.q.len(),
            model.len()
        )));
    }
    let actual_dist = WeightedIndex::new(&model.probs)
        .map_err(|e| Error::Distribution(format!("state pmf: {e}")))?;
    let fixed_choice = policy.selected();
    let policy_dist = match fixed_choice {
        Some(_) => None,
        None => Some(
            WeightedIndex::new(&policy.q)
                .map_err(|e| Error::Distribution(format!("policy: {e}")))?,
        ),
    };
    let static_rates = state_rates(model, backlog)?;

    let (mut rem1, mut rem2) = (backlog.b1(), backlog.b2());
    for slot in 0..options.slot_cap {
        let (assumed, rate) = if options.recompute_each_slot {
            let current = Backlog::new(rem1, rem2)?;
            let i = argmax_alpha(&alpha_coefficients(model, current)?);
            (i, cross_point(model.states[i].caps, current)?)
        } else {
            let i = match (fixed_choice, &policy_dist) {
                (Some(i), _) => i,
                (None, Some(d)) => d.sample(rng),
                (None, None) => unreachable!(),
            };
            (i, static_rates[i])
        };
        let actual = actual_dist.sample(rng);
        if !model.states[assumed].dominated_by(&model.states[actual]) {
            continue;
        }
        let need = fraction_needed(rem1, rate.x).max(fraction_needed(rem2, rate.y));
        if need <= 1.0 {
            return Ok(slot as f64 + need);
        }
        rem1 = (rem1 - rate.x).max(0.0);
        rem2 = (rem2 - rate.y).max(0.0);
    }
    Err(Error::SlotCapExceeded {
        what: "finite-state simulation",
        cap: options.slot_cap,
    })
}

fn fraction_needed(remaining: f64, rate: f64) -> f64 {
    if remaining <= 0.0 {
        0.0
    } else if rate <= 0.0 {
        f64::INFINITY
    } else {
        remaining / rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn levels(v: &[f64]) -> RateLevels {
        RateLevels::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn enumerates_lexicographically() {
        let s = enumerate_states(&levels(&[1.0, 2.0]));
        let pairs: Vec<_> = s.iter().map(|s| (s.caps.c1(), s.caps.c2())).collect();
        assert_eq!(pairs, vec![(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]);
        let s = enumerate_states(&levels(&[4.0]));
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].caps.c1(), s[0].caps.c2()), (4.0, 4.0));
        let s = enumerate_states(&levels(&[1.0, 2.0, 3.0]));
        assert_eq!(s.len(), 9);
        assert!(s
            .windows(2)
            .all(|w| (w[0].level1, w[0].level2) < (w[1].level1, w[1].level2)));
    }

    #[test]
    fn rejects_bad_levels_and_pmfs() {
        assert!(RateLevels::new(vec![]).is_err());
        assert!(RateLevels::new(vec![2.0, 1.0]).is_err());
        assert!(RateLevels::new(vec![1.0, 1.0]).is_err());
        assert!(RateLevels::new(vec![0.0, 1.0]).is_err());
        assert!(FiniteStateModel::new(levels(&[1.0, 2.0]), vec![0.5, 0.5]).is_err());
        assert!(FiniteStateModel::new(levels(&[1.0, 2.0]), vec![0.3; 4]).is_err());
        assert!(
            FiniteStateModel::new(levels(&[1.0, 2.0]), vec![1.5, -0.5, 0.0, 0.0]).is_err()
        );
    }

    #[test]
    fn success_sets() {
        let m = FiniteStateModel::uniform(levels(&[1.0, 2.0]));
        assert_eq!(success_set(0, &m), vec![0, 1, 2, 3]);
        assert_eq!(success_set(3, &m), vec![3]);
        assert_eq!(success_set(1, &m), vec![1, 3]);
        assert_eq!(success_set(2, &m), vec![2, 3]);
    }

    #[test]
    fn uniform_two_level_alphas() {
        let m = FiniteStateModel::uniform(levels(&[1.0, 2.0]));
        let a = alpha_coefficients(&m, Backlog::new(1.0, 1.0).unwrap()).unwrap();
        let want = [2.0 / 3.0, 0.4, 0.4, 1.0 / 3.0];
        for (got, want) in a.alphas.iter().zip(want) {
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }
        let p = optimal_policy(&m, Backlog::new(5.0, 5.0).unwrap()).unwrap();
        assert_eq!(p.selected(), Some(0));
    }

    #[test]
    fn single_state_alpha_is_sum_rate() {
        let m = FiniteStateModel::uniform(levels(&[3.0]));
        let b = Backlog::new(2.0, 1.0).unwrap();
        let a = alpha_coefficients(&m, b).unwrap();
        let r = cross_point(m.states()[0].caps, b).unwrap();
        assert_eq!(a.alphas, vec![r.sum()]);
        assert_eq!(optimal_policy(&m, b).unwrap().selected(), Some(0));
    }

    #[test]
    fn concentrated_pmf() {
        let l = levels(&[1.0, 2.0]);
        // all mass on (1,2): only assumed states dominated by it have alpha > 0
        let m = FiniteStateModel::new(l.clone(), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let a = alpha_coefficients(&m, Backlog::new(1.0, 1.0).unwrap()).unwrap();
        assert!(a.alphas[0] > 0.0 && a.alphas[1] > 0.0);
        assert_eq!((a.alphas[2], a.alphas[3]), (0.0, 0.0));

        let m = FiniteStateModel::new(l, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let p = optimal_policy(&m, Backlog::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.selected(), Some(3));
    }

    #[test]
    fn expected_rates_of_uniform_example() {
        let m = FiniteStateModel::uniform(levels(&[1.0, 2.0]));
        let b = Backlog::new(1.0, 1.0).unwrap();
        let (e1, e2) = expected_rate(&m, &StatePolicy::degenerate(0, 4), b).unwrap();
        assert!(close(e1, 1.0 / 3.0, 1e-12) && close(e2, 1.0 / 3.0, 1e-12));
        let (e1, e2) = expected_rate(&m, &StatePolicy::degenerate(3, 4), b).unwrap();
        assert!(close(e1, 1.0 / 6.0, 1e-12) && close(e2, 1.0 / 6.0, 1e-12));
    }

    #[test]
    fn expected_rate_ratio_follows_backlog() {
        let m = FiniteStateModel::new(
            levels(&[0.5, 1.5, 4.0]),
            vec![0.05, 0.1, 0.05, 0.2, 0.1, 0.1, 0.1, 0.2, 0.1],
        )
        .unwrap();
        let b = Backlog::new(3.0, 7.0).unwrap();
        let p = optimal_policy(&m, b).unwrap();
        let (e1, e2) = expected_rate(&m, &p, b).unwrap();
        assert!(close(e2 / e1, 7.0 / 3.0, 1e-12));
    }

    #[test]
    fn policy_validation() {
        assert!(StatePolicy::new(vec![0.5, 0.6]).is_err());
        let p = StatePolicy::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(p.selected(), None);
        assert_eq!(StatePolicy::degenerate(2, 4).selected(), Some(2));
    }

    #[test]
    fn single_state_simulation_is_deterministic() {
        let m = FiniteStateModel::uniform(levels(&[1.0]));
        let b = Backlog::new(2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let span =
                simulate_finite_state(&m, b, &StatePolicy::degenerate(0, 1), &mut rng, Default::default())
                    .unwrap();
            assert!(close(span, 5.0, 1e-12), "{span}");
        }
    }

    #[test]
    fn conservative_state_always_succeeds() {
        let m = FiniteStateModel::uniform(levels(&[1.0, 2.0]));
        let b = Backlog::new(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let span = simulate_finite_state(&m, b, &StatePolicy::degenerate(0, 4), &mut rng, Default::default())
            .unwrap();
        assert!(close(span, 3.0, 1e-12));
    }

    #[test]
    fn unreachable_state_hits_guard() {
        let m = FiniteStateModel::new(levels(&[1.0, 2.0]), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = simulate_finite_state(
            &m,
            Backlog::new(1.0, 1.0).unwrap(),
            &StatePolicy::degenerate(3, 4),
            &mut rng,
            FiniteSimOptions {
                slot_cap: 1000,
                recompute_each_slot: false,
            },
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::SlotCapExceeded {
                what: "finite-state simulation",
                cap: 1000
            }
        );
    }

    #[test]
    fn recompute_mode_matches_static_on_the_ray() {
        let m = FiniteStateModel::uniform(levels(&[1.0, 2.0]));
        let b = Backlog::new(4.0, 2.0).unwrap();
        let p = optimal_policy(&m, b).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = simulate_finite_state(&m, b, &p, &mut r1, Default::default()).unwrap();
        let c = simulate_finite_state(
            &m,
            b,
            &p,
            &mut r2,
            FiniteSimOptions {
                recompute_each_slot: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(close(a, c, 1e-9));
    }
}
