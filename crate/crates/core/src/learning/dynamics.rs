use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{BidGrid, Instance, PriceVector};
use crate::scalar::Scalar;
use crate::selection::{greedy_bpb, Rule, TieBreak};

use super::learner::LearnerState;
use super::strict::check_strict_assumptions;
use super::{distorted_reward, LearningError, PaymentRule, RewardMode};

/// Cached selection rows are dropped wholesale past this many entries.
const CACHE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    /// Grid step, also the payment distortion.
    pub delta: Scalar,
    pub rounds: u64,
    /// Last round of the first payment phase.
    pub switch_round: u64,
    /// Learning-rate constant: `γ_t = c0/√t`.
    pub c0: f64,
    pub seed: u64,
    pub mode: RewardMode,
    pub tie_break: TieBreak,
    /// Refuse instances and grids outside the regime of the convergence argument.
    pub strict: bool,
    /// Keep exact cumulative rewards next to the floats (slow; for short runs).
    pub exact_shadow: bool,
}

impl DynamicsConfig {
    /// Phase switch after a third of the rounds, `c0 = 1`, net rewards.
    pub fn new(delta: Scalar, rounds: u64, seed: u64) -> Self {
        DynamicsConfig {
            delta,
            rounds,
            switch_round: (rounds / 3).max(1),
            c0: 1.0,
            seed,
            mode: RewardMode::Net,
            tie_break: TieBreak::ByCostRatio,
            strict: false,
            exact_shadow: false,
        }
    }

    fn validate(&self) -> Result<(), LearningError> {
        if self.rounds == 0 {
            return Err(LearningError::Config("at least one round is needed".into()));
        }
        if !self.c0.is_finite() || self.c0 < 0.0 {
            return Err(LearningError::Config(format!(
                "learning-rate constant must be finite and nonnegative, got {}",
                self.c0
            )));
        }
        Ok(())
    }
}

/// Every round of a simulation, stored flat: entry `t·n + i` belongs to module `i` in
/// round `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    n: usize,
    grid: BidGrid,
    bids: Vec<u32>,
    selected: Vec<bool>,
    rewards: Vec<f64>,
    critical: Vec<Option<u32>>,
    shadow_drift: Option<f64>,
}

impl DynamicsTrace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.bids.len() / self.n.max(1)
    }

    pub fn grid(&self) -> &BidGrid {
        &self.grid
    }

    fn at(&self, t: usize, i: usize) -> usize {
        assert!(i < self.n && t < self.rounds(), "round {t} module {i} out of range");
        t * self.n + i
    }

    /// Grid index of the bid module `i` posted in round `t` (0-based rounds).
    pub fn bid_index(&self, t: usize, i: usize) -> usize {
        self.bids[self.at(t, i)] as usize
    }

    pub fn price(&self, t: usize, i: usize) -> &Scalar {
        &self.grid.bids()[self.bid_index(t, i)]
    }

    pub fn prices(&self, t: usize) -> PriceVector {
        PriceVector((0..self.n).map(|i| self.price(t, i).clone()).collect())
    }

    pub fn is_selected(&self, t: usize, i: usize) -> bool {
        self.selected[self.at(t, i)]
    }

    pub fn selected_set(&self, t: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.is_selected(t, i)).collect()
    }

    /// Reward the posted bid earned.
    pub fn reward(&self, t: usize, i: usize) -> f64 {
        self.rewards[self.at(t, i)]
    }

    /// Highest grid bid that would have been selected against the others' bids.
    pub fn critical_price(&self, t: usize, i: usize) -> Option<&Scalar> {
        self.critical[self.at(t, i)].map(|k| &self.grid.bids()[k as usize])
    }

    /// Largest float-versus-exact accumulator gap at the end, when the shadow was kept.
    pub fn shadow_drift(&self) -> Option<f64> {
        self.shadow_drift
    }

    /// Per module, how often each grid bid was posted over the last `window` rounds.
    pub fn window_counts(&self, window: usize) -> Vec<Vec<u64>> {
        let rounds = self.rounds();
        let mut counts = vec![vec![0u64; self.grid.len()]; self.n];
        for t in rounds.saturating_sub(window)..rounds {
            for (i, row) in counts.iter_mut().enumerate() {
                row[self.bid_index(t, i)] += 1;
            }
        }
        counts
    }

    /// Most frequent bid per module over the last `window` rounds (lower bid on ties).
    pub fn modal_prices(&self, window: usize) -> PriceVector {
        let modes = self.window_counts(window).into_iter().map(|row| {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |best, (k, &c)| if c > row[best] { k } else { best });
            self.grid.bids()[best].clone()
        });
        PriceVector(modes.collect())
    }
}

/// For each grid bid of module `i`, whether `rule` selects `i` when the others keep
/// their prices in `p`.
fn selection_row(
    inst: &Instance,
    p: &PriceVector,
    i: usize,
    grid: &BidGrid,
    rule: Rule,
    tb: &TieBreak,
) -> Result<Vec<bool>, LearningError> {
    let mut prices = p.clone();
    grid.bids()
        .iter()
        .map(|b| {
            prices.0[i] = b.clone();
            Ok(rule.select(inst, &prices, tb)?.contains(i))
        })
        .collect()
}

/// What each grid bid of module `i` would earn in round `t` against the others'
/// prices in `p`.
#[allow(clippy::too_many_arguments)]
pub fn counterfactual_rewards(
    inst: &Instance,
    p: &PriceVector,
    i: usize,
    grid: &BidGrid,
    payment: &PaymentRule,
    t: u64,
    rule: Rule,
    tb: &TieBreak,
) -> Result<Vec<Scalar>, LearningError> {
    inst.check_module(i)?;
    let row = selection_row(inst, p, i, grid, rule, tb)?;
    Ok(grid
        .bids()
        .iter()
        .zip(row)
        .map(|(b, sel)| distorted_reward(b, sel, t, payment, inst.cost(i)))
        .collect())
}

/// Rewards for one phase: `selected[i][k]` and `rejected[k]` for bid index `k`.
struct RewardTable<T> {
    selected: Vec<Vec<T>>,
    rejected: Vec<T>,
}

impl<T: Clone> RewardTable<T> {
    fn get(&self, i: usize, k: usize, sel: bool) -> T {
        if sel {
            self.selected[i][k].clone()
        } else {
            self.rejected[k].clone()
        }
    }
}

fn reward_table(inst: &Instance, grid: &BidGrid, payment: &PaymentRule, t: u64) -> RewardTable<Scalar> {
    let bids = grid.bids();
    RewardTable {
        selected: (0..inst.n())
            .map(|i| {
                bids.iter()
                    .map(|b| distorted_reward(b, true, t, payment, inst.cost(i)))
                    .collect()
            })
            .collect(),
        rejected: bids
            .iter()
            .map(|b| distorted_reward(b, false, t, payment, &Scalar::zero()))
            .collect(),
    }
}

fn to_floats(table: &RewardTable<Scalar>) -> RewardTable<f64> {
    RewardTable {
        selected: table
            .selected
            .iter()
            .map(|row| row.iter().map(Scalar::to_f64).collect())
            .collect(),
        rejected: table.rejected.iter().map(Scalar::to_f64).collect(),
    }
}

/// Simulates `config.rounds` rounds. Each module samples a bid from its own seeded
/// stream, the platform runs bang-per-buck greedy, and every learner is updated with the
/// full vector of counterfactual rewards. The result depends only on the instance and
/// the configuration.
pub fn run_dynamics(inst: &Instance, config: &DynamicsConfig) -> Result<DynamicsTrace, LearningError> {
    config.validate()?;
    let grid = BidGrid::new(config.delta.clone(), inst.budget())?;
    if config.strict {
        check_strict_assumptions(inst, &grid)?;
    }
    let payment = PaymentRule::new(config.switch_round, config.delta.clone(), config.mode)?;
    let n = inst.n();
    let rounds = config.rounds;

    let exact = [
        reward_table(inst, &grid, &payment, 1),
        reward_table(inst, &grid, &payment, payment.switch_round() + 1),
    ];
    let floats = [to_floats(&exact[0]), to_floats(&exact[1])];

    let mut learners: Vec<LearnerState> = (0..n)
        .map(|i| LearnerState::new(i, grid.len(), config.c0, config.exact_shadow))
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            rng
        })
        .collect();

    // keyed by the bid profile with the varying module's slot set to u32::MAX
    let mut cache: HashMap<Vec<u32>, Vec<bool>> = HashMap::new();
    let mut key = vec![0u32; n];
    let mut profile = vec![0u32; n];

    let len = rounds as usize * n;
    let mut trace = DynamicsTrace {
        n,
        grid: grid.clone(),
        bids: Vec::with_capacity(len),
        selected: Vec::with_capacity(len),
        rewards: Vec::with_capacity(len),
        critical: Vec::with_capacity(len),
        shadow_drift: None,
    };

    for t in 1..=rounds {
        let phase = usize::from(!payment.first_phase(t));
        for (slot, (learner, rng)) in profile.iter_mut().zip(learners.iter().zip(rngs.iter_mut())) {
            *slot = learner.sample(rng) as u32;
        }
        if cache.len() > CACHE_LIMIT {
            cache.clear();
        }
        for i in 0..n {
            key.copy_from_slice(&profile);
            key[i] = u32::MAX;
            if !cache.contains_key(key.as_slice()) {
                let prices = PriceVector(profile.iter().map(|&k| grid.bids()[k as usize].clone()).collect());
                let row = selection_row(inst, &prices, i, &grid, Rule::Bpb, &config.tie_break)?;
                cache.insert(key.clone(), row);
            }
            let row = &cache[key.as_slice()];
            let posted = profile[i] as usize;
            trace.bids.push(profile[i]);
            trace.selected.push(row[posted]);
            trace.rewards.push(floats[phase].get(i, posted, row[posted]));
            trace.critical.push(row.iter().rposition(|&s| s).map(|k| k as u32));
            if config.exact_shadow {
                let rewards: Vec<Scalar> = row
                    .iter()
                    .enumerate()
                    .map(|(k, &s)| exact[phase].get(i, k, s))
                    .collect();
                learners[i].update_exact(&rewards);
            } else {
                let rewards: Vec<f64> = row
                    .iter()
                    .enumerate()
                    .map(|(k, &s)| floats[phase].get(i, k, s))
                    .collect();
                learners[i].update(&rewards);
            }
        }
    }
    trace.shadow_drift = learners.iter().filter_map(LearnerState::shadow_drift).reduce(f64::max);
    debug_assert!((0..trace.rounds())
        .all(|t| { greedy_bpb(inst, &trace.prices(t), &config.tie_break).selected == trace.selected_set(t) }));
    Ok(trace)
}

/// True iff every module stayed within `√δ` of its target in each of the last `window`
/// rounds. Decided exactly as `(p − target)² <= δ`.
pub fn check_convergence(
    trace: &DynamicsTrace,
    target: &PriceVector,
    delta: &Scalar,
    window: usize,
) -> Result<bool, LearningError> {
    if window > trace.rounds() {
        return Err(LearningError::Config(format!(
            "window {window} exceeds the {} recorded rounds",
            trace.rounds()
        )));
    }
    if target.len() != trace.n() {
        return Err(LearningError::Config(format!(
            "target has {} prices for {} modules",
            target.len(),
            trace.n()
        )));
    }
    let close: Vec<Vec<bool>> = target
        .as_slice()
        .iter()
        .map(|goal| {
            trace
                .grid()
                .bids()
                .iter()
                .map(|b| {
                    let gap = b - goal;
                    &gap * &gap <= *delta
                })
                .collect()
        })
        .collect();
    let rounds = trace.rounds();
    Ok((rounds - window..rounds).all(|t| (0..trace.n()).all(|i| close[i][trace.bid_index(t, i)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    fn sv(xs: &[&str]) -> Vec<Scalar> {
        xs.iter().map(|x| s(x)).collect()
    }

    fn single() -> Instance {
        Instance::new(sv(&["1"]), sv(&["0.2"]), s("1"), Matroid::free(1)).unwrap()
    }

    #[test]
    fn sole_module_rewards_rise_to_the_top() {
        let inst = single();
        let grid = BidGrid::new(s("0.1"), inst.budget()).unwrap();
        let payment = PaymentRule::new(5, s("0.1"), RewardMode::Net).unwrap();
        let p = PriceVector(sv(&["0.5"]));
        let r = counterfactual_rewards(&inst, &p, 0, &grid, &payment, 1, Rule::Bpb, &TieBreak::ByCostRatio).unwrap();
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(r[9], s("0.81"));
    }

    #[test]
    fn bids_above_critical_earn_only_the_bonus() {
        let inst = Instance::new(sv(&["1", "1"]), sv(&["0.3", "0.5"]), s("1"), Matroid::free(2)).unwrap();
        let grid = BidGrid::new(s("0.1"), inst.budget()).unwrap();
        let payment = PaymentRule::new(5, s("0.1"), RewardMode::Net).unwrap();
        let p = PriceVector(sv(&["0.6", "0.6"]));
        let tb = TieBreak::ByCostRatio;
        let r = counterfactual_rewards(&inst, &p, 1, &grid, &payment, 9, Rule::Bpb, &tb).unwrap();
        let critical = crate::selection::critical_price(&inst, &p, 1, &grid, Rule::Bpb, &tb)
            .unwrap()
            .unwrap();
        assert_eq!(critical, s("0.5"));
        for (b, reward) in grid.bids().iter().zip(&r) {
            let bonus = payment.bonus(b, 9);
            if *b > critical {
                assert_eq!(*reward, bonus);
            } else {
                assert_eq!(*reward, b - s("0.5") + bonus);
            }
        }
    }

    #[test]
    fn sole_module_learns_to_charge_the_budget() {
        let inst = single();
        let trace = run_dynamics(&inst, &DynamicsConfig::new(s("0.1"), 10_000, 3)).unwrap();
        assert_eq!(trace.modal_prices(1000).0, sv(&["1"]));
        assert_eq!(trace.critical_price(0, 0), Some(&s("1")));
    }

    #[test]
    fn same_seed_same_trace() {
        let inst = Instance::new(sv(&["1", "2"]), sv(&["0.3", "0.5"]), s("1"), Matroid::free(2)).unwrap();
        let cfg = DynamicsConfig::new(s("0.05"), 2000, 11);
        assert_eq!(run_dynamics(&inst, &cfg).unwrap(), run_dynamics(&inst, &cfg).unwrap());
        let other = DynamicsConfig {
            seed: 12,
            ..cfg.clone()
        };
        assert_ne!(
            run_dynamics(&inst, &cfg).unwrap().bids,
            run_dynamics(&inst, &other).unwrap().bids
        );
    }

    #[test]
    fn posted_reward_matches_counterfactual() {
        let inst = Instance::new(
            sv(&["1", "2", "1.5"]),
            sv(&["0.2", "0.3", "0.25"]),
            s("1"),
            Matroid::uniform(3, 2),
        )
        .unwrap();
        let cfg = DynamicsConfig {
            exact_shadow: true,
            ..DynamicsConfig::new(s("0.1"), 60, 5)
        };
        let trace = run_dynamics(&inst, &cfg).unwrap();
        let payment = PaymentRule::new(cfg.switch_round, cfg.delta.clone(), cfg.mode).unwrap();
        for t in 0..trace.rounds() {
            let p = trace.prices(t);
            for i in 0..3 {
                let r = counterfactual_rewards(
                    &inst,
                    &p,
                    i,
                    trace.grid(),
                    &payment,
                    t as u64 + 1,
                    Rule::Bpb,
                    &cfg.tie_break,
                )
                .unwrap();
                assert_eq!(r[trace.bid_index(t, i)].to_f64(), trace.reward(t, i));
            }
            assert_eq!(greedy_bpb(&inst, &p, &cfg.tie_break).selected, trace.selected_set(t));
        }
        assert!(trace.shadow_drift().unwrap() < 1e-9);
    }

    #[test]
    fn convergence_window() {
        let inst = single();
        let trace = run_dynamics(&inst, &DynamicsConfig::new(s("0.1"), 10_000, 3)).unwrap();
        let last = trace.rounds() - 1;
        let here = trace.prices(last);
        assert!(check_convergence(&trace, &here, &s("0.01"), 1).unwrap());
        // a target 0.2 away is outside √0.01
        let far = PriceVector(vec![here.get(0) - s("0.2")]);
        assert!(!check_convergence(&trace, &far, &s("0.01"), 1).unwrap());
        assert!(check_convergence(&trace, &here, &s("0.01"), 20_000).is_err());
    }

    #[test]
    fn strict_mode_refuses_coarse_grids() {
        let inst = Instance::new(sv(&["1", "1"]), sv(&["0.3", "0.5"]), s("1"), Matroid::free(2)).unwrap();
        let cfg = DynamicsConfig {
            strict: true,
            ..DynamicsConfig::new(s("0.05"), 10, 0)
        };
        assert!(matches!(run_dynamics(&inst, &cfg), Err(LearningError::Grid(_))));
    }
}
