use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::scalar::Scalar;

/// Hedge over a bid grid. After `t` updates, bid `b` is played with probability
/// proportional to `exp(γ_t·σ_t(b))`, where `σ_t` is the cumulative reward and
/// `γ_t = c₀/√t` (uniform before the first update).
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    module: usize,
    sigma: Vec<f64>,
    shadow: Option<Vec<Scalar>>,
    c0: f64,
    t: u64,
}

impl LearnerState {
    /// `exact_shadow` keeps an exact copy of the cumulative rewards alongside the floats,
    /// fed by [`LearnerState::update_exact`].
    pub fn new(module: usize, bids: usize, c0: f64, exact_shadow: bool) -> Self {
        LearnerState {
            module,
            sigma: vec![0.0; bids],
            shadow: exact_shadow.then(|| vec![Scalar::zero(); bids]),
            c0,
            t: 0,
        }
    }

    pub fn module(&self) -> usize {
        self.module
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.sigma
    }

    pub fn shadow(&self) -> Option<&[Scalar]> {
        self.shadow.as_deref()
    }

    pub fn learning_rate(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.c0 / (self.t as f64).sqrt()
        }
    }

    /// Sampling distribution for the next round.
    pub fn probabilities(&self) -> Vec<f64> {
        let rate = self.learning_rate();
        let top = self.sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = self.sigma.iter().map(|s| (rate * (s - top)).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Index of the sampled bid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let probs = self.probabilities();
        // the largest weight is exactly 1, so the weights are never all zero
        WeightedIndex::new(&probs)
            .expect("Hedge weights are finite and not all zero")
            .sample(rng)
    }

    pub fn update(&mut self, rewards: &[f64]) {
        assert_eq!(rewards.len(), self.sigma.len(), "reward vector must cover the grid");
        for (s, r) in self.sigma.iter_mut().zip(rewards) {
            *s += r;
        }
        self.t += 1;
    }

    /// Updates with exact rewards, keeping the shadow (if any) in step.
    pub fn update_exact(&mut self, rewards: &[Scalar]) {
        if let Some(shadow) = &mut self.shadow {
            for (s, r) in shadow.iter_mut().zip(rewards) {
                *s += r;
            }
        }
        let floats: Vec<f64> = rewards.iter().map(Scalar::to_f64).collect();
        self.update(&floats);
    }

    /// Largest gap between the float accumulators and the exact shadow.
    pub fn shadow_drift(&self) -> Option<f64> {
        let shadow = self.shadow.as_ref()?;
        Some(
            self.sigma
                .iter()
                .zip(shadow)
                .map(|(f, e)| (f - e.to_f64()).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// One Hedge step: adds `rewards` (indexed by the full grid) to the cumulative rewards.
pub fn mwu_update(mut state: LearnerState, rewards: &[f64]) -> LearnerState {
    state.update(rewards);
    state
}
