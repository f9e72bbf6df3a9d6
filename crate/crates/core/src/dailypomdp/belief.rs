use super::{Observation, PomdpModel};
use crate::{Error, Result};

/// Probability distribution over the model's states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(pub Vec<f64>);

impl Belief {
    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn new(p: Vec<f64>) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.is_empty() || p.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("not a distribution (sum {sum})")));
        }
        Ok(Belief(p))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Most probable state, lowest index on ties.
    pub fn top(&self) -> (usize, f64) {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        (best, self.0[best])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefUpdate {
    pub belief: Belief,
    /// `Pr(o | b)`; zero when the observation was impossible under every state.
    pub normalizer: f64,
    /// The update fell back to the uniform belief.
    pub reset: bool,
}

/// One step of Bayesian filtering:
/// `b'(s') = O(s', o) * sum_s T(s, s') b(s) / Pr(o | b)`.
///
/// An observation with zero probability under every reachable state resets
/// the belief to uniform instead of producing NaN.
pub fn belief_update(b: &Belief, o: &Observation, model: &PomdpModel) -> Result<BeliefUpdate> {
    let n = model.n_states();
    if b.0.len() != n {
        return Err(Error::InvalidParameter(format!(
            "belief over {} states, model has {n}",
            b.0.len()
        )));
    }
    model.space.check(o)?;
    let mut next = vec![0.0; n];
    for (s, &bs) in b.0.iter().enumerate() {
        if bs == 0.0 {
            continue;
        }
        for (sp, t) in model.transition[s].iter().enumerate() {
            next[sp] += t * bs;
        }
    }
    for (sp, p) in next.iter_mut().enumerate() {
        *p *= model.observation_prob(sp, o);
    }
    let z: f64 = next.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        log::debug!("observation {o:?} impossible under current belief; resetting to uniform");
        return Ok(BeliefUpdate {
            belief: Belief::uniform(n),
            normalizer: 0.0,
            reset: true,
        });
    }
    next.iter_mut().for_each(|p| *p /= z);
    Ok(BeliefUpdate {
        belief: Belief(next),
        normalizer: z,
        reset: false,
    })
}

/// Action maximising `sum_s R(s, a) b(s)`; ties go to the lowest action index.
pub fn select_action(b: &Belief, rewards: &[Vec<f64>]) -> usize {
    let n_actions = rewards.first().map_or(0, Vec::len);
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for a in 0..n_actions {
        let v: f64 = b.0.iter().zip(rewards).map(|(p, r)| r[a] * p).sum();
        if v > best_value {
            best = a;
            best_value = v;
        }
    }
    best
}

/// Per-minute output of [`infer_day`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub state: usize,
    /// Largest belief probability after the update.
    pub top_prob: f64,
    pub reset: bool,
}

/// Tracks the belief from uniform through `observations`, predicting the
/// greedy action after each update.
pub fn infer_day(observations: &[Observation], model: &PomdpModel) -> Result<Vec<Prediction>> {
    let mut belief = Belief::uniform(model.n_states());
    let mut out = Vec::with_capacity(observations.len());
    for o in observations {
        let u = belief_update(&belief, o, model)?;
        belief = u.belief;
        out.push(Prediction {
            state: select_action(&belief, &model.rewards),
            top_prob: belief.top().1,
            reset: u.reset,
        });
    }
    Ok(out)
}
