use rand::Rng;

use super::SacError;
use crate::nn::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// A sampled mini-batch, one row per transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    /// 1.0 for terminal transitions.
    pub dones: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Fixed-capacity FIFO of transitions stored in flat arrays. Storage grows
/// on demand up to the capacity.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    obs_dim: usize,
    act_dim: usize,
    capacity: usize,
    cursor: usize,
    len: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    dones: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Self {
        Self {
            obs_dim,
            act_dim,
            capacity,
            cursor: 0,
            len: 0,
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
            dones: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) -> Result<(), SacError> {
        if t.state.len() != self.obs_dim || t.next_state.len() != self.obs_dim || t.action.len() != self.act_dim {
            return Err(SacError::Shape(format!(
                "transition has state {}/{} and action {}, buffer expects {} and {}",
                t.state.len(),
                t.next_state.len(),
                t.action.len(),
                self.obs_dim,
                self.act_dim
            )));
        }
        if !t.reward.is_finite() {
            return Err(SacError::NonFinite(format!("reward {}", t.reward)));
        }
        let done = if t.done { 1.0 } else { 0.0 };
        if self.len < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.next_states.extend_from_slice(&t.next_state);
            self.dones.push(done);
            self.len += 1;
        } else {
            let i = self.cursor;
            let (o, a) = (self.obs_dim, self.act_dim);
            self.states[i * o..(i + 1) * o].copy_from_slice(&t.state);
            self.actions[i * a..(i + 1) * a].copy_from_slice(&t.action);
            self.rewards[i] = t.reward;
            self.next_states[i * o..(i + 1) * o].copy_from_slice(&t.next_state);
            self.dones[i] = done;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// The transition at storage slot `i`.
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        let (o, a) = (self.obs_dim, self.act_dim);
        Some(Transition {
            state: self.states[i * o..(i + 1) * o].to_vec(),
            action: self.actions[i * a..(i + 1) * a].to_vec(),
            reward: self.rewards[i],
            next_state: self.next_states[i * o..(i + 1) * o].to_vec(),
            done: self.dones[i] != 0.0,
        })
    }

    /// Storage slots of a uniform sample of `n` distinct transitions.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>, SacError> {
        if n > self.len {
            return Err(SacError::InsufficientData {
                requested: n,
                available: self.len,
            });
        }
        Ok(rand::seq::index::sample(rng, self.len, n).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch, SacError> {
        let idx = self.sample_indices(n, rng)?;
        Ok(self.gather(&idx))
    }

    pub fn gather(&self, idx: &[usize]) -> Batch {
        let (o, a) = (self.obs_dim, self.act_dim);
        let rows = |src: &[f64], w: usize| {
            let mut out = Vec::with_capacity(idx.len() * w);
            for &i in idx {
                out.extend_from_slice(&src[i * w..(i + 1) * w]);
            }
            Matrix::from_vec(idx.len(), w, out).expect("consistent widths")
        };
        Batch {
            states: rows(&self.states, o),
            actions: rows(&self.actions, a),
            rewards: idx.iter().map(|&i| self.rewards[i]).collect(),
            next_states: rows(&self.next_states, o),
            dones: idx.iter().map(|&i| self.dones[i]).collect(),
        }
    }
}
