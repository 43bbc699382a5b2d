use serde::{Deserialize, Serialize};

use super::network::Network;
use super::real::Real;
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 coefficient applied through the loss to weight tensors.
    pub weight_decay: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
        }
    }
}

/// Momentum SGD: `v ← μ·v + g`, `θ ← θ − η·v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sgd<T> {
    pub config: SgdConfig,
    /// One buffer per parameter, in parameter order.
    pub velocity: Vec<Vec<T>>,
}

impl<T: Real> Sgd<T> {
    pub fn new(config: SgdConfig, net: &Network<T>) -> Sgd<T> {
        Sgd {
            config,
            velocity: net.params.iter().map(|p| vec![T::zero(); p.data.len()]).collect(),
        }
    }

    /// Applies one update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, net: &mut Network<T>, grads: &[Vec<T>]) -> Result<(), NnError> {
        if grads.len() != net.params.len() || self.velocity.len() != net.params.len() {
            return Err(NnError::Shape("gradient count does not match parameters".into()));
        }
        for ((g, p), v) in grads.iter().zip(&net.params).zip(&self.velocity) {
            if g.len() != p.data.len() || v.len() != p.data.len() {
                return Err(NnError::Shape(format!("gradient shape mismatch for {}", p.name)));
            }
            if let Some(bad) = g.iter().find(|x| !x.is_finite()) {
                return Err(NnError::NonFinite(format!("{} (value {bad:?})", p.name)));
            }
        }
        let lr = T::from_f64(self.config.learning_rate);
        let mu = T::from_f64(self.config.momentum);
        for ((g, p), v) in grads.iter().zip(&mut net.params).zip(&mut self.velocity) {
            for ((w, vel), &gr) in p.data.iter_mut().zip(v.iter_mut()).zip(g) {
                *vel = mu * *vel + gr;
                *w = *w - lr * *vel;
            }
        }
        Ok(())
    }
}
