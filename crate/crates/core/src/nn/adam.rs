use serde::{Deserialize, Serialize};

use super::MlpParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments over a fixed list of networks.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Result<Self> {
        if !(config.lr > 0.0) {
            return Err(Error::contract("Adam learning rate must be positive"));
        }
        Ok(Self {
            config,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        })
    }

    /// Sized for the concatenation of `nets`.
    pub fn for_nets(config: AdamConfig, nets: &[&MlpParams]) -> Result<Self> {
        Self::new(config, nets.iter().map(|n| n.num_params()).sum())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of flat parameters in place.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim(
                "adam_step",
                self.m.len(),
                params.len().min(grads.len()),
            ));
        }
        self.update_iter(params.iter_mut(), grads)
    }

    /// One update across several networks, in the order given to [`AdamState::for_nets`].
    pub fn update_nets(&mut self, nets: &mut [&mut MlpParams], grads: &[&MlpParams]) -> Result<()> {
        if nets.len() != grads.len() {
            return Err(Error::dim("adam_step nets", nets.len(), grads.len()));
        }
        for (n, g) in nets.iter().zip(grads) {
            if n.num_params() != g.num_params() {
                return Err(Error::dim("adam_step net", n.num_params(), g.num_params()));
            }
        }
        let total: usize = nets.iter().map(|n| n.num_params()).sum();
        if total != self.m.len() {
            return Err(Error::dim("adam_step", self.m.len(), total));
        }
        let params = nets.iter_mut().flat_map(|n| n.values_mut());
        let gs: Vec<f64> = grads.iter().flat_map(|g| g.values().copied()).collect();
        self.update_iter(params, &gs)
    }

    fn update_iter<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut f64>,
        grads: &[f64],
    ) -> Result<()> {
        if let Some(pos) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                term: format!("gradient entry {pos}"),
            });
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
