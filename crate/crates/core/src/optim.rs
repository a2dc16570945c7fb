//! Adam with bias correction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let zeros: BTreeMap<String, Tensor> = params
            .iter()
            .map(|(k, t)| (k.clone(), Tensor::zeros(t.shape())))
            .collect();
        AdamState {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update to every parameter that has a gradient.
    pub fn update(&mut self, params: &mut ParamStore, grads: &BTreeMap<String, Tensor>) -> Result<()> {
        for (name, g) in grads {
            let p = params
                .get(name)
                .ok_or_else(|| Error::InvalidArgument(format!("gradient for unknown parameter {name}")))?;
            if p.shape() != g.shape() || self.m.get(name).map(Tensor::shape) != Some(p.shape()) {
                return Err(Error::shape(
                    "adam",
                    format!("{name}: parameter {:?}, gradient {:?}", p.shape(), g.shape()),
                ));
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (name, g) in grads {
            let m = self.m.get_mut(name).expect("checked").data_mut();
            let v = self.v.get_mut(name).expect("checked").data_mut();
            let p = params.get_mut(name).expect("checked").data_mut();
            for i in 0..p.len() {
                let gi = g.data()[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    /// Flattens moments and step counter into a store for checkpointing.
    pub fn to_store(&self) -> ParamStore {
        let mut s = ParamStore::new();
        for (k, t) in &self.m {
            s.insert(format!("m/{k}"), t.clone());
        }
        for (k, t) in &self.v {
            s.insert(format!("v/{k}"), t.clone());
        }
        s.insert("step", Tensor::scalar(self.step as f64));
        let c = self.config;
        s.insert("config", Tensor::vector(vec![c.lr, c.beta1, c.beta2, c.eps]));
        s
    }

    pub fn from_store(store: &ParamStore, params: &ParamStore) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("optimizer state: {what}"));
        let c = store.get("config").ok_or_else(|| bad("missing config"))?.data();
        if c.len() != 4 {
            return Err(bad("config must hold 4 values"));
        }
        let mut st = AdamState::new(
            AdamConfig {
                lr: c[0],
                beta1: c[1],
                beta2: c[2],
                eps: c[3],
            },
            params,
        );
        st.step = store.get("step").ok_or_else(|| bad("missing step"))?.item() as u64;
        for (name, p) in params.iter() {
            for (prefix, map) in [("m", &mut st.m), ("v", &mut st.v)] {
                let t = store
                    .get(&format!("{prefix}/{name}"))
                    .ok_or_else(|| bad(&format!("missing {prefix}/{name}")))?;
                if t.shape() != p.shape() {
                    return Err(bad(&format!("{prefix}/{name} shape mismatch")));
                }
                map.insert(name.clone(), t.clone());
            }
        }
        Ok(st)
    }
}
