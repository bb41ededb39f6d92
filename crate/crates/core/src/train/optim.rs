use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// `v ← v − lr·g` for every parameter.
pub fn sgd_step(store: &mut ParamStore, lr: f64) -> Result<()> {
    store.grads_finite()?;
    for p in store.iter_mut() {
        for (v, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
            *v -= lr * g;
        }
    }
    Ok(())
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// Bias-corrected Adam update; increments `state`'s step counter.
pub fn adam_step(store: &mut ParamStore, lr: f64, cfg: &AdamConfig, state: &mut AdamState) -> Result<()> {
    store.grads_finite()?;
    if state.m.is_empty() {
        state.m = store.iter().map(|p| vec![0.0; p.value.len()]).collect();
        state.v = state.m.clone();
    }
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for ((p, m), v) in store.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        for (((w, &g), m), v) in p.value.data_mut().iter_mut().zip(p.grad.data()).zip(m).zip(v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *w -= lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
        }
    }
    Ok(())
}

/// An optimizer bound to its hyperparameters and state.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, cfg: AdamConfig, state: AdamState },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, adam: AdamConfig) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam {
                lr,
                cfg: adam,
                state: AdamState::default(),
            },
        }
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        match self {
            Optimizer::Sgd { lr } => sgd_step(store, *lr),
            Optimizer::Adam { lr, cfg, state } => adam_step(store, *lr, cfg, state),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn scalar_store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.push("p", Tensor::vector(vec![v])).unwrap();
        s
    }

    #[test]
    fn sgd_zero_gradient_is_noop() {
        let mut s = scalar_store(1.5);
        sgd_step(&mut s, 0.1).unwrap();
        assert_eq!(s.get(0).value.data(), &[1.5]);
    }

    #[test]
    fn sgd_on_half_square_follows_geometric_decay() {
        let mut s = scalar_store(1.0);
        for k in 1..=20 {
            let p = s.get(0).value.data()[0];
            s.get_mut(0).grad.data_mut()[0] = p;
            sgd_step(&mut s, 0.1).unwrap();
            assert!((s.get(0).value.data()[0] - 0.9f64.powi(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut s = ParamStore::new();
        s.push("p", Tensor::vector(vec![0.0, 0.0, 0.0])).unwrap();
        s.get_mut(0).grad.data_mut().copy_from_slice(&[3.0, -0.01, 250.0]);
        let mut state = AdamState::default();
        adam_step(&mut s, 1e-3, &AdamConfig::default(), &mut state).unwrap();
        assert_eq!(state.steps(), 1);
        for (v, sign) in s.get(0).value.data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((v - sign * 1e-3).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn non_finite_gradient_aborts_without_update() {
        let mut s = scalar_store(2.0);
        s.get_mut(0).grad.data_mut()[0] = f64::NAN;
        assert!(matches!(sgd_step(&mut s, 0.1), Err(Error::Numeric(_))));
        let mut state = AdamState::default();
        assert!(adam_step(&mut s, 0.1, &AdamConfig::default(), &mut state).is_err());
        assert_eq!(s.get(0).value.data(), &[2.0]);
    }

    #[test]
    fn steps_preserve_names_and_shapes() {
        let mut s = ParamStore::new();
        s.push("a", Tensor::zeros(&[2, 3])).unwrap();
        s.push("b", Tensor::zeros(&[4])).unwrap();
        s.iter_mut().for_each(|p| p.grad.fill(0.5));
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01, AdamConfig::default());
        opt.step(&mut s).unwrap();
        let names: Vec<_> = s.names().collect();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(s.get(0).value.shape(), &[2, 3]);
    }
}
