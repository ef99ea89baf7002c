//! First-order optimizers and learning-rate control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam with decoupled weight decay. With `weight_decay = 0` this is plain
/// Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamW {
    pub fn new(n_params: usize, weight_decay: f64) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn adam(n_params: usize) -> Self {
        Self::new(n_params, 0.0)
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        self.step_named(params, grads, lr, |i| format!("parameter {i}"))
    }

    /// One update; `name` labels the offending slot if a gradient is not
    /// finite. Nothing is modified in that case.
    pub fn step_named(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        lr: f64,
        name: impl Fn(usize) -> String,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(name(i)));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *p -= lr * self.weight_decay * *p;
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` once the monitored metric (lower
/// is better) has failed to improve for more than `patience` consecutive
/// steps. Improvement means dropping below `best · (1 − threshold)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    pub threshold: f64,
    lr: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64, factor: f64, patience: usize) -> Self {
        Self {
            factor,
            patience,
            threshold: 1e-4,
            lr: initial_lr,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn bad_epochs(&self) -> usize {
        self.bad_epochs
    }

    /// Records one epoch's metric and returns the (possibly reduced) rate.
    pub fn update(&mut self, metric: f64) -> Result<f64> {
        if !metric.is_finite() {
            return Err(Error::InvalidInput(format!("scheduler metric {metric} is not finite")));
        }
        if metric < self.best * (1.0 - self.threshold) || self.best == f64::INFINITY {
            self.best = metric;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
        }
        if self.bad_epochs > self.patience {
            self.lr *= self.factor;
            self.bad_epochs = 0;
        }
        Ok(self.lr)
    }
}

/// Everything that evolves during training besides the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub optimizer: AdamW,
    pub scheduler: PlateauScheduler,
}

impl TrainState {
    pub fn new(n_params: usize, lr: f64, weight_decay: f64, factor: f64, patience: usize) -> Self {
        Self {
            optimizer: AdamW::new(n_params, weight_decay),
            scheduler: PlateauScheduler::new(lr, factor, patience),
        }
    }

    pub fn lr(&self) -> f64 {
        self.scheduler.lr()
    }
}

/// `adamw_step`: one decoupled-weight-decay Adam update at an explicit rate.
pub fn adamw_step(params: &mut [f64], grads: &[f64], state: &mut TrainState, lr: f64, weight_decay: f64) -> Result<()> {
    state.optimizer.weight_decay = weight_decay;
    state.optimizer.step(params, grads, lr)
}

/// `lr_plateau_update`: feeds one validation metric to the scheduler.
pub fn lr_plateau_update(state: &mut TrainState, metric: f64) -> Result<f64> {
    state.scheduler.update(metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_no_decay_is_noop() {
        let mut p = vec![1.5, -2.0];
        let mut st = TrainState::new(2, 0.01, 0.0, 0.1, 15);
        adamw_step(&mut p, &[0.0, 0.0], &mut st, 0.01, 0.0).unwrap();
        assert_eq!(p, vec![1.5, -2.0]);
    }

    #[test]
    fn first_step_is_signed_lr() {
        for g in [3.7, -0.02, 1e-3] {
            let mut p = vec![0.5];
            let mut opt = AdamW::adam(1);
            opt.step(&mut p, &[g], 0.01).unwrap();
            // m̂ = g, v̂ = g², so the step is lr·g/(|g| + eps).
            let expected = 0.5 - 0.01 * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15);
            assert!((p[0] - (0.5 - 0.01 * g.signum())).abs() < 1e-7);
        }
    }

    #[test]
    fn decay_shrinks_without_gradient() {
        let mut p = vec![2.0, -4.0];
        let mut opt = AdamW::new(2, 1e-2);
        opt.step(&mut p, &[0.0, 0.0], 0.1).unwrap();
        assert!((p[0] - 2.0 * (1.0 - 0.1 * 1e-2)).abs() < 1e-15);
        assert!((p[1] + 4.0 * (1.0 - 0.1 * 1e-2)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_named() {
        let mut p = vec![0.0; 3];
        let mut opt = AdamW::adam(3);
        let err = opt
            .step_named(&mut p, &[0.0, f64::NAN, 0.0], 0.1, |i| format!("w{i}"))
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient(ref n) if n == "w1"));
        assert_eq!(opt.steps_taken(), 0);
    }

    #[test]
    fn plateau_improving_stream_keeps_rate() {
        let mut s = PlateauScheduler::new(0.01, 0.1, 15);
        for k in 0..100 {
            s.update(1.0 / (k + 1) as f64).unwrap();
        }
        assert_eq!(s.lr(), 0.01);
    }

    #[test]
    fn plateau_reduces_after_patience() {
        let mut s = PlateauScheduler::new(0.01, 0.1, 15);
        s.update(1.0).unwrap();
        for _ in 0..15 {
            assert_eq!(s.update(1.0).unwrap(), 0.01);
        }
        assert!((s.update(1.0).unwrap() - 0.001).abs() < 1e-18);
        for _ in 0..16 {
            s.update(1.0).unwrap();
        }
        assert!((s.lr() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn tiny_improvements_do_not_count() {
        let mut s = PlateauScheduler::new(0.01, 0.1, 0);
        s.update(1.0).unwrap();
        // 1e-5 relative improvement is below the 1e-4 threshold
        s.update(1.0 - 1e-5).unwrap();
        assert!((s.lr() - 0.001).abs() < 1e-18);
    }

    #[test]
    fn scheduler_rejects_nan() {
        let mut s = PlateauScheduler::new(0.01, 0.1, 15);
        assert!(s.update(f64::NAN).is_err());
    }
}
