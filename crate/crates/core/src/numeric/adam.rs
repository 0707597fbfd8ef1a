use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Moment estimates for a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamConfig,
    first_moment: Vec<Matrix>,
    second_moment: Vec<Matrix>,
    step_count: u64,
}

impl AdamState {
    pub fn new<'a>(hyper: AdamConfig, params: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let (first_moment, second_moment) = params
            .into_iter()
            .map(|p| (Matrix::zeros(p.rows(), p.cols()), Matrix::zeros(p.rows(), p.cols())))
            .unzip();
        AdamState {
            hyper,
            first_moment,
            second_moment,
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Matrix] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Matrix] {
        &self.second_moment
    }

    /// One bias-corrected Adam update, in place.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::contract(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first_moment) {
            if p.shape() != m.shape() || g.shape() != m.shape() {
                return Err(Error::Dimension {
                    op: "adam_step",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        let t = self.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);

        for (k, p) in params.iter_mut().enumerate() {
            let g = grads[k].as_slice();
            let m = self.first_moment[k].as_mut_slice();
            let v = self.second_moment[k].as_mut_slice();
            for (i, w) in p.as_mut_slice().iter_mut().enumerate() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_step(g: f64) -> f64 {
        let mut p = Matrix::scalar(0.0);
        let mut state = AdamState::new(AdamConfig::default(), [&p]);
        state.step(&mut [&mut p], &[&Matrix::scalar(g)]).unwrap();
        p[(0, 0)]
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Matrix::from_rows(&[[1.5, -2.0]]);
        let before = p.clone();
        let mut state = AdamState::new(AdamConfig::default(), [&p]);
        state.step(&mut [&mut p], &[&Matrix::zeros(1, 2)]).unwrap();
        assert_eq!(p, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let delta = one_step(1.0);
        assert!((delta + 0.001).abs() < 1e-6, "{delta}");
    }

    #[test]
    fn negated_gradient_negates_step() {
        assert_eq!(one_step(0.37), -one_step(-0.37));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Matrix::zeros(2, 2);
        let mut state = AdamState::new(AdamConfig::default(), [&p]);
        let err = state.step(&mut [&mut p], &[&Matrix::zeros(1, 2)]).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn second_moment_stays_nonnegative() {
        let mut p = Matrix::zeros(1, 3);
        let mut state = AdamState::new(AdamConfig::default(), [&p]);
        for k in 0..10 {
            let g = Matrix::from_rows(&[[-(k as f64), 0.5, 1e3]]);
            state.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert!(state.second_moment()[0].as_slice().iter().all(|&v| v >= 0.0));
        assert_eq!(state.step_count(), 10);
    }
}
