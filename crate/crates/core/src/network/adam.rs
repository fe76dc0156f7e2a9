use super::{Gradients, Network};
use crate::Error;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moments over the flattened parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(net: &Network) -> Self {
        let n = net.param_count();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

#[inline]
fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    for i in 0..p.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
        let mh = m[i] / c1;
        let vh = v[i] / c2;
        p[i] -= lr * mh / (vh.sqrt() + ADAM_EPS);
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(net: &mut Network, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<(), Error> {
    if state.m.len() != net.param_count() || grads.weights.len() != net.num_layers() {
        return Err(Error::Shape("optimizer state does not match the network".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let mut at = 0;
    for l in 0..net.num_layers() {
        let w = net.weights[l].as_mut_slice();
        let gw = grads.weights[l].as_slice();
        if gw.len() != w.len() || grads.biases[l].len() != net.biases[l].len() {
            return Err(Error::Shape(format!("gradient for layer {l} has the wrong shape")));
        }
        let n = w.len();
        let (m, v) = (&mut state.m[at..at + n], &mut state.v[at..at + n]);
        update(w, gw, m, v, lr, c1, c2);
        at += n;
        let b = &mut net.biases[l];
        let n = b.len();
        let (m, v) = (&mut state.m[at..at + n], &mut state.v[at..at + n]);
        update(b, &grads.biases[l], m, v, lr, c1, c2);
        at += n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Matrix, SeededRng};

    #[test]
    fn zero_gradients_leave_parameters() {
        let mut net = Network::init_he(&[3, 4, 2], &mut SeededRng::new(1)).unwrap();
        let before = net.clone();
        let mut st = AdamState::new(&net);
        let g = Gradients::zeros_like(&net);
        for _ in 0..20 {
            adam_step(&mut net, &g, &mut st, 1e-3).unwrap();
        }
        assert_eq!(net, before);
        assert_eq!(st.step, 20);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut net = Network::from_parts(vec![Matrix::from_vec(1, 1, vec![0.5]).unwrap()], vec![vec![0.0]]).unwrap();
        let mut st = AdamState::new(&net);
        let g = Gradients {
            weights: vec![Matrix::from_vec(1, 1, vec![3.0]).unwrap()],
            biases: vec![vec![-2.0]],
        };
        adam_step(&mut net, &g, &mut st, 1e-3).unwrap();
        assert!((net.weights[0][(0, 0)] - (0.5 - 1e-3)).abs() < 1e-9);
        assert!((net.biases[0][0] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn quadratic_bowl_descends() {
        // minimise ‖w − c‖² over a 1×3 linear map
        let c = [1.0, -2.0, 0.5];
        let mut net = Network::from_parts(vec![Matrix::zeros(1, 3)], vec![vec![0.0; 3]]).unwrap();
        let mut st = AdamState::new(&net);
        let loss = |n: &Network| n.weights[0].as_slice().iter().zip(&c).map(|(w, c)| (w - c).powi(2)).sum::<f64>();
        let mut prev = loss(&net);
        for step in 0..100 {
            let gw: Vec<f64> = net.weights[0].as_slice().iter().zip(&c).map(|(w, c)| 2.0 * (w - c)).collect();
            let g = Gradients {
                weights: vec![Matrix::from_vec(1, 3, gw).unwrap()],
                biases: vec![vec![0.0; 3]],
            };
            adam_step(&mut net, &g, &mut st, 1e-2).unwrap();
            let l = loss(&net);
            if step >= 5 {
                assert!(l < prev);
            }
            prev = l;
        }
    }
}
