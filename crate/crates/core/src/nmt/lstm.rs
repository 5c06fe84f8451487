//! A single LSTM cell with exact backward pass.
//!
//! Gate layout in the stacked weight matrix/bias is `[input, forget, cell,
//! output]`, each block of `hidden` rows; the input to the affine map is the
//! concatenation `[x; h_prev]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::math::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    pub input_size: usize,
    pub hidden_size: usize,
    /// 4·hidden × (input + hidden)
    pub w: Matrix,
    /// 4·hidden
    pub b: Vec<f64>,
}

/// Per-step activations needed by the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Gradient buffers for one cell.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w: Matrix,
    pub b: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmCell {
    pub fn zeros(input_size: usize, hidden_size: usize) -> LstmCell {
        LstmCell {
            input_size,
            hidden_size,
            w: Matrix::zeros(4 * hidden_size, input_size + hidden_size),
            b: vec![0.0; 4 * hidden_size],
        }
    }

    pub fn uniform(
        input_size: usize,
        hidden_size: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> LstmCell {
        LstmCell {
            input_size,
            hidden_size,
            w: Matrix::uniform(4 * hidden_size, input_size + hidden_size, scale, rng),
            b: (0..4 * hidden_size)
                .map(|_| rng.gen_range(-scale..=scale))
                .collect(),
        }
    }

    pub fn zero_grads(&self) -> LstmGrads {
        LstmGrads {
            w: Matrix::zeros(self.w.rows, self.w.cols),
            b: vec![0.0; self.b.len()],
        }
    }

    pub fn forward(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmStep {
        let n = self.hidden_size;
        debug_assert_eq!(x.len(), self.input_size);
        debug_assert_eq!(h_prev.len(), n);
        let mut xh = Vec::with_capacity(self.input_size + n);
        xh.extend_from_slice(x);
        xh.extend_from_slice(h_prev);
        let mut a = self.w.mul_vec(&xh);
        for (av, bv) in a.iter_mut().zip(&self.b) {
            *av += bv;
        }
        let i: Vec<f64> = a[0..n].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = a[n..2 * n].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = a[2 * n..3 * n].iter().map(|&v| v.tanh()).collect();
        let o: Vec<f64> = a[3 * n..4 * n].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<f64> = (0..n).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..n).map(|k| o[k] * tanh_c[k]).collect();
        LstmStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            g,
            o,
            c,
            tanh_c,
            h,
        }
    }

    /// Backward for one step. `dh`/`dc` are gradients flowing into this
    /// step's outputs. Returns (dx, dh_prev, dc_prev) and accumulates weight
    /// gradients into `grads`.
    pub fn backward(
        &self,
        step: &LstmStep,
        dh: &[f64],
        dc_in: &[f64],
        grads: &mut LstmGrads,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.hidden_size;
        let mut da = vec![0.0; 4 * n];
        let mut dc_prev = vec![0.0; n];
        for k in 0..n {
            let d_o = dh[k] * step.tanh_c[k];
            let dc = dc_in[k] + dh[k] * step.o[k] * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
            let d_i = dc * step.g[k];
            let d_f = dc * step.c_prev[k];
            let d_g = dc * step.i[k];
            dc_prev[k] = dc * step.f[k];
            da[k] = d_i * step.i[k] * (1.0 - step.i[k]);
            da[n + k] = d_f * step.f[k] * (1.0 - step.f[k]);
            da[2 * n + k] = d_g * (1.0 - step.g[k] * step.g[k]);
            da[3 * n + k] = d_o * step.o[k] * (1.0 - step.o[k]);
        }
        let mut xh = Vec::with_capacity(self.input_size + n);
        xh.extend_from_slice(&step.x);
        xh.extend_from_slice(&step.h_prev);
        grads.w.add_outer(&da, &xh, 1.0);
        for (gb, d) in grads.b.iter_mut().zip(&da) {
            *gb += d;
        }
        let dxh = self.w.mul_vec_transposed(&da);
        let dx = dxh[..self.input_size].to_vec();
        let dh_prev = dxh[self.input_size..].to_vec();
        (dx, dh_prev, dc_prev)
    }

    /// Run the cell over a sequence from zero state; returns all step caches.
    pub fn run(&self, xs: &[Vec<f64>]) -> Vec<LstmStep> {
        let mut h = vec![0.0; self.hidden_size];
        let mut c = vec![0.0; self.hidden_size];
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            let step = self.forward(x, &h, &c);
            h = step.h.clone();
            c = step.c.clone();
            steps.push(step);
        }
        steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central-difference check of the cell in isolation with a quadratic
    /// loss on h: L = ½‖h‖².
    #[test]
    fn cell_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut cell = LstmCell::uniform(3, 4, 0.5, &mut rng);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h0: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c0: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let loss = |cell: &LstmCell| -> f64 {
            let s = cell.forward(&x, &h0, &c0);
            0.5 * s.h.iter().map(|v| v * v).sum::<f64>()
        };

        let step = cell.forward(&x, &h0, &c0);
        let dh: Vec<f64> = step.h.clone();
        let mut grads = cell.zero_grads();
        let (_, _, _) = cell.backward(&step, &dh, &vec![0.0; 4], &mut grads);

        let eps = 1e-5;
        for idx in [0usize, 5, 17, 23, cell.w.data.len() - 1] {
            let orig = cell.w.data[idx];
            cell.w.data[idx] = orig + eps;
            let up = loss(&cell);
            cell.w.data[idx] = orig - eps;
            let down = loss(&cell);
            cell.w.data[idx] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.w.data[idx];
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            assert!(rel < 1e-6, "w[{idx}]: analytic {analytic} vs numeric {numeric}");
        }
        for idx in [0usize, 7, 15] {
            let orig = cell.b[idx];
            cell.b[idx] = orig + eps;
            let up = loss(&cell);
            cell.b[idx] = orig - eps;
            let down = loss(&cell);
            cell.b[idx] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.b[idx];
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            assert!(rel < 1e-6, "b[{idx}]: analytic {analytic} vs numeric {numeric}");
        }
    }

    #[test]
    fn zero_cell_maps_anything_to_zero_hidden() {
        let cell = LstmCell::zeros(2, 3);
        let s = cell.forward(&[1.0, -1.0], &[0.0; 3], &[0.0; 3]);
        // gates are σ(0)=½, g=tanh(0)=0 → c = 0, h = 0
        for v in &s.h {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn run_threads_state_through_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cell = LstmCell::uniform(2, 3, 0.4, &mut rng);
        let xs = vec![vec![0.3, -0.2], vec![0.1, 0.9]];
        let steps = cell.run(&xs);
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[1].h_prev, steps[0].h);
        assert_eq!(steps[1].c_prev, steps[0].c);
    }
}
