//! Forward and backward passes of the two layer types.
//!
//! Sequences are batched time-major: row `t * batch + b` holds step `t` of
//! sequence `b`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis, Zip};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// y = act(x Wᵀ + b); `w` is (out × in).
pub fn dense_forward(
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    b: ArrayView1<f64>,
    act: Activation,
) -> Array2<f64> {
    let mut y = x.dot(&w.t());
    y += &b;
    if act == Activation::Tanh {
        y.mapv_inplace(f64::tanh);
    }
    y
}

/// Accumulates dW and db; returns dx when requested.
#[allow(clippy::too_many_arguments)]
pub fn dense_backward(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    dy: ArrayView2<f64>,
    w: ArrayView2<f64>,
    act: Activation,
    mut dw: ArrayViewMut2<f64>,
    mut db: ArrayViewMut1<f64>,
    need_dx: bool,
) -> Option<Array2<f64>> {
    let dz = match act {
        Activation::Identity => dy.to_owned(),
        Activation::Tanh => {
            let mut dz = dy.to_owned();
            Zip::from(&mut dz).and(&y).for_each(|d, &y| *d *= 1.0 - y * y);
            dz
        }
    };
    general_mat_mul(1.0, &dz.t(), &x, 1.0, &mut dw);
    db += &dz.sum_axis(Axis(0));
    need_dx.then(|| dz.dot(&w))
}

/// Activations saved by [`lstm_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub batch: usize,
    pub hidden: usize,
    /// Post-activation gates [i, f, g, o], (T·B × 4H).
    pub gates: Array2<f64>,
    /// Cell states after each step, (T·B × H).
    pub c: Array2<f64>,
    pub tanh_c: Array2<f64>,
    /// Hidden outputs, (T·B × H).
    pub h: Array2<f64>,
    pub h0: Array2<f64>,
    pub c0: Array2<f64>,
}

impl LstmCache {
    pub fn steps(&self) -> usize {
        self.h.nrows() / self.batch
    }

    pub fn last_state(&self) -> (Array2<f64>, Array2<f64>) {
        let t = self.steps();
        let rows = s![(t - 1) * self.batch..t * self.batch, ..];
        (self.h.slice(rows).to_owned(), self.c.slice(rows).to_owned())
    }
}

/// Standard LSTM recursion over a time-major batch.
///
/// `wx` is (4H × D), `wh` is (4H × H), `b` is (4H); gate blocks are ordered
/// input, forget, candidate, output.
pub fn lstm_forward(
    x: ArrayView2<f64>,
    batch: usize,
    wx: ArrayView2<f64>,
    wh: ArrayView2<f64>,
    b: ArrayView1<f64>,
    h0: ArrayView2<f64>,
    c0: ArrayView2<f64>,
) -> LstmCache {
    let hidden = wh.ncols();
    let rows = x.nrows();
    let steps = rows / batch;
    // Input projections for every step in one product.
    let mut gates = Array2::zeros((rows, 4 * hidden));
    gates += &b;
    general_mat_mul(1.0, &x, &wx.t(), 1.0, &mut gates);
    let mut c = Array2::zeros((rows, hidden));
    let mut tanh_c = Array2::zeros((rows, hidden));
    let mut h = Array2::zeros((rows, hidden));
    let mut h_prev = h0.to_owned();
    let mut c_prev = c0.to_owned();
    for t in 0..steps {
        let r = t * batch..(t + 1) * batch;
        let mut z = gates.slice_mut(s![r.clone(), ..]);
        general_mat_mul(1.0, &h_prev, &wh.t(), 1.0, &mut z);
        for bi in 0..batch {
            let mut zr = z.row_mut(bi);
            let zs = zr.as_slice_mut().expect("contiguous gate row");
            for k in 0..hidden {
                let i = sigmoid(zs[k]);
                let f = sigmoid(zs[hidden + k]);
                let g = zs[2 * hidden + k].tanh();
                let o = sigmoid(zs[3 * hidden + k]);
                zs[k] = i;
                zs[hidden + k] = f;
                zs[2 * hidden + k] = g;
                zs[3 * hidden + k] = o;
                let cn = f * c_prev[[bi, k]] + i * g;
                let tc = cn.tanh();
                let row = t * batch + bi;
                c[[row, k]] = cn;
                tanh_c[[row, k]] = tc;
                h[[row, k]] = o * tc;
            }
        }
        h_prev.assign(&h.slice(s![r.clone(), ..]));
        c_prev.assign(&c.slice(s![r, ..]));
    }
    LstmCache {
        batch,
        hidden,
        gates,
        c,
        tanh_c,
        h,
        h0: h0.to_owned(),
        c0: c0.to_owned(),
    }
}

/// Backpropagation through time. `dh_out` is the gradient w.r.t. every
/// hidden output. With `truncate = Some(L)` no gradient flows through the
/// recurrent state across multiples of `L` steps. Returns dx.
#[allow(clippy::too_many_arguments)]
pub fn lstm_backward(
    x: ArrayView2<f64>,
    cache: &LstmCache,
    dh_out: ArrayView2<f64>,
    wx: ArrayView2<f64>,
    wh: ArrayView2<f64>,
    mut dwx: ArrayViewMut2<f64>,
    mut dwh: ArrayViewMut2<f64>,
    mut db: ArrayViewMut1<f64>,
    truncate: Option<usize>,
) -> Array2<f64> {
    let batch = cache.batch;
    let hidden = cache.hidden;
    let steps = cache.steps();
    let rows = steps * batch;
    let mut dgates = Array2::<f64>::zeros((rows, 4 * hidden));
    let mut dh_next = Array2::<f64>::zeros((batch, hidden));
    let mut dc_next = Array2::<f64>::zeros((batch, hidden));
    for t in (0..steps).rev() {
        let mut dc_prev = Array2::<f64>::zeros((batch, hidden));
        for bi in 0..batch {
            let row = t * batch + bi;
            let g = cache.gates.row(row);
            for k in 0..hidden {
                let (i, f, gg, o) = (g[k], g[hidden + k], g[2 * hidden + k], g[3 * hidden + k]);
                let tc = cache.tanh_c[[row, k]];
                let c_prev = if t == 0 {
                    cache.c0[[bi, k]]
                } else {
                    cache.c[[row - batch, k]]
                };
                let dh = dh_out[[row, k]] + dh_next[[bi, k]];
                let d_o = dh * tc;
                let dc = dh * o * (1.0 - tc * tc) + dc_next[[bi, k]];
                let di = dc * gg;
                let dg = dc * i;
                let df = dc * c_prev;
                dc_prev[[bi, k]] = dc * f;
                dgates[[row, k]] = di * i * (1.0 - i);
                dgates[[row, hidden + k]] = df * f * (1.0 - f);
                dgates[[row, 2 * hidden + k]] = dg * (1.0 - gg * gg);
                dgates[[row, 3 * hidden + k]] = d_o * o * (1.0 - o);
            }
        }
        let cut = matches!(truncate, Some(l) if l > 0 && t % l == 0);
        if t == 0 || cut {
            dh_next.fill(0.0);
            dc_next.fill(0.0);
        } else {
            let dz = dgates.slice(s![t * batch..(t + 1) * batch, ..]);
            dh_next = dz.dot(&wh);
            dc_next = dc_prev;
        }
    }
    // h_{t-1} for every row, with h0 for the first step.
    let mut h_prev = Array2::<f64>::zeros((rows, hidden));
    h_prev.slice_mut(s![..batch, ..]).assign(&cache.h0);
    if steps > 1 {
        h_prev
            .slice_mut(s![batch.., ..])
            .assign(&cache.h.slice(s![..rows - batch, ..]));
    }
    general_mat_mul(1.0, &dgates.t(), &x, 1.0, &mut dwx);
    general_mat_mul(1.0, &dgates.t(), &h_prev, 1.0, &mut dwh);
    db += &dgates.sum_axis(Axis(0));
    dgates.dot(&wx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn zero_lstm_outputs_zero() {
        let (d, h, b) = (3, 4, 2);
        let x = Array2::from_shape_fn((3 * b, d), |(i, j)| (i as f64) - (j as f64) * 0.7);
        let wx = Array2::zeros((4 * h, d));
        let wh = Array2::zeros((4 * h, h));
        let bias = Array1::zeros(4 * h);
        let z = Array2::zeros((b, h));
        let cache = lstm_forward(x.view(), b, wx.view(), wh.view(), bias.view(), z.view(), z.view());
        assert!(cache.h.iter().all(|&v| v == 0.0));
        assert!(cache.c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_lstm_by_hand() {
        // D = H = 1, all gate weights 1 on input and recurrent, zero bias.
        let wx = Array2::from_elem((4, 1), 1.0);
        let wh = Array2::from_elem((4, 1), 1.0);
        let bias = Array1::zeros(4);
        let x = array![[0.5], [-1.0]];
        let z = Array2::zeros((1, 1));
        let cache = lstm_forward(x.view(), 1, wx.view(), wh.view(), bias.view(), z.view(), z.view());
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        // step 0: pre-activation 0.5 for every gate, c_prev = 0
        let c1 = sig(0.5) * 0.5f64.tanh();
        let h1 = sig(0.5) * c1.tanh();
        // step 1: pre-activation -1 + h1
        let z2 = -1.0 + h1;
        let c2 = sig(z2) * c1 + sig(z2) * z2.tanh();
        let h2 = sig(z2) * c2.tanh();
        assert!((cache.h[[0, 0]] - h1).abs() < 1e-15);
        assert!((cache.c[[1, 0]] - c2).abs() < 1e-15);
        assert!((cache.h[[1, 0]] - h2).abs() < 1e-15);
    }

    #[test]
    fn one_step_sequence_equals_single_cell() {
        let (d, h) = (2, 3);
        let wx = Array2::from_shape_fn((4 * h, d), |(i, j)| ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2);
        let wh = Array2::from_shape_fn((4 * h, h), |(i, j)| ((i * 5 + j) % 7) as f64 * 0.05 - 0.15);
        let bias = Array1::from_shape_fn(4 * h, |i| i as f64 * 0.01);
        let x = array![[0.3, -0.8], [1.0, 0.2]];
        let z = Array2::zeros((1, h));
        let seq = lstm_forward(x.view(), 1, wx.view(), wh.view(), bias.view(), z.view(), z.view());
        let first = lstm_forward(x.slice(s![..1, ..]), 1, wx.view(), wh.view(), bias.view(), z.view(), z.view());
        let (h1, c1) = first.last_state();
        let second = lstm_forward(x.slice(s![1.., ..]), 1, wx.view(), wh.view(), bias.view(), h1.view(), c1.view());
        assert_eq!(seq.h.row(0), first.h.row(0));
        assert_eq!(seq.h.row(1), second.h.row(0));
    }
}
