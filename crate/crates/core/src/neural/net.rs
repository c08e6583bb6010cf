use super::layers::{dense_backward, dense_forward, lstm_backward, lstm_forward, Activation, LstmCache};
use super::{NeuralError, ParamLayout};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Trunk topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Recurrent first layer.
    Lstm,
    /// Dense tanh first layer; the network is memoryless.
    Mlp,
}

/// Shape of a trunk plus linear head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input: usize,
    pub architecture: Architecture,
    pub first_hidden: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    /// Append a state-independent log-std vector of length `output`.
    pub gaussian: bool,
}

impl NetSpec {
    pub fn policy(input: usize, n_uav: usize, architecture: Architecture) -> Self {
        Self {
            input,
            architecture,
            first_hidden: 128,
            hidden: vec![256; 3],
            output: 4 * n_uav,
            gaussian: true,
        }
    }

    pub fn value(input: usize, n_objectives: usize, architecture: Architecture) -> Self {
        Self {
            input,
            architecture,
            first_hidden: 128,
            hidden: vec![256; 3],
            output: n_objectives,
            gaussian: false,
        }
    }

    pub fn with_widths(mut self, first_hidden: usize, hidden: Vec<usize>) -> Self {
        self.first_hidden = first_hidden;
        self.hidden = hidden;
        self
    }

    /// Number of scalar parameters, counted from the topology directly.
    pub fn param_count(&self) -> usize {
        let (d, h) = (self.input, self.first_hidden);
        let mut n = match self.architecture {
            Architecture::Lstm => 4 * h * (d + h + 1),
            Architecture::Mlp => h * (d + 1),
        };
        let mut prev = h;
        for &w in &self.hidden {
            n += w * (prev + 1);
            prev = w;
        }
        n += self.output * (prev + 1);
        if self.gaussian {
            n += self.output;
        }
        n
    }

    fn layout(&self) -> (ParamLayout, Indices) {
        let mut l = ParamLayout::new();
        let (d, h) = (self.input, self.first_hidden);
        let first = match self.architecture {
            Architecture::Lstm => First::Lstm {
                wx: l.push("lstm.wx", &[4 * h, d]),
                wh: l.push("lstm.wh", &[4 * h, h]),
                b: l.push("lstm.b", &[4 * h]),
            },
            Architecture::Mlp => First::Dense {
                w: l.push("input.w", &[h, d]),
                b: l.push("input.b", &[h]),
            },
        };
        let mut dense = Vec::new();
        let mut prev = h;
        for (k, &w) in self.hidden.iter().enumerate() {
            dense.push((l.push(format!("fc{k}.w"), &[w, prev]), l.push(format!("fc{k}.b"), &[w])));
            prev = w;
        }
        let head = (l.push("head.w", &[self.output, prev]), l.push("head.b", &[self.output]));
        let log_std = self.gaussian.then(|| l.push("log_std", &[self.output]));
        (
            l,
            Indices {
                first,
                dense,
                head,
                log_std,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum First {
    Lstm { wx: usize, wh: usize, b: usize },
    Dense { w: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Indices {
    first: First,
    dense: Vec<(usize, usize)>,
    head: (usize, usize),
    log_std: Option<usize>,
}

/// Recurrent (h, c) carried between steps, one row per sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub h: Array2<f64>,
    pub c: Array2<f64>,
}

impl RecurrentState {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        Self {
            h: Array2::zeros((batch, hidden)),
            c: Array2::zeros((batch, hidden)),
        }
    }
}

/// Output of [`Net::forward`] with everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct NetForward {
    pub out: Array2<f64>,
    batch: usize,
    input: Array2<f64>,
    lstm: Option<LstmCache>,
    /// Output of the first layer followed by every hidden layer.
    acts: Vec<Array2<f64>>,
}

impl NetForward {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Recurrent state after the last step, if the trunk is recurrent.
    pub fn final_state(&self) -> Option<RecurrentState> {
        self.lstm.as_ref().map(|c| {
            let (h, c) = c.last_state();
            RecurrentState { h, c }
        })
    }
}

/// Trunk plus linear head over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    spec: NetSpec,
    layout: ParamLayout,
    idx: Indices,
    pub params: Vec<f64>,
}

impl Net {
    /// Network with all parameters zero.
    pub fn zeroed(spec: NetSpec) -> Self {
        let (layout, idx) = spec.layout();
        let params = vec![0.0; layout.total()];
        Self {
            spec,
            layout,
            idx,
            params,
        }
    }

    /// Orthogonal recurrent and input matrices, forget bias +1, fan-in
    /// uniform dense layers; `head_scale` multiplies the head weights and
    /// `log_std_init` fills the log-std vector.
    pub fn init<R: Rng + ?Sized>(spec: NetSpec, head_scale: f64, log_std_init: f64, rng: &mut R) -> Self {
        let mut net = Self::zeroed(spec);
        let h = net.spec.first_hidden;
        match net.idx.first {
            First::Lstm { wx, wh, b } => {
                for (idx, cols) in [(wx, net.spec.input), (wh, h)] {
                    let mut m = net.layout.view2_mut(&mut net.params, idx);
                    for g in 0..4 {
                        let block = orthogonal(h, cols, rng);
                        m.slice_mut(ndarray::s![g * h..(g + 1) * h, ..]).assign(&block);
                    }
                }
                let mut bias = net.layout.view1_mut(&mut net.params, b);
                bias.slice_mut(ndarray::s![h..2 * h]).fill(1.0);
            }
            First::Dense { w, .. } => uniform_fan_in(&mut net, w, 1.0, rng),
        }
        for k in 0..net.idx.dense.len() {
            let w = net.idx.dense[k].0;
            uniform_fan_in(&mut net, w, 1.0, rng);
        }
        let hw = net.idx.head.0;
        uniform_fan_in(&mut net, hw, head_scale, rng);
        if let Some(ls) = net.idx.log_std {
            net.layout.view1_mut(&mut net.params, ls).fill(log_std_init);
        }
        net
    }

    pub fn from_params(spec: NetSpec, params: Vec<f64>) -> Result<Self, NeuralError> {
        let mut net = Self::zeroed(spec);
        if params.len() != net.params.len() {
            return Err(NeuralError::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn recurrent(&self) -> bool {
        self.spec.architecture == Architecture::Lstm
    }

    pub fn initial_state(&self, batch: usize) -> RecurrentState {
        RecurrentState::zeros(batch, self.spec.first_hidden)
    }

    /// Raw log-std parameters (unclamped), if the net carries them.
    pub fn log_std_raw(&self) -> Option<ArrayView1<'_, f64>> {
        self.idx.log_std.map(|i| self.layout.view1(&self.params, i))
    }

    /// Range of the log-std entries inside the flat vector.
    pub fn log_std_range(&self) -> Option<std::ops::Range<usize>> {
        self.idx.log_std.map(|i| self.layout.entry(i).range())
    }

    /// Forward pass over `T·batch` time-major rows starting from `state`
    /// (zeros when `None`).
    pub fn forward(
        &self,
        x: ArrayView2<f64>,
        batch: usize,
        state: Option<&RecurrentState>,
    ) -> Result<NetForward, NeuralError> {
        if x.ncols() != self.spec.input {
            return Err(NeuralError::ShapeMismatch(format!(
                "input width {} but network expects {}",
                x.ncols(),
                self.spec.input
            )));
        }
        if batch == 0 || x.nrows() % batch != 0 {
            return Err(NeuralError::ShapeMismatch(format!(
                "{} rows do not split into sequences of batch {batch}",
                x.nrows()
            )));
        }
        let p = &self.params;
        let l = &self.layout;
        let mut acts = Vec::with_capacity(self.spec.hidden.len() + 1);
        let lstm = match self.idx.first {
            First::Lstm { wx, wh, b } => {
                let zeros;
                let st = match state {
                    Some(s) => s,
                    None => {
                        zeros = self.initial_state(batch);
                        &zeros
                    }
                };
                if st.h.dim() != (batch, self.spec.first_hidden) || st.c.dim() != st.h.dim() {
                    return Err(NeuralError::ShapeMismatch("recurrent state shape".into()));
                }
                let cache = lstm_forward(
                    x,
                    batch,
                    l.view2(p, wx),
                    l.view2(p, wh),
                    l.view1(p, b),
                    st.h.view(),
                    st.c.view(),
                );
                acts.push(cache.h.clone());
                Some(cache)
            }
            First::Dense { w, b } => {
                acts.push(dense_forward(x, l.view2(p, w), l.view1(p, b), Activation::Tanh));
                None
            }
        };
        for &(w, b) in &self.idx.dense {
            let y = dense_forward(acts.last().unwrap().view(), l.view2(p, w), l.view1(p, b), Activation::Tanh);
            acts.push(y);
        }
        let (hw, hb) = self.idx.head;
        let out = dense_forward(acts.last().unwrap().view(), l.view2(p, hw), l.view1(p, hb), Activation::Identity);
        Ok(NetForward {
            out,
            batch,
            input: x.to_owned(),
            lstm,
            acts,
        })
    }

    /// One step for a batch of observations, advancing `state` in place.
    pub fn step(&self, obs: ArrayView2<f64>, state: &mut RecurrentState) -> Result<Array2<f64>, NeuralError> {
        let fwd = self.forward(obs, obs.nrows(), Some(state))?;
        if let Some(s) = fwd.final_state() {
            *state = s;
        }
        Ok(fwd.out)
    }

    /// Accumulate into `grad` the gradient of a loss whose derivative w.r.t.
    /// `fwd.out` is `d_out`. Log-std gradients are the caller's business.
    pub fn backward(
        &self,
        fwd: &NetForward,
        d_out: ArrayView2<f64>,
        grad: &mut [f64],
        truncate: Option<usize>,
    ) -> Result<(), NeuralError> {
        if d_out.dim() != fwd.out.dim() {
            return Err(NeuralError::ShapeMismatch("output gradient shape".into()));
        }
        if grad.len() != self.params.len() {
            return Err(NeuralError::ShapeMismatch("gradient buffer length".into()));
        }
        let p = &self.params;
        let l = &self.layout;
        let (hw, hb) = self.idx.head;
        let n = fwd.acts.len();
        let mut dy = {
            let (gw, gb) = split_pair(l, grad, hw, hb);
            dense_backward(
                fwd.acts[n - 1].view(),
                fwd.out.view(),
                d_out,
                l.view2(p, hw),
                Activation::Identity,
                gw,
                gb,
                true,
            )
            .unwrap()
        };
        for (k, &(w, b)) in self.idx.dense.iter().enumerate().rev() {
            let (gw, gb) = split_pair(l, grad, w, b);
            dy = dense_backward(
                fwd.acts[k].view(),
                fwd.acts[k + 1].view(),
                dy.view(),
                l.view2(p, w),
                Activation::Tanh,
                gw,
                gb,
                true,
            )
            .unwrap();
        }
        match self.idx.first {
            First::Lstm { wx, wh, b } => {
                let cache = fwd.lstm.as_ref().expect("recurrent cache");
                let (gx, rest) = grad.split_at_mut(l.entry(wh).offset);
                let (gh, gb) = rest.split_at_mut(l.entry(b).offset - l.entry(wh).offset);
                let e = l.entry(wx);
                let gx = ndarray::ArrayViewMut2::from_shape((e.shape[0], e.shape[1]), &mut gx[e.range()]).unwrap();
                let e = l.entry(wh);
                let gh = ndarray::ArrayViewMut2::from_shape((e.shape[0], e.shape[1]), &mut gh[..e.len()]).unwrap();
                let gb = ndarray::ArrayViewMut1::from(&mut gb[..l.entry(b).len()]);
                lstm_backward(
                    fwd.input.view(),
                    cache,
                    dy.view(),
                    l.view2(p, wx),
                    l.view2(p, wh),
                    gx,
                    gh,
                    gb,
                    truncate,
                );
            }
            First::Dense { w, b } => {
                let (gw, gb) = split_pair(l, grad, w, b);
                dense_backward(
                    fwd.input.view(),
                    fwd.acts[0].view(),
                    dy.view(),
                    l.view2(p, w),
                    Activation::Tanh,
                    gw,
                    gb,
                    false,
                );
            }
        }
        Ok(())
    }
}

/// Disjoint mutable views of a weight matrix and the bias that follows it.
fn split_pair<'a>(
    l: &ParamLayout,
    grad: &'a mut [f64],
    w: usize,
    b: usize,
) -> (ndarray::ArrayViewMut2<'a, f64>, ndarray::ArrayViewMut1<'a, f64>) {
    let ew = l.entry(w);
    let eb = l.entry(b);
    debug_assert_eq!(ew.offset + ew.len(), eb.offset);
    let (head, tail) = grad[ew.offset..eb.offset + eb.len()].split_at_mut(ew.len());
    (
        ndarray::ArrayViewMut2::from_shape((ew.shape[0], ew.shape[1]), head).unwrap(),
        ndarray::ArrayViewMut1::from(tail),
    )
}

fn uniform_fan_in<R: Rng + ?Sized>(net: &mut Net, idx: usize, scale: f64, rng: &mut R) {
    let mut w = net.layout.view2_mut(&mut net.params, idx);
    let bound = scale / (w.ncols() as f64).sqrt();
    w.mapv_inplace(|_| rng.random_range(-bound..=bound));
}

/// Random (rows × cols) matrix with orthonormal rows or columns, whichever
/// is the shorter side.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (long, short) = (rows.max(cols), rows.min(cols));
    let mut q = Array2::<f64>::zeros((short, long));
    for i in 0..short {
        loop {
            let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
            for j in 0..i {
                let qj = q.row(j);
                let d: f64 = v.iter().zip(qj.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(qj.iter()).for_each(|(a, b)| *a -= d * b);
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-8 {
                q.row_mut(i).iter_mut().zip(&v).for_each(|(a, b)| *a = b / n);
                break;
            }
        }
    }
    if rows >= cols {
        q.reversed_axes()
    } else {
        q
    }
}

/// Gaussian policy: trunk, 4N means and 4N log-std parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork {
    pub net: Net,
}

impl PolicyNetwork {
    pub const HEAD_SCALE: f64 = 0.01;
    pub const LOG_STD_INIT: f64 = -0.5;

    pub fn new<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Self {
        Self {
            net: Net::init(spec, Self::HEAD_SCALE, Self::LOG_STD_INIT, rng),
        }
    }

    pub fn action_len(&self) -> usize {
        self.net.spec().output
    }

    /// Log-std clamped to the admissible range.
    pub fn log_std(&self) -> Vec<f64> {
        self.net
            .log_std_raw()
            .expect("policy carries log-std")
            .iter()
            .map(|v| v.clamp(super::LOG_STD_MIN, super::LOG_STD_MAX))
            .collect()
    }
}

/// Vector-valued critic with one output per objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNetwork {
    pub net: Net,
}

impl ValueNetwork {
    pub fn new<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Self {
        Self {
            net: Net::init(spec, 1.0, 0.0, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_policy_parameter_count() {
        let n = 8;
        let spec = NetSpec::policy(3 * n + 3, n, Architecture::Lstm);
        let net = Net::zeroed(spec.clone());
        let (d, h, f, a) = (27usize, 128usize, 256usize, 32usize);
        let expected = 4 * (h * d + h * h + h) + (f * h + f) + 2 * (f * f + f) + (a * f + a) + a;
        assert_eq!(net.len(), expected);
        assert_eq!(spec.param_count(), expected);
        assert_eq!(expected, 252_736);
    }

    #[test]
    fn zeroed_policy_outputs_zero_mean() {
        let spec = NetSpec::policy(9, 2, Architecture::Lstm).with_widths(4, vec![5]);
        let mut net = Net::zeroed(spec);
        let r = net.log_std_range().unwrap();
        net.params[r].fill(-0.5);
        let x = Array2::from_elem((3, 9), 0.7);
        let f = net.forward(x.view(), 1, None).unwrap();
        assert!(f.out.iter().all(|&v| v == 0.0));
        assert_eq!(f.out.ncols(), 8);
        let p = PolicyNetwork { net };
        assert!(p.log_std().iter().all(|&v| v == -0.5));
    }

    #[test]
    fn initialisation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = NetSpec::policy(15, 3, Architecture::Lstm).with_widths(8, vec![16, 16]);
        let p = PolicyNetwork::new(spec, &mut rng);
        let l = p.net.layout();
        let wh = l.view2(&p.net.params, 1);
        let block = wh.slice(ndarray::s![0..8, ..]);
        let gram = block.dot(&block.t());
        for i in 0..8 {
            for j in 0..8 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - e).abs() < 1e-12);
            }
        }
        let b = l.view1(&p.net.params, 2);
        assert!(b.slice(ndarray::s![8..16]).iter().all(|&v| v == 1.0));
        assert!(b.slice(ndarray::s![0..8]).iter().all(|&v| v == 0.0));
        let head = l.view2(&p.net.params, 7);
        assert!(head.iter().all(|v| v.abs() <= 0.01 / 4.0 + 1e-15));
        assert!(p.log_std().iter().all(|&v| v == -0.5));
    }

    #[test]
    fn step_matches_sequence_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = NetSpec::value(6, 2, Architecture::Lstm).with_widths(5, vec![7]);
        let v = ValueNetwork::new(spec, &mut rng);
        let x = Array2::from_shape_fn((8, 6), |(i, j)| ((i * 3 + j) as f64).sin());
        let seq = v.net.forward(x.view(), 2, None).unwrap();
        let mut st = v.net.initial_state(2);
        for t in 0..4 {
            let out = v.net.step(x.slice(ndarray::s![2 * t..2 * t + 2, ..]), &mut st).unwrap();
            assert_eq!(out, seq.out.slice(ndarray::s![2 * t..2 * t + 2, ..]));
        }
    }

    #[test]
    fn wrong_input_width_rejected() {
        let net = Net::zeroed(NetSpec::value(4, 2, Architecture::Mlp).with_widths(3, vec![]));
        let x = Array2::zeros((2, 5));
        assert!(matches!(net.forward(x.view(), 1, None), Err(NeuralError::ShapeMismatch(_))));
    }
}
