use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentConfig, Head};
use crate::error::{CollageError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dense {
    w: usize,
    b: usize,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LstmLayer {
    wx: usize,
    wh: usize,
    b: usize,
    input: usize,
}

/// Offsets of every tensor in the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    bb1: Dense,
    bb2: Dense,
    lstm: Vec<LstmLayer>,
    heads: Vec<Dense>,
    value: Dense,
    total: usize,
}

impl Layout {
    fn new(cfg: &AgentConfig) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            at += n;
            at - n
        };
        let h = cfg.hidden;
        let dense = |rows: usize, cols: usize, take: &mut dyn FnMut(usize) -> usize| Dense {
            w: take(rows * cols),
            b: take(rows),
            rows,
            cols,
        };
        let bb1 = dense(h, cfg.obs_dim, &mut take);
        let bb2 = dense(h, h, &mut take);
        let lstm = (0..cfg.lstm_layers)
            .map(|_| LstmLayer { wx: take(4 * h * h), wh: take(4 * h * h), b: take(4 * h), input: h })
            .collect();
        let heads = Head::ALL.iter().map(|&hd| dense(cfg.head_size(hd), h, &mut take)).collect();
        let value = dense(1, h, &mut take);
        Layout { bb1, bb2, lstm, heads, value, total: at }
    }
}

fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        let row = &w[r * cols..(r + 1) * cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `dx += W^T dy`
fn matvec_t(w: &[f64], rows: usize, cols: usize, dy: &[f64], dx: &mut [f64]) {
    for (r, &g) in dy.iter().enumerate().take(rows) {
        if g == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (d, a) in dx.iter_mut().zip(row) {
            *d += g * a;
        }
    }
}

/// `G += dy x^T`
fn outer(g: &mut [f64], cols: usize, dy: &[f64], x: &[f64]) {
    for (r, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let row = &mut g[r * cols..(r + 1) * cols];
        for (gr, xv) in row.iter_mut().zip(x) {
            *gr += d * xv;
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hidden and cell state of every LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl RecurrentState {
    pub fn zeros(cfg: &AgentConfig) -> Self {
        RecurrentState {
            h: vec![vec![0.0; cfg.hidden]; cfg.lstm_layers],
            c: vec![vec![0.0; cfg.hidden]; cfg.lstm_layers],
        }
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    u: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    x: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    layers: Vec<LayerCache>,
    top: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    /// Raw logits, indexed by [`Head::index`].
    pub logits: Vec<Vec<f64>>,
    pub value: f64,
    pub state: RecurrentState,
}

/// Gradient buffer matching [`AgentParams::values`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros_like(params: &AgentParams) -> Self {
        Gradients(vec![0.0; params.len()])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn clear(&mut self) {
        self.0.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// All network weights in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    cfg: AgentConfig,
    layout: Layout,
    pub values: Vec<f64>,
}

impl AgentParams {
    pub fn zeros(cfg: AgentConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        let values = vec![0.0; layout.total];
        Ok(AgentParams { cfg, layout, values })
    }

    /// Uniform fan-in initialization; output heads start near zero so the
    /// initial policy is close to uniform over legal actions.
    pub fn new(cfg: AgentConfig, seed: u64) -> Result<Self> {
        let mut p = AgentParams::zeros(cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |values: &mut [f64], d: Dense, scale: f64| {
            let k = scale / (d.cols as f64).sqrt();
            for v in &mut values[d.w..d.w + d.rows * d.cols] {
                *v = rng.gen_range(-k..k);
            }
        };
        let l = p.layout.clone();
        fill(&mut p.values, l.bb1, 1.0);
        fill(&mut p.values, l.bb2, 1.0);
        let h = p.cfg.hidden;
        for layer in &l.lstm {
            fill(&mut p.values, Dense { w: layer.wx, b: 0, rows: 4 * h, cols: layer.input }, 1.0);
            fill(&mut p.values, Dense { w: layer.wh, b: 0, rows: 4 * h, cols: h }, 1.0);
            for v in &mut p.values[layer.b + h..layer.b + 2 * h] {
                *v = 1.0;
            }
        }
        for &d in &l.heads {
            fill(&mut p.values, d, 0.01);
        }
        fill(&mut p.values, l.value, 1.0);
        Ok(p)
    }

    /// Rebuilds parameters from a stored vector.
    pub fn from_values(cfg: AgentConfig, values: Vec<f64>) -> Result<Self> {
        let mut p = AgentParams::zeros(cfg)?;
        if values.len() != p.values.len() {
            return Err(CollageError::Checkpoint(format!(
                "expected {} parameters, found {}",
                p.values.len(),
                values.len()
            )));
        }
        p.values = values;
        Ok(p)
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn forward(&self, obs: &[f64], state: &RecurrentState) -> Result<StepOutput> {
        self.forward_cached(obs, state).map(|(out, _)| out)
    }

    pub fn forward_cached(&self, obs: &[f64], state: &RecurrentState) -> Result<(StepOutput, ForwardCache)> {
        if obs.len() != self.cfg.obs_dim {
            return Err(CollageError::invalid_input(format!(
                "observation has length {}, agent expects {}",
                obs.len(),
                self.cfg.obs_dim
            )));
        }
        if obs.iter().any(|v| !v.is_finite()) {
            return Err(CollageError::Numeric("non-finite observation".into()));
        }
        let w = &self.values;
        let l = &self.layout;
        let h = self.cfg.hidden;

        let dense_tanh = |d: Dense, x: &[f64]| {
            let mut a = w[d.b..d.b + d.rows].to_vec();
            matvec(&w[d.w..], d.rows, d.cols, x, &mut a);
            a.iter_mut().for_each(|v| *v = v.tanh());
            a
        };
        let h1 = dense_tanh(l.bb1, obs);
        let h2 = dense_tanh(l.bb2, &h1);

        let mut next = RecurrentState { h: Vec::with_capacity(l.lstm.len()), c: Vec::with_capacity(l.lstm.len()) };
        let mut layers = Vec::with_capacity(l.lstm.len());
        let mut u = h2.clone();
        for (k, layer) in l.lstm.iter().enumerate() {
            let mut z = w[layer.b..layer.b + 4 * h].to_vec();
            matvec(&w[layer.wx..], 4 * h, layer.input, &u, &mut z);
            matvec(&w[layer.wh..], 4 * h, h, &state.h[k], &mut z);
            for (j, v) in z.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&j) { v.tanh() } else { sigmoid(*v) };
            }
            let mut c = vec![0.0; h];
            let mut tanh_c = vec![0.0; h];
            let mut hn = vec![0.0; h];
            for j in 0..h {
                c[j] = z[h + j] * state.c[k][j] + z[j] * z[2 * h + j];
                tanh_c[j] = c[j].tanh();
                hn[j] = z[3 * h + j] * tanh_c[j];
            }
            layers.push(LayerCache { u, h_prev: state.h[k].clone(), c_prev: state.c[k].clone(), gates: z, tanh_c });
            next.c.push(c);
            next.h.push(hn.clone());
            u = hn;
        }
        let top = u;

        let logits: Vec<Vec<f64>> = l
            .heads
            .iter()
            .map(|d| {
                let mut o = w[d.b..d.b + d.rows].to_vec();
                matvec(&w[d.w..], d.rows, d.cols, &top, &mut o);
                o
            })
            .collect();
        let mut value = [w[l.value.b]];
        matvec(&w[l.value.w..], 1, h, &top, &mut value);
        let value = value[0];

        if !value.is_finite() || logits.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CollageError::Numeric(format!(
                "non-finite network output (value {value}, hidden norm {:.3e})",
                top.iter().map(|v| v * v).sum::<f64>().sqrt()
            )));
        }
        let cache = ForwardCache { x: obs.to_vec(), h1, h2, layers, top };
        Ok((StepOutput { logits, value, state: next }, cache))
    }

    /// Backpropagation through time over one sequence that started from
    /// the zero state. `dlogits[t][head]` and `dvalue[t]` are loss
    /// gradients with respect to the step outputs; results accumulate
    /// into `grads`.
    pub fn backward(&self, caches: &[ForwardCache], dlogits: &[Vec<Vec<f64>>], dvalue: &[f64], grads: &mut Gradients) {
        let w = &self.values;
        let l = &self.layout;
        let h = self.cfg.hidden;
        let g = &mut grads.0;
        let n_layers = l.lstm.len();
        let mut dh_next = vec![vec![0.0; h]; n_layers];
        let mut dc_next = vec![vec![0.0; h]; n_layers];

        for t in (0..caches.len()).rev() {
            let cache = &caches[t];
            let mut dtop = vec![0.0; h];
            for (d, dl) in l.heads.iter().zip(&dlogits[t]) {
                if dl.iter().all(|&v| v == 0.0) {
                    continue;
                }
                outer(&mut g[d.w..d.w + d.rows * d.cols], d.cols, dl, &cache.top);
                for (gb, v) in g[d.b..d.b + d.rows].iter_mut().zip(dl) {
                    *gb += v;
                }
                matvec_t(&w[d.w..], d.rows, d.cols, dl, &mut dtop);
            }
            let dv = [dvalue[t]];
            outer(&mut g[l.value.w..l.value.w + h], h, &dv, &cache.top);
            g[l.value.b] += dv[0];
            matvec_t(&w[l.value.w..], 1, h, &dv, &mut dtop);

            let mut dh = dtop;
            for k in (0..n_layers).rev() {
                let layer = &l.lstm[k];
                let lc = &cache.layers[k];
                let gates = &lc.gates;
                let mut dz = vec![0.0; 4 * h];
                let mut dc_prev = vec![0.0; h];
                for j in 0..h {
                    let dhj = dh[j] + dh_next[k][j];
                    let (i, f, gg, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                    let tc = lc.tanh_c[j];
                    let dc = dhj * o * (1.0 - tc * tc) + dc_next[k][j];
                    dz[j] = dc * gg * i * (1.0 - i);
                    dz[h + j] = dc * lc.c_prev[j] * f * (1.0 - f);
                    dz[2 * h + j] = dc * i * (1.0 - gg * gg);
                    dz[3 * h + j] = dhj * tc * o * (1.0 - o);
                    dc_prev[j] = dc * f;
                }
                outer(&mut g[layer.wx..layer.wx + 4 * h * layer.input], layer.input, &dz, &lc.u);
                outer(&mut g[layer.wh..layer.wh + 4 * h * h], h, &dz, &lc.h_prev);
                for (gb, v) in g[layer.b..layer.b + 4 * h].iter_mut().zip(&dz) {
                    *gb += v;
                }
                let mut du = vec![0.0; layer.input];
                matvec_t(&w[layer.wx..], 4 * h, layer.input, &dz, &mut du);
                let mut dhp = vec![0.0; h];
                matvec_t(&w[layer.wh..], 4 * h, h, &dz, &mut dhp);
                dh_next[k] = dhp;
                dc_next[k] = dc_prev;
                dh = du;
            }

            let mut da2 = dh;
            for (d, y) in da2.iter_mut().zip(&cache.h2) {
                *d *= 1.0 - y * y;
            }
            let d2 = l.bb2;
            outer(&mut g[d2.w..d2.w + d2.rows * d2.cols], d2.cols, &da2, &cache.h1);
            for (gb, v) in g[d2.b..d2.b + d2.rows].iter_mut().zip(&da2) {
                *gb += v;
            }
            let mut da1 = vec![0.0; h];
            matvec_t(&w[d2.w..], d2.rows, d2.cols, &da2, &mut da1);
            for (d, y) in da1.iter_mut().zip(&cache.h1) {
                *d *= 1.0 - y * y;
            }
            let d1 = l.bb1;
            outer(&mut g[d1.w..d1.w + d1.rows * d1.cols], d1.cols, &da1, &cache.x);
            for (gb, v) in g[d1.b..d1.b + d1.rows].iter_mut().zip(&da1) {
                *gb += v;
            }
        }
    }
}
