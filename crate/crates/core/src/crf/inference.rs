//! Log-space forward-backward and Viterbi over the order-1 label lattice or
//! the order-2 lattice of `(previous, current)` label pairs.

use super::model::{CompiledSeq, CrfModel};

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Per-position scores of one sequence under a model.
pub(crate) struct Potentials<'a> {
    l: usize,
    t: usize,
    order2: bool,
    /// `t·L + c`
    emit: Vec<f64>,
    /// `(t·(L+1) + p)·L + c`, with `p = L` the start state
    trans: Vec<f64>,
    tri: &'a [f64],
}

impl<'a> Potentials<'a> {
    pub fn new(model: &'a CrfModel, seq: &CompiledSeq) -> Self {
        let l = model.num_labels();
        let t = seq.len();
        let w = &model.weights;
        let mut emit = vec![0.0; t * l];
        let mut trans = vec![0.0; t * (l + 1) * l];
        let toff = model.trans_offset();
        let bigram = &w[toff..toff + (l + 1) * l];
        for i in 0..t {
            let e = &mut emit[i * l..(i + 1) * l];
            for &u in &seq.unigram[i] {
                for (c, x) in e.iter_mut().enumerate() {
                    *x += w[u + c];
                }
            }
            let tr = &mut trans[i * (l + 1) * l..(i + 1) * (l + 1) * l];
            tr.copy_from_slice(bigram);
            for &b in &seq.edge[i] {
                for (k, x) in tr.iter_mut().enumerate() {
                    *x += w[b + k];
                }
            }
        }
        let tri = match model.trigram_offset() {
            Some(o) => &w[o..o + (l + 1) * l * l],
            None => &w[0..0],
        };
        Potentials {
            l,
            t,
            order2: model.order() == 2,
            emit,
            trans,
            tri,
        }
    }

    pub fn states(&self) -> usize {
        if self.order2 {
            (self.l + 1) * self.l
        } else {
            self.l
        }
    }

    /// Current label of a lattice state.
    pub fn label(&self, s: usize) -> usize {
        s % self.l
    }

    fn prev(&self, s: usize) -> usize {
        s / self.l
    }

    fn emit(&self, t: usize, c: usize) -> f64 {
        self.emit[t * self.l + c]
    }

    fn trans(&self, t: usize, p: usize, c: usize) -> f64 {
        self.trans[(t * (self.l + 1) + p) * self.l + c]
    }

    /// Score of entering state `s` at position 0.
    pub fn init(&self, s: usize) -> f64 {
        let l = self.l;
        if self.order2 && self.prev(s) != l {
            return f64::NEG_INFINITY;
        }
        let c = self.label(s);
        self.trans(0, l, c) + self.emit(0, c)
    }

    /// Score of moving from state `sp` at `t-1` to state `s` at `t`.
    pub fn step(&self, t: usize, sp: usize, s: usize) -> f64 {
        let c = self.label(s);
        if self.order2 {
            let (a, b) = (self.prev(sp), self.label(sp));
            self.trans(t, b, c) + self.tri[(a * self.l + b) * self.l + c] + self.emit(t, c)
        } else {
            self.trans(t, sp, c) + self.emit(t, c)
        }
    }

    /// States that can precede `s` at `t ≥ 1`.
    pub fn preds(&self, s: usize) -> std::ops::Range<usize> {
        if self.order2 {
            let b = self.prev(s);
            if b == self.l {
                return 0..0;
            }
            0..self.l + 1
        } else {
            0..self.l
        }
    }

    fn pred_state(&self, s: usize, k: usize) -> usize {
        if self.order2 {
            k * self.l + self.prev(s)
        } else {
            k
        }
    }

    fn succ_state(&self, sp: usize, c: usize) -> usize {
        if self.order2 {
            self.label(sp) * self.l + c
        } else {
            c
        }
    }

    /// Sum of potentials along a label path.
    pub fn path_score(&self, y: &[usize]) -> f64 {
        let l = self.l;
        let mut s = self.trans(0, l, y[0]) + self.emit(0, y[0]);
        for t in 1..self.t {
            s += self.trans(t, y[t - 1], y[t]) + self.emit(t, y[t]);
            if self.order2 {
                let a = if t >= 2 { y[t - 2] } else { l };
                s += self.tri[(a * l + y[t - 1]) * l + y[t]];
            }
        }
        s
    }

    pub fn forward(&self) -> Vec<Vec<f64>> {
        let n = self.states();
        let mut alpha = vec![vec![f64::NEG_INFINITY; n]; self.t];
        for s in 0..n {
            alpha[0][s] = self.init(s);
        }
        for t in 1..self.t {
            for s in 0..n {
                let prev = &alpha[t - 1];
                alpha[t][s] = log_sum_exp(self.preds(s).map(|k| {
                    let sp = self.pred_state(s, k);
                    prev[sp] + self.step(t, sp, s)
                }));
            }
        }
        alpha
    }

    pub fn backward(&self) -> Vec<Vec<f64>> {
        let n = self.states();
        let mut beta = vec![vec![0.0; n]; self.t];
        for t in (0..self.t.saturating_sub(1)).rev() {
            for sp in 0..n {
                let next = &beta[t + 1];
                beta[t][sp] = log_sum_exp((0..self.l).map(|c| {
                    let s = self.succ_state(sp, c);
                    self.step(t + 1, sp, s) + next[s]
                }));
            }
        }
        beta
    }

    pub fn log_partition(&self) -> f64 {
        let alpha = self.forward();
        log_sum_exp(alpha[self.t - 1].iter().copied())
    }

    /// Best path and its score. Ties go to the lowest label index, deciding
    /// from the left.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let n = self.states();
        let mut best = vec![vec![0.0; n]; self.t];
        for t in (0..self.t.saturating_sub(1)).rev() {
            for sp in 0..n {
                let next = &best[t + 1];
                best[t][sp] = (0..self.l)
                    .map(|c| {
                        let s = self.succ_state(sp, c);
                        self.step(t + 1, sp, s) + next[s]
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        }
        let pick = |vals: &[f64]| -> (usize, f64) {
            let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (vals.iter().position(|&v| v == m).unwrap_or(0), m)
        };
        let first: Vec<f64> = (0..self.l)
            .map(|c| {
                let s = self.first_state(c);
                self.init(s) + best[0][s]
            })
            .collect();
        let (c0, score) = pick(&first);
        let mut path = vec![c0];
        let mut sp = self.first_state(c0);
        for t in 1..self.t {
            let vals: Vec<f64> = (0..self.l)
                .map(|c| {
                    let s = self.succ_state(sp, c);
                    self.step(t, sp, s) + best[t][s]
                })
                .collect();
            let (c, _) = pick(&vals);
            path.push(c);
            sp = self.succ_state(sp, c);
        }
        (path, score)
    }

    /// The position-0 state with current label `c`.
    fn first_state(&self, c: usize) -> usize {
        if self.order2 {
            self.l * self.l + c
        } else {
            c
        }
    }
}

/// Posterior quantities of one sequence.
pub(crate) struct Posteriors {
    pub log_z: f64,
    /// `t·L + c`
    pub label: Vec<f64>,
    /// `(t·(L+1) + p)·L + c`
    pub pair: Vec<f64>,
    /// `(t·(L+1)·L + (a·L + b))·L + c`, order 2 only
    pub triple: Vec<f64>,
}

pub(crate) fn posteriors(pot: &Potentials) -> Posteriors {
    let (l, t_len) = (pot.l, pot.t);
    let n = pot.states();
    let alpha = pot.forward();
    let beta = pot.backward();
    let log_z = log_sum_exp(alpha[t_len - 1].iter().copied());
    let mut label = vec![0.0; t_len * l];
    let mut pair = vec![0.0; t_len * (l + 1) * l];
    let mut triple = if pot.order2 {
        vec![0.0; t_len * (l + 1) * l * l]
    } else {
        Vec::new()
    };
    for t in 0..t_len {
        for s in 0..n {
            let p = (alpha[t][s] + beta[t][s] - log_z).exp();
            if p == 0.0 {
                continue;
            }
            let c = pot.label(s);
            label[t * l + c] += p;
            if pot.order2 {
                let b = pot.prev(s);
                pair[(t * (l + 1) + b) * l + c] += p;
            } else if t == 0 {
                pair[l * l + c] += p;
            }
        }
        if t == 0 {
            continue;
        }
        for s in 0..n {
            for k in pot.preds(s) {
                let sp = pot.pred_state(s, k);
                let p = (alpha[t - 1][sp] + pot.step(t, sp, s) + beta[t][s] - log_z).exp();
                if p == 0.0 {
                    continue;
                }
                if pot.order2 {
                    let (a, b, c) = (pot.prev(sp), pot.label(sp), pot.label(s));
                    triple[(t * (l + 1) * l + a * l + b) * l + c] += p;
                } else {
                    pair[(t * (l + 1) + sp) * l + s] += p;
                }
            }
        }
    }
    Posteriors {
        log_z,
        label,
        pair,
        triple,
    }
}

/// `log Z(x)` for one compiled sequence.
pub fn log_partition(model: &CrfModel, seq: &CompiledSeq) -> f64 {
    Potentials::new(model, seq).log_partition()
}

/// Unnormalized score of a label path.
pub fn sequence_score(model: &CrfModel, seq: &CompiledSeq, labels: &[usize]) -> f64 {
    Potentials::new(model, seq).path_score(labels)
}

/// Highest-scoring label ids.
pub fn viterbi(model: &CrfModel, seq: &CompiledSeq) -> Vec<usize> {
    viterbi_with_score(model, seq).0
}

pub fn viterbi_with_score(model: &CrfModel, seq: &CompiledSeq) -> (Vec<usize>, f64) {
    if seq.is_empty() {
        return (Vec::new(), 0.0);
    }
    Potentials::new(model, seq).viterbi()
}

/// Per-position label marginals, `[t][label]`.
pub fn marginals(model: &CrfModel, seq: &CompiledSeq) -> Vec<Vec<f64>> {
    let pot = Potentials::new(model, seq);
    let l = pot.l;
    posteriors(&pot).label.chunks(l).map(<[f64]>::to_vec).collect()
}

/// Adds `scale ×` the feature counts of one sequence to `grad`, either along
/// a fixed path or in expectation.
pub(crate) fn add_counts(
    model: &CrfModel,
    seq: &CompiledSeq,
    grad: &mut [f64],
    counts: Counts,
    scale: f64,
) {
    let l = model.num_labels();
    let toff = model.trans_offset();
    let t_len = seq.len();
    match counts {
        Counts::Path(y) => {
            for t in 0..t_len {
                let p = if t == 0 { l } else { y[t - 1] };
                for &u in &seq.unigram[t] {
                    grad[u + y[t]] += scale;
                }
                for &b in &seq.edge[t] {
                    grad[b + p * l + y[t]] += scale;
                }
                grad[toff + p * l + y[t]] += scale;
                if let (Some(o), true) = (model.trigram_offset(), t >= 1) {
                    let a = if t >= 2 { y[t - 2] } else { l };
                    grad[o + (a * l + y[t - 1]) * l + y[t]] += scale;
                }
            }
        }
        Counts::Expected(post) => {
            let block = (l + 1) * l;
            for t in 0..t_len {
                let lab = &post.label[t * l..(t + 1) * l];
                for &u in &seq.unigram[t] {
                    for (c, &p) in lab.iter().enumerate() {
                        grad[u + c] += scale * p;
                    }
                }
                let pair = &post.pair[t * block..(t + 1) * block];
                for &b in &seq.edge[t] {
                    for (k, &p) in pair.iter().enumerate() {
                        grad[b + k] += scale * p;
                    }
                }
                for (k, &p) in pair.iter().enumerate() {
                    grad[toff + k] += scale * p;
                }
                if let (Some(o), true) = (model.trigram_offset(), t >= 1) {
                    let tb = block * l;
                    for (k, &p) in post.triple[t * tb..(t + 1) * tb].iter().enumerate() {
                        grad[o + k] += scale * p;
                    }
                }
            }
        }
    }
}

pub(crate) enum Counts<'a> {
    Path(&'a [usize]),
    Expected(&'a Posteriors),
}
