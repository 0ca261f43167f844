//! LSTM cells and bidirectional wrappers built on the graph ops.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::graph::{Graph, NodeId};
use super::tensor::{ParamId, ParamStore};

/// One direction of an LSTM layer. The four gates (input, forget, cell,
/// output) are fused: `w` is `[4h, input_dim]`, `u` is `[4h, h]`, `b` is
/// `[4h]` with the forget block initialized to 1.
#[derive(Clone, Debug)]
pub struct LstmParams {
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

impl LstmParams {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w = store.xavier(&format!("{prefix}.w"), 4 * hidden, input_dim, rng);
        let u = store.xavier(&format!("{prefix}.u"), 4 * hidden, hidden, rng);
        let b = store.zeros(&format!("{prefix}.b"), 4 * hidden);
        store.get_mut(b).tensor.values_mut()[hidden..2 * hidden].fill(1.0);
        LstmParams { w, u, b, hidden }
    }

    /// Runs the cell over `inputs`, returning the hidden state after each
    /// step. States start at zero.
    pub fn run(&self, g: &mut Graph<'_>, inputs: &[NodeId]) -> Vec<NodeId> {
        let h = self.hidden;
        let w = g.param(self.w);
        let u = g.param(self.u);
        let b = g.param(self.b);
        let mut hidden = g.constant(vec![0.0; h]);
        let mut cell = g.constant(vec![0.0; h]);
        let mut outputs = Vec::with_capacity(inputs.len());
        for &x in inputs {
            let wx = g.matvec(w, x);
            let uh = g.matvec(u, hidden);
            let sums = g.add(wx, uh);
            let pre = g.add(sums, b);
            let i_gate = g.slice(pre, 0, h);
            let i_gate = g.sigmoid(i_gate);
            let f_gate = g.slice(pre, h, h);
            let f_gate = g.sigmoid(f_gate);
            let g_gate = g.slice(pre, 2 * h, h);
            let g_gate = g.tanh(g_gate);
            let o_gate = g.slice(pre, 3 * h, h);
            let o_gate = g.sigmoid(o_gate);
            let keep = g.mul(f_gate, cell);
            let write = g.mul(i_gate, g_gate);
            cell = g.add(keep, write);
            let cell_out = g.tanh(cell);
            hidden = g.mul(o_gate, cell_out);
            outputs.push(hidden);
        }
        outputs
    }
}

/// A bidirectional LSTM layer: a left-to-right and a right-to-left cell whose
/// states are concatenated, `hidden_total / 2` units each.
#[derive(Clone, Debug)]
pub struct BiLstmParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstmParams {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_total: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        assert!(hidden_total.is_multiple_of(2), "bidirectional hidden size must be even");
        let each = hidden_total / 2;
        BiLstmParams {
            fwd: LstmParams::new(store, &format!("{prefix}.fwd"), input_dim, each, rng),
            bwd: LstmParams::new(store, &format!("{prefix}.bwd"), input_dim, each, rng),
        }
    }

    /// Per-position concatenation of both directions' states.
    pub fn run(&self, g: &mut Graph<'_>, inputs: &[NodeId]) -> Vec<NodeId> {
        let n = inputs.len();
        let forward = self.fwd.run(g, inputs);
        let reversed: Vec<NodeId> = inputs.iter().rev().copied().collect();
        let backward = self.bwd.run(g, &reversed);
        (0..n).map(|i| g.concat(&[forward[i], backward[n - 1 - i]])).collect()
    }

    /// Concatenation of the two final states (each direction after reading
    /// the whole sequence), used as a sequence encoding.
    pub fn final_states(&self, g: &mut Graph<'_>, inputs: &[NodeId]) -> NodeId {
        assert!(!inputs.is_empty(), "cannot encode an empty sequence");
        let forward = self.fwd.run(g, inputs);
        let reversed: Vec<NodeId> = inputs.iter().rev().copied().collect();
        let backward = self.bwd.run(g, &reversed);
        g.concat(&[*forward.last().expect("non-empty"), *backward.last().expect("non-empty")])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn forget_bias_starts_at_one() {
        let mut store = ParamStore::new();
        let mut rng = rng::stream(1, rng::INIT);
        let lstm = LstmParams::new(&mut store, "test", 3, 4, &mut rng);
        let b = store.values(lstm.b);
        assert!(b[..4].iter().all(|&v| v == 0.0));
        assert!(b[4..8].iter().all(|&v| v == 1.0));
        assert!(b[8..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn run_produces_one_state_per_input() {
        let mut store = ParamStore::new();
        let mut rng = rng::stream(1, rng::INIT);
        let bilstm = BiLstmParams::new(&mut store, "test", 3, 8, &mut rng);
        let mut g = Graph::new(&store);
        let inputs: Vec<NodeId> = (0..5).map(|i| g.constant(vec![i as f64, 0.5, -1.0])).collect();
        let states = bilstm.run(&mut g, &inputs);
        assert_eq!(states.len(), 5);
        assert!(states.iter().all(|&s| g.value(s).len() == 8));
        let encoded = bilstm.final_states(&mut g, &inputs);
        assert_eq!(g.value(encoded).len(), 8);
    }

    #[test]
    fn states_differ_across_positions() {
        let mut store = ParamStore::new();
        let mut rng = rng::stream(2, rng::INIT);
        let lstm = LstmParams::new(&mut store, "test", 2, 3, &mut rng);
        let mut g = Graph::new(&store);
        let inputs: Vec<NodeId> = (0..3).map(|_| g.constant(vec![1.0, -0.5])).collect();
        let states = lstm.run(&mut g, &inputs);
        // Same input at each step, but the recurrent state accumulates.
        assert_ne!(g.value(states[0]), g.value(states[1]));
        assert_ne!(g.value(states[1]), g.value(states[2]));
    }
}
