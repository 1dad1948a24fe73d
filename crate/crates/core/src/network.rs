//! Incremental (ring) training of widely linear IIR filters.
//!
//! At every time step the circulating estimate `φ(n-1)` enters the first
//! node of the ring. Each node adapts it once with its own sample pair and
//! its own filter memory, then hands it to the next node; the estimate that
//! leaves the last node is `φ(n)`. Filter and sensitivity histories stay at
//! their node and are never circulated.
//!
//! The non-cooperative baseline runs the same per-node learning rule with an
//! independent weight vector at every node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, FilterNodeState};
use crate::wl::{WeightVector, C64};

/// Input and desired sequences seen by one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStream {
    pub input: Vec<C64>,
    pub desired: Vec<C64>,
}

impl NodeStream {
    pub fn new(input: Vec<C64>, desired: Vec<C64>) -> Result<Self> {
        if input.len() != desired.len() {
            return Err(Error::invalid(format!(
                "input has {} samples but desired has {}",
                input.len(),
                desired.len()
            )));
        }
        Ok(Self { input, desired })
    }

    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }
}

/// One-step-ahead prediction pairs `x(n) = s(n-1)`, `d(n) = s(n)`.
pub fn make_prediction_task(signal: &[C64]) -> Result<NodeStream> {
    if signal.len() < 2 {
        return Err(Error::invalid(format!(
            "prediction needs at least 2 samples, got {}",
            signal.len()
        )));
    }
    NodeStream::new(signal[..signal.len() - 1].to_vec(), signal[1..].to_vec())
}

/// Per-iteration log of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub nodes: usize,
    pub iterations: usize,
    /// `|e_k(n)|^2`, iteration-major: entry `n * nodes + k`.
    pub sq_errors: Vec<f64>,
    /// The circulating estimate for incremental runs; one vector per node otherwise.
    pub final_weights: Vec<WeightVector>,
    pub divergence_events: u64,
    /// Number of weight updates applied (one per node per iteration).
    pub weight_updates: u64,
    /// Per-node filter outputs, when recording was requested.
    pub outputs: Option<Vec<Vec<C64>>>,
}

impl RunRecord {
    fn with_capacity(nodes: usize, iterations: usize, record_outputs: bool) -> Self {
        Self {
            nodes,
            iterations,
            sq_errors: Vec::with_capacity(nodes * iterations),
            final_weights: Vec::new(),
            divergence_events: 0,
            weight_updates: 0,
            outputs: record_outputs.then(|| vec![Vec::with_capacity(iterations); nodes]),
        }
    }

    pub fn sq_error(&self, iteration: usize, node: usize) -> f64 {
        self.sq_errors[iteration * self.nodes + node]
    }

    /// Squared errors of one node across iterations.
    pub fn node_sq_errors(&self, node: usize) -> impl Iterator<Item = f64> + '_ {
        self.sq_errors.iter().skip(node).step_by(self.nodes).copied()
    }

    /// Squared errors of all nodes at one iteration.
    pub fn iteration_sq_errors(&self, iteration: usize) -> &[f64] {
        &self.sq_errors[iteration * self.nodes..(iteration + 1) * self.nodes]
    }
}

/// A weight update observed during an incremental run.
#[derive(Debug, Clone, Copy)]
pub struct UpdateEvent<'a> {
    pub time: usize,
    /// Position in the ring, `0..L`.
    pub hop: usize,
    pub node: usize,
    pub weights: &'a WeightVector,
}

/// `L` nodes on a Hamiltonian cycle plus the circulating estimate.
#[derive(Debug, Clone)]
pub struct RingNetwork {
    states: Vec<FilterNodeState>,
    streams: Vec<NodeStream>,
    step_sizes: Vec<f64>,
    estimate: WeightVector,
    ring_order: Vec<usize>,
    record_outputs: bool,
}

impl RingNetwork {
    /// Zero-initialized network with uniform step size `mu`, ring order
    /// equal to node index order.
    pub fn new(config: FilterConfig, streams: Vec<NodeStream>, mu: f64) -> Result<Self> {
        if streams.is_empty() {
            return Err(Error::invalid("a network needs at least one node"));
        }
        check_step_size(mu)?;
        let states = (0..streams.len())
            .map(|_| FilterNodeState::new(config))
            .collect::<Result<Vec<_>>>()?;
        let nodes = streams.len();
        Ok(Self {
            states,
            step_sizes: vec![mu; nodes],
            estimate: config.zero_weights(),
            ring_order: (0..nodes).collect(),
            record_outputs: false,
            streams,
        })
    }

    pub fn with_step_sizes(mut self, step_sizes: Vec<f64>) -> Result<Self> {
        if step_sizes.len() != self.nodes() {
            return Err(Error::invalid(format!(
                "{} step sizes given for {} nodes",
                step_sizes.len(),
                self.nodes()
            )));
        }
        step_sizes.iter().try_for_each(|mu| check_step_size(*mu))?;
        self.step_sizes = step_sizes;
        Ok(self)
    }

    /// Visits nodes in `order` (a permutation of `0..L`) instead of index order.
    pub fn with_ring_order(mut self, order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.nodes()];
        for &k in &order {
            if k >= seen.len() || std::mem::replace(&mut seen[k], true) {
                return Err(Error::invalid(format!("ring order {order:?} is not a permutation")));
            }
        }
        if order.len() != self.nodes() {
            return Err(Error::invalid(format!("ring order {order:?} is not a permutation")));
        }
        self.ring_order = order;
        Ok(self)
    }

    pub fn with_initial_estimate(mut self, w: WeightVector) -> Result<Self> {
        if !w.same_shape(&self.estimate) {
            return Err(Error::invalid("initial estimate does not match the filter orders"));
        }
        self.estimate = w;
        Ok(self)
    }

    pub fn with_output_recording(mut self, on: bool) -> Self {
        self.record_outputs = on;
        self
    }

    pub fn nodes(&self) -> usize {
        self.states.len()
    }

    pub fn estimate(&self) -> &WeightVector {
        &self.estimate
    }

    pub fn streams(&self) -> &[NodeStream] {
        &self.streams
    }

    pub fn node_states(&self) -> &[FilterNodeState] {
        &self.states
    }

    /// Shortest stream length, the largest admissible iteration count.
    pub fn max_iterations(&self) -> usize {
        self.streams.iter().map(NodeStream::len).min().unwrap_or(0)
    }

    fn check_iterations(&self, iterations: usize) -> Result<()> {
        let available = self.max_iterations();
        if iterations > available {
            return Err(Error::invalid(format!(
                "{iterations} iterations requested but node streams hold only {available} samples"
            )));
        }
        Ok(())
    }

    fn divergence_total(&self) -> u64 {
        self.states.iter().map(FilterNodeState::divergence_events).sum()
    }
}

fn check_step_size(mu: f64) -> Result<()> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::invalid(format!("step size must be finite and non-negative, got {mu}")));
    }
    Ok(())
}

/// Incremental run: the estimate circulates once around the ring per time step.
pub fn iaca_iir_run(net: &mut RingNetwork, iterations: usize) -> Result<RunRecord> {
    iaca_iir_run_observed(net, iterations, |_| {})
}

/// [`iaca_iir_run`] calling `observer` after every weight update.
pub fn iaca_iir_run_observed(
    net: &mut RingNetwork,
    iterations: usize,
    mut observer: impl FnMut(UpdateEvent<'_>),
) -> Result<RunRecord> {
    net.check_iterations(iterations)?;
    let nodes = net.nodes();
    let before = net.divergence_total();
    let mut record = RunRecord::with_capacity(nodes, iterations, net.record_outputs);
    let mut row = vec![0.0; nodes];
    let mut w = net.estimate.clone();
    for n in 0..iterations {
        for (hop, &k) in net.ring_order.iter().enumerate() {
            let stream = &net.streams[k];
            let r = net.states[k].adapt_in_place(&mut w, stream.input[n], stream.desired[n], net.step_sizes[k])?;
            row[k] = r.error.norm_sqr();
            if let Some(out) = record.outputs.as_mut() {
                out[k].push(r.output);
            }
            record.weight_updates += 1;
            observer(UpdateEvent {
                time: n,
                hop,
                node: k,
                weights: &w,
            });
        }
        record.sq_errors.extend_from_slice(&row);
    }
    net.estimate = w.clone();
    record.final_weights = vec![w];
    record.divergence_events = net.divergence_total() - before;
    Ok(record)
}

/// Non-cooperative baseline: every node adapts its own copy of the initial
/// estimate and nothing is exchanged.
pub fn noncoop_run(net: &mut RingNetwork, iterations: usize) -> Result<RunRecord> {
    net.check_iterations(iterations)?;
    let nodes = net.nodes();
    let before = net.divergence_total();
    let mut record = RunRecord::with_capacity(nodes, iterations, net.record_outputs);
    let mut weights = vec![net.estimate.clone(); nodes];
    for n in 0..iterations {
        for k in 0..nodes {
            let stream = &net.streams[k];
            let r = net.states[k].adapt_in_place(&mut weights[k], stream.input[n], stream.desired[n], net.step_sizes[k])?;
            record.sq_errors.push(r.error.norm_sqr());
            if let Some(out) = record.outputs.as_mut() {
                out[k].push(r.output);
            }
            record.weight_updates += 1;
        }
    }
    record.final_weights = weights;
    record.divergence_events = net.divergence_total() - before;
    Ok(record)
}
