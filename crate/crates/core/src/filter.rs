//! Augmented complex adaptive IIR filter (ACAIIR) engine.
//!
//! The filter output is
//!
//! ```text
//! y(n) = Σ_{m=1..M} a_m y(n-m) + Σ_{m=0..N} b_m x(n-m)
//!      + Σ_{m=1..M} g_m y*(n-m) + Σ_{m=0..N} h_m x*(n-m)
//! ```
//!
//! and training follows the output error `e(n) = d(n) - y(n)` with the
//! Wirtinger gradient of `|e(n)|^2`. Because `y(n)` depends on past outputs,
//! the derivatives of the output with respect to each conjugated weight are
//! propagated recursively as two coupled families of sensitivities:
//!
//! ```text
//! Φ_w(n) = ∂y*(n)/∂w*      Ψ_w(n) = ∂y(n)/∂w*
//! Φ_w(n) = drive_w(n) + Σ_l a_l* Φ_w(n-l) + Σ_l g_l* Ψ_w(n-l)
//! Ψ_w(n) =              Σ_l a_l  Ψ_w(n-l) + Σ_l g_l  Φ_w(n-l)
//! ```
//!
//! with drives `y*(n-m)`, `y(n-m)`, `x*(n-m)`, `x(n-m)` for the `a`, `g`,
//! `b`, `h` blocks. Past sensitivities are treated as if they had been
//! produced by the current weights (slow-adaptation approximation).
//!
//! [`SensitivityMode::Exact`] runs one recursion per coefficient.
//! [`SensitivityMode::Reduced`] runs one recursion per block (eight in
//! total) and reads coefficient `m` as a delayed copy of the block head:
//! `Φ_{a_m}(n) = Φ_{a_1}(n-m+1)` and `Φ_{b_m}(n) = Φ_{b_0}(n-m)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wl::{flat_len, WeightVector, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityMode {
    Exact,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// `M >= 1`
    pub feedback_order: usize,
    /// `N >= 0`
    pub feedforward_order: usize,
    pub sensitivity_mode: SensitivityMode,
    /// Magnitude above which an output, sensitivity or weight counts as diverged.
    pub divergence_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            feedback_order: 4,
            feedforward_order: 4,
            sensitivity_mode: SensitivityMode::Reduced,
            divergence_threshold: 1e6,
        }
    }
}

impl FilterConfig {
    pub fn new(feedback_order: usize, feedforward_order: usize, mode: SensitivityMode) -> Result<Self> {
        let cfg = Self {
            feedback_order,
            feedforward_order,
            sensitivity_mode: mode,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feedback_order == 0 {
            return Err(Error::invalid("feedback order M must be at least 1"));
        }
        if self.divergence_threshold.is_nan() || self.divergence_threshold <= 0.0 {
            return Err(Error::invalid("divergence threshold must be positive"));
        }
        Ok(())
    }

    pub fn weight_len(&self) -> usize {
        flat_len(self.feedback_order, self.feedforward_order)
    }

    pub fn zero_weights(&self) -> WeightVector {
        WeightVector::zeros(self.feedback_order, self.feedforward_order)
    }

    fn reduced_line_len(&self) -> usize {
        let m = self.feedback_order;
        m + m.max(self.feedforward_order + 1)
    }
}

/// Fixed-length delay line; `lag(0)` is the most recent value.
#[derive(Debug, Clone, PartialEq)]
struct DelayLine {
    buf: Vec<C64>,
    head: usize,
}

impl DelayLine {
    fn new(len: usize) -> Self {
        debug_assert!(len > 0);
        Self {
            buf: vec![ZERO; len],
            head: 0,
        }
    }

    #[inline]
    fn push(&mut self, v: C64) {
        self.head = if self.head == 0 { self.buf.len() - 1 } else { self.head - 1 };
        self.buf[self.head] = v;
    }

    #[inline]
    fn lag(&self, k: usize) -> C64 {
        let i = self.head + k;
        let len = self.buf.len();
        self.buf[if i >= len { i - len } else { i }]
    }

    fn clear(&mut self) {
        self.buf.fill(ZERO);
        self.head = 0;
    }

    fn len(&self) -> usize {
        self.buf.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    A = 0,
    G = 1,
    B = 2,
    H = 3,
}

#[derive(Debug, Clone, PartialEq)]
enum SensitivityStore {
    /// One Φ and Ψ line of length `M` per coefficient, flattened order.
    Exact { phi: Vec<DelayLine>, psi: Vec<DelayLine> },
    /// One Φ and Ψ line per block head, indexed by [`Family`].
    Reduced {
        phi: [DelayLine; 4],
        psi: [DelayLine; 4],
    },
}

impl SensitivityStore {
    fn new(cfg: &FilterConfig) -> Self {
        match cfg.sensitivity_mode {
            SensitivityMode::Exact => {
                let lines = vec![DelayLine::new(cfg.feedback_order); cfg.weight_len()];
                SensitivityStore::Exact {
                    phi: lines.clone(),
                    psi: lines,
                }
            }
            SensitivityMode::Reduced => {
                let line = DelayLine::new(cfg.reduced_line_len());
                SensitivityStore::Reduced {
                    phi: std::array::from_fn(|_| line.clone()),
                    psi: std::array::from_fn(|_| line.clone()),
                }
            }
        }
    }

    fn clear(&mut self) {
        match self {
            SensitivityStore::Exact { phi, psi } => {
                phi.iter_mut().chain(psi.iter_mut()).for_each(DelayLine::clear)
            }
            SensitivityStore::Reduced { phi, psi } => {
                phi.iter_mut().chain(psi.iter_mut()).for_each(DelayLine::clear)
            }
        }
    }
}

/// One step of the coupled Φ/Ψ recursion; returns the new head values.
#[inline]
fn recurse(drive: C64, phi: &DelayLine, psi: &DelayLine, a: &[C64], g: &[C64]) -> (C64, C64) {
    let mut phi_new = drive;
    let mut psi_new = ZERO;
    for (l, (al, gl)) in a.iter().zip(g).enumerate() {
        let (phi_l, psi_l) = (phi.lag(l), psi.lag(l));
        phi_new += al.conj() * phi_l + gl.conj() * psi_l;
        psi_new += al * psi_l + gl * phi_l;
    }
    (phi_new, psi_new)
}

#[inline]
fn within(v: C64, threshold: f64) -> bool {
    v.is_finite() && v.norm_sqr() <= threshold * threshold
}

/// Result of one [`FilterNodeState::adapt_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub weights: WeightVector,
    pub error: C64,
    pub output: C64,
    pub diverged: bool,
}

/// Scalar part of a step; the weights are updated in place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub error: C64,
    pub output: C64,
    pub diverged: bool,
}

/// Per-node filter memory: signal delay lines plus sensitivity delay lines.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterNodeState {
    config: FilterConfig,
    /// y(n-1)..y(n-M)
    y_hist: DelayLine,
    /// x(n)..x(n-N)
    x_hist: DelayLine,
    sens: SensitivityStore,
    scratch: Vec<C64>,
    divergence_events: u64,
}

impl FilterNodeState {
    pub fn new(config: FilterConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            y_hist: DelayLine::new(config.feedback_order),
            x_hist: DelayLine::new(config.feedforward_order + 1),
            sens: SensitivityStore::new(&config),
            scratch: vec![ZERO; config.weight_len()],
            divergence_events: 0,
            config,
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn divergence_events(&self) -> u64 {
        self.divergence_events
    }

    /// Past outputs, most recent first.
    pub fn output_history(&self) -> Vec<C64> {
        (0..self.y_hist.len()).map(|k| self.y_hist.lag(k)).collect()
    }

    /// Current and past inputs, most recent first.
    pub fn input_history(&self) -> Vec<C64> {
        (0..self.x_hist.len()).map(|k| self.x_hist.lag(k)).collect()
    }

    /// Overwrites the output history (most recent first). Intended for
    /// setting up hand-checked scenarios.
    pub fn set_output_history(&mut self, past: &[C64]) -> Result<()> {
        if past.len() != self.y_hist.len() {
            return Err(Error::invalid(format!(
                "output history needs {} values, got {}",
                self.y_hist.len(),
                past.len()
            )));
        }
        self.y_hist.clear();
        past.iter().rev().for_each(|v| self.y_hist.push(*v));
        Ok(())
    }

    /// Zeroes every delay line and counts a divergence event. Weights are
    /// owned by the caller and untouched.
    pub fn reset(&mut self) {
        self.y_hist.clear();
        self.x_hist.clear();
        self.sens.clear();
        self.divergence_events += 1;
    }

    fn check_shape(&self, w: &WeightVector) -> Result<()> {
        if w.feedback_order() != self.config.feedback_order
            || w.feedforward_order() != self.config.feedforward_order
        {
            return Err(Error::invalid(format!(
                "weights have orders (M={}, N={}) but filter state expects (M={}, N={})",
                w.feedback_order(),
                w.feedforward_order(),
                self.config.feedback_order,
                self.config.feedforward_order
            )));
        }
        Ok(())
    }

    /// Pushes `x_n` into the input history and evaluates the widely linear
    /// IIR output with weights `w`. The output history is not advanced.
    pub fn filter_output(&mut self, w: &WeightVector, x_n: C64) -> Result<C64> {
        self.check_shape(w)?;
        if !x_n.is_finite() {
            return Err(Error::invalid("non-finite input sample"));
        }
        self.x_hist.push(x_n);
        Ok(self.evaluate(w))
    }

    fn evaluate(&self, w: &WeightVector) -> C64 {
        let mut y = ZERO;
        for (m, (am, gm)) in w.a().iter().zip(w.g()).enumerate() {
            let past = self.y_hist.lag(m);
            y += am * past + gm * past.conj();
        }
        for (m, (bm, hm)) in w.b().iter().zip(w.h()).enumerate() {
            let x = self.x_hist.lag(m);
            y += bm * x + hm * x.conj();
        }
        y
    }

    /// Pushes `y_n` into the output history.
    pub fn advance(&mut self, y_n: C64) {
        self.y_hist.push(y_n);
    }

    /// Runs the sensitivity recursions for the current step using the
    /// incoming weights `w`. Returns `true` if a value left the divergence
    /// envelope, in which case the state has been reset.
    pub fn update_sensitivities(&mut self, w: &WeightVector) -> Result<bool> {
        self.check_shape(w)?;
        let (a, g) = (w.a(), w.g());
        let m_order = self.config.feedback_order;
        let n_order = self.config.feedforward_order;
        let threshold = self.config.divergence_threshold;
        let mut ok = true;
        match &mut self.sens {
            SensitivityStore::Exact { phi, psi } => {
                let mut j = 0;
                for m in 0..m_order {
                    let drive = self.y_hist.lag(m).conj();
                    ok &= step_line(&mut phi[j], &mut psi[j], drive, a, g, threshold);
                    j += 1;
                }
                for m in 0..m_order {
                    let drive = self.y_hist.lag(m);
                    ok &= step_line(&mut phi[j], &mut psi[j], drive, a, g, threshold);
                    j += 1;
                }
                for m in 0..=n_order {
                    let drive = self.x_hist.lag(m).conj();
                    ok &= step_line(&mut phi[j], &mut psi[j], drive, a, g, threshold);
                    j += 1;
                }
                for m in 0..=n_order {
                    let drive = self.x_hist.lag(m);
                    ok &= step_line(&mut phi[j], &mut psi[j], drive, a, g, threshold);
                    j += 1;
                }
            }
            SensitivityStore::Reduced { phi, psi } => {
                let drives = [
                    self.y_hist.lag(0).conj(),
                    self.y_hist.lag(0),
                    self.x_hist.lag(0).conj(),
                    self.x_hist.lag(0),
                ];
                for (f, drive) in drives.into_iter().enumerate() {
                    ok &= step_line(&mut phi[f], &mut psi[f], drive, a, g, threshold);
                }
            }
        }
        if !ok {
            self.reset();
        }
        Ok(!ok)
    }

    /// Calls `f(j, S_j, P_j)` for every coefficient `j` in flattened order,
    /// where `S = ∂y*/∂w*` and `P = ∂y/∂w*` at the current step.
    fn for_each_sensitivity(&self, mut f: impl FnMut(usize, C64, C64)) {
        let m_order = self.config.feedback_order;
        let n_order = self.config.feedforward_order;
        match &self.sens {
            SensitivityStore::Exact { phi, psi } => {
                for (j, (p, q)) in phi.iter().zip(psi).enumerate() {
                    f(j, p.lag(0), q.lag(0));
                }
            }
            SensitivityStore::Reduced { phi, psi } => {
                let mut j = 0;
                // Block heads are a_1, g_1, b_0, h_0, so the k-th coefficient
                // of every block sits at lag k of its head line.
                for (family, count) in [
                    (Family::A, m_order),
                    (Family::G, m_order),
                    (Family::B, n_order + 1),
                    (Family::H, n_order + 1),
                ] {
                    let (p, q) = (&phi[family as usize], &psi[family as usize]);
                    for k in 0..count {
                        f(j, p.lag(k), q.lag(k));
                        j += 1;
                    }
                }
            }
        }
    }

    /// Stacked sensitivity vectors `(S, P)` in flattened weight order.
    pub fn sensitivities(&self) -> (Vec<C64>, Vec<C64>) {
        let len = self.config.weight_len();
        let (mut s, mut p) = (vec![ZERO; len], vec![ZERO; len]);
        self.for_each_sensitivity(|j, sj, pj| {
            s[j] = sj;
            p[j] = pj;
        });
        (s, p)
    }

    /// `[∇_w |e|^2]* = -(e S + P e*)`, in flattened weight order.
    pub fn conjugate_gradient(&self, e_n: C64) -> Vec<C64> {
        let mut grad = vec![ZERO; self.config.weight_len()];
        let e_conj = e_n.conj();
        self.for_each_sensitivity(|j, s, p| grad[j] = -(e_n * s + p * e_conj));
        grad
    }

    /// One training step: push input, compute output and error, update the
    /// sensitivities with `w_in`, form `w_out = w_in + μ (e S + P e*)`, then
    /// push the output.
    pub fn adapt_step(&mut self, w_in: &WeightVector, x_n: C64, d_n: C64, mu: f64) -> Result<StepOutcome> {
        let mut weights = w_in.clone();
        let r = self.adapt_in_place(&mut weights, x_n, d_n, mu)?;
        Ok(StepOutcome {
            weights,
            error: r.error,
            output: r.output,
            diverged: r.diverged,
        })
    }

    /// [`adapt_step`](Self::adapt_step) updating `w` in place. On divergence
    /// `w` is left as it came in and the delay lines are zeroed; an output
    /// outside the envelope is reported as zero.
    pub fn adapt_in_place(&mut self, w: &mut WeightVector, x_n: C64, d_n: C64, mu: f64) -> Result<StepReport> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::invalid(format!("step size must be finite and non-negative, got {mu}")));
        }
        if !d_n.is_finite() {
            return Err(Error::invalid("non-finite desired sample"));
        }
        let threshold = self.config.divergence_threshold;
        let y = self.filter_output(w, x_n)?;
        if !within(y, threshold) {
            self.reset();
            return Ok(StepReport {
                error: d_n,
                output: ZERO,
                diverged: true,
            });
        }
        let e = d_n - y;
        if self.update_sensitivities(w)? {
            return Ok(StepReport {
                error: e,
                output: y,
                diverged: true,
            });
        }

        let e_conj = e.conj();
        let mut scratch = std::mem::take(&mut self.scratch);
        let current = w.as_slice();
        let mut ok = true;
        self.for_each_sensitivity(|j, s, p| {
            let v = current[j] + (e * s + p * e_conj) * mu;
            ok &= within(v, threshold);
            scratch[j] = v;
        });
        if ok {
            w.as_mut_slice().copy_from_slice(&scratch);
        }
        self.scratch = scratch;
        if !ok {
            self.reset();
            return Ok(StepReport {
                error: e,
                output: y,
                diverged: true,
            });
        }
        self.advance(y);
        Ok(StepReport {
            error: e,
            output: y,
            diverged: false,
        })
    }
}

#[inline]
fn step_line(phi: &mut DelayLine, psi: &mut DelayLine, drive: C64, a: &[C64], g: &[C64], threshold: f64) -> bool {
    let (p, q) = recurse(drive, phi, psi, a, g);
    phi.push(p);
    psi.push(q);
    within(p, threshold) && within(q, threshold)
}
