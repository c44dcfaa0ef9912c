use super::LdpcCode;
use crate::error::{Error, Result};

/// Saturation bound on every message and posterior.
pub const MESSAGE_CLIP: f64 = 25.0;

/// Outcome of a sum-product run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub converged: bool,
    /// Iterations performed; 0 when the channel decisions were already a
    /// codeword.
    pub iterations: usize,
    pub posteriors: Vec<f64>,
}

/// Message buffers indexed by Tanner-graph edge. Edges are numbered by check
/// node, then by ascending variable within the check.
#[derive(Debug, Clone)]
pub struct DecoderState {
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
    /// Variable-to-check messages.
    pub lambda: Vec<f64>,
    /// Check-to-variable messages.
    pub big_lambda: Vec<f64>,
    /// Posterior LLRs.
    pub mu: Vec<f64>,
    pub iteration: usize,
    tanh_buf: Vec<f64>,
    prefix: Vec<f64>,
}

impl DecoderState {
    pub fn new(code: &LdpcCode) -> Self {
        let h = code.h();
        let mut check_ptr = Vec::with_capacity(h.rows() + 1);
        let mut edge_var = Vec::with_capacity(h.nnz());
        let mut var_edges = vec![Vec::new(); h.cols()];
        check_ptr.push(0);
        for r in 0..h.rows() {
            for &c in h.row(r) {
                var_edges[c].push(edge_var.len());
                edge_var.push(c);
            }
            check_ptr.push(edge_var.len());
        }
        let e = edge_var.len();
        let max_deg = (0..h.rows()).map(|r| h.row(r).len()).max().unwrap_or(0);
        DecoderState {
            check_ptr,
            edge_var,
            var_edges,
            lambda: vec![0.0; e],
            big_lambda: vec![0.0; e],
            mu: vec![0.0; h.cols()],
            iteration: 0,
            tanh_buf: vec![0.0; max_deg],
            prefix: vec![0.0; max_deg + 1],
        }
    }

    fn check_update(&mut self) {
        for c in 0..self.check_ptr.len() - 1 {
            let (lo, hi) = (self.check_ptr[c], self.check_ptr[c + 1]);
            let deg = hi - lo;
            for (t, &l) in self.tanh_buf[..deg].iter_mut().zip(&self.lambda[lo..hi]) {
                *t = (0.5 * l).tanh();
            }
            self.prefix[0] = 1.0;
            for i in 0..deg {
                self.prefix[i + 1] = self.prefix[i] * self.tanh_buf[i];
            }
            let mut suffix = 1.0;
            for i in (0..deg).rev() {
                let product = self.prefix[i] * suffix;
                self.big_lambda[lo + i] = (2.0 * product.atanh()).clamp(-MESSAGE_CLIP, MESSAGE_CLIP);
                suffix *= self.tanh_buf[i];
            }
        }
    }

    fn variable_update(&mut self, llr: &[f64]) {
        for (j, edges) in self.var_edges.iter().enumerate() {
            let total = llr[j] + edges.iter().map(|&e| self.big_lambda[e]).sum::<f64>();
            self.mu[j] = total.clamp(-MESSAGE_CLIP, MESSAGE_CLIP);
            for &e in edges {
                self.lambda[e] = (total - self.big_lambda[e]).clamp(-MESSAGE_CLIP, MESSAGE_CLIP);
            }
        }
    }

    fn decisions(&self) -> Vec<u8> {
        self.mu.iter().map(|&m| u8::from(m < 0.0)).collect()
    }

    fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        self.check_ptr.windows(2).all(|w| {
            self.edge_var[w[0]..w[1]].iter().fold(0u8, |acc, &v| acc ^ bits[v]) == 0
        })
    }

    /// Runs flooding sum-product decoding on channel LLRs
    /// `ln P(x = 0) − ln P(x = 1)`.
    pub fn decode(&mut self, llr: &[f64], max_iter: usize) -> Result<DecodeResult> {
        if llr.len() != self.mu.len() {
            return Err(Error::arg(format!(
                "got {} LLRs for a code of length {}",
                llr.len(),
                self.mu.len()
            )));
        }
        if max_iter == 0 {
            return Err(Error::arg("max_iter must be at least 1"));
        }
        if llr.iter().any(|l| l.is_nan()) {
            return Err(Error::arg("LLR input contains NaN"));
        }
        let llr: Vec<f64> = llr.iter().map(|l| l.clamp(-MESSAGE_CLIP, MESSAGE_CLIP)).collect();
        self.mu.copy_from_slice(&llr);
        for (e, &v) in self.edge_var.iter().enumerate() {
            self.lambda[e] = llr[v];
        }
        self.iteration = 0;
        let mut bits = self.decisions();
        let mut converged = self.syndrome_is_zero(&bits);
        while !converged && self.iteration < max_iter {
            self.iteration += 1;
            self.check_update();
            self.variable_update(&llr);
            bits = self.decisions();
            converged = self.syndrome_is_zero(&bits);
        }
        Ok(DecodeResult {
            bits,
            converged,
            iterations: self.iteration,
            posteriors: self.mu.clone(),
        })
    }
}

/// Sum-product decoding with a fresh decoder state.
pub fn sp_decode(code: &LdpcCode, llr: &[f64], max_iter: usize) -> Result<DecodeResult> {
    DecoderState::new(code).decode(llr, max_iter)
}
