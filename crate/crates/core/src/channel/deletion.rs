use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::runlength::{event_probabilities, RunAlphabet};

/// Parameters of the run-wise deletion channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeletionChannelSpec {
    pub p_d: f64,
    /// Maximum consecutive deletions within one run.
    pub s_d: usize,
    pub rng_seed: u64,
}

impl DeletionChannelSpec {
    pub fn new(p_d: f64, s_d: usize, rng_seed: u64) -> Result<Self> {
        let spec = DeletionChannelSpec { p_d, s_d, rng_seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_d == 0 {
            return Err(Error::arg("s_d must be at least 1"));
        }
        event_probabilities(self.p_d, self.s_d).map(|_| ())
    }

    /// `P(j deletions in a run)` for `j = 0..=s_d`.
    pub fn event_probabilities(&self) -> Result<Vec<f64>> {
        event_probabilities(self.p_d, self.s_d)
    }
}

/// Output of the deletion channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionOutcome {
    pub bits: Vec<u8>,
    /// Input positions that were removed, ascending.
    pub deleted: Vec<usize>,
    /// Set when a run was too short for the sampled event and the number of
    /// deletions was capped to keep the run alive.
    pub capped: bool,
}

/// Passes `bits` through the channel seeded by `spec.rng_seed`.
pub fn apply_deletion_channel(bits: &[u8], spec: &DeletionChannelSpec) -> Result<DeletionOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    apply_deletion_channel_with(bits, spec, &mut rng)
}

/// Same as [`apply_deletion_channel`] with a caller-supplied generator.
///
/// Each maximal run independently loses `j` bits with probability
/// `p_d^j` (`1 ≤ j ≤ s_d`); the trailing `j` bits of the run are removed.
pub fn apply_deletion_channel_with<R: Rng + ?Sized>(
    bits: &[u8],
    spec: &DeletionChannelSpec,
    rng: &mut R,
) -> Result<DeletionOutcome> {
    let events = spec.event_probabilities()?;
    let mut out = Vec::with_capacity(bits.len());
    let mut deleted = Vec::new();
    let mut capped = false;
    let mut start = 0;
    while start < bits.len() {
        let mut end = start + 1;
        while end < bits.len() && bits[end] == bits[start] {
            end += 1;
        }
        let len = end - start;
        let mut j = sample_event(&events, rng);
        if j >= len {
            capped = true;
            j = len - 1;
        }
        out.extend_from_slice(&bits[start..end - j]);
        deleted.extend(end - j..end);
        start = end;
    }
    Ok(DeletionOutcome {
        bits: out,
        deleted,
        capped,
    })
}

fn sample_event<R: Rng + ?Sized>(events: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &p) in events.iter().enumerate().skip(1) {
        acc += p;
        if u < acc {
            return j;
        }
    }
    0
}

/// Memoryless symbol channel induced by runlength modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct DmcModel {
    /// Input costs (run lengths), one per symbol.
    pub costs: Vec<f64>,
    /// Attainable output run lengths, ascending.
    pub outputs: Vec<usize>,
    /// `transition[x][y] = P(outputs[y] | x)`.
    pub transition: Vec<Vec<f64>>,
}

impl DmcModel {
    pub fn output_index(&self, run_length: usize) -> Option<usize> {
        self.outputs.binary_search(&run_length).ok()
    }
}

/// Transition matrix from symbols to received run lengths.
pub fn dmc_matrix(alphabet: &RunAlphabet, p_d: f64) -> Result<DmcModel> {
    let s_d = alphabet.s_d();
    let events = event_probabilities(p_d, s_d)?;
    let mut outputs: Vec<usize> = alphabet
        .run_lengths()
        .iter()
        .flat_map(|&r| (0..=s_d).filter(|&j| j == 0 || events[j] > 0.0).map(move |j| r - j))
        .collect();
    outputs.sort_unstable();
    outputs.dedup();
    let transition = alphabet
        .run_lengths()
        .iter()
        .map(|&r| {
            let mut row = vec![0.0; outputs.len()];
            for (j, &p) in events.iter().enumerate() {
                if let Ok(y) = outputs.binary_search(&(r - j)) {
                    row[y] += p;
                }
            }
            row
        })
        .collect();
    Ok(DmcModel {
        costs: alphabet.costs(),
        outputs,
        transition,
    })
}
