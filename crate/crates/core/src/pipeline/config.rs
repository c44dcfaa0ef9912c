use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qim::QimConfig;
use crate::runlength::{Polarity, RunAlphabet};
use crate::stability::StabilityConfig;

/// Resolved watermarking configuration, read from a `key = value` file.
///
/// Recognised keys (all optional):
///
/// | key | default |
/// |---|---|
/// | `delta` | `0.01` |
/// | `L` | `1` |
/// | `alphabet.bits_per_symbol` | `1` |
/// | `s_d` | `1` |
/// | `polarity` | `ones_first` (or `zeros_first`) |
/// | `code` | none; path to an alist file, relative to the config file |
/// | `stability.weights` | `0.5,0.3,0.2` |
/// | `stability.risky_percentile` | `0.2` |
/// | `decoder.p_d` | `0.02` |
/// | `decoder.max_iter` | `50` |
/// | `transform` | `off` |
/// | `transform.target` | `0.5,0.5` |
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub delta: f64,
    pub spreading_length: usize,
    pub bits_per_symbol: usize,
    pub s_d: usize,
    pub polarity: Polarity,
    pub code_path: Option<String>,
    pub stability: StabilityConfig,
    /// Deletion probability assumed when computing decoder LLRs.
    pub decoder_p_d: f64,
    pub max_iter: usize,
    /// Target symbol distribution of the distribution transformer, when on.
    pub transform: Option<Vec<f64>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            delta: 0.01,
            spreading_length: 1,
            bits_per_symbol: 1,
            s_d: 1,
            polarity: Polarity::OnesFirst,
            code_path: None,
            stability: StabilityConfig::default(),
            decoder_p_d: 0.02,
            max_iter: 50,
            transform: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    /// Parses the key-value text. Blank lines and `#` comments are ignored;
    /// unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut seen = std::collections::HashSet::new();
        let mut target: Option<Vec<f64>> = None;
        let mut transform_on = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("key {key} given twice")));
            }
            match key {
                "delta" => cfg.delta = parse_value(key, value)?,
                "L" => cfg.spreading_length = parse_value(key, value)?,
                "alphabet.bits_per_symbol" => cfg.bits_per_symbol = parse_value(key, value)?,
                "s_d" => cfg.s_d = parse_value(key, value)?,
                "polarity" => {
                    cfg.polarity = match value {
                        "ones_first" => Polarity::OnesFirst,
                        "zeros_first" => Polarity::ZerosFirst,
                        _ => return Err(Error::Config(format!("unknown polarity {value:?}"))),
                    }
                }
                "code" => cfg.code_path = Some(value.to_string()),
                "stability.weights" => {
                    let w = parse_list(key, value)?;
                    cfg.stability.weights = w
                        .try_into()
                        .map_err(|_| Error::Config("stability.weights needs three values".into()))?;
                }
                "stability.risky_percentile" => cfg.stability.risky_percentile = parse_value(key, value)?,
                "decoder.p_d" => cfg.decoder_p_d = parse_value(key, value)?,
                "decoder.max_iter" => cfg.max_iter = parse_value(key, value)?,
                "transform" => {
                    transform_on = match value {
                        "on" => true,
                        "off" => false,
                        _ => return Err(Error::Config(format!("transform must be on or off, got {value:?}"))),
                    }
                }
                "transform.target" => target = Some(parse_list(key, value)?),
                _ => return Err(Error::Config(format!("unknown key {key:?}"))),
            }
        }
        if transform_on {
            cfg.transform = Some(target.unwrap_or_else(|| vec![0.5; 2]));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.qim(0).validate()?;
        let alphabet = self.alphabet()?;
        crate::runlength::event_probabilities(self.decoder_p_d, self.s_d)
            .map_err(|e| Error::Config(format!("decoder.p_d: {e}")))?;
        if self.max_iter == 0 {
            return Err(Error::Config("decoder.max_iter must be positive".into()));
        }
        if let Some(target) = &self.transform {
            if self.bits_per_symbol != 1 || target.len() != 2 {
                return Err(Error::Config(
                    "the distribution transformer needs a binary alphabet and a two-point target".into(),
                ));
            }
            crate::capacity::quantize_frequencies(target).map_err(|e| Error::Config(e.to_string()))?;
        }
        debug_assert_eq!(alphabet.size(), 1 << self.bits_per_symbol);
        Ok(())
    }

    pub fn qim(&self, key: u64) -> QimConfig {
        QimConfig {
            delta: self.delta,
            spreading_length: self.spreading_length,
            key,
        }
    }

    pub fn alphabet(&self) -> Result<RunAlphabet> {
        RunAlphabet::standard(self.bits_per_symbol, self.s_d, self.polarity)
    }

    /// Symbol priors seen by the decoder.
    pub fn priors(&self) -> Vec<f64> {
        match &self.transform {
            Some(t) => t.clone(),
            None => vec![1.0 / (1usize << self.bits_per_symbol) as f64; 1 << self.bits_per_symbol],
        }
    }
}

impl fmt::Display for PipelineConfig {
    /// Canonical form, re-parseable by [`PipelineConfig::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "delta = {}", self.delta)?;
        writeln!(f, "L = {}", self.spreading_length)?;
        writeln!(f, "alphabet.bits_per_symbol = {}", self.bits_per_symbol)?;
        writeln!(f, "s_d = {}", self.s_d)?;
        let polarity = match self.polarity {
            Polarity::OnesFirst => "ones_first",
            Polarity::ZerosFirst => "zeros_first",
        };
        writeln!(f, "polarity = {polarity}")?;
        if let Some(code) = &self.code_path {
            writeln!(f, "code = {code}")?;
        }
        writeln!(f, "stability.weights = {}", join(&self.stability.weights))?;
        writeln!(f, "stability.risky_percentile = {}", self.stability.risky_percentile)?;
        writeln!(f, "decoder.p_d = {}", self.decoder_p_d)?;
        writeln!(f, "decoder.max_iter = {}", self.max_iter)?;
        match &self.transform {
            Some(t) => {
                writeln!(f, "transform = on")?;
                writeln!(f, "transform.target = {}", join(t))
            }
            None => writeln!(f, "transform = off"),
        }
    }
}
