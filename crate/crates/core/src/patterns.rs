//! Slot patterns and the mapping from concatenated sample index to symbol.
//!
//! A slot pattern lists the (1-based) OFDM symbols of a 14-symbol slot that
//! carry a reused reference signal. The same listing repeats in every slot,
//! so sample `m` of the concatenated echo vector sits at global symbol
//! `14 * (m / n_s) + symbols[m % n_s]`, with `m` zero-based.
//!
//! Comb patterns are regular strides over the whole observation. For comb
//! sizes dividing 14 this coincides with a per-slot listing; comb-3 does not
//! fit a slot and keeps its stride across slot boundaries.

use std::fmt;

use crate::{Error, Result};

/// Symbols per 5G NR slot (normal cyclic prefix).
pub const SYMBOLS_PER_SLOT: usize = 14;

/// Names accepted by [`builtin_pattern`].
pub const BUILTIN_NAMES: &[&str] = &["SP1", "SP2"];

/// Comb sizes accepted by [`comb_pattern`].
pub const COMB_SIZES: &[usize] = &[1, 2, 3, 7, 14];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Symbol listing repeated identically in every slot.
    PerSlot,
    /// Uniform stride of `size` symbols across the whole observation,
    /// starting at symbol 1.
    Comb { size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPattern {
    name: String,
    symbols: Vec<usize>,
    layout: Layout,
}

impl SlotPattern {
    /// Builds a per-slot pattern from 1-based symbol indices.
    pub fn custom(name: impl Into<String>, symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() || symbols.len() > SYMBOLS_PER_SLOT {
            return Err(Error::InvalidPattern(format!(
                "expected 1..=14 symbols per slot, got {}",
                symbols.len()
            )));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| !(1..=SYMBOLS_PER_SLOT).contains(&s)) {
            return Err(Error::InvalidPattern(format!("symbol {bad} outside 1..=14")));
        }
        if symbols.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPattern("symbols must be strictly increasing".into()));
        }
        Ok(Self {
            name: name.into(),
            symbols,
            layout: Layout::PerSlot,
        })
    }

    /// Resolves `SP1`, `SP2` or `comb-<c>`.
    pub fn from_name(name: &str) -> Result<Self> {
        if let Some(size) = name.strip_prefix("comb-") {
            let size: usize = size.parse().map_err(|_| unknown(name))?;
            return comb_pattern(size);
        }
        builtin_pattern(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Symbols occupied within the first slot, 1-based.
    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// Reference signals in the first slot.
    pub fn n_s(&self) -> usize {
        self.symbols.len()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn is_comb(&self) -> bool {
        matches!(self.layout, Layout::Comb { .. })
    }

    /// Builds the sample index map over `n_slot` slots.
    pub fn index_map(&self, n_slot: usize) -> Result<SampleIndexMap> {
        SampleIndexMap::new(self.clone(), n_slot)
    }
}

impl fmt::Display for SlotPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.name, self.symbols)
    }
}

fn unknown(name: &str) -> Error {
    let mut available: Vec<String> = BUILTIN_NAMES.iter().map(|s| s.to_string()).collect();
    available.extend(COMB_SIZES.iter().map(|c| format!("comb-{c}")));
    Error::UnknownPattern {
        name: name.to_string(),
        available: available.join(", "),
    }
}

/// Returns one of the two built-in slot patterns.
///
/// `SP1` occupies symbols 1-4 of each slot (an SSB-like burst), `SP2`
/// occupies symbols 3, 4, 11 and 12 (a DMRS-like layout).
pub fn builtin_pattern(name: &str) -> Result<SlotPattern> {
    let symbols = match name {
        "SP1" => vec![1, 2, 3, 4],
        "SP2" => vec![3, 4, 11, 12],
        _ => return Err(unknown(name)),
    };
    SlotPattern::custom(name, symbols)
}

/// Returns a regular comb pattern transmitting every `comb_size`-th symbol.
pub fn comb_pattern(comb_size: usize) -> Result<SlotPattern> {
    if !COMB_SIZES.contains(&comb_size) {
        return Err(Error::UnsupportedComb(comb_size));
    }
    let symbols = (1..=SYMBOLS_PER_SLOT).step_by(comb_size).collect();
    Ok(SlotPattern {
        name: format!("comb-{comb_size}"),
        symbols,
        layout: Layout::Comb { size: comb_size },
    })
}

/// Maps zero-based concatenated sample indices to 1-based global symbols.
///
/// Internally every pattern is a listing of `offsets` repeated `reps` times
/// with a period of `period` symbols: per-slot patterns use the slot
/// (period 14, one repetition per slot); comb-`c` uses period `c` with a
/// single offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleIndexMap {
    n_slot: usize,
    pattern: SlotPattern,
    period: usize,
    offsets: Vec<usize>,
    reps: usize,
}

impl SampleIndexMap {
    pub fn new(pattern: SlotPattern, n_slot: usize) -> Result<Self> {
        if n_slot == 0 {
            return Err(Error::InvalidParameter("n_slot must be at least 1".into()));
        }
        let (period, offsets, reps) = match pattern.layout {
            Layout::PerSlot => (SYMBOLS_PER_SLOT, pattern.symbols.clone(), n_slot),
            Layout::Comb { size } => (size, vec![1], (SYMBOLS_PER_SLOT * n_slot).div_ceil(size)),
        };
        Ok(Self {
            n_slot,
            pattern,
            period,
            offsets,
            reps,
        })
    }

    pub fn n_slot(&self) -> usize {
        self.n_slot
    }

    pub fn pattern(&self) -> &SlotPattern {
        &self.pattern
    }

    pub fn total_samples(&self) -> usize {
        self.reps * self.offsets.len()
    }

    /// Symbols between consecutive repetitions of the offset listing.
    pub fn period(&self) -> usize {
        self.period
    }

    /// 1-based offsets within one period.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Number of period repetitions in the observation.
    pub fn repetitions(&self) -> usize {
        self.reps
    }

    /// Global 1-based symbol carrying sample `m` (zero-based).
    pub fn global_symbol(&self, m: usize) -> Result<usize> {
        let len = self.total_samples();
        if m >= len {
            return Err(Error::IndexOutOfRange { index: m, len });
        }
        Ok(self.symbol_unchecked(m))
    }

    fn symbol_unchecked(&self, m: usize) -> usize {
        let n = self.offsets.len();
        self.period * (m / n) + self.offsets[m % n]
    }

    /// All global symbols in sample order.
    pub fn global_symbols(&self) -> Vec<usize> {
        (0..self.total_samples()).map(|m| self.symbol_unchecked(m)).collect()
    }
}
