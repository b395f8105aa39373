use serde::Serialize;

/// Side information a codec must deliver besides its data symbols.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetadataSpec {
    /// Reals sent with analog modulation (e.g. GFT basis entries).
    pub analog_reals: usize,
    /// Digitally coded bits (e.g. quantized Givens angles).
    pub digital_bits: usize,
}

impl MetadataSpec {
    pub const NONE: MetadataSpec = MetadataSpec { analog_reals: 0, digital_bits: 0 };

    pub fn merge(self, other: MetadataSpec) -> MetadataSpec {
        MetadataSpec {
            analog_reals: self.analog_reals + other.analog_reals,
            digital_bits: self.digital_bits + other.digital_bits,
        }
    }
}

/// Digital side information is charged at this many bits per channel symbol.
pub const BITS_PER_SYMBOL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OverheadReport {
    pub data_symbols: usize,
    pub metadata_symbols: usize,
    pub total_symbols: usize,
}

pub fn count_overhead(data_reals: usize, metadata: &MetadataSpec) -> OverheadReport {
    let data_symbols = data_reals.div_ceil(2);
    let metadata_symbols = metadata.analog_reals.div_ceil(2) + metadata.digital_bits.div_ceil(BITS_PER_SYMBOL);
    OverheadReport { data_symbols, metadata_symbols, total_symbols: data_symbols + metadata_symbols }
}
