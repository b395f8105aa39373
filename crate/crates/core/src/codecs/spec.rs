use std::fmt;
use std::str::FromStr;

use super::{Codec, GnnCodec, HoloCast, SoftBudget, SoftCast};
use crate::error::{invalid, Error, Result};
use crate::neural::GnnModel;

/// Textual codec selector used in configs and reports:
/// `gnn`, `holocast:<block>`, `givens:<block>:<bits>`, `softcast:<fraction>`,
/// `softcast-symbols:<count>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CodecSpec {
    Gnn,
    HoloCast { block_size: usize },
    Givens { block_size: usize, bits: u32 },
    SoftCast(SoftBudget),
}

impl fmt::Display for CodecSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecSpec::Gnn => write!(f, "gnn"),
            CodecSpec::HoloCast { block_size } => write!(f, "holocast:{block_size}"),
            CodecSpec::Givens { block_size, bits } => write!(f, "givens:{block_size}:{bits}"),
            CodecSpec::SoftCast(SoftBudget::Fraction(x)) => write!(f, "softcast:{x}"),
            CodecSpec::SoftCast(SoftBudget::Symbols(s)) => write!(f, "softcast-symbols:{s}"),
        }
    }
}

impl FromStr for CodecSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid(format!("bad codec spec '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| bad());
        let spec = match parts.as_slice() {
            ["gnn"] => CodecSpec::Gnn,
            ["holocast", b] => CodecSpec::HoloCast { block_size: num(b)? },
            ["givens", b, bits] => CodecSpec::Givens { block_size: num(b)?, bits: num(bits)? as u32 },
            ["softcast", f] => CodecSpec::SoftCast(SoftBudget::Fraction(f.parse().map_err(|_| bad())?)),
            ["softcast-symbols", n] => CodecSpec::SoftCast(SoftBudget::Symbols(num(n)?)),
            _ => return Err(bad()),
        };
        spec.validate().map_err(|e| invalid(format!("bad codec spec '{s}': {e}")))?;
        Ok(spec)
    }
}

impl CodecSpec {
    /// Range checks that do not depend on the cloud.
    pub fn validate(&self) -> Result<()> {
        match *self {
            CodecSpec::HoloCast { block_size } | CodecSpec::Givens { block_size, .. } if block_size < 2 => {
                Err(invalid(format!("block size must be at least 2, got {block_size}")))
            }
            CodecSpec::Givens { bits, .. } if !(2..=16).contains(&bits) => {
                Err(invalid(format!("bit depth {bits} outside 2..=16")))
            }
            CodecSpec::SoftCast(SoftBudget::Fraction(f)) if !(f > 0.0 && f <= 1.0) => {
                Err(invalid(format!("budget fraction {f} outside (0, 1]")))
            }
            CodecSpec::SoftCast(SoftBudget::Symbols(s)) if s < 3 => {
                Err(invalid(format!("symbol budget {s} below 3")))
            }
            _ => Ok(()),
        }
    }

    pub fn needs_model(&self) -> bool {
        matches!(self, CodecSpec::Gnn)
    }
}

/// Instantiates a codec. `knn_k` sets the HoloCast block graphs; the GNN
/// codec borrows `model`.
pub fn build_codec<'a>(
    spec: &CodecSpec,
    model: Option<&'a GnnModel>,
    knn_k: usize,
    avg_power: f64,
) -> Result<Box<dyn Codec + 'a>> {
    Ok(match *spec {
        CodecSpec::Gnn => {
            let model = model.ok_or_else(|| invalid("the gnn codec needs a trained model"))?;
            Box::new(GnnCodec { model })
        }
        CodecSpec::HoloCast { block_size } => Box::new(HoloCast { block_size, knn_k, givens: None, avg_power }),
        CodecSpec::Givens { block_size, bits } => {
            Box::new(HoloCast { block_size, knn_k, givens: Some(bits), avg_power })
        }
        CodecSpec::SoftCast(budget) => Box::new(SoftCast { budget, avg_power }),
    })
}
