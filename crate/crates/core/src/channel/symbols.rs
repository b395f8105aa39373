use num_complex::Complex64;

/// Reals packed two per complex symbol (in-phase, quadrature).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub symbols: Vec<Complex64>,
    pub source_len: usize,
}

/// `v[2t]` goes to the real part of symbol `t`, `v[2t+1]` to its imaginary
/// part. An odd tail leaves the last quadrature slot at zero.
pub fn reals_to_symbols(v: &[f64]) -> SymbolStream {
    let symbols = v
        .chunks(2)
        .map(|c| Complex64::new(c[0], c.get(1).copied().unwrap_or(0.0)))
        .collect();
    SymbolStream { symbols, source_len: v.len() }
}

pub fn symbols_to_reals(s: &SymbolStream) -> Vec<f64> {
    let mut out: Vec<f64> = s.symbols.iter().flat_map(|z| [z.re, z.im]).collect();
    out.truncate(s.source_len);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_padding() {
        let s = reals_to_symbols(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.symbols, vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)]);
        let s = reals_to_symbols(&[5.0]);
        assert_eq!(s.symbols, vec![Complex64::new(5.0, 0.0)]);
        assert_eq!(s.source_len, 1);
    }

    #[test]
    fn round_trip_odd_length() {
        let v: Vec<f64> = (0..101).map(|i| i as f64 * 0.5 - 7.0).collect();
        let s = reals_to_symbols(&v);
        assert_eq!(s.symbols.len(), 51);
        assert_eq!(symbols_to_reals(&s), v);
    }
}
