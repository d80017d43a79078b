//! Shannon entropy for corroborating encrypted-file classification.

/// Bytes considered when classifying a database file.
pub const SAMPLE_WINDOW: usize = 4096;

/// Entropy (bits per byte) at or above which a sample is flagged as high entropy.
pub const HIGH_ENTROPY_BITS: f64 = 7.5;

/// Shannon entropy of `data` in bits per byte, in `[0, 8]`. Empty input is 0.
pub fn shannon_entropy(data: &[u8]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let mut counts = [0usize; 256];
    for &b in data {
        counts[b as usize] += 1;
    }
    let len = data.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / len;
            -p * libm::log2(p)
        })
        .sum()
}

/// Entropy over the leading [`SAMPLE_WINDOW`] bytes.
pub fn leading_entropy(data: &[u8]) -> f64 {
    shannon_entropy(&data[..data.len().min(SAMPLE_WINDOW)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_is_zero() {
        assert_eq!(shannon_entropy(&[7u8; 1024]), 0.0);
        assert_eq!(shannon_entropy(&[]), 0.0);
    }

    #[test]
    fn uniform_bytes_are_eight_bits() {
        let data: alloc::vec::Vec<u8> = (0..=255u8).cycle().take(4096).collect();
        assert!((shannon_entropy(&data) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn two_symbols_one_bit() {
        assert!((shannon_entropy(b"abababab") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_is_bounded() {
        let mut data = alloc::vec![0u8; SAMPLE_WINDOW];
        data.extend((0..=255u8).cycle().take(8192));
        assert_eq!(leading_entropy(&data), 0.0);
    }
}
