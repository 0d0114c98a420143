/// SplitMix64 (Steele, Lea and Flood). Fully specified by its constants, so
/// a seed produces the same stream on every platform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Value in `0..n` by multiply-shift (no modulo, no rejection loop).
    /// `n == 0` yields 0.
    pub fn below(&mut self, n: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }

    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Uniform in `[0, 1)` from the top 53 bits of `draw`.
    pub fn unit(draw: u64) -> f64 {
        (draw >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli trial; returns the outcome and the raw draw behind it.
    pub fn chance(&mut self, p: f64) -> (bool, u64) {
        let draw = self.next_u64();
        (Self::unit(draw) < p, draw)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below_usize(items.len())]
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }
}

/// 64-bit FNV-1a over the seed bytes followed by `page_id`, so each page gets
/// an independent stream regardless of processing order.
pub fn page_seed(seed: u64, page_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(page_id.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream() {
        // published SplitMix64 outputs for seed 1234567
        let mut r = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                6457827717110365317,
                3203168211198807973,
                9817491932198370423
            ]
        );
    }

    #[test]
    fn bounded_draws() {
        let mut r = SplitMix64::new(7);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[r.below_usize(5)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
        assert_eq!(r.below(0), 0);
        assert!(SplitMix64::unit(u64::MAX) < 1.0);
    }

    #[test]
    fn page_seeds_differ() {
        assert_ne!(page_seed(1, "a"), page_seed(1, "b"));
        assert_ne!(page_seed(1, "a"), page_seed(2, "a"));
        assert_eq!(page_seed(3, "x"), page_seed(3, "x"));
    }
}
