//! Unscrambled Sobol low-discrepancy sequence with Joe–Kuo direction numbers,
//! generated in Gray-code order.

/// `(primitive polynomial with leading and trailing bits, initial m_k)` for
/// the first dimensions of the Joe–Kuo `new-joe-kuo-6.21201` set.
const DIRECTIONS: [(u32, &[u32]); 21] = [
    (1, &[1]),
    (3, &[1]),
    (7, &[1, 3]),
    (11, &[1, 3, 1]),
    (13, &[1, 1, 1]),
    (19, &[1, 1, 3, 3]),
    (25, &[1, 3, 5, 13]),
    (37, &[1, 1, 5, 5, 17]),
    (41, &[1, 1, 5, 5, 5]),
    (47, &[1, 1, 7, 11, 19]),
    (55, &[1, 1, 5, 1, 1]),
    (59, &[1, 1, 1, 3, 11]),
    (61, &[1, 3, 5, 5, 31]),
    (67, &[1, 3, 3, 9, 7, 49]),
    (91, &[1, 1, 1, 15, 21, 21]),
    (97, &[1, 3, 1, 13, 27, 49]),
    (103, &[1, 1, 1, 15, 7, 5]),
    (109, &[1, 3, 1, 15, 13, 25]),
    (115, &[1, 1, 5, 5, 19, 61]),
    (131, &[1, 3, 7, 11, 23, 15, 103]),
    (137, &[1, 3, 7, 13, 13, 15, 69]),
];

const BITS: usize = 32;

pub const MAX_DIMENSION: usize = DIRECTIONS.len();

#[derive(Debug, Clone)]
pub struct SobolSequence {
    v: Vec<[u32; BITS]>,
}

impl SobolSequence {
    /// `None` when `dims` exceeds [`MAX_DIMENSION`].
    pub fn new(dims: usize) -> Option<Self> {
        if dims > MAX_DIMENSION {
            return None;
        }
        let v = DIRECTIONS[..dims]
            .iter()
            .enumerate()
            .map(|(j, &(poly, m))| {
                let mut v = [0u32; BITS];
                if j == 0 {
                    for (k, vk) in v.iter_mut().enumerate() {
                        *vk = 1 << (BITS - 1 - k);
                    }
                    return v;
                }
                let s = (32 - poly.leading_zeros() - 1) as usize;
                for k in 0..s.min(BITS) {
                    v[k] = m[k] << (BITS - 1 - k);
                }
                for k in s..BITS {
                    let mut x = v[k - s] ^ (v[k - s] >> s);
                    for l in 1..s {
                        if (poly >> (s - l)) & 1 == 1 {
                            x ^= v[k - l];
                        }
                    }
                    v[k] = x;
                }
                v
            })
            .collect();
        Some(Self { v })
    }

    pub fn dims(&self) -> usize {
        self.v.len()
    }

    /// Point `n` (0-based; point 0 is the origin).
    pub fn point(&self, n: u64) -> Vec<f64> {
        let gray = n ^ (n >> 1);
        self.v
            .iter()
            .map(|v| {
                let mut x = 0u32;
                for (k, vk) in v.iter().enumerate() {
                    if (gray >> k) & 1 == 1 {
                        x ^= vk;
                    }
                }
                x as f64 / (1u64 << BITS) as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_points() {
        // Unscrambled points from an independent implementation of the same direction set.
        let s = SobolSequence::new(16).unwrap();
        assert!(s.point(0).iter().all(|&x| x == 0.0));
        assert!(s.point(1).iter().all(|&x| x == 0.5));
        let p7 = [0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625, 0.625, 0.875, 0.625, 0.125, 0.625, 0.375, 0.125, 0.125];
        assert_eq!(s.point(7), p7);
        let p39 = [
            0.171875, 0.890625, 0.828125, 0.671875, 0.015625, 0.546875, 0.421875, 0.046875, 0.359375, 0.921875, 0.765625, 0.828125,
            0.828125, 0.609375, 0.859375, 0.234375,
        ];
        assert_eq!(s.point(39), p39);
    }

    #[test]
    fn each_dimension_is_stratified() {
        let s = SobolSequence::new(MAX_DIMENSION).unwrap();
        let n = 64;
        for d in 0..MAX_DIMENSION {
            let mut bins = [0; 8];
            for i in 0..n {
                bins[(s.point(i)[d] * 8.0) as usize] += 1;
            }
            assert!(bins.iter().all(|&b| b == 8), "dimension {d}: {bins:?}");
        }
        assert!(SobolSequence::new(MAX_DIMENSION + 1).is_none());
    }
}
