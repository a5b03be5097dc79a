use crate::error::{Error, Result};

pub fn is_power_of_two(k: usize) -> bool {
    k >= 1 && k & (k - 1) == 0
}

/// Smallest power of two that is `>= k` (1 for `k == 0`).
pub fn next_power_of_two(k: usize) -> usize {
    k.max(1).next_power_of_two()
}

/// Sylvester Hadamard matrix of order `K = 2^p`.
///
/// Row and column 0 are all `+1`, and `H Hᵀ = K I`. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    order: usize,
    entries: Vec<i8>,
}

impl HadamardMatrix {
    /// Builds `H_K` by the recursion `H_2K = [[H_K, H_K], [H_K, -H_K]]`.
    pub fn new(order: usize) -> Result<Self> {
        if !is_power_of_two(order) {
            return Err(Error::param(
                "order",
                format!("Hadamard order must be a power of two, got {order}"),
            ));
        }
        let mut entries = vec![1i8];
        let mut size = 1;
        while size < order {
            let next = size * 2;
            let mut grown = vec![0i8; next * next];
            for r in 0..size {
                for c in 0..size {
                    let v = entries[r * size + c];
                    grown[r * next + c] = v;
                    grown[r * next + c + size] = v;
                    grown[(r + size) * next + c] = v;
                    grown[(r + size) * next + c + size] = -v;
                }
            }
            entries = grown;
            size = next;
        }
        Ok(Self { order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }

    /// `H v` by the fast transform.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.order {
            return Err(Error::Dimension {
                expected: self.order,
                actual: v.len(),
            });
        }
        let mut out = v.to_vec();
        fwht(&mut out);
        Ok(out)
    }

    /// `H⁻¹ v = H v / K`.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        let k = self.order as f64;
        let mut out = self.apply(v)?;
        out.iter_mut().for_each(|x| *x /= k);
        Ok(out)
    }
}

/// In-place unnormalized Walsh-Hadamard transform in Sylvester order.
///
/// `data.len()` must be a power of two.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    assert!(is_power_of_two(n), "fwht length {n} is not a power of two");
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}
