use crate::rng::StreamRng;

/// Walker/Vose alias table: O(n) construction, two random words per draw.
///
/// Threshold and alias of a column share one slot so a draw touches a
/// single cache line, which matters once the table outgrows the cache.
#[derive(Debug, Clone)]
pub struct AliasTable {
    slots: Vec<Slot>,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    prob: f64,
    alias: u32,
}

impl AliasTable {
    /// Builds the table for weights proportional to `weights`. All weights
    /// must be finite and positive; the list must be non-empty.
    pub fn new(weights: &[f64]) -> Self {
        Self::from_weights(weights.iter().copied())
    }

    /// Like [`AliasTable::new`] without requiring the weights in a slice.
    pub fn from_weights<I: IntoIterator<Item = f64>>(weights: I) -> Self {
        // `prob` holds the raw, then the scaled weight until the column is
        // settled.
        let mut total = 0.0;
        let mut slots: Vec<Slot> = weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                total += w;
                Slot {
                    prob: w,
                    alias: i as u32,
                }
            })
            .collect();
        let n = slots.len();
        assert!(n > 0, "alias table over an empty list");
        assert!(n <= u32::MAX as usize, "alias table over more than u32::MAX outcomes");
        for s in &mut slots {
            s.prob = s.prob * n as f64 / total;
        }

        let mut small: Vec<u32> = Vec::with_capacity(n);
        let mut large: Vec<u32> = Vec::with_capacity(n);
        for (i, s) in slots.iter().enumerate() {
            if s.prob < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            let (s, l) = (s as usize, l as usize);
            slots[s].alias = l as u32;
            let rest = (slots[l].prob + slots[s].prob) - 1.0;
            slots[l].prob = rest;
            if rest < 1.0 {
                small.push(l as u32);
            } else {
                large.push(l as u32);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in large.into_iter().chain(small) {
            slots[i as usize].prob = 1.0;
        }
        Self { slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    #[inline]
    pub fn sample(&self, rng: &mut StreamRng) -> usize {
        let i = rng.below(self.slots.len() as u64) as usize;
        let slot = self.slots[i];
        if rng.next_f64() < slot.prob {
            i
        } else {
            slot.alias as usize
        }
    }

    /// Appends `count` draws to `out`. Identical to calling [`sample`]
    /// `count` times: random words are consumed in the same order, but the
    /// table lookups of a batch are issued together so cache misses overlap.
    ///
    /// [`sample`]: AliasTable::sample
    pub fn sample_into(&self, rng: &mut StreamRng, count: usize, out: &mut Vec<u32>) {
        const BATCH: usize = 256;
        let n = self.slots.len() as u64;
        let mut cols = [0u32; BATCH];
        let mut coins = [0f64; BATCH];
        out.reserve(count);
        let mut left = count;
        while left > 0 {
            let m = left.min(BATCH);
            for k in 0..m {
                cols[k] = rng.below(n) as u32;
                coins[k] = rng.next_f64();
            }
            out.extend(cols[..m].iter().zip(&coins[..m]).map(|(&i, &u)| {
                let slot = self.slots[i as usize];
                if u < slot.prob {
                    i
                } else {
                    slot.alias
                }
            }));
            left -= m;
        }
    }

    /// Probability of each outcome implied by the table.
    pub fn implied_probabilities(&self) -> Vec<f64> {
        let n = self.slots.len() as f64;
        let mut out = vec![0.0; self.slots.len()];
        for (i, s) in self.slots.iter().enumerate() {
            out[i] += s.prob / n;
            out[s.alias as usize] += (1.0 - s.prob) / n;
        }
        out
    }
}
