use std::collections::HashMap;

use super::{check_window, Grid, MatchLengthField};
use crate::error::Result;
use crate::lattice::Region;
use crate::rng::mix64;
use crate::source::OccupationArray;

const MODULUS: u64 = (1 << 61) - 1;

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let t = a as u128 * b as u128;
    let r = (t as u64 & MODULUS) + (t >> 61) as u64;
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let r = a + b;
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

#[inline]
fn sub_mod(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + MODULUS - b
    }
}

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b);
        }
        b = mul_mod(b, b);
        e >>= 1;
    }
    r
}

/// Box key: exact occupation total plus two polynomial hashes of the box
/// contents relative to its corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BoxKey {
    total: u64,
    h: [u64; 2],
}

/// Inclusive prefix sums over the region (padded by one leading slab per
/// axis) of the occupation and of two position-weighted hashes.
struct BoxHasher {
    lo: Vec<i64>,
    extent: Vec<usize>,
    strides: Vec<usize>,
    totals: Vec<u64>,
    sums: [Vec<u64>; 2],
    inv_pow: [Vec<Vec<u64>>; 2],
}

impl BoxHasher {
    fn new(array: &OccupationArray) -> Self {
        let region = array.region();
        let d = region.dim();
        let lo = region.lo().to_vec();
        let extent = region.extent().to_vec();
        let padded: Vec<usize> = extent.iter().map(|e| e + 1).collect();
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * padded[a + 1];
        }
        let size: usize = padded.iter().product();

        let base = |h: usize, a: usize| 2 + mix64(0x00ba_5e00 + (h * 64 + a) as u64) % (MODULUS - 3);
        let mut pow = [vec![], vec![]];
        let mut inv_pow = [vec![], vec![]];
        for h in 0..2 {
            for a in 0..d {
                let b = base(h, a);
                let inv = pow_mod(b, MODULUS - 2);
                let mut p = vec![1u64; extent[a]];
                let mut q = vec![1u64; extent[a]];
                for i in 1..extent[a] {
                    p[i] = mul_mod(p[i - 1], b);
                    q[i] = mul_mod(q[i - 1], inv);
                }
                pow[h].push(p);
                inv_pow[h].push(q);
            }
        }

        let mut totals = vec![0u64; size];
        let mut sums = [vec![0u64; size], vec![0u64; size]];
        for (i, site) in region.sites().enumerate() {
            let k = array.values()[i] as u64;
            if k == 0 {
                continue;
            }
            let mut idx = 0;
            let mut w = [k % MODULUS, k % MODULUS];
            for a in 0..d {
                let off = (site[a] - lo[a]) as usize;
                idx += (off + 1) * strides[a];
                for h in 0..2 {
                    w[h] = mul_mod(w[h], pow[h][a][off]);
                }
            }
            totals[idx] = k;
            sums[0][idx] = w[0];
            sums[1][idx] = w[1];
        }
        for a in 0..d {
            let stride = strides[a];
            for idx in 0..size {
                if (idx / stride) % padded[a] == 0 {
                    continue;
                }
                totals[idx] += totals[idx - stride];
                for s in sums.iter_mut() {
                    s[idx] = add_mod(s[idx], s[idx - stride]);
                }
            }
        }
        Self {
            lo,
            extent,
            strides,
            totals,
            sums,
            inv_pow,
        }
    }

    /// Key of the side-`s` box at `corner`, clipped to the region (outside
    /// sites are vacuum and contribute nothing).
    fn key(&self, corner: &[i64], s: usize) -> BoxKey {
        let d = self.lo.len();
        let mut total = 0i128;
        let mut h = [0u64; 2];
        let first: Vec<usize> = (0..d).map(|a| (corner[a] - self.lo[a]) as usize).collect();
        let last: Vec<usize> = (0..d).map(|a| (first[a] + s - 1).min(self.extent[a] - 1)).collect();
        for mask in 0..(1usize << d) {
            let mut idx = 0;
            let mut negative = false;
            for a in 0..d {
                if mask >> a & 1 == 1 {
                    idx += first[a] * self.strides[a];
                    negative = !negative;
                } else {
                    idx += (last[a] + 1) * self.strides[a];
                }
            }
            if negative {
                total -= self.totals[idx] as i128;
                for (x, sum) in h.iter_mut().zip(&self.sums) {
                    *x = sub_mod(*x, sum[idx]);
                }
            } else {
                total += self.totals[idx] as i128;
                for (x, sum) in h.iter_mut().zip(&self.sums) {
                    *x = add_mod(*x, sum[idx]);
                }
            }
        }
        for (x, inv) in h.iter_mut().zip(&self.inv_pow) {
            for a in 0..d {
                *x = mul_mod(*x, inv[a][first[a]]);
            }
        }
        BoxKey {
            total: total as u64,
            h,
        }
    }
}

/// Match lengths in any dimension: classes of window corners with equal
/// boxes are refined one side length at a time. Equal keys are confirmed by
/// comparing the newly added shell, so hash collisions cannot merge classes.
pub fn match_lengths_hashed(array: &OccupationArray, window: &Region) -> Result<MatchLengthField> {
    let margin = check_window(array, window)?;
    let grid = Grid::new(array);
    let hasher = BoxHasher::new(array);
    let corners: Vec<Vec<i64>> = window.sites().collect();
    let settle: Vec<usize> = corners.iter().map(|c| grid.settle_side(c)).collect();
    let mut lengths: Vec<Option<u32>> = vec![None; corners.len()];
    let mut saturated = vec![false; corners.len()];
    let mut offset = vec![0i64; grid.dim()];

    let mut classes: Vec<Vec<usize>> = vec![(0..corners.len()).collect()];
    let mut s = 1usize;
    while !classes.is_empty() {
        let mut next = Vec::new();
        for mut members in classes {
            if !grid.vacuum() {
                let (fit, off): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| grid.fits(&corners[i], s));
                if !off.is_empty() {
                    for &i in &off {
                        lengths[i] = Some(s as u32);
                        saturated[i] = true;
                    }
                    for &i in &fit {
                        saturated[i] = true;
                    }
                }
                members = fit;
            }

            let mut buckets: HashMap<BoxKey, Vec<Vec<usize>>> = HashMap::new();
            let mut order: Vec<BoxKey> = Vec::new();
            for &i in &members {
                let key = hasher.key(&corners[i], s);
                let groups = buckets.entry(key).or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                });
                // all-empty boxes are equal by their exact total alone
                let slot = if key.total == 0 {
                    (!groups.is_empty()).then_some(0)
                } else {
                    groups
                        .iter()
                        .position(|g| grid.shell_equal(&corners[g[0]], &corners[i], s, &mut offset))
                };
                match slot {
                    Some(g) => groups[g].push(i),
                    None => groups.push(vec![i]),
                }
            }
            for key in order {
                for group in buckets.remove(&key).unwrap() {
                    if group.len() == 1 {
                        lengths[group[0]] = Some(s as u32);
                    } else if grid.vacuum() && group.iter().all(|&i| s >= settle[i]) {
                        // contents can no longer change: unbounded
                    } else {
                        next.push(group);
                    }
                }
            }
        }
        classes = next;
        s += 1;
    }
    Ok(MatchLengthField::new(window.clone(), lengths, saturated, margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchlen::{match_lengths_1d, match_lengths_brute};
    use crate::rng::SplitMix;
    use crate::source::Statistics;

    #[test]
    fn modular_helpers() {
        let b = 123_456_789u64;
        assert_eq!(mul_mod(b, pow_mod(b, MODULUS - 2)), 1);
        assert_eq!(sub_mod(3, 5), MODULUS - 2);
        assert_eq!(add_mod(MODULUS - 1, 2), 1);
    }

    #[test]
    fn keys_are_translation_invariant() {
        let mut values = vec![0u32; 64];
        for (i, v) in values.iter_mut().enumerate() {
            *v = [3, 1, 4, 1, 5, 9, 2, 6][i % 8];
        }
        let a = OccupationArray::from_values(Region::cube(1, 8, 2), values, Statistics::Bose).unwrap();
        let h = BoxHasher::new(&a);
        assert_eq!(h.key(&[1, 1], 3), h.key(&[5, 1], 3));
        assert_ne!(h.key(&[1, 1], 3), h.key(&[1, 2], 3));
    }

    #[test]
    fn agrees_with_brute_in_two_dimensions() {
        let mut rng = SplitMix::new(5);
        for trial in 0..60 {
            let side = 3 + rng.below(6) as usize;
            let w = 1 + rng.below(side as u64) as usize;
            let alpha = 1 + (trial % 3) as u64;
            let values: Vec<u32> = (0..side * side).map(|_| rng.below(alpha) as u32).collect();
            let a = OccupationArray::from_values(Region::cube(1, side, 2), values, Statistics::Bose)
                .unwrap()
                .with_vacuum_outside(trial % 2 == 1);
            let window = Region::cube(1, w, 2);
            assert_eq!(match_lengths_hashed(&a, &window).unwrap(), match_lengths_brute(&a, &window).unwrap());
        }
    }

    #[test]
    fn agrees_with_suffix_path_in_one_dimension() {
        let mut rng = SplitMix::new(8);
        for trial in 0..100 {
            let n = 2 + rng.below(50) as usize;
            let values: Vec<u32> = (0..n).map(|_| rng.below(2) as u32).collect();
            let a = OccupationArray::from_1d(values, Statistics::Fermi).with_vacuum_outside(trial % 2 == 0);
            let window = Region::cube(1, 1 + rng.below(n as u64) as usize, 1);
            assert_eq!(match_lengths_hashed(&a, &window).unwrap(), match_lengths_1d(&a, &window).unwrap());
        }
    }

    #[test]
    fn constant_window_with_distinct_margin() {
        let side = 12;
        let w = 6;
        let region = Region::cube(1, side, 2);
        let mut next = 10;
        let values: Vec<u32> = region
            .sites()
            .map(|s| {
                if s.iter().all(|&c| c <= w as i64) {
                    1
                } else {
                    next += 1;
                    next
                }
            })
            .collect();
        let a = OccupationArray::from_values(region, values, Statistics::Bose).unwrap();
        let window = Region::cube(1, w, 2);
        let f = match_lengths_hashed(&a, &window).unwrap();
        assert_eq!(f.saturation_count(), 0);
        assert_eq!(f, match_lengths_brute(&a, &window).unwrap());
    }
}
