use super::{check_window, MatchLengthField};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::source::OccupationArray;

/// Suffix array by prefix doubling with counting sorts, `O(n log n)`.
/// A suffix that is a proper prefix of another sorts first.
pub fn suffix_array(s: &[u32]) -> Vec<usize> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut alphabet = s.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    let mut rank: Vec<usize> = s.iter().map(|v| alphabet.binary_search(v).unwrap()).collect();
    let mut classes = alphabet.len();
    let mut sa: Vec<usize> = (0..n).collect();
    sa.sort_by_key(|&i| rank[i]);

    let mut by_second = Vec::with_capacity(n);
    let mut next = vec![0usize; n];
    let mut count = vec![0usize; n + 1];
    let mut k = 1;
    while classes < n {
        by_second.clear();
        by_second.extend(n.saturating_sub(k)..n);
        by_second.extend(sa.iter().filter(|&&j| j >= k).map(|&j| j - k));

        count[..=classes].fill(0);
        for &i in &by_second {
            count[rank[i] + 1] += 1;
        }
        for c in 1..=classes {
            count[c] += count[c - 1];
        }
        for &i in &by_second {
            sa[count[rank[i]]] = i;
            count[rank[i]] += 1;
        }

        let second = |i: usize, rank: &[usize]| if i + k < n { rank[i + k] + 1 } else { 0 };
        next[sa[0]] = 0;
        classes = 1;
        for t in 1..n {
            let (a, b) = (sa[t - 1], sa[t]);
            if rank[a] != rank[b] || second(a, &rank) != second(b, &rank) {
                classes += 1;
            }
            next[b] = classes - 1;
        }
        std::mem::swap(&mut rank, &mut next);
        k *= 2;
    }
    sa
}

/// Kasai's algorithm: `lcp[t]` is the common prefix length of the suffixes
/// at ranks `t - 1` and `t`; `lcp[0] = 0`.
pub fn lcp_array(s: &[u32], sa: &[usize]) -> Vec<usize> {
    let n = s.len();
    let mut rank = vec![0usize; n];
    for (t, &i) in sa.iter().enumerate() {
        rank[i] = t;
    }
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] == 0 {
            h = 0;
            continue;
        }
        let j = sa[rank[i] - 1];
        while i + h < n && j + h < n && s[i + h] == s[j + h] {
            h += 1;
        }
        lcp[rank[i]] = h;
        h = h.saturating_sub(1);
    }
    lcp
}

/// Longest proper border of every prefix: `fail[m]` for the prefix of length `m`.
fn border_table(s: &[u32]) -> Vec<usize> {
    let mut fail = vec![0usize; s.len() + 1];
    let mut k = 0;
    for i in 1..s.len() {
        while k > 0 && s[i] != s[k] {
            k = fail[k];
        }
        if s[i] == s[k] {
            k += 1;
        }
        fail[i + 1] = k;
    }
    fail
}

/// One-dimensional match lengths: `R_u = 1 + max_v lcp(u, v)` over window
/// suffixes `v != u`, read off the suffix array.
pub fn match_lengths_1d(array: &OccupationArray, window: &Region) -> Result<MatchLengthField> {
    if array.dim() != 1 {
        return Err(Error::InvalidArgument("suffix path needs a one-dimensional array".into()));
    }
    let margin = check_window(array, window)?;
    let values = array.values();
    let n = values.len();
    let base = array.region().lo()[0];
    let w_lo = (window.lo()[0] - base) as usize;
    let w_hi = (window.hi(0) - base) as usize;
    let vacuum = array.vacuum_outside();

    // under vacuum closure a run of n zeros stands in for the infinite tail;
    // no common prefix between distinct starts can reach past it
    let mut symbols = values.to_vec();
    if vacuum {
        symbols.resize(2 * n, 0);
    }
    let sa = suffix_array(&symbols);
    let lcp = lcp_array(&symbols, &sa);
    let in_window = |i: usize| i >= w_lo && i <= w_hi;

    let mut best = vec![0usize; n];
    let mut run: Option<usize> = None;
    for t in 0..sa.len() {
        if t > 0 {
            run = run.map(|c| c.min(lcp[t]));
        }
        if in_window(sa[t]) {
            best[sa[t]] = run.unwrap_or(0);
            run = Some(usize::MAX);
        }
    }
    run = None;
    for t in (0..sa.len()).rev() {
        if in_window(sa[t]) {
            best[sa[t]] = best[sa[t]].max(run.unwrap_or(0));
            run = Some(usize::MAX);
        }
        run = run.map(|c| c.min(lcp[t]));
    }

    let count = w_hi - w_lo + 1;
    let mut lengths = Vec::with_capacity(count);
    let mut saturated = vec![false; count];
    if vacuum {
        let last_nonzero = values.iter().rposition(|&v| v != 0);
        let empty_start = last_nonzero.map_or(0, |z| z + 1);
        let empty_in_window = (w_lo.max(empty_start)..=w_hi).count();
        for u in w_lo..=w_hi {
            if u >= empty_start && empty_in_window >= 2 {
                lengths.push(None);
            } else {
                lengths.push(Some(best[u] as u32 + 1));
            }
        }
    } else {
        // a partner that runs off the end while still matching is a suffix of
        // the buffer bordering u's suffix; the shortest such period decides
        let mut reversed = values.to_vec();
        reversed.reverse();
        let fail = border_table(&reversed);
        for u in w_lo..=w_hi {
            let len_u = n - u;
            let m = best[u];
            lengths.push(Some(m as u32 + 1));
            let period = len_u - fail[len_u];
            let own_edge = count > 1 && m == len_u;
            let partner_edge = period < len_u && u + period <= w_hi;
            saturated[u - w_lo] = own_edge || partner_edge;
        }
    }
    Ok(MatchLengthField::new(window.clone(), lengths, saturated, margin))
}
