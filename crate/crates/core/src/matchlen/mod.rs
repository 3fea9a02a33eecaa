//! Match lengths `R_u`: the side of the smallest cube anchored at `u` whose
//! contents differ from every other cube anchored in the observation window.
//!
//! Three exact routes compute the same [`MatchLengthField`]:
//! [`match_lengths_brute`] (direct scan), [`match_lengths_1d`] (suffix array
//! and LCP) and [`match_lengths_hashed`] (any dimension, hashed box refinement).
//!
//! Two conventions govern boxes that reach past the sampled region:
//!
//! * If the array is closed by vacuum, sites outside read as empty and a box
//!   can stay non-unique forever; such sites get an unbounded length (`None`).
//! * Otherwise a partner whose box (or whose own box) leaves the region
//!   before the two disagree is dropped and the site is flagged saturated; its
//!   length is then only a lower bound.

mod brute;
mod driver;
mod hashed;
mod suffix;

pub use brute::match_lengths_brute;
pub use driver::{sample_field, FieldRun, MarginPolicy};
pub use hashed::match_lengths_hashed;
pub use suffix::{lcp_array, match_lengths_1d, suffix_array};

use std::io::Write;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::source::{softplus, ModelParams, OccupationArray, Statistics};

#[derive(Debug, Clone, PartialEq)]
pub struct MatchLengthField {
    window: Region,
    lengths: Vec<Option<u32>>,
    saturated: Vec<bool>,
    margin_used: usize,
}

impl MatchLengthField {
    pub(crate) fn new(window: Region, lengths: Vec<Option<u32>>, saturated: Vec<bool>, margin_used: usize) -> Self {
        debug_assert_eq!(lengths.len(), window.len());
        debug_assert_eq!(saturated.len(), window.len());
        Self {
            window,
            lengths,
            saturated,
            margin_used,
        }
    }

    pub fn window(&self) -> &Region {
        &self.window
    }

    /// Row-major over the window; `None` marks an unbounded match length.
    pub fn lengths(&self) -> &[Option<u32>] {
        &self.lengths
    }

    pub fn saturated(&self) -> &[bool] {
        &self.saturated
    }

    pub fn margin_used(&self) -> usize {
        self.margin_used
    }

    pub fn get(&self, site: &[i64]) -> Option<Option<u32>> {
        self.window.index_of(site).map(|i| self.lengths[i])
    }

    pub fn saturation_count(&self) -> usize {
        self.saturated.iter().filter(|&&s| s).count()
    }

    pub fn unbounded_count(&self) -> usize {
        self.lengths.iter().filter(|r| r.is_none()).count()
    }

    pub fn max_finite(&self) -> Option<u32> {
        self.lengths.iter().flatten().copied().max()
    }

    /// CSV with columns `x1..xd,R,saturated`; unbounded lengths print as `inf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.window.dim();
        let mut header: Vec<String> = (1..=d).map(|a| format!("x{a}")).collect();
        header.push("R".into());
        header.push("saturated".into());
        writeln!(w, "{}", header.join(","))?;
        for (i, site) in self.window.sites().enumerate() {
            for c in &site {
                write!(w, "{c},")?;
            }
            match self.lengths[i] {
                Some(r) => write!(w, "{r},")?,
                None => write!(w, "inf,")?,
            }
            writeln!(w, "{}", self.saturated[i])?;
        }
        Ok(())
    }

    /// Parses the CSV written by [`MatchLengthField::write_csv`]; the window
    /// is recovered as the bounding box of the listed sites.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty field csv".into()))?;
        let d = header.split(',').count().checked_sub(2).filter(|&d| d > 0).ok_or_else(|| {
            Error::Parse("field csv header needs coordinates, R and saturated".into())
        })?;
        let mut rows = Vec::new();
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != d + 2 {
                return Err(Error::Parse(format!("field csv row `{line}`")));
            }
            let site = cols[..d]
                .iter()
                .map(|c| c.trim().parse::<i64>().map_err(|_| Error::Parse(format!("coordinate `{c}`"))))
                .collect::<Result<Vec<_>>>()?;
            let r = match cols[d].trim() {
                "inf" => None,
                v => Some(v.parse::<u32>().map_err(|_| Error::Parse(format!("length `{v}`")))?),
            };
            let sat = cols[d + 1]
                .trim()
                .parse::<bool>()
                .map_err(|_| Error::Parse(format!("saturated flag `{}`", cols[d + 1])))?;
            rows.push((site, r, sat));
        }
        if rows.is_empty() {
            return Err(Error::Parse("field csv has no rows".into()));
        }
        let lo: Vec<i64> = (0..d).map(|a| rows.iter().map(|r| r.0[a]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..d).map(|a| rows.iter().map(|r| r.0[a]).max().unwrap()).collect();
        let window = Region::new(lo.clone(), (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect())?;
        if window.len() != rows.len() {
            return Err(Error::Parse("field csv rows do not fill a box".into()));
        }
        let mut lengths = vec![None; rows.len()];
        let mut saturated = vec![false; rows.len()];
        for (site, r, s) in rows {
            let i = window.index_of(&site).unwrap();
            lengths[i] = r;
            saturated[i] = s;
        }
        Ok(Self::new(window, lengths, saturated, 0))
    }
}

/// Exact match lengths by the fastest route available for the dimension.
pub fn match_lengths(array: &OccupationArray, window: &Region) -> Result<MatchLengthField> {
    if array.dim() == 1 {
        match_lengths_1d(array, window)
    } else {
        match_lengths_hashed(array, window)
    }
}

/// Checks the window lies inside the array and returns the margin left above it.
pub(crate) fn check_window(array: &OccupationArray, window: &Region) -> Result<usize> {
    if window.dim() != array.dim() {
        return Err(Error::InvalidArgument(format!(
            "window has {} axes, array has {}",
            window.dim(),
            array.dim()
        )));
    }
    if window.is_empty() {
        return Err(Error::InvalidArgument("empty window".into()));
    }
    if let Some(site) = array.region().first_uncovered(window) {
        return Err(Error::Coverage { site });
    }
    Ok((0..window.dim())
        .map(|a| (array.region().hi(a) - window.hi(a)) as usize)
        .min()
        .unwrap())
}

/// Read access to an array with the closure convention applied.
pub(crate) struct Grid<'a> {
    array: &'a OccupationArray,
    lo: Vec<i64>,
    hi: Vec<i64>,
    strides: Vec<usize>,
}

impl<'a> Grid<'a> {
    pub(crate) fn new(array: &'a OccupationArray) -> Self {
        let region = array.region();
        Self {
            array,
            lo: region.lo().to_vec(),
            hi: (0..region.dim()).map(|a| region.hi(a)).collect(),
            strides: region.strides(),
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.lo.len()
    }

    pub(crate) fn vacuum(&self) -> bool {
        self.array.vacuum_outside()
    }

    /// Value at `corner + offset`; outside the region this is 0 under vacuum
    /// closure and unspecified (never read) otherwise.
    #[inline]
    pub(crate) fn at(&self, corner: &[i64], offset: &[i64]) -> u32 {
        let mut idx = 0usize;
        for a in 0..corner.len() {
            let c = corner[a] + offset[a];
            if c < self.lo[a] || c > self.hi[a] {
                return 0;
            }
            idx += (c - self.lo[a]) as usize * self.strides[a];
        }
        self.array.values()[idx]
    }

    /// Whether the box of side `s` at `corner` lies inside the sampled region.
    #[inline]
    pub(crate) fn fits(&self, corner: &[i64], s: usize) -> bool {
        (0..corner.len()).all(|a| corner[a] + s as i64 - 1 <= self.hi[a])
    }

    /// Smallest side from which the box at `corner` covers every sampled site
    /// above it; under vacuum closure comparisons cannot change beyond it.
    #[inline]
    pub(crate) fn settle_side(&self, corner: &[i64]) -> usize {
        (0..corner.len())
            .map(|a| (self.hi[a] - corner[a] + 1).max(1) as usize)
            .max()
            .unwrap()
    }

    /// Compares the outer shell `{o in [0,s)^d : max o = s-1}` of two boxes.
    pub(crate) fn shell_equal(&self, u: &[i64], v: &[i64], s: usize, offset: &mut [i64]) -> bool {
        for_each_shell_offset(self.dim(), s, offset, |o| self.at(u, o) == self.at(v, o))
    }
}

/// Visits every offset of the outer shell of the side-`s` cube until `f`
/// returns false; returns whether all visits returned true.
pub(crate) fn for_each_shell_offset<F: FnMut(&[i64]) -> bool>(d: usize, s: usize, o: &mut [i64], mut f: F) -> bool {
    let top = s as i64 - 1;
    // `p` is the first axis sitting on the top face
    for p in 0..d {
        if p > 0 && top == 0 {
            break;
        }
        for (a, slot) in o.iter_mut().enumerate() {
            *slot = if a == p { top } else { 0 };
        }
        'odometer: loop {
            if !f(o) {
                return false;
            }
            let mut a = d;
            loop {
                if a == 0 {
                    break 'odometer;
                }
                a -= 1;
                if a == p {
                    continue;
                }
                let bound = if a < p { top } else { top + 1 };
                o[a] += 1;
                if o[a] < bound {
                    continue 'odometer;
                }
                o[a] = 0;
            }
        }
    }
    true
}

/// Outcome of a return-time scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnTime {
    /// The block recurs after this many steps.
    Found(u64),
    /// No recurrence before the buffer ended; `scanned` shifts were checked.
    NotFound { scanned: u64 },
}

/// `T_{n,i} = inf{j >= 1 : k_{i+j}(n) = k_i(n)}`, or the time-reversed
/// variant scanning `i - j`. One-dimensional arrays only.
pub fn return_time(array: &OccupationArray, n: usize, i: i64, reversed: bool) -> Result<ReturnTime> {
    if array.dim() != 1 {
        return Err(Error::InvalidArgument("return times are one-dimensional".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    let lo = array.region().lo()[0];
    let hi = array.region().hi(0);
    let end = i + n as i64 - 1;
    if i < lo || end > hi {
        let site = if i < lo { i } else { hi + 1 };
        return Err(Error::Coverage { site: vec![site] });
    }
    let v = array.values();
    let block = &v[(i - lo) as usize..=(end - lo) as usize];
    let mut scanned = 0;
    let mut j = 1i64;
    loop {
        let start = if reversed { i - j } else { i + j };
        if start < lo || start + n as i64 - 1 > hi {
            return Ok(ReturnTime::NotFound { scanned });
        }
        scanned += 1;
        let at = (start - lo) as usize;
        if &v[at..at + n] == block {
            return Ok(ReturnTime::Found(j as u64));
        }
        j += 1;
    }
}

/// Site-wise `min(k, m)`.
pub fn truncate(array: &OccupationArray, m: u32) -> Result<OccupationArray> {
    if m == 0 {
        return Err(Error::InvalidArgument("truncation level must be positive".into()));
    }
    let values = array.values().iter().map(|&k| k.min(m)).collect();
    let out = OccupationArray::from_values(array.region().clone(), values, array.statistics())?;
    Ok(out.with_vacuum_outside(array.vacuum_outside()))
}

/// `c = ceil(-3 / ln p_max)`, where `p_max` is the largest single-value
/// probability of any mode in the window: `1 - q*` for bosons (with
/// `q* = exp(-beta (mu + theta*))`, `theta* = sup_[0, zeta] theta`), and
/// `max(P_theta*(0), P_0(1))` for fermions.
pub fn uniform_bound_constant(params: &ModelParams) -> f64 {
    let theta_star = params.dispersion.sup_on(params.zeta);
    let x_star = params.beta * (params.mu + theta_star);
    let ln_pmax = match params.statistics {
        Statistics::Bose => (-(-x_star).exp()).ln_1p(),
        Statistics::Fermi => (-softplus(-x_star)).max(-softplus(params.beta * params.mu)),
    };
    (-3.0 / ln_pmax).ceil()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_offsets_partition_the_cube() {
        for d in 1..=3 {
            for s in 1..=5usize {
                let mut seen = std::collections::HashSet::new();
                let mut o = vec![0i64; d];
                for_each_shell_offset(d, s, &mut o, |o| {
                    assert!(o.iter().all(|&x| x >= 0 && x < s as i64));
                    assert!(o.iter().any(|&x| x == s as i64 - 1));
                    assert!(seen.insert(o.to_vec()), "duplicate {o:?}");
                    true
                });
                let expected = s.pow(d as u32) - (s - 1).pow(d as u32);
                assert_eq!(seen.len(), expected, "d={d} s={s}");
            }
        }
    }

    #[test]
    fn return_time_examples() {
        let alt = OccupationArray::from_1d((0..20).map(|i| i % 2).collect(), Statistics::Fermi);
        assert_eq!(return_time(&alt, 1, 1, false).unwrap(), ReturnTime::Found(2));
        assert_eq!(return_time(&alt, 3, 5, true).unwrap(), ReturnTime::Found(2));
        let flat = OccupationArray::from_1d(vec![3; 30], Statistics::Bose);
        for n in 1..5 {
            assert_eq!(return_time(&flat, n, 10, false).unwrap(), ReturnTime::Found(1));
            assert_eq!(return_time(&flat, n, 10, true).unwrap(), ReturnTime::Found(1));
        }
        let distinct = OccupationArray::from_1d((0..40).collect(), Statistics::Bose);
        assert_eq!(return_time(&distinct, 1, 1, false).unwrap(), ReturnTime::NotFound { scanned: 39 });
        assert!(return_time(&distinct, 5, 38, false).is_err());
    }

    #[test]
    fn truncate_examples() {
        let a = OccupationArray::from_1d(vec![0, 3, 1, 2], Statistics::Bose);
        assert_eq!(truncate(&a, 1).unwrap().values(), &[0, 1, 1, 1]);
        let f = OccupationArray::from_1d(vec![0, 1, 1, 0, 1], Statistics::Fermi);
        assert_eq!(truncate(&f, 1).unwrap().values(), f.values());
        assert!(truncate(&a, 0).is_err());
    }

    #[test]
    fn bound_constant_is_finite_and_positive() {
        let p = ModelParams::bose(1.0, 1.0, 1, 64).unwrap();
        let c = uniform_bound_constant(&p);
        let q = (-(1.0 + 4.0 * std::f64::consts::PI.powi(2))).exp();
        assert_eq!(c, (-3.0 / (-q).ln_1p()).ceil());
        let small = ModelParams::new(
            Statistics::Bose,
            1.0,
            1.0,
            1,
            crate::source::Dispersion::tabulated(vec![(0.0, 0.0), (1.0, 0.5)]).unwrap(),
            64,
            1.0,
        )
        .unwrap();
        assert_eq!(uniform_bound_constant(&small), (-3.0 / (-(-1.5f64).exp()).ln_1p()).ceil());
        let f = ModelParams::fermi(1.0, 0.0, 1, 64).unwrap();
        assert!(uniform_bound_constant(&f) > 1.0);
    }

    #[test]
    fn field_csv_roundtrip() {
        let w = Region::new(vec![1, 1], vec![2, 2]).unwrap();
        let f = MatchLengthField::new(w, vec![Some(1), None, Some(3), Some(2)], vec![false, false, true, false], 3);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,R,saturated\n1,1,1,false\n1,2,inf,false\n"));
        let g = MatchLengthField::parse_csv(&text).unwrap();
        assert_eq!(g.lengths(), f.lengths());
        assert_eq!(g.saturated(), f.saturated());
    }
}
