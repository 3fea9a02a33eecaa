//! The ideal-gas Gibbs source: per-mode occupation laws and deterministic
//! sampling of occupation arrays.
//!
//! Mode `n` of the lattice has energy `theta(|n| / L)`. Its occupation number
//! is geometric with ratio `q = exp(-beta (theta + mu))` for bosons and
//! two-point with `P(1) = q / (1 + q)` for fermions, independently across
//! modes. Everything below is expressed through the exponent
//! `x = beta (theta + mu)`, which avoids underflow of `q` far from the origin.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistics {
    Bose,
    Fermi,
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistics::Bose => "bose",
            Statistics::Fermi => "fermi",
        })
    }
}

impl FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bose" | "boson" | "bosons" => Ok(Statistics::Bose),
            "fermi" | "fermion" | "fermions" => Ok(Statistics::Fermi),
            other => Err(Error::Parse(format!("unknown statistics `{other}`"))),
        }
    }
}

/// The one-particle dispersion `theta: [0, inf) -> [0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Dispersion {
    /// `theta(t) = 4 pi^2 t^2`, the periodic box with `H = -Laplacian / 2`.
    QuadraticPeriodic,
    /// Piecewise-linear interpolation of `(t, theta(t))` nodes, extrapolated
    /// along the last segment.
    Tabulated(Vec<(f64, f64)>),
}

impl Dispersion {
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let d = Dispersion::Tabulated(points);
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let Dispersion::Tabulated(pts) = self else {
            return Ok(());
        };
        let bad = |msg: String| Err(Error::InvalidModel(format!("theta table: {msg}")));
        if pts.len() < 2 {
            return bad("needs at least two nodes".into());
        }
        if pts[0].0 != 0.0 {
            return bad(format!("first abscissa must be 0, got {}", pts[0].0));
        }
        for (i, &(t, v)) in pts.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() || v < 0.0 {
                return bad(format!("node {i} = ({t}, {v}) is not finite and nonnegative"));
            }
            if i > 0 {
                if t <= pts[i - 1].0 {
                    return bad(format!("abscissae must be strictly increasing at node {i}"));
                }
                if v <= 0.0 {
                    return bad(format!("theta must be positive away from 0 (node {i})"));
                }
            }
        }
        let (t0, v0) = pts[pts.len() - 2];
        let (t1, v1) = pts[pts.len() - 1];
        if (v1 - v0) / (t1 - t0) < 0.0 {
            return bad("last segment must be non-decreasing so that extrapolation stays positive".into());
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Dispersion::QuadraticPeriodic => 4.0 * std::f64::consts::PI.powi(2) * t * t,
            Dispersion::Tabulated(pts) => {
                let k = pts.partition_point(|&(x, _)| x <= t);
                let seg = k.clamp(1, pts.len() - 1);
                let (t0, v0) = pts[seg - 1];
                let (t1, v1) = pts[seg];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `sup_{[0, x]} theta`.
    pub fn sup_on(&self, x: f64) -> f64 {
        match self {
            Dispersion::QuadraticPeriodic => self.eval(x),
            Dispersion::Tabulated(pts) => pts
                .iter()
                .filter(|&&(t, _)| t <= x)
                .map(|&(_, v)| v)
                .fold(self.eval(x), f64::max),
        }
    }

    /// Abscissae where the tabulated dispersion has kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Dispersion::QuadraticPeriodic => Vec::new(),
            Dispersion::Tabulated(pts) => pts.iter().map(|&(t, _)| t).collect(),
        }
    }
}

/// Parameters fully determining the source measure `P^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub statistics: Statistics,
    pub beta: f64,
    pub mu: f64,
    pub dim: usize,
    pub dispersion: Dispersion,
    pub l: u64,
    pub zeta: f64,
}

impl ModelParams {
    pub fn new(
        statistics: Statistics,
        beta: f64,
        mu: f64,
        dim: usize,
        dispersion: Dispersion,
        l: u64,
        zeta: f64,
    ) -> Result<Self> {
        let p = Self {
            statistics,
            beta,
            mu,
            dim,
            dispersion,
            l,
            zeta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Bose, `theta(t) = 4 pi^2 t^2`, `zeta = 1`.
    pub fn bose(beta: f64, mu: f64, dim: usize, l: u64) -> Result<Self> {
        Self::new(Statistics::Bose, beta, mu, dim, Dispersion::QuadraticPeriodic, l, 1.0)
    }

    /// Fermi, `theta(t) = 4 pi^2 t^2`, `zeta = 1`.
    pub fn fermi(beta: f64, mu: f64, dim: usize, l: u64) -> Result<Self> {
        Self::new(Statistics::Fermi, beta, mu, dim, Dispersion::QuadraticPeriodic, l, 1.0)
    }

    pub fn with_l(&self, l: u64) -> Result<Self> {
        let mut p = self.clone();
        p.l = l;
        p.validate()?;
        Ok(p)
    }

    pub fn with_zeta(&self, zeta: f64) -> Result<Self> {
        let mut p = self.clone();
        p.zeta = zeta;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !self.mu.is_finite() {
            return bad(format!("mu must be finite, got {}", self.mu));
        }
        if self.statistics == Statistics::Bose && self.mu <= 0.0 {
            return bad(format!("bosons require mu > 0, got {}", self.mu));
        }
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.l < 2 {
            return bad(format!("L must be at least 2, got {}", self.l));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return bad(format!("zeta must be positive, got {}", self.zeta));
        }
        self.dispersion.validate()?;
        if self.statistics == Statistics::Bose && self.dispersion.eval(0.0) + self.mu <= 0.0 {
            return bad("bose site parameter must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// Side of the observation window `B(1, ceil(zeta L))`.
    pub fn window_side(&self) -> usize {
        window_side(self.l, self.zeta)
    }

    pub fn window(&self) -> Region {
        Region::cube(1, self.window_side(), self.dim)
    }

    /// `L^d`.
    pub fn volume(&self) -> f64 {
        (self.l as f64).powi(self.dim as i32)
    }

    /// Exponent `beta (theta(r) + mu)` at continuum radius `r`.
    pub fn exponent_at_radius(&self, r: f64) -> f64 {
        self.beta * (self.dispersion.eval(r) + self.mu)
    }

    /// Exponent `beta (theta(|n| / L) + mu)` of lattice mode `n`.
    pub fn exponent(&self, site: &[i64]) -> f64 {
        self.exponent_at_radius(norm(site) / self.l as f64)
    }

    /// 64-bit FNV-1a checksum of the parameter set.
    pub fn digest(&self) -> u64 {
        let text = format!("{self:?}");
        text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

pub fn window_side(l: u64, zeta: f64) -> usize {
    ((zeta * l as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Euclidean norm of a lattice vector.
pub fn norm(site: &[i64]) -> f64 {
    site.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Probability that a fermion mode with exponent `x` is occupied.
pub fn fermi_occupation(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn check_bose(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!(
            "degenerate geometric law: beta (theta + mu) = {x} <= 0"
        )))
    }
}

/// Shannon entropy (nats) of a mode with exponent `x`.
pub fn entropy_from_exponent(statistics: Statistics, x: f64) -> Result<f64> {
    match statistics {
        Statistics::Bose => {
            check_bose(x)?;
            if x > 745.0 {
                return Ok(0.0);
            }
            Ok(-(-(-x).exp_m1()).ln() + x / x.exp_m1())
        }
        Statistics::Fermi => {
            let p = fermi_occupation(x);
            Ok(p * softplus(x) + (1.0 - p) * softplus(-x))
        }
    }
}

/// Mean occupation of a mode with exponent `x`.
pub fn mean_from_exponent(statistics: Statistics, x: f64) -> Result<f64> {
    match statistics {
        Statistics::Bose => {
            check_bose(x)?;
            Ok(1.0 / x.exp_m1())
        }
        Statistics::Fermi => Ok(fermi_occupation(x)),
    }
}

/// `ln` of the per-mode normalisation: `-ln(1 - q)` (Bose) or `ln(1 + q)` (Fermi).
pub fn log_partition_from_exponent(statistics: Statistics, x: f64) -> Result<f64> {
    match statistics {
        Statistics::Bose => {
            check_bose(x)?;
            Ok(-(-(-x).exp_m1()).ln())
        }
        Statistics::Fermi => Ok(softplus(-x)),
    }
}

/// `q = exp(-beta (theta(|n| / L) + mu))`.
pub fn site_parameter(params: &ModelParams, site: &[i64]) -> Result<f64> {
    let x = params.exponent(site);
    if params.statistics == Statistics::Bose {
        check_bose(x)?;
    }
    Ok((-x).exp())
}

pub fn site_entropy(params: &ModelParams, site: &[i64]) -> Result<f64> {
    entropy_from_exponent(params.statistics, params.exponent(site))
}

pub fn site_mean(params: &ModelParams, site: &[i64]) -> Result<f64> {
    mean_from_exponent(params.statistics, params.exponent(site))
}

/// Draws one occupation number by inversion of the per-mode law.
pub fn draw_occupation(statistics: Statistics, x: f64, u: f64) -> u32 {
    match statistics {
        // P(K >= k) = q^k, so K = floor(ln(1 - U) / ln q).
        Statistics::Bose => {
            let k = ((-u).ln_1p() / -x).floor();
            if k >= u32::MAX as f64 {
                u32::MAX
            } else {
                k as u32
            }
        }
        Statistics::Fermi => (u < fermi_occupation(x)) as u32,
    }
}

/// A sampled occupation array over a finite box of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationArray {
    region: Region,
    values: Vec<u32>,
    statistics: Statistics,
    seed: u64,
    l: u64,
    zeta: f64,
    params_digest: u64,
    vacuum_outside: bool,
}

impl OccupationArray {
    /// Wraps explicit values; sites outside the region are unknown.
    pub fn from_values(region: Region, values: Vec<u32>, statistics: Statistics) -> Result<Self> {
        if values.len() != region.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a region of {} sites",
                values.len(),
                region.len()
            )));
        }
        if statistics == Statistics::Fermi && values.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("fermion occupations must be 0 or 1".into()));
        }
        Ok(Self {
            region,
            values,
            statistics,
            seed: 0,
            l: 0,
            zeta: 0.0,
            params_digest: 0,
            vacuum_outside: false,
        })
    }

    /// One-dimensional array starting at site 1.
    pub fn from_1d(values: Vec<u32>, statistics: Statistics) -> Self {
        let region = Region::cube(1, values.len(), 1);
        Self::from_values(region, values, statistics).expect("fermion values must be 0 or 1")
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn origin(&self) -> &[i64] {
        self.region.lo()
    }

    pub fn extent(&self) -> &[usize] {
        self.region.extent()
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn params_digest(&self) -> u64 {
        self.params_digest
    }

    /// True when every site outside the region is known to be empty.
    pub fn vacuum_outside(&self) -> bool {
        self.vacuum_outside
    }

    /// Declares all sites outside the sampled region empty.
    pub fn with_vacuum_outside(mut self, vacuum: bool) -> Self {
        self.vacuum_outside = vacuum;
        self
    }

    pub fn get(&self, site: &[i64]) -> Option<u32> {
        self.region.index_of(site).map(|i| self.values[i])
    }

    /// Value at `site`, reading empty modes outside the region when the
    /// array is closed by vacuum.
    pub fn value_or_vacuum(&self, site: &[i64]) -> Option<u32> {
        match self.get(site) {
            Some(v) => Some(v),
            None if self.vacuum_outside => Some(0),
            None => None,
        }
    }

    /// Restriction to a sub-box.
    pub fn restrict(&self, region: &Region) -> Result<Self> {
        if let Some(site) = self.region.first_uncovered(region) {
            return Err(Error::Coverage { site });
        }
        let values = region
            .sites()
            .map(|s| self.values[self.region.index_of(&s).unwrap()])
            .collect();
        Ok(Self {
            region: region.clone(),
            values,
            vacuum_outside: false,
            ..self.clone()
        })
    }

    /// Writes the text dump: a header line `d L zeta statistics seed
    /// origin... extent...` followed by rows of the last axis.
    pub fn write_dump<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = format!(
            "{} {} {} {} {}",
            self.dim(),
            self.l,
            self.zeta,
            self.statistics,
            self.seed
        );
        for o in self.origin() {
            header.push_str(&format!(" {o}"));
        }
        for e in self.extent() {
            header.push_str(&format!(" {e}"));
        }
        writeln!(w, "{header}")?;
        let row = *self.extent().last().unwrap();
        if row == 0 {
            return Ok(());
        }
        for chunk in self.values.chunks(row) {
            let line: Vec<String> = chunk.iter().map(u32::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is ASCII")
    }

    /// Parses the text dump written by [`OccupationArray::write_dump`].
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dump".into()))?
            .split_whitespace()
            .collect();
        let perr = |what: &str| Error::Parse(format!("dump header: bad {what}"));
        let dim: usize = header.first().and_then(|s| s.parse().ok()).ok_or_else(|| perr("d"))?;
        if dim == 0 || header.len() != 5 + 2 * dim {
            return Err(perr("field count"));
        }
        let l: u64 = header[1].parse().map_err(|_| perr("L"))?;
        let zeta: f64 = header[2].parse().map_err(|_| perr("zeta"))?;
        let statistics: Statistics = header[3].parse()?;
        let seed: u64 = header[4].parse().map_err(|_| perr("seed"))?;
        let origin = header[5..5 + dim]
            .iter()
            .map(|s| s.parse::<i64>().map_err(|_| perr("origin")))
            .collect::<Result<Vec<_>>>()?;
        let extent = header[5 + dim..]
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| perr("extent")))
            .collect::<Result<Vec<_>>>()?;
        let region = Region::new(origin, extent)?;
        let values = lines
            .flat_map(str::split_whitespace)
            .map(|s| s.parse::<u32>().map_err(|_| Error::Parse(format!("dump value `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut array = Self::from_values(region, values, statistics)?;
        array.seed = seed;
        array.l = l;
        array.zeta = zeta;
        Ok(array)
    }
}

/// Samples every site of `region` independently under the product law.
///
/// Site `n` uses the uniform variate keyed on `(seed, n)`, so overlapping
/// regions agree on their common sites.
pub fn sample_array(params: &ModelParams, region: &Region, seed: u64) -> Result<OccupationArray> {
    params.validate()?;
    if region.dim() != params.dim {
        return Err(Error::InvalidArgument(format!(
            "region has {} axes, model has {}",
            region.dim(),
            params.dim
        )));
    }
    if region.is_empty() {
        return Err(Error::InvalidArgument("cannot sample an empty region".into()));
    }
    let values = region
        .sites()
        .map(|site| {
            let x = params.exponent(&site);
            let u = rng::site_uniform(seed, &site);
            draw_occupation(params.statistics, x, u)
        })
        .collect();
    Ok(OccupationArray {
        region: region.clone(),
        values,
        statistics: params.statistics,
        seed,
        l: params.l,
        zeta: params.zeta,
        params_digest: params.digest(),
        vacuum_outside: false,
    })
}

/// `ln lambda = -beta sum_n k_n (mu + theta(|n| / L))` over the sites of `region`.
pub fn log_weight(params: &ModelParams, array: &OccupationArray, region: &Region) -> Result<f64> {
    if let Some(site) = array.region().first_uncovered(region) {
        return Err(Error::Coverage { site });
    }
    Ok(-region
        .sites()
        .map(|s| {
            let k = array.get(&s).unwrap();
            if k == 0 {
                0.0
            } else {
                k as f64 * params.exponent(&s)
            }
        })
        .sum::<f64>())
}

/// Lattice radius beyond which every mode has entropy below `tail_tol`.
///
/// The returned radius `r` satisfies `E(rho) < tail_tol` on a dense grid of
/// the full shell `rho in [r, 4 r + 4]`.
pub fn support_radius(params: &ModelParams, tail_tol: f64) -> Result<i64> {
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tail_tol must be positive, got {tail_tol}")));
    }
    let l = params.l as f64;
    let small = |rho: f64| -> Result<bool> {
        Ok(entropy_from_exponent(params.statistics, params.exponent_at_radius(rho / l))? < tail_tol)
    };
    const LIMIT: f64 = 1e12;
    let mut from = 0.0f64;
    loop {
        // exponential search for the first radius below the tolerance, then bisect
        let mut hi = from.max(1.0);
        while !small(hi)? {
            hi *= 2.0;
            if hi > LIMIT {
                return Err(Error::Divergence(format!(
                    "per-site entropy stays above {tail_tol} beyond radius {LIMIT}"
                )));
            }
        }
        let mut lo = if hi > 1.0 { (hi / 2.0).max(from) } else { from };
        if small(lo)? {
            hi = lo;
        } else {
            while hi - lo > 0.5 {
                let mid = 0.5 * (lo + hi);
                if small(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        let r = hi.ceil();
        let end = 4.0 * r + 4.0;
        let mut failed = None;
        for i in 0..=512 {
            let rho = r + (end - r) * i as f64 / 512.0;
            if !small(rho)? {
                failed = Some(rho);
                break;
            }
        }
        match failed {
            None => return Ok(r as i64),
            Some(rho) => from = rho + 1.0,
        }
        if from > LIMIT {
            return Err(Error::Divergence("per-site entropy does not decay".into()));
        }
    }
}

/// Site set of the AEP statistic: the cube `[-r, r]^d` with `r` from [`support_radius`].
pub fn aep_region(params: &ModelParams, tail_tol: f64) -> Result<Region> {
    let r = support_radius(params, tail_tol)?;
    Ok(Region::cube(-r, (2 * r + 1) as usize, params.dim))
}

/// Per-volume negative log-probability of the realised array,
/// `(1/L^d) (-ln lambda + ln Xi)`, over the sites of [`aep_region`].
pub fn aep_statistic(params: &ModelParams, array: &OccupationArray, tail_tol: f64) -> Result<f64> {
    let region = aep_region(params, tail_tol)?;
    if let Some(site) = array.region().first_uncovered(&region) {
        return Err(Error::Coverage { site });
    }
    let mut total = 0.0;
    for site in region.sites() {
        let x = params.exponent(&site);
        let k = array.get(&site).unwrap();
        total += x * k as f64 + log_partition_from_exponent(params.statistics, x)?;
    }
    Ok(total / params.volume())
}
