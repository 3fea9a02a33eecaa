//! Exact von Neumann entropy per unit volume of the limiting ensemble and
//! its finite-L Riemann sums.
//!
//! The integrand is the Shannon entropy of the mode at continuum momentum
//! `y`; it depends on `y` only through `|y|`, so the full-space integral
//! reduces to a radial one.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::quad;
use crate::rng::SplitMix;
use crate::source::{entropy_from_exponent, ModelParams};

pub const DEFAULT_QUAD_TOL: f64 = 1e-9;

const MAX_SEGMENTS: usize = 20_000;
const TAIL_FLOOR: f64 = 1e-14;
const MAX_RADIUS: f64 = 1e8;
const MC_SAMPLES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntropyKind {
    FullSpace,
    Box,
    RiemannSum,
}

impl std::fmt::Display for EntropyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EntropyKind::FullSpace => "full",
            EntropyKind::Box => "box",
            EntropyKind::RiemannSum => "riemann",
        })
    }
}

/// Axis-aligned real box; `hi` may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct RealBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyValue {
    /// Nats per unit volume.
    pub value: f64,
    pub kind: EntropyKind,
    /// Integration domain; `None` means all of R^d.
    pub domain: Option<RealBox>,
    pub est_abs_error: f64,
}

/// Entropy density at continuum momentum `y`.
pub fn integrand(params: &ModelParams, y: &[f64]) -> Result<f64> {
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    radial_integrand(params, r)
}

pub fn radial_integrand(params: &ModelParams, r: f64) -> Result<f64> {
    entropy_from_exponent(params.statistics, params.exponent_at_radius(r))
}

/// Surface area of the unit sphere in R^d.
pub fn unit_sphere_area(d: usize) -> f64 {
    // Gamma(d/2) by recurrence from Gamma(1) = 1 or Gamma(1/2) = sqrt(pi)
    let mut gamma = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut s = if d % 2 == 0 { 1.0 } else { 0.5 };
    while s + 0.5 < d as f64 / 2.0 {
        gamma *= s;
        s += 1.0;
    }
    2.0 * PI.powf(d as f64 / 2.0) / gamma
}

/// Finds a radius beyond which the radial tail contributes less than `tol / 10`.
fn radial_cutoff(params: &ModelParams, tol: f64) -> Result<(f64, f64)> {
    let d = params.dim as i32;
    let area = unit_sphere_area(params.dim);
    let f = |r: f64| radial_integrand(params, r);
    let mut r = 1.0;
    loop {
        if r > MAX_RADIUS {
            return Err(Error::Divergence(format!(
                "integrand still above {TAIL_FLOOR:e} (or tail above {:e}) at radius {MAX_RADIUS:e}",
                tol / 10.0
            )));
        }
        if f(r)? < TAIL_FLOOR {
            // integrand value times shell volume at successive doublings
            let mut tail = 0.0;
            let mut inner = r;
            for _ in 0..64 {
                let outer = 2.0 * inner;
                let term = f(inner)? * area * (outer.powi(d) - inner.powi(d)) / d as f64;
                tail += term;
                if term < 1e-6 * tol {
                    break;
                }
                inner = outer;
            }
            if tail < tol / 10.0 {
                return Ok((r, tail));
            }
        }
        r *= 2.0;
    }
}

/// `h` over all of R^d via the radial reduction `S_{d-1} int_0^inf f(r) r^{d-1} dr`.
pub fn vn_entropy_full(params: &ModelParams, tol: f64) -> Result<EntropyValue> {
    params.validate()?;
    check_tol(tol)?;
    let (cutoff, tail) = radial_cutoff(params, tol)?;
    let d = params.dim as i32;
    let area = unit_sphere_area(params.dim);
    let mut failure = None;
    let breaks = params.dispersion.breakpoints();
    let res = quad::integrate(
        |r| match radial_integrand(params, r) {
            Ok(v) => area * v * r.powi(d - 1),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        cutoff,
        &breaks,
        tol / 2.0,
        MAX_SEGMENTS,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(EntropyValue {
        value: res.value,
        kind: EntropyKind::FullSpace,
        domain: None,
        est_abs_error: res.abs_error + tail,
    })
}

/// Entropy restricted to the positive orthant `[0, inf)^d`, i.e. `h / 2^d`,
/// the large-zeta limit of [`vn_entropy_box`].
pub fn vn_entropy_orthant(params: &ModelParams, tol: f64) -> Result<EntropyValue> {
    let scale = (2.0f64).powi(params.dim as i32);
    let full = vn_entropy_full(params, tol * scale)?;
    Ok(EntropyValue {
        value: full.value / scale,
        kind: EntropyKind::FullSpace,
        domain: Some(RealBox {
            lo: vec![0.0; params.dim],
            hi: vec![f64::INFINITY; params.dim],
        }),
        est_abs_error: full.est_abs_error / scale,
    })
}

/// Integral over the cube `[0, zeta]^d`: nested adaptive quadrature for
/// `d <= 3`, Monte Carlo (error = one standard error) above.
pub fn vn_entropy_box(params: &ModelParams, zeta: f64, tol: f64) -> Result<EntropyValue> {
    params.validate()?;
    check_tol(tol)?;
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::InvalidArgument(format!("zeta must be positive, got {zeta}")));
    }
    let (value, est_abs_error) = if params.dim <= 3 {
        let mut y = vec![0.0; params.dim];
        let r = nested(params, zeta, tol, 0, &mut y)?;
        (r.value, r.abs_error)
    } else {
        monte_carlo_box(params, zeta)?
    };
    Ok(EntropyValue {
        value,
        kind: EntropyKind::Box,
        domain: Some(RealBox {
            lo: vec![0.0; params.dim],
            hi: vec![zeta; params.dim],
        }),
        est_abs_error,
    })
}

fn nested(params: &ModelParams, zeta: f64, tol: f64, axis: usize, y: &mut Vec<f64>) -> Result<quad::QuadResult> {
    let d = params.dim;
    let breaks = if d == 1 { params.dispersion.breakpoints() } else { Vec::new() };
    let mut failure = None;
    let last = axis + 1 == d;
    // inner integrals contribute at most zeta * inner_tol to the outer error
    let inner_tol = tol / (4.0 * zeta);
    let mut inner_err = 0.0f64;
    let res = quad::integrate(
        |x| {
            y[axis] = x;
            let out = if last {
                integrand(params, y)
            } else {
                nested(params, zeta, inner_tol, axis + 1, y).map(|r| {
                    inner_err = inner_err.max(r.abs_error);
                    r.value
                })
            };
            out.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            })
        },
        0.0,
        zeta,
        &breaks,
        if last { tol } else { tol / 2.0 },
        MAX_SEGMENTS,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(quad::QuadResult {
        abs_error: res.abs_error + zeta * inner_err,
        ..res
    })
}

fn monte_carlo_box(params: &ModelParams, zeta: f64) -> Result<(f64, f64)> {
    let mut rng = SplitMix::new(params.digest() ^ zeta.to_bits());
    let mut y = vec![0.0; params.dim];
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..MC_SAMPLES {
        for v in y.iter_mut() {
            *v = zeta * rng.next_f64();
        }
        let f = integrand(params, &y)?;
        s += f;
        s2 += f * f;
    }
    let n = MC_SAMPLES as f64;
    let vol = zeta.powi(params.dim as i32);
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    Ok((vol * mean, vol * (var / n).sqrt()))
}

/// `(1/L^d) sum_{n in region} E_n`.
pub fn riemann_entropy(params: &ModelParams, region: &Region) -> Result<EntropyValue> {
    params.validate()?;
    let l = params.l as f64;
    let mut sum = 0.0;
    for site in region.sites() {
        sum += entropy_from_exponent(params.statistics, params.exponent(&site))?;
    }
    Ok(EntropyValue {
        value: sum / params.volume(),
        kind: EntropyKind::RiemannSum,
        domain: Some(RealBox {
            lo: region.lo().iter().map(|&v| v as f64 / l).collect(),
            hi: (0..region.dim()).map(|a| (region.hi(a) + 1) as f64 / l).collect(),
        }),
        est_abs_error: 0.0,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{site_entropy, Dispersion, Statistics};

    fn bose11() -> ModelParams {
        ModelParams::bose(1.0, 1.0, 1, 4096).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn integrand_identities() {
        let p = bose11();
        for l in [2, 17, 4096] {
            let q = p.with_l(l).unwrap();
            assert_eq!(integrand(&q, &[0.0]).unwrap(), site_entropy(&q, &[0]).unwrap());
        }
        let f = ModelParams::fermi(1.0, 0.0, 1, 8).unwrap();
        assert!((integrand(&f, &[0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        let p2 = ModelParams::bose(1.0, 1.0, 2, 8).unwrap();
        let a = integrand(&p2, &[0.3, 0.4]).unwrap();
        let b = integrand(&p2, &[0.5, 0.0]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn fermi_maximum_where_energy_vanishes() {
        // mu = -theta(0.5) puts the Fermi level at |y| = 0.5
        let mu = -Dispersion::QuadraticPeriodic.eval(0.5);
        let f = ModelParams::fermi(1.0, mu, 1, 8).unwrap();
        assert!((integrand(&f, &[0.5]).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(integrand(&f, &[0.2]).unwrap() < 2f64.ln());
    }

    #[test]
    fn box_below_full_and_monotone() {
        for p in [bose11(), ModelParams::fermi(1.0, 0.0, 2, 8).unwrap()] {
            let full = vn_entropy_full(&p, 1e-9).unwrap();
            assert!(full.est_abs_error <= 1e-9);
            let b1 = vn_entropy_box(&p, 1.0, 1e-9).unwrap();
            let b2 = vn_entropy_box(&p, 2.0, 1e-9).unwrap();
            assert!(b2.value >= b1.value - 2e-9);
            assert!(full.value >= b2.value - 2e-9);
        }
    }

    #[test]
    fn box_converges_to_orthant() {
        let p = ModelParams::bose(1.0, 1.0, 2, 8).unwrap();
        let orth = vn_entropy_orthant(&p, 1e-9).unwrap();
        let mut prev = 0.0;
        for zeta in [0.25, 0.5, 1.0, 2.0] {
            let b = vn_entropy_box(&p, zeta, 1e-9).unwrap().value;
            assert!(b >= prev - 2e-9);
            prev = b;
        }
        assert!((prev - orth.value).abs() < 1e-8, "{prev} vs {}", orth.value);
    }

    #[test]
    fn tiny_box() {
        let p = bose11();
        let zeta = 1e-6;
        let b = vn_entropy_box(&p, zeta, 1e-9).unwrap().value;
        assert!(b > 0.0);
        assert!(b <= integrand(&p, &[0.0]).unwrap() * zeta * (1.0 + 1e-9));
    }

    #[test]
    fn two_dimensional_fermi_closed_form() {
        // mu = 0, theta = 4 pi^2 r^2: the radial integral reduces to pi^2/12 / (4 pi) per unit area
        let f = ModelParams::fermi(1.0, 0.0, 2, 8).unwrap();
        let h = vn_entropy_full(&f, 1e-10).unwrap().value;
        assert!((h - PI / 24.0).abs() < 1e-10, "{h}");
    }

    #[test]
    fn colder_source_has_less_entropy() {
        let mut prev = f64::INFINITY;
        for beta in [1.0, 2.0, 4.0, 8.0] {
            let p = ModelParams::bose(beta, 1.0, 1, 8).unwrap();
            let h = vn_entropy_full(&p, 1e-9).unwrap().value;
            assert!(h < prev);
            prev = h;
        }
    }

    #[test]
    fn flat_dispersion_diverges() {
        let d = Dispersion::tabulated(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        let p = ModelParams::new(Statistics::Bose, 1.0, 1.0, 1, d, 8, 1.0).unwrap();
        assert!(matches!(vn_entropy_full(&p, 1e-9), Err(Error::Divergence(_))));
    }

    #[test]
    fn three_dimensional_box_and_monte_carlo() {
        let p3 = ModelParams::fermi(1.0, 0.0, 3, 8).unwrap();
        let b3 = vn_entropy_box(&p3, 0.5, 1e-7).unwrap();
        let p4 = ModelParams::fermi(1.0, 0.0, 4, 8).unwrap();
        let b4 = vn_entropy_box(&p4, 0.5, 1e-7).unwrap();
        assert!(b4.est_abs_error > 0.0);
        // the 4-d box integral over [0, .5]^4 is bounded by sup f * volume
        assert!(b4.value < 2f64.ln() * 0.0625);
        assert!(b3.value < 2f64.ln() * 0.125 && b3.value > 0.0);
    }

    #[test]
    fn riemann_examples() {
        let p = bose11();
        let empty = Region::cube(1, 0, 1);
        assert_eq!(riemann_entropy(&p, &empty).unwrap().value, 0.0);
        let r = riemann_entropy(&p, &Region::cube(1, 4096, 1)).unwrap();
        let b = vn_entropy_box(&p, 1.0, 1e-9).unwrap();
        assert!(((r.value - b.value) / b.value).abs() < 1e-3);
    }
}
