use super::{match_lengths, uniform_bound_constant, MatchLengthField};
use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::source::{sample_array, support_radius, ModelParams, OccupationArray};

/// How far beyond the window the source is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginPolicy {
    /// Sample out to the support radius and treat everything beyond as
    /// vacuum. Lengths are exact; some may be unbounded.
    Support { tail_tol: f64 },
    /// Open array with a finite margin, doubled on saturation. `initial = 0`
    /// derives the margin from the uniform bound constant, capped at the
    /// window side.
    Doubling { initial: usize, max_doublings: u32 },
}

impl Default for MarginPolicy {
    fn default() -> Self {
        MarginPolicy::Support { tail_tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct FieldRun {
    pub array: OccupationArray,
    pub field: MatchLengthField,
    pub doublings: u32,
}

/// Samples the source for `params` under `seed` and computes the match
/// lengths over the window `B(1, ceil(zeta L))`.
pub fn sample_field(params: &ModelParams, seed: u64, policy: MarginPolicy) -> Result<FieldRun> {
    params.validate()?;
    let window = params.window();
    let side = params.window_side();
    match policy {
        MarginPolicy::Support { tail_tol } => {
            let r = support_radius(params, tail_tol)?;
            let sampled = side.max(r.max(0) as usize);
            let array = sample_array(params, &Region::cube(1, sampled, params.dim), seed)?.with_vacuum_outside(true);
            let field = match_lengths(&array, &window)?;
            Ok(FieldRun {
                array,
                field,
                doublings: 0,
            })
        }
        MarginPolicy::Doubling { initial, max_doublings } => {
            let mut margin = if initial > 0 {
                initial
            } else {
                let c = uniform_bound_constant(params);
                let guess = 4.0 * (c * (params.l as f64).ln()).ceil();
                if guess.is_finite() {
                    (guess as usize).clamp(1, side)
                } else {
                    side
                }
            };
            let mut doublings = 0;
            loop {
                let array = sample_array(params, &Region::cube(1, side + margin, params.dim), seed)?;
                let field = match_lengths(&array, &window)?;
                if field.saturation_count() == 0 || doublings >= max_doublings {
                    return Ok(FieldRun {
                        array,
                        field,
                        doublings,
                    });
                }
                margin = margin.checked_mul(2).ok_or_else(|| Error::Saturated {
                    count: field.saturation_count(),
                })?;
                doublings += 1;
            }
        }
    }
}
