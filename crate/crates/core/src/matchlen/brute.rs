use super::{check_window, Grid, MatchLengthField};
use crate::error::Result;
use crate::lattice::Region;
use crate::source::OccupationArray;

/// Direct transcription of the definition: grow `s` and discard partners
/// whose box differs, until none are left.
pub fn match_lengths_brute(array: &OccupationArray, window: &Region) -> Result<MatchLengthField> {
    let margin = check_window(array, window)?;
    let grid = Grid::new(array);
    let corners: Vec<Vec<i64>> = window.sites().collect();
    let mut lengths = Vec::with_capacity(corners.len());
    let mut saturated = Vec::with_capacity(corners.len());
    let mut offset = vec![0i64; grid.dim()];

    for (i, u) in corners.iter().enumerate() {
        let mut partners: Vec<usize> = (0..corners.len()).filter(|&j| j != i).collect();
        let mut sat = false;
        let settle_u = grid.settle_side(u);
        let mut s = 1usize;
        let r = loop {
            if !grid.vacuum() {
                if !partners.is_empty() && !grid.fits(u, s) {
                    sat = true;
                    break Some(s as u32);
                }
                let before = partners.len();
                partners.retain(|&j| grid.fits(&corners[j], s));
                sat |= partners.len() < before;
            }
            partners.retain(|&j| grid.shell_equal(u, &corners[j], s, &mut offset));
            if partners.is_empty() {
                break Some(s as u32);
            }
            if grid.vacuum() && s >= settle_u && partners.iter().all(|&j| s >= grid.settle_side(&corners[j])) {
                break None;
            }
            s += 1;
        };
        lengths.push(r);
        saturated.push(sat);
    }
    Ok(MatchLengthField::new(window.clone(), lengths, saturated, margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::Statistics;

    fn field_1d(values: Vec<u32>, window: usize, vacuum: bool) -> MatchLengthField {
        let a = OccupationArray::from_1d(values, Statistics::Bose).with_vacuum_outside(vacuum);
        match_lengths_brute(&a, &Region::cube(1, window, 1)).unwrap()
    }

    #[test]
    fn small_examples() {
        let f = field_1d(vec![0, 1, 0, 0, 2, 3, 4, 5], 4, false);
        assert_eq!(f.lengths(), &[Some(2), Some(1), Some(2), Some(2)]);
        assert_eq!(f.saturation_count(), 0);
        let f = field_1d(vec![5, 5, 5, 5, 7, 8, 9, 10], 4, false);
        assert_eq!(f.lengths(), &[Some(4), Some(4), Some(3), Some(2)]);
        let f = field_1d(vec![9, 4, 7, 1, 3], 5, false);
        assert!(f.lengths().iter().all(|&r| r == Some(1)));
    }

    #[test]
    fn open_buffer_end_saturates() {
        // every box of the constant buffer keeps a partner until it runs out
        let f = field_1d(vec![2; 6], 4, false);
        assert_eq!(f.lengths(), &[Some(6), Some(6), Some(5), Some(4)]);
        assert_eq!(f.saturation_count(), 4);
    }

    #[test]
    fn vacuum_tail_is_unbounded() {
        let f = field_1d(vec![1, 0, 0, 0], 4, true);
        assert_eq!(f.lengths(), &[Some(1), None, None, None]);
        assert_eq!(f.saturation_count(), 0);
        let f = field_1d(vec![1, 0, 1, 0], 4, true);
        assert_eq!(f.lengths(), &[Some(3), Some(2), Some(3), Some(2)]);
    }

    #[test]
    fn window_outside_array_is_rejected() {
        let a = OccupationArray::from_1d(vec![0, 1], Statistics::Fermi);
        assert!(match_lengths_brute(&a, &Region::cube(1, 3, 1)).is_err());
    }
}
