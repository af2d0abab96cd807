//! Exhaustive model search over all assignments, ascending. Only suitable as
//! a cross-check on small documents; refuses more than 20 variables.

use super::SatError;

pub(super) fn solve(
    nvars: usize,
    clauses: &[Vec<i32>],
    assumptions: &[i32],
) -> Result<Option<Vec<bool>>, SatError> {
    if nvars > 20 {
        return Err(SatError::EnumerationTooLarge(nvars as u32));
    }
    'outer: for k in 0..(1u64 << nvars) {
        let value = |l: i32| -> bool {
            let bit = k >> (l.unsigned_abs() - 1) & 1 == 1;
            if l > 0 {
                bit
            } else {
                !bit
            }
        };
        for &a in assumptions {
            if !value(a) {
                continue 'outer;
            }
        }
        for clause in clauses {
            if !clause.iter().any(|&l| value(l)) {
                continue 'outer;
            }
        }
        return Ok(Some((0..nvars).map(|v| k >> v & 1 == 1).collect()));
    }
    Ok(None)
}
