use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mse: f64,
    pub nonzeros: usize,
    pub decoder: usize,
}

/// Among candidates whose MSE is within `(1 + tolerance)` of the smallest
/// finite MSE, picks the fewest nonzero weights; ties go to lower MSE, then
/// to the smaller decoder index. Returns a position in `candidates`.
pub fn select_best(candidates: &[Candidate], tolerance: f64) -> Result<usize> {
    let min = candidates
        .iter()
        .map(|c| c.mse)
        .filter(|m| m.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::NoResult);
    }
    let bound = (1.0 + tolerance) * min;
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.mse.is_finite() && c.mse <= bound)
        .min_by(|(_, a), (_, b)| {
            a.nonzeros
                .cmp(&b.nonzeros)
                .then(a.mse.total_cmp(&b.mse))
                .then(a.decoder.cmp(&b.decoder))
        })
        .map(|(i, _)| i)
        .ok_or(Error::NoResult)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(rows: &[(f64, usize)]) -> Vec<Candidate> {
        rows.iter()
            .enumerate()
            .map(|(i, &(mse, nonzeros))| Candidate {
                mse,
                nonzeros,
                decoder: i + 1,
            })
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(select_best(&cands(&[(1.0, 10), (1.04, 5), (2.0, 2)]), 0.05).unwrap(), 1);
        assert_eq!(select_best(&cands(&[(3.0, 7)]), 0.05).unwrap(), 0);
        assert_eq!(select_best(&cands(&[(1.0, 9), (1.2, 1)]), 0.05).unwrap(), 0);
    }

    #[test]
    fn all_non_finite_is_an_error() {
        assert!(matches!(
            select_best(&cands(&[(f64::NAN, 1), (f64::INFINITY, 2)]), 0.05),
            Err(Error::NoResult)
        ));
    }
}
