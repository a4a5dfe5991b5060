use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub mse: f64,
    pub nonzeros: usize,
}

/// Positions of the non-dominated points, ordered by nonzeros then MSE.
/// A point is dominated when another is no worse in both coordinates and
/// strictly better in one. Points with non-finite MSE are ignored.
pub fn pareto_front(points: &[TradeoffPoint]) -> Vec<usize> {
    let mut front: Vec<usize> = (0..points.len())
        .filter(|&i| {
            let p = points[i];
            p.mse.is_finite()
                && !points.iter().any(|q| {
                    q.mse.is_finite()
                        && q.mse <= p.mse
                        && q.nonzeros <= p.nonzeros
                        && (q.mse < p.mse || q.nonzeros < p.nonzeros)
                })
        })
        .collect();
    front.sort_by(|&a, &b| {
        let (p, q) = (points[a], points[b]);
        p.nonzeros.cmp(&q.nonzeros).then(p.mse.total_cmp(&q.mse)).then(a.cmp(&b))
    });
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[(f64, usize)]) -> Vec<TradeoffPoint> {
        rows.iter().map(|&(mse, nonzeros)| TradeoffPoint { mse, nonzeros }).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(pareto_front(&pts(&[(1.0, 10), (2.0, 5), (3.0, 7)])), vec![1, 0]);
        assert_eq!(pareto_front(&pts(&[(1.0, 5), (1.0, 6)])), vec![0]);
        assert_eq!(pareto_front(&pts(&[])), Vec::<usize>::new());
        assert_eq!(pareto_front(&pts(&[(f64::NAN, 1), (2.0, 3)])), vec![1]);
    }

    #[test]
    fn duplicates_are_kept() {
        assert_eq!(pareto_front(&pts(&[(1.0, 5), (1.0, 5)])), vec![0, 1]);
    }
}
