use super::squared_distance;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

const MAX_ATOMS: usize = 8;

/// Exhaustive minimum over permutation couplings.
///
/// For two uniform measures with the same number of atoms the transport
/// polytope's vertices are the permutation matrices scaled by `1/m`, so the
/// minimum over all `m!` permutations is the exact optimum.
pub fn w2_squared_bruteforce(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let m = mu.len();
    if m != nu.len() || m > MAX_ATOMS || !mu.is_uniform() || !nu.is_uniform() {
        return Err(Error::UnsupportedInstance(format!(
            "brute force needs two uniform measures with equal atom counts <= {MAX_ATOMS} (got {} and {})",
            mu.len(),
            nu.len()
        )));
    }
    let cost: Vec<f64> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| squared_distance(mu.point(i), nu.point(j)))
        .collect();
    let eval = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| cost[i * m + j])
            .sum::<f64>()
    };

    // Heap's algorithm, iterative
    let mut perm: Vec<usize> = (0..m).collect();
    let mut counters = vec![0usize; m];
    let mut best = eval(&perm);
    let mut i = 1;
    while i < m {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.min(eval(&perm));
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(best / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::uniform(points.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn hand_computed() {
        assert_eq!(
            w2_squared_bruteforce(&line(&[0.0, 1.0]), &line(&[0.0, 1.0])).unwrap(),
            0.0
        );
        assert_eq!(
            w2_squared_bruteforce(&line(&[0.0, 1.0]), &line(&[2.0, 3.0])).unwrap(),
            4.0
        );
        // crossing matching would cost (9 + 1) / 2 = 5
        assert_eq!(
            w2_squared_bruteforce(&line(&[1.0, 0.0]), &line(&[2.0, 3.0])).unwrap(),
            4.0
        );
    }

    #[test]
    fn unsupported_instances() {
        let nonuniform = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            w2_squared_bruteforce(&nonuniform, &line(&[0.0, 1.0])),
            Err(Error::UnsupportedInstance(_))
        ));
        let nine: Vec<f64> = (0..9).map(f64::from).collect();
        assert!(w2_squared_bruteforce(&line(&nine), &line(&nine)).is_err());
        assert!(w2_squared_bruteforce(&line(&[0.0]), &line(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn visits_every_permutation() {
        // only the reversal of 0..6 has zero cost against reversed targets
        let a = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = DiscreteMeasure::uniform((0..6).rev().map(|x| vec![x as f64]).collect()).unwrap();
        assert_eq!(w2_squared_bruteforce(&a, &b).unwrap(), 0.0);
    }
}
