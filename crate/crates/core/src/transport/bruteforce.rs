use super::sq_dist;
use crate::error::{Error, Result};
use crate::measure::PointConfiguration;

const MAX_N: usize = 8;

/// W2 between equal-size uniform atom sets by enumerating permutations.
pub fn w2_bruteforce(a: &PointConfiguration, b: &PointConfiguration) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let n = a.len();
    if n > MAX_N {
        return Err(Error::TooLarge(format!("brute force limited to {MAX_N} atoms, got {n}")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let cost: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| sq_dist(a.point(i), b.point(j)))
        .collect();
    // Heap's algorithm.
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>();
    let mut best = eval(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok((best / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let a = PointConfiguration::from_points(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let b = PointConfiguration::from_points(&[[0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((w2_bruteforce(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(w2_bruteforce(&a, &a).unwrap(), 0.0);
        let x = PointConfiguration::from_points(&[[0.3, 0.4]]).unwrap();
        let y = PointConfiguration::from_points(&[[0.0, 0.0]]).unwrap();
        assert!((w2_bruteforce(&x, &y).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_large_or_mismatched() {
        let big = PointConfiguration::new(1, (0..9).map(|i| i as f64).collect()).unwrap();
        assert!(matches!(w2_bruteforce(&big, &big), Err(Error::TooLarge(_))));
        let one = PointConfiguration::new(1, vec![0.0]).unwrap();
        assert!(matches!(w2_bruteforce(&big, &one), Err(Error::SizeMismatch { .. })));
    }
}
