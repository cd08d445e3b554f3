//! Exhaustive optimal-coupling oracle for small equal-size measures.

/// Minimum over all `m!` pairings of the mean squared cost between two
/// uniform `m`-atom measures (Heap's algorithm).
///
/// # Panics
/// If the slices differ in length or are empty.
pub fn w2_squared_brute(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let m = a.len();
    let mut perm: Vec<usize> = (0..m).collect();
    let cost = |p: &[usize]| a.iter().zip(p).map(|(x, &j)| (x - b[j]).powi(2)).sum::<f64>();
    let mut best = cost(&perm);
    let mut c = vec![0usize; m];
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visits_every_pairing() {
        // a single pairing has cost 0, every other one is positive
        let a = [0.0, 10.0, 20.0, 30.0, 40.0];
        let b = [30.0, 0.0, 40.0, 10.0, 20.0];
        assert_eq!(w2_squared_brute(&a, &b), 0.0);
        assert_eq!(w2_squared_brute(&[0.0, 1.0, 2.0], &[5.0, 1.0, 9.0]), 22.0);
    }
}
