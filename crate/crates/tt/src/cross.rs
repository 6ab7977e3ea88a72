//! Greedy cross (skeleton) selection on small dense matrices.

/// Chooses up to `r` rows of the row-major `m × c` matrix `a` by Gaussian
/// elimination with complete pivoting, so the first pick holds the entry of
/// largest magnitude. When the matrix has numerical rank below `r`, the
/// remaining slots go to unpicked rows ordered by their largest entry.
pub fn select_rows(a: &[f64], m: usize, c: usize, r: usize) -> Vec<usize> {
    debug_assert_eq!(a.len(), m * c);
    let r = r.min(m);
    let mut e = a.to_vec();
    let mut picked: Vec<usize> = Vec::with_capacity(r);
    let mut first = 0.0f64;
    while picked.len() < r.min(c) {
        let mut best = (0usize, 0usize, 0.0f64);
        for i in 0..m {
            for j in 0..c {
                let v = e[i * c + j].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (pi, pj, pv) = best;
        if picked.is_empty() {
            first = pv;
        }
        if pv == 0.0 || pv <= 1e-12 * first {
            break;
        }
        picked.push(pi);
        let piv = e[pi * c + pj];
        let row: Vec<f64> = e[pi * c..(pi + 1) * c].to_vec();
        for i in 0..m {
            let f = e[i * c + pj] / piv;
            if f != 0.0 {
                for j in 0..c {
                    e[i * c + j] -= f * row[j];
                }
            }
        }
    }
    if picked.len() < r {
        let mut rest: Vec<usize> = (0..m).filter(|i| !picked.contains(i)).collect();
        let row_max = |i: usize| a[i * c..(i + 1) * c].iter().fold(0.0f64, |s, v| s.max(v.abs()));
        rest.sort_by(|&x, &y| row_max(y).total_cmp(&row_max(x)).then(x.cmp(&y)));
        picked.extend(rest.into_iter().take(r - picked.len()));
    }
    picked
}

/// Column counterpart of [`select_rows`].
pub fn select_cols(a: &[f64], m: usize, c: usize, r: usize) -> Vec<usize> {
    let mut t = vec![0.0; a.len()];
    for i in 0..m {
        for j in 0..c {
            t[j * m + i] = a[i * c + j];
        }
    }
    select_rows(&t, c, m, r)
}
