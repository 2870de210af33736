use crate::trackdata::Hypothesis;

/// Dense cost matrix; `f64::INFINITY` marks a forbidden pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        CostMatrix { rows, cols, data }
    }

    pub fn forbidden(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![f64::INFINITY; rows * cols])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

/// Shortest augmenting path Hungarian method for `n <= m`; returns the
/// column of each row.
fn hungarian(cost: &[f64], n: usize, m: usize) -> Vec<usize> {
    debug_assert!(n <= m);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            let row = &cost[(i0 - 1) * m..i0 * m];
            for j in 1..=m {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Minimum-cost one-to-one matching. With `allow_skip` any row or column
/// may stay unmatched at zero cost, so only negative pairs are ever chosen;
/// otherwise `min(rows, cols)` pairs are matched. Forbidden pairs never
/// appear in the output. Pairs are sorted by row.
pub fn munkres_assign(c: &CostMatrix, allow_skip: bool) -> Vec<(usize, usize)> {
    if allow_skip {
        return assign_with_skip(c);
    }
    let finite: f64 = c.data.iter().filter(|v| v.is_finite()).map(|v| v.abs()).sum();
    let big = 1.0 + 2.0 * finite;
    let clean = |v: f64| if v.is_finite() { v } else { big };
    let pairs: Vec<(usize, usize)> = if c.rows <= c.cols {
        let data: Vec<f64> = c.data.iter().map(|&v| clean(v)).collect();
        hungarian(&data, c.rows, c.cols).into_iter().enumerate().collect()
    } else {
        let mut data = Vec::with_capacity(c.rows * c.cols);
        for j in 0..c.cols {
            for i in 0..c.rows {
                data.push(clean(c.get(i, j)));
            }
        }
        let mut p: Vec<(usize, usize)> = hungarian(&data, c.cols, c.rows)
            .into_iter()
            .enumerate()
            .map(|(j, i)| (i, j))
            .collect();
        p.sort_unstable();
        p
    };
    pairs.into_iter().filter(|&(i, j)| c.get(i, j).is_finite()).collect()
}

fn assign_with_skip(c: &CostMatrix) -> Vec<(usize, usize)> {
    let useful = |v: f64| v.is_finite() && v < 0.0;
    let rows: Vec<usize> = (0..c.rows).filter(|&i| (0..c.cols).any(|j| useful(c.get(i, j)))).collect();
    let cols: Vec<usize> = (0..c.cols).filter(|&j| rows.iter().any(|&i| useful(c.get(i, j)))).collect();
    if rows.is_empty() {
        return Vec::new();
    }
    // Real columns, then one zero-cost skip column per row. Unhelpful real
    // pairs cost 1 and lose to a free skip column.
    let (n, real) = (rows.len(), cols.len());
    let m = real + n;
    let mut data = vec![0.0; n * m];
    for (r, &i) in rows.iter().enumerate() {
        for (k, &j) in cols.iter().enumerate() {
            let v = c.get(i, j);
            data[r * m + k] = if useful(v) { v } else { 1.0 };
        }
    }
    hungarian(&data, n, m)
        .into_iter()
        .enumerate()
        .filter(|&(r, k)| k < real && useful(c.get(rows[r], cols[k])))
        .map(|(r, k)| (rows[r], cols[k]))
        .collect()
}

/// Munkres over a hypothesis list with per-hypothesis `values`; pairs
/// outside the list are forbidden. Returns selected hypothesis indices in
/// ascending order.
pub fn munkres_hypotheses(
    n_a: usize,
    n_b: usize,
    hyps: &[Hypothesis],
    values: &[f64],
    allow_skip: bool,
) -> Vec<usize> {
    let mut c = CostMatrix::forbidden(n_a, n_b);
    let mut index = vec![usize::MAX; n_a * n_b];
    for (k, (m, &v)) in hyps.iter().zip(values).enumerate() {
        c.set(m.i_a, m.j_b, v);
        index[m.i_a * n_b + m.j_b] = k;
    }
    let mut out: Vec<usize> = munkres_assign(&c, allow_skip)
        .into_iter()
        .map(|(i, j)| index[i * n_b + j])
        .collect();
    out.sort_unstable();
    out
}
