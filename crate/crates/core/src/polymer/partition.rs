use super::Environment;
use crate::error::{Error, Result};
use crate::stats::logaddexp;

/// `log Z` of all up-right paths from `(1, r)` to every `(i, j)`, `j ≥ r`,
/// for every start row `r = 1..=rows` and columns `i ≤ n`.
#[derive(Debug, Clone)]
pub struct PathTables {
    n: usize,
    rows: usize,
    // table[r-1][(i-1)*rows + (j-1)]
    tables: Vec<Vec<f64>>,
}

impl PathTables {
    pub fn new(env: &Environment, n: usize, rows: usize) -> Result<Self> {
        env.check(n, rows)?;
        let mut tables = Vec::with_capacity(rows);
        for r in 1..=rows {
            let mut t = vec![f64::NEG_INFINITY; n * rows];
            for i in 1..=n {
                for j in r..=rows {
                    let from_left = if i > 1 { t[(i - 2) * rows + (j - 1)] } else { f64::NEG_INFINITY };
                    let from_below = if j > r { t[(i - 1) * rows + (j - 2)] } else { f64::NEG_INFINITY };
                    let acc = if i == 1 && j == r { 0.0 } else { logaddexp(from_left, from_below) };
                    t[(i - 1) * rows + (j - 1)] = acc + env.log_weight(i, j);
                }
            }
            tables.push(t);
        }
        Ok(Self { n, rows, tables })
    }

    /// `log Z((1, r) → (i, j))`; `−∞` when no path exists.
    #[inline]
    pub fn get(&self, r: usize, i: usize, j: usize) -> f64 {
        if r == 0 || r > self.rows || i == 0 || i > self.n || j < r || j > self.rows {
            return f64::NEG_INFINITY;
        }
        self.tables[r - 1][(i - 1) * self.rows + (j - 1)]
    }

    pub fn columns(&self) -> usize {
        self.n
    }
}

/// `log` of the sum over up-right paths from `(1, r)` to `(n, m)` of the product of site weights.
pub fn single_path_log_partition(env: &Environment, r: usize, n: usize, m: usize) -> Result<f64> {
    env.check(n, m.max(r))?;
    if r == 0 || n == 0 || m < r {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(PathTables::new(env, n, m)?.get(r, n, m))
}

/// `log |det|` of `exp(a)` for an `l×l` matrix of logs, after row and column
/// rescaling so that the largest entry in each row is 1. Returns `None` when
/// the determinant is not strictly positive.
pub(crate) fn log_det_positive(a: &[f64], l: usize) -> Option<f64> {
    let mut shift = 0.0;
    let mut m = a.to_vec();
    for r in 0..l {
        let row = &mut m[r * l..(r + 1) * l];
        let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if mx == f64::NEG_INFINITY {
            return None;
        }
        shift += mx;
        for x in row.iter_mut() {
            *x -= mx;
        }
    }
    for c in 0..l {
        let mx = (0..l).map(|r| m[r * l + c]).fold(f64::NEG_INFINITY, f64::max);
        if mx == f64::NEG_INFINITY {
            return None;
        }
        shift += mx;
        for r in 0..l {
            m[r * l + c] -= mx;
        }
    }
    let mut x: Vec<f64> = m.iter().map(|v| v.exp()).collect();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for col in 0..l {
        let piv = (col..l)
            .max_by(|&p, &q| x[p * l + col].abs().total_cmp(&x[q * l + col].abs()))
            .expect("nonempty");
        let pv = x[piv * l + col];
        if pv == 0.0 || !pv.is_finite() {
            return None;
        }
        if piv != col {
            for c in 0..l {
                x.swap(piv * l + c, col * l + c);
            }
            sign = -sign;
        }
        if pv < 0.0 {
            sign = -sign;
        }
        log_abs += pv.abs().ln();
        for r in col + 1..l {
            let f = x[r * l + col] / pv;
            if f != 0.0 {
                for c in col..l {
                    x[r * l + c] -= f * x[col * l + c];
                }
            }
        }
    }
    (sign > 0.0).then_some(shift + log_abs)
}

/// `log τ_{k,l}(n)`: the log-partition function of `l` vertex-disjoint
/// up-right paths, path `r` running from `(1, r)` to `(n, k − l + r)`.
///
/// Computed as a determinant of single-path partition functions. `l = 0`
/// gives `0`; the all-horizontal case `l = k` is the closed product of the
/// weights in the first `k` rows; `n < l < k` admits no tuple and gives `−∞`.
pub fn tau_log(env: &Environment, n: usize, k: usize, l: usize) -> Result<f64> {
    if l > k {
        return Err(Error::param("l", format!("need l ≤ k, got l = {l}, k = {k}")));
    }
    env.check(n, k)?;
    if l == 0 {
        return Ok(0.0);
    }
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if l == k {
        return Ok(horizontal_log_product(env, n, k));
    }
    if n < l {
        return Ok(f64::NEG_INFINITY);
    }
    let tables = PathTables::new(env, n, k)?;
    tau_from_tables(&tables, n, k, l)
}

pub(crate) fn horizontal_log_product(env: &Environment, n: usize, k: usize) -> f64 {
    // Plain summation loses ~1e-12 relative on τ for large n·k.
    crate::stats::compensated_sum((1..=n).flat_map(|i| (1..=k).map(move |j| env.log_weight(i, j))))
}

pub(crate) fn tau_from_tables(tables: &PathTables, n: usize, k: usize, l: usize) -> Result<f64> {
    let mut a = vec![0.0; l * l];
    for r in 1..=l {
        for s in 1..=l {
            a[(r - 1) * l + (s - 1)] = tables.get(r, n, k - l + s);
        }
    }
    log_det_positive(&a, l).ok_or_else(|| Error::DeterminantDegeneracy {
        k,
        l,
        n,
        detail: "is not strictly positive".into(),
    })
}

/// Default cap on the number of single paths enumerated by [`tau_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 10_000;

/// Sites of every up-right path from `(1, r)` to `(n, e)`, as bitmasks over
/// the `n × k` grid.
fn enumerate_paths(env: &Environment, n: usize, k: usize, r: usize, e: usize, out: &mut Vec<(Vec<u64>, f64)>) {
    let words = (n * k).div_ceil(64);
    let bit = |i: usize, j: usize| (i - 1) * k + (j - 1);
    fn walk(
        env: &Environment,
        i: usize,
        j: usize,
        n: usize,
        e: usize,
        mask: &mut Vec<u64>,
        w: f64,
        bit: &dyn Fn(usize, usize) -> usize,
        out: &mut Vec<(Vec<u64>, f64)>,
    ) {
        let b = bit(i, j);
        mask[b / 64] |= 1 << (b % 64);
        let w = w + env.log_weight(i, j);
        if i == n && j == e {
            out.push((mask.clone(), w));
        } else {
            if i < n {
                walk(env, i + 1, j, n, e, mask, w, bit, out);
            }
            if j < e {
                walk(env, i, j + 1, n, e, mask, w, bit, out);
            }
        }
        mask[b / 64] &= !(1 << (b % 64));
    }
    let mut mask = vec![0u64; words];
    walk(env, 1, r, n, e, &mut mask, 0.0, &bit, out);
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `log τ_{k,l}(n)` by explicit enumeration of all vertex-disjoint path tuples.
/// Intended as an oracle for tiny instances.
pub fn tau_bruteforce(env: &Environment, n: usize, k: usize, l: usize, limit: usize) -> Result<f64> {
    if l > k {
        return Err(Error::param("l", format!("need l ≤ k, got l = {l}, k = {k}")));
    }
    env.check(n, k)?;
    if l == 0 {
        return Ok(0.0);
    }
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    // Each path makes n − 1 right steps and k − l up steps.
    let per_path = binomial(n - 1 + k - l, k - l);
    let count = per_path * l as f64;
    if count > limit as f64 {
        return Err(Error::FeasibilityGuard {
            count: count.min(usize::MAX as f64) as usize,
            limit,
        });
    }
    let families: Vec<Vec<(Vec<u64>, f64)>> = (1..=l)
        .map(|r| {
            let mut v = Vec::new();
            enumerate_paths(env, n, k, r, k - l + r, &mut v);
            v
        })
        .collect();
    let mut total = f64::NEG_INFINITY;
    let words = (n * k).div_ceil(64);
    fn extend(
        families: &[Vec<(Vec<u64>, f64)>],
        depth: usize,
        used: &mut Vec<u64>,
        w: f64,
        total: &mut f64,
    ) {
        if depth == families.len() {
            *total = logaddexp(*total, w);
            return;
        }
        for (mask, pw) in &families[depth] {
            if mask.iter().zip(used.iter()).any(|(a, b)| a & b != 0) {
                continue;
            }
            for (u, m) in used.iter_mut().zip(mask) {
                *u |= m;
            }
            extend(families, depth + 1, used, w + pw, total);
            for (u, m) in used.iter_mut().zip(mask) {
                *u &= !m;
            }
        }
    }
    let mut used = vec![0u64; words];
    extend(&families, 0, &mut used, 0.0, &mut total);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(seed: u64, gamma: f64, n: usize, k: usize) -> Environment {
        Environment::sample(gamma, n, k, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn two_by_two_by_hand() {
        // weights d(1,1)=1, d(2,1)=2, d(1,2)=3, d(2,2)=4
        let e = Environment::from_weights(1.0, &[vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        // Z((1,1)→(2,2)) = 1·4·(2 + 3) = 20
        assert!((single_path_log_partition(&e, 1, 2, 2).unwrap() - 20f64.ln()).abs() < 1e-14);
        // τ_{2,1}(2) is the same single path sum
        assert!((tau_log(&e, 2, 2, 1).unwrap() - 20f64.ln()).abs() < 1e-14);
        // τ_{2,2}(2): both paths horizontal, product of all weights = 24
        assert!((tau_log(&e, 2, 2, 2).unwrap() - 24f64.ln()).abs() < 1e-14);
        assert!((tau_bruteforce(&e, 2, 2, 2, 100).unwrap() - 24f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn determinant_agrees_with_enumeration() {
        for seed in 0..5 {
            let e = env(seed, 3.0, 5, 3);
            for n in 0..=5 {
                for k in 1..=3 {
                    for l in 0..=k {
                        let a = tau_log(&e, n, k, l).unwrap();
                        let b = tau_bruteforce(&e, n, k, l, BRUTEFORCE_LIMIT).unwrap();
                        if b == f64::NEG_INFINITY {
                            assert_eq!(a, b, "n={n} k={k} l={l}");
                        } else {
                            assert!(((a - b) / b.abs().max(1.0)).abs() < 1e-12, "n={n} k={k} l={l}: {a} vs {b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn short_environments_admit_only_horizontal_tuples() {
        let e = env(1, 1.0, 4, 6);
        assert_eq!(tau_log(&e, 1, 3, 2).unwrap(), f64::NEG_INFINITY);
        assert_eq!(tau_bruteforce(&e, 1, 3, 2, 100).unwrap(), f64::NEG_INFINITY);
        let want = horizontal_log_product(&e, 2, 5);
        assert!((tau_log(&e, 2, 5, 5).unwrap() - want).abs() < 1e-12);
        assert!((tau_bruteforce(&e, 2, 5, 5, 100).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn guard_and_argument_errors() {
        let e = env(2, 1.0, 30, 8);
        assert!(matches!(tau_bruteforce(&e, 30, 8, 2, 100), Err(Error::FeasibilityGuard { .. })));
        assert!(tau_log(&e, 3, 2, 3).is_err());
        assert!(tau_log(&e, 31, 2, 1).is_err());
    }

    #[test]
    fn log_det_of_known_matrices() {
        let a = [2f64.ln(), 1f64.ln(), 1f64.ln(), 3f64.ln()];
        assert!((log_det_positive(&a, 2).unwrap() - 5f64.ln()).abs() < 1e-14);
        // det [[1, 2], [3, 4]] = −2
        let b = [0.0, 2f64.ln(), 3f64.ln(), 4f64.ln()];
        assert!(log_det_positive(&b, 2).is_none());
        // huge dynamic range
        let c = [800.0, 0.0, -500.0, 900.0];
        assert!((log_det_positive(&c, 2).unwrap() - 1700.0).abs() < 1e-12);
    }
}
