use serde::Serialize;

use super::partition::{horizontal_log_product, tau_from_tables, PathTables};
use super::Environment;
use crate::error::{Error, Result};

/// Values indexed by `1 ≤ l ≤ k ≤ K`, each either defined or undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangularArray {
    k_max: usize,
    entries: Vec<Option<f64>>,
}

impl TriangularArray {
    pub fn new(k_max: usize) -> Self {
        Self {
            k_max,
            entries: vec![None; k_max * (k_max + 1) / 2],
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    fn slot(&self, k: usize, l: usize) -> Result<usize> {
        if l == 0 || l > k || k > self.k_max {
            return Err(Error::IndexOutOfRange {
                what: "triangular entry",
                index: ((k as i64) << 32) | l as i64,
                valid: format!("1 ≤ l ≤ k ≤ {}", self.k_max),
            });
        }
        Ok(k * (k - 1) / 2 + (l - 1))
    }

    pub fn get(&self, k: usize, l: usize) -> Result<Option<f64>> {
        Ok(self.entries[self.slot(k, l)?])
    }

    pub fn set(&mut self, k: usize, l: usize, v: Option<f64>) -> Result<()> {
        let s = self.slot(k, l)?;
        self.entries[s] = v;
        Ok(())
    }

    /// Row `k` as `l = 1..=k`.
    pub fn row(&self, k: usize) -> Result<&[Option<f64>]> {
        let start = self.slot(k, 1)?;
        Ok(&self.entries[start..start + k])
    }
}

fn log_z_row(tables: &PathTables, env: &Environment, n: usize, k: usize, upto: usize) -> Result<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(upto);
    let mut prev = 0.0;
    for l in 1..=upto {
        if l > n {
            out.push(None);
            continue;
        }
        let tau = if l == k {
            horizontal_log_product(env, n, k)
        } else {
            tau_from_tables(tables, n, k, l)?
        };
        out.push(Some(tau - prev));
        prev = tau;
    }
    Ok(out)
}

/// `log z_{k,l}(n) = log τ_{k,l}(n) − log τ_{k,l−1}(n)` for all `1 ≤ l ≤ k ≤ K`;
/// entries with `n < l` are undefined.
pub fn z_array(env: &Environment, n: usize, k_max: usize) -> Result<TriangularArray> {
    env.check(n, k_max)?;
    let mut arr = TriangularArray::new(k_max);
    if n == 0 {
        return Ok(arr);
    }
    for k in 1..=k_max {
        let tables = PathTables::new(env, n, k)?;
        for (l, v) in log_z_row(&tables, env, n, k, k)?.into_iter().enumerate() {
            arr.set(k, l + 1, v)?;
        }
    }
    Ok(arr)
}

/// `L_{K,i}(n) = log y_i(n) = log z_{K,i}(n)` for `n` in a range of columns and
/// `i ≤ curves`; undefined where `i > n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolymerLineEnsemble {
    pub k: usize,
    pub n_first: usize,
    pub curves: usize,
    /// `values[n − n_first][i − 1]`
    pub values: Vec<Vec<Option<f64>>>,
}

impl PolymerLineEnsemble {
    pub fn get(&self, i: usize, n: usize) -> Option<f64> {
        if i == 0 || i > self.curves || n < self.n_first {
            return None;
        }
        self.values.get(n - self.n_first).and_then(|row| row[i - 1])
    }

    pub fn n_last(&self) -> usize {
        self.n_first + self.values.len() - 1
    }

    /// Curve `i` over the whole column range, failing if any value is undefined.
    pub fn curve(&self, i: usize) -> Result<Vec<f64>> {
        (self.n_first..=self.n_last())
            .map(|n| {
                self.get(i, n)
                    .ok_or_else(|| Error::OutsideDefinedRegion(format!("L_{{{},{i}}}({n}) is undefined", self.k)))
            })
            .collect()
    }
}

/// The polymer line ensemble `L_{K,i}(n)` for `n ∈ n_first..=n_last`, `i ≤ curves ≤ K`.
pub fn build_line_ensemble(
    env: &Environment,
    k: usize,
    n_first: usize,
    n_last: usize,
    curves: usize,
) -> Result<PolymerLineEnsemble> {
    if curves == 0 || curves > k {
        return Err(Error::param("curves", format!("need 1 ≤ curves ≤ K = {k}, got {curves}")));
    }
    if n_first == 0 || n_first > n_last {
        return Err(Error::param("columns", format!("need 1 ≤ n_first ≤ n_last, got {n_first}..={n_last}")));
    }
    env.check(n_last, k)?;
    let tables = PathTables::new(env, n_last, k)?;
    let values = (n_first..=n_last)
        .map(|n| log_z_row(&tables, env, n, k, curves))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolymerLineEnsemble {
        k,
        n_first,
        curves,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::super::partition::tau_log;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn z_array_is_a_ratio_of_taus() {
        let env = Environment::sample(2.0, 6, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let z = z_array(&env, 3, 4).unwrap();
        for k in 1..=4 {
            for l in 1..=k {
                match z.get(k, l).unwrap() {
                    None => assert!(l > 3),
                    Some(v) => {
                        let want = tau_log(&env, 3, k, l).unwrap() - tau_log(&env, 3, k, l - 1).unwrap();
                        assert!((v - want).abs() < 1e-12);
                    }
                }
            }
        }
        assert!(z.get(5, 1).is_err());
        assert!(z.get(2, 3).is_err());
    }

    #[test]
    fn single_site_array() {
        let env = Environment::from_weights(1.0, &[vec![2.0]]).unwrap();
        let z = z_array(&env, 1, 1).unwrap();
        assert!((z.get(1, 1).unwrap().unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn line_ensemble_matches_bottom_row_and_is_ordered_on_average() {
        let env = Environment::sample(4.0, 12, 3, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let le = build_line_ensemble(&env, 3, 1, 12, 3).unwrap();
        for n in 1..=12 {
            let z = z_array(&env, n, 3).unwrap();
            for i in 1..=3 {
                assert_eq!(le.get(i, n).is_some(), i <= n);
                if let (Some(a), Some(b)) = (le.get(i, n), z.get(3, i).unwrap()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
        assert!(le.curve(3).is_err());
        assert_eq!(le.curve(1).unwrap().len(), 12);
    }
}
