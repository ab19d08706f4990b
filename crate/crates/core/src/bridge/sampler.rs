use rand::Rng;

use super::DiscreteIncrementLaw;
use crate::error::{Error, Result};

/// Log-probabilities on a contiguous range of lattice states `lo, lo+1, ...`.
#[derive(Debug, Clone)]
pub(crate) struct LogTable {
    pub lo: i64,
    pub values: Vec<f64>,
}

impl LogTable {
    #[inline]
    pub fn get(&self, v: i64) -> f64 {
        let i = v - self.lo;
        if i < 0 || i as usize >= self.values.len() {
            f64::NEG_INFINITY
        } else {
            self.values[i as usize]
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    /// Drops entries from both ends that are `−∞` or more than `slack` nats below the row maximum.
    fn pruned(mut self, slack: f64) -> Self {
        let top = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return LogTable { lo: self.lo, values: Vec::new() };
        }
        let keep = |x: &f64| *x > f64::NEG_INFINITY && *x >= top - slack;
        let a = self.values.iter().position(keep).unwrap_or(0);
        let b = self.values.iter().rposition(keep).unwrap_or(a);
        self.values.truncate(b + 1);
        self.values.drain(..a);
        self.lo += a as i64;
        self
    }
}

/// Backward tables drop states whose reach probability is this many nats below the best
/// state of the same row. Without it, long bridges with wide laws are quadratic in the
/// number of steps.
const H_PRUNE_NATS: f64 = 200.0;

/// `out(v) = log Σ_j exp(lp[j] + t(v + sign·j))` over `v ∈ [lo, hi]`.
fn convolve_log(law: &DiscreteIncrementLaw, t: &LogTable, lo: i64, hi: i64, sign: i64, slack: f64) -> LogTable {
    let lp = law.log_probs();
    // Only v with some v + sign·j inside the support of t can be finite.
    let (reach_lo, reach_hi) = if sign > 0 {
        (t.lo - law.jmax(), t.hi() - law.jmin())
    } else {
        (t.lo + law.jmin(), t.hi() + law.jmax())
    };
    let lo = lo.max(reach_lo);
    let hi = hi.min(reach_hi);
    let mut values = Vec::with_capacity((hi - lo + 1).max(0) as usize);
    let mut terms: Vec<f64> = Vec::with_capacity(lp.len());
    for v in lo..=hi {
        terms.clear();
        let mut m = f64::NEG_INFINITY;
        for (idx, &p) in lp.iter().enumerate() {
            let j = law.jmin() + idx as i64;
            let x = p + t.get(v + sign * j);
            if x > m {
                m = x;
            }
            terms.push(x);
        }
        if m == f64::NEG_INFINITY {
            values.push(m);
            continue;
        }
        let s: f64 = terms.iter().map(|x| (x - m).exp()).sum();
        values.push(m + s.ln());
    }
    LogTable { lo, values }.pruned(slack)
}

/// Exact sampler for a random walk bridge on the δ-lattice via Doob's h-transform.
///
/// States are lattice offsets from `start`; `h[m](v)` is the log-probability
/// that the free walk at offset `v` after `m` steps ends at the target offset.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    law: DiscreteIncrementLaw,
    steps: usize,
    start: f64,
    end: f64,
    target: i64,
    h: Vec<LogTable>,
}

impl BridgeSampler {
    pub fn new(law: DiscreteIncrementLaw, steps: usize, start: f64, end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps", "a bridge needs at least one step"));
        }
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::param("endpoints", "bridge endpoints must be finite"));
        }
        let impossible = || Error::ImpossibleBridge { start, end, steps };
        let ratio = (end - start) / law.delta();
        let target = ratio.round();
        if (ratio - target).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::param(
                "endpoints",
                format!("(end − start)/δ = {ratio} is not an integer"),
            ));
        }
        let target = target as i64;
        let n = steps as i64;
        if target < n * law.jmin() || target > n * law.jmax() {
            return Err(impossible());
        }
        let mut h = vec![
            LogTable {
                lo: 0,
                values: Vec::new()
            };
            steps + 1
        ];
        h[steps] = LogTable {
            lo: target,
            values: vec![0.0],
        };
        for m in (0..steps).rev() {
            let remaining = (steps - m) as i64;
            let lo = (target - remaining * law.jmax()).max(m as i64 * law.jmin());
            let hi = (target - remaining * law.jmin()).min(m as i64 * law.jmax());
            h[m] = convolve_log(&law, &h[m + 1], lo, hi, 1, H_PRUNE_NATS);
            if h[m].values.is_empty() {
                return Err(impossible());
            }
        }
        if h[0].get(0) == f64::NEG_INFINITY {
            return Err(impossible());
        }
        Ok(Self {
            law,
            steps,
            start,
            end,
            target,
            h,
        })
    }

    pub fn law(&self) -> &DiscreteIncrementLaw {
        &self.law
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// `log h_m(v)` for lattice offset `v` after `m` steps.
    pub fn log_h(&self, m: usize, v: i64) -> f64 {
        self.h[m].get(v)
    }

    /// Range of offsets with finite `h_m`.
    pub fn state_range(&self, m: usize) -> (i64, i64) {
        (self.h[m].lo, self.h[m].hi())
    }

    /// `log P(S_n = end | S_0 = start)` under the free walk.
    pub fn log_partition(&self) -> f64 {
        self.h[0].get(0)
    }

    #[inline]
    pub fn value(&self, offset: i64) -> f64 {
        self.start + offset as f64 * self.law.delta()
    }

    /// One bridge path as lattice offsets from `start`.
    pub fn sample_offsets<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        let mut path = Vec::with_capacity(self.steps + 1);
        let mut v = 0i64;
        path.push(v);
        let lp = self.law.log_probs();
        for m in 0..self.steps - 1 {
            let here = self.h[m].get(v);
            let next = &self.h[m + 1];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = None;
            let jlo = self.law.jmin().max(next.lo - v);
            let jhi = self.law.jmax().min(next.hi() - v);
            for j in jlo..=jhi {
                let w = lp[(j - self.law.jmin()) as usize] + next.get(v + j) - here;
                if w == f64::NEG_INFINITY {
                    continue;
                }
                acc += w.exp();
                chosen = Some(j);
                if acc >= u {
                    break;
                }
            }
            // Rounding can leave acc a hair below u; the last feasible jump is then correct.
            v += chosen.expect("h-transform row has mass");
            path.push(v);
        }
        path.push(self.target);
        path
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p: Vec<f64> = self.sample_offsets(rng).into_iter().map(|v| self.value(v)).collect();
        p[self.steps] = self.end;
        p
    }

    /// Exact law of the offset after `m` steps, as `(offset, probability)` pairs.
    pub fn marginal(&self, m: usize) -> Vec<(i64, f64)> {
        let mut f = LogTable {
            lo: 0,
            values: vec![0.0],
        };
        for _ in 0..m {
            let lo = f.lo + self.law.jmin();
            let hi = f.hi() + self.law.jmax();
            f = convolve_log(&self.law, &f, lo, hi, -1, f64::INFINITY);
        }
        let z = self.log_partition();
        let (lo, hi) = self.state_range(m);
        (lo..=hi)
            .filter_map(|v| {
                let lp = f.get(v) + self.h[m].get(v) - z;
                (lp > f64::NEG_INFINITY).then(|| (v, lp.exp()))
            })
            .collect()
    }

    /// Largest deviation from 1 of a forward transition row's total mass.
    pub fn max_row_defect(&self) -> f64 {
        let lp = self.law.log_probs();
        let mut worst: f64 = 0.0;
        for m in 0..self.steps {
            let (lo, hi) = self.state_range(m);
            for v in lo..=hi {
                let here = self.h[m].get(v);
                if here == f64::NEG_INFINITY {
                    continue;
                }
                let s: f64 = lp
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p + self.h[m + 1].get(v + self.law.jmin() + i as i64) - here).exp())
                    .sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn five_point() -> DiscreteIncrementLaw {
        DiscreteIncrementLaw::from_probs(1.0, -2, &[0.1, 0.25, 0.3, 0.2, 0.15]).unwrap()
    }

    /// Marginals by enumerating all 5^steps free paths and keeping the ones that hit `end`.
    fn enumerate(law: &DiscreteIncrementLaw, steps: usize, end: i64) -> Vec<Vec<(i64, f64)>> {
        let k = law.support_len();
        let mut acc: Vec<std::collections::BTreeMap<i64, f64>> = vec![Default::default(); steps + 1];
        let mut total = 0.0;
        for code in 0..k.pow(steps as u32) {
            let mut c = code;
            let mut path = vec![0i64];
            let mut w = 1.0;
            for _ in 0..steps {
                let idx = c % k;
                c /= k;
                w *= law.log_probs()[idx].exp();
                path.push(path.last().unwrap() + law.jmin() + idx as i64);
            }
            if path[steps] != end {
                continue;
            }
            total += w;
            for (m, &v) in path.iter().enumerate() {
                *acc[m].entry(v).or_default() += w;
            }
        }
        acc.into_iter().map(|m| m.into_iter().map(|(v, w)| (v, w / total)).collect()).collect()
    }

    #[test]
    fn marginals_match_enumeration() {
        let law = five_point();
        for end in [-3i64, 0, 2, 7] {
            let s = BridgeSampler::new(law.clone(), 4, 0.0, end as f64).unwrap();
            let exact = enumerate(&law, 4, end);
            for m in 0..=4 {
                let got = s.marginal(m);
                assert_eq!(got.len(), exact[m].len(), "m={m} end={end}");
                for ((v1, p1), (v2, p2)) in got.iter().zip(&exact[m]) {
                    assert_eq!(v1, v2);
                    assert!((p1 - p2).abs() < 1e-12, "m={m} v={v1}: {p1} vs {p2}");
                }
            }
        }
    }

    #[test]
    fn rows_are_normalized() {
        let s = BridgeSampler::new(five_point(), 6, 0.0, 3.0).unwrap();
        assert!(s.max_row_defect() < 1e-10);
    }

    #[test]
    fn single_step_is_forced() {
        let s = BridgeSampler::new(five_point(), 1, 1.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(s.sample(&mut rng), vec![1.0, 3.0]);
    }

    #[test]
    fn two_step_midpoint_is_bayes_product() {
        let law = five_point();
        let s = BridgeSampler::new(law.clone(), 2, 0.0, 1.0).unwrap();
        let mid = s.marginal(1);
        let raw: Vec<(i64, f64)> = (-2..=2)
            .map(|v| (v, (law.log_prob(v) + law.log_prob(1 - v)).exp()))
            .filter(|(_, w)| *w > 0.0)
            .collect();
        let z: f64 = raw.iter().map(|x| x.1).sum();
        for ((a, p), (b, q)) in mid.iter().zip(&raw) {
            assert_eq!(a, b);
            assert!((p - q / z).abs() < 1e-14);
        }
    }

    #[test]
    fn unreachable_endpoints_are_rejected() {
        assert!(matches!(
            BridgeSampler::new(five_point(), 2, 0.0, 5.0),
            Err(Error::ImpossibleBridge { .. })
        ));
        assert!(BridgeSampler::new(five_point(), 2, 0.0, 0.5).is_err());
        // parity: support {-1, 1} cannot reach an odd offset in two steps
        let pm = DiscreteIncrementLaw::from_probs(1.0, -1, &[0.5, 0.0, 0.5]).unwrap();
        assert!(matches!(BridgeSampler::new(pm, 2, 0.0, 1.0), Err(Error::ImpossibleBridge { .. })));
    }

    #[test]
    fn endpoints_are_pinned() {
        let s = BridgeSampler::new(five_point(), 5, 0.25, -2.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let p = s.sample(&mut rng);
            assert_eq!(p[0], 0.25);
            assert_eq!(p[5], -2.75);
            for w in p.windows(2) {
                let j = ((w[1] - w[0]) / 1.0).round() as i64;
                assert!((-2..=2).contains(&j));
            }
        }
    }
}
