use std::collections::BTreeMap;

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::DiscreteIncrementLaw;
use crate::error::{Error, Result};

/// Entries below this fraction of a table's peak are dropped from its ends.
const TRIM: f64 = 1e-40;
/// Midpoint laws are scanned outward from the mode until weights fall below this fraction of the peak.
const SCAN_CUTOFF: f64 = 1e-17;
/// Feasible ranges up to this size are always scanned in full.
const FULL_SCAN: i64 = 64;

/// Probabilities of the `len`-step free walk, up to a common factor.
#[derive(Debug, Clone)]
struct LinTable {
    lo: i64,
    w: Vec<f64>,
}

impl LinTable {
    #[inline]
    fn get(&self, v: i64) -> f64 {
        let i = v - self.lo;
        if i < 0 || i as usize >= self.w.len() {
            0.0
        } else {
            self.w[i as usize]
        }
    }

    fn hi(&self) -> i64 {
        self.lo + self.w.len() as i64 - 1
    }

    fn normalized_trimmed(lo: i64, mut w: Vec<f64>) -> Self {
        let peak = w.iter().copied().fold(0.0, f64::max);
        for x in &mut w {
            *x /= peak;
        }
        let a = w.iter().position(|&x| x >= TRIM).unwrap_or(0);
        let b = w.iter().rposition(|&x| x >= TRIM).unwrap_or(0);
        w.truncate(b + 1);
        w.drain(..a);
        LinTable { lo: lo + a as i64, w }
    }

    fn convolve(&self, other: &LinTable) -> LinTable {
        let mut out = vec![0.0; self.w.len() + other.w.len() - 1];
        for (i, &a) in self.w.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out[i..].iter_mut().zip(&other.w) {
                *o += a * b;
            }
        }
        LinTable::normalized_trimmed(self.lo + other.lo, out)
    }
}

/// One bisection step of the dyadic construction: the value at `mid` is drawn
/// given the values at `lo` and `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub lo: usize,
    pub mid: usize,
    pub hi: usize,
}

fn build_nodes(lo: usize, hi: usize, out: &mut Vec<Node>) {
    if hi - lo < 2 {
        return;
    }
    // Odd lengths split as (⌊m/2⌋, m − ⌊m/2⌋).
    let mid = lo + (hi - lo) / 2;
    out.push(Node { lo, mid, hi });
    build_nodes(lo, mid, out);
    build_nodes(mid, hi, out);
}

/// Quantile coupling of lattice bridges (and of a Brownian bridge) through a
/// shared dyadic midpoint tree.
///
/// Every node consumes one uniform, in pre-order. A lattice bridge places its
/// midpoint at the inverse CDF of its exact midpoint law evaluated at that
/// uniform, so each coupled path has exactly the bridge law while paths with
/// nearby endpoints stay close.
#[derive(Debug, Clone)]
pub struct QuantileCoupler {
    delta: f64,
    steps: usize,
    tables: BTreeMap<usize, LinTable>,
    nodes: Vec<Node>,
    log_concave: bool,
}

impl QuantileCoupler {
    /// `typical_increment` only picks the exponential tilt used to keep the
    /// convolution tables centered; bridge laws do not depend on it.
    pub fn new(law: &DiscreteIncrementLaw, steps: usize, typical_increment: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps", "a bridge needs at least one step"));
        }
        let law = law.tilted_to_mean(typical_increment);
        let mut nodes = Vec::new();
        build_nodes(0, steps, &mut nodes);
        let base = LinTable::normalized_trimmed(law.jmin(), law.probs());
        let mut tables = BTreeMap::new();
        tables.insert(1usize, base);
        let mut wanted: Vec<usize> = nodes.iter().flat_map(|n| [n.mid - n.lo, n.hi - n.mid]).collect();
        wanted.push(steps);
        for len in wanted {
            Self::ensure(&mut tables, len);
        }
        Ok(Self {
            delta: law.delta(),
            steps,
            tables,
            nodes,
            log_concave: law.is_discretely_convex(1e-9),
        })
    }

    fn ensure(tables: &mut BTreeMap<usize, LinTable>, len: usize) {
        if tables.contains_key(&len) {
            return;
        }
        let a = len / 2;
        let b = len - a;
        Self::ensure(tables, a);
        Self::ensure(tables, b);
        let t = tables[&a].convolve(&tables[&b]);
        tables.insert(len, t);
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// One uniform in the open interval (0, 1) per node.
    pub fn draw_uniforms<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.nodes.len()).map(|_| open_uniform(rng)).collect()
    }

    /// Inverse CDF at `u` of the lattice midpoint law `∝ t1(v)·t2(d − v)`.
    fn midpoint(&self, t1: &LinTable, t2: &LinTable, d: i64, u: f64, buf: &mut Vec<f64>) -> Option<i64> {
        let vlo = t1.lo.max(d - t2.hi());
        let vhi = t1.hi().min(d - t2.lo);
        if vlo > vhi {
            return None;
        }
        let w = |v: i64| t1.get(v) * t2.get(d - v);
        buf.clear();
        let (start, end) = if !self.log_concave || vhi - vlo < FULL_SCAN {
            buf.extend((vlo..=vhi).map(w));
            (vlo, vhi)
        } else {
            // Unimodal: find the first v whose successor is lighter.
            let (mut a, mut b) = (vlo, vhi);
            while a < b {
                let m = a + (b - a) / 2;
                if w(m + 1) > w(m) {
                    a = m + 1;
                } else {
                    b = m;
                }
            }
            let peak = w(a);
            if peak == 0.0 {
                return None;
            }
            let cut = peak * SCAN_CUTOFF;
            let mut left = a;
            while left > vlo && w(left - 1) >= cut {
                left -= 1;
            }
            let mut right = a;
            while right < vhi && w(right + 1) >= cut {
                right += 1;
            }
            buf.extend((left..=right).map(w));
            (left, right)
        };
        let total: f64 = buf.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let target = u * total;
        let mut acc = 0.0;
        for (i, &x) in buf.iter().enumerate() {
            acc += x;
            if acc >= target && x > 0.0 {
                return Some(start + i as i64);
            }
        }
        // Rounding pushed the target past the accumulated sum: take the last positive weight.
        let last = buf.iter().rposition(|&x| x > 0.0)?;
        debug_assert!(start + (last as i64) <= end);
        Some(start + last as i64)
    }

    /// Coupled bridge as lattice offsets from the start, ending at `target`.
    pub fn lattice_offsets(&self, target: i64, uniforms: &[f64]) -> Result<Vec<i64>> {
        if uniforms.len() < self.nodes.len() {
            return Err(Error::InsufficientData {
                what: "coupling uniforms",
                needed: self.nodes.len(),
                got: uniforms.len(),
            });
        }
        let impossible = || Error::ImpossibleBridge {
            start: 0.0,
            end: target as f64 * self.delta,
            steps: self.steps,
        };
        let full = &self.tables[&self.steps];
        if full.get(target) == 0.0 {
            return Err(impossible());
        }
        let mut path = vec![0i64; self.steps + 1];
        path[self.steps] = target;
        let mut buf = Vec::new();
        for (node, &u) in self.nodes.iter().zip(uniforms) {
            let t1 = &self.tables[&(node.mid - node.lo)];
            let t2 = &self.tables[&(node.hi - node.mid)];
            let d = path[node.hi] - path[node.lo];
            let v = self.midpoint(t1, t2, d, u, &mut buf).ok_or_else(impossible)?;
            path[node.mid] = path[node.lo] + v;
        }
        Ok(path)
    }

    /// Coupled lattice bridge from `start` to `end`.
    pub fn lattice_path(&self, start: f64, end: f64, uniforms: &[f64]) -> Result<Vec<f64>> {
        let ratio = (end - start) / self.delta;
        let target = ratio.round();
        if (ratio - target).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::param("endpoints", format!("(end − start)/δ = {ratio} is not an integer")));
        }
        let offsets = self.lattice_offsets(target as i64, uniforms)?;
        let mut p: Vec<f64> = offsets.iter().map(|&v| start + v as f64 * self.delta).collect();
        p[self.steps] = end;
        Ok(p)
    }

    /// Brownian bridge from 0 to `z` over `[0, duration]` at the times
    /// `m·duration/steps`, driven by the same node uniforms.
    pub fn brownian_path(&self, duration: f64, z: f64, uniforms: &[f64]) -> Vec<f64> {
        let normal = Normal::standard();
        let dt = duration / self.steps as f64;
        let mut b = vec![0.0; self.steps + 1];
        b[self.steps] = z;
        for (node, &u) in self.nodes.iter().zip(uniforms) {
            let t1 = (node.mid - node.lo) as f64 * dt;
            let t2 = (node.hi - node.mid) as f64 * dt;
            let tau = t1 + t2;
            let mean = b[node.lo] + t1 / tau * (b[node.hi] - b[node.lo]);
            let sd = (t1 * t2 / tau).sqrt();
            b[node.mid] = mean + sd * normal.inverse_cdf(u);
        }
        b
    }
}

/// Uniform on the open interval (0, 1) with 53 random bits.
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Bridges from 0 to each endpoint in `endpoints`, all driven by one set of
/// node uniforms.
pub fn quantile_couple_bridges<R: Rng + ?Sized>(
    law: &DiscreteIncrementLaw,
    steps: usize,
    endpoints: &[f64],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if endpoints.is_empty() {
        return Ok(Vec::new());
    }
    let typical = endpoints.iter().sum::<f64>() / endpoints.len() as f64 / steps.max(1) as f64;
    let coupler = QuantileCoupler::new(law, steps, typical)?;
    let u = coupler.draw_uniforms(rng);
    endpoints.iter().map(|&z| coupler.lattice_path(0.0, z, &u)).collect()
}

/// `max_i |a_i − b_i|`.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::super::BridgeSampler;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn five_point() -> DiscreteIncrementLaw {
        DiscreteIncrementLaw::from_probs(1.0, -2, &[0.1, 0.25, 0.3, 0.2, 0.15]).unwrap()
    }

    #[test]
    fn pre_order_tree_covers_every_interior_time() {
        for steps in 1..40 {
            let mut nodes = Vec::new();
            build_nodes(0, steps, &mut nodes);
            let mut mids: Vec<usize> = nodes.iter().map(|n| n.mid).collect();
            mids.sort();
            assert_eq!(mids, (1..steps).collect::<Vec<_>>());
        }
        let mut nodes = Vec::new();
        build_nodes(0, 5, &mut nodes);
        assert_eq!(nodes[0], Node { lo: 0, mid: 2, hi: 5 });
        assert_eq!(nodes[1], Node { lo: 0, mid: 1, hi: 2 });
        assert_eq!(nodes[2], Node { lo: 2, mid: 3, hi: 5 });
    }

    #[test]
    fn identical_endpoints_give_identical_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let paths = quantile_couple_bridges(&five_point(), 8, &[3.0, 3.0], &mut rng).unwrap();
        assert_eq!(paths[0], paths[1]);
    }

    #[test]
    fn coupled_marginals_match_the_exact_bridge() {
        let law = five_point();
        let coupler = QuantileCoupler::new(&law, 4, 0.0).unwrap();
        let exact = BridgeSampler::new(law, 4, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 50_000;
        let mut counts = vec![std::collections::BTreeMap::<i64, u64>::new(); 5];
        for _ in 0..n {
            let u = coupler.draw_uniforms(&mut rng);
            let p = coupler.lattice_offsets(1, &u).unwrap();
            for m in 0..5 {
                *counts[m].entry(p[m]).or_default() += 1;
            }
        }
        for m in 1..4 {
            let marg = exact.marginal(m);
            let obs: Vec<u64> = marg.iter().map(|(v, _)| counts[m].get(v).copied().unwrap_or(0)).collect();
            assert_eq!(obs.iter().sum::<u64>(), n as u64, "support mismatch at m={m}");
            let probs: Vec<f64> = marg.iter().map(|x| x.1).collect();
            let r = crate::stats::chi_square_gof(&obs, &probs).unwrap();
            assert!(r.p_value > 1e-4, "m={m}: {r:?}");
        }
    }

    #[test]
    fn midpoints_are_monotone_in_the_endpoint() {
        let law = DiscreteIncrementLaw::from_probs(1.0, -2, &[0.05, 0.2, 0.4, 0.25, 0.1]).unwrap();
        assert!(law.is_discretely_convex(1e-12));
        let coupler = QuantileCoupler::new(&law, 16, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..500 {
            let u = coupler.draw_uniforms(&mut rng);
            let low = coupler.lattice_offsets(-3, &u).unwrap();
            let high = coupler.lattice_offsets(5, &u).unwrap();
            assert!(low.iter().zip(&high).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn unreachable_endpoint_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(quantile_couple_bridges(&five_point(), 2, &[0.0, 5.0], &mut rng).is_err());
    }

    #[test]
    fn brownian_side_has_bridge_variance() {
        let law = five_point();
        let coupler = QuantileCoupler::new(&law, 8, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mids: Vec<f64> = (0..40_000)
            .map(|_| coupler.brownian_path(2.0, 0.0, &coupler.draw_uniforms(&mut rng))[4])
            .collect();
        let v = crate::stats::variance(&mids);
        assert!((v - 0.5).abs() < 0.02, "{v}");
    }
}
