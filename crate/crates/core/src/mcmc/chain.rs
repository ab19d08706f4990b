use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};

use super::{ChainConfig, GibbsTarget, Scan};
use crate::bridge::open_uniform;
use crate::ensemble::LineEnsemble;
use crate::error::{Error, Result};
use crate::seed::Rng as ChainRng;

/// Mutable chain state: padded rows (boundary rows included) plus, for every
/// curve value, an anchor and an integer number of `δ` steps from it.
///
/// Values are always recomputed as `anchor + offset·δ`, so two chains sharing
/// anchors compare exactly through their integer offsets.
#[derive(Debug, Clone)]
pub(crate) struct ChainState {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub rows: Vec<f64>,
    pub anchor: Vec<f64>,
    pub off: Vec<i64>,
}

impl ChainState {
    pub fn new(l: &LineEnsemble, delta: f64) -> Self {
        let n = l.grid().count();
        let k = l.curve_count();
        let anchor: Vec<f64> = l.curves().flat_map(|c| c.iter().copied()).collect();
        Self {
            n,
            k,
            delta,
            rows: l.padded_rows(),
            off: vec![0; anchor.len()],
            anchor,
        }
    }

    /// State of `l` expressed on the anchors of `base`; every value of `l`
    /// must sit an integer number of `δ` steps from the matching value of `base`.
    pub fn on_anchors_of(l: &LineEnsemble, base: &ChainState) -> Result<Self> {
        let mut s = Self::new(l, base.delta);
        for (idx, (&v, &a)) in s.anchor.iter().zip(&base.anchor).enumerate() {
            let x = (v - a) / base.delta;
            let r = x.round();
            if (x - r).abs() > 1e-6 {
                return Err(Error::Unordered(format!(
                    "value {v} at slot {idx} is not on the lattice {a} + δℤ of the other chain"
                )));
            }
            s.off[idx] = r as i64;
        }
        s.anchor.clone_from(&base.anchor);
        Ok(s)
    }

    #[inline]
    pub fn slot(&self, r: usize, i: usize) -> usize {
        (r - 1) * self.n + i
    }

    #[inline]
    pub fn candidate(&self, r: usize, i: usize, dir: i64) -> f64 {
        let s = self.slot(r, i);
        self.anchor[s] + (self.off[s] + dir) as f64 * self.delta
    }

    #[inline]
    pub fn apply(&mut self, r: usize, i: usize, dir: i64) {
        let s = self.slot(r, i);
        self.off[s] += dir;
        self.rows[r * self.n + i] = self.anchor[s] + self.off[s] as f64 * self.delta;
    }

    /// Sum of every energy term that involves site `(r, i)`, with that site
    /// temporarily set to `value`. Terms are all ≥ 0 except increment energies,
    /// which are finite or `+∞`.
    fn site_energy(&mut self, target: &GibbsTarget<'_>, r: usize, i: usize, value: f64) -> f64 {
        let n = self.n;
        let at = r * n + i;
        let saved = self.rows[at];
        self.rows[at] = value;
        let rows = &self.rows;
        let mut e = target.energy.energy(value - rows[at - 1]) + target.energy.energy(rows[at + 1] - value);
        if !target.hamiltonian.is_zero() {
            for (up, lo) in [(r - 1, r), (r, r + 1)] {
                let a = &rows[up * n..(up + 1) * n];
                let b = &rows[lo * n..(lo + 1) * n];
                for s in i.saturating_sub(1).max(1)..=(i + 1).min(n - 2) {
                    e += target
                        .hamiltonian
                        .evaluate(&[a[s - 1], a[s], a[s + 1], b[s - 1], b[s], b[s + 1]]);
                }
            }
        }
        if let Some(ext) = target.external {
            if r == 1 {
                e += (ext.upper)(value - ext.upper_curve[i]);
            }
            if r == self.k {
                e += (ext.lower)(ext.lower_curve[i] - value);
            }
        }
        self.rows[at] = saved;
        e
    }

    /// `log R` for moving site `(r, i)` by `dir·δ`.
    pub fn log_ratio(&mut self, target: &GibbsTarget<'_>, r: usize, i: usize, dir: i64) -> Result<f64> {
        let old = self.rows[r * self.n + i];
        let new = self.candidate(r, i, dir);
        let e_old = self.site_energy(target, r, i, old);
        let e_new = self.site_energy(target, r, i, new);
        if e_old.is_nan() || e_new.is_nan() {
            return Err(Error::NotANumber("Metropolis ratio"));
        }
        Ok(if e_new == f64::INFINITY {
            f64::NEG_INFINITY
        } else if e_old == f64::INFINITY {
            f64::INFINITY
        } else {
            e_old - e_new
        })
    }

    /// `log W + log P_free` up to the free walk's normalization.
    pub fn log_target(&self, target: &GibbsTarget<'_>) -> Result<f64> {
        let n = self.n;
        let mut e = 0.0;
        for r in 1..=self.k {
            let row = &self.rows[r * n..(r + 1) * n];
            for w in row.windows(2) {
                e += target.energy.energy(w[1] - w[0]);
            }
        }
        if !target.hamiltonian.is_zero() && n >= 3 {
            for up in 0..=self.k {
                let a = &self.rows[up * n..(up + 1) * n];
                let b = &self.rows[(up + 1) * n..(up + 2) * n];
                for s in 1..n - 1 {
                    e += target
                        .hamiltonian
                        .evaluate(&[a[s - 1], a[s], a[s + 1], b[s - 1], b[s], b[s + 1]]);
                }
            }
        }
        if let Some(ext) = target.external {
            for s in 1..n.saturating_sub(1) {
                e += (ext.upper)(self.rows[n + s] - ext.upper_curve[s]);
                e += (ext.lower)(ext.lower_curve[s] - self.rows[self.k * n + s]);
            }
        }
        if e.is_nan() {
            return Err(Error::NotANumber("chain log-target"));
        }
        Ok(-e)
    }

    pub fn into_ensemble(self, template: &LineEnsemble) -> Result<LineEnsemble> {
        let n = self.n;
        let curves = (1..=self.k).map(|r| self.rows[r * n..(r + 1) * n].to_vec()).collect();
        LineEnsemble::new(
            *template.grid(),
            template.first_index(),
            curves,
            template.upper().clone(),
            template.lower().clone(),
        )
    }

    pub fn curve(&self, slot: usize) -> &[f64] {
        &self.rows[(slot + 1) * self.n..(slot + 2) * self.n]
    }
}

/// One proposal's randomness: padded row `r ∈ 1..=K`, interior site `i`,
/// direction `±1` and a uniform in (0, 1).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Move {
    pub r: usize,
    pub i: usize,
    pub dir: i64,
    pub u: f64,
}

pub(crate) fn draw_move<R: Rng + ?Sized>(rng: &mut R, scan: Scan, k: usize, n: usize, p: usize) -> Move {
    let sites = n - 2;
    let (r, i) = match scan {
        Scan::RandomSite => (1 + rng.random_range(0..k), 1 + rng.random_range(0..sites)),
        Scan::Systematic => (1 + p / sites, 1 + p % sites),
    };
    let dir = if rng.random::<bool>() { 1 } else { -1 };
    Move {
        r,
        i,
        dir,
        u: open_uniform(rng),
    }
}

/// Tracks whether the chain is still looking for a state of positive weight.
pub(crate) struct Escape {
    pub stuck: bool,
}

impl Escape {
    pub fn new(state: &ChainState, target: &GibbsTarget<'_>) -> Result<Self> {
        Ok(Self {
            stuck: state.log_target(target)? == f64::NEG_INFINITY,
        })
    }

    /// Metropolis step; while stuck, any move to a positive-weight state is accepted.
    pub fn step(&mut self, state: &mut ChainState, target: &GibbsTarget<'_>, mv: Move) -> Result<bool> {
        if self.stuck {
            state.apply(mv.r, mv.i, mv.dir);
            if state.log_target(target)? > f64::NEG_INFINITY {
                self.stuck = false;
                return Ok(true);
            }
            state.apply(mv.r, mv.i, -mv.dir);
            return Ok(false);
        }
        let lr = state.log_ratio(target, mv.r, mv.i, mv.dir)?;
        if lr >= mv.u.ln() {
            state.apply(mv.r, mv.i, mv.dir);
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// Read access to the chain after an observed sweep.
pub struct ChainView<'a> {
    pub sweep: usize,
    state: &'a ChainState,
}

impl ChainView<'_> {
    /// Curve by position `0..K` (not by label).
    pub fn curve(&self, slot: usize) -> &[f64] {
        self.state.curve(slot)
    }

    pub fn curve_count(&self) -> usize {
        self.state.k
    }
}

#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub state: LineEnsemble,
    pub proposals: u64,
    pub accepted: u64,
}

impl ChainOutcome {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// `log R` of proposing `Q_k(i) → Q_k(i) + direction·δ` for curve label `k`.
pub fn metropolis_log_ratio(
    q: &LineEnsemble,
    k: usize,
    i: usize,
    direction: i64,
    delta: f64,
    target: &GibbsTarget<'_>,
) -> Result<f64> {
    let n = q.grid().count();
    if i == 0 || i + 1 >= n {
        return Err(Error::IndexOutOfRange {
            what: "interior site",
            index: i as i64,
            valid: format!("1..={}", n as i64 - 2),
        });
    }
    q.curve(k)?;
    if direction != 1 && direction != -1 {
        return Err(Error::param("direction", "must be +1 or -1"));
    }
    let mut s = ChainState::new(q, delta);
    s.log_ratio(target, k - q.first_index() + 1, i, direction)
}

pub fn run_chain(init: &LineEnsemble, target: &GibbsTarget<'_>, cfg: &ChainConfig) -> Result<ChainOutcome> {
    run_chain_with(init, target, cfg, |_| {})
}

/// Runs the chain, calling `observe` after every sweep past the burn-in.
pub fn run_chain_with<F: FnMut(&ChainView<'_>)>(
    init: &LineEnsemble,
    target: &GibbsTarget<'_>,
    cfg: &ChainConfig,
    mut observe: F,
) -> Result<ChainOutcome> {
    cfg.validate()?;
    let n = init.grid().count();
    let k = init.curve_count();
    if n < 3 {
        return Ok(ChainOutcome {
            state: init.clone(),
            proposals: 0,
            accepted: 0,
        });
    }
    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    let mut state = ChainState::new(init, cfg.delta);
    let mut escape = Escape::new(&state, target)?;
    let per_sweep = k * (n - 2);
    let (mut proposals, mut accepted) = (0u64, 0u64);
    for sweep in 0..cfg.sweeps {
        for p in 0..per_sweep {
            let mv = draw_move(&mut rng, cfg.scan, k, n, p);
            proposals += 1;
            if escape.step(&mut state, target, mv)? {
                accepted += 1;
            }
        }
        if sweep == 0 && escape.stuck {
            return Err(Error::StuckInitialization);
        }
        if sweep >= cfg.burn_in {
            observe(&ChainView { sweep, state: &state });
        }
    }
    Ok(ChainOutcome {
        state: state.into_ensemble(init)?,
        proposals,
        accepted,
    })
}

/// Resamples curves `k1..=k2` at the interior sites `sites` with the chain,
/// holding every other value (including the columns just outside `sites`) fixed.
///
/// Each resampled value moves on its own lattice `original + δℤ`.
pub fn resample_interior(
    l: &LineEnsemble,
    k1: usize,
    k2: usize,
    sites: RangeInclusive<usize>,
    target: &GibbsTarget<'_>,
    cfg: &ChainConfig,
) -> Result<LineEnsemble> {
    let (lo, hi) = (*sites.start(), *sites.end());
    if lo > hi || k1 > k2 {
        return Ok(l.clone());
    }
    let n = l.grid().count();
    if lo == 0 || hi + 1 >= n {
        return Err(Error::param(
            "block",
            format!("sites {lo}..={hi} touch the grid boundary 0..={}", n - 1),
        ));
    }
    let block = l.block(k1, k2, lo - 1..=hi + 1)?;
    let external;
    let target = match target.external {
        None => *target,
        Some(ext) => {
            external = crate::ensemble::ExternalHamiltonians {
                upper: ext.upper.clone(),
                lower: ext.lower.clone(),
                upper_curve: ext.upper_curve[lo - 1..=hi + 1].to_vec(),
                lower_curve: ext.lower_curve[lo - 1..=hi + 1].to_vec(),
            };
            GibbsTarget {
                external: Some(&external),
                ..*target
            }
        }
    };
    let out = run_chain(&block, &target, cfg)?;
    let mut result = l.clone();
    for k in k1..=k2 {
        let c = out.state.curve(k)?;
        for i in lo..=hi {
            result.set(k, i, c[i - lo + 1])?;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::DiscreteIncrementLaw;
    use crate::ensemble::{boltzmann_log_weight, Grid, IncrementEnergy, LocalHamiltonian, RWHamiltonian, Shift};
    use rand_chacha::ChaCha8Rng;

    fn free_log_density(l: &LineEnsemble, e: &dyn IncrementEnergy) -> f64 {
        -l.curves().map(|c| c.windows(2).map(|w| e.energy(w[1] - w[0])).sum::<f64>()).sum::<f64>()
    }

    #[test]
    fn ratio_matches_full_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = LocalHamiltonian::exponential(0.7, Shift::After).unwrap();
        let rw = RWHamiltonian::log_gamma(3.0, 0.2).unwrap();
        let target = GibbsTarget::new(&h, &rw);
        let g = Grid::new(0.0, 1.0, 7).unwrap();
        for _ in 0..200 {
            let curves: Vec<Vec<f64>> = (0..3)
                .map(|c| (0..7).map(|_| rng.random_range(-1.0..1.0) - c as f64).collect())
                .collect();
            let l = LineEnsemble::new(
                g,
                2,
                curves,
                crate::ensemble::Boundary::Values((0..7).map(|_| rng.random_range(0.5..1.5)).collect()),
                crate::ensemble::Boundary::minus_infinity(),
            )
            .unwrap();
            let k = rng.random_range(2..=4);
            let i = rng.random_range(1..=5);
            let dir = if rng.random::<bool>() { 1 } else { -1 };
            let lr = metropolis_log_ratio(&l, k, i, dir, 0.1, &target).unwrap();
            let mut moved = l.clone();
            moved.set(k, i, l.curve(k).unwrap()[i] + dir as f64 * 0.1).unwrap();
            let full = |x: &LineEnsemble| boltzmann_log_weight(x, &h, None).unwrap() + free_log_density(x, &rw);
            assert!((lr - (full(&moved) - full(&l))).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_interior_returns_input() {
        let h = LocalHamiltonian::Zero;
        let rw = RWHamiltonian::quadratic(1.0).unwrap();
        let l = LineEnsemble::unbounded(Grid::new(0.0, 1.0, 2).unwrap(), 1, vec![vec![0.0, 1.0]]).unwrap();
        let out = run_chain(&l, &GibbsTarget::new(&h, &rw), &ChainConfig::new(0.1, 5, 1, 0).unwrap()).unwrap();
        assert_eq!(out.state, l);
        assert_eq!(out.proposals, 0);
    }

    #[test]
    fn endpoints_and_boundaries_are_pinned() {
        let h = LocalHamiltonian::exponential(1.0, Shift::Same).unwrap();
        let rw = RWHamiltonian::quadratic(0.5).unwrap();
        let g = Grid::new(0.0, 1.0, 6).unwrap();
        let l = LineEnsemble::unbounded(g, 1, vec![vec![0.3; 6], vec![-1.1; 6]]).unwrap();
        let out = run_chain(&l, &GibbsTarget::new(&h, &rw), &ChainConfig::new(0.2, 200, 10, 4).unwrap()).unwrap();
        for k in 1..=2 {
            let a = l.curve(k).unwrap();
            let b = out.state.curve(k).unwrap();
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[5].to_bits(), b[5].to_bits());
        }
        assert!(out.acceptance_rate() > 0.0);
    }

    #[test]
    fn stuck_initialization_is_reported() {
        // 3-point law on δℤ, but the initial interior value is off the lattice.
        let law = DiscreteIncrementLaw::from_probs(1.0, -1, &[0.25, 0.5, 0.25]).unwrap();
        let h = LocalHamiltonian::Zero;
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        let l = LineEnsemble::unbounded(g, 1, vec![vec![0.0, 0.5, 0.0]]).unwrap();
        let r = run_chain(&l, &GibbsTarget::new(&h, &law), &ChainConfig::new(1.0, 3, 0, 1).unwrap());
        assert!(matches!(r, Err(Error::StuckInitialization)));
    }

    #[test]
    fn escapes_a_zero_weight_start() {
        // Forcing Hamiltonian: the top curve must be below the upper boundary at 1.0.
        let h = LocalHamiltonian::custom("wall", |a: &[f64; 6]| if a[4] > a[1] { f64::INFINITY } else { 0.0 });
        let law = DiscreteIncrementLaw::from_probs(1.0, -1, &[0.25, 0.5, 0.25]).unwrap();
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        let l = LineEnsemble::new(
            g,
            1,
            vec![vec![0.0, 2.0, 0.0]],
            crate::ensemble::Boundary::Constant(1.0),
            crate::ensemble::Boundary::minus_infinity(),
        )
        .unwrap();
        // The only escaping move is down; with 1 site and enough sweeps it is found.
        let out = run_chain(&l, &GibbsTarget::new(&h, &law), &ChainConfig::new(1.0, 50, 0, 3).unwrap());
        // Either the first sweep already escaped, or the chain reports being stuck.
        match out {
            Ok(o) => assert!(o.state.curve(1).unwrap()[1] <= 1.0),
            Err(e) => assert!(matches!(e, Error::StuckInitialization)),
        }
    }

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn empty_block_and_boundary_block() {
        let h = LocalHamiltonian::Zero;
        let rw = RWHamiltonian::quadratic(1.0).unwrap();
        let t = GibbsTarget::new(&h, &rw);
        let cfg = ChainConfig::new(0.1, 10, 0, 0).unwrap();
        let l = LineEnsemble::unbounded(Grid::new(0.0, 1.0, 6).unwrap(), 1, vec![vec![0.0; 6]; 2]).unwrap();
        assert_eq!(resample_interior(&l, 1, 2, 3..=2, &t, &cfg).unwrap(), l);
        assert!(resample_interior(&l, 1, 1, 0..=2, &t, &cfg).is_err());
        assert!(resample_interior(&l, 1, 1, 2..=5, &t, &cfg).is_err());
        let r = resample_interior(&l, 2, 2, 2..=3, &t, &cfg).unwrap();
        assert_eq!(r.curve(1).unwrap(), l.curve(1).unwrap());
        let c = r.curve(2).unwrap();
        assert_eq!((c[0], c[1], c[4], c[5]), (0.0, 0.0, 0.0, 0.0));
    }
}
