//! One runner per experiment kind. Runners compute everything in memory;
//! the orchestrator writes files afterwards.

use gibbs_lines::bridge::DiscreteIncrementLaw;
use gibbs_lines::ensemble::{Boundary, FnEnergy, Grid, LineEnsemble, LocalHamiltonian};
use gibbs_lines::mcmc::{
    initialize, monotone_coupled_run, run_chain_with, search_ratio_violation, ChainConfig, GibbsTarget,
};
use gibbs_lines::polymer::{build_line_ensemble, tau_bruteforce, tau_log, Environment, BRUTEFORCE_LIMIT};
use gibbs_lines::scaling::{
    scale_ensemble, scaled_hamiltonians, stationarity_statistics, tilt_cumulant_check, tilt_parameters,
};
use gibbs_lines::seed::{derive_seed, rng_for};
use gibbs_lines::stats::{gelman_rubin, linear_fit, mean, variance};
use gibbs_lines::verify::{
    check_a1, check_a2, check_a3, check_a4, gibbs_invariance_test, polymer_hamiltonians, tightness_proxy,
    z_comparison_check, A4Config, CheckReport, InvarianceConfig, TightnessInput, ZComparisonConfig,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::*;
use crate::plot::{emit_plot, PlotSpec, Series};
use crate::table::{num, opt, Table};
use crate::CliError;

/// Everything one run produces.
#[derive(Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub reports: Vec<CheckReport>,
    /// `(file name, SVG document)`.
    pub plots: Vec<(String, String)>,
    /// Extra manifest entries.
    pub notes: Map<String, Value>,
}

impl Artifacts {
    fn plot(&mut self, enabled: bool, name: &str, series: Vec<Series>, spec: PlotSpec) -> Result<(), CliError> {
        if enabled && !series.is_empty() {
            self.plots.push((name.to_string(), emit_plot(&series, &spec)?));
        }
        Ok(())
    }
}

fn spec(title: &str, x: &str, y: &str, log_x: bool, log_y: bool) -> PlotSpec {
    PlotSpec {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        log_x,
        log_y,
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let seed = cfg.seed;
    let plots = cfg.plots;
    match &cfg.experiment {
        Experiment::PolymerBuild(p) => polymer_build(p, seed, plots),
        Experiment::GibbsSample(g) => gibbs_sample(g, seed, plots),
        Experiment::MonotoneCoupling(m) => monotone_coupling(m, seed),
        Experiment::VerifyA1(a) => verify_a1(a, seed),
        Experiment::VerifyA2(a) => verify_a2(a),
        Experiment::VerifyA3(a) => verify_a3(a, seed, plots),
        Experiment::VerifyA4(a) => verify_a4(a, seed, plots),
        Experiment::GibbsInvariance(g) => gibbs_invariance(g, seed),
        Experiment::ZComparison(z) => z_comparison(z, seed, plots),
        Experiment::ScalingStudy(s) => scaling_study(s, seed, plots),
        Experiment::TightnessStudy(t) => tightness_study(t, seed, plots),
    }
}

/// Brute-force oracles only.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match &cfg.experiment {
        Experiment::PolymerBuild(p) => {
            let env = polymer_environment(p, cfg.seed)?;
            let mut out = Artifacts::default();
            lgv_oracle(&env, p, &mut out)?;
            Ok(out)
        }
        other => Err(CliError::Config(format!(
            "experiment kind `{}` has no brute-force oracle; only polymer-build does",
            other.kind()
        ))),
    }
}

fn polymer_environment(p: &PolymerBuild, seed: u64) -> Result<Environment, CliError> {
    let mut rng = rng_for(seed, "polymer-build", 0);
    Ok(Environment::sample(p.gamma, p.n_last, p.k, &mut rng)?)
}

const ORACLE_TOL: f64 = 1e-9;

/// Determinant formula against path enumeration for `n ≤ 5`, `k ≤ 3`, `l ≤ k`.
fn lgv_oracle(env: &Environment, p: &PolymerBuild, out: &mut Artifacts) -> Result<(), CliError> {
    let mut worst: f64 = 0.0;
    let mut cases = 0u64;
    let mut table = Table::new("oracle.csv", &["n", "k", "l", "tau_log", "tau_bruteforce", "relative_error"]);
    for n in 1..=p.n_last.min(5) {
        for k in 1..=p.k.min(3) {
            for l in 1..=k {
                let a = tau_log(env, n, k, l)?;
                let b = tau_bruteforce(env, n, k, l, BRUTEFORCE_LIMIT)?;
                let err = if a == b { 0.0 } else { (a - b).exp_m1().abs() };
                let err = if err.is_nan() { f64::INFINITY } else { err };
                worst = worst.max(err);
                cases += 1;
                table.push(vec![n.to_string(), k.to_string(), l.to_string(), num(a), num(b), num(err)]);
            }
        }
    }
    out.tables.push(table);
    out.reports.push(
        CheckReport::new(
            "lgv-oracle",
            cases,
            ORACLE_TOL - worst,
            0.0,
            "relative agreement 1e-9 with exhaustive path enumeration",
        )
        .param("n_max", p.n_last.min(5))
        .param("k_max", p.k.min(3)),
    );
    out.notes.insert(
        "oracle".into(),
        json!({ "cases": cases, "max_relative_error": worst, "tolerance": ORACLE_TOL, "agrees": worst <= ORACLE_TOL }),
    );
    Ok(())
}

fn polymer_build(p: &PolymerBuild, seed: u64, plots: bool) -> Result<Artifacts, CliError> {
    let env = polymer_environment(p, seed)?;
    let pl = build_line_ensemble(&env, p.k, p.n_first, p.n_last, p.curves)?;
    let mut out = Artifacts::default();
    let mut weights = Table::new("environment.csv", &["column", "row", "log_weight"]);
    for i in 1..=env.n_max() {
        for j in 1..=env.k_max() {
            weights.push(vec![i.to_string(), j.to_string(), num(env.log_weight(i, j))]);
        }
    }
    let mut table = Table::new("line_ensemble.csv", &["n", "curve", "value"]);
    for n in p.n_first..=p.n_last {
        for i in 1..=p.curves {
            table.push(vec![n.to_string(), i.to_string(), opt(pl.get(i, n))]);
        }
    }
    out.tables.push(weights);
    out.tables.push(table);
    if p.oracle {
        lgv_oracle(&env, p, &mut out)?;
    }
    let series = (1..=p.curves)
        .map(|i| {
            let pts = (p.n_first..=p.n_last).filter_map(|n| pl.get(i, n).map(|v| (n as f64, v))).collect();
            Series::new(format!("L_{{{},{i}}}", p.k), pts)
        })
        .collect();
    out.plot(plots, "line_ensemble.svg", series, spec("Polymer line ensemble", "n", "L", false, false))?;
    Ok(out)
}

fn law_for(rw: &gibbs_lines::ensemble::RWHamiltonian<f64>, delta: f64) -> Result<DiscreteIncrementLaw, CliError> {
    let span = rw.center().abs() + rw.mean().abs() + 40.0 * rw.variance().sqrt() + delta;
    Ok(DiscreteIncrementLaw::discretize(rw, delta, span)?.trimmed(1e-30))
}

type Draw = (usize, Vec<Vec<f64>>);

fn gibbs_sample(g: &GibbsSample, seed: u64, plots: bool) -> Result<Artifacts, CliError> {
    let h = g.hamiltonian.build()?;
    let rw = g.random_walk.build()?;
    let grid = Grid::new(0.0, g.mesh, g.points)?;
    let last = g.points - 1;
    let curves: Vec<Vec<f64>> = g
        .entrance
        .iter()
        .zip(&g.exit)
        .map(|(a, b)| (0..g.points).map(|i| a + (b - a) * i as f64 / last as f64).collect())
        .collect();
    let upper = g.upper.map_or_else(Boundary::plus_infinity, Boundary::Constant);
    let lower = g.lower.map_or_else(Boundary::minus_infinity, Boundary::Constant);
    let template = LineEnsemble::new(grid, 1, curves, upper, lower)?;
    let law = law_for(&rw, g.delta)?;
    let target = GibbsTarget::new(&h, &rw);
    let k = g.entrance.len();

    let runs: Vec<(Vec<Draw>, f64)> = (0..g.replicas)
        .into_par_iter()
        .map(|r| -> Result<_, CliError> {
            let mut rng = rng_for(seed, "gibbs-sample-init", r as u64);
            let init = initialize(&template, &h, &law, &mut rng)?;
            let chain = ChainConfig::new(g.delta, g.sweeps, g.burn_in, derive_seed(seed, "gibbs-sample-chain", r as u64))?;
            let mut draws = Vec::new();
            let res = run_chain_with(&init, &target, &chain, |v| {
                if (v.sweep - g.burn_in).is_multiple_of(g.thin) {
                    draws.push((v.sweep, (0..v.curve_count()).map(|c| v.curve(c).to_vec()).collect()));
                }
            })?;
            Ok((draws, res.acceptance_rate()))
        })
        .collect::<Result<_, _>>()?;

    let mut out = Artifacts::default();
    let mut samples = Table::new("samples.csv", &["replica", "sweep", "curve", "x", "value"]);
    for (r, (draws, _)) in runs.iter().enumerate() {
        for (sweep, cs) in draws {
            for (c, vals) in cs.iter().enumerate() {
                for (i, v) in vals.iter().enumerate() {
                    samples.push(vec![r.to_string(), sweep.to_string(), (c + 1).to_string(), num(grid.site(i)), num(*v)]);
                }
            }
        }
    }
    let mut summary = Table::new("summary.csv", &["curve", "x", "mean", "sd", "draws"]);
    let mut series = Vec::new();
    for c in 0..k {
        let mut pts = Vec::new();
        let mut band = Vec::new();
        for i in 0..g.points {
            let vals: Vec<f64> = runs.iter().flat_map(|(d, _)| d.iter().map(move |(_, cs)| cs[c][i])).collect();
            let m = mean(&vals);
            let sd = if vals.len() > 1 { variance(&vals).sqrt() } else { 0.0 };
            summary.push(vec![(c + 1).to_string(), num(grid.site(i)), num(m), num(sd), vals.len().to_string()]);
            pts.push((grid.site(i), m));
            band.push((m - sd, m + sd));
        }
        series.push(Series::new(format!("curve {}", c + 1), pts).with_band(band));
    }
    out.tables.push(samples);
    out.tables.push(summary);
    let rates: Vec<f64> = runs.iter().map(|(_, a)| *a).collect();
    out.notes.insert("acceptance_rates".into(), json!(rates));

    let kept = runs.iter().map(|(d, _)| d.len()).min().unwrap_or(0);
    if g.replicas >= 2 && kept >= 2 {
        let mid = g.points / 2;
        let chains: Vec<Vec<f64>> = runs.iter().map(|(d, _)| d.iter().map(|(_, cs)| cs[0][mid]).collect()).collect();
        let rhat = gelman_rubin(&chains)?;
        out.reports.push(
            CheckReport::new("gelman-rubin", g.replicas as u64, 1.1 - rhat, 0.0, "potential scale reduction below 1.1")
                .param("curve", 1)
                .param("site", mid)
                .seed(seed)
                .details(json!({ "rhat": rhat })),
        );
    }
    out.plot(plots, "summary.svg", series, spec("Gibbs sample: mean ± sd", "x", "value", false, false))?;
    Ok(out)
}

fn monotone_coupling(m: &MonotoneCoupling, seed: u64) -> Result<Artifacts, CliError> {
    let sh = scaled_hamiltonians(m.n)?;
    let target = GibbsTarget::new(&sh.interaction, &sh.random_walk);
    let points = m.interior_sites + 2;
    let grid = Grid::new(0.0, 1.0, points)?;
    let d = m.delta;
    let lower_curves: Vec<Vec<f64>> = (0..m.curves)
        .map(|c| (0..points).map(|i| (-(20 * c as i64) + (i as i64 % 5) - 2) as f64 * d).collect())
        .collect();
    let upper_curves: Vec<Vec<f64>> = lower_curves
        .iter()
        .map(|v| v.iter().map(|x| x + m.gap as f64 * d).collect())
        .collect();
    let floor = -((20 * m.curves + 5) as f64) * d;
    let lower = LineEnsemble::new(grid, 1, lower_curves, Boundary::plus_infinity(), Boundary::Constant(floor))?;
    let upper = LineEnsemble::new(
        grid,
        1,
        upper_curves,
        Boundary::plus_infinity(),
        Boundary::Constant(floor + m.gap as f64 * d),
    )?;
    let per_sweep = (m.curves * m.interior_sites) as u64;
    let sweeps = m.updates.div_ceil(per_sweep) as usize;
    let cfg = ChainConfig::new(d, sweeps, 0, derive_seed(seed, "monotone-coupling", 0))?;
    let rep = monotone_coupled_run(&upper, &lower, &target, &cfg)?;

    let mut out = Artifacts::default();
    let mut t = Table::new("final_states.csv", &["chain", "curve", "site", "value"]);
    for (name, e) in [("upper", &rep.upper), ("lower", &rep.lower)] {
        for c in 1..=m.curves {
            for (i, v) in e.curve(c)?.iter().enumerate() {
                t.push(vec![name.into(), c.to_string(), i.to_string(), num(*v)]);
            }
        }
    }
    out.tables.push(t);
    out.reports.push(
        CheckReport::new(
            "monotone-coupling",
            rep.updates,
            -(rep.violations as f64),
            0.0,
            "no update may leave the upper chain below the lower one",
        )
        .param("N", m.n)
        .param("curves", m.curves)
        .param("interior_sites", m.interior_sites)
        .param("delta", d)
        .seed(seed)
        .details(json!({ "violations": rep.violations })),
    );
    if m.control {
        let dipped = DiscreteIncrementLaw::from_probs(1.0, -1, &[0.45, 0.1, 0.45])?;
        let zero = LocalHamiltonian::Zero;
        let bad = GibbsTarget::new(&zero, &dipped);
        let (found, violations) = match search_ratio_violation(&bad, 1.0, 1)? {
            None => (false, 0),
            Some(v) => {
                let g3 = Grid::new(0.0, 1.0, 3)?;
                let up = LineEnsemble::unbounded(g3, 1, vec![v.upper.to_vec()])?;
                let lo = LineEnsemble::unbounded(g3, 1, vec![v.lower.to_vec()])?;
                let c = ChainConfig::new(1.0, 2000, 0, derive_seed(seed, "coupling-control", 0))?;
                (true, monotone_coupled_run(&up, &lo, &bad, &c)?.violations)
            }
        };
        let detected = found && violations > 0;
        out.reports.push(
            CheckReport::new(
                "coupling-control",
                1,
                if detected { 0.0 } else { -1.0 },
                0.0,
                "the non-convex increment law must break the coupling",
            )
            .details(json!({ "ratio_violation_found": found, "ordering_violations": violations })),
        );
    }
    Ok(out)
}

fn verify_a1(a: &VerifyA1, seed: u64) -> Result<Artifacts, CliError> {
    let h = a.hamiltonian.build()?;
    let mut rng = rng_for(seed, "verify-A1", 0);
    let r = check_a1(&h, a.trials, &mut rng)?.seed(seed);
    let mut out = Artifacts::default();
    let mut t = Table::new("a1.csv", &["trials", "worst_margin", "monotonicity_margin", "increment_margin"]);
    t.push(vec![
        a.trials.to_string(),
        num(r.worst_margin),
        num(r.details["monotonicity_margin"].as_f64().unwrap_or(f64::NAN)),
        num(r.details["increment_margin"].as_f64().unwrap_or(f64::NAN)),
    ]);
    out.tables.push(t);
    out.reports.push(r);
    Ok(out)
}

fn verify_a2(a: &VerifyA2) -> Result<Artifacts, CliError> {
    use gibbs_lines::ensemble::IncrementEnergy;
    let rw = a.random_walk.build()?;
    let grid = Grid::new(a.from, (a.to - a.from) / (a.points - 1) as f64, a.points)?;
    let r = check_a2(&rw, &grid)?;
    let xs = grid.sites();
    let e: Vec<f64> = xs.iter().map(|&x| rw.energy(x)).collect();
    let mut t = Table::new("a2.csv", &["x", "energy", "second_difference"]);
    for i in 0..xs.len() {
        let d2 = if i == 0 || i + 1 == xs.len() {
            None
        } else {
            Some(e[i + 1] - 2.0 * e[i] + e[i - 1])
        };
        t.push(vec![num(xs[i]), num(e[i]), opt(d2)]);
    }
    let mut out = Artifacts::default();
    out.tables.push(t);
    out.reports.push(r);
    Ok(out)
}

fn verify_a3(a: &VerifyA3, seed: u64, plots: bool) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::default();
    let mut t = Table::new("a3.csv", &["N", "mesh", "worst_lhs", "worst_lhs_over_bound", "smallest_passing_c1", "pass"]);
    let mut pts = Vec::new();
    for &n in &a.ns {
        let mut rng = rng_for(seed, "verify-A3", n as u64);
        let r = check_a3(n, a.family, a.trials, a.c1, &mut rng)?.seed(seed);
        let mesh = 2.0 / (n as f64).sqrt();
        let lhs = r.details["worst_lhs"].as_f64().unwrap_or(f64::NAN);
        t.push(vec![
            n.to_string(),
            num(mesh),
            num(lhs),
            num(r.details["worst_lhs_over_bound"].as_f64().unwrap_or(f64::NAN)),
            num(r.details["smallest_passing_c1"].as_f64().unwrap_or(f64::NAN)),
            r.pass.to_string(),
        ]);
        pts.push((mesh, lhs));
        out.reports.push(r);
    }
    if pts.len() >= 2 && pts.iter().all(|p| p.1 > 0.0) {
        // Halving the mesh should halve the worst LHS within ±50%: ratio 2^{−s} ∈ [1/4, 3/4].
        let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|p| (p.0.ln(), p.1.ln())).unzip();
        let (slope, _) = linear_fit(&lx, &ly);
        let lo = (4.0f64 / 3.0).log2();
        out.reports.push(
            CheckReport::new(
                "A3-rate",
                pts.len() as u64,
                (slope - lo).min(2.0 - slope),
                0.0,
                "log-log slope of worst LHS against mesh in [log2(4/3), 2]",
            )
            .details(json!({ "slope": slope })),
        );
    }
    out.tables.push(t);
    out.plot(
        plots,
        "a3.svg",
        vec![Series::new("worst LHS", pts)],
        spec("A3: worst LHS against mesh", "mesh", "worst LHS", true, true),
    )?;
    Ok(out)
}

fn verify_a4(a: &VerifyA4, seed: u64, plots: bool) -> Result<Artifacts, CliError> {
    let r = check_a4(&A4Config {
        ns: a.ns.clone(),
        duration: a.duration,
        z: a.z,
        samples: a.samples,
        family: a.family,
        delta0: a.delta0,
        seed,
    })?;
    let mut out = Artifacts::default();
    let mut t = Table::new("a4.csv", &["N", "steps", "log_scale", "median", "q99", "mean"]);
    for row in &r.rows {
        t.push(vec![
            row.n.to_string(),
            row.steps.to_string(),
            num(row.x),
            num(row.median),
            num(row.q99),
            num(row.mean),
        ]);
    }
    out.tables.push(t);
    let xs: Vec<f64> = r.rows.iter().map(|row| row.x.exp()).collect();
    let series = vec![
        Series::new("q99", xs.iter().zip(&r.rows).map(|(&x, row)| (x, row.q99)).collect()),
        Series::new("median", xs.iter().zip(&r.rows).map(|(&x, row)| (x, row.median)).collect()),
    ];
    out.plot(
        plots,
        "a4.svg",
        series,
        spec("A4: coupled sup-distance", "N^-1/2 log(NL)", "distance", true, true),
    )?;
    out.reports.push(r.report);
    Ok(out)
}

fn gibbs_invariance(g: &GibbsInvariance, seed: u64) -> Result<Artifacts, CliError> {
    let cfg = InvarianceConfig {
        gamma: g.gamma,
        k: g.k,
        curves: g.curves,
        columns: g.columns,
        replicas: g.replicas,
        delta: g.delta,
        sweeps: g.sweeps,
        seed,
        bias_check: g.bias_check,
    };
    let (h, rw) = polymer_hamiltonians(g.gamma)?;
    let r = gibbs_invariance_test(&cfg, &h, &rw)?;
    let mut out = Artifacts::default();
    let mut t = Table::new(
        "invariance.csv",
        &["curve", "column", "ks_statistic", "p_value", "mean_original", "mean_resampled"],
    );
    for s in &r.sites {
        t.push(vec![
            s.curve.to_string(),
            s.column.to_string(),
            num(s.statistic),
            num(s.p_value),
            num(s.mean_original),
            num(s.mean_resampled),
        ]);
    }
    out.tables.push(t);
    out.reports.push(r.report);
    if g.control {
        let gamma = g.gamma;
        let wrong = FnEnergy(move |x: f64| gamma * x);
        let bad = gibbs_invariance_test(&cfg, &h, &wrong)?;
        out.reports.push(
            CheckReport::new(
                "invariance-control",
                g.replicas as u64,
                if bad.report.pass { -1.0 } else { 0.0 },
                0.0,
                "dropping the e^{-x} term must be detected",
            )
            .details(json!({ "control_adjusted_p": bad.adjusted_p })),
        );
    }
    Ok(out)
}

fn z_comparison(z: &ZComparison, seed: u64, plots: bool) -> Result<Artifacts, CliError> {
    let r = z_comparison_check(&ZComparisonConfig {
        ns: z.ns.clone(),
        samples: z.samples,
        lower: z.lower,
        brownian_points: z.brownian_points,
        family: z.family,
        delta0: z.delta0,
        seed,
    })?;
    let mut out = Artifacts::default();
    let mut t = Table::new("z_comparison.csv", &["N", "log_z", "stderr", "gap", "joint_stderr"]);
    t.push(vec![
        "brownian".into(),
        num(r.brownian.log_z),
        num(r.brownian.stderr),
        opt(None),
        opt(None),
    ]);
    for row in &r.rows {
        t.push(vec![
            row.n.to_string(),
            num(row.discrete.log_z),
            num(row.discrete.stderr),
            num(row.gap),
            num(row.joint_stderr),
        ]);
    }
    out.tables.push(t);
    let pts: Vec<(f64, f64)> = r.rows.iter().map(|row| (row.n as f64, row.gap)).collect();
    out.plot(
        plots,
        "z_comparison.svg",
        vec![
            Series::new("|Z_N - Z_inf|", pts),
            Series::new("3 x joint stderr", r.rows.iter().map(|row| (row.n as f64, 3.0 * row.joint_stderr)).collect()),
        ],
        spec("Normalizing constant gap", "N", "gap", true, false),
    )?;
    out.reports.push(r.report);
    Ok(out)
}

/// Scaled ensembles at noise level `n` over `[x_min, x_max]`, one per replica.
fn scaled_replicas(
    n: usize,
    t: f64,
    curves: usize,
    x_min: f64,
    x_max: f64,
    replicas: usize,
    seed: u64,
    stream: &str,
) -> Result<Vec<gibbs_lines::scaling::ScaledEnsemble>, CliError> {
    let s = (n as f64).sqrt();
    let layer = (n as f64 * t / 8.0).round() as usize;
    let cols = (layer as i64 + (x_max * s / 2.0 + 1e-9).floor() as i64).max(1) as usize;
    let stream = format!("{stream}-N{n}");
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, &stream, r as u64);
            let env = Environment::sample(s, cols, layer, &mut rng)?;
            Ok(scale_ensemble(&env, n, t, curves, x_min, x_max)?)
        })
        .collect()
}

fn scaling_study(s: &ScalingStudy, seed: u64, plots: bool) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::default();
    let mut t = Table::new("scaling.csv", &["N", "curve", "x", "mean", "variance", "defined"]);
    let mut tilt = Table::new(
        "tilt.csv",
        &["N", "xi", "mu", "residual", "cumulant_max_error", "interaction_scale", "rw_centering"],
    );
    let mut series = Vec::new();
    for &n in &s.ns {
        let reps = scaled_replicas(n, s.t, s.curves, s.x_min, s.x_max, s.replicas, seed, "scaling-study")?;
        let grid = reps[0].grid;
        for c in 1..=s.curves {
            let mut pts = Vec::new();
            let mut band = Vec::new();
            for site in 0..grid.count() {
                let vals: Vec<f64> = reps.iter().filter_map(|e| e.get(c, site)).collect();
                let x = grid.site(site);
                let (m, v) = if vals.len() >= 2 {
                    (Some(mean(&vals)), Some(variance(&vals)))
                } else {
                    (None, None)
                };
                t.push(vec![n.to_string(), c.to_string(), num(x), opt(m), opt(v), vals.len().to_string()]);
                if let (1, Some(m), Some(v)) = (c, m, v) {
                    let shifted = m + x * x / 2.0;
                    pts.push((x, shifted));
                    band.push((shifted - v.sqrt(), shifted + v.sqrt()));
                }
            }
            if c == 1 {
                series.push(Series::new(format!("N={n}"), pts).with_band(band));
            }
        }
        let tp = tilt_parameters(n)?;
        let cc = tilt_cumulant_check(n)?;
        let info = scaled_hamiltonians(n)?.info();
        tilt.push(vec![
            n.to_string(),
            num(tp.xi),
            num(tp.mu),
            num(tp.residual),
            num(cc.max_error),
            num(info.interaction_scale),
            num(info.rw_centering),
        ]);
        if !s.stationarity_xs.is_empty() {
            let samples: Vec<Vec<f64>> = s
                .stationarity_xs
                .iter()
                .map(|&x| reps.iter().map(|e| e.interpolate(1, x)).collect::<Result<Vec<f64>, _>>())
                .collect::<Result<_, _>>()?;
            let st = stationarity_statistics(&s.stationarity_xs, &samples)?;
            let min_p = st.pairs.iter().map(|p| p.p_value).fold(1.0, f64::min);
            out.reports.push(
                CheckReport::new(
                    "stationarity",
                    s.replicas as u64,
                    min_p - st.threshold,
                    0.0,
                    "pairwise KS p-values of L1 + x^2/2 above 0.001 / #pairs",
                )
                .param("N", n)
                .param("xs", &s.stationarity_xs)
                .seed(seed)
                .details(serde_json::to_value(&st).unwrap_or(Value::Null)),
            );
        }
    }
    out.tables.push(t);
    out.tables.push(tilt);
    out.plot(
        plots,
        "scaling.svg",
        series,
        spec("Top curve plus parabola: mean ± sd", "x", "L1 + x^2/2", false, false),
    )?;
    Ok(out)
}

fn tightness_study(ts: &TightnessStudy, seed: u64, plots: bool) -> Result<Artifacts, CliError> {
    let mut inputs = Vec::new();
    for &n in &ts.ns {
        let reps = scaled_replicas(n, ts.t, ts.curves, -ts.half_width, ts.half_width, ts.replicas, seed, "tightness-study")?;
        let mut grid = None;
        let replicas = reps
            .iter()
            .map(|e| {
                let l = e.to_line_ensemble()?;
                grid = Some(*l.grid());
                Ok(l.curves().map(|c| c.to_vec()).collect())
            })
            .collect::<Result<Vec<Vec<Vec<f64>>>, CliError>>()?;
        let grid = grid.ok_or_else(|| CliError::Config("no replicas".into()))?;
        inputs.push(TightnessInput { n, grid, replicas });
    }
    let r = tightness_proxy(&inputs, (-ts.half_width, ts.half_width), ts.rho, ts.eta, &ts.radii)?;
    let mut out = Artifacts::default();
    let mut t = Table::new("tightness.csv", &["N", "radius", "probability"]);
    let mut series = Vec::new();
    for (idx, &n) in r.ns.iter().enumerate() {
        let mut pts = Vec::new();
        for (j, &radius) in r.radii.iter().enumerate() {
            let p = r.probabilities[idx][j];
            t.push(vec![n.to_string(), num(radius), num(p)]);
            pts.push((radius, p));
        }
        series.push(Series::new(format!("N={n}"), pts));
    }
    out.tables.push(t);
    out.notes.insert("common_radius".into(), json!(r.common_radius));
    out.plot(
        plots,
        "tightness.svg",
        series,
        spec("Modulus of continuity: P(omega(r) <= rho)", "r", "probability", false, false),
    )?;
    out.reports.push(r.report);
    Ok(out)
}
