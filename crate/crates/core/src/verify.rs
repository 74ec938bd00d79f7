//! Reduced-scale self checks: fixtures, oracles, invariants and scaling
//! trends, each small enough to finish in seconds.

use crate::dynamics::{run, run_coupled, single_player_divergence, tau_schedule, RunConfig};
use crate::error::Result;
use crate::experiment::{
    audit, auto_schedule, avg_clamped_regret, mean_by_n, regret_bound, run_sweep, Adjacent,
    GraphKind, ScheduleOverrides, SweepConfig,
};
use crate::game::{exploitability, monotonicity_gap, zero_sum_residual};
use crate::graph_gen::{
    bfs_distances, fixture_chain_flip, fixture_triplet_chain, fixture_triplet_chain_adjacent,
    gen_chain, gen_dense, gen_sparse,
};
use crate::oracle::{best_response_dynamics, verify_pure_ne};
use crate::privacy::{empirical_budget, rdp_to_dp};
use crate::rng::{keyed_rng, Domain};
use crate::simplex::project_simplex;
use crate::{PolymatrixGame, StrategyProfile, UtilityMatrix};
use rand::Rng;
use std::time::Instant;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Knobs for the negative path.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Damage the chain fixture's first matrix before verifying its equilibrium.
    pub corrupt_fixture: bool,
}

type CheckFn = fn(&VerifyOptions) -> Result<(bool, String)>;

const CHECKS: [(&str, CheckFn); 11] = [
    ("dense scaling", dense_scaling),
    ("sparse privacy", sparse_privacy),
    ("audit soundness", audit_soundness),
    ("regret bound", regret_within_bound),
    ("coupled locality", coupled_locality),
    ("bounded divergence", bounded_divergence),
    ("tau identities", tau_identities),
    ("oracle agreement", oracle_agreement),
    ("fixtures", fixtures),
    ("rdp conversion", rdp_conversion),
    ("zero-sum structure", zero_sum_structure),
];

/// Runs every check in order. Errors inside a check turn into a failure line.
pub fn run_checks(opts: &VerifyOptions) -> Vec<Check> {
    CHECKS
        .iter()
        .map(|&(name, f)| {
            let start = Instant::now();
            let (pass, detail) = f(opts).unwrap_or_else(|e| (false, format!("error: {e}")));
            Check {
                name,
                pass,
                detail: format!("{detail} [{:.1}s]", start.elapsed().as_secs_f64()),
            }
        })
        .collect()
}

fn random_profile(game: &PolymatrixGame, rng: &mut impl Rng) -> Result<StrategyProfile> {
    let strategies = game
        .actions()
        .iter()
        .map(|&a| {
            let raw: Vec<f64> = (0..a).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    StrategyProfile::new(strategies)
}

fn sci(xs: &[f64]) -> String {
    let cells: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", cells.join(", "))
}

fn sweep(kind: GraphKind, ns: &[usize]) -> Result<Vec<crate::experiment::SweepRow>> {
    run_sweep(&SweepConfig {
        kind,
        ns: ns.to_vec(),
        actions: 4,
        seeds: (0..4).collect(),
        alpha: 2.0,
        zero_sum: false,
        overrides: ScheduleOverrides::default(),
        no_timing: true,
    })
}

fn dense_scaling(_: &VerifyOptions) -> Result<(bool, String)> {
    let ns = [64, 128, 256];
    let rows = sweep(GraphKind::Dense { p: 0.25 }, &ns)?;
    let expl: Vec<f64> = ns.iter().map(|&n| mean_by_n(&rows, n, |r| r.avg_exploitability)).collect();
    let eps: Vec<f64> = ns.iter().map(|&n| mean_by_n(&rows, n, |r| r.eps_theory)).collect();
    let ok = rows.iter().all(|r| r.is_ok())
        && expl[2] < expl[0]
        && eps.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, format!("exploitability {expl:.4?}, eps_theory {}", sci(&eps))))
}

fn sparse_privacy(_: &VerifyOptions) -> Result<(bool, String)> {
    let ns = [256, 1024];
    let rows = sweep(GraphKind::Sparse { c: 2 }, &ns)?;
    let eps: Vec<f64> = ns.iter().map(|&n| mean_by_n(&rows, n, |r| r.eps_theory)).collect();
    let ok = rows.iter().all(|r| r.is_ok()) && eps[1] < eps[0];
    Ok((ok, format!("eps_theory {}", sci(&eps))))
}

fn audit_soundness(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for dense in [true, false] {
        for seed in 0..5u64 {
            let game = if dense {
                gen_dense(48, 0.25, 3, false, seed)?
            } else {
                gen_sparse(48, 2, 3, false, seed)?
            };
            let cfg = auto_schedule(&game, dense, &ScheduleOverrides::default())?
                .config
                .with_seed(seed + 500);
            let edge = game.edges()[seed as usize * 31 % game.edges().len()];
            let report = audit(&game, Some(edge), &cfg, 2.0, 1e-5, Adjacent::Resample { seed })?;
            worst = worst.min(report.theoretical_budget - report.empirical_budget_avg);
            count += 1;
        }
    }
    Ok((worst >= -1e-12, format!("{count} audits, min slack {worst:.3e}")))
}

fn regret_within_bound(_: &VerifyOptions) -> Result<(bool, String)> {
    let game = gen_dense(128, 0.25, 3, false, 1)?;
    let cfg = auto_schedule(&game, true, &ScheduleOverrides::default())?.config;
    let mut lhs = 0.0;
    for s in 0..5 {
        let trace = run(&game, &cfg.clone().with_seed(s))?;
        lhs += avg_clamped_regret(&game, trace.iterates())? / 5.0;
    }
    let n_bar = crate::dynamics::harmonic_mean_degree(&game);
    let rhs = regret_bound(cfg.eta, cfg.sigma, cfg.rounds, 3, 128, n_bar);
    Ok((lhs <= rhs, format!("{lhs:.4} <= {rhs:.3}")))
}

fn coupled_locality(_: &VerifyOptions) -> Result<(bool, String)> {
    let game = gen_chain(32, 2, false, 4)?;
    let mut rng = keyed_rng(4, Domain::Audit, 0, 1);
    let mut fresh = || {
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
        UtilityMatrix::new(2, 2, v)
    };
    let other = game.with_edge_utilities(0, 1, fresh()?, fresh()?)?;
    let cfg = RunConfig::new(0.4, 0.3, 20).with_seed(8);
    let (a, b) = run_coupled(&game, &other, &cfg)?;
    let dist = bfs_distances(&game, &[0, 1])?;
    let mut gap = 0.0f64;
    for (i, d) in dist.iter().enumerate() {
        let d = d.unwrap_or(usize::MAX).min(cfg.rounds);
        for t in 0..=d {
            gap = gap.max(crate::simplex::l2_distance(a.clean[t].strategy(i), b.clean[t].strategy(i)));
        }
    }
    let budget = empirical_budget(&a, &b, cfg.sigma, 2.0)?;
    let far = dist
        .iter()
        .filter(|d| d.is_none_or(|d| d >= cfg.rounds))
        .count();
    let zeros = budget.per_player.iter().filter(|&&x| x == 0.0).count();
    Ok((
        gap <= 1e-12 && zeros >= far && far > 0,
        format!("max early gap {gap:.1e}, {zeros} zero budgets for {far} distant players"),
    ))
}

fn bounded_divergence(_: &VerifyOptions) -> Result<(bool, String)> {
    let plus = vec![1.0, -1.0, 1.0];
    let minus: Vec<f64> = plus.iter().map(|x| -x).collect();
    let tau = 1.0;
    let bound = 2.0 * 3f64.sqrt() / tau;
    let d = single_player_divergence(
        3,
        0.5,
        tau,
        0.5,
        3,
        2000,
        |t, _| if t % 3 == 2 { minus.clone() } else { plus.clone() },
        |t, _| if t % 3 == 2 { plus.clone() } else { minus.clone() },
    )?;
    let worst = d.into_iter().fold(0.0, f64::max);
    Ok((worst <= bound + 1e-9, format!("max {worst:.4} <= {bound:.4}")))
}

fn tau_identities(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let game = gen_sparse(20 + seed as usize, 1 + (seed % 3) as usize, 2, false, seed)?;
        let tau = tau_schedule(&game)?;
        let n = game.n_players() as f64;
        let n_bar = crate::dynamics::harmonic_mean_degree(&game);
        let mean = tau.tau.iter().sum::<f64>() / n;
        worst = worst.max((mean - tau.constant / n_bar).abs());
    }
    Ok((worst <= 1e-12, format!("max identity error {worst:.1e}")))
}

fn oracle_agreement(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut rng = keyed_rng(11, Domain::Profile, 0, 0);
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let n = rng.random_range(2..8);
        let a = rng.random_range(1..5);
        let game = gen_dense(n, 0.5, a, k % 2 == 0, k)?;
        let p = random_profile(&game, &mut rng)?;
        let i = rng.random_range(0..n);
        let g = game.gradient_at(&p, i).values;
        let own: f64 = g.iter().zip(p.strategy(i)).map(|(x, y)| x * y).sum();
        let brute = g.iter().map(|&x| own - x).fold(0.0, f64::max);
        worst = worst.max((exploitability(&game, &p, i)? - brute).abs());
    }
    let mut kkt = 0.0f64;
    for _ in 0..100 {
        let v: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = project_simplex(&v)?.into_inner();
        kkt = kkt.max((x.iter().sum::<f64>() - 1.0).abs());
        let k = (0..5).find(|&k| x[k] > 0.0).unwrap_or(0);
        let theta = v[k] - x[k];
        for (vk, xk) in v.iter().zip(&x) {
            let r = if *xk > 0.0 { (vk - xk - theta).abs() } else { (vk - theta).max(0.0) };
            kkt = kkt.max(r);
        }
    }
    Ok((
        worst <= 1e-12 && kkt <= 1e-12,
        format!("exploitability gap {worst:.1e}, KKT residual {kkt:.1e}"),
    ))
}

fn fixtures(opts: &VerifyOptions) -> Result<(bool, String)> {
    let (mut game, ne) = fixture_chain_flip(6, false)?;
    if opts.corrupt_fixture {
        let bad = UtilityMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]])?;
        let partner = bad.negated_transpose();
        game = game.with_edge_utilities(0, 1, bad, partner)?;
    }
    let chain_ok = verify_pure_ne(&game, &ne)?;
    let (flipped, flipped_ne) = fixture_chain_flip(6, true)?;
    let flip_ok = verify_pure_ne(&flipped, &flipped_ne)? && !verify_pure_ne(&flipped, &ne)?;
    let (triplets, all_a1) = fixture_triplet_chain(3)?;
    let mut trip_ok = verify_pure_ne(&triplets, &all_a1)?;
    for k in 0..3 {
        let (adj, adj_ne) = fixture_triplet_chain_adjacent(3, k)?;
        let brd = best_response_dynamics(&adj, 100, 1e-9)?;
        trip_ok &= brd.converged && brd.profile == adj_ne;
    }
    Ok((
        chain_ok && flip_ok && trip_ok,
        format!("chain {chain_ok}, flipped chain {flip_ok}, triplets {trip_ok}"),
    ))
}

fn rdp_conversion(_: &VerifyOptions) -> Result<(bool, String)> {
    let inf = rdp_to_dp(f64::INFINITY, 0.3, 0.5)?;
    let two = rdp_to_dp(2.0, 1.0, (-1.0f64).exp())?;
    Ok((inf == 0.3 && two == 2.0, format!("{inf}, {two}")))
}

fn zero_sum_structure(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut rng = keyed_rng(12, Domain::Profile, 0, 0);
    let mut residual = 0.0f64;
    let mut gap = f64::INFINITY;
    for s in 0..10u64 {
        let sparse = gen_sparse(40, 2, 3, true, s)?;
        let complete = gen_dense(10, 1.0, 3, true, s)?;
        for _ in 0..10 {
            let p = random_profile(&sparse, &mut rng)?;
            residual = residual.max(zero_sum_residual(&sparse, &p)?.abs());
            let a = random_profile(&complete, &mut rng)?;
            let b = random_profile(&complete, &mut rng)?;
            gap = gap.min(monotonicity_gap(&complete, &a, &b)?);
        }
    }
    Ok((
        residual < 1e-9 && gap >= -1e-9,
        format!("max |residual| {residual:.1e}, min gap on regular graphs {gap:.1e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corruption_breaks_fixture_check() {
        let (ok, _) = fixtures(&VerifyOptions { corrupt_fixture: true }).unwrap();
        assert!(!ok);
        let (ok, _) = fixtures(&VerifyOptions::default()).unwrap();
        assert!(ok);
    }
}
