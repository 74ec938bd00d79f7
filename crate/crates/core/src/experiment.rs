//! Experiment orchestration: schedules for generated games, run metrics,
//! privacy audits of resampled edges and N-sweeps.

use crate::dynamics::{
    harmonic_mean_degree, hyperparams_dense, hyperparams_sparse, run, run_coupled, sparse_rounds,
    RunConfig, Trace,
};
use crate::error::{Error, Result};
use crate::game::{
    avg_exploitability, regret_per_action, PolymatrixGame, StrategyProfile,
};
use crate::graph_gen::{gen_dense, gen_sparse, sample_edge_utilities};
use crate::privacy::{
    clubsuit, empirical_budget, rdp_to_dp, spadesuit, spadesuit_worst_edge,
    theoretical_budget_from, PrivacyReport,
};
use crate::rng::{keyed_rng, Domain};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// Random graph family of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphKind {
    Dense { p: f64 },
    Sparse { c: usize },
}

impl GraphKind {
    pub fn generate(&self, n: usize, actions: usize, zero_sum: bool, seed: u64) -> Result<PolymatrixGame> {
        match *self {
            GraphKind::Dense { p } => gen_dense(n, p, actions, zero_sum, seed),
            GraphKind::Sparse { c } => gen_sparse(n, c, actions, zero_sum, seed),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, GraphKind::Dense { .. })
    }
}

/// Manual replacements for the automatic schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOverrides {
    pub eta: Option<f64>,
    pub sigma: Option<f64>,
    pub rounds: Option<usize>,
}

/// A run configuration for a specific game together with the budget factors
/// it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub config: RunConfig,
    pub clubsuit: f64,
    /// Worst case over edges, evaluated at `config.rounds`.
    pub spadesuit: f64,
    pub worst_edge: (usize, usize),
}

/// Trade-off schedule for a generated game. Dense games use the density
/// exponent `ln N_bar / ln N` of the realized graph.
pub fn auto_schedule(
    game: &PolymatrixGame,
    dense: bool,
    overrides: &ScheduleOverrides,
) -> Result<Schedule> {
    let n = game.n_players();
    let actions = game.max_actions();
    let club = clubsuit(game, actions)?;
    let mut config = if dense {
        let p = (harmonic_mean_degree(game).ln() / (n as f64).ln()).clamp(f64::MIN_POSITIVE, 1.0);
        hyperparams_dense(n, p, actions, club)?
    } else {
        let rounds = sparse_rounds(n, game.max_degree())?;
        let (spade, _) = spadesuit_worst_edge(game, rounds, actions)?;
        hyperparams_sparse(n, game.max_degree(), actions, spade)?
    };
    if let Some(rounds) = overrides.rounds {
        config.rounds = rounds;
    }
    if let Some(eta) = overrides.eta {
        config.eta = eta;
    }
    if let Some(sigma) = overrides.sigma {
        config.sigma = sigma;
    }
    config.validate()?;
    let (spade, worst_edge) = spadesuit_worst_edge(game, config.rounds, actions)?;
    Ok(Schedule {
        config,
        clubsuit: club,
        spadesuit: spade,
        worst_edge,
    })
}

/// Bound on player-averaged clamped regret:
///
/// ```text
/// 1/(eta T) + A sigma^2/(2 eta) + (2 eta^2/sigma + 7 sigma/2) A^{3/2}
///   + 1/(2 N_bar^{4/9} ln N) + 2 eta sqrt(A)/(sigma N_bar^{4/9} ln N)
/// ```
pub fn regret_bound(eta: f64, sigma: f64, rounds: usize, actions: usize, n: usize, n_bar: f64) -> f64 {
    let a = actions as f64;
    let t = rounds as f64;
    let damp = n_bar.powf(4.0 / 9.0) * (n as f64).ln();
    1.0 / (eta * t)
        + a * sigma * sigma / (2.0 * eta)
        + (2.0 * eta * eta / sigma + 3.5 * sigma) * a.powf(1.5)
        + 1.0 / (2.0 * damp)
        + 2.0 * eta * a.sqrt() / (sigma * damp)
}

/// Mean over players of `max(regret_i, 0)` on `pi^(1..=T)`.
pub fn avg_clamped_regret(game: &PolymatrixGame, iterates: &[StrategyProfile]) -> Result<f64> {
    let n = game.n_players();
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            regret_per_action(game, iterates, i)
                .map(|r| r.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: usize,
    pub avg_exploitability: f64,
}

/// Metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub n_players: usize,
    pub t_rounds: usize,
    pub eta: f64,
    pub sigma: f64,
    pub sigma_sqrt_t: f64,
    pub tau_constant: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub final_regret: Vec<f64>,
    pub avg_clamped_regret: f64,
}

/// Exploitability every `max(1, T/20)` rounds plus final regrets.
pub fn run_metrics(game: &PolymatrixGame, trace: &Trace) -> Result<RunMetrics> {
    let rounds = trace.rounds();
    let every = (rounds / 20).max(1);
    let mut checkpoints = Vec::new();
    for t in (every..=rounds).step_by(every) {
        checkpoints.push(Checkpoint {
            t,
            avg_exploitability: avg_exploitability(game, &trace.clean[t])?,
        });
    }
    if checkpoints.last().map(|c| c.t) != Some(rounds) {
        checkpoints.push(Checkpoint {
            t: rounds,
            avg_exploitability: avg_exploitability(game, &trace.clean[rounds])?,
        });
    }
    let final_regret = (0..game.n_players())
        .map(|i| {
            regret_per_action(game, trace.iterates(), i)
                .map(|r| r.into_iter().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    let avg_clamped_regret =
        final_regret.iter().map(|r| r.max(0.0)).sum::<f64>() / game.n_players() as f64;
    Ok(RunMetrics {
        n_players: game.n_players(),
        t_rounds: rounds,
        eta: trace.config.eta,
        sigma: trace.config.sigma,
        sigma_sqrt_t: trace.config.sigma * (rounds as f64).sqrt(),
        tau_constant: trace.tau.constant,
        checkpoints,
        final_regret,
        avg_clamped_regret,
    })
}

/// Copy of `game` with edge `(i, j)` resampled from `seed`.
pub fn resample_edge(game: &PolymatrixGame, edge: (usize, usize), seed: u64) -> Result<PolymatrixGame> {
    let (i, j) = edge;
    if i >= game.n_players() || j >= game.n_players() || !game.has_edge(i, j) {
        return Err(Error::EdgeNotInGame(i, j));
    }
    let mut rng = keyed_rng(seed, Domain::Audit, i as u64, j as u64);
    let (u_ij, u_ji) = sample_edge_utilities(
        &mut rng,
        game.action_count(i),
        game.action_count(j),
        game.is_zero_sum(),
    );
    game.with_edge_utilities(i, j, u_ij, u_ji)
}

/// How an audit builds the adjacent game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacent {
    Resample { seed: u64 },
    /// The adjacent game equals the original.
    Identical,
}

/// Coupled run of `game` and its edge-resampled neighbor; reports the
/// theoretical and realized Rényi budgets.
pub fn audit(
    game: &PolymatrixGame,
    edge: Option<(usize, usize)>,
    config: &RunConfig,
    alpha: f64,
    delta: f64,
    adjacent: Adjacent,
) -> Result<PrivacyReport> {
    if config.sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    config.validate()?;
    let actions = game.max_actions();
    let (worst, worst_edge) = spadesuit_worst_edge(game, config.rounds, actions)?;
    let edge = edge.unwrap_or(worst_edge);
    let spade = spadesuit(game, config.rounds, edge, actions)?;
    let other = match adjacent {
        Adjacent::Resample { seed } => resample_edge(game, edge, seed)?,
        Adjacent::Identical => game.clone(),
    };
    let (a, b) = run_coupled(game, &other, config)?;
    let empirical = empirical_budget(&a, &b, config.sigma, alpha)?;
    let club = clubsuit(game, actions)?;
    let theory = theoretical_budget_from(alpha, config.eta, config.sigma, config.rounds, club, spade)?;
    let dp_epsilon = if alpha > 1.0 {
        Some(rdp_to_dp(alpha, theory, delta)?)
    } else {
        None
    };
    Ok(PrivacyReport {
        alpha,
        n_players: game.n_players(),
        max_actions: actions,
        t_rounds: config.rounds,
        eta: config.eta,
        sigma: config.sigma,
        edge,
        clubsuit: club,
        spadesuit: spade,
        spadesuit_worst_case: worst,
        theoretical_budget: theory,
        empirical_budget_per_player: empirical.per_player,
        empirical_budget_avg: empirical.average,
        delta,
        dp_epsilon,
    })
}

/// Parameters of an N-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: GraphKind,
    pub ns: Vec<usize>,
    pub actions: usize,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub zero_sum: bool,
    pub overrides: ScheduleOverrides,
    /// Write `wall_ms = 0` so output is byte-for-byte reproducible.
    pub no_timing: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSweep("N list must be nonempty and strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidSweep("seed list is empty".into()));
        }
        if self.alpha.is_nan() || self.alpha < 1.0 {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if self.actions == 0 {
            return Err(Error::InvalidSweep("action count must be at least 1".into()));
        }
        Ok(())
    }
}

pub const SWEEP_HEADER: &str =
    "n,seed,t_rounds,eta,sigma,avg_exploitability,eps_theory,eps_empirical,clubsuit,spadesuit,wall_ms,status";

/// One `(N, seed)` point of a sweep. Failed points keep zeros and carry the
/// error in `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub seed: u64,
    pub t_rounds: usize,
    pub eta: f64,
    pub sigma: f64,
    pub avg_exploitability: f64,
    pub eps_theory: f64,
    pub eps_empirical: f64,
    pub clubsuit: f64,
    pub spadesuit: f64,
    pub wall_ms: u64,
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(n: usize, seed: u64, err: &Error) -> Self {
        Self {
            n,
            seed,
            t_rounds: 0,
            eta: 0.0,
            sigma: 0.0,
            avg_exploitability: 0.0,
            eps_theory: 0.0,
            eps_empirical: 0.0,
            clubsuit: 0.0,
            spadesuit: 0.0,
            wall_ms: 0,
            status: format!("error: {err}"),
        }
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
            self.n,
            self.seed,
            self.t_rounds,
            self.eta,
            self.sigma,
            self.avg_exploitability,
            self.eps_theory,
            self.eps_empirical,
            self.clubsuit,
            self.spadesuit,
            self.wall_ms,
            self.status.replace(',', ";"),
        )
    }
}

/// Evaluates one sweep point: generate, schedule, coupled run on a randomly
/// chosen resampled edge, metrics.
pub fn sweep_point(cfg: &SweepConfig, n: usize, seed: u64) -> Result<SweepRow> {
    let start = Instant::now();
    let game = cfg.kind.generate(n, cfg.actions, cfg.zero_sum, seed)?;
    let schedule = auto_schedule(&game, cfg.kind.is_dense(), &cfg.overrides)?;
    let config = schedule.config.clone().with_seed(seed);
    let mut rng = keyed_rng(seed, Domain::Audit, n as u64, u64::MAX);
    let edge = game.edges()[rng.random_range(0..game.edges().len())];
    let other = resample_edge(&game, edge, seed)?;
    let (a, b) = run_coupled(&game, &other, &config)?;
    let avg = avg_clamped_regret(&game, a.iterates())?;
    let eps_theory = if config.sigma == 0.0 {
        f64::INFINITY
    } else {
        theoretical_budget_from(
            cfg.alpha,
            config.eta,
            config.sigma,
            config.rounds,
            schedule.clubsuit,
            schedule.spadesuit,
        )?
    };
    let eps_empirical = if config.sigma == 0.0 {
        f64::NAN
    } else {
        empirical_budget(&a, &b, config.sigma, cfg.alpha)?.average
    };
    Ok(SweepRow {
        n,
        seed,
        t_rounds: config.rounds,
        eta: config.eta,
        sigma: config.sigma,
        avg_exploitability: avg,
        eps_theory,
        eps_empirical,
        clubsuit: schedule.clubsuit,
        spadesuit: schedule.spadesuit,
        wall_ms: if cfg.no_timing {
            0
        } else {
            start.elapsed().as_millis() as u64
        },
        status: "ok".into(),
    })
}

/// All points, ordered by `N` then seed. Seeds of one `N` run in parallel.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.ns.len() * cfg.seeds.len());
    for &n in &cfg.ns {
        let batch: Vec<SweepRow> = cfg
            .seeds
            .par_iter()
            .map(|&seed| sweep_point(cfg, n, seed).unwrap_or_else(|e| SweepRow::failed(n, seed, &e)))
            .collect();
        rows.extend(batch);
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv_line())?;
    }
    Ok(())
}

/// Mean of `f` over successful rows with the given `N`.
pub fn mean_by_n(rows: &[SweepRow], n: usize, f: impl Fn(&SweepRow) -> f64) -> f64 {
    let vals: Vec<f64> = rows.iter().filter(|r| r.n == n && r.is_ok()).map(f).collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Runs `game` under `config` and returns the trace and its metrics.
pub fn run_with_metrics(game: &PolymatrixGame, config: &RunConfig) -> Result<(Trace, RunMetrics)> {
    let trace = run(game, config)?;
    let metrics = run_metrics(game, &trace)?;
    Ok((trace, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_sweep() -> SweepConfig {
        SweepConfig {
            kind: GraphKind::Dense { p: 0.3 },
            ns: vec![16, 32],
            actions: 2,
            seeds: vec![0, 1],
            alpha: 2.0,
            zero_sum: false,
            overrides: ScheduleOverrides::default(),
            no_timing: true,
        }
    }

    #[test]
    fn sweep_rows_are_ordered_and_reproducible() {
        let cfg = small_sweep();
        let rows = run_sweep(&cfg).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.n, r.seed)).collect();
        assert_eq!(keys, vec![(16, 0), (16, 1), (32, 0), (32, 1)]);
        assert!(rows.iter().all(SweepRow::is_ok));
        assert_eq!(rows, run_sweep(&cfg).unwrap());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER);
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn sweep_validation() {
        let mut cfg = small_sweep();
        cfg.ns = vec![32, 16];
        assert!(matches!(run_sweep(&cfg), Err(Error::InvalidSweep(_))));
        let mut cfg = small_sweep();
        cfg.seeds.clear();
        assert!(matches!(run_sweep(&cfg), Err(Error::InvalidSweep(_))));
    }

    #[test]
    fn identical_audit_is_zero() {
        let game = gen_dense(20, 0.3, 2, true, 4).unwrap();
        let cfg = RunConfig::new(0.2, 0.5, 5).with_seed(3);
        let report = audit(&game, None, &cfg, 2.0, 1e-5, Adjacent::Identical).unwrap();
        assert!(report.empirical_budget_per_player.iter().all(|&e| e == 0.0));
        assert_eq!(
            audit(&game, None, &RunConfig::new(0.2, 0.0, 5), 2.0, 1e-5, Adjacent::Identical)
                .unwrap_err(),
            Error::ZeroSigma
        );
    }
}
