//! The noisy distributed update loop, its coupled adjacent-game variant, the
//! per-player regularization schedule and the trade-off hyperparameters.

use crate::error::{Error, Result};
use crate::game::{PolymatrixGame, StrategyProfile};
use crate::rng::gaussian_noise;
use crate::simplex::{l2_distance, project_simplex, proximal_step};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Parameters of one run. `tau_constant = None` selects the default
/// `N_bar^{5/9} / ln N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub eta: f64,
    pub sigma: f64,
    #[serde(rename = "t_rounds")]
    pub rounds: usize,
    pub tau_constant: Option<f64>,
    pub master_seed: u64,
    #[serde(default)]
    pub record_noise: bool,
}

impl RunConfig {
    pub fn new(eta: f64, sigma: f64, rounds: usize) -> Self {
        Self {
            eta,
            sigma,
            rounds,
            tau_constant: None,
            master_seed: 0,
            record_noise: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_tau_constant(mut self, c: f64) -> Self {
        self.tau_constant = Some(c);
        self
    }

    pub fn with_noise_recording(mut self, record: bool) -> Self {
        self.record_noise = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta <= 0.0 || !self.eta.is_finite() {
            return Err(Error::NonPositiveEta(self.eta));
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("T must be at least 1".into()));
        }
        if let Some(c) = self.tau_constant {
            if c < 0.0 || !c.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "tau constant must be finite and nonnegative, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// `N / sum_i 1/|N(i)|`.
pub fn harmonic_mean_degree(game: &PolymatrixGame) -> f64 {
    let inv: f64 = game.degrees().iter().map(|&d| 1.0 / d as f64).sum();
    game.n_players() as f64 / inv
}

/// `N_bar^{5/9} / ln N`.
pub fn default_tau_constant(game: &PolymatrixGame) -> Result<f64> {
    let n = game.n_players();
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    Ok(harmonic_mean_degree(game).powf(5.0 / 9.0) / (n as f64).ln())
}

/// `tau_i = c / |N(i)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSchedule {
    pub constant: f64,
    pub tau: Vec<f64>,
}

impl TauSchedule {
    pub fn with_constant(game: &PolymatrixGame, constant: f64) -> Self {
        Self {
            constant,
            tau: game.degrees().iter().map(|&d| constant / d as f64).collect(),
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.tau[i]
    }
}

/// The default schedule.
pub fn tau_schedule(game: &PolymatrixGame) -> Result<TauSchedule> {
    Ok(TauSchedule::with_constant(game, default_tau_constant(game)?))
}

fn schedule_for(game: &PolymatrixGame, config: &RunConfig) -> Result<TauSchedule> {
    match config.tau_constant {
        Some(c) => {
            if game.n_players() < 2 {
                return Err(Error::TooFewPlayers(game.n_players()));
            }
            Ok(TauSchedule::with_constant(game, c))
        }
        None => tau_schedule(game),
    }
}

/// Everything a run produced.
///
/// `clean` holds `pi^(0) ..= pi^(T)`; `observations[t]` and `noises[t]` are
/// the broadcasts of round `t` for `t < T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: RunConfig,
    pub tau: TauSchedule,
    pub clean: Vec<StrategyProfile>,
    pub observations: Vec<Vec<Vec<f64>>>,
    pub noises: Option<Vec<Vec<Vec<f64>>>>,
}

impl Trace {
    pub fn rounds(&self) -> usize {
        self.config.rounds
    }

    pub fn n_players(&self) -> usize {
        self.clean[0].len()
    }

    /// `pi^(1) ..= pi^(T)`, the iterates regret is measured on.
    pub fn iterates(&self) -> &[StrategyProfile] {
        &self.clean[1..]
    }

    pub fn final_profile(&self) -> &StrategyProfile {
        self.clean.last().expect("trace holds the initial profile")
    }

    /// Long-format CSV: `t,player,kind,a0..`. Shorter strategies leave
    /// trailing cells empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let width = self
            .clean[0]
            .strategies()
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0);
        let mut header = String::from("t,player,kind");
        for a in 0..width {
            header.push_str(&format!(",a{a}"));
        }
        writeln!(out, "{header}")?;
        let row = |t: usize, i: usize, kind: &str, v: &[f64]| {
            let mut line = format!("{t},{i},{kind}");
            for k in 0..width {
                line.push(',');
                if let Some(x) = v.get(k) {
                    line.push_str(&format!("{x:?}"));
                }
            }
            line
        };
        for (t, profile) in self.clean.iter().enumerate() {
            for (i, s) in profile.strategies().iter().enumerate() {
                writeln!(out, "{}", row(t, i, "clean", s))?;
            }
            if let Some(obs) = self.observations.get(t) {
                for (i, s) in obs.iter().enumerate() {
                    writeln!(out, "{}", row(t, i, "obs", s))?;
                }
            }
            if let Some(noise) = self.noises.as_ref().and_then(|n| n.get(t)) {
                for (i, s) in noise.iter().enumerate() {
                    writeln!(out, "{}", row(t, i, "noise", s))?;
                }
            }
        }
        Ok(())
    }

    /// JSON sidecar with the configuration snapshot and the tau schedule.
    pub fn config_json(&self) -> String {
        let snapshot = serde_json::json!({
            "config": self.config,
            "n_players": self.n_players(),
            "tau": self.tau,
        });
        serde_json::to_string_pretty(&snapshot).expect("config serializes")
    }
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Next clean profile, then the round's observations and noises.
type RoundOutput = (StrategyProfile, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// One round: broadcast, projection of every received strategy, proximal update.
fn step(
    game: &PolymatrixGame,
    config: &RunConfig,
    tau: &TauSchedule,
    current: &StrategyProfile,
    t: usize,
) -> Result<RoundOutput> {
    let n = game.n_players();
    let broadcast: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = current.strategy(i);
            let noise = gaussian_noise(config.master_seed, i, t, pi.len(), config.sigma);
            let obs = pi.iter().zip(&noise).map(|(p, z)| p + z).collect();
            (noise, obs)
        })
        .collect();
    let projected: Vec<Vec<f64>> = broadcast
        .par_iter()
        .map(|(_, obs)| project_simplex(obs).map(|s| s.into_inner()))
        .collect::<Result<_>>()?;
    let next: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let g = game.gradient_with(i, |j| projected[j].as_slice());
            proximal_step(&projected[i], &g, config.eta, tau.get(i)).map(|s| s.into_inner())
        })
        .collect::<Result<_>>()?;
    let (noises, observations) = broadcast.into_iter().unzip();
    Ok((
        StrategyProfile::from_vecs_unchecked(next),
        noises,
        observations,
    ))
}

fn run_inner(game: &PolymatrixGame, config: &RunConfig) -> Result<Trace> {
    config.validate()?;
    let tau = schedule_for(game, config)?;
    let mut clean = Vec::with_capacity(config.rounds + 1);
    clean.push(StrategyProfile::uniform(game));
    let mut observations = Vec::with_capacity(config.rounds);
    let mut noises = config.record_noise.then(Vec::new);
    for t in 0..config.rounds {
        let (next, noise, obs) = step(game, config, &tau, clean.last().unwrap(), t)?;
        clean.push(next);
        observations.push(obs);
        if let Some(store) = noises.as_mut() {
            store.push(noise);
        }
    }
    Ok(Trace {
        config: config.clone(),
        tau,
        clean,
        observations,
        noises,
    })
}

/// Runs the update loop for `config.rounds` rounds from the uniform profile.
pub fn run(game: &PolymatrixGame, config: &RunConfig) -> Result<Trace> {
    run_inner(game, config)
}

/// [`run`] on a dedicated pool of `workers` threads.
pub fn run_with_workers(game: &PolymatrixGame, config: &RunConfig, workers: usize) -> Result<Trace> {
    in_pool(Some(workers), || run_inner(game, config))?
}

/// The single undirected edge on which two games differ, if any.
pub fn differing_edge(a: &PolymatrixGame, b: &PolymatrixGame) -> Result<Option<(usize, usize)>> {
    if a.actions() != b.actions() {
        return Err(Error::NotAdjacent("action sets differ".into()));
    }
    if a.edges() != b.edges() {
        return Err(Error::NotAdjacent("interaction graphs differ".into()));
    }
    let mut found = None;
    for &(i, j) in a.edges() {
        let same = a.utility(i, j) == b.utility(i, j) && a.utility(j, i) == b.utility(j, i);
        if !same {
            if let Some((x, y)) = found {
                return Err(Error::NotAdjacent(format!(
                    "games differ on edges ({x},{y}) and ({i},{j})"
                )));
            }
            found = Some((i, j));
        }
    }
    Ok(found)
}

/// Runs two adjacent games with the same noise realization.
pub fn run_coupled(
    game_a: &PolymatrixGame,
    game_b: &PolymatrixGame,
    config: &RunConfig,
) -> Result<(Trace, Trace)> {
    differing_edge(game_a, game_b)?;
    Ok((run(game_a, config)?, run(game_b, config)?))
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

fn schedule_config(rounds: usize, budget_factor: f64) -> Result<RunConfig> {
    if budget_factor <= 0.0 || !budget_factor.is_finite() {
        return Err(Error::DegenerateSchedule(format!(
            "budget factor must be positive and finite, got {budget_factor}"
        )));
    }
    let t = rounds as f64;
    Ok(RunConfig::new(
        1.0 / (t * budget_factor.cbrt()),
        1.0 / t.sqrt(),
        rounds,
    ))
}

/// Unclamped `N^{8p/9} / (ln N)^4`.
pub fn dense_rounds_raw(n: usize, p: f64) -> f64 {
    let n = n as f64;
    n.powf(8.0 * p / 9.0) / n.ln().powi(4)
}

/// Dense trade-off schedule: `T = max(1, round(N^{8p/9}/(ln N)^4))`,
/// `eta = 1/(T clubsuit^{1/3})`, `sigma = 1/sqrt(T)`.
pub fn hyperparams_dense(n: usize, p: f64, _actions: usize, clubsuit: f64) -> Result<RunConfig> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("dense schedule needs N >= 3, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidConfig(format!("p must lie in (0, 1], got {p}")));
    }
    let raw = dense_rounds_raw(n, p);
    if !raw.is_finite() || raw <= 0.0 {
        return Err(Error::DegenerateSchedule(format!("T evaluates to {raw}")));
    }
    schedule_config(round_half_up(raw).max(1.0) as usize, clubsuit)
}

/// Rounds used when every player has exactly one neighbor.
pub const SPARSE_DEFAULT_ROUNDS: usize = 100;

/// `T = max(1, round((1 - ln ln N / ln N) ln N / ln N_max))`, or the default
/// when `N_max = 1`.
pub fn sparse_rounds(n: usize, n_max: usize) -> Result<usize> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("sparse schedule needs N >= 3, got {n}")));
    }
    match n_max {
        0 => Err(Error::InvalidConfig("maximum degree must be at least 1".into())),
        1 => Ok(SPARSE_DEFAULT_ROUNDS),
        _ => {
            let ln_n = (n as f64).ln();
            let raw = (1.0 - ln_n.ln() / ln_n) * ln_n / (n_max as f64).ln();
            Ok(round_half_up(raw).max(1.0) as usize)
        }
    }
}

/// Sparse trade-off schedule: `eta = 1/(T spadesuit^{1/3})`, `sigma = 1/sqrt(T)`,
/// where `spadesuit` must be evaluated at `sparse_rounds(n, n_max)`.
pub fn hyperparams_sparse(
    n: usize,
    n_max: usize,
    _actions: usize,
    spadesuit: f64,
) -> Result<RunConfig> {
    schedule_config(sparse_rounds(n, n_max)?, spadesuit)
}

/// Two copies of one player fed different gradient sequences under the same
/// noise. Returns `||pi^(t) - pi'^(t)||` for `t = 1..=steps`.
#[allow(clippy::too_many_arguments)]
pub fn single_player_divergence<F, G>(
    dim: usize,
    eta: f64,
    tau: f64,
    sigma: f64,
    seed: u64,
    steps: usize,
    mut grad_a: F,
    mut grad_b: G,
) -> Result<Vec<f64>>
where
    F: FnMut(usize, &[f64]) -> Vec<f64>,
    G: FnMut(usize, &[f64]) -> Vec<f64>,
{
    let mut a = vec![1.0 / dim as f64; dim];
    let mut b = a.clone();
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let noise = gaussian_noise(seed, 0, t, dim, sigma);
        let shift = |x: &[f64]| -> Vec<f64> { x.iter().zip(&noise).map(|(p, z)| p + z).collect() };
        let bar_a = project_simplex(&shift(&a))?.into_inner();
        let bar_b = project_simplex(&shift(&b))?.into_inner();
        let ga = grad_a(t, &bar_a);
        let gb = grad_b(t, &bar_b);
        a = proximal_step(&bar_a, &ga, eta, tau)?.into_inner();
        b = proximal_step(&bar_b, &gb, eta, tau)?.into_inner();
        out.push(l2_distance(&a, &b));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::UtilityMatrix;
    use std::collections::BTreeMap;

    fn chain(n: usize, zero: bool) -> PolymatrixGame {
        let mut u = BTreeMap::new();
        let m = if zero {
            UtilityMatrix::zeros(2, 2)
        } else {
            UtilityMatrix::from_rows(&[vec![0.4, -0.7], vec![0.1, 0.9]]).unwrap()
        };
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        for &(i, j) in &edges {
            u.insert((j, i), m.negated_transpose());
            u.insert((i, j), m.clone());
        }
        PolymatrixGame::new(vec![2; n], edges, u, true).unwrap()
    }

    #[test]
    fn harmonic_mean_examples() {
        assert!((harmonic_mean_degree(&chain(4, true)) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_game_stays_uniform() {
        let game = chain(5, true);
        let cfg = RunConfig::new(0.5, 0.0, 20).with_tau_constant(0.0);
        let trace = run(&game, &cfg).unwrap();
        assert_eq!(trace.clean.len(), 21);
        for p in &trace.clean {
            assert_eq!(p, &StrategyProfile::uniform(&game));
        }
    }

    #[test]
    fn observations_are_clean_plus_noise() {
        let game = chain(4, false);
        let cfg = RunConfig::new(0.1, 0.3, 5)
            .with_seed(9)
            .with_noise_recording(true);
        let trace = run(&game, &cfg).unwrap();
        let noises = trace.noises.as_ref().unwrap();
        for (t, round) in noises.iter().enumerate() {
            for (i, noise) in round.iter().enumerate() {
                let expect: Vec<f64> = trace.clean[t]
                    .strategy(i)
                    .iter()
                    .zip(noise)
                    .map(|(p, z)| p + z)
                    .collect();
                assert_eq!(trace.observations[t][i], expect);
            }
        }
    }

    #[test]
    fn config_errors() {
        let game = chain(3, false);
        assert!(run(&game, &RunConfig::new(0.0, 0.1, 1)).is_err());
        assert!(run(&game, &RunConfig::new(0.1, -0.1, 1)).is_err());
        assert!(run(&game, &RunConfig::new(0.1, 0.1, 0)).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let game = chain(3, false);
        let trace = run(&game, &RunConfig::new(0.1, 0.1, 2).with_seed(1)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,player,kind,a0,a1");
        // 3 clean profiles + 2 observation rounds, 3 players each
        assert_eq!(lines.len(), 1 + 3 * 3 + 2 * 3);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells[2], "clean");
        assert_eq!(cells[3].parse::<f64>().unwrap(), 0.5);
    }

    #[test]
    fn schedule_rounding() {
        assert_eq!(round_half_up(2.5), 3.0);
        assert_eq!(round_half_up(2.49), 2.0);
        assert_eq!(sparse_rounds(100, 1).unwrap(), SPARSE_DEFAULT_ROUNDS);
        assert!(sparse_rounds(100, 0).is_err());
        assert!(hyperparams_dense(2, 0.5, 2, 1.0).is_err());
        assert!(hyperparams_dense(100, 0.0, 2, 1.0).is_err());
        assert!(matches!(
            hyperparams_dense(100, 0.5, 2, 0.0),
            Err(Error::DegenerateSchedule(_))
        ));
    }
}
