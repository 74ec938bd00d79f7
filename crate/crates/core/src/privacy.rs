//! Rényi-DP accounting: closed-form per-round factors, Gaussian divergences,
//! empirical audits of coupled traces and conversion to `(eps, delta)`-DP.

use crate::dynamics::{harmonic_mean_degree, Trace};
use crate::error::{Error, Result};
use crate::game::PolymatrixGame;
use crate::graph_gen::bfs_distances;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// `16 A^3 (ln N)^2 / N_bar^{4/9} + 4A/N` from its ingredients.
pub fn clubsuit_from(n: usize, n_bar: f64, actions: usize) -> f64 {
    let a = actions as f64;
    let ln_n = (n as f64).ln();
    16.0 * a.powi(3) * ln_n * ln_n / n_bar.powf(4.0 / 9.0) + 4.0 * a / n as f64
}

/// Dense-regime factor, using the game's harmonic mean degree.
pub fn clubsuit(game: &PolymatrixGame, actions: usize) -> Result<f64> {
    let n = game.n_players();
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    Ok(clubsuit_from(n, harmonic_mean_degree(game), actions))
}

fn check_rounds(rounds: usize) -> Result<()> {
    if rounds == 0 {
        return Err(Error::InvalidConfig("T must be at least 1".into()));
    }
    Ok(())
}

/// `(2A/N) * #{i : min(dist(i, v1), dist(i, v2)) < T}`.
pub fn spadesuit(game: &PolymatrixGame, rounds: usize, edge: (usize, usize), actions: usize) -> Result<f64> {
    check_rounds(rounds)?;
    let (v1, v2) = edge;
    if v1 >= game.n_players() || v2 >= game.n_players() || !game.has_edge(v1, v2) {
        return Err(Error::EdgeNotInGame(v1, v2));
    }
    let within = bfs_distances(game, &[v1, v2])?
        .into_iter()
        .filter(|d| matches!(d, Some(d) if *d < rounds))
        .count();
    Ok(2.0 * actions as f64 * within as f64 / game.n_players() as f64)
}

/// Counts players within distance `< rounds` of `sources`, stopping the
/// search at that depth. `stamp` marks visited players with `mark`.
fn count_within(
    game: &PolymatrixGame,
    sources: [usize; 2],
    rounds: usize,
    stamp: &mut [u32],
    mark: u32,
    queue: &mut VecDeque<(usize, usize)>,
) -> usize {
    queue.clear();
    let mut count = 0;
    for s in sources {
        if stamp[s] != mark {
            stamp[s] = mark;
            count += 1;
            queue.push_back((s, 0));
        }
    }
    while let Some((u, d)) = queue.pop_front() {
        if d + 1 >= rounds {
            continue;
        }
        for nb in game.neighbors(u) {
            if stamp[nb.player] != mark {
                stamp[nb.player] = mark;
                count += 1;
                queue.push_back((nb.player, d + 1));
            }
        }
    }
    count
}

/// Largest [`spadesuit`] over all edges, with the edge attaining it (first in
/// edge order on ties).
pub fn spadesuit_worst_edge(
    game: &PolymatrixGame,
    rounds: usize,
    actions: usize,
) -> Result<(f64, (usize, usize))> {
    check_rounds(rounds)?;
    let n = game.n_players();
    let mut stamp = vec![0u32; n];
    let mut queue = VecDeque::new();
    let mut best = (0, game.edges()[0]);
    for (k, &(i, j)) in game.edges().iter().enumerate() {
        let count = count_within(game, [i, j], rounds, &mut stamp, k as u32 + 1, &mut queue);
        if count > best.0 {
            best = (count, (i, j));
            if count == n {
                break;
            }
        }
    }
    Ok((2.0 * actions as f64 * best.0 as f64 / n as f64, best.1))
}

pub fn spadesuit_worst_case(game: &PolymatrixGame, rounds: usize, actions: usize) -> Result<f64> {
    Ok(spadesuit_worst_edge(game, rounds, actions)?.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 1.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// `alpha eta^2 / sigma^2 * min(clubsuit, spadesuit) * T`.
pub fn theoretical_budget_from(
    alpha: f64,
    eta: f64,
    sigma: f64,
    rounds: usize,
    clubsuit: f64,
    spadesuit: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    Ok(alpha * eta * eta / (sigma * sigma) * clubsuit.min(spadesuit) * rounds as f64)
}

/// Which adjacent pairs the sparse factor is evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeChoice {
    Edge(usize, usize),
    WorstCase,
}

/// Theoretical Rényi budget of a run on `game`.
pub fn theoretical_budget(
    alpha: f64,
    eta: f64,
    sigma: f64,
    rounds: usize,
    game: &PolymatrixGame,
    actions: usize,
    edge: EdgeChoice,
) -> Result<f64> {
    check_alpha(alpha)?;
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    let club = clubsuit(game, actions)?;
    let spade = match edge {
        EdgeChoice::Edge(i, j) => spadesuit(game, rounds, (i, j), actions)?,
        EdgeChoice::WorstCase => spadesuit_worst_case(game, rounds, actions)?,
    };
    theoretical_budget_from(alpha, eta, sigma, rounds, club, spade)
}

/// `alpha ||m1 - m2||^2 / (2 sigma^2)`, the order-alpha divergence of two
/// isotropic Gaussians.
pub fn gaussian_renyi(m1: &[f64], m2: &[f64], sigma: f64, alpha: f64) -> Result<f64> {
    if m1.len() != m2.len() {
        return Err(Error::DimMismatch {
            expected: m1.len(),
            got: m2.len(),
        });
    }
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    let sq: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(alpha * sq / (2.0 * sigma * sigma))
}

/// Realized per-player divergence of two coupled traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBudget {
    pub per_player: Vec<f64>,
    pub average: f64,
}

/// `sum_{t=1..T} alpha ||pi_i^t - pi'_i^t||^2 / (2 sigma^2)` for every player.
pub fn empirical_budget(a: &Trace, b: &Trace, sigma: f64, alpha: f64) -> Result<EmpiricalBudget> {
    if a.clean.len() != b.clean.len() {
        return Err(Error::TraceMismatch(format!(
            "{} vs {} rounds",
            a.rounds(),
            b.rounds()
        )));
    }
    if a.config.master_seed != b.config.master_seed || a.config.sigma != b.config.sigma {
        return Err(Error::TraceMismatch("traces were not driven by the same noise".into()));
    }
    if a.n_players() != b.n_players() {
        return Err(Error::TraceMismatch("player counts differ".into()));
    }
    let n = a.n_players();
    let mut per_player = vec![0.0; n];
    for (pa, pb) in a.iterates().iter().zip(b.iterates()) {
        for (i, total) in per_player.iter_mut().enumerate() {
            *total += gaussian_renyi(pa.strategy(i), pb.strategy(i), sigma, alpha)?;
        }
    }
    let average = per_player.iter().sum::<f64>() / n as f64;
    Ok(EmpiricalBudget {
        per_player,
        average,
    })
}

/// `(alpha, eps)`-RDP implies `(eps + ln(1/delta)/(alpha - 1), delta)`-DP;
/// `alpha = +inf` gives pure `eps`-DP.
pub fn rdp_to_dp(alpha: f64, eps: f64, delta: f64) -> Result<f64> {
    if alpha == f64::INFINITY {
        return Ok(eps);
    }
    if alpha.is_nan() || alpha <= 1.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(eps + (1.0 / delta).ln() / (alpha - 1.0))
}

/// Outcome of a privacy audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub alpha: f64,
    pub n_players: usize,
    pub max_actions: usize,
    pub t_rounds: usize,
    pub eta: f64,
    pub sigma: f64,
    pub edge: (usize, usize),
    pub clubsuit: f64,
    pub spadesuit: f64,
    pub spadesuit_worst_case: f64,
    pub theoretical_budget: f64,
    pub empirical_budget_per_player: Vec<f64>,
    pub empirical_budget_avg: f64,
    pub delta: f64,
    /// `(eps, delta)`-DP level of the theoretical budget; absent for `alpha = 1`.
    pub dp_epsilon: Option<f64>,
}
