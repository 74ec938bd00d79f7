//! Equilibrium-quality metrics evaluated on clean (noise-free) strategies.

use super::{PolymatrixGame, StrategyProfile};
use crate::error::{Error, Result};

/// Comparator strategy for time-averaged regret.
#[derive(Debug, Clone, PartialEq)]
pub enum Comparator {
    /// Best fixed pure deviation in hindsight.
    Best,
    Fixed(Vec<f64>),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn min_entry(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `<g_i, pi_i> - min_a g_i(a)`: the gain from player `i`'s best unilateral deviation.
pub fn exploitability(game: &PolymatrixGame, profile: &StrategyProfile, i: usize) -> Result<f64> {
    game.check_profile(profile)?;
    Ok(exploitability_unchecked(game, profile, i))
}

pub(crate) fn exploitability_unchecked(
    game: &PolymatrixGame,
    profile: &StrategyProfile,
    i: usize,
) -> f64 {
    let g = game.gradient_at(profile, i).values;
    (dot(&g, profile.strategy(i)) - min_entry(&g)).max(0.0)
}

pub fn exploitability_all(game: &PolymatrixGame, profile: &StrategyProfile) -> Result<Vec<f64>> {
    game.check_profile(profile)?;
    Ok((0..game.n_players())
        .map(|i| exploitability_unchecked(game, profile, i))
        .collect())
}

/// Mean exploitability over players.
pub fn avg_exploitability(game: &PolymatrixGame, profile: &StrategyProfile) -> Result<f64> {
    let all = exploitability_all(game, profile)?;
    Ok(all.iter().sum::<f64>() / all.len() as f64)
}

/// `(1/T) sum_t <g_i(pi^t), pi_i^t> - g_i(pi^t)(a)` for every action `a`.
///
/// The maximum entry is the regret against the best fixed pure deviation.
pub fn regret_per_action(
    game: &PolymatrixGame,
    iterates: &[StrategyProfile],
    i: usize,
) -> Result<Vec<f64>> {
    if iterates.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut acc = vec![0.0; game.action_count(i)];
    for profile in iterates {
        game.check_profile(profile)?;
        let g = game.gradient_at(profile, i).values;
        let played = dot(&g, profile.strategy(i));
        for (a, slot) in acc.iter_mut().enumerate() {
            *slot += played - g[a];
        }
    }
    let t = iterates.len() as f64;
    Ok(acc.into_iter().map(|x| x / t).collect())
}

/// Time-averaged regret of player `i` over `iterates`; may be negative.
pub fn time_avg_regret(
    game: &PolymatrixGame,
    iterates: &[StrategyProfile],
    i: usize,
    comparator: &Comparator,
) -> Result<f64> {
    match comparator {
        Comparator::Best => Ok(regret_per_action(game, iterates, i)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)),
        Comparator::Fixed(x) => {
            if x.len() != game.action_count(i) {
                return Err(Error::DimMismatch {
                    expected: game.action_count(i),
                    got: x.len(),
                });
            }
            let per_action = regret_per_action(game, iterates, i)?;
            // regret is affine in the comparator; x sums to one
            Ok(dot(&per_action, x))
        }
    }
}

/// Best-comparator regret of every player.
pub fn time_avg_regrets(game: &PolymatrixGame, iterates: &[StrategyProfile]) -> Result<Vec<f64>> {
    (0..game.n_players())
        .map(|i| time_avg_regret(game, iterates, i, &Comparator::Best))
        .collect()
}

/// Unnormalized `sum_i sum_{j in N(i)} pi_i^T U[i,j] pi_j`.
pub fn zero_sum_residual(game: &PolymatrixGame, profile: &StrategyProfile) -> Result<f64> {
    game.check_profile(profile)?;
    let mut total = 0.0;
    for i in 0..game.n_players() {
        for nb in game.neighbors(i) {
            total += nb
                .utility
                .bilinear(profile.strategy(i), profile.strategy(nb.player));
        }
    }
    Ok(total)
}

/// `sum_i <g_i(a) - g_i(b), a_i - b_i>`; nonnegative on monotone games.
pub fn monotonicity_gap(
    game: &PolymatrixGame,
    a: &StrategyProfile,
    b: &StrategyProfile,
) -> Result<f64> {
    game.check_profile(a)?;
    game.check_profile(b)?;
    let mut total = 0.0;
    for i in 0..game.n_players() {
        let ga = game.gradient_at(a, i).values;
        let gb = game.gradient_at(b, i).values;
        for k in 0..ga.len() {
            total += (ga[k] - gb[k]) * (a.strategy(i)[k] - b.strategy(i)[k]);
        }
    }
    Ok(total)
}
