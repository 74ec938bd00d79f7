//! Brute-force and iterative ground truth for small games.

use crate::dynamics::TauSchedule;
use crate::error::Result;
use crate::game::{exploitability_all, PolymatrixGame, StrategyProfile};
use crate::simplex::{l2_distance, proximal_step};
use std::collections::HashMap;

/// Tolerance under which a pure profile counts as an equilibrium.
pub const NE_TOLERANCE: f64 = 1e-9;

/// Result of an iterative equilibrium search.
///
/// `certificate[i]` is the per-player quantity the search drives to zero:
/// exploitability for best-response dynamics, the last step length for the
/// regularized fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub profile: StrategyProfile,
    pub certificate: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Lowest-index minimizer of player `i`'s loss gradient.
pub fn best_response(game: &PolymatrixGame, profile: &StrategyProfile, i: usize) -> usize {
    argmin(&game.gradient_at(profile, i).values)
}

pub(crate) fn argmin(g: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in g.iter().enumerate().skip(1) {
        if v < g[best] {
            best = a;
        }
    }
    best
}

/// True when no player gains more than [`NE_TOLERANCE`] by deviating.
pub fn verify_pure_ne(game: &PolymatrixGame, profile: &StrategyProfile) -> Result<bool> {
    Ok(exploitability_all(game, profile)?
        .iter()
        .all(|&e| e <= NE_TOLERANCE))
}

/// Simultaneous pure best responses, starting with the response to the
/// uniform profile. Stops when the maximum exploitability is at most `tol`,
/// or when a pure profile repeats.
pub fn best_response_dynamics(game: &PolymatrixGame, max_iters: usize, tol: f64) -> Result<OracleResult> {
    let n = game.n_players();
    let uniform = StrategyProfile::uniform(game);
    let first: Vec<usize> = (0..n).map(|i| best_response(game, &uniform, i)).collect();
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::from([(first.clone(), 0)]);
    let mut profile = StrategyProfile::pure(game, &first)?;
    let mut iterations = 1;
    loop {
        let certificate = exploitability_all(game, &profile)?;
        let worst = certificate.iter().copied().fold(0.0, f64::max);
        if worst <= tol {
            return Ok(OracleResult {
                profile,
                certificate,
                converged: true,
                iterations,
            });
        }
        if iterations >= max_iters {
            return Ok(OracleResult {
                profile,
                certificate,
                converged: false,
                iterations,
            });
        }
        let choices: Vec<usize> = (0..n).map(|i| best_response(game, &profile, i)).collect();
        if seen.insert(choices.clone(), iterations).is_some() {
            let profile = StrategyProfile::pure(game, &choices)?;
            let certificate = exploitability_all(game, &profile)?;
            let converged = certificate.iter().all(|&e| e <= tol);
            return Ok(OracleResult {
                profile,
                certificate,
                converged,
                iterations: iterations + 1,
            });
        }
        profile = StrategyProfile::pure(game, &choices)?;
        iterations += 1;
    }
}

/// Noise-free update loop run until successive iterates move less than `tol`
/// per player; the limit estimates the regularized equilibrium.
pub fn regularized_fixed_point(
    game: &PolymatrixGame,
    tau: &TauSchedule,
    eta: f64,
    max_iters: usize,
    tol: f64,
) -> Result<OracleResult> {
    let n = game.n_players();
    let mut current = StrategyProfile::uniform(game);
    let mut certificate = vec![f64::INFINITY; n];
    for it in 1..=max_iters {
        let next: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let g = game.gradient_at(&current, i).values;
                proximal_step(current.strategy(i), &g, eta, tau.get(i)).map(|s| s.into_inner())
            })
            .collect::<Result<_>>()?;
        certificate = (0..n)
            .map(|i| l2_distance(&next[i], current.strategy(i)))
            .collect();
        current = StrategyProfile::from_vecs_unchecked(next);
        if certificate.iter().all(|&d| d <= tol) {
            return Ok(OracleResult {
                profile: current,
                certificate,
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(OracleResult {
        profile: current,
        certificate,
        converged: false,
        iterations: max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_ties_break_low() {
        assert_eq!(argmin(&[-1.0, 1.0]), 0);
        assert_eq!(argmin(&[0.0, 0.0, 0.0]), 0);
        let eps = 1e-3;
        assert_eq!(argmin(&[0.5, 0.5 - eps]), 1);
    }
}
