//! Polymatrix game model: players on a graph, one utility matrix per directed
//! edge, and the degree-normalized loss gradient each player descends.

mod io;
mod metrics;

pub use io::GameFile;
pub use metrics::{
    avg_exploitability, exploitability, exploitability_all, monotonicity_gap,
    regret_per_action, time_avg_regret, time_avg_regrets, zero_sum_residual, Comparator,
};

use crate::error::{Error, Result};
use crate::simplex::{is_on_simplex, SimplexVector};
use std::collections::BTreeMap;

/// Dense row-major matrix with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl UtilityMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged matrix rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// `-M^T`, the partner's matrix under the zero-sum construction.
    pub fn negated_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, -self.get(r, c));
            }
        }
        out
    }

    /// `out += scale * M x`
    pub fn mul_vec_acc(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let dot: f64 = self.row(r).iter().zip(x).map(|(u, v)| u * v).sum();
            *o += scale * dot;
        }
    }

    /// `a^T M b`
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .enumerate()
            .map(|(r, ar)| ar * self.row(r).iter().zip(b).map(|(u, v)| u * v).sum::<f64>())
            .sum()
    }

    fn first_out_of_bounds(&self) -> Option<(usize, usize, f64)> {
        self.data
            .iter()
            .position(|v| !(-1.0..=1.0).contains(v))
            .map(|k| (k / self.cols, k % self.cols, self.data[k]))
    }
}

/// One entry of a player's adjacency list: the neighbor and `U[i, neighbor]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub player: usize,
    pub utility: UtilityMatrix,
}

/// A validated polymatrix game. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymatrixGame {
    actions: Vec<usize>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<Neighbor>>,
    zero_sum: bool,
}

impl PolymatrixGame {
    /// Builds and validates a game. `utilities` must hold both directions of
    /// every undirected edge and nothing else.
    pub fn new(
        actions: Vec<usize>,
        edges: Vec<(usize, usize)>,
        utilities: BTreeMap<(usize, usize), UtilityMatrix>,
        zero_sum: bool,
    ) -> Result<Self> {
        let n = actions.len();
        if n == 0 {
            return Err(Error::InvalidGame("game has no players".into()));
        }
        if let Some(i) = actions.iter().position(|&a| a == 0) {
            return Err(Error::ShapeMismatch(format!("player {i} has no actions")));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidEdge(i, j));
            }
            normalized.push((i.min(j), i.max(j)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            let dup = normalized.windows(2).find(|w| w[0] == w[1]).unwrap()[0];
            return Err(Error::InvalidEdge(dup.0, dup.1));
        }

        let mut utilities = utilities;
        let mut neighbors: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        for &(i, j) in &normalized {
            for (a, b) in [(i, j), (j, i)] {
                let m = utilities.remove(&(a, b)).ok_or(Error::MissingMatrix(a, b))?;
                if m.rows != actions[a] || m.cols != actions[b] {
                    return Err(Error::ShapeMismatch(format!(
                        "U[{a},{b}] is {}x{}, expected {}x{}",
                        m.rows, m.cols, actions[a], actions[b]
                    )));
                }
                if let Some((row, col, value)) = m.first_out_of_bounds() {
                    return Err(Error::BoundViolation {
                        from: a,
                        to: b,
                        row,
                        col,
                        value,
                    });
                }
                neighbors[a].push(Neighbor {
                    player: b,
                    utility: m,
                });
            }
        }
        if let Some(&(a, b)) = utilities.keys().next() {
            return Err(Error::UnexpectedMatrix(a, b));
        }
        for list in &mut neighbors {
            list.sort_unstable_by_key(|nb| nb.player);
        }
        let game = Self {
            actions,
            edges: normalized,
            neighbors,
            zero_sum,
        };
        game.check_degrees_and_zero_sum()?;
        Ok(game)
    }

    fn check_degrees_and_zero_sum(&self) -> Result<()> {
        if let Some(i) = self.neighbors.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedPlayer(i));
        }
        if self.zero_sum {
            for &(i, j) in &self.edges {
                let uij = self.utility(i, j).expect("edge present");
                let uji = self.utility(j, i).expect("edge present");
                let ok = (0..uij.rows)
                    .all(|r| (0..uij.cols).all(|c| uji.get(c, r) == -uij.get(r, c)));
                if !ok {
                    return Err(Error::ZeroSumViolation(i, j));
                }
            }
        }
        Ok(())
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let mut utilities = BTreeMap::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            for nb in list {
                utilities.insert((i, nb.player), nb.utility.clone());
            }
        }
        Self::new(
            self.actions.clone(),
            self.edges.clone(),
            utilities,
            self.zero_sum,
        )
        .map(|_| ())
    }

    pub fn n_players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn action_count(&self, i: usize) -> usize {
        self.actions[i]
    }

    /// Largest action-set size, `A` in the budget formulas.
    pub fn max_actions(&self) -> usize {
        self.actions.iter().copied().max().unwrap_or(0)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// `U[i, j]` if `(i, j)` is an edge.
    pub fn utility(&self, i: usize, j: usize) -> Option<&UtilityMatrix> {
        let list = self.neighbors.get(i)?;
        list.binary_search_by_key(&j, |nb| nb.player)
            .ok()
            .map(|k| &list[k].utility)
    }

    /// Copy of this game with both matrices of edge `(i, j)` replaced.
    pub fn with_edge_utilities(
        &self,
        i: usize,
        j: usize,
        u_ij: UtilityMatrix,
        u_ji: UtilityMatrix,
    ) -> Result<Self> {
        if !self.has_edge(i, j) {
            return Err(Error::EdgeNotInGame(i, j));
        }
        let mut utilities = BTreeMap::new();
        for (a, list) in self.neighbors.iter().enumerate() {
            for nb in list {
                utilities.insert((a, nb.player), nb.utility.clone());
            }
        }
        utilities.insert((i, j), u_ij);
        utilities.insert((j, i), u_ji);
        Self::new(
            self.actions.clone(),
            self.edges.clone(),
            utilities,
            self.zero_sum,
        )
    }

    /// Same game with the zero-sum flag changed (revalidated).
    pub fn with_zero_sum_flag(&self, zero_sum: bool) -> Result<Self> {
        let game = Self {
            zero_sum,
            ..self.clone()
        };
        game.check_degrees_and_zero_sum()?;
        Ok(game)
    }

    /// `g_i = -(1/|N(i)|) sum_j U[i,j] x_j` where `x_j = strategy_of(j)`.
    pub(crate) fn gradient_with<'a, F>(&self, i: usize, strategy_of: F) -> Vec<f64>
    where
        F: Fn(usize) -> &'a [f64],
    {
        let list = &self.neighbors[i];
        let scale = -1.0 / list.len() as f64;
        let mut g = vec![0.0; self.actions[i]];
        for nb in list {
            nb.utility.mul_vec_acc(strategy_of(nb.player), scale, &mut g);
        }
        g
    }

    /// Gradient of player `i`'s loss given one received strategy per neighbor,
    /// ordered like [`PolymatrixGame::neighbors`].
    pub fn gradient(&self, i: usize, received: &[&[f64]]) -> Result<GradientVector> {
        let list = &self.neighbors[i];
        if received.len() != list.len() {
            return Err(Error::NeighborCountMismatch {
                player: i,
                expected: list.len(),
                got: received.len(),
            });
        }
        for (nb, x) in list.iter().zip(received) {
            if x.len() != self.actions[nb.player] {
                return Err(Error::DimMismatch {
                    expected: self.actions[nb.player],
                    got: x.len(),
                });
            }
        }
        let index: BTreeMap<usize, usize> = list
            .iter()
            .enumerate()
            .map(|(k, nb)| (nb.player, k))
            .collect();
        Ok(GradientVector {
            values: self.gradient_with(i, |j| received[index[&j]]),
            owner: i,
        })
    }

    /// Gradient of player `i` at a full strategy profile.
    pub fn gradient_at(&self, profile: &StrategyProfile, i: usize) -> GradientVector {
        GradientVector {
            values: self.gradient_with(i, |j| profile.strategy(j)),
            owner: i,
        }
    }

    pub(crate) fn check_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.len() != self.n_players() {
            return Err(Error::ShapeMismatch(format!(
                "profile has {} strategies for {} players",
                profile.len(),
                self.n_players()
            )));
        }
        for (i, s) in profile.strategies().iter().enumerate() {
            if s.len() != self.actions[i] {
                return Err(Error::DimMismatch {
                    expected: self.actions[i],
                    got: s.len(),
                });
            }
        }
        Ok(())
    }
}

/// A player's loss gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub values: Vec<f64>,
    pub owner: usize,
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    strategies: Vec<Vec<f64>>,
}

impl StrategyProfile {
    /// Checks that every vector is on its simplex within `1e-9`.
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self> {
        for (i, s) in strategies.iter().enumerate() {
            if !is_on_simplex(s, 1e-9) {
                return Err(Error::InvalidGame(format!(
                    "strategy of player {i} is not a probability vector"
                )));
            }
        }
        Ok(Self { strategies })
    }

    pub(crate) fn from_vecs_unchecked(strategies: Vec<Vec<f64>>) -> Self {
        Self { strategies }
    }

    pub fn uniform(game: &PolymatrixGame) -> Self {
        Self {
            strategies: game
                .actions()
                .iter()
                .map(|&a| SimplexVector::uniform(a).into_inner())
                .collect(),
        }
    }

    /// Pure profile where player `i` plays `choices[i]`.
    pub fn pure(game: &PolymatrixGame, choices: &[usize]) -> Result<Self> {
        if choices.len() != game.n_players() {
            return Err(Error::ShapeMismatch("one action per player required".into()));
        }
        let mut strategies = Vec::with_capacity(choices.len());
        for (i, &a) in choices.iter().enumerate() {
            if a >= game.action_count(i) {
                return Err(Error::ShapeMismatch(format!(
                    "player {i} has no action {a}"
                )));
            }
            strategies.push(SimplexVector::vertex(game.action_count(i), a).into_inner());
        }
        Ok(Self { strategies })
    }

    pub fn strategy(&self, i: usize) -> &[f64] {
        &self.strategies[i]
    }

    pub fn strategies(&self) -> &[Vec<f64>] {
        &self.strategies
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    /// Action index of each player if the profile is pure.
    pub fn as_pure(&self) -> Option<Vec<usize>> {
        self.strategies
            .iter()
            .map(|s| {
                let k = s.iter().position(|&x| x == 1.0)?;
                s.iter()
                    .enumerate()
                    .all(|(j, &x)| j == k || x == 0.0)
                    .then_some(k)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn pennies(zero_sum_partner: bool) -> Result<PolymatrixGame> {
        let u12 = UtilityMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let u21 = if zero_sum_partner {
            u12.negated_transpose()
        } else {
            UtilityMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
        };
        let mut u = BTreeMap::new();
        u.insert((0, 1), u12);
        u.insert((1, 0), u21);
        PolymatrixGame::new(vec![2, 2], vec![(0, 1)], u, true)
    }

    #[test]
    fn validates_zero_sum_pair() {
        let g = pennies(true).unwrap();
        assert!(g.validate().is_ok());
        assert_eq!(g.degree(0), 1);
    }

    #[test]
    fn rejects_out_of_range_entry() {
        let mut u = BTreeMap::new();
        let bad = UtilityMatrix::from_rows(&[vec![1.5, -1.0], vec![-1.0, 1.0]]).unwrap();
        u.insert((1, 0), bad.negated_transpose());
        u.insert((0, 1), bad);
        let err = PolymatrixGame::new(vec![2, 2], vec![(0, 1)], u, false).unwrap_err();
        assert!(matches!(err, Error::BoundViolation { value, .. } if value == 1.5));
    }

    #[test]
    fn rejects_transpose_without_negation() {
        let mut u = BTreeMap::new();
        let m = UtilityMatrix::from_rows(&[vec![1.0, -1.0], vec![0.5, 1.0]]).unwrap();
        let t = UtilityMatrix::from_rows(&[vec![1.0, 0.5], vec![-1.0, 1.0]]).unwrap();
        u.insert((0, 1), m);
        u.insert((1, 0), t);
        assert_eq!(
            PolymatrixGame::new(vec![2, 2], vec![(0, 1)], u, true).unwrap_err(),
            Error::ZeroSumViolation(0, 1)
        );
    }

    #[test]
    fn structural_errors() {
        let m = UtilityMatrix::zeros(2, 2);
        let mut u = BTreeMap::new();
        u.insert((0, 1), m.clone());
        assert_eq!(
            PolymatrixGame::new(vec![2, 2], vec![(0, 1)], u.clone(), false).unwrap_err(),
            Error::MissingMatrix(1, 0)
        );
        u.insert((1, 0), UtilityMatrix::zeros(3, 2));
        assert!(matches!(
            PolymatrixGame::new(vec![2, 2], vec![(0, 1)], u.clone(), false),
            Err(Error::ShapeMismatch(_))
        ));
        u.insert((1, 0), m.clone());
        assert_eq!(
            PolymatrixGame::new(vec![2, 2, 2], vec![(0, 1)], u.clone(), false).unwrap_err(),
            Error::IsolatedPlayer(2)
        );
        u.insert((1, 2), m.clone());
        assert_eq!(
            PolymatrixGame::new(vec![2, 2], vec![(0, 1)], u, false).unwrap_err(),
            Error::UnexpectedMatrix(1, 2)
        );
        assert_eq!(
            PolymatrixGame::new(vec![2, 2], vec![(0, 0)], BTreeMap::new(), false).unwrap_err(),
            Error::InvalidEdge(0, 0)
        );
    }

    #[test]
    fn gradient_matches_per_action_loop() {
        let g = pennies(true).unwrap();
        let pi2 = [1.0, 0.0];
        let grad = g.gradient(0, &[&pi2]).unwrap();
        let u = g.utility(0, 1).unwrap();
        let mut oracle = [0.0; 2];
        for (a, o) in oracle.iter_mut().enumerate() {
            for (b, p) in pi2.iter().enumerate() {
                *o -= u.get(a, b) * p;
            }
        }
        assert_eq!(grad.values, vec![-1.0, 1.0]);
        assert_eq!(grad.values, oracle.to_vec());
        assert!(matches!(
            g.gradient(0, &[]),
            Err(Error::NeighborCountMismatch { expected: 1, got: 0, .. })
        ));
    }

    #[test]
    fn gradient_cancels_for_opposed_neighbors() {
        let u = UtilityMatrix::from_rows(&[vec![0.3, -0.2], vec![0.9, 0.1]]).unwrap();
        let neg = UtilityMatrix::from_rows(&[vec![-0.3, 0.2], vec![-0.9, -0.1]]).unwrap();
        let mut m = BTreeMap::new();
        m.insert((0, 1), u.clone());
        m.insert((1, 0), u.negated_transpose());
        m.insert((0, 2), neg.clone());
        m.insert((2, 0), neg.negated_transpose());
        let g = PolymatrixGame::new(vec![2, 2, 2], vec![(0, 1), (0, 2)], m, true).unwrap();
        let x = [0.25, 0.75];
        let grad = g.gradient(0, &[&x, &x]).unwrap();
        assert!(grad.values.iter().all(|v| v.abs() < 1e-15));

        let zero = PolymatrixGame::new(
            vec![2, 2],
            vec![(0, 1)],
            BTreeMap::from([
                ((0, 1), UtilityMatrix::zeros(2, 2)),
                ((1, 0), UtilityMatrix::zeros(2, 2)),
            ]),
            true,
        )
        .unwrap();
        assert_eq!(zero.gradient(0, &[&x]).unwrap().values, vec![0.0, 0.0]);
    }

    #[test]
    fn pure_profile_roundtrip() {
        let g = pennies(true).unwrap();
        let p = StrategyProfile::pure(&g, &[1, 0]).unwrap();
        assert_eq!(p.as_pure(), Some(vec![1, 0]));
        assert_eq!(StrategyProfile::uniform(&g).as_pure(), None);
    }
}
