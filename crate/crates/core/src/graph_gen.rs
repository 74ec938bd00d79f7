//! Random game generators, graph distances and small games with known pure
//! equilibria.

use crate::error::{Error, Result};
use crate::game::{PolymatrixGame, StrategyProfile, UtilityMatrix};
use crate::rng::{keyed_rng, Domain};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

const REROLL_ATTEMPTS: usize = 16;

fn check_size(n: usize, actions: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    if actions == 0 {
        return Err(Error::InvalidConfig("action count must be at least 1".into()));
    }
    Ok(())
}

fn random_partner(rng: &mut ChaCha8Rng, n: usize, i: usize) -> usize {
    let j = rng.random_range(0..n - 1);
    if j >= i {
        j + 1
    } else {
        j
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> UtilityMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    UtilityMatrix::new(rows, cols, data).expect("nonzero shape")
}

/// Both directions of one edge: iid uniform `[-1, 1]` entries, or a
/// negated-transpose partner when `zero_sum`.
pub fn sample_edge_utilities(
    rng: &mut ChaCha8Rng,
    a_i: usize,
    a_j: usize,
    zero_sum: bool,
) -> (UtilityMatrix, UtilityMatrix) {
    let u_ij = uniform_matrix(rng, a_i, a_j);
    let u_ji = if zero_sum {
        u_ij.negated_transpose()
    } else {
        uniform_matrix(rng, a_j, a_i)
    };
    (u_ij, u_ji)
}

fn assemble(
    n: usize,
    actions: usize,
    edges: BTreeSet<(usize, usize)>,
    zero_sum: bool,
    seed: u64,
) -> Result<PolymatrixGame> {
    let mut rng = keyed_rng(seed, Domain::Utility, n as u64, actions as u64);
    let mut utilities = BTreeMap::new();
    for &(i, j) in &edges {
        let (u_ij, u_ji) = sample_edge_utilities(&mut rng, actions, actions, zero_sum);
        utilities.insert((i, j), u_ij);
        utilities.insert((j, i), u_ji);
    }
    PolymatrixGame::new(vec![actions; n], edges.into_iter().collect(), utilities, zero_sum)
}

fn degrees_of(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<usize> {
    let mut deg = vec![0; n];
    for &(i, j) in edges {
        deg[i] += 1;
        deg[j] += 1;
    }
    deg
}

/// Every node links to every other node with probability `p`; the two
/// directional draws of a pair merge into one undirected edge.
pub fn gen_dense(n: usize, p: f64, actions: usize, zero_sum: bool, seed: u64) -> Result<PolymatrixGame> {
    check_size(n, actions)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidConfig(format!("p must lie in (0, 1], got {p}")));
    }
    let mut rng = keyed_rng(seed, Domain::Graph, n as u64, 0);
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < p {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    let mut deg = degrees_of(n, &edges);
    for i in 0..n {
        if deg[i] > 0 {
            continue;
        }
        for _ in 0..REROLL_ATTEMPTS {
            for j in (0..n).filter(|&j| j != i) {
                if rng.random::<f64>() < p && edges.insert((i.min(j), i.max(j))) {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
            if deg[i] > 0 {
                break;
            }
        }
        if deg[i] == 0 {
            let j = random_partner(&mut rng, n, i);
            edges.insert((i.min(j), i.max(j)));
            deg[i] += 1;
            deg[j] += 1;
        }
    }
    assemble(n, actions, edges, zero_sum, seed)
}

/// `cN` edge slots from a shuffled stream in which every node appears `c`
/// times, paired consecutively; self-loops and duplicates are dropped and
/// isolated nodes get one random partner.
pub fn gen_sparse(n: usize, c: usize, actions: usize, zero_sum: bool, seed: u64) -> Result<PolymatrixGame> {
    check_size(n, actions)?;
    if c == 0 {
        return Err(Error::InvalidConfig("c must be at least 1".into()));
    }
    let mut rng = keyed_rng(seed, Domain::Graph, n as u64, c as u64);
    let mut stream: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, c)).collect();
    stream.shuffle(&mut rng);
    if stream.len() % 2 == 1 {
        let last = *stream.last().unwrap();
        stream.push(random_partner(&mut rng, n, last));
    }
    let mut edges = BTreeSet::new();
    for pair in stream.chunks_exact(2) {
        let (i, j) = (pair[0], pair[1]);
        if i != j {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let mut deg = degrees_of(n, &edges);
    for i in 0..n {
        if deg[i] == 0 {
            let j = random_partner(&mut rng, n, i);
            edges.insert((i.min(j), i.max(j)));
            deg[i] += 1;
            deg[j] += 1;
        }
    }
    assemble(n, actions, edges, zero_sum, seed)
}

/// Adjacency lists of the interaction graph.
pub fn adjacency(game: &PolymatrixGame) -> Vec<Vec<usize>> {
    (0..game.n_players())
        .map(|i| game.neighbors(i).iter().map(|nb| nb.player).collect())
        .collect()
}

/// Hop distance from the nearest source; `None` when unreachable.
pub fn bfs_distances(game: &PolymatrixGame, sources: &[usize]) -> Result<Vec<Option<usize>>> {
    let n = game.n_players();
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if s >= n {
            return Err(Error::InvalidConfig(format!("source {s} is not a player")));
        }
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap() + 1;
        for nb in game.neighbors(u) {
            if dist[nb.player].is_none() {
                dist[nb.player] = Some(d);
                queue.push_back(nb.player);
            }
        }
    }
    Ok(dist)
}

/// Largest chain accepted by [`fixture_chain_flip`].
pub const CHAIN_FIXTURE_MAX: usize = 16;

fn chain_matrix(eps: f64, flipped: bool) -> UtilityMatrix {
    let top = vec![0.5, 0.5 - eps];
    let bottom = vec![0.5 - 3.0 * eps, 0.5 - 2.0 * eps];
    let rows = if flipped { [bottom, top] } else { [top, bottom] };
    UtilityMatrix::from_rows(&rows).expect("2x2")
}

/// Two-action chain whose edge `(k, k+1)` has scale `eps_k = 0.1^{k+1}`, so
/// each player's choice is dictated by its left neighbor. Returns the game
/// and its pure equilibrium.
///
/// With `flipped` the rows of the first edge's matrix are swapped, which
/// changes the first player's best response and nobody else's.
pub fn fixture_chain_flip(n: usize, flipped: bool) -> Result<(PolymatrixGame, StrategyProfile)> {
    if !(2..=CHAIN_FIXTURE_MAX).contains(&n) {
        return Err(Error::FixtureTooLarge(format!(
            "chain fixture needs 2 <= N <= {CHAIN_FIXTURE_MAX}, got {n}"
        )));
    }
    let mut utilities = BTreeMap::new();
    let edges: Vec<_> = (0..n - 1).map(|k| (k, k + 1)).collect();
    for &(k, l) in &edges {
        let eps = 0.1 * 10f64.powi(-(k as i32));
        let m = chain_matrix(eps, flipped && k == 0);
        utilities.insert((l, k), m.negated_transpose());
        utilities.insert((k, l), m);
    }
    let game = PolymatrixGame::new(vec![2; n], edges, utilities, true)?;
    let mut choices: Vec<usize> = (0..n).map(|k| k % 2).collect();
    if flipped {
        choices[0] = 1;
    }
    let ne = StrategyProfile::pure(&game, &choices)?;
    Ok((game, ne))
}

fn triplet_left() -> UtilityMatrix {
    UtilityMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).expect("2x2")
}

fn triplet_middle() -> UtilityMatrix {
    UtilityMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).expect("2x2")
}

fn triplet_right() -> UtilityMatrix {
    UtilityMatrix::from_rows(&[vec![0.8, 0.0], vec![0.7, 0.1]]).expect("2x2")
}

fn triplet_game(n_triplets: usize, changed: Option<usize>) -> Result<PolymatrixGame> {
    if n_triplets == 0 {
        return Err(Error::InvalidConfig("need at least one triplet".into()));
    }
    let n = 3 * n_triplets;
    let edges: Vec<_> = (0..n - 1).map(|k| (k, k + 1)).collect();
    let mut utilities = BTreeMap::new();
    for k in 0..n_triplets {
        let (x, y, z) = (3 * k, 3 * k + 1, 3 * k + 2);
        let left = if changed == Some(k) {
            triplet_middle()
        } else {
            triplet_left()
        };
        utilities.insert((x, y), left.negated_transpose());
        utilities.insert((y, x), left);
        let right = triplet_right();
        utilities.insert((y, z), right.negated_transpose());
        utilities.insert((z, y), right);
        if k + 1 < n_triplets {
            utilities.insert((z, z + 1), UtilityMatrix::zeros(2, 2));
            utilities.insert((z + 1, z), UtilityMatrix::zeros(2, 2));
        }
    }
    PolymatrixGame::new(vec![2; n], edges, utilities, true)
}

/// Chain of `x_k - y_k - z_k` triplets joined by zero matrices, with
/// all-first-action as its equilibrium.
pub fn fixture_triplet_chain(n_triplets: usize) -> Result<(PolymatrixGame, StrategyProfile)> {
    let game = triplet_game(n_triplets, None)?;
    let ne = StrategyProfile::pure(&game, &vec![0; game.n_players()])?;
    Ok((game, ne))
}

/// The triplet chain with the `(y_k, x_k)` matrix of triplet `k` replaced;
/// `y_k` and `z_k` switch to their second action in the returned equilibrium.
pub fn fixture_triplet_chain_adjacent(
    n_triplets: usize,
    k: usize,
) -> Result<(PolymatrixGame, StrategyProfile)> {
    if k >= n_triplets {
        return Err(Error::InvalidConfig(format!(
            "triplet {k} out of range for {n_triplets} triplets"
        )));
    }
    let game = triplet_game(n_triplets, Some(k))?;
    let mut choices = vec![0; game.n_players()];
    choices[3 * k + 1] = 1;
    choices[3 * k + 2] = 1;
    let ne = StrategyProfile::pure(&game, &choices)?;
    Ok((game, ne))
}

/// Path graph `0 - 1 - ... - (n-1)` with random utilities.
pub fn gen_chain(n: usize, actions: usize, zero_sum: bool, seed: u64) -> Result<PolymatrixGame> {
    check_size(n, actions)?;
    let edges = (0..n - 1).map(|k| (k, k + 1)).collect();
    assemble(n, actions, edges, zero_sum, seed)
}
