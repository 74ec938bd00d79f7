//! JSON game files:
//! `{"n", "actions", "zero_sum", "edges": [[i,j]], "utilities": {"i,j": [[..]]}}`.

use super::{PolymatrixGame, UtilityMatrix};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Serialized form of a [`PolymatrixGame`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub n: usize,
    pub actions: Vec<usize>,
    pub zero_sum: bool,
    pub edges: Vec<[usize; 2]>,
    pub utilities: BTreeMap<String, Vec<Vec<f64>>>,
}

fn parse_key(key: &str) -> Result<(usize, usize)> {
    let (a, b) = key
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("utility key {key:?} is not \"i,j\"")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("utility key {key:?}: {e}")))
    };
    Ok((parse(a)?, parse(b)?))
}

impl GameFile {
    pub fn into_game(self) -> Result<PolymatrixGame> {
        if self.n != self.actions.len() {
            return Err(Error::ShapeMismatch(format!(
                "n = {} but {} action counts given",
                self.n,
                self.actions.len()
            )));
        }
        let mut utilities = BTreeMap::new();
        for (key, rows) in &self.utilities {
            let (i, j) = parse_key(key)?;
            if utilities
                .insert((i, j), UtilityMatrix::from_rows(rows)?)
                .is_some()
            {
                return Err(Error::Parse(format!("duplicate utility key for ({i},{j})")));
            }
        }
        let edges = self.edges.iter().map(|e| (e[0], e[1])).collect();
        PolymatrixGame::new(self.actions, edges, utilities, self.zero_sum)
    }
}

impl From<&PolymatrixGame> for GameFile {
    fn from(game: &PolymatrixGame) -> Self {
        let mut utilities = BTreeMap::new();
        for &(i, j) in game.edges() {
            for (a, b) in [(i, j), (j, i)] {
                let m = game.utility(a, b).expect("edge present");
                utilities.insert(format!("{a},{b}"), m.to_rows());
            }
        }
        Self {
            n: game.n_players(),
            actions: game.actions().to_vec(),
            zero_sum: game.is_zero_sum(),
            edges: game.edges().iter().map(|&(i, j)| [i, j]).collect(),
            utilities,
        }
    }
}

impl PolymatrixGame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GameFile::from(self)).expect("game serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<GameFile>(text)?.into_game()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_survive_roundtrip() {
        let u = UtilityMatrix::from_rows(&[
            vec![0.1 + 0.2, -1.0 / 3.0],
            vec![f64::MIN_POSITIVE, -0.987_654_321_012_345_6],
        ])
        .unwrap();
        let game = PolymatrixGame::new(
            vec![2, 2],
            vec![(0, 1)],
            BTreeMap::from([((1, 0), u.negated_transpose()), ((0, 1), u)]),
            true,
        )
        .unwrap();
        let back = PolymatrixGame::from_json(&game.to_json()).unwrap();
        assert_eq!(back, game);
        assert_eq!(back.to_json(), game.to_json());
    }

    #[test]
    fn malformed_keys_and_counts() {
        let text = r#"{"n":2,"actions":[1,1],"zero_sum":false,"edges":[[0,1]],
            "utilities":{"0-1":[[0.0]],"1,0":[[0.0]]}}"#;
        assert!(matches!(PolymatrixGame::from_json(text), Err(Error::Parse(_))));
        let text = r#"{"n":3,"actions":[1,1],"zero_sum":false,"edges":[[0,1]],
            "utilities":{"0,1":[[0.0]],"1,0":[[0.0]]}}"#;
        assert!(matches!(
            PolymatrixGame::from_json(text),
            Err(Error::ShapeMismatch(_))
        ));
        let text = r#"{"n":2,"actions":[1,1],"zero_sum":false,"edges":[[0,1]],
            "utilities":{"0,1":[[0.0]],"1,0":[[0.0]]}}"#;
        assert!(PolymatrixGame::from_json(text).is_ok());
    }
}
