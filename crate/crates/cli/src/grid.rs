//! Sweep grids.
//!
//! ```toml
//! maxDepth = [6, 9]
//! horizon = [1000, 5000]
//! mix = ["faithful", "mixed"]
//! seeds = [1, 2, 3]          # or seedRange = [1, 20], inclusive
//! budget = 64                # optional, passed through to every run
//! ```

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::Deserialize;

use dce_core::config::{AdversarySpec, BehaviorSpec, Mode, RunConfig, DEFAULT_BUDGET};

/// How the adversaries of a generated run behave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mix {
    Silent,
    Faithful,
    Laggard,
    Chaotic,
    /// Modes rotate over roles and indices, shifted by the seed.
    Mixed,
}

impl Mix {
    const ALL: [(&'static str, Mix); 5] = [
        ("silent", Mix::Silent),
        ("faithful", Mix::Faithful),
        ("laggard", Mix::Laggard),
        ("chaotic", Mix::Chaotic),
        ("mixed", Mix::Mixed),
    ];
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = Mix::ALL
            .iter()
            .find(|(_, m)| m == self)
            .map(|(n, _)| *n)
            .unwrap();
        f.write_str(name)
    }
}

impl FromStr for Mix {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match Mix::ALL.iter().find(|(n, _)| *n == s) {
            Some(&(_, m)) => Ok(m),
            None => bail!("unknown adversary mix {s:?}"),
        }
    }
}

fn behavior(mode: Mode) -> BehaviorSpec {
    let mut b = BehaviorSpec::of(mode);
    if mode == Mode::Faithful {
        b.attack = 0.5;
    }
    b.period = 3;
    b
}

/// The config of one sweep cell. `K` receives 1, 3, 5, 7 at evenly spaced
/// stages; every requirement index gets an adversary.
pub fn cell_config(max_depth: u64, horizon: u64, mix: Mix, seed: u64, budget: u64) -> RunConfig {
    let mut cfg = RunConfig::new(max_depth, horizon);
    cfg.seed = seed;
    cfg.budget = budget;
    cfg.k_script = (0..4)
        .map(|i| (2 * i + 1, (horizon * (i + 1) / 5).max(1)))
        .collect();
    if mix == Mix::Silent {
        return cfg;
    }
    const ROTATION: [Mode; 4] = [Mode::Faithful, Mode::Laggard, Mode::Chaotic, Mode::Faithful];
    for e in 0..max_depth.div_ceil(3) {
        let mode = |role: u64| match mix {
            Mix::Faithful => Mode::Faithful,
            Mix::Laggard => Mode::Laggard,
            Mix::Chaotic => Mode::Chaotic,
            _ => ROTATION[((seed + e + role) % 4) as usize],
        };
        let mut a = AdversarySpec::silent(e);
        a.seed = seed.wrapping_mul(1_000_003).wrapping_add(e);
        a.psi = behavior(mode(0));
        a.phi = behavior(mode(1));
        a.theta = behavior(mode(2));
        cfg.adversaries.push(a);
    }
    cfg
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct GridFile {
    #[serde(default)]
    max_depth: Vec<u64>,
    #[serde(default)]
    horizon: Vec<u64>,
    #[serde(default)]
    mix: Vec<String>,
    #[serde(default)]
    seeds: Vec<u64>,
    seed_range: Option<(u64, u64)>,
    budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub max_depth: Vec<u64>,
    pub horizon: Vec<u64>,
    pub mix: Vec<Mix>,
    pub seeds: Vec<u64>,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub max_depth: u64,
    pub horizon: u64,
    pub mix: Mix,
    pub seed: u64,
}

impl Cell {
    pub fn id(&self) -> String {
        format!(
            "d{}-h{}-{}-s{}",
            self.max_depth, self.horizon, self.mix, self.seed
        )
    }
}

impl Grid {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let g: GridFile = toml::from_str(text).context("malformed grid")?;
        let mut seeds = g.seeds;
        if let Some((a, b)) = g.seed_range {
            seeds.extend(a..=b);
        }
        let mix = if g.mix.is_empty() {
            vec![Mix::Faithful]
        } else {
            g.mix
                .iter()
                .map(|m| m.parse())
                .collect::<anyhow::Result<_>>()?
        };
        Ok(Grid {
            max_depth: g.max_depth,
            horizon: g.horizon,
            mix,
            seeds,
            budget: g.budget.unwrap_or(DEFAULT_BUDGET),
        })
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &max_depth in &self.max_depth {
            for &horizon in &self.horizon {
                for &mix in &self.mix {
                    for &seed in &self.seeds {
                        out.push(Cell {
                            max_depth,
                            horizon,
                            mix,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn config(&self, cell: &Cell) -> RunConfig {
        cell_config(
            cell.max_depth,
            cell.horizon,
            cell.mix,
            cell.seed,
            self.budget,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_the_product() {
        let g = Grid::from_toml("maxDepth = [3, 6]\nhorizon = [10, 20]\nmix = [\"silent\", \"mixed\"]\nseedRange = [1, 3]").unwrap();
        assert_eq!(g.cells().len(), 2 * 2 * 2 * 3);
        assert_eq!(g.cells()[0].id(), "d3-h10-silent-s1");
    }

    #[test]
    fn missing_axis_gives_no_cells() {
        let g = Grid::from_toml("maxDepth = [3]\nseeds = [1]").unwrap();
        assert!(g.cells().is_empty());
    }

    #[test]
    fn generated_configs_validate() {
        for mix in Mix::ALL.map(|(_, m)| m) {
            for depth in [1, 5, 9] {
                let cfg = cell_config(depth, 50, mix, 7, 64);
                cfg.validate().unwrap();
                assert_eq!(
                    cfg.adversaries.len() as u64,
                    if mix == Mix::Silent {
                        0
                    } else {
                        depth.div_ceil(3)
                    }
                );
            }
        }
    }

    #[test]
    fn mix_names_round_trip() {
        for (name, m) in Mix::ALL {
            assert_eq!(name.parse::<Mix>().unwrap(), m);
            assert_eq!(m.to_string(), name);
        }
        assert!("loud".parse::<Mix>().is_err());
    }
}
