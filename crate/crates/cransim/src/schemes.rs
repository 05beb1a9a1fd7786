//! Clustering baselines: no CoMP, static (distance-based) and greedy
//! (edge sum-throughput) clustering.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::Partition;
use crate::geometry::dist;
use crate::phy::{CompPlan, EvalScope, TtiPhy};
use crate::Real;

/// Which clustering scheme drives JT-CoMP in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[serde(alias = "no_jt_comp")]
    NoComp,
    #[serde(alias = "sc_jt_comp")]
    Sc,
    #[serde(alias = "gc_jt_comp")]
    Gc,
    #[serde(alias = "game_jt_comp")]
    Game,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::NoComp => "no_comp",
            Scheme::Sc => "sc",
            Scheme::Gc => "gc",
            Scheme::Game => "game",
        }
    }

    pub fn all() -> [Scheme; 4] {
        [Scheme::NoComp, Scheme::Sc, Scheme::Gc, Scheme::Game]
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_comp" | "no_jt_comp" | "nocomp" => Ok(Scheme::NoComp),
            "sc" | "sc_jt_comp" | "static" => Ok(Scheme::Sc),
            "gc" | "gc_jt_comp" | "greedy" => Ok(Scheme::Gc),
            "game" | "game_jt_comp" => Ok(Scheme::Game),
            other => Err(crate::Error::invalid_config(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// All-singleton partition (JT-CoMP disabled).
pub fn no_comp_partition(n_rrhs: usize) -> Partition {
    Partition::singletons(n_rrhs)
}

/// Distance-based static clusters, computed once per run: repeatedly anchor
/// at the unassigned RRH farthest from the deployment centroid and group it
/// with its `cluster_size - 1` nearest unassigned RRHs, so undersized
/// leftover groups end up at the network edge.
pub fn static_clusters(positions: &[[Real; 2]], cluster_size: usize) -> Partition {
    let n = positions.len();
    let centroid = {
        let mut c = [0.0, 0.0];
        for p in positions {
            c[0] += p[0];
            c[1] += p[1];
        }
        [c[0] / n as Real, c[1] / n as Real]
    };
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut sets = Vec::new();
    while !unassigned.is_empty() {
        // Anchor: farthest from the centroid, ties to the lowest id.
        let &anchor = unassigned
            .iter()
            .max_by(|&&a, &&b| {
                dist(positions[a], centroid)
                    .partial_cmp(&dist(positions[b], centroid))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        unassigned.retain(|&x| x != anchor);
        let mut members = vec![anchor];
        // Nearest unassigned neighbors, ties to the lowest id.
        let mut by_dist: Vec<usize> = unassigned.clone();
        by_dist.sort_by(|&a, &b| {
            dist(positions[a], positions[anchor])
                .partial_cmp(&dist(positions[b], positions[anchor]))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &x in by_dist.iter().take(cluster_size - 1) {
            members.push(x);
            unassigned.retain(|&y| y != x);
        }
        sets.push(members);
    }
    Partition::from_sets(sets)
}

/// Greedy clustering: starting from a random unassigned RRH, enumerate all
/// subsets of unassigned RRHs containing it up to `max_size` and commit the
/// one maximizing the sum-throughput of the involved edge UEs under joint
/// transmission. Ties prefer the lexicographically smallest member set.
/// Returns the partition and the number of evaluated subsets.
pub fn greedy_clusters<R: Rng>(
    phy: &TtiPhy,
    plan: &CompPlan,
    max_size: usize,
    rng: &mut R,
) -> (Partition, u64) {
    let n = phy.n_rrhs;
    let mut unassigned: Vec<usize> = (0..n).collect();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut evaluations: u64 = 0;

    while !unassigned.is_empty() {
        let anchor = unassigned[rng.gen_range(0..unassigned.len())];
        let others: Vec<usize> = unassigned.iter().copied().filter(|&x| x != anchor).collect();

        // All subsets of `others` of size < max_size, plus the anchor.
        let mut best: Option<(Real, Vec<usize>)> = None;
        let mut combo: Vec<usize> = Vec::new();
        enumerate_subsets(&others, max_size - 1, &mut combo, &mut |subset| {
            let mut members = Vec::with_capacity(subset.len() + 1);
            members.extend_from_slice(subset);
            members.push(anchor);
            members.sort_unstable();
            evaluations += 1;
            let sum: Real = phy
                .eval_coalition(&members, Some(plan), EvalScope::EdgeOnly, false)
                .iter()
                .map(|e| e.bps)
                .sum();
            let better = match &best {
                None => true,
                Some((bs, bm)) => sum > *bs || (sum == *bs && members < *bm),
            };
            if better {
                best = Some((sum, members));
            }
        });

        let (_, members) = best.expect("at least the singleton subset is evaluated");
        unassigned.retain(|x| !members.contains(x));
        sets.push(members);
    }
    (Partition::from_sets(sets), evaluations)
}

/// Visit every subset of `pool` with at most `max_len` elements (including
/// the empty subset), in lexicographic order of pool indices.
fn enumerate_subsets(pool: &[usize], max_len: usize, prefix: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    visit(prefix);
    if prefix.len() == max_len {
        return;
    }
    for i in 0..pool.len() {
        prefix.push(pool[i]);
        enumerate_subsets(&pool[i + 1..], max_len, prefix, visit);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelRealization;
    use crate::geometry::HexLayout;
    use crate::linkadapt::{CqiTable, SinrAveraging};
    use crate::phy::PhyParams;
    use crate::rng::Stream;
    use crate::scheduler::RbGrid;
    use num_complex::Complex64;
    use rand::Rng;

    #[test]
    fn scheme_parsing() {
        assert_eq!("game".parse::<Scheme>().unwrap(), Scheme::Game);
        assert_eq!("sc_jt_comp".parse::<Scheme>().unwrap(), Scheme::Sc);
        assert!("bogus".parse::<Scheme>().is_err());
    }

    #[test]
    fn no_comp_is_singletons() {
        let p = no_comp_partition(5);
        assert_eq!(p.coalitions().len(), 5);
        assert_eq!(p.max_size(), 1);
        assert!((p.avg_size() - 1.0).abs() < 1e-12);
    }

    fn hex_positions(n: usize) -> Vec<[Real; 2]> {
        HexLayout::<Real>::new(n, 125.0).unwrap().cell_positions()
    }

    #[test]
    fn static_all_in_one() {
        let p = static_clusters(&hex_positions(4), 4);
        assert_eq!(p.coalitions().len(), 1);
        assert_eq!(p.coalition_of(0), &[0, 1, 2, 3]);
    }

    #[test]
    fn static_two_groups_of_four() {
        let p = static_clusters(&hex_positions(8), 4);
        assert_eq!(p.coalitions().len(), 2);
        assert!(p.coalitions().iter().all(|c| c.len() == 4));
        p.validate(8, None).unwrap();
    }

    #[test]
    fn static_leftover_is_peripheral() {
        // 7 cells, size 4: one group of 4 anchored on the ring, one of 3.
        let positions = hex_positions(7);
        let p = static_clusters(&positions, 4);
        let mut sizes: Vec<usize> = p.coalitions().iter().map(|c| c.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 4]);
        // The first anchor is a ring cell (distance > 0 from centroid),
        // so the center cell 0 belongs to the group of 4.
        let four = p.coalitions().iter().find(|c| c.len() == 4).unwrap();
        assert!(four.contains(&0));
    }

    #[test]
    fn static_is_deterministic() {
        let a = static_clusters(&hex_positions(12), 4);
        let b = static_clusters(&hex_positions(12), 4);
        assert_eq!(a, b);
    }

    fn tiny_phy_fixture(
        seed: u64,
    ) -> (ChannelRealization<Real>, Vec<usize>, Vec<RbGrid>, Vec<Real>, PhyParams, Vec<bool>) {
        let mut rng = Stream::new(seed, "schemes");
        let n_ues = 6;
        let n_rrhs = 3;
        let h: Vec<Complex64> = (0..n_ues * n_rrhs)
            .map(|_| Complex64::new(rng.gen::<f64>() + 0.05, rng.gen::<f64>() - 0.5))
            .collect();
        let ch = ChannelRealization::from_vectors(n_ues, n_rrhs, 1, h);
        let schedule = vec![
            RbGrid { groups: vec![vec![0, 1]] },
            RbGrid { groups: vec![vec![2, 3]] },
            RbGrid { groups: vec![vec![4, 5]] },
        ];
        let params = PhyParams {
            n_beams: 1,
            subcarriers_per_rb: 12,
            p_ftpc: 0.4,
            noise_w: 1e-12,
            n_re: 144,
            tti_s: 1e-3,
            sinr_averaging: SinrAveraging::Linear,
            cqi: CqiTable::default(),
        };
        let edge = vec![true, false, true, false, false, false];
        (ch, vec![0, 0, 1, 1, 2, 2], schedule, vec![1.0; 3], params, edge)
    }

    #[test]
    fn greedy_max_size_one_gives_singletons() {
        let (ch, serving, schedule, tx, params, edge) = tiny_phy_fixture(1);
        let phy = TtiPhy::build(&ch, &serving, &schedule, &tx, &params);
        let ranks = crate::game::edge_ranks(&vec![0.0; 6], &edge);
        let plan = CompPlan::build(&phy, edge, ranks);
        let (p, evals) = greedy_clusters(&phy, &plan, 1, &mut Stream::new(2, "gc"));
        assert_eq!(p, Partition::singletons(3));
        assert_eq!(evals, 3);
    }

    #[test]
    fn greedy_enumerates_all_subsets_of_first_anchor() {
        let (ch, serving, schedule, tx, params, edge) = tiny_phy_fixture(3);
        let phy = TtiPhy::build(&ch, &serving, &schedule, &tx, &params);
        let ranks = crate::game::edge_ranks(&vec![0.0; 6], &edge);
        let plan = CompPlan::build(&phy, edge, ranks);
        // L=3, max=4: the first anchor sees {a}, {a,b}, {a,c}, {a,b,c}; if
        // the committed set is not everything, the remainder adds more.
        let (p, evals) = greedy_clusters(&phy, &plan, 4, &mut Stream::new(5, "gc"));
        p.validate(3, Some(4)).unwrap();
        assert!(evals >= 4);
    }

    #[test]
    fn greedy_commits_argmax_subset() {
        let (ch, serving, schedule, tx, params, edge) = tiny_phy_fixture(7);
        let phy = TtiPhy::build(&ch, &serving, &schedule, &tx, &params);
        let ranks = crate::game::edge_ranks(&vec![0.0; 6], &edge);
        let plan = CompPlan::build(&phy, edge.clone(), ranks);
        let mut rng = Stream::new(9, "gc");
        let (p, _) = greedy_clusters(&phy, &plan, 4, &mut rng);
        p.validate(3, Some(4)).unwrap();

        // Exhaustive re-check: the first committed coalition (the one that
        // contains the first anchor) must dominate every other subset of
        // the full RRH set containing that anchor.
        let mut rng2 = Stream::new(9, "gc");
        let anchor = [0usize, 1, 2][rng2.gen_range(0..3usize)];
        let committed = p.coalition_of(anchor).to_vec();
        let score = |members: &[usize]| -> Real {
            phy.eval_coalition(members, Some(&plan), EvalScope::EdgeOnly, false)
                .iter()
                .map(|e| e.bps)
                .sum()
        };
        let committed_score = score(&committed);
        for mask in 1u32..8 {
            let members: Vec<usize> = (0..3).filter(|&i| mask & (1 << i) != 0).collect();
            if !members.contains(&anchor) || members.len() > 4 {
                continue;
            }
            assert!(
                score(&members) <= committed_score + 1e-9,
                "subset {members:?} beats committed {committed:?}"
            );
        }
    }
}
