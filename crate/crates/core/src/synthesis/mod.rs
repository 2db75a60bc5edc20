//! Games on the abstraction for a small family of temporal templates, and the
//! phase-automaton controller they produce.

mod controller;
pub mod solver;

use serde::{Deserialize, Serialize};

pub use controller::{Controller, Phase, CONTROLLER_MAGIC, CONTROLLER_VERSION};
pub use solver::{solve_reach, solve_safety, Predecessors, ReachResult, NO_INPUT};

use crate::abstraction::{Abstraction, SINK};
use crate::error::{Error, Result};
use crate::model::BoxUnion;

/// A set in state space with an optional robustness margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub set: BoxUnion,
    #[serde(default)]
    pub shrink: f64,
}

impl From<BoxUnion> for Region {
    fn from(set: BoxUnion) -> Self {
        Region { set, shrink: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecTemplate {
    /// □Z
    Safe { z: Region },
    /// ◇W
    Reach { w: Region },
    /// ◇□W
    ReachStay { w: Region },
    /// ◇□W ∧ □Z
    ReachStayWhile { w: Region, z: Region },
    /// Visit each of `sequence` in order, then ◇□`last`.
    SeqThenStay { sequence: Vec<Region>, last: Region },
}

/// Domain states whose coordinates lie in the set, at depth at least `shrink`.
pub fn label_states(a: &Abstraction, set: &BoxUnion, shrink: f64) -> Result<Vec<bool>> {
    if shrink < 0.0 {
        return Err(Error::InvalidArgument("shrink must be nonnegative".into()));
    }
    let g = &a.grid;
    let eta = g.eta;
    let ranges = set.index_ranges(eta);
    Ok((0..g.len())
        .map(|s| {
            if !g.in_domain(s) {
                return false;
            }
            let k = g.multi_index(s);
            let member = ranges.iter().any(|r| r.iter().zip(&k).all(|(&(lo, hi), &ki)| lo <= ki && ki <= hi));
            if !member || shrink == 0.0 {
                return member;
            }
            let x: Vec<f64> = k.iter().map(|&ki| ki as f64 * eta).collect();
            set.depth(&x) >= shrink
        })
        .collect())
}

fn label(a: &Abstraction, r: &Region) -> Result<Vec<bool>> {
    label_states(a, &r.set, r.shrink)
}

fn and(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

fn domain_mask(a: &Abstraction) -> Vec<bool> {
    (0..a.num_states()).map(|s| a.grid.in_domain(s)).collect()
}

/// reach(safety(W ∩ stay_in)) while remaining in `within`; returns (win, choice).
fn reach_stay(a: &Abstraction, preds: &Predecessors, w: &[bool], within: &[bool]) -> (Vec<bool>, Vec<u16>) {
    let (stay, stay_choice) = solver::solve_safety_with(a, preds, &and(w, within));
    let r = solver::solve_reach_with(a, preds, &stay, within);
    let choice = (0..a.num_states())
        .map(|s| if stay[s] { stay_choice[s] } else { r.choice[s] })
        .collect();
    (r.win, choice)
}

/// Smallest input whose successor is winning, else the smallest non-SINK input, else 0.
fn resting_choice(a: &Abstraction, s: usize, win: &[bool]) -> u16 {
    let pick = |ok: &dyn Fn(u32) -> bool| (0..a.num_inputs()).find(|&i| ok(a.successor(s, i)));
    pick(&|t| t != SINK && win[t as usize])
        .or_else(|| pick(&|t| t != SINK))
        .unwrap_or(0) as u16
}

/// Solves the template and checks that every initial state is winning in phase 0.
pub fn solve_spec(a: &Abstraction, spec: &SpecTemplate, initial: &[Vec<f64>]) -> Result<Controller> {
    let preds = Predecessors::new(a);
    let ns = a.num_states();
    let all = domain_mask(a);
    let none = vec![false; ns];
    let phases: Vec<Phase> = match spec {
        SpecTemplate::Safe { z } => {
            let (win, choice) = solver::solve_safety_with(a, &preds, &label(a, z)?);
            vec![Phase { win, trigger: none, choice }]
        }
        SpecTemplate::Reach { w } => {
            let target = label(a, w)?;
            let r = solver::solve_reach_with(a, &preds, &target, &all);
            let choice = (0..ns)
                .map(|s| if target[s] { resting_choice(a, s, &r.win) } else { r.choice[s] })
                .collect();
            vec![Phase { win: r.win, trigger: none, choice }]
        }
        SpecTemplate::ReachStay { w } => {
            let (win, choice) = reach_stay(a, &preds, &label(a, w)?, &all);
            vec![Phase { win, trigger: none, choice }]
        }
        SpecTemplate::ReachStayWhile { w, z } => {
            let (zwin, _) = solver::solve_safety_with(a, &preds, &label(a, z)?);
            let (win, choice) = reach_stay(a, &preds, &label(a, w)?, &zwin);
            vec![Phase { win, trigger: none, choice }]
        }
        SpecTemplate::SeqThenStay { sequence, last } => {
            let (win, choice) = reach_stay(a, &preds, &label(a, last)?, &all);
            let mut phases = vec![Phase { win, trigger: none, choice }];
            for region in sequence.iter().rev() {
                let trigger = and(&label(a, region)?, &phases[0].win);
                let r = solver::solve_reach_with(a, &preds, &trigger, &all);
                phases.insert(0, Phase { win: r.win, trigger, choice: r.choice });
            }
            phases
        }
    };
    let c = Controller::new(a, phases);
    for x in initial {
        let s = a.grid.snap(x);
        if s == SINK || !c.phases[0].win[s as usize] {
            let phase = c.phases.iter().rposition(|p| !p.win.iter().any(|&w| w)).unwrap_or(0);
            return Err(Error::Unrealizable { phase });
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::solver::tests::toy;

    fn region(lo: f64, hi: f64) -> Region {
        BoxUnion::single(vec![[lo, hi]]).unwrap().into()
    }

    #[test]
    fn label_counts() {
        let a = toy(5, 1, vec![0, 1, 2, 3, 4]);
        assert_eq!(label_states(&a, &BoxUnion::single(vec![[0.5, 2.0]]).unwrap(), 0.0).unwrap(), vec![false, true, true, false, false]);
        assert_eq!(label_states(&a, &BoxUnion::single(vec![[-1.0, 9.0]]).unwrap(), 0.0).unwrap(), vec![true; 5]);
        assert_eq!(label_states(&a, &BoxUnion::single(vec![[7.0, 9.0]]).unwrap(), 0.0).unwrap(), vec![false; 5]);
        assert_eq!(label_states(&a, &BoxUnion::single(vec![[0.0, 4.0]]).unwrap(), 1.0).unwrap(), vec![false, true, true, true, false]);
    }

    #[test]
    fn reach_unreachable_is_unrealizable() {
        // 0 ↔ 1, 2 isolated
        let a = toy(3, 1, vec![1, 0, 2]);
        let spec = SpecTemplate::Reach { w: region(2.0, 2.0 + 1e-9) };
        let e = solve_spec(&a, &spec, &[vec![0.0]]).unwrap_err();
        assert!(matches!(e, Error::Unrealizable { phase: 0 }));
        assert!(solve_spec(&a, &spec, &[vec![2.0]]).is_ok());
    }

    /// Inputs 0 = left, 1 = right, 2 = hold on a five-state line; ends saturate.
    fn line_moves() -> Vec<u32> {
        (0..5u32).flat_map(|s| [s.saturating_sub(1), (s + 1).min(4), s]).collect()
    }

    #[test]
    fn sequence_then_stay_on_a_line() {
        let a = toy(5, 3, line_moves());
        let spec = SpecTemplate::SeqThenStay { sequence: vec![region(4.0, 4.5), region(0.0, 0.5)], last: region(2.0, 2.5) };
        let c = solve_spec(&a, &spec, &[vec![2.0]]).unwrap();
        assert_eq!(c.phases.len(), 3);
        assert!(c.check_closure(&a));
        // Closed loop from state 2 visits 4, then 0, then settles at 2.
        let (mut s, mut phase) = (2usize, 0usize);
        let mut visited = vec![];
        for _ in 0..20 {
            let (i, p) = c.refine_index(&a.grid.coords(s), phase).unwrap();
            assert!(p >= phase);
            phase = p;
            s = a.successor(s, i) as usize;
            visited.push(s);
        }
        let first4 = visited.iter().position(|&s| s == 4).unwrap();
        let first0 = visited.iter().position(|&s| s == 0).unwrap();
        assert!(first4 < first0);
        assert_eq!(*visited.last().unwrap(), 2);
        assert_eq!(phase, 2);
    }

    #[test]
    fn reach_stay_while_respects_z() {
        let a = toy(5, 3, line_moves());
        let spec = SpecTemplate::ReachStayWhile { w: region(4.0, 4.5), z: region(0.0, 3.5) };
        assert!(matches!(solve_spec(&a, &spec, &[vec![0.0]]), Err(Error::Unrealizable { .. })));
        let spec = SpecTemplate::ReachStayWhile { w: region(3.0, 3.5), z: region(0.0, 3.5) };
        let c = solve_spec(&a, &spec, &[vec![0.0]]).unwrap();
        assert!(c.check_closure(&a));
    }
}
