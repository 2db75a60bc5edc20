//! Safety (greatest) and reachability (least) fixed points on a deterministic game graph.

use crate::abstraction::{Abstraction, SINK};

pub const NO_INPUT: u16 = u16::MAX;

/// Reverse edges: for each target state, the source state of every (source, input) edge into it.
pub struct Predecessors {
    offsets: Vec<u32>,
    sources: Vec<u32>,
}

impl Predecessors {
    pub fn new(a: &Abstraction) -> Self {
        let ns = a.num_states();
        let ni = a.num_inputs();
        let mut offsets = vec![0u32; ns + 1];
        for &t in &a.successors {
            if t != SINK {
                offsets[t as usize + 1] += 1;
            }
        }
        for i in 0..ns {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut sources = vec![0u32; offsets[ns] as usize];
        for (cell, &t) in a.successors.iter().enumerate() {
            if t != SINK {
                let slot = &mut fill[t as usize];
                sources[*slot as usize] = (cell / ni) as u32;
                *slot += 1;
            }
        }
        Predecessors { offsets, sources }
    }

    pub fn of(&self, t: usize) -> &[u32] {
        &self.sources[self.offsets[t] as usize..self.offsets[t + 1] as usize]
    }
}

fn first_input(a: &Abstraction, s: usize, ok: impl Fn(u32) -> bool) -> u16 {
    (0..a.num_inputs())
        .find(|&i| {
            let t = a.successor(s, i);
            t != SINK && ok(t)
        })
        .map_or(NO_INPUT, |i| i as u16)
}

/// Largest W ⊆ safe where every state has an input with successor in W.
/// Choice is the smallest such input.
pub fn solve_safety_with(a: &Abstraction, preds: &Predecessors, safe: &[bool]) -> (Vec<bool>, Vec<u16>) {
    let ns = a.num_states();
    let mut win: Vec<bool> = safe.to_vec();
    let mut count = vec![0u32; ns];
    let mut stack = Vec::new();
    for s in 0..ns {
        if !win[s] {
            continue;
        }
        count[s] = (0..a.num_inputs())
            .filter(|&i| {
                let t = a.successor(s, i);
                t != SINK && safe[t as usize]
            })
            .count() as u32;
        if count[s] == 0 {
            win[s] = false;
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        for &p in preds.of(s) {
            let p = p as usize;
            if win[p] {
                count[p] -= 1;
                if count[p] == 0 {
                    win[p] = false;
                    stack.push(p);
                }
            }
        }
    }
    let choice = (0..ns)
        .map(|s| if win[s] { first_input(a, s, |t| win[t as usize]) } else { NO_INPUT })
        .collect();
    (win, choice)
}

pub fn solve_safety(a: &Abstraction, safe: &[bool]) -> (Vec<bool>, Vec<u16>) {
    solve_safety_with(a, &Predecessors::new(a), safe)
}

pub struct ReachResult {
    pub win: Vec<bool>,
    /// Rank-decreasing input for non-target winning states; NO_INPUT elsewhere.
    pub choice: Vec<u16>,
    /// Steps to target; u32::MAX when losing.
    pub rank: Vec<u32>,
}

/// States that can be driven into `target` while staying in `within` before arrival.
pub fn solve_reach_with(a: &Abstraction, preds: &Predecessors, target: &[bool], within: &[bool]) -> ReachResult {
    let ns = a.num_states();
    let mut rank = vec![u32::MAX; ns];
    let mut queue = std::collections::VecDeque::new();
    for s in 0..ns {
        if target[s] {
            rank[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for &p in preds.of(s) {
            let p = p as usize;
            if rank[p] == u32::MAX && within[p] {
                rank[p] = rank[s] + 1;
                queue.push_back(p);
            }
        }
    }
    let win: Vec<bool> = rank.iter().map(|&r| r != u32::MAX).collect();
    let choice = (0..ns)
        .map(|s| {
            if rank[s] == 0 || rank[s] == u32::MAX {
                NO_INPUT
            } else {
                first_input(a, s, |t| rank[t as usize] < rank[s])
            }
        })
        .collect();
    ReachResult { win, choice, rank }
}

pub fn solve_reach(a: &Abstraction, target: &[bool], within: &[bool]) -> ReachResult {
    solve_reach_with(a, &Predecessors::new(a), target, within)
}
