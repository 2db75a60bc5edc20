//! Plain CSV writers for Monte-Carlo series and trajectory dumps.

use std::io::Write;

use super::{TraceStats, Trajectory};
use crate::error::Result;

/// Rows `t,set_name,metric,value`; metrics are `mean`, `root` and `se`.
pub fn write_stats<W: Write>(mut w: W, stats: &TraceStats) -> Result<()> {
    writeln!(w, "t,set_name,metric,value")?;
    for s in &stats.series {
        for (k, t) in stats.times.iter().enumerate() {
            writeln!(w, "{t},{},mean,{}", s.name, s.mean[k])?;
            writeln!(w, "{t},{},root,{}", s.name, s.root[k])?;
            writeln!(w, "{t},{},se,{}", s.name, s.se[k])?;
        }
    }
    Ok(())
}

/// Rows `run_id,t,x1..xn,u1..um`.
pub fn write_trajectories<W: Write>(mut w: W, trajs: &[Trajectory]) -> Result<()> {
    let (n, m) = match trajs.first() {
        Some(t) if !t.states.is_empty() => (t.states[0].len(), t.inputs[0].len()),
        _ => (0, 0),
    };
    let mut header = vec!["run_id".to_string(), "t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("u{i}")));
    writeln!(w, "{}", header.join(","))?;
    for tr in trajs {
        for k in 0..tr.times.len() {
            let mut row = vec![tr.run_id.to_string(), tr.times[k].to_string()];
            row.extend(tr.states[k].iter().map(|v| v.to_string()));
            row.extend(tr.inputs[k].iter().map(|v| v.to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
    }
    Ok(())
}
