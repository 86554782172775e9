//! Hand a model to an outside solver for cross-checking.
//!
//! If `MAINTGAME_EXTERNAL_SOLVER` names an executable, [`solve_external`]
//! writes the dump to a temp directory and runs `<exe> <dump> <solution>`.
//! The solver must write the solution file as:
//!
//! ```text
//! STATUS <Optimal|Infeasible|Unbounded|LimitReached>
//! OBJECTIVE <value>
//! <var id> <value>      (one line per variable; omitted ids read as 0)
//! ```

use std::path::Path;
use std::process::Command;

use super::{dump, MilpError, MilpModel, MilpSolution, SolveStats, SolveStatus};

pub const ENV_VAR: &str = "MAINTGAME_EXTERNAL_SOLVER";

/// `None` when the environment hook is unset.
pub fn solve_external(model: &MilpModel) -> Result<Option<MilpSolution>, MilpError> {
    match std::env::var_os(ENV_VAR) {
        Some(exe) if !exe.is_empty() => solve_with(Path::new(&exe), model).map(Some),
        _ => Ok(None),
    }
}

pub fn solve_with(exe: &Path, model: &MilpModel) -> Result<MilpSolution, MilpError> {
    let dir = tempfile::tempdir()?;
    let model_path = dir.path().join("model.milp");
    let sol_path = dir.path().join("solution.txt");
    std::fs::write(&model_path, dump::export_external(model))?;
    let out = Command::new(exe).arg(&model_path).arg(&sol_path).output()?;
    if !out.status.success() {
        return Err(MilpError::External(format!(
            "{} exited with {}: {}",
            exe.display(),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    parse_solution(&std::fs::read_to_string(&sol_path)?, model.num_vars())
}

pub fn parse_solution(text: &str, num_vars: usize) -> Result<MilpSolution, MilpError> {
    let bad = |line: usize, message: &str| MilpError::Parse { line, message: message.to_string() };
    let mut lines = text.lines().enumerate();
    let status = match lines.next().map(|(_, l)| l.trim()) {
        Some("STATUS Optimal") => SolveStatus::Optimal,
        Some("STATUS Infeasible") => SolveStatus::Infeasible,
        Some("STATUS Unbounded") => SolveStatus::Unbounded,
        Some("STATUS LimitReached") => SolveStatus::LimitReached,
        _ => return Err(bad(1, "expected STATUS line")),
    };
    let objective = lines
        .next()
        .and_then(|(_, l)| l.trim().strip_prefix("OBJECTIVE "))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| bad(2, "expected OBJECTIVE line"))?;
    let mut values = vec![0.0; num_vars];
    for (i, l) in lines {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        let mut it = l.split_whitespace();
        let id: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad(i + 1, "bad variable id"))?;
        let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad(i + 1, "bad value"))?;
        if id >= num_vars {
            return Err(bad(i + 1, "variable id out of range"));
        }
        values[id] = v;
    }
    if matches!(status, SolveStatus::Infeasible | SolveStatus::Unbounded) {
        values.clear();
    }
    Ok(MilpSolution { status, values, objective, dual_bound: None, stats: SolveStats::default() })
}
