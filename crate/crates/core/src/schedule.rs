//! Maintenance window enumeration and in-service indicators.

use serde::{Deserialize, Serialize};

use crate::network::{AssetKind, CaseData, ConcurrencyCaps, MaintenanceTask, Owner};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One asset's maintenance window, periods numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduledTask {
    pub kind: AssetKind,
    pub asset: usize,
    pub asset_id: String,
    pub duration: usize,
    pub start: usize,
}

impl ScheduledTask {
    pub fn end(&self) -> usize {
        self.start + self.duration - 1
    }

    pub fn covers(&self, t: usize) -> bool {
        self.start <= t && t <= self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OwnerSchedule {
    pub owner: Owner,
    /// In task order.
    pub tasks: Vec<ScheduledTask>,
}

impl OwnerSchedule {
    pub fn start_of(&self, asset_id: &str) -> Option<usize> {
        self.tasks.iter().find(|t| t.asset_id == asset_id).map(|t| t.start)
    }

    pub fn starts(&self) -> Vec<usize> {
        self.tasks.iter().map(|t| t.start).collect()
    }

    /// `l13:3-9; l23:1-2` style label.
    pub fn label(&self) -> String {
        if self.tasks.is_empty() {
            return "none".to_string();
        }
        self.tasks.iter().map(|t| format!("{}:{}-{}", t.asset_id, t.start, t.end())).collect::<Vec<_>>().join("; ")
    }
}

/// Feasible start periods `1..=horizon - duration + 1`.
pub fn enumerate_windows(duration: usize, horizon: usize) -> Result<Vec<usize>, ScheduleError> {
    if duration < 1 {
        return Err(ScheduleError::InvalidArgument("duration must be at least 1".into()));
    }
    if duration > horizon {
        return Err(ScheduleError::Infeasible(format!("duration {duration} exceeds horizon {horizon}")));
    }
    Ok((1..=horizon - duration + 1).collect())
}

/// Every combination of task windows that respects the per-period caps,
/// in lexicographic order of (first task start, second task start, ...).
/// An owner without tasks has exactly one, empty, schedule.
pub fn enumerate_owner_schedules(
    owner: Owner,
    tasks: &[MaintenanceTask],
    horizon: usize,
    caps: &ConcurrencyCaps,
) -> Result<Vec<OwnerSchedule>, ScheduleError> {
    if let Some(t) = tasks.iter().find(|t| t.owner() != owner) {
        return Err(ScheduleError::InvalidArgument(format!(
            "task on {} belongs to the {} owner",
            t.asset_id,
            t.owner()
        )));
    }
    for kind in [AssetKind::Line, AssetKind::Generator, AssetKind::Pipeline] {
        if caps.for_kind(kind).len() < horizon {
            return Err(ScheduleError::InvalidArgument(format!(
                "caps for {kind:?} cover fewer than {horizon} periods"
            )));
        }
    }
    let windows = tasks.iter().map(|t| enumerate_windows(t.duration, horizon)).collect::<Result<Vec<_>, _>>()?;

    let mut out = Vec::new();
    let mut used = [vec![0usize; horizon + 1], vec![0usize; horizon + 1], vec![0usize; horizon + 1]];
    let mut chosen = Vec::with_capacity(tasks.len());
    search(tasks, &windows, caps, &mut used, &mut chosen, &mut out, owner);
    if out.is_empty() {
        return Err(ScheduleError::Infeasible(format!("no {owner} schedule satisfies the concurrency caps")));
    }
    Ok(out)
}

fn kind_slot(kind: AssetKind) -> usize {
    match kind {
        AssetKind::Line => 0,
        AssetKind::Generator => 1,
        AssetKind::Pipeline => 2,
    }
}

fn search(
    tasks: &[MaintenanceTask],
    windows: &[Vec<usize>],
    caps: &ConcurrencyCaps,
    used: &mut [Vec<usize>; 3],
    chosen: &mut Vec<usize>,
    out: &mut Vec<OwnerSchedule>,
    owner: Owner,
) {
    let i = chosen.len();
    if i == tasks.len() {
        out.push(OwnerSchedule {
            owner,
            tasks: tasks
                .iter()
                .zip(chosen.iter())
                .map(|(t, &start)| ScheduledTask {
                    kind: t.kind,
                    asset: t.asset,
                    asset_id: t.asset_id.clone(),
                    duration: t.duration,
                    start,
                })
                .collect(),
        });
        return;
    }
    let task = &tasks[i];
    let slot = kind_slot(task.kind);
    let cap = caps.for_kind(task.kind);
    for &start in &windows[i] {
        let span = start..start + task.duration;
        if span.clone().any(|t| used[slot][t] + 1 > cap[t - 1]) {
            continue;
        }
        for t in span.clone() {
            used[slot][t] += 1;
        }
        chosen.push(start);
        search(tasks, windows, caps, used, chosen, out, owner);
        chosen.pop();
        for t in span {
            used[slot][t] -= 1;
        }
    }
}

/// Case tasks for `owner`, enumerated with the case's horizon and caps.
pub fn owner_options(case: &CaseData, owner: Owner) -> Result<Vec<OwnerSchedule>, ScheduleError> {
    let tasks: Vec<MaintenanceTask> = case.tasks_of(owner).into_iter().map(|i| case.maintenance[i].clone()).collect();
    enumerate_owner_schedules(owner, &tasks, case.periods(), &case.caps)
}

/// In-service indicators, 1 = in service, 0 = under maintenance;
/// each matrix is [asset][period - 1].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorMatrix {
    pub v_line: Vec<Vec<u8>>,
    pub v_gen: Vec<Vec<u8>>,
    pub v_pipe: Vec<Vec<u8>>,
}

impl IndicatorMatrix {
    /// Everything in service.
    pub fn all_in_service(case: &CaseData) -> Self {
        let t = case.periods();
        IndicatorMatrix {
            v_line: vec![vec![1; t]; case.power.lines.len()],
            v_gen: vec![vec![1; t]; case.power.generators.len()],
            v_pipe: vec![vec![1; t]; case.gas.pipelines.len()],
        }
    }

    pub fn rows(&self, kind: AssetKind) -> &Vec<Vec<u8>> {
        match kind {
            AssetKind::Line => &self.v_line,
            AssetKind::Generator => &self.v_gen,
            AssetKind::Pipeline => &self.v_pipe,
        }
    }

    fn rows_mut(&mut self, kind: AssetKind) -> &mut Vec<Vec<u8>> {
        match kind {
            AssetKind::Line => &mut self.v_line,
            AssetKind::Generator => &mut self.v_gen,
            AssetKind::Pipeline => &mut self.v_pipe,
        }
    }

    /// Indicator for asset `idx` at period `t` (1-based).
    pub fn get(&self, kind: AssetKind, idx: usize, t: usize) -> u8 {
        self.rows(kind)[idx][t - 1]
    }

    /// Superimpose a schedule's outages.
    pub fn apply(&mut self, s: &OwnerSchedule) {
        for task in &s.tasks {
            let row = &mut self.rows_mut(task.kind)[task.asset];
            for t in task.start..=task.end() {
                row[t - 1] = 0;
            }
        }
    }

    /// Count of assets of `kind` out at period `t` (1-based).
    pub fn outages(&self, kind: AssetKind, t: usize) -> usize {
        self.rows(kind).iter().filter(|r| r[t - 1] == 0).count()
    }
}

pub fn schedule_to_indicator(s: &OwnerSchedule, case: &CaseData) -> IndicatorMatrix {
    let mut v = IndicatorMatrix::all_in_service(case);
    v.apply(s);
    v
}

/// Indicator of both owners' schedules together.
pub fn joint_indicator(case: &CaseData, schedules: &[&OwnerSchedule]) -> IndicatorMatrix {
    let mut v = IndicatorMatrix::all_in_service(case);
    for s in schedules {
        v.apply(s);
    }
    v
}

/// Violations of the indicator invariants for the assets scheduled in `s`:
/// one contiguous zero block of the task's length, caps respected.
pub fn check_indicator(v: &IndicatorMatrix, s: &OwnerSchedule, caps: &ConcurrencyCaps) -> Vec<String> {
    let mut out = Vec::new();
    for task in &s.tasks {
        let row = &v.rows(task.kind)[task.asset];
        let zeros: Vec<usize> = (0..row.len()).filter(|&t| row[t] == 0).collect();
        if zeros.len() != task.duration {
            out.push(format!("{}: {} zero periods, duration {}", task.asset_id, zeros.len(), task.duration));
        }
        if zeros.windows(2).any(|w| w[1] != w[0] + 1) {
            out.push(format!("{}: outage is not contiguous", task.asset_id));
        }
    }
    for kind in [AssetKind::Line, AssetKind::Generator, AssetKind::Pipeline] {
        let t_len = v.rows(kind).first().map_or(0, Vec::len);
        for t in 1..=t_len {
            if v.outages(kind, t) > caps.for_kind(kind)[t - 1] {
                out.push(format!("{kind:?} outages exceed cap at period {t}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(kind: AssetKind, asset: usize, duration: usize) -> MaintenanceTask {
        MaintenanceTask { kind, asset, asset_id: format!("a{asset}"), duration, cost_per_period: vec![] }
    }

    fn caps(t: usize, lines: usize, pipes: usize) -> ConcurrencyCaps {
        ConcurrencyCaps {
            max_lines_per_period: vec![lines; t],
            max_gens_per_period: vec![1; t],
            max_pipes_per_period: vec![pipes; t],
        }
    }

    #[test]
    fn windows() {
        assert_eq!(enumerate_windows(31, 48).unwrap(), (1..=18).collect::<Vec<_>>());
        assert_eq!(enumerate_windows(48, 48).unwrap(), vec![1]);
        assert!(matches!(enumerate_windows(5, 4), Err(ScheduleError::Infeasible(_))));
        assert!(enumerate_windows(0, 4).is_err());
    }

    #[test]
    fn full_horizon_task_has_one_schedule() {
        let s = enumerate_owner_schedules(Owner::Gas, &[task(AssetKind::Pipeline, 0, 6)], 6, &caps(6, 1, 1)).unwrap();
        assert_eq!(s.len(), 1);
        let case_rows = s[0].tasks[0].clone();
        assert_eq!((case_rows.start, case_rows.end()), (1, 6));
    }

    #[test]
    fn caps_can_make_it_infeasible() {
        let tasks = [task(AssetKind::Line, 0, 4), task(AssetKind::Line, 1, 3)];
        assert!(matches!(
            enumerate_owner_schedules(Owner::Power, &tasks, 6, &caps(6, 1, 1)),
            Err(ScheduleError::Infeasible(_))
        ));
        assert_eq!(enumerate_owner_schedules(Owner::Power, &tasks, 6, &caps(6, 2, 1)).unwrap().len(), 12);
    }

    #[test]
    fn no_tasks_is_one_empty_schedule() {
        let s = enumerate_owner_schedules(Owner::Power, &[], 5, &caps(5, 1, 1)).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0].tasks.is_empty());
    }

    #[test]
    fn wrong_owner_rejected() {
        let r = enumerate_owner_schedules(Owner::Power, &[task(AssetKind::Pipeline, 0, 2)], 5, &caps(5, 1, 1));
        assert!(matches!(r, Err(ScheduleError::InvalidArgument(_))));
    }
}
