use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest task count for which groups are enumerated as bitmasks.
pub const MAX_ENUMERATED_TASKS: usize = 12;

/// A nonempty subset of the task indices `{0, …, M-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupIndex {
    task_count: usize,
    members: Vec<usize>,
}

impl GroupIndex {
    pub fn new(task_count: usize, mut members: Vec<usize>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Domain("a task group must be nonempty".into()));
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("task group members must be distinct".into()));
        }
        if let Some(&bad) = members.iter().find(|&&m| m >= task_count) {
            return Err(Error::Domain(format!("task {bad} is outside a family of {task_count} tasks")));
        }
        Ok(GroupIndex { task_count, members })
    }

    pub fn full(task_count: usize) -> Self {
        GroupIndex {
            task_count,
            members: (0..task_count).collect(),
        }
    }

    pub fn singleton(task_count: usize, m: usize) -> Result<Self> {
        Self::new(task_count, vec![m])
    }

    /// Builds the group whose members are the set bits of `mask`.
    pub fn from_mask(task_count: usize, mask: u32) -> Result<Self> {
        Self::new(task_count, (0..task_count).filter(|&m| mask >> m & 1 == 1).collect())
    }

    pub fn mask(&self) -> u32 {
        self.members.iter().fold(0, |acc, &m| acc | 1 << m)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn task_count(&self) -> usize {
        self.task_count
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: usize) -> bool {
        self.members.binary_search(&m).is_ok()
    }

    /// Tasks outside the group; empty for the full group.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.task_count).filter(|&m| !self.contains(m)).collect()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.task_count
    }
}

impl std::fmt::Display for GroupIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", m + 1)?;
        }
        write!(f, "}}")
    }
}

/// Nonempty subset masks of `{0, …, task_count-1}` in increasing order.
pub fn group_masks(task_count: usize) -> Result<impl Iterator<Item = u32>> {
    if task_count == 0 || task_count > MAX_ENUMERATED_TASKS {
        return Err(Error::Budget {
            what: "task-group enumeration".into(),
            size: task_count,
            limit: MAX_ENUMERATED_TASKS,
        });
    }
    Ok(1..(1u32 << task_count))
}
