use std::fmt;

/// M×N binary matrix; entry `(m, n)` is set when robot `n` serves task `m`.
///
/// Stored as a packed bitset so identical matrices hash and compare equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    tasks: usize,
    robots: usize,
    bits: Vec<u64>,
}

impl Allocation {
    pub fn empty(tasks: usize, robots: usize) -> Self {
        Self {
            tasks,
            robots,
            bits: vec![0; (tasks * robots).div_ceil(64)],
        }
    }

    /// Builds an allocation from 0/1 rows (one row per task).
    ///
    /// Returns `None` if rows are ragged or contain values other than 0 and 1.
    pub fn from_rows(rows: &[Vec<u8>]) -> Option<Self> {
        let tasks = rows.len();
        let robots = rows.first().map_or(0, Vec::len);
        let mut a = Self::empty(tasks, robots);
        for (m, row) in rows.iter().enumerate() {
            if row.len() != robots {
                return None;
            }
            for (n, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => a.set(m, n, true),
                    _ => return None,
                }
            }
        }
        Some(a)
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks
    }

    pub fn num_robots(&self) -> usize {
        self.robots
    }

    #[inline]
    fn index(&self, task: usize, robot: usize) -> usize {
        assert!(
            task < self.tasks && robot < self.robots,
            "allocation index out of range"
        );
        task * self.robots + robot
    }

    #[inline]
    pub fn get(&self, task: usize, robot: usize) -> bool {
        let i = self.index(task, robot);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, task: usize, robot: usize, value: bool) {
        let i = self.index(task, robot);
        if value {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    /// Copy with one extra assignment.
    pub fn with(&self, task: usize, robot: usize) -> Self {
        let mut child = self.clone();
        child.set(task, robot, true);
        child
    }

    /// Number of set entries.
    pub fn depth(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Robots assigned to `task`, ascending.
    pub fn coalition(&self, task: usize) -> Vec<usize> {
        (0..self.robots).filter(|&n| self.get(task, n)).collect()
    }

    /// Tasks assigned to `robot`, ascending.
    pub fn tasks_of(&self, robot: usize) -> Vec<usize> {
        (0..self.tasks).filter(|&m| self.get(m, robot)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.tasks)
            .map(|m| (0..self.robots).map(|n| self.get(m, n) as u8).collect())
            .collect()
    }
}

impl fmt::Debug for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}
