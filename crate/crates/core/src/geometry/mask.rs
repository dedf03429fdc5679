//! The per-row crease layout that defines a synthetic identity.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRID_ROWS: usize = 6;
pub const GRID_COLS: usize = 6;
/// Merged 1x2 cells per row available to non-prominent creases.
pub const CELLS_PER_ROW: usize = 3;

pub const MIN_ACTIVE_ROWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowMask {
    Principal,
    NonProminent([bool; CELLS_PER_ROW]),
    Empty,
}

impl RowMask {
    pub fn is_empty(&self) -> bool {
        matches!(self, RowMask::Empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MaskViolation {
    #[error("active block spans {0} rows, expected 3..=6")]
    ActiveSpan(usize),
    #[error("padding not centered: {top} empty rows above, {bottom} below")]
    NotCentered { top: usize, bottom: usize },
    #[error("mask has no principal row")]
    NoPrincipal,
    #[error("non-prominent row {0} has no active cell")]
    NoActiveCell(usize),
}

/// Six row slots, index 0 at the top of the canvas.
///
/// The active block runs from the first to the last non-empty row. Empty
/// rows may appear inside the block when the sampled row count exceeds the
/// number of assigned roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridMask {
    rows: [RowMask; GRID_ROWS],
}

impl GridMask {
    /// Builds a mask without checking invariants; call [`GridMask::validate`].
    pub fn from_rows(rows: [RowMask; GRID_ROWS]) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[RowMask; GRID_ROWS] {
        &self.rows
    }

    /// Inclusive `(first, last)` non-empty row, or `None` for an all-empty mask.
    pub fn active_span(&self) -> Option<(usize, usize)> {
        let first = self.rows.iter().position(|r| !r.is_empty())?;
        let last = self.rows.iter().rposition(|r| !r.is_empty())?;
        Some((first, last))
    }

    pub fn principal_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, RowMask::Principal))
            .map(|(i, _)| i)
    }

    /// Every `(row, cell)` holding a non-prominent crease, top to bottom,
    /// left to right.
    pub fn active_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| {
            let cells = match r {
                RowMask::NonProminent(c) => *c,
                _ => [false; CELLS_PER_ROW],
            };
            (0..CELLS_PER_ROW)
                .filter(move |&c| cells[c])
                .map(move |c| (i, c))
        })
    }

    pub fn validate(&self) -> Result<(), MaskViolation> {
        let (first, last) = self.active_span().ok_or(MaskViolation::ActiveSpan(0))?;
        let span = last - first + 1;
        if !(MIN_ACTIVE_ROWS..=GRID_ROWS).contains(&span) {
            return Err(MaskViolation::ActiveSpan(span));
        }
        let top = first;
        let bottom = GRID_ROWS - 1 - last;
        // Odd padding puts the extra empty row on top.
        if top < bottom || top - bottom > 1 {
            return Err(MaskViolation::NotCentered { top, bottom });
        }
        if self.principal_rows().next().is_none() {
            return Err(MaskViolation::NoPrincipal);
        }
        for (i, r) in self.rows.iter().enumerate() {
            if let RowMask::NonProminent(cells) = r {
                if !cells.iter().any(|&c| c) {
                    return Err(MaskViolation::NoActiveCell(i));
                }
            }
        }
        Ok(())
    }

    /// Compact, byte-stable key used for collision detection.
    pub fn key(&self) -> String {
        self.rows
            .iter()
            .map(|r| match r {
                RowMask::Principal => "P".to_string(),
                RowMask::Empty => "-".to_string(),
                RowMask::NonProminent(c) => c
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect::<String>(),
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Principal,
    NonProminent,
    Unassigned,
}

/// Samples a grid mask.
///
/// Draw order is frozen: active row count `r ~ U{3..6}`, principal count
/// `rc ~ U{1..r}`, non-prominent count `rw ~ U{1..r-rc}` (zero when
/// `rc == r`), a role permutation, then the active cell subset of every
/// non-prominent row from top to bottom.
pub fn sample_grid_mask<R: Rng + ?Sized>(rng: &mut R) -> GridMask {
    let r = rng.random_range(MIN_ACTIVE_ROWS..=GRID_ROWS);
    let rc = rng.random_range(1..=r);
    let rw = if r > rc {
        rng.random_range(1..=r - rc)
    } else {
        0
    };

    let mut roles = Vec::with_capacity(r);
    roles.extend(std::iter::repeat_n(Role::Principal, rc));
    roles.extend(std::iter::repeat_n(Role::NonProminent, rw));
    roles.extend(std::iter::repeat_n(Role::Unassigned, r - rc - rw));
    // Uniform over permutations whose ends carry a crease, so the active
    // block keeps its sampled height and stays centered. rc + rw >= 2
    // whenever an unassigned row exists, so this terminates.
    loop {
        roles.shuffle(rng);
        if roles[0] != Role::Unassigned && roles[r - 1] != Role::Unassigned {
            break;
        }
    }

    let pad = GRID_ROWS - r;
    let top = pad.div_ceil(2);
    let mut rows = [RowMask::Empty; GRID_ROWS];
    for (k, role) in roles.iter().enumerate() {
        rows[top + k] = match role {
            Role::Principal => RowMask::Principal,
            Role::Unassigned => RowMask::Empty,
            Role::NonProminent => {
                let w = rng.random_range(1..=CELLS_PER_ROW);
                let mut cells = [false; CELLS_PER_ROW];
                for c in index::sample(rng, CELLS_PER_ROW, w) {
                    cells[c] = true;
                }
                RowMask::NonProminent(cells)
            }
        };
    }
    GridMask { rows }
}
