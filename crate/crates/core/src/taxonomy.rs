//! The fixed nine-category label set.
//!
//! Eight dialogic-instruction categories plus a catch-all `others` class.
//! `others` participates in training as a regular class but is never used as
//! the positive class of a binary evaluation set.

use alloc::string::ToString;

use crate::error::{CoreError, Result};

/// Number of training classes, including `others`.
pub const CATEGORY_COUNT: usize = 9;

/// Number of instruction categories evaluated as positive classes.
pub const INSTRUCTION_COUNT: usize = 8;

/// Category names in id order. `others` is last.
pub const CATEGORY_NAMES: [&str; CATEGORY_COUNT] = [
    "greeting",
    "commending",
    "guidance",
    "example-giving",
    "repeating",
    "reviewing",
    "note-taking",
    "summarization",
    "others",
];

/// One of the nine utterance categories, identified by a contiguous id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CategoryLabel {
    id: u8,
}

impl CategoryLabel {
    /// Looks a label up by id.
    pub fn from_id(id: usize) -> Result<Self> {
        if id < CATEGORY_COUNT {
            Ok(CategoryLabel { id: id as u8 })
        } else {
            Err(CoreError::LabelIdOutOfRange {
                id,
                count: CATEGORY_COUNT,
            })
        }
    }

    /// Resolves a label by name. `uid` names the offending record in errors.
    pub fn from_name(name: &str, uid: &str) -> Result<Self> {
        CATEGORY_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|id| CategoryLabel { id: id as u8 })
            .ok_or_else(|| CoreError::UnknownLabel {
                uid: uid.to_string(),
                label: name.to_string(),
            })
    }

    pub fn id(self) -> usize {
        self.id as usize
    }

    pub fn name(self) -> &'static str {
        CATEGORY_NAMES[self.id as usize]
    }

    /// True for the catch-all class.
    pub fn is_others(self) -> bool {
        self.id as usize == CATEGORY_COUNT - 1
    }

    /// All nine categories in id order.
    pub fn all() -> impl Iterator<Item = CategoryLabel> {
        (0..CATEGORY_COUNT).map(|id| CategoryLabel { id: id as u8 })
    }

    /// The eight instruction categories (everything except `others`).
    pub fn instruction_categories() -> impl Iterator<Item = CategoryLabel> {
        (0..INSTRUCTION_COUNT).map(|id| CategoryLabel { id: id as u8 })
    }
}

impl core::fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}
