//! Discrete state sequences, the elements of the search space.

use std::ops::Deref;

/// Index of a state in the vocabulary `[0, v)`.
pub type StateId = u16;

/// A fixed-length vector of discrete states.
///
/// Validity against a particular vocabulary size is checked at the point of
/// use (evaluation, feasibility tests); the container itself is agnostic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sequence(Vec<StateId>);

impl Sequence {
    pub fn new(states: Vec<StateId>) -> Self {
        Self(states)
    }

    pub fn states(&self) -> &[StateId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<StateId> {
        self.0
    }
}

impl Deref for Sequence {
    type Target = [StateId];

    fn deref(&self) -> &[StateId] {
        &self.0
    }
}

impl From<Vec<StateId>> for Sequence {
    fn from(states: Vec<StateId>) -> Self {
        Self(states)
    }
}

impl FromIterator<StateId> for Sequence {
    fn from_iter<I: IntoIterator<Item = StateId>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}
