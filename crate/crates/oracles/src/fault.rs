//! Fault injection on a subset of oracle queries.

use weft_core::enhance::oracle::{Fault, FaultOracle};
use weft_core::enhance::{OracleError, OracleQuery, ResolutionOracle};

/// Answers with `inner`, except that every `period`-th query (starting at
/// `phase`) gets `fault` instead.
pub struct SelectiveFault<O> {
    pub inner: O,
    pub fault: Fault,
    pub period: usize,
    pub phase: usize,
    seen: usize,
}

impl<O: ResolutionOracle> SelectiveFault<O> {
    pub fn new(inner: O, fault: Fault, period: usize, phase: usize) -> SelectiveFault<O> {
        SelectiveFault { inner, fault, period: period.max(1), phase, seen: 0 }
    }
}

impl<O: ResolutionOracle> ResolutionOracle for SelectiveFault<O> {
    fn ask(&mut self, q: &OracleQuery<'_>) -> Result<String, OracleError> {
        let i = self.seen;
        self.seen += 1;
        if i % self.period == self.phase % self.period {
            FaultOracle { fault: self.fault }.ask(q)
        } else {
            self.inner.ask(q)
        }
    }
}

pub const ALL_FAULTS: [Fault; 5] = [Fault::Garbage, Fault::OutOfList, Fault::Empty, Fault::Error, Fault::Transport];
