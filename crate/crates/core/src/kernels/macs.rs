//! Per-thread multiply-accumulate counter.

use std::cell::Cell;

thread_local! {
    static MACS: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub(crate) fn record(n: usize) {
    MACS.with(|m| m.set(m.get() + n as u64));
}

/// Current counter value for this thread.
pub fn current() -> u64 {
    MACS.with(Cell::get)
}

/// Runs `f` and returns its result with the number of MACs it performed on
/// this thread.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let start = current();
    let out = f();
    (out, current() - start)
}
