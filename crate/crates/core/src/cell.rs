use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// A shared lower bound that only ever increases. Readers may see a stale
/// value, which is still a valid bound.
#[derive(Clone, Debug, Default)]
pub struct LowerBoundCell(Arc<AtomicUsize>);

impl LowerBoundCell {
    pub fn new(value: usize) -> Self {
        LowerBoundCell(Arc::new(AtomicUsize::new(value)))
    }

    pub fn get(&self) -> usize {
        self.0.load(Ordering::Relaxed)
    }

    /// Raises the bound to `value` if larger; returns the previous value.
    pub fn raise(&self, value: usize) -> usize {
        self.0.fetch_max(value, Ordering::Relaxed)
    }
}
