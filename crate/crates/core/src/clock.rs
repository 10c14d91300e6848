/// Monotonic time source in nanoseconds.
pub trait Clock {
    fn now_nanos(&self) -> u64;
}

/// A clock that never advances; every phase reports zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_nanos(&self) -> u64 {
        0
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now_nanos(&self) -> u64 {
        (**self).now_nanos()
    }
}
