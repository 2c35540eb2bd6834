use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::clock::Clock;

/// Sliding-window limiter: admits at most `capacity` requests in any
/// window of length `window`.
///
/// For a limit of `r` requests per second with `r >= 1` the window is one
/// second and the capacity `floor(r)`; below one request per second the
/// capacity is 1 and the window `1 / r` seconds. Either way no one-second
/// window ever sees more than `r` requests.
pub struct RateLimiter {
    capacity: usize,
    window: Duration,
    admitted: Mutex<VecDeque<Duration>>,
    clock: Arc<dyn Clock>,
}

impl RateLimiter {
    /// `per_second` must be finite and positive.
    pub fn new(per_second: f64, clock: Arc<dyn Clock>) -> Self {
        assert!(per_second.is_finite() && per_second > 0.0, "rate limit must be positive");
        let (capacity, window) = if per_second >= 1.0 {
            (per_second.floor() as usize, Duration::from_secs(1))
        } else {
            (1, Duration::from_secs_f64(1.0 / per_second))
        };
        Self {
            capacity,
            window,
            admitted: Mutex::new(VecDeque::new()),
            clock,
        }
    }

    /// Admits one request now if the window has room, otherwise returns how
    /// long to wait before trying again.
    pub fn try_acquire(&self) -> Result<(), Duration> {
        let now = self.clock.elapsed();
        let mut admitted = self.admitted.lock().unwrap();
        while admitted.front().is_some_and(|&t| t + self.window <= now) {
            admitted.pop_front();
        }
        if admitted.len() < self.capacity {
            admitted.push_back(now);
            Ok(())
        } else {
            let oldest = *admitted.front().expect("full window is non-empty");
            Err(oldest + self.window - now)
        }
    }

    /// Blocks (on the limiter's clock) until a request is admitted.
    pub fn acquire(&self) {
        while let Err(wait) = self.try_acquire() {
            self.clock.sleep(wait);
        }
    }
}
