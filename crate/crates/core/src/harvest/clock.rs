use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Monotonic time source measured from an arbitrary origin.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
    /// Blocks until `now() >= t`.
    fn sleep_until(&self, t: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep_until(&self, t: Duration) {
        let now = self.now();
        if t > now {
            std::thread::sleep(t - now);
        }
    }
}

/// Clock whose sleeps return immediately after moving time forward.
#[derive(Debug, Default)]
pub struct FakeClock {
    now: Mutex<Duration>,
}

impl FakeClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep_until(&self, t: Duration) {
        let mut now = self.now.lock().unwrap();
        if t > *now {
            *now = t;
        }
    }
}

/// Token bucket with capacity one: grants are spaced at least `1 / rps`
/// apart, shared by every worker that holds a reference.
#[derive(Debug)]
pub struct TokenBucket {
    interval: Duration,
    next_free: Mutex<Option<Duration>>,
}

impl TokenBucket {
    /// `rps` must be positive and finite.
    pub fn new(rps: f64) -> Self {
        assert!(rps > 0.0 && rps.is_finite(), "rate limit must be positive");
        // Rounded up so that no one-second window holds more than `rps` grants.
        let interval = Duration::from_nanos((1e9 / rps).ceil() as u64);
        Self { interval, next_free: Mutex::new(None) }
    }

    /// A bucket whose first grant comes one interval after `now`, so a run
    /// started right after another one stays within the rate.
    pub fn starting_after(rps: f64, now: Duration) -> Self {
        let bucket = Self::new(rps);
        *bucket.next_free.lock().unwrap() = Some(now + bucket.interval);
        bucket
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Reserves the next slot, sleeps until it and returns its time.
    pub fn acquire(&self, clock: &dyn Clock) -> Duration {
        let slot = {
            let mut next = self.next_free.lock().unwrap();
            let now = clock.now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        clock.sleep_until(slot);
        slot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn delayed_start() {
        let clock = FakeClock::default();
        clock.advance(Duration::from_secs(3));
        let bucket = TokenBucket::starting_after(2.0, clock.now());
        assert_eq!(bucket.acquire(&clock), Duration::from_millis(3500));
        assert_eq!(bucket.acquire(&clock), Duration::from_secs(4));
    }

    #[test]
    fn fake_clock_moves_forward_only() {
        let c = FakeClock::default();
        c.sleep_until(Duration::from_secs(2));
        c.sleep_until(Duration::from_secs(1));
        assert_eq!(c.now(), Duration::from_secs(2));
        c.advance(Duration::from_millis(500));
        assert_eq!(c.now(), Duration::from_millis(2500));
    }

    #[test]
    fn grants_are_spaced() {
        let clock = FakeClock::default();
        let bucket = TokenBucket::new(2.0);
        let grants: Vec<Duration> = (0..5).map(|_| bucket.acquire(&clock)).collect();
        let secs: Vec<f64> = grants.iter().map(Duration::as_secs_f64).collect();
        assert_eq!(secs, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(clock.now(), Duration::from_secs(2));
    }

    #[test]
    fn idle_time_is_not_banked() {
        let clock = FakeClock::default();
        let bucket = TokenBucket::new(1.0);
        bucket.acquire(&clock);
        clock.advance(Duration::from_secs(10));
        let a = bucket.acquire(&clock);
        let b = bucket.acquire(&clock);
        assert_eq!(b - a, Duration::from_secs(1));
    }

    #[test]
    fn shared_between_threads() {
        let clock = Arc::new(FakeClock::default());
        let bucket = Arc::new(TokenBucket::new(4.0));
        let mut grants: Vec<Duration> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..4)
                .map(|_| s.spawn(|| (0..25).map(|_| bucket.acquire(clock.as_ref())).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
        });
        grants.sort();
        for w in grants.windows(2) {
            assert!(w[1] - w[0] >= Duration::from_millis(250));
        }
    }
}
