//! Fixed-window request counting per client.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

pub const WINDOW_SECS: u64 = 60;

/// Seconds since some fixed origin.
pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

pub struct RateLimiter {
    clock: Clock,
    /// client → (window index, requests seen in it)
    counts: Mutex<HashMap<String, (u64, u32)>>,
}

impl RateLimiter {
    pub fn new(clock: Clock) -> Self {
        Self { clock, counts: Mutex::new(HashMap::new()) }
    }

    /// Count one request; false once `client` has used up `limit` in the current window.
    pub fn admit(&self, client: &str, limit: u32) -> bool {
        let window = (self.clock)() / WINDOW_SECS;
        let mut counts = self.counts.lock().unwrap_or_else(|e| e.into_inner());
        if counts.len() > 100_000 {
            counts.retain(|_, (w, _)| *w == window);
        }
        let slot = counts.entry(client.to_owned()).or_insert((window, 0));
        if slot.0 != window {
            *slot = (window, 0);
        }
        if slot.1 >= limit {
            return false;
        }
        slot.1 += 1;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU64, Ordering};

    #[test]
    fn window_resets() {
        let now = Arc::new(AtomicU64::new(120));
        let t = now.clone();
        let limiter = RateLimiter::new(Arc::new(move || t.load(Ordering::SeqCst)));
        assert!(limiter.admit("a", 2));
        assert!(limiter.admit("a", 2));
        assert!(!limiter.admit("a", 2));
        assert!(limiter.admit("b", 2), "clients are counted separately");
        now.store(179, Ordering::SeqCst);
        assert!(!limiter.admit("a", 2));
        now.store(180, Ordering::SeqCst);
        assert!(limiter.admit("a", 2));
    }
}
