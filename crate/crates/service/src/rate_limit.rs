use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use chrono::{DateTime, TimeDelta, Utc};

pub const DEFAULT_LIMIT_PER_HOUR: usize = 1000;
pub const WINDOW_SECS: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admit,
    /// Seconds until the oldest in-window request leaves the window.
    Deny { retry_after_s: u64 },
}

/// Per-user sliding-window limiter. Check and record happen under one lock, so concurrent
/// callers can never admit more than `limit` requests per trailing window.
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    window: TimeDelta,
    admitted: Mutex<HashMap<String, VecDeque<DateTime<Utc>>>>,
}

impl RateLimiter {
    pub fn new(limit: usize) -> Self {
        Self::with_window(limit, TimeDelta::seconds(WINDOW_SECS))
    }

    pub fn with_window(limit: usize, window: TimeDelta) -> Self {
        RateLimiter { limit, window, admitted: Mutex::new(HashMap::new()) }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn check(&self, user_token: &str, now: DateTime<Utc>) -> Admission {
        let mut admitted = self.admitted.lock().expect("rate limiter poisoned");
        let history = admitted.entry(user_token.to_string()).or_default();
        while history.front().is_some_and(|&t| now - t >= self.window) {
            history.pop_front();
        }
        if history.len() < self.limit {
            history.push_back(now);
            return Admission::Admit;
        }
        let oldest = history.front().copied().unwrap_or(now);
        let wait = oldest + self.window - now;
        let millis = wait.num_milliseconds().max(0) as u64;
        Admission::Deny { retry_after_s: millis.div_ceil(1000).max(1) }
    }

    /// Drops users with no request in the current window.
    pub fn prune(&self, now: DateTime<Utc>) {
        let mut admitted = self.admitted.lock().expect("rate limiter poisoned");
        admitted.retain(|_, history| history.back().is_some_and(|&t| now - t < self.window));
    }
}

impl Default for RateLimiter {
    fn default() -> Self {
        Self::new(DEFAULT_LIMIT_PER_HOUR)
    }
}
