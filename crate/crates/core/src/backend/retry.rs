use std::time::Duration;

use super::BackendError;

/// Attempts and exponential backoff applied to retryable backend failures.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, initial_backoff: Duration::from_millis(200), multiplier: 2 }
    }
}

impl RetryPolicy {
    /// No sleeping between attempts; for tests and mocks.
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy { max_attempts, initial_backoff: Duration::ZERO, multiplier: 2 }
    }

    /// Delay before attempt `attempt + 1`, where `attempt` counts from 1.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.saturating_pow(attempt.saturating_sub(1));
        self.initial_backoff.saturating_mul(factor)
    }
}

/// Runs `op` until it succeeds, fails with a non-retryable error, or attempts run out.
pub fn with_retry<T>(policy: &RetryPolicy, mut op: impl FnMut() -> Result<T, BackendError>) -> Result<T, BackendError> {
    let attempts = policy.max_attempts.max(1);
    let mut attempt = 1;
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(e) if e.is_retryable() && attempt < attempts => {
                let delay = policy.backoff(attempt);
                if !delay.is_zero() {
                    std::thread::sleep(delay);
                }
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff(1), Duration::from_millis(200));
        assert_eq!(p.backoff(2), Duration::from_millis(400));
        assert_eq!(p.backoff(3), Duration::from_millis(800));
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let mut calls = 0;
        let r: Result<(), _> = with_retry(&RetryPolicy::immediate(3), || {
            calls += 1;
            Err(BackendError::Transport("down".into()))
        });
        assert!(r.is_err());
        assert_eq!(calls, 3);
    }

    #[test]
    fn recovers_on_second_attempt() {
        let mut calls = 0;
        let r = with_retry(&RetryPolicy::immediate(3), || {
            calls += 1;
            if calls < 2 {
                Err(BackendError::Status { status: 503, message: "busy".into() })
            } else {
                Ok(7)
            }
        });
        assert_eq!(r, Ok(7));
        assert_eq!(calls, 2);
    }

    #[test]
    fn does_not_retry_protocol_errors() {
        let mut calls = 0;
        let r: Result<(), _> = with_retry(&RetryPolicy::immediate(3), || {
            calls += 1;
            Err(BackendError::Protocol("bad".into()))
        });
        assert!(r.is_err());
        assert_eq!(calls, 1);
    }
}
