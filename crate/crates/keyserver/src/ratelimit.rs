//! Token buckets per source address and per address range.

use std::net::IpAddr;

use chrono::{DateTime, Utc};
use dashmap::DashMap;

/// Bucket size and continuous refill rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BucketConfig {
    pub capacity: f64,
    pub refill_per_sec: f64,
}

impl BucketConfig {
    /// `n` requests per minute, bursting up to `n`.
    pub fn per_minute(n: u32) -> Self {
        Self {
            capacity: n as f64,
            refill_per_sec: n as f64 / 60.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Bucket {
    tokens: f64,
    updated: f64,
}

impl Bucket {
    fn refill(&mut self, cfg: &BucketConfig, now: f64) {
        let dt = (now - self.updated).max(0.0);
        self.tokens = (self.tokens + dt * cfg.refill_per_sec).min(cfg.capacity);
        self.updated = now;
    }

    /// Seconds until one token is available.
    fn wait(&self, cfg: &BucketConfig) -> f64 {
        if self.tokens >= 1.0 {
            0.0
        } else if cfg.refill_per_sec <= 0.0 {
            f64::INFINITY
        } else {
            (1.0 - self.tokens) / cfg.refill_per_sec
        }
    }
}

/// Aggregation key for the range bucket: /24 for IPv4, /48 for IPv6.
fn range_of(ip: IpAddr) -> IpAddr {
    match ip {
        IpAddr::V4(v4) => IpAddr::V4((u32::from(v4) & 0xFFFF_FF00).into()),
        IpAddr::V6(v6) => IpAddr::V6((u128::from(v6) & !((1u128 << 80) - 1)).into()),
    }
}

/// Per-address key: the address itself for IPv4, its /64 for IPv6.
fn address_of(ip: IpAddr) -> IpAddr {
    match ip {
        IpAddr::V4(_) => ip,
        IpAddr::V6(v6) => IpAddr::V6((u128::from(v6) & !((1u128 << 64) - 1)).into()),
    }
}

pub struct RateLimiter {
    address: BucketConfig,
    range: BucketConfig,
    by_address: DashMap<IpAddr, Bucket>,
    by_range: DashMap<IpAddr, Bucket>,
}

fn seconds(t: DateTime<Utc>) -> f64 {
    t.timestamp_micros() as f64 / 1e6
}

impl RateLimiter {
    pub fn new(address: BucketConfig, range: BucketConfig) -> Self {
        Self {
            address,
            range,
            by_address: DashMap::new(),
            by_range: DashMap::new(),
        }
    }

    /// Take one token from both buckets of `source`, or report how long to
    /// wait. Nothing is consumed on refusal.
    pub fn check(&self, source: IpAddr, now: DateTime<Utc>) -> Result<(), f64> {
        let t = seconds(now);
        let fresh = |cfg: &BucketConfig| Bucket {
            tokens: cfg.capacity,
            updated: t,
        };
        // Lock order is always address then range.
        let mut a = self
            .by_address
            .entry(address_of(source))
            .or_insert_with(|| fresh(&self.address));
        let mut r = self
            .by_range
            .entry(range_of(source))
            .or_insert_with(|| fresh(&self.range));
        a.refill(&self.address, t);
        r.refill(&self.range, t);
        let wait = a.wait(&self.address).max(r.wait(&self.range));
        if wait > 0.0 {
            return Err(wait);
        }
        a.tokens -= 1.0;
        r.tokens -= 1.0;
        Ok(())
    }

    /// Forget buckets that have refilled completely.
    pub fn purge_idle(&self, now: DateTime<Utc>) {
        let t = seconds(now);
        let full = |cfg: BucketConfig| {
            move |_: &IpAddr, b: &mut Bucket| {
                b.refill(&cfg, t);
                b.tokens < cfg.capacity
            }
        };
        self.by_address.retain(full(self.address));
        self.by_range.retain(full(self.range));
    }

    pub fn tracked_sources(&self) -> usize {
        self.by_address.len()
    }
}
