//! Pluggable human check guarding key release.

use std::net::IpAddr;

use chrono::{DateTime, Duration, Utc};
use dashmap::DashMap;
use rand::Rng;

use crate::api::ChallengeView;

/// Produces a question and its expected answer.
pub trait CaptchaProvider: Send + Sync {
    fn generate(&self) -> (String, String);

    fn check(&self, expected: &str, given: &str) -> bool {
        expected.trim().eq_ignore_ascii_case(given.trim())
    }
}

/// Stand-in provider asking for a small sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct ArithmeticCaptcha;

impl CaptchaProvider for ArithmeticCaptcha {
    fn generate(&self) -> (String, String) {
        let mut rng = rand::thread_rng();
        let (a, b) = (rng.gen_range(2..50u32), rng.gen_range(2..50u32));
        (format!("What is {a} + {b}?"), (a + b).to_string())
    }
}

/// Who the challenge was issued for: solving it unlocks every key of this
/// owner and description for the solving source.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CaptchaScope {
    pub owner: String,
    pub description: String,
}

struct Pending {
    answer: String,
    scope: CaptchaScope,
    expires_at: DateTime<Utc>,
}

pub struct CaptchaGate {
    provider: Box<dyn CaptchaProvider>,
    challenge_ttl: Duration,
    solved_ttl: Duration,
    pending: DashMap<String, Pending>,
    solved: DashMap<(IpAddr, CaptchaScope), DateTime<Utc>>,
}

impl CaptchaGate {
    pub fn new(
        provider: Box<dyn CaptchaProvider>,
        challenge_ttl: Duration,
        solved_ttl: Duration,
    ) -> Self {
        Self {
            provider,
            challenge_ttl,
            solved_ttl,
            pending: DashMap::new(),
            solved: DashMap::new(),
        }
    }

    pub fn issue(&self, scope: CaptchaScope, now: DateTime<Utc>) -> ChallengeView {
        let (prompt, answer) = self.provider.generate();
        let challenge_id = hex::encode(rand::random::<[u8; 16]>());
        self.pending.insert(
            challenge_id.clone(),
            Pending {
                answer,
                scope,
                expires_at: now + self.challenge_ttl,
            },
        );
        ChallengeView {
            challenge_id,
            prompt,
        }
    }

    /// Check an answer. Every challenge allows exactly one attempt; a
    /// correct answer marks its scope solved for `source`. Returns the scope
    /// on success.
    pub fn verify(
        &self,
        source: IpAddr,
        challenge_id: &str,
        solution: &str,
        now: DateTime<Utc>,
    ) -> Option<CaptchaScope> {
        let (_, pending) = self.pending.remove(challenge_id)?;
        if pending.expires_at <= now || !self.provider.check(&pending.answer, solution) {
            return None;
        }
        self.solved
            .insert((source, pending.scope.clone()), now + self.solved_ttl);
        Some(pending.scope)
    }

    pub fn is_solved(&self, source: IpAddr, scope: &CaptchaScope, now: DateTime<Utc>) -> bool {
        self.solved
            .get(&(source, scope.clone()))
            .is_some_and(|until| *until > now)
    }

    pub fn purge(&self, now: DateTime<Utc>) {
        self.pending.retain(|_, p| p.expires_at > now);
        self.solved.retain(|_, until| *until > now);
    }
}
