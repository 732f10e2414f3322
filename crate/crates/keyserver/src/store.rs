//! Accounts and key records, kept in memory and mirrored to an append-only
//! JSON-lines log. Key bytes are wrapped under a master key before they
//! reach the log.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use ephemera_core::crypto::{decrypt, encrypt, SymmetricKey, IV_LEN};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hexser;

pub type KeyId = [u8; 16];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt store line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("master key does not open the stored keys")]
    WrongMasterKey,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub id: String,
    pub username: String,
    #[serde(with = "hexser")]
    pub salt: [u8; 16],
    #[serde(with = "hexser")]
    pub password_hash: [u8; 32],
    pub iterations: u32,
}

#[derive(Clone, Debug)]
pub struct KeyRecord {
    pub key_id: KeyId,
    pub key: SymmetricKey,
    /// `None` until the owner picks a date; such a record never expires.
    pub expdate: Option<DateTime<Utc>>,
    pub ciphertext_hash: [u8; 32],
    pub description: String,
    pub created_at: DateTime<Utc>,
    pub captcha_required: bool,
    pub owner: String,
}

impl KeyRecord {
    pub fn is_expired(&self, now: DateTime<Utc>) -> bool {
        self.expdate.is_some_and(|t| t <= now)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEntry {
    Account(Account),
    Record {
        #[serde(with = "hexser")]
        key_id: KeyId,
        /// IV followed by the CBC-wrapped key.
        wrapped_key: String,
        expdate: Option<DateTime<Utc>>,
        #[serde(with = "hexser")]
        ciphertext_hash: [u8; 32],
        description: String,
        created_at: DateTime<Utc>,
        captcha_required: bool,
        owner: String,
    },
    Expiry {
        #[serde(with = "hexser")]
        key_id: KeyId,
        expdate: Option<DateTime<Utc>>,
    },
}

#[derive(Default)]
struct State {
    accounts: HashMap<String, Account>,
    usernames: HashMap<String, String>,
    records: HashMap<KeyId, KeyRecord>,
}

pub struct Store {
    state: RwLock<State>,
    log: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
    master: SymmetricKey,
}

impl Store {
    /// A store that forgets everything on drop.
    pub fn in_memory(master: SymmetricKey) -> Self {
        Self {
            state: RwLock::new(State::default()),
            log: None,
            path: None,
            master,
        }
    }

    /// Open or create the log at `path` and replay it.
    pub fn open(path: &Path, master: SymmetricKey) -> Result<Self, StoreError> {
        let io = |source| StoreError::Io {
            path: path.to_owned(),
            source,
        };
        let mut state = State::default();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LogEntry =
                    serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                        line: i + 1,
                        reason: e.to_string(),
                    })?;
                replay(&mut state, entry, &master, i + 1)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        Ok(Self {
            state: RwLock::new(state),
            log: Some(Mutex::new(BufWriter::new(file))),
            path: Some(path.to_owned()),
            master,
        })
    }

    fn append(&self, entry: &LogEntry) -> Result<(), StoreError> {
        let Some(log) = &self.log else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(entry).expect("log entries always serialize");
        line.push(b'\n');
        let mut w = log.lock();
        w.write_all(&line)
            .and_then(|_| w.flush())
            .map_err(|source| StoreError::Io {
                path: self.path.clone().unwrap_or_default(),
                source,
            })
    }

    /// Insert an account unless the username is taken. Returns false if taken.
    pub fn insert_account(&self, account: Account) -> Result<bool, StoreError> {
        let mut st = self.state.write();
        if st.usernames.contains_key(&account.username) {
            return Ok(false);
        }
        self.append(&LogEntry::Account(account.clone()))?;
        st.usernames
            .insert(account.username.clone(), account.id.clone());
        st.accounts.insert(account.id.clone(), account);
        Ok(true)
    }

    pub fn account_by_name(&self, username: &str) -> Option<Account> {
        let st = self.state.read();
        st.usernames
            .get(username)
            .and_then(|id| st.accounts.get(id))
            .cloned()
    }

    pub fn insert_record(&self, record: KeyRecord) -> Result<(), StoreError> {
        let (iv, wrapped) = encrypt(&self.master, record.key.as_bytes());
        let entry = LogEntry::Record {
            key_id: record.key_id,
            wrapped_key: hex::encode([iv.as_slice(), &wrapped].concat()),
            expdate: record.expdate,
            ciphertext_hash: record.ciphertext_hash,
            description: record.description.clone(),
            created_at: record.created_at,
            captcha_required: record.captcha_required,
            owner: record.owner.clone(),
        };
        let mut st = self.state.write();
        self.append(&entry)?;
        st.records.insert(record.key_id, record);
        Ok(())
    }

    pub fn contains_record(&self, key_id: &KeyId) -> bool {
        self.state.read().records.contains_key(key_id)
    }

    /// Run `f` on the record under the read lock.
    pub fn with_record<R>(&self, key_id: &KeyId, f: impl FnOnce(&KeyRecord) -> R) -> Option<R> {
        self.state.read().records.get(key_id).map(f)
    }

    /// Replace the expiration of a record owned by `owner`.
    pub fn update_expiry(
        &self,
        key_id: &KeyId,
        owner: &str,
        expdate: Option<DateTime<Utc>>,
    ) -> Result<UpdateOutcome, StoreError> {
        let mut st = self.state.write();
        let Some(rec) = st.records.get_mut(key_id) else {
            return Ok(UpdateOutcome::NotFound);
        };
        if rec.owner != owner {
            return Ok(UpdateOutcome::NotOwner);
        }
        self.append(&LogEntry::Expiry {
            key_id: *key_id,
            expdate,
        })?;
        rec.expdate = expdate;
        Ok(UpdateOutcome::Updated)
    }

    /// All records of `owner`, oldest first.
    pub fn records_of(&self, owner: &str) -> Vec<KeyRecord> {
        let st = self.state.read();
        let mut out: Vec<KeyRecord> = st
            .records
            .values()
            .filter(|r| r.owner == owner)
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then(a.key_id.cmp(&b.key_id))
        });
        out
    }

    pub fn record_count(&self) -> usize {
        self.state.read().records.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateOutcome {
    Updated,
    NotFound,
    NotOwner,
}

fn replay(
    state: &mut State,
    entry: LogEntry,
    master: &SymmetricKey,
    line: usize,
) -> Result<(), StoreError> {
    match entry {
        LogEntry::Account(a) => {
            state.usernames.insert(a.username.clone(), a.id.clone());
            state.accounts.insert(a.id.clone(), a);
        }
        LogEntry::Record {
            key_id,
            wrapped_key,
            expdate,
            ciphertext_hash,
            description,
            created_at,
            captcha_required,
            owner,
        } => {
            let raw = hex::decode(&wrapped_key).map_err(|e| StoreError::Corrupt {
                line,
                reason: e.to_string(),
            })?;
            if raw.len() <= IV_LEN {
                return Err(StoreError::Corrupt {
                    line,
                    reason: "wrapped key too short".into(),
                });
            }
            let iv: [u8; IV_LEN] = raw[..IV_LEN].try_into().unwrap();
            let plain =
                decrypt(master, &iv, &raw[IV_LEN..]).map_err(|_| StoreError::WrongMasterKey)?;
            let key = SymmetricKey::from_bytes(&plain).map_err(|_| StoreError::WrongMasterKey)?;
            state.records.insert(
                key_id,
                KeyRecord {
                    key_id,
                    key,
                    expdate,
                    ciphertext_hash,
                    description,
                    created_at,
                    captcha_required,
                    owner,
                },
            );
        }
        LogEntry::Expiry { key_id, expdate } => {
            let rec = state
                .records
                .get_mut(&key_id)
                .ok_or_else(|| StoreError::Corrupt {
                    line,
                    reason: "expiry update for unknown key".into(),
                })?;
            rec.expdate = expdate;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(owner: &str, id: u8) -> KeyRecord {
        KeyRecord {
            key_id: [id; 16],
            key: SymmetricKey::generate(),
            expdate: None,
            ciphertext_hash: [id; 32],
            description: "album".into(),
            created_at: Utc::now(),
            captcha_required: false,
            owner: owner.into(),
        }
    }

    #[test]
    fn reopen_replays_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keys.jsonl");
        let master = SymmetricKey::generate();
        let rec = record("alice", 1);
        let later = Utc::now() + chrono::Duration::days(3);
        {
            let store = Store::open(&path, master.clone()).unwrap();
            store
                .insert_account(Account {
                    id: "a1".into(),
                    username: "alice".into(),
                    salt: [1; 16],
                    password_hash: [2; 32],
                    iterations: 10,
                })
                .unwrap();
            store.insert_record(rec.clone()).unwrap();
            store
                .update_expiry(&rec.key_id, "alice", Some(later))
                .unwrap();
        }
        let store = Store::open(&path, master).unwrap();
        assert_eq!(store.account_by_name("alice").unwrap().id, "a1");
        let back = store.with_record(&rec.key_id, |r| r.clone()).unwrap();
        assert_eq!(back.key, rec.key);
        assert_eq!(back.expdate, Some(later));
        assert_eq!(back.ciphertext_hash, rec.ciphertext_hash);
    }

    #[test]
    fn key_bytes_never_hit_the_log_in_clear() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keys.jsonl");
        let rec = record("bob", 7);
        Store::open(&path, SymmetricKey::generate())
            .unwrap()
            .insert_record(rec.clone())
            .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains(&hex::encode(rec.key.as_bytes())));
    }

    #[test]
    fn wrong_master_key_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keys.jsonl");
        Store::open(&path, SymmetricKey::generate())
            .unwrap()
            .insert_record(record("c", 3))
            .unwrap();
        // A 32-byte key needs a full padding block, so a wrong master key
        // passes only with negligible probability.
        assert!(matches!(
            Store::open(&path, SymmetricKey::generate()),
            Err(StoreError::WrongMasterKey)
        ));
    }

    #[test]
    fn updates_respect_ownership() {
        let store = Store::in_memory(SymmetricKey::generate());
        let rec = record("alice", 9);
        store.insert_record(rec.clone()).unwrap();
        assert_eq!(
            store.update_expiry(&rec.key_id, "mallory", None).unwrap(),
            UpdateOutcome::NotOwner
        );
        assert_eq!(
            store.update_expiry(&[0; 16], "alice", None).unwrap(),
            UpdateOutcome::NotFound
        );
    }

    #[test]
    fn duplicate_usernames_rejected() {
        let store = Store::in_memory(SymmetricKey::generate());
        let acct = Account {
            id: "x".into(),
            username: "same".into(),
            salt: [0; 16],
            password_hash: [0; 32],
            iterations: 1,
        };
        assert!(store.insert_account(acct.clone()).unwrap());
        assert!(!store
            .insert_account(Account {
                id: "y".into(),
                ..acct
            })
            .unwrap());
    }
}
