//! Finding and updating published keys.

use chrono::{DateTime, SubsecRound, Utc};
use ephemera_keyserver::api::{KeySummary, UpdateRequest};
use ephemera_keyserver::ExpiryUpdate;

use crate::api::KeyApi;
use crate::error::CliError;

/// How a user names a key: its hex id, or `description[|created[|expires]]`
/// with RFC 3339 dates (`unset` for no expiration) compared to the second.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeySelector {
    Id([u8; 16]),
    Triple {
        description: String,
        created: Option<DateTime<Utc>>,
        expires: Option<Option<DateTime<Utc>>>,
    },
}

fn parse_date(s: &str) -> Result<DateTime<Utc>, CliError> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| CliError::Usage(format!("bad date {s:?}: {e}")))
}

impl std::str::FromStr for KeySelector {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s.len() == 32 {
            if let Ok(bytes) = hex::decode(s) {
                return Ok(KeySelector::Id(bytes.try_into().expect("16 bytes")));
            }
        }
        let mut parts = s.splitn(3, '|');
        let description = parts.next().unwrap_or_default().to_owned();
        let created = parts.next().map(parse_date).transpose()?;
        let expires = parts
            .next()
            .map(|e| match e.trim() {
                "unset" => Ok(None),
                other => parse_date(other).map(Some),
            })
            .transpose()?;
        Ok(KeySelector::Triple {
            description,
            created,
            expires,
        })
    }
}

fn same_second(a: DateTime<Utc>, b: DateTime<Utc>) -> bool {
    a.trunc_subsecs(0) == b.trunc_subsecs(0)
}

impl KeySelector {
    pub fn matches(&self, row: &KeySummary) -> bool {
        match self {
            KeySelector::Id(id) => row.key_id == *id,
            KeySelector::Triple {
                description,
                created,
                expires,
            } => {
                row.description == *description
                    && created.is_none_or(|c| same_second(c, row.created_at))
                    && expires.is_none_or(|e| match (e, row.expdate) {
                        (None, None) => true,
                        (Some(a), Some(b)) => same_second(a, b),
                        _ => false,
                    })
            }
        }
    }

    /// Resolve to a single key id using the owner's listing.
    pub fn resolve(&self, api: &dyn KeyApi, token: &str) -> Result<[u8; 16], CliError> {
        if let KeySelector::Id(id) = self {
            return Ok(*id);
        }
        let rows: Vec<KeySummary> = api
            .list_keys(token)?
            .into_iter()
            .filter(|r| self.matches(r))
            .collect();
        match rows.as_slice() {
            [one] => Ok(one.key_id),
            [] => Err(CliError::NoMatch(self.to_string())),
            many => Err(CliError::Ambiguous(self.to_string(), many.len())),
        }
    }
}

impl std::fmt::Display for KeySelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KeySelector::Id(id) => f.write_str(&hex::encode(id)),
            KeySelector::Triple {
                description,
                created,
                expires,
            } => {
                f.write_str(description)?;
                if let Some(c) = created {
                    write!(f, "|{}", c.to_rfc3339())?;
                }
                match expires {
                    Some(Some(e)) => write!(f, "|{}", e.to_rfc3339()),
                    Some(None) => f.write_str("|unset"),
                    None => Ok(()),
                }
            }
        }
    }
}

/// Change a key's expiration; returns the date now in force.
pub fn update(
    api: &dyn KeyApi,
    token: &str,
    selector: &KeySelector,
    expires: ExpiryUpdate,
) -> Result<([u8; 16], DateTime<Utc>), CliError> {
    let key_id = selector.resolve(api, token)?;
    let when = api.update(
        token,
        &UpdateRequest {
            key_id,
            expdate: expires,
        },
    )?;
    Ok((key_id, when))
}

/// Listing rendered as a fixed-width table.
pub fn format_keys(rows: &[KeySummary]) -> String {
    let mut out = format!(
        "{:<32}  {:<25}  {:<25}  {:<7}  {}\n",
        "key id", "created", "expires", "captcha", "description"
    );
    for r in rows {
        let expires = r
            .expdate
            .map(|t| t.trunc_subsecs(0).to_rfc3339())
            .unwrap_or_else(|| "unset".into());
        out.push_str(&format!(
            "{:<32}  {:<25}  {:<25}  {:<7}  {}\n",
            hex::encode(r.key_id),
            r.created_at.trunc_subsecs(0).to_rfc3339(),
            expires,
            if r.captcha_required { "yes" } else { "no" },
            r.description
        ));
    }
    out
}
