//! Domain vocabulary shared by every stage of the pipeline: identifiers,
//! the trust and sentiment taxonomies, and validated interaction records.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Why a raw token was refused as an identifier.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token is empty")]
    Empty,
    #[error("token contains forbidden character {0:?}")]
    ForbiddenChar(char),
}

/// Identifier tokens must survive an unquoted CSV round-trip.
fn check_token(raw: &str) -> Result<&str, TokenError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(TokenError::Empty);
    }
    if let Some(ch) = trimmed.chars().find(|c| c.is_control() || *c == ',') {
        return Err(TokenError::ForbiddenChar(ch));
    }
    Ok(trimmed)
}

macro_rules! token_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(raw: &str) -> Result<Self, TokenError> {
                check_token(raw).map(|t| Self(t.to_owned()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = TokenError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

token_newtype!(
    /// A forum participant. Case-sensitive, trimmed, never empty.
    UserId
);
token_newtype!(
    /// Stable forum key; the human-readable name lives in `ForumMeta`.
    ForumId
);

/// The offending token of a failed label parse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {taxonomy} label {token:?}")]
pub struct UnknownLabel {
    pub taxonomy: &'static str,
    pub token: String,
}

/// A closed label taxonomy with a designated neutral member.
pub trait Label: Copy + Eq + Ord + fmt::Debug + Send + Sync + 'static {
    /// Every member, in taxonomy order. `index()` is the position here.
    const ALL: &'static [Self];
    /// Returned by [`crate::matrix::dominant_label`] on ties.
    const NEUTRAL: Self;
    const TAXONOMY: &'static str;

    /// Canonical lowercase serialization token.
    fn token(self) -> &'static str;

    fn index(self) -> usize {
        Self::ALL
            .iter()
            .position(|l| *l == self)
            .expect("label is a member of its own taxonomy")
    }

    fn parse(text: &str) -> Result<Self, UnknownLabel> {
        let needle = text.trim().to_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.token() == needle)
            .ok_or_else(|| UnknownLabel {
                taxonomy: Self::TAXONOMY,
                token: text.to_owned(),
            })
    }
}

/// Collapsed trust coding of one interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrustLabel {
    Trust,
    NeutralTrust,
    Mistrust,
}

impl Label for TrustLabel {
    const ALL: &'static [Self] = &[Self::Trust, Self::NeutralTrust, Self::Mistrust];
    const NEUTRAL: Self = Self::NeutralTrust;
    const TAXONOMY: &'static str = "trust";

    fn token(self) -> &'static str {
        match self {
            Self::Trust => "trust",
            Self::NeutralTrust => "neutral",
            Self::Mistrust => "mistrust",
        }
    }
}

/// Sentiment coding of one interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SentimentLabel {
    Positive,
    Negative,
    NeutralSentiment,
    Unrelated,
}

impl Label for SentimentLabel {
    const ALL: &'static [Self] = &[
        Self::Positive,
        Self::Negative,
        Self::NeutralSentiment,
        Self::Unrelated,
    ];
    const NEUTRAL: Self = Self::NeutralSentiment;
    const TAXONOMY: &'static str = "sentiment";

    fn token(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::NeutralSentiment => "neutral",
            Self::Unrelated => "unrelated",
        }
    }
}

macro_rules! label_impls {
    ($name:ident) => {
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = UnknownLabel;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <Self as Label>::parse(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.token())
            }
        }
    };
}

label_impls!(TrustLabel);
label_impls!(SentimentLabel);

/// Case-insensitive, whitespace-trimmed parse of a trust token.
pub fn parse_trust_label(text: &str) -> Result<TrustLabel, UnknownLabel> {
    TrustLabel::parse(text)
}

/// Case-insensitive, whitespace-trimmed parse of a sentiment token.
pub fn parse_sentiment_label(text: &str) -> Result<SentimentLabel, UnknownLabel> {
    SentimentLabel::parse(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("field `{field}` contains forbidden character {ch:?}")]
    ForbiddenChar { field: &'static str, ch: char },
    #[error("user {0} cannot interact with themselves")]
    SelfInteraction(UserId),
    #[error("timestamp {0} is negative")]
    NegativeTimestamp(i64),
}

impl RecordError {
    /// Stable machine-readable token for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyField(_) => "empty_field",
            Self::ForbiddenChar { .. } => "forbidden_char",
            Self::SelfInteraction(_) => "self_interaction",
            Self::NegativeTimestamp(_) => "negative_timestamp",
        }
    }
}

/// Candidate record fields before validation. Labels and the timestamp are
/// already parsed; identifiers are raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordFields {
    pub forum: String,
    pub post_id: String,
    pub from: String,
    pub to: String,
    pub timestamp: i64,
    pub trust: TrustLabel,
    pub sentiment: SentimentLabel,
}

/// One coded, directed communication event. Only constructible through
/// validation, so `from != to` holds for every value of this type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InteractionRecord {
    forum: ForumId,
    post_id: String,
    from: UserId,
    to: UserId,
    timestamp: u64,
    trust: TrustLabel,
    sentiment: SentimentLabel,
}

impl InteractionRecord {
    pub fn new(
        forum: ForumId,
        post_id: &str,
        from: UserId,
        to: UserId,
        timestamp: u64,
        trust: TrustLabel,
        sentiment: SentimentLabel,
    ) -> Result<Self, RecordError> {
        let post_id = field_token("post_id", post_id)?;
        if from == to {
            return Err(RecordError::SelfInteraction(from));
        }
        Ok(Self {
            forum,
            post_id: post_id.to_owned(),
            from,
            to,
            timestamp,
            trust,
            sentiment,
        })
    }

    pub fn forum(&self) -> &ForumId {
        &self.forum
    }

    pub fn post_id(&self) -> &str {
        &self.post_id
    }

    pub fn from(&self) -> &UserId {
        &self.from
    }

    pub fn to(&self) -> &UserId {
        &self.to
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }

    pub fn trust(&self) -> TrustLabel {
        self.trust
    }

    pub fn sentiment(&self) -> SentimentLabel {
        self.sentiment
    }

    /// Canonical within-forum order: (timestamp, post_id, from, to).
    pub fn sort_key(&self) -> (u64, &str, &UserId, &UserId) {
        (self.timestamp, &self.post_id, &self.from, &self.to)
    }
}

fn field_token<'a>(field: &'static str, raw: &'a str) -> Result<&'a str, RecordError> {
    check_token(raw).map_err(|e| match e {
        TokenError::Empty => RecordError::EmptyField(field),
        TokenError::ForbiddenChar(ch) => RecordError::ForbiddenChar { field, ch },
    })
}

/// Validates candidate fields into an [`InteractionRecord`].
///
/// Blank identifiers are reported before self-interaction, which is reported
/// before a negative timestamp.
pub fn validate_record(candidate: &RecordFields) -> Result<InteractionRecord, RecordError> {
    let forum = field_token("forum", &candidate.forum)?;
    let post_id = field_token("post_id", &candidate.post_id)?;
    let from = field_token("from", &candidate.from)?;
    let to = field_token("to", &candidate.to)?;
    if from == to {
        return Err(RecordError::SelfInteraction(UserId(from.to_owned())));
    }
    let timestamp = u64::try_from(candidate.timestamp)
        .map_err(|_| RecordError::NegativeTimestamp(candidate.timestamp))?;
    Ok(InteractionRecord {
        forum: ForumId(forum.to_owned()),
        post_id: post_id.to_owned(),
        from: UserId(from.to_owned()),
        to: UserId(to.to_owned()),
        timestamp,
        trust: candidate.trust,
        sentiment: candidate.sentiment,
    })
}
