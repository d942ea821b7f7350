//! CSV corpus loading into an immutable [`DatasetSnapshot`].
//!
//! The loader is lenient per line and strict per file: a wrong header or an
//! I/O failure aborts, while every malformed data line is rejected on its
//! own and reported with its 1-based line number.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Read, Write};
use std::time::SystemTime;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{
    validate_record, ForumId, InteractionRecord, Label, RecordError, RecordFields, SentimentLabel,
    TrustLabel, UnknownLabel, UserId,
};

/// Required first line of every corpus file.
pub const CSV_HEADER: [&str; 8] = [
    "forum_id",
    "forum_name",
    "post_id",
    "timestamp",
    "from_user",
    "to_user",
    "trust",
    "sentiment",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing or malformed header; expected `{}`, found `{found}`", CSV_HEADER.join(","))]
    MissingHeader { found: String },
    #[error("failed to read corpus: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown forum `{0}`")]
pub struct UnknownForum(pub String);

/// Why a single data line was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowError {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("line is not valid UTF-8")]
    Encoding,
    #[error("unparseable CSV: {0}")]
    Malformed(String),
    #[error("timestamp {0:?} is not an integer")]
    BadTimestamp(String),
    #[error(transparent)]
    Label(#[from] UnknownLabel),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("forum {forum} already named {expected:?}, line says {found:?}")]
    ForumNameConflict {
        forum: ForumId,
        expected: String,
        found: String,
    },
    #[error("forum name is empty")]
    EmptyForumName,
}

impl RowError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::FieldCount { .. } => "field_count",
            Self::Encoding => "encoding",
            Self::Malformed(_) => "malformed",
            Self::BadTimestamp(_) => "bad_timestamp",
            Self::Label(_) => "unknown_label",
            Self::Record(e) => e.code(),
            Self::ForumNameConflict { .. } => "forum_name_conflict",
            Self::EmptyForumName => "empty_forum_name",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: u64,
    pub error: RowError,
}

impl Serialize for Rejection {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("line", &self.line)?;
        map.serialize_entry("error", self.error.code())?;
        map.serialize_entry("message", &self.error.to_string())?;
        map.end()
    }
}

/// Accounting for one load: `accepted + rejected.len()` equals the number
/// of data lines read.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<Rejection>,
    pub forums_seen: usize,
    pub users_seen: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForumMeta {
    pub id: ForumId,
    #[serde(rename = "name")]
    pub display_name: String,
    pub user_count: usize,
    pub interaction_count: usize,
}

/// An immutable loaded corpus. Forums are sorted by display name, then id;
/// records within a forum by (timestamp, post_id, from, to).
#[derive(Debug, Clone)]
pub struct DatasetSnapshot {
    forums: Vec<ForumMeta>,
    records: BTreeMap<ForumId, Vec<InteractionRecord>>,
    built_at: SystemTime,
}

impl PartialEq for DatasetSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.forums == other.forums && self.records == other.records
    }
}

impl Eq for DatasetSnapshot {}

impl DatasetSnapshot {
    pub fn empty() -> Self {
        SnapshotBuilder::default().build()
    }

    pub fn forums(&self) -> &[ForumMeta] {
        &self.forums
    }

    pub fn forum(&self, id: &str) -> Option<&ForumMeta> {
        self.forums.iter().find(|f| f.id.as_str() == id)
    }

    pub fn built_at(&self) -> SystemTime {
        self.built_at
    }

    pub fn total_records(&self) -> usize {
        self.records.values().map(Vec::len).sum()
    }

    /// Distinct users across every forum.
    pub fn user_count(&self) -> usize {
        self.records
            .values()
            .flatten()
            .flat_map(|r| [r.from(), r.to()])
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn forum_records(&self, id: &str) -> Result<&[InteractionRecord], UnknownForum> {
        self.forum(id)
            .and_then(|meta| self.records.get(&meta.id))
            .map(Vec::as_slice)
            .ok_or_else(|| UnknownForum(id.to_owned()))
    }

    /// Writes the snapshot in the corpus CSV layout, forums and records in
    /// canonical order.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for meta in &self.forums {
            for r in &self.records[&meta.id] {
                writer.write_record([
                    meta.id.as_str(),
                    meta.display_name.as_str(),
                    r.post_id(),
                    r.timestamp().to_string().as_str(),
                    r.from().as_str(),
                    r.to().as_str(),
                    r.trust().token(),
                    r.sentiment().token(),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("snapshot fields are UTF-8")
    }
}

/// Canonical forum list of a snapshot.
pub fn list_forums(snapshot: &DatasetSnapshot) -> &[ForumMeta] {
    snapshot.forums()
}

/// All records of one forum in canonical order.
pub fn forum_records<'a>(
    snapshot: &'a DatasetSnapshot,
    forum: &str,
) -> Result<&'a [InteractionRecord], UnknownForum> {
    snapshot.forum_records(forum)
}

/// Accumulates validated records and forum names, then freezes them.
#[derive(Debug, Default)]
pub struct SnapshotBuilder {
    names: BTreeMap<ForumId, String>,
    records: BTreeMap<ForumId, Vec<InteractionRecord>>,
}

impl SnapshotBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a record; the first name seen for a forum wins and later
    /// disagreeing names are refused.
    pub fn push(&mut self, record: InteractionRecord, forum_name: &str) -> Result<(), RowError> {
        let name = forum_name.trim();
        if name.is_empty() {
            return Err(RowError::EmptyForumName);
        }
        match self.names.get(record.forum()) {
            Some(existing) if existing != name => {
                return Err(RowError::ForumNameConflict {
                    forum: record.forum().clone(),
                    expected: existing.clone(),
                    found: name.to_owned(),
                })
            }
            Some(_) => {}
            None => {
                self.names.insert(record.forum().clone(), name.to_owned());
            }
        }
        self.records
            .entry(record.forum().clone())
            .or_default()
            .push(record);
        Ok(())
    }

    pub fn build(self) -> DatasetSnapshot {
        let Self { names, mut records } = self;
        let mut forums: Vec<ForumMeta> = records
            .iter_mut()
            .map(|(id, recs)| {
                recs.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
                let users: BTreeSet<&UserId> =
                    recs.iter().flat_map(|r| [r.from(), r.to()]).collect();
                ForumMeta {
                    id: id.clone(),
                    display_name: names[id].clone(),
                    user_count: users.len(),
                    interaction_count: recs.len(),
                }
            })
            .collect();
        forums.sort_by(|a, b| {
            a.display_name
                .cmp(&b.display_name)
                .then_with(|| a.id.cmp(&b.id))
        });
        DatasetSnapshot {
            forums,
            records,
            built_at: SystemTime::now(),
        }
    }
}

fn parse_row(row: &csv::StringRecord) -> Result<(InteractionRecord, String), RowError> {
    if row.len() != CSV_HEADER.len() {
        return Err(RowError::FieldCount {
            expected: CSV_HEADER.len(),
            found: row.len(),
        });
    }
    let timestamp = row[3]
        .trim()
        .parse::<i64>()
        .map_err(|_| RowError::BadTimestamp(row[3].to_owned()))?;
    let fields = RecordFields {
        forum: row[0].to_owned(),
        post_id: row[2].to_owned(),
        from: row[4].to_owned(),
        to: row[5].to_owned(),
        timestamp,
        trust: TrustLabel::parse(&row[6])?,
        sentiment: SentimentLabel::parse(&row[7])?,
    };
    Ok((validate_record(&fields)?, row[1].to_owned()))
}

/// Loads a corpus from CSV text.
pub fn ingest_csv<R: Read>(source: R) -> Result<(DatasetSnapshot, IngestReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);

    let mut raw = csv::ByteRecord::new();
    let header_ok = match reader.read_byte_record(&mut raw) {
        Ok(true) => raw.iter().eq(CSV_HEADER.iter().map(|h| h.as_bytes())),
        Ok(false) => false,
        Err(e) => {
            csv_to_io(e)?;
            false
        }
    };
    if !header_ok {
        let found = raw
            .iter()
            .map(|f| String::from_utf8_lossy(f).into_owned())
            .collect::<Vec<_>>()
            .join(",");
        return Err(IngestError::MissingHeader { found });
    }

    let mut builder = SnapshotBuilder::new();
    let mut report = IngestReport::default();
    loop {
        let line = reader.position().line();
        match reader.read_byte_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {
                let line = raw.position().map_or(line, |p| p.line());
                let outcome = csv::StringRecord::from_byte_record(raw.clone())
                    .map_err(|_| RowError::Encoding)
                    .and_then(|row| parse_row(&row))
                    .and_then(|(record, name)| builder.push(record, &name));
                match outcome {
                    Ok(()) => report.accepted += 1,
                    Err(error) => report.rejected.push(Rejection { line, error }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(line, |p| p.line());
                let msg = e.to_string();
                csv_to_io(e)?;
                report.rejected.push(Rejection {
                    line,
                    error: RowError::Malformed(msg),
                });
            }
        }
    }

    let snapshot = builder.build();
    report.forums_seen = snapshot.forums().len();
    report.users_seen = snapshot.user_count();
    Ok((snapshot, report))
}

/// Propagates I/O failures; every other CSV error is a per-line problem.
fn csv_to_io(e: csv::Error) -> Result<(), IngestError> {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Err(IngestError::Io(io)),
            _ => unreachable!("is_io_error implies ErrorKind::Io"),
        }
    } else {
        Ok(())
    }
}
