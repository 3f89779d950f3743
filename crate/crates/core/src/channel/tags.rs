//! Time-tag records and their file formats.
//!
//! Binary `QITT` layout, all little-endian:
//!
//! ```text
//! offset 0   4 bytes  magic "QITT"
//! offset 4   u32      format version (1)
//! offset 8   u64      run duration in ps
//! offset 16  records: u8 channel (0 signal, 1 herald), u64 time_ps
//! ```
//!
//! The CSV form carries the duration in a leading `# duration_ps=<n>`
//! comment followed by a `channel,time_ps` header.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const QITT_MAGIC: &[u8; 4] = b"QITT";
pub const QITT_VERSION: u32 = 1;
const RECORD_LEN: usize = 9;

/// Detector channel. Signal sorts before Herald at equal times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Signal,
    Herald,
}

impl Channel {
    fn code(self) -> u8 {
        match self {
            Channel::Signal => 0,
            Channel::Herald => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Channel::Signal),
            1 => Ok(Channel::Herald),
            other => Err(Error::BadTagFile(format!("unknown channel code {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeTag {
    pub channel: Channel,
    pub time_ps: u64,
}

impl TimeTag {
    pub fn new(channel: Channel, time_ps: u64) -> Self {
        TimeTag { channel, time_ps }
    }

    fn sort_key(&self) -> (u64, Channel) {
        (self.time_ps, self.channel)
    }
}

impl PartialOrd for TimeTag {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimeTag {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// Time-ordered detections of one run, all within `[0, duration_ps)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimeTagStream {
    tags: Vec<TimeTag>,
    duration_ps: u64,
}

impl TimeTagStream {
    /// Wraps tags that must already be sorted and inside the run.
    pub fn new(tags: Vec<TimeTag>, duration_ps: u64) -> Result<Self> {
        if let Some(index) = first_unsorted(&tags) {
            return Err(Error::UnsortedStream { index });
        }
        if let Some(last) = tags.last() {
            if last.time_ps >= duration_ps {
                return Err(Error::InvalidArgument(format!(
                    "tag at {} ps lies outside run of {duration_ps} ps",
                    last.time_ps
                )));
            }
        }
        Ok(TimeTagStream { tags, duration_ps })
    }

    /// Sorts the tags first; tags outside the run are still rejected.
    pub fn from_unsorted(mut tags: Vec<TimeTag>, duration_ps: u64) -> Result<Self> {
        tags.sort_unstable();
        Self::new(tags, duration_ps)
    }

    /// Skips the ordering check. Callers must guarantee it.
    pub(crate) fn from_sorted_unchecked(tags: Vec<TimeTag>, duration_ps: u64) -> Self {
        debug_assert!(first_unsorted(&tags).is_none());
        TimeTagStream { tags, duration_ps }
    }

    pub fn tags(&self) -> &[TimeTag] {
        &self.tags
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn into_tags(self) -> Vec<TimeTag> {
        self.tags
    }

    pub fn write_qitt<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        w.write_all(QITT_MAGIC)?;
        w.write_all(&QITT_VERSION.to_le_bytes())?;
        w.write_all(&self.duration_ps.to_le_bytes())?;
        for tag in &self.tags {
            w.write_all(&[tag.channel.code()])?;
            w.write_all(&tag.time_ps.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_qitt<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|_| Error::BadTagFile("truncated header".into()))?;
        if &header[..4] != QITT_MAGIC {
            return Err(Error::BadTagFile("bad magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != QITT_VERSION {
            return Err(Error::BadTagFile(format!("unsupported version {version}")));
        }
        let duration_ps = u64::from_le_bytes(header[8..16].try_into().unwrap());

        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() % RECORD_LEN != 0 {
            return Err(Error::BadTagFile("truncated record".into()));
        }
        let tags = body
            .chunks_exact(RECORD_LEN)
            .map(|rec| {
                Ok(TimeTag {
                    channel: Channel::from_code(rec[0])?,
                    time_ps: u64::from_le_bytes(rec[1..].try_into().unwrap()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(tags, duration_ps)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "# duration_ps={}", self.duration_ps)?;
        let mut csv = csv::Writer::from_writer(w);
        for tag in &self.tags {
            csv.serialize(tag)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let mut first = String::new();
        r.read_line(&mut first)?;
        let duration_ps = first
            .trim()
            .strip_prefix("# duration_ps=")
            .and_then(|v| v.parse::<u64>().ok())
            .ok_or_else(|| Error::BadTagFile("missing '# duration_ps=' line".into()))?;
        let mut csv = csv::Reader::from_reader(r);
        let tags = csv
            .deserialize::<TimeTag>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(tags, duration_ps)
    }
}

fn first_unsorted(tags: &[TimeTag]) -> Option<usize> {
    tags.windows(2).position(|w| w[0] > w[1]).map(|i| i + 1)
}
