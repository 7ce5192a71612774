use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two competing cascades an event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NewsKind {
    Fake,
    Mitigation,
}

impl NewsKind {
    pub const ALL: [NewsKind; 2] = [NewsKind::Fake, NewsKind::Mitigation];

    pub fn code(self) -> char {
        match self {
            NewsKind::Fake => 'F',
            NewsKind::Mitigation => 'M',
        }
    }
}

impl fmt::Display for NewsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for NewsKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "F" => Ok(NewsKind::Fake),
            "M" => Ok(NewsKind::Mitigation),
            other => Err(format!("unknown news kind `{other}` (expected F or M)")),
        }
    }
}

/// A single post: `user` published news of `kind` at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub user: usize,
    pub time: f64,
    pub kind: NewsKind,
}

/// Time-ordered posting history over `[0, horizon]`.
///
/// Event times are strictly increasing. A log may mix both kinds; every
/// query that cares about kind filters explicitly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    events: Vec<Event>,
    horizon: f64,
}

impl EventLog {
    pub fn new(horizon: f64) -> Self {
        Self {
            events: Vec::new(),
            horizon: horizon.max(0.0),
        }
    }

    pub fn from_events(events: Vec<Event>, horizon: f64) -> Result<Self> {
        let mut log = Self::new(horizon);
        log.events.reserve(events.len());
        for ev in events {
            log.push(ev)?;
        }
        Ok(log)
    }

    /// Appends an event; it must be strictly later than the current last
    /// event and no later than the horizon.
    pub fn push(&mut self, ev: Event) -> Result<()> {
        if !(ev.time >= 0.0) || !ev.time.is_finite() {
            return Err(Error::InvalidLog(format!(
                "event time {} is not a nonnegative number",
                ev.time
            )));
        }
        if ev.time > self.horizon {
            return Err(Error::InvalidLog(format!(
                "event time {} exceeds horizon {}",
                ev.time, self.horizon
            )));
        }
        if let Some(last) = self.events.last() {
            if ev.time <= last.time {
                return Err(Error::InvalidLog(format!(
                    "event times must be strictly increasing ({} after {})",
                    ev.time, last.time
                )));
            }
        }
        self.events.push(ev);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, ev: Event) {
        debug_assert!(self.events.last().is_none_or(|l| l.time < ev.time));
        self.events.push(ev);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn extend_horizon(&mut self, horizon: f64) {
        if horizon > self.horizon {
            self.horizon = horizon;
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    /// Events with `a < time <= b`.
    pub fn window(&self, a: f64, b: f64) -> &[Event] {
        let lo = self.events.partition_point(|e| e.time <= a);
        let hi = self.events.partition_point(|e| e.time <= b);
        &self.events[lo..hi.max(lo)]
    }

    /// Events with `time < t`.
    pub fn before(&self, t: f64) -> &[Event] {
        let hi = self.events.partition_point(|e| e.time < t);
        &self.events[..hi]
    }

    /// Events with `time <= t`.
    pub fn up_to(&self, t: f64) -> &[Event] {
        let hi = self.events.partition_point(|e| e.time <= t);
        &self.events[..hi]
    }

    /// Per-user event counts of `kind` in the window `(a, b]`.
    pub fn counts_between(&self, n: usize, kind: NewsKind, a: f64, b: f64) -> Vec<usize> {
        let mut counts = vec![0; n];
        for ev in self.window(a, b).iter().filter(|e| e.kind == kind) {
            counts[ev.user] += 1;
        }
        counts
    }

    /// Keeps only events of one kind.
    pub fn of_kind(&self, kind: NewsKind) -> EventLog {
        EventLog {
            events: self
                .events
                .iter()
                .copied()
                .filter(|e| e.kind == kind)
                .collect(),
            horizon: self.horizon,
        }
    }

    /// Merges two logs into one time-ordered log.
    pub fn merged(&self, other: &EventLog) -> EventLog {
        let mut events = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.events.len() || j < other.events.len() {
            let take_left = match (self.events.get(i), other.events.get(j)) {
                (Some(a), Some(b)) => a.time <= b.time,
                (Some(_), None) => true,
                _ => false,
            };
            if take_left {
                events.push(self.events[i]);
                i += 1;
            } else {
                events.push(other.events[j]);
                j += 1;
            }
        }
        EventLog {
            events,
            horizon: self.horizon.max(other.horizon),
        }
    }

    /// Writes `user,time,kind` lines preceded by a `# horizon` comment.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# horizon {}", self.horizon)?;
        for ev in &self.events {
            writeln!(w, "{},{},{}", ev.user, ev.time, ev.kind)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R, path: &Path) -> Result<Self> {
        let mut horizon = None;
        let mut events = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(h) = rest.trim().strip_prefix("horizon") {
                    horizon =
                        Some(h.trim().parse::<f64>().map_err(|e| {
                            Error::parse(path, lineno, format!("bad horizon: {e}"))
                        })?);
                }
                continue;
            }
            let mut fields = trimmed.split(',');
            let (Some(user), Some(time), Some(kind), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(path, lineno, "expected `user,time,kind`"));
            };
            let user = user
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::parse(path, lineno, format!("bad user: {e}")))?;
            let time = time
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(path, lineno, format!("bad time: {e}")))?;
            let kind = kind
                .parse::<NewsKind>()
                .map_err(|e| Error::parse(path, lineno, e))?;
            events.push(Event { user, time, kind });
        }
        let horizon = horizon.unwrap_or_else(|| events.last().map_or(0.0, |e| e.time));
        EventLog::from_events(events, horizon)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), path)
    }
}

/// `N_user(t)`: number of events by `user` with time `<= t`.
pub fn count(log: &EventLog, user: usize, t: f64) -> usize {
    log.up_to(t).iter().filter(|e| e.user == user).count()
}
