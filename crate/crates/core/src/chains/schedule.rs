//! Collision schedules: which molecule meets the system at which step.
//!
//! Molecules with negative ids are already inside the register when the chain
//! starts. They model the "broken" opening of an overlapping pattern: the
//! first one or two molecules have lost their earlier collision(s) and are
//! prepared in the satellite-memory state instead of the molecule state.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: usize,
    pub mol: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionSchedule {
    events: Vec<CollisionEvent>,
    horizon: usize,
}

/// The canonical collision topologies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Each molecule collides once.
    Markov,
    /// Each molecule collides twice, overlapping with its nearest neighbour.
    Overlap,
    /// One molecule collides at every step.
    SingleMolecule,
    /// Each molecule collides twice, two steps apart, overlapping with its
    /// nearest and next-to-nearest neighbours.
    AdvancedOverlap,
}

impl Figure {
    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Markov => "1a",
            Figure::Overlap => "1b",
            Figure::SingleMolecule => "1d",
            Figure::AdvancedOverlap => "5",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1a" => Ok(Figure::Markov),
            "1b" => Ok(Figure::Overlap),
            "1d" => Ok(Figure::SingleMolecule),
            "5" => Ok(Figure::AdvancedOverlap),
            other => Err(Error::Parse(format!("unknown figure {other:?} (expected 1a, 1b, 1d or 5)"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleFile {
    Bare(Vec<CollisionEvent>),
    Wrapped { events: Vec<CollisionEvent>, horizon: Option<usize> },
}

#[derive(Serialize)]
struct ScheduleDocument<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    figure: Option<&'a str>,
    horizon: usize,
    satellite_count: usize,
    events: &'a [CollisionEvent],
}

impl CollisionSchedule {
    pub fn new(events: Vec<CollisionEvent>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidSchedule("horizon must be positive".into()));
        }
        let mut seen: BTreeMap<(i64, usize), ()> = BTreeMap::new();
        for e in &events {
            if e.t >= horizon {
                return Err(Error::InvalidSchedule(format!(
                    "event at t={} lies beyond the horizon {horizon}",
                    e.t
                )));
            }
            if seen.insert((e.mol, e.t), ()).is_some() {
                return Err(Error::InvalidSchedule(format!(
                    "molecule {} has two events at t={}",
                    e.mol, e.t
                )));
            }
        }
        Ok(Self { events, horizon })
    }

    /// Horizon is one past the last event.
    pub fn from_events(events: Vec<CollisionEvent>) -> Result<Self> {
        let horizon = events.iter().map(|e| e.t + 1).max().unwrap_or(0);
        Self::new(events, horizon)
    }

    /// Accepts a bare JSON list of `{"t", "mol"}` events or an object with an
    /// `events` list and an optional `horizon`.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: ScheduleFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("schedule: {e}")))?;
        match parsed {
            ScheduleFile::Bare(events) => Self::from_events(events),
            ScheduleFile::Wrapped { events, horizon: None } => Self::from_events(events),
            ScheduleFile::Wrapped { events, horizon: Some(h) } => Self::new(events, h),
        }
    }

    pub fn to_json(&self, figure: Option<Figure>) -> String {
        let doc = ScheduleDocument {
            figure: figure.map(Figure::as_str),
            horizon: self.horizon,
            satellite_count: self.satellite_count(),
            events: &self.events,
        };
        serde_json::to_string_pretty(&doc).expect("schedule serializes")
    }

    pub fn generate(figure: Figure, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidSchedule("horizon must be positive".into()));
        }
        let h = horizon as i64;
        let ev = |t: i64, mol: i64| CollisionEvent { t: t as usize, mol };
        let mut events = Vec::new();
        match figure {
            Figure::Markov => events.extend((0..h).map(|k| ev(k, k))),
            Figure::SingleMolecule => events.extend((0..h).map(|k| ev(k, 0))),
            Figure::Overlap => {
                for t in 0..h {
                    events.push(ev(t, t));
                    events.push(ev(t, t - 1));
                }
            }
            Figure::AdvancedOverlap => {
                for t in 0..h {
                    events.push(ev(t, t));
                    events.push(ev(t, t - 2));
                }
            }
        }
        Self::new(events, horizon)
    }

    pub fn events(&self) -> &[CollisionEvent] {
        &self.events
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Events at step `t`, in listed order.
    pub fn events_at(&self, t: usize) -> impl Iterator<Item = &CollisionEvent> {
        self.events.iter().filter(move |e| e.t == t)
    }

    /// Distinct molecule ids, ascending.
    pub fn molecules(&self) -> Vec<i64> {
        let mut ids: Vec<i64> = self.events.iter().map(|e| e.mol).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn preloaded_molecules(&self) -> Vec<i64> {
        self.molecules().into_iter().filter(|&m| m < 0).collect()
    }

    pub fn first_event(&self, mol: i64) -> Option<usize> {
        self.events.iter().filter(|e| e.mol == mol).map(|e| e.t).min()
    }

    pub fn last_event(&self, mol: i64) -> Option<usize> {
        self.events.iter().filter(|e| e.mol == mol).map(|e| e.t).max()
    }

    /// Size of the satellite memory: the largest number of molecules that sit
    /// between two of their collisions at any step boundary. Preloaded
    /// molecules count at the opening boundary.
    pub fn satellite_count(&self) -> usize {
        let mols = self.molecules();
        let spans: Vec<(i64, usize, usize)> = mols
            .iter()
            .map(|&m| (m, self.first_event(m).unwrap(), self.last_event(m).unwrap()))
            .collect();
        let opening = spans.iter().filter(|(m, _, _)| *m < 0).count();
        let inner = (0..self.horizon.saturating_sub(1))
            .map(|t| {
                spans
                    .iter()
                    .filter(|&&(m, first, last)| (m < 0 || first <= t) && last > t)
                    .count()
            })
            .max()
            .unwrap_or(0);
        opening.max(inner)
    }

    /// Molecules that collide at every step of a horizon of three or more.
    /// Nothing of them can be read out while the chain runs.
    pub fn persistent_molecules(&self) -> Vec<i64> {
        if self.horizon < 3 {
            return Vec::new();
        }
        self.molecules()
            .into_iter()
            .filter(|&m| (0..self.horizon).all(|t| self.events.iter().any(|e| e.mol == m && e.t == t)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satellite_counts_of_canonical_figures() {
        let count = |f| CollisionSchedule::generate(f, 12).unwrap().satellite_count();
        assert_eq!(count(Figure::Markov), 0);
        assert_eq!(count(Figure::Overlap), 1);
        assert_eq!(count(Figure::AdvancedOverlap), 2);
        assert_eq!(count(Figure::SingleMolecule), 1);
    }

    #[test]
    fn overlap_pattern_has_broken_opening() {
        let s = CollisionSchedule::generate(Figure::Overlap, 4).unwrap();
        assert_eq!(s.preloaded_molecules(), vec![-1]);
        assert_eq!(s.events_at(0).collect::<Vec<_>>(), vec![
            &CollisionEvent { t: 0, mol: 0 },
            &CollisionEvent { t: 0, mol: -1 }
        ]);
        assert_eq!(s.first_event(2), Some(2));
        assert_eq!(s.last_event(2), Some(3));
        assert_eq!(s.last_event(3), Some(3));
    }

    #[test]
    fn rejects_malformed_schedules() {
        let twice = vec![CollisionEvent { t: 1, mol: 0 }, CollisionEvent { t: 1, mol: 0 }];
        assert!(matches!(CollisionSchedule::from_events(twice), Err(Error::InvalidSchedule(_))));
        let late = vec![CollisionEvent { t: 5, mol: 0 }];
        assert!(matches!(CollisionSchedule::new(late, 3), Err(Error::InvalidSchedule(_))));
        assert!(CollisionSchedule::from_json("{\"nope\": 1}").is_err());
        assert!("7".parse::<Figure>().is_err());
    }

    #[test]
    fn json_round_trip_both_shapes() {
        let s = CollisionSchedule::generate(Figure::AdvancedOverlap, 6).unwrap();
        let doc = s.to_json(Some(Figure::AdvancedOverlap));
        assert!(doc.contains("\"satellite_count\": 2"));
        assert_eq!(CollisionSchedule::from_json(&doc).unwrap(), s);
        let bare = serde_json::to_string(s.events()).unwrap();
        assert_eq!(CollisionSchedule::from_json(&bare).unwrap(), s);
    }

    #[test]
    fn persistent_molecule_detection() {
        let d = CollisionSchedule::generate(Figure::SingleMolecule, 5).unwrap();
        assert_eq!(d.persistent_molecules(), vec![0]);
        let b = CollisionSchedule::generate(Figure::Overlap, 5).unwrap();
        assert!(b.persistent_molecules().is_empty());
    }
}
