//! Road model: an ordered chain of sections, each with a lane count, plus
//! lane connectivity across section boundaries.
//!
//! Lanes are indexed from the right edge toward the left. Connectivity
//! expresses off-ramp forks (a lane that exits the network) and merge-lane
//! drops (a lane that ends). The chain is either open or closes into a ring.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Ring,
    Open,
}

/// Where a lane leads across the boundary after its section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaneLink {
    /// Continues as the given lane of the next section.
    To(usize),
    /// Leaves the network (off-ramp mouth or network end).
    Exit,
    /// The lane ends; there is a wall-like terminus vehicles must not cross.
    Drop,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Section {
    pub length: f64,
    pub lanes: usize,
}

#[derive(Clone, Debug)]
pub struct RoadNetwork {
    sections: Vec<Section>,
    topology: Topology,
    /// `succ[k][lane]`: link across the boundary after section `k`.
    succ: Vec<Vec<LaneLink>>,
    /// `pred[k][lane]`: lane of the previous section feeding `(k, lane)`.
    pred: Vec<Vec<Option<usize>>>,
    /// Chain offset of each section start.
    offsets: Vec<f64>,
    total: f64,
}

impl RoadNetwork {
    fn build(sections: Vec<Section>, topology: Topology, succ: Vec<Vec<LaneLink>>) -> Self {
        let n = sections.len();
        assert_eq!(succ.len(), n);
        for (k, s) in sections.iter().enumerate() {
            assert!(s.length > 0.0 && s.lanes > 0);
            assert_eq!(succ[k].len(), s.lanes);
        }
        let mut pred: Vec<Vec<Option<usize>>> =
            sections.iter().map(|s| vec![None; s.lanes]).collect();
        for k in 0..n {
            let next = match topology {
                Topology::Ring => Some((k + 1) % n),
                Topology::Open => (k + 1 < n).then_some(k + 1),
            };
            if let Some(m) = next {
                for (lane, link) in succ[k].iter().enumerate() {
                    if let LaneLink::To(t) = link {
                        assert!(*t < sections[m].lanes, "link out of range");
                        pred[m][*t] = Some(lane);
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(n);
        let mut total = 0.0;
        for s in &sections {
            offsets.push(total);
            total += s.length;
        }
        Self {
            sections,
            topology,
            succ,
            pred,
            offsets,
            total,
        }
    }

    /// Closed loop of identical sections; lanes continue straight through.
    pub fn ring(section_length: f64, sections: usize, lanes: usize) -> Self {
        let secs = vec![
            Section {
                length: section_length,
                lanes,
            };
            sections
        ];
        let succ = vec![(0..lanes).map(LaneLink::To).collect(); sections];
        Self::build(secs, Topology::Ring, succ)
    }

    /// Open chain of identical sections; vehicles leave at the far end.
    pub fn straight(section_length: f64, sections: usize, lanes: usize) -> Self {
        let secs = vec![
            Section {
                length: section_length,
                lanes,
            };
            sections
        ];
        let mut succ: Vec<Vec<LaneLink>> =
            vec![(0..lanes).map(LaneLink::To).collect(); sections];
        if let Some(last) = succ.last_mut() {
            for link in last.iter_mut() {
                *link = LaneLink::Exit;
            }
        }
        Self::build(secs, Topology::Open, succ)
    }

    /// Abstract freeway: a 3-lane mainline with one off-ramp fork and one
    /// on-ramp whose merge lane drops.
    ///
    /// Sections: approach (3 lanes), exit section (4 lanes, lane 0 leaves at
    /// the fork), link (3 lanes), merge section (4 lanes, lane 0 ends at the
    /// lane drop), exit leg (3 lanes).
    pub fn freeway(lengths: [f64; 5]) -> Self {
        let lanes = [3usize, 4, 3, 4, 3];
        let secs: Vec<Section> = lengths
            .iter()
            .zip(lanes.iter())
            .map(|(&length, &lanes)| Section { length, lanes })
            .collect();
        let succ = vec![
            // approach → exit section: a new exit lane appears on the right
            vec![LaneLink::To(1), LaneLink::To(2), LaneLink::To(3)],
            // exit section → link: lane 0 leaves through the off-ramp
            vec![
                LaneLink::Exit,
                LaneLink::To(0),
                LaneLink::To(1),
                LaneLink::To(2),
            ],
            // link → merge section: the merge lane appears on the right
            vec![LaneLink::To(1), LaneLink::To(2), LaneLink::To(3)],
            // merge section → exit leg: the merge lane drops
            vec![
                LaneLink::Drop,
                LaneLink::To(0),
                LaneLink::To(1),
                LaneLink::To(2),
            ],
            // network end
            vec![LaneLink::Exit, LaneLink::Exit, LaneLink::Exit],
        ];
        Self::build(secs, Topology::Open, succ)
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn section(&self, k: usize) -> &Section {
        &self.sections[k]
    }

    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    pub fn is_ring(&self) -> bool {
        self.topology == Topology::Ring
    }

    pub fn next_section(&self, k: usize) -> Option<usize> {
        match self.topology {
            Topology::Ring => Some((k + 1) % self.sections.len()),
            Topology::Open => (k + 1 < self.sections.len()).then_some(k + 1),
        }
    }

    pub fn prev_section(&self, k: usize) -> Option<usize> {
        match self.topology {
            Topology::Ring => Some((k + self.sections.len() - 1) % self.sections.len()),
            Topology::Open => k.checked_sub(1),
        }
    }

    pub fn link(&self, section: usize, lane: usize) -> LaneLink {
        self.succ[section][lane]
    }

    pub fn feeder(&self, section: usize, lane: usize) -> Option<usize> {
        self.pred[section][lane]
    }

    /// Total chain length (the circumference on a ring).
    pub fn total_length(&self) -> f64 {
        self.total
    }

    /// Chain offset of a section start.
    pub fn offset(&self, section: usize) -> f64 {
        self.offsets[section]
    }

    /// Map a chain position to (section, position within section).
    pub fn locate(&self, chain_pos: f64) -> (usize, f64) {
        let mut p = chain_pos;
        if self.is_ring() {
            p %= self.total;
            if p < 0.0 {
                p += self.total;
            }
        }
        for (k, s) in self.sections.iter().enumerate() {
            if p < s.length || k + 1 == self.sections.len() {
                return (k, p);
            }
            p -= s.length;
        }
        unreachable!()
    }
}

/// Default section lengths for the abstract freeway.
pub const DEFAULT_FREEWAY_LENGTHS: [f64; 5] = [500.0, 500.0, 500.0, 500.0, 500.0];

/// Declarative network description, resolved by [`NetworkSpec::build`].
#[derive(Clone, Debug, PartialEq)]
pub enum NetworkSpec {
    Ring {
        section_length: f64,
        sections: usize,
        lanes: usize,
    },
    Straight {
        section_length: f64,
        sections: usize,
        lanes: usize,
    },
    Freeway {
        lengths: [f64; 5],
    },
}

impl NetworkSpec {
    pub fn build(&self) -> RoadNetwork {
        match self {
            NetworkSpec::Ring {
                section_length,
                sections,
                lanes,
            } => RoadNetwork::ring(*section_length, *sections, *lanes),
            NetworkSpec::Straight {
                section_length,
                sections,
                lanes,
            } => RoadNetwork::straight(*section_length, *sections, *lanes),
            NetworkSpec::Freeway { lengths } => RoadNetwork::freeway(*lengths),
        }
    }
}
