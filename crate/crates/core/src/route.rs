//! Route specification over an ordered chain of road sections.
//!
//! A route covers a contiguous run of sections; within each covered section
//! every lane carries an on-route flag. Lanes are indexed from the right
//! edge of the road toward the left.

use alloc::vec;
use alloc::vec::Vec;

/// Per-lane on-route flags for a contiguous run of sections.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteSpec {
    /// First section the route covers.
    pub start_section: usize,
    /// `lanes[i][j]` is true when lane `j` of section `start_section + i`
    /// is part of the route.
    pub lanes: Vec<Vec<bool>>,
}

/// Error for queries outside the route's coverage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionOutsideRoute {
    pub section: usize,
}

impl core::fmt::Display for SectionOutsideRoute {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "section {} is outside the route", self.section)
    }
}

impl core::error::Error for SectionOutsideRoute {}

impl RouteSpec {
    /// A route that covers `sections` sections of `lanes` lanes each, with
    /// every lane on-route. Useful for closed networks without routing.
    pub fn all_lanes(sections: usize, lanes: usize) -> Self {
        Self {
            start_section: 0,
            lanes: vec![vec![true; lanes]; sections],
        }
    }

    pub fn covers(&self, section: usize) -> bool {
        section >= self.start_section && section < self.start_section + self.lanes.len()
    }

    /// Last section the route covers.
    pub fn end_section(&self) -> usize {
        self.start_section + self.lanes.len() - 1
    }

    pub fn is_on_route(&self, section: usize, lane: usize) -> Result<bool, SectionOutsideRoute> {
        let flags = self
            .lane_flags(section)
            .ok_or(SectionOutsideRoute { section })?;
        Ok(flags.get(lane).copied().unwrap_or(false))
    }

    fn lane_flags(&self, section: usize) -> Option<&Vec<bool>> {
        if !self.covers(section) {
            return None;
        }
        self.lanes.get(section - self.start_section)
    }

    /// Minimal number of single-lane moves within `section` needed to reach
    /// an on-route lane from `lane`. Zero when already on-route.
    pub fn lane_changes_needed(
        &self,
        section: usize,
        lane: usize,
    ) -> Result<u32, SectionOutsideRoute> {
        let flags = self
            .lane_flags(section)
            .ok_or(SectionOutsideRoute { section })?;
        let mut best = u32::MAX;
        for (k, on) in flags.iter().enumerate() {
            if *on {
                let dist = lane.abs_diff(k) as u32;
                best = best.min(dist);
            }
        }
        debug_assert!(best != u32::MAX, "route section without on-route lanes");
        Ok(best)
    }

    /// Direction of the nearest on-route lane, when the current lane is not
    /// on-route. Ties prefer the left (higher index).
    pub fn direction_to_route(
        &self,
        section: usize,
        lane: usize,
    ) -> Result<Option<crate::action::LaneChange>, SectionOutsideRoute> {
        let flags = self
            .lane_flags(section)
            .ok_or(SectionOutsideRoute { section })?;
        if flags.get(lane).copied().unwrap_or(false) {
            return Ok(None);
        }
        let mut best: Option<(u32, usize)> = None;
        for (k, on) in flags.iter().enumerate() {
            if *on {
                let dist = lane.abs_diff(k) as u32;
                let better = match best {
                    None => true,
                    Some((bd, bk)) => dist < bd || (dist == bd && k > bk),
                };
                if better {
                    best = Some((dist, k));
                }
            }
        }
        Ok(best.map(|(_, k)| {
            if k > lane {
                crate::action::LaneChange::Left
            } else {
                crate::action::LaneChange::Right
            }
        }))
    }
}
