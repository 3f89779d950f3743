//! Reduction of time-tag streams to singles, coincidences and g².

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{Channel, TimeTag, TimeTagStream};
use crate::error::{Error, Result};
use crate::model::ClickCounts;

/// Pulse-locked coincidence bins.
///
/// Bin `k` covers `[k·T − w/2, k·T − w/2 + w)` for `k = 1..=n_bins`, where
/// `n_bins` counts the bins lying entirely inside `[0, duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinGrid {
    period_ps: u64,
    width_ps: u64,
    lead_ps: u64,
    n_bins: u64,
}

impl BinGrid {
    pub fn new(bin_width_ps: u64, pulse_period_ps: u64, duration_ps: u64) -> Self {
        let lead_ps = bin_width_ps / 2;
        let trail = bin_width_ps - lead_ps;
        let n_bins = duration_ps.checked_sub(trail).map_or(0, |d| d / pulse_period_ps);
        BinGrid {
            period_ps: pulse_period_ps,
            width_ps: bin_width_ps,
            lead_ps,
            n_bins,
        }
    }

    pub fn n_bins(&self) -> u64 {
        self.n_bins
    }

    /// Index of the bin containing `time_ps`, if any.
    #[inline]
    pub fn bin_of(&self, time_ps: u64) -> Option<u64> {
        let shifted = time_ps + self.lead_ps;
        let k = shifted / self.period_ps;
        let offset = shifted - k * self.period_ps;
        (offset < self.width_ps && k >= 1 && k <= self.n_bins).then_some(k)
    }
}

fn check_bin_args(bin_width_ps: u64, pulse_period_ps: u64) -> Result<()> {
    if bin_width_ps == 0 || bin_width_ps > pulse_period_ps {
        return Err(Error::InvalidArgument(format!(
            "bin width {bin_width_ps} ps must be in (0, {pulse_period_ps}] ps"
        )));
    }
    Ok(())
}

#[derive(Default, Clone, Copy)]
struct Tally {
    signal: u64,
    herald: u64,
    coincidences: u64,
}

impl Tally {
    fn merge(self, other: Tally) -> Tally {
        Tally {
            signal: self.signal + other.signal,
            herald: self.herald + other.herald,
            coincidences: self.coincidences + other.coincidences,
        }
    }
}

/// Single pass over sorted tags; order must be checked by the caller.
fn tally(tags: &[TimeTag], grid: &BinGrid) -> Tally {
    let mut out = Tally::default();
    let mut current = None;
    let (mut s, mut h) = (false, false);
    for tag in tags {
        let Some(k) = grid.bin_of(tag.time_ps) else {
            continue;
        };
        if current != Some(k) {
            out.signal += s as u64;
            out.herald += h as u64;
            out.coincidences += (s && h) as u64;
            current = Some(k);
            s = false;
            h = false;
        }
        match tag.channel {
            Channel::Signal => s = true,
            Channel::Herald => h = true,
        }
    }
    out.signal += s as u64;
    out.herald += h as u64;
    out.coincidences += (s && h) as u64;
    out
}

fn check_sorted(tags: &[TimeTag]) -> Result<()> {
    match tags.windows(2).position(|w| w[0] > w[1]) {
        Some(i) => Err(Error::UnsortedStream { index: i + 1 }),
        None => Ok(()),
    }
}

fn into_counts(t: Tally, grid: &BinGrid) -> ClickCounts {
    ClickCounts {
        n_pulses: grid.n_bins(),
        n_signal_clicks: t.signal,
        n_herald_clicks: t.herald,
        n_coincidences: t.coincidences,
        target_in: false,
    }
}

/// Click tallies over the pulse-locked bins of `stream`. Several tags of
/// one channel in a bin count once; tags between bins are ignored.
/// `target_in` of the result is left `false` for the caller to set.
pub fn bin_and_count(stream: &TimeTagStream, bin_width_ps: u64, pulse_period_ps: u64) -> Result<ClickCounts> {
    bin_and_count_tags(stream.tags(), stream.duration_ps(), bin_width_ps, pulse_period_ps)
}

/// [`bin_and_count`] over a raw tag slice, which may be unsorted.
pub fn bin_and_count_tags(
    tags: &[TimeTag],
    duration_ps: u64,
    bin_width_ps: u64,
    pulse_period_ps: u64,
) -> Result<ClickCounts> {
    check_bin_args(bin_width_ps, pulse_period_ps)?;
    check_sorted(tags)?;
    let grid = BinGrid::new(bin_width_ps, pulse_period_ps, duration_ps);
    Ok(into_counts(tally(tags, &grid), &grid))
}

/// [`bin_and_count`] over `chunks` pieces reduced in parallel. Chunks are
/// cut between bins so no bin is split.
pub fn bin_and_count_parallel(
    stream: &TimeTagStream,
    bin_width_ps: u64,
    pulse_period_ps: u64,
    chunks: usize,
) -> Result<ClickCounts> {
    check_bin_args(bin_width_ps, pulse_period_ps)?;
    let tags = stream.tags();
    let grid = BinGrid::new(bin_width_ps, pulse_period_ps, stream.duration_ps());
    let chunks = chunks.max(1);
    let step = tags.len().div_ceil(chunks).max(1);

    let mut cuts = vec![0usize];
    let mut at = step;
    while at < tags.len() {
        // Advance past every tag sharing the bin of the tag just before the cut.
        let prev_bin = grid.bin_of(tags[at - 1].time_ps);
        while at < tags.len() && prev_bin.is_some() && grid.bin_of(tags[at].time_ps) == prev_bin {
            at += 1;
        }
        if at < tags.len() {
            cuts.push(at);
        }
        at += step;
    }
    cuts.push(tags.len());

    let pieces: Vec<&[TimeTag]> = cuts.windows(2).map(|w| &tags[w[0]..w[1]]).collect();
    let total = pieces
        .par_iter()
        .map(|piece| check_sorted(piece).map(|_| tally(piece, &grid)))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    // Order across cut points.
    for w in cuts.windows(2).skip(1) {
        if w[0] > 0 && w[0] < tags.len() && tags[w[0] - 1] > tags[w[0]] {
            return Err(Error::UnsortedStream { index: w[0] });
        }
    }
    Ok(into_counts(total, &grid))
}

/// Signal–herald pairs with `|Δt| ≤ half_window_ps`, matched greedily in
/// time order. Each tag joins at most one pair; an arriving tag pairs with
/// the earliest unmatched tag of the other channel still in range. Greedy
/// matching is deterministic but not always maximal.
pub fn windowed_coincidences(stream: &TimeTagStream, half_window_ps: u64) -> Result<u64> {
    windowed_coincidences_tags(stream.tags(), half_window_ps)
}

/// [`windowed_coincidences`] over a raw tag slice, which may be unsorted.
pub fn windowed_coincidences_tags(tags: &[TimeTag], half_window_ps: u64) -> Result<u64> {
    check_sorted(tags)?;
    let mut pending_signal: VecDeque<u64> = VecDeque::new();
    let mut pending_herald: VecDeque<u64> = VecDeque::new();
    let mut count = 0u64;
    for tag in tags {
        let (mine, other) = match tag.channel {
            Channel::Signal => (&mut pending_signal, &mut pending_herald),
            Channel::Herald => (&mut pending_herald, &mut pending_signal),
        };
        while other.front().is_some_and(|&t| tag.time_ps - t > half_window_ps) {
            other.pop_front();
        }
        if other.pop_front().is_some() {
            count += 1;
        } else {
            mine.push_back(tag.time_ps);
        }
    }
    Ok(count)
}

/// Two-mode second-order coherence estimated from click tallies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Estimate {
    pub value: f64,
    pub std_err: f64,
    pub p_s: f64,
    pub p_h: f64,
    pub p_sh: f64,
}

/// g² = P_sh / (P_s · P_h) from per-bin click frequencies. The standard
/// error propagates independent Poisson errors on the three counts to
/// first order; with no coincidences a single count stands in.
pub fn estimate_g2(counts: &ClickCounts) -> Result<G2Estimate> {
    if counts.n_pulses == 0 || counts.n_signal_clicks == 0 || counts.n_herald_clicks == 0 {
        return Err(Error::Undefined("g2 undefined: zero singles on a channel"));
    }
    let (p_s, p_h, p_sh) = counts.frequencies();
    let value = p_sh / (p_s * p_h);
    let s = counts.n_signal_clicks as f64;
    let h = counts.n_herald_clicks as f64;
    let c = counts.n_coincidences as f64;
    let std_err = if c > 0.0 {
        value * (1.0 / c + 1.0 / s + 1.0 / h).sqrt()
    } else {
        counts.n_pulses as f64 / (s * h)
    };
    Ok(G2Estimate {
        value,
        std_err,
        p_s,
        p_h,
        p_sh,
    })
}
