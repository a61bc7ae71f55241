//! Synthetic household load traces at one-minute resolution.
//!
//! A household owns a subset of a catalog of appliances. Active appliances
//! can only be switched on while somebody in the household is active; the
//! occupancy itself is a two-state Markov chain stepped every 10 minutes
//! towards a diurnal target. Passive appliances run a duty cycle regardless
//! of occupancy. Lighting activations are weighted by darkness, which follows
//! a cosine model of day length over the year.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::error::{invalid, Error, Result};
use crate::math::{cos, pow, sqrt};
use crate::rng::SimRng;

pub const MINUTES_PER_DAY: u32 = 1440;
/// Resolution of diurnal weight vectors.
pub const WEIGHT_SLOTS: usize = 144;
const WEIGHT_SLOT_MINUTES: u32 = MINUTES_PER_DAY / WEIGHT_SLOTS as u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplianceClass {
    Active,
    Passive,
}

/// `watts` drawn for `minutes` consecutive minutes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub watts: f64,
    pub minutes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceSpec {
    name: String,
    class: ApplianceClass,
    profile: Vec<Segment>,
    /// Expected starts per day; for daylight-sensitive appliances, the
    /// rate at full darkness.
    activations_per_day: f64,
    weights: Vec<f64>,
    owner_probability: f64,
    daylight_sensitive: bool,
    jitter_minutes: u32,
    phase_minute: Option<u32>,
}

impl ApplianceSpec {
    /// `profile` is one activation (active) or one period of the duty cycle
    /// (passive, including its off segments). `weights` has one entry per
    /// 10-minute slot and is normalized here. `jitter_minutes` perturbs the
    /// length of the last segment of an activation, or the start of each
    /// cycle of a passive appliance. `phase_minute` pins the first cycle of a
    /// passive appliance; otherwise the phase is uniform.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        class: ApplianceClass,
        profile: Vec<Segment>,
        activations_per_day: f64,
        weights: Vec<f64>,
        owner_probability: f64,
        daylight_sensitive: bool,
        jitter_minutes: u32,
        phase_minute: Option<u32>,
    ) -> Result<Self> {
        if profile.is_empty() {
            return Err(invalid("profile", "needs at least one segment"));
        }
        if profile.iter().any(|s| !(s.watts.is_finite() && s.watts >= 0.0) || s.minutes == 0) {
            return Err(invalid("profile", "segments need nonnegative watts and positive length"));
        }
        if !(activations_per_day.is_finite() && activations_per_day >= 0.0) {
            return Err(invalid("activations_per_day", "must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&owner_probability) {
            return Err(invalid("owner_probability", "must lie in [0, 1]"));
        }
        if weights.len() != WEIGHT_SLOTS || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "need 144 nonnegative entries"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("weights", "must not all be zero"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        let period: u32 = profile.iter().map(|s| s.minutes).sum();
        if class == ApplianceClass::Passive && 2 * jitter_minutes >= period {
            return Err(invalid("jitter_minutes", "must be below half the cycle period"));
        }
        if phase_minute.is_some_and(|p| p >= period) {
            return Err(invalid("phase_minute", "must lie within the cycle"));
        }
        Ok(ApplianceSpec {
            name: name.into(),
            class,
            profile,
            activations_per_day,
            weights,
            owner_probability,
            daylight_sensitive,
            jitter_minutes,
            phase_minute,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> ApplianceClass {
        self.class
    }

    pub fn profile(&self) -> &[Segment] {
        &self.profile
    }

    pub fn activations_per_day(&self) -> f64 {
        self.activations_per_day
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn owner_probability(&self) -> f64 {
        self.owner_probability
    }

    pub fn daylight_sensitive(&self) -> bool {
        self.daylight_sensitive
    }

    pub fn jitter_minutes(&self) -> u32 {
        self.jitter_minutes
    }

    pub fn phase_minute(&self) -> Option<u32> {
        self.phase_minute
    }

    /// Profile length in minutes.
    pub fn period(&self) -> u32 {
        self.profile.iter().map(|s| s.minutes).sum()
    }
}

/// Diurnal weights from Gaussian bumps `(center hour, width hours, height)`
/// over a constant `floor`, wrapping around midnight.
pub fn diurnal_weights(peaks: &[(f64, f64, f64)], floor: f64) -> Vec<f64> {
    (0..WEIGHT_SLOTS)
        .map(|k| {
            let hour = (k as f64 + 0.5) / 6.0;
            let bumps: f64 = peaks
                .iter()
                .map(|&(center, width, height)| {
                    let mut d = (hour - center).abs();
                    if d > 12.0 {
                        d = 24.0 - d;
                    }
                    height * crate::math::exp(-0.5 * (d / width) * (d / width))
                })
                .sum();
            floor + bumps
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    appliances: Vec<ApplianceSpec>,
}

impl Catalog {
    pub fn new(appliances: Vec<ApplianceSpec>) -> Result<Self> {
        for (i, a) in appliances.iter().enumerate() {
            if appliances[..i].iter().any(|b| b.name == a.name) {
                return Err(invalid("catalog", "appliance names must be unique"));
            }
        }
        Ok(Catalog { appliances })
    }

    pub fn appliances(&self) -> &[ApplianceSpec] {
        &self.appliances
    }

    pub fn len(&self) -> usize {
        self.appliances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.appliances.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.appliances.iter().position(|a| a.name == name)
    }
}

/// A household; `owned` indexes into the catalog it was built from, in
/// catalog order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Household {
    pub id: u32,
    pub residents: u8,
    pub owned: Vec<usize>,
}

pub fn build_household<R: Rng + ?Sized>(catalog: &Catalog, id: u32, rng: &mut R) -> Result<Household> {
    if catalog.is_empty() {
        return Err(invalid("catalog", "must not be empty"));
    }
    let residents = rng.random_range(1..=5u8);
    let owned = catalog
        .appliances
        .iter()
        .enumerate()
        .filter(|(_, a)| rng.random::<f64>() < a.owner_probability)
        .map(|(i, _)| i)
        .collect();
    Ok(Household { id, residents, owned })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayType {
    Weekday,
    Weekend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayConfig {
    month: u8,
    day_type: DayType,
}

impl DayConfig {
    pub fn new(month: u8, day_type: DayType) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(invalid("month", "must lie in 1..=12"));
        }
        Ok(DayConfig { month, day_type })
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day_type(&self) -> DayType {
        self.day_type
    }
}

/// Hours of daylight in `month`, between about 7.6 h (mid-winter) and
/// 16.4 h (mid-summer).
pub fn day_length_hours(month: u8) -> f64 {
    let phase = 2.0 * core::f64::consts::PI * (month as f64 - 0.5) / 12.0;
    12.0 - 4.4 * cos(phase)
}

/// Darkness in `[0.1, 1]` for a minute of the day: 1 at night, 0.1 in full
/// daylight, with hour-long ramps around sunrise and sunset (solar noon at
/// 12:30).
pub fn darkness(month: u8, minute: u32) -> f64 {
    let half = day_length_hours(month) * 30.0;
    let from_noon = (minute as f64 + 0.5 - 750.0).abs();
    let t = ((half + 30.0 - from_noon) / 60.0).clamp(0.0, 1.0);
    1.0 - 0.9 * t
}

/// Target probability that somebody is active, before resident scaling.
fn occupancy_target(day: DayType, minute: u32) -> f64 {
    const WEEKDAY: [(f64, f64); 11] = [
        (0.0, 0.05),
        (5.5, 0.05),
        (7.0, 0.75),
        (8.5, 0.6),
        (9.5, 0.3),
        (16.0, 0.35),
        (18.0, 0.85),
        (21.5, 0.8),
        (23.0, 0.3),
        (24.0, 0.05),
        (24.0, 0.05),
    ];
    const WEEKEND: [(f64, f64); 11] = [
        (0.0, 0.08),
        (6.5, 0.05),
        (8.5, 0.7),
        (12.0, 0.75),
        (14.0, 0.6),
        (16.0, 0.65),
        (18.0, 0.85),
        (22.0, 0.8),
        (23.5, 0.3),
        (24.0, 0.08),
        (24.0, 0.08),
    ];
    let table = match day {
        DayType::Weekday => &WEEKDAY,
        DayType::Weekend => &WEEKEND,
    };
    let hour = minute as f64 / 60.0;
    for w in table.windows(2) {
        let ((h0, p0), (h1, p1)) = (w[0], w[1]);
        if hour >= h0 && hour < h1 {
            return p0 + (p1 - p0) * (hour - h0) / (h1 - h0);
        }
    }
    table[table.len() - 1].1
}

/// Occupancy target of a household with `residents` people: the chance that
/// at least one of them is active grows with the square root of the count.
pub fn occupancy_probability(residents: u8, day: DayType, minute: u32) -> f64 {
    let p = occupancy_target(day, minute);
    1.0 - pow(1.0 - p, sqrt(residents.max(1) as f64))
}

/// Rate at which the occupancy chain moves towards its target per step.
const OCCUPANCY_RATE: f64 = 0.3;

/// One occupancy flag per minute. The chain steps every 10 minutes with
/// `P(off→on) = r·p*` and `P(on→off) = r·(1−p*)`, whose stationary
/// distribution is the target `p*`.
pub fn simulate_occupancy<R: Rng + ?Sized>(residents: u8, day: DayType, rng: &mut R) -> Vec<bool> {
    let mut out = Vec::with_capacity(MINUTES_PER_DAY as usize);
    let mut on = rng.random::<f64>() < occupancy_probability(residents, day, 0);
    for step in 0..WEIGHT_SLOTS as u32 {
        let minute = step * WEIGHT_SLOT_MINUTES;
        if step > 0 {
            let p = occupancy_probability(residents, day, minute);
            let u = rng.random::<f64>();
            on = if on {
                u >= OCCUPANCY_RATE * (1.0 - p)
            } else {
                u < OCCUPANCY_RATE * p
            };
        }
        out.extend(core::iter::repeat_n(on, WEIGHT_SLOT_MINUTES as usize));
    }
    out
}

/// Constant draw of `watts` over `[start, start + minutes)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub start: u32,
    pub minutes: u32,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub appliance: String,
    pub class: ApplianceClass,
    /// Non-overlapping, in start order, within the day.
    pub runs: Vec<Run>,
}

impl Component {
    pub fn minutes(&self) -> Vec<f64> {
        let mut out = vec![0.0; MINUTES_PER_DAY as usize];
        add_runs(&mut out, &self.runs);
        out
    }

    pub fn energy_watt_minutes(&self) -> f64 {
        self.runs.iter().map(|r| r.watts * r.minutes as f64).sum()
    }
}

fn add_runs(out: &mut [f64], runs: &[Run]) {
    for r in runs {
        for v in &mut out[r.start as usize..(r.start + r.minutes) as usize] {
            *v += r.watts;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub household: u32,
    pub day: DayConfig,
    /// One per owned appliance, in catalog order.
    pub components: Vec<Component>,
}

impl Trace {
    /// Total draw per minute: the sum of all components.
    pub fn total_minutes(&self) -> Vec<f64> {
        let mut out = vec![0.0; MINUTES_PER_DAY as usize];
        for c in &self.components {
            add_runs(&mut out, &c.runs);
        }
        out
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.appliance == name)
    }
}

/// How occupancy is obtained when generating a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OccupancyMode {
    Modeled,
    /// Nobody, or somebody, active all day.
    Forced(bool),
}

pub fn generate_trace<R: Rng + ?Sized>(
    household: &Household,
    catalog: &Catalog,
    day: DayConfig,
    rng: &mut R,
) -> Result<Trace> {
    generate_trace_with(household, catalog, day, OccupancyMode::Modeled, rng)
}

/// Every appliance draws from its own child stream seeded from `rng`, and
/// the number of draws taken from `rng` does not depend on `occupancy`, so
/// passive components are identical across occupancy modes.
pub fn generate_trace_with<R: Rng + ?Sized>(
    household: &Household,
    catalog: &Catalog,
    day: DayConfig,
    occupancy: OccupancyMode,
    rng: &mut R,
) -> Result<Trace> {
    let occupancy_seed = rng.next_u64();
    let occupied = match occupancy {
        OccupancyMode::Modeled => {
            let mut r = SimRng::seed_from_u64(occupancy_seed);
            simulate_occupancy(household.residents, day.day_type, &mut r)
        }
        OccupancyMode::Forced(v) => vec![v; MINUTES_PER_DAY as usize],
    };
    let mut components = Vec::with_capacity(household.owned.len());
    for &idx in &household.owned {
        let spec = catalog
            .appliances
            .get(idx)
            .ok_or(invalid("household", "owns an appliance missing from the catalog"))?;
        let mut r = SimRng::seed_from_u64(rng.next_u64());
        let runs = match spec.class {
            ApplianceClass::Active => active_runs(spec, household.residents, day, &occupied, &mut r),
            ApplianceClass::Passive => passive_runs(spec, &mut r),
        };
        components.push(Component {
            appliance: spec.name.clone(),
            class: spec.class,
            runs,
        });
    }
    Ok(Trace {
        household: household.id,
        day,
        components,
    })
}

/// Appends the runs of one activation starting at `start`, clipped at
/// midnight; returns the minute after the activation.
fn push_activation(runs: &mut Vec<Run>, profile: &[Segment], last_len: u32, start: u32) -> u32 {
    let mut t = start;
    for (k, seg) in profile.iter().enumerate() {
        let len = if k + 1 == profile.len() { last_len } else { seg.minutes };
        let end = (t + len).min(MINUTES_PER_DAY);
        if end > t && seg.watts > 0.0 {
            match runs.last_mut() {
                Some(r) if r.start + r.minutes == t && r.watts == seg.watts => r.minutes += end - t,
                _ => runs.push(Run {
                    start: t,
                    minutes: end - t,
                    watts: seg.watts,
                }),
            }
        }
        t = end;
        if t >= MINUTES_PER_DAY {
            break;
        }
    }
    t
}

fn jittered(base: u32, jitter: u32, rng: &mut impl Rng) -> i64 {
    if jitter == 0 {
        base as i64
    } else {
        base as i64 + rng.random_range(-(jitter as i64)..=jitter as i64)
    }
}

fn active_runs(spec: &ApplianceSpec, residents: u8, day: DayConfig, occupied: &[bool], rng: &mut SimRng) -> Vec<Run> {
    let mut runs = Vec::new();
    if spec.activations_per_day <= 0.0 {
        return runs;
    }
    let mut weights: Vec<f64> = spec.weights.clone();
    if spec.daylight_sensitive {
        for (k, w) in weights.iter_mut().enumerate() {
            *w *= darkness(day.month, k as u32 * WEIGHT_SLOT_MINUTES + WEIGHT_SLOT_MINUTES / 2);
        }
    }
    let last = spec.profile[spec.profile.len() - 1].minutes;
    let mut busy_until = 0;
    for minute in 0..MINUTES_PER_DAY {
        if minute < busy_until || !occupied[minute as usize] {
            continue;
        }
        let slot = (minute / WEIGHT_SLOT_MINUTES) as usize;
        // Starts per occupied minute, so that the expected number of starts
        // per day is about `activations_per_day` under the modeled occupancy.
        let p_occ = occupancy_probability(residents, day.day_type, minute).max(0.05);
        let p = spec.activations_per_day * weights[slot] / WEIGHT_SLOT_MINUTES as f64 / p_occ;
        if rng.random::<f64>() < p {
            let last_len = jittered(last, spec.jitter_minutes, rng).max(1) as u32;
            busy_until = push_activation(&mut runs, &spec.profile, last_len, minute);
        }
    }
    runs
}

fn passive_runs(spec: &ApplianceSpec, rng: &mut SimRng) -> Vec<Run> {
    let period = spec.period() as i64;
    let phase = match spec.phase_minute {
        Some(p) => p as i64,
        None => rng.random_range(0..period),
    };
    let mut runs = Vec::new();
    // Cycle k nominally starts at phase + k·period; the cycle overlapping
    // midnight from the previous day is included.
    let mut k = -((phase + period - 1) / period) - 1;
    let mut prev_end = i64::MIN;
    loop {
        let nominal = phase + k * period;
        if nominal - spec.jitter_minutes as i64 >= MINUTES_PER_DAY as i64 {
            break;
        }
        let start = jittered(0, spec.jitter_minutes, rng) + nominal;
        let start = start.max(prev_end);
        k += 1;
        let end = start + period;
        prev_end = end;
        if end <= 0 || start >= MINUTES_PER_DAY as i64 {
            continue;
        }
        // Walk the profile from `start`, keeping the part inside the day.
        let mut t = start;
        for seg in &spec.profile {
            let len = seg.minutes as i64;
            let (a, b) = (t.max(0), (t + len).min(MINUTES_PER_DAY as i64));
            if b > a && seg.watts > 0.0 {
                runs.push(Run {
                    start: a as u32,
                    minutes: (b - a) as u32,
                    watts: seg.watts,
                });
            }
            t += len;
        }
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    /// Mean watts over the slot.
    Mean,
    /// Watt-minutes over the slot.
    Sum,
}

/// Aggregates a per-minute series into slots of `tp` minutes.
pub fn resample(minutes: &[f64], tp: u32, mode: ResampleMode) -> Result<Vec<f64>> {
    if tp == 0 || !minutes.len().is_multiple_of(tp as usize) {
        return Err(invalid("tp", "the slot period must divide the series length"));
    }
    Ok(minutes
        .chunks_exact(tp as usize)
        .map(|c| {
            let s: f64 = c.iter().sum();
            match mode {
                ResampleMode::Mean => s / tp as f64,
                ResampleMode::Sum => s,
            }
        })
        .collect())
}

/// First and last slot in which an appliance draws power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activation {
    /// Slot index counted from midnight, starting at 0.
    pub start: usize,
    /// `last - start`, so the signature spans `duration + 1` slots.
    pub duration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceSeries {
    pub slots: Vec<f64>,
    pub activation: Option<Activation>,
}

/// Activation span of a slot series; `None` when it is all zero.
pub fn activation_span(slots: &[f64]) -> Option<Activation> {
    let first = slots.iter().position(|&v| v > 0.0)?;
    let last = slots.iter().rposition(|&v| v > 0.0)?;
    Some(Activation {
        start: first,
        duration: last - first,
    })
}

/// The series of one owned appliance in `tp`-minute slots (mean watts).
pub fn appliance_component(trace: &Trace, name: &str, tp: u32) -> Result<ApplianceSeries> {
    let c = trace.component(name).ok_or_else(|| Error::UnknownAppliance(name.into()))?;
    let slots = resample(&c.minutes(), tp, ResampleMode::Mean)?;
    let activation = activation_span(&slots);
    Ok(ApplianceSeries { slots, activation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn flat() -> Vec<f64> {
        vec![1.0; WEIGHT_SLOTS]
    }

    fn fridge(jitter: u32) -> ApplianceSpec {
        let profile = vec![Segment { watts: 100.0, minutes: 20 }, Segment { watts: 0.0, minutes: 40 }];
        ApplianceSpec::new("fridge", ApplianceClass::Passive, profile, 0.0, flat(), 1.0, false, jitter, None).unwrap()
    }

    fn kettle() -> ApplianceSpec {
        let profile = vec![Segment { watts: 2000.0, minutes: 3 }];
        ApplianceSpec::new("kettle", ApplianceClass::Active, profile, 6.0, flat(), 1.0, false, 1, None).unwrap()
    }

    #[test]
    fn fridge_energy_without_jitter_is_exact() {
        let cat = Catalog::new(vec![fridge(0)]).unwrap();
        let mut rng = seeded(1);
        for id in 0..20 {
            let h = build_household(&cat, id, &mut rng).unwrap();
            let t = generate_trace(&h, &cat, DayConfig::new(11, DayType::Weekday).unwrap(), &mut rng).unwrap();
            assert_eq!(t.components[0].energy_watt_minutes(), 100.0 * 480.0);
        }
    }

    #[test]
    fn resample_rules() {
        let x: Vec<f64> = (0..1440).map(|i| i as f64).collect();
        assert_eq!(resample(&x, 1, ResampleMode::Mean).unwrap(), x);
        let c = vec![100.0; 1440];
        assert!(resample(&c, 10, ResampleMode::Mean).unwrap().iter().all(|&v| v == 100.0));
        let s = resample(&x, 10, ResampleMode::Sum).unwrap();
        assert_eq!(s.iter().sum::<f64>(), x.iter().sum::<f64>());
        assert!(resample(&x, 7, ResampleMode::Mean).is_err());
    }

    #[test]
    fn forced_vacancy_silences_active_class() {
        let cat = Catalog::new(vec![kettle(), fridge(5)]).unwrap();
        let h = Household { id: 0, residents: 3, owned: vec![0, 1] };
        let day = DayConfig::new(11, DayType::Weekday).unwrap();
        let a = generate_trace_with(&h, &cat, day, OccupancyMode::Forced(false), &mut seeded(4)).unwrap();
        let b = generate_trace_with(&h, &cat, day, OccupancyMode::Modeled, &mut seeded(4)).unwrap();
        assert!(a.components[0].runs.is_empty());
        assert!(!b.components[0].runs.is_empty());
        assert_eq!(a.components[1], b.components[1]);
    }

    #[test]
    fn activation_span_from_slots() {
        assert_eq!(activation_span(&[0.0, 0.0]), None);
        assert_eq!(activation_span(&[0.0, 1.0, 0.0, 2.0, 0.0]), Some(Activation { start: 1, duration: 2 }));
    }

    #[test]
    fn daylight_is_shorter_in_winter() {
        assert!(day_length_hours(12) < 8.0 && day_length_hours(6) > 16.0);
        assert_eq!(darkness(11, 0), 1.0);
        assert!((darkness(11, 750) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let p = vec![Segment { watts: -1.0, minutes: 1 }];
        assert!(ApplianceSpec::new("x", ApplianceClass::Active, p, 1.0, flat(), 1.0, false, 0, None).is_err());
        let p = vec![Segment { watts: 1.0, minutes: 1 }];
        assert!(ApplianceSpec::new("x", ApplianceClass::Active, p.clone(), 1.0, vec![1.0; 3], 1.0, false, 0, None).is_err());
        assert!(ApplianceSpec::new("x", ApplianceClass::Active, p, 1.0, flat(), 1.5, false, 0, None).is_err());
        assert!(build_household(&Catalog::default(), 0, &mut seeded(0)).is_err());
        assert!(Catalog::new(vec![kettle(), kettle()]).is_err());
    }
}
