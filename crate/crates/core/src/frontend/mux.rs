//! Time-division multiplexed acquisition of the sensor array.

use crate::error::{Error, Result};
use crate::membrane::Membrane;
use crate::scene::{element_pressure, ArrayLayout, PressureScene};

use super::{charge_input, Modulator, ModulatorConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuxSchedule {
    pub element_order: Vec<usize>,
    /// Modulator clocks spent on each element per visit.
    pub dwell: usize,
    /// Clocks tagged invalid after every switch.
    pub blanking: usize,
}

impl Default for MuxSchedule {
    fn default() -> Self {
        Self {
            element_order: vec![0, 1, 2, 3],
            // 280 ms revolution: incommensurate with common beat periods, so
            // every element sees every pulse phase over a few seconds
            dwell: 128 * 70,
            blanking: 256,
        }
    }
}

impl MuxSchedule {
    pub fn single(element: usize, dwell: usize) -> Self {
        Self {
            element_order: vec![element],
            dwell,
            blanking: 0,
        }
    }

    pub fn validate(&self, elements: usize) -> Result<()> {
        if self.element_order.is_empty() {
            return Err(Error::param("element_order", "must not be empty"));
        }
        if self.dwell <= self.blanking {
            return Err(Error::param("dwell", "must exceed blanking"));
        }
        if let Some(&bad) = self.element_order.iter().find(|&&e| e >= elements) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: elements,
            });
        }
        Ok(())
    }
}

/// One contiguous visit of the multiplexer on an element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSegment {
    pub element: usize,
    /// Index of the first bit on the global modulator clock.
    pub start: u64,
    pub bits: Vec<i8>,
    /// Leading bits that are invalid (settling after a switch).
    pub blanking: usize,
}

impl ScanSegment {
    pub fn is_valid(&self, i: usize) -> bool {
        i >= self.blanking
    }

    pub fn valid_bits(&self) -> usize {
        self.bits.len().saturating_sub(self.blanking)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanCapture {
    pub sample_rate: u64,
    pub segments: Vec<ScanSegment>,
}

impl ScanCapture {
    /// Distinct elements in order of first appearance.
    pub fn elements(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for s in &self.segments {
            if !out.contains(&s.element) {
                out.push(s.element);
            }
        }
        out
    }

    pub fn segments_for(&self, element: usize) -> impl Iterator<Item = &ScanSegment> {
        self.segments.iter().filter(move |s| s.element == element)
    }
}

/// Modulator inputs evaluated on the scene waveform's own time grid. Arterial
/// pressure is band-limited far below the modulator clock, so the physics is
/// evaluated at the scene rate and linearly interpolated to the clock.
struct InputTable {
    rate: f64,
    per_element: Vec<Vec<f64>>,
}

impl InputTable {
    fn build(
        scene: &PressureScene,
        layout: &ArrayLayout,
        membrane: &Membrane,
        config: &ModulatorConfig,
        elements: &[usize],
    ) -> Result<Self> {
        scene.validate()?;
        membrane.validate()?;
        layout.validate(membrane.geometry.side_length)?;
        let rate = scene.waveform.sample_rate_hz;
        let n = scene.waveform.samples.len();
        let mut per_element = vec![Vec::new(); layout.len()];
        for &e in elements {
            if !per_element[e].is_empty() {
                continue;
            }
            let mut xs = Vec::with_capacity(n);
            for k in 0..n {
                let t = k as f64 / rate;
                let p = element_pressure(scene, layout, e, t)?;
                let cs = membrane
                    .capacitance_at(p)
                    .map_err(|source| Error::ContactAt {
                        element: e,
                        time_s: t,
                        source: Box::new(source),
                    })?;
                xs.push(charge_input(cs, config)?);
            }
            per_element[e] = xs;
        }
        Ok(Self { rate, per_element })
    }

    fn x_at(&self, element: usize, t: f64) -> f64 {
        let xs = &self.per_element[element];
        let pos = t * self.rate;
        let i = pos.floor() as usize;
        if i + 1 >= xs.len() {
            return *xs.last().unwrap_or(&0.0);
        }
        let frac = pos - i as f64;
        xs[i] + frac * (xs[i + 1] - xs[i])
    }
}

/// Normalized modulator input for one element at every modulator clock.
pub fn element_input_series(
    scene: &PressureScene,
    layout: &ArrayLayout,
    membrane: &Membrane,
    config: &ModulatorConfig,
    element: usize,
    n_samples: usize,
) -> Result<Vec<f64>> {
    if element >= layout.len() {
        return Err(Error::IndexOutOfRange {
            index: element,
            len: layout.len(),
        });
    }
    let table = InputTable::build(scene, layout, membrane, config, &[element])?;
    let fs = config.sample_rate as f64;
    Ok((0..n_samples)
        .map(|n| table.x_at(element, n as f64 / fs))
        .collect())
}

/// Round-robin acquisition over `duration_s`. The modulator integrators are
/// reset whenever the multiplexer moves to a different element and the
/// first `schedule.blanking` bits of that visit are tagged invalid.
pub fn scan(
    scene: &PressureScene,
    layout: &ArrayLayout,
    membrane: &Membrane,
    schedule: &MuxSchedule,
    config: &ModulatorConfig,
    duration_s: f64,
) -> Result<ScanCapture> {
    schedule.validate(layout.len())?;
    let table = InputTable::build(scene, layout, membrane, config, &schedule.element_order)?;
    let fs = config.sample_rate as f64;
    let total = (duration_s * fs).round() as usize;
    let mut modulator = Modulator::new(config.clone())?;
    let mut segments = Vec::new();
    let mut n = 0usize;
    let mut previous: Option<usize> = None;
    for &element in schedule.element_order.iter().cycle() {
        if n >= total {
            break;
        }
        let len = schedule.dwell.min(total - n);
        let switched = previous != Some(element);
        if switched {
            modulator.reset();
        }
        let bits = (n..n + len)
            .map(|k| modulator.push(table.x_at(element, k as f64 / fs)))
            .collect();
        segments.push(ScanSegment {
            element,
            start: n as u64,
            bits,
            blanking: if switched {
                schedule.blanking.min(len)
            } else {
                0
            },
        });
        previous = Some(element);
        n += len;
    }
    Ok(ScanCapture {
        sample_rate: config.sample_rate,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::run_modulator;
    use crate::scene::{PressureSeries, MMHG_TO_PA};

    fn flat_scene(mmhg: f64) -> PressureScene {
        PressureScene {
            waveform: PressureSeries {
                sample_rate_hz: 1000.0,
                samples: vec![mmhg; 200],
            },
            vessel_position: [-75e-6, -75e-6],
            coupling_width: 150e-6,
            contact_bias: 0.0,
            backpressure: 0.0,
        }
    }

    #[test]
    fn input_at_100_mmhg_is_in_range() {
        // chain the membrane numbers by hand: 100 mmHg on the element under
        // the vessel with no bias or backpressure
        let membrane = Membrane::default();
        let cfg = ModulatorConfig::default();
        let p = 100.0 * MMHG_TO_PA;
        let cs = membrane.capacitance_at(p).unwrap();
        let x = charge_input(cs, &cfg).unwrap();
        let series = element_input_series(
            &flat_scene(100.0),
            &ArrayLayout::default(),
            &membrane,
            &cfg,
            0,
            64,
        )
        .unwrap();
        assert!(series.iter().all(|&v| (v - x).abs() < 1e-12));
        assert!(x > 0.0 && x < 1.0, "{x}");
    }

    #[test]
    fn single_element_schedule_matches_direct_run() {
        let scene = flat_scene(90.0);
        let layout = ArrayLayout::default();
        let membrane = Membrane::default();
        let cfg = ModulatorConfig::default();
        let capture = scan(
            &scene,
            &layout,
            &membrane,
            &MuxSchedule::single(2, 1000),
            &cfg,
            0.1,
        )
        .unwrap();
        let bits: Vec<i8> = capture
            .segments
            .iter()
            .flat_map(|s| s.bits.clone())
            .collect();
        let x = element_input_series(&scene, &layout, &membrane, &cfg, 2, 12_800).unwrap();
        let direct = run_modulator(&x, &cfg, Default::default()).unwrap();
        assert_eq!(bits, direct.bits);
    }

    #[test]
    fn maximal_blanking_leaves_one_valid_bit() {
        let schedule = MuxSchedule {
            element_order: vec![0, 1, 2, 3],
            dwell: 200,
            blanking: 199,
        };
        let capture = scan(
            &flat_scene(90.0),
            &ArrayLayout::default(),
            &Membrane::default(),
            &schedule,
            &ModulatorConfig::default(),
            0.05,
        )
        .unwrap();
        assert_eq!(capture.segments.len(), 32);
        for s in &capture.segments {
            assert_eq!(s.valid_bits(), 1);
        }
    }

    #[test]
    fn contact_error_names_element_and_time() {
        let mut scene = flat_scene(90.0);
        scene.waveform.samples[150] = 1e7;
        let err = scan(
            &scene,
            &ArrayLayout::default(),
            &Membrane::default(),
            &MuxSchedule::default(),
            &ModulatorConfig::default(),
            0.1,
        )
        .unwrap_err();
        match err {
            Error::ContactAt {
                element, time_s, ..
            } => {
                assert_eq!(element, 0);
                assert!((time_s - 0.15).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(MuxSchedule {
            element_order: vec![],
            ..Default::default()
        }
        .validate(4)
        .is_err());
        assert!(MuxSchedule {
            dwell: 10,
            blanking: 10,
            ..Default::default()
        }
        .validate(4)
        .is_err());
        assert!(matches!(
            MuxSchedule::single(9, 100).validate(4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
