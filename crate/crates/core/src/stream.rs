//! Real-time block processing: double-buffered acquisition feeding the
//! denoising pipeline, with per-block deadline accounting.
//!
//! The processing chain is optional decimation (applied identically to
//! the primary and reference channels) -> adaptive canceller -> optional
//! band-pass. State is carried across blocks, so the streamed output is
//! bit-identical to one batch call over the whole recording regardless
//! of block size.

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use crate::adaptive::{self, AdaptiveConfig, AdaptiveFilterState};
use crate::error::{Error, Result};
use crate::resample::{Decimator, DecimatorSpec};
use crate::signal::{ReferenceSignal, Signal};
use crate::sosfilt::SosCascade;

/// Streaming configuration.
#[derive(Debug, Clone)]
pub struct StreamConfig {
    /// Samples per acquisition block (at the input rate). 256 samples at
    /// 2 kHz is 128 ms.
    pub block_size: usize,
    /// Optional front decimation (e.g. the 8 kHz -> 2 kHz audio path).
    pub decimator: Option<DecimatorSpec>,
    pub adaptive: AdaptiveConfig,
    /// Optional post filter (e.g. the 20-200 Hz heart-sound band-pass).
    pub post_filter: Option<SosCascade>,
    /// Run the producer on its own thread through the two-slot buffer;
    /// the inlined single-threaded mode produces identical output.
    pub threaded: bool,
}

impl StreamConfig {
    /// Denoising at 2 kHz with the burst-adaptive canceller and the
    /// heart-sound band-pass, 256-sample blocks.
    pub fn default_pcg() -> Self {
        StreamConfig {
            block_size: 256,
            decimator: None,
            adaptive: AdaptiveConfig::default(),
            post_filter: Some(crate::sosfilt::designs::pcg_bandpass()),
            threaded: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adaptive.validate()?;
        if self.block_size < self.adaptive.filter_length {
            return Err(Error::InvalidConfig(format!(
                "block_size {} must be >= filter_length {}",
                self.block_size, self.adaptive.filter_length
            )));
        }
        Ok(())
    }
}

/// The stateful processing chain shared by batch and streamed execution.
pub struct Pipeline {
    decim_primary: Option<Decimator>,
    decim_reference: Option<Decimator>,
    adaptive_config: AdaptiveConfig,
    adaptive_state: AdaptiveFilterState,
    post_filter: Option<SosCascade>,
}

impl Pipeline {
    pub fn new(config: &StreamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            decim_primary: config.decimator.clone().map(Decimator::new),
            decim_reference: config.decimator.clone().map(Decimator::new),
            adaptive_config: config.adaptive.clone(),
            adaptive_state: adaptive::reset(&config.adaptive),
            post_filter: config.post_filter.clone().map(|mut f| {
                f.reset();
                f
            }),
        })
    }

    /// Process one aligned block of primary/reference samples, appending
    /// denoised output samples to `out`.
    pub fn process_block(
        &mut self,
        primary: &[f64],
        reference: &[f64],
        out: &mut Vec<f64>,
    ) -> Result<()> {
        debug_assert_eq!(primary.len(), reference.len());
        let (p, r): (Vec<f64>, Vec<f64>) = match (&mut self.decim_primary, &mut self.decim_reference)
        {
            (Some(dp), Some(dr)) => {
                let mut p = Vec::new();
                let mut r = Vec::new();
                dp.process_block(primary, &mut p);
                dr.process_block(reference, &mut r);
                (p, r)
            }
            _ => (primary.to_vec(), reference.to_vec()),
        };
        let start = out.len();
        for (&x, &rf) in p.iter().zip(&r) {
            let step = adaptive::step(&mut self.adaptive_state, &self.adaptive_config, x, rf)?;
            out.push(step.denoised_sample);
        }
        if let Some(filter) = &mut self.post_filter {
            for v in &mut out[start..] {
                let mut y = *v;
                for section in &mut filter.sections {
                    y = section.process_sample(y);
                }
                *v = y;
            }
        }
        Ok(())
    }

    fn output_rate(&self, input_rate: f64) -> f64 {
        match &self.decim_primary {
            Some(d) => input_rate / d.factor() as f64,
            None => input_rate,
        }
    }
}

/// Per-block timing summary.
#[derive(Debug, Clone)]
pub struct TimingReport {
    /// Wall-clock processing time of each block, seconds.
    pub block_times_s: Vec<f64>,
    /// Real-time budget per full block, seconds.
    pub block_duration_s: f64,
    /// Total audio duration, seconds.
    pub audio_duration_s: f64,
    /// Count of blocks whose processing exceeded the budget.
    pub deadline_misses: usize,
}

impl TimingReport {
    pub fn total_processing_s(&self) -> f64 {
        self.block_times_s.iter().sum()
    }

    pub fn real_time_factor(&self) -> f64 {
        self.total_processing_s() / self.audio_duration_s
    }

    pub fn mean_s(&self) -> f64 {
        self.total_processing_s() / self.block_times_s.len().max(1) as f64
    }

    pub fn max_s(&self) -> f64 {
        self.block_times_s.iter().copied().fold(0.0, f64::max)
    }

    pub fn p95_s(&self) -> f64 {
        if self.block_times_s.is_empty() {
            return 0.0;
        }
        let mut sorted = self.block_times_s.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let idx = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[idx - 1]
    }

    /// `key,value` lines with documented keys.
    pub fn to_csv(&self) -> String {
        format!(
            "key,value\nblocks,{}\nblock_duration_s,{:?}\naudio_duration_s,{:?}\ntotal_processing_s,{:?}\nmean_block_s,{:?}\nmax_block_s,{:?}\np95_block_s,{:?}\nreal_time_factor,{:?}\ndeadline_misses,{}\n",
            self.block_times_s.len(),
            self.block_duration_s,
            self.audio_duration_s,
            self.total_processing_s(),
            self.mean_s(),
            self.max_s(),
            self.p95_s(),
            self.real_time_factor(),
            self.deadline_misses,
        )
    }
}

/// Two-slot producer/consumer exchange with blocking handoff: the
/// producer never overwrites an unconsumed slot, and the consumer sees
/// blocks in order.
pub struct TwoSlotBuffer<T> {
    inner: Mutex<TwoSlotState<T>>,
    filled: Condvar,
    drained: Condvar,
}

struct TwoSlotState<T> {
    slots: VecDeque<T>,
    closed: bool,
}

impl<T> TwoSlotBuffer<T> {
    pub fn new() -> Arc<Self> {
        Arc::new(TwoSlotBuffer {
            inner: Mutex::new(TwoSlotState {
                slots: VecDeque::with_capacity(2),
                closed: false,
            }),
            filled: Condvar::new(),
            drained: Condvar::new(),
        })
    }

    /// Blocks while both slots are occupied.
    pub fn push(&self, value: T) {
        let mut st = self.inner.lock().unwrap();
        while st.slots.len() >= 2 {
            st = self.drained.wait(st).unwrap();
        }
        st.slots.push_back(value);
        self.filled.notify_one();
    }

    /// Blocks until a slot is filled; `None` after close with all slots
    /// drained.
    pub fn pop(&self) -> Option<T> {
        let mut st = self.inner.lock().unwrap();
        loop {
            if let Some(v) = st.slots.pop_front() {
                self.drained.notify_one();
                return Some(v);
            }
            if st.closed {
                return None;
            }
            st = self.filled.wait(st).unwrap();
        }
    }

    pub fn close(&self) {
        let mut st = self.inner.lock().unwrap();
        st.closed = true;
        self.filled.notify_all();
    }
}

fn check_alignment(primary: &Signal, reference: &ReferenceSignal) -> Result<()> {
    if primary.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: primary.len(),
            right: reference.len(),
        });
    }
    if primary.sample_rate_hz() != reference.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            expected: primary.sample_rate_hz(),
            actual: reference.sample_rate_hz(),
        });
    }
    Ok(())
}

/// Run the whole pipeline in one batch call (the reference the streaming
/// path must match bit-for-bit).
pub fn batch_process(
    config: &StreamConfig,
    primary: &Signal,
    reference: &ReferenceSignal,
) -> Result<Signal> {
    check_alignment(primary, reference)?;
    let mut pipeline = Pipeline::new(config)?;
    let mut out = Vec::with_capacity(primary.len());
    pipeline.process_block(primary.samples(), reference.samples(), &mut out)?;
    Signal::new(out, pipeline.output_rate(primary.sample_rate_hz()))
}

/// Stream a recording through the pipeline in `block_size` chunks.
///
/// With `threaded` set, a producer thread hands blocks to the processing
/// worker through the two-slot buffer (the double-buffering contract);
/// otherwise the producer is inlined. Output is identical either way and
/// identical to [`batch_process`]. Deadline misses are counted, never
/// acted on: output correctness does not depend on timing.
pub fn stream_process(
    config: &StreamConfig,
    primary: &Signal,
    reference: &ReferenceSignal,
) -> Result<(Signal, TimingReport)> {
    check_alignment(primary, reference)?;
    let mut pipeline = Pipeline::new(config)?;
    let input_rate = primary.sample_rate_hz();
    let block_duration_s = config.block_size as f64 / input_rate;
    let audio_duration_s = primary.len() as f64 / input_rate;

    let mut out = Vec::with_capacity(primary.len());
    let mut block_times = Vec::new();
    let mut misses = 0usize;

    let mut time_block =
        |pipeline: &mut Pipeline, p: &[f64], r: &[f64], out: &mut Vec<f64>| -> Result<()> {
            let t0 = Instant::now();
            pipeline.process_block(p, r, out)?;
            let dt = t0.elapsed().as_secs_f64();
            if dt > block_duration_s {
                misses += 1;
            }
            block_times.push(dt);
            Ok(())
        };

    if config.threaded {
        let buffer: Arc<TwoSlotBuffer<(Vec<f64>, Vec<f64>)>> = TwoSlotBuffer::new();
        let producer_buf = Arc::clone(&buffer);
        let p_samples = primary.samples().to_vec();
        let r_samples = reference.samples().to_vec();
        let block = config.block_size;
        let producer = std::thread::spawn(move || {
            for (pc, rc) in p_samples.chunks(block).zip(r_samples.chunks(block)) {
                producer_buf.push((pc.to_vec(), rc.to_vec()));
            }
            producer_buf.close();
        });
        while let Some((p, r)) = buffer.pop() {
            time_block(&mut pipeline, &p, &r, &mut out)?;
        }
        producer.join().expect("producer thread panicked");
    } else {
        for (p, r) in primary
            .samples()
            .chunks(config.block_size)
            .zip(reference.samples().chunks(config.block_size))
        {
            time_block(&mut pipeline, p, r, &mut out)?;
        }
    }

    let denoised = Signal::new(out, pipeline.output_rate(input_rate))?;
    Ok((
        denoised,
        TimingReport {
            block_times_s: block_times,
            block_duration_s,
            audio_duration_s,
            deadline_misses: misses,
        },
    ))
}
