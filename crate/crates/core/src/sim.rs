//! Sequential state-recycled measurement stream with QRNG ray selection,
//! subsequence boundaries and the purge rule.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::ConfigError;
use crate::qutrit::{Outcome, QutritState, Unitary3, C64};
use crate::rays::{ray_for_code, RayId, RotationAngles};

/// Noise model of the simulated apparatus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Mean infidelity of a single pi-pulse from random angle jitter.
    pub rotation_infidelity: f64,
    /// Over-rotation in radians added to every applied pulse.
    pub rotation_systematic: f64,
    /// Probability that a dark state is reported bright.
    pub detection_error_dark: f64,
    /// Probability that a bright state is reported dark.
    pub detection_error_bright: f64,
    /// Per-measurement probability of falling into an always-dark leaked state.
    pub leak_rate: f64,
    pub poisson_dark_mean: f64,
    pub poisson_bright_mean: f64,
    pub threshold: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            rotation_infidelity: 5e-3,
            rotation_systematic: 0.0,
            detection_error_dark: 1.9e-4,
            detection_error_bright: 1.9e-4,
            leak_rate: 3.5e-6,
            poisson_dark_mean: 0.709,
            poisson_bright_mean: 18.75,
            threshold: 5.5,
        }
    }
}

impl NoiseConfig {
    /// Perfect rotations and detection, no leakage. Photon counts are still drawn.
    pub fn ideal() -> Self {
        Self {
            rotation_infidelity: 0.0,
            rotation_systematic: 0.0,
            detection_error_dark: 0.0,
            detection_error_bright: 0.0,
            leak_rate: 0.0,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("noise config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let probabilities = [
            ("rotation_infidelity", self.rotation_infidelity),
            ("detection_error_dark", self.detection_error_dark),
            ("detection_error_bright", self.detection_error_bright),
            ("leak_rate", self.leak_rate),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!("{name} = {p} is not a probability")));
            }
        }
        if self.rotation_infidelity >= 0.5 {
            return Err(ConfigError::Invalid(
                "rotation_infidelity must be below 0.5 for a Gaussian jitter model".into(),
            ));
        }
        if !self.rotation_systematic.is_finite() {
            return Err(ConfigError::Invalid("rotation_systematic must be finite".into()));
        }
        for (name, m) in [
            ("poisson_dark_mean", self.poisson_dark_mean),
            ("poisson_bright_mean", self.poisson_bright_mean),
            ("threshold", self.threshold),
        ] {
            if !(m > 0.0 && m.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} = {m} must be positive")));
            }
        }
        Ok(())
    }

    /// Standard deviation of the Gaussian pulse-area jitter whose mean pi-pulse
    /// infidelity `E[sin^2(eps/2)] = (1 - exp(-s^2/2)) / 2` equals `rotation_infidelity`.
    pub fn jitter_sigma(&self) -> f64 {
        (-2.0 * (1.0 - 2.0 * self.rotation_infidelity).ln()).sqrt()
    }

    pub fn is_rotation_ideal(&self) -> bool {
        self.rotation_infidelity == 0.0 && self.rotation_systematic == 0.0
    }

    /// `+1`/`-1` decision for a photon count.
    pub fn classify(&self, photon_count: u32) -> Outcome {
        classify(photon_count, self.threshold)
    }
}

pub fn classify(photon_count: u32, threshold: f64) -> Outcome {
    if f64::from(photon_count) > threshold {
        Outcome::Bright
    } else {
        Outcome::Dark
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub ray: RayId,
    pub outcome: Outcome,
    pub photon_count: u32,
    pub index: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndReason {
    BrightAfterMin,
    Purge,
    /// Read back from a dataset whose final record no longer classifies bright.
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsequence {
    pub v0: RayId,
    pub records: Vec<MeasurementRecord>,
    pub purged: bool,
    /// Excluded from analysis ("o" marker): purged, or invalidated on re-thresholding.
    pub omitted: bool,
    pub end_reason: EndReason,
}

impl Subsequence {
    pub fn trailing_dark_run(&self) -> usize {
        self.records
            .iter()
            .rev()
            .take_while(|r| r.outcome == Outcome::Dark)
            .count()
    }
}

/// Ordered output of one simulated (or loaded) measurement campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub seed: u64,
    pub min_len: usize,
    pub purge_run_length: usize,
    pub noise: NoiseConfig,
    pub subsequences: Vec<Subsequence>,
}

impl Campaign {
    pub fn empty(seed: u64, noise: NoiseConfig) -> Self {
        Self {
            seed,
            min_len: DEFAULT_MIN_LEN,
            purge_run_length: DEFAULT_PURGE_RUN,
            noise,
            subsequences: Vec::new(),
        }
    }

    pub fn record_count(&self) -> usize {
        self.subsequences.iter().map(|s| s.records.len()).sum()
    }

    pub fn analyzed_record_count(&self) -> usize {
        self.subsequences
            .iter()
            .filter(|s| !s.omitted)
            .map(|s| s.records.len())
            .sum()
    }

    pub fn purge_count(&self) -> usize {
        self.subsequences.iter().filter(|s| s.purged).count()
    }

    /// Concatenable stretches of the stream. Omitted subsequences break the chain.
    pub fn segments(&self) -> Vec<Vec<&[MeasurementRecord]>> {
        let mut out = Vec::new();
        let mut current: Vec<&[MeasurementRecord]> = Vec::new();
        for s in &self.subsequences {
            if s.omitted {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            } else if !s.records.is_empty() {
                current.push(&s.records);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
        out
    }

    /// All analyzed records in stream order, with a flag marking each segment start.
    pub fn analyzed_records(&self) -> impl Iterator<Item = (bool, &MeasurementRecord)> + '_ {
        self.segments().into_iter().flat_map(|seg| {
            seg.into_iter()
                .flatten()
                .enumerate()
                .map(|(k, r)| (k == 0, r))
        })
    }
}

pub const DEFAULT_MIN_LEN: usize = 1000;
pub const DEFAULT_PURGE_RUN: usize = 55;

/// Source of uniform random bits standing in for the hardware QRNG.
pub trait BitSource {
    fn next_bit(&mut self) -> bool;
}

/// Seeded pseudo-random bit stream.
pub struct SeededBits {
    rng: ChaCha8Rng,
    word: u64,
    left: u32,
}

impl SeededBits {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            word: 0,
            left: 0,
        }
    }
}

impl BitSource for SeededBits {
    fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        self.left -= 1;
        (self.word >> self.left) & 1 == 1
    }
}

/// Replays a fixed bit pattern, cycling when it runs out.
pub struct ScriptedBits {
    bits: Vec<bool>,
    pos: usize,
}

impl ScriptedBits {
    /// Parses `0`/`1` characters; everything else is ignored.
    pub fn new(pattern: &str) -> Self {
        let bits: Vec<bool> = pattern
            .chars()
            .filter_map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        assert!(!bits.is_empty(), "scripted bit pattern is empty");
        Self { bits, pos: 0 }
    }
}

impl BitSource for ScriptedBits {
    fn next_bit(&mut self) -> bool {
        let b = self.bits[self.pos];
        self.pos = (self.pos + 1) % self.bits.len();
        b
    }
}

/// Reads 4-bit groups (most significant bit first) until one names a ray.
pub fn qrng_next_ray<B: BitSource + ?Sized>(bits: &mut B) -> RayId {
    loop {
        let mut code = 0u8;
        for _ in 0..4 {
            code = (code << 1) | u8::from(bits.next_bit());
        }
        if let Some(ray) = ray_for_code(code) {
            return ray;
        }
    }
}

/// Physical state carried between measurements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimState {
    Coherent(QutritState),
    /// Outside the qutrit space; every detection is dark until re-initialization.
    Leaked,
}

/// Poisson distribution restricted to one side of the threshold, sampled by table lookup.
#[derive(Clone, Debug)]
struct TruncatedPoisson {
    first: u32,
    cumulative: Vec<f64>,
}

impl TruncatedPoisson {
    fn new(mean: f64, threshold: f64, bright_side: bool) -> Self {
        let kmax = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as u32;
        let ln_mean = mean.ln();
        let mut first = None;
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for k in 0..=kmax {
            if (classify(k, threshold) == Outcome::Bright) != bright_side {
                continue;
            }
            first.get_or_insert(k);
            let kf = f64::from(k);
            acc += (kf * ln_mean - mean - ln_gamma(kf + 1.0)).exp();
            cumulative.push(acc);
        }
        let first = first.unwrap_or(0);
        if cumulative.is_empty() || acc <= 0.0 {
            // side unreachable under this mean; fall back to its boundary value
            let edge = if bright_side { threshold.floor() as u32 + 1 } else { 0 };
            return Self {
                first: edge,
                cumulative: vec![1.0],
            };
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Self { first, cumulative }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c < u);
        self.first + k.min(self.cumulative.len() - 1) as u32
    }
}

/// Monte Carlo engine for one logical measurement stream.
pub struct Simulator<B: BitSource = SeededBits> {
    noise: NoiseConfig,
    bits: B,
    rng: ChaCha8Rng,
    jitter: Option<Normal<f64>>,
    /// Indexed by `[true branch bright][reported bright]`.
    counts: [[TruncatedPoisson; 2]; 2],
    next_index: u64,
}

impl Simulator<SeededBits> {
    /// QRNG bits and physics randomness come from separate streams of the same seed.
    pub fn new(noise: NoiseConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self::with_bits(noise, SeededBits::new(seed), rng)
    }
}

impl<B: BitSource> Simulator<B> {
    pub fn with_bits(noise: NoiseConfig, bits: B, rng: ChaCha8Rng) -> Self {
        let jitter = (noise.rotation_infidelity > 0.0)
            .then(|| Normal::new(0.0, noise.jitter_sigma()).expect("finite jitter sigma"));
        let table = |mean: f64| {
            [
                TruncatedPoisson::new(mean, noise.threshold, false),
                TruncatedPoisson::new(mean, noise.threshold, true),
            ]
        };
        let counts = [table(noise.poisson_dark_mean), table(noise.poisson_bright_mean)];
        Self {
            noise,
            bits,
            rng,
            jitter,
            counts,
            next_index: 0,
        }
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn next_ray(&mut self) -> RayId {
        qrng_next_ray(&mut self.bits)
    }

    /// `U_v` with systematic over-rotation and fresh jitter on every applied pulse.
    fn pulse_unitary(&mut self, ray: RayId) -> Unitary3 {
        let ideal = ray.ray();
        if self.noise.is_rotation_ideal() {
            return ideal.unitary;
        }
        let mut angles: RotationAngles = ideal.angles;
        for theta in [&mut angles.theta1, &mut angles.theta2] {
            // a zero-area pulse is not played, so it carries no error
            if *theta != 0.0 {
                *theta += self.noise.rotation_systematic;
                if let Some(j) = &self.jitter {
                    *theta += j.sample(&mut self.rng);
                }
            }
        }
        angles.unitary()
    }

    fn report(&mut self, true_bright: bool) -> (Outcome, u32) {
        let flip_p = if true_bright {
            self.noise.detection_error_bright
        } else {
            self.noise.detection_error_dark
        };
        let flipped = flip_p > 0.0 && self.rng.random::<f64>() < flip_p;
        let reported_bright = true_bright != flipped;
        let count = self.counts[usize::from(true_bright)][usize::from(reported_bright)]
            .sample(&mut self.rng);
        let outcome = if reported_bright {
            Outcome::Bright
        } else {
            Outcome::Dark
        };
        (outcome, count)
    }

    fn record(&mut self, ray: RayId, outcome: Outcome, photon_count: u32) -> MeasurementRecord {
        let index = self.next_index;
        self.next_index += 1;
        MeasurementRecord {
            ray,
            outcome,
            photon_count,
            index,
        }
    }

    /// Rotate, detect, pump and rotate back.
    pub fn measure_once(&mut self, state: &SimState, ray: RayId) -> (MeasurementRecord, SimState) {
        let leaks = self.noise.leak_rate > 0.0 && self.rng.random::<f64>() < self.noise.leak_rate;
        let psi = match state {
            SimState::Coherent(psi) if !leaks => *psi,
            _ => {
                let (outcome, count) = self.report(false);
                return (self.record(ray, outcome, count), SimState::Leaked);
            }
        };

        let forward = self.pulse_unitary(ray);
        let rotated = forward.apply(&psi);
        let a = rotated.amplitudes();
        let p_bright = a[0].norm_sqr();
        let bright = self.rng.random::<f64>() < p_bright;
        let detected = if bright {
            QutritState::basis(0)
        } else {
            let zero = C64::new(0.0, 0.0);
            // p_bright == 1 cannot reach this branch
            QutritState::new([zero, a[1], a[2]]).unwrap_or(QutritState::basis(1))
        };
        let back = self.pulse_unitary(ray).dagger();
        let post = back.apply(&detected);

        let (outcome, count) = self.report(bright);
        (self.record(ray, outcome, count), SimState::Coherent(post))
    }

    /// Initial state `U_{v0}^dagger |0>` of a subsequence.
    pub fn initial_state(&mut self, v0: RayId) -> SimState {
        let back = self.pulse_unitary(v0).dagger();
        SimState::Coherent(back.apply(&QutritState::basis(0)))
    }

    /// Measures until a bright detection at position `>= min_len`, or purges once the
    /// run of consecutive dark detections exceeds `purge_run_length`.
    pub fn run_subsequence(
        &mut self,
        v0: RayId,
        min_len: usize,
        purge_run_length: usize,
    ) -> Subsequence {
        assert!(min_len >= 1, "min_len must be at least 1");
        let mut state = self.initial_state(v0);
        let mut records = Vec::with_capacity(min_len + min_len / 2);
        let mut dark_run = 0usize;
        loop {
            let ray = self.next_ray();
            let (rec, next) = self.measure_once(&state, ray);
            state = next;
            records.push(rec);
            match rec.outcome {
                Outcome::Dark => {
                    dark_run += 1;
                    if dark_run > purge_run_length {
                        return Subsequence {
                            v0,
                            records,
                            purged: true,
                            omitted: true,
                            end_reason: EndReason::Purge,
                        };
                    }
                }
                Outcome::Bright => {
                    dark_run = 0;
                    if records.len() >= min_len {
                        return Subsequence {
                            v0,
                            records,
                            purged: false,
                            omitted: false,
                            end_reason: EndReason::BrightAfterMin,
                        };
                    }
                }
            }
        }
    }
}

/// Options of a full campaign beyond the noise model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CampaignOptions {
    pub min_len: usize,
    pub purge_run_length: usize,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            min_len: DEFAULT_MIN_LEN,
            purge_run_length: DEFAULT_PURGE_RUN,
        }
    }
}

/// Chains subsequences until at least `total` non-purged records exist.
pub fn run_campaign(total: usize, noise: &NoiseConfig, seed: u64, opts: CampaignOptions) -> Campaign {
    let mut sim = Simulator::new(noise.clone(), seed);
    let mut v0 = sim.next_ray();
    let mut kept = 0usize;
    let mut subsequences = Vec::new();
    while kept < total {
        let sub = sim.run_subsequence(v0, opts.min_len, opts.purge_run_length);
        if !sub.purged {
            kept += sub.records.len();
            v0 = sub.records.last().expect("non-empty subsequence").ray;
        }
        subsequences.push(sub);
    }
    Campaign {
        seed,
        min_len: opts.min_len,
        purge_run_length: opts.purge_run_length,
        noise: noise.clone(),
        subsequences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::{born_probability, collapse};

    fn ideal_sim(seed: u64) -> Simulator {
        Simulator::new(NoiseConfig::ideal(), seed)
    }

    #[test]
    fn qrng_examples() {
        assert_eq!(qrng_next_ray(&mut ScriptedBits::new("0111")), RayId::H1);
        assert_eq!(qrng_next_ray(&mut ScriptedBits::new("1111 1011")), RayId::Z1);
        assert_eq!(
            qrng_next_ray(&mut ScriptedBits::new("0000 1110 1111 0001")),
            RayId::Y1M
        );
    }

    #[test]
    fn qrng_is_uniform_over_rays() {
        let mut bits = SeededBits::new(11);
        let n = 1_000_000usize;
        let mut hist = [0usize; 13];
        for _ in 0..n {
            hist[qrng_next_ray(&mut bits).index()] += 1;
        }
        let p = 1.0 / 13.0;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        for (i, &c) in hist.iter().enumerate() {
            let f = c as f64 / n as f64;
            assert!((f - p).abs() < 5.0 * sd, "ray {i}: {f}");
        }
    }

    #[test]
    fn measuring_own_ray_is_bright_and_orthogonal_ray_is_dark() {
        let mut sim = ideal_sim(1);
        let z1 = SimState::Coherent(RayId::Z1.ray().state);
        for _ in 0..100 {
            let (rec, post) = sim.measure_once(&z1, RayId::Z1);
            assert_eq!(rec.outcome, Outcome::Bright);
            let SimState::Coherent(p) = post else { panic!() };
            assert!(p.same_ray(&RayId::Z1.ray().state, 1e-12));
        }
        let h0 = RayId::H0.ray().state;
        for u in [RayId::Y1M, RayId::Y2M, RayId::Y3M] {
            let (rec, post) = sim.measure_once(&SimState::Coherent(h0), u);
            assert_eq!(rec.outcome, Outcome::Dark);
            let SimState::Coherent(p) = post else { panic!() };
            assert!(p.same_ray(&h0, 1e-12));
        }
    }

    #[test]
    fn h0_on_z1_matches_born_rule_and_collapse() {
        let mut sim = ideal_sim(2);
        let h0 = RayId::H0.ray().state;
        let z1 = RayId::Z1.ray().state;
        let expected_dark = collapse(&h0, &z1, Outcome::Dark).unwrap();
        assert!(expected_dark.same_ray(&RayId::Y1P.ray().state, 1e-12));
        let n = 60_000;
        let mut bright = 0;
        for _ in 0..n {
            let (rec, post) = sim.measure_once(&SimState::Coherent(h0), RayId::Z1);
            let SimState::Coherent(p) = post else { panic!() };
            match rec.outcome {
                Outcome::Bright => {
                    bright += 1;
                    assert!(p.same_ray(&z1, 1e-12));
                }
                Outcome::Dark => assert!(p.same_ray(&expected_dark, 1e-12)),
            }
        }
        let p = born_probability(&h0, &z1);
        let f = bright as f64 / n as f64;
        assert!((f - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn ideal_records_respect_threshold() {
        let mut sim = ideal_sim(3);
        let mut state = sim.initial_state(RayId::H2);
        for _ in 0..20_000 {
            let ray = sim.next_ray();
            let (rec, next) = sim.measure_once(&state, ray);
            assert_eq!(classify(rec.photon_count, 5.5), rec.outcome);
            state = next;
        }
    }

    #[test]
    fn ideal_states_stay_real() {
        let mut sim = ideal_sim(4);
        let mut state = sim.initial_state(RayId::H3);
        for _ in 0..5_000 {
            let ray = sim.next_ray();
            let (_, next) = sim.measure_once(&state, ray);
            let SimState::Coherent(p) = next else { panic!() };
            assert!(p.max_imag_after_alignment() < 1e-10);
            assert!((p.norm() - 1.0).abs() < 1e-12);
            state = next;
        }
    }

    #[test]
    fn forced_z1_sequence_ends_after_one_record() {
        let bits = ScriptedBits::new("1011");
        let mut sim = Simulator::with_bits(NoiseConfig::ideal(), bits, ChaCha8Rng::seed_from_u64(0));
        let sub = sim.run_subsequence(RayId::Z1, 1, 55);
        assert_eq!(sub.records.len(), 1);
        assert_eq!(sub.records[0].outcome, Outcome::Bright);
        assert!(!sub.purged);
        assert_eq!(sub.end_reason, EndReason::BrightAfterMin);
    }

    #[test]
    fn leaked_state_is_purged() {
        let noise = NoiseConfig {
            leak_rate: 1.0,
            ..NoiseConfig::ideal()
        };
        let mut sim = Simulator::new(noise, 5);
        let sub = sim.run_subsequence(RayId::Z1, 1000, 55);
        assert!(sub.purged && sub.omitted);
        assert_eq!(sub.end_reason, EndReason::Purge);
        assert_eq!(sub.records.len(), 56);
        assert_eq!(sub.trailing_dark_run(), 56);
    }

    #[test]
    fn campaign_stopping_rule_and_determinism() {
        let noise = NoiseConfig::ideal();
        let a = run_campaign(3000, &noise, 9, CampaignOptions::default());
        let kept: Vec<_> = a.subsequences.iter().filter(|s| !s.purged).collect();
        assert!((2..=4).contains(&kept.len()));
        assert!(a.analyzed_record_count() >= 3000);
        for s in &kept {
            assert!(s.records.len() >= 1000);
            assert_eq!(s.records.last().unwrap().outcome, Outcome::Bright);
        }
        for w in kept.windows(2) {
            assert_eq!(w[1].v0, w[0].records.last().unwrap().ray);
        }
        let b = run_campaign(3000, &noise, 9, CampaignOptions::default());
        assert_eq!(a, b);
        let c = run_campaign(3000, &noise, 10, CampaignOptions::default());
        assert_ne!(a, c);
    }

    #[test]
    fn purge_restarts_from_same_v0() {
        let noise = NoiseConfig {
            leak_rate: 2e-4,
            ..NoiseConfig::ideal()
        };
        let c = run_campaign(50_000, &noise, 21, CampaignOptions::default());
        assert!(c.purge_count() > 0);
        for (k, s) in c.subsequences.iter().enumerate() {
            if s.purged {
                let next = &c.subsequences[k + 1];
                assert_eq!(next.v0, s.v0);
            }
        }
    }

    #[test]
    fn jitter_calibration() {
        let noise = NoiseConfig {
            rotation_infidelity: 5e-3,
            ..NoiseConfig::ideal()
        };
        let s = noise.jitter_sigma();
        assert!(((1.0 - (-s * s / 2.0).exp()) / 2.0 - 5e-3).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(NoiseConfig::from_json(r#"{"leak_rate": 2.0}"#).is_err());
        assert!(NoiseConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(NoiseConfig::from_json(r#"{"threshold": -1}"#).is_err());
        let cfg = NoiseConfig::from_json(r#"{"rotation_infidelity": 0}"#).unwrap();
        assert_eq!(cfg.poisson_bright_mean, 18.75);
        let back = NoiseConfig::from_json(&NoiseConfig::default().to_json()).unwrap();
        assert_eq!(back, NoiseConfig::default());
    }

    #[test]
    fn truncated_poisson_stays_on_its_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (mean, bright) in [(0.709, false), (0.709, true), (18.75, false), (18.75, true)] {
            let t = TruncatedPoisson::new(mean, 5.5, bright);
            for _ in 0..1000 {
                let k = t.sample(&mut rng);
                assert_eq!(classify(k, 5.5) == Outcome::Bright, bright);
            }
        }
    }
}
