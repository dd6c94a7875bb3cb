//! Steane error correction of Z errors on a |+> data block, using a |0>
//! resource block from a flag preparation circuit.
//!
//! Only Z errors matter for the data block's logical X, so both blocks are
//! tracked as Z frames. The resource is the control of the transversal CX,
//! so data Z errors copy onto it and are read out by the X-basis
//! measurement. At the end the data block is decoded ideally (minimum
//! weight over its syndrome), and a logical error is a wrong class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::css::{CosetWeightTable, CssError, CssState, StateLabel};
use crate::decoder::{build_mw_lut, decode, DecodePolicy, DecoderError, MlTable, MwTable};
use crate::noise::{wilson_interval_f64, FrameSimulator, NoiseError};
use crate::pauli::{ErrorType, Pauli};
use crate::synth::derive_seed;

#[derive(Debug, Error)]
pub enum SteaneError {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Css(#[from] CssError),
    #[error("resource preparation never accepted after {0} attempts")]
    NoAcceptedResource(u64),
    #[error("invalid rate: {0}")]
    InvalidRate(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrepMode {
    FullFt,
    FtXOnly,
    NoQec,
}

impl std::str::FromStr for PrepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full_ft" => Ok(PrepMode::FullFt),
            "ft_x_only" => Ok(PrepMode::FtXOnly),
            "no_qec" => Ok(PrepMode::NoQec),
            _ => Err(format!("unknown mode {s:?} (full_ft, ft_x_only, no_qec)")),
        }
    }
}

impl std::fmt::Display for PrepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PrepMode::FullFt => "full_ft",
            PrepMode::FtXOnly => "ft_x_only",
            PrepMode::NoQec => "no_qec",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SteaneExperimentConfig {
    pub p: f64,
    pub data_noise_multiplier: f64,
    pub samples: u64,
    pub mode: PrepMode,
    pub seed: u64,
    pub shards: u64,
}

impl SteaneExperimentConfig {
    pub fn new(p: f64, samples: u64, mode: PrepMode, seed: u64) -> Self {
        SteaneExperimentConfig { p, data_noise_multiplier: 10.0, samples, mode, seed, shards: 64 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteaneResult {
    pub mode: PrepMode,
    pub p: f64,
    pub samples: u64,
    pub failures: u64,
    pub resource_attempts: u64,
}

impl SteaneResult {
    pub fn logical_error_rate(&self) -> f64 {
        self.failures as f64 / self.samples as f64
    }

    pub fn interval(&self) -> (f64, f64) {
        wilson_interval_f64(self.failures as f64, self.samples as f64, 0.95)
    }

    /// Fraction of resource preparations accepted.
    pub fn acceptance(&self) -> f64 {
        if self.resource_attempts == 0 {
            1.0
        } else {
            self.samples as f64 / self.resource_attempts as f64
        }
    }
}

/// Minimum-weight decoding with full knowledge of the syndrome: for every
/// syndrome, the class of a lightest error.
#[derive(Clone, Debug)]
pub struct IdealDecoder {
    pub syndrome_bits: usize,
    best: Vec<u8>,
}

impl IdealDecoder {
    pub fn new(state: &CssState, kind: ErrorType) -> Result<Self, CssError> {
        let table = CosetWeightTable::build(state, kind)?;
        let sb = state.num_syndrome_bits(kind);
        let cb = state.num_class_bits(kind);
        assert!(cb <= 8, "at most 8 logical class bits");
        let best = (0..1u128 << sb)
            .map(|s| {
                (0..1u128 << cb).min_by_key(|&c| (table.weight_of_key(s | (c << sb)), c)).unwrap() as u8
            })
            .collect();
        Ok(IdealDecoder { syndrome_bits: sb, best })
    }

    pub fn class(&self, syndrome: u128) -> u128 {
        self.best[syndrome as usize] as u128
    }

    /// True when the coset key decodes to a wrong class.
    pub fn fails(&self, key: u128) -> bool {
        let (s, c) = (key & ((1u128 << self.syndrome_bits) - 1), key >> self.syndrome_bits);
        self.class(s) != c
    }
}

/// One fault location of the QEC gadget, described by the Z frame it adds
/// to the resource (`r`) and data (`d`) blocks for each variant.
#[derive(Clone, Debug)]
struct GadgetLocation {
    variants: Vec<(u128, u128)>,
}

/// The transversal CX, one gate per time step, with its rate-p pair faults,
/// rate-q idle faults on both blocks, and rate-p readout flips.
fn gadget_locations(n: usize) -> (Vec<GadgetLocation>, Vec<GadgetLocation>) {
    let zbit = |p: Pauli| p.has_z() as u128;
    let mut lp = Vec::new();
    let mut lq = Vec::new();
    for i in 0..n {
        let variants = (1..16)
            .map(|v| {
                let (a, b) = (Pauli::from_index(v / 4), Pauli::from_index(v % 4));
                (zbit(a) << i, zbit(b) << i)
            })
            .collect();
        lp.push(GadgetLocation { variants });
        for j in 0..n {
            let singles = |f: &dyn Fn(u128) -> (u128, u128)| {
                (1..4).map(|v| f(zbit(Pauli::from_index(v)))).collect::<Vec<_>>()
            };
            lq.push(GadgetLocation { variants: singles(&|z| (z << j, 0)) });
            // A data Z before its own CX still copies onto the resource.
            let copies = j > i;
            lq.push(GadgetLocation { variants: singles(&|z| (if copies { z << j } else { 0 }, z << j)) });
        }
    }
    for j in 0..n {
        lp.push(GadgetLocation { variants: vec![(1 << j, 0)] });
    }
    (lp, lq)
}

struct Experiment<'a> {
    mode: PrepMode,
    n: usize,
    p: f64,
    data_rate: f64,
    resource: Option<&'a FrameSimulator>,
    /// Z-type coset columns of the data block (syndrome, then class).
    columns: Vec<u128>,
    syndrome_bits: usize,
    mw: MwTable,
    ideal: IdealDecoder,
    gadget_p: Vec<GadgetLocation>,
    gadget_q: Vec<GadgetLocation>,
}

fn binomial<R: Rng>(n: usize, p: f64, rng: &mut R) -> usize {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(n as u64, p.min(1.0)).expect("valid binomial").sample(rng) as usize
}

impl Experiment<'_> {
    fn key(&self, z: u128) -> u128 {
        let mut k = 0;
        let mut bits = z;
        while bits != 0 {
            let q = bits.trailing_zeros() as usize;
            k ^= self.columns[q];
            bits &= bits - 1;
        }
        k
    }

    fn data_noise<R: Rng>(&self, rng: &mut R) -> u128 {
        let mut z = 0u128;
        let k = binomial(self.n, self.data_rate, rng);
        for q in rand::seq::index::sample(rng, self.n, k) {
            // Y or Z out of {X, Y, Z}.
            if rng.random_range(0..3) > 0 {
                z |= 1 << q;
            }
        }
        z
    }

    fn gadget_noise<R: Rng>(&self, rng: &mut R) -> (u128, u128) {
        let (mut r, mut d) = (0u128, 0u128);
        for (locs, rate) in [(&self.gadget_p, self.p), (&self.gadget_q, self.p / 100.0)] {
            let k = binomial(locs.len(), rate, rng);
            for l in rand::seq::index::sample(rng, locs.len(), k) {
                let vs = &locs[l].variants;
                let (a, b) = vs[rng.random_range(0..vs.len())];
                r ^= a;
                d ^= b;
            }
        }
        (r, d)
    }

    /// Z frame of an accepted resource; also returns the attempts used.
    fn resource<R: Rng>(&self, sim: &FrameSimulator, rng: &mut R) -> Result<(u128, u64), SteaneError> {
        const MAX_ATTEMPTS: u64 = 1_000_000;
        let (lp, lq) = (sim.p_locations.len(), sim.q_locations.len());
        for attempt in 1..=MAX_ATTEMPTS {
            let fp = binomial(lp, self.p, rng);
            let fq = binomial(lq, self.p / 100.0, rng);
            let e = sim.sample_bucket(fp, fq, rng);
            if e.flags == 0 {
                return Ok((e.z, attempt));
            }
        }
        Err(SteaneError::NoAcceptedResource(MAX_ATTEMPTS))
    }

    /// Runs one sample; returns (failed, resource attempts).
    fn sample<R: Rng>(&self, rng: &mut R) -> Result<(bool, u64), SteaneError> {
        let e1 = self.data_noise(rng);
        let mut data = self.key(e1);
        let mut attempts = 0;
        if self.mode != PrepMode::NoQec {
            let sim = self.resource.expect("resource circuit for QEC modes");
            let (z_prep, a) = self.resource(sim, rng)?;
            attempts = a;
            let (gr, gd) = self.gadget_noise(rng);
            let measured = self.key(z_prep ^ e1 ^ gr);
            let syndrome = measured & ((1u128 << self.syndrome_bits) - 1);
            let policy = DecodePolicy::default();
            let class = decode(syndrome, &MlTable::default(), &self.mw, &policy).class().unwrap_or(0);
            data ^= self.key(gd) ^ syndrome ^ (class << self.syndrome_bits);
        }
        data ^= self.key(self.data_noise(rng));
        Ok((self.ideal.fails(data), attempts))
    }
}

/// Runs the experiment. `resource` is the |0> preparation circuit for the
/// QEC modes (built without Z gadgets for `FtXOnly`); it is ignored for
/// `NoQec`.
pub fn run_steane_qec_experiment(
    state: &CssState,
    resource: Option<&Circuit>,
    cfg: &SteaneExperimentConfig,
) -> Result<SteaneResult, SteaneError> {
    if !(0.0..1.0).contains(&cfg.p) || cfg.p * cfg.data_noise_multiplier > 1.0 {
        return Err(SteaneError::InvalidRate(cfg.p));
    }
    let zero = CssState { label: StateLabel::Zero, ..state.clone() };
    let plus = CssState { label: StateLabel::Plus, ..state.clone() };
    let sim = match (cfg.mode, resource) {
        (PrepMode::NoQec, _) => None,
        (_, Some(c)) => Some(FrameSimulator::new(c, &zero)?),
        (_, None) => return Err(SteaneError::NoAcceptedResource(0)),
    };
    let (gadget_p, gadget_q) = gadget_locations(state.n);
    let exp = Experiment {
        mode: cfg.mode,
        n: state.n,
        p: cfg.p,
        data_rate: cfg.p * cfg.data_noise_multiplier,
        resource: sim.as_ref(),
        columns: plus.coset_columns(ErrorType::Z),
        syndrome_bits: plus.num_syndrome_bits(ErrorType::Z),
        mw: build_mw_lut(&plus, ErrorType::Z, plus.t())?,
        ideal: IdealDecoder::new(&plus, ErrorType::Z)?,
        gadget_p,
        gadget_q,
    };
    let shards = cfg.shards.max(1).min(cfg.samples.max(1));
    let parts: Result<Vec<(u64, u64)>, SteaneError> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let count = cfg.samples / shards + u64::from(k < cfg.samples % shards);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, k));
            let (mut failures, mut attempts) = (0, 0);
            for _ in 0..count {
                let (f, a) = exp.sample(&mut rng)?;
                failures += f as u64;
                attempts += a;
            }
            Ok((failures, attempts))
        })
        .collect();
    let parts = parts?;
    Ok(SteaneResult {
        mode: cfg.mode,
        p: cfg.p,
        samples: cfg.samples,
        failures: parts.iter().map(|x| x.0).sum(),
        resource_attempts: parts.iter().map(|x| x.1).sum(),
    })
}

/// Exact no-QEC logical error rate: two rounds of depolarizing noise at
/// `rate` on every data qubit, then ideal decoding. Enumerates all Z
/// patterns, so only for small blocks.
pub fn no_qec_exact(state: &CssState, rate: f64) -> Result<f64, CssError> {
    let plus = CssState { label: StateLabel::Plus, ..state.clone() };
    let ideal = IdealDecoder::new(&plus, ErrorType::Z)?;
    let columns = plus.coset_columns(ErrorType::Z);
    let a = 2.0 / 3.0 * rate;
    let r = 2.0 * a * (1.0 - a);
    let n = state.n;
    assert!(n <= 24, "exact enumeration is limited to 24 qubits");
    let mut total = 0.0;
    for z in 0u64..(1 << n) {
        let mut key = 0;
        for (q, col) in columns.iter().enumerate() {
            if (z >> q) & 1 == 1 {
                key ^= col;
            }
        }
        if ideal.fails(key) {
            let w = z.count_ones() as i32;
            total += r.powi(w) * (1.0 - r).powi(n as i32 - w);
        }
    }
    Ok(total)
}
