//! First-order attacks on trace sets: correlation (CPA) and distance of
//! means (DoM), plus the measurements-to-disclosure scan.
//!
//! Predictions depend on one plaintext byte only, so traces are first
//! accumulated into 256 bins keyed by that byte. Every guess is then scored
//! from the bins without another pass over the traces.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::aes::{sbox_lut, BLOCK_LEN};
use crate::error::{Error, Result};
use crate::leakage::{Trace, TraceSet};

/// A correlation coefficient; `degenerate` marks a zero-variance input,
/// in which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

/// Sample Pearson correlation from centered moments.
pub fn pearson(t: &[f64], p: &[f64]) -> Correlation {
    assert_eq!(t.len(), p.len(), "columns must have equal length");
    let n = t.len();
    let degenerate = Correlation {
        value: 0.0,
        degenerate: true,
    };
    if n < 2 {
        return degenerate;
    }
    let mean_t = t.iter().sum::<f64>() / n as f64;
    let mean_p = p.iter().sum::<f64>() / n as f64;
    let (mut stp, mut stt, mut spp) = (0.0, 0.0, 0.0);
    for (&ti, &pi) in t.iter().zip(p) {
        let (dt, dp) = (ti - mean_t, pi - mean_p);
        stp += dt * dp;
        stt += dt * dt;
        spp += dp * dp;
    }
    if stt <= 0.0 || spp <= 0.0 {
        return degenerate;
    }
    Correlation {
        value: (stp / (stt * spp).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// DoM partition rule applied to the predicted S-box output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Selection {
    /// D = bit `b` of the S-box output.
    MonoBit(u8),
    /// D = 1 iff the S-box output has Hamming weight above 4.
    #[default]
    HwThreshold,
}

impl Selection {
    pub fn select(self, sbox_out: u8) -> bool {
        match self {
            Selection::MonoBit(b) => (sbox_out >> b) & 1 == 1,
            Selection::HwThreshold => sbox_out.count_ones() > 4,
        }
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "hw4" {
            return Ok(Selection::HwThreshold);
        }
        let bad = || {
            Error::Config(format!(
                "selection must be hw4 or monobit:<0..7>, got {s:?}"
            ))
        };
        let bit = s.strip_prefix("monobit:").ok_or_else(bad)?;
        match bit.parse::<u8>() {
            Ok(b) if b < 8 => Ok(Selection::MonoBit(b)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::MonoBit(b) => write!(f, "monobit:{b}"),
            Selection::HwThreshold => f.write_str("hw4"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    Cpa,
    Dom(Selection),
}

impl Attack {
    pub fn name(&self) -> String {
        match self {
            Attack::Cpa => "cpa".into(),
            Attack::Dom(sel) => format!("dom-{sel}"),
        }
    }
}

/// Per-plaintext-byte sums of the trace samples.
#[derive(Debug, Clone)]
pub struct Bins {
    byte_index: usize,
    samples: usize,
    n: usize,
    count: [u64; 256],
    /// 256 × samples, row-major by plaintext byte value.
    sum: Vec<f64>,
    total: Vec<f64>,
    total_sq: Vec<f64>,
}

impl Bins {
    pub fn new(byte_index: usize, samples: usize) -> Result<Self> {
        if byte_index >= BLOCK_LEN {
            return Err(Error::Config(format!(
                "byte index must be in 0..16, got {byte_index}"
            )));
        }
        Ok(Bins {
            byte_index,
            samples,
            n: 0,
            count: [0; 256],
            sum: vec![0.0; 256 * samples],
            total: vec![0.0; samples],
            total_sq: vec![0.0; samples],
        })
    }

    pub fn from_traces(ts: &TraceSet, byte_index: usize) -> Result<Self> {
        let mut bins = Bins::new(byte_index, ts.samples_per_trace())?;
        bins.extend(&ts.traces)?;
        Ok(bins)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn push(&mut self, t: &Trace) -> Result<()> {
        if t.samples.len() != self.samples {
            return Err(Error::InvalidLength {
                what: "trace samples",
                expected: self.samples,
                actual: t.samples.len(),
            });
        }
        let v = t.plaintext[self.byte_index] as usize;
        self.count[v] += 1;
        self.n += 1;
        let row = &mut self.sum[v * self.samples..(v + 1) * self.samples];
        for (j, &s) in t.samples.iter().enumerate() {
            let s = s as f64;
            row[j] += s;
            self.total[j] += s;
            self.total_sq[j] += s * s;
        }
        Ok(())
    }

    pub fn extend<'a>(&mut self, traces: impl IntoIterator<Item = &'a Trace>) -> Result<()> {
        traces.into_iter().try_for_each(|t| self.push(t))
    }

    fn row(&self, v: usize) -> &[f64] {
        &self.sum[v * self.samples..(v + 1) * self.samples]
    }

    fn cpa_curve(&self, guess: u8) -> (Vec<f64>, bool) {
        let n = self.n as f64;
        let mut sp = 0.0;
        let mut spp = 0.0;
        let mut spt = vec![0.0; self.samples];
        for v in 0..256 {
            let c = self.count[v];
            if c == 0 {
                continue;
            }
            let p = sbox_lut(v as u8 ^ guess).count_ones() as f64;
            sp += c as f64 * p;
            spp += c as f64 * p * p;
            for (acc, &s) in spt.iter_mut().zip(self.row(v)) {
                *acc += p * s;
            }
        }
        let var_p = n * spp - sp * sp;
        let mut degenerate = var_p <= 0.0;
        let curve = (0..self.samples)
            .map(|j| {
                let var_t = n * self.total_sq[j] - self.total[j] * self.total[j];
                if var_p <= 0.0 || var_t <= 0.0 {
                    degenerate = true;
                    return 0.0;
                }
                ((n * spt[j] - sp * self.total[j]) / (var_p * var_t).sqrt()).clamp(-1.0, 1.0)
            })
            .collect();
        (curve, degenerate)
    }

    fn dom_curve(&self, guess: u8, selection: Selection) -> (Vec<f64>, bool) {
        let mut n1 = 0u64;
        let mut s1 = vec![0.0; self.samples];
        for v in 0..256 {
            if self.count[v] > 0 && selection.select(sbox_lut(v as u8 ^ guess)) {
                n1 += self.count[v];
                for (acc, &s) in s1.iter_mut().zip(self.row(v)) {
                    *acc += s;
                }
            }
        }
        let n0 = self.n as u64 - n1;
        if n1 == 0 || n0 == 0 {
            return (vec![0.0; self.samples], true);
        }
        let curve = s1
            .iter()
            .zip(&self.total)
            .map(|(&a, &t)| a / n1 as f64 - (t - a) / n0 as f64)
            .collect();
        (curve, false)
    }

    pub fn attack(&self, attack: Attack) -> AttackResult {
        let scored: Vec<(Vec<f64>, bool)> = (0..=255u8)
            .into_par_iter()
            .map(|g| match attack {
                Attack::Cpa => self.cpa_curve(g),
                Attack::Dom(sel) => self.dom_curve(g, sel),
            })
            .collect();
        AttackResult::from_curves(attack, self.n, scored)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub attack: Attack,
    pub traces: usize,
    /// 256 curves, one value per sample point.
    pub curves: Vec<Vec<f64>>,
    /// Max |statistic| per guess.
    pub peaks: Vec<f64>,
    pub peak_index: Vec<usize>,
    /// Guesses by descending peak, ties by ascending guess.
    pub ranking: Vec<u8>,
    /// Guesses scored 0 for a zero-variance column or an empty partition.
    pub degenerate: Vec<bool>,
}

impl AttackResult {
    fn from_curves(attack: Attack, traces: usize, scored: Vec<(Vec<f64>, bool)>) -> Self {
        let mut curves = Vec::with_capacity(256);
        let mut peaks = Vec::with_capacity(256);
        let mut peak_index = Vec::with_capacity(256);
        let mut degenerate = Vec::with_capacity(256);
        for (curve, flag) in scored {
            let (idx, peak) =
                curve
                    .iter()
                    .map(|v| v.abs())
                    .enumerate()
                    .fold(
                        (0, 0.0),
                        |best, (i, v)| if v > best.1 { (i, v) } else { best },
                    );
            peaks.push(peak);
            peak_index.push(idx);
            degenerate.push(flag);
            curves.push(curve);
        }
        let mut ranking: Vec<u8> = (0..=255).collect();
        ranking.sort_by(|&a, &b| {
            peaks[b as usize]
                .total_cmp(&peaks[a as usize])
                .then(a.cmp(&b))
        });
        AttackResult {
            attack,
            traces,
            curves,
            peaks,
            peak_index,
            ranking,
            degenerate,
        }
    }

    pub fn best_guess(&self) -> u8 {
        self.ranking[0]
    }

    /// 1-based position of `guess` in the ranking.
    pub fn rank_of(&self, guess: u8) -> usize {
        self.ranking
            .iter()
            .position(|&g| g == guess)
            .expect("ranking is a permutation")
            + 1
    }

    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

pub fn cpa_attack(ts: &TraceSet, byte_index: usize) -> Result<AttackResult> {
    run_attack(ts, byte_index, Attack::Cpa)
}

pub fn dom_attack(ts: &TraceSet, byte_index: usize, selection: Selection) -> Result<AttackResult> {
    run_attack(ts, byte_index, Attack::Dom(selection))
}

pub fn run_attack(ts: &TraceSet, byte_index: usize, attack: Attack) -> Result<AttackResult> {
    Ok(Bins::from_traces(ts, byte_index)?.attack(attack))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disclosure {
    /// Smallest scanned prefix from which the true byte stays rank 1.
    pub disclosed_at: Option<usize>,
    /// (prefix size, rank of the true byte) for every scanned prefix.
    pub scan: Vec<(usize, usize)>,
}

/// Scans prefixes `step, 2·step, …` and finally the full set.
pub fn measurements_to_disclosure(
    ts: &TraceSet,
    byte_index: usize,
    true_key_byte: u8,
    attack: Attack,
    step: usize,
) -> Result<Disclosure> {
    if step == 0 {
        return Err(Error::Config("scan step must be at least 1".into()));
    }
    let mut bins = Bins::new(byte_index, ts.samples_per_trace())?;
    let mut scan = Vec::new();
    let n = ts.len();
    let mut done = 0;
    while done < n {
        let next = (done + step).min(n);
        bins.extend(&ts.traces[done..next])?;
        done = next;
        scan.push((done, bins.attack(attack).rank_of(true_key_byte)));
    }
    let stable = scan
        .iter()
        .rev()
        .take_while(|&&(_, rank)| rank == 1)
        .count();
    let disclosed_at = (stable > 0).then(|| scan[scan.len() - stable].0);
    Ok(Disclosure { disclosed_at, scan })
}
