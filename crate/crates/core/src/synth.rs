//! Planted-signal corpora for desk-scale checks.
//!
//! Each session holds `m` senators whose stem counts are Poisson draws
//! around a Zipfian base distribution. `P` planted stems alternate in the
//! party they favor (even positions Republican, odd Democratic); the
//! favored party's rate is multiplied by `1 + e · activity`, where the
//! activity of planted stem `k` in session `s` is a triangular window
//! centred at `s · δ · P`, plus a constant floor. Vocabulary therefore
//! drifts by `δ · P` planted stems per session. Senators persist across
//! sessions apart from a fixed turnover and carry their own multiplicative
//! usage noise, so a senator seen in training looks familiar in a nearby
//! session. Ideology scores are a clipped, noisy linear function of each
//! senator's mean signed planted usage.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{Party, SenatorSession};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub sessions: usize,
    pub senators_per_session: usize,
    pub vocab_size: usize,
    pub planted: usize,
    pub effect: f64,
    pub drift: f64,
    pub seed: u64,
    pub first_congress: u32,
    pub doc_len_min: u32,
    pub doc_len_max: u32,
    /// Fraction of senators replaced between consecutive sessions.
    pub turnover: f64,
    /// Activity every planted stem keeps outside its window.
    pub activity_floor: f64,
    /// Half-width of the activity window, in planted stems.
    pub window: f64,
    /// Log-scale spread of per-senator usage noise.
    pub senator_noise: f64,
    /// Spread of the ideology-score noise.
    pub score_noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            sessions: 10,
            senators_per_session: 100,
            vocab_size: 500,
            planted: 20,
            effect: 5.0,
            drift: 0.1,
            seed: 1,
            first_congress: 104,
            doc_len_min: 1000,
            doc_len_max: 3000,
            turnover: 0.2,
            activity_floor: 0.1,
            window: 4.0,
            senator_noise: 0.3,
            score_noise: 0.05,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.planted > self.vocab_size {
            return Err(Error::Config(format!(
                "{} planted stems exceed the vocabulary of {}",
                self.planted, self.vocab_size
            )));
        }
        if self.sessions == 0 || self.senators_per_session < 2 || self.vocab_size == 0 {
            return Err(Error::Config("sessions, senators and vocabulary must be positive".into()));
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return Err(Error::Config("document length bounds are invalid".into()));
        }
        if !(0.0..=1.0).contains(&self.turnover) || !(0.0..=1.0).contains(&self.activity_floor) {
            return Err(Error::Config("turnover and activity_floor must lie in [0, 1]".into()));
        }
        if self.effect < 0.0 || self.drift < 0.0 || self.window <= 0.0 {
            return Err(Error::Config("effect and drift must be nonnegative, window positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedStem {
    pub stem: String,
    /// Position in the drift order.
    pub order: usize,
    pub favors: Party,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub params: SynthParams,
    pub planted: Vec<PlantedStem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub sessions: Vec<SenatorSession>,
    pub manifest: SynthManifest,
}

pub fn stem_name(j: usize) -> String {
    format!("w{j:04}")
}

struct Senator {
    id: usize,
    party: Party,
    noise: Vec<f64>,
}

fn new_senator(id: usize, v: usize, rng: &mut ChaCha8Rng, noise: &LogNormal<f64>) -> Senator {
    let party = if rng.random_bool(0.5) {
        Party::Republican
    } else {
        Party::Democrat
    };
    Senator {
        id,
        party,
        noise: (0..v).map(|_| noise.sample(rng)).collect(),
    }
}

/// Activity of planted stem `k` in session `s`.
pub fn activity(params: &SynthParams, k: usize, s: usize) -> f64 {
    let centre = s as f64 * params.drift * params.planted as f64;
    let tri = (1.0 - (k as f64 - centre).abs() / params.window).max(0.0);
    params.activity_floor + (1.0 - params.activity_floor) * tri
}

pub fn generate(params: &SynthParams) -> Result<SynthCorpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let v = params.vocab_size;
    let m = params.senators_per_session;

    // Zipfian base rates
    let raw: Vec<f64> = (0..v).map(|j| 1.0 / (j as f64 + 10.0)).collect();
    let total: f64 = raw.iter().sum();
    let base: Vec<f64> = raw.iter().map(|r| r / total).collect();

    // planted stems from the upper-middle frequency band
    let lo = (v / 50).min(v - params.planted);
    let hi = (v / 4).max(lo + params.planted).min(v);
    let mut chosen: Vec<usize> = sample(&mut rng, hi - lo, params.planted)
        .into_iter()
        .map(|i| i + lo)
        .collect();
    chosen.sort_unstable();
    let planted: Vec<PlantedStem> = chosen
        .iter()
        .enumerate()
        .map(|(k, &j)| PlantedStem {
            stem: stem_name(j),
            order: k,
            favors: if k % 2 == 0 {
                Party::Republican
            } else {
                Party::Democrat
            },
        })
        .collect();

    let noise = LogNormal::new(0.0, params.senator_noise).map_err(|e| Error::Config(e.to_string()))?;
    let mut next_id = 0;
    let mut roster: Vec<Senator> = (0..m)
        .map(|_| {
            next_id += 1;
            new_senator(next_id, v, &mut rng, &noise)
        })
        .collect();

    let replace = (params.turnover * m as f64).round() as usize;
    let mut sessions = Vec::with_capacity(params.sessions * m);
    let mut usage: Vec<(usize, f64)> = Vec::with_capacity(params.sessions * m);
    for s in 0..params.sessions {
        if s > 0 && replace > 0 {
            let gone = sample(&mut rng, m, replace).into_vec();
            for slot in gone {
                next_id += 1;
                roster[slot] = new_senator(next_id, v, &mut rng, &noise);
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&i| roster[i].id);
        for &i in &order {
            let sen = &roster[i];
            let len = rng.random_range(params.doc_len_min..=params.doc_len_max) as f64;
            let mut rates: Vec<f64> = base.iter().zip(&sen.noise).map(|(b, n)| b * n).collect();
            for p in &planted {
                if p.favors == sen.party {
                    let j = chosen[p.order];
                    rates[j] *= 1.0 + params.effect * activity(params, p.order, s);
                }
            }
            let z: f64 = rates.iter().sum();
            let mut tokens = Vec::new();
            let mut counts = vec![0u64; v];
            for (j, r) in rates.iter().enumerate() {
                let lambda = len * r / z;
                let c = if lambda > 0.0 {
                    Poisson::new(lambda).map_err(|e| Error::Config(e.to_string()))?.sample(&mut rng) as u64
                } else {
                    0
                };
                counts[j] = c;
                tokens.extend(std::iter::repeat_n(stem_name(j), c as usize));
            }
            let n_tok = tokens.len().max(1) as f64;
            let signed: f64 = planted
                .iter()
                .map(|p| {
                    let dir = if p.favors == Party::Republican { 1.0 } else { -1.0 };
                    dir * counts[chosen[p.order]] as f64 / n_tok
                })
                .sum();
            usage.push((sen.id, signed));
            let mut session = SenatorSession::new(format!("S{:04}", sen.id), params.first_congress + s as u32, sen.party);
            session.token_stems = tokens;
            sessions.push(session);
        }
    }

    // ideology: standardized signed usage averaged per senator, plus noise
    let n = usage.len() as f64;
    let mean = usage.iter().map(|u| u.1).sum::<f64>() / n;
    let sd = (usage.iter().map(|u| (u.1 - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let mut per_senator: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for &(id, u) in &usage {
        let e = per_senator.entry(id).or_default();
        e.0 += (u - mean) / sd;
        e.1 += 1;
    }
    let score_noise = Normal::new(0.0, params.score_noise).map_err(|e| Error::Config(e.to_string()))?;
    let dim2 = Normal::new(0.0, 0.3).map_err(|e| Error::Config(e.to_string()))?;
    let scores: std::collections::BTreeMap<usize, (f64, f64)> = per_senator
        .into_iter()
        .map(|(id, (sum, c))| {
            let d1 = (0.4 * sum / c as f64 + score_noise.sample(&mut rng)).clamp(-1.0, 1.0);
            let d2: f64 = dim2.sample(&mut rng);
            (id, (d1, d2.clamp(-1.0, 1.0)))
        })
        .collect();
    for (session, (id, _)) in sessions.iter_mut().zip(&usage) {
        let (d1, d2) = scores[id];
        session.dwn1 = Some(d1);
        session.dwn2 = Some(d2);
    }

    Ok(SynthCorpus {
        sessions,
        manifest: SynthManifest {
            params: params.clone(),
            planted,
        },
    })
}
