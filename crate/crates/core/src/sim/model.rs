use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::seed;
use crate::error::{Error, Result};
use crate::numeric;
use crate::trace::AttentionTensor;

/// Knobs of the synthetic world and of the models trained on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Seeds the ground-truth lexicon, the source-word embeddings and the
    /// source-frequency ranking; shared by every model built from this config.
    pub world_seed: u64,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    /// Log-probability gap between the best and second-best translation of
    /// each source word in the true channel.
    pub margin: f64,
    /// Further log-probability drop per rank below the runner-up.
    pub profile_slope: f64,
    /// Sharpening factor applied to the model's log-lexicon.
    pub gamma: f64,
    /// Dropout noise scale.
    pub sigma: f64,
    pub align_noise: f64,
    /// Standard deviation of the per-occurrence noise a model adds to its
    /// lexicon row before sharpening.
    pub context_noise: f64,
    /// Standard deviation of the noise on each estimated log-lexicon entry.
    pub estimation_noise: f64,
    /// Probability that a model mistranslates its rarest source word; scales
    /// linearly with word rarity.
    pub swap_rate: f64,
    /// Dropout noise on a source word of rarity `r` is multiplied by
    /// `1 + epistemic_spread * r`.
    pub epistemic_spread: f64,
    pub layers: usize,
    pub heads: usize,
    /// Width, in source positions, of the attention bump on a frequent word.
    pub attention_width: f64,
    /// Dirichlet concentration of the per-head attention jitter.
    pub attention_concentration: f64,
    pub embedding_dim: usize,
    /// Length of the embedding component that grows with word rarity.
    pub rarity_offset: f64,
    pub zipf_exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            world_seed: 17,
            src_vocab: 48,
            tgt_vocab: 48,
            margin: 2.0,
            profile_slope: 0.15,
            gamma: 2.5,
            sigma: 0.8,
            align_noise: 0.03,
            context_noise: 0.6,
            estimation_noise: 0.02,
            swap_rate: 0.6,
            epistemic_spread: 3.0,
            layers: 2,
            heads: 4,
            attention_width: 0.6,
            attention_concentration: 40.0,
            embedding_dim: 8,
            rarity_offset: 2.0,
            zipf_exponent: 1.1,
            min_len: 5,
            max_len: 12,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(2..=64).contains(&self.src_vocab) || !(2..=64).contains(&self.tgt_vocab) {
            problems.push("vocabulary sizes must lie in [2, 64]".to_string());
        }
        if !(self.gamma >= 1.0) {
            problems.push(format!("gamma {} < 1", self.gamma));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("margin", self.margin),
            ("profile_slope", self.profile_slope),
            ("context_noise", self.context_noise),
            ("estimation_noise", self.estimation_noise),
            ("epistemic_spread", self.epistemic_spread),
            ("rarity_offset", self.rarity_offset),
            ("zipf_exponent", self.zipf_exponent),
        ] {
            if !(v >= 0.0) {
                problems.push(format!("{name} must be >= 0, found {v}"));
            }
        }
        for (name, v) in [("align_noise", self.align_noise), ("swap_rate", self.swap_rate)] {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("{name} must lie in [0, 1], found {v}"));
            }
        }
        if !(self.attention_width > 0.0 && self.attention_concentration > 0.0) {
            problems.push("attention width and concentration must be positive".into());
        }
        if self.layers == 0 || self.heads == 0 || self.embedding_dim == 0 {
            problems.push("layers, heads and embedding_dim must be positive".into());
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            problems.push(format!("bad length range {}..={}", self.min_len, self.max_len));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    /// Source word `s` in `[0, 1]`: 0 for the most frequent word.
    pub fn rarity(&self, s: usize) -> f64 {
        s as f64 / (self.src_vocab - 1) as f64
    }
}

/// Whether a step is computed with dropout noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Off,
    Dropout { rate: f64, pass_seed: u64 },
}

/// Output distribution and alignment of one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    /// Unimodal attention over source positions, before per-head jitter.
    pub attention: Vec<f64>,
    pub aligned: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct HeadStyle {
    width: f64,
    concentration: f64,
}

/// A noisy-channel translation model: every target position is translated
/// from one aligned source word through a lexicon row.
#[derive(Debug, Clone, PartialEq)]
pub struct SimModel {
    src_vocab: Vec<String>,
    tgt_vocab: Vec<String>,
    log_lexicon: Vec<Vec<f64>>,
    lexicon: Vec<Vec<f64>>,
    gamma: f64,
    sigma: f64,
    align_noise: f64,
    context_noise: f64,
    /// Per source word dropout multiplier.
    epistemic: Vec<f64>,
    embeddings: Vec<Vec<f64>>,
    heads: Vec<Vec<HeadStyle>>,
    attention_width: f64,
    seed: u64,
}

fn world_log_lexicon(cfg: &SimConfig) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(&[cfg.world_seed, seed::WORLD]);
    let profile: Vec<f64> = (0..cfg.tgt_vocab)
        .map(|k| match k {
            0 => 0.0,
            k => -(cfg.margin + cfg.profile_slope * (k - 1) as f64),
        })
        .collect();
    (0..cfg.src_vocab)
        .map(|_| {
            let mut order: Vec<usize> = (0..cfg.tgt_vocab).collect();
            order.shuffle(&mut rng);
            let mut row = vec![0.0; cfg.tgt_vocab];
            for (k, &t) in order.iter().enumerate() {
                row[t] = profile[k];
            }
            numeric::log_softmax(&row)
        })
        .collect()
}

fn world_embeddings(cfg: &SimConfig) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(&[cfg.world_seed, seed::EMBEDDING]);
    let scale = 1.0 / (cfg.embedding_dim as f64).sqrt();
    (0..cfg.src_vocab)
        .map(|s| {
            let mut e: Vec<f64> = (0..cfg.embedding_dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            e[0] += cfg.rarity_offset * cfg.rarity(s);
            e
        })
        .collect()
}

fn vocab(prefix: char, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// The ground-truth channel: no estimation error, no context noise, no
/// misalignment, no dropout, no sharpening.
pub fn build_truth(cfg: &SimConfig) -> Result<SimModel> {
    cfg.validate()?;
    let log_lexicon = world_log_lexicon(cfg);
    Ok(assemble(cfg, cfg.world_seed, log_lexicon, 1.0, 0.0, 0.0, 0.0))
}

/// A model "trained" on the world of `cfg`: its lexicon carries seeded
/// estimation noise and, for rare source words, swapped best translations.
pub fn build_model(seed: u64, cfg: &SimConfig) -> Result<SimModel> {
    cfg.validate()?;
    let mut rng = seed::rng(&[cfg.world_seed, seed, seed::MODEL]);
    let log_lexicon = world_log_lexicon(cfg)
        .into_iter()
        .enumerate()
        .map(|(s, mut row)| {
            for v in row.iter_mut() {
                *v += cfg.estimation_noise * rng.sample::<f64, _>(StandardNormal);
            }
            let swap: f64 = rng.random();
            let partner = rng.random_range(0..cfg.tgt_vocab - 1);
            if swap < cfg.swap_rate * cfg.rarity(s) {
                let best = numeric::argmax(&row);
                let other = if partner >= best { partner + 1 } else { partner };
                row.swap(best, other);
            }
            numeric::log_softmax(&row)
        })
        .collect();
    Ok(assemble(
        cfg,
        seed,
        log_lexicon,
        cfg.gamma,
        cfg.sigma,
        cfg.align_noise,
        cfg.context_noise,
    ))
}

fn assemble(
    cfg: &SimConfig,
    seed: u64,
    log_lexicon: Vec<Vec<f64>>,
    gamma: f64,
    sigma: f64,
    align_noise: f64,
    context_noise: f64,
) -> SimModel {
    let mut rng = seed::rng(&[cfg.world_seed, seed, seed::HEADS]);
    let heads = (0..cfg.layers)
        .map(|_| {
            (0..cfg.heads)
                .map(|_| HeadStyle {
                    width: rng.random_range(0.7..1.5),
                    concentration: cfg.attention_concentration * rng.random_range(0.5..2.0),
                })
                .collect()
        })
        .collect();
    SimModel {
        src_vocab: vocab('s', cfg.src_vocab),
        tgt_vocab: vocab('t', cfg.tgt_vocab),
        lexicon: log_lexicon
            .iter()
            .map(|row| row.iter().map(|v| v.exp()).collect())
            .collect(),
        log_lexicon,
        gamma,
        sigma,
        align_noise,
        context_noise,
        epistemic: (0..cfg.src_vocab)
            .map(|s| 1.0 + cfg.epistemic_spread * cfg.rarity(s))
            .collect(),
        embeddings: world_embeddings(cfg),
        heads,
        attention_width: cfg.attention_width,
        seed,
    }
}

impl SimModel {
    pub fn src_vocab(&self) -> &[String] {
        &self.src_vocab
    }

    pub fn tgt_vocab(&self) -> &[String] {
        &self.tgt_vocab
    }

    /// Row-stochastic `p(t | s)`, indexed `[s][t]`.
    pub fn lexicon(&self) -> &[Vec<f64>] {
        &self.lexicon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn align_noise(&self) -> f64 {
        self.align_noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> usize {
        self.heads.len()
    }

    pub fn heads_per_layer(&self) -> usize {
        self.heads[0].len()
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<SimModel> {
        if !(gamma >= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma {gamma} < 1")));
        }
        Ok(SimModel { gamma, ..self.clone() })
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<SimModel> {
        if !(sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("sigma {sigma} < 0")));
        }
        Ok(SimModel { sigma, ..self.clone() })
    }

    /// The same lexicon with sharpening, dropout, context noise and
    /// misalignment switched off.
    pub fn noiseless(&self) -> SimModel {
        SimModel {
            gamma: 1.0,
            sigma: 0.0,
            align_noise: 0.0,
            context_noise: 0.0,
            ..self.clone()
        }
    }

    pub fn source_ids(&self, tokens: &[String]) -> Result<Vec<usize>> {
        tokens
            .iter()
            .map(|tok| {
                self.src_vocab
                    .iter()
                    .position(|v| v == tok)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown source token {tok:?}")))
            })
            .collect()
    }

    pub fn source_tokens(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.src_vocab[i].clone()).collect()
    }

    pub fn target_tokens(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.tgt_vocab[i].clone()).collect()
    }

    fn check_source(&self, source: &[usize]) -> Result<()> {
        if source.is_empty() {
            return Err(Error::InvalidArgument("empty source sentence".into()));
        }
        match source.iter().find(|&&s| s >= self.src_vocab.len()) {
            Some(s) => Err(Error::InvalidArgument(format!("unknown source token id {s}"))),
            None => Ok(()),
        }
    }

    /// Longest output the decoders may produce for `source`.
    pub fn max_output_len(source: &[usize]) -> usize {
        source.len() + 2
    }

    fn aligned_position(&self, source: &[usize], source_hash: u64, t: usize) -> usize {
        let last = source.len() - 1;
        let base = t.min(last);
        if self.align_noise == 0.0 {
            return base;
        }
        let mut rng = seed::rng(&[self.seed, seed::ALIGN, source_hash, t as u64]);
        let jump: f64 = rng.random();
        let left: bool = rng.random();
        if jump >= self.align_noise {
            base
        } else if left {
            base.saturating_sub(1)
        } else {
            (base + 1).min(last)
        }
    }

    /// Distribution over the next target token. The model is position-wise,
    /// so only the length of `prefix` matters.
    pub fn step_distribution(&self, source: &[usize], prefix: &[usize], perturb: Perturbation) -> Result<Step> {
        self.check_source(source)?;
        let t = prefix.len();
        if t >= Self::max_output_len(source) {
            return Err(Error::InvalidArgument(format!(
                "prefix length {t} reaches the maximum output length {}",
                Self::max_output_len(source)
            )));
        }
        let source_hash = seed::hash_tokens(source);
        let aligned = self.aligned_position(source, source_hash, t);
        let word = source[aligned];
        let mut logits: Vec<f64> = self.log_lexicon[word].iter().map(|v| self.gamma * v).collect();
        if self.context_noise > 0.0 {
            let mut rng = seed::rng(&[self.seed, seed::CONTEXT, source_hash, aligned as u64]);
            for z in logits.iter_mut() {
                *z += self.gamma * self.context_noise * rng.sample::<f64, _>(StandardNormal);
            }
        }
        if let Perturbation::Dropout { rate, pass_seed } = perturb {
            let sd = self.sigma * self.epistemic[word] * rate.sqrt();
            if sd > 0.0 {
                let mut rng = seed::rng(&[self.seed, seed::DROPOUT, pass_seed, t as u64]);
                for z in logits.iter_mut() {
                    *z += sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        let probs = numeric::softmax(&logits);
        let attention = self.bump(source.len(), aligned, self.attention_width * self.epistemic[word]);
        Ok(Step {
            probs,
            logits,
            attention,
            aligned,
        })
    }

    fn bump(&self, len: usize, centre: usize, width: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..len)
            .map(|j| {
                let d = j as f64 - centre as f64;
                (-d * d / (2.0 * width * width)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Attention of every layer and head for an output of `targets` steps:
    /// each head sharpens or widens the clean bump and adds Dirichlet jitter.
    pub fn attention_tensor(&self, source: &[usize], targets: usize) -> Result<AttentionTensor> {
        self.check_source(source)?;
        let source_hash = seed::hash_tokens(source);
        let (layers, heads, sources) = (self.layers(), self.heads_per_layer(), source.len());
        let mut weights = Vec::with_capacity(layers * heads * targets * sources);
        for (l, layer) in self.heads.iter().enumerate() {
            for (h, style) in layer.iter().enumerate() {
                for t in 0..targets {
                    let aligned = self.aligned_position(source, source_hash, t);
                    let width = self.attention_width * self.epistemic[source[aligned]] * style.width;
                    let clean = self.bump(sources, aligned, width);
                    let mut rng =
                        seed::rng(&[self.seed, seed::ATTENTION, source_hash, t as u64, l as u64, h as u64]);
                    let draws: Vec<f64> = clean
                        .iter()
                        .map(|w| {
                            Gamma::new(style.concentration * w + 1e-2, 1.0)
                                .expect("gamma shape is positive")
                                .sample(&mut rng)
                        })
                        .collect();
                    let total: f64 = draws.iter().sum();
                    if total > 0.0 {
                        weights.extend(draws.iter().map(|d| d / total));
                    } else {
                        weights.extend(clean);
                    }
                }
            }
        }
        AttentionTensor::new([layers, heads, targets, sources], weights, false).map_err(Error::InvalidArgument)
    }

    /// Mean of the source-word embeddings, standing in for the mean encoder
    /// hidden state.
    pub fn encoder_state_mean(&self, source: &[usize]) -> Result<Vec<f64>> {
        self.check_source(source)?;
        let dim = self.embeddings[0].len();
        let mut mean = vec![0.0; dim];
        for &s in source {
            for (m, e) in mean.iter_mut().zip(&self.embeddings[s]) {
                *m += e / source.len() as f64;
            }
        }
        Ok(mean)
    }

    pub(crate) fn same_vocabularies(&self, other: &SimModel) -> bool {
        self.src_vocab == other.src_vocab && self.tgt_vocab == other.tgt_vocab
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SimConfig {
        SimConfig {
            gamma: 1.0,
            sigma: 0.0,
            align_noise: 0.0,
            context_noise: 0.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn lexicon_rows_are_stochastic() {
        let m = build_model(3, &SimConfig::default()).unwrap();
        for row in m.lexicon() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert_eq!(m.lexicon().len(), 48);
    }

    #[test]
    fn same_seed_same_lexicon_different_seed_different() {
        let cfg = SimConfig::default();
        assert_eq!(build_model(5, &cfg).unwrap(), build_model(5, &cfg).unwrap());
        assert_ne!(build_model(5, &cfg).unwrap().lexicon(), build_model(6, &cfg).unwrap().lexicon());
    }

    #[test]
    fn quiet_model_reproduces_its_lexicon() {
        let m = build_model(1, &quiet()).unwrap();
        let source = [3, 0, 9, 41];
        for t in 0..source.len() {
            let step = m.step_distribution(&source, &vec![0; t], Perturbation::Off).unwrap();
            for (p, q) in step.probs.iter().zip(&m.lexicon()[source[t]]) {
                assert!((p - q).abs() < 1e-12);
            }
            assert_eq!(step.aligned, t);
        }
    }

    #[test]
    fn sharpening_halves_a_two_way_entropy() {
        // Column [0.7, 0.3] at gamma 1 and gamma 2; squaring renormalises to
        // [0.844828, 0.155172]. Reference values from 30-digit arithmetic.
        let base = [0.7f64.ln(), 0.3f64.ln()];
        let sharp: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let h1 = numeric::entropy(&numeric::softmax(&base));
        let h2 = numeric::entropy(&numeric::softmax(&sharp));
        assert!((h1 - 0.610_864_302_054_894).abs() < 1e-9);
        assert!((h2 - 0.431_577_220_831_821_4).abs() < 1e-9);

        let m = build_model(1, &SimConfig { tgt_vocab: 2, ..quiet() }).unwrap();
        let source = [7];
        let e = |g: f64| {
            let step = m.with_gamma(g).unwrap().step_distribution(&source, &[], Perturbation::Off).unwrap();
            numeric::entropy(&step.probs)
        };
        assert!(e(2.0) < e(1.0));
    }

    #[test]
    fn sharpening_never_lowers_the_top_probability() {
        let m = build_model(2, &SimConfig::default()).unwrap();
        let source = [1, 2, 3, 40, 47];
        let mut last = vec![0.0; source.len()];
        for g in [1.0, 1.5, 2.0, 3.0, 5.0, 9.0] {
            let m = m.with_gamma(g).unwrap();
            for (t, prev) in last.iter_mut().enumerate() {
                let step = m.step_distribution(&source, &vec![0; t], Perturbation::Off).unwrap();
                let top = step.probs.iter().copied().fold(0.0, f64::max);
                assert!(top >= *prev - 1e-15);
                *prev = top;
            }
        }
    }

    #[test]
    fn dropout_is_reproducible_and_varies_with_pass_seed() {
        let m = build_model(4, &SimConfig::default()).unwrap();
        let source = [5, 6, 7];
        let d = |pass_seed| {
            m.step_distribution(&source, &[0], Perturbation::Dropout { rate: 0.3, pass_seed })
                .unwrap()
        };
        assert_eq!(d(11), d(11));
        assert_ne!(d(11).probs, d(12).probs);
        let off = m.step_distribution(&source, &[0], Perturbation::Off).unwrap();
        let zero = m
            .step_distribution(&source, &[0], Perturbation::Dropout { rate: 0.0, pass_seed: 11 })
            .unwrap();
        assert_eq!(off, zero);
    }

    #[test]
    fn distributions_and_attention_are_normalised() {
        let m = build_model(8, &SimConfig::default()).unwrap();
        let source = [0, 12, 47, 3, 3, 30];
        for t in 0..SimModel::max_output_len(&source) {
            let step = m
                .step_distribution(&source, &vec![0; t], Perturbation::Dropout { rate: 0.3, pass_seed: 1 })
                .unwrap();
            assert!((step.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((step.attention.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let attn = m.attention_tensor(&source, 6).unwrap();
        for l in 0..attn.layers() {
            for h in 0..attn.heads() {
                for t in 0..attn.targets() {
                    assert!((attn.row(l, h, t).iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        let m = build_model(0, &SimConfig::default()).unwrap();
        assert!(m.step_distribution(&[48], &[], Perturbation::Off).is_err());
        assert!(m.step_distribution(&[1, 2], &[0, 0, 0, 0], Perturbation::Off).is_err());
        assert!(m.step_distribution(&[], &[], Perturbation::Off).is_err());
        assert!(build_model(0, &SimConfig { src_vocab: 1, ..SimConfig::default() }).is_err());
        assert!(build_model(0, &SimConfig { gamma: 0.5, ..SimConfig::default() }).is_err());
        assert!(m.with_gamma(0.9).is_err());
    }

    #[test]
    fn rare_words_sit_further_out() {
        let m = build_model(0, &SimConfig::default()).unwrap();
        let common = m.encoder_state_mean(&[0, 1, 2, 0]).unwrap();
        let rare = m.encoder_state_mean(&[47, 46, 45, 44]).unwrap();
        assert!(rare[0] > common[0] + 1.0);
    }
}
